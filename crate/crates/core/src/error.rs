use thiserror::Error;

/// Errors raised while building rotations, coverings and domain decompositions.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("rotation margin {margin:.3e} is below the required {required:.1e}: some R e_i is too close to ±e_j")]
    MarginViolation { margin: f64, required: f64 },
    #[error("rotation axis must be nonzero and finite")]
    InvalidAxis,
    #[error("angle must be finite")]
    InvalidAngle,
    #[error("matrix is not a proper rotation (orthogonality defect {defect:.3e}, det {det})")]
    NotARotation { defect: f64, det: f64 },
    #[error("invalid box: every side must be positive and finite")]
    InvalidBox,
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("coverage target not reached within {max_scales} scales (residual {residual:.3e} > {target:.3e})")]
    BudgetExceeded {
        max_scales: u32,
        residual: f64,
        target: f64,
    },
    #[error("point lies outside the covered region")]
    OutOfDomain,
    #[error("cube does not contain the point")]
    OutsideCube,
    #[error("covering integrity check failed: {0}")]
    Integrity(String),
}

/// Errors raised by the pointwise constructions of both counterexamples.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConstructionError {
    #[error("frame is degenerate (|a x b| = {cross_norm:.3e})")]
    DegenerateFrame { cross_norm: f64 },
    #[error("frame vectors are not orthonormal (defect {defect:.3e})")]
    NotOrthonormal { defect: f64 },
    #[error("exponent q must satisfy 1 < q < inf, got {0}")]
    InvalidExponent(f64),
    #[error("level n must be >= 1")]
    InvalidLevel,
    #[error("orthogonality quality {eta:.3e} gives a sym-residual bound {bound:.3e} above the tolerance {tolerance:.3e}")]
    QualityBudgetExceeded {
        eta: f64,
        bound: f64,
        tolerance: f64,
    },
    #[error("no level {0} in this construction")]
    UnknownLevel(usize),
    #[error("invalid tabulated map: {0}")]
    InvalidTable(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Errors raised by norms, quotients, assembly and the eigensolver.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("witness has zero gradient norm; the quotient is undefined")]
    DegenerateWitness,
    #[error("invalid sample: {0}")]
    InvalidSample(&'static str),
    #[error("assembly produced a zero diagonal entry at dof {dof} (mesh resolution too small?)")]
    SingularAssembly { dof: usize },
    #[error("{solver} did not converge after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence {
        solver: &'static str,
        iterations: usize,
        residual: f64,
    },
    #[error("rotation field sample {index} is not in SO(3) (defect {defect:.3e})")]
    InvalidRotationField { index: usize, defect: f64 },
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error(transparent)]
    Construction(#[from] ConstructionError),
}
