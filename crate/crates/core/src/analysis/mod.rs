//! Norms, quotients, ellipticity checks, the discrete coercivity spectrum and
//! the Cosserat energy.

mod cosserat;
mod eigen;
mod ellipticity;
mod fem;
mod ladder;
mod norms;
mod quotient;
pub mod sparse;

pub use cosserat::{
    check_rotations, cosserat_energy, curvature_density, elastic_density, four_a_identity, CosseratEnergy, CosseratParams, SampleGrid,
    ROTATION_TOL,
};
pub use eigen::{min_garding_eig, min_garding_pair, pcg, EigenMethod, EigenOptions, SpectrumResult};
pub use ellipticity::*;
pub use fem::{assemble_forms, constant_p, Forms, Gauss1d, Mesh, StiffnessSolver};
pub use ladder::{ladder_csv, loglog_svg, theorem1_forms, theorem1_interpolant, theorem1_spectrum, LadderRow, SpectrumRung};
pub use norms::*;
pub use quotient::*;
