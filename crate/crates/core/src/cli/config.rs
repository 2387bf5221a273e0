use std::path::{Path, PathBuf};

use nalgebra::Point3;
use serde::{Deserialize, Serialize};

use super::CliError;
use crate::analysis::{CosseratParams, EigenMethod, EigenOptions};
use crate::geometry::{Aabb, DecompositionMode};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
    Svg,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainConfig {
    pub lo: [f64; 3],
    pub hi: [f64; 3],
}

impl DomainConfig {
    pub fn aabb(&self) -> Result<Aabb, CliError> {
        Aabb::new(Point3::from(self.lo), Point3::from(self.hi))
            .map_err(|e| CliError::Config(format!("domain: {e}")))
    }
}

/// Eigensolver settings of the `spectrum` command.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EigenConfig {
    pub method: EigenMethod,
    pub tol: f64,
    pub max_iter: usize,
    pub block: usize,
}

impl Default for EigenConfig {
    fn default() -> Self {
        let d = EigenOptions::default();
        Self {
            method: d.method,
            tol: d.tol,
            max_iter: d.max_iter,
            block: d.block,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CosseratConfig {
    pub mu_e: f64,
    pub lambda_e: f64,
    pub l_c: f64,
    pub q_c: f64,
    /// Sample points per axis.
    pub grid: usize,
    /// Amplitude of the sample deformation.
    pub amplitude: f64,
    /// Random constant rotations in the invariance check.
    pub rotations: usize,
}

impl CosseratConfig {
    pub fn params(&self) -> CosseratParams {
        CosseratParams {
            mu_e: self.mu_e,
            lambda_e: self.lambda_e,
            l_c: self.l_c,
            q_c: self.q_c,
        }
    }
}

impl Default for CosseratConfig {
    fn default() -> Self {
        let p = CosseratParams::default();
        Self {
            mu_e: p.mu_e,
            lambda_e: p.lambda_e,
            l_c: p.l_c,
            q_c: p.q_c,
            grid: 17,
            amplitude: 0.1,
            rotations: 10,
        }
    }
}

/// Everything a run depends on. Read from a TOML file, then overridden by
/// command-line flags.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub domain: DomainConfig,
    pub mode: DecompositionMode,
    pub n_list: Vec<u32>,
    pub q: f64,
    pub eps_pack: f64,
    pub lambda: f64,
    /// Mesh cells per axis per unit of `n`; level `n` of the spectral
    /// ladder is meshed with `mesh·n` cells per axis.
    pub mesh: usize,
    /// Meshes of the `P = I`, `λ = 0` control ladder. Empty means
    /// `[2·mesh, 4·mesh]`.
    pub control_meshes: Vec<usize>,
    pub seed: u64,
    pub out: PathBuf,
    pub formats: Vec<Format>,
    /// Monte Carlo samples per level in `verify` and `quotient`.
    pub samples: usize,
    /// Samples of the packing certificate of each rotated covering; 0 skips it.
    pub certificate_samples: usize,
    /// Cells per axis of the synthetic frame field used by the second construction.
    pub frame_cells: usize,
    pub eigen: EigenConfig,
    pub cosserat: CosseratConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            domain: DomainConfig {
                lo: [0.0; 3],
                hi: [0.25; 3],
            },
            mode: DecompositionMode::Single,
            n_list: vec![1, 2, 4, 8],
            q: 2.0,
            eps_pack: 1e-3,
            lambda: 1.0,
            mesh: 4,
            control_meshes: Vec::new(),
            seed: 0,
            out: PathBuf::from("kornlab-out"),
            formats: vec![Format::Json, Format::Csv, Format::Svg],
            samples: 200_000,
            certificate_samples: 1 << 18,
            frame_cells: 4,
            eigen: EigenConfig::default(),
            cosserat: CosseratConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(format!("config file: {}", e.message())))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Field-level validation; the first violation is reported.
    pub fn validate(&self) -> Result<(), CliError> {
        let fail = |field: &str, msg: String| Err(CliError::Config(format!("{field}: {msg}")));
        self.domain.aabb()?;
        if !(self.q > 1.0 && self.q.is_finite()) {
            return fail("q", format!("must satisfy 1 < q < inf, got {}", self.q));
        }
        if !(self.eps_pack > 0.0 && self.eps_pack < 0.5) {
            return fail("eps_pack", format!("must lie in (0, 0.5), got {}", self.eps_pack));
        }
        if self.n_list.is_empty() {
            return fail("n_list", "must not be empty".into());
        }
        if self.n_list[0] == 0 {
            return fail("n_list", "levels start at 1".into());
        }
        if self.n_list.windows(2).any(|w| w[0] >= w[1]) {
            return fail("n_list", format!("must be strictly ascending, got {:?}", self.n_list));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return fail("lambda", format!("must be finite and nonnegative, got {}", self.lambda));
        }
        if self.mesh < 4 {
            return fail("mesh", format!("must be at least 4, got {}", self.mesh));
        }
        if let Some(m) = self.control_meshes.iter().find(|&&m| m < 4) {
            return fail("control_meshes", format!("every mesh must be at least 4, got {m}"));
        }
        if self.samples == 0 {
            return fail("samples", "must be positive".into());
        }
        if self.frame_cells == 0 {
            return fail("frame_cells", "must be positive".into());
        }
        if self.formats.is_empty() {
            return fail("formats", "must name at least one of json, csv, svg".into());
        }
        let e = &self.eigen;
        if !(e.tol > 0.0) || e.max_iter == 0 || e.block == 0 {
            return fail("eigen", "tol, max_iter and block must be positive".into());
        }
        let c = &self.cosserat;
        c.params()
            .validate()
            .map_err(|e| CliError::Config(format!("cosserat: {e}")))?;
        if c.grid < 3 {
            return fail("cosserat.grid", format!("must be at least 3, got {}", c.grid));
        }
        if !c.amplitude.is_finite() {
            return fail("cosserat.amplitude", "must be finite".into());
        }
        Ok(())
    }

    pub fn control_meshes(&self) -> Vec<usize> {
        if self.control_meshes.is_empty() {
            vec![2 * self.mesh, 4 * self.mesh]
        } else {
            self.control_meshes.clone()
        }
    }

    pub fn eigen_options(&self) -> EigenOptions {
        EigenOptions {
            method: self.eigen.method,
            tol: self.eigen.tol,
            max_iter: self.eigen.max_iter,
            block: self.eigen.block,
            seed: self.seed,
            ..EigenOptions::default()
        }
    }

    pub fn wants(&self, f: Format) -> bool {
        self.formats.contains(&f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_is_valid_and_roundtrips() {
        let c = RunConfig::default();
        c.validate().unwrap();
        assert_eq!(RunConfig::from_toml(&c.to_toml()).unwrap(), c);
    }

    #[test]
    fn partial_file_keeps_defaults() {
        let c = RunConfig::from_toml("q = 3.0\nmode = \"slabs\"\n[cosserat]\nl_c = 0.5\n").unwrap();
        assert_eq!(c.q, 3.0);
        assert_eq!(c.mode, DecompositionMode::Slabs);
        assert_eq!(c.cosserat.l_c, 0.5);
        assert_eq!(c.n_list, RunConfig::default().n_list);
    }

    #[test]
    fn field_level_messages() {
        let msg = |c: RunConfig| match c.validate() {
            Err(CliError::Config(m)) => m,
            other => panic!("{other:?}"),
        };
        let base = RunConfig::default();
        assert!(msg(RunConfig { eps_pack: 0.6, ..base.clone() }).starts_with("eps_pack"));
        assert!(msg(RunConfig { q: 1.0, ..base.clone() }).starts_with("q"));
        assert!(msg(RunConfig { n_list: vec![2, 1], ..base.clone() }).starts_with("n_list"));
        assert!(msg(RunConfig { n_list: vec![], ..base.clone() }).starts_with("n_list"));
        assert!(msg(RunConfig { mesh: 3, ..base.clone() }).starts_with("mesh"));
        assert!(matches!(RunConfig::from_toml("bogus = 1"), Err(CliError::Config(_))));
    }
}
