use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use nalgebra::{Matrix3, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::{DomainConfig, Format, RunConfig};
use super::{CliError, Command};
use crate::analysis::{
    assemble_forms, constant_p, cosserat_energy, four_a_identity, korn_quotient, ladder_csv, loglog_fit, loglog_svg,
    min_garding_eig, theorem1_spectrum, CosseratEnergy, CosseratParams, LadderRow, Mesh, QuotientReport, SampleGrid,
    Sampler, SpectrumResult, SpectrumRung, Theorem1Witness,
};
use crate::geometry::{Covering, DecompositionMode, Rotation3};
use crate::thm1::{
    frame_bounds, p_op_bound, records_to_csv, v_norm_bounds, verify_construction, Theorem1, Theorem1Level,
    Theorem1Params, VerifyOptions,
};
use crate::thm2::{thm2_pipeline, SyntheticFrameField, Theorem2Params};
use crate::rng;

const AXIS_FILE: &str = "covering_axis.json";
const ROT_FILE: &str = "covering_rot.json";
const FIELD_FILE: &str = "thm1_field.json";

/// Band the control constant must stay in; the continuum value is ½.
const CONTROL_BAND: (f64, f64) = (0.45, 0.75);
const INVARIANCE_TOL: f64 = 1e-10;

/// Files written by `construct` and required by `verify` and `spectrum`.
pub fn artifact_names() -> [&'static str; 3] {
    [AXIS_FILE, ROT_FILE, FIELD_FILE]
}

/// Outcome of one command, also written to `status_<command>.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Status {
    pub command: String,
    pub passed: bool,
    pub checked: usize,
    pub failures: Vec<String>,
}

#[derive(Default)]
struct Claims {
    checked: usize,
    failures: Vec<String>,
}

impl Claims {
    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.checked += 1;
        if !ok {
            self.failures.push(what());
        }
    }

    fn absorb(&mut self, checked: usize, failures: Vec<String>) {
        self.checked += checked;
        self.failures.extend(failures);
    }
}

/// Runs one command. Writes its status file (except for `report`) and
/// turns failed claims into [`CliError::Claims`].
pub fn execute(cmd: Command, cfg: &RunConfig) -> Result<Status, CliError> {
    fs::create_dir_all(&cfg.out)?;
    let claims = match cmd {
        Command::Construct => construct(cfg)?,
        Command::Verify => verify(cfg)?,
        Command::Quotient => quotient(cfg)?,
        Command::Spectrum => spectrum(cfg)?,
        Command::Cosserat => cosserat(cfg)?,
        Command::Report => report(cfg)?,
    };
    let status = Status {
        command: cmd.name().to_string(),
        passed: claims.failures.is_empty(),
        checked: claims.checked,
        failures: claims.failures,
    };
    if cmd != Command::Report {
        write(cfg, &format!("status_{}.json", cmd.name()), &to_json(&status))?;
    }
    if status.passed {
        Ok(status)
    } else {
        Err(CliError::Claims(status.failures))
    }
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("document serializes");
    s.push('\n');
    s
}

fn write(cfg: &RunConfig, name: &str, contents: &str) -> Result<(), CliError> {
    fs::write(cfg.out.join(name), contents)?;
    Ok(())
}

/// Writes `contents` only if `format` was requested.
fn emit(cfg: &RunConfig, name: &str, format: Format, contents: impl FnOnce() -> String) -> Result<(), CliError> {
    if cfg.wants(format) {
        write(cfg, name, &contents())?;
    }
    Ok(())
}

fn sha256(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

fn row_major(m: &Matrix3<f64>) -> [[f64; 3]; 3] {
    std::array::from_fn(|i| std::array::from_fn(|j| m[(i, j)]))
}

/// The config entries a construction depends on.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct ConstructionKey {
    domain: DomainConfig,
    mode: DecompositionMode,
    n_list: Vec<u32>,
    q: f64,
    eps_pack: f64,
    seed: u64,
    certificate_samples: usize,
}

impl ConstructionKey {
    fn of(cfg: &RunConfig) -> Self {
        Self {
            domain: cfg.domain,
            mode: cfg.mode,
            n_list: cfg.n_list.clone(),
            q: cfg.q,
            eps_pack: cfg.eps_pack,
            seed: cfg.seed,
            certificate_samples: cfg.certificate_samples,
        }
    }
}

fn build_construction(cfg: &RunConfig) -> Result<Theorem1, CliError> {
    let mut p = Theorem1Params::new(cfg.domain.aabb()?, cfg.n_list.clone(), cfg.q, cfg.eps_pack)
        .with_mode(cfg.mode)
        .with_seed(cfg.seed);
    p.packing.mc_samples = cfg.certificate_samples;
    Ok(Theorem1::build(&p)?)
}

#[derive(Serialize, Deserialize)]
struct LevelCovering {
    n: u32,
    part_index: usize,
    covering: serde_json::Value,
}

#[derive(Serialize, Deserialize)]
struct CoveringFile {
    levels: Vec<LevelCovering>,
}

fn covering_file(t: &Theorem1, pick: fn(&Theorem1Level) -> &Covering) -> Result<String, CliError> {
    let levels = t
        .levels()
        .iter()
        .map(|l| {
            let text = pick(l).to_json()?;
            let covering = serde_json::from_str(&text).map_err(|e| CliError::Runtime(e.to_string()))?;
            Ok(LevelCovering {
                n: l.n,
                part_index: l.part_index,
                covering,
            })
        })
        .collect::<Result<_, CliError>>()?;
    Ok(to_json(&CoveringFile { levels }))
}

#[derive(Serialize, Deserialize)]
struct RotationDoc {
    quaternion: [f64; 4],
    margin: f64,
}

#[derive(Serialize, Deserialize)]
struct BoundsDoc {
    p_op_max: f64,
    p_op_bound: f64,
    v_norm_min: f64,
    v_norm_max: f64,
    v_norm_lower: f64,
    v_norm_upper: f64,
}

#[derive(Serialize, Deserialize)]
struct PartDoc {
    index: usize,
    lo: [f64; 3],
    hi: [f64; 3],
    volume: f64,
    levels: Vec<u32>,
}

#[derive(Serialize, Deserialize)]
struct LevelDoc {
    n: u32,
    part_index: usize,
    measure: f64,
    scale: f64,
    edge_bound: f64,
    /// Analytic bound on `sup |uₙ|`; at most `2/n`.
    sup_bound: f64,
    grad_norm_pow_q_lower: f64,
    grad_norm_pow_q_upper: f64,
    doubly_covered_fraction: f64,
}

/// `thm1_field.json`: one coefficient-field descriptor shared by every level,
/// the parts hosting the levels, per-level witness data and the hashes of
/// the covering files.
#[derive(Serialize, Deserialize)]
struct FieldDoc {
    construction: ConstructionKey,
    rotation: RotationDoc,
    filler: [[f64; 3]; 3],
    bounds: BoundsDoc,
    parts: Vec<PartDoc>,
    volume_gap: f64,
    parts_disjoint: bool,
    levels: Vec<LevelDoc>,
    artifacts: BTreeMap<String, String>,
}

fn construct(cfg: &RunConfig) -> Result<Claims, CliError> {
    let t = build_construction(cfg)?;
    let axis = covering_file(&t, |l| l.axis.covering())?;
    let rot = covering_file(&t, |l| l.rotated.covering())?;

    let margin = t.rotation().margin();
    let fb = frame_bounds(t.rotation())?;
    let (v_lo, v_hi) = v_norm_bounds(margin);
    let bounds = BoundsDoc {
        p_op_max: fb.p_op_max,
        p_op_bound: p_op_bound(margin),
        v_norm_min: fb.v_norm_min,
        v_norm_max: fb.v_norm_max,
        v_norm_lower: v_lo,
        v_norm_upper: v_hi,
    };
    let dec = t.decomposition();
    let parts = dec
        .parts()
        .iter()
        .enumerate()
        .map(|(index, p)| PartDoc {
            index,
            lo: p.lo().coords.into(),
            hi: p.hi().coords.into(),
            volume: p.volume(),
            levels: t.levels().iter().filter(|l| l.part_index == index).map(|l| l.n).collect(),
        })
        .collect();
    let (volume_gap, parts_disjoint) = dec.check();
    let levels: Vec<LevelDoc> = t
        .levels()
        .iter()
        .map(|l| {
            let (lower, upper) = l.grad_norm_pow_q_bounds();
            LevelDoc {
                n: l.n,
                part_index: l.part_index,
                measure: l.measure,
                scale: l.scale,
                edge_bound: l.edge_bound,
                sup_bound: l.sup_bound(),
                grad_norm_pow_q_lower: lower,
                grad_norm_pow_q_upper: upper,
                doubly_covered_fraction: l.doubly_covered_lower() / l.measure,
            }
        })
        .collect();

    let mut c = Claims::default();
    let volume = dec.region().volume();
    c.check(volume_gap.abs() <= 1e-12 * volume, || format!("parts miss {volume_gap:e} of the domain volume"));
    c.check(parts_disjoint, || "parts overlap".into());
    c.check(bounds.p_op_max <= bounds.p_op_bound * (1.0 + 1e-12), || "P exceeds its operator-norm bound".into());
    c.check(
        bounds.v_norm_min >= v_lo * (1.0 - 1e-12) && bounds.v_norm_max <= v_hi * (1.0 + 1e-12),
        || "|v| outside its margin bounds".into(),
    );
    for l in &levels {
        c.check(l.sup_bound <= 2.0 / l.n as f64 * (1.0 + 1e-12), || {
            format!("n={}: sup bound {} exceeds 2/n", l.n, l.sup_bound)
        });
        let floor = 2.0 * (1.0 - cfg.eps_pack - crate::thm1::NORM_SLACK);
        c.check(l.grad_norm_pow_q_lower >= floor, || {
            format!("n={}: certified gradient norm {} below {floor}", l.n, l.grad_norm_pow_q_lower)
        });
    }

    let field = FieldDoc {
        construction: ConstructionKey::of(cfg),
        rotation: RotationDoc {
            quaternion: t.rotation().quaternion(),
            margin,
        },
        filler: row_major(t.filler()),
        bounds,
        parts,
        volume_gap,
        parts_disjoint,
        levels,
        artifacts: BTreeMap::from([(AXIS_FILE.to_string(), sha256(&axis)), (ROT_FILE.to_string(), sha256(&rot))]),
    };
    write(cfg, AXIS_FILE, &axis)?;
    write(cfg, ROT_FILE, &rot)?;
    write(cfg, FIELD_FILE, &to_json(&field))?;
    println!("construct: {} level(s), {} part(s) -> {}", t.levels().len(), dec.parts().len(), cfg.out.display());
    Ok(c)
}

fn read_artifact(dir: &Path, name: &str) -> Result<String, CliError> {
    let path = dir.join(name);
    if !path.is_file() {
        return Err(CliError::MissingArtifact(path));
    }
    Ok(fs::read_to_string(&path)?)
}

/// Checks the construct artifacts against their hashes and the current
/// config, then rebuilds the construction and requires the rebuilt coverings
/// to serialize byte-identically.
fn load_construction(cfg: &RunConfig) -> Result<Theorem1, CliError> {
    let texts = artifact_names()
        .iter()
        .map(|n| read_artifact(&cfg.out, n))
        .collect::<Result<Vec<_>, _>>()?;
    let (axis, rot, field) = (&texts[0], &texts[1], &texts[2]);
    let field: FieldDoc =
        serde_json::from_str(field).map_err(|e| CliError::Integrity(format!("{FIELD_FILE}: {e}")))?;
    for (name, text) in [(AXIS_FILE, axis), (ROT_FILE, rot)] {
        if field.artifacts.get(name) != Some(&sha256(text)) {
            return Err(CliError::Integrity(format!("{name}: hash does not match {FIELD_FILE}")));
        }
        let doc: CoveringFile =
            serde_json::from_str(text).map_err(|e| CliError::Integrity(format!("{name}: {e}")))?;
        for l in &doc.levels {
            Covering::from_json(&l.covering.to_string())
                .map_err(|e| CliError::Integrity(format!("{name}, level {}: {e}", l.n)))?;
        }
    }
    if field.construction != ConstructionKey::of(cfg) {
        return Err(CliError::Integrity(format!(
            "artifacts in {} were built with a different configuration; rerun construct",
            cfg.out.display()
        )));
    }
    let t = build_construction(cfg)?;
    if covering_file(&t, |l| l.axis.covering())? != *axis || covering_file(&t, |l| l.rotated.covering())? != *rot {
        return Err(CliError::Integrity("rebuilt coverings differ from the stored ones".into()));
    }
    Ok(t)
}

fn verify(cfg: &RunConfig) -> Result<Claims, CliError> {
    let t = load_construction(cfg)?;
    let r1 = verify_construction(
        &t,
        &VerifyOptions {
            samples: cfg.samples,
            seed: cfg.seed,
        },
    )?;
    let mut p2 = Theorem2Params::new(cfg.domain.aabb()?, cfg.n_list.clone(), cfg.q);
    p2.mode = cfg.mode;
    let map = SyntheticFrameField::new(cfg.frame_cells, cfg.seed);
    let (_, r2) = thm2_pipeline(&p2, map, cfg.samples, cfg.seed)?;

    emit(cfg, "thm1_report.json", Format::Json, || to_json(&r1))?;
    emit(cfg, "thm1_report.csv", Format::Csv, || r1.to_csv())?;
    emit(cfg, "thm2_report.json", Format::Json, || to_json(&r2))?;
    emit(cfg, "thm2_report.csv", Format::Csv, || r2.to_csv())?;
    emit(cfg, "verify.svg", Format::Svg, || {
        let pts = |f: fn(&crate::thm1::Thm1Record) -> f64| r1.records.iter().map(|r| (r.n as f64, f(r))).collect();
        loglog_svg(
            "sup norm of the witnesses",
            "n",
            "sup |u_n|",
            &[("observed", pts(|r| r.sup_norm_observed)), ("2/n", pts(|r| r.sup_norm_bound))],
        )
    })?;
    for r in &r1.records {
        println!(
            "verify: n={} sym={:.2e} |Du|_q^q in [{:.6}, {:.6}] sup={:.4e} <= {:.4e}",
            r.n, r.sym_residual_max, r.norm_q_pow_q_lower, r.norm_q_pow_q_upper, r.sup_norm_observed, r.sup_norm_bound
        );
    }
    let mut c = Claims::default();
    c.absorb(r1.records.len() + r2.records.len(), r1.failures());
    c.failures.extend(r2.failures());
    Ok(c)
}

#[derive(Serialize, Deserialize)]
struct QuotientDoc {
    reports: Vec<QuotientReport>,
    /// `K(n) ≈ e^β n^{−α}`, fitted when there are at least two levels.
    alpha: Option<f64>,
    beta: Option<f64>,
}

fn quotient(cfg: &RunConfig) -> Result<Claims, CliError> {
    let t = build_construction(cfg)?;
    let sampler = Sampler {
        samples: cfg.samples,
        seed: cfg.seed,
        ..Sampler::default()
    };
    let reports = cfg
        .n_list
        .iter()
        .map(|&n| {
            let w = Theorem1Witness::new(&t, n)?;
            Ok(korn_quotient(&w, cfg.q, cfg.lambda, true, &sampler)?)
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let rows: Vec<LadderRow> = reports
        .iter()
        .map(|r| LadderRow {
            n: r.n,
            q: r.q,
            lambda: r.lambda,
            kappa_or_k: r.k,
            budget: r.k_bound.unwrap_or(f64::INFINITY),
        })
        .collect();
    let (alpha, beta) = if reports.len() >= 2 {
        let xs: Vec<f64> = reports.iter().map(|r| r.n as f64).collect();
        let ys: Vec<f64> = reports.iter().map(|r| r.k).collect();
        let (slope, intercept) = loglog_fit(&xs, &ys);
        (Some(-slope), Some(intercept))
    } else {
        (None, None)
    };

    let mut c = Claims::default();
    for (r, row) in reports.iter().zip(&rows) {
        c.check(r.k <= row.budget + r.error_budget, || {
            format!("n={}: K={} exceeds its analytic bound {}", r.n, r.k, row.budget)
        });
    }
    for w in reports.windows(2) {
        c.check(w[1].k < w[0].k, || format!("K does not decrease from n={} to n={}", w[0].n, w[1].n));
    }
    for r in &rows {
        println!("quotient: n={} K={:.6e} bound={:.6e}", r.n, r.kappa_or_k, r.budget);
    }
    if let Some(a) = alpha {
        println!("quotient: fitted decay exponent {a:.4}");
    }

    emit(cfg, "quotient.csv", Format::Csv, || ladder_csv(&rows))?;
    emit(cfg, "quotient.json", Format::Json, || to_json(&QuotientDoc { reports, alpha, beta }))?;
    emit(cfg, "quotient.svg", Format::Svg, || {
        let pts = |f: fn(&LadderRow) -> f64| rows.iter().map(|r| (r.n as f64, f(r))).collect();
        loglog_svg(
            "Korn quotient of the witnesses",
            "n",
            "K(n)",
            &[("K", pts(|r| r.kappa_or_k)), ("analytic bound", pts(|r| r.budget))],
        )
    })?;
    Ok(c)
}

#[derive(Serialize, Deserialize)]
struct SpectrumDoc {
    control: Vec<SpectrumResult>,
    ladder: Vec<SpectrumRung>,
}

fn spectrum(cfg: &RunConfig) -> Result<Claims, CliError> {
    let t = load_construction(cfg)?;
    let opts = cfg.eigen_options();
    let region = cfg.domain.aabb()?;
    let mut c = Claims::default();

    let mut control = Vec::new();
    for m in cfg.control_meshes() {
        let forms = assemble_forms(&Mesh::new(region, m)?, constant_p(Matrix3::identity()), 2)?;
        let r = min_garding_eig(&forms, 0.0, &opts)?;
        println!("spectrum: control mesh {m}^3 kappa={:.6} ({} iterations)", r.kappa, r.iterations);
        c.check(r.kappa >= CONTROL_BAND.0 && r.kappa <= CONTROL_BAND.1, || {
            format!("control mesh {m}: kappa={} outside [{}, {}]", r.kappa, CONTROL_BAND.0, CONTROL_BAND.1)
        });
        control.push(r);
    }

    let mut ladder = Vec::new();
    for &n in &cfg.n_list {
        let m = cfg.mesh * n as usize;
        let rung = theorem1_spectrum(&t, n, m, cfg.lambda, &opts)?;
        println!(
            "spectrum: n={n} mesh {m}^3 kappa={:.6} witness={:.6} ({} iterations)",
            rung.result.kappa, rung.witness_quotient, rung.result.iterations
        );
        // κ minimizes the Rayleigh quotient, up to the solver tolerance
        c.check(rung.result.kappa <= rung.witness_quotient * (1.0 + opts.tol), || {
            format!("n={n}: kappa={} exceeds the witness quotient {}", rung.result.kappa, rung.witness_quotient)
        });
        ladder.push(rung);
    }
    for w in ladder.windows(2) {
        c.check(w[1].result.kappa < w[0].result.kappa, || {
            format!(
                "kappa does not decrease from n={} ({}) to n={} ({})",
                w[0].n, w[0].result.kappa, w[1].n, w[1].result.kappa
            )
        });
    }

    let rows: Vec<LadderRow> = ladder
        .iter()
        .map(|r| LadderRow {
            n: r.n,
            q: 2.0,
            lambda: cfg.lambda,
            kappa_or_k: r.result.kappa,
            budget: r.witness_quotient,
        })
        .collect();
    emit(cfg, "spectrum.csv", Format::Csv, || ladder_csv(&rows))?;
    emit(cfg, "spectrum_control.csv", Format::Csv, || records_to_csv(&control))?;
    emit(cfg, "spectrum.json", Format::Json, || {
        to_json(&SpectrumDoc {
            control: control.clone(),
            ladder: ladder.clone(),
        })
    })?;
    emit(cfg, "spectrum.svg", Format::Svg, || {
        let pts = |f: fn(&LadderRow) -> f64| rows.iter().map(|r| (r.n as f64, f(r))).collect();
        loglog_svg(
            "discrete coercivity constant",
            "n",
            "kappa",
            &[("kappa", pts(|r| r.kappa_or_k)), ("witness quotient", pts(|r| r.budget))],
        )
    })?;
    emit(cfg, "spectrum_control.svg", Format::Svg, || {
        let pts = control.iter().map(|r| (r.mesh as f64, r.kappa)).collect();
        loglog_svg("control case P = I", "cells per axis", "kappa", &[("kappa", pts)])
    })?;
    Ok(c)
}

#[derive(Clone, Serialize, Deserialize)]
struct InvarianceRow {
    index: usize,
    quaternion: [f64; 4],
    total: f64,
    rel_diff: f64,
}

#[derive(Serialize, Deserialize)]
struct CosseratDoc {
    params: CosseratParams,
    grid: usize,
    amplitude: f64,
    energy: CosseratEnergy,
    identity_energy: f64,
    four_a_lhs: f64,
    four_a_rhs: f64,
    max_rel_diff: f64,
    invariance: Vec<InvarianceRow>,
}

fn cosserat(cfg: &RunConfig) -> Result<Claims, CliError> {
    let cc = &cfg.cosserat;
    let params = cc.params();
    let region = cfg.domain.aabb()?;
    let grid = SampleGrid::new(region, [cc.grid; 3])?;
    let pts = grid.points();
    let lo = region.lo().coords;
    let sides = region.sides();
    let s = region.scale();
    let pi = std::f64::consts::PI;
    let unit = |x: &nalgebra::Point3<f64>| (x.coords - lo).component_div(&sides);
    let phi: Vec<Vector3<f64>> = pts
        .iter()
        .map(|x| {
            let t = unit(x);
            x.coords + cc.amplitude * s * Vector3::new((pi * t.y).sin(), (pi * t.z).sin(), (pi * t.x).sin())
        })
        .collect();
    let axis = Vector3::new(1.0, 2.0, 3.0);
    let rbar = pts
        .iter()
        .map(|x| {
            let t = unit(x);
            Ok(*Rotation3::from_axis_angle(&axis, 0.5 * pi * (t.x + t.y * t.z))?.matrix())
        })
        .collect::<Result<Vec<_>, CliError>>()?;

    let energy = cosserat_energy(&grid, &phi, &rbar, &params)?;
    let identity: Vec<Vector3<f64>> = pts.iter().map(|x| x.coords).collect();
    let identity_energy = cosserat_energy(&grid, &identity, &vec![Matrix3::identity(); grid.len()], &params)?.total;
    let (four_a_lhs, four_a_rhs) = four_a_identity(&grid, &phi, &rbar)?;

    let mut r = ChaCha8Rng::seed_from_u64(rng::substream(cfg.seed, "sampling"));
    let invariance = (0..cc.rotations)
        .map(|index| {
            let q = Rotation3::random(&mut r);
            let qm = q.matrix();
            let phi_q: Vec<_> = phi.iter().map(|p| qm * p).collect();
            let rbar_q: Vec<_> = rbar.iter().map(|m| qm * m).collect();
            let total = cosserat_energy(&grid, &phi_q, &rbar_q, &params)?.total;
            Ok(InvarianceRow {
                index,
                quaternion: q.quaternion(),
                total,
                rel_diff: (total - energy.total).abs() / energy.total.abs().max(f64::MIN_POSITIVE),
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let max_rel_diff = invariance.iter().map(|r| r.rel_diff).fold(0.0, f64::max);

    let mut c = Claims::default();
    c.check(identity_energy == 0.0, || format!("identity configuration has energy {identity_energy:e}"));
    for row in &invariance {
        c.check(row.rel_diff <= INVARIANCE_TOL, || {
            format!("rotation {}: relative energy change {:e}", row.index, row.rel_diff)
        });
    }
    let gap = (four_a_lhs - four_a_rhs).abs() / four_a_lhs.abs().max(f64::MIN_POSITIVE);
    c.check(gap <= 1e-12, || format!("symmetrized-product identity off by {gap:e}"));
    println!(
        "cosserat: energy {:.6e} (elastic {:.6e}, curvature {:.6e}), max rotation change {max_rel_diff:.2e}",
        energy.total, energy.elastic, energy.curvature
    );

    emit(cfg, "cosserat.csv", Format::Csv, || {
        let rows: Vec<_> = invariance
            .iter()
            .map(|r| {
                let [qw, qx, qy, qz] = r.quaternion;
                (r.index, qw, qx, qy, qz, r.total, r.rel_diff)
            })
            .collect();
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["index", "qw", "qx", "qy", "qz", "total", "rel_diff"]).expect("in-memory write");
        for r in rows {
            w.serialize(r).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory write")).expect("utf-8")
    })?;
    emit(cfg, "cosserat.json", Format::Json, || {
        to_json(&CosseratDoc {
            params,
            grid: cc.grid,
            amplitude: cc.amplitude,
            energy,
            identity_energy,
            four_a_lhs,
            four_a_rhs,
            max_rel_diff,
            invariance: invariance.clone(),
        })
    })?;
    Ok(c)
}

#[derive(Serialize, Deserialize)]
struct ReportDoc {
    passed: bool,
    commands: Vec<Status>,
}

#[derive(Serialize)]
struct ReportRow<'a> {
    command: &'a str,
    passed: bool,
    checked: usize,
    failed: usize,
}

fn report(cfg: &RunConfig) -> Result<Claims, CliError> {
    let order = [
        Command::Construct,
        Command::Verify,
        Command::Quotient,
        Command::Spectrum,
        Command::Cosserat,
    ];
    let mut commands = Vec::new();
    for cmd in order {
        let name = format!("status_{}.json", cmd.name());
        let path = cfg.out.join(&name);
        if !path.is_file() {
            continue;
        }
        let status: Status = serde_json::from_str(&fs::read_to_string(&path)?)
            .map_err(|e| CliError::Integrity(format!("{name}: {e}")))?;
        commands.push(status);
    }
    if commands.is_empty() {
        return Err(CliError::MissingArtifact(cfg.out.join("status_construct.json")));
    }
    let mut c = Claims::default();
    for s in &commands {
        println!(
            "report: {:<10} {} ({} checked, {} failed)",
            s.command,
            if s.passed { "PASS" } else { "FAIL" },
            s.checked,
            s.failures.len()
        );
        c.absorb(s.checked, s.failures.iter().map(|f| format!("{}: {f}", s.command)).collect());
    }
    let doc = ReportDoc {
        passed: c.failures.is_empty(),
        commands,
    };
    emit(cfg, "report.json", Format::Json, || to_json(&doc))?;
    emit(cfg, "report.csv", Format::Csv, || {
        let rows: Vec<ReportRow> = doc
            .commands
            .iter()
            .map(|s| ReportRow {
                command: &s.command,
                passed: s.passed,
                checked: s.checked,
                failed: s.failures.len(),
            })
            .collect();
        records_to_csv(&rows)
    })?;
    Ok(c)
}
