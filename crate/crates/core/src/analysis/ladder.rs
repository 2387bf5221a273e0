//! Discrete spectra of the first counterexample's coefficient fields, ladder
//! tables and log-log plots.

use std::fmt::Write;

use serde::{Deserialize, Serialize};

use super::eigen::{min_garding_eig, EigenOptions, SpectrumResult};
use super::fem::{assemble_forms, Forms, Mesh};
use crate::error::AnalysisError;
use crate::thm1::Theorem1;

/// `A`, `M`, `K` on an `m³` mesh of the whole domain with the coefficient
/// field of level `n` sampled at the quadrature points.
pub fn theorem1_forms(c: &Theorem1, n: u32, m: usize, order: usize) -> Result<Forms, AnalysisError> {
    c.level(n)?;
    let mesh = Mesh::new(*c.decomposition().region(), m)?;
    assemble_forms(&mesh, |x| Ok(c.coefficient(n, x)?.0), order)
}

/// Nodal interpolant of the witness `uₙ` on the mesh of `forms`.
pub fn theorem1_interpolant(c: &Theorem1, n: u32, mesh: &Mesh) -> Result<Vec<f64>, AnalysisError> {
    let values: Vec<_> = (0..mesh.free_node_count())
        .map(|idx| {
            let (i, j, k) = mesh.free_node_coords(idx);
            c.eval_bundle(n, &mesh.node(i, j, k)).map(|b| b.u)
        })
        .collect::<Result<_, _>>()?;
    Ok(values.iter().flat_map(|u| u.iter().copied()).collect())
}

/// One rung of the spectral ladder: the discrete `κ` for level `n` and the
/// Rayleigh quotient of the interpolated witness, an upper bound for it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumRung {
    pub n: u32,
    pub result: SpectrumResult,
    pub witness_quotient: f64,
}

pub fn theorem1_spectrum(
    c: &Theorem1,
    n: u32,
    m: usize,
    lambda: f64,
    opts: &EigenOptions,
) -> Result<SpectrumRung, AnalysisError> {
    let forms = theorem1_forms(c, n, m, 2)?;
    let x = theorem1_interpolant(c, n, &forms.mesh)?;
    let witness_quotient = forms.rayleigh_quotient(lambda, &x)?;
    let result = min_garding_eig(&forms, lambda, opts)?;
    Ok(SpectrumRung {
        n,
        result,
        witness_quotient,
    })
}

/// Row of a ladder table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LadderRow {
    pub n: u32,
    pub q: f64,
    pub lambda: f64,
    pub kappa_or_k: f64,
    /// Upper bound the value is compared against.
    pub budget: f64,
}

pub fn ladder_csv(rows: &[LadderRow]) -> String {
    crate::thm1::records_to_csv(rows)
}

/// A minimal log-log line plot. Output depends only on the data.
pub fn loglog_svg(title: &str, x_label: &str, y_label: &str, series: &[(&str, Vec<(f64, f64)>)]) -> String {
    const W: f64 = 640.0;
    const H: f64 = 440.0;
    const PAD: f64 = 60.0;
    const COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];
    let pts = series
        .iter()
        .flat_map(|(_, s)| s.iter())
        .filter(|(x, y)| *x > 0.0 && *y > 0.0);
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for (x, y) in pts {
        x0 = x0.min(x.log10());
        x1 = x1.max(x.log10());
        y0 = y0.min(y.log10());
        y1 = y1.max(y.log10());
    }
    if !x0.is_finite() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    // whole decades around the data
    let (x0, x1) = (x0.floor(), x1.ceil().max(x0.floor() + 1.0));
    let (y0, y1) = (y0.floor(), y1.ceil().max(y0.floor() + 1.0));
    let px = |x: f64| PAD + (x.log10() - x0) / (x1 - x0) * (W - 2.0 * PAD);
    let py = |y: f64| H - PAD - (y.log10() - y0) / (y1 - y0) * (H - 2.0 * PAD);

    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" font-family="sans-serif" font-size="12">"#);
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"#, W / 2.0, escape(title));
    let _ = writeln!(
        s,
        r#"<rect x="{PAD}" y="{PAD}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        W - 2.0 * PAD,
        H - 2.0 * PAD
    );
    for d in x0 as i32..=x1 as i32 {
        let x = px(10f64.powi(d));
        let _ = writeln!(s, r##"<line x1="{x:.2}" y1="{PAD}" x2="{x:.2}" y2="{}" stroke="#ddd"/>"##, H - PAD);
        let _ = writeln!(s, r#"<text x="{x:.2}" y="{}" text-anchor="middle">1e{d}</text>"#, H - PAD + 16.0);
    }
    for d in y0 as i32..=y1 as i32 {
        let y = py(10f64.powi(d));
        let _ = writeln!(s, r##"<line x1="{PAD}" y1="{y:.2}" x2="{}" y2="{y:.2}" stroke="#ddd"/>"##, W - PAD);
        let _ = writeln!(s, r#"<text x="{}" y="{:.2}" text-anchor="end">1e{d}</text>"#, PAD - 6.0, y + 4.0);
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, W / 2.0, H - 16.0, escape(x_label));
    let _ = writeln!(
        s,
        r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#,
        H / 2.0,
        H / 2.0,
        escape(y_label)
    );
    for (i, (name, data)) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let path: Vec<String> = data
            .iter()
            .filter(|(x, y)| *x > 0.0 && *y > 0.0)
            .map(|(x, y)| format!("{:.2},{:.2}", px(*x), py(*y)))
            .collect();
        let _ = writeln!(s, r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#, path.join(" "));
        for p in &path {
            let (cx, cy) = p.split_once(',').unwrap();
            let _ = writeln!(s, r#"<circle cx="{cx}" cy="{cy}" r="3" fill="{color}"/>"#);
        }
        let ly = PAD + 16.0 + 16.0 * i as f64;
        let _ = writeln!(s, r#"<text x="{}" y="{ly}" fill="{color}">{}</text>"#, W - PAD - 8.0, escape(name));
    }
    s.push_str("</svg>\n");
    s
}

fn escape(t: &str) -> String {
    t.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Aabb;
    use crate::thm1::Theorem1Params;
    use nalgebra::Point3;

    #[test]
    fn svg_is_deterministic_and_wellformed() {
        let data = vec![("K", vec![(1.0, 1.0), (2.0, 0.5), (4.0, 0.25)])];
        let a = loglog_svg("K & n", "n", "K", &data);
        assert_eq!(a, loglog_svg("K & n", "n", "K", &data));
        assert!(a.starts_with("<svg") && a.ends_with("</svg>\n"));
        assert!(a.contains("K &amp; n"));
        assert_eq!(a.matches("<circle").count(), 3);
    }

    #[test]
    fn ladder_csv_header() {
        let rows = vec![LadderRow {
            n: 1,
            q: 2.0,
            lambda: 1.0,
            kappa_or_k: 0.5,
            budget: 1.0,
        }];
        assert!(ladder_csv(&rows).starts_with("n,q,lambda,kappa_or_k,budget\n"));
    }

    #[test]
    fn witness_interpolant_bounds_kappa() {
        let mut params = Theorem1Params::new(Aabb::cube(Point3::origin(), 0.25), vec![1, 2], 2.0, 1e-2);
        params.packing.mc_samples = 0;
        let c = Theorem1::build(&params).unwrap();
        for n in [1, 2] {
            let rung = theorem1_spectrum(&c, n, 8, 1.0, &EigenOptions::default()).unwrap();
            assert!(rung.result.kappa <= rung.witness_quotient);
            assert!(rung.result.kappa >= 0.0);
        }
    }
}
