//! Korn quotients `K(n) = (‖sym(DuₙP)‖_q + λ^{1/q}‖uₙ‖_q)/‖Duₙ‖_q` of the
//! witnesses along a level ladder, with a log-log fit of the decay.
//! Writes `korn_quotient.csv` and `korn_quotient.svg` to the working directory.
//!
//! cargo run --release --example korn_quotient_ladder

use kornlab::analysis::{korn_quotient, ladder_csv, loglog_fit, loglog_svg, LadderRow, Sampler, Theorem1Witness};
use kornlab::geometry::Aabb;
use kornlab::thm1::{Theorem1, Theorem1Params};
use nalgebra::Point3;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let levels = [1, 2, 4, 8, 16];
    // a tiny residual budget keeps the filler region out of the numerator
    let mut params = Theorem1Params::new(Aabb::cube(Point3::origin(), 0.25), levels.to_vec(), 2.0, 1e-8);
    params.packing.mc_samples = 0;
    let t = Theorem1::build(&params)?;
    let sampler = Sampler::default();

    let mut rows = Vec::new();
    println!("  n        K(n)     bound    |u|_q       |Du|_q");
    for n in levels {
        let r = korn_quotient(&Theorem1Witness::new(&t, n)?, 2.0, 1.0, false, &sampler)?;
        println!("{n:>3}  {:.4e}  {:.4e}  {:.4e}  {:.6}", r.k, r.k_bound.unwrap_or(f64::NAN), r.u_norm_q, r.du_norm_q);
        rows.push(LadderRow {
            n,
            q: 2.0,
            lambda: 1.0,
            kappa_or_k: r.k,
            budget: r.k_bound.unwrap_or(f64::INFINITY),
        });
    }
    let xs: Vec<f64> = rows.iter().map(|r| r.n as f64).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.kappa_or_k).collect();
    let (slope, _) = loglog_fit(&xs, &ys);
    println!("K(n) ~ n^{slope:.3}; K(16)/K(1) = {:.3}", ys[4] / ys[0]);

    std::fs::write("korn_quotient.csv", ladder_csv(&rows))?;
    let series = vec![("K(n)", xs.iter().copied().zip(ys.iter().copied()).collect())];
    std::fs::write("korn_quotient.svg", loglog_svg("Korn quotient", "n", "K(n)", &series))?;
    Ok(())
}
