//! Minimize with the trace of the half-plane profile as boundary data and
//! compare the result to the closed form.
//!
//! cargo run --release --example halfplane -- 128

use std::sync::Arc;

use fbx::analysis::{
    campanato_rate, dyadic_radii, growth_fit, halfplane_constant, nondeg_check, subharmonic_witness,
    weiss_series, witness_tolerance, WeissFactor,
};
use fbx::energy::el_residual;
use fbx::minimize::{minimize, BoundaryData, Schedule};
use fbx::{build_grid, DomainSpec, EnergyParams, Point, ScalarField};

fn main() -> fbx::Result<()> {
    let n: f64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(64.0);
    let p: f64 = std::env::args().nth(2).and_then(|s| s.parse().ok()).unwrap_or(0.5);
    let h = 1.0 / n;
    let params = EnergyParams::new(1.0, 1.0, p)?;
    let grid = Arc::new(build_grid(DomainSpec::half_disk(1.0, h))?);
    let sched = Schedule::default_for(&grid, &params);
    let data = BoundaryData::HalfplaneTrace { lambda: 1.0, p };
    let (u, report) = minimize(grid.clone(), &data, &params, &sched)?;
    let c = halfplane_constant(1.0, p)?;
    let beta = params.beta();
    let exact = ScalarField::from_fn(grid.clone(), |x| c * x.x1.max(0.0).powf(beta));
    println!(
        "h = 1/{n}  seed {}  converged {}  E = {:.6}  wall {:.2?}",
        report.chosen_seed, report.converged, report.true_energy, report.wall_time
    );
    for s in &report.stages {
        println!(
            "  eps {:.3e}  iters {:6}  |r| {:.2e}  E_true {:.6}",
            s.eps, s.iterations, s.residual_norm, s.true_energy
        );
    }
    println!("relative sup error  {:.4e}", u.max_diff(&exact) / exact.sup_norm());
    let res = el_residual(&u, &params, h.powf(beta));
    let far = grid
        .interior_nodes()
        .filter(|&k| grid.point(k).x1 > 0.2)
        .fold(0.0f64, |m, k| m.max(res.value(k).abs()));
    println!("max |EL residual| on x1 > 0.2  {far:.4e}");
    let radii = dyadic_radii(8.0 * h, 0.5);
    let g = growth_fit(&u, Point::ORIGIN, &radii, h.powf(beta))?;
    println!("growth exponent {:.4} (beta {:.4})", g.exponent, beta);
    let nd = nondeg_check(&u, Point::ORIGIN, &radii, &params)?;
    println!("nondegeneracy pass {}  ratios {:?}", nd.all_pass(), nd.measured.iter().zip(&nd.floors).map(|(m, f)| m / f).collect::<Vec<_>>());
    let ws = weiss_series(&u, Point::ORIGIN, &radii, &params, 0.0, WeissFactor::One)?;
    println!("weiss {:?}  slack {:.3e} range {:.3e}", ws.values, ws.slack, ws.range());
    let w = subharmonic_witness(&u, Point::new(0.5, 0.0), &params)?;
    println!("witness min {w:.4e}  tolerance {:.4e}", witness_tolerance(h, &params));
    let cf = campanato_rate(&u, Point::ORIGIN, &dyadic_radii(4.0 * h, 0.5))?;
    println!("campanato alpha {:.4}  A0 {:?}", cf.alpha, cf.a0);
    Ok(())
}
