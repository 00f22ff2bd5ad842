//! Perturb a computed minimizer by random admissible bumps and report the
//! energy gaps.
//!
//! cargo run --release --example audit -- 64 200

use std::sync::Arc;

use fbx::minimize::{competitor_audit, minimize, BoundaryData, Schedule};
use fbx::{build_grid, DomainSpec, EnergyParams};

fn main() -> fbx::Result<()> {
    let mut args = std::env::args().skip(1);
    let n: f64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(64.0);
    let count: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(200);
    let params = EnergyParams::new(1.0, 1.0, 0.5)?;
    let grid = Arc::new(build_grid(DomainSpec::half_disk(1.0, 1.0 / n))?);
    let data = BoundaryData::TwoPhase { m: 1.0, gap: 0.2 };
    let (u, report) = minimize(grid.clone(), &data, &params, &Schedule::default_for(&grid, &params))?;
    let gaps = competitor_audit(&u, &params, count, 7, 0.05)?;
    let min = gaps.iter().copied().fold(f64::INFINITY, f64::min);
    let negative = gaps.iter().filter(|&&g| g < -1e-6 * report.true_energy.abs()).count();
    println!("E = {:.6}  {count} bumps  min gap {min:.3e}  below threshold {negative}", report.true_energy);
    Ok(())
}
