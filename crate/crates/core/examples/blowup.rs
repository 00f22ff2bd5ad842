//! Rescale a half-plane minimizer about the origin and match each rescaling
//! against the closed-form profile.
//!
//! cargo run --release --example blowup -- 64

use std::sync::Arc;

use fbx::analysis::blowup_sequence;
use fbx::minimize::{minimize, BoundaryData, Schedule};
use fbx::{build_grid, DomainSpec, EnergyParams, Point};

fn main() -> fbx::Result<()> {
    let n: f64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(64.0);
    let params = EnergyParams::new(1.0, 1.0, 0.5)?;
    let grid = Arc::new(build_grid(DomainSpec::half_disk(1.0, 1.0 / n))?);
    let data = BoundaryData::HalfplaneTrace { lambda: 1.0, p: 0.5 };
    let (u, _) = minimize(grid.clone(), &data, &params, &Schedule::default_for(&grid, &params))?;
    let seq = blowup_sequence(&u, Point::ORIGIN, &[1.0, 0.5, 0.25, 0.125], &grid, &params)?;
    print!("{}", seq.to_csv());
    Ok(())
}
