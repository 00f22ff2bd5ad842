//! The Weiss functional on exact fields: constant on the homogeneous profile,
//! strictly monotone on a field of the wrong degree.
//!
//! cargo run --release --example weiss -- 128

use std::sync::Arc;

use fbx::analysis::{dyadic_radii, halfplane_constant, weiss_series, WeissFactor};
use fbx::{build_grid, DomainSpec, EnergyParams, Point, ScalarField};

fn main() -> fbx::Result<()> {
    let n: f64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(128.0);
    let h = 1.0 / n;
    let params = EnergyParams::new(1.0, 1.0, 0.5)?;
    let grid = Arc::new(build_grid(DomainSpec::half_disk(1.0, h))?);
    let c = halfplane_constant(1.0, 0.5)?;
    let beta = params.beta();
    let fields = [
        ("profile", ScalarField::from_fn(grid.clone(), |x| c * x.x1.max(0.0).powf(beta))),
        ("x1", ScalarField::from_fn(grid.clone(), |x| x.x1)),
    ];
    let radii = dyadic_radii(8.0 * h, 0.5);
    for (name, u) in &fields {
        for factor in [WeissFactor::One, WeissFactor::Two] {
            let s = weiss_series(u, Point::ORIGIN, &radii, &params, 0.05, factor)?;
            println!("{name} factor {:?}: range {:.3e}  monotone {}", factor, s.range(), s.monotone_verdict);
            for (r, w) in s.radii.iter().zip(&s.values) {
                println!("  r {r:.4}  W {w:.6}");
            }
        }
    }
    Ok(())
}
