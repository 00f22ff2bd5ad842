//! Shoot the homogeneous angular profile for a range of opening angles.
//!
//! cargo run --release --example angular_profile -- 0.5

use std::f64::consts::PI;

use fbx::analysis::{angular_profile, halfplane_constant};

fn main() -> fbx::Result<()> {
    let p: f64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0.5);
    println!("half-plane constant c = {:.10}", halfplane_constant(1.0, p)?);
    for k in 4..=8 {
        let gamma = k as f64 * PI / 8.0;
        match angular_profile(gamma, 1.0, p, 1e-6) {
            Ok(a) if a.success => println!(
                "gamma {:.4}: amplitude {:.8}  boundary residual {:.2e}",
                gamma, a.amplitude, a.boundary_residual
            ),
            Ok(_) => println!("gamma {gamma:.4}: no profile vanishing at the ends"),
            Err(e) => println!("gamma {gamma:.4}: {e}"),
        }
    }
    Ok(())
}
