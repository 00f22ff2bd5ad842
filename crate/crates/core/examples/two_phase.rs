//! Two-phase boundary data: positive on the upper arc, negative on the lower
//! arc. Reports where each phase leaves the flat side and how flat the free
//! boundary is there.
//!
//! cargo run --release --example two_phase -- 64

use std::sync::Arc;

use fbx::freeboundary::{
    cone_check, contact_separation, extract_free_boundary, pi_contacts, tangency_profile, ConeSpec, Phase,
};
use fbx::minimize::{minimize, BoundaryData, Schedule};
use fbx::{build_grid, DomainSpec, EnergyParams};

fn main() -> fbx::Result<()> {
    let n: f64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(64.0);
    let h = 1.0 / n;
    let params = EnergyParams::new(1.0, 1.0, 0.5)?;
    let grid = Arc::new(build_grid(DomainSpec::half_disk(1.0, h))?);
    let data = BoundaryData::TwoPhase { m: 1.0, gap: 0.2 };
    let (u, report) = minimize(grid.clone(), &data, &params, &Schedule::default_for(&grid, &params))?;
    println!("seed {}  E = {:.6}  converged {}", report.chosen_seed, report.true_energy, report.converged);
    for s in &report.seeds {
        println!("  seed {} ({}): E = {:.6}", s.seed, s.init, s.true_energy);
    }

    let fb = extract_free_boundary(&u, h.powf(params.beta()))?;
    let near: Vec<_> = fb.vertices().filter(|v| v.x.x1 < 2.0 * h).collect();
    println!(
        "{} vertices with x1 < 2h, {} of them two-phase",
        near.len(),
        near.iter().filter(|v| v.class.is_two_phase()).count()
    );
    for b in tangency_profile(&fb, &[0.0, 0.05, 0.15, 0.3])? {
        println!("band ({:.2}, {:.2}]: {:4} vertices, max deviation {:?}", b.lo, b.hi, b.vertices, b.max_deviation);
    }
    println!("phase separation at the flat side {:?}", contact_separation(&fb, h));
    for phase in [Phase::Plus, Phase::Minus] {
        for z in pi_contacts(&fb, phase, h) {
            for rho in [0.05, 0.1] {
                let r = cone_check(&fb, &ConeSpec::new(z, 0.3)?, rho)?;
                println!(
                    "{phase:?} contact ({:.4}, {:.4}) rho {rho}: {} of {} vertices outside the cone",
                    z.x1,
                    z.x2,
                    r.offending.len(),
                    r.checked
                );
            }
        }
    }
    Ok(())
}
