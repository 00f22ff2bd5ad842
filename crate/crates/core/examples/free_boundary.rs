//! Contour an analytic two-phase field, classify its free boundary points and
//! print the SVG overlay.
//!
//! cargo run --example free_boundary > fb.svg

use std::sync::Arc;

use fbx::cli::{render_svg, Plot, Style};
use fbx::freeboundary::{extract_free_boundary, tangency_profile, ConeSpec, Phase};
use fbx::{build_grid, DomainSpec, Point, ScalarField};

fn main() -> fbx::Result<()> {
    let h = 1.0 / 64.0;
    let grid = Arc::new(build_grid(DomainSpec::half_disk(1.0, h))?);
    // Positive above a parabola through the origin, negative well below it.
    let u = ScalarField::from_fn(grid, |x| {
        let s = x.x2 - 2.0 * x.x1 * x.x1;
        if s > 0.0 {
            s * x.x1.powf(0.3)
        } else if s < -0.2 {
            (s + 0.2) * x.x1.powf(0.3)
        } else {
            0.0
        }
    });
    let fb = extract_free_boundary(&u, h.powf(4.0 / 3.0))?;
    for (i, c) in fb.chains.iter().enumerate() {
        let two = c.vertices.iter().filter(|v| v.class.is_two_phase()).count();
        eprintln!("chain {i}: {:?}, {} vertices, {two} two-phase", c.phase, c.vertices.len());
    }
    eprintln!("plus chains {}", fb.chains_of(Phase::Plus).count());
    for b in tangency_profile(&fb, &[0.0, 0.1, 0.3, 0.6])? {
        eprintln!("band ({}, {}]: {} vertices, max normal deviation {:?}", b.lo, b.hi, b.vertices, b.max_deviation);
    }
    let cones = [ConeSpec::new(Point::ORIGIN, 0.5)?];
    let plot = Plot::Boundary { fb: &fb, cones: &cones, rho: 0.2, x1_max: 1.0, x2_max: 1.0 };
    print!("{}", render_svg(&plot, &Style::default())?);
    Ok(())
}
