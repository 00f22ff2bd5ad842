//! Build the half-disk and rectangle lattices and print their node census.
//!
//! cargo run --example grid -- 16

use fbx::domain::{build_grid, DomainSpec, NodeLabel};

fn main() -> fbx::Result<()> {
    let n: f64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(16.0);
    for spec in [DomainSpec::half_disk(1.0, 1.0 / n), DomainSpec::rectangle(1.0, 2.0, 1.0 / n)] {
        let g = build_grid(spec)?;
        let count = |l: NodeLabel| g.labels().iter().filter(|&&x| x == l).count();
        println!(
            "{}: {} x {} lattice, interior {}, pi {}, arc {}, exterior {}",
            g.spec().shape.name(),
            g.nx(),
            g.ny(),
            count(NodeLabel::Interior),
            count(NodeLabel::Pi),
            count(NodeLabel::Arc),
            count(NodeLabel::Exterior),
        );
        print!("{}", g.header());
    }
    Ok(())
}
