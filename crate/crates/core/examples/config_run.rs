//! Drive the full pipeline from a config string, then re-verify the manifest.
//!
//! cargo run --release --example config_run -- /tmp/fbx-run

use fbx::cli::{parse_config, run, verify_manifest, MANIFEST_FILE};

const CONFIG: &str = "\
[domain]
R = 1
h = 1/32
preset = halfplane_trace

[energy]
p = 0.5

[analysis]
profile = true
weiss_centers = 0 0
growth_centers = 0 0
nondeg_centers = 0 0
witness_centers = 0.5 0
";

fn main() -> fbx::Result<()> {
    let dir = std::env::args().nth(1).unwrap_or_else(|| "fbx-run".into());
    let config = parse_config(&format!("{CONFIG}\n[output]\ndir = {dir}\n"))?;
    let manifest = run(&config)?;
    for s in &manifest.stages {
        println!("{:<16} {}", s.stage, if s.ok { "ok" } else { "FAILED" });
    }
    let (_, checks) = verify_manifest(&config.output_dir.join(MANIFEST_FILE))?;
    for c in checks {
        println!("{:<20} {} {}", c.name, c.expected, if c.ok() { "ok" } else { "changed" });
    }
    Ok(())
}
