use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fbx::cli::{self, RunManifest};
use fbx::{Error, ScalarField};

/// Discrete minimizers and free boundary diagnostics for the two-phase
/// Alt-Phillips energy on the half-disk.
#[derive(Parser)]
#[command(name = "fbx", version)]
struct Args {
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Subcommand)]
enum Verb {
    /// Minimize, extract the free boundary and run the configured analyses.
    Solve { config: PathBuf },
    /// Run the configured analyses on an existing FBFIELD file.
    Analyze { config: PathBuf, field: PathBuf },
    /// Solve once per value of one parameter, e.g. `--param p=0.3,0.5,0.7`.
    Sweep {
        config: PathBuf,
        #[arg(long)]
        param: String,
    },
    /// Re-hash the files listed in a manifest and print the stage statuses.
    Report { manifest: PathBuf },
}

const CONFIG_ERROR: u8 = 2;
const COMPUTE_ERROR: u8 = 3;

fn fail(e: &Error) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(if e.is_config_error() { CONFIG_ERROR } else { COMPUTE_ERROR })
}

fn outcome(m: &RunManifest) -> ExitCode {
    println!("{}", m.config.output_dir.join(cli::MANIFEST_FILE).display());
    for s in m.failed_stages() {
        eprintln!("stage {} failed: {}", s.stage, s.message.as_deref().unwrap_or(""));
    }
    if m.success {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(COMPUTE_ERROR)
    }
}

fn main() -> ExitCode {
    let args = Args::parse();
    if let Ok(v) = std::env::var("FBX_THREADS") {
        match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => {
                if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                    eprintln!("error: cannot size the worker pool: {e}");
                    return ExitCode::from(COMPUTE_ERROR);
                }
            }
            _ => {
                eprintln!("error: FBX_THREADS must be a positive integer, got `{v}`");
                return ExitCode::from(CONFIG_ERROR);
            }
        }
    }
    match args.verb {
        Verb::Solve { config } => match cli::load_config(&config, &[]).and_then(|c| cli::run(&c)) {
            Ok(m) => outcome(&m),
            Err(e) => fail(&e),
        },
        Verb::Analyze { config, field } => {
            let config = match cli::load_config(&config, &[]) {
                Ok(c) => c,
                Err(e) => return fail(&e),
            };
            let bytes = match std::fs::read(&field) {
                Ok(b) => b,
                Err(e) => {
                    eprintln!("error: {}: {e}", field.display());
                    return ExitCode::from(CONFIG_ERROR);
                }
            };
            match ScalarField::from_bytes(&bytes).and_then(|u| cli::analyze(&config, &u)) {
                Ok(m) => outcome(&m),
                Err(e @ Error::Format { .. }) => {
                    eprintln!("error: {e}");
                    ExitCode::from(CONFIG_ERROR)
                }
                Err(e) => fail(&e),
            }
        }
        Verb::Sweep { config, param } => {
            let Some((key, values)) = param.split_once('=') else {
                eprintln!("error: --param expects `key=v1,v2,...`, got `{param}`");
                return ExitCode::from(CONFIG_ERROR);
            };
            let mut code = ExitCode::SUCCESS;
            for v in values.split(',').map(str::trim).filter(|v| !v.is_empty()) {
                let overrides = [(key.trim().to_string(), v.to_string())];
                let mut c = match cli::load_config(&config, &overrides) {
                    Ok(c) => c,
                    Err(e) => return fail(&e),
                };
                c.output_dir = c.output_dir.join(format!("{}={v}", key.trim()));
                match cli::run(&c) {
                    Ok(m) => {
                        if !m.success {
                            code = outcome(&m);
                        } else {
                            outcome(&m);
                        }
                    }
                    Err(e) => return fail(&e),
                }
            }
            code
        }
        Verb::Report { manifest } => match cli::verify_manifest(&manifest) {
            Ok((m, checks)) => {
                let mut ok = m.success;
                for c in &checks {
                    let status = match &c.actual {
                        None => "missing".to_string(),
                        Some(a) if *a == c.expected => "ok".to_string(),
                        Some(a) => format!("hash mismatch ({a})"),
                    };
                    ok &= c.ok();
                    println!("{:<28} {}  {status}", c.name, c.expected);
                }
                for s in &m.stages {
                    let tail = s.message.as_deref().map(|t| format!("  {t}")).unwrap_or_default();
                    println!("stage {:<22} {}{tail}", s.stage, if s.ok { "ok" } else { "FAILED" });
                }
                if ok {
                    ExitCode::SUCCESS
                } else {
                    ExitCode::from(COMPUTE_ERROR)
                }
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(CONFIG_ERROR)
            }
        },
    }
}
