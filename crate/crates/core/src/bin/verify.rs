use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use curvature_verify::catalog::{catalog_names, resolve};
use curvature_verify::config::{load_config, ConfigError, Format};
use curvature_verify::report::{CheckReport, EXIT_CONFIG};
use curvature_verify::suite::CheckId;

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Json,
    Text,
}

/// Evaluate curvature identities on a catalog of charts and hypersurfaces.
#[derive(Parser)]
#[command(name = "verify", version)]
struct Cli {
    /// Suite configuration (TOML).
    #[arg(long, required_unless_present_any = ["list_targets", "list_checks"])]
    config: Option<PathBuf>,
    /// Overrides `output.format`.
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    /// Overrides `output.path`; stdout when neither is set.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides `sampling.seed`.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    list_targets: bool,
    #[arg(long)]
    list_checks: bool,
}

fn fail(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("verify: {msg}");
    ExitCode::from(EXIT_CONFIG as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.list_targets || cli.list_checks {
        if cli.list_targets {
            for name in catalog_names() {
                let t = resolve(&name).expect("catalog names resolve");
                println!("{name}\tdim {}", t.dim());
            }
        }
        if cli.list_checks {
            for id in CheckId::ALL {
                println!(
                    "{:<26} {:<10} {:<8e} {}",
                    id.name(),
                    format!("{:?}", id.kind()).to_lowercase(),
                    id.default_tolerance(),
                    id.description()
                );
            }
        }
        return ExitCode::SUCCESS;
    }

    let path = cli.config.expect("clap enforces --config");
    let text = match std::fs::read_to_string(&path) {
        Ok(t) => t,
        Err(e) => return fail(format!("{}: {e}", path.display())),
    };
    let mut cfg = match load_config(&text) {
        Ok(c) => c,
        Err(e @ ConfigError::EmptySuite) => return fail(format!("warning: {e}; nothing to verify")),
        Err(e) => return fail(e),
    };
    if let Some(seed) = cli.seed {
        cfg.sampling.seed = seed;
    }
    if let Some(f) = cli.format {
        cfg.output.format = match f {
            FormatArg::Json => Format::Json,
            FormatArg::Text => Format::Text,
        };
    }
    if let Some(out) = cli.out {
        cfg.output.path = Some(out);
    }

    let report = match CheckReport::run(&cfg) {
        Ok(r) => r,
        Err(e) => return fail(e),
    };
    let doc = report.render(cfg.output.format);
    match &cfg.output.path {
        Some(p) => {
            if let Err(e) = std::fs::write(p, &doc) {
                return fail(format!("{}: {e}", p.display()));
            }
        }
        None => print!("{doc}"),
    }
    for r in report.failures() {
        eprintln!(
            "FAIL {} {} #{} at {:?}: value {:?} tolerance {:e} {}",
            r.target, r.check, r.point_index, r.point, r.value, r.tolerance, r.note
        );
    }
    ExitCode::from(report.exit_code() as u8)
}
