use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use spdelab::config::{load_config, ExperimentKind};
use spdelab::presets::PRESETS;
use spdelab::{parse_config_with_env, run_to_dir, serialize_config, Bundle, ExperimentConfig, LabError};

#[derive(Parser)]
#[command(name = "spdelab", version, about = "Numerical experiments for SPDEs with bounded measurable drift")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Path experiments: ou_validate, uniqueness_by_noise, deterministic_nonuniqueness
    Simulate(RunArgs),
    /// Solver experiments: kolmogorov, kernel_norms
    Solve(RunArgs),
    /// Girsanov weights and change of measure
    Girsanov(RunArgs),
    /// Transformed mild equation residuals
    Zvonkin(RunArgs),
    /// Run every built-in preset into `--out/<preset>/`
    Examples(CommonArgs),
    /// Parse a config and print it in canonical form
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Args)]
struct CommonArgs {
    /// Override `seeds.master`
    #[arg(long)]
    seed: Option<u64>,
    /// Override `output.dir`
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; affects speed only
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[command(flatten)]
    common: CommonArgs,
}

fn allowed(cmd: &Command) -> &'static [ExperimentKind] {
    use ExperimentKind::*;
    match cmd {
        Command::Simulate(_) => &[OuValidate, UniquenessByNoise, DeterministicNonuniqueness],
        Command::Solve(_) => &[Kolmogorov, KernelNorms],
        Command::Girsanov(_) => &[Girsanov],
        Command::Zvonkin(_) => &[Zvonkin],
        _ => &[],
    }
}

fn report(bundle: &Bundle, dir: &Path) {
    for c in &bundle.checks {
        println!(
            "{} {:<40} measured {:.6e} tolerance {:.6e}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.measured,
            c.tolerance
        );
    }
    println!("{}: {} -> {}", bundle.experiment, if bundle.passed() { "passed" } else { "FAILED" }, dir.display());
}

fn configure(mut cfg: ExperimentConfig, common: &CommonArgs) -> ExperimentConfig {
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if let Some(o) = &common.out {
        cfg.output_dir = o.clone();
    }
    cfg
}

fn threads(common: &CommonArgs) -> Result<(), LabError> {
    if let Some(n) = common.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| LabError::Setup(format!("thread pool: {e}")))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<bool, LabError> {
    match &cli.command {
        Command::Validate { config } => {
            let cfg = load_config(config)?;
            print!("{}", serialize_config(&cfg));
            Ok(true)
        }
        Command::Examples(common) => {
            threads(common)?;
            let root = common.out.clone().unwrap_or_else(|| PathBuf::from("out"));
            let mut ok = true;
            for (name, text) in PRESETS {
                let mut cfg = configure(parse_config_with_env(text, std::env::vars())?, common);
                cfg.output_dir = root.join(name);
                let (bundle, _) = run_to_dir(&cfg, None)?;
                report(&bundle, &cfg.output_dir);
                ok &= bundle.passed();
            }
            Ok(ok)
        }
        Command::Simulate(a) | Command::Solve(a) | Command::Girsanov(a) | Command::Zvonkin(a) => {
            threads(&a.common)?;
            let cfg = configure(load_config(&a.config)?, &a.common);
            let kinds = allowed(&cli.command);
            if !kinds.contains(&cfg.kind) {
                let names: Vec<&str> = kinds.iter().map(|k| k.name()).collect();
                return Err(LabError::Setup(format!(
                    "experiment kind `{}` does not belong to this subcommand (expected one of {})",
                    cfg.kind.name(),
                    names.join(", ")
                )));
            }
            let (bundle, _) = run_to_dir(&cfg, None)?;
            report(&bundle, &cfg.output_dir);
            Ok(bundle.passed())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
