use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bifi::cli_io::{
    cmd_bound, cmd_eigs, cmd_fit, cmd_generate, cmd_predict, cmd_sweep, OutputFormat, RunConfig,
};
use bifi::{BifiError, Result};
use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "bifi", version, about = "Bi-fidelity reduced PC expansions and error bounds")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory (overrides `output_dir` in the config).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Seed (overrides `seed` in the config).
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads; 0 uses all cores.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a built-in model pair and write L.csv, H.csv and inputs.csv.
    Generate,
    /// Fit the bi-fidelity model and report errors against the HF reference.
    Fit,
    /// Evaluate a saved model at new inputs.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        inputs: PathBuf,
    },
    /// Practical and a-priori error bounds.
    Bound {
        /// Saved model; fitted from the config when absent.
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Errors and bounds over a grid of (n, r) and repetitions.
    Sweep,
    /// Normalized KL spectra of the LF and HF ensembles.
    Eigs,
}

fn load_config(cli: &Cli) -> Result<RunConfig> {
    let path = cli
        .config
        .as_deref()
        .ok_or_else(|| BifiError::Config("--config is required for this command".into()))?;
    let mut cfg = RunConfig::from_path(path)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn out_dir(cli: &Cli, cfg: Option<&RunConfig>) -> PathBuf {
    cli.out
        .clone()
        .or_else(|| cfg.and_then(|c| c.output_dir.clone()))
        .unwrap_or_else(|| PathBuf::from("."))
}

fn run(cli: &Cli) -> Result<()> {
    let fmt = match cli.format {
        Format::Csv => OutputFormat::Csv,
        Format::Json => OutputFormat::Json,
    };
    if let Command::Predict { model, inputs } = &cli.command {
        let out = out_dir(cli, None);
        let pred = cmd_predict(model, inputs, &out, fmt)?;
        println!("predictions {}x{} written to {}", pred.nrows(), pred.ncols(), out.display());
        return Ok(());
    }
    let cfg = load_config(cli)?;
    let out = out_dir(cli, Some(&cfg));
    match &cli.command {
        Command::Generate => {
            let m = cmd_generate(&cfg, &out)?;
            println!("{} samples written to {}", m.big_n, out.display());
        }
        Command::Fit => {
            let r = cmd_fit(&cfg, &out, fmt)?;
            print_report_path(&out.join("report.json"), r.rank);
        }
        Command::Bound { model } => {
            let r = cmd_bound(&cfg, model.as_deref(), &out, fmt)?;
            print_report_path(&out.join("bound_report.json"), r.rank);
        }
        Command::Sweep => {
            let rows = cmd_sweep(&cfg, &out, fmt)?;
            println!("{} sweep rows written to {}", rows.len(), out.display());
        }
        Command::Eigs => {
            let s = cmd_eigs(&cfg, &out, fmt)?;
            println!("{} LF eigenvalues written to {}", s.lf.len(), out.display());
        }
        Command::Predict { .. } => unreachable!("handled above"),
    }
    Ok(())
}

fn print_report_path(path: &Path, rank: Option<usize>) {
    match rank {
        Some(r) => println!("rank {r}; report at {}", path.display()),
        None => println!("report at {}", path.display()),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("BIFI_LOG", "warn")).init();
    let cli = Cli::parse();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build();
    let result = match pool {
        Ok(pool) => pool.install(|| run(&cli)),
        Err(e) => Err(BifiError::Config(format!("thread pool: {e}"))),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
