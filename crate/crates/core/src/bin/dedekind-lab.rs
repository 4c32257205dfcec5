use clap::{Args, Parser, Subcommand};
use dedekind_lab::experiment::{
    cmd_constants, cmd_run, cmd_zeros, write_constants, Check, ExperimentConfig, ReportFormat,
};
use dedekind_lab::LabError;
use std::path::PathBuf;
use std::process::ExitCode;

/// Moments of Dedekind zeta functions of quadratic fields.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    /// TOML file with experiment settings; flags and DEDM_* variables override it.
    #[arg(long, global = true, env = "DEDM_CONFIG")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute or verify the zero caches of ζ and L(s,χ).
    Zeros(ZerosArgs),
    /// Run the selected checks and write a report.
    Run(RunArgs),
    /// Print the arithmetic constants.
    Constants(ConstantsArgs),
}

#[derive(Args)]
struct Common {
    #[arg(long, env = "DEDM_DK", allow_hyphen_values = true)]
    dk: Option<i64>,
    #[arg(long, env = "DEDM_CACHE_DIR")]
    cache_dir: Option<PathBuf>,
    #[arg(long, env = "DEDM_OUT")]
    out: Option<PathBuf>,
    #[arg(long, env = "DEDM_FORMAT", value_enum)]
    format: Option<ReportFormat>,
    #[arg(long, env = "DEDM_WORKERS")]
    workers: Option<usize>,
    #[arg(long, env = "DEDM_DETERMINISTIC", num_args = 0..=1, default_missing_value = "true")]
    deterministic: Option<bool>,
}

#[derive(Args)]
struct ZerosArgs {
    #[command(flatten)]
    common: Common,
    /// Height to which zeros are found.
    #[arg(long, env = "DEDM_TMAX")]
    tmax: Option<f64>,
    /// Scan step of the Hardy-function sweep.
    #[arg(long, env = "DEDM_STEP")]
    step: Option<f64>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: Common,
    /// Integration heights T (windows [T, 2T]).
    #[arg(long = "T", env = "DEDM_T", value_delimiter = ',')]
    t: Vec<f64>,
    #[arg(long = "X", env = "DEDM_X", value_delimiter = ',')]
    x: Vec<f64>,
    #[arg(long, env = "DEDM_K", value_delimiter = ',')]
    k: Vec<f64>,
    /// Minimum zero-table height.
    #[arg(long, env = "DEDM_TMAX")]
    tmax: Option<f64>,
    #[arg(long, env = "DEDM_STEP")]
    step: Option<f64>,
    #[arg(long, env = "DEDM_GRID_STEP")]
    grid_step: Option<f64>,
    #[arg(long, env = "DEDM_CHECKS", value_delimiter = ',', value_enum)]
    checks: Vec<Check>,
}

#[derive(Args)]
struct ConstantsArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, env = "DEDM_K", value_delimiter = ',')]
    k: Vec<f64>,
}

fn base_config(path: Option<&PathBuf>) -> Result<ExperimentConfig, LabError> {
    path.map_or_else(
        || Ok(ExperimentConfig::default()),
        |p| ExperimentConfig::from_file(p),
    )
}

fn apply_common(cfg: &mut ExperimentConfig, c: Common) {
    if let Some(v) = c.dk {
        cfg.d_k = v;
    }
    if let Some(v) = c.cache_dir {
        cfg.cache_dir = v;
    }
    if c.out.is_some() {
        cfg.out = c.out;
    }
    if let Some(v) = c.format {
        cfg.format = v;
    }
    if let Some(v) = c.workers {
        cfg.workers = v;
    }
    if let Some(v) = c.deterministic {
        cfg.deterministic = v;
    }
}

fn replace_nonempty<T>(dst: &mut Vec<T>, src: Vec<T>) {
    if !src.is_empty() {
        *dst = src;
    }
}

fn execute(cli: Cli) -> Result<bool, LabError> {
    let mut cfg = base_config(cli.config.as_ref())?;
    match cli.command {
        Command::Zeros(a) => {
            apply_common(&mut cfg, a.common);
            let t_max = a
                .tmax
                .or(cfg.t_max)
                .ok_or_else(|| LabError::Config("zeros needs --tmax".into()))?;
            for e in cmd_zeros(cfg.d_k, t_max, a.step.or(cfg.step), &cfg.cache_dir)? {
                println!(
                    "{}\tt_max={}\tcount={}\texpected={:.2}",
                    e.path.display(),
                    e.t_max,
                    e.count,
                    e.expected
                );
            }
            Ok(true)
        }
        Command::Run(a) => {
            apply_common(&mut cfg, a.common);
            replace_nonempty(&mut cfg.t, a.t);
            replace_nonempty(&mut cfg.x, a.x);
            replace_nonempty(&mut cfg.k, a.k);
            replace_nonempty(&mut cfg.checks, a.checks);
            cfg.t_max = a.tmax.or(cfg.t_max);
            cfg.step = a.step.or(cfg.step);
            cfg.grid_step = a.grid_step.or(cfg.grid_step);
            let report = cmd_run(&cfg)?;
            report.emit(cfg.format, cfg.out.as_deref())?;
            Ok(report.all_pass())
        }
        Command::Constants(a) => {
            apply_common(&mut cfg, a.common);
            replace_nonempty(&mut cfg.k, a.k);
            let rows = cmd_constants(cfg.d_k, &cfg.k)?;
            match &cfg.out {
                Some(p) => write_constants(&rows, cfg.format, std::fs::File::create(p)?)?,
                None => write_constants(&rows, cfg.format, std::io::stdout().lock())?,
            }
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(
            e @ (LabError::Config(_)
            | LabError::InvalidParameter(_)
            | LabError::InvalidDiscriminant(_)),
        ) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
    }
}
