//! The `fdg` command-line tool.

mod commands;
mod config;
mod report;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Parser, Subcommand};
use thiserror::Error;

pub use commands::{
    build_decomposer, build_denoiser, cmd_analyze, cmd_decompose, cmd_degrade, cmd_metrics,
    cmd_parse_jpeg, cmd_restore, cmd_synth,
};
pub use config::{
    DecomposerConfig, DecomposerKind, DenoiserConfig, DenoiserKind, Overrides, RunConfig,
};
pub use report::{InputDigest, RunReport};

use crate::diffusion::PredictorKind;
use crate::error::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Run(#[from] Error),
}

impl CliError {
    /// 2 for bad invocations or configurations, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Run(Error::InvalidParameter(_) | Error::ImageTooSmall { .. }) => 2,
            CliError::Run(_) => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "fdg",
    version,
    about = "Haze and JPEG analysis, spectrum decomposition and diffusion restoration"
)]
pub struct Cli {
    /// JSON run configuration; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, value_parser = clap::value_parser!(u8).range(1..=100))]
    pub qf: Option<u8>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub patch: Option<usize>,
    #[arg(long, global = true)]
    pub stride: Option<usize>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// analytic | external
    #[arg(long, global = true)]
    pub denoiser: Option<DenoiserKind>,
    /// oracle | passthrough | external
    #[arg(long, global = true)]
    pub decomposer: Option<DecomposerKind>,
    /// zero | heuristic
    #[arg(long, global = true)]
    pub predictor: Option<PredictorKind>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a procedural clear scene and its depth map.
    Synth {
        #[arg(long, default_value_t = 128)]
        width: usize,
        #[arg(long, default_value_t = 128)]
        height: usize,
    },
    /// Add haze to a clear image and JPEG-compress the result.
    Degrade {
        input: PathBuf,
        /// Depth map as an FDGT tensor [height, width, 1].
        #[arg(long)]
        depth: Option<PathBuf>,
        /// Uniform transmission; overrides depth.
        #[arg(long)]
        transmission: Option<f64>,
        #[arg(long)]
        beta: Option<f64>,
        /// r,g,b in [0, 1]
        #[arg(long, value_delimiter = ',')]
        airlight: Option<Vec<f64>>,
    },
    /// Quantizer annihilation statistics of a directory of PPM/PGM images.
    Analyze {
        corpus: PathBuf,
        /// Comma-separated transmissions.
        #[arg(long, value_delimiter = ',')]
        t: Option<Vec<f64>>,
    },
    /// Restore a compressed hazy image with the patch diffusion sampler.
    Restore {
        input: PathBuf,
        /// Uncompressed image for the oracle decomposer and for metrics.
        #[arg(long)]
        reference: Option<PathBuf>,
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        snapshot_every: Option<usize>,
    },
    /// PSNR and SSIM between two images.
    Metrics { a: PathBuf, b: PathBuf },
    /// Dump quantization tables and coefficients of a baseline JPEG.
    ParseJpeg { file: PathBuf },
    /// Split an image into compression spectrum and corrected image.
    Decompose {
        input: PathBuf,
        #[arg(long)]
        reference: Option<PathBuf>,
    },
}

fn resolve(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    cfg.apply(&Overrides {
        qf: cli.qf,
        seed: cli.seed,
        patch: cli.patch,
        stride: cli.stride,
        denoiser: cli.denoiser,
        decomposer: cli.decomposer,
        predictor: cli.predictor,
    });
    match &cli.command {
        Command::Degrade {
            transmission,
            beta,
            airlight,
            ..
        } => {
            if transmission.is_some() {
                cfg.transmission = *transmission;
            }
            if let Some(b) = beta {
                cfg.beta = *b;
            }
            if let Some(a) = airlight {
                cfg.airlight = a.as_slice().try_into().map_err(|_| {
                    CliError::Usage(format!("--airlight needs 3 values, got {}", a.len()))
                })?;
            }
        }
        Command::Analyze { t: Some(t), .. } => cfg.t_list = t.clone(),
        Command::Restore {
            steps,
            snapshot_every,
            ..
        } => {
            if let Some(s) = steps {
                cfg.sampler.steps = *s;
            }
            if snapshot_every.is_some() {
                cfg.snapshot_every = *snapshot_every;
            }
        }
        _ => {}
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Runs one parsed invocation and writes its report.
pub fn execute(cli: &Cli) -> Result<RunReport, CliError> {
    let start = Instant::now();
    let cfg = resolve(cli)?;
    let out = cli.out.as_path();
    let mut rep = match &cli.command {
        Command::Synth { width, height } => cmd_synth(*width, *height, &cfg, out)?,
        Command::Degrade { input, depth, .. } => cmd_degrade(input, depth.as_deref(), &cfg, out)?,
        Command::Analyze { corpus, .. } => cmd_analyze(corpus, &cfg, out)?,
        Command::Restore {
            input, reference, ..
        } => cmd_restore(input, reference.as_deref(), &cfg, out)?,
        Command::Metrics { a, b } => cmd_metrics(a, b, &cfg)?,
        Command::ParseJpeg { file } => cmd_parse_jpeg(file, &cfg, out)?,
        Command::Decompose { input, reference } => {
            cmd_decompose(input, reference.as_deref(), &cfg, out)?
        }
    };
    rep.wall_time_s = start.elapsed().as_secs_f64();
    std::fs::create_dir_all(out).map_err(Error::from)?;
    let text = serde_json::to_string_pretty(&rep).map_err(Error::from)?;
    std::fs::write(out.join("report.json"), &text).map_err(Error::from)?;
    Ok(rep)
}

fn init_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("FDG_THREADS") else {
        return Ok(());
    };
    let n: usize = v.parse().ok().filter(|&n| n > 0).ok_or_else(|| {
        CliError::Usage(format!("FDG_THREADS must be a positive integer, got '{v}'"))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(format!("cannot size thread pool: {e}")))
}

/// Parses `args`, runs the command, prints the report and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let result = init_threads().and_then(|_| execute(&cli));
    match result {
        Ok(rep) => {
            match serde_json::to_string_pretty(&rep) {
                Ok(s) => {
                    let _ = writeln!(std::io::stdout().lock(), "{s}");
                }
                Err(e) => eprintln!("warning: cannot print report: {e}"),
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
