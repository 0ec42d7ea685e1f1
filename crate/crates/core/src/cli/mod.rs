//! Command-line front end. [`run`] parses arguments, executes one
//! subcommand and returns the process exit code: 0 on success, 1 on a usage
//! error, 2 on a data error.

mod commands;
mod config;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::inference::CandidatePolicy;

pub use config::RunConfig;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Data(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Data(e)
    }
}

#[derive(Debug, Parser)]
#[command(name = "crosswalk", version, about = "Draw crosswalks at intersections from BEV feature maps")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// JSON run configuration; flags override its values.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Master seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate synthetic scenes into a directory.
    Gen {
        #[arg(long, visible_alias = "scenes", default_value_t = 10)]
        count: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Render clean oracle feature maps for a scene file or directory.
    Render {
        #[arg(long)]
        scene: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Corrupt feature maps (a grid file or a directory of them).
    Corrupt {
        #[arg(long)]
        maps: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// JSON corruption config; replaces the `corruption` section.
        #[arg(long, value_name = "PATH")]
        corruption: Option<PathBuf>,
    },
    /// Draw crosswalks for a scene file or directory.
    Infer {
        #[arg(long)]
        scene: PathBuf,
        #[arg(long)]
        maps: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        lambda_i: Option<f64>,
        #[arg(long, value_parser = parse_policy)]
        policy: Option<CandidatePolicy>,
    },
    /// Training losses between predicted and ground-truth maps.
    Loss {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        gt: PathBuf,
        #[arg(long)]
        lambda_align: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Score predictions against scene ground truth.
    Eval {
        #[arg(long)]
        scene: PathBuf,
        #[arg(long)]
        preds: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run an ablation table on generated scenes.
    Ablate {
        #[arg(long, default_value = "table2")]
        suite: String,
        #[arg(long, default_value_t = 200)]
        scenes: usize,
        #[arg(long)]
        lambda_i: Option<f64>,
        #[arg(long, value_name = "PATH")]
        corruption: Option<PathBuf>,
        /// Grid-search lambda_i on held-out scenes first.
        #[arg(long)]
        calibrate: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Export one channel of a grid file as a binary graymap.
    ExportPgm {
        #[arg(long)]
        maps: PathBuf,
        #[arg(long, default_value = "seg")]
        channel: String,
        /// Value mapped to white; defaults to 30 for dt and 1 otherwise.
        #[arg(long)]
        scale: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn parse_policy(s: &str) -> Result<CandidatePolicy, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string()))
        .map_err(|_| "expected one of full, no_offsets, no_centerline, perpendicular_only".to_string())
}

/// Runs the CLI on `args` (including the program name).
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match commands::execute(cli) {
        Ok(()) => EXIT_OK,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            EXIT_USAGE
        }
        Err(Failure::Data(e)) => {
            eprintln!("error: {e:#}");
            EXIT_DATA
        }
    }
}
