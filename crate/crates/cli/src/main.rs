use std::ffi::OsString;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, CommandFactory, Parser, Subcommand};
use sha2::{Digest, Sha256};

mod commands;
mod config;

/// Synthetic motion-artefact datasets and SSIM-based quality evaluation.
#[derive(Debug, Parser)]
#[command(name = "ssimqa", version)]
struct Cli {
    /// key = value file supplying defaults for flags; flags on the command line win.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Cmd,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Apply a motion corruption to one image.
    #[command(args_override_self = true)]
    Corrupt(commands::CorruptArgs),
    /// Apply an intensity augmentation to one image.
    #[command(args_override_self = true)]
    Augment(commands::AugmentArgs),
    /// Mean SSIM between two images.
    #[command(args_override_self = true)]
    Ssim(commands::SsimArgs),
    /// Generate a labelled dataset.
    #[command(args_override_self = true)]
    Gen(commands::GenArgs),
    /// Regenerate one manifest row and check it against the stored image.
    #[command(args_override_self = true)]
    Replay(commands::ReplayArgs),
    /// Map SSIM values to classes, or add class labels to a manifest.
    #[command(args_override_self = true)]
    Bin(commands::BinArgs),
    /// Residual statistics and scatter data for predictions.
    #[command(name = "eval-regression", args_override_self = true)]
    EvalRegression(commands::EvalRegressionArgs),
    /// Per-class precision/recall/F1 and confusion matrices.
    #[command(name = "eval-classification", args_override_self = true)]
    EvalClassification(commands::EvalClassificationArgs),
    /// Agreement between predictions and expert ratings.
    #[command(args_override_self = true)]
    Agreement(commands::AgreementArgs),
    /// Write synthetic head-phantom volumes.
    #[command(args_override_self = true)]
    Phantom(commands::PhantomArgs),
}

/// Seed shared by every randomized subcommand.
#[derive(Debug, Args, Clone)]
pub struct SeedArg {
    /// Master seed; a fresh one is generated and printed when omitted.
    #[arg(long)]
    seed: Option<u64>,
}

impl SeedArg {
    pub fn resolve(&self) -> u64 {
        let seed = self.seed.unwrap_or_else(fresh_seed);
        eprintln!("seed: {seed}");
        seed
    }
}

fn fresh_seed() -> u64 {
    let nanos = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_nanos() as u64)
        .unwrap_or(0);
    ssimqa::rng::mix_seed(nanos, std::process::id() as u64)
}

#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Core(ssimqa::Error),
}

impl Failure {
    pub fn usage(msg: impl Into<String>) -> Self {
        Failure::Usage(msg.into())
    }

    fn exit_code(&self) -> u8 {
        match self {
            Failure::Core(e) if e.is_io() => 2,
            _ => 1,
        }
    }
}

impl From<ssimqa::Error> for Failure {
    fn from(e: ssimqa::Error) -> Self {
        Failure::Core(e)
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Usage(m) => f.write_str(m),
            // core errors already embed their source in the message
            Failure::Core(e) => write!(f, "{e}"),
        }
    }
}

fn parse(argv: Vec<OsString>) -> Result<Cli, clap::Error> {
    let cli = Cli::try_parse_from(&argv)?;
    let Some(path) = &cli.config else {
        return Ok(cli);
    };
    let entries = match config::load(path) {
        Ok(e) => e,
        Err(f) => return Err(Cli::command().error(clap::error::ErrorKind::Io, f.to_string())),
    };
    let name = subcommand_name(&cli.command);
    let root = Cli::command();
    let sub = root.find_subcommand(name).expect("parsed subcommand exists");
    let extra = config::to_args(&entries, sub)
        .map_err(|f| Cli::command().error(clap::error::ErrorKind::InvalidValue, f.to_string()))?;
    let at = argv
        .iter()
        .position(|a| a == name)
        .expect("subcommand name appears in argv");
    let mut layered = argv[..=at].to_vec();
    layered.extend(extra.into_iter().map(OsString::from));
    layered.extend_from_slice(&argv[at + 1..]);
    Cli::try_parse_from(layered)
}

fn subcommand_name(c: &Cmd) -> &'static str {
    match c {
        Cmd::Corrupt(_) => "corrupt",
        Cmd::Augment(_) => "augment",
        Cmd::Ssim(_) => "ssim",
        Cmd::Gen(_) => "gen",
        Cmd::Replay(_) => "replay",
        Cmd::Bin(_) => "bin",
        Cmd::EvalRegression(_) => "eval-regression",
        Cmd::EvalClassification(_) => "eval-classification",
        Cmd::Agreement(_) => "agreement",
        Cmd::Phantom(_) => "phantom",
    }
}

fn digest(cmd: &Cmd) -> String {
    Sha256::digest(format!("{cmd:?}").as_bytes())
        .iter()
        .take(8)
        .map(|b| format!("{b:02x}"))
        .collect()
}

fn run(cmd: Cmd) -> Result<(), Failure> {
    log::info!(
        "ssimqa {} {} config-digest={}",
        env!("CARGO_PKG_VERSION"),
        subcommand_name(&cmd),
        digest(&cmd)
    );
    match cmd {
        Cmd::Corrupt(a) => commands::corrupt(a),
        Cmd::Augment(a) => commands::augment(a),
        Cmd::Ssim(a) => commands::ssim(a),
        Cmd::Gen(a) => commands::gen(a),
        Cmd::Replay(a) => commands::replay(a),
        Cmd::Bin(a) => commands::bin(a),
        Cmd::EvalRegression(a) => commands::eval_regression(a),
        Cmd::EvalClassification(a) => commands::eval_classification(a),
        Cmd::Agreement(a) => commands::agreement(a),
        Cmd::Phantom(a) => commands::phantom(a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match parse(std::env::args_os().collect()) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                clap::error::ErrorKind::Io => ExitCode::from(2),
                _ => ExitCode::from(1),
            };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.exit_code())
        }
    }
}
