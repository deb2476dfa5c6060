use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use fieldpos::config::PipelineConfig;
use fieldpos::io::format_report_table;
use fieldpos::pipeline::{self, MatchFiles};

#[derive(Parser)]
#[command(name = "fieldpos", version, about = "Player positions from broadcast soccer video")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Configuration file of `key = value` lines.
    #[arg(long, short, global = true)]
    config: Option<PathBuf>,
    /// Overrides one configuration key; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    set: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic match dataset.
    Synth {
        #[arg(long, short)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Build the pose feature database.
    Builddb {
        #[arg(long, short)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Register edge images against a feature database.
    Register {
        #[arg(long)]
        db: PathBuf,
        /// Directory of frame_NNNNNN.pgm edge images.
        #[arg(long)]
        edges: PathBuf,
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Classify shots as main camera or other.
    Shots {
        #[arg(long)]
        homographies: PathBuf,
        #[arg(long)]
        shots: PathBuf,
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Project detections to field positions.
    Extract {
        #[arg(long)]
        detections: PathBuf,
        #[arg(long)]
        homographies: PathBuf,
        /// Shot classification; only main-camera frames are extracted.
        #[arg(long)]
        classification: Option<PathBuf>,
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Assign teams from colour features.
    Teams {
        #[arg(long)]
        positions: PathBuf,
        #[arg(long)]
        colors: PathBuf,
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Evaluate positions against ground truth.
    Eval {
        /// Positions file; repeat once per match.
        #[arg(long, required = true)]
        positions: Vec<PathBuf>,
        /// Ground truth file, one per --positions.
        #[arg(long, required = true)]
        gt: Vec<PathBuf>,
        /// Homography file, one per --positions when given.
        #[arg(long)]
        homographies: Vec<PathBuf>,
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Print the effective configuration.
    Config,
}

fn load_config(common: &Common) -> Result<PipelineConfig> {
    let mut cfg = PipelineConfig::default();
    if let Some(path) = &common.config {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        cfg.apply(&text).with_context(|| format!("in {}", path.display()))?;
    }
    for pair in &common.set {
        cfg.set_pair(pair)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<()> {
    let mut cfg = load_config(&cli.common)?;
    match cli.command {
        Command::Synth { out, seed } => {
            if let Some(s) = seed {
                cfg.synth_seed = s;
            }
            let s = pipeline::cmd_synth(&cfg, &out)?;
            println!("{} frames, {} detections, {} corrupted homographies", s.frames, s.detections, s.corrupted_homographies);
        }
        Command::Builddb { out, seed } => {
            if let Some(s) = seed {
                cfg.db_seed = s;
            }
            let s = pipeline::cmd_builddb(&cfg, &out)?;
            println!("{} poses requested, {} stored, {} excluded", s.requested, s.stored, s.excluded);
        }
        Command::Register { db, edges, out } => {
            let s = pipeline::cmd_register(&cfg, &db, &edges, &out)?;
            println!("{} of {} frames registered", s.registered, s.frames);
        }
        Command::Shots { homographies, shots, out } => {
            let rows = pipeline::cmd_shots(&cfg, &homographies, &shots, &out)?;
            let main = rows.iter().filter(|r| r.label == fieldpos::shots::ShotLabel::MainCamera).count();
            println!("{main} of {} shots are main camera", rows.len());
        }
        Command::Extract { detections, homographies, classification, out } => {
            let est = pipeline::cmd_extract(&cfg, &detections, &homographies, classification.as_deref(), &out)?;
            let kept = est.iter().filter(|e| e.kept).count();
            println!("{} frames, {kept} pass self-verification", est.len());
        }
        Command::Teams { positions, colors, out } => {
            let est = pipeline::cmd_teams(&cfg, &positions, &colors, &out)?;
            println!("labelled {} frames", est.len());
        }
        Command::Eval { positions, gt, homographies, out } => {
            if gt.len() != positions.len() {
                bail!("{} --positions but {} --gt", positions.len(), gt.len());
            }
            if !homographies.is_empty() && homographies.len() != positions.len() {
                bail!("{} --positions but {} --homographies", positions.len(), homographies.len());
            }
            let matches: Vec<MatchFiles> = positions
                .into_iter()
                .zip(gt)
                .enumerate()
                .map(|(i, (positions, gt))| MatchFiles { positions, gt, homographies: homographies.get(i).cloned() })
                .collect();
            let rows = pipeline::cmd_eval(&cfg, &matches, &out)?;
            print!("{}", format_report_table(&rows));
        }
        Command::Config => print!("{}", cfg.to_text()),
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
