//! `guidecue`: generate, validate, analyze, report, score and serve sessions.
//!
//! Exit codes: 0 ok, 1 validation failure, 2 bad arguments, 3 I/O, 4 internal.
//! Failures also print one JSON object on stderr.

mod config;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::anyhow;
use clap::{Args, Parser, Subcommand};
use guidecue_core::analysis::{analyze, AnalysisConfig, AnalysisError, SessionAnalysis};
use guidecue_core::analytics::{render_report, session_report};
use guidecue_core::fixture::{generate, preset, FixtureSpec, PRESETS};
use guidecue_core::kinematics::KinematicsError;
use guidecue_core::scoring::{score_session, PracticePose, PracticePoseLine};
use guidecue_core::session::{
    load_manifest, load_session, read_jsonl, save_derived, scan_keypoints, write_jsonl, write_session, Artifact,
    LineReport, Session, SessionError,
};
use guidecue_replay::{ReplayServer, SessionStore};
use serde::Serialize;

use crate::config::{load_config, render_config};

const TRIGGERS_FILE: &str = "triggers.jsonl";
const SERIES_FILE: &str = "series.json";

#[derive(Parser)]
#[command(name = "guidecue", version, about = "Guide-dog handling analysis and replay")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// TOML configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one setting, e.g. `--set triggers.turn_threshold_deg=35`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl ConfigArgs {
    fn load(&self) -> Result<AnalysisConfig, Failure> {
        load_config(self.config.as_deref(), &self.overrides).map_err(Failure::args)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic session directory.
    Gen {
        /// Fixture spec (JSON).
        #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
        spec: Option<PathBuf>,
        /// Shipped fixture: hybrid1, hybrid2, room1 or room2.
        #[arg(long)]
        preset: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the spec of a shipped fixture as JSON.
    Spec { preset: String },
    /// Check a session directory and list every violation.
    Validate { dir: PathBuf },
    /// Compute angle series, command epochs and head-turn triggers.
    Analyze {
        dir: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Write report.json and print the distribution tables.
    Report {
        dir: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Write haptics.jsonl.
    Haptics {
        dir: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Score a recorded practice pose stream against the session.
    Score {
        dir: PathBuf,
        /// Practice poses, one `{"frame", "seq", "right_arm"}` object per line.
        #[arg(long)]
        practice: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Print the effective configuration as TOML.
    Config {
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Run the replay service.
    Serve {
        #[arg(long, num_args = 1.., required = true)]
        sessions: Vec<PathBuf>,
        #[arg(long, default_value = "127.0.0.1:8765")]
        addr: String,
        #[command(flatten)]
        config: ConfigArgs,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Validation = 1,
    Args = 2,
    Io = 3,
    Internal = 4,
}

impl Kind {
    fn name(self) -> &'static str {
        match self {
            Kind::Validation => "validation",
            Kind::Args => "bad_arguments",
            Kind::Io => "io",
            Kind::Internal => "internal",
        }
    }
}

#[derive(Debug)]
struct Failure {
    kind: Kind,
    error: anyhow::Error,
}

impl Failure {
    fn new(kind: Kind, error: impl Into<anyhow::Error>) -> Self {
        Self { kind, error: error.into() }
    }

    fn args(error: impl Into<anyhow::Error>) -> Self {
        Self::new(Kind::Args, error)
    }

    fn io(error: impl Into<anyhow::Error>) -> Self {
        Self::new(Kind::Io, error)
    }
}

impl From<SessionError> for Failure {
    fn from(e: SessionError) -> Self {
        let kind = match e {
            SessionError::MissingManifest(_) | SessionError::MissingKeypoints(_) | SessionError::Io { .. } => Kind::Io,
            _ => Kind::Validation,
        };
        Failure::new(kind, e)
    }
}

impl From<AnalysisError> for Failure {
    fn from(e: AnalysisError) -> Self {
        let kind = match e {
            AnalysisError::Kinematics(KinematicsError::NoMarkerEver) => Kind::Validation,
            _ => Kind::Internal,
        };
        Failure::new(kind, e)
    }
}

fn analyzed(dir: &Path, config: &ConfigArgs) -> Result<(Session, SessionAnalysis, AnalysisConfig), Failure> {
    let cfg = config.load()?;
    let session = load_session(dir)?;
    let analysis = analyze(&session, &cfg)?;
    Ok((session, analysis, cfg))
}

#[derive(Serialize)]
struct SeriesCache<'a> {
    session_id: &'a str,
    fps: f64,
    frame_count: usize,
    right_arm: &'a guidecue_core::kinematics::PoseSeries,
    right_yaw_smoothed: &'a guidecue_core::kinematics::AngleSeries,
    right_velocity: &'a guidecue_core::kinematics::VelocitySeries,
    left_forearm: &'a guidecue_core::kinematics::PoseSeries,
    dog_head: &'a guidecue_core::kinematics::AngleSeries,
    dog_back: &'a guidecue_core::kinematics::AngleSeries,
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Failure::new(Kind::Internal, e))?;
    fs::write(path, text + "\n").map_err(|e| Failure::io(anyhow!("writing {}: {e}", path.display())))
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Gen { spec, preset: name, out } => {
            let spec: FixtureSpec = match (spec, name) {
                (Some(path), _) => {
                    let text = fs::read_to_string(&path)
                        .map_err(|e| Failure::io(anyhow!("reading {}: {e}", path.display())))?;
                    serde_json::from_str(&text).map_err(|e| Failure::args(anyhow!("{}: {e}", path.display())))?
                }
                (None, Some(name)) => preset_spec(&name)?,
                (None, None) => return Err(Failure::args(anyhow!("either --spec or --preset is required"))),
            };
            let session = generate(&spec).map_err(Failure::args)?;
            write_session(&out, &session)?;
            println!(
                "wrote {} ({} frames, {} planted epochs) to {}",
                spec.session_id,
                spec.frame_count,
                spec.planted_epochs.len(),
                out.display()
            );
        }
        Command::Spec { preset: name } => {
            let spec = preset_spec(&name)?;
            println!("{}", serde_json::to_string_pretty(&spec).expect("spec serializes"));
        }
        Command::Validate { dir } => {
            let manifest = load_manifest(&dir)?;
            let reports = scan_keypoints(&dir, &manifest)?;
            let mut problems = 0usize;
            for r in &reports {
                match r {
                    LineReport::Malformed { line, detail } => {
                        problems += 1;
                        println!("line {line}: malformed record: {detail}");
                    }
                    LineReport::NonMonotonic { line, previous, found } => {
                        problems += 1;
                        println!("line {line}: frame_index {found} does not follow {previous}");
                    }
                    LineReport::Invalid { line, frame_index, violations } => {
                        for v in violations {
                            problems += 1;
                            println!("line {line} (frame {frame_index}): {v}");
                        }
                    }
                }
            }
            if problems == 0 {
                // Annotations and cross-file checks.
                load_session(&dir)?;
                println!("{}: ok", dir.display());
            } else {
                return Err(Failure::new(Kind::Validation, anyhow!("{problems} violation(s) in {}", dir.display())));
            }
        }
        Command::Analyze { dir, config } => {
            let (_, a, _) = analyzed(&dir, &config)?;
            save_derived(&dir, Artifact::Epochs(&a.epochs))?;
            write_jsonl(&dir.join(TRIGGERS_FILE), &a.triggers)?;
            write_json(
                &dir.join(SERIES_FILE),
                &SeriesCache {
                    session_id: &a.session_id,
                    fps: a.fps,
                    frame_count: a.frame_count,
                    right_arm: &a.right_arm,
                    right_yaw_smoothed: &a.right_yaw_smoothed,
                    right_velocity: &a.right_velocity,
                    left_forearm: &a.left_forearm,
                    dog_head: &a.dog_head,
                    dog_back: &a.dog_back,
                },
            )?;
            println!("epochs: {}", a.epochs.len());
            println!("triggers: {}", a.triggers.len());
        }
        Command::Report { dir, config } => {
            let (session, a, cfg) = analyzed(&dir, &config)?;
            let report = session_report(&session.manifest.dataset_name, &a, &cfg.analytics);
            save_derived(&dir, Artifact::Report(&report))?;
            print!("{}", render_report(&report));
        }
        Command::Haptics { dir, config } => {
            let (_, a, _) = analyzed(&dir, &config)?;
            save_derived(&dir, Artifact::Haptics(&a.haptic_track))?;
            let right = a.haptic_track.iter().filter(|e| e.hand == guidecue_core::session::ArmSide::Right).count();
            println!("haptic events: {} ({} right, {} left)", a.haptic_track.len(), right, a.haptic_track.len() - right);
        }
        Command::Score { dir, practice, config } => {
            let (_, a, cfg) = analyzed(&dir, &config)?;
            let lines: Vec<PracticePoseLine> = read_jsonl(&practice)?;
            let poses: Vec<PracticePose> = lines.into_iter().map(PracticePose::from).collect();
            let scores = score_session(&a, &poses, &cfg.kinematics, &cfg.segmentation, &cfg.scoring);
            save_derived(&dir, Artifact::Scores(&scores))?;
            let hits = scores.iter().filter(|s| !s.is_miss()).count();
            let mean = if scores.is_empty() { 0.0 } else { scores.iter().map(|s| s.composite).sum::<f64>() / scores.len() as f64 };
            println!("scored {} epochs: {hits} matched, {} missed, mean composite {mean:.3}", scores.len(), scores.len() - hits);
        }
        Command::Config { config } => {
            print!("{}", render_config(&config.load()?));
        }
        Command::Serve { sessions, addr, config } => {
            let cfg = config.load()?;
            let mut store = SessionStore::new(cfg);
            for dir in &sessions {
                let session = load_session(dir)?;
                store.insert(session).map_err(|e| Failure::new(Kind::Internal, e))?;
            }
            let runtime = tokio::runtime::Runtime::new().map_err(|e| Failure::new(Kind::Internal, e))?;
            runtime.block_on(async {
                let server = ReplayServer::bind(store, addr.as_str()).await.map_err(Failure::io)?;
                let local = server.local_addr().map_err(Failure::io)?;
                println!("listening on ws://{local}");
                tokio::select! {
                    r = server.run() => r.map_err(Failure::io),
                    _ = tokio::signal::ctrl_c() => Ok(()),
                }
            })?;
        }
    }
    Ok(())
}

fn preset_spec(name: &str) -> Result<FixtureSpec, Failure> {
    preset(name).ok_or_else(|| {
        let names: Vec<&str> = PRESETS.iter().map(|(n, _, _)| *n).collect();
        Failure::args(anyhow!("unknown preset {name:?}; expected one of {}", names.join(", ")))
    })
}

fn report_failure(kind: Kind, detail: &str) -> ExitCode {
    let line = serde_json::json!({"error": kind.name(), "exit_code": kind as u8, "detail": detail});
    eprintln!("{line}");
    ExitCode::from(kind as u8)
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("warn")),
        )
        .with_writer(std::io::stderr)
        .init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return report_failure(Kind::Args, &e.kind().to_string());
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => report_failure(f.kind, &format!("{:#}", f.error)),
    }
}
