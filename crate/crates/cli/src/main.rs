use std::io;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use convsales::bench;
use convsales::config::{BackendKind, RunConfig};
use convsales::pipeline::{self, PipelineError};

/// Conversational sales agents, simulated seekers and their evaluation.
#[derive(Parser)]
#[command(name = "convsales", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Run configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Overrides the configured seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Agent variant: csi, csi-no-profile or chatcrs.
    #[arg(long)]
    variant: Option<String>,
    /// Chat backend: live, scripted or null.
    #[arg(long)]
    backend: Option<String>,
    /// Output directory for reports and transcripts.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Raw review and metadata corpora to a filtered catalog snapshot.
    Ingest(Common),
    /// Builds seeker profiles from purchase histories.
    Profiles(Common),
    /// Runs simulated sales dialogues and writes the report.
    Eval(Common),
    /// Chat with an agent as the seeker.
    Chat {
        #[command(flatten)]
        common: Common,
        /// Budget as MIN,MAX used to classify a purchase.
        #[arg(long)]
        budget: Option<String>,
    },
    /// Writes the reference synthetic benchmark with recorded fixtures.
    Bench {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = bench::SEED)]
        seed: u64,
    },
}

fn absolute(p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        std::env::current_dir().map(|d| d.join(p)).unwrap_or_else(|_| p.to_path_buf())
    }
}

fn load(c: &Common) -> Result<RunConfig, PipelineError> {
    let mut cfg = RunConfig::load(&c.config)?;
    if let Some(seed) = c.seed {
        cfg.seed = seed;
    }
    if let Some(v) = &c.variant {
        cfg.variant = pipeline::variant_arg(v)?;
    }
    if let Some(b) = &c.backend {
        cfg.gateway.backend = BackendKind::parse(b).ok_or_else(|| {
            PipelineError::Usage(format!("unknown backend {b:?}; expected live, scripted or null"))
        })?;
    }
    if let Some(out) = &c.out {
        cfg.paths.out = absolute(out);
    }
    Ok(cfg)
}

fn fmt_rate(x: Option<f64>) -> String {
    x.map_or("undefined".to_string(), |v| format!("{v:.4}"))
}

fn run(cli: Cli) -> Result<(), PipelineError> {
    match cli.command {
        Command::Ingest(c) => {
            let s = pipeline::cmd_ingest(&load(&c)?)?;
            println!(
                "kept {} items and {} interactions after filtering; snapshot {}",
                s.stats.core_items,
                s.stats.core_interactions,
                s.snapshot.display()
            );
            println!("{}", serde_json::to_string_pretty(&s.stats).unwrap_or_default());
        }
        Command::Profiles(c) => {
            let s = pipeline::cmd_profiles(&load(&c)?)?;
            println!(
                "built {} profiles, wrote {}, skipped {} users; {}",
                s.built,
                s.written,
                s.skipped.len(),
                s.path.display()
            );
        }
        Command::Eval(c) => {
            let s = pipeline::cmd_eval(&load(&c)?)?;
            let r = &s.report;
            println!(
                "{}: {} episodes ({} errored), SR {}, SWR {}",
                r.variant,
                r.episodes,
                r.errored,
                fmt_rate(r.sr),
                fmt_rate(r.swr)
            );
            for f in &s.files {
                println!("wrote {}", f.display());
            }
        }
        Command::Chat { common, budget } => {
            let budget = match budget.as_deref() {
                Some(b) => Some(pipeline::parse_budget(b).ok_or_else(|| {
                    PipelineError::Usage(format!("bad budget {b:?}; expected MIN,MAX"))
                })?),
                None => None,
            };
            let cfg = load(&common)?;
            let backend = pipeline::make_backend(&cfg)?;
            let stdin = io::stdin();
            let t = pipeline::cmd_chat(&cfg, backend, budget, &mut stdin.lock(), &mut io::stdout())?;
            println!("outcome: {:?} after {} recommender turns", t.outcome, t.turn_count);
        }
        Command::Bench { out, seed } => {
            let files = bench::write_benchmark(&absolute(&out), seed)?;
            for (name, path) in &files.configs {
                println!("{name}: {}", path.display());
            }
            println!("fixtures: {}", files.fixtures.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env()
                .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("warn")),
        )
        .with_writer(io::stderr)
        .init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
