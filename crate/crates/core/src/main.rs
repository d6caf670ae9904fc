use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};

use nashq::envs::{generate_random_game, RandomGameSpec};
use nashq::experiment::{compare_learners, run_experiment, ExperimentConfig, TablesDocument, COMPARISON_FILE};
use nashq::verify::{certify_run, Fingerprint, DEFAULT_VERIFY_TOL};
use nashq::{Error, StochasticGame};

#[derive(Parser)]
#[command(name = "nashq", version, about = "Learn and certify Nash equilibria of two-player stochastic games")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write its artifacts.
    Run {
        config: PathBuf,
        /// Output directory; overrides `output_dir` in the config.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Exit with status 4 if the final profile is not certified.
        #[arg(long)]
        require_pass: bool,
    },
    /// Run several configs on the same environment across seeds.
    Compare {
        #[arg(required = true)]
        configs: Vec<PathBuf>,
        #[arg(long, default_value_t = 1)]
        seeds: u64,
        #[arg(long, default_value = "compare-out")]
        out: PathBuf,
    },
    /// Certify saved strategies against a game.
    Verify {
        tables: PathBuf,
        game: PathBuf,
        #[arg(long, default_value_t = DEFAULT_VERIFY_TOL)]
        tol: f64,
        #[arg(long)]
        require_pass: bool,
        /// Write the certificate here instead of discarding it.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a random game from a spec file.
    GenGame {
        spec: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
}

const EXIT_CONFIG: u8 = 2;
const EXIT_SOLVER: u8 = 3;
const EXIT_NOT_CERTIFIED: u8 = 4;

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(Error::Solver(_) | Error::Numerical(_)) => EXIT_SOLVER,
        _ => EXIT_CONFIG,
    }
}

/// `Ok(true)` when the certificate passed or nobody asked.
fn dispatch(cli: Cli) -> anyhow::Result<bool> {
    match cli.command {
        Command::Run { config, out, require_pass } => {
            let cfg = ExperimentConfig::load(&config).with_context(|| format!("loading {}", config.display()))?;
            let dir = out.or_else(|| cfg.output_dir.clone()).unwrap_or_else(|| default_out(&config));
            let result = run_experiment(&cfg, &dir)?;
            println!("{} -> {}", result.summary_line(), dir.display());
            Ok(!require_pass || result.summary.certified)
        }
        Command::Compare { configs, seeds, out } => {
            let labeled = configs
                .iter()
                .map(|p| {
                    let cfg = ExperimentConfig::load(p).with_context(|| format!("loading {}", p.display()))?;
                    let label = p.file_stem().map_or_else(|| p.display().to_string(), |s| s.to_string_lossy().into_owned());
                    Ok((label, cfg))
                })
                .collect::<anyhow::Result<Vec<_>>>()?;
            let rows = compare_learners(&labeled, seeds, Some(&out))?;
            let certified: u64 = rows.iter().map(|r| r.certified_runs).sum();
            println!(
                "{} configs x {seeds} seeds, {certified} certified runs -> {}",
                rows.len(),
                out.join(COMPARISON_FILE).display()
            );
            Ok(true)
        }
        Command::Verify { tables, game, tol, require_pass, out } => {
            let doc: TablesDocument = serde_json::from_str(
                &std::fs::read_to_string(&tables).with_context(|| format!("reading {}", tables.display()))?,
            )
            .map_err(Error::from)
            .with_context(|| format!("parsing {}", tables.display()))?;
            let g = StochasticGame::load(&game).with_context(|| format!("loading {}", game.display()))?;
            let fp = Fingerprint { game_sha256: g.fingerprint(), seed: 0, schedule: String::new() };
            let cert = certify_run(&g, &doc.strategies, &doc.marginal_q, tol, fp)?;
            if let Some(path) = out {
                let mut text = serde_json::to_string_pretty(&cert).map_err(Error::from)?;
                text.push('\n');
                std::fs::write(&path, text).map_err(Error::from)?;
            }
            let c = cert.certificate;
            println!(
                "gaps {:.3e}/{:.3e} at tol {tol}: {}",
                c.gap_1,
                c.gap_2,
                if c.passed { "certified" } else { "NOT certified" }
            );
            Ok(!require_pass || c.passed)
        }
        Command::GenGame { spec, output } => {
            let text = std::fs::read_to_string(&spec).with_context(|| format!("reading {}", spec.display()))?;
            let spec: RandomGameSpec = serde_json::from_str(&text)
                .map_err(|e| Error::Config { field: "<document>".into(), message: e.to_string() })?;
            let g = generate_random_game(&spec)?;
            g.save(&output)?;
            println!("{} states, actions {:?} -> {}", g.n_states(), g.action_counts(), output.display());
            Ok(true)
        }
    }
}

fn default_out(config: &Path) -> PathBuf {
    let stem = config.file_stem().map_or_else(|| "run".into(), |s| s.to_string_lossy().into_owned());
    PathBuf::from(format!("{stem}-out"))
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_NOT_CERTIFIED),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
