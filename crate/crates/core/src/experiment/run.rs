use std::fs;
use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiment::config::{Environment, ExperimentConfig, LearnerKind};
use crate::game::{Player, StochasticGame, StrategyProfile};
use crate::learning::opponent::{OpponentModel, OpponentModelMethod};
use crate::learning::{
    rollout, run, IndependentLearners, InferenceAgent, JointController, Learner, MarginalQTable, NashQLearner,
    PartialInfoAgent, RandomAgent, RunOptions, RunOutput,
};
use crate::rng::{derive_seed, rng_from_seed, SeedStreams, EVAL_STREAM};
use crate::verify::{
    convergence_metric, reconstruct_full_q, certify_run, CertificateDocument, Fingerprint,
    DEFAULT_RECONSTRUCT_MAX_ITER, DEFAULT_RECONSTRUCT_TOL,
};

/// Fraction of the trace averaged for the late reward.
pub const LATE_FRACTION: f64 = 0.1;

enum Controller {
    Independent(IndependentLearners),
    Nash(NashQLearner),
}

impl Controller {
    fn as_dyn(&mut self) -> &mut dyn JointController {
        match self {
            Controller::Independent(c) => c,
            Controller::Nash(c) => c,
        }
    }

    fn opponent_models(&self) -> [Option<OpponentModel>; 2] {
        match self {
            Controller::Independent(c) => Player::BOTH.map(|p| c.agent(p).opponent_model()),
            Controller::Nash(_) => [None, None],
        }
    }
}

fn build_controller(cfg: &ExperimentConfig, env: &Environment, players: [crate::rng::GameRng; 2]) -> Result<Controller> {
    let game = &env.game;
    if cfg.learners == [LearnerKind::FullInfo; 2] {
        return Ok(Controller::Nash(NashQLearner::new(game, cfg.schedule, cfg.selector.build(), players)?));
    }
    let shared = Arc::new(game.clone());
    let [r1, r2] = players;
    let mut agents = Vec::with_capacity(2);
    for (p, rng) in Player::BOTH.into_iter().zip([r1, r2]) {
        let i = p.index();
        let agent: Box<dyn Learner> = match cfg.learners[i] {
            LearnerKind::PartialInfo => Box::new(PartialInfoAgent::new(
                env.views[i].n_obs(game.n_states()),
                game.n_actions(p),
                game.gamma(p),
                cfg.schedule,
                cfg.tie_tol,
                rng,
            )),
            LearnerKind::Fictitious => Box::new(InferenceAgent::new(
                p,
                shared.clone(),
                OpponentModelMethod::EmpiricalFrequency,
                cfg.schedule,
                cfg.tie_tol,
                rng,
            )?),
            LearnerKind::Inference => Box::new(
                InferenceAgent::new(p, shared.clone(), OpponentModelMethod::EmFilter, cfg.schedule, cfg.tie_tol, rng)
                    .map_err(|e| match e {
                        Error::Config { message, .. } => Error::config(format!("learners[{i}]"), message),
                        other => other,
                    })?,
            ),
            LearnerKind::Random => Box::new(RandomAgent::new(game.n_actions(p), rng)),
            LearnerKind::FullInfo => unreachable!("pairing validated"),
        };
        agents.push(agent);
    }
    let a2 = agents.pop().expect("two agents");
    let a1 = agents.pop().expect("two agents");
    Ok(Controller::Independent(IndependentLearners::new([a1, a2], env.views.clone(), game)?))
}

/// Greedy evaluation after training.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvaluationSummary {
    pub rollouts: u64,
    /// Rollouts in which both players reach their targets on the same step
    /// with no collision on the way (joint return 20).
    pub successes: u64,
    pub success_rate: f64,
    pub mean_joint_return: f64,
}

/// Headline numbers of one run, written as `summary.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub learners: [LearnerKind; 2],
    pub seed: u64,
    pub steps: u64,
    pub episodes: u64,
    pub capped_episodes: u64,
    pub certified: bool,
    pub gap_1: f64,
    pub gap_2: f64,
    /// Convergence metric at the last checkpoint, per player.
    pub final_metric: [Option<f64>; 2],
    pub late_mean_reward: [f64; 2],
    pub peak_abs_q: [f64; 2],
    pub value_bound: [f64; 2],
    pub within_value_bound: bool,
    pub evaluation: Option<EvaluationSummary>,
}

/// Learned strategies and tables, written as `tables.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TablesDocument {
    pub strategies: StrategyProfile,
    /// Marginal tables over full states; absent for random players.
    pub marginal_q: [Option<MarginalQTable>; 2],
    #[serde(default)]
    pub opponent_models: [Option<OpponentModel>; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CheckpointRow {
    pub t: u64,
    pub episode: u64,
    pub metric_1: Option<f64>,
    pub metric_2: Option<f64>,
}

/// Everything a run produces, before it is written anywhere.
#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub resolved: ExperimentConfig,
    pub game: StochasticGame,
    pub output: RunOutput,
    pub checkpoint_metrics: Vec<CheckpointRow>,
    pub certificate: CertificateDocument,
    pub tables: TablesDocument,
    pub summary: RunSummary,
}

impl ExperimentResult {
    pub fn summary_line(&self) -> String {
        let s = &self.summary;
        let mut line = format!(
            "{} steps, gaps {:.3e}/{:.3e} at tol {}: {}",
            s.steps,
            s.gap_1,
            s.gap_2,
            self.certificate.certificate.tolerance,
            if s.certified { "certified" } else { "NOT certified" }
        );
        if let Some(e) = &s.evaluation {
            line.push_str(&format!(", evaluation {}/{} successes", e.successes, e.rollouts));
        }
        line
    }
}

/// Metric per checkpoint against the reconstruction of the final profile.
fn checkpoint_metrics(game: &StochasticGame, output: &RunOutput) -> Result<Vec<CheckpointRow>> {
    if output.checkpoints.is_empty() {
        return Ok(Vec::new());
    }
    let recon = reconstruct_full_q(game, &output.final_profile, DEFAULT_RECONSTRUCT_TOL, DEFAULT_RECONSTRUCT_MAX_ITER)?;
    Ok(output
        .checkpoints
        .iter()
        .map(|c| {
            let m = |p: Player| {
                c.tables[p.index()]
                    .as_ref()
                    .map(|t| convergence_metric(t, &recon, &c.profile, p))
            };
            CheckpointRow { t: c.t, episode: c.episode, metric_1: m(Player::One), metric_2: m(Player::Two) }
        })
        .collect())
}

/// Run one experiment in memory.
pub fn execute(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    cfg.validate()?;
    let env = cfg.environment.build()?;
    let resolved = cfg.resolved(&env);
    let game = &env.game;
    let SeedStreams { env: mut env_rng, players } = SeedStreams::new(cfg.seed);
    let mut controller = build_controller(cfg, &env, players)?;
    let opts = RunOptions {
        horizon: cfg.horizon,
        exploration: cfg.exploration.resolve(cfg.horizon.count()),
        checkpoint_every: resolved.checkpoint_every.expect("resolved"),
        initial_state: resolved.initial_state.expect("resolved"),
        max_episode_len: resolved.max_episode_len.expect("resolved"),
        record_trace: true,
    };
    let output = run(game, controller.as_dyn(), &mut env_rng, opts)?;

    let evaluation = if cfg.evaluation_rollouts > 0 {
        let mut eval_rng = rng_from_seed(cfg.seed, EVAL_STREAM);
        let (mut successes, mut total) = (0, 0.0);
        for _ in 0..cfg.evaluation_rollouts {
            let r = rollout(game, controller.as_dyn(), &mut eval_rng, opts.initial_state, opts.max_episode_len, 0.0)?;
            let joint = r.return_1 + r.return_2;
            total += joint;
            successes += u64::from(env.gridworld.is_some() && r.terminated && (joint - 20.0).abs() < 1e-9);
        }
        let n = cfg.evaluation_rollouts;
        Some(EvaluationSummary {
            rollouts: n,
            successes,
            success_rate: successes as f64 / n as f64,
            mean_joint_return: total / n as f64,
        })
    } else {
        None
    };

    let fingerprint = Fingerprint {
        game_sha256: game.fingerprint(),
        seed: cfg.seed,
        schedule: serde_json::to_string(&cfg.schedule)?,
    };
    let certificate = certify_run(game, &output.final_profile, &output.final_tables, cfg.verify_tol, fingerprint)
        .map_err(|e| match e {
            Error::Numerical(m) => Error::Numerical(format!("certifying final profile: {m}")),
            other => other,
        })?;
    let checkpoint_metrics = checkpoint_metrics(game, &output)?;
    let final_metric = checkpoint_metrics.last().map_or([None, None], |c| [c.metric_1, c.metric_2]);
    let value_bound = Player::BOTH.map(|p| game.value_bound(p));
    let summary = RunSummary {
        learners: cfg.learners,
        seed: cfg.seed,
        steps: output.steps,
        episodes: output.episodes.len() as u64,
        capped_episodes: output.capped_episodes,
        certified: certificate.certificate.passed,
        gap_1: certificate.certificate.gap_1,
        gap_2: certificate.certificate.gap_2,
        final_metric,
        late_mean_reward: output.late_mean_reward(LATE_FRACTION),
        peak_abs_q: output.peak_abs_q,
        value_bound,
        within_value_bound: (0..2).all(|i| output.peak_abs_q[i] <= value_bound[i] + 1e-9),
        evaluation,
    };
    let tables = TablesDocument {
        strategies: output.final_profile.clone(),
        marginal_q: output.final_tables.clone(),
        opponent_models: controller.opponent_models(),
    };
    Ok(ExperimentResult { resolved, game: env.game, output, checkpoint_metrics, certificate, tables, summary })
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(std::io::Error::from)?;
    for row in rows {
        w.serialize(row).map_err(std::io::Error::from)?;
    }
    w.flush()?;
    Ok(())
}

/// Artifact file names inside an output directory.
pub mod artifacts {
    pub const CONFIG: &str = "config.resolved.json";
    pub const TRACE: &str = "trace.csv";
    pub const CHECKPOINTS: &str = "checkpoints.csv";
    pub const EPISODES: &str = "episodes.csv";
    pub const CERTIFICATE: &str = "certificate.json";
    pub const TABLES: &str = "tables.json";
    pub const SUMMARY: &str = "summary.json";
}

impl ExperimentResult {
    pub fn write(&self, out_dir: &Path) -> Result<()> {
        fs::create_dir_all(out_dir)?;
        write_json(&out_dir.join(artifacts::CONFIG), &self.resolved)?;
        write_csv(&out_dir.join(artifacts::TRACE), &self.output.trace)?;
        write_csv(&out_dir.join(artifacts::CHECKPOINTS), &self.checkpoint_metrics)?;
        if !self.output.episodes.is_empty() {
            write_csv(&out_dir.join(artifacts::EPISODES), &self.output.episodes)?;
        }
        write_json(&out_dir.join(artifacts::CERTIFICATE), &self.certificate)?;
        write_json(&out_dir.join(artifacts::TABLES), &self.tables)?;
        write_json(&out_dir.join(artifacts::SUMMARY), &self.summary)?;
        Ok(())
    }
}

/// Run and write every artifact to `out_dir`.
pub fn run_experiment(cfg: &ExperimentConfig, out_dir: &Path) -> Result<ExperimentResult> {
    let result = execute(cfg)?;
    result.write(out_dir)?;
    Ok(result)
}

/// Mean and sample standard deviation; the deviation is absent for a single value.
fn mean_sd(xs: &[f64]) -> (f64, Option<f64>) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, None);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, Some(var.sqrt()))
}

/// One row of the comparison table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub label: String,
    pub learner_1: LearnerKind,
    pub learner_2: LearnerKind,
    pub n_seeds: u64,
    pub certified_runs: u64,
    pub gap_1_mean: f64,
    pub gap_1_sd: Option<f64>,
    pub gap_2_mean: f64,
    pub gap_2_sd: Option<f64>,
    pub metric_1_mean: Option<f64>,
    pub metric_1_sd: Option<f64>,
    pub metric_2_mean: Option<f64>,
    pub metric_2_sd: Option<f64>,
    pub late_reward_1_mean: f64,
    pub late_reward_1_sd: Option<f64>,
    pub late_reward_2_mean: f64,
    pub late_reward_2_sd: Option<f64>,
    pub wall_clock_s: f64,
}

pub const COMPARISON_FILE: &str = "comparison.csv";

/// Run every labeled config on `n_seeds` seeds in parallel and tabulate.
/// Run `i` of a config uses seed `derive_seed(config.seed, i)`.
pub fn compare_learners(configs: &[(String, ExperimentConfig)], n_seeds: u64, out_dir: Option<&Path>) -> Result<Vec<ComparisonRow>> {
    if configs.is_empty() {
        return Err(Error::config("configs", "nothing to compare"));
    }
    if n_seeds == 0 {
        return Err(Error::config("seeds", "must be at least 1"));
    }
    for (label, c) in &configs[1..] {
        if c.environment != configs[0].1.environment {
            return Err(Error::config(format!("{label}.environment"), "compared configs must share one environment"));
        }
    }
    let rows = configs
        .iter()
        .map(|(label, base)| {
            let clock = Instant::now();
            let runs: Vec<RunSummary> = (0..n_seeds)
                .into_par_iter()
                .map(|i| {
                    let mut cfg = base.clone();
                    cfg.seed = derive_seed(base.seed, i);
                    execute(&cfg).map(|r| r.summary)
                })
                .collect::<Result<_>>()?;
            let wall = clock.elapsed().as_secs_f64();
            let col = |f: &dyn Fn(&RunSummary) -> f64| mean_sd(&runs.iter().map(f).collect::<Vec<_>>());
            let opt_col = |p: usize| {
                let xs: Option<Vec<f64>> = runs.iter().map(|r| r.final_metric[p]).collect();
                xs.map_or((None, None), |xs| {
                    let (m, sd) = mean_sd(&xs);
                    (Some(m), sd)
                })
            };
            let (gap_1_mean, gap_1_sd) = col(&|r| r.gap_1);
            let (gap_2_mean, gap_2_sd) = col(&|r| r.gap_2);
            let (metric_1_mean, metric_1_sd) = opt_col(0);
            let (metric_2_mean, metric_2_sd) = opt_col(1);
            let (late_reward_1_mean, late_reward_1_sd) = col(&|r| r.late_mean_reward[0]);
            let (late_reward_2_mean, late_reward_2_sd) = col(&|r| r.late_mean_reward[1]);
            Ok(ComparisonRow {
                label: label.clone(),
                learner_1: base.learners[0],
                learner_2: base.learners[1],
                n_seeds,
                certified_runs: runs.iter().filter(|r| r.certified).count() as u64,
                gap_1_mean,
                gap_1_sd,
                gap_2_mean,
                gap_2_sd,
                metric_1_mean,
                metric_1_sd,
                metric_2_mean,
                metric_2_sd,
                late_reward_1_mean,
                late_reward_1_sd,
                late_reward_2_mean,
                late_reward_2_sd,
                wall_clock_s: wall,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    if let Some(dir) = out_dir {
        fs::create_dir_all(dir)?;
        write_csv(&dir.join(COMPARISON_FILE), &rows)?;
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sample_sd() {
        assert_eq!(mean_sd(&[3.0]), (3.0, None));
        let (m, sd) = mean_sd(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((sd.unwrap() - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
    }
}
