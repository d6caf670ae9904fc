//! The sequential learning loop shared by every learner pairing.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::equilibrium::{SelectorKind, DEFAULT_TIE_TOL};
use crate::error::{Error, Result};
use crate::game::{Player, StochasticGame, StrategyProfile, TrajectoryRecord};
use crate::learning::agent::{IndependentLearners, JointController, Learner, StateView};
use crate::learning::full_info::NashQLearner;
use crate::learning::inference::InferenceAgent;
use crate::learning::opponent::{OpponentModel, OpponentModelMethod};
use crate::learning::partial_info::PartialInfoAgent;
use crate::learning::schedule::{Exploration, ExplorationSchedule, LearningRateSchedule};
use crate::learning::tables::MarginalQTable;
use crate::rng::{GameRng, SeedStreams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Horizon {
    Steps(u64),
    Episodes(u64),
}

impl Horizon {
    pub fn count(&self) -> u64 {
        match *self {
            Horizon::Steps(n) | Horizon::Episodes(n) => n,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    pub horizon: Horizon,
    /// Indexed by step for continuing runs and by episode for episodic runs.
    pub exploration: Exploration,
    /// Snapshot cadence in steps or episodes; 0 disables snapshots.
    pub checkpoint_every: u64,
    pub initial_state: usize,
    pub max_episode_len: usize,
    pub record_trace: bool,
}

/// One row of the per-step trace. Field order is the CSV column order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceRow {
    pub t: u64,
    pub episode: u64,
    pub s: usize,
    pub a1: usize,
    pub a2: usize,
    pub r1: f64,
    pub r2: f64,
    pub s_next: usize,
    pub alpha_1: f64,
    pub alpha_2: f64,
    pub epsilon: f64,
    pub delta_1: f64,
    pub delta_2: f64,
    /// Running maximum of `|Q|` over the player's table.
    pub qmax_1: f64,
    pub qmax_2: f64,
}

/// Learner state copied at a checkpoint boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    /// Steps completed.
    pub t: u64,
    /// Episodes completed (0 for continuing runs).
    pub episode: u64,
    pub tables: [Option<MarginalQTable>; 2],
    pub profile: StrategyProfile,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EpisodeSummary {
    pub episode: u64,
    pub steps: u64,
    pub return_1: f64,
    pub return_2: f64,
    /// Ended in a terminal state rather than at the length cap.
    pub terminated: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub trace: Vec<TraceRow>,
    pub checkpoints: Vec<Checkpoint>,
    pub episodes: Vec<EpisodeSummary>,
    pub final_profile: StrategyProfile,
    pub final_tables: [Option<MarginalQTable>; 2],
    pub peak_abs_q: [f64; 2],
    pub steps: u64,
    pub capped_episodes: u64,
}

impl RunOutput {
    /// Mean reward per step over the last `fraction` of the trace.
    pub fn late_mean_reward(&self, fraction: f64) -> [f64; 2] {
        let n = self.trace.len();
        if n == 0 {
            return [0.0; 2];
        }
        let k = ((n as f64 * fraction).ceil() as usize).clamp(1, n);
        let tail = &self.trace[n - k..];
        [
            tail.iter().map(|r| r.r1).sum::<f64>() / k as f64,
            tail.iter().map(|r| r.r2).sum::<f64>() / k as f64,
        ]
    }
}

fn checkpoint(game: &StochasticGame, c: &dyn JointController, t: u64, episode: u64) -> Result<Checkpoint> {
    Ok(Checkpoint { t, episode, tables: c.marginal_tables(game)?, profile: c.profile(game)? })
}

struct Loop<'a> {
    game: &'a StochasticGame,
    controller: &'a mut dyn JointController,
    env: &'a mut GameRng,
    opts: RunOptions,
    trace: Vec<TraceRow>,
    t: u64,
}

impl Loop<'_> {
    /// One step from `s`; returns the record and whether the successor is terminal.
    fn step(&mut self, s: usize, epsilon: f64, episode: u64) -> Result<(TrajectoryRecord, bool)> {
        let [a1, a2] = self.controller.act(s, epsilon)?;
        let s_next = self.game.sample_next(s, a1, a2, self.env);
        let rec = TrajectoryRecord {
            t: self.t,
            s,
            a1,
            a2,
            r1: self.game.reward(Player::One, s, a1, a2),
            r2: self.game.reward(Player::Two, s, a1, a2),
            s_next,
        };
        let terminal = self.game.is_terminal(s_next);
        let stats = self.controller.observe(self.t, &rec, terminal)?;
        if self.opts.record_trace {
            let peak = self.controller.peak_abs_q();
            self.trace.push(TraceRow {
                t: self.t,
                episode,
                s,
                a1,
                a2,
                r1: rec.r1,
                r2: rec.r2,
                s_next,
                alpha_1: stats[0].alpha,
                alpha_2: stats[1].alpha,
                epsilon,
                delta_1: stats[0].delta,
                delta_2: stats[1].delta,
                qmax_1: peak[0],
                qmax_2: peak[1],
            });
        }
        self.t += 1;
        Ok((rec, terminal))
    }
}

/// Run the controller on `game`. The environment draws successors from `env`;
/// the controller draws actions from its own streams.
pub fn run(
    game: &StochasticGame,
    controller: &mut dyn JointController,
    env: &mut GameRng,
    opts: RunOptions,
) -> Result<RunOutput> {
    if opts.horizon.count() == 0 {
        return Err(Error::config("horizon", "must be at least 1"));
    }
    if opts.initial_state >= game.n_states() || game.is_terminal(opts.initial_state) {
        return Err(Error::config("initial_state", format!("{} is not a live state", opts.initial_state)));
    }
    let mut checkpoints = Vec::new();
    let mut episodes = Vec::new();
    let mut capped = 0;
    let mut lp = Loop { game, controller, env, opts, trace: Vec::new(), t: 0 };
    match opts.horizon {
        Horizon::Steps(n) => {
            let mut s = opts.initial_state;
            for t in 0..n {
                let eps = opts.exploration.epsilon(t);
                let (rec, terminal) = lp.step(s, eps, 0)?;
                s = if terminal { opts.initial_state } else { rec.s_next };
                if opts.checkpoint_every > 0 && (t + 1) % opts.checkpoint_every == 0 {
                    checkpoints.push(checkpoint(game, lp.controller, t + 1, 0)?);
                }
            }
        }
        Horizon::Episodes(n) => {
            if opts.max_episode_len == 0 {
                return Err(Error::config("max_episode_len", "must be positive"));
            }
            for e in 0..n {
                let eps = opts.exploration.epsilon(e);
                let summary = episode(&mut lp, e, eps)?;
                capped += u64::from(!summary.terminated);
                episodes.push(summary);
                if opts.checkpoint_every > 0 && (e + 1) % opts.checkpoint_every == 0 {
                    checkpoints.push(checkpoint(game, lp.controller, lp.t, e + 1)?);
                }
            }
        }
    }
    Ok(RunOutput {
        final_profile: lp.controller.profile(game)?,
        final_tables: lp.controller.marginal_tables(game)?,
        peak_abs_q: lp.controller.peak_abs_q(),
        steps: lp.t,
        trace: lp.trace,
        checkpoints,
        episodes,
        capped_episodes: capped,
    })
}

fn episode(lp: &mut Loop<'_>, e: u64, eps: f64) -> Result<EpisodeSummary> {
    let mut s = lp.opts.initial_state;
    let mut ret = [0.0; 2];
    let start = lp.t;
    for _ in 0..lp.opts.max_episode_len {
        let (rec, terminal) = lp.step(s, eps, e)?;
        ret[0] += rec.r1;
        ret[1] += rec.r2;
        if terminal {
            return Ok(EpisodeSummary { episode: e, steps: lp.t - start, return_1: ret[0], return_2: ret[1], terminated: true });
        }
        s = rec.s_next;
    }
    Ok(EpisodeSummary { episode: e, steps: lp.t - start, return_1: ret[0], return_2: ret[1], terminated: false })
}

/// Play without learning: actions from the controller at `epsilon`, no updates.
pub fn rollout(
    game: &StochasticGame,
    controller: &mut dyn JointController,
    env: &mut GameRng,
    initial_state: usize,
    max_len: usize,
    epsilon: f64,
) -> Result<EpisodeSummary> {
    let mut s = initial_state;
    let mut ret = [0.0; 2];
    for k in 0..max_len {
        let [a1, a2] = controller.act(s, epsilon)?;
        ret[0] += game.reward(Player::One, s, a1, a2);
        ret[1] += game.reward(Player::Two, s, a1, a2);
        s = game.sample_next(s, a1, a2, env);
        if game.is_terminal(s) {
            return Ok(EpisodeSummary { episode: 0, steps: k as u64 + 1, return_1: ret[0], return_2: ret[1], terminated: true });
        }
    }
    Ok(EpisodeSummary { episode: 0, steps: max_len as u64, return_1: ret[0], return_2: ret[1], terminated: false })
}

/// Knobs shared by the convenience entry points below.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LearnerSettings {
    pub schedule: LearningRateSchedule,
    pub exploration: ExplorationSchedule,
    pub tie_tol: f64,
    pub checkpoint_every: u64,
    pub initial_state: usize,
    pub record_trace: bool,
}

impl Default for LearnerSettings {
    fn default() -> Self {
        LearnerSettings {
            schedule: LearningRateSchedule::default(),
            exploration: ExplorationSchedule::default(),
            tie_tol: DEFAULT_TIE_TOL,
            checkpoint_every: 0,
            initial_state: 0,
            record_trace: true,
        }
    }
}

impl LearnerSettings {
    fn options(&self, n_steps: u64) -> RunOptions {
        RunOptions {
            horizon: Horizon::Steps(n_steps),
            exploration: self.exploration.resolve(n_steps),
            checkpoint_every: self.checkpoint_every,
            initial_state: self.initial_state,
            max_episode_len: 0,
            record_trace: self.record_trace,
        }
    }

    fn validate(&self) -> Result<()> {
        self.schedule.validate()?;
        self.exploration.validate()?;
        if !(self.tie_tol >= 0.0) {
            return Err(Error::config("tie_tol", "must be >= 0"));
        }
        Ok(())
    }
}

pub fn partial_info_agent(
    game: &StochasticGame,
    player: Player,
    view: &StateView,
    settings: &LearnerSettings,
    rng: GameRng,
) -> PartialInfoAgent {
    PartialInfoAgent::new(
        view.n_obs(game.n_states()),
        game.n_actions(player),
        game.gamma(player),
        settings.schedule,
        settings.tie_tol,
        rng,
    )
}

/// Both players learn marginal tables with partial information.
pub fn run_partial_info(game: &StochasticGame, settings: &LearnerSettings, n_steps: u64, seed: u64) -> Result<RunOutput> {
    settings.validate()?;
    let SeedStreams { mut env, players: [r1, r2] } = SeedStreams::new(seed);
    let agents: [Box<dyn Learner>; 2] = [
        Box::new(partial_info_agent(game, Player::One, &StateView::Full, settings, r1)),
        Box::new(partial_info_agent(game, Player::Two, &StateView::Full, settings, r2)),
    ];
    let mut c = IndependentLearners::new(agents, [StateView::Full, StateView::Full], game)?;
    run(game, &mut c, &mut env, settings.options(n_steps))
}

/// Nash-Q on joint tables with a shared equilibrium selection.
pub fn run_full_info(
    game: &StochasticGame,
    settings: &LearnerSettings,
    selector: SelectorKind,
    n_steps: u64,
    seed: u64,
) -> Result<(RunOutput, NashQLearner)> {
    settings.validate()?;
    let SeedStreams { mut env, players } = SeedStreams::new(seed);
    let mut c = NashQLearner::new(game, settings.schedule, selector.build(), players)?;
    let out = run(game, &mut c, &mut env, settings.options(n_steps))?;
    Ok((out, c))
}

#[derive(Debug, Clone, PartialEq)]
pub struct InferenceRun {
    pub output: RunOutput,
    /// Player 1's final opponent model.
    pub model: OpponentModel,
}

/// Player 1 learns with an opponent model; player 2 runs the partial-information learner.
pub fn run_inference_learner(
    game: &StochasticGame,
    method: OpponentModelMethod,
    settings: &LearnerSettings,
    n_steps: u64,
    seed: u64,
) -> Result<InferenceRun> {
    settings.validate()?;
    let SeedStreams { mut env, players: [r1, r2] } = SeedStreams::new(seed);
    let shared = Arc::new(game.clone());
    let agents: [Box<dyn Learner>; 2] = [
        Box::new(InferenceAgent::new(Player::One, shared, method, settings.schedule, settings.tie_tol, r1)?),
        Box::new(partial_info_agent(game, Player::Two, &StateView::Full, settings, r2)),
    ];
    let mut c = IndependentLearners::new(agents, [StateView::Full, StateView::Full], game)?;
    let output = run(game, &mut c, &mut env, settings.options(n_steps))?;
    let model = c.agent(Player::One).opponent_model().expect("inference agent keeps a model");
    Ok(InferenceRun { output, model })
}
