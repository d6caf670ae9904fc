use crate::error::{Error, Result};
use crate::game::{Observation, Player, StochasticGame, StrategyProfile, TrajectoryRecord};
use crate::learning::opponent::OpponentModel;
use crate::learning::tables::MarginalQTable;
use crate::rng::GameRng;
use crate::simplex::{sample_from, SimplexVector};

/// Step size used and the largest table change caused by one update.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct UpdateStats {
    pub alpha: f64,
    pub delta: f64,
}

/// One player's learner. States passed in are already in the player's view.
pub trait Learner: Send {
    fn act(&mut self, s: usize, epsilon: f64) -> usize;
    fn observe(&mut self, t: u64, obs: &Observation, terminal: bool) -> Result<UpdateStats>;
    /// Current (unmixed) strategy at observed state `s`.
    fn strategy(&self, s: usize) -> SimplexVector;
    fn marginal_q(&self) -> Option<MarginalQTable>;
    /// Largest `|Q|` ever written to the learner's table.
    fn peak_abs_q(&self) -> f64;
    /// Whether the learner is allowed to see the opponent's realized action.
    fn sees_opponent_actions(&self) -> bool {
        false
    }
    fn opponent_model(&self) -> Option<OpponentModel> {
        None
    }
}

/// How a player perceives the game state.
#[derive(Debug, Clone, PartialEq)]
pub enum StateView {
    Full,
    Mapped { map: Vec<usize>, n_obs: usize },
}

impl StateView {
    pub fn mapped(map: Vec<usize>, n_obs: usize) -> Result<Self> {
        if map.iter().any(|&o| o >= n_obs) {
            return Err(Error::invalid("state view maps outside its observation range"));
        }
        Ok(StateView::Mapped { map, n_obs })
    }

    pub fn observe(&self, s: usize) -> usize {
        match self {
            StateView::Full => s,
            StateView::Mapped { map, .. } => map[s],
        }
    }

    pub fn n_obs(&self, n_states: usize) -> usize {
        match self {
            StateView::Full => n_states,
            StateView::Mapped { n_obs, .. } => *n_obs,
        }
    }

    fn check(&self, n_states: usize) -> Result<()> {
        match self {
            StateView::Mapped { map, .. } if map.len() != n_states => {
                Err(Error::invalid(format!("state view covers {} states, game has {n_states}", map.len())))
            }
            _ => Ok(()),
        }
    }
}

/// Uniformly random play, no learning.
#[derive(Debug, Clone)]
pub struct RandomAgent {
    n_actions: usize,
    rng: GameRng,
}

impl RandomAgent {
    pub fn new(n_actions: usize, rng: GameRng) -> Self {
        RandomAgent { n_actions, rng }
    }
}

impl Learner for RandomAgent {
    fn act(&mut self, _s: usize, _epsilon: f64) -> usize {
        sample_from(&SimplexVector::uniform(self.n_actions), &mut self.rng)
    }

    fn observe(&mut self, _t: u64, _obs: &Observation, _terminal: bool) -> Result<UpdateStats> {
        Ok(UpdateStats::default())
    }

    fn strategy(&self, _s: usize) -> SimplexVector {
        SimplexVector::uniform(self.n_actions)
    }

    fn marginal_q(&self) -> Option<MarginalQTable> {
        None
    }

    fn peak_abs_q(&self) -> f64 {
        0.0
    }
}

/// Drives both players for one step of the game.
pub trait JointController {
    fn act(&mut self, s: usize, epsilon: f64) -> Result<[usize; 2]>;
    fn observe(&mut self, t: u64, rec: &TrajectoryRecord, terminal: bool) -> Result<[UpdateStats; 2]>;
    /// Current strategies on the full state space.
    fn profile(&self, game: &StochasticGame) -> Result<StrategyProfile>;
    /// Marginal tables on the full state space, where the learner keeps one.
    fn marginal_tables(&self, game: &StochasticGame) -> Result<[Option<MarginalQTable>; 2]>;
    fn peak_abs_q(&self) -> [f64; 2];
}

/// Two separate learners. Each sees only its own view of the state, and the
/// opponent's action only if it declares [`Learner::sees_opponent_actions`].
pub struct IndependentLearners {
    agents: [Box<dyn Learner>; 2],
    views: [StateView; 2],
}

impl IndependentLearners {
    pub fn new(agents: [Box<dyn Learner>; 2], views: [StateView; 2], game: &StochasticGame) -> Result<Self> {
        for v in &views {
            v.check(game.n_states())?;
        }
        Ok(IndependentLearners { agents, views })
    }

    pub fn agent(&self, player: Player) -> &dyn Learner {
        self.agents[player.index()].as_ref()
    }

    pub fn view(&self, player: Player) -> &StateView {
        &self.views[player.index()]
    }
}

impl JointController for IndependentLearners {
    fn act(&mut self, s: usize, epsilon: f64) -> Result<[usize; 2]> {
        let a1 = self.agents[0].act(self.views[0].observe(s), epsilon);
        let a2 = self.agents[1].act(self.views[1].observe(s), epsilon);
        Ok([a1, a2])
    }

    fn observe(&mut self, t: u64, rec: &TrajectoryRecord, terminal: bool) -> Result<[UpdateStats; 2]> {
        let mut stats = [UpdateStats::default(); 2];
        for p in Player::BOTH {
            let i = p.index();
            let mut obs = if self.agents[i].sees_opponent_actions() { rec.full_view(p) } else { rec.view(p) };
            obs.s = self.views[i].observe(obs.s);
            obs.s_next = self.views[i].observe(obs.s_next);
            stats[i] = self.agents[i].observe(t, &obs, terminal)?;
        }
        Ok(stats)
    }

    fn profile(&self, game: &StochasticGame) -> Result<StrategyProfile> {
        let rows = |i: usize| -> Vec<SimplexVector> {
            (0..game.n_states()).map(|s| self.agents[i].strategy(self.views[i].observe(s))).collect()
        };
        Ok(StrategyProfile::new(rows(0), rows(1)))
    }

    fn marginal_tables(&self, _game: &StochasticGame) -> Result<[Option<MarginalQTable>; 2]> {
        let lift = |i: usize| {
            self.agents[i].marginal_q().map(|q| match &self.views[i] {
                StateView::Full => q,
                StateView::Mapped { map, .. } => q.lift(map),
            })
        };
        Ok([lift(0), lift(1)])
    }

    fn peak_abs_q(&self) -> [f64; 2] {
        [self.agents[0].peak_abs_q(), self.agents[1].peak_abs_q()]
    }
}
