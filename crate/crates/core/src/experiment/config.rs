use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::envs::canonical::{canonical_game, one_state_game, CANONICAL_NAMES};
use crate::envs::gridworld::{build_gridworld, Gridworld, GridworldSpec};
use crate::envs::random_game::{generate_random_game, RandomGameSpec};
use crate::envs::spurious::{build_spurious_game_with_gamma, SPURIOUS_DEFAULT_GAMMA};
use crate::equilibrium::{SelectorKind, DEFAULT_TIE_TOL};
use crate::error::{Error, Result};
use crate::game::StochasticGame;
use crate::learning::{ExplorationSchedule, Horizon, LearningRateSchedule, StateView};
use crate::verify::DEFAULT_VERIFY_TOL;

pub const CONFIG_VERSION: u32 = 1;
pub const DEFAULT_STEP_CHECKPOINTS: u64 = 50;
pub const DEFAULT_EPISODE_CHECKPOINTS: u64 = 100;
pub const DEFAULT_MAX_EPISODE_LEN: usize = 200;

/// Which game to play. Written as `{"<kind>": {...}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum EnvironmentConfig {
    RandomGame(RandomGameSpec),
    Gridworld {
        #[serde(default)]
        spec: GridworldSpec,
        /// Each player observes only its own cell.
        #[serde(default)]
        blind: bool,
    },
    Spurious {
        base: String,
        n_states: usize,
        #[serde(default)]
        seed: u64,
        #[serde(default = "spurious_gamma")]
        gamma: [f64; 2],
    },
    Canonical {
        name: String,
        gamma: [f64; 2],
    },
    /// A game document on disk; relative paths resolve against the config file.
    Json { path: PathBuf },
}

fn spurious_gamma() -> [f64; 2] {
    SPURIOUS_DEFAULT_GAMMA
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LearnerKind {
    PartialInfo,
    FullInfo,
    /// Best response to observed opponent action frequencies.
    Fictitious,
    /// EM inference of the hidden opponent actions.
    Inference,
    Random,
}

fn default_tie_tol() -> f64 {
    DEFAULT_TIE_TOL
}

fn default_verify_tol() -> f64 {
    DEFAULT_VERIFY_TOL
}

fn default_version() -> u32 {
    0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_version")]
    pub version: u32,
    pub environment: EnvironmentConfig,
    pub learners: [LearnerKind; 2],
    #[serde(default)]
    pub schedule: LearningRateSchedule,
    #[serde(default)]
    pub exploration: ExplorationSchedule,
    #[serde(default)]
    pub selector: SelectorKind,
    pub horizon: Horizon,
    /// Steps or episodes between snapshots; 0 disables them.
    #[serde(default)]
    pub checkpoint_every: Option<u64>,
    #[serde(default)]
    pub initial_state: Option<usize>,
    #[serde(default)]
    pub max_episode_len: Option<usize>,
    #[serde(default = "default_tie_tol")]
    pub tie_tol: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_verify_tol")]
    pub verify_tol: f64,
    /// Greedy rollouts after training.
    #[serde(default)]
    pub evaluation_rollouts: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

/// A built environment with everything a run needs besides the learners.
#[derive(Debug, Clone)]
pub struct Environment {
    pub game: StochasticGame,
    pub views: [StateView; 2],
    pub initial_state: usize,
    pub max_episode_len: usize,
    pub gridworld: Option<Gridworld>,
}

impl EnvironmentConfig {
    pub fn build(&self) -> Result<Environment> {
        let plain = |game: StochasticGame| Environment {
            game,
            views: [StateView::Full, StateView::Full],
            initial_state: 0,
            max_episode_len: DEFAULT_MAX_EPISODE_LEN,
            gridworld: None,
        };
        match self {
            EnvironmentConfig::RandomGame(spec) => Ok(plain(generate_random_game(spec).map_err(nest("environment.random_game"))?)),
            EnvironmentConfig::Gridworld { spec, blind } => {
                let world = build_gridworld(spec).map_err(nest("environment.gridworld.spec"))?;
                let views = if *blind { world.blind_views() } else { [StateView::Full, StateView::Full] };
                Ok(Environment {
                    game: world.game().clone(),
                    views,
                    initial_state: world.start_state(),
                    max_episode_len: spec.max_episode_len,
                    gridworld: Some(world),
                })
            }
            EnvironmentConfig::Spurious { base, n_states, seed, gamma } => {
                let stage = canonical_game(base)
                    .ok_or_else(|| Error::config("environment.spurious.base", unknown_canonical(base)))?;
                if *n_states < 2 {
                    return Err(Error::config("environment.spurious.n_states", "must be at least 2"));
                }
                check_gamma("environment.spurious.gamma", *gamma)?;
                Ok(plain(build_spurious_game_with_gamma(&stage.game, *n_states, *seed, *gamma)?))
            }
            EnvironmentConfig::Canonical { name, gamma } => {
                let c = canonical_game(name)
                    .ok_or_else(|| Error::config("environment.canonical.name", unknown_canonical(name)))?;
                check_gamma("environment.canonical.gamma", *gamma)?;
                Ok(plain(one_state_game(&c.game, *gamma)?))
            }
            EnvironmentConfig::Json { path } => {
                let game = StochasticGame::load(path)
                    .map_err(|e| Error::config("environment.json.path", format!("{}: {e}", path.display())))?;
                Ok(plain(game))
            }
        }
    }
}

fn nest(prefix: &'static str) -> impl Fn(Error) -> Error {
    move |e| match e {
        Error::Config { field, message } => Error::config(format!("{prefix}.{field}"), message),
        other => other,
    }
}

fn unknown_canonical(name: &str) -> String {
    format!("unknown game `{name}`, expected one of {}", CANONICAL_NAMES.join(", "))
}

fn check_gamma(field: &str, gamma: [f64; 2]) -> Result<()> {
    for g in gamma {
        if !(g > 0.0 && g < 1.0) {
            return Err(Error::config(field, format!("{g} is outside (0, 1)")));
        }
    }
    Ok(())
}

impl ExperimentConfig {
    /// Parse and validate. `base_dir` anchors relative paths.
    pub fn from_json_str(text: &str, base_dir: &Path) -> Result<Self> {
        let mut cfg: ExperimentConfig = serde_json::from_str(text)
            .map_err(|e| Error::config("<document>", e.to_string()))?;
        if let EnvironmentConfig::Json { path } = &mut cfg.environment {
            if path.is_relative() {
                *path = base_dir.join(&*path);
            }
            if !path.exists() {
                return Err(Error::config("environment.json.path", format!("{} does not exist", path.display())));
            }
            *path = path.canonicalize()?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        Self::from_json_str(&text, base)
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != CONFIG_VERSION {
            return Err(Error::config("version", format!("expected {CONFIG_VERSION}, got {}", self.version)));
        }
        let full = self.learners.map(|l| l == LearnerKind::FullInfo);
        if full[0] != full[1] {
            return Err(Error::config("learners", "full_info couples both players' updates; use it for both or neither"));
        }
        if self.horizon.count() == 0 {
            return Err(Error::config("horizon", "must be at least 1"));
        }
        self.schedule.validate()?;
        self.exploration.validate()?;
        if !(self.tie_tol >= 0.0 && self.tie_tol.is_finite()) {
            return Err(Error::config("tie_tol", "must be finite and >= 0"));
        }
        if !(self.verify_tol >= 0.0 && self.verify_tol.is_finite()) {
            return Err(Error::config("verify_tol", "must be finite and >= 0"));
        }
        if let EnvironmentConfig::Gridworld { blind: true, .. } = self.environment {
            if self.learners.iter().any(|l| matches!(l, LearnerKind::FullInfo | LearnerKind::Fictitious | LearnerKind::Inference)) {
                return Err(Error::config("learners", "blind players support partial_info and random only"));
            }
        }
        if self.max_episode_len == Some(0) {
            return Err(Error::config("max_episode_len", "must be positive"));
        }
        Ok(())
    }

    pub fn checkpoint_cadence(&self) -> u64 {
        self.checkpoint_every.unwrap_or(match self.horizon {
            Horizon::Steps(_) => DEFAULT_STEP_CHECKPOINTS,
            Horizon::Episodes(_) => DEFAULT_EPISODE_CHECKPOINTS,
        })
    }

    /// Every default made explicit, output location dropped. Running the
    /// snapshot reproduces the run.
    pub fn resolved(&self, env: &Environment) -> ExperimentConfig {
        let mut r = self.clone();
        r.exploration.decay = Some(self.exploration.resolve(self.horizon.count()).decay);
        r.checkpoint_every = Some(self.checkpoint_cadence());
        r.initial_state = Some(self.initial_state.unwrap_or(env.initial_state));
        r.max_episode_len = Some(self.max_episode_len.unwrap_or(env.max_episode_len));
        r.output_dir = None;
        r
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<ExperimentConfig> {
        ExperimentConfig::from_json_str(text, Path::new("."))
    }

    #[test]
    fn minimal_random_game() {
        let cfg = parse(
            r#"{"version": 1, "environment": {"random_game": {"seed": 3}},
                "learners": ["partial_info", "partial_info"],
                "schedule": {"kind": "global_stair", "width": 250},
                "horizon": {"steps": 4000}}"#,
        )
        .unwrap();
        assert_eq!(cfg.checkpoint_cadence(), 50);
        assert_eq!(cfg.tie_tol, DEFAULT_TIE_TOL);
        let env = cfg.environment.build().unwrap();
        assert_eq!(env.game.n_states(), 10);
    }

    #[test]
    fn field_level_diagnostics() {
        let err = parse(
            r#"{"version": 1, "environment": {"random_game": {"gamma_1": 1.2}},
                "learners": ["partial_info", "partial_info"], "horizon": {"steps": 10}}"#,
        )
        .unwrap();
        let e = err.environment.build().unwrap_err();
        assert!(e.to_string().contains("environment.random_game.gamma_1"), "{e}");

        let e = parse(r#"{"version": 1, "environment": {"random_game": {}}, "learners": ["partial_info", "partial_info"], "horizon": {"steps": 10}, "bogus": 1}"#)
            .unwrap_err();
        assert!(e.to_string().contains("bogus") && e.to_string().contains("line"), "{e}");

        let e = parse(r#"{"version": 1, "environment": {"random_game": {}}, "learners": ["full_info", "partial_info"], "horizon": {"steps": 10}}"#)
            .unwrap_err();
        assert!(e.to_string().contains("learners"));

        let e = parse(r#"{"environment": {"random_game": {}}, "learners": ["random", "random"], "horizon": {"steps": 10}}"#)
            .unwrap_err();
        assert!(e.to_string().contains("version"));
    }

    #[test]
    fn missing_game_file() {
        let e = parse(r#"{"version": 1, "environment": {"json": {"path": "nope/missing.json"}}, "learners": ["random", "random"], "horizon": {"steps": 10}}"#)
            .unwrap_err();
        assert!(e.to_string().contains("environment.json.path"));
    }
}
