//! Two agents crossing a grid to opposite top corners.
//!
//! State id = `cell_1 * n_cells + cell_2`, with one extra absorbing terminal
//! state at `n_cells²`. Cells are `y * width + x` with `y = 0` the bottom row.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{GameMetadata, Player, StochasticGame, TransitionRow};
use crate::learning::StateView;

pub const REWARD_GOAL: f64 = 10.0;
pub const REWARD_COLLISION: f64 = -0.5;
pub const REWARD_STEP: f64 = 0.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Move {
    Left,
    Right,
    Up,
    Down,
}

impl Move {
    pub const ALL: [Move; 4] = [Move::Left, Move::Right, Move::Up, Move::Down];

    fn delta(self) -> (i64, i64) {
        match self {
            Move::Left => (-1, 0),
            Move::Right => (1, 0),
            Move::Up => (0, 1),
            Move::Down => (0, -1),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridworldSpec {
    pub width: usize,
    pub height: usize,
    /// `[x, y]` coordinates.
    pub start_1: [usize; 2],
    pub start_2: [usize; 2],
    pub target_1: [usize; 2],
    pub target_2: [usize; 2],
    pub reward_goal: f64,
    pub reward_collision: f64,
    pub reward_step: f64,
    pub max_episode_len: usize,
    pub gamma: f64,
}

impl Default for GridworldSpec {
    fn default() -> Self {
        GridworldSpec {
            width: 9,
            height: 9,
            start_1: [0, 0],
            start_2: [8, 0],
            target_1: [8, 8],
            target_2: [0, 8],
            reward_goal: REWARD_GOAL,
            reward_collision: REWARD_COLLISION,
            reward_step: REWARD_STEP,
            max_episode_len: 200,
            gamma: 0.95,
        }
    }
}

impl GridworldSpec {
    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::config("width", "grid dimensions must be positive"));
        }
        let cells = [
            ("start_1", self.start_1),
            ("start_2", self.start_2),
            ("target_1", self.target_1),
            ("target_2", self.target_2),
        ];
        for (field, [x, y]) in cells {
            if x >= self.width || y >= self.height {
                return Err(Error::config(field, format!("({x}, {y}) is outside the grid")));
            }
        }
        for i in 0..4 {
            for j in i + 1..4 {
                if cells[i].1 == cells[j].1 {
                    return Err(Error::config(cells[j].0, format!("coincides with {}", cells[i].0)));
                }
            }
        }
        for (field, v, fixed) in [
            ("reward_goal", self.reward_goal, REWARD_GOAL),
            ("reward_collision", self.reward_collision, REWARD_COLLISION),
            ("reward_step", self.reward_step, REWARD_STEP),
        ] {
            if v != fixed {
                return Err(Error::config(field, format!("fixed at {fixed}, got {v}")));
            }
        }
        if self.max_episode_len == 0 {
            return Err(Error::config("max_episode_len", "must be positive"));
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::config("gamma", format!("{} is outside (0, 1)", self.gamma)));
        }
        Ok(())
    }
}

/// Outcome of one joint move from a non-terminal state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MoveOutcome {
    pub cells: [usize; 2],
    pub rewards: [f64; 2],
    pub done: bool,
}

#[derive(Debug, Clone)]
pub struct Gridworld {
    spec: GridworldSpec,
    game: StochasticGame,
}

impl Gridworld {
    pub fn spec(&self) -> &GridworldSpec {
        &self.spec
    }

    pub fn game(&self) -> &StochasticGame {
        &self.game
    }

    pub fn into_game(self) -> StochasticGame {
        self.game
    }

    pub fn n_cells(&self) -> usize {
        self.spec.width * self.spec.height
    }

    pub fn cell(&self, [x, y]: [usize; 2]) -> usize {
        y * self.spec.width + x
    }

    pub fn coords(&self, cell: usize) -> [usize; 2] {
        [cell % self.spec.width, cell / self.spec.width]
    }

    pub fn state(&self, cell_1: usize, cell_2: usize) -> usize {
        cell_1 * self.n_cells() + cell_2
    }

    pub fn terminal_state(&self) -> usize {
        self.n_cells() * self.n_cells()
    }

    pub fn start_state(&self) -> usize {
        self.state(self.cell(self.spec.start_1), self.cell(self.spec.start_2))
    }

    /// `None` for the terminal state.
    pub fn locations(&self, s: usize) -> Option<[usize; 2]> {
        (s < self.terminal_state()).then(|| [s / self.n_cells(), s % self.n_cells()])
    }

    pub fn targets(&self) -> [usize; 2] {
        [self.cell(self.spec.target_1), self.cell(self.spec.target_2)]
    }

    pub fn joint_move(&self, cells: [usize; 2], moves: [Move; 2]) -> MoveOutcome {
        joint_move(&self.spec, cells, moves)
    }

    /// Each player sees only its own cell; the terminal state maps to `n_cells`.
    pub fn blind_views(&self) -> [StateView; 2] {
        let n = self.n_cells();
        let view = |player: Player| {
            let map = (0..=self.terminal_state())
                .map(|s| match self.locations(s) {
                    Some(cells) => cells[player.index()],
                    None => n,
                })
                .collect();
            StateView::mapped(map, n + 1).expect("blind map is in range")
        };
        [view(Player::One), view(Player::Two)]
    }

    /// Text picture, top row first: `1`/`2` starts, `A`/`B` targets.
    pub fn map_text(&self) -> String {
        let mut out = String::new();
        for y in (0..self.spec.height).rev() {
            for x in 0..self.spec.width {
                let c = match [x, y] {
                    p if p == self.spec.start_1 => '1',
                    p if p == self.spec.start_2 => '2',
                    p if p == self.spec.target_1 => 'A',
                    p if p == self.spec.target_2 => 'B',
                    _ => '.',
                };
                out.push(c);
            }
            out.push('\n');
        }
        out
    }
}

fn joint_move(spec: &GridworldSpec, cells: [usize; 2], moves: [Move; 2]) -> MoveOutcome {
    let w = spec.width as i64;
    let h = spec.height as i64;
    let mut proposed = [0usize; 2];
    let mut off_map = [false; 2];
    for i in 0..2 {
        let (x, y) = ((cells[i] % spec.width) as i64, (cells[i] / spec.width) as i64);
        let (dx, dy) = moves[i].delta();
        let (nx, ny) = (x + dx, y + dy);
        if nx < 0 || ny < 0 || nx >= w || ny >= h {
            off_map[i] = true;
            proposed[i] = cells[i];
        } else {
            proposed[i] = (ny * w + nx) as usize;
        }
    }
    let same_cell = proposed[0] == proposed[1];
    let swap = proposed[0] == cells[1] && proposed[1] == cells[0];
    let (next, penalized) = if same_cell || swap {
        (cells, [true, true])
    } else {
        (proposed, off_map)
    };
    let targets = [
        spec.target_1[1] * spec.width + spec.target_1[0],
        spec.target_2[1] * spec.width + spec.target_2[0],
    ];
    let mut rewards = [0.0; 2];
    let mut done = false;
    for i in 0..2 {
        rewards[i] = if next[i] == targets[i] {
            done = true;
            spec.reward_goal
        } else if penalized[i] {
            spec.reward_collision
        } else {
            spec.reward_step
        };
    }
    MoveOutcome { cells: next, rewards, done }
}

/// States where the agents share a cell or one already stands on its target
/// are unreachable from the start; they step straight to the terminal with
/// zero reward so the table stays well defined.
pub fn build_gridworld(spec: &GridworldSpec) -> Result<Gridworld> {
    spec.validate()?;
    let n_cells = spec.width * spec.height;
    let terminal = n_cells * n_cells;
    let n_states = terminal + 1;
    let targets = [
        spec.target_1[1] * spec.width + spec.target_1[0],
        spec.target_2[1] * spec.width + spec.target_2[0],
    ];
    let cells_per_state = 16;
    let mut r1 = Vec::with_capacity(n_states * cells_per_state);
    let mut r2 = Vec::with_capacity(n_states * cells_per_state);
    let mut transitions = Vec::with_capacity(n_states * cells_per_state);
    for s in 0..terminal {
        let cells = [s / n_cells, s % n_cells];
        let dead = cells[0] == cells[1] || cells[0] == targets[0] || cells[1] == targets[1];
        for m1 in Move::ALL {
            for m2 in Move::ALL {
                if dead {
                    r1.push(0.0);
                    r2.push(0.0);
                    transitions.push(TransitionRow::deterministic(terminal));
                    continue;
                }
                let out = joint_move(spec, cells, [m1, m2]);
                r1.push(out.rewards[0]);
                r2.push(out.rewards[1]);
                let next = if out.done { terminal } else { out.cells[0] * n_cells + out.cells[1] };
                transitions.push(TransitionRow::deterministic(next));
            }
        }
    }
    for _ in 0..cells_per_state {
        r1.push(0.0);
        r2.push(0.0);
        transitions.push(TransitionRow::deterministic(terminal));
    }
    let mut world = Gridworld {
        spec: *spec,
        game: StochasticGame::new(n_states, [4, 4], [r1, r2], transitions, [spec.gamma; 2])?
            .with_terminal_states(&[terminal])?,
    };
    let meta = GameMetadata {
        name: Some("gridworld".into()),
        map: Some(world.map_text()),
    };
    world.game = world.game.with_metadata(meta);
    Ok(world)
}
