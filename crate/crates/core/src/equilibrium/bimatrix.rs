use crate::error::{Error, Result};
use crate::game::Player;
use crate::simplex::SimplexVector;

/// Tolerance for pure-equilibrium cell tests.
pub const PURE_TOL: f64 = 1e-12;

/// A one-shot game: player 1 picks a row, player 2 a column.
#[derive(Debug, Clone, PartialEq)]
pub struct BimatrixGame {
    rows: usize,
    cols: usize,
    payoff: [Vec<f64>; 2],
}

impl BimatrixGame {
    pub fn new(payoff_1: Vec<Vec<f64>>, payoff_2: Vec<Vec<f64>>) -> Result<Self> {
        let rows = payoff_1.len();
        let cols = payoff_1.first().map_or(0, Vec::len);
        let shape_ok = |m: &Vec<Vec<f64>>| m.len() == rows && m.iter().all(|r| r.len() == cols);
        if rows == 0 || cols == 0 || !shape_ok(&payoff_1) || !shape_ok(&payoff_2) {
            return Err(Error::invalid("payoff matrices must be nonempty with matching shapes"));
        }
        BimatrixGame::from_flat(
            rows,
            cols,
            payoff_1.into_iter().flatten().collect(),
            payoff_2.into_iter().flatten().collect(),
        )
    }

    /// Row-major payoffs.
    pub fn from_flat(rows: usize, cols: usize, payoff_1: Vec<f64>, payoff_2: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 || payoff_1.len() != rows * cols || payoff_2.len() != rows * cols {
            return Err(Error::invalid(format!("payoffs must both have {rows}x{cols} entries")));
        }
        if payoff_1.iter().chain(&payoff_2).any(|x| !x.is_finite()) {
            return Err(Error::invalid("payoffs must be finite"));
        }
        Ok(BimatrixGame {
            rows,
            cols,
            payoff: [payoff_1, payoff_2],
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn payoff(&self, player: Player, i: usize, j: usize) -> f64 {
        self.payoff[player.index()][i * self.cols + j]
    }

    pub fn payoffs(&self, player: Player) -> &[f64] {
        &self.payoff[player.index()]
    }

    pub fn to_nested(&self, player: Player) -> Vec<Vec<f64>> {
        self.payoffs(player).chunks(self.cols).map(<[f64]>::to_vec).collect()
    }

    /// Player 1's payoff for each pure row against `y`.
    pub fn row_values(&self, y: &SimplexVector) -> Vec<f64> {
        (0..self.rows)
            .map(|i| y.dot(&self.payoff[0][i * self.cols..(i + 1) * self.cols]))
            .collect()
    }

    /// Player 2's payoff for each pure column against `x`.
    pub fn col_values(&self, x: &SimplexVector) -> Vec<f64> {
        let xw = x.weights();
        (0..self.cols)
            .map(|j| (0..self.rows).map(|i| xw[i] * self.payoff[1][i * self.cols + j]).sum())
            .collect()
    }

    /// `x^T P_i y`.
    pub fn expected(&self, player: Player, x: &SimplexVector, y: &SimplexVector) -> f64 {
        let p = self.payoffs(player);
        let (xw, yw) = (x.weights(), y.weights());
        (0..self.rows)
            .map(|i| xw[i] * (0..self.cols).map(|j| p[i * self.cols + j] * yw[j]).sum::<f64>())
            .sum()
    }
}

/// Largest gain either player gets from a pure unilateral deviation.
pub fn verify_bimatrix_nash(game: &BimatrixGame, x: &SimplexVector, y: &SimplexVector) -> f64 {
    assert_eq!(x.len(), game.rows(), "row strategy has wrong length");
    assert_eq!(y.len(), game.cols(), "column strategy has wrong length");
    let rows = game.row_values(y);
    let cols = game.col_values(x);
    let v1 = x.dot(&rows);
    let v2 = y.dot(&cols);
    let best1 = rows.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let best2 = cols.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (best1 - v1).max(best2 - v2).max(0.0)
}

/// All pure cells where each player's action is a best reply to the other's.
pub fn pure_nash_enumeration(game: &BimatrixGame) -> Vec<(usize, usize)> {
    let (m, n) = (game.rows(), game.cols());
    let col_max: Vec<f64> = (0..n)
        .map(|j| (0..m).map(|i| game.payoff(Player::One, i, j)).fold(f64::NEG_INFINITY, f64::max))
        .collect();
    let row_max: Vec<f64> = (0..m)
        .map(|i| (0..n).map(|j| game.payoff(Player::Two, i, j)).fold(f64::NEG_INFINITY, f64::max))
        .collect();
    let mut out = Vec::new();
    for i in 0..m {
        for j in 0..n {
            if game.payoff(Player::One, i, j) >= col_max[j] - PURE_TOL
                && game.payoff(Player::Two, i, j) >= row_max[i] - PURE_TOL
            {
                out.push((i, j));
            }
        }
    }
    out
}
