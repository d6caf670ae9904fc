//! Lemke–Howson complementary pivoting with a lexicographic minimum-ratio rule.
//!
//! With payoffs shifted to be positive, the game is written as two systems
//!
//! ```text
//!   r + A y = 1,   r, y >= 0      (rows: player 1's pure actions)
//!   s + B'x = 1,   s, x >= 0      (rows: player 2's pure actions)
//! ```
//!
//! and the path starts at the artificial equilibrium `x = y = 0`. Labels
//! `0..m` belong to `x_i`/`r_i`, labels `m..m+n` to `y_j`/`s_j`. The ratio test
//! breaks ties lexicographically on the rows of the current basis inverse,
//! which keeps the path well defined on degenerate games.

use std::cmp::Ordering;

use crate::equilibrium::bimatrix::{verify_bimatrix_nash, BimatrixGame};
use crate::error::{Error, Result};
use crate::game::Player;
use crate::simplex::SimplexVector;

/// Certification threshold for a returned equilibrium.
pub const LH_GAP_TOL: f64 = 1e-9;
const PIVOT_EPS: f64 = 1e-12;
const LEX_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Var {
    X(usize),
    Y(usize),
    R(usize),
    S(usize),
}

struct Tableau {
    // rows x (cols + 1); last column is the right-hand side
    cells: Vec<Vec<f64>>,
    basis: Vec<Var>,
    // column of each variable that lives in this system
    columns: Vec<Var>,
    // number of leading slack columns (initial basis, in row order)
    n_slack: usize,
}

impl Tableau {
    fn column_of(&self, v: Var) -> usize {
        self.columns
            .iter()
            .position(|&c| c == v)
            .expect("variable belongs to this tableau")
    }

    /// Lexicographic minimum ratio over rows with a positive entry in `col`.
    fn leaving_row(&self, col: usize) -> Option<usize> {
        let rhs = self.columns.len();
        let mut best: Option<usize> = None;
        for (r, row) in self.cells.iter().enumerate() {
            if row[col] <= PIVOT_EPS {
                continue;
            }
            best = match best {
                None => Some(r),
                Some(b) => {
                    if self.lex_compare(r, b, col, rhs) == Ordering::Less {
                        Some(r)
                    } else {
                        Some(b)
                    }
                }
            };
        }
        best
    }

    fn lex_compare(&self, a: usize, b: usize, col: usize, rhs: usize) -> Ordering {
        let (ra, rb) = (&self.cells[a], &self.cells[b]);
        let keys = std::iter::once(rhs).chain(0..self.n_slack);
        for k in keys {
            let qa = ra[k] / ra[col];
            let qb = rb[k] / rb[col];
            let scale = 1.0f64.max(qa.abs()).max(qb.abs());
            if (qa - qb).abs() > LEX_EPS * scale {
                return qa.partial_cmp(&qb).unwrap_or(Ordering::Equal);
            }
        }
        Ordering::Equal
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let p = self.cells[row][col];
        for x in self.cells[row].iter_mut() {
            *x /= p;
        }
        let pivot_row = self.cells[row].clone();
        for (r, other) in self.cells.iter_mut().enumerate() {
            if r == row {
                continue;
            }
            let f = other[col];
            if f == 0.0 {
                continue;
            }
            for (x, pr) in other.iter_mut().zip(&pivot_row) {
                *x -= f * pr;
            }
            other[col] = 0.0;
        }
    }

    fn value_of(&self, v: Var) -> f64 {
        let rhs = self.columns.len();
        self.basis
            .iter()
            .position(|&b| b == v)
            .map_or(0.0, |r| self.cells[r][rhs])
    }
}

fn label(v: Var, m: usize) -> usize {
    match v {
        Var::X(i) | Var::R(i) => i,
        Var::Y(j) | Var::S(j) => m + j,
    }
}

fn complement(v: Var) -> Var {
    match v {
        Var::X(i) => Var::R(i),
        Var::R(i) => Var::X(i),
        Var::Y(j) => Var::S(j),
        Var::S(j) => Var::Y(j),
    }
}

// y and r live in the first system; x and s in the second.
fn in_first(v: Var) -> bool {
    matches!(v, Var::Y(_) | Var::R(_))
}

/// Maximum number of pivots before giving up.
pub fn pivot_cap(m: usize, n: usize) -> usize {
    10 * (m + n) * (m + n)
}

/// One equilibrium reached by dropping `initial_label` (in `0..rows+cols`).
pub fn lemke_howson(game: &BimatrixGame, initial_label: usize) -> Result<(SimplexVector, SimplexVector)> {
    let (m, n) = (game.rows(), game.cols());
    if initial_label >= m + n {
        return Err(Error::invalid(format!(
            "initial label {initial_label} out of range 0..{}",
            m + n
        )));
    }
    let shift = |p: &[f64]| {
        let lo = p.iter().copied().fold(f64::INFINITY, f64::min);
        1.0 - lo
    };
    let (sa, sb) = (shift(game.payoffs(Player::One)), shift(game.payoffs(Player::Two)));

    let mut first = Tableau {
        cells: (0..m)
            .map(|i| {
                let mut row = vec![0.0; m + n + 1];
                row[i] = 1.0;
                for j in 0..n {
                    row[m + j] = game.payoff(Player::One, i, j) + sa;
                }
                row[m + n] = 1.0;
                row
            })
            .collect(),
        basis: (0..m).map(Var::R).collect(),
        columns: (0..m).map(Var::R).chain((0..n).map(Var::Y)).collect(),
        n_slack: m,
    };
    let mut second = Tableau {
        cells: (0..n)
            .map(|j| {
                let mut row = vec![0.0; n + m + 1];
                row[j] = 1.0;
                for i in 0..m {
                    row[n + i] = game.payoff(Player::Two, i, j) + sb;
                }
                row[n + m] = 1.0;
                row
            })
            .collect(),
        basis: (0..n).map(Var::S).collect(),
        columns: (0..n).map(Var::S).chain((0..m).map(Var::X)).collect(),
        n_slack: n,
    };

    let mut entering = if initial_label < m {
        Var::X(initial_label)
    } else {
        Var::Y(initial_label - m)
    };
    let cap = pivot_cap(m, n);
    let mut pivots = 0;
    loop {
        if pivots >= cap {
            return Err(Error::Solver(format!("Lemke-Howson exceeded {cap} pivots")));
        }
        let tab = if in_first(entering) { &mut first } else { &mut second };
        let col = tab.column_of(entering);
        let row = tab
            .leaving_row(col)
            .ok_or_else(|| Error::Solver("Lemke-Howson hit a ray".into()))?;
        let leaving = tab.basis[row];
        tab.pivot(row, col);
        tab.basis[row] = entering;
        pivots += 1;
        if label(leaving, m) == initial_label {
            break;
        }
        entering = complement(leaving);
    }

    let x: Vec<f64> = (0..m).map(|i| second.value_of(Var::X(i)).max(0.0)).collect();
    let y: Vec<f64> = (0..n).map(|j| first.value_of(Var::Y(j)).max(0.0)).collect();
    let normalize = |v: Vec<f64>| -> Result<SimplexVector> {
        let total: f64 = v.iter().sum();
        if !(total > 0.0) {
            return Err(Error::Solver("Lemke-Howson ended at the artificial point".into()));
        }
        SimplexVector::new(v.iter().map(|w| w / total).collect())
            .map_err(|e| Error::Solver(e.to_string()))
    };
    let (x, y) = (normalize(x)?, normalize(y)?);
    let gap = verify_bimatrix_nash(game, &x, &y);
    if gap > LH_GAP_TOL {
        return Err(Error::Solver(format!(
            "Lemke-Howson result failed certification (gap {gap:e})"
        )));
    }
    Ok((x, y))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::canonical::{battle_of_the_sexes, matching_pennies, prisoners_dilemma};
    use crate::rng::rng_from_seed;
    use rand::Rng;

    #[test]
    fn matching_pennies_mixed() {
        let (x, y) = lemke_howson(&matching_pennies(), 0).unwrap();
        assert!((x.weights()[0] - 0.5).abs() < 1e-12);
        assert!((y.weights()[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn prisoners_dilemma_defect() {
        for label in 0..4 {
            let (x, y) = lemke_howson(&prisoners_dilemma(), label).unwrap();
            assert_eq!(x.weights(), &[0.0, 1.0]);
            assert_eq!(y.weights(), &[0.0, 1.0]);
        }
    }

    #[test]
    fn every_label_gives_an_equilibrium() {
        let g = battle_of_the_sexes();
        for label in 0..4 {
            let (x, y) = lemke_howson(&g, label).unwrap();
            assert!(verify_bimatrix_nash(&g, &x, &y) <= LH_GAP_TOL);
        }
    }

    #[test]
    fn random_5x7_certified() {
        let mut rng = rng_from_seed(2024, 0);
        for _ in 0..50 {
            let a: Vec<f64> = (0..35).map(|_| rng.gen()).collect();
            let b: Vec<f64> = (0..35).map(|_| rng.gen()).collect();
            let g = BimatrixGame::from_flat(5, 7, a, b).unwrap();
            let (x, y) = lemke_howson(&g, 0).unwrap();
            assert!(verify_bimatrix_nash(&g, &x, &y) <= 1e-9);
        }
    }

    #[test]
    fn degenerate_games_do_not_cycle() {
        // all-equal payoffs: every ratio test ties on the right-hand side
        let zero = BimatrixGame::new(vec![vec![0.0; 4]; 3], vec![vec![0.0; 4]; 3]).unwrap();
        for label in 0..7 {
            let (x, y) = lemke_howson(&zero, label).unwrap();
            assert_eq!(verify_bimatrix_nash(&zero, &x, &y), 0.0);
        }
        // a classic degenerate example with a continuum of equilibria
        let g = BimatrixGame::new(
            vec![vec![3.0, 3.0], vec![2.0, 5.0], vec![0.0, 6.0]],
            vec![vec![3.0, 2.0], vec![2.0, 6.0], vec![3.0, 1.0]],
        )
        .unwrap();
        for label in 0..5 {
            let (x, y) = lemke_howson(&g, label).unwrap();
            assert!(verify_bimatrix_nash(&g, &x, &y) <= 1e-9);
        }
    }

    #[test]
    fn bad_label_rejected() {
        assert!(lemke_howson(&matching_pennies(), 4).is_err());
    }
}
