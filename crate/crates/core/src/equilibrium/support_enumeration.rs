use nalgebra::{DMatrix, DVector};

use crate::equilibrium::bimatrix::{verify_bimatrix_nash, BimatrixGame};
use crate::error::{Error, Result};
use crate::game::Player;
use crate::simplex::SimplexVector;

/// Largest action count accepted by [`support_enumeration`].
pub const MAX_ENUMERATION_ACTIONS: usize = 9;
pub const ENUMERATION_GAP_TOL: f64 = 1e-9;
const FEASIBILITY_TOL: f64 = 1e-12;
const DUPLICATE_TOL: f64 = 1e-9;

/// Every equilibrium with equal-size supports up to `max_support`, ordered by
/// support size, then row support, then column support (each lexicographic).
pub fn support_enumeration(game: &BimatrixGame, max_support: usize) -> Result<Vec<(SimplexVector, SimplexVector)>> {
    let (m, n) = (game.rows(), game.cols());
    if m > MAX_ENUMERATION_ACTIONS || n > MAX_ENUMERATION_ACTIONS {
        return Err(Error::invalid(format!(
            "support enumeration is limited to {MAX_ENUMERATION_ACTIONS} actions per player, got {m}x{n}"
        )));
    }
    let mut found: Vec<(SimplexVector, SimplexVector)> = Vec::new();
    for k in 1..=max_support.min(m).min(n) {
        for rows in combinations(m, k) {
            for cols in combinations(n, k) {
                let Some(y) = indifferent_mix(game, Player::One, &rows, &cols) else {
                    continue;
                };
                let Some(x) = indifferent_mix(game, Player::Two, &cols, &rows) else {
                    continue;
                };
                if verify_bimatrix_nash(game, &x, &y) > ENUMERATION_GAP_TOL {
                    continue;
                }
                let duplicate = found
                    .iter()
                    .any(|(fx, fy)| fx.max_abs_diff(&x) < DUPLICATE_TOL && fy.max_abs_diff(&y) < DUPLICATE_TOL);
                if !duplicate {
                    found.push((x, y));
                }
            }
        }
    }
    Ok(found)
}

/// The opponent mix on `opp_support` that makes `player` indifferent across
/// `own_support`. Returns a full-length vector over the opponent's actions.
fn indifferent_mix(
    game: &BimatrixGame,
    player: Player,
    own_support: &[usize],
    opp_support: &[usize],
) -> Option<SimplexVector> {
    let k = own_support.len();
    let payoff = |own: usize, opp: usize| match player {
        Player::One => game.payoff(Player::One, own, opp),
        Player::Two => game.payoff(Player::Two, opp, own),
    };
    // [P_sub  -1] [w]   [0]
    // [1^T     0] [v] = [1]
    let mut mat = DMatrix::<f64>::zeros(k + 1, k + 1);
    for (r, &own) in own_support.iter().enumerate() {
        for (c, &opp) in opp_support.iter().enumerate() {
            mat[(r, c)] = payoff(own, opp);
        }
        mat[(r, k)] = -1.0;
    }
    for c in 0..k {
        mat[(k, c)] = 1.0;
    }
    let mut rhs = DVector::<f64>::zeros(k + 1);
    rhs[k] = 1.0;
    let sol = mat.lu().solve(&rhs)?;
    let n_opp = match player {
        Player::One => game.cols(),
        Player::Two => game.rows(),
    };
    let mut w = vec![0.0; n_opp];
    for (c, &opp) in opp_support.iter().enumerate() {
        let p = sol[c];
        if !p.is_finite() || p < -FEASIBILITY_TOL {
            return None;
        }
        w[opp] = p.max(0.0);
    }
    let total: f64 = w.iter().sum();
    if !(total > 0.0) {
        return None;
    }
    SimplexVector::new(w.iter().map(|p| p / total).collect()).ok()
}

/// k-subsets of `0..n` in lexicographic order.
pub(crate) fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k == 0 || k > n {
        return out;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.clone());
        let mut i = k;
        while i > 0 && idx[i - 1] == n - k + i - 1 {
            i -= 1;
        }
        if i == 0 {
            return out;
        }
        idx[i - 1] += 1;
        for j in i..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}
