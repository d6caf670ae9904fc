use crate::simplex::SimplexVector;

/// Default tie tolerance used while learning.
pub const DEFAULT_TIE_TOL: f64 = 1e-9;

/// The maximizers of a marginal Q-row together with the canonical member of the
/// best-response set: uniform over the tied maximizers.
#[derive(Debug, Clone, PartialEq)]
pub struct BestResponseSet {
    pub argmax_indices: Vec<usize>,
    pub canonical_strategy: SimplexVector,
    pub max_value: f64,
}

pub fn best_response_set(q_row: &[f64], tie_tol: f64) -> BestResponseSet {
    assert!(!q_row.is_empty(), "best response over an empty action set");
    assert!(tie_tol >= 0.0, "negative tie tolerance");
    let max_value = max_of(q_row);
    let argmax_indices: Vec<usize> = q_row
        .iter()
        .enumerate()
        .filter(|(_, &q)| q >= max_value - tie_tol)
        .map(|(a, _)| a)
        .collect();
    let canonical_strategy = SimplexVector::uniform_on(q_row.len(), &argmax_indices);
    BestResponseSet {
        argmax_indices,
        canonical_strategy,
        max_value,
    }
}

pub(crate) fn max_of(values: &[f64]) -> f64 {
    values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}
