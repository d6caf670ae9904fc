//! Certification of learned profiles: rebuild full-information Q-functions
//! from a fixed profile, measure how well marginal tables agree with them, and
//! compute exact best-response gaps.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{profile_chain, MarkovChain, Player, StochasticGame, StrategyProfile};
use crate::learning::tables::{JointQTable, MarginalQTable};

pub const DEFAULT_VERIFY_TOL: f64 = 0.05;
pub const DEFAULT_RECONSTRUCT_TOL: f64 = 1e-10;
pub const DEFAULT_RECONSTRUCT_MAX_ITER: usize = 100_000;

/// Full-information Q-functions of a fixed profile.
#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructedQ {
    pub q_tilde: [JointQTable; 2],
    /// Sup-norm fixed-point defect `|T(Q) - Q|` per player.
    pub residual: [f64; 2],
    pub iterations: [usize; 2],
    pub converged: bool,
    /// Largest ratio of successive sweep changes seen while the changes
    /// exceed 1e-6, per player.
    pub max_contraction_ratio: [f64; 2],
}

impl ReconstructedQ {
    pub fn max_residual(&self) -> f64 {
        self.residual[0].max(self.residual[1])
    }
}

/// `V(s) = pi1(s)^T Q(s) pi2(s)`.
fn state_values(q: &JointQTable, profile: &StrategyProfile) -> Vec<f64> {
    let [n1, n2] = q.n_actions();
    (0..q.n_states())
        .map(|s| {
            let (x, y) = (profile.strategy(Player::One, s).weights(), profile.strategy(Player::Two, s).weights());
            let stage = q.stage(s);
            let mut v = 0.0;
            for a in 0..n1 {
                if x[a] == 0.0 {
                    continue;
                }
                let row: f64 = (0..n2).map(|b| stage[a * n2 + b] * y[b]).sum();
                v += x[a] * row;
            }
            v
        })
        .collect()
}

/// One sweep `Q <- r + gamma P V(Q)`.
fn sweep(game: &StochasticGame, player: Player, v: &[f64], out: &mut [f64]) {
    let gamma = game.gamma(player);
    let r = game.rewards(player);
    for (i, o) in out.iter_mut().enumerate() {
        let ev: f64 = game.transition_at(i).iter().map(|(s, p)| p * v[s]).sum();
        *o = r[i] + gamma * ev;
    }
}

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

/// Iterate the fixed-point map from zero until the sweep change is below
/// `tol (1 - gamma_i)`, which bounds the residual by `tol`.
pub fn reconstruct_full_q(
    game: &StochasticGame,
    profile: &StrategyProfile,
    tol: f64,
    max_iter: usize,
) -> Result<ReconstructedQ> {
    if !(tol > 0.0) {
        return Err(Error::invalid(format!("reconstruction tolerance {tol} must be positive")));
    }
    profile.check_against(game)?;
    let na = game.action_counts();
    let len = game.n_states() * na[0] * na[1];
    let mut tables = Vec::with_capacity(2);
    let mut residual = [0.0; 2];
    let mut iterations = [0; 2];
    let mut ratios = [0.0f64; 2];
    let mut converged = true;
    for p in Player::BOTH {
        let i = p.index();
        let stop = tol * (1.0 - game.gamma(p));
        let mut q = JointQTable::zeros(game.n_states(), na);
        let mut next = vec![0.0; len];
        let mut prev_change: Option<f64> = None;
        let mut done = false;
        for k in 1..=max_iter {
            sweep(game, p, &state_values(&q, profile), &mut next);
            let change = sup_diff(&next, q.as_slice());
            // below ~1e-6 the ratio is dominated by rounding in the sweep
            if let Some(pc) = prev_change {
                if pc > 1e-6 {
                    ratios[i] = ratios[i].max(change / pc);
                }
            }
            prev_change = Some(change);
            q = JointQTable::from_flat(game.n_states(), na, next.clone())?;
            iterations[i] = k;
            if change < stop {
                done = true;
                break;
            }
        }
        converged &= done;
        sweep(game, p, &state_values(&q, profile), &mut next);
        residual[i] = sup_diff(&next, q.as_slice());
        tables.push(q);
    }
    let q2 = tables.pop().expect("two players");
    let q1 = tables.pop().expect("two players");
    Ok(ReconstructedQ { q_tilde: [q1, q2], residual, iterations, converged, max_contraction_ratio: ratios })
}

/// `max_{s,a} |Q̄(s,a) - sum_b Q̃(s,a,b) pi_opp(s,b)|`.
pub fn marginal_consistency(
    qbar: &MarginalQTable,
    recon: &ReconstructedQ,
    profile: &StrategyProfile,
    player: Player,
) -> f64 {
    let m = recon.q_tilde[player.index()].marginalize(player, profile);
    qbar.max_abs_diff(&m)
}

/// Distance of a checkpoint table to the opponent-marginalized reconstruction
/// of a reference (normally the final) profile. Same formula as
/// [`marginal_consistency`], applied along a run.
pub fn convergence_metric(
    qbar_t: &MarginalQTable,
    recon: &ReconstructedQ,
    profile_t: &StrategyProfile,
    player: Player,
) -> f64 {
    marginal_consistency(qbar_t, recon, profile_t, player)
}

/// Best unilateral improvement per player, in value units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NashCertificate {
    pub gap_1: f64,
    pub gap_2: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl NashCertificate {
    pub fn max_gap(&self) -> f64 {
        self.gap_1.max(self.gap_2)
    }
}

/// Player `i`'s decision problem against the opponent's fixed strategy:
/// expected reward and successor row for each `(s, a_own)`.
struct BestResponseMdp {
    n_states: usize,
    n_own: usize,
    reward: Vec<f64>,
    rows: Vec<Vec<(usize, f64)>>,
    gamma: f64,
}

impl BestResponseMdp {
    fn new(game: &StochasticGame, profile: &StrategyProfile, player: Player) -> Self {
        let (n_own, n_opp) = (game.n_actions(player), game.n_actions(player.other()));
        let r = game.rewards(player);
        let mut reward = Vec::with_capacity(game.n_states() * n_own);
        let mut rows = Vec::with_capacity(game.n_states() * n_own);
        let mut mixer = crate::game::RowMixer::new(game.n_states());
        for s in 0..game.n_states() {
            let opp = profile.strategy(player.other(), s).weights();
            for own in 0..n_own {
                let mut rr = 0.0;
                for (b, &w) in opp.iter().enumerate().take(n_opp) {
                    if w == 0.0 {
                        continue;
                    }
                    let i = game.index_for(player, s, own, b);
                    rr += w * r[i];
                    mixer.add(game.transition_at(i), w);
                }
                reward.push(rr);
                rows.push(mixer.take());
            }
        }
        BestResponseMdp { n_states: game.n_states(), n_own, reward, rows, gamma: game.gamma(player) }
    }

    fn q(&self, v: &[f64], s: usize, a: usize) -> f64 {
        let i = s * self.n_own + a;
        self.reward[i] + self.gamma * self.rows[i].iter().map(|&(t, p)| p * v[t]).sum::<f64>()
    }

    fn evaluate(&self, policy: &[usize]) -> Result<Vec<f64>> {
        let chain = MarkovChain {
            reward: policy.iter().enumerate().map(|(s, &a)| self.reward[s * self.n_own + a]).collect(),
            rows: policy.iter().enumerate().map(|(s, &a)| self.rows[s * self.n_own + a].clone()).collect(),
        };
        chain.evaluate(self.gamma)
    }

    /// Optimal values by policy iteration, starting greedy on `v0`.
    fn solve(&self, v0: &[f64]) -> Result<Vec<f64>> {
        let greedy = |v: &[f64], current: Option<&[usize]>| -> Vec<usize> {
            (0..self.n_states)
                .map(|s| {
                    let mut best = current.map_or(0, |c| c[s]);
                    let mut best_q = self.q(v, s, best);
                    for a in 0..self.n_own {
                        let qa = self.q(v, s, a);
                        if qa > best_q + 1e-12 * (1.0 + best_q.abs()) {
                            best = a;
                            best_q = qa;
                        }
                    }
                    best
                })
                .collect()
        };
        let mut policy = greedy(v0, None);
        let mut v = self.evaluate(&policy)?;
        for _ in 0..(self.n_states * self.n_own + 10) {
            let next = greedy(&v, Some(&policy));
            if next == policy {
                return Ok(v);
            }
            policy = next;
            v = self.evaluate(&policy)?;
        }
        Err(Error::Numerical("policy iteration did not stabilize".into()))
    }
}

/// Exact best-response gaps via policy iteration against the fixed opponent.
pub fn certify_nash(game: &StochasticGame, profile: &StrategyProfile, tol: f64) -> Result<NashCertificate> {
    profile.check_against(game)?;
    let mut gaps = [0.0; 2];
    for p in Player::BOTH {
        let current = profile_chain(game, profile, p).evaluate(game.gamma(p))?;
        let best = BestResponseMdp::new(game, profile, p).solve(&current)?;
        gaps[p.index()] = best.iter().zip(&current).fold(0.0f64, |m, (b, c)| m.max(b - c));
    }
    Ok(NashCertificate {
        gap_1: gaps[0],
        gap_2: gaps[1],
        tolerance: tol,
        passed: gaps[0].max(gaps[1]) <= tol,
    })
}

/// Certificate plus the numbers that back it, as written next to a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateDocument {
    pub certificate: NashCertificate,
    pub reconstruction_residual: [f64; 2],
    pub reconstruction_iterations: [usize; 2],
    pub reconstruction_converged: bool,
    /// Marginal tables against the reconstruction, where the learner keeps one.
    pub marginal_consistency: [Option<f64>; 2],
    pub fingerprint: Fingerprint,
}

/// Identifies what was certified.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fingerprint {
    pub game_sha256: String,
    pub seed: u64,
    pub schedule: String,
}

/// Reconstruct, certify and measure the tables in one pass.
pub fn certify_run(
    game: &StochasticGame,
    profile: &StrategyProfile,
    tables: &[Option<MarginalQTable>; 2],
    tol: f64,
    fingerprint: Fingerprint,
) -> Result<CertificateDocument> {
    let recon = reconstruct_full_q(game, profile, DEFAULT_RECONSTRUCT_TOL, DEFAULT_RECONSTRUCT_MAX_ITER)?;
    let certificate = certify_nash(game, profile, tol)?;
    let mc = |p: Player| {
        tables[p.index()]
            .as_ref()
            .filter(|t| t.n_states() == game.n_states())
            .map(|t| marginal_consistency(t, &recon, profile, p))
    };
    Ok(CertificateDocument {
        certificate,
        reconstruction_residual: recon.residual,
        reconstruction_iterations: recon.iterations,
        reconstruction_converged: recon.converged,
        marginal_consistency: [mc(Player::One), mc(Player::Two)],
        fingerprint,
    })
}
