//! The R = B * D reward matrix decomposition, dominant-wager detection,
//! and conversion between actual and effective strategies.
//!
//! A valid reward matrix R factors as R = B * D, with B row stochastic and
//! D a valid diagonal reward matrix, exactly when q = R^-1 * 1 is strictly
//! positive. The effective strategy T = S * B bets on the hypothetical
//! diagonal race D; the actual strategy S = T * B^-1 may be infeasible.

use crate::types::{RewardMatrix, StrategyMatrix, RejectionReport, StrategyViolation};
use nalgebra::{DMatrix, DVector};
use thiserror::Error;

/// q_i > 0 is tested with this much floating-point slack.
pub const POSITIVITY_TOL: f64 = 1e-12;

/// R = B * D with cached B^-1. q = R^-1 * 1 and D(i,i) = 1 / q_i.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    q: DVector<f64>,
    b: DMatrix<f64>,
    b_inv: DMatrix<f64>,
    d_diag: DVector<f64>,
}

impl Decomposition {
    pub fn k(&self) -> usize {
        self.b.nrows()
    }

    pub fn q(&self) -> &[f64] {
        self.q.as_slice()
    }

    /// Diagonal of the effective reward matrix D.
    pub fn d_diag(&self) -> &[f64] {
        self.d_diag.as_slice()
    }

    pub fn d(&self) -> RewardMatrix {
        RewardMatrix::diagonal(self.d_diag.as_slice().to_vec())
            .expect("D is a valid diagonal reward matrix by construction")
    }

    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }

    pub fn b_inv(&self) -> &DMatrix<f64> {
        &self.b_inv
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DecompositionError {
    /// The linear solve for q failed outright; validation should preclude this.
    #[error("linear solve for q failed")]
    SolveFailure,
    /// Some q_i <= 0, so no decomposition exists. `near_degenerate` flags
    /// components in (0, 1e-12].
    #[error("no decomposition: q = {q:?}")]
    NoDecomposition { q: Vec<f64>, near_degenerate: bool },
}

/// Solve R * q = 1 for q.
pub fn compute_q(reward: &RewardMatrix) -> Result<Vec<f64>, DecompositionError> {
    let k = reward.k();
    let ones = DVector::from_element(k, 1.0);
    let lu = reward.matrix().clone().lu();
    let q = lu.solve(&ones).ok_or(DecompositionError::SolveFailure)?;
    let residual = reward.matrix() * &q - &ones;
    if residual.iter().any(|r| r.abs() >= 1e-9) {
        return Err(DecompositionError::SolveFailure);
    }
    Ok(q.as_slice().to_vec())
}

/// Factor R = B * D if q = R^-1 * 1 is strictly positive.
pub fn decompose(reward: &RewardMatrix) -> Result<Decomposition, DecompositionError> {
    let q = compute_q(reward)?;
    if q.iter().any(|&qi| qi <= POSITIVITY_TOL) {
        let near_degenerate = q.iter().any(|&qi| qi > 0.0 && qi <= POSITIVITY_TOL);
        return Err(DecompositionError::NoDecomposition { q, near_degenerate });
    }
    let k = reward.k();
    let qv = DVector::from_vec(q);
    // B = R * diag(q); D = diag(1/q_i).
    let b = DMatrix::from_fn(k, k, |i, j| reward.get(i, j) * qv[j]);
    let d_diag = qv.map(|qi| 1.0 / qi);
    let identity = DMatrix::identity(k, k);
    let b_inv = b.clone().lu().solve(&identity).ok_or(DecompositionError::SolveFailure)?;
    Ok(Decomposition { q: qv, b, b_inv, d_diag })
}

/// Horse whose payout row weakly dominates every other row in every column.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DominantWager {
    pub horse: usize,
}

/// Smallest row index that weakly dominates every column, if any.
pub fn find_dominant_wager(reward: &RewardMatrix) -> Option<DominantWager> {
    let k = reward.k();
    (0..k)
        .find(|&i| {
            (0..k).all(|w| (0..k).all(|other| reward.get(i, w) >= reward.get(other, w)))
        })
        .map(|horse| DominantWager { horse })
}

/// Closed-form existence test for K = 2, used as a cross-check against
/// `decompose`: the decomposition exists iff r12 < r22 and r21 < r11, or
/// r12 > r22 and r21 > r11.
pub fn decomposition_exists_2x2(reward: &RewardMatrix) -> bool {
    assert_eq!(reward.k(), 2);
    let (r11, r12) = (reward.get(0, 0), reward.get(0, 1));
    let (r21, r22) = (reward.get(1, 0), reward.get(1, 1));
    (r12 < r22 && r21 < r11) || (r12 > r22 && r21 > r11)
}

/// Effective strategy T = S * B over the diagonalized race.
pub fn effective_strategy(s: &StrategyMatrix, decomp: &Decomposition) -> StrategyMatrix {
    let t = s.matrix() * decomp.b();
    StrategyMatrix::from_matrix(t)
        .expect("S * B is row stochastic for row-stochastic S and B")
}

/// The raw matrix T * B^-1 failed strategy validation; the effective
/// strategy is unreachable by any real wager.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("actual strategy is invalid: {report}")]
pub struct InvalidActual {
    pub raw: DMatrix<f64>,
    pub report: RejectionReport<StrategyViolation>,
}

/// Recover the actual strategy S = T * B^-1, if it is a valid strategy.
pub fn actual_strategy(
    t: &StrategyMatrix,
    decomp: &Decomposition,
) -> Result<StrategyMatrix, InvalidActual> {
    let raw = t.matrix() * decomp.b_inv();
    StrategyMatrix::from_matrix(raw.clone()).map_err(|report| InvalidActual { raw, report })
}
