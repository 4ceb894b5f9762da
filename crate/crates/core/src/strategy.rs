//! Growth rates, the perfect-information / no-side-information /
//! proportional strategies, the constrained growth-rate optimizer, and
//! distortion accounting.
//!
//! The log growth objective separates over channel outputs y, and each
//! row's objective is concave in the wager fractions, so the optimizer
//! solves one projected concave maximization per row.

use crate::infotheory::{self, CostFunction, InfoError};
use crate::types::{BoxConstraints, RewardMatrix, Scenario, StrategyMatrix};
use nalgebra::DMatrix;
use thiserror::Error;

const LN_2: f64 = std::f64::consts::LN_2;

/// Growth and loss accounting for one (scenario, strategy) pair, in
/// bits per race.
#[derive(Debug, Clone, PartialEq)]
pub struct GrowthReport {
    /// Expected log growth rate of the given strategy.
    pub lambda: f64,
    /// Optimal growth under perfect information.
    pub lambda_pi: f64,
    /// Optimal growth with no side information.
    pub lambda_nsi: f64,
    /// Expected distortion.
    pub delta: f64,
    /// Expected cost.
    pub gamma: f64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OptimizeError {
    #[error("infeasible constraints: lo={lo}, hi={hi} for K={k}")]
    InfeasibleConstraints { lo: f64, hi: f64, k: usize },
    #[error("optimizer did not converge within {max_iterations} iterations")]
    NonConvergence { max_iterations: usize },
    #[error(transparent)]
    Info(#[from] InfoError),
}

/// Options for [`optimize_strategy`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizeOptions {
    /// Per-entry box constraints on wager fractions.
    pub constraints: Option<BoxConstraints>,
    /// Convergence tolerance on the growth rate.
    pub tol: f64,
    /// Iteration budget per row.
    pub max_iterations: usize,
}

impl Default for OptimizeOptions {
    fn default() -> Self {
        Self { constraints: None, tol: 1e-10, max_iterations: 100_000 }
    }
}

impl OptimizeOptions {
    pub fn from_scenario(scenario: &Scenario) -> Self {
        Self { constraints: scenario.constraints(), ..Self::default() }
    }
}

// ---------------------------------------------------------------------------
// Growth rates
// ---------------------------------------------------------------------------

/// Per-race return of strategy row y when w wins: (S * R)(y, w).
fn returns_matrix(s: &StrategyMatrix, r: &RewardMatrix) -> DMatrix<f64> {
    s.matrix() * r.matrix()
}

/// Expected log growth rate in bits per race.
///
/// Lambda = sum_{w,y} p_W(w) p_{Y|X}(y|w) log2( sum_i s(y,i) r(i,w) ).
/// Returns negative infinity if any positive-probability (w, y) pair has
/// zero return (ruin).
pub fn growth_rate(scenario: &Scenario, s: &StrategyMatrix) -> f64 {
    let k = scenario.k();
    let returns = returns_matrix(s, scenario.reward());
    let mut lambda = 0.0;
    for w in 0..k {
        for y in 0..k {
            let p = scenario.prior().prob(w) * scenario.channel().prob(w, y);
            if p <= 0.0 {
                continue;
            }
            let ret = returns[(y, w)];
            if ret <= 0.0 {
                return f64::NEG_INFINITY;
            }
            lambda += p * ret.log2();
        }
    }
    lambda
}

/// Perfect-information strategy: row w is one-hot at the largest payout
/// for winner w (smallest index on ties).
pub fn pi_strategy(reward: &RewardMatrix) -> StrategyMatrix {
    let k = reward.k();
    let rows = (0..k)
        .map(|w| {
            let best = reward.column_argmax(w);
            (0..k).map(|i| if i == best { 1.0 } else { 0.0 }).collect()
        })
        .collect();
    StrategyMatrix::new(rows).expect("one-hot rows are row stochastic")
}

/// Optimal growth under perfect information:
/// Lambda_PI = sum_w p_W(w) log2 max_i r(i, w).
pub fn pi_growth(scenario: &Scenario) -> f64 {
    (0..scenario.k())
        .map(|w| scenario.prior().prob(w) * scenario.reward().column_max(w).log2())
        .sum()
}

/// Optimal strategy when the side information is uninformative. All rows
/// are equal; for diagonal rewards this is proportional betting on the
/// prior.
pub fn nsi_strategy(scenario: &Scenario) -> Result<StrategyMatrix, OptimizeError> {
    let k = scenario.k();
    if scenario.reward().is_diagonal() && scenario.constraints().is_none() {
        let rows = (0..k).map(|_| scenario.prior().as_slice().to_vec()).collect();
        return Ok(StrategyMatrix::new(rows).expect("prior rows are stochastic"));
    }
    let blind = Scenario::new(
        scenario.prior().clone(),
        crate::types::Channel::uninformative(k),
        scenario.reward().clone(),
        scenario.cost_rate(),
        scenario.cost_offset(),
        scenario.constraints(),
    )
    .expect("replacing the channel preserves validity");
    let (s, _) = optimize_strategy(&blind, &OptimizeOptions::from_scenario(&blind))?;
    Ok(s)
}

/// Growth rate of the optimal strategy with no side information.
pub fn nsi_growth(scenario: &Scenario) -> Result<f64, OptimizeError> {
    let s = nsi_strategy(scenario)?;
    // Evaluate on the real scenario: with identical rows the observation
    // does not matter.
    Ok(growth_rate(scenario, &s))
}

/// Conditional proportional betting: S = P_{W|Y}.
pub fn proportional_strategy(scenario: &Scenario) -> Result<StrategyMatrix, InfoError> {
    let post = infotheory::posterior(scenario.prior(), scenario.channel())?;
    Ok(StrategyMatrix::from_matrix(post.matrix().clone())
        .expect("posterior rows are stochastic"))
}

// ---------------------------------------------------------------------------
// Optimizer
// ---------------------------------------------------------------------------

/// Maximize the growth rate over row-stochastic strategies within the box
/// constraints. Each output row is solved independently by projected
/// gradient ascent with backtracking; the row objective is concave, so the
/// local optimum is global.
pub fn optimize_strategy(
    scenario: &Scenario,
    opts: &OptimizeOptions,
) -> Result<(StrategyMatrix, f64), OptimizeError> {
    let k = scenario.k();
    let boxc = opts.constraints.unwrap_or(BoxConstraints { lo: 0.0, hi: 1.0 });
    if !boxc.feasible(k) {
        return Err(OptimizeError::InfeasibleConstraints { lo: boxc.lo, hi: boxc.hi, k });
    }
    let mut rows = Vec::with_capacity(k);
    for y in 0..k {
        // Weight on winner w for this row; an unnormalized conditional.
        let weights: Vec<f64> = (0..k)
            .map(|w| scenario.prior().prob(w) * scenario.channel().prob(w, y))
            .collect();
        rows.push(optimize_row(scenario.reward(), &weights, boxc, opts)?);
    }
    let s = StrategyMatrix::new(rows).expect("projected rows are row stochastic");
    Ok((s.clone(), growth_rate(scenario, &s)))
}

/// Row objective: sum_w weight(w) * log2( sum_i s_i r(i,w) ).
fn row_objective(reward: &RewardMatrix, weights: &[f64], s: &[f64]) -> f64 {
    let k = weights.len();
    let mut obj = 0.0;
    for w in 0..k {
        if weights[w] <= 0.0 {
            continue;
        }
        let ret: f64 = (0..k).map(|i| s[i] * reward.get(i, w)).sum();
        if ret <= 0.0 {
            return f64::NEG_INFINITY;
        }
        obj += weights[w] * ret.log2();
    }
    obj
}

fn row_gradient(reward: &RewardMatrix, weights: &[f64], s: &[f64], grad: &mut [f64]) {
    let k = weights.len();
    grad.fill(0.0);
    for w in 0..k {
        if weights[w] <= 0.0 {
            continue;
        }
        let ret: f64 = (0..k).map(|i| s[i] * reward.get(i, w)).sum();
        let scale = weights[w] / (ret * LN_2);
        for (i, g) in grad.iter_mut().enumerate() {
            *g += scale * reward.get(i, w);
        }
    }
}

fn optimize_row(
    reward: &RewardMatrix,
    weights: &[f64],
    boxc: BoxConstraints,
    opts: &OptimizeOptions,
) -> Result<Vec<f64>, OptimizeError> {
    let k = weights.len();
    let mut s = project_box_simplex(&vec![1.0 / k as f64; k], boxc);
    let mut obj = row_objective(reward, weights, &s);
    debug_assert!(obj.is_finite(), "interior start must have finite objective");
    let mut grad = vec![0.0; k];
    let mut step = 1.0f64;
    for _ in 0..opts.max_iterations {
        row_gradient(reward, weights, &s, &mut grad);
        // Backtrack along the projection arc until the objective improves.
        let mut improved = false;
        let mut t = step;
        for _ in 0..60 {
            let trial: Vec<f64> =
                s.iter().zip(&grad).map(|(&si, &gi)| si + t * gi).collect();
            let candidate = project_box_simplex(&trial, boxc);
            let cand_obj = row_objective(reward, weights, &candidate);
            if cand_obj > obj {
                let moved = candidate
                    .iter()
                    .zip(&s)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0f64, f64::max);
                let gain = cand_obj - obj;
                s = candidate;
                obj = cand_obj;
                step = (t * 2.0).min(1e6);
                improved = true;
                if gain <= opts.tol && moved <= 1e-12 {
                    return Ok(s);
                }
                break;
            }
            t *= 0.5;
        }
        if !improved {
            // No ascent direction within machine precision: converged.
            return Ok(s);
        }
    }
    Err(OptimizeError::NonConvergence { max_iterations: opts.max_iterations })
}

/// Euclidean projection onto { lo <= s_i <= hi, sum s_i = 1 }, by bisection
/// on the simplex multiplier.
fn project_box_simplex(v: &[f64], boxc: BoxConstraints) -> Vec<f64> {
    let clamp_sum = |tau: f64| -> f64 {
        v.iter().map(|&vi| (vi - tau).clamp(boxc.lo, boxc.hi)).sum::<f64>()
    };
    let mut lo_tau = v.iter().cloned().fold(f64::INFINITY, f64::min) - boxc.hi - 1.0;
    let mut hi_tau = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - boxc.lo + 1.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo_tau + hi_tau);
        if clamp_sum(mid) > 1.0 {
            lo_tau = mid;
        } else {
            hi_tau = mid;
        }
    }
    let tau = 0.5 * (lo_tau + hi_tau);
    v.iter().map(|&vi| (vi - tau).clamp(boxc.lo, boxc.hi)).collect()
}

// ---------------------------------------------------------------------------
// Distortion
// ---------------------------------------------------------------------------

/// Per-race loss d(w, y) = log2 max_i r(i,w) - log2 sum_i s(y,i) r(i,w)
/// - rho(w), in bits. Cells with zero return are +infinity.
pub fn distortion_function(
    scenario: &Scenario,
    s: &StrategyMatrix,
) -> Result<DMatrix<f64>, InfoError> {
    let cost = infotheory::cost_function(scenario)?;
    Ok(distortion_with_cost(scenario.reward(), s, &cost))
}

/// Distortion of `s` against `reward` with an explicit cost function;
/// entry (w, y).
pub fn distortion_with_cost(
    reward: &RewardMatrix,
    s: &StrategyMatrix,
    cost: &CostFunction,
) -> DMatrix<f64> {
    let k = reward.k();
    let returns = returns_matrix(s, reward);
    DMatrix::from_fn(k, k, |w, y| {
        let ret = returns[(y, w)];
        if ret <= 0.0 {
            f64::INFINITY
        } else {
            reward.column_max(w).log2() - ret.log2() - cost.get(w)
        }
    })
}

/// Expected distortion Delta-bar = sum_{w,y} p(w,y) d(w,y)
/// = Lambda_PI - Lambda(S) - Gamma-bar.
pub fn expected_distortion(scenario: &Scenario, s: &StrategyMatrix) -> Result<f64, InfoError> {
    let k = scenario.k();
    let d = distortion_function(scenario, s)?;
    let mut delta = 0.0;
    for w in 0..k {
        for y in 0..k {
            let p = scenario.prior().prob(w) * scenario.channel().prob(w, y);
            if p > 0.0 {
                delta += p * d[(w, y)];
            }
        }
    }
    Ok(delta)
}

/// Full growth accounting for one strategy.
pub fn growth_report(scenario: &Scenario, s: &StrategyMatrix) -> Result<GrowthReport, OptimizeError> {
    let lambda = growth_rate(scenario, s);
    let lambda_pi = pi_growth(scenario);
    let lambda_nsi = nsi_growth(scenario)?;
    let gamma = infotheory::expected_cost(scenario)?;
    let delta = lambda_pi - lambda - gamma;
    Ok(GrowthReport { lambda, lambda_pi, lambda_nsi, delta, gamma })
}
