//! Entropies, divergences, posteriors, channel capacity, and the genie's
//! cost function.
//!
//! All logarithms are base 2; results are in bits. The 0 * log 0 = 0
//! convention applies throughout.

use crate::types::{Channel, Prior, Scenario};
use nalgebra::{DMatrix, DVector};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InfoError {
    /// The channel never produces output `y` under this prior, so the
    /// posterior row for `y` is undefined (the channel wastes a symbol).
    #[error("output symbol {0} is unreachable (p_Y = 0)")]
    UnreachableOutput(usize),
    /// p places mass where q does not.
    #[error("support violation: p({0}) > 0 but q({0}) = 0")]
    SupportViolation(usize),
    /// The capacity iteration did not reach the requested tolerance.
    #[error("capacity solver did not converge within {iterations} iterations (gap {gap:e})")]
    NonConvergence { iterations: usize, gap: f64 },
}

// ---------------------------------------------------------------------------
// Posterior
// ---------------------------------------------------------------------------

/// Bayes posterior p_{W|Y}: entry (y, w) = p_{W|Y}(w | y), together with the
/// output marginal p_Y.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorMatrix {
    m: DMatrix<f64>,
    p_y: DVector<f64>,
}

impl PosteriorMatrix {
    pub fn k(&self) -> usize {
        self.m.nrows()
    }

    /// p_{W|Y}(w | y)
    pub fn prob(&self, y: usize, w: usize) -> f64 {
        self.m[(y, w)]
    }

    pub fn output_marginal(&self, y: usize) -> f64 {
        self.p_y[y]
    }

    pub fn row(&self, y: usize) -> Vec<f64> {
        self.m.row(y).iter().copied().collect()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }
}

/// Bayes inversion of (prior, channel). Errors if any output has zero
/// marginal probability.
pub fn posterior(prior: &Prior, channel: &Channel) -> Result<PosteriorMatrix, InfoError> {
    let k = prior.len();
    let p_y = output_marginal(prior, channel);
    for y in 0..k {
        if p_y[y] <= 0.0 {
            return Err(InfoError::UnreachableOutput(y));
        }
    }
    let m = DMatrix::from_fn(k, k, |y, w| prior.prob(w) * channel.prob(w, y) / p_y[y]);
    Ok(PosteriorMatrix { m, p_y: DVector::from_vec(p_y) })
}

/// Output marginal p_Y(y) = sum_w p_W(w) p_{Y|X}(y|w), under the trivial
/// encoder x = w.
pub fn output_marginal(prior: &Prior, channel: &Channel) -> Vec<f64> {
    let k = prior.len();
    (0..k)
        .map(|y| (0..k).map(|w| prior.prob(w) * channel.prob(w, y)).sum())
        .collect()
}

// ---------------------------------------------------------------------------
// Entropies
// ---------------------------------------------------------------------------

/// Shannon entropy in bits.
pub fn entropy(p: &[f64]) -> f64 {
    -p.iter().filter(|&&v| v > 0.0).map(|&v| v * v.log2()).sum::<f64>()
}

/// Binary entropy function.
pub fn binary_entropy(p: f64) -> f64 {
    entropy(&[p, 1.0 - p])
}

/// H(W|Y) in bits. Unreachable outputs contribute nothing to the sum.
pub fn conditional_entropy(prior: &Prior, channel: &Channel) -> f64 {
    let k = prior.len();
    let p_y = output_marginal(prior, channel);
    let mut h = 0.0;
    for y in 0..k {
        if p_y[y] <= 0.0 {
            continue;
        }
        for w in 0..k {
            let joint = prior.prob(w) * channel.prob(w, y);
            if joint > 0.0 {
                h -= joint * (joint / p_y[y]).log2();
            }
        }
    }
    h
}

/// I(W;Y) = H(W) - H(W|Y), clamped at zero against rounding.
pub fn mutual_information(prior: &Prior, channel: &Channel) -> f64 {
    let i = entropy(prior.as_slice()) - conditional_entropy(prior, channel);
    if i < 0.0 && i > -1e-12 {
        0.0
    } else {
        i
    }
}

/// D(p || q) in bits. Requires support(p) within support(q).
pub fn kl_divergence(p: &[f64], q: &[f64]) -> Result<f64, InfoError> {
    let mut d = 0.0;
    for (i, (&pi, &qi)) in p.iter().zip(q.iter()).enumerate() {
        if pi > 0.0 {
            if qi <= 0.0 {
                return Err(InfoError::SupportViolation(i));
            }
            d += pi * (pi / qi).log2();
        }
    }
    Ok(d)
}

// ---------------------------------------------------------------------------
// Cost
// ---------------------------------------------------------------------------

/// The genie's per-winner commission rho(w) in bits.
#[derive(Debug, Clone, PartialEq)]
pub struct CostFunction {
    rho: Vec<f64>,
}

impl CostFunction {
    pub fn from_vec(rho: Vec<f64>) -> Self {
        Self { rho }
    }

    pub fn get(&self, w: usize) -> f64 {
        self.rho[w]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.rho
    }
}

/// rho(w) = c1 * D( p_{Y|W}(.|w) || p_Y(.) ) + rho1.
pub fn cost_function(scenario: &Scenario) -> Result<CostFunction, InfoError> {
    let prior = scenario.prior();
    let channel = scenario.channel();
    let p_y = output_marginal(prior, channel);
    let rho = (0..scenario.k())
        .map(|w| {
            // A winner the prior never produces contributes nothing; its
            // channel row may point at unreachable outputs.
            if prior.prob(w) <= 0.0 {
                return Ok(scenario.cost_offset());
            }
            kl_divergence(&channel.row(w), &p_y)
                .map(|d| scenario.cost_rate() * d + scenario.cost_offset())
        })
        .collect::<Result<Vec<f64>, _>>()
        .map_err(|e| match e {
            InfoError::SupportViolation(y) => InfoError::UnreachableOutput(y),
            other => other,
        })?;
    Ok(CostFunction { rho })
}

/// Expected cost Gamma-bar = sum_w p_W(w) rho(w) = c1 * I(W;Y) + rho1.
pub fn expected_cost(scenario: &Scenario) -> Result<f64, InfoError> {
    let cost = cost_function(scenario)?;
    Ok((0..scenario.k()).map(|w| scenario.prior().prob(w) * cost.get(w)).sum())
}

// ---------------------------------------------------------------------------
// Capacity
// ---------------------------------------------------------------------------

pub const CAPACITY_DEFAULT_TOL: f64 = 1e-10;
pub const CAPACITY_MAX_ITERATIONS: usize = 10_000;

/// Shannon capacity of the channel in bits, with the capacity-achieving
/// input distribution. Alternating maximization; the iteration stops when
/// the standard upper and lower capacity bounds agree within `tol`.
pub fn channel_capacity(channel: &Channel, tol: f64) -> Result<(f64, Vec<f64>), InfoError> {
    assert!(tol > 0.0);
    let k = channel.k();
    let mut p: Vec<f64> = vec![1.0 / k as f64; k];
    let mut gap = f64::INFINITY;
    for _ in 0..CAPACITY_MAX_ITERATIONS {
        let q: Vec<f64> = (0..k)
            .map(|y| (0..k).map(|x| p[x] * channel.prob(x, y)).sum())
            .collect();
        // d[x] = D( p(.|x) || q ), skipping outputs outside q's support
        // (those have zero probability under every channel row reachable
        // from the current p).
        let d: Vec<f64> = (0..k)
            .map(|x| {
                (0..k)
                    .filter(|&y| channel.prob(x, y) > 0.0 && q[y] > 0.0)
                    .map(|y| channel.prob(x, y) * (channel.prob(x, y) / q[y]).log2())
                    .sum()
            })
            .collect();
        let lower: f64 = (0..k).map(|x| p[x] * d[x]).sum();
        let upper = d.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        gap = upper - lower;
        if gap.abs() <= tol {
            return Ok((lower.max(0.0), p));
        }
        let weights: Vec<f64> = (0..k).map(|x| p[x] * (d[x] - lower).exp2()).collect();
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) || !total.is_finite() {
            break;
        }
        for x in 0..k {
            p[x] = weights[x] / total;
        }
    }
    Err(InfoError::NonConvergence { iterations: CAPACITY_MAX_ITERATIONS, gap })
}
