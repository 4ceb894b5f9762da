//! Domain types: priors, channels, reward and strategy matrices, scenarios.
//!
//! Every type is validated on construction and immutable afterwards, so all
//! of them are safe to share across threads. Rejection reports enumerate
//! every violated condition, not just the first, to aid scenario authoring.

use nalgebra::{DMatrix, DVector};
use std::fmt;
use thiserror::Error;

/// Tolerance for stochasticity and nonnegativity checks.
pub const STOCHASTIC_TOL: f64 = 1e-9;
/// Relative determinant threshold for reward matrix invertibility,
/// applied after scaling each row by its maximum.
pub const INVERTIBILITY_TOL: f64 = 1e-12;

// ---------------------------------------------------------------------------
// Prior
// ---------------------------------------------------------------------------

/// Probability vector over the K horses.
#[derive(Debug, Clone, PartialEq)]
pub struct Prior {
    p: DVector<f64>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DistributionViolation {
    #[error("empty distribution")]
    Empty,
    #[error("entry {index} is negative: {value}")]
    NegativeEntry { index: usize, value: f64 },
    #[error("entries sum to {sum}, expected 1")]
    SumNotOne { sum: f64 },
    #[error("entry {index} is not finite")]
    NotFinite { index: usize },
}

impl Prior {
    pub fn new(p: Vec<f64>) -> Result<Self, RejectionReport<DistributionViolation>> {
        let violations = check_distribution(&p);
        if violations.is_empty() {
            Ok(Self { p: DVector::from_vec(p) })
        } else {
            Err(RejectionReport { violations })
        }
    }

    pub fn uniform(k: usize) -> Self {
        Self { p: DVector::from_element(k, 1.0 / k as f64) }
    }

    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }

    pub fn prob(&self, w: usize) -> f64 {
        self.p[w]
    }

    pub fn as_slice(&self) -> &[f64] {
        self.p.as_slice()
    }
}

fn check_distribution(p: &[f64]) -> Vec<DistributionViolation> {
    let mut violations = Vec::new();
    if p.is_empty() {
        violations.push(DistributionViolation::Empty);
        return violations;
    }
    for (i, &v) in p.iter().enumerate() {
        if !v.is_finite() {
            violations.push(DistributionViolation::NotFinite { index: i });
        } else if v < -STOCHASTIC_TOL {
            violations.push(DistributionViolation::NegativeEntry { index: i, value: v });
        }
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > STOCHASTIC_TOL {
        violations.push(DistributionViolation::SumNotOne { sum });
    }
    violations
}

// ---------------------------------------------------------------------------
// Channel
// ---------------------------------------------------------------------------

/// K x K conditional distribution; entry (x, y) is p_{Y|X}(y | x).
/// Rows index the input symbol, columns the output symbol.
#[derive(Debug, Clone, PartialEq)]
pub struct Channel {
    m: DMatrix<f64>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChannelViolation {
    #[error("channel matrix is {rows}x{cols}, expected square")]
    NotSquare { rows: usize, cols: usize },
    #[error("row {row}: {violation}")]
    Row { row: usize, violation: DistributionViolation },
}

impl Channel {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self, RejectionReport<ChannelViolation>> {
        let mut violations = Vec::new();
        let k = rows.len();
        if k == 0 || rows.iter().any(|r| r.len() != k) {
            violations.push(ChannelViolation::NotSquare {
                rows: k,
                cols: rows.first().map_or(0, |r| r.len()),
            });
            return Err(RejectionReport { violations });
        }
        for (x, row) in rows.iter().enumerate() {
            for v in check_distribution(row) {
                violations.push(ChannelViolation::Row { row: x, violation: v });
            }
        }
        if !violations.is_empty() {
            return Err(RejectionReport { violations });
        }
        let m = DMatrix::from_fn(k, k, |x, y| rows[x][y]);
        Ok(Self { m })
    }

    /// Binary symmetric channel with crossover probability `q`.
    pub fn bsc(q: f64) -> Self {
        Self { m: DMatrix::from_row_slice(2, 2, &[1.0 - q, q, q, 1.0 - q]) }
    }

    /// Z channel: input 1 is error-free, input 2 crosses over to output 1
    /// with probability `q`.
    pub fn z(q: f64) -> Self {
        Self { m: DMatrix::from_row_slice(2, 2, &[1.0, 0.0, q, 1.0 - q]) }
    }

    /// Noiseless K-ary channel (identity).
    pub fn noiseless(k: usize) -> Self {
        Self { m: DMatrix::identity(k, k) }
    }

    /// Channel with all rows equal to the uniform distribution; the output
    /// carries no information about the input.
    pub fn uninformative(k: usize) -> Self {
        Self { m: DMatrix::from_element(k, k, 1.0 / k as f64) }
    }

    pub fn k(&self) -> usize {
        self.m.nrows()
    }

    /// p_{Y|X}(y | x)
    pub fn prob(&self, x: usize, y: usize) -> f64 {
        self.m[(x, y)]
    }

    /// Conditional distribution of the output given input `x`.
    pub fn row(&self, x: usize) -> Vec<f64> {
        self.m.row(x).iter().copied().collect()
    }
}

// ---------------------------------------------------------------------------
// RewardMatrix
// ---------------------------------------------------------------------------

/// K x K payout matrix; entry (i, w) is the wealth multiple returned per
/// unit wagered on horse i when horse w wins.
#[derive(Debug, Clone, PartialEq)]
pub struct RewardMatrix {
    r: DMatrix<f64>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RewardViolation {
    #[error("reward matrix is {rows}x{cols}, expected square")]
    NotSquare { rows: usize, cols: usize },
    #[error("reward matrix is numerically singular (scaled det {scaled_det:e})")]
    NotInvertible { scaled_det: f64 },
    #[error("diagonal entry ({row},{row}) is not positive: {value}")]
    NonpositiveDiagonal { row: usize, value: f64 },
    #[error("off-diagonal entry ({row},{col}) is negative: {value}")]
    NegativeOffDiagonal { row: usize, col: usize, value: f64 },
    #[error("row {row}: diagonal entry {diag} is less than entry ({row},{col}) = {value}")]
    DiagonalNotRowMax { row: usize, col: usize, diag: f64, value: f64 },
    #[error("entry ({row},{col}) is not finite")]
    NotFinite { row: usize, col: usize },
}

/// Validate a raw matrix against the four reward-matrix conditions:
/// invertible, positive diagonal, nonnegative off the diagonal, and
/// winning bets pay at least as much as non-winning bets.
pub fn validate_reward_matrix(
    rows: &[Vec<f64>],
) -> Result<RewardMatrix, RejectionReport<RewardViolation>> {
    let mut violations = Vec::new();
    let k = rows.len();
    if k == 0 || rows.iter().any(|r| r.len() != k) {
        violations.push(RewardViolation::NotSquare {
            rows: k,
            cols: rows.first().map_or(0, |r| r.len()),
        });
        return Err(RejectionReport { violations });
    }
    for (i, row) in rows.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            if !v.is_finite() {
                violations.push(RewardViolation::NotFinite { row: i, col: j });
            }
        }
    }
    if !violations.is_empty() {
        return Err(RejectionReport { violations });
    }
    for (i, row) in rows.iter().enumerate() {
        let diag = row[i];
        if diag <= 0.0 {
            violations.push(RewardViolation::NonpositiveDiagonal { row: i, value: diag });
        }
        for (j, &v) in row.iter().enumerate() {
            if j != i {
                if v < 0.0 {
                    violations.push(RewardViolation::NegativeOffDiagonal { row: i, col: j, value: v });
                }
                if diag < v {
                    violations.push(RewardViolation::DiagonalNotRowMax {
                        row: i,
                        col: j,
                        diag,
                        value: v,
                    });
                }
            }
        }
    }
    // Invertibility is tested on a row-max-scaled copy so the threshold is
    // insensitive to the overall payout scale.
    let mut scaled = DMatrix::from_fn(k, k, |i, j| rows[i][j]);
    let mut scalable = true;
    for i in 0..k {
        let row_max = rows[i].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if row_max <= 0.0 {
            scalable = false;
            break;
        }
        for j in 0..k {
            scaled[(i, j)] /= row_max;
        }
    }
    let det = if scalable { scaled.determinant() } else { 0.0 };
    if det.abs() <= INVERTIBILITY_TOL {
        violations.push(RewardViolation::NotInvertible { scaled_det: det });
    }
    if violations.is_empty() {
        Ok(RewardMatrix { r: DMatrix::from_fn(k, k, |i, j| rows[i][j]) })
    } else {
        Err(RejectionReport { violations })
    }
}

impl RewardMatrix {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self, RejectionReport<RewardViolation>> {
        validate_reward_matrix(&rows)
    }

    pub fn diagonal(payouts: Vec<f64>) -> Result<Self, RejectionReport<RewardViolation>> {
        let k = payouts.len();
        let rows: Vec<Vec<f64>> = (0..k)
            .map(|i| (0..k).map(|j| if i == j { payouts[i] } else { 0.0 }).collect())
            .collect();
        validate_reward_matrix(&rows)
    }

    /// Fair odds for the given prior: diagonal payouts 1 / p_W(w).
    pub fn fair_odds(prior: &Prior) -> Self {
        let k = prior.len();
        let r = DMatrix::from_fn(k, k, |i, j| if i == j { 1.0 / prior.prob(i) } else { 0.0 });
        Self { r }
    }

    pub fn k(&self) -> usize {
        self.r.nrows()
    }

    /// r(i, w): payout on horse i when w wins.
    pub fn get(&self, i: usize, w: usize) -> f64 {
        self.r[(i, w)]
    }

    pub fn is_diagonal(&self) -> bool {
        let k = self.k();
        (0..k).all(|i| (0..k).all(|j| i == j || self.r[(i, j)] == 0.0))
    }

    /// Maximum payout over horses for winner `w` (the column maximum).
    pub fn column_max(&self, w: usize) -> f64 {
        self.r.column(w).iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Smallest row index attaining the column maximum for winner `w`.
    pub fn column_argmax(&self, w: usize) -> usize {
        let mut best = 0;
        for i in 1..self.k() {
            if self.r[(i, w)] > self.r[(best, w)] {
                best = i;
            }
        }
        best
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.r
    }
}

// ---------------------------------------------------------------------------
// StrategyMatrix
// ---------------------------------------------------------------------------

/// K x K row-stochastic matrix; entry (y, i) is the fraction of wealth bet
/// on horse i after observing output y.
#[derive(Debug, Clone, PartialEq)]
pub struct StrategyMatrix {
    s: DMatrix<f64>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StrategyViolation {
    #[error("strategy matrix is {rows}x{cols}, expected square")]
    NotSquare { rows: usize, cols: usize },
    #[error("negative wager at ({row},{col}): {value}")]
    NegativeEntry { row: usize, col: usize, value: f64 },
    #[error("row {row} sums to {sum}, expected 1")]
    RowSumNotOne { row: usize, sum: f64 },
    #[error("entry ({row},{col}) is not finite")]
    NotFinite { row: usize, col: usize },
}

/// Validate a raw matrix as a strategy matrix (row stochastic).
pub fn validate_strategy_matrix(
    rows: &[Vec<f64>],
) -> Result<StrategyMatrix, RejectionReport<StrategyViolation>> {
    let mut violations = Vec::new();
    let k = rows.len();
    if k == 0 || rows.iter().any(|r| r.len() != k) {
        violations.push(StrategyViolation::NotSquare {
            rows: k,
            cols: rows.first().map_or(0, |r| r.len()),
        });
        return Err(RejectionReport { violations });
    }
    for (y, row) in rows.iter().enumerate() {
        let mut sum = 0.0;
        for (i, &v) in row.iter().enumerate() {
            if !v.is_finite() {
                violations.push(StrategyViolation::NotFinite { row: y, col: i });
                continue;
            }
            if v < -STOCHASTIC_TOL {
                violations.push(StrategyViolation::NegativeEntry { row: y, col: i, value: v });
            }
            sum += v;
        }
        if (sum - 1.0).abs() > STOCHASTIC_TOL {
            violations.push(StrategyViolation::RowSumNotOne { row: y, sum });
        }
    }
    if violations.is_empty() {
        Ok(StrategyMatrix { s: DMatrix::from_fn(k, k, |y, i| rows[y][i]) })
    } else {
        Err(RejectionReport { violations })
    }
}

impl StrategyMatrix {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self, RejectionReport<StrategyViolation>> {
        validate_strategy_matrix(&rows)
    }

    pub fn identity(k: usize) -> Self {
        Self { s: DMatrix::identity(k, k) }
    }

    /// Validate an already-assembled matrix.
    pub fn from_matrix(
        m: DMatrix<f64>,
    ) -> Result<Self, RejectionReport<StrategyViolation>> {
        let rows: Vec<Vec<f64>> =
            (0..m.nrows()).map(|y| m.row(y).iter().copied().collect()).collect();
        validate_strategy_matrix(&rows)
    }

    pub fn k(&self) -> usize {
        self.s.nrows()
    }

    /// s(y, i): fraction bet on horse i after observing y.
    pub fn get(&self, y: usize, i: usize) -> f64 {
        self.s[(y, i)]
    }

    pub fn row(&self, y: usize) -> Vec<f64> {
        self.s.row(y).iter().copied().collect()
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.k()).map(|y| self.row(y)).collect()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.s
    }
}

// ---------------------------------------------------------------------------
// Scenario
// ---------------------------------------------------------------------------

/// Per-entry box constraints on strategy wagers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxConstraints {
    pub lo: f64,
    pub hi: f64,
}

impl BoxConstraints {
    /// A feasible row-stochastic row exists iff lo * K <= 1 <= hi * K.
    pub fn feasible(&self, k: usize) -> bool {
        let k = k as f64;
        0.0 <= self.lo && self.lo <= self.hi && self.hi <= 1.0 && self.lo * k <= 1.0 && 1.0 <= self.hi * k
    }

    pub fn contains(&self, s: &StrategyMatrix) -> bool {
        let tol = STOCHASTIC_TOL;
        s.matrix().iter().all(|&v| v >= self.lo - tol && v <= self.hi + tol)
    }
}

/// A complete betting problem: prior, channel, reward matrix, genie cost
/// parameters, and optional wager box constraints.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    prior: Prior,
    channel: Channel,
    reward: RewardMatrix,
    cost_rate: f64,
    cost_offset: f64,
    constraints: Option<BoxConstraints>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScenarioViolation {
    #[error("dimension mismatch: prior has {prior} entries, channel is {channel}x{channel}, reward is {reward}x{reward}")]
    DimensionMismatch { prior: usize, channel: usize, reward: usize },
    #[error("invalid {which}: {detail}")]
    InvalidComponent { which: &'static str, detail: String },
    #[error("infeasible box constraints lo={lo}, hi={hi} for K={k}")]
    InfeasibleConstraints { lo: f64, hi: f64, k: usize },
}

impl Scenario {
    pub fn new(
        prior: Prior,
        channel: Channel,
        reward: RewardMatrix,
        cost_rate: f64,
        cost_offset: f64,
        constraints: Option<BoxConstraints>,
    ) -> Result<Self, RejectionReport<ScenarioViolation>> {
        let mut violations = Vec::new();
        let k = prior.len();
        if channel.k() != k || reward.k() != k {
            violations.push(ScenarioViolation::DimensionMismatch {
                prior: k,
                channel: channel.k(),
                reward: reward.k(),
            });
        }
        if !(cost_rate > 0.0 && cost_rate.is_finite()) {
            violations.push(ScenarioViolation::InvalidComponent {
                which: "cost rate c1",
                detail: format!("must be a positive real, got {cost_rate}"),
            });
        }
        if !cost_offset.is_finite() {
            violations.push(ScenarioViolation::InvalidComponent {
                which: "cost offset rho1",
                detail: format!("must be finite, got {cost_offset}"),
            });
        }
        if let Some(b) = constraints {
            if !b.feasible(k) {
                violations.push(ScenarioViolation::InfeasibleConstraints { lo: b.lo, hi: b.hi, k });
            }
        }
        if violations.is_empty() {
            Ok(Self { prior, channel, reward, cost_rate, cost_offset, constraints })
        } else {
            Err(RejectionReport { violations })
        }
    }

    pub fn prior(&self) -> &Prior {
        &self.prior
    }

    pub fn channel(&self) -> &Channel {
        &self.channel
    }

    pub fn reward(&self) -> &RewardMatrix {
        &self.reward
    }

    /// Rate of the genie's commission, c1 > 0.
    pub fn cost_rate(&self) -> f64 {
        self.cost_rate
    }

    /// Constant cost of operating the channel, rho1.
    pub fn cost_offset(&self) -> f64 {
        self.cost_offset
    }

    pub fn constraints(&self) -> Option<BoxConstraints> {
        self.constraints
    }

    pub fn k(&self) -> usize {
        self.prior.len()
    }

    /// Same scenario with the reward matrix replaced (dimensions must agree).
    pub fn with_reward(&self, reward: RewardMatrix) -> Self {
        assert_eq!(reward.k(), self.k());
        Self { reward, ..self.clone() }
    }

    /// Same scenario with the channel replaced (dimensions must agree).
    pub fn with_channel(&self, channel: Channel) -> Self {
        assert_eq!(channel.k(), self.k());
        Self { channel, ..self.clone() }
    }
}

/// Validate raw scenario fields, aggregating all failures rather than
/// stopping at the first.
#[allow(clippy::too_many_arguments)]
pub fn validate_scenario(
    prior: &[f64],
    channel: &[Vec<f64>],
    reward: &[Vec<f64>],
    cost_rate: f64,
    cost_offset: f64,
    constraints: Option<BoxConstraints>,
) -> Result<Scenario, RejectionReport<ScenarioViolation>> {
    let mut violations = Vec::new();
    let prior = match Prior::new(prior.to_vec()) {
        Ok(p) => Some(p),
        Err(report) => {
            violations.push(ScenarioViolation::InvalidComponent {
                which: "prior",
                detail: report.to_string(),
            });
            None
        }
    };
    let channel = match Channel::new(channel.to_vec()) {
        Ok(c) => Some(c),
        Err(report) => {
            violations.push(ScenarioViolation::InvalidComponent {
                which: "channel",
                detail: report.to_string(),
            });
            None
        }
    };
    let reward = match validate_reward_matrix(reward) {
        Ok(r) => Some(r),
        Err(report) => {
            violations.push(ScenarioViolation::InvalidComponent {
                which: "reward",
                detail: report.to_string(),
            });
            None
        }
    };
    match (prior, channel, reward) {
        (Some(p), Some(c), Some(r)) => match Scenario::new(p, c, r, cost_rate, cost_offset, constraints) {
            Ok(s) if violations.is_empty() => Ok(s),
            Ok(_) => Err(RejectionReport { violations }),
            Err(mut report) => {
                violations.append(&mut report.violations);
                Err(RejectionReport { violations })
            }
        },
        _ => {
            // Components failed; still surface cross-field problems we can see.
            if !(cost_rate > 0.0 && cost_rate.is_finite()) {
                violations.push(ScenarioViolation::InvalidComponent {
                    which: "cost rate c1",
                    detail: format!("must be a positive real, got {cost_rate}"),
                });
            }
            Err(RejectionReport { violations })
        }
    }
}

// ---------------------------------------------------------------------------
// Rejection reports
// ---------------------------------------------------------------------------

/// Aggregated validation failure: lists every violated condition.
#[derive(Debug, Clone, PartialEq, Error)]
pub struct RejectionReport<V: fmt::Display + fmt::Debug> {
    pub violations: Vec<V>,
}

impl<V: fmt::Display + fmt::Debug> fmt::Display for RejectionReport<V> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                write!(f, "; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}
