//! Single-letter code optimality: the matched-distortion criterion, the
//! 2x2 exponent solver, closed forms for the binary symmetric and Z
//! channels, and the scenario classifier.
//!
//! A strategy admits an optimal single-letter code when its distortion
//! matches d(w,y) = -c * log2 p_{W|Y}(w|y) + d0(w) for some c > 0 and
//! offset d0. Proportional betting always gives c = 1; non-proportional
//! strategies can witness other exponents.

use crate::decomposition::{self, Decomposition, DominantWager};
use crate::infotheory::{self, InfoError};
use crate::strategy::{self, OptimizeOptions};
use crate::types::{RewardMatrix, Scenario, StrategyMatrix};
use nalgebra::DMatrix;
use thiserror::Error;

/// Relative agreement tolerance for exponent candidates across cells.
pub const C_AGREEMENT_TOL: f64 = 1e-7;
/// Cells with posterior log-ratio below this are uninformative about c.
pub const LOG_RATIO_TOL: f64 = 1e-9;
/// Residual tolerance for the witness identity.
pub const WITNESS_RESIDUAL_TOL: f64 = 1e-7;
/// Bracketing range and scan resolution for the 2x2 exponent solver.
pub const C_SEARCH_MIN: f64 = 1e-6;
pub const C_SEARCH_MAX: f64 = 64.0;
pub const C_SCAN_POINTS: usize = 4096;

// ---------------------------------------------------------------------------
// Witness
// ---------------------------------------------------------------------------

/// Evidence that a strategy admits an optimal single-letter code:
/// d(w,y) + c * log2 p_{W|Y}(w|y) - d0(w) = 0 at every full-support cell.
#[derive(Debug, Clone, PartialEq)]
pub struct Witness {
    pub c: f64,
    pub d0: Vec<f64>,
    pub strategy: StrategyMatrix,
    /// Set when I(W;Y) = 0, where any distortion function qualifies and
    /// c is conventional.
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NoWitness {
    #[error("inconsistent exponent candidates {first} and {second}")]
    InconsistentC { first: f64, second: f64 },
    #[error("exponent candidate {c} is not positive")]
    NonpositiveC { c: f64 },
    #[error("posterior p(w={w}|y={y}) = 0 but the strategy return there is positive")]
    ZeroPosteriorFiniteDistortion { w: usize, y: usize },
    #[error("witness residual {residual:e} exceeds tolerance")]
    ResidualTooLarge { residual: f64 },
    #[error("no cell identifies the exponent")]
    Unidentifiable,
    #[error(transparent)]
    Info(#[from] InfoError),
}

/// Check whether the distortion of `s` matches the power-form criterion,
/// returning the witnessing (c, d0) if so.
pub fn check_distortion_criterion(
    scenario: &Scenario,
    s: &StrategyMatrix,
) -> Result<Witness, NoWitness> {
    let k = scenario.k();
    let post = infotheory::posterior(scenario.prior(), scenario.channel())?;
    let d = strategy::distortion_function(scenario, s).map_err(NoWitness::Info)?;

    if infotheory::mutual_information(scenario.prior(), scenario.channel()) < 1e-12 {
        // Any distortion function qualifies; report a flagged degenerate
        // witness with the conventional c = 1.
        let d0 = (0..k).map(|w| d[(w, 0)]).collect();
        return Ok(Witness { c: 1.0, d0, strategy: s.clone(), degenerate: true });
    }

    // Zero-posterior cells force infinite distortion (the strategy must
    // return nothing there); finite distortion breaks the criterion.
    for w in 0..k {
        for y in 0..k {
            if post.prob(y, w) <= 0.0 && d[(w, y)].is_finite() {
                return Err(NoWitness::ZeroPosteriorFiniteDistortion { w, y });
            }
        }
    }

    // Each output pair (y, y') with distinct posteriors for w pins down a
    // candidate c = -[d(w,y) - d(w,y')] / [log p(w|y) - log p(w|y')].
    let mut candidates: Vec<f64> = Vec::new();
    for w in 0..k {
        let cells: Vec<(f64, f64)> = (0..k)
            .filter(|&y| post.prob(y, w) > 0.0 && d[(w, y)].is_finite())
            .map(|y| (post.prob(y, w).log2(), d[(w, y)]))
            .collect();
        for a in 0..cells.len() {
            for b in (a + 1)..cells.len() {
                let (lp_a, d_a) = cells[a];
                let (lp_b, d_b) = cells[b];
                if (lp_a - lp_b).abs() < LOG_RATIO_TOL {
                    continue;
                }
                candidates.push(-(d_a - d_b) / (lp_a - lp_b));
            }
        }
    }
    if candidates.is_empty() {
        return Err(NoWitness::Unidentifiable);
    }
    let c_min = candidates.iter().cloned().fold(f64::INFINITY, f64::min);
    let c_max = candidates.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let scale = c_max.abs().max(c_min.abs()).max(1e-300);
    if (c_max - c_min) / scale > C_AGREEMENT_TOL {
        return Err(NoWitness::InconsistentC { first: c_min, second: c_max });
    }
    let c = 0.5 * (c_min + c_max);
    if c <= 0.0 {
        return Err(NoWitness::NonpositiveC { c });
    }

    // d0(w) averages d(w,y) + c log p(w|y) over informative cells.
    let mut d0 = vec![0.0; k];
    let mut residual_max = 0.0f64;
    for w in 0..k {
        let vals: Vec<f64> = (0..k)
            .filter(|&y| post.prob(y, w) > 0.0 && d[(w, y)].is_finite())
            .map(|y| d[(w, y)] + c * post.prob(y, w).log2())
            .collect();
        if vals.is_empty() {
            // The strategy never returns anything on w; d0(w) is +inf and
            // the power form holds vacuously for that w.
            d0[w] = f64::INFINITY;
            continue;
        }
        d0[w] = vals.iter().sum::<f64>() / vals.len() as f64;
        for v in vals {
            residual_max = residual_max.max((v - d0[w]).abs());
        }
    }
    if residual_max > WITNESS_RESIDUAL_TOL {
        return Err(NoWitness::ResidualTooLarge { residual: residual_max });
    }
    Ok(Witness { c, d0, strategy: s.clone(), degenerate: false })
}

/// Worst-case witness identity residual of (c, d0) against the distortion
/// of `s`, over full-support cells. Used for soundness fuzzing and for the
/// brute-force exponent scan.
pub fn witness_residual(scenario: &Scenario, s: &StrategyMatrix, c: f64) -> Option<f64> {
    let k = scenario.k();
    let post = infotheory::posterior(scenario.prior(), scenario.channel()).ok()?;
    let d = strategy::distortion_function(scenario, s).ok()?;
    let mut worst = 0.0f64;
    for w in 0..k {
        // The power form sends d to infinity exactly where the posterior
        // vanishes; a finite distortion there is an unbounded residual.
        if (0..k).any(|y| post.prob(y, w) <= 0.0 && d[(w, y)].is_finite()) {
            return Some(f64::INFINITY);
        }
        let vals: Vec<f64> = (0..k)
            .filter(|&y| post.prob(y, w) > 0.0)
            .map(|y| {
                if d[(w, y)].is_finite() {
                    d[(w, y)] + c * post.prob(y, w).log2()
                } else {
                    f64::INFINITY
                }
            })
            .collect();
        let finite: Vec<f64> = vals.iter().cloned().filter(|v| v.is_finite()).collect();
        if finite.len() < vals.len() && !finite.is_empty() {
            return Some(f64::INFINITY);
        }
        if finite.is_empty() {
            continue;
        }
        let d0 = finite.iter().sum::<f64>() / finite.len() as f64;
        for v in finite {
            worst = worst.max((v - d0).abs());
        }
    }
    Some(worst)
}

// ---------------------------------------------------------------------------
// 2x2 exponent solver
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveCError {
    /// gamma = 1 - theta makes the target strategy matrix undefined.
    #[error("degenerate posterior: gamma = 1 - theta")]
    DegenerateGammaTheta,
    /// A bracketed root of the alpha equation exists but fails the beta
    /// equation.
    #[error("no exponent satisfies both equations")]
    NoSolution,
    /// No sign change of the alpha equation anywhere in the search range.
    #[error("no bracket for the alpha equation in [{C_SEARCH_MIN}, {C_SEARCH_MAX}]")]
    RangeExhausted,
}

fn alpha_of_c(c: f64, gamma: f64, theta: f64) -> f64 {
    let a = (1.0 - gamma) / theta;
    let b = ((1.0 - gamma) * (1.0 - theta)) / (theta * gamma);
    (1.0 - a.powf(c)) / (1.0 - b.powf(c))
}

fn beta_of_c(c: f64, gamma: f64, theta: f64) -> f64 {
    // The beta equation is the alpha equation with gamma and theta swapped.
    alpha_of_c(c, theta, gamma)
}

/// Find c > 0 such that the effective strategy corners (alpha*, beta*)
/// match the Hadamard-power targets for posterior diagonals (gamma, theta).
/// Bracketed root-finding on the alpha equation, verified on the beta
/// equation within 1e-9.
pub fn solve_c_2x2(
    alpha_star: f64,
    beta_star: f64,
    gamma: f64,
    theta: f64,
) -> Result<f64, SolveCError> {
    if (gamma - (1.0 - theta)).abs() < 1e-12 {
        return Err(SolveCError::DegenerateGammaTheta);
    }
    // Proportional fixed point, analytically forced.
    if alpha_star == gamma && beta_star == theta {
        return Ok(1.0);
    }
    let g = |c: f64| alpha_of_c(c, gamma, theta) - alpha_star;
    let mut brackets = Vec::new();
    let mut prev_c = C_SEARCH_MIN;
    let mut prev_g = g(prev_c);
    for i in 1..=C_SCAN_POINTS {
        let c = C_SEARCH_MIN
            + (C_SEARCH_MAX - C_SEARCH_MIN) * (i as f64 / C_SCAN_POINTS as f64);
        let gc = g(c);
        if prev_g == 0.0 || prev_g.signum() != gc.signum() {
            brackets.push((prev_c, c));
        }
        prev_c = c;
        prev_g = gc;
    }
    if brackets.is_empty() {
        return Err(SolveCError::RangeExhausted);
    }
    for (mut lo, mut hi) in brackets {
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if g(lo).signum() == g(mid).signum() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let c = 0.5 * (lo + hi);
        if (alpha_of_c(c, gamma, theta) - alpha_star).abs() <= 1e-9
            && (beta_of_c(c, gamma, theta) - beta_star).abs() <= 1e-9
            && c > 0.0
        {
            return Ok(c);
        }
    }
    Err(SolveCError::NoSolution)
}

// ---------------------------------------------------------------------------
// BSC closed form
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BscError {
    #[error("rewards must satisfy r_D > r_N >= 0, got r_D={r_d}, r_N={r_n}")]
    InvalidRewards { r_d: f64, r_n: f64 },
    #[error("crossover must lie in (0, 1/2), got {q}")]
    CrossoverOutOfRange { q: f64 },
}

/// Closed-form regime for the symmetric binary reward matrix on a BSC
/// with uniform prior.
#[derive(Debug, Clone, PartialEq)]
pub enum BscRegime {
    /// u* < 1: proportional betting over the diagonalized race is
    /// feasible and the witness has c = 1.
    Proportional,
    /// u* = 1: all-in on the observed horse; the witness exponent is
    /// c = log(r_D / r_N) / log((1-q)/q).
    NonProportional { c: f64 },
    /// u* = 1 with r_N = 0 leaves c undefined; boundary of the
    /// proportional regime.
    ProportionalBoundary,
}

/// Optimal diagonal wager u* and the closed-form exponent for
/// R = [[r_D, r_N], [r_N, r_D]] on a BSC(q), uniform prior.
pub fn bsc_closed_form_c(r_d: f64, r_n: f64, q: f64) -> Result<(f64, BscRegime), BscError> {
    if !(r_d > r_n && r_n >= 0.0) {
        return Err(BscError::InvalidRewards { r_d, r_n });
    }
    if !(q > 0.0 && q < 0.5) {
        return Err(BscError::CrossoverOutOfRange { q });
    }
    let u_star = ((r_d - q * (r_d + r_n)) / (r_d - r_n)).min(1.0);
    if u_star < 1.0 {
        Ok((u_star, BscRegime::Proportional))
    } else if r_n == 0.0 {
        Ok((u_star, BscRegime::ProportionalBoundary))
    } else {
        let c = (r_d / r_n).log2() / ((1.0 - q) / q).log2();
        Ok((u_star, BscRegime::NonProportional { c }))
    }
}

// ---------------------------------------------------------------------------
// Verdict and classifier
// ---------------------------------------------------------------------------

/// Classification of a scenario's single-letter optimality.
#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    /// Proportional betting (over the possibly diagonalized race) is
    /// feasible; witness has c = 1.
    ProportionalOptimal { witness: Witness },
    /// A non-proportional strategy witnesses the criterion with c != 1.
    NonProportionalOptimal { witness: Witness },
    /// A dominant wager makes side information worthless; a trivial
    /// rate-zero single-letter code is optimal.
    TrivialRateZero { wager: DominantWager, strategy: StrategyMatrix },
    /// The computed optimal strategy fails the distortion criterion.
    NoSingleLetterCode { strategy: StrategyMatrix, diagnostic: String },
    /// The decision procedure cannot settle the case (e.g. K >= 3 with no
    /// decomposition and no dominant wager).
    Undetermined { reason: String },
}

impl Verdict {
    pub fn witness(&self) -> Option<&Witness> {
        match self {
            Verdict::ProportionalOptimal { witness }
            | Verdict::NonProportionalOptimal { witness } => Some(witness),
            _ => None,
        }
    }

    pub fn strategy(&self) -> Option<&StrategyMatrix> {
        match self {
            Verdict::ProportionalOptimal { witness }
            | Verdict::NonProportionalOptimal { witness } => Some(&witness.strategy),
            Verdict::TrivialRateZero { strategy, .. }
            | Verdict::NoSingleLetterCode { strategy, .. } => Some(strategy),
            Verdict::Undetermined { .. } => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Verdict::ProportionalOptimal { .. } => "proportional_optimal",
            Verdict::NonProportionalOptimal { .. } => "non_proportional_optimal",
            Verdict::TrivialRateZero { .. } => "trivial_rate_zero",
            Verdict::NoSingleLetterCode { .. } => "no_single_letter_code",
            Verdict::Undetermined { .. } => "undetermined",
        }
    }
}

fn all_in_strategy(k: usize, horse: usize) -> StrategyMatrix {
    let rows = (0..k)
        .map(|_| (0..k).map(|i| if i == horse { 1.0 } else { 0.0 }).collect())
        .collect();
    StrategyMatrix::new(rows).expect("one-hot rows are row stochastic")
}

/// Is this candidate strategy feasible under the scenario's box
/// constraints (if any)?
fn box_feasible(scenario: &Scenario, s: &StrategyMatrix) -> bool {
    scenario.constraints().map_or(true, |b| b.contains(s))
}

/// Decide whether the scenario admits an optimal single-letter code.
///
/// Pipeline: dominant wager, then diagonal proportional betting, then
/// proportional betting over the decomposed race, then the generic
/// criterion check on the optimizer's strategy.
pub fn classify_scenario(scenario: &Scenario) -> Verdict {
    let k = scenario.k();
    let reward = scenario.reward();

    // (a) Dominant wager: trivial rate-zero code.
    if let Some(wager) = decomposition::find_dominant_wager(reward) {
        return Verdict::TrivialRateZero {
            wager,
            strategy: all_in_strategy(k, wager.horse),
        };
    }

    let proportional = match strategy::proportional_strategy(scenario) {
        Ok(p) => p,
        Err(e) => return Verdict::Undetermined { reason: e.to_string() },
    };

    // (b) Diagonal reward: proportional betting, c = 1.
    if reward.is_diagonal() && box_feasible(scenario, &proportional) {
        return witness_verdict(scenario, &proportional);
    }

    // (c) Decomposition with a feasible proportional actual strategy.
    let decomp = match decomposition::decompose(reward) {
        Ok(d) => Some(d),
        Err(decomposition::DecompositionError::NoDecomposition { .. }) => None,
        Err(e) => return Verdict::Undetermined { reason: e.to_string() },
    };
    if !reward.is_diagonal() {
        if let Some(ref decomp) = decomp {
            if let Ok(actual) = decomposition::actual_strategy(&proportional, decomp) {
                if box_feasible(scenario, &actual) {
                    return witness_verdict(scenario, &actual);
                }
            }
        }
    }

    // (e) No decomposition: for K = 2 a dominant wager would exist (already
    // handled above); for K >= 3 there is no guarantee either way.
    if decomp.is_none() && !reward.is_diagonal() {
        if k >= 3 {
            return Verdict::Undetermined {
                reason: "no decomposition and no dominant wager for K >= 3".into(),
            };
        }
        return Verdict::Undetermined {
            reason: "2x2 without decomposition should have a dominant wager".into(),
        };
    }

    // (d) Generic path: optimize, then test the criterion on the result.
    generic_classification(scenario, decomp.as_ref())
}

fn generic_classification(scenario: &Scenario, decomp: Option<&Decomposition>) -> Verdict {
    let opts = OptimizeOptions::from_scenario(scenario);
    let (s_star, _) = match strategy::optimize_strategy(scenario, &opts) {
        Ok(r) => r,
        Err(e) => return Verdict::Undetermined { reason: e.to_string() },
    };
    match check_distortion_criterion(scenario, &s_star) {
        Ok(witness) => classify_witness(scenario, decomp, witness),
        Err(no_witness) => Verdict::NoSingleLetterCode {
            strategy: s_star,
            diagnostic: no_witness.to_string(),
        },
    }
}

fn witness_verdict(scenario: &Scenario, s: &StrategyMatrix) -> Verdict {
    match check_distortion_criterion(scenario, s) {
        Ok(witness) => {
            if (witness.c - 1.0).abs() < 1e-6 {
                Verdict::ProportionalOptimal { witness }
            } else {
                Verdict::NonProportionalOptimal { witness }
            }
        }
        Err(no_witness) => Verdict::Undetermined {
            reason: format!("expected a proportional witness, but: {no_witness}"),
        },
    }
}

fn classify_witness(
    scenario: &Scenario,
    decomp: Option<&Decomposition>,
    witness: Witness,
) -> Verdict {
    // For 2x2 scenarios, cross-check the witnessed exponent against the
    // closed-form solver on the effective strategy corners.
    if scenario.k() == 2 && !witness.degenerate {
        if let (Some(decomp), Ok(post)) = (
            decomp,
            infotheory::posterior(scenario.prior(), scenario.channel()),
        ) {
            let t = decomposition::effective_strategy(&witness.strategy, decomp);
            let (gamma, theta) = (post.prob(0, 0), post.prob(1, 1));
            if let Ok(c2) = solve_c_2x2(t.get(0, 0), t.get(1, 1), gamma, theta) {
                debug_assert!(
                    (c2 - witness.c).abs() < 1e-6,
                    "closed-form and generic exponents disagree: {c2} vs {}",
                    witness.c
                );
            }
        }
    }
    if (witness.c - 1.0).abs() < 1e-6 {
        Verdict::ProportionalOptimal { witness }
    } else {
        Verdict::NonProportionalOptimal { witness }
    }
}

/// Special-cased Z channel verdict for 2x2 rewards; cross-validated by
/// `classify_scenario` on the assembled scenario.
pub fn z_channel_check(reward: &RewardMatrix, q: f64, prior: &crate::types::Prior) -> Verdict {
    assert_eq!(reward.k(), 2);
    assert!(q > 0.0 && q < 1.0);
    if let Some(wager) = decomposition::find_dominant_wager(reward) {
        return Verdict::TrivialRateZero { wager, strategy: all_in_strategy(2, wager.horse) };
    }
    let scenario = Scenario::new(
        prior.clone(),
        crate::types::Channel::z(q),
        reward.clone(),
        1.0,
        0.0,
        None,
    )
    .expect("valid components");
    if reward.is_diagonal() {
        return classify_scenario(&scenario);
    }
    let strictly_non_diagonal = reward.get(0, 1) > 0.0 && reward.get(1, 0) > 0.0;
    if decomposition::decompose(reward).is_ok() && strictly_non_diagonal {
        // Any power-form effective strategy forces the actual second row
        // to [-r21/(r11-r21), r11/(r11-r21)], which has a negative entry.
        let (r11, r21) = (reward.get(0, 0), reward.get(1, 0));
        let denom = r11 - r21;
        let opts = OptimizeOptions::from_scenario(&scenario);
        let s_star = strategy::optimize_strategy(&scenario, &opts)
            .map(|(s, _)| s)
            .unwrap_or_else(|_| StrategyMatrix::identity(2));
        return Verdict::NoSingleLetterCode {
            strategy: s_star,
            diagnostic: format!(
                "required actual row [{}, {}] is not a valid wager",
                -r21 / denom,
                r11 / denom
            ),
        };
    }
    classify_scenario(&scenario)
}

/// Does the prior drive the channel at capacity? When it does, the cost
/// side of the criterion holds for any cost function, not just the
/// divergence form.
pub fn channel_at_capacity(scenario: &Scenario, tol: f64) -> Result<bool, InfoError> {
    let mi = infotheory::mutual_information(scenario.prior(), scenario.channel());
    let (cap, _) = infotheory::channel_capacity(scenario.channel(), tol.min(1e-8))?;
    Ok((cap - mi).abs() <= tol)
}

/// Hadamard power of the posterior matrix: entrywise c-th power.
pub fn hadamard_power(post: &infotheory::PosteriorMatrix, c: f64) -> DMatrix<f64> {
    post.matrix().map(|v| v.powf(c))
}
