//! Seeded Monte Carlo simulation of the race sequence: realized growth,
//! distortion, and cost for empirical verification of the analytic values.
//!
//! Determinism contract: results are bit-identical for a fixed
//! (scenario, strategy, seed, chunk_size) regardless of how many threads
//! execute the chunks. Each chunk draws from its own RNG stream keyed by
//! the chunk index, and chunks are merged in index order.

use crate::infotheory::{self, InfoError};
use crate::types::{Scenario, StrategyMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub n_races: u64,
    pub seed: u64,
    pub record_trajectory: bool,
    /// Parallel block length; part of the determinism key.
    pub chunk_size: u64,
}

impl SimConfig {
    pub fn new(n_races: u64, seed: u64) -> Self {
        assert!(n_races >= 1, "n_races must be at least 1");
        Self { n_races, seed, record_trajectory: false, chunk_size: 65_536 }
    }

    pub fn with_trajectory(mut self) -> Self {
        self.record_trajectory = true;
        self
    }
}

/// All rates in bits per race; wealth in log2 units.
#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    pub empirical_lambda: f64,
    pub empirical_delta: f64,
    pub empirical_gamma: f64,
    pub final_log_wealth: f64,
    pub standard_error: f64,
    /// Log2 wealth after each race, present when requested.
    pub trajectory: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    /// A race returned zero wealth: the strategy bet nothing on the winner
    /// at a reward with no off-diagonal coverage. `race` is the 0-based
    /// index of the first ruinous race in the deterministic stream.
    #[error("ruin at race {race}: the strategy returned zero")]
    RuinEncountered { race: u64 },
    #[error(transparent)]
    Info(#[from] InfoError),
}

/// Inverse-CDF draw over categories 0..k with the fixed category order.
fn sample_categorical(rng: &mut impl Rng, cdf: &[f64]) -> usize {
    let u: f64 = rng.gen();
    for (i, &c) in cdf.iter().enumerate() {
        if u < c {
            return i;
        }
    }
    cdf.len() - 1
}

fn cdf_from(probs: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut acc = 0.0;
    probs
        .map(|p| {
            acc += p;
            acc
        })
        .collect()
}

/// Per-chunk accumulators, merged in chunk order.
#[derive(Debug, Clone)]
struct ChunkStats {
    sum_log_ret: f64,
    sum_log_ret_sq: f64,
    sum_rho: f64,
    sum_log_pi: f64,
    /// 0-based global index of the first zero-return race, if any.
    ruin: Option<u64>,
    /// Per-race log2 returns when a trajectory is requested.
    log_returns: Option<Vec<f64>>,
}

struct Tables {
    prior_cdf: Vec<f64>,
    channel_cdf: Vec<Vec<f64>>,
    rho: Vec<f64>,
    /// log2 column maxima of the reward, per winner.
    log_pi: Vec<f64>,
}

fn tables(scenario: &Scenario) -> Result<Tables, InfoError> {
    let k = scenario.k();
    let cost = infotheory::cost_function(scenario)?;
    Ok(Tables {
        prior_cdf: cdf_from((0..k).map(|w| scenario.prior().prob(w))),
        channel_cdf: (0..k)
            .map(|w| cdf_from((0..k).map(|y| scenario.channel().prob(w, y))))
            .collect(),
        rho: cost.as_slice().to_vec(),
        log_pi: (0..k).map(|w| scenario.reward().column_max(w).log2()).collect(),
    })
}

/// log2 returns per (y, w) cell; NEG_INFINITY marks a ruinous cell.
fn log_return_table(scenario: &Scenario, s: &StrategyMatrix) -> Vec<Vec<f64>> {
    let k = scenario.k();
    (0..k)
        .map(|y| {
            (0..k)
                .map(|w| {
                    let ret: f64 = (0..k).map(|i| s.get(y, i) * scenario.reward().get(i, w)).sum();
                    if ret > 0.0 { ret.log2() } else { f64::NEG_INFINITY }
                })
                .collect()
        })
        .collect()
}

/// Deterministic per-strategy centering value for the variance
/// accumulator; avoids cancellation when all log returns coincide.
fn shift_of(table: &[Vec<f64>]) -> f64 {
    table
        .iter()
        .flat_map(|row| row.iter())
        .find(|v| v.is_finite())
        .copied()
        .unwrap_or(0.0)
}

fn run_chunk(
    chunk_idx: u64,
    cfg: &SimConfig,
    t: &Tables,
    log_ret: &[Vec<Vec<f64>>],
    shifts: &[f64],
    record: bool,
) -> Vec<ChunkStats> {
    let start = chunk_idx * cfg.chunk_size;
    let len = cfg.chunk_size.min(cfg.n_races - start);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(chunk_idx);
    let mut stats: Vec<ChunkStats> = log_ret
        .iter()
        .map(|_| ChunkStats {
            sum_log_ret: 0.0,
            sum_log_ret_sq: 0.0,
            sum_rho: 0.0,
            sum_log_pi: 0.0,
            ruin: None,
            log_returns: record.then(|| Vec::with_capacity(len as usize)),
        })
        .collect();
    for j in 0..len {
        let w = sample_categorical(&mut rng, &t.prior_cdf);
        let y = sample_categorical(&mut rng, &t.channel_cdf[w]);
        for (s_idx, table) in log_ret.iter().enumerate() {
            let st = &mut stats[s_idx];
            let lr = table[y][w];
            if lr == f64::NEG_INFINITY && st.ruin.is_none() {
                st.ruin = Some(start + j);
            }
            let dev = lr - shifts[s_idx];
            st.sum_log_ret += dev;
            st.sum_log_ret_sq += dev * dev;
            st.sum_rho += t.rho[w];
            st.sum_log_pi += t.log_pi[w];
            if let Some(traj) = st.log_returns.as_mut() {
                traj.push(lr);
            }
        }
    }
    stats
}

fn merge(
    cfg: &SimConfig,
    chunks: Vec<Vec<ChunkStats>>,
    shifts: &[f64],
) -> Vec<Result<SimResult, SimError>> {
    let n = cfg.n_races as f64;
    (0..shifts.len())
        .map(|s_idx| {
            let mut sum = 0.0;
            let mut sum_sq = 0.0;
            let mut rho = 0.0;
            let mut pi = 0.0;
            let mut ruin: Option<u64> = None;
            let mut traj: Option<Vec<f64>> =
                cfg.record_trajectory.then(|| Vec::with_capacity(cfg.n_races as usize));
            for chunk in &chunks {
                let c = &chunk[s_idx];
                sum += c.sum_log_ret;
                sum_sq += c.sum_log_ret_sq;
                rho += c.sum_rho;
                pi += c.sum_log_pi;
                if ruin.is_none() {
                    ruin = c.ruin;
                }
                if let (Some(t), Some(part)) = (traj.as_mut(), c.log_returns.as_ref()) {
                    t.extend_from_slice(part);
                }
            }
            if let Some(race) = ruin {
                return Err(SimError::RuinEncountered { race });
            }
            // `sum` and `sum_sq` are accumulated as deviations from the
            // strategy's shift; recenter for the mean, and the variance is
            // shift-invariant.
            let dev_mean = sum / n;
            let mean = shifts[s_idx] + dev_mean;
            let var = ((sum_sq - n * dev_mean * dev_mean) / (n - 1.0).max(1.0)).max(0.0);
            let gamma = rho / n;
            let pi_mean = pi / n;
            let trajectory = traj.map(|lrs| {
                let mut acc = 0.0;
                lrs.into_iter()
                    .map(|lr| {
                        acc += lr;
                        acc
                    })
                    .collect()
            });
            Ok(SimResult {
                empirical_lambda: mean,
                empirical_delta: pi_mean - mean - gamma,
                empirical_gamma: gamma,
                final_log_wealth: n * shifts[s_idx] + sum,
                standard_error: (var / n).sqrt(),
                trajectory,
            })
        })
        .collect()
}

/// Simulate `cfg.n_races` races under strategy `s`: sample the winner from
/// the prior, the observation from the channel row of the winner, and
/// accumulate log2 wealth and the winner's information cost.
pub fn run_races(
    scenario: &Scenario,
    s: &StrategyMatrix,
    cfg: &SimConfig,
) -> Result<SimResult, SimError> {
    let mut results = run_common(scenario, std::slice::from_ref(s), cfg)?;
    results.pop().expect("one strategy in, one result out")
}

/// Run every strategy on the identical sampled (w, y) sequence so that
/// differences in empirical_lambda estimate growth differences with
/// reduced variance.
pub fn compare_strategies(
    scenario: &Scenario,
    strategies: &[StrategyMatrix],
    cfg: &SimConfig,
) -> Result<Vec<Result<SimResult, SimError>>, SimError> {
    run_common(scenario, strategies, cfg)
}

fn run_common(
    scenario: &Scenario,
    strategies: &[StrategyMatrix],
    cfg: &SimConfig,
) -> Result<Vec<Result<SimResult, SimError>>, SimError> {
    assert!(cfg.n_races >= 1 && cfg.chunk_size >= 1);
    let t = tables(scenario)?;
    let log_ret: Vec<Vec<Vec<f64>>> =
        strategies.iter().map(|s| log_return_table(scenario, s)).collect();
    let shifts: Vec<f64> = log_ret.iter().map(|t| shift_of(t)).collect();
    let n_chunks = cfg.n_races.div_ceil(cfg.chunk_size);
    // Collected in chunk-index order; the merge is a fixed-order reduction.
    let chunks: Vec<Vec<ChunkStats>> = (0..n_chunks)
        .into_par_iter()
        .map(|idx| run_chunk(idx, cfg, &t, &log_ret, &shifts, cfg.record_trajectory))
        .collect();
    Ok(merge(cfg, chunks, &shifts))
}

/// Write a recorded trajectory as CSV: race_index, log_wealth_bits.
pub fn write_trajectory_csv<W: std::io::Write>(
    out: &mut W,
    trajectory: &[f64],
) -> std::io::Result<()> {
    writeln!(out, "race_index,log_wealth_bits")?;
    for (i, lw) in trajectory.iter().enumerate() {
        writeln!(out, "{},{}", i + 1, lw)?;
    }
    Ok(())
}
