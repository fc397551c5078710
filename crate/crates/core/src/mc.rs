//! Seeded, reproducible Monte Carlo simulation of canonical
//! group-sequential trial paths.
//!
//! Randomness is counter-based: the uniform draw for (seed, replication,
//! draw index) is a pure bit-mix of the three, so results cannot depend on
//! execution order or on how replications are partitioned across workers.
//! Normal variates come from the inverse-CDF transform, so simulation and
//! quadrature share one source of normal-distribution truth.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gsd::GroupSequentialDesign;
use crate::normal::norm_quantile;

/// Replications are reduced blockwise in fixed index order; this makes
/// floating-point accumulation independent of the parallel layout.
const REDUCTION_BLOCK: u64 = 4096;

/// Seed, replication budget, and substream partition count for one Monte
/// Carlo run. The substream count only partitions work; draws depend on
/// the replication index alone, so any partitioning gives identical
/// results.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RngConfig {
    pub seed: u64,
    pub replications: u64,
    pub substreams: u64,
}

impl RngConfig {
    pub fn new(seed: u64, replications: u64) -> Self {
        RngConfig {
            seed,
            replications,
            substreams: 1,
        }
    }
}

impl Default for RngConfig {
    fn default() -> Self {
        RngConfig {
            seed: 0x005E_ED1D,
            replications: 200_000,
            substreams: 1,
        }
    }
}

#[inline]
fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Uniform draw in (0, 1) for a (seed, replication, draw) triple.
#[inline]
pub fn uniform_draw(seed: u64, replication: u64, draw: u64) -> f64 {
    let key = splitmix(seed ^ splitmix(replication.wrapping_mul(0xA076_1D64_78BD_642F)));
    let bits = splitmix(key.wrapping_add(draw.wrapping_mul(0x9E37_79B9_7F4A_7C15)));
    // 53 random bits, offset by half a step to stay inside the open interval.
    ((bits >> 11) as f64 + 0.5) * (1.0 / 9007199254740992.0)
}

/// Standard-normal draw for a (seed, replication, draw) triple.
#[inline]
pub fn normal_draw(seed: u64, replication: u64, draw: u64) -> f64 {
    norm_quantile(uniform_draw(seed, replication, draw))
}

/// One simulated trial path, stopped at the first boundary crossing or at
/// the final look.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedOutcome {
    /// 1-based look at which the path stopped.
    pub stop_look: usize,
    /// z statistics up to and including the stopping look.
    pub z_path: Vec<f64>,
    /// `z / sqrt(I * t)` at the stopping look (benefit-normalized scale).
    pub mle_at_stop: f64,
    /// Whether the stopping look crossed its boundary.
    pub crossed: bool,
}

/// Simulate one path of the canonical joint law under analysis-scale
/// effect `theta`: independent increments on the information scale, with
/// `Z_k = (delta * t_k + W_{t_k}) / sqrt(t_k)` and
/// `delta = theta * sqrt(max_information)`.
pub fn simulate_path(
    design: &GroupSequentialDesign,
    theta: f64,
    max_information: f64,
    rep_index: u64,
    cfg: &RngConfig,
) -> SimulatedOutcome {
    let delta = theta * max_information.sqrt();
    let fr = &design.info_fractions;
    let mut z_path = Vec::with_capacity(fr.len());
    let mut s = 0.0; // Brownian path value at t_k, drift included
    let mut t_prev = 0.0;
    let mut stop_look = fr.len();
    let mut crossed = false;
    for (k, &t) in fr.iter().enumerate() {
        let dt = t - t_prev;
        let eps = normal_draw(cfg.seed, rep_index, k as u64);
        s += delta * dt + dt.sqrt() * eps;
        let z = s / t.sqrt();
        z_path.push(z);
        t_prev = t;
        if z >= design.boundaries[k] {
            stop_look = k + 1;
            crossed = true;
            break;
        }
    }
    let t_stop = fr[stop_look - 1];
    let mle_at_stop = z_path[stop_look - 1] / (max_information * t_stop).sqrt();
    SimulatedOutcome {
        stop_look,
        z_path,
        mle_at_stop,
        crossed,
    }
}

/// Blockwise deterministic parallel reduction over replication indices:
/// maps each replication to an optional value and folds (sum, sumsq,
/// count) block partials in index order.
pub(crate) fn reduce_blocks<F>(cfg: &RngConfig, per_rep: F) -> (f64, f64, u64)
where
    F: Fn(u64) -> Option<f64> + Sync,
{
    let n = cfg.replications;
    let blocks = n.div_ceil(REDUCTION_BLOCK);
    let partials: Vec<(f64, f64, u64)> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let lo = b * REDUCTION_BLOCK;
            let hi = ((b + 1) * REDUCTION_BLOCK).min(n);
            let mut sum = 0.0;
            let mut sumsq = 0.0;
            let mut count = 0u64;
            for rep in lo..hi {
                if let Some(v) = per_rep(rep) {
                    sum += v;
                    sumsq += v * v;
                    count += 1;
                }
            }
            (sum, sumsq, count)
        })
        .collect();
    let mut sum = 0.0;
    let mut sumsq = 0.0;
    let mut count = 0u64;
    for (s, q, c) in partials {
        sum += s;
        sumsq += q;
        count += c;
    }
    (sum, sumsq, count)
}

/// Mean and Monte Carlo standard error of an expectation over simulated
/// replications.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub mc_se: f64,
    pub n_effective: u64,
}

/// Mean of the stage-at-stop MLE over simulated trials, optionally
/// conditioned on stopping at a given look (1-based). Errors when the
/// conditioning event was never hit or its estimated probability falls
/// below 1e-6.
pub fn expected_mle(
    design: &GroupSequentialDesign,
    theta: f64,
    max_information: f64,
    cfg: &RngConfig,
    condition_on_look: Option<usize>,
) -> Result<McEstimate> {
    if let Some(k) = condition_on_look {
        if k == 0 || k > design.looks() {
            return Err(Error::domain(format!(
                "conditioning look {k} outside 1..={}",
                design.looks()
            )));
        }
    }
    let (sum, sumsq, count) = reduce_blocks(cfg, |rep| {
        let out = simulate_path(design, theta, max_information, rep, cfg);
        match condition_on_look {
            Some(k) if out.stop_look != k => None,
            _ => Some(out.mle_at_stop),
        }
    });
    if count == 0 {
        return Err(Error::computation(
            "conditioning event never occurred in the simulation".to_string(),
        ));
    }
    if condition_on_look.is_some() && (count as f64) < 1e-6 * cfg.replications as f64 {
        return Err(Error::computation(format!(
            "conditioning event too rare: {count} of {} replications",
            cfg.replications
        )));
    }
    let mean = sum / count as f64;
    let var = (sumsq / count as f64 - mean * mean).max(0.0);
    let mc_se = (var / count as f64).sqrt();
    Ok(McEstimate {
        mean,
        mc_se,
        n_effective: count,
    })
}

/// Empirical distribution of the stopping look (crossing or reaching the
/// final look); frequencies sum to one.
pub fn stopping_distribution(
    design: &GroupSequentialDesign,
    theta: f64,
    max_information: f64,
    cfg: &RngConfig,
) -> Vec<f64> {
    let k_max = design.looks();
    let blocks = cfg.replications.div_ceil(REDUCTION_BLOCK);
    let partials: Vec<Vec<u64>> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let lo = b * REDUCTION_BLOCK;
            let hi = ((b + 1) * REDUCTION_BLOCK).min(cfg.replications);
            let mut counts = vec![0u64; k_max];
            for rep in lo..hi {
                let out = simulate_path(design, theta, max_information, rep, cfg);
                counts[out.stop_look - 1] += 1;
            }
            counts
        })
        .collect();
    let mut counts = vec![0u64; k_max];
    for p in partials {
        for (c, v) in counts.iter_mut().zip(p) {
            *c += v;
        }
    }
    counts
        .into_iter()
        .map(|c| c as f64 / cfg.replications as f64)
        .collect()
}

/// Fraction of replications whose path crossed a boundary.
pub fn crossing_frequency(
    design: &GroupSequentialDesign,
    theta: f64,
    max_information: f64,
    cfg: &RngConfig,
) -> f64 {
    let (sum, _, _) = reduce_blocks(cfg, |rep| {
        let out = simulate_path(design, theta, max_information, rep, cfg);
        Some(if out.crossed { 1.0 } else { 0.0 })
    });
    sum / cfg.replications as f64
}
