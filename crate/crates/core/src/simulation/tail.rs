//! Monte Carlo tail estimation and bound validation.

use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};
use statrs::function::beta::beta_reg;

use super::rng::{stream, Domain};
use super::samplers::DependentSampler;
use crate::bounds::{LipschitzVector, TailBound, TailCurve};
use crate::error::{invalid, Error, Result};

/// Smallest accepted number of trials.
pub const MIN_TRIALS: u64 = 1000;

/// Trials are grouped in fixed chunks so that floating-point reductions do
/// not depend on the number of workers.
const CHUNK: u64 = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Centering {
    /// Use the exact mean of `f`.
    Exact,
    /// Estimate the mean from an independent pilot run of the same size.
    Pilot,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimateConfig {
    pub trials: u64,
    pub seed: u64,
    /// One-sided confidence level of the Clopper–Pearson bounds.
    pub confidence: f64,
    pub centering: Centering,
    pub workers: usize,
}

impl Default for EstimateConfig {
    fn default() -> Self {
        Self { trials: 100_000, seed: 0, confidence: 0.99, centering: Centering::Exact, workers: 1 }
    }
}

/// Empirical `P(f(X) − E f ≥ t)` on a threshold grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailEstimate {
    pub t_grid: Vec<f64>,
    pub counts: Vec<u64>,
    pub frequencies: Vec<f64>,
    pub ci_upper: Vec<f64>,
    pub trials: u64,
    pub seed: u64,
    pub confidence: f64,
    /// Sample mean of `f` over the main run and its confidence radius.
    pub mean_estimate: f64,
    pub mean_radius: f64,
    /// The value deviations were measured from, and its uncertainty
    /// (zero for exact centering).
    pub center: f64,
    pub center_radius: f64,
}

impl TailEstimate {
    /// Thresholds at which the bound must be evaluated: a centering error of
    /// at most `r` turns the event `f − center ≥ t` into `f − E f ≥ t − r`.
    pub fn effective_thresholds(&self) -> Vec<f64> {
        self.t_grid.iter().map(|t| t - self.center_radius).collect()
    }

    /// `curve` evaluated on [`Self::effective_thresholds`].
    pub fn bound_curve(&self, curve: &TailCurve) -> Vec<TailBound> {
        self.effective_thresholds().into_iter().map(|t| curve.at(t)).collect()
    }
}

fn check_grid(t_grid: &[f64]) -> Result<()> {
    if t_grid.is_empty() {
        return invalid("threshold grid is empty");
    }
    if t_grid.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
        return invalid("thresholds must be positive and finite");
    }
    if t_grid.windows(2).any(|w| w[0] >= w[1]) {
        return invalid("thresholds must be strictly increasing");
    }
    Ok(())
}

struct ChunkStats {
    counts: Vec<u64>,
    sum: f64,
    sum_sq: f64,
}

/// Runs `trials` independent draws of `f(X) = Σ cᵢXᵢ`, returning per-chunk
/// sums in chunk order. With `center = Some(μ)` it also counts the
/// deviations `f − μ ≥ t` for every threshold.
#[allow(clippy::too_many_arguments)]
fn run(
    sampler: &DependentSampler,
    c: &LipschitzVector,
    t_grid: &[f64],
    center: Option<f64>,
    trials: u64,
    seed: u64,
    domain: Domain,
    workers: usize,
) -> Result<Vec<ChunkStats>> {
    let chunks: Vec<u64> = (0..trials.div_ceil(CHUNK)).collect();
    let work = |&chunk: &u64| {
        let mut x = vec![0.0; sampler.n()];
        let mut stats = ChunkStats { counts: vec![0; t_grid.len()], sum: 0.0, sum_sq: 0.0 };
        for trial in chunk * CHUNK..((chunk + 1) * CHUNK).min(trials) {
            let mut rng = stream(seed, domain, trial);
            sampler.sample_into(&mut rng, &mut x);
            let f: f64 = x.iter().zip(c.as_slice()).map(|(x, c)| x * c).sum();
            stats.sum += f;
            stats.sum_sq += f * f;
            if let Some(mu) = center {
                let dev = f - mu;
                // grid is increasing: the deviation clears a prefix of it
                let cleared = t_grid.partition_point(|&t| dev >= t);
                for count in &mut stats.counts[..cleared] {
                    *count += 1;
                }
            }
        }
        stats
    };
    if workers <= 1 {
        Ok(chunks.iter().map(work).collect())
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
        Ok(pool.install(|| chunks.par_iter().map(work).collect()))
    }
}

/// Two-sided normal quantile for the confidence radius of a mean.
fn normal_quantile(confidence: f64) -> f64 {
    Normal::new(0.0, 1.0).map(|d| d.inverse_cdf(0.5 + confidence / 2.0)).unwrap_or(f64::NAN)
}

fn mean_and_radius(chunks: &[ChunkStats], trials: u64, confidence: f64) -> (f64, f64) {
    let (sum, sum_sq) = chunks.iter().fold((0.0, 0.0), |(s, q), c| (s + c.sum, q + c.sum_sq));
    let n = trials as f64;
    let mean = sum / n;
    let var = ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0);
    (mean, normal_quantile(confidence) * (var / n).sqrt())
}

/// Estimates the upper tail of `f(X) = Σ cᵢXᵢ` on `t_grid`.
pub fn estimate_tail(
    sampler: &DependentSampler,
    c: &LipschitzVector,
    t_grid: &[f64],
    config: &EstimateConfig,
) -> Result<TailEstimate> {
    check_grid(t_grid)?;
    if config.trials < MIN_TRIALS {
        return invalid(format!("need at least {MIN_TRIALS} trials, got {}", config.trials));
    }
    if !(config.confidence > 0.0 && config.confidence < 1.0) {
        return invalid(format!("confidence must lie in (0, 1), got {}", config.confidence));
    }
    if c.len() != sampler.n() {
        return invalid(format!(
            "Lipschitz vector has length {}, sampler has {} coordinates",
            c.len(),
            sampler.n()
        ));
    }
    let (center, center_radius) = match config.centering {
        Centering::Exact => {
            let mu = sampler.coordinate_means().iter().zip(c.as_slice()).map(|(m, c)| m * c).sum();
            (mu, 0.0)
        }
        Centering::Pilot => {
            let pilot = run(
                sampler, c, t_grid, None, config.trials, config.seed, Domain::Pilot, config.workers,
            )?;
            mean_and_radius(&pilot, config.trials, config.confidence)
        }
    };
    let chunks = run(
        sampler,
        c,
        t_grid,
        Some(center),
        config.trials,
        config.seed,
        Domain::Main,
        config.workers,
    )?;
    let (mean_estimate, mean_radius) = mean_and_radius(&chunks, config.trials, config.confidence);
    let mut counts = vec![0u64; t_grid.len()];
    for chunk in &chunks {
        for (total, k) in counts.iter_mut().zip(&chunk.counts) {
            *total += k;
        }
    }
    let trials = config.trials;
    let frequencies = counts.iter().map(|&k| k as f64 / trials as f64).collect();
    let ci_upper =
        counts.iter().map(|&k| clopper_pearson_upper(k, trials, config.confidence)).collect();
    Ok(TailEstimate {
        t_grid: t_grid.to_vec(),
        counts,
        frequencies,
        ci_upper,
        trials,
        seed: config.seed,
        confidence: config.confidence,
        mean_estimate,
        mean_radius,
        center,
        center_radius,
    })
}

/// A threshold grid whose tail frequencies are close to `tail_levels`
/// (decreasing probabilities in (0, 1)): empirical quantiles of `f − E f`
/// from a run on the pilot stream, rounded to three significant digits.
/// Non-positive or repeated thresholds are dropped.
pub fn quantile_grid(
    sampler: &DependentSampler,
    c: &LipschitzVector,
    tail_levels: &[f64],
    trials: u64,
    seed: u64,
    workers: usize,
) -> Result<Vec<f64>> {
    if tail_levels.iter().any(|p| !(*p > 0.0 && *p < 1.0)) {
        return invalid("tail levels must lie in (0, 1)");
    }
    if trials < MIN_TRIALS {
        return invalid(format!("need at least {MIN_TRIALS} trials, got {trials}"));
    }
    if c.len() != sampler.n() {
        return invalid("Lipschitz vector length does not match the sampler");
    }
    let mu: f64 = sampler.coordinate_means().iter().zip(c.as_slice()).map(|(m, c)| m * c).sum();
    let draw = |trial: u64| {
        let mut rng = stream(seed, Domain::Pilot, trial);
        let x = sampler.sample(&mut rng);
        x.iter().zip(c.as_slice()).map(|(x, c)| x * c).sum::<f64>() - mu
    };
    let mut devs: Vec<f64> = if workers <= 1 {
        (0..trials).map(draw).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
        pool.install(|| (0..trials).into_par_iter().map(draw).collect())
    };
    devs.sort_by(f64::total_cmp);
    let mut grid: Vec<f64> = Vec::new();
    let mut levels = tail_levels.to_vec();
    levels.sort_by(|a, b| b.total_cmp(a));
    for p in levels {
        let idx = (((1.0 - p) * trials as f64) as usize).min(devs.len() - 1);
        let t = round_significant(devs[idx], 3);
        if t > 0.0 && grid.last().is_none_or(|&last| t > last) {
            grid.push(t);
        }
    }
    if grid.is_empty() {
        return invalid("no positive thresholds: f is (nearly) constant");
    }
    Ok(grid)
}

fn round_significant(x: f64, digits: i32) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    let scale = 10f64.powi(digits - 1 - x.abs().log10().floor() as i32);
    (x * scale).round() / scale
}

/// Exact one-sided upper confidence bound for a binomial proportion after
/// `successes` in `trials`: the `p` with `P(Bin(trials, p) ≤ successes) = 1 − confidence`.
pub fn clopper_pearson_upper(successes: u64, trials: u64, confidence: f64) -> f64 {
    if successes >= trials {
        return 1.0;
    }
    let alpha = 1.0 - confidence;
    if successes == 0 {
        return 1.0 - alpha.powf(1.0 / trials as f64);
    }
    // P(Bin ≤ k) = 1 − I_p(k + 1, N − k), decreasing in p
    let (a, b) = ((successes + 1) as f64, (trials - successes) as f64);
    let mut lo = successes as f64 / trials as f64;
    let mut hi = 1.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if 1.0 - beta_reg(a, b, mid) > alpha {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * hi {
            break;
        }
    }
    hi
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdVerdict {
    pub t: f64,
    pub frequency: f64,
    pub ci_upper: f64,
    pub bound: f64,
    /// `bound / frequency`; infinite when nothing was observed.
    pub slack: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub thresholds: Vec<ThresholdVerdict>,
    pub pass: bool,
}

/// Checks `ci_upper ≤ bound` at every threshold. The curve must be
/// evaluated at the estimate's effective thresholds.
pub fn validate_bound(estimate: &TailEstimate, curve: &[TailBound]) -> Result<ValidationReport> {
    let expected = estimate.effective_thresholds();
    if curve.len() != expected.len() {
        return Err(Error::GridMismatch(format!(
            "{} bound points for {} thresholds",
            curve.len(),
            expected.len()
        )));
    }
    let mut thresholds = Vec::with_capacity(curve.len());
    for (i, (bound, t)) in curve.iter().zip(&expected).enumerate() {
        if bound.t != *t {
            return Err(Error::GridMismatch(format!(
                "threshold {i}: bound at {} but estimate needs {t}",
                bound.t
            )));
        }
        let frequency = estimate.frequencies[i];
        let ci_upper = estimate.ci_upper[i];
        let slack = if frequency > 0.0 { bound.probability / frequency } else { f64::INFINITY };
        thresholds.push(ThresholdVerdict {
            t: estimate.t_grid[i],
            frequency,
            ci_upper,
            bound: bound.probability,
            slack,
            pass: ci_upper <= bound.probability,
        });
    }
    let pass = thresholds.iter().all(|v| v.pass);
    Ok(ValidationReport { thresholds, pass })
}
