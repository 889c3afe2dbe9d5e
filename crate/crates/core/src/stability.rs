//! A uniformly stable learner on m-dependent data.
//!
//! Data model: i.i.d. location effects `x_j ~ U[0, 1]` along a line; sample
//! `i` sees the window `(x_{i−q}, …, x_{i+q})` and the target
//! `yᵢ = clip(mean(window) + noise·(2u − 1), 0, 1)` with `u ~ U[0, 1]`.
//! Windows of samples more than `2q` apart are disjoint, so the sample is
//! 2q-dependent.
//!
//! Learner: ridge regression on `φ(x) = (window, 1)`, minimising
//! `(1/k) Σ (y − w·φ(x))² + λ‖w‖²` over a sample of size `k`, scored with
//! the clipped loss `min((y − ŷ)², M)`, `M = 1`.
//!
//! Stability constant. With `‖φ‖ ≤ κ`, targets in `[0, Y]` (`Y = 1`), every
//! minimiser satisfies `‖w‖ ≤ Y/√λ`, so on that ball each squared loss is
//! `ρ`-Lipschitz in `w` with `ρ = 2κ(Y + κ/√λ)`. Comparing the two
//! `2λ`-strongly convex objectives for `S` and `S∖i` gives
//! `‖w_S − w_{S∖i}‖ ≤ ρ/(λn)`, and the loss at any probe moves by at most
//! `ρ‖w_S − w_{S∖i}‖`. Hence `βₙ = B/n` with `B = ρ²/λ`. Clipping the loss
//! cannot increase differences.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::bounds::{m_dependent_generalization_bound, BetaSchedule, StabilitySchedule};
use crate::error::{invalid, Error, Result};
use crate::graph::{families, Graph};
use crate::simulation::rng::{stream, Domain};

/// Loss cap `M`.
pub const LOSS_BOUND: f64 = 1.0;
/// Upper end `Y` of the target range.
const TARGET_BOUND: f64 = 1.0;

/// The data-generating process: window half-width `q` and noise amplitude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HousingModel {
    pub q: usize,
    pub noise: f64,
}

impl HousingModel {
    pub fn new(q: usize, noise: f64) -> Result<Self> {
        if !(noise.is_finite() && noise >= 0.0) {
            return invalid(format!("noise must be >= 0, got {noise}"));
        }
        Ok(Self { q, noise })
    }

    pub fn window_len(&self) -> usize {
        2 * self.q + 1
    }

    fn target<R: Rng + ?Sized>(&self, window: &[f64], rng: &mut R) -> f64 {
        let mean = window.iter().sum::<f64>() / window.len() as f64;
        let eps = self.noise * (2.0 * rng.random::<f64>() - 1.0);
        (mean + eps).clamp(0.0, TARGET_BOUND)
    }

    /// One point drawn from the marginal law, independent of everything else.
    pub fn draw_point<R: Rng + ?Sized>(&self, rng: &mut R) -> (Vec<f64>, f64) {
        let window: Vec<f64> = (0..self.window_len()).map(|_| rng.random()).collect();
        let y = self.target(&window, rng);
        (window, y)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegressionSample {
    pub inputs: Vec<Vec<f64>>,
    pub targets: Vec<f64>,
    pub model: HousingModel,
}

impl RegressionSample {
    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    /// Dependence range `m = 2q`.
    pub fn m_dependence(&self) -> usize {
        2 * self.model.q
    }

    /// Certified dependency graph: `i ~ j` iff `|i − j| ≤ 2q`.
    pub fn dependency_graph(&self) -> Graph {
        families::m_dependent(self.len(), self.m_dependence())
    }

    /// The sample with point `i` removed.
    pub fn without(&self, i: usize) -> RegressionSample {
        let mut out = self.clone();
        out.inputs.remove(i);
        out.targets.remove(i);
        out
    }
}

/// Draws an n-point sample along a street of `n + 2q` locations.
pub fn generate_housing_sample(n: usize, q: usize, noise: f64, seed: u64) -> Result<RegressionSample> {
    if n < 4 * q + 4 {
        return invalid(format!("need n >= 4q + 4 = {}, got {n}", 4 * q + 4));
    }
    let model = HousingModel::new(q, noise)?;
    let mut rng = stream(seed, Domain::Training, 0);
    let effects: Vec<f64> = (0..n + 2 * q).map(|_| rng.random()).collect();
    let mut inputs = Vec::with_capacity(n);
    let mut targets = Vec::with_capacity(n);
    for i in 0..n {
        let window = effects[i..i + model.window_len()].to_vec();
        targets.push(model.target(&window, &mut rng));
        inputs.push(window);
    }
    Ok(RegressionSample { inputs, targets, model })
}

pub fn clipped_loss(y: f64, prediction: f64) -> f64 {
    ((y - prediction) * (y - prediction)).min(LOSS_BOUND)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StableLearner {
    pub regularization: f64,
    /// Window weights followed by the constant-feature weight.
    pub weights: Vec<f64>,
    /// `B` in `βᵢ = B/i`.
    pub stability_constant: f64,
}

impl StableLearner {
    pub fn predict(&self, window: &[f64]) -> f64 {
        let (bias, w) = self.weights.split_last().expect("at least the constant feature");
        w.iter().zip(window).map(|(w, x)| w * x).sum::<f64>() + bias
    }

    pub fn beta_schedule(&self) -> BetaSchedule {
        BetaSchedule::Harmonic(self.stability_constant)
    }

    pub fn beta(&self, i: usize) -> f64 {
        self.stability_constant / i as f64
    }
}

/// `B = ρ²/λ` with `ρ = 2κ(Y + κ/√λ)` and `κ² = window_len + 1`.
pub fn stability_constant(window_len: usize, regularization: f64) -> f64 {
    let kappa = ((window_len + 1) as f64).sqrt();
    let rho = 2.0 * kappa * (TARGET_BOUND + kappa / regularization.sqrt());
    rho * rho / regularization
}

/// Ridge regression by Cholesky solve of the regularised normal equations.
pub fn train(sample: &RegressionSample, regularization: f64) -> Result<StableLearner> {
    if !(regularization.is_finite() && regularization > 0.0) {
        return invalid(format!("regularization must be positive, got {regularization}"));
    }
    if sample.is_empty() {
        return invalid("cannot train on an empty sample");
    }
    if sample.inputs.iter().flatten().all(|&x| x == 0.0) {
        return invalid("all window features are zero");
    }
    let k = sample.len();
    let d = sample.model.window_len() + 1;
    let features = DMatrix::from_fn(k, d, |i, j| sample.inputs[i].get(j).copied().unwrap_or(1.0));
    let targets = DVector::from_column_slice(&sample.targets);
    let kf = k as f64;
    let gram = features.transpose() * &features / kf + DMatrix::identity(d, d) * regularization;
    let rhs = features.transpose() * targets / kf;
    let weights = gram
        .cholesky()
        .ok_or_else(|| Error::InvalidParameter("normal equations are not positive definite".into()))?
        .solve(&rhs);
    Ok(StableLearner {
        regularization,
        weights: weights.iter().copied().collect(),
        stability_constant: stability_constant(sample.model.window_len(), regularization),
    })
}

/// Mean clipped loss over the training sample.
pub fn empirical_risk(learner: &StableLearner, sample: &RegressionSample) -> f64 {
    let total: f64 = sample
        .inputs
        .iter()
        .zip(&sample.targets)
        .map(|(x, &y)| clipped_loss(y, learner.predict(x)))
        .sum();
    total / sample.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RiskEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub trials: u64,
}

/// Monte Carlo estimate of `E_{(x,y)~D}[ℓ(y, f(x))]` on fresh, independent
/// points.
pub fn generalization_risk(
    learner: &StableLearner,
    model: &HousingModel,
    test_trials: u64,
    seed: u64,
) -> Result<RiskEstimate> {
    if test_trials < 2 {
        return invalid("need at least two test points");
    }
    let mut rng = stream(seed, Domain::Testing, 0);
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for _ in 0..test_trials {
        let (x, y) = model.draw_point(&mut rng);
        let loss = clipped_loss(y, learner.predict(&x));
        sum += loss;
        sum_sq += loss * loss;
    }
    let n = test_trials as f64;
    let mean = sum / n;
    let var = ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0);
    Ok(RiskEstimate { mean, std_error: (var / n).sqrt(), trials: test_trials })
}

/// `count` probe points `(window, y)`: the four corners (all-zero and
/// all-one windows with y ∈ {0, 1}) followed by pseudo-random points.
pub fn probe_grid(window_len: usize, count: usize, seed: u64) -> Vec<(Vec<f64>, f64)> {
    let mut probes: Vec<(Vec<f64>, f64)> = [(0.0, 0.0), (0.0, 1.0), (1.0, 0.0), (1.0, 1.0)]
        .into_iter()
        .map(|(x, y)| (vec![x; window_len], y))
        .take(count)
        .collect();
    let mut rng = stream(seed, Domain::Probe, 0);
    while probes.len() < count {
        let window = (0..window_len).map(|_| rng.random()).collect();
        probes.push((window, rng.random()));
    }
    probes
}

/// Largest `|ℓ(y, f_S(x)) − ℓ(y, f_{S∖i}(x))|` over all removal indices
/// `i` and all probes.
pub fn leave_one_out_sweep(
    sample: &RegressionSample,
    regularization: f64,
    probes: &[(Vec<f64>, f64)],
) -> Result<f64> {
    let full = train(sample, regularization)?;
    let mut worst = 0.0f64;
    for i in 0..sample.len() {
        let reduced = train(&sample.without(i), regularization)?;
        for (x, y) in probes {
            let diff = (clipped_loss(*y, full.predict(x)) - clipped_loss(*y, reduced.predict(x))).abs();
            worst = worst.max(diff);
        }
    }
    Ok(worst)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapConfig {
    pub n: usize,
    pub q: usize,
    pub regularization: f64,
    pub noise: f64,
    pub delta: f64,
    pub repetitions: usize,
    pub test_trials: u64,
    pub seed: u64,
    pub workers: usize,
}

impl Default for GapConfig {
    fn default() -> Self {
        Self {
            n: 500,
            q: 2,
            regularization: 1.0,
            noise: 0.1,
            delta: 0.05,
            repetitions: 200,
            test_trials: 20_000,
            seed: 0,
            workers: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapRecord {
    pub repetition: usize,
    pub empirical_risk: f64,
    pub test_risk: f64,
    pub test_std_error: f64,
    pub gap: f64,
    /// `R − R̂` allowance of the bound (all terms except `R̂`).
    pub bound: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapReport {
    pub records: Vec<GapRecord>,
    pub pass_fraction: f64,
    pub expectation_term: f64,
    pub deviation_term: f64,
    pub stability_constant: f64,
}

/// Repeats train-and-measure on independent samples and compares each gap
/// `R − R̂` against the m-dependent risk bound (with `m = 2q`). The Monte
/// Carlo error of `R` is allowed for with three standard errors.
pub fn gap_experiment(config: &GapConfig) -> Result<GapReport> {
    if config.repetitions == 0 {
        return invalid("need at least one repetition");
    }
    let m = 2 * config.q;
    let b = stability_constant(2 * config.q + 1, config.regularization);
    let schedule = StabilitySchedule::new(BetaSchedule::Harmonic(b), LOSS_BOUND, config.n, 0)?;
    // R̂ only shifts the total; the allowance is the same for every run
    let bound = m_dependent_generalization_bound(&schedule, m, 0.0, config.delta)?;
    let model = HousingModel::new(config.q, config.noise)?;

    let repetition = |rep: usize| -> Result<GapRecord> {
        let seed = config.seed.wrapping_mul(1_000_003).wrapping_add(rep as u64);
        let sample = generate_housing_sample(config.n, config.q, config.noise, seed)?;
        let learner = train(&sample, config.regularization)?;
        let empirical = empirical_risk(&learner, &sample);
        let risk = generalization_risk(&learner, &model, config.test_trials, seed)?;
        let gap = risk.mean - empirical;
        let allowance = bound.gap_terms();
        Ok(GapRecord {
            repetition: rep,
            empirical_risk: empirical,
            test_risk: risk.mean,
            test_std_error: risk.std_error,
            gap,
            bound: allowance,
            pass: gap <= allowance + 3.0 * risk.std_error,
        })
    };
    let records: Vec<GapRecord> = if config.workers <= 1 {
        (0..config.repetitions).map(repetition).collect::<Result<_>>()?
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.workers)
            .build()
            .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
        pool.install(|| (0..config.repetitions).into_par_iter().map(repetition).collect::<Result<_>>())?
    };
    let passed = records.iter().filter(|r| r.pass).count();
    Ok(GapReport {
        pass_fraction: passed as f64 / records.len() as f64,
        records,
        expectation_term: bound.expectation_term,
        deviation_term: bound.deviation_term,
        stability_constant: b,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sample_shape_and_graph() {
        let s = generate_housing_sample(500, 2, 0.1, 3).unwrap();
        assert_eq!(s.len(), 500);
        assert!(s.inputs.iter().all(|w| w.len() == 5));
        assert!(s.targets.iter().all(|y| (0.0..=1.0).contains(y)));
        let g = s.dependency_graph();
        assert_eq!(s.m_dependence(), 4);
        assert_eq!(g.max_degree(), 8);
        // consecutive windows overlap in all but one location
        assert_eq!(s.inputs[0][1..], s.inputs[1][..4]);
        assert!(generate_housing_sample(11, 2, 0.1, 0).is_err());
        assert!(generate_housing_sample(12, 2, 0.1, 0).is_ok());
    }

    #[test]
    fn noiseless_targets_are_window_means() {
        let s = generate_housing_sample(20, 1, 0.0, 9).unwrap();
        for (w, y) in s.inputs.iter().zip(&s.targets) {
            assert!((y - w.iter().sum::<f64>() / 3.0).abs() < 1e-15);
        }
        let iid = generate_housing_sample(10, 0, 0.0, 9).unwrap();
        assert_eq!(iid.dependency_graph().edge_count(), 0);
        for (w, y) in iid.inputs.iter().zip(&iid.targets) {
            assert_eq!(w[0], *y);
        }
    }

    #[test]
    fn heavy_regularization_shrinks_to_zero() {
        let s = generate_housing_sample(50, 1, 0.1, 1).unwrap();
        let learner = train(&s, 1e12).unwrap();
        assert!(learner.weights.iter().all(|w| w.abs() < 1e-10));
        assert!(learner.predict(&[1.0, 1.0, 1.0]).abs() < 1e-10);
    }

    #[test]
    fn exact_fit_with_tiny_regularization() {
        let s = generate_housing_sample(200, 1, 0.0, 4).unwrap();
        let learner = train(&s, 1e-10).unwrap();
        assert!(empirical_risk(&learner, &s) < 1e-12);
        let model = HousingModel::new(1, 0.0).unwrap();
        let risk = generalization_risk(&learner, &model, 5000, 4).unwrap();
        assert!(risk.mean <= 3.0 * risk.std_error + 1e-12);
    }

    #[test]
    fn training_errors() {
        let s = generate_housing_sample(20, 0, 0.0, 1).unwrap();
        assert!(train(&s, 0.0).is_err());
        let mut zero = s.clone();
        zero.inputs.iter_mut().for_each(|w| w.iter_mut().for_each(|x| *x = 0.0));
        assert!(train(&zero, 1.0).is_err());
        assert!(train(&s, 1.0).unwrap() == train(&s, 1.0).unwrap());
    }

    #[test]
    fn empirical_risk_by_hand() {
        let model = HousingModel::new(0, 0.0).unwrap();
        let sample = RegressionSample {
            inputs: vec![vec![0.1], vec![0.4], vec![0.9], vec![0.0], vec![0.6]],
            targets: vec![0.2, 0.5, 1.0, 0.3, 0.1],
            model,
        };
        let learner = StableLearner { regularization: 1.0, weights: vec![2.0, -0.5], stability_constant: 1.0 };
        let mut total = 0.0;
        for i in 0..5 {
            let pred = 2.0 * sample.inputs[i][0] - 0.5;
            let r = sample.targets[i] - pred;
            total += (r * r).min(1.0);
        }
        assert!((empirical_risk(&learner, &sample) - total / 5.0).abs() < 1e-15);

        let zero = StableLearner { regularization: 1.0, weights: vec![0.0, 0.0], stability_constant: 1.0 };
        let ones = RegressionSample { targets: vec![1.0; 5], ..sample.clone() };
        assert_eq!(empirical_risk(&zero, &ones), 1.0);
    }

    #[test]
    fn zero_predictor_risk_matches_closed_form() {
        // noiseless y = mean of 2q+1 uniforms: E[y²] = 1/4 + 1/(12(2q+1))
        let zero = StableLearner { regularization: 1.0, weights: vec![0.0; 4], stability_constant: 1.0 };
        let model = HousingModel::new(1, 0.0).unwrap();
        let risk = generalization_risk(&zero, &model, 200_000, 17).unwrap();
        let exact = 0.25 + 1.0 / 36.0;
        assert!((risk.mean - exact).abs() < 4.0 * risk.std_error, "{} vs {exact}", risk.mean);

        let small = generalization_risk(&zero, &model, 50_000, 3).unwrap();
        let large = generalization_risk(&zero, &model, 100_000, 3).unwrap();
        let ratio = small.std_error / large.std_error;
        assert!((ratio - 2f64.sqrt()).abs() < 0.05);
    }

    #[test]
    fn leave_one_out_within_schedule() {
        let s = generate_housing_sample(30, 1, 0.1, 5).unwrap();
        let probes = probe_grid(3, 100, 5);
        assert_eq!(probes.len(), 100);
        for lambda in [0.05, 0.5, 2.0] {
            let worst = leave_one_out_sweep(&s, lambda, &probes).unwrap();
            assert!(worst <= stability_constant(3, lambda) / 30.0);
        }
    }

    #[test]
    fn small_gap_experiment() {
        let cfg = GapConfig { n: 60, q: 1, repetitions: 8, test_trials: 2000, ..GapConfig::default() };
        let a = gap_experiment(&cfg).unwrap();
        assert_eq!(a.records.len(), 8);
        assert_eq!(a.pass_fraction, 1.0);
        let b = gap_experiment(&GapConfig { workers: 3, ..cfg.clone() }).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn bound_scaling_in_n() {
        let cfg = |n| GapConfig { n, q: 2, repetitions: 1, test_trials: 100, ..GapConfig::default() };
        let a = gap_experiment(&cfg(400)).unwrap();
        let b = gap_experiment(&cfg(800)).unwrap();
        // (4nβₙ + M) is constant for βₙ = B/n, so only √(1/n) moves
        assert!((a.deviation_term / b.deviation_term - 2f64.sqrt()).abs() < 1e-12);
    }
}

#[cfg(test)]
mod props {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn m_dependent_bound_monotone(b in 0.1f64..50.0, n in 40usize..2000, m in 1usize..8, delta in 0.01f64..0.5) {
            let at = |n: usize, m: usize| {
                let s = StabilitySchedule::new(BetaSchedule::Harmonic(b), LOSS_BOUND, n, 0).unwrap();
                m_dependent_generalization_bound(&s, m, 0.0, delta).unwrap().total
            };
            prop_assert!(at(n, m + 1) >= at(n, m));
            prop_assert!(at(n + 1, m) <= at(n, m));
        }
    }
}
