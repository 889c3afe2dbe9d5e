//! Closed-form McDiarmid-type tail bounds and stability generalization bounds.
//!
//! Every tail bound here has the shape `exp(−2t²/D)`; the families differ
//! only in the denominator `D`:
//!
//! | family    | D                                                         |
//! |-----------|-----------------------------------------------------------|
//! | mcdiarmid | ‖c‖₂²                                                     |
//! | janson    | χ*(G)·‖c‖₂²  (sums of interval-valued variables only)     |
//! | tree      | Σ_{ij ∈ E}(cᵢ+cⱼ)² + c_min²                               |
//! | forest    | Σ_{ij ∈ E}(cᵢ+cⱼ)² + Σ_trees c_min,T²                     |
//! | general   | Λ(G)·‖c‖∞²                                                |
//!
//! Probabilities are computed as `exp` of the fully formed exponent.

use num_rational::BigRational;
use num_traits::{One, ToPrimitive};
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::graph::Graph;

/// Per-coordinate Lipschitz coefficients.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LipschitzVector(Vec<f64>);

impl LipschitzVector {
    pub fn new(c: Vec<f64>) -> Result<Self> {
        if let Some(x) = c.iter().find(|x| !x.is_finite() || **x < 0.0) {
            return invalid(format!("Lipschitz coefficients must be finite and >= 0, got {x}"));
        }
        Ok(Self(c))
    }

    pub fn uniform(n: usize, value: f64) -> Result<Self> {
        Self::new(vec![value; n])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn norm2_squared(&self) -> f64 {
        self.0.iter().map(|x| x * x).sum()
    }

    pub fn norm_inf(&self) -> f64 {
        self.0.iter().copied().fold(0.0, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.0.iter().copied().fold(f64::INFINITY, f64::min)
    }

    fn check_len(&self, g: &Graph) -> Result<()> {
        if self.len() != g.n() {
            return invalid(format!(
                "Lipschitz vector has length {}, graph has {} vertices",
                self.len(),
                g.n()
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    McDiarmid,
    Janson,
    Tree,
    Forest,
    General,
}

impl Family {
    pub const ALL: [Family; 5] =
        [Family::McDiarmid, Family::Janson, Family::Tree, Family::Forest, Family::General];

    pub fn name(self) -> &'static str {
        match self {
            Family::McDiarmid => "mcdiarmid",
            Family::Janson => "janson",
            Family::Tree => "tree",
            Family::Forest => "forest",
            Family::General => "general",
        }
    }
}

/// A bound evaluated at one threshold. `probability` is clamped to [0, 1];
/// `raw` is the unclamped expression.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailBound {
    pub t: f64,
    pub probability: f64,
    pub raw: f64,
    /// `ln(raw)`, kept so that comparisons need not go through `exp`.
    pub exponent: f64,
    pub family: Family,
    pub denominator: f64,
}

/// The curve `t ↦ exp(−2t²/D)` of one family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailCurve {
    pub family: Family,
    pub denominator: f64,
}

impl TailCurve {
    pub fn new(family: Family, denominator: f64) -> Result<Self> {
        if !(denominator.is_finite() && denominator > 0.0) {
            return invalid(format!("tail denominator must be positive, got {denominator}"));
        }
        Ok(Self { family, denominator })
    }

    pub fn exponent(&self, t: f64) -> f64 {
        -2.0 * t * t / self.denominator
    }

    /// Bound at `t >= 0`; `t <= 0` gives the trivial bound 1.
    pub fn at(&self, t: f64) -> TailBound {
        let exponent = if t <= 0.0 { 0.0 } else { self.exponent(t) };
        let raw = exponent.exp();
        TailBound {
            t,
            probability: raw.clamp(0.0, 1.0),
            raw,
            exponent,
            family: self.family,
            denominator: self.denominator,
        }
    }

    /// The threshold at which the bound equals `delta`: `t = √(D·ln(1/δ)/2)`.
    pub fn invert(&self, delta: f64) -> Result<f64> {
        invert_tail(self.denominator, delta)
    }

    /// Same family with the denominator scaled by `factor` (used to build
    /// deliberately wrong curves for negative controls).
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.family, self.denominator * factor)
    }
}

fn check_t(t: f64) -> Result<()> {
    if !(t.is_finite() && t > 0.0) {
        return invalid(format!("threshold t must be positive, got {t}"));
    }
    Ok(())
}

pub fn mcdiarmid_curve(c: &LipschitzVector) -> Result<TailCurve> {
    let d = c.norm2_squared();
    if d <= 0.0 {
        return invalid("Lipschitz vector is identically zero");
    }
    TailCurve::new(Family::McDiarmid, d)
}

pub fn janson_curve(c: &LipschitzVector, chi_star: &BigRational) -> Result<TailCurve> {
    if *chi_star < BigRational::one() {
        return invalid(format!("fractional chromatic number must be >= 1, got {chi_star}"));
    }
    let chi = chi_star.to_f64().unwrap_or(f64::NAN);
    TailCurve::new(Family::Janson, chi * mcdiarmid_curve(c)?.denominator)
}

fn forest_denominator(g: &Graph, c: &LipschitzVector) -> f64 {
    let c = c.as_slice();
    let edges: f64 = g.edges().iter().map(|&(i, j)| (c[i] + c[j]).powi(2)).sum();
    let minima: f64 = g
        .connected_components()
        .iter()
        .map(|tree| tree.iter().map(|&v| c[v]).fold(f64::INFINITY, f64::min).powi(2))
        .sum();
    edges + minima
}

pub fn tree_curve(g: &Graph, c: &LipschitzVector) -> Result<TailCurve> {
    c.check_len(g)?;
    if !g.is_tree() {
        return Err(Error::NotATree);
    }
    TailCurve::new(Family::Tree, forest_denominator(g, c))
}

pub fn forest_curve(g: &Graph, c: &LipschitzVector) -> Result<TailCurve> {
    c.check_len(g)?;
    if !g.is_forest() {
        return Err(Error::NotAForest);
    }
    TailCurve::new(Family::Forest, forest_denominator(g, c))
}

pub fn general_curve(lambda_g: u64, c_inf: f64) -> Result<TailCurve> {
    if lambda_g == 0 {
        return invalid("forest complexity must be >= 1");
    }
    if !(c_inf.is_finite() && c_inf > 0.0) {
        return invalid(format!("‖c‖∞ must be positive, got {c_inf}"));
    }
    TailCurve::new(Family::General, lambda_g as f64 * c_inf * c_inf)
}

/// `exp(−2t²/‖c‖₂²)`.
pub fn mcdiarmid_tail(c: &LipschitzVector, t: f64) -> Result<TailBound> {
    check_t(t)?;
    Ok(mcdiarmid_curve(c)?.at(t))
}

/// `exp(−2t²/(χ*‖c‖₂²))`; valid for `f = Σ Xᵢ` with `Xᵢ` in intervals of
/// length `cᵢ`.
pub fn janson_tail(c: &LipschitzVector, chi_star: &BigRational, t: f64) -> Result<TailBound> {
    check_t(t)?;
    Ok(janson_curve(c, chi_star)?.at(t))
}

pub fn tree_tail(g: &Graph, c: &LipschitzVector, t: f64) -> Result<TailBound> {
    check_t(t)?;
    Ok(tree_curve(g, c)?.at(t))
}

pub fn forest_tail(g: &Graph, c: &LipschitzVector, t: f64) -> Result<TailBound> {
    check_t(t)?;
    Ok(forest_curve(g, c)?.at(t))
}

/// `exp(−2t²/(Λ‖c‖∞²))`.
pub fn general_tail(lambda_g: u64, c_inf: f64, t: f64) -> Result<TailBound> {
    check_t(t)?;
    Ok(general_curve(lambda_g, c_inf)?.at(t))
}

/// Solves `exp(−2t²/D) = δ` for `t`.
pub fn invert_tail(denominator: f64, delta: f64) -> Result<f64> {
    if !(denominator.is_finite() && denominator > 0.0) {
        return invalid(format!("tail denominator must be positive, got {denominator}"));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return invalid(format!("delta must lie in (0, 1), got {delta}"));
    }
    Ok((denominator * (1.0 / delta).ln() / 2.0).sqrt())
}

/// Uniform-stability constants `β_i`, for training-set sizes `i >= 1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum BetaSchedule {
    /// `β_i = B / i`.
    Harmonic(f64),
    /// `β_i = table[i − 1]`.
    Table(Vec<f64>),
}

impl BetaSchedule {
    pub fn beta(&self, i: usize) -> Result<f64> {
        if i == 0 {
            return invalid("stability is defined for sample sizes >= 1");
        }
        let value = match self {
            BetaSchedule::Harmonic(b) => b / i as f64,
            BetaSchedule::Table(table) => *table.get(i - 1).ok_or_else(|| {
                Error::InvalidParameter(format!("beta table has no entry for i = {i}"))
            })?,
        };
        if !(value.is_finite() && value >= 0.0) {
            return invalid(format!("beta_{i} must be finite and >= 0, got {value}"));
        }
        Ok(value)
    }
}

/// A stable learner's setting: β schedule, loss bound `M`, sample size `n`
/// and maximum dependency degree `Δ`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilitySchedule {
    pub beta: BetaSchedule,
    pub loss_bound: f64,
    pub n: usize,
    pub max_degree: usize,
}

impl StabilitySchedule {
    pub fn new(beta: BetaSchedule, loss_bound: f64, n: usize, max_degree: usize) -> Result<Self> {
        if !(loss_bound.is_finite() && loss_bound >= 0.0) {
            return invalid(format!("loss bound M must be >= 0, got {loss_bound}"));
        }
        if n == 0 {
            return invalid("sample size must be >= 1");
        }
        if max_degree >= n {
            return invalid(format!("max degree {max_degree} must be < n = {n}"));
        }
        Ok(Self { beta, loss_bound, n, max_degree })
    }

    pub fn beta_n(&self) -> Result<f64> {
        self.beta.beta(self.n)
    }

    /// `β_{n,Δ} = max_{0 ≤ i ≤ Δ} β_{n−i}`.
    pub fn beta_window_max(&self) -> Result<f64> {
        if self.max_degree >= self.n {
            return invalid(format!("max degree {} must be < n = {}", self.max_degree, self.n));
        }
        (0..=self.max_degree)
            .map(|i| self.beta.beta(self.n - i))
            .try_fold(0.0f64, |acc, b| Ok(acc.max(b?)))
    }

    fn with_max_degree(&self, max_degree: usize) -> Result<Self> {
        Self::new(self.beta.clone(), self.loss_bound, self.n, max_degree)
    }
}

/// Bounded-difference constant of the generalization gap: `4βₙ + M/n`.
pub fn stability_lipschitz_constant(s: &StabilitySchedule) -> Result<f64> {
    Ok(4.0 * s.beta_n()? + s.loss_bound / s.n as f64)
}

/// `P(Φ − EΦ ≥ t) ≤ exp(−2n²t² / (Λ(4nβₙ + M)²))`.
pub fn stability_deviation_tail(s: &StabilitySchedule, lambda_g: u64, t: f64) -> Result<TailBound> {
    check_t(t)?;
    if lambda_g == 0 {
        return invalid("forest complexity must be >= 1");
    }
    let n = s.n as f64;
    let scale = 4.0 * n * s.beta_n()? + s.loss_bound;
    let denominator = lambda_g as f64 * scale * scale / (n * n);
    let exponent = -2.0 * n * n * t * t / (lambda_g as f64 * scale * scale);
    let raw = exponent.exp();
    Ok(TailBound {
        t,
        probability: raw.clamp(0.0, 1.0),
        raw,
        exponent,
        family: Family::General,
        denominator,
    })
}

/// `E[Φ] ≤ 2β_{n,Δ}(Δ + 1)`.
pub fn expected_gap_bound(s: &StabilitySchedule) -> Result<f64> {
    Ok(2.0 * s.beta_window_max()? * (s.max_degree as f64 + 1.0))
}

/// The three terms of a high-probability risk bound and their sum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GeneralizationBound {
    pub empirical_risk: f64,
    pub expectation_term: f64,
    pub deviation_term: f64,
    pub total: f64,
}

impl GeneralizationBound {
    fn new(empirical_risk: f64, expectation_term: f64, deviation_term: f64) -> Self {
        let total = empirical_risk + expectation_term + deviation_term;
        Self { empirical_risk, expectation_term, deviation_term, total }
    }

    /// The part of the bound that caps `R − R̂`.
    pub fn gap_terms(&self) -> f64 {
        self.expectation_term + self.deviation_term
    }
}

fn check_risk_and_delta(empirical_risk: f64, delta: f64) -> Result<()> {
    if !(empirical_risk.is_finite() && empirical_risk >= 0.0) {
        return invalid(format!("empirical risk must be >= 0, got {empirical_risk}"));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return invalid(format!("delta must lie in (0, 1), got {delta}"));
    }
    Ok(())
}

/// With probability at least `1 − δ`:
/// `R ≤ R̂ + 2β_{n,Δ}(Δ+1) + ((4nβₙ + M)/n)·√(Λ ln(1/δ)/2)`.
pub fn generalization_bound(
    s: &StabilitySchedule,
    lambda_g: u64,
    empirical_risk: f64,
    delta: f64,
) -> Result<GeneralizationBound> {
    check_risk_and_delta(empirical_risk, delta)?;
    let n = s.n as f64;
    let scale = (4.0 * n * s.beta_n()? + s.loss_bound) / n;
    let deviation = scale * (lambda_g as f64 * (1.0 / delta).ln() / 2.0).sqrt();
    Ok(GeneralizationBound::new(empirical_risk, expected_gap_bound(s)?, deviation))
}

/// Risk bound for an m-dependent sample, using `Δ = 2m` and `Λ ≤ 4mn`:
/// `R ≤ R̂ + 2β_{n,2m}(2m+1) + (4nβₙ + M)·√(2m ln(1/δ)/n)`.
///
/// The schedule's own `max_degree` is ignored. `m = 0` (independent data)
/// falls back to [`generalization_bound`] with `Λ = n` and `Δ = 0`, since
/// the closed form would drop the deviation term.
pub fn m_dependent_generalization_bound(
    s: &StabilitySchedule,
    m: usize,
    empirical_risk: f64,
    delta: f64,
) -> Result<GeneralizationBound> {
    check_risk_and_delta(empirical_risk, delta)?;
    if 2 * m >= s.n {
        return invalid(format!("need 2m < n, got m = {m}, n = {}", s.n));
    }
    if m == 0 {
        return generalization_bound(&s.with_max_degree(0)?, s.n as u64, empirical_risk, delta);
    }
    let window = s.with_max_degree(2 * m)?;
    let n = s.n as f64;
    let deviation = (4.0 * n * s.beta_n()? + s.loss_bound)
        * (2.0 * m as f64 * (1.0 / delta).ln() / n).sqrt();
    Ok(GeneralizationBound::new(empirical_risk, expected_gap_bound(&window)?, deviation))
}
