//! Graph-dependent random vectors and empirical checks of the tail bounds.

pub mod rng;
pub mod samplers;
pub mod tail;

pub use samplers::{DependentSampler, GeneratorLaw, Rect, SamplerKind};
pub use tail::{
    clopper_pearson_upper, estimate_tail, quantile_grid, validate_bound, Centering, EstimateConfig,
    TailEstimate, ThresholdVerdict, ValidationReport,
};

use crate::bounds::{
    forest_curve, general_curve, janson_curve, mcdiarmid_curve, tree_curve, Family,
    LipschitzVector, TailCurve,
};
use crate::chromatic::{fractional_chromatic_number, DEFAULT_CHROMATIC_BUDGET};
use crate::complexity::{best_upper_bound_with_workers, m_dependent_upper_bound, ComplexityResult};
use crate::error::{invalid, Result};
use crate::graph::Graph;

/// Budgets for the exact sub-computations behind [`applicable_curves`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CurveBudget {
    pub forest_complexity: usize,
    pub chromatic: usize,
    pub workers: usize,
}

impl Default for CurveBudget {
    fn default() -> Self {
        Self {
            forest_complexity: crate::complexity::DEFAULT_ORACLE_BUDGET,
            chromatic: DEFAULT_CHROMATIC_BUDGET,
            workers: 1,
        }
    }
}

/// The bound curves that provably apply to `f = Σ cᵢXᵢ` under `sampler`,
/// with the Λ estimate used by the general curve.
#[derive(Debug, Clone, PartialEq)]
pub struct ApplicableCurves {
    pub curves: Vec<TailCurve>,
    pub complexity: ComplexityResult,
}

impl ApplicableCurves {
    pub fn get(&self, family: Family) -> Option<&TailCurve> {
        self.curves.iter().find(|c| c.family == family)
    }

    /// The curve with the smallest denominator (first in family order on ties).
    pub fn tightest(&self) -> &TailCurve {
        self.curves
            .iter()
            .reduce(|best, c| if c.denominator < best.denominator { c } else { best })
            .expect("the general curve always applies")
    }
}

/// The curves for a sampler: those of [`graph_curves`] on its certified
/// graph, with the block construction offered as a Λ candidate for
/// m-dependent samplers.
pub fn applicable_curves(
    sampler: &DependentSampler,
    c: &LipschitzVector,
    budget: CurveBudget,
) -> Result<ApplicableCurves> {
    let mut hints = Vec::new();
    if let SamplerKind::MDependent { m } = sampler.kind() {
        if *m >= 1 {
            hints.push(m_dependent_upper_bound(sampler.n(), *m)?);
        }
    }
    graph_curves(sampler.graph(), c, budget, hints)
}

/// McDiarmid applies only to independent coordinates; Janson needs χ*,
/// which is computed exactly when the graph fits the chromatic budget; tree
/// and forest apply when the graph is one; the general curve always applies
/// with Λ from the oracle or the best heuristic, or from any of `hints`
/// (approximations of `g` itself) when smaller.
pub fn graph_curves(
    g: &Graph,
    c: &LipschitzVector,
    budget: CurveBudget,
    hints: Vec<ComplexityResult>,
) -> Result<ApplicableCurves> {
    if c.len() != g.n() {
        return invalid(format!("Lipschitz vector has length {}, graph has {} vertices", c.len(), g.n()));
    }
    let mut curves = Vec::new();
    if g.edge_count() == 0 {
        curves.push(mcdiarmid_curve(c)?);
    }
    if g.n() <= budget.chromatic {
        let (chi, _) = fractional_chromatic_number(g, budget.chromatic)?;
        curves.push(janson_curve(c, &chi)?);
    }
    if g.is_tree() {
        curves.push(tree_curve(g, c)?);
    }
    if g.is_forest() {
        curves.push(forest_curve(g, c)?);
    }
    let mut complexity =
        best_upper_bound_with_workers(g, budget.forest_complexity, budget.workers)?;
    for hint in hints {
        hint.witness.validate(g)?;
        if hint.value < complexity.value {
            complexity = hint;
        }
    }
    curves.push(general_curve(complexity.value, c.norm_inf())?);
    Ok(ApplicableCurves { curves, complexity })
}
