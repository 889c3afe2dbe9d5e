//! Random vectors with a known dependency graph. Every coordinate lies in
//! [0, 1], so `f(X) = Σ cᵢXᵢ` is c-Lipschitz with exactly the given `c`.

use rand::Rng;
use rand_distr::{Distribution, Poisson};

use crate::error::{invalid, Result};
use crate::graph::{families, Graph};

/// Law of the independent generators of the edge-generator construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GeneratorLaw {
    Uniform,
    /// Every generator equals this constant (a zero-variance control).
    Fixed(f64),
}

/// Closed axis-aligned rectangle `[x0, x1] × [y0, y1]` inside the unit square.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Rect {
    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Result<Self> {
        let inside = |v: f64| (0.0..=1.0).contains(&v);
        if !(x0 < x1 && y0 < y1 && [x0, y0, x1, y1].into_iter().all(inside)) {
            return invalid(format!("rectangle [{x0}, {x1}] x [{y0}, {y1}] is not a proper rectangle in the unit square"));
        }
        Ok(Self { x0, y0, x1, y1 })
    }

    pub fn area(&self) -> f64 {
        (self.x1 - self.x0) * (self.y1 - self.y0)
    }

    /// Closed rectangles: touching boundaries count.
    pub fn intersects(&self, other: &Rect) -> bool {
        self.x0 <= other.x1 && other.x0 <= self.x1 && self.y0 <= other.y1 && other.y0 <= self.y1
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        self.x0 <= x && x <= self.x1 && self.y0 <= y && y <= self.y1
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SamplerKind {
    /// One generator per vertex and per edge; `Xᵥ` is the mean of the
    /// vertex's own generator and those of its incident edges.
    EdgeGenerator { law: GeneratorLaw },
    /// `Xᵢ = mean(εᵢ, …, εᵢ₊ₘ)` over i.i.d. uniforms.
    MDependent { m: usize },
    /// `Xᵢ = min(Nᵢ, cap)/cap` where `Nᵢ` counts Poisson points in region `i`.
    PoissonRegions { regions: Vec<Rect>, intensity: f64, cap: u32 },
}

/// A random vector together with a certified dependency graph.
#[derive(Debug, Clone, PartialEq)]
pub struct DependentSampler {
    kind: SamplerKind,
    graph: Graph,
}

impl DependentSampler {
    pub fn edge_generator(graph: Graph) -> Self {
        Self { kind: SamplerKind::EdgeGenerator { law: GeneratorLaw::Uniform }, graph }
    }

    pub fn edge_generator_with(graph: Graph, law: GeneratorLaw) -> Result<Self> {
        if let GeneratorLaw::Fixed(v) = law {
            if !(0.0..=1.0).contains(&v) {
                return invalid(format!("fixed generator value must lie in [0, 1], got {v}"));
            }
        }
        Ok(Self { kind: SamplerKind::EdgeGenerator { law }, graph })
    }

    pub fn m_dependent(n: usize, m: usize) -> Result<Self> {
        if n == 0 {
            return invalid("m-dependent sampler needs n >= 1");
        }
        Ok(Self { kind: SamplerKind::MDependent { m }, graph: families::m_dependent(n, m) })
    }

    pub fn poisson_regions(regions: Vec<Rect>, intensity: f64, cap: u32) -> Result<Self> {
        if !(intensity.is_finite() && intensity > 0.0) {
            return invalid(format!("intensity must be positive, got {intensity}"));
        }
        if cap == 0 {
            return invalid("count cap must be >= 1");
        }
        if regions.is_empty() {
            return invalid("need at least one region");
        }
        let n = regions.len();
        let edges = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .filter(|&(i, j)| regions[i].intersects(&regions[j]));
        let graph = Graph::new(n, edges.collect::<Vec<_>>())?;
        Ok(Self { kind: SamplerKind::PoissonRegions { regions, intensity, cap }, graph })
    }

    pub fn kind(&self) -> &SamplerKind {
        &self.kind
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn n(&self) -> usize {
        self.graph.n()
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            SamplerKind::EdgeGenerator { .. } => "edge_generator",
            SamplerKind::MDependent { .. } => "m_dependent",
            SamplerKind::PoissonRegions { .. } => "poisson_regions",
        }
    }

    /// Draws one realisation into `out` (length `n`).
    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        match &self.kind {
            SamplerKind::EdgeGenerator { law } => {
                let mut draw = || match law {
                    GeneratorLaw::Uniform => rng.random::<f64>(),
                    GeneratorLaw::Fixed(v) => *v,
                };
                for x in out.iter_mut() {
                    *x = draw();
                }
                for &(u, v) in self.graph.edges() {
                    let e = draw();
                    out[u] += e;
                    out[v] += e;
                }
                for (v, x) in out.iter_mut().enumerate() {
                    *x /= (1 + self.graph.degree(v)) as f64;
                }
            }
            SamplerKind::MDependent { m } => {
                let eps: Vec<f64> = (0..out.len() + m).map(|_| rng.random::<f64>()).collect();
                for (i, x) in out.iter_mut().enumerate() {
                    *x = eps[i..=i + m].iter().sum::<f64>() / (m + 1) as f64;
                }
            }
            SamplerKind::PoissonRegions { regions, intensity, cap } => {
                let (bx0, by0, bx1, by1) = bounding_box(regions);
                let mass = intensity * (bx1 - bx0) * (by1 - by0);
                let total = Poisson::new(mass).map(|p| p.sample(rng) as u64).unwrap_or(0);
                let mut counts = vec![0u32; regions.len()];
                for _ in 0..total {
                    let x = bx0 + (bx1 - bx0) * rng.random::<f64>();
                    let y = by0 + (by1 - by0) * rng.random::<f64>();
                    for (count, r) in counts.iter_mut().zip(regions) {
                        if r.contains(x, y) {
                            *count += 1;
                        }
                    }
                }
                for (x, c) in out.iter_mut().zip(counts) {
                    *x = c.min(*cap) as f64 / *cap as f64;
                }
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let mut out = vec![0.0; self.n()];
        self.sample_into(rng, &mut out);
        out
    }

    /// Exact `E[Xᵢ]` for every coordinate.
    pub fn coordinate_means(&self) -> Vec<f64> {
        match &self.kind {
            SamplerKind::EdgeGenerator { law: GeneratorLaw::Uniform } => vec![0.5; self.n()],
            SamplerKind::EdgeGenerator { law: GeneratorLaw::Fixed(v) } => vec![*v; self.n()],
            SamplerKind::MDependent { .. } => vec![0.5; self.n()],
            SamplerKind::PoissonRegions { regions, intensity, cap } => regions
                .iter()
                .map(|r| capped_poisson_mean(intensity * r.area(), *cap) / *cap as f64)
                .collect(),
        }
    }
}

fn bounding_box(regions: &[Rect]) -> (f64, f64, f64, f64) {
    regions.iter().fold((1.0, 1.0, 0.0, 0.0), |(a, b, c, d), r| {
        (f64::min(a, r.x0), f64::min(b, r.y0), f64::max(c, r.x1), f64::max(d, r.y1))
    })
}

/// `E[min(N, cap)]` for `N ~ Poisson(mean)`, as `Σ_{k=1}^{cap} P(N ≥ k)`.
pub fn capped_poisson_mean(mean: f64, cap: u32) -> f64 {
    let mut pmf = (-mean).exp();
    let mut cdf = pmf;
    let mut total = 0.0;
    for k in 1..=cap {
        total += 1.0 - cdf;
        pmf *= mean / k as f64;
        cdf += pmf;
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulation::rng::{stream, Domain};

    #[test]
    fn edge_generator_on_edgeless_is_iid() {
        let s = DependentSampler::edge_generator(Graph::edgeless(4));
        let mut a = stream(1, Domain::Main, 0);
        let mut b = stream(1, Domain::Main, 0);
        let x = s.sample(&mut a);
        let raw: Vec<f64> = (0..4).map(|_| b.random::<f64>()).collect();
        assert_eq!(x, raw);
    }

    #[test]
    fn edge_generator_averages() {
        let s = DependentSampler::edge_generator(families::path(2));
        let mut a = stream(5, Domain::Main, 9);
        let mut b = stream(5, Domain::Main, 9);
        let x = s.sample(&mut a);
        let (e0, e1, e01) = (b.random::<f64>(), b.random::<f64>(), b.random::<f64>());
        assert_eq!(x, vec![(e0 + e01) / 2.0, (e1 + e01) / 2.0]);
    }

    #[test]
    fn fixed_law_is_constant() {
        let s = DependentSampler::edge_generator_with(families::cycle(5).unwrap(), GeneratorLaw::Fixed(0.5))
            .unwrap();
        let x = s.sample(&mut stream(0, Domain::Main, 0));
        assert!(x.iter().all(|&v| v == 0.5));
        assert!(DependentSampler::edge_generator_with(families::path(2), GeneratorLaw::Fixed(2.0)).is_err());
    }

    #[test]
    fn m_dependent_windows() {
        let s = DependentSampler::m_dependent(5, 2).unwrap();
        assert_eq!(s.graph().max_degree(), 4);
        let mut b = stream(3, Domain::Main, 1);
        let eps: Vec<f64> = (0..7).map(|_| b.random::<f64>()).collect();
        let x = s.sample(&mut stream(3, Domain::Main, 1));
        for i in 0..5 {
            assert!((x[i] - (eps[i] + eps[i + 1] + eps[i + 2]) / 3.0).abs() < 1e-15);
        }
        let iid = DependentSampler::m_dependent(3, 0).unwrap();
        assert_eq!(iid.graph().edge_count(), 0);
    }

    #[test]
    fn poisson_graph_and_bounds() {
        let a = Rect::new(0.0, 0.0, 0.5, 0.5).unwrap();
        let b = Rect::new(0.5, 0.5, 1.0, 1.0).unwrap(); // touches a at a corner
        let c = Rect::new(0.6, 0.0, 1.0, 0.4).unwrap();
        let s = DependentSampler::poisson_regions(vec![a, b, c], 20.0, 5).unwrap();
        assert_eq!(s.graph().edges(), &[(0, 1)]);
        for trial in 0..50 {
            let x = s.sample(&mut stream(1, Domain::Main, trial));
            assert!(x.iter().all(|v| (0.0..=1.0).contains(v)));
        }
        assert!(Rect::new(0.2, 0.0, 0.1, 1.0).is_err());
        assert!(Rect::new(0.0, 0.0, 1.5, 1.0).is_err());
        assert!(DependentSampler::poisson_regions(vec![a], 0.0, 5).is_err());
        assert!(DependentSampler::poisson_regions(vec![a], 1.0, 0).is_err());
    }

    #[test]
    fn identical_regions_agree() {
        let r = Rect::new(0.1, 0.1, 0.6, 0.7).unwrap();
        let s = DependentSampler::poisson_regions(vec![r, r], 30.0, 5).unwrap();
        for trial in 0..100 {
            let x = s.sample(&mut stream(2, Domain::Main, trial));
            assert_eq!(x[0], x[1]);
        }
    }

    #[test]
    fn capped_mean_closed_form() {
        // N ~ Poisson(1), cap 3: (P(N=1) + 2P(N=2) + 3P(N>=3)) / 3
        let e = (-1.0f64).exp();
        let (p1, p2) = (e, e / 2.0);
        let p3plus = 1.0 - e - p1 - p2;
        let expected = (p1 + 2.0 * p2 + 3.0 * p3plus) / 3.0;
        assert!((capped_poisson_mean(1.0, 3) / 3.0 - expected).abs() < 1e-15);
        let r = Rect::new(0.0, 0.0, 0.5, 0.5).unwrap();
        let s = DependentSampler::poisson_regions(vec![r], 4.0, 3).unwrap();
        assert!((s.coordinate_means()[0] - expected).abs() < 1e-15);
    }
}
