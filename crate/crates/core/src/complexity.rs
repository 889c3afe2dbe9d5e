//! Forest approximations and forest complexity.
//!
//! A forest approximation of `G` maps every vertex to a vertex of a forest
//! `F` such that each edge of `G` lands on a single vertex or on an edge of
//! `F`. Its λ-value is
//!
//! ```text
//! λ = Σ_{(u,v) ∈ E(F)} (|φ⁻¹(u)| + |φ⁻¹(v)|)²  +  Σ_{trees T of F} min_{u ∈ T} |φ⁻¹(u)|²
//! ```
//!
//! and the forest complexity Λ(G) is the minimum over all approximations.
//! All values here are exact integers.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::{Graph, VertexPartition};

/// Default vertex budget for [`exact_forest_complexity`].
pub const DEFAULT_ORACLE_BUDGET: usize = 12;

/// Hard limit for the exact oracle (block adjacency is kept in `u32` masks).
const ORACLE_HARD_LIMIT: usize = 32;

/// `(φ, F)`: the preimage sets of φ as a partition, plus a forest on the
/// blocks (block `i` of the partition is vertex `i` of the forest).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ForestApproximation {
    pub partition: VertexPartition,
    pub forest: Graph,
}

impl ForestApproximation {
    pub fn new(partition: VertexPartition, forest: Graph) -> Self {
        Self { partition, forest }
    }

    /// The approximation whose forest is the quotient of `g` by `partition`.
    /// Fails if that quotient has a cycle.
    pub fn from_partition(g: &Graph, partition: VertexPartition) -> Result<Self> {
        let forest = g.quotient(&partition)?;
        if !forest.is_forest() {
            return Err(Error::InvalidApproximation("quotient contains a cycle".into()));
        }
        Ok(Self { partition, forest })
    }

    pub fn identity(g: &Graph) -> Self {
        Self { partition: VertexPartition::singletons(g.n()), forest: g.clone() }
    }

    /// Checks that `F` is a forest on the blocks and that every edge of `g`
    /// stays inside a block or maps onto an edge of `F`.
    pub fn validate(&self, g: &Graph) -> Result<()> {
        if self.partition.n() != g.n() {
            return Err(Error::InvalidApproximation(format!(
                "partition covers {} vertices, graph has {}",
                self.partition.n(),
                g.n()
            )));
        }
        if self.forest.n() != self.partition.len() {
            return Err(Error::InvalidApproximation(format!(
                "forest has {} vertices for {} blocks",
                self.forest.n(),
                self.partition.len()
            )));
        }
        if !self.forest.is_forest() {
            return Err(Error::InvalidApproximation("F is not a forest".into()));
        }
        let block = self.partition.assignment();
        for &(u, v) in g.edges() {
            let (a, b) = (block[u], block[v]);
            if a != b && !self.forest.has_edge(a, b) {
                return Err(Error::InvalidApproximation(format!(
                    "edge {u}-{v} joins blocks {a} and {b}, which are not adjacent in F"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Exact,
    Identity,
    Cycle,
    Grid,
    MDependent,
    Diameter,
    ComponentMerge,
    Bandwidth,
    /// Per-component minimum over the other heuristics.
    Componentwise,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Exact => "exact",
            Method::Identity => "identity",
            Method::Cycle => "cycle",
            Method::Grid => "grid",
            Method::MDependent => "m_dependent",
            Method::Diameter => "diameter",
            Method::ComponentMerge => "component_merge",
            Method::Bandwidth => "bandwidth",
            Method::Componentwise => "componentwise",
        }
    }
}

/// A λ value with the approximation that achieves it. `exact` is set only
/// when `value` is Λ itself.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComplexityResult {
    pub value: u64,
    pub witness: ForestApproximation,
    pub exact: bool,
    pub method: Method,
}

impl ComplexityResult {
    fn upper(g: &Graph, witness: ForestApproximation, method: Method) -> Result<Self> {
        let value = lambda_value(g, &witness)?;
        Ok(Self { value, witness, exact: false, method })
    }
}

/// λ of a forest approximation, after validating it against `g`.
pub fn lambda_value(g: &Graph, fa: &ForestApproximation) -> Result<u64> {
    fa.validate(g)?;
    Ok(lambda_unchecked(&fa.partition.sizes(), &fa.forest))
}

fn lambda_unchecked(sizes: &[usize], forest: &Graph) -> u64 {
    let sq = |x: usize| (x as u64) * (x as u64);
    let edge_sum: u64 = forest.edges().iter().map(|&(a, b)| sq(sizes[a] + sizes[b])).sum();
    let tree_sum: u64 = forest
        .connected_components()
        .iter()
        .map(|tree| tree.iter().map(|&u| sq(sizes[u])).min().unwrap_or(0))
        .sum();
    edge_sum + tree_sum
}

/// Λ(G) by exhaustive search over set partitions, for `g.n() <= max_n`.
pub fn exact_forest_complexity(g: &Graph, max_n: usize) -> Result<ComplexityResult> {
    exact_forest_complexity_with_workers(g, max_n, 1)
}

/// [`exact_forest_complexity`] with the search split over `workers` threads.
/// The result does not depend on `workers`.
///
/// Partitions are enumerated as restricted-growth strings in lexicographic
/// order and the forest is always the quotient (adding an F edge that is not
/// forced by `g` joins two trees and never lowers λ). A prefix is cut as
/// soon as its partial quotient has a cycle, since blocks only grow and the
/// partial quotient is a subgraph of every completion's quotient; it is also
/// cut when the partial edge sum plus one already reaches the incumbent.
/// Ties resolve to the first partition in enumeration order.
pub fn exact_forest_complexity_with_workers(
    g: &Graph,
    max_n: usize,
    workers: usize,
) -> Result<ComplexityResult> {
    let n = g.n();
    let limit = max_n.min(ORACLE_HARD_LIMIT);
    if n > limit {
        return Err(Error::TooLarge { n, max_n: limit });
    }
    if n == 0 {
        let witness =
            ForestApproximation::new(VertexPartition::singletons(0), Graph::edgeless(0));
        return Ok(ComplexityResult { value: 0, witness, exact: true, method: Method::Exact });
    }

    // incumbent + 1 keeps every partition achieving the heuristic value reachable
    let seed_bound = heuristic_upper_bound(g)?.value + 1;
    let lower: Vec<Vec<usize>> =
        (0..n).map(|v| g.neighbors(v).iter().copied().filter(|&u| u < v).collect()).collect();

    let split_depth = split_depth(n, workers);
    let mut prefixes = Vec::new();
    {
        let mut search = Search::new(n, &lower, seed_bound);
        search.collect_prefixes(0, split_depth, &mut prefixes);
    }

    let run = |prefix: &Vec<u8>| {
        let mut search = Search::new(n, &lower, seed_bound);
        search.replay(prefix);
        search.descend(prefix.len());
        search.best
    };
    let results: Vec<Option<(u64, Vec<u8>)>> = if workers <= 1 {
        prefixes.iter().map(run).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
        pool.install(|| prefixes.par_iter().map(run).collect())
    };

    // prefixes are in enumeration order: keep the first strict minimum
    let mut best: Option<(u64, Vec<u8>)> = None;
    for found in results.into_iter().flatten() {
        if best.as_ref().is_none_or(|b| found.0 < b.0) {
            best = Some(found);
        }
    }
    let (value, labels) = best.expect("the heuristic partition is always reachable");
    let labels: Vec<usize> = labels.into_iter().map(usize::from).collect();
    let witness = ForestApproximation::from_partition(g, VertexPartition::from_labels(&labels))?;
    debug_assert_eq!(lambda_value(g, &witness), Ok(value));
    Ok(ComplexityResult { value, witness, exact: true, method: Method::Exact })
}

fn split_depth(n: usize, workers: usize) -> usize {
    if workers <= 1 {
        0
    } else {
        n.min(5)
    }
}

struct Search<'a> {
    n: usize,
    lower: &'a [Vec<usize>],
    labels: Vec<u8>,
    sizes: Vec<u32>,
    adj: Vec<u32>,
    blocks: usize,
    bound: u64,
    best: Option<(u64, Vec<u8>)>,
}

impl<'a> Search<'a> {
    fn new(n: usize, lower: &'a [Vec<usize>], bound: u64) -> Self {
        Self {
            n,
            lower,
            labels: vec![0; n],
            sizes: vec![0; n],
            adj: vec![0; n],
            blocks: 0,
            bound,
            best: None,
        }
    }

    fn reachable(&self, from: usize) -> u32 {
        let mut seen = 1u32 << from;
        let mut frontier = seen;
        while frontier != 0 {
            let mut next = 0;
            let mut f = frontier;
            while f != 0 {
                let b = f.trailing_zeros() as usize;
                f &= f - 1;
                next |= self.adj[b];
            }
            frontier = next & !seen;
            seen |= next;
        }
        seen
    }

    /// Places vertex `v` in block `b`. Returns false (leaving the state
    /// partially modified) if the partial quotient would gain a cycle.
    fn place(&mut self, v: usize, b: usize) -> bool {
        self.labels[v] = b as u8;
        self.sizes[b] += 1;
        if b == self.blocks {
            self.blocks += 1;
        }
        for &u in &self.lower[v] {
            let c = self.labels[u] as usize;
            if c == b || self.adj[b] & (1 << c) != 0 {
                continue;
            }
            if self.reachable(b) & (1 << c) != 0 {
                return false;
            }
            self.adj[b] |= 1 << c;
            self.adj[c] |= 1 << b;
        }
        true
    }

    fn edge_sum(&self) -> u64 {
        let mut total = 0u64;
        for a in 0..self.blocks {
            let mut m = self.adj[a] & !((2u32 << a) - 1);
            while m != 0 {
                let b = m.trailing_zeros() as usize;
                m &= m - 1;
                let s = (self.sizes[a] + self.sizes[b]) as u64;
                total += s * s;
            }
        }
        total
    }

    fn tree_sum(&self) -> u64 {
        let mut done = 0u32;
        let mut total = 0u64;
        for a in 0..self.blocks {
            if done & (1 << a) != 0 {
                continue;
            }
            let tree = self.reachable(a);
            done |= tree;
            let mut m = tree;
            let mut smallest = u32::MAX;
            while m != 0 {
                let b = m.trailing_zeros() as usize;
                m &= m - 1;
                smallest = smallest.min(self.sizes[b]);
            }
            total += (smallest as u64) * (smallest as u64);
        }
        total
    }

    fn incumbent(&self) -> u64 {
        self.best.as_ref().map_or(self.bound, |b| b.0)
    }

    fn descend(&mut self, v: usize) {
        if v == self.n {
            let value = self.edge_sum() + self.tree_sum();
            if value < self.incumbent() {
                self.best = Some((value, self.labels.clone()));
            }
            return;
        }
        let saved_adj = self.adj.clone();
        let saved_blocks = self.blocks;
        for b in 0..=saved_blocks {
            if self.place(v, b) && self.edge_sum() + 1 < self.incumbent() {
                self.descend(v + 1);
            }
            self.sizes[b] -= 1;
            self.blocks = saved_blocks;
            self.adj.copy_from_slice(&saved_adj);
        }
    }

    fn collect_prefixes(&mut self, v: usize, depth: usize, out: &mut Vec<Vec<u8>>) {
        if v == depth {
            out.push(self.labels[..v].to_vec());
            return;
        }
        let saved_adj = self.adj.clone();
        let saved_blocks = self.blocks;
        for b in 0..=saved_blocks {
            if self.place(v, b) {
                self.collect_prefixes(v + 1, depth, out);
            }
            self.sizes[b] -= 1;
            self.blocks = saved_blocks;
            self.adj.copy_from_slice(&saved_adj);
        }
    }

    fn replay(&mut self, prefix: &[u8]) {
        for (v, &b) in prefix.iter().enumerate() {
            let ok = self.place(v, b as usize);
            debug_assert!(ok);
        }
    }
}

/// Identity approximation of a forest: λ = 4|E| + (number of trees), which
/// is 4n − 3 for a tree.
pub fn identity_upper_bound(g: &Graph) -> Result<ComplexityResult> {
    if !g.is_forest() {
        return Err(Error::NotAForest);
    }
    ComplexityResult::upper(g, ForestApproximation::identity(g), Method::Identity)
}

/// Path approximation of the cycle `C_n`: vertex 0 alone, then the pairs
/// `{i, n−i}`, and for even `n` the antipode `n/2` alone at the far end.
/// λ = 8n − 13 for even `n` and 8n − 14 for odd `n`.
pub fn cycle_upper_bound(n: usize) -> Result<ComplexityResult> {
    let g = crate::graph::families::cycle(n)?;
    let blocks: Vec<Vec<usize>> =
        (0..=n / 2).map(|i| if i == 0 || 2 * i == n { vec![i] } else { vec![i, n - i] }).collect();
    let partition = VertexPartition::new(n, blocks)?;
    ComplexityResult::upper(&g, ForestApproximation::from_partition(&g, partition)?, Method::Cycle)
}

/// Anti-diagonal approximation of the `m × m` grid: the blocks
/// `{(r, c) : r + c = d}` form a path of 2m − 1 vertices, giving
/// λ = 2(3² + 5² + … + (2m−1)²) + 1.
pub fn grid_upper_bound(m: usize) -> Result<ComplexityResult> {
    if m < 2 {
        return Err(Error::InvalidParameter(format!("grid side must be >= 2, got {m}")));
    }
    let g = crate::graph::families::grid(m, m);
    let blocks: Vec<Vec<usize>> = (0..2 * m - 1)
        .map(|d| (0..m).filter(|&r| d >= r && d - r < m).map(|r| r * m + (d - r)).collect())
        .collect();
    let partition = VertexPartition::new(m * m, blocks)?;
    ComplexityResult::upper(&g, ForestApproximation::from_partition(&g, partition)?, Method::Grid)
}

/// Consecutive blocks of `m` indices for the m-dependent chain on `n`
/// vertices, mapped onto a path. When `m` divides `n` the value is
/// (n/m − 1)(2m)² + m²; otherwise it is the λ of the same construction
/// with a short final block. Always at most 4mn.
pub fn m_dependent_upper_bound(n: usize, m: usize) -> Result<ComplexityResult> {
    if n == 0 || m == 0 {
        return Err(Error::InvalidParameter(format!("need n >= 1 and m >= 1, got n={n}, m={m}")));
    }
    let g = crate::graph::families::m_dependent(n, m);
    let fa = ForestApproximation::from_partition(&g, consecutive_blocks(n, m))?;
    ComplexityResult::upper(&g, fa, Method::MDependent)
}

fn consecutive_blocks(n: usize, width: usize) -> VertexPartition {
    let labels: Vec<usize> = (0..n).map(|v| v / width).collect();
    VertexPartition::from_labels(&labels)
}

/// Per component: BFS from the smallest vertex, take the farthest vertex
/// (smallest id on ties) as a peripheral vertex, and merge the BFS layers
/// from it. Every edge joins the same or adjacent layers, so the quotient is
/// a disjoint union of paths.
pub fn diameter_heuristic(g: &Graph) -> Result<ComplexityResult> {
    let mut blocks = Vec::new();
    for component in g.connected_components() {
        let start = component[0];
        let dist = g.distances_from(start);
        let far = component
            .iter()
            .copied()
            .max_by(|&a, &b| dist[a].cmp(&dist[b]).then(b.cmp(&a)))
            .unwrap_or(start);
        blocks.extend(g.bfs_layers(far)?);
    }
    let partition = VertexPartition::new(g.n(), blocks)?;
    ComplexityResult::upper(g, ForestApproximation::from_partition(g, partition)?, Method::Diameter)
}

/// Every connected component merged into a single block: λ = Σ |C|².
pub fn component_merge(g: &Graph) -> Result<ComplexityResult> {
    let partition = VertexPartition::new(g.n(), g.connected_components())?;
    let fa = ForestApproximation::from_partition(g, partition)?;
    ComplexityResult::upper(g, fa, Method::ComponentMerge)
}

/// Consecutive id blocks of width equal to the bandwidth of the identity
/// ordering (max |u − v| over edges). Edges then only join equal or
/// neighbouring blocks.
pub fn bandwidth_blocks(g: &Graph) -> Result<ComplexityResult> {
    let width = g.edges().iter().map(|&(u, v)| v - u).max().unwrap_or(1);
    let fa = ForestApproximation::from_partition(g, consecutive_blocks(g.n(), width))?;
    ComplexityResult::upper(g, fa, Method::Bandwidth)
}

/// Best of the polynomial heuristics (no exact search).
fn heuristic_upper_bound(g: &Graph) -> Result<ComplexityResult> {
    componentwise(g, 0)
}

/// Applies identity (trees), diameter layering, component merge and, for
/// components with at most `exact_budget` vertices, the exact oracle to each
/// component separately, and glues the per-component winners together.
fn componentwise(g: &Graph, exact_budget: usize) -> Result<ComplexityResult> {
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    for component in g.connected_components() {
        let sub = g.induced(&component);
        let mut candidates = vec![diameter_heuristic(&sub)?, component_merge(&sub)?];
        if sub.is_tree() {
            candidates.push(identity_upper_bound(&sub)?);
        }
        if sub.n() <= exact_budget {
            candidates.push(exact_forest_complexity(&sub, exact_budget)?);
        }
        let best = pick_min(candidates);
        blocks.extend(
            best.witness
                .partition
                .blocks()
                .iter()
                .map(|b| b.iter().map(|&v| component[v]).collect::<Vec<_>>()),
        );
    }
    let partition = VertexPartition::new(g.n(), blocks)?;
    let fa = ForestApproximation::from_partition(g, partition)?;
    ComplexityResult::upper(g, fa, Method::Componentwise)
}

fn pick_min(candidates: Vec<ComplexityResult>) -> ComplexityResult {
    candidates
        .into_iter()
        .reduce(|best, c| if c.value < best.value { c } else { best })
        .expect("at least one candidate")
}

/// Exact Λ when `g.n() <= budget`, otherwise the smallest of the heuristic
/// upper bounds.
pub fn best_upper_bound(g: &Graph, budget: usize) -> Result<ComplexityResult> {
    best_upper_bound_with_workers(g, budget, 1)
}

pub fn best_upper_bound_with_workers(
    g: &Graph,
    budget: usize,
    workers: usize,
) -> Result<ComplexityResult> {
    if g.n() <= budget.min(ORACLE_HARD_LIMIT) {
        return exact_forest_complexity_with_workers(g, budget, workers);
    }
    Ok(pick_min(vec![componentwise(g, budget)?, bandwidth_blocks(g)?]))
}

/// Every heuristic and construction applicable to `g`, labelled by method.
/// The closed-form constructions are not included (they are tied to a
/// family, not to an arbitrary graph).
pub fn heuristic_report(g: &Graph) -> Result<Vec<ComplexityResult>> {
    let mut out = Vec::new();
    if g.is_forest() {
        out.push(identity_upper_bound(g)?);
    }
    out.push(diameter_heuristic(g)?);
    out.push(component_merge(g)?);
    out.push(bandwidth_blocks(g)?);
    out.push(heuristic_upper_bound(g)?);
    Ok(out)
}
