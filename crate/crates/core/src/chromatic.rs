//! Exact fractional chromatic number χ*(G) for small graphs.
//!
//! χ* is the optimum of the covering LP
//!
//! ```text
//! minimise Σ_S w_S   subject to   Σ_{S ∋ v} w_S ≥ 1 for every vertex v,  w ≥ 0,
//! ```
//!
//! over the maximal independent sets S. We solve the dual packing LP
//! (maximise Σ_v y_v subject to Σ_{v ∈ S} y_v ≤ 1) with a dense tableau
//! simplex over big rationals, and read the covering weights off the
//! reduced costs of the slack columns.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::graph::Graph;

/// Default vertex budget for [`fractional_chromatic_number`].
pub const DEFAULT_CHROMATIC_BUDGET: usize = 14;

const HARD_LIMIT: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FractionalColoring {
    pub independent_sets: Vec<Vec<usize>>,
    pub weights: Vec<BigRational>,
}

impl FractionalColoring {
    pub fn total_weight(&self) -> BigRational {
        self.weights.iter().fold(BigRational::zero(), |acc, w| acc + w)
    }

    /// Every set independent in `g`, weights non-negative, and every vertex
    /// covered with total weight at least one.
    pub fn is_valid_for(&self, g: &Graph) -> bool {
        if self.independent_sets.len() != self.weights.len() {
            return false;
        }
        let independent = self
            .independent_sets
            .iter()
            .all(|s| s.iter().all(|&u| s.iter().all(|&v| !g.has_edge(u, v))));
        let non_negative = self.weights.iter().all(|w| !w.is_negative());
        let mut cover = vec![BigRational::zero(); g.n()];
        for (set, w) in self.independent_sets.iter().zip(&self.weights) {
            for &v in set {
                cover[v] += w;
            }
        }
        independent && non_negative && cover.iter().all(|c| *c >= BigRational::one())
    }
}

/// χ*(g) as an exact rational, with a covering that attains it.
pub fn fractional_chromatic_number(
    g: &Graph,
    max_n: usize,
) -> Result<(BigRational, FractionalColoring)> {
    let limit = max_n.min(HARD_LIMIT);
    if g.n() > limit {
        return Err(Error::TooLarge { n: g.n(), max_n: limit });
    }
    if g.n() == 0 {
        let empty = FractionalColoring { independent_sets: vec![], weights: vec![] };
        return Ok((BigRational::zero(), empty));
    }
    let sets = maximal_independent_sets(g);
    let prices = solve_packing_dual(g.n(), &sets);

    let mut coloring = FractionalColoring { independent_sets: vec![], weights: vec![] };
    for (mask, w) in sets.into_iter().zip(prices) {
        if !w.is_zero() {
            coloring.independent_sets.push(bits(mask));
            coloring.weights.push(w);
        }
    }
    let value = coloring.total_weight();
    debug_assert!(coloring.is_valid_for(g));
    Ok((value, coloring))
}

fn bits(mut mask: u64) -> Vec<usize> {
    let mut out = Vec::new();
    while mask != 0 {
        out.push(mask.trailing_zeros() as usize);
        mask &= mask - 1;
    }
    out
}

/// Maximal independent sets as bitmasks, via Bron–Kerbosch with pivoting on
/// the complement graph.
pub(crate) fn maximal_independent_sets(g: &Graph) -> Vec<u64> {
    let n = g.n();
    let full = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    // non-neighbours, excluding the vertex itself
    let free: Vec<u64> = (0..n)
        .map(|v| {
            let nbrs = g.neighbors(v).iter().fold(0u64, |m, &u| m | (1 << u));
            full & !nbrs & !(1 << v)
        })
        .collect();

    fn expand(r: u64, mut p: u64, mut x: u64, free: &[u64], out: &mut Vec<u64>) {
        if p == 0 {
            if x == 0 {
                out.push(r);
            }
            return;
        }
        let pivot = (p | x).trailing_zeros() as usize;
        let mut candidates = p & !free[pivot];
        while candidates != 0 {
            let v = candidates.trailing_zeros() as usize;
            candidates &= candidates - 1;
            expand(r | (1 << v), p & free[v], x & free[v], free, out);
            p &= !(1 << v);
            x |= 1 << v;
        }
    }

    let mut out = Vec::new();
    expand(0, full, 0, &free, &mut out);
    out.sort_unstable();
    out
}

/// Solves `max Σ y_v` s.t. `Σ_{v∈S} y_v ≤ 1` for each set, `y ≥ 0`, and
/// returns the optimal dual prices of the set constraints (the covering
/// weights). Bland's rule guarantees termination.
fn solve_packing_dual(n: usize, sets: &[u64]) -> Vec<BigRational> {
    let rows = sets.len();
    let cols = n + rows;
    let zero = BigRational::zero();
    let one = BigRational::one();

    // tableau[i] = [coefficients..., rhs]; objective row holds reduced costs
    let mut tableau: Vec<Vec<BigRational>> = sets
        .iter()
        .enumerate()
        .map(|(i, &mask)| {
            let mut row = vec![zero.clone(); cols + 1];
            for (v, cell) in row.iter_mut().enumerate().take(n) {
                if mask & (1 << v) != 0 {
                    *cell = one.clone();
                }
            }
            row[n + i] = one.clone();
            row[cols] = one.clone();
            row
        })
        .collect();
    let mut objective = vec![zero.clone(); cols + 1];
    for cell in objective.iter_mut().take(n) {
        *cell = -one.clone();
    }
    let mut basis: Vec<usize> = (n..cols).collect();

    while let Some(enter) = (0..cols).find(|&j| objective[j].is_negative()) {
        let mut leave: Option<(usize, BigRational)> = None;
        for (i, row) in tableau.iter().enumerate() {
            if !row[enter].is_positive() {
                continue;
            }
            let ratio = &row[cols] / &row[enter];
            let better = match &leave {
                None => true,
                Some((l, best)) => ratio < *best || (ratio == *best && basis[i] < basis[*l]),
            };
            if better {
                leave = Some((i, ratio));
            }
        }
        let (pivot_row, _) = leave.expect("packing LP is bounded");
        pivot(&mut tableau, &mut objective, pivot_row, enter);
        basis[pivot_row] = enter;
    }

    (n..cols).map(|j| objective[j].clone()).collect()
}

fn pivot(
    tableau: &mut [Vec<BigRational>],
    objective: &mut [BigRational],
    pivot_row: usize,
    enter: usize,
) {
    let factor = tableau[pivot_row][enter].clone();
    for cell in tableau[pivot_row].iter_mut() {
        *cell = &*cell / &factor;
    }
    let pivot_values = tableau[pivot_row].clone();
    let eliminate = |row: &mut [BigRational]| {
        let k = row[enter].clone();
        if k.is_zero() {
            return;
        }
        for (cell, p) in row.iter_mut().zip(&pivot_values) {
            if !p.is_zero() {
                *cell -= &k * p;
            }
        }
    };
    for (i, row) in tableau.iter_mut().enumerate() {
        if i != pivot_row {
            eliminate(row);
        }
    }
    eliminate(objective);
}

/// Convenience constructor for exact ratios in tests and callers.
pub fn ratio(numer: i64, denom: i64) -> BigRational {
    BigRational::new(BigInt::from(numer), BigInt::from(denom))
}


#[cfg(test)]
mod props {
    use super::*;
    use proptest::prelude::*;

    fn arb_graph(max_n: usize) -> impl Strategy<Value = Graph> {
        (1..=max_n).prop_flat_map(|n| {
            let pairs: Vec<(usize, usize)> =
                (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect();
            proptest::collection::vec(any::<bool>(), pairs.len()).prop_map(move |mask| {
                Graph::new(n, pairs.iter().zip(&mask).filter(|(_, m)| **m).map(|(e, _)| *e))
                    .unwrap()
            })
        })
    }

    fn clique_number(g: &Graph) -> usize {
        let n = g.n();
        (0u32..1 << n)
            .filter(|&m| {
                let vs: Vec<usize> = (0..n).filter(|v| m & (1 << v) != 0).collect();
                vs.iter().all(|&u| vs.iter().all(|&v| u == v || g.has_edge(u, v)))
            })
            .map(|m| m.count_ones() as usize)
            .max()
            .unwrap_or(0)
    }

    fn chromatic_number(g: &Graph) -> usize {
        let n = g.n();
        (1..=n)
            .find(|&k| {
                let mut colors = vec![0usize; n];
                loop {
                    if g.edges().iter().all(|&(u, v)| colors[u] != colors[v]) {
                        return true;
                    }
                    let mut i = 0;
                    while i < n {
                        colors[i] += 1;
                        if colors[i] < k {
                            break;
                        }
                        colors[i] = 0;
                        i += 1;
                    }
                    if i == n {
                        return false;
                    }
                }
            })
            .unwrap_or(0)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(80))]

        #[test]
        fn sandwiched_between_clique_and_chromatic(g in arb_graph(8)) {
            let (value, coloring) = fractional_chromatic_number(&g, 14).unwrap();
            prop_assert!(coloring.is_valid_for(&g));
            prop_assert_eq!(coloring.total_weight(), value.clone());
            let omega = BigRational::from_integer(BigInt::from(clique_number(&g)));
            let chi = BigRational::from_integer(BigInt::from(chromatic_number(&g)));
            prop_assert!(omega <= value && value <= chi);
        }

        #[test]
        fn bipartite_is_two(a in 1usize..6, b in 1usize..6) {
            let g = crate::graph::families::complete_bipartite(a, b);
            prop_assert_eq!(fractional_chromatic_number(&g, 14).unwrap().0, ratio(2, 1));
        }
    }
}
