//! Undirected simple graphs on dense vertex ids `0..n`.
//!
//! A [`Graph`] is immutable after construction. Edges are stored once, as
//! `(u, v)` with `u < v`, in lexicographic order; adjacency lists are sorted.

use std::collections::VecDeque;

use rand::Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize)>,
    adj: Vec<Vec<usize>>,
}

impl Graph {
    /// Builds a graph, rejecting self-loops, duplicate edges (in either
    /// orientation) and out-of-range endpoints.
    pub fn new<I>(n: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut canon = Vec::new();
        for (u, v) in edges {
            for w in [u, v] {
                if w >= n {
                    return Err(Error::VertexOutOfRange { vertex: w, n });
                }
            }
            if u == v {
                return Err(Error::SelfLoop(u));
            }
            canon.push((u.min(v), u.max(v)));
        }
        canon.sort_unstable();
        if let Some(w) = canon.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::DuplicateEdge(w[0].0, w[0].1));
        }
        Ok(Self::from_canonical(n, canon))
    }

    /// Builds a graph from pairs that may repeat or form self-loops; both are
    /// silently dropped. Endpoints must be in range.
    fn collapsed<I>(n: usize, pairs: I) -> Self
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut canon: Vec<_> = pairs
            .into_iter()
            .filter(|(u, v)| u != v)
            .map(|(u, v)| (u.min(v), u.max(v)))
            .collect();
        canon.sort_unstable();
        canon.dedup();
        Self::from_canonical(n, canon)
    }

    fn from_canonical(n: usize, edges: Vec<(usize, usize)>) -> Self {
        let mut adj = vec![Vec::new(); n];
        for &(u, v) in &edges {
            adj[u].push(v);
            adj[v].push(u);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        Self { n, edges, adj }
    }

    pub fn edgeless(n: usize) -> Self {
        Self::from_canonical(n, Vec::new())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u < self.n && self.adj[u].binary_search(&v).is_ok()
    }

    /// Maximum vertex degree; 0 for edgeless (and empty) graphs.
    pub fn max_degree(&self) -> usize {
        self.adj.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Maximal connected vertex sets, each sorted, ordered by smallest vertex.
    pub fn connected_components(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.n];
        let mut components = Vec::new();
        for start in 0..self.n {
            if seen[start] {
                continue;
            }
            seen[start] = true;
            let mut component = vec![start];
            let mut stack = vec![start];
            while let Some(v) = stack.pop() {
                for &w in &self.adj[v] {
                    if !seen[w] {
                        seen[w] = true;
                        component.push(w);
                        stack.push(w);
                    }
                }
            }
            component.sort_unstable();
            components.push(component);
        }
        components
    }

    pub fn is_forest(&self) -> bool {
        // a graph is acyclic iff |E| = n - (number of components)
        self.edges.len() + self.connected_components().len() == self.n
    }

    pub fn is_tree(&self) -> bool {
        self.n >= 1 && self.edges.len() + 1 == self.n && self.is_forest()
    }

    /// Breadth-first layers from `source`: `layers[d]` holds the vertices at
    /// distance `d`, sorted. Vertices outside the component are not reached.
    pub fn bfs_layers(&self, source: usize) -> Result<Vec<Vec<usize>>> {
        if source >= self.n {
            return Err(Error::VertexOutOfRange { vertex: source, n: self.n });
        }
        let dist = self.distances_from(source);
        let depth = dist.iter().flatten().copied().max().unwrap_or(0);
        let mut layers = vec![Vec::new(); depth + 1];
        for (v, d) in dist.iter().enumerate() {
            if let Some(d) = d {
                layers[*d].push(v);
            }
        }
        Ok(layers)
    }

    pub(crate) fn distances_from(&self, source: usize) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.n];
        dist[source] = Some(0);
        let mut queue = VecDeque::from([source]);
        while let Some(v) = queue.pop_front() {
            let d = dist[v].unwrap_or(0);
            for &w in &self.adj[v] {
                if dist[w].is_none() {
                    dist[w] = Some(d + 1);
                    queue.push_back(w);
                }
            }
        }
        dist
    }

    /// Graph on the blocks of `partition` (in partition order), with an edge
    /// between two blocks iff some edge of `self` crosses them.
    pub fn quotient(&self, partition: &VertexPartition) -> Result<Graph> {
        if partition.n() != self.n {
            return Err(Error::InvalidPartition(format!(
                "partition covers {} vertices, graph has {}",
                partition.n(),
                self.n
            )));
        }
        let block_of = partition.assignment();
        Ok(Graph::collapsed(
            partition.len(),
            self.edges.iter().map(|&(u, v)| (block_of[u], block_of[v])),
        ))
    }

    /// Subgraph induced on `vertices` (which must be sorted and distinct),
    /// relabelled to `0..vertices.len()` in the given order.
    pub fn induced(&self, vertices: &[usize]) -> Graph {
        let mut local = vec![usize::MAX; self.n];
        for (i, &v) in vertices.iter().enumerate() {
            local[v] = i;
        }
        let edges = self
            .edges
            .iter()
            .filter(|(u, v)| local[*u] != usize::MAX && local[*v] != usize::MAX)
            .map(|&(u, v)| (local[u], local[v]));
        Graph::collapsed(vertices.len(), edges)
    }

    /// Copy of the graph with the edge `{u, v}` removed (no-op if absent).
    pub fn without_edge(&self, u: usize, v: usize) -> Graph {
        let e = (u.min(v), u.max(v));
        Graph::from_canonical(self.n, self.edges.iter().copied().filter(|&x| x != e).collect())
    }

    /// Degree sequence sum, always `2 * edge_count()`.
    pub fn degree_sum(&self) -> usize {
        self.adj.iter().map(Vec::len).sum()
    }
}

/// A partition of `0..n` into non-empty disjoint blocks.
///
/// Blocks are kept sorted internally and ordered by their minimum vertex.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct VertexPartition {
    blocks: Vec<Vec<usize>>,
    n: usize,
}

impl VertexPartition {
    pub fn new(n: usize, blocks: Vec<Vec<usize>>) -> Result<Self> {
        let mut seen = vec![false; n];
        let mut canon = Vec::with_capacity(blocks.len());
        for mut block in blocks {
            if block.is_empty() {
                return Err(Error::InvalidPartition("empty block".into()));
            }
            for &v in &block {
                if v >= n {
                    return Err(Error::VertexOutOfRange { vertex: v, n });
                }
                if std::mem::replace(&mut seen[v], true) {
                    return Err(Error::InvalidPartition(format!("vertex {v} in two blocks")));
                }
            }
            block.sort_unstable();
            canon.push(block);
        }
        if let Some(v) = seen.iter().position(|s| !s) {
            return Err(Error::InvalidPartition(format!("vertex {v} not covered")));
        }
        canon.sort_unstable_by_key(|b| b[0]);
        Ok(Self { blocks: canon, n })
    }

    pub fn singletons(n: usize) -> Self {
        Self { blocks: (0..n).map(|v| vec![v]).collect(), n }
    }

    /// Partition from a block label per vertex. Labels are arbitrary; blocks
    /// are renumbered by first occurrence.
    pub fn from_labels(labels: &[usize]) -> Self {
        let mut index = std::collections::HashMap::new();
        let mut blocks: Vec<Vec<usize>> = Vec::new();
        for (v, label) in labels.iter().enumerate() {
            let next = index.len();
            let b = *index.entry(*label).or_insert(next);
            if b == blocks.len() {
                blocks.push(Vec::new());
            }
            blocks[b].push(v);
        }
        Self { blocks, n: labels.len() }
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of blocks.
    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    /// Block index of every vertex.
    pub fn assignment(&self) -> Vec<usize> {
        let mut out = vec![0; self.n];
        for (b, block) in self.blocks.iter().enumerate() {
            for &v in block {
                out[v] = b;
            }
        }
        out
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.blocks.iter().map(Vec::len).collect()
    }
}

/// Built-in graph families.
pub mod families {
    use super::*;

    pub fn path(n: usize) -> Graph {
        Graph::collapsed(n, (1..n).map(|i| (i - 1, i)))
    }

    /// Cycle `0-1-...-(n-1)-0`; requires `n >= 3`.
    pub fn cycle(n: usize) -> Result<Graph> {
        if n < 3 {
            return Err(Error::InvalidParameter(format!("cycle needs n >= 3, got {n}")));
        }
        Ok(Graph::collapsed(n, (0..n).map(|i| (i, (i + 1) % n))))
    }

    pub fn complete(n: usize) -> Graph {
        Graph::collapsed(n, (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))))
    }

    /// Star with centre 0 and `leaves` leaves.
    pub fn star(leaves: usize) -> Graph {
        Graph::collapsed(leaves + 1, (1..=leaves).map(|v| (0, v)))
    }

    /// `rows x cols` grid; vertex `(r, c)` has id `r * cols + c`.
    pub fn grid(rows: usize, cols: usize) -> Graph {
        let id = |r: usize, c: usize| r * cols + c;
        let mut edges = Vec::new();
        for r in 0..rows {
            for c in 0..cols {
                if c + 1 < cols {
                    edges.push((id(r, c), id(r, c + 1)));
                }
                if r + 1 < rows {
                    edges.push((id(r, c), id(r + 1, c)));
                }
            }
        }
        Graph::collapsed(rows * cols, edges)
    }

    /// Dependency graph of an m-dependent sequence: `i ~ j` iff `0 < |i - j| <= m`.
    pub fn m_dependent(n: usize, m: usize) -> Graph {
        Graph::collapsed(n, (0..n).flat_map(|i| (i + 1..n.min(i + m + 1)).map(move |j| (i, j))))
    }

    pub fn complete_bipartite(a: usize, b: usize) -> Graph {
        Graph::collapsed(a + b, (0..a).flat_map(|u| (a..a + b).map(move |v| (u, v))))
    }

    /// Random recursive tree: vertex `i > 0` attaches to a uniform earlier vertex.
    pub fn random_tree<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Graph {
        Graph::collapsed(n, (1..n).map(|i| (rng.random_range(0..i), i)).collect::<Vec<_>>())
    }
}

#[cfg(test)]
mod tests {
    use super::families::*;
    use super::*;

    fn set(v: &[usize]) -> Vec<usize> {
        v.to_vec()
    }

    #[test]
    fn rejects_bad_edges() {
        assert_eq!(Graph::new(3, [(0, 0)]), Err(Error::SelfLoop(0)));
        assert_eq!(Graph::new(3, [(0, 1), (1, 0)]), Err(Error::DuplicateEdge(0, 1)));
        assert_eq!(
            Graph::new(3, [(0, 3)]),
            Err(Error::VertexOutOfRange { vertex: 3, n: 3 })
        );
        let g = Graph::new(3, [(2, 0), (1, 0)]).unwrap();
        assert_eq!(g.edges(), &[(0, 1), (0, 2)]);
    }

    #[test]
    fn forest_detection() {
        assert!(path(3).is_forest());
        assert!(!complete(3).is_forest());
        assert!(Graph::edgeless(5).is_forest());
        assert!(path(4).is_tree());
        assert!(!Graph::edgeless(2).is_tree());
    }

    #[test]
    fn components() {
        let g = Graph::new(4, [(0, 1), (2, 3)]).unwrap();
        assert_eq!(g.connected_components(), vec![set(&[0, 1]), set(&[2, 3])]);
        assert_eq!(path(4).connected_components(), vec![set(&[0, 1, 2, 3])]);
        assert_eq!(
            Graph::edgeless(3).connected_components(),
            vec![set(&[0]), set(&[1]), set(&[2])]
        );
    }

    #[test]
    fn degrees() {
        assert_eq!(star(4).max_degree(), 4);
        assert_eq!(Graph::edgeless(6).max_degree(), 0);
        assert_eq!(m_dependent(10, 2).max_degree(), 4);
    }

    #[test]
    fn quotients() {
        let tri = complete(3);
        let p = VertexPartition::new(3, vec![vec![0, 1], vec![2]]).unwrap();
        assert_eq!(tri.quotient(&p).unwrap(), path(2));

        let c4 = cycle(4).unwrap();
        assert_eq!(c4.quotient(&VertexPartition::singletons(4)).unwrap(), c4);

        let p = VertexPartition::new(4, vec![vec![1], vec![0, 2], vec![3]]).unwrap();
        // blocks reorder by minimum vertex: {0,2}, {1}, {3}
        assert_eq!(p.blocks(), &[vec![0, 2], vec![1], vec![3]]);
        let q = c4.quotient(&p).unwrap();
        assert_eq!(q.edges(), &[(0, 1), (0, 2)]);
        assert!(!q.has_edge(1, 2));
    }

    #[test]
    fn layers() {
        assert_eq!(path(3).bfs_layers(0).unwrap(), vec![set(&[0]), set(&[1]), set(&[2])]);
        let c4 = cycle(4).unwrap();
        assert_eq!(c4.bfs_layers(0).unwrap(), vec![set(&[0]), set(&[1, 3]), set(&[2])]);
        assert_eq!(star(3).bfs_layers(0).unwrap(), vec![set(&[0]), set(&[1, 2, 3])]);
        assert!(matches!(path(3).bfs_layers(3), Err(Error::VertexOutOfRange { .. })));
    }

    #[test]
    fn partition_validation() {
        assert!(VertexPartition::new(3, vec![vec![0, 1]]).is_err());
        assert!(VertexPartition::new(3, vec![vec![0, 1], vec![1, 2]]).is_err());
        assert!(VertexPartition::new(2, vec![vec![0, 1], vec![]]).is_err());
        let p = VertexPartition::from_labels(&[5, 2, 5, 7]);
        assert_eq!(p.blocks(), &[vec![0, 2], vec![1], vec![3]]);
        assert_eq!(p.assignment(), vec![0, 1, 0, 2]);
    }

    #[test]
    fn grid_and_families() {
        let g = grid(3, 3);
        assert_eq!(g.edge_count(), 12);
        assert_eq!(cycle(5).unwrap().edge_count(), 5);
        assert!(cycle(2).is_err());
        assert_eq!(complete_bipartite(2, 3).edge_count(), 6);
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        assert!(random_tree(30, &mut rng).is_tree());
    }
}
