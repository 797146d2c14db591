//! Weighted undirected graphs and their Laplacians.

use nalgebra::{DMatrix, DVector};

use crate::{Error, Result};

/// An undirected edge stored with `i < j`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    pub w: f64,
}

/// Weighted undirected graph on vertices `0..n`.
///
/// Self contributions (for instance the boundary weights that appear when an
/// edge is cut) live in `diag_extra` rather than as loop edges, so that with
/// `L = D − A` they only ever touch the diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph {
    n: usize,
    edges: Vec<Edge>,
    diag_extra: Vec<f64>,
}

impl WeightedGraph {
    /// Builds a graph from `(i, j, w)` triples. Endpoint order is normalized;
    /// loops, duplicates and non-positive weights are rejected.
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize, f64)>) -> Result<Self> {
        let mut out = Vec::new();
        for (a, b, w) in edges {
            if a >= n || b >= n {
                return Err(Error::InvalidGraph(format!(
                    "edge ({a},{b}) out of range for n = {n}"
                )));
            }
            if a == b {
                return Err(Error::InvalidGraph(format!("loop at vertex {a}")));
            }
            if !(w.is_finite() && w > 0.0) {
                return Err(Error::InvalidGraph(format!(
                    "edge ({a},{b}) has non-positive weight {w}"
                )));
            }
            let (i, j) = if a < b { (a, b) } else { (b, a) };
            out.push(Edge { i, j, w });
        }
        out.sort_by_key(|e| (e.i, e.j));
        if let Some(pair) = out
            .windows(2)
            .find(|p| (p[0].i, p[0].j) == (p[1].i, p[1].j))
        {
            return Err(Error::InvalidGraph(format!(
                "duplicate edge ({},{})",
                pair[0].i, pair[0].j
            )));
        }
        Ok(WeightedGraph {
            n,
            edges: out,
            diag_extra: vec![0.0; n],
        })
    }

    /// Unit-weight graph from an edge list.
    pub fn unweighted(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        Self::new(n, edges.into_iter().map(|(i, j)| (i, j, 1.0)))
    }

    /// Replaces the diagonal additions; entries must be finite and nonnegative.
    pub fn with_diag_extra(mut self, diag: Vec<f64>) -> Result<Self> {
        if diag.len() != self.n {
            return Err(Error::InvalidGraph(format!(
                "diag has length {}, expected {}",
                diag.len(),
                self.n
            )));
        }
        if let Some(d) = diag.iter().find(|d| !(d.is_finite() && **d >= 0.0)) {
            return Err(Error::InvalidGraph(format!("diag entry {d} is negative")));
        }
        self.diag_extra = diag;
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn diag_extra(&self) -> &[f64] {
        &self.diag_extra
    }

    pub fn has_diag_extra(&self) -> bool {
        self.diag_extra.iter().any(|&d| d != 0.0)
    }

    /// Position of edge `{a, b}` in [`edges`](Self::edges), if present.
    pub fn edge_index(&self, a: usize, b: usize) -> Option<usize> {
        let key = if a < b { (a, b) } else { (b, a) };
        self.edges.binary_search_by(|e| (e.i, e.j).cmp(&key)).ok()
    }

    /// Adjacency lists `(neighbor, weight)`, neighbors ascending.
    pub fn neighbors(&self) -> Vec<Vec<(usize, f64)>> {
        let mut adj = vec![Vec::new(); self.n];
        for e in &self.edges {
            adj[e.i].push((e.j, e.w));
            adj[e.j].push((e.i, e.w));
        }
        for list in &mut adj {
            list.sort_by_key(|&(v, _)| v);
        }
        adj
    }

    pub fn laplacian(&self) -> LaplacianMatrix {
        LaplacianMatrix::new(self.laplacian_matrix(), Provenance::Plain)
    }

    pub(crate) fn laplacian_matrix(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for (i, d) in self.diag_extra.iter().enumerate() {
            m[(i, i)] = *d;
        }
        for e in &self.edges {
            add_edge(&mut m, e.i, e.j, e.w);
        }
        m
    }

    /// Connected components, each sorted, ordered by smallest vertex.
    pub fn connected_components(&self) -> Vec<Vec<usize>> {
        components_of(self.n, |_| true, self.edges.iter().map(|e| (e.i, e.j)))
    }

    pub fn is_connected(&self) -> bool {
        self.n > 0 && self.connected_components().len() == 1
    }

    /// First Betti number `|E| − |V| + 1` of a connected graph.
    pub fn betti_1(&self) -> Result<usize> {
        let components = self.connected_components().len();
        if components != 1 {
            return Err(Error::NotConnected { components });
        }
        Ok(self.edges.len() + 1 - self.n)
    }
}

/// Which construction produced a [`LaplacianMatrix`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Provenance {
    Plain,
    EdgeFlow { sigma: f64 },
    Subdivision { sigma: f64 },
    Dirichlet,
}

/// Dense symmetric operator matrix together with where it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct LaplacianMatrix {
    pub matrix: DMatrix<f64>,
    pub provenance: Provenance,
}

impl LaplacianMatrix {
    pub fn new(matrix: DMatrix<f64>, provenance: Provenance) -> Self {
        debug_assert!(matrix.is_square());
        LaplacianMatrix { matrix, provenance }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Row-sum norm `‖M‖_∞`.
    pub fn norm_inf(&self) -> f64 {
        norm_inf(&self.matrix)
    }

    pub fn apply(&self, v: &DVector<f64>) -> DVector<f64> {
        &self.matrix * v
    }
}

pub(crate) fn norm_inf(m: &DMatrix<f64>) -> f64 {
    m.row_iter()
        .map(|r| r.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Adds the Laplacian stencil of one edge.
pub(crate) fn add_edge(m: &mut DMatrix<f64>, i: usize, j: usize, w: f64) {
    m[(i, i)] += w;
    m[(j, j)] += w;
    m[(i, j)] -= w;
    m[(j, i)] -= w;
}

/// Union-find components over the included vertices.
pub(crate) fn components_of(
    n: usize,
    include: impl Fn(usize) -> bool,
    edges: impl Iterator<Item = (usize, usize)>,
) -> Vec<Vec<usize>> {
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for (a, b) in edges {
        if !(include(a) && include(b)) {
            continue;
        }
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra != rb {
            // smaller root wins so every root is its component's minimum
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            parent[hi] = lo;
        }
    }
    let mut slot = vec![usize::MAX; n];
    let mut out: Vec<Vec<usize>> = Vec::new();
    for v in (0..n).filter(|&v| include(v)) {
        let r = find(&mut parent, v);
        if slot[r] == usize::MAX {
            slot[r] = out.len();
            out.push(Vec::new());
        }
        out[slot[r]].push(v);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn complete(n: usize) -> WeightedGraph {
        let edges = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j)));
        WeightedGraph::unweighted(n, edges).unwrap()
    }

    fn cycle(n: usize) -> WeightedGraph {
        WeightedGraph::unweighted(n, (0..n).map(|i| (i, (i + 1) % n))).unwrap()
    }

    #[test]
    fn k2_laplacian() {
        let l = complete(2).laplacian();
        assert_eq!(
            l.matrix,
            DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0])
        );
    }

    #[test]
    fn k5_laplacian_structure() {
        let l = complete(5).laplacian().matrix;
        for i in 0..5 {
            for j in 0..5 {
                assert_eq!(l[(i, j)], if i == j { 4.0 } else { -1.0 });
            }
        }
    }

    #[test]
    fn c4_row_sums_and_spectrum() {
        let l = cycle(4).laplacian().matrix;
        for r in l.row_iter() {
            assert_eq!(r.sum(), 0.0);
        }
        let mut ev: Vec<f64> = l.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        // 2 − 2cos(2πj/4) for j = 0..4
        for (got, want) in ev.iter().zip([0.0, 2.0, 2.0, 4.0]) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn diag_extra_row_sums() {
        let g = cycle(4).with_diag_extra(vec![0.5, 0.0, 1.0, 0.0]).unwrap();
        let l = g.laplacian().matrix;
        let sums: Vec<f64> = l.row_iter().map(|r| r.sum()).collect();
        assert_eq!(sums, vec![0.5, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn rejects_bad_edges() {
        assert!(WeightedGraph::new(3, [(0, 0, 1.0)]).is_err());
        assert!(WeightedGraph::new(3, [(0, 1, 0.0)]).is_err());
        assert!(WeightedGraph::new(3, [(0, 1, -1.0)]).is_err());
        assert!(WeightedGraph::new(3, [(0, 3, 1.0)]).is_err());
        assert!(WeightedGraph::new(3, [(0, 1, 1.0), (1, 0, 2.0)]).is_err());
        assert!(cycle(3).with_diag_extra(vec![0.0, -1.0, 0.0]).is_err());
    }

    #[test]
    fn edges_normalized_and_sorted() {
        let g = WeightedGraph::new(3, [(2, 1, 1.0), (1, 0, 2.0)]).unwrap();
        assert_eq!(g.edges()[0], Edge { i: 0, j: 1, w: 2.0 });
        assert_eq!(g.edges()[1], Edge { i: 1, j: 2, w: 1.0 });
        assert_eq!(g.edge_index(2, 1), Some(1));
        assert_eq!(g.edge_index(0, 2), None);
    }

    #[test]
    fn components() {
        assert_eq!(
            complete(5).connected_components(),
            vec![vec![0, 1, 2, 3, 4]]
        );
        let two = WeightedGraph::unweighted(4, [(0, 1), (2, 3)]).unwrap();
        assert_eq!(two.connected_components(), vec![vec![0, 1], vec![2, 3]]);
        let empty = WeightedGraph::unweighted(3, []).unwrap();
        assert_eq!(
            empty.connected_components(),
            vec![vec![0], vec![1], vec![2]]
        );
        let odd = WeightedGraph::unweighted(5, [(4, 1), (3, 0)]).unwrap();
        assert_eq!(
            odd.connected_components(),
            vec![vec![0, 3], vec![1, 4], vec![2]]
        );
    }

    #[test]
    fn betti_numbers() {
        let tree = WeightedGraph::unweighted(5, [(0, 1), (1, 2), (1, 3), (3, 4)]).unwrap();
        assert_eq!(tree.betti_1().unwrap(), 0);
        assert_eq!(cycle(5).betti_1().unwrap(), 1);
        assert_eq!(complete(5).betti_1().unwrap(), 6);
        let two = WeightedGraph::unweighted(4, [(0, 1), (2, 3)]).unwrap();
        assert!(matches!(
            two.betti_1(),
            Err(Error::NotConnected { components: 2 })
        ));
    }
}
