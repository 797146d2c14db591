//! Eigenpair selection, sign-change edges and nodal domains.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::graph::{components_of, Edge, WeightedGraph};
use crate::spectra::Spectrum;
use crate::{Error, Result};

/// Entries with `|ψ_i| ≤ ZERO_REL_TOL · ‖ψ‖_∞` count as zero.
pub const ZERO_REL_TOL: f64 = 1e-10;
/// Default relative size of the diagonal perturbation in [`perturb_to_nonzero`].
pub const PERTURB_REL_MAGNITUDE: f64 = 1e-8;
pub const PERTURB_SEED: u64 = 0x6e6f_6461_6c00;

/// An eigenpair `(λ_k, ψ)` together with the hypotheses it satisfies.
#[derive(Debug, Clone)]
pub struct EigenSelection {
    /// 1-based index, lowered to the first index of `λ_k`'s cluster.
    pub k: usize,
    /// The 1-based index that was asked for.
    pub requested_k: usize,
    pub lambda_k: f64,
    pub psi: DVector<f64>,
    /// `λ_k` has multiplicity one.
    pub simple: bool,
    /// `ψ` is nonzero on every vertex.
    pub nowhere_zero: bool,
    /// Size of `λ_k`'s cluster.
    pub multiplicity: usize,
}

impl EigenSelection {
    /// `requested_k` already was the first index of its cluster.
    pub fn first_index(&self) -> bool {
        self.k == self.requested_k
    }

    pub fn zero_tol(&self) -> f64 {
        zero_tol(&self.psi)
    }
}

fn zero_tol(psi: &DVector<f64>) -> f64 {
    ZERO_REL_TOL * psi.amax()
}

/// First vertex where `ψ` vanishes, if any.
pub fn find_zero_vertex(psi: &DVector<f64>) -> Option<(usize, f64)> {
    let tol = zero_tol(psi);
    psi.iter()
        .enumerate()
        .find(|(_, x)| x.abs() <= tol)
        .map(|(i, x)| (i, *x))
}

/// Picks the `k`-th (1-based) eigenpair of `spec`.
///
/// `ψ` is the `k`-th column of the spectrum's canonical basis; the index used
/// for counting is the first index of its cluster.
pub fn select_eigenpair(spec: &Spectrum, k: usize) -> Result<EigenSelection> {
    let n = spec.len();
    if k == 0 || k > n {
        return Err(Error::IndexOutOfRange { k, n });
    }
    let group = spec.group_of(k - 1);
    let psi = spec.vector(k - 1);
    Ok(EigenSelection {
        k: group.start + 1,
        requested_k: k,
        lambda_k: spec.values[k - 1],
        nowhere_zero: find_zero_vertex(&psi).is_none(),
        psi,
        simple: group.len() == 1,
        multiplicity: group.len(),
    })
}

/// Edges whose endpoints carry strictly opposite signs.
pub fn sign_change_edges(g: &WeightedGraph, psi: &DVector<f64>) -> Result<Vec<Edge>> {
    if let Some((vertex, value)) = find_zero_vertex(psi) {
        return Err(Error::ZeroVertex { vertex, value });
    }
    Ok(g.edges()
        .iter()
        .filter(|e| psi[e.i] * psi[e.j] < 0.0)
        .copied()
        .collect())
}

#[derive(Debug, Clone)]
pub struct NodalDecomposition {
    pub sign_change_edges: Vec<Edge>,
    /// Connected components of `(V, E ∖ E_±)`.
    pub strong_domains: Vec<Vec<usize>>,
    /// Components of the edges with `ψ_i ψ_j ≥ 0`.
    pub weak_domains: Vec<Vec<usize>>,
    pub nu: usize,
    /// `k − ν` with `k` the first index of `λ_k`'s cluster.
    pub deficiency: i64,
}

pub fn nodal_decomposition(g: &WeightedGraph, sel: &EigenSelection) -> Result<NodalDecomposition> {
    let sign_change = sign_change_edges(g, &sel.psi)?;
    let psi = &sel.psi;
    let strong_domains = components_of(
        g.n(),
        |_| true,
        g.edges()
            .iter()
            .filter(|e| psi[e.i] * psi[e.j] > 0.0)
            .map(|e| (e.i, e.j)),
    );
    let weak_domains = weak_domains(g, psi);
    let nu = strong_domains.len();
    Ok(NodalDecomposition {
        sign_change_edges: sign_change,
        strong_domains,
        weak_domains,
        nu,
        deficiency: sel.k as i64 - nu as i64,
    })
}

fn snapped(psi: &DVector<f64>) -> Vec<f64> {
    let tol = zero_tol(psi);
    psi.iter()
        .map(|&x| if x.abs() <= tol { 0.0 } else { x })
        .collect()
}

/// Components over edges with `ψ_i ψ_j ≥ 0`, near-zero entries snapped to 0.
pub fn weak_domains(g: &WeightedGraph, psi: &DVector<f64>) -> Vec<Vec<usize>> {
    let s = snapped(psi);
    components_of(
        g.n(),
        |_| true,
        g.edges()
            .iter()
            .filter(|e| s[e.i] * s[e.j] >= 0.0)
            .map(|e| (e.i, e.j)),
    )
}

/// Strong domains on the nonzero vertices only; zero vertices belong to none.
///
/// Used where a count is wanted even though `ψ` vanishes somewhere.
pub fn strong_domains_allowing_zeros(g: &WeightedGraph, psi: &DVector<f64>) -> Vec<Vec<usize>> {
    let s = snapped(psi);
    components_of(
        g.n(),
        |v| s[v] != 0.0,
        g.edges()
            .iter()
            .filter(|e| s[e.i] * s[e.j] > 0.0)
            .map(|e| (e.i, e.j)),
    )
}

/// Outcome of the bounds `k − β_1 ≤ ν ≤ k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundsReport {
    pub betti_1: usize,
    pub upper_ok: bool,
    /// `None` when `λ_k` is not simple or `ψ` has a zero.
    pub lower_ok: Option<bool>,
}

impl BoundsReport {
    pub fn all_ok(&self) -> bool {
        self.upper_ok && self.lower_ok.unwrap_or(true)
    }
}

pub fn courant_and_betti_check(
    g: &WeightedGraph,
    sel: &EigenSelection,
    nd: &NodalDecomposition,
) -> Result<BoundsReport> {
    let betti_1 = g.betti_1()?;
    let upper_ok = nd.nu <= sel.k;
    let lower_ok = (sel.simple && sel.nowhere_zero).then(|| nd.nu + betti_1 >= sel.k);
    Ok(BoundsReport {
        betti_1,
        upper_ok,
        lower_ok,
    })
}

/// A graph with a small random diagonal added.
#[derive(Debug, Clone)]
pub struct Perturbed {
    pub graph: WeightedGraph,
    pub magnitude: f64,
    pub seed: u64,
}

/// Adds i.i.d. uniform `[0, 2m)` entries to the diagonal.
///
/// This is a uniform `(−m, m)` perturbation shifted by `m·I`, which keeps
/// the diagonal nonnegative and changes no eigenvector. `magnitude` defaults
/// to `1e-8 · ‖L‖_∞`.
pub fn perturb_to_nonzero(
    g: &WeightedGraph,
    magnitude: Option<f64>,
    seed: u64,
) -> Result<Perturbed> {
    let magnitude = magnitude.unwrap_or_else(|| PERTURB_REL_MAGNITUDE * g.laplacian().norm_inf());
    if !(magnitude.is_finite() && magnitude > 0.0) {
        return Err(Error::InvalidGraph(format!(
            "perturbation magnitude {magnitude} must be positive"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let diag = g
        .diag_extra()
        .iter()
        .map(|d| d + rng.gen_range(0.0..2.0 * magnitude))
        .collect();
    Ok(Perturbed {
        graph: g.clone().with_diag_extra(diag)?,
        magnitude,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::FamilySpec;
    use crate::spectra::eigendecompose;
    use proptest::prelude::*;

    /// Independent count: depth-first search over a dense adjacency matrix.
    fn flood_fill_count(g: &WeightedGraph, psi: &DVector<f64>) -> usize {
        let n = g.n();
        let mut adj = vec![vec![false; n]; n];
        for e in g.edges() {
            adj[e.i][e.j] = true;
            adj[e.j][e.i] = true;
        }
        let mut seen = vec![false; n];
        let mut count = 0;
        for s in 0..n {
            if seen[s] {
                continue;
            }
            count += 1;
            let mut stack = vec![s];
            seen[s] = true;
            while let Some(v) = stack.pop() {
                for u in 0..n {
                    if adj[v][u] && !seen[u] && (psi[u] > 0.0) == (psi[v] > 0.0) {
                        seen[u] = true;
                        stack.push(u);
                    }
                }
            }
        }
        count
    }

    fn select(spec: FamilySpec, k: usize) -> (WeightedGraph, EigenSelection) {
        let g = spec.generate().unwrap();
        let s = eigendecompose(&g.laplacian()).unwrap();
        let sel = select_eigenpair(&s, k).unwrap();
        (g, sel)
    }

    #[test]
    fn k5_first_index_normalized() {
        let (_, sel) = select(FamilySpec::Complete(5), 3);
        assert_eq!(sel.k, 2);
        assert_eq!(sel.requested_k, 3);
        assert!(!sel.first_index());
        assert!((sel.lambda_k - 5.0).abs() < 1e-12);
        assert!(!sel.simple);
    }

    #[test]
    fn c5_second_not_simple() {
        let (g, sel) = select(FamilySpec::Cycle(5), 2);
        assert!((sel.lambda_k - 1.381966011250105).abs() < 1e-9);
        assert!(!sel.simple);
        assert_eq!(sign_change_edges(&g, &sel.psi).unwrap().len(), 2);
    }

    #[test]
    fn k2_pair() {
        let (g, sel) = select(FamilySpec::Complete(2), 2);
        assert!((sel.lambda_k - 2.0).abs() < 1e-12);
        assert!(sel.simple && sel.nowhere_zero);
        assert!((sel.psi[0] + sel.psi[1]).abs() < 1e-12);
        let nd = nodal_decomposition(&g, &sel).unwrap();
        assert_eq!((nd.nu, nd.deficiency), (2, 0));
        assert_eq!(nd.sign_change_edges.len(), 1);
    }

    #[test]
    fn out_of_range_index() {
        let g = FamilySpec::Complete(3).generate().unwrap();
        let s = eigendecompose(&g.laplacian()).unwrap();
        assert!(matches!(
            select_eigenpair(&s, 0),
            Err(Error::IndexOutOfRange { .. })
        ));
        assert!(matches!(
            select_eigenpair(&s, 4),
            Err(Error::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn k5_two_three_split() {
        let g = FamilySpec::Complete(5).generate().unwrap();
        let psi = DVector::from_vec(vec![3.0, 3.0, -2.0, -2.0, -2.0]);
        assert_eq!(sign_change_edges(&g, &psi).unwrap().len(), 6);
    }

    #[test]
    fn zero_vertex_rejected() {
        let g = FamilySpec::Interval(3).generate().unwrap();
        let psi = DVector::from_vec(vec![1.0, 0.0, -1.0]);
        assert!(matches!(
            sign_change_edges(&g, &psi),
            Err(Error::ZeroVertex { vertex: 1, .. })
        ));
        // the zero merges both sides into one weak domain
        assert_eq!(weak_domains(&g, &psi).len(), 1);
        assert_eq!(strong_domains_allowing_zeros(&g, &psi).len(), 2);
    }

    #[test]
    fn golden_counts() {
        let (g, sel) = select(FamilySpec::Petersen { n: 7, m: 3 }, 7);
        assert_eq!(nodal_decomposition(&g, &sel).unwrap().nu, 3);
        let (g, sel) = select(FamilySpec::Grid { n: 7, m: 5 }, 5);
        assert!(sel.simple);
        assert_eq!(nodal_decomposition(&g, &sel).unwrap().nu, 3);
    }

    #[test]
    fn bounds_examples() {
        let (g, sel) = select(FamilySpec::Cycle(5), 2);
        let nd = nodal_decomposition(&g, &sel).unwrap();
        let r = courant_and_betti_check(&g, &sel, &nd).unwrap();
        assert_eq!(r.betti_1, 1);
        assert!(r.upper_ok && r.lower_ok.is_none());
        for k in [1, 3, 5, 7] {
            let (g, sel) = select(FamilySpec::Interval(7), k);
            let nd = nodal_decomposition(&g, &sel).unwrap();
            assert_eq!(nd.nu, k);
            assert_eq!(
                courant_and_betti_check(&g, &sel, &nd).unwrap().lower_ok,
                Some(true)
            );
        }
    }

    #[test]
    fn perturbation_clears_interval_zeros() {
        let g = FamilySpec::Interval(7).generate().unwrap();
        let s = eigendecompose(&g.laplacian()).unwrap();
        assert!(!select_eigenpair(&s, 2).unwrap().nowhere_zero);
        let p =
            perturb_to_nonzero(&g, Some(1e-4 * g.laplacian().norm_inf()), PERTURB_SEED).unwrap();
        assert!(p
            .graph
            .diag_extra()
            .iter()
            .all(|&d| (0.0..8e-4).contains(&d)));
        let s = eigendecompose(&p.graph.laplacian()).unwrap();
        for k in [2, 4, 6] {
            let sel = select_eigenpair(&s, k).unwrap();
            assert!(sel.nowhere_zero && sel.simple);
            assert_eq!(nodal_decomposition(&p.graph, &sel).unwrap().nu, k);
        }
        // deterministic in the seed
        let again =
            perturb_to_nonzero(&g, Some(1e-4 * g.laplacian().norm_inf()), PERTURB_SEED).unwrap();
        assert_eq!(p.graph, again.graph);
    }

    proptest! {
        #[test]
        fn domains_agree_with_flood_fill(
            n in 2usize..12,
            mask in proptest::collection::vec(0.0f64..1.0, 66),
            signs in proptest::collection::vec(prop_oneof![-2.0f64..-0.1, 0.1f64..2.0], 12),
        ) {
            let mut edges = Vec::new();
            let mut t = 0;
            for i in 0..n {
                for j in i + 1..n {
                    if mask[t] < 0.4 {
                        edges.push((i, j));
                    }
                    t += 1;
                }
            }
            let g = WeightedGraph::unweighted(n, edges).unwrap();
            let psi = DVector::from_iterator(n, signs.iter().take(n).copied());
            let sel = EigenSelection {
                k: n, requested_k: n, lambda_k: 0.0, psi: psi.clone(),
                simple: true, nowhere_zero: true, multiplicity: 1,
            };
            let nd = nodal_decomposition(&g, &sel).unwrap();
            prop_assert_eq!(nd.nu, flood_fill_count(&g, &psi));
            prop_assert_eq!(&nd.weak_domains, &nd.strong_domains);
            let total: usize = nd.strong_domains.iter().map(Vec::len).sum();
            prop_assert_eq!(total, n);
            for d in &nd.strong_domains {
                prop_assert!(d.iter().all(|&v| (psi[v] > 0.0) == (psi[d[0]] > 0.0)));
            }
            for e in &nd.sign_change_edges {
                prop_assert!(psi[e.i] * psi[e.j] < 0.0);
            }
        }
    }
}
