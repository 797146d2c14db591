//! Dirichlet problems on vertex subsets.
//!
//! For an interior set `S` the Dirichlet Laplacian is the host Laplacian with
//! the rows and columns outside `S` deleted. Degrees keep the weight of edges
//! into the boundary, so a function vanishing on `∂_V S` satisfies the host
//! eigenvalue equation on `S` exactly when it is a Dirichlet eigenvector.

use std::collections::BTreeSet;

use nalgebra::{DMatrix, DVector};

use crate::graph::{components_of, Edge, LaplacianMatrix, Provenance, WeightedGraph};
use crate::nodal::ZERO_REL_TOL;
use crate::spectra::{eigendecompose, eigendecompose_matrix, group_tol, Spectrum};
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct DirichletProblem {
    pub host: WeightedGraph,
    /// Sorted interior vertices `S`.
    pub interior: Vec<usize>,
    /// `∂_V S`: vertices outside `S` adjacent to `S`, sorted.
    pub boundary_vertices: Vec<usize>,
    /// `∂_E S`: edges joining `S` to `∂_V S`.
    pub boundary_edges: Vec<Edge>,
    /// `|S| × |S|`, row `r` belongs to `interior[r]`.
    pub matrix: LaplacianMatrix,
}

impl DirichletProblem {
    /// Restricts a host vector to `S`.
    pub fn restrict(&self, v: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(self.interior.len(), self.interior.iter().map(|&i| v[i]))
    }

    /// Extends a vector on `S` by zero to the host.
    pub fn extend_by_zero(&self, v: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.host.n());
        for (r, &i) in self.interior.iter().enumerate() {
            out[i] = v[r];
        }
        out
    }
}

pub fn dirichlet_problem(host: &WeightedGraph, interior: &[usize]) -> Result<DirichletProblem> {
    if interior.is_empty() {
        return Err(Error::EmptyInterior);
    }
    let n = host.n();
    if let Some(&v) = interior.iter().find(|&&v| v >= n) {
        return Err(Error::InvalidGraph(format!(
            "interior vertex {v} out of range 0..{n}"
        )));
    }
    let set: BTreeSet<usize> = interior.iter().copied().collect();
    let interior: Vec<usize> = set.iter().copied().collect();
    let inside = |v: usize| set.contains(&v);
    let boundary_edges: Vec<Edge> = host
        .edges()
        .iter()
        .filter(|e| inside(e.i) != inside(e.j))
        .copied()
        .collect();
    let boundary_vertices: Vec<usize> = boundary_edges
        .iter()
        .map(|e| if inside(e.i) { e.j } else { e.i })
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let full = host.laplacian_matrix();
    let matrix = DMatrix::from_fn(interior.len(), interior.len(), |r, c| {
        full[(interior[r], interior[c])]
    });
    Ok(DirichletProblem {
        host: host.clone(),
        interior,
        boundary_vertices,
        boundary_edges,
        matrix: LaplacianMatrix::new(matrix, Provenance::Dirichlet),
    })
}

/// Components of `S` joined by paths that stay inside `S`.
pub fn d_connected_components(host: &WeightedGraph, interior: &[usize]) -> Vec<Vec<usize>> {
    let set: BTreeSet<usize> = interior.iter().copied().collect();
    components_of(
        host.n(),
        |v| set.contains(&v),
        host.edges().iter().map(|e| (e.i, e.j)),
    )
}

/// First Dirichlet eigenpair of one D-connected component.
#[derive(Debug, Clone)]
pub struct ComponentGround {
    pub vertices: Vec<usize>,
    pub first_value: f64,
    /// Gap to the component's second eigenvalue exceeds the grouping tolerance.
    pub simple: bool,
    /// The first eigenvector has one strict sign on the component.
    pub signed: bool,
    /// Every later eigenvector of the component takes both signs.
    pub higher_unsigned: bool,
    /// The component's full Dirichlet spectrum.
    pub spectrum: Spectrum,
}

#[derive(Debug, Clone)]
pub struct DirichletSpectrum {
    pub spectrum: Spectrum,
    pub components: Vec<ComponentGround>,
}

pub fn dirichlet_spectrum(dp: &DirichletProblem) -> Result<DirichletSpectrum> {
    let spectrum = eigendecompose(&dp.matrix)?;
    let position = |v: usize| {
        dp.interior
            .binary_search(&v)
            .expect("component vertex is interior")
    };
    let mut components = Vec::new();
    for vertices in d_connected_components(&dp.host, &dp.interior) {
        let idx: Vec<usize> = vertices.iter().map(|&v| position(v)).collect();
        let sub = DMatrix::from_fn(idx.len(), idx.len(), |r, c| {
            dp.matrix.matrix[(idx[r], idx[c])]
        });
        let spec = eigendecompose_matrix(&sub)?;
        let first_value = spec.values[0];
        let simple = spec.len() == 1 || spec.values[1] - first_value > group_tol(first_value);
        let one_signed = |v: DVector<f64>| {
            let tol = ZERO_REL_TOL * v.amax();
            v.iter().all(|&x| x > tol) || v.iter().all(|&x| x < -tol)
        };
        let signed = one_signed(spec.vector(0));
        let higher_unsigned = (1..spec.len()).all(|c| {
            let v = spec.vector(c);
            let tol = ZERO_REL_TOL * v.amax();
            v.iter().any(|&x| x > tol) && v.iter().any(|&x| x < -tol)
        });
        components.push(ComponentGround {
            vertices,
            first_value,
            simple,
            signed,
            higher_unsigned,
            spectrum: spec,
        });
    }
    Ok(DirichletSpectrum {
        spectrum,
        components,
    })
}

/// `ψ` zeroed outside one D-connected component, with its residual.
#[derive(Debug, Clone)]
pub struct Restriction {
    /// Host-length vector.
    pub vector: DVector<f64>,
    /// `‖(L^{(D)} ψ|_C − λ ψ|_C)‖` over the interior.
    pub residual: f64,
}

pub fn restrict_eigenvector(
    dp: &DirichletProblem,
    psi: &DVector<f64>,
    component: &[usize],
    lambda: f64,
) -> Result<Restriction> {
    let mut component = component.to_vec();
    component.sort_unstable();
    if !d_connected_components(&dp.host, &dp.interior).contains(&component) {
        return Err(Error::NotAComponent);
    }
    let mut vector = DVector::zeros(dp.host.n());
    for &v in &component {
        vector[v] = psi[v];
    }
    let inner = dp.restrict(&vector);
    let residual = (dp.matrix.apply(&inner) - &inner * lambda).norm();
    Ok(Restriction { vector, residual })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::FamilySpec;
    use approx::assert_abs_diff_eq;

    fn path3() -> WeightedGraph {
        FamilySpec::Interval(3).generate().unwrap()
    }

    #[test]
    fn path_middle_vertex() {
        let dp = dirichlet_problem(&path3(), &[1]).unwrap();
        assert_eq!(dp.boundary_vertices, vec![0, 2]);
        assert_eq!(dp.boundary_edges.len(), 2);
        assert_eq!(dp.matrix.matrix, DMatrix::from_element(1, 1, 2.0));
        let ds = dirichlet_spectrum(&dp).unwrap();
        assert_abs_diff_eq!(ds.spectrum.values[0], 2.0);
    }

    #[test]
    fn full_set_is_plain_laplacian() {
        let g = FamilySpec::Cycle(5).generate().unwrap();
        let dp = dirichlet_problem(&g, &[0, 1, 2, 3, 4]).unwrap();
        assert!(dp.boundary_vertices.is_empty());
        assert_eq!(dp.matrix.matrix, g.laplacian().matrix);
        let ds = dirichlet_spectrum(&dp).unwrap();
        assert!(ds.spectrum.values[0].abs() < 1e-12);
        assert_eq!(d_connected_components(&g, &dp.interior).len(), 1);
    }

    #[test]
    fn empty_interior() {
        assert!(matches!(
            dirichlet_problem(&path3(), &[]),
            Err(Error::EmptyInterior)
        ));
    }

    #[test]
    fn k2_limit_problem() {
        // K_2 subdivided at σ = ∞: 0 -(2)- ghost -(2)- 1, ghost on the boundary
        let host = WeightedGraph::new(3, [(0, 2, 2.0), (1, 2, 2.0)]).unwrap();
        let dp = dirichlet_problem(&host, &[0]).unwrap();
        assert_eq!(dp.matrix.matrix, DMatrix::from_element(1, 1, 2.0));
        let dp = dirichlet_problem(&host, &[0, 1]).unwrap();
        let ds = dirichlet_spectrum(&dp).unwrap();
        assert_eq!(ds.components.len(), 2);
        for c in &ds.components {
            assert_abs_diff_eq!(c.first_value, 2.0, epsilon = 1e-14);
            assert!(c.simple && c.signed);
        }
        let psi = DVector::from_vec(vec![1.0, -1.0, 0.0]);
        let r = restrict_eigenvector(&dp, &psi, &[0], 2.0).unwrap();
        assert_eq!(r.vector, DVector::from_vec(vec![1.0, 0.0, 0.0]));
        assert!(r.residual < 1e-14);
        assert!(matches!(
            restrict_eigenvector(&dp, &psi, &[0, 1], 2.0),
            Err(Error::NotAComponent)
        ));
    }

    #[test]
    fn block_spectrum_is_union_of_components() {
        let g = FamilySpec::Grid { n: 4, m: 3 }.generate().unwrap();
        let s = [0, 1, 3, 4, 8, 9, 11];
        let dp = dirichlet_problem(&g, &s).unwrap();
        let ds = dirichlet_spectrum(&dp).unwrap();
        let mut union: Vec<f64> = ds
            .components
            .iter()
            .flat_map(|c| c.spectrum.values.clone())
            .collect();
        union.sort_by(f64::total_cmp);
        for (a, b) in union.iter().zip(&ds.spectrum.values) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-10);
        }
        for c in &ds.components {
            assert!(c.first_value > group_tol(0.0));
            assert!(c.simple && c.signed && c.higher_unsigned);
        }
    }
}
