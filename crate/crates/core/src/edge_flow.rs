//! The edge flow `L_σ = L + σP` on `σ ∈ [0, 1]`.
//!
//! `P` is a sum of rank-one blocks, one per sign-change edge, each with `ψ`
//! in its kernel. At `σ = 1` the sign-change edges are cut and replaced by
//! diagonal terms, so the multiplicity of `λ_k` in `L_1` is the number of
//! nodal domains, and the branches that cross `λ_k` on the way account for
//! the deficiency.

use nalgebra::{DMatrix, DVector};

use crate::graph::{LaplacianMatrix, Provenance, WeightedGraph};
use crate::nodal::{sign_change_edges, EigenSelection};
use crate::spectra::{
    eigendecompose, eigendecompose_matrix, group_tol, multiplicity_of, track_branches,
    uniform_grid, FlowResult, TrackOptions,
};
use crate::{Assumption, Error, Result};

/// `P_ij = w_ij [[q_ji, 1], [1, q_ij]]` on the `(i, j)` coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeBlock {
    pub i: usize,
    pub j: usize,
    pub w: f64,
    /// `−ψ_i / ψ_j`
    pub q_ij: f64,
    /// `−ψ_j / ψ_i`
    pub q_ji: f64,
}

#[derive(Debug, Clone)]
pub struct EdgePerturbation {
    pub blocks: Vec<EdgeBlock>,
    /// `P = Σ P_ij` as a dense matrix.
    pub matrix: DMatrix<f64>,
}

impl EdgePerturbation {
    /// `⟨u, P u⟩`
    pub fn quadratic_form(&self, u: &DVector<f64>) -> f64 {
        self.blocks
            .iter()
            .map(|b| {
                b.w * (b.q_ji * u[b.i] * u[b.i] + 2.0 * u[b.i] * u[b.j] + b.q_ij * u[b.j] * u[b.j])
            })
            .sum()
    }
}

/// Hypotheses required before running a flow.
///
/// A zero of `ψ` is always fatal. A repeated `λ_k` is fatal only when
/// `require_simple` is set; otherwise callers carry `sel.simple` as a warning.
pub fn check_hypotheses(sel: &EigenSelection, require_simple: bool) -> Result<()> {
    if !sel.nowhere_zero {
        return Err(Error::AssumptionViolated(Assumption::NowhereZero));
    }
    if require_simple && !sel.simple {
        return Err(Error::AssumptionViolated(Assumption::Simple));
    }
    Ok(())
}

pub fn build_perturbation(g: &WeightedGraph, sel: &EigenSelection) -> Result<EdgePerturbation> {
    let psi = &sel.psi;
    let n = g.n();
    let mut matrix = DMatrix::zeros(n, n);
    let blocks: Vec<EdgeBlock> = sign_change_edges(g, psi)?
        .into_iter()
        .map(|e| EdgeBlock {
            i: e.i,
            j: e.j,
            w: e.w,
            q_ij: -psi[e.i] / psi[e.j],
            q_ji: -psi[e.j] / psi[e.i],
        })
        .collect();
    for b in &blocks {
        matrix[(b.i, b.i)] += b.w * b.q_ji;
        matrix[(b.j, b.j)] += b.w * b.q_ij;
        matrix[(b.i, b.j)] += b.w;
        matrix[(b.j, b.i)] += b.w;
    }
    Ok(EdgePerturbation { blocks, matrix })
}

pub fn flow_matrix(g: &WeightedGraph, pert: &EdgePerturbation, sigma: f64) -> LaplacianMatrix {
    flow_from(&g.laplacian().matrix, pert, sigma)
}

fn flow_from(l: &DMatrix<f64>, pert: &EdgePerturbation, sigma: f64) -> LaplacianMatrix {
    LaplacianMatrix::new(l + &pert.matrix * sigma, Provenance::EdgeFlow { sigma })
}

/// The graph `G_ψ`: sign-change edges removed, their weight moved to the
/// diagonal as `(1 + q_ji) w_ij` at `i` and `(1 + q_ij) w_ij` at `j`.
pub fn psi_graph(g: &WeightedGraph, sel: &EigenSelection) -> Result<WeightedGraph> {
    let cut = sign_change_edges(g, &sel.psi)?;
    let psi = &sel.psi;
    let mut diag = g.diag_extra().to_vec();
    for e in &cut {
        diag[e.i] += (1.0 - psi[e.j] / psi[e.i]) * e.w;
        diag[e.j] += (1.0 - psi[e.i] / psi[e.j]) * e.w;
    }
    let kept = g
        .edges()
        .iter()
        .filter(|e| psi[e.i] * psi[e.j] > 0.0)
        .map(|e| (e.i, e.j, e.w));
    WeightedGraph::new(g.n(), kept)?.with_diag_extra(diag)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodalCount {
    pub nu: usize,
    pub deficiency: i64,
    /// Whether `λ_k` was simple; counts for repeated eigenvalues are reported
    /// but fall outside the counting theorem's hypotheses.
    pub simple: bool,
}

/// `ν` as the multiplicity of `λ_k` in `L_1 = L + P`, without a sweep.
pub fn nodal_count_direct(g: &WeightedGraph, sel: &EigenSelection) -> Result<NodalCount> {
    check_hypotheses(sel, false)?;
    let pert = build_perturbation(g, sel)?;
    let spec = eigendecompose(&flow_matrix(g, &pert, 1.0))?;
    let nu = multiplicity_of(&spec, sel.lambda_k);
    Ok(NodalCount {
        nu,
        deficiency: sel.k as i64 - nu as i64,
        simple: sel.simple,
    })
}

#[derive(Debug, Clone)]
pub struct EdgeFlowOptions {
    /// Uniform grid size on `[0, 1]`.
    pub steps: usize,
    pub track: TrackOptions,
}

impl Default for EdgeFlowOptions {
    fn default() -> Self {
        EdgeFlowOptions {
            steps: 200,
            track: TrackOptions {
                monotone: true,
                ..TrackOptions::default()
            },
        }
    }
}

#[derive(Debug, Clone)]
pub struct EdgeFlowRun {
    /// `converged_count` is the multiplicity of `λ_k` in `L_1`.
    pub flow: FlowResult,
    pub deficiency: i64,
    pub simple: bool,
    /// `converged_count + crossings_below == k`.
    pub identity_holds: bool,
    /// Branch that starts at `ψ`.
    pub psi_branch: usize,
    pub n_sign_change_edges: usize,
}

pub fn run_edge_flow(
    g: &WeightedGraph,
    sel: &EigenSelection,
    opts: &EdgeFlowOptions,
) -> Result<EdgeFlowRun> {
    check_hypotheses(sel, false)?;
    let pert = build_perturbation(g, sel)?;
    let l = g.laplacian().matrix;
    let grid = uniform_grid(0.0, 1.0, opts.steps.max(2));
    let mut flow = track_branches(
        |s| flow_from(&l, &pert, s),
        &grid,
        sel.lambda_k,
        &opts.track,
    )?;
    let l1 = eigendecompose(&flow_from(&l, &pert, 1.0))?;
    flow.converged_count = multiplicity_of(&l1, sel.lambda_k);
    let identity_holds = flow.converged_count + flow.crossings_below() == sel.k;
    Ok(EdgeFlowRun {
        deficiency: sel.k as i64 - flow.converged_count as i64,
        flow,
        simple: sel.simple,
        identity_holds,
        psi_branch: sel.requested_k - 1,
        n_sign_change_edges: pert.blocks.len(),
    })
}

/// Finite-difference slope of an eigenvalue against the closed form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivativeCheck {
    pub finite_difference: f64,
    pub formula: f64,
    /// `|fd − formula| / max(1, |formula|)`
    pub relative_error: f64,
}

pub const FD_STEP: f64 = 1e-5;

/// Eigenvalue number `index` (0-based) of a family, if simple at `sigma`.
pub(crate) fn simple_eigenpair(
    m: &DMatrix<f64>,
    index: usize,
    sigma: f64,
) -> Result<(f64, DVector<f64>)> {
    let spec = eigendecompose_matrix(m)?;
    if index >= spec.len() {
        return Err(Error::IndexOutOfRange {
            k: index + 1,
            n: spec.len(),
        });
    }
    let v = spec.values[index];
    let tol = group_tol(v);
    let isolated = (index == 0 || v - spec.values[index - 1] > tol)
        && (index + 1 == spec.len() || spec.values[index + 1] - v > tol);
    if !isolated {
        return Err(Error::DegenerateEigenvalue { index, sigma });
    }
    Ok((v, spec.vector(index)))
}

/// Compares `dλ/dσ` with `⟨u, P u⟩` for eigenvalue `index` (0-based) of `L_σ`.
pub fn derivative_check(
    g: &WeightedGraph,
    pert: &EdgePerturbation,
    sigma: f64,
    index: usize,
) -> Result<DerivativeCheck> {
    let l = g.laplacian().matrix;
    let at = |s: f64| flow_from(&l, pert, s).matrix;
    let (_, u) = simple_eigenpair(&at(sigma), index, sigma)?;
    let (up, _) = simple_eigenpair(&at(sigma + FD_STEP), index, sigma + FD_STEP)?;
    let (down, _) = simple_eigenpair(&at(sigma - FD_STEP), index, sigma - FD_STEP)?;
    let fd = (up - down) / (2.0 * FD_STEP);
    let formula = pert.quadratic_form(&u);
    Ok(DerivativeCheck {
        finite_difference: fd,
        formula,
        relative_error: (fd - formula).abs() / formula.abs().max(1.0),
    })
}
