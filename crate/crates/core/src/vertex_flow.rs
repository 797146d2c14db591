//! The vertex flow on the ψ-subdivision graph.
//!
//! Every sign-change edge `(i, j)` gets a ghost vertex `0_ij` placed where
//! the linear interpolant of `ψ` vanishes. As `σ` grows the original edge
//! fades, the two half-edges take over, and a diagonal `σ` on the ghosts pins
//! them to zero. The limit is the Dirichlet problem with the ghosts as
//! boundary, whose spectrum is `spec(L_1)` of the edge flow.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dirichlet::{dirichlet_problem, dirichlet_spectrum, DirichletProblem};
use crate::edge_flow::{
    build_perturbation, check_hypotheses, simple_eigenpair, DerivativeCheck, FD_STEP,
};
use crate::graph::{add_edge, LaplacianMatrix, Provenance, WeightedGraph};
use crate::nodal::{sign_change_edges, EigenSelection};
use crate::spectra::{
    eigendecompose, group_tol, log_grid_with_zero, track_branches, BranchOrigin, FlowResult,
    TrackOptions,
};
use crate::Result;

/// One ghost vertex on sign-change edge `(i, j)`, `i < j`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ghost {
    pub i: usize,
    pub j: usize,
    pub w: f64,
    pub q_ij: f64,
    pub q_ji: f64,
}

impl Ghost {
    /// `(a_ij, a_ji) = (1/(1+q_ij), 1/(1+q_ji))`; they sum to one.
    pub fn extension_coefficients(&self) -> (f64, f64) {
        (1.0 / (1.0 + self.q_ij), 1.0 / (1.0 + self.q_ji))
    }
}

#[derive(Debug, Clone)]
pub struct SubdivisionGraph {
    pub base: WeightedGraph,
    /// Ghost `g` is vertex `base.n() + g`; ordered by `(i, j)`.
    pub ghosts: Vec<Ghost>,
    /// Per base edge: whether it is a sign-change edge.
    sign_change: Vec<bool>,
}

pub fn subdivide(g: &WeightedGraph, sel: &EigenSelection) -> Result<SubdivisionGraph> {
    let psi = &sel.psi;
    // edges come sorted by (i, j), so ghosts do too
    let ghosts: Vec<Ghost> = sign_change_edges(g, psi)?
        .into_iter()
        .map(|e| Ghost {
            i: e.i,
            j: e.j,
            w: e.w,
            q_ij: -psi[e.i] / psi[e.j],
            q_ji: -psi[e.j] / psi[e.i],
        })
        .collect();
    let sign_change = g
        .edges()
        .iter()
        .map(|e| psi[e.i] * psi[e.j] < 0.0)
        .collect();
    Ok(SubdivisionGraph {
        base: g.clone(),
        ghosts,
        sign_change,
    })
}

impl SubdivisionGraph {
    pub fn n_base(&self) -> usize {
        self.base.n()
    }

    pub fn n_ghosts(&self) -> usize {
        self.ghosts.len()
    }

    pub fn n_total(&self) -> usize {
        self.base.n() + self.ghosts.len()
    }

    pub fn ghost_vertex(&self, i: usize, j: usize) -> Option<usize> {
        let key = if i < j { (i, j) } else { (j, i) };
        self.ghosts
            .binary_search_by(|g| (g.i, g.j).cmp(&key))
            .ok()
            .map(|g| self.base.n() + g)
    }

    /// The weighted graph `G_{ψ,σ}` (zero-weight edges omitted).
    pub fn graph_at(&self, sigma: f64) -> WeightedGraph {
        let n = self.n_base();
        let mut edges = Vec::new();
        for (e, &cut) in self.base.edges().iter().zip(&self.sign_change) {
            edges.push((e.i, e.j, if cut { e.w / (1.0 + sigma) } else { e.w }));
        }
        let t = sigma / (1.0 + sigma);
        if t > 0.0 {
            for (k, g) in self.ghosts.iter().enumerate() {
                edges.push((g.i, n + k, t * g.w * (1.0 + g.q_ji)));
                edges.push((n + k, g.j, t * g.w * (1.0 + g.q_ij)));
            }
        }
        self.padded(edges)
    }

    /// The `σ = ∞` host: sign-change edges gone, half-edges at full weight.
    pub fn limit_graph(&self) -> WeightedGraph {
        let n = self.n_base();
        let mut edges: Vec<(usize, usize, f64)> = self
            .base
            .edges()
            .iter()
            .zip(&self.sign_change)
            .filter(|(_, &cut)| !cut)
            .map(|(e, _)| (e.i, e.j, e.w))
            .collect();
        for (k, g) in self.ghosts.iter().enumerate() {
            edges.push((g.i, n + k, g.w * (1.0 + g.q_ji)));
            edges.push((n + k, g.j, g.w * (1.0 + g.q_ij)));
        }
        self.padded(edges)
    }

    fn padded(&self, edges: Vec<(usize, usize, f64)>) -> WeightedGraph {
        let mut diag = self.base.diag_extra().to_vec();
        diag.resize(self.n_total(), 0.0);
        WeightedGraph::new(self.n_total(), edges)
            .and_then(|g| g.with_diag_extra(diag))
            .expect("subdivision weights are positive")
    }

    /// `L_{ψ,σ}`
    pub fn laplacian_at(&self, sigma: f64) -> LaplacianMatrix {
        let n = self.n_base();
        let mut m = DMatrix::zeros(self.n_total(), self.n_total());
        for (i, d) in self.base.diag_extra().iter().enumerate() {
            m[(i, i)] = *d;
        }
        for (e, &cut) in self.base.edges().iter().zip(&self.sign_change) {
            add_edge(
                &mut m,
                e.i,
                e.j,
                if cut { e.w / (1.0 + sigma) } else { e.w },
            );
        }
        let t = sigma / (1.0 + sigma);
        for (k, g) in self.ghosts.iter().enumerate() {
            add_edge(&mut m, g.i, n + k, t * g.w * (1.0 + g.q_ji));
            add_edge(&mut m, n + k, g.j, t * g.w * (1.0 + g.q_ij));
        }
        LaplacianMatrix::new(m, Provenance::Subdivision { sigma })
    }

    /// `B_σ = L_{ψ,σ} + σ·1_{ghosts}`
    pub fn bilinear_matrix(&self, sigma: f64) -> LaplacianMatrix {
        let mut b = self.laplacian_at(sigma);
        for v in self.n_base()..self.n_total() {
            b.matrix[(v, v)] += sigma;
        }
        b
    }

    /// `ũ`: `u` on base vertices, `a_ij u_i + a_ji u_j` on ghost `0_ij`.
    pub fn extend(&self, u: &DVector<f64>) -> DVector<f64> {
        let n = self.n_base();
        let mut out = DVector::zeros(self.n_total());
        out.rows_mut(0, n).copy_from(u);
        for (k, g) in self.ghosts.iter().enumerate() {
            let (a_ij, a_ji) = g.extension_coefficients();
            out[n + k] = a_ij * u[g.i] + a_ji * u[g.j];
        }
        out
    }

    /// Squared norm of `u` on the ghosts.
    pub fn ghost_mass(&self, u: &DVector<f64>) -> f64 {
        u.rows(self.n_base(), self.n_ghosts()).norm_squared()
    }

    /// `⟨u, L'_{ψ,σ} u⟩` in the ghost-centered form.
    pub fn laplacian_derivative_form(&self, sigma: f64, u: &DVector<f64>) -> f64 {
        let n = self.n_base();
        let s = 1.0 / ((1.0 + sigma) * (1.0 + sigma));
        self.ghosts
            .iter()
            .enumerate()
            .map(|(k, g)| {
                let u0 = u[n + k];
                let t = u0 + g.q_ji * u0 - g.q_ji * u[g.i] - u[g.j];
                g.w * s * g.q_ij * t * t
            })
            .sum()
    }

    /// The `σ = ∞` Dirichlet problem: base vertices interior, ghosts boundary.
    pub fn limit_problem(&self) -> Result<DirichletProblem> {
        let interior: Vec<usize> = (0..self.n_base()).collect();
        dirichlet_problem(&self.limit_graph(), &interior)
    }
}

#[derive(Debug, Clone)]
pub struct VertexFlowOptions {
    pub sigma_max: f64,
    /// Log-spaced points on `[1e-3, sigma_max]`; `σ = 0` is prepended.
    pub steps: usize,
    pub sigma_min: f64,
    pub track: TrackOptions,
}

impl Default for VertexFlowOptions {
    fn default() -> Self {
        VertexFlowOptions {
            sigma_max: 1e4,
            steps: 200,
            sigma_min: 1e-3,
            track: TrackOptions {
                monotone: true,
                ..TrackOptions::default()
            },
        }
    }
}

/// `B_{σ_max}` against the exact Dirichlet limit.
#[derive(Debug, Clone)]
pub struct LimitCheck {
    /// Dirichlet eigenvalues of the limit problem, `|S|` of them.
    pub dirichlet: Vec<f64>,
    /// Lowest `|S|` eigenvalues of `B_{σ_max}`.
    pub bilinear: Vec<f64>,
    pub max_deviation: f64,
    /// Gap from `λ_k` to the next larger distinct Dirichlet eigenvalue.
    pub lambda_gap: Option<f64>,
    /// `max(1e-6, gap / 100)`
    pub conv_tol: f64,
    pub within_conv_tol: bool,
    /// Dirichlet eigenvalues equal to `λ_k`.
    pub multiplicity: usize,
    pub d_components: usize,
}

pub fn limit_check(sg: &SubdivisionGraph, lambda_k: f64, sigma_max: f64) -> Result<LimitCheck> {
    let dp = sg.limit_problem()?;
    let ds = dirichlet_spectrum(&dp)?;
    let dirichlet = ds.spectrum.values.clone();
    let size = dirichlet.len();
    let b = eigendecompose(&sg.bilinear_matrix(sigma_max))?;
    let bilinear = b.values[..size].to_vec();
    let max_deviation = dirichlet
        .iter()
        .zip(&bilinear)
        .map(|(d, v)| (d - v).abs())
        .fold(0.0, f64::max);
    let tol = group_tol(lambda_k);
    let lambda_gap = dirichlet
        .iter()
        .find(|&&d| d > lambda_k + tol)
        .map(|d| d - lambda_k);
    let conv_tol = lambda_gap.map_or(1e-6, |g| (g / 100.0).max(1e-6));
    Ok(LimitCheck {
        multiplicity: dirichlet
            .iter()
            .filter(|&&d| (d - lambda_k).abs() <= tol)
            .count(),
        d_components: ds.components.len(),
        within_conv_tol: max_deviation <= conv_tol,
        dirichlet,
        bilinear,
        max_deviation,
        lambda_gap,
        conv_tol,
    })
}

#[derive(Debug, Clone)]
pub struct VertexFlowRun {
    /// `converged_count` counts branches whose σ_max value sits in
    /// [`convergence_window`](Self::convergence_window) around `λ_k`.
    pub flow: FlowResult,
    pub limit: LimitCheck,
    /// Half the distance from `λ_k` to the nearest other Dirichlet value.
    pub convergence_window: f64,
    pub n_ghosts: usize,
    pub simple: bool,
    pub psi_branch: usize,
}

impl VertexFlowRun {
    /// Converging branches (other than `ψ`'s) that start at a ghost.
    pub fn ghost_origin_converged(&self) -> usize {
        let tol = self.convergence_window;
        (0..self.flow.branch_count())
            .filter(|&b| b != self.psi_branch)
            .filter(|&b| (self.flow.final_values()[b] - self.flow.reference_value).abs() <= tol)
            .filter(|&b| self.flow.origins.get(b) == Some(&BranchOrigin::Ghost))
            .count()
    }
}

pub fn run_vertex_flow(
    g: &WeightedGraph,
    sel: &EigenSelection,
    opts: &VertexFlowOptions,
) -> Result<VertexFlowRun> {
    check_hypotheses(sel, false)?;
    let sg = subdivide(g, sel)?;
    let grid = log_grid_with_zero(opts.sigma_min, opts.sigma_max, opts.steps.max(2));
    let mut flow = track_branches(|s| sg.bilinear_matrix(s), &grid, sel.lambda_k, &opts.track)?;
    let limit = limit_check(&sg, sel.lambda_k, opts.sigma_max)?;

    let tol = group_tol(sel.lambda_k);
    let convergence_window = 0.5
        * limit
            .dirichlet
            .iter()
            .map(|d| (d - sel.lambda_k).abs())
            .filter(|&d| d > tol)
            .fold(sel.lambda_k.abs().max(1.0), f64::min);
    flow.converged_count = flow
        .final_values()
        .iter()
        .filter(|&&v| (v - sel.lambda_k).abs() <= convergence_window)
        .count();

    // The kernel of B_0 is spanned by the ghost indicators and the constant on
    // the base; these mix at first order in σ, so every branch leaving zero
    // counts as ghost-born.
    let has_ghosts = sg.n_ghosts() > 0;
    flow.origins = flow.values[0]
        .iter()
        .map(|&v| {
            if has_ghosts && v.abs() <= group_tol(0.0) {
                BranchOrigin::Ghost
            } else {
                BranchOrigin::Laplacian
            }
        })
        .collect();
    // ψ's branch: the σ = 0 column that equals ψ̃
    let psi_tilde = sg.extend(&sel.psi);
    let psi_branch = (0..flow.branch_count())
        .max_by(|&a, &b| {
            let s = |c: usize| flow.vectors[0].column(c).dot(&psi_tilde).abs();
            s(a).total_cmp(&s(b))
        })
        .unwrap_or(0);
    Ok(VertexFlowRun {
        flow,
        limit,
        convergence_window,
        n_ghosts: sg.n_ghosts(),
        simple: sel.simple,
        psi_branch,
    })
}

/// Largest relative gap between `B_σ(ũ, ṽ)` and
/// `⟨u, Lv⟩ + σ Σ (a_ij a_ji / w_ij) ⟨u, P_ij v⟩` over random `u, v`.
pub fn check_edge_equivalence(
    g: &WeightedGraph,
    sel: &EigenSelection,
    sigma: f64,
    trials: usize,
    seed: u64,
) -> Result<f64> {
    let sg = subdivide(g, sel)?;
    let pert = build_perturbation(g, sel)?;
    let b = sg.bilinear_matrix(sigma).matrix;
    let l = g.laplacian().matrix;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = g.n();
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let u = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
        let v = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
        worst = worst.max(equivalence_deviation(
            &sg,
            &b,
            &l,
            &pert.blocks,
            sigma,
            &u,
            &v,
        ));
    }
    Ok(worst)
}

fn equivalence_deviation(
    sg: &SubdivisionGraph,
    b: &DMatrix<f64>,
    l: &DMatrix<f64>,
    blocks: &[crate::edge_flow::EdgeBlock],
    sigma: f64,
    u: &DVector<f64>,
    v: &DVector<f64>,
) -> f64 {
    let lhs = sg.extend(u).dot(&(b * sg.extend(v)));
    let mut rhs = u.dot(&(l * v));
    for (blk, gh) in blocks.iter().zip(&sg.ghosts) {
        let (a_ij, a_ji) = gh.extension_coefficients();
        let pij = blk.w
            * (blk.q_ji * u[blk.i] * v[blk.i]
                + u[blk.i] * v[blk.j]
                + u[blk.j] * v[blk.i]
                + blk.q_ij * u[blk.j] * v[blk.j]);
        rhs += sigma * a_ij * a_ji / blk.w * pij;
    }
    (lhs - rhs).abs() / lhs.abs().max(1.0)
}

/// Finite-difference slope of eigenvalue `index` (0-based) of `B_σ` against
/// `⟨u, L'_{ψ,σ} u⟩ + ⟨u, u⟩_{ghosts}`.
pub fn derivative_identity_check(
    sg: &SubdivisionGraph,
    sigma: f64,
    index: usize,
) -> Result<DerivativeCheck> {
    let (_, u) = simple_eigenpair(&sg.bilinear_matrix(sigma).matrix, index, sigma)?;
    let (up, _) = simple_eigenpair(
        &sg.bilinear_matrix(sigma + FD_STEP).matrix,
        index,
        sigma + FD_STEP,
    )?;
    let (down, _) = simple_eigenpair(
        &sg.bilinear_matrix(sigma - FD_STEP).matrix,
        index,
        sigma - FD_STEP,
    )?;
    let fd = (up - down) / (2.0 * FD_STEP);
    let formula = sg.laplacian_derivative_form(sigma, &u) + sg.ghost_mass(&u);
    Ok(DerivativeCheck {
        finite_difference: fd,
        formula,
        relative_error: (fd - formula).abs() / formula.abs().max(1.0),
    })
}
