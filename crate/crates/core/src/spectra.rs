//! Symmetric eigendecomposition and eigenvalue-branch tracking.
//!
//! [`eigendecompose`] returns eigenpairs in ascending order with a
//! deterministic basis: inside every cluster of numerically equal eigenvalues
//! the solver's arbitrary basis is replaced by the Gram–Schmidt basis obtained
//! by projecting the unit vectors `e_0, e_1, …` onto the eigenspace, and every
//! vector is signed so its first non-negligible entry is positive. This makes
//! "the k-th eigenvector" of a graph with repeated eigenvalues reproducible
//! across solvers and platforms.
//!
//! [`track_branches`] follows eigenvalue curves of a family `σ ↦ M(σ)` by
//! eigenvector overlap rather than by eigenvalue order, so true crossings are
//! reported as crossings.

use std::ops::Range;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;

use crate::graph::LaplacianMatrix;
use crate::matching::max_weight_assignment;
use crate::{Error, Result};

/// Relative width of an eigenvalue cluster.
pub const GROUP_REL_TOL: f64 = 1e-8;
/// Entries below this magnitude are ignored by the sign convention.
pub const SIGN_EPS: f64 = 1e-12;
/// Minimum residual norm for a projected unit vector to enter a cluster basis.
const CANONICAL_PIVOT_MIN: f64 = 1e-3;

/// Clustering tolerance `1e-8 · max(1, |λ|)`.
pub fn group_tol(value: f64) -> f64 {
    GROUP_REL_TOL * value.abs().max(1.0)
}

/// Ascending eigenpairs of a symmetric matrix.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors, column `i` belongs to `values[i]`.
    pub vectors: DMatrix<f64>,
    /// Index ranges of numerically equal eigenvalues, covering `0..len`.
    pub groups: Vec<Range<usize>>,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn vector(&self, i: usize) -> DVector<f64> {
        self.vectors.column(i).into_owned()
    }

    /// The cluster containing index `i` (0-based).
    pub fn group_of(&self, i: usize) -> Range<usize> {
        self.groups
            .iter()
            .find(|g| g.contains(&i))
            .cloned()
            .unwrap_or(i..i + 1)
    }

    pub fn is_simple(&self, i: usize) -> bool {
        self.group_of(i).len() == 1
    }
}

pub fn eigendecompose(m: &LaplacianMatrix) -> Result<Spectrum> {
    eigendecompose_matrix(&m.matrix)
}

pub fn eigendecompose_matrix(m: &DMatrix<f64>) -> Result<Spectrum> {
    let n = m.nrows();
    if n == 0 {
        return Ok(Spectrum {
            values: Vec::new(),
            vectors: DMatrix::zeros(0, 0),
            groups: Vec::new(),
        });
    }
    let eig = SymmetricEigen::try_new(m.clone(), f64::EPSILON, 200 * n.max(10))
        .ok_or(Error::EigFailure { dim: n })?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    let groups = group_values(&values);
    for g in groups.iter().filter(|g| g.len() > 1) {
        canonicalize_block(&mut vectors, g.clone());
    }
    for c in 0..n {
        fix_sign(&mut vectors, c);
    }
    Ok(Spectrum {
        values,
        vectors,
        groups,
    })
}

/// Consecutive ascending values closer than [`group_tol`] share a group.
fn group_values(values: &[f64]) -> Vec<Range<usize>> {
    let mut groups = Vec::new();
    let mut start = 0;
    for i in 1..=values.len() {
        if i == values.len() || values[i] - values[i - 1] > group_tol(values[i]) {
            groups.push(start..i);
            start = i;
        }
    }
    groups
}

fn canonicalize_block(vectors: &mut DMatrix<f64>, cols: Range<usize>) {
    let n = vectors.nrows();
    let m = cols.len();
    let w = vectors.columns(cols.start, m).into_owned();
    let mut basis: Vec<DVector<f64>> = Vec::with_capacity(m);
    for i in 0..n {
        if basis.len() == m {
            break;
        }
        // projection of e_i onto span(w)
        let mut x: DVector<f64> = &w * w.row(i).transpose();
        for b in &basis {
            let d = b.dot(&x);
            x.axpy(-d, b, 1.0);
        }
        let norm = x.norm();
        if norm > CANONICAL_PIVOT_MIN {
            basis.push(x / norm);
        }
    }
    // unreachable for sane input; keep the solver's remaining directions
    for k in 0..m {
        if basis.len() == m {
            break;
        }
        let mut x: DVector<f64> = w.column(k).into_owned();
        for b in &basis {
            let d = b.dot(&x);
            x.axpy(-d, b, 1.0);
        }
        let norm = x.norm();
        if norm > CANONICAL_PIVOT_MIN {
            basis.push(x / norm);
        }
    }
    for (k, b) in basis.iter().enumerate() {
        vectors.set_column(cols.start + k, b);
    }
}

fn fix_sign(vectors: &mut DMatrix<f64>, c: usize) {
    let first = vectors
        .column(c)
        .iter()
        .copied()
        .find(|x| x.abs() > SIGN_EPS);
    if matches!(first, Some(x) if x < 0.0) {
        vectors.column_mut(c).neg_mut();
    }
}

/// Number of eigenvalues within [`group_tol`] of `value`.
pub fn multiplicity_of(spec: &Spectrum, value: f64) -> usize {
    let tol = group_tol(value);
    spec.values
        .iter()
        .filter(|&&v| (v - value).abs() <= tol)
        .count()
}

/// Knobs for [`track_branches`].
#[derive(Debug, Clone)]
pub struct TrackOptions {
    /// Smallest acceptable matched overlap between consecutive samples.
    pub overlap_min: f64,
    /// Refinement stops at this fraction of the grid span.
    pub min_step_frac: f64,
    /// Crossings are bracketed to this width in σ.
    pub bracket_width: f64,
    /// Crossing threshold relative to `max(1, |reference|)`.
    pub cross_rel_tol: f64,
    /// The family is non-decreasing in σ: a matched branch that drops by more
    /// than `monotone_rel_tol · max(1, |λ|)` is a mismatch and gets refined.
    pub monotone: bool,
    pub monotone_rel_tol: f64,
}

impl Default for TrackOptions {
    fn default() -> Self {
        TrackOptions {
            overlap_min: 0.5,
            min_step_frac: 1e-6,
            bracket_width: 1e-6,
            cross_rel_tol: 1e-7,
            monotone: false,
            monotone_rel_tol: 1e-10,
        }
    }
}

/// A branch passing the reference value between two samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Crossing {
    pub branch: usize,
    pub sigma_lo: f64,
    pub sigma_hi: f64,
    /// `true` when the branch goes from below to above the reference.
    pub upward: bool,
}

impl Crossing {
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.sigma_lo + self.sigma_hi)
    }
}

/// Where a vertex-flow branch starts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BranchOrigin {
    /// From an eigenvalue of the original Laplacian.
    Laplacian,
    /// From the zero eigenvalue of a ghost-vertex indicator.
    Ghost,
}

impl BranchOrigin {
    pub fn as_str(self) -> &'static str {
        match self {
            BranchOrigin::Laplacian => "laplacian",
            BranchOrigin::Ghost => "ghost",
        }
    }
}

/// Tracked eigenvalue branches of a one-parameter family.
#[derive(Debug, Clone)]
pub struct FlowResult {
    /// Sample points, strictly increasing; includes refinement points.
    pub sigmas: Vec<f64>,
    /// `values[t][b]` is branch `b` at `sigmas[t]`.
    pub values: Vec<Vec<f64>>,
    /// Column `b` of `vectors[t]` is branch `b`'s unit eigenvector.
    pub vectors: Vec<DMatrix<f64>>,
    pub reference_value: f64,
    pub crossings: Vec<Crossing>,
    /// Branches ending at the reference value.
    pub converged_count: usize,
    /// Refinement hit its minimum step with the step still failing its checks.
    pub refinement_exhausted: bool,
    /// Steps matched through a degenerate cluster on either side.
    pub block_matches: usize,
    /// Smallest matched overlap over all accepted steps.
    pub min_overlap: f64,
    /// Per-branch origin; empty unless the flow defines one.
    pub origins: Vec<BranchOrigin>,
}

impl FlowResult {
    pub fn branch_count(&self) -> usize {
        self.values.first().map_or(0, Vec::len)
    }

    pub fn branch_values(&self, b: usize) -> Vec<f64> {
        self.values.iter().map(|row| row[b]).collect()
    }

    pub fn initial_values(&self) -> &[f64] {
        &self.values[0]
    }

    pub fn final_values(&self) -> &[f64] {
        self.values.last().expect("flow has samples")
    }

    pub fn cross_tol(&self) -> f64 {
        TrackOptions::default().cross_rel_tol * self.reference_value.abs().max(1.0)
    }

    /// Upward crossings of branches that start below the reference.
    pub fn crossings_below(&self) -> usize {
        let tol = self.cross_tol();
        self.crossings
            .iter()
            .filter(|c| c.upward && self.values[0][c.branch] < self.reference_value - tol)
            .count()
    }

    /// Largest decrease of any branch between consecutive samples, measured
    /// relative to `max(1, |λ|)`.
    pub fn max_decrease(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for w in self.values.windows(2) {
            for (a, b) in w[0].iter().zip(&w[1]) {
                worst = worst.max((a - b) / a.abs().max(1.0));
            }
        }
        worst
    }
}

struct State {
    sigma: f64,
    values: Vec<f64>,
    vectors: DMatrix<f64>,
    /// Cluster id of each branch at this sample.
    group: Vec<usize>,
    group_size: Vec<usize>,
}

impl State {
    fn from_spectrum(sigma: f64, spec: &Spectrum) -> State {
        let mut group = vec![0; spec.len()];
        let mut group_size = Vec::with_capacity(spec.groups.len());
        for (gid, g) in spec.groups.iter().enumerate() {
            for i in g.clone() {
                group[i] = gid;
            }
            group_size.push(g.len());
        }
        State {
            sigma,
            values: spec.values.clone(),
            vectors: spec.vectors.clone(),
            group,
            group_size,
        }
    }
}

struct Tracker<'a, F> {
    flow: &'a F,
    opts: &'a TrackOptions,
    min_step: f64,
    exhausted: bool,
    block_matches: usize,
    min_overlap: f64,
}

enum StepOutcome {
    Accepted(State),
    Refine,
}

impl<F> Tracker<'_, F>
where
    F: Fn(f64) -> LaplacianMatrix + Sync,
{
    fn spectrum_at(&self, sigma: f64) -> Result<Spectrum> {
        eigendecompose(&(self.flow)(sigma))
    }

    fn advance(
        &mut self,
        prev: &State,
        sigma: f64,
        spec: &Spectrum,
        out: &mut Vec<State>,
    ) -> Result<()> {
        let force = sigma - prev.sigma <= self.min_step;
        match self.try_match(prev, sigma, spec, force) {
            StepOutcome::Accepted(state) => {
                out.push(state);
                Ok(())
            }
            StepOutcome::Refine => {
                let mid = 0.5 * (prev.sigma + sigma);
                let mid_spec = self.spectrum_at(mid)?;
                self.advance(prev, mid, &mid_spec, out)?;
                let last = out.pop().expect("refinement produced a state");
                let at = out.len();
                self.advance(&last, sigma, spec, out)?;
                out.insert(at, last);
                Ok(())
            }
        }
    }

    fn try_match(&mut self, prev: &State, sigma: f64, spec: &Spectrum, force: bool) -> StepOutcome {
        let n = prev.values.len();
        let next = State::from_spectrum(sigma, spec);
        let c = prev.vectors.transpose() * &next.vectors;
        let block = block_overlaps(&c, prev, &next);
        let weight: Vec<Vec<f64>> = (0..n)
            .map(|b| {
                (0..n)
                    .map(|j| block[b][j] + 1e-3 * c[(b, j)].abs())
                    .collect()
            })
            .collect();
        let assign = max_weight_assignment(&weight);
        let worst = (0..n).map(|b| block[b][assign[b]]).fold(1.0f64, f64::min);
        let drops = self.opts.monotone
            && (0..n).any(|b| {
                let (a, z) = (prev.values[b], spec.values[assign[b]]);
                a - z > self.opts.monotone_rel_tol * a.abs().max(1.0)
            });
        if worst < self.opts.overlap_min || drops {
            if !force {
                return StepOutcome::Refine;
            }
            self.exhausted = true;
        }
        self.min_overlap = self.min_overlap.min(worst);

        let mut values = vec![0.0; n];
        let mut vectors = DMatrix::zeros(n, n);
        let mut group = vec![0; n];
        let mut touched_block = (0..n).any(|b| prev.group_size[prev.group[b]] > 1);
        for (gid, g) in spec.groups.iter().enumerate() {
            let members: Vec<usize> = (0..n).filter(|&b| g.contains(&assign[b])).collect();
            for &b in &members {
                values[b] = spec.values[assign[b]];
                group[b] = gid;
            }
            if g.len() == 1 {
                let b = members[0];
                let mut w = next.vectors.column(assign[b]).into_owned();
                if w.dot(&prev.vectors.column(b)) < 0.0 {
                    w.neg_mut();
                }
                vectors.set_column(b, &w);
                continue;
            }
            touched_block = true;
            // Procrustes: rotate the cluster basis onto the incoming branches
            let wb = next.vectors.columns(g.start, g.len()).into_owned();
            let mut up = DMatrix::zeros(n, members.len());
            for (k, &b) in members.iter().enumerate() {
                up.set_column(k, &prev.vectors.column(b));
            }
            let m = wb.transpose() * &up;
            let svd = m.svd(true, true);
            let rot = svd.u.expect("svd u") * svd.v_t.expect("svd v_t");
            let rotated = wb * rot;
            for (k, &b) in members.iter().enumerate() {
                vectors.set_column(b, &rotated.column(k));
            }
        }
        if touched_block {
            self.block_matches += 1;
        }
        StepOutcome::Accepted(State {
            sigma,
            values,
            vectors,
            group,
            group_size: next.group_size,
        })
    }
}

/// Overlap of prev branch `b` with new eigenvector `j`, computed between
/// subspaces whenever either side sits in a degenerate cluster.
fn block_overlaps(c: &DMatrix<f64>, prev: &State, next: &State) -> Vec<Vec<f64>> {
    let n = c.nrows();
    let mut out: Vec<Vec<f64>> = (0..n)
        .map(|b| (0..n).map(|j| c[(b, j)].abs()).collect())
        .collect();
    let members =
        |s: &State, gid: usize| -> Vec<usize> { (0..n).filter(|&x| s.group[x] == gid).collect() };
    let prev_groups: Vec<Vec<usize>> = (0..prev.group_size.len())
        .map(|g| members(prev, g))
        .collect();
    let next_groups: Vec<Vec<usize>> = (0..next.group_size.len())
        .map(|g| members(next, g))
        .collect();
    for a in prev_groups.iter() {
        for bgrp in next_groups.iter() {
            if a.len() == 1 && bgrp.len() == 1 {
                continue;
            }
            let sub = DMatrix::from_fn(a.len(), bgrp.len(), |r, s| c[(a[r], bgrp[s])]);
            if sub.norm() < 1e-3 {
                continue;
            }
            if a.len() > 1 && bgrp.len() > 1 {
                let sv = sub.singular_values();
                let smallest = sv.iter().copied().fold(f64::INFINITY, f64::min);
                for &b in a {
                    for &j in bgrp {
                        out[b][j] = smallest;
                    }
                }
            } else if a.len() > 1 {
                let j = bgrp[0];
                let norm = sub.column(0).norm();
                for &b in a {
                    out[b][j] = norm;
                }
            } else {
                let b = a[0];
                let norm = sub.row(0).norm();
                for &j in bgrp {
                    out[b][j] = norm;
                }
            }
        }
    }
    out
}

/// Follows every eigenvalue branch of `flow` over `grid`.
///
/// Consecutive samples are matched by maximum-weight assignment on the
/// eigenvector overlap matrix. A step whose weakest matched overlap falls
/// below `overlap_min`, or for a monotone family any matched branch that
/// decreases, is bisected until it passes or the step reaches
/// `min_step_frac` of the grid span, in which case the step is accepted and
/// `refinement_exhausted` is set. Crossings of `reference` are then bracketed
/// by bisection.
pub fn track_branches<F>(
    flow: F,
    grid: &[f64],
    reference: f64,
    opts: &TrackOptions,
) -> Result<FlowResult>
where
    F: Fn(f64) -> LaplacianMatrix + Sync,
{
    if grid.is_empty() {
        return Err(Error::InvalidGrid("empty grid".into()));
    }
    if let Some(w) = grid
        .windows(2)
        .find(|w| w[1].partial_cmp(&w[0]) != Some(std::cmp::Ordering::Greater))
    {
        return Err(Error::InvalidGrid(format!(
            "not increasing at {} -> {}",
            w[0], w[1]
        )));
    }
    let spectra: Vec<Spectrum> = grid
        .par_iter()
        .map(|&s| eigendecompose(&flow(s)))
        .collect::<Result<_>>()?;

    let span = grid[grid.len() - 1] - grid[0];
    let mut tracker = Tracker {
        flow: &flow,
        opts,
        min_step: opts.min_step_frac * span,
        exhausted: false,
        block_matches: 0,
        min_overlap: 1.0,
    };
    let mut states = vec![State::from_spectrum(grid[0], &spectra[0])];
    for (t, spec) in spectra.iter().enumerate().skip(1) {
        let prev = states.pop().expect("nonempty");
        let mut out = Vec::new();
        tracker.advance(&prev, grid[t], spec, &mut out)?;
        states.push(prev);
        states.extend(out);
    }

    // A branch crosses when its strict side of `reference` flips; samples
    // within `cross_tol` of it are skipped rather than counted as a side.
    let cross_tol = opts.cross_rel_tol * reference.abs().max(1.0);
    let mut crossings = Vec::new();
    let n_branches = states[0].values.len();
    for b in 0..n_branches {
        let mut last: Option<(usize, bool)> = None;
        for (t, st) in states.iter().enumerate() {
            let d = st.values[b] - reference;
            if d.abs() <= cross_tol {
                continue;
            }
            let above = d > 0.0;
            if let Some((t0, was_above)) = last {
                if was_above != above {
                    let (s_lo, s_hi) = tracker.bracket(&states[t0], st, b, reference)?;
                    crossings.push(Crossing {
                        branch: b,
                        sigma_lo: s_lo,
                        sigma_hi: s_hi,
                        upward: above,
                    });
                }
            }
            last = Some((t, above));
        }
    }
    crossings.sort_by(|a, b| {
        a.sigma_lo
            .total_cmp(&b.sigma_lo)
            .then(a.branch.cmp(&b.branch))
    });

    let last = states.last().expect("nonempty");
    let converged_count = last
        .values
        .iter()
        .filter(|&&v| (v - reference).abs() <= group_tol(reference))
        .count();
    Ok(FlowResult {
        sigmas: states.iter().map(|s| s.sigma).collect(),
        values: states.iter().map(|s| s.values.clone()).collect(),
        vectors: states.into_iter().map(|s| s.vectors).collect(),
        reference_value: reference,
        crossings,
        converged_count,
        refinement_exhausted: tracker.exhausted,
        block_matches: tracker.block_matches,
        min_overlap: tracker.min_overlap,
        origins: Vec::new(),
    })
}

impl<F> Tracker<'_, F>
where
    F: Fn(f64) -> LaplacianMatrix + Sync,
{
    fn bracket(&self, lo: &State, hi: &State, b: usize, reference: f64) -> Result<(f64, f64)> {
        let below_at_lo = lo.values[b] < reference;
        let (mut s_lo, mut s_hi) = (lo.sigma, hi.sigma);
        let mut u_lo = lo.vectors.column(b).into_owned();
        let mut u_hi = hi.vectors.column(b).into_owned();
        while s_hi - s_lo > self.opts.bracket_width {
            let mid = 0.5 * (s_lo + s_hi);
            let spec = self.spectrum_at(mid)?;
            let score = |j: usize| {
                let w = spec.vectors.column(j);
                w.dot(&u_lo).abs() + w.dot(&u_hi).abs()
            };
            let j = (0..spec.len())
                .max_by(|&x, &y| score(x).total_cmp(&score(y)))
                .expect("nonempty spectrum");
            let w = spec.vector(j);
            if (spec.values[j] < reference) == below_at_lo {
                s_lo = mid;
                u_lo = w;
            } else {
                s_hi = mid;
                u_hi = w;
            }
        }
        Ok((s_lo, s_hi))
    }
}

/// `n` points evenly spaced on `[a, b]`, endpoints included.
pub fn uniform_grid(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![a],
        _ => (0..n)
            .map(|i| {
                if i == n - 1 {
                    b
                } else {
                    a + (b - a) * i as f64 / (n - 1) as f64
                }
            })
            .collect(),
    }
}

/// `σ = 0` followed by `n` logarithmically spaced points on `[a, b]`.
pub fn log_grid_with_zero(a: f64, b: f64, n: usize) -> Vec<f64> {
    let (la, lb) = (a.ln(), b.ln());
    let mut out = vec![0.0];
    out.extend((0..n).map(|i| {
        if n == 1 {
            a
        } else if i == n - 1 {
            b
        } else {
            (la + (lb - la) * i as f64 / (n - 1) as f64).exp()
        }
    }));
    out
}
