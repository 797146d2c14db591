//! Standard graph families and their closed-form spectra.

use std::f64::consts::PI;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::graph::WeightedGraph;
use crate::{Error, Result};

/// A member of one of the supported families; all weights are 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FamilySpec {
    Complete(usize),
    Cycle(usize),
    /// Generalized Petersen graph `GP(n, m)`: outer cycle `a_0..a_{n-1}`,
    /// spokes `a_i b_i`, inner edges `b_i b_{i+m}`.
    Petersen {
        n: usize,
        m: usize,
    },
    /// Path on `n` vertices.
    Interval(usize),
    /// `I_n × I_m`, vertex `(i, j)` at index `i·m + j`.
    Grid {
        n: usize,
        m: usize,
    },
    ErdosRenyi {
        n: usize,
        p: f64,
        seed: u64,
    },
}

impl FamilySpec {
    /// Short name used on the command line and in file metadata.
    pub fn family_name(&self) -> &'static str {
        match self {
            FamilySpec::Complete(_) => "complete",
            FamilySpec::Cycle(_) => "cycle",
            FamilySpec::Petersen { .. } => "petersen",
            FamilySpec::Interval(_) => "interval",
            FamilySpec::Grid { .. } => "grid",
            FamilySpec::ErdosRenyi { .. } => "er",
        }
    }

    pub fn params(&self) -> Vec<f64> {
        match *self {
            FamilySpec::Complete(n) | FamilySpec::Cycle(n) | FamilySpec::Interval(n) => {
                vec![n as f64]
            }
            FamilySpec::Petersen { n, m } | FamilySpec::Grid { n, m } => vec![n as f64, m as f64],
            FamilySpec::ErdosRenyi { n, p, .. } => vec![n as f64, p],
        }
    }

    pub fn seed(&self) -> Option<u64> {
        match *self {
            FamilySpec::ErdosRenyi { seed, .. } => Some(seed),
            _ => None,
        }
    }

    /// Builds a spec from a family name and numeric parameters.
    pub fn from_parts(family: &str, params: &[f64], seed: Option<u64>) -> Result<FamilySpec> {
        let bad = |msg: &str| Error::InvalidFamilyParams(format!("{family}: {msg}"));
        let count = |k: usize| {
            if params.len() == k {
                Ok(())
            } else {
                Err(bad(&format!(
                    "expected {k} parameter(s), got {}",
                    params.len()
                )))
            }
        };
        let int = |x: f64| {
            if x >= 0.0 && x.fract() == 0.0 && x <= u32::MAX as f64 {
                Ok(x as usize)
            } else {
                Err(bad(&format!("{x} is not a nonnegative integer")))
            }
        };
        let spec = match family {
            "complete" => {
                count(1)?;
                FamilySpec::Complete(int(params[0])?)
            }
            "cycle" => {
                count(1)?;
                FamilySpec::Cycle(int(params[0])?)
            }
            "interval" => {
                count(1)?;
                FamilySpec::Interval(int(params[0])?)
            }
            "petersen" => {
                count(2)?;
                FamilySpec::Petersen {
                    n: int(params[0])?,
                    m: int(params[1])?,
                }
            }
            "grid" => {
                count(2)?;
                FamilySpec::Grid {
                    n: int(params[0])?,
                    m: int(params[1])?,
                }
            }
            "er" => {
                count(2)?;
                FamilySpec::ErdosRenyi {
                    n: int(params[0])?,
                    p: params[1],
                    seed: seed.unwrap_or(0),
                }
            }
            other => {
                return Err(Error::InvalidFamilyParams(format!(
                    "unknown family '{other}'"
                )))
            }
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidFamilyParams(msg));
        match *self {
            FamilySpec::Complete(n) if n < 2 => bad(format!("complete needs n >= 2, got {n}")),
            FamilySpec::Cycle(n) if n < 3 => bad(format!("cycle needs n >= 3, got {n}")),
            FamilySpec::Petersen { n, .. } if n < 3 => {
                bad(format!("petersen needs n >= 3, got {n}"))
            }
            FamilySpec::Petersen { n, m } if m < 1 || m > (n - 1) / 2 => {
                bad(format!("petersen needs 1 <= m <= {}, got {m}", (n - 1) / 2))
            }
            FamilySpec::Interval(n) if n < 2 => bad(format!("interval needs n >= 2, got {n}")),
            FamilySpec::Grid { n, m } if n < 2 || m < 2 => {
                bad(format!("grid needs n, m >= 2, got {n}, {m}"))
            }
            FamilySpec::ErdosRenyi { n, .. } if n < 1 => bad("er needs n >= 1".into()),
            FamilySpec::ErdosRenyi { p, .. } if !(p > 0.0 && p < 1.0) => {
                bad(format!("er needs 0 < p < 1, got {p}"))
            }
            _ => Ok(()),
        }
    }

    pub fn generate(&self) -> Result<WeightedGraph> {
        self.validate()?;
        let edges: Vec<(usize, usize)> = match *self {
            FamilySpec::Complete(n) => (0..n)
                .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
                .collect(),
            FamilySpec::Cycle(n) => (0..n).map(|i| (i, (i + 1) % n)).collect(),
            FamilySpec::Petersen { n, m } => (0..n)
                .flat_map(|i| [(i, (i + 1) % n), (i, n + i), (n + i, n + (i + m) % n)])
                .collect(),
            FamilySpec::Interval(n) => (0..n - 1).map(|i| (i, i + 1)).collect(),
            FamilySpec::Grid { n, m } => {
                let v = |i: usize, j: usize| i * m + j;
                let mut e = Vec::new();
                for i in 0..n {
                    for j in 0..m {
                        if i + 1 < n {
                            e.push((v(i, j), v(i + 1, j)));
                        }
                        if j + 1 < m {
                            e.push((v(i, j), v(i, j + 1)));
                        }
                    }
                }
                e
            }
            FamilySpec::ErdosRenyi { n, p, seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let mut e = Vec::new();
                for i in 0..n {
                    for j in i + 1..n {
                        if rng.gen::<f64>() < p {
                            e.push((i, j));
                        }
                    }
                }
                e
            }
        };
        WeightedGraph::unweighted(self.vertex_count(), edges)
    }

    pub fn vertex_count(&self) -> usize {
        match *self {
            FamilySpec::Complete(n) | FamilySpec::Cycle(n) | FamilySpec::Interval(n) => n,
            FamilySpec::Petersen { n, .. } => 2 * n,
            FamilySpec::Grid { n, m } => n * m,
            FamilySpec::ErdosRenyi { n, .. } => n,
        }
    }
}

/// First connected `G(n, p)` over seeds `seed, seed + 1, …`.
///
/// Returns the graph, the seed that produced it and the number of attempts.
pub fn generate_connected_er(
    n: usize,
    p: f64,
    seed: u64,
    max_attempts: usize,
) -> Result<(WeightedGraph, u64, usize)> {
    if max_attempts == 0 {
        return Err(Error::InvalidFamilyParams(
            "max_attempts must be at least 1".into(),
        ));
    }
    for attempt in 0..max_attempts {
        let s = seed.wrapping_add(attempt as u64);
        let g = FamilySpec::ErdosRenyi { n, p, seed: s }.generate()?;
        if g.is_connected() {
            return Ok((g, s, attempt + 1));
        }
    }
    Err(Error::ConnectivityExhausted {
        attempts: max_attempts,
    })
}

/// `{0, n, …, n}`
pub fn complete_spectrum(n: usize) -> Vec<f64> {
    let mut v = vec![n as f64; n];
    v[0] = 0.0;
    v
}

/// `{2 − 2cos(2πj/n)}`, ascending.
pub fn cycle_spectrum(n: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..n)
        .map(|j| 2.0 - 2.0 * (2.0 * PI * j as f64 / n as f64).cos())
        .collect();
    v.sort_by(f64::total_cmp);
    v
}

/// `{2 − 2cos(πj/n)}`, `j = 0..n`.
pub fn interval_spectrum(n: usize) -> Vec<f64> {
    (0..n).map(|j| interval_eigenvalue(n, j)).collect()
}

pub fn interval_eigenvalue(n: usize, j: usize) -> f64 {
    2.0 - 2.0 * (PI * j as f64 / n as f64).cos()
}

/// Unit eigenvector `cos(πj(i + ½)/n)` of the path, `j = 0..n`.
pub fn interval_eigenvector(n: usize, j: usize) -> DVector<f64> {
    DVector::from_fn(n, |i, _| {
        (PI * j as f64 * (i as f64 + 0.5) / n as f64).cos()
    })
    .normalize()
}

/// Orthonormal pair `cos(2πji/n)`, `sin(2πji/n)` spanning the eigenspace of
/// `2 − 2cos(2πj/n)` on `C_n`, for `1 ≤ j < n/2`.
pub fn cycle_eigenpair(n: usize, j: usize) -> (DVector<f64>, DVector<f64>) {
    let t = |i: usize| 2.0 * PI * (j * i) as f64 / n as f64;
    let c = DVector::from_fn(n, |i, _| t(i).cos()).normalize();
    let s = DVector::from_fn(n, |i, _| t(i).sin()).normalize();
    (c, s)
}

/// Which combination of factor eigenvalues the product vector satisfies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CombinationRule {
    Sum,
    Product,
}

#[derive(Debug, Clone)]
pub struct GridEigenpair {
    pub value: f64,
    pub vector: DVector<f64>,
    pub rule: CombinationRule,
    pub residual: f64,
}

/// `φ_{k1} ⊗ φ_{j1}` on `I_n × I_m`, with its eigenvalue found by residual.
///
/// Both `λ + λ'` and `λ·λ'` are tried; the one with the smaller residual
/// against the grid Laplacian is reported.
pub fn grid_eigenvector_oracle(n: usize, m: usize, k1: usize, j1: usize) -> Result<GridEigenpair> {
    if k1 >= n || j1 >= m {
        return Err(Error::InvalidFamilyParams(format!(
            "factor indices ({k1}, {j1}) out of range for I_{n} x I_{m}"
        )));
    }
    let g = FamilySpec::Grid { n, m }.generate()?;
    let a = interval_eigenvector(n, k1);
    let b = interval_eigenvector(m, j1);
    let vector = DVector::from_fn(n * m, |v, _| a[v / m] * b[v % m]);
    let lv = g.laplacian().apply(&vector);
    let (la, lb) = (interval_eigenvalue(n, k1), interval_eigenvalue(m, j1));
    let residual_of = |value: f64| (&lv - &vector * value).norm();
    let (sum, prod) = (residual_of(la + lb), residual_of(la * lb));
    let (value, rule, residual) = if sum <= prod {
        (la + lb, CombinationRule::Sum, sum)
    } else {
        (la * lb, CombinationRule::Product, prod)
    };
    Ok(GridEigenpair {
        value,
        vector,
        rule,
        residual,
    })
}
