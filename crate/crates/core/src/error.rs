use std::fmt;

use thiserror::Error;

/// Which hypothesis of the counting theorem failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Assumption {
    /// `λ_k` has multiplicity greater than one.
    Simple,
    /// `ψ` vanishes (within tolerance) on some vertex.
    NowhereZero,
}

impl fmt::Display for Assumption {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Assumption::Simple => f.write_str("simple"),
            Assumption::NowhereZero => f.write_str("nowhere_zero"),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("graph is not connected ({components} components)")]
    NotConnected { components: usize },
    #[error("symmetric eigensolver did not converge on a {dim}x{dim} matrix")]
    EigFailure { dim: usize },
    #[error("eigenvector vanishes at vertex {vertex} (|psi| = {value:e})")]
    ZeroVertex { vertex: usize, value: f64 },
    #[error("assumption violated: {0}")]
    AssumptionViolated(Assumption),
    #[error("eigenvalue index {index} is not simple at sigma = {sigma}")]
    DegenerateEigenvalue { index: usize, sigma: f64 },
    #[error("Dirichlet problem needs a nonempty interior")]
    EmptyInterior,
    #[error("vertex set is not a D-connected component of the sign classes")]
    NotAComponent,
    #[error("invalid family parameters: {0}")]
    InvalidFamilyParams(String),
    #[error("no connected sample after {attempts} attempts")]
    ConnectivityExhausted { attempts: usize },
    #[error("eigenvalue index {k} out of range 1..={n}")]
    IndexOutOfRange { k: usize, n: usize },
    #[error("invalid sigma grid: {0}")]
    InvalidGrid(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
