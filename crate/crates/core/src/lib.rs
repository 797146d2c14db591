//! Nodal domains of graph Laplacian eigenvectors, counted by spectral flow.
//!
//! Given a weighted graph `G` and an eigenpair `(λ_k, ψ)` of its Laplacian,
//! the number of strong nodal domains `ν(ψ)` can be read off a one-parameter
//! family of symmetric operators built from `ψ`:
//!
//! * the **edge flow** `L_σ = L + σP`, `σ ∈ [0, 1]`, where `P` adds a rank-one
//!   block on every sign-change edge ([`edge_flow`]);
//! * the **vertex flow** on the ψ-subdivision graph, where each sign-change
//!   edge receives a ghost vertex and `σ → ∞` pins the ghosts to zero
//!   ([`vertex_flow`], with the limiting problem solved exactly in
//!   [`dirichlet`]).
//!
//! In both cases the number of eigenvalue branches that end at `λ_k` is
//! `ν(ψ)`, and the number of branches that cross `λ_k` is the nodal
//! deficiency `k − ν(ψ)`.
//!
//! ```
//! use nodalflow::{edge_flow, families::FamilySpec, nodal, spectra};
//!
//! let g = FamilySpec::Petersen { n: 7, m: 3 }.generate().unwrap();
//! let spec = spectra::eigendecompose(&g.laplacian()).unwrap();
//! let sel = nodal::select_eigenpair(&spec, 7).unwrap();
//! let count = edge_flow::nodal_count_direct(&g, &sel).unwrap();
//! assert_eq!(count.nu, 3);
//! ```

pub mod dirichlet;
pub mod edge_flow;
mod error;
pub mod families;
pub mod graph;
pub mod io;
mod matching;
pub mod nodal;
pub mod spectra;
pub mod svg;
pub mod vertex_flow;

pub use error::{Assumption, Error, Result};
pub use graph::{Edge, LaplacianMatrix, Provenance, WeightedGraph};
pub use spectra::{FlowResult, Spectrum};
