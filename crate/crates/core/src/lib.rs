//! Exact and randomized machinery for hypergraph quasirandomness,
//! projective-plane codegree problems, and regularity decompositions.
//!
//! The crate is organised around a handful of combinatorial carriers —
//! k-uniform hypergraphs, r-partite complexes, weighted layer functions,
//! partition systems, and projective planes — with exact rational densities
//! throughout and Monte-Carlo estimators wherever exact enumeration is out
//! of reach. All randomized routines are reproducible: they draw from
//! counter-based streams keyed by an explicit seed and are bit-identical at
//! any thread count.

pub mod bits;
pub mod budget;
pub mod combinatorics;
pub mod constructions;
pub mod counting;
pub mod density;
pub mod embed;
pub mod error;
pub mod extremal;
pub mod galois;
pub mod gowers;
pub mod homcomplex;
pub mod hypergraph;
pub mod parallel;
pub mod partite;
pub mod pg;
pub mod quasirandom;
pub mod regularity;
pub mod rng;

pub use budget::Budget;
pub use counting::EvalMode;
pub use density::{Density, Estimate, Value};
pub use embed::{
    contains_copy, contains_copy_with_symmetry, count_embeddings, EmbeddingCertificate,
    SearchVerdict,
};
pub use error::{Error, Result};
pub use hypergraph::{read_hypergraph, write_hypergraph, UniformHypergraph, Vertex};
pub use parallel::Parallelism;
pub use partite::{generated_complex, IndexSet, PartiteComplex, PartiteGround};
