//! Regular multigraphs with half-loops and whole-loops, their Hashimoto
//! (non-backtracking) spectra and Ihara zeta data, and seeded Monte Carlo
//! censuses of non-Ramanujan eigenvalues over random regular graphs and
//! random covering maps.

pub mod census;
pub mod graph;
pub mod linalg;
pub mod models;
pub mod poly;
pub mod spectral;
pub mod traces;
pub mod zeta;

pub use graph::{DirectedGraph, Graph, GraphCounts, GraphError};
pub use models::{build_bouquet, sample_cover, CoveringMap, ModelError, ModelId};
pub use poly::IntPolynomial;
