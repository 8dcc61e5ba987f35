//! Linear algebra kernels: exact characteristic polynomials, sparse
//! symmetric inertia and Lanczos iteration.

pub mod inertia;
pub mod lanczos;
pub mod modular;
pub mod sparse;

pub use modular::integer_char_poly;
pub use sparse::CsrMatrix;
