//! Sparse, triangle-dense random graphs from manifold-structured
//! inner-product models.
//!
//! The crate covers model definition ([`kernels`]), sampling ([`graphgen`]),
//! graph statistics ([`stats`]), spectral embedding ([`spectral`]), local
//! neighbourhood views ([`local`]) and theoretical reference values
//! ([`oracles`]).

pub mod bessel;
pub mod eigen;
pub mod error;
pub mod experiment;
pub mod expr;
pub mod graph;
pub mod graphgen;
pub mod io;
pub mod kernels;
pub mod local;
pub mod oracles;
pub mod quadrature;
pub mod spectral;
pub mod stats;

pub use error::{Error, Result};
pub use graph::{SparseGraph, Subgraph};
