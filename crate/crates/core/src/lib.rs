//! Whitney-type extension of jet fields on finite subsets of `R^n`.
//!
//! Given a finite set `E` and a polynomial jet at every point of `E`, the
//! crate builds a Whitney cover of the complement, groups its cubes into
//! lacunae, picks a representative point of `E` for every lacuna and glues
//! the corresponding jets with a smooth partition of unity. The same
//! structures give a sparse graph on `E` whose edge sum is a computable
//! equivalent of the trace seminorm.

pub mod error;
pub mod extension;
pub mod geometry;
pub mod io;
pub mod jets;
pub mod lacunae;
pub mod metrics;
pub mod multiindex;
pub mod quadrature;
pub mod random;
pub mod seminorms;
pub mod sparse_graph;
pub mod verify;
pub mod whitney;

pub use error::{Error, Result};
