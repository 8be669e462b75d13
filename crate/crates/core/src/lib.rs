//! Moment-SOS bounds for polynomial optimization, Christoffel–Darboux
//! kernels and Christoffel functions, and the log-det duality linking them.

pub mod christoffel;
pub mod christrep;
pub mod disintegration;
pub mod error;
pub mod hierarchy;
pub mod linalg;
pub mod moments;
pub mod polycore;
pub mod sdp;

pub use error::{Error, Result};
pub use moments::{MeasureDescriptor, MomentSequence, SemialgebraicSet};
pub use polycore::{MonomialBasis, MultiIndex, Polynomial};

/// Crate version, embedded in CLI result files.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
