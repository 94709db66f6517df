//! Constructive measure theory for finite-to-one endomorphisms.
//!
//! The crate builds, for a map `r` with labeled inverse branches and a weight
//! `V`, the branch transition density `Δ`, the transfer operator, the path
//! measures `P_x` on backward orbits, and checks the disintegration of the
//! `V`-quasi-invariant solenoid measure through them. Three families are
//! provided: subshifts of finite type, `N`-fold circle maps, and quadratic
//! Julia maps.
//!
//! Subshift computations can run in exact arithmetic ([`scalar::Surd`]);
//! circle and Julia computations use `f64`, with exact rational points on the
//! circle where possible.

pub mod disintegration;
pub mod dynamics;
mod error;
pub mod io;
pub mod measures;
pub mod pathspace;
pub mod rng;
pub mod scalar;
pub mod weights;

pub use error::{Error, Result};
pub use scalar::{Scalar, Surd};

/// How long sums over quadrature nodes and tree branches are reduced.
///
/// Both modes are deterministic: `Parallel` splits work into fixed-size chunks
/// and combines the chunk sums by pairwise reduction in index order, so the
/// result does not depend on the thread count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Summation {
    /// One left-to-right pass in node order.
    #[default]
    Sequential,
    Parallel,
}
