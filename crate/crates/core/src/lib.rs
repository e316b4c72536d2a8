//! Interval exchange transformations and the discrete Schrödinger operators
//! they generate.
//!
//! The crate is organised bottom-up:
//!
//! - [`permutation`]: exact combinatorics of the combinatorial datum π
//!   (irreducibility, rotation class, the discontinuity graph, Type W).
//! - [`iet`]: the dynamical system itself, in `f64` or exact rational
//!   arithmetic, with Keane falsification and orbit alignment.
//! - [`sampling`]: sampling functions `f` and the discontinuity scans of
//!   `f ∘ Tⁿ` that drive the absence-of-AC-spectrum criteria.
//! - [`cocycle`]: potentials, transfer matrices, Lyapunov exponents and
//!   truncated spectra.
//! - [`gordon`]: continued fractions, Liouville rotations and Gordon
//!   certificates.

pub mod cocycle;
pub mod error;
pub mod gordon;
pub mod iet;
pub mod permutation;
pub mod sampling;

pub use error::{Error, Result};
pub use iet::{Iet, KeaneStatus, KeaneVerdict};
pub use permutation::{DiscontinuityGraph, Permutation, TypeWTrace};
pub use sampling::{FunctionKind, FunctionMetadata, SamplingFunction};
