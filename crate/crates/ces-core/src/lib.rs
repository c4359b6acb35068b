//! Numerical core for second-order analysis of circular and noncircular
//! complex elliptically symmetric (CES) models.
//!
//! The crate is organized in four layers:
//!
//! - [`linalg`]: dense complex matrix utilities (vec/Kronecker/commutation
//!   calculus, Woodbury inverse, augmented block matrices, Gaussian
//!   fourth-order moment identities).
//! - [`dist`]: radial density generators, the second-order modular variate,
//!   and the stochastic-representation sampler for noncircular CES vectors.
//! - [`fim`]: score function and closed-form Fisher information for models
//!   with parameterized augmented mean and scatter, plus Monte Carlo
//!   estimators used as oracles.
//! - [`crb`]: stochastic Cramér-Rao bounds for direction-of-arrival models,
//!   both the projector-based closed forms and the general Schur-complement
//!   route used to cross-check them.
//!
//! All computations are pure functions of their inputs; sampling takes an
//! explicit RNG so results are reproducible from a `(seed, stream)` pair
//! (see [`rng`]).

pub mod crb;
pub mod dist;
mod error;
pub mod fim;
pub mod linalg;
pub mod quad;
pub mod rng;

pub use error::CesError;

/// Crate-wide result type.
pub type Result<T> = std::result::Result<T, CesError>;
