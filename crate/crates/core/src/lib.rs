//! Performance limits of finite-blocklength fluid antenna systems under a
//! block spatial-correlation channel model.
//!
//! The crate is layered bottom-up:
//!
//! * [`specfun`]: scaled Bessel, Marcum Q and non-central chi-square functions.
//! * [`quadrature`]: Gauss–Laguerre rules and an adaptive Gauss–Kronrod oracle.
//! * [`channel`]: the sinc Toeplitz correlation, its eigen-factor and the
//!   fitted block model.
//! * [`fas_stats`]: distribution of the best-port channel gain.
//! * [`metrics`]: block error rate bounds and outage probability.
//! * [`montecarlo`]: an independent simulator of the exact correlated channel.

pub mod channel;
pub mod error;
pub mod fas_stats;
mod linalg;
pub mod metrics;
pub mod montecarlo;
pub mod quadrature;
pub mod specfun;
mod streams;

pub use error::{Error, Result};
