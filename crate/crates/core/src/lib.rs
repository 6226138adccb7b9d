//! Information-theoretic evaluation of side-channel security.
//!
//! Given a Hamming-weight leakage channel with additive Gaussian noise —
//! optionally protected by first-order Boolean masking — this crate
//! estimates the mutual information between the observable traces and the
//! secret, turns it into an upper bound on the success rate of *any*
//! key-recovery attack via Fano's inequality, and validates the bound's
//! tightness against the empirical optimal maximum-likelihood attack.
//!
//! * [`leakage`] — the channel model and reproducible Monte-Carlo draws;
//! * [`mi`] — Monte-Carlo estimation of `I(X;Y|T)` and `I(U;Y|T)` over a
//!   grid of trace counts, with per-draw standard errors;
//! * [`bounds`] — the Fano bound and its inverse, minimum-trace
//!   predictions, and the Shannon-capacity line;
//! * [`attack`] — the maximum-likelihood distinguisher and empirical
//!   success-rate curves;
//! * [`oracle`] — exact small-parameter ground truth by enumeration and
//!   quadrature, independent of the estimation path.

pub mod attack;
pub mod bounds;
pub mod error;
pub mod leakage;
pub mod mi;
pub mod oracle;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
pub use leakage::{FieldParams, LeakageConfig, SboxKind, SboxSpec};
pub use mi::QGrid;
pub use rng::SeededRng;
