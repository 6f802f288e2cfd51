//! Gaussian `l_p`-norm variance lab.

#![allow(clippy::excessive_precision, clippy::neg_cmp_op_on_partial_ord, clippy::suspicious_arithmetic_impl)]

pub mod bracket;
pub mod constants;
pub mod dvoretzky;
pub mod error;
pub mod gauss;
pub mod logvalue;
pub mod mc;
pub mod order_stats;
pub mod quadrature;
pub mod rng;
pub mod special;
pub mod stats;
pub mod theory;
pub mod trunc;

pub use bracket::BoundBracket;
/// Library version, echoed into every output header.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub use constants::Constants;
pub use dvoretzky::{DistortionResult, SubspaceBasis};
pub use error::{Error, Result};
pub use gauss::Quantile;
pub use logvalue::LogValue;
pub use rng::RngStream;
pub use stats::{MCEstimate, ProportionEstimate};
pub use theory::{Regime, RegimePoint};
