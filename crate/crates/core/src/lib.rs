//! Dynamic model of a stand-alone diesel generator set (synchronous
//! machine, DC4B exciter with V/Hz limiter, four engine-governor variants)
//! together with the signal processing, error metrics, and RBF surrogate
//! optimizer used to identify its parameters from load-step recordings.

pub mod error;
pub mod excitation;
pub mod governor;
pub mod identify;
pub mod machine;
pub mod ode;
pub mod params;
pub mod signal;
pub mod simengine;
pub mod surropt;
pub mod units;

#[cfg(test)]
mod testutil;

pub use error::{Error, Result};
