//! Lower bounds on the error exponent of the typical random code for a
//! discrete memoryless channel under (possibly mismatched) generalized
//! likelihood decoding.
//!
//! The crate is organized bottom-up:
//!
//! - [`logdomain`], [`channel`] and [`measures`] hold the channel data model and
//!   the log-domain kernels (divergences, the tilted power mean `A(y, r)`, the
//!   collective-competition factor) everything else is built on.
//! - [`classical`] computes Gallager's `E0`, the expurgated `Ex`, and the
//!   random-coding, sphere-packing and expurgated exponent curves.
//! - [`dual`] evaluates the five-parameter Lagrange-dual objective and runs the
//!   `sup σ sup τ inf λ sup θ sup ζ` search, plus the closed-form three-regime
//!   bounds.
//! - [`primal`] is a brute-force oracle over joint types on small alphabets,
//!   used to check that the dual never exceeds the primal expression.
//! - [`simulate`] evaluates error probabilities exactly at tiny blocklengths.
//! - [`identities`] has random test channels and the algebraic identity checks.
//!
//! All rates and exponents are in nats.

// `!(x >= 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod classical;
pub mod dual;
pub mod error;
pub mod identities;
pub mod logdomain;
pub mod measures;
pub mod primal;
pub mod search;
pub mod simulate;
pub mod tolerance;

pub use channel::{validate_channel, ChannelModel, DecoderSpec, Violation};
pub use error::{Error, Result};
pub use logdomain::{log_sum_exp, LogValue};
