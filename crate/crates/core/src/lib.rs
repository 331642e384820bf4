//! Pairwise error probability (PEP) analysis of selective decode-and-forward
//! relaying with orthogonal space-time block codes over keyhole channels.
//!
//! The crate has two halves that check each other:
//!
//! * an analytic side ([`specfun`], [`pepbound`]) that averages Craig-form
//!   conditional error probabilities over the fading distribution through
//!   the moment generating function of the squared channel Frobenius norm;
//! * a Monte Carlo side ([`fading`], [`simkit`]) that samples rank-one
//!   keyhole channels and runs the two-phase relay protocol trial by trial.
//!
//! [`codebook`] supplies the Alamouti codebook and the eigenvalue spectrum of
//! codeword differences that both halves consume, and [`config`] /
//! [`report`] drive sweeps and write CSV + JSON artifacts.

// `!(x > 0.0)` rejects NaN along with non-positive values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod codebook;
pub mod config;
pub mod error;
pub mod fading;
pub mod pepbound;
pub mod report;
pub mod simkit;
pub mod specfun;

pub use error::{Error, Result};
pub use num_complex::Complex64;
