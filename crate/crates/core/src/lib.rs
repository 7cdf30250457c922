//! Numerical laboratory for the multilinear Bohnenblust-Hille inequality.
//!
//! * [`forms`]: multilinear forms, the mixed `l_{2n/(n+1)}` norm and
//!   certified bounds on the sup norm.
//! * [`constants`]: the Euler constant, the thresholds alpha and beta, the
//!   classical upper-bound families and per-degree envelopes.
//! * [`sequences`]: candidate constant sequences, extended-limit estimation and
//!   the dichotomy classifier.
//! * [`search`]: certified lower-bound search with a persistent result store.
//! * [`cli`]: the `bhlab` command line.
//!
//! The numeric core is generic over [`Real`] (`f32`, `f64`); the aliases below
//! fix it to `f64`, which is what the search, sequence and CLI layers use.

// `!(x > 0.0)` style checks are deliberate: they reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod constants;
pub mod error;
pub mod forms;
pub mod scalar;
pub mod search;
pub mod sequences;

pub use error::{Error, Result};
pub use scalar::{Real, ScalarField};

pub type Form = forms::MultilinearForm<f64>;
pub type FormF32 = forms::MultilinearForm<f32>;
pub type SupCertificate = forms::SupNormCertificate<f64>;
pub type Report = forms::NormReport<f64>;
pub type Policy = forms::CertPolicy<f64>;
pub type Sequence = constants::ConstantSequence<f64>;
pub type Envelope = constants::BoundEnvelope<f64>;
pub type Catalogue = constants::UpperCatalogue<f64>;
