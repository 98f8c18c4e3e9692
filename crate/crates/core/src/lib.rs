//! Reliability toolkit for binary probabilistic classifiers.
//!
//! The flow is: flip-augment each time-series sample ([`augment`]), average
//! repeated prediction runs per variant ([`ensemble`]), fuse the variants
//! into one decision with an optional rejection step ([`methods`], with
//! [`fallback`] as a class-3 continuation), and score the result
//! ([`metrics`]). [`synth`] supplies a deterministic scenario for running
//! everything without external data.

pub mod augment;
pub mod ensemble;
pub mod error;
pub mod fallback;
pub mod methods;
pub mod metrics;
pub mod synth;
pub mod types;

pub use error::{Error, ErrorKind, Result};
pub use types::{
    argmax_class, confidence_of, Decision, Label, Outcome, PredictionTensor, ProbPair, Provenance,
    SampleRecord, Vote,
};
