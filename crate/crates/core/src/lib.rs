//! Template-vector support vector machines whose similarity kernel is
//! computed on a simulated memtransistor crossbar.
//!
//! Instead of matching a query against every support vector, the query is
//! compared with a fixed set of P template vectors stored as crossbar
//! memductances. The kernel between two points is the inner product of
//! their template similarities, and the trained support-vector expansion
//! folds into a single weight per template, so the deployed model stores
//! P templates and c·P weights however many support vectors training
//! produced.
//!
//! - [`device`]: discrete memductance ladder, pulse programming, energy.
//! - [`crossbar`]: d×P array programming and in-memory MVM readout.
//! - [`svm`]: kernel synthesis, dual solver, weight folding, prediction.
//! - [`data`]: CSV ingestion, normalization, splits, synthetic blobs.

pub mod crossbar;
pub mod data;
pub mod device;
pub mod error;
pub mod svm;

pub use error::{Error, Result};
