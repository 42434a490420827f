//! Hybrid quantum-classical binary classification on tabular data.
//!
//! The crate bundles everything needed to train and evaluate a variational
//! quantum classifier without any external quantum runtime:
//!
//! * [`statevector`]: exact dense simulation of n-qubit registers.
//! * [`circuits`]: Pauli-expansion feature maps (`Z`, `ZZ`) and the
//!   `RealAmplitudes` ansatz, built as symbolic circuits.
//! * [`optimizer`]: a from-scratch COBYLA minimizer.
//! * [`classifier`]: the composed model, cross-entropy loss and training loop.
//! * [`data`]: ingestion and cleaning of the `titanic3` passenger table.
//! * [`metrics`]: confusion-matrix tallies and derived rates.
//! * [`svc`]: a deterministic linear support vector classifier baseline.
//! * [`experiment`]: the experiment runner behind the `vqc` command line tool.
//!
//! Qubit ordering is little-endian throughout: qubit 0 is the least
//! significant bit of a basis-state index.

pub mod circuits;
pub mod classifier;
pub mod data;
mod error;
pub mod experiment;
pub mod metrics;
pub mod optimizer;
pub mod statevector;
pub mod svc;

pub use error::{Error, Result};
