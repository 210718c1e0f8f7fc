//! Exact collective-spin simulation of Schrödinger-cat atom interferometers
//! and clocks in the symmetric Dicke subspace.

pub mod cavity;
pub mod cli;
pub mod dicke;
pub mod error;
pub mod husimi;
pub mod observables;
pub mod protocol;

pub use dicke::{Axis, EnsembleDims, OperatorSet, Pulse, Sign, SpinState};
pub use error::{Error, Result};
pub use protocol::{builtin, builtin_for, run, Detection, ProtocolId, ProtocolParams, ProtocolSpec};
