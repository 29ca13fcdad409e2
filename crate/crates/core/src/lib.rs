//! Simulator, checker and model checker for self-stabilizing communication
//! primitives over single-writer shared registers.

pub mod checker;
pub mod config;
pub mod experiment;
pub mod explorer;
pub mod model;
pub mod protocol;
pub mod scheduler;
pub mod topology;
pub mod trace_io;

pub use config::{Configuration, System};
pub use model::{Alphabet, Bit, ModelError, ProcessId, RegisterId, RegisterKind, Symbol, Value};
pub use protocol::{Action, Event, ProtocolKind};
pub use topology::Topology;
