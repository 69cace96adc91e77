//! Sound and complete projection of multiparty session types.
//!
//! A global type is turned into one deterministic state machine per role by
//! determinizing the role's erased view of the global automaton. The
//! candidate implementation is accepted iff it satisfies Send Validity and
//! Receive Validity; otherwise a counterexample trace is produced.
//!
//! Module map:
//! - [`syntax`]: parsing, interning, well-formedness, pretty-printing.
//! - [`automata`]: the global automaton, event alphabets, erasure.
//! - [`projection`]: subset construction per role.
//! - [`validity`]: available messages, validity checks, counterexamples.
//! - [`csm`]: communicating state machine execution and bounded exploration.
//! - [`oracle`]: brute-force checks used to validate verdicts.
//! - [`corpus`]: the bundled benchmark protocols.

pub mod automata;
pub mod corpus;
pub mod csm;
pub mod dot;
mod error;
mod names;
pub mod oracle;
pub mod projection;
pub mod syntax;
pub mod validity;

pub use automata::{AsyncEvent, Direction, LocalNfa, SyncAutomaton, SyncEvent, SyncTransition};
pub use csm::{Csm, CsmConfiguration, ExplorationReport};
pub use error::{Error, Result};
pub use names::{Message, RecVar, Role};
pub use projection::{SubsetMachine, SubsetState};
pub use syntax::{GlobalType, Node, NodeId};
pub use validity::{ValidityViolation, Verdict, ViolationKind};
