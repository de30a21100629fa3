//! Contract automata: composition, most permissive controller synthesis,
//! liability, projection to communicating finite-state machines and
//! deadlock/convergence checking of the projected systems under the
//! 1-buffer semantics.

pub mod analysis;
pub mod automaton;
pub mod cfsm;
pub mod cli;
pub mod io;
pub mod label;
pub mod oracle;
pub mod product;
pub mod projection;
pub mod runtime;
pub mod synthesis;

#[doc(hidden)]
pub mod samples;

pub use automaton::{ContractAutomaton, StateId, StateVector, Transition, ValidationError};
pub use cfsm::{CfsmAction, Channel, CommunicatingMachine, CommunicatingSystem, Endpoint, Finality, Polarity};
pub use label::{classify, complementary, ActionName, ActionVector, Classification, Label};
pub use product::{product, ProductError};
pub use runtime::{Configuration, Semantics};
pub use synthesis::{controlled_system, liable, mpc, ControlledSystem, Liability};
