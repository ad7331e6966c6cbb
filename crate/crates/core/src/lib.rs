//! Symbolic analysis of security protocols over a global trace.
//!
//! Protocol programs written in a small concurrent language are executed
//! against a Dolev-Yao attacker. Every security-relevant step appends to one
//! global trace; a runtime monitor checks the protocol's trace invariant and
//! linear uniqueness witnesses at every append, and trace predicates for
//! secrecy, agreement and forward secrecy are evaluated over all bounded
//! interleavings.

pub mod attacker;
pub mod explore;
pub mod ids;
pub mod label;
pub mod lang;
pub mod monitor;
pub mod pattern;
pub mod properties;
pub mod report;
pub mod semantics;
pub mod suite;
pub mod term;
pub mod trace;

pub use ids::{NonceId, ParticipantId, ReaderRef, SessionId, SessionRef};
pub use label::{can_read, join_labels, label_of, Label, LabelEnv};
pub use term::{normalize, terms_equal, Term, TermError};
