//! A laboratory for TimSort-style merge policies.
//!
//! The crate splits the classic adaptive mergesort into independently
//! testable pieces:
//!
//! - [`runs`]: greedy decomposition of an array into maximal monotonic runs,
//!   exactly as the reference sort computes it.
//! - [`policy`]: the merge-collapse stack machine on run *lengths* only,
//!   with the patched (Python 3.4.4+) and unpatched (Java) rule sets, full
//!   trace recording and a literal second implementation of the rule
//!   cascade used as an equivalence oracle.
//! - [`sorter`]: the concrete stable sort, with exact comparison and
//!   merge-cost accounting that mirrors the simulator event for event.
//! - [`generators`]: adversarial and structured run profiles: the
//!   worst-case family `R(n)` with its cost recurrence, towers that
//!   maximize stack height, published witness sequences, seeded random
//!   profiles and an exhaustive height maximizer.
//! - [`analysis`]: entropy, invariant checkers over traces, trace
//!   segmentation, potential accounting and consolidated cost reports.
//! - [`cli`]: the command-line surface binding it all together.
//!
//! Run lengths are the only state the merge policy ever looks at, so most
//! experiments here work on [`runs::RunProfile`] values without touching
//! concrete arrays. See the crate examples for guided tours of each
//! capability.

pub mod analysis;
pub mod cli;
pub mod generators;
pub mod policy;
pub mod runs;
pub mod sorter;
pub mod wire;

mod error;

pub use error::Error;

/// Shorthand used across the crate.
pub type Result<T> = std::result::Result<T, Error>;
