//! Local IQ harness.
//!
//! A candidate strategy lives one life in each of a fixed list of
//! pseudorandomly generated worlds. Each world is a stacked multi-tape
//! Turing machine; each life is a run of games scored victory 1, draw 1/2,
//! loss 0. The Local IQ is the mean life score, and a strategy earns the AI
//! verdict when it exceeds the configured threshold.
//!
//! - [`prng`]: SplitMix64 and the integer-threshold samplers.
//! - [`machine`]: tapes, program tables, step and move semantics, snapshots.
//! - [`worldgen`]: random tables, mutation, the interestingness filter and
//!   the seed-chain manifest.
//! - [`strategy`]: the strategy interface, the seeded random strategy and the
//!   external-process adapter.
//! - [`arbiter`]: the life loop and game scoring.
//! - [`harness`]: Local IQ reports, follow-up batches and the verdict.

pub mod arbiter;
pub mod error;
pub mod harness;
pub mod machine;
pub mod prng;
pub mod strategy;
pub mod worldgen;

pub use error::{Error, Result};
