//! The stacked multi-tape Turing machine that plays the world.
//!
//! A [`ProgramTable`] maps `(state, symbol)` to five commands. A
//! [`MachineState`] carries the seven global tapes, one temporary tape per
//! live stack frame, the current tape, the control state and the head
//! memory. [`execute_move`] turns an action word into an observation or an
//! incorrect-move verdict.

mod config;
mod exec;
mod state;
mod table;
mod tape;

pub use config::{Geometry, TestConfig, FIRST_GLOBAL_TAPE, MAX_TAPE_DESIGNATOR, UTILITY_SYMBOLS};
pub(crate) use config::{split_kv_lines, KEYS};
pub use exec::{
    execute_move, execute_move_traced, execute_move_with, step, IncorrectCause, MoveOutcome, MoveReport, ObservationCapture,
    StepResult,
};
pub use state::{Frame, MachineState, Snapshot, TapeRef};
pub use table::{CommandCell, HeadMove, MemoryOp, ProgramTable, Symbol, WriteOp};
pub use tape::Tape;
