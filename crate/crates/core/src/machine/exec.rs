//! Single-step semantics and whole-move execution.

use super::config::FIRST_GLOBAL_TAPE;
use super::state::{Frame, MachineState, TapeRef};
use super::table::{HeadMove, MemoryOp, ProgramTable, Symbol, WriteOp};
use super::tape::Tape;
use crate::error::{Error, Result};

/// Why a move was rejected as incorrect.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum IncorrectCause {
    /// The step budget ran out before returning to the final state.
    Cycled,
    ReturnOnEmptyStack,
    /// An observation channel received a symbol at or above its width.
    ObservationOutOfRange,
    /// The reward channel received the value 4.
    ForbiddenRewardFour,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum MoveOutcome {
    /// `observation[i]` is the value for channel `i+1`; index 0 is the reward.
    Completed { observation: Vec<u32> },
    Incorrect(IncorrectCause),
}

impl MoveOutcome {
    pub fn is_completed(&self) -> bool {
        matches!(self, MoveOutcome::Completed { .. })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MoveReport {
    pub outcome: MoveOutcome,
    /// Machine steps executed during the move.
    pub steps: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StepResult {
    Continue,
    MoveEnd,
    Crash(IncorrectCause),
}

/// First-entry head-memory values of the observation states `1..=m`.
#[derive(Clone, Debug, Default)]
pub struct ObservationCapture {
    values: Vec<Option<Symbol>>,
    fresh: Option<usize>,
}

impl ObservationCapture {
    pub fn new(m: usize) -> Self {
        ObservationCapture { values: vec![None; m], fresh: None }
    }

    fn clear(&mut self) {
        self.values.iter_mut().for_each(|v| *v = None);
        self.fresh = None;
    }

    #[inline]
    fn visit(&mut self, state: u32, head_memory: Symbol) {
        let slot = &mut self.values[state as usize - 1];
        if slot.is_none() {
            *slot = Some(head_memory);
            self.fresh = Some(state as usize - 1);
        }
    }

    /// Channel index captured by the most recent step, if any.
    pub fn take_fresh(&mut self) -> Option<(usize, Symbol)> {
        self.fresh.take().map(|i| (i, self.values[i].unwrap()))
    }

    pub fn get(&self, channel: usize) -> Option<Symbol> {
        self.values[channel]
    }
}

/// Executes the cell at `(control, symbol under the current head)`.
///
/// All reads use pre-step values, so memory and tape can swap in one step.
/// Arrival at `m+1` ends the move without running that state's cell; arrival
/// at an observation state records its first-entry head memory.
#[inline]
pub fn step(table: &ProgramTable, state: &mut MachineState, capture: &mut ObservationCapture) -> StepResult {
    let (blank, final_state, m) = {
        let g = state.geometry();
        (g.blank(), g.final_state(), g.m)
    };
    let symbol = state.current().read_head();
    let cell = *table.cell(state.control, symbol);
    let memory_before = state.head_memory;

    {
        let tape = state.current_mut();
        match cell.write {
            WriteOp::Unchanged => {}
            WriteOp::FromHeadMemory => tape.write_head(memory_before),
            WriteOp::Concrete(s) => tape.write_head(s),
        }
        match cell.head {
            HeadMove::Left => tape.set_head(tape.head() - 1),
            HeadMove::Right => tape.set_head(tape.head() + 1),
            HeadMove::Stay => {}
        }
    }
    match cell.memory {
        MemoryOp::Unchanged => {}
        MemoryOp::FromTapeSymbol => state.head_memory = symbol,
        MemoryOp::Concrete(s) => state.head_memory = s,
    }

    let before_switch = state.current;
    match cell.call_tape {
        0 => {}
        1 => {
            if let Some(top) = state.stack.last() {
                state.current = top.saved_tape;
            }
        }
        2 => {
            if let Some(top) = state.stack.last() {
                state.current = TapeRef::Temp(top.temp_tape);
            }
        }
        d => state.current = TapeRef::Global((d - FIRST_GLOBAL_TAPE) as u8),
    }

    if cell.call_state != 0 {
        let slot = state.temps.len();
        state.temps.push(Tape::new(blank));
        state.stack.push(Frame { return_state: cell.next_state, saved_tape: before_switch, temp_tape: slot });
        if cell.call_tape == 2 {
            state.current = TapeRef::Temp(slot);
        }
        state.control = cell.call_state;
    } else if cell.next_state != 0 {
        state.control = cell.next_state;
    } else {
        loop {
            let Some(frame) = state.stack.pop() else {
                return StepResult::Crash(IncorrectCause::ReturnOnEmptyStack);
            };
            state.temps.truncate(frame.temp_tape);
            state.current = frame.saved_tape;
            state.control = frame.return_state;
            if frame.return_state != 0 {
                break;
            }
        }
    }

    let control = state.control;
    if control == final_state {
        StepResult::MoveEnd
    } else {
        if control as usize <= m {
            capture.visit(control, state.head_memory);
        }
        StepResult::Continue
    }
}

/// Plays one move: writes the action word at the head, then steps from
/// state `m+1` until it comes back, crashes, or exhausts the step budget.
///
/// An incorrect outcome leaves the state wherever the machine stopped; the
/// caller restores its own snapshot.
pub fn execute_move(table: &ProgramTable, state: &mut MachineState, action: &[u32]) -> Result<MoveReport> {
    let mut capture = ObservationCapture::new(state.geometry().m);
    execute_move_with(table, state, action, &mut capture)
}

/// [`execute_move`] reusing a caller-owned capture buffer.
pub fn execute_move_with(
    table: &ProgramTable,
    state: &mut MachineState,
    action: &[u32],
    capture: &mut ObservationCapture,
) -> Result<MoveReport> {
    execute_move_traced(table, state, action, capture, |_| {})
}

/// [`execute_move_with`] calling `on_step` with the state after every step.
pub fn execute_move_traced<F: FnMut(&MachineState)>(
    table: &ProgramTable,
    state: &mut MachineState,
    action: &[u32],
    capture: &mut ObservationCapture,
    mut on_step: F,
) -> Result<MoveReport> {
    let geometry = state.geometry().clone();
    if state.control != geometry.final_state() {
        return Err(Error::Precondition(format!(
            "move must start in state {}, machine is in {}",
            geometry.final_state(),
            state.control
        )));
    }
    if action.len() != geometry.n
        || action.iter().zip(geometry.action_widths()).any(|(&a, &w)| a >= w)
    {
        return Err(Error::Precondition(format!("action {action:?} outside the action space")));
    }
    if table.num_states() != geometry.num_states || table.max_symbols() != geometry.max_symbols {
        return Err(Error::GeometryMismatch);
    }

    {
        let tape = state.current_mut();
        let head = tape.head();
        for (i, &a) in action.iter().enumerate() {
            tape.write(head + i as i64, a as Symbol);
        }
    }

    if capture.values.len() != geometry.m {
        *capture = ObservationCapture::new(geometry.m);
    } else {
        capture.clear();
    }
    let widths = geometry.observation_widths();
    for steps in 1..=geometry.steps_per_move {
        let result = step(table, state, capture);
        on_step(state);
        match result {
            StepResult::MoveEnd => {
                let observation = (0..geometry.m).map(|i| capture.get(i).map_or(0, u32::from)).collect();
                return Ok(MoveReport { outcome: MoveOutcome::Completed { observation }, steps });
            }
            StepResult::Crash(cause) => {
                return Ok(MoveReport { outcome: MoveOutcome::Incorrect(cause), steps });
            }
            StepResult::Continue => {
                if let Some((channel, value)) = capture.take_fresh() {
                    let cause = if value as u32 >= widths[channel] {
                        Some(IncorrectCause::ObservationOutOfRange)
                    } else if channel == 0 && value == 4 {
                        Some(IncorrectCause::ForbiddenRewardFour)
                    } else {
                        None
                    };
                    if let Some(cause) = cause {
                        return Ok(MoveReport { outcome: MoveOutcome::Incorrect(cause), steps });
                    }
                }
            }
        }
    }
    Ok(MoveReport { outcome: MoveOutcome::Incorrect(IncorrectCause::Cycled), steps: geometry.steps_per_move })
}
