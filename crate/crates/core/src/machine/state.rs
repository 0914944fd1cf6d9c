//! Total machine state, snapshots and the canonical state encoding.

use std::sync::Arc;

use sha2::{Digest, Sha256};

use super::config::{Geometry, FIRST_GLOBAL_TAPE};
use super::table::Symbol;
use super::tape::Tape;
use crate::error::{Error, Result};

/// Which tape is meant.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TapeRef {
    /// Zero-based index among the global tapes (designator `3 + i`).
    Global(u8),
    /// The temporary tape owned by the stack frame at this depth.
    Temp(usize),
}

/// One subprogram invocation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Frame {
    /// Where `return` goes; 0 cascades into another return.
    pub return_state: u32,
    pub saved_tape: TapeRef,
    /// Slot of the temporary tape created for this invocation.
    pub temp_tape: usize,
}

/// Everything the world remembers between moves.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MachineState {
    geometry: Arc<Geometry>,
    pub(crate) globals: Vec<Tape>,
    /// Slot `i` belongs to `stack[i]`; the two grow and shrink together.
    pub(crate) temps: Vec<Tape>,
    pub(crate) current: TapeRef,
    pub(crate) control: u32,
    pub(crate) head_memory: Symbol,
    pub(crate) stack: Vec<Frame>,
}

/// An independent copy of a [`MachineState`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Snapshot(MachineState);

impl MachineState {
    /// Blank tapes, heads at 0, empty stack, tape 3 current, control at
    /// state `m+1`, head memory blank.
    pub fn initial(geometry: Arc<Geometry>) -> Self {
        let blank = geometry.blank();
        MachineState {
            globals: (0..geometry.global_tape_count).map(|_| Tape::new(blank)).collect(),
            temps: Vec::new(),
            current: TapeRef::Global(0),
            control: geometry.final_state(),
            head_memory: blank,
            stack: Vec::new(),
            geometry,
        }
    }

    pub fn geometry(&self) -> &Arc<Geometry> {
        &self.geometry
    }

    pub fn control(&self) -> u32 {
        self.control
    }

    pub fn head_memory(&self) -> Symbol {
        self.head_memory
    }

    pub fn current_tape(&self) -> TapeRef {
        self.current
    }

    pub fn stack(&self) -> &[Frame] {
        &self.stack
    }

    pub fn live_temp_tapes(&self) -> usize {
        self.temps.len()
    }

    /// Designator-style tape id of the current tape when it is global.
    pub fn current_global_id(&self) -> Option<u32> {
        match self.current {
            TapeRef::Global(i) => Some(FIRST_GLOBAL_TAPE + i as u32),
            TapeRef::Temp(_) => None,
        }
    }

    /// Global tape by designator `3..=9`.
    pub fn global_tape(&self, designator: u32) -> Option<&Tape> {
        designator
            .checked_sub(FIRST_GLOBAL_TAPE)
            .and_then(|i| self.globals.get(i as usize))
    }

    pub fn temp_tape(&self, slot: usize) -> Option<&Tape> {
        self.temps.get(slot)
    }

    #[inline]
    pub fn tape(&self, r: TapeRef) -> &Tape {
        match r {
            TapeRef::Global(i) => &self.globals[i as usize],
            TapeRef::Temp(s) => &self.temps[s],
        }
    }

    #[inline]
    pub(crate) fn tape_mut(&mut self, r: TapeRef) -> &mut Tape {
        match r {
            TapeRef::Global(i) => &mut self.globals[i as usize],
            TapeRef::Temp(s) => &mut self.temps[s],
        }
    }

    #[inline]
    pub fn current(&self) -> &Tape {
        self.tape(self.current)
    }

    #[inline]
    pub(crate) fn current_mut(&mut self) -> &mut Tape {
        let r = self.current;
        self.tape_mut(r)
    }

    pub fn snapshot(&self) -> Snapshot {
        Snapshot(self.clone())
    }

    /// Puts the state back to `snap`. Fails if the snapshot came from a
    /// machine with a different geometry.
    pub fn restore(&mut self, snap: &Snapshot) -> Result<()> {
        if !Arc::ptr_eq(&self.geometry, &snap.0.geometry) && *self.geometry != *snap.0.geometry {
            return Err(Error::GeometryMismatch);
        }
        self.clone_from(&snap.0);
        Ok(())
    }

    /// Deterministic byte layout: geometry echo, every global tape (head,
    /// then non-blank cells by ascending position), current tape, control,
    /// head memory, then each frame with its temporary tape inline.
    pub fn canonical_bytes(&self) -> Vec<u8> {
        let g = &self.geometry;
        let mut out = Vec::with_capacity(256);
        out.extend_from_slice(b"iqarena-state\0");
        for v in [g.n as u32, g.m as u32, g.num_states, g.max_symbols, g.global_tape_count, g.steps_per_move] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        for w in &g.k {
            out.extend_from_slice(&w.to_le_bytes());
        }
        for t in &self.globals {
            t.encode(&mut out);
        }
        encode_ref(self.current, &mut out);
        out.extend_from_slice(&self.control.to_le_bytes());
        out.extend_from_slice(&self.head_memory.to_le_bytes());
        out.extend_from_slice(&(self.stack.len() as u64).to_le_bytes());
        for f in &self.stack {
            out.extend_from_slice(&f.return_state.to_le_bytes());
            encode_ref(f.saved_tape, &mut out);
            self.temps[f.temp_tape].encode(&mut out);
        }
        out
    }

    pub fn hash_hex(&self) -> String {
        hex::encode(Sha256::digest(self.canonical_bytes()))
    }
}

impl Snapshot {
    pub fn state(&self) -> &MachineState {
        &self.0
    }
}

fn encode_ref(r: TapeRef, out: &mut Vec<u8>) {
    match r {
        TapeRef::Global(i) => {
            out.push(0);
            out.extend_from_slice(&(i as u64).to_le_bytes());
        }
        TapeRef::Temp(s) => {
            out.push(1);
            out.extend_from_slice(&(s as u64).to_le_bytes());
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::machine::TestConfig;

    fn desk() -> Arc<Geometry> {
        Arc::new(TestConfig::desk().geometry())
    }

    #[test]
    fn initial_state() {
        let s = MachineState::initial(desk());
        assert_eq!(s.current_global_id(), Some(3));
        assert_eq!(s.control(), 3);
        assert_eq!(s.head_memory(), 5);
        assert!(s.stack().is_empty());
        assert_eq!(s.global_tape(5).unwrap().read(17), 5);
        assert!(s.global_tape(2).is_none());
        assert!(s.global_tape(10).is_none());
    }

    #[test]
    fn snapshot_isolated_from_mutation() {
        let mut s = MachineState::initial(desk());
        let snap = s.snapshot();
        s.current_mut().write(0, 2);
        s.head_memory = 1;
        assert_eq!(snap.state().current().read(0), 5);
        s.restore(&snap).unwrap();
        assert_eq!(s.current().read(0), 5);
        assert_eq!(s, MachineState::initial(desk()));
        assert_eq!(s.canonical_bytes(), MachineState::initial(desk()).canonical_bytes());
    }

    #[test]
    fn restore_rejects_other_geometry() {
        let mut s = MachineState::initial(desk());
        let other = Arc::new(TestConfig::full(1, 1, vec![3, 5]).unwrap().geometry());
        let snap = MachineState::initial(other).snapshot();
        assert!(matches!(s.restore(&snap), Err(Error::GeometryMismatch)));
    }

    #[test]
    fn equal_geometry_from_distinct_arcs_restores() {
        let mut s = MachineState::initial(desk());
        let snap = MachineState::initial(desk()).snapshot();
        assert!(s.restore(&snap).is_ok());
    }
}
