//! Command cells and the program table.

use std::fmt::{self, Write as _};

use sha2::{Digest, Sha256};

use super::config::Geometry;
use crate::error::{Error, Result};

/// A tape-alphabet index. Data symbols sit at `0..max_k`, the blank at
/// `max_k`, the remaining utility symbols after it.
pub type Symbol = u16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum WriteOp {
    Unchanged,
    /// Write the head memory as it was before this step.
    FromHeadMemory,
    Concrete(Symbol),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MemoryOp {
    Unchanged,
    /// Load the tape symbol as it was before this step.
    FromTapeSymbol,
    Concrete(Symbol),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum HeadMove {
    Left,
    Right,
    Stay,
}

/// The five commands of one table entry.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct CommandCell {
    pub write: WriteOp,
    pub memory: MemoryOp,
    pub head: HeadMove,
    /// Subprogram to invoke; 0 means no call.
    pub call_state: u32,
    /// New current tape: 0 keep, 1 parent's tape, 2 this frame's temporary
    /// tape, 3.. a global tape.
    pub call_tape: u32,
    /// Next state; 0 means return.
    pub next_state: u32,
}

impl CommandCell {
    /// Keep the tape, memory and head; go to `next_state`.
    pub fn goto(next_state: u32) -> Self {
        CommandCell {
            write: WriteOp::Unchanged,
            memory: MemoryOp::Unchanged,
            head: HeadMove::Stay,
            call_state: 0,
            call_tape: 0,
            next_state,
        }
    }

    pub(crate) fn check(&self, g: &Geometry) -> Result<()> {
        let sym_ok = |s: Symbol| (s as u32) < g.max_symbols;
        let ok = match self.write {
            WriteOp::Concrete(s) => sym_ok(s),
            _ => true,
        } && match self.memory {
            MemoryOp::Concrete(s) => sym_ok(s),
            _ => true,
        } && self.call_state <= g.num_states
            && self.call_tape <= g.max_tape_designator()
            && self.next_state <= g.num_states;
        if ok {
            Ok(())
        } else {
            Err(Error::Precondition(format!("command cell out of range: {self:?}")))
        }
    }

    fn encode(&self, out: &mut Vec<u8>) {
        let (wt, wv) = match self.write {
            WriteOp::Unchanged => (0u8, 0u16),
            WriteOp::FromHeadMemory => (1, 0),
            WriteOp::Concrete(s) => (2, s),
        };
        let (mt, mv) = match self.memory {
            MemoryOp::Unchanged => (0u8, 0u16),
            MemoryOp::FromTapeSymbol => (1, 0),
            MemoryOp::Concrete(s) => (2, s),
        };
        out.push(wt);
        out.extend_from_slice(&wv.to_le_bytes());
        out.push(mt);
        out.extend_from_slice(&mv.to_le_bytes());
        out.push(match self.head {
            HeadMove::Left => 0,
            HeadMove::Right => 1,
            HeadMove::Stay => 2,
        });
        out.extend_from_slice(&self.call_state.to_le_bytes());
        out.push(self.call_tape as u8);
        out.extend_from_slice(&self.next_state.to_le_bytes());
    }
}

impl fmt::Display for CommandCell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.write {
            WriteOp::Unchanged => write!(f, "w=-")?,
            WriteOp::FromHeadMemory => write!(f, "w=M")?,
            WriteOp::Concrete(s) => write!(f, "w={s}")?,
        }
        match self.memory {
            MemoryOp::Unchanged => write!(f, " m=-")?,
            MemoryOp::FromTapeSymbol => write!(f, " m=T")?,
            MemoryOp::Concrete(s) => write!(f, " m={s}")?,
        }
        let h = match self.head {
            HeadMove::Left => 'L',
            HeadMove::Right => 'R',
            HeadMove::Stay => 'S',
        };
        write!(f, " h={h} call={}/{} next={}", self.call_state, self.call_tape, self.next_state)
    }
}

/// The world program: one [`CommandCell`] per `(state, symbol)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProgramTable {
    num_states: u32,
    max_symbols: u32,
    cells: Vec<CommandCell>,
}

impl ProgramTable {
    /// A table with every cell set to `fill`.
    pub fn filled(g: &Geometry, fill: CommandCell) -> Result<Self> {
        fill.check(g)?;
        Ok(ProgramTable {
            num_states: g.num_states,
            max_symbols: g.max_symbols,
            cells: vec![fill; (g.num_states * g.max_symbols) as usize],
        })
    }

    pub fn num_states(&self) -> u32 {
        self.num_states
    }

    pub fn max_symbols(&self) -> u32 {
        self.max_symbols
    }

    #[inline]
    fn index(&self, state: u32, symbol: Symbol) -> usize {
        debug_assert!(state >= 1 && state <= self.num_states);
        debug_assert!((symbol as u32) < self.max_symbols);
        (state as usize - 1) * self.max_symbols as usize + symbol as usize
    }

    #[inline]
    pub fn cell(&self, state: u32, symbol: Symbol) -> &CommandCell {
        &self.cells[self.index(state, symbol)]
    }

    /// Sets one cell, checking it against the geometry.
    pub fn set(&mut self, g: &Geometry, state: u32, symbol: Symbol, cell: CommandCell) -> Result<()> {
        if state == 0 || state > self.num_states || symbol as u32 >= self.max_symbols {
            return Err(Error::Precondition(format!("no cell at ({state}, {symbol})")));
        }
        cell.check(g)?;
        let i = self.index(state, symbol);
        self.cells[i] = cell;
        Ok(())
    }

    /// Sets every symbol of `state` to `cell`.
    pub fn set_row(&mut self, g: &Geometry, state: u32, cell: CommandCell) -> Result<()> {
        for s in 0..self.max_symbols {
            self.set(g, state, s as Symbol, cell)?;
        }
        Ok(())
    }

    pub fn column(&self, state: u32) -> &[CommandCell] {
        let start = self.index(state, 0);
        &self.cells[start..start + self.max_symbols as usize]
    }

    /// Replaces the column of `state`. The column length must be `max_symbols`.
    pub fn replace_column(&mut self, state: u32, column: &[CommandCell]) {
        assert_eq!(column.len(), self.max_symbols as usize);
        let start = self.index(state, 0);
        self.cells[start..start + column.len()].copy_from_slice(column);
    }

    pub fn canonical_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(16 + self.cells.len() * 14);
        out.extend_from_slice(b"iqarena-table\0");
        out.extend_from_slice(&self.num_states.to_le_bytes());
        out.extend_from_slice(&self.max_symbols.to_le_bytes());
        for c in &self.cells {
            c.encode(&mut out);
        }
        out
    }

    /// Hex SHA-256 of the canonical encoding.
    pub fn hash_hex(&self) -> String {
        hex::encode(Sha256::digest(self.canonical_bytes()))
    }

    /// Human-readable dump: one line per `(state, symbol)`.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        for state in 1..=self.num_states {
            for sym in 0..self.max_symbols {
                writeln!(s, "{state}:{sym} {}", self.cell(state, sym as Symbol)).unwrap();
            }
        }
        s
    }
}
