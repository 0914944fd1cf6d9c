use std::sync::Arc;

use super::table::Symbol;

/// An unbounded two-way tape with its own head.
///
/// Cells live in one dense, copy-on-write buffer covering every position
/// ever written; anything outside it reads as the blank. Cloning a tape is
/// O(1) until one side writes.
#[derive(Clone, Debug)]
pub struct Tape {
    cells: Arc<Vec<Symbol>>,
    /// Position of `cells[0]`.
    origin: i64,
    head: i64,
    blank: Symbol,
}

impl Tape {
    pub fn new(blank: Symbol) -> Self {
        Tape { cells: Arc::new(Vec::new()), origin: 0, head: 0, blank }
    }

    pub fn head(&self) -> i64 {
        self.head
    }

    pub fn set_head(&mut self, pos: i64) {
        self.head = pos;
    }

    pub fn blank(&self) -> Symbol {
        self.blank
    }

    #[inline]
    pub fn read(&self, pos: i64) -> Symbol {
        let idx = pos.wrapping_sub(self.origin);
        if idx >= 0 && (idx as usize) < self.cells.len() {
            self.cells[idx as usize]
        } else {
            self.blank
        }
    }

    #[inline]
    pub fn read_head(&self) -> Symbol {
        self.read(self.head)
    }

    #[inline]
    pub fn write(&mut self, pos: i64, sym: Symbol) {
        let idx = pos - self.origin;
        if idx >= 0 && (idx as usize) < self.cells.len() {
            if self.cells[idx as usize] != sym {
                Arc::make_mut(&mut self.cells)[idx as usize] = sym;
            }
            return;
        }
        if sym == self.blank {
            return;
        }
        self.grow_to(pos);
        let idx = (pos - self.origin) as usize;
        Arc::make_mut(&mut self.cells)[idx] = sym;
    }

    #[inline]
    pub fn write_head(&mut self, sym: Symbol) {
        self.write(self.head, sym);
    }

    fn grow_to(&mut self, pos: i64) {
        let blank = self.blank;
        let cells = Arc::make_mut(&mut self.cells);
        if cells.is_empty() {
            cells.resize(16, blank);
            self.origin = pos - 8;
            return;
        }
        let len = cells.len() as i64;
        if pos < self.origin {
            let extra = (self.origin - pos).max(len) as usize;
            let mut grown = vec![blank; extra];
            grown.extend_from_slice(cells);
            *cells = grown;
            self.origin -= extra as i64;
        } else {
            let extra = (pos - self.origin - len + 1).max(len) as usize;
            cells.resize(cells.len() + extra, blank);
        }
    }

    /// Non-blank cells in ascending position order.
    pub fn non_blank(&self) -> impl Iterator<Item = (i64, Symbol)> + '_ {
        let origin = self.origin;
        let blank = self.blank;
        self.cells
            .iter()
            .enumerate()
            .filter(move |(_, &s)| s != blank)
            .map(move |(i, &s)| (origin + i as i64, s))
    }

    pub(crate) fn encode(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.head.to_le_bytes());
        let cells: Vec<(i64, Symbol)> = self.non_blank().collect();
        out.extend_from_slice(&(cells.len() as u64).to_le_bytes());
        for (pos, sym) in cells {
            out.extend_from_slice(&pos.to_le_bytes());
            out.extend_from_slice(&sym.to_le_bytes());
        }
    }
}

impl PartialEq for Tape {
    fn eq(&self, other: &Self) -> bool {
        self.head == other.head && self.blank == other.blank && self.non_blank().eq(other.non_blank())
    }
}

impl Eq for Tape {}
