//! Test support: a naive reference interpreter for the stacked machine, a
//! tiny-machine generator and helpers shared by the integration tests and
//! the acceptance suite.

#![allow(dead_code)]

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use iqarena::machine::{
    execute_move, execute_move_traced, CommandCell, Geometry, HeadMove, IncorrectCause, MachineState, MemoryOp, MoveOutcome,
    ObservationCapture, ProgramTable, TapeRef, WriteOp,
};
use iqarena::prng::{uniform_below, Generator};

/// A table cell as six raw numbers: write, memory, head, call state, call
/// tape, next state. Write and memory use 0 = keep, 1 = copy from the
/// other register, `v >= 2` = symbol `v - 2`; head uses 0 = left,
/// 1 = right, 2 = stay.
pub type RawCell = [u32; 6];

#[derive(Clone, Debug)]
pub struct RawTable {
    pub num_states: u32,
    pub max_symbols: u32,
    /// `cells[(state - 1) * max_symbols + symbol]`.
    pub cells: Vec<RawCell>,
}

impl RawTable {
    fn cell(&self, state: u32, symbol: u16) -> RawCell {
        self.cells[(state as usize - 1) * self.max_symbols as usize + symbol as usize]
    }
}

pub fn to_program(g: &Geometry, raw: &RawTable) -> ProgramTable {
    let mut t = ProgramTable::filled(g, CommandCell::goto(1)).unwrap();
    for state in 1..=raw.num_states {
        for sym in 0..raw.max_symbols as u16 {
            let [w, m, h, cs, ct, ns] = raw.cell(state, sym);
            let cell = CommandCell {
                write: match w {
                    0 => WriteOp::Unchanged,
                    1 => WriteOp::FromHeadMemory,
                    v => WriteOp::Concrete((v - 2) as u16),
                },
                memory: match m {
                    0 => MemoryOp::Unchanged,
                    1 => MemoryOp::FromTapeSymbol,
                    v => MemoryOp::Concrete((v - 2) as u16),
                },
                head: match h {
                    0 => HeadMove::Left,
                    1 => HeadMove::Right,
                    _ => HeadMove::Stay,
                },
                call_state: cs,
                call_tape: ct,
                next_state: ns,
            };
            t.set(g, state, sym, cell).unwrap();
        }
    }
    t
}

fn below(gen: &mut Generator, n: u32) -> u32 {
    uniform_below(gen, n as u64) as u32
}

/// A random machine with at most 5 states and 6 symbols.
pub fn tiny_case(gen: &mut Generator) -> (Arc<Geometry>, RawTable) {
    let (m, k) = if below(gen, 2) == 0 { (1, vec![2, 5]) } else { (2, vec![2, 5, 3]) };
    let num_states = m as u32 + 1 + below(gen, 5 - m as u32);
    let max_symbols = 6;
    let steps = 20 + below(gen, 60);
    let g = Arc::new(Geometry::new(1, m, k, num_states, max_symbols, 7, steps).unwrap());
    let mut cells = Vec::new();
    for _ in 0..num_states * max_symbols {
        let w = below(gen, max_symbols + 2);
        let mem = below(gen, max_symbols + 2);
        let h = below(gen, 3);
        let cs = if below(gen, 10) < 7 { 0 } else { 1 + below(gen, num_states) };
        let ct = if below(gen, 2) == 0 { 0 } else { 1 + below(gen, 9) };
        let ns = if below(gen, 10) < 2 { 0 } else { 1 + below(gen, num_states) };
        cells.push([w, mem, h, cs, ct, ns]);
    }
    (g, RawTable { num_states, max_symbols, cells })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TapeView {
    Global(usize),
    /// Temporary tape of the frame at this stack depth.
    Temp(usize),
}

pub type Cells = BTreeMap<i64, u16>;

/// Implementation-neutral picture of a total machine state.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct View {
    pub globals: Vec<(i64, Cells)>,
    pub current: TapeView,
    pub control: u32,
    pub memory: u16,
    /// Return state, saved tape, temp tape head and cells.
    pub stack: Vec<(u32, TapeView, i64, Cells)>,
}

pub fn view_of(s: &MachineState) -> View {
    let g = s.geometry();
    let slot_depth = |slot: usize| s.stack().iter().position(|f| f.temp_tape == slot).expect("live temp tape");
    let tv = |r: TapeRef| match r {
        TapeRef::Global(i) => TapeView::Global(i as usize),
        TapeRef::Temp(slot) => TapeView::Temp(slot_depth(slot)),
    };
    let cells = |t: &iqarena::machine::Tape| t.non_blank().collect::<Cells>();
    View {
        globals: (0..g.global_tape_count)
            .map(|i| {
                let t = s.global_tape(3 + i).unwrap();
                (t.head(), cells(t))
            })
            .collect(),
        current: tv(s.current_tape()),
        control: s.control(),
        memory: s.head_memory(),
        stack: s
            .stack()
            .iter()
            .map(|f| {
                let t = s.temp_tape(f.temp_tape).unwrap();
                (f.return_state, tv(f.saved_tape), t.head(), cells(t))
            })
            .collect(),
    }
}

#[derive(Clone, Debug, Default)]
struct RefTape {
    cells: HashMap<i64, u16>,
    head: i64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum RefTapeId {
    Global(usize),
    Temp(u64),
}

#[derive(Clone, Debug)]
struct RefFrame {
    ret: u32,
    saved: RefTapeId,
    temp: u64,
}

/// Straight-line interpreter written from the rules, with hash-map tapes
/// and temp tapes keyed by a never-reused id.
#[derive(Clone, Debug)]
pub struct RefMachine {
    blank: u16,
    m: usize,
    k_obs: Vec<u32>,
    steps_per_move: u32,
    globals: Vec<RefTape>,
    temps: HashMap<u64, RefTape>,
    next_temp: u64,
    current: RefTapeId,
    control: u32,
    memory: u16,
    stack: Vec<RefFrame>,
}

enum RefStep {
    Go,
    End,
    Crash,
}

impl RefMachine {
    pub fn new(g: &Geometry) -> Self {
        let blank = g.k.iter().copied().max().unwrap() as u16;
        RefMachine {
            blank,
            m: g.m,
            k_obs: g.k[g.n..].to_vec(),
            steps_per_move: g.steps_per_move,
            globals: vec![RefTape::default(); g.global_tape_count as usize],
            temps: HashMap::new(),
            next_temp: 0,
            current: RefTapeId::Global(0),
            control: g.m as u32 + 1,
            memory: blank,
            stack: Vec::new(),
        }
    }

    fn tape(&mut self, id: RefTapeId) -> &mut RefTape {
        match id {
            RefTapeId::Global(i) => &mut self.globals[i],
            RefTapeId::Temp(t) => self.temps.get_mut(&t).expect("live temp tape"),
        }
    }

    fn read(&mut self) -> u16 {
        let blank = self.blank;
        let t = self.tape(self.current);
        *t.cells.get(&t.head).unwrap_or(&blank)
    }

    fn write(&mut self, sym: u16) {
        let t = self.tape(self.current);
        let h = t.head;
        t.cells.insert(h, sym);
    }

    fn one_step(&mut self, table: &RawTable) -> RefStep {
        let read = self.read();
        let old_memory = self.memory;
        let [w, m, h, cs, ct, ns] = table.cell(self.control, read);
        if w == 1 {
            self.write(old_memory);
        } else if w >= 2 {
            self.write((w - 2) as u16);
        }
        if m == 1 {
            self.memory = read;
        } else if m >= 2 {
            self.memory = (m - 2) as u16;
        }
        let cur = self.current;
        match h {
            0 => self.tape(cur).head -= 1,
            1 => self.tape(cur).head += 1,
            _ => {}
        }
        let old_current = self.current;
        if ct == 1 {
            if let Some(top) = self.stack.last() {
                self.current = top.saved;
            }
        } else if ct == 2 {
            if let Some(top) = self.stack.last() {
                self.current = RefTapeId::Temp(top.temp);
            }
        } else if ct >= 3 {
            self.current = RefTapeId::Global(ct as usize - 3);
        }
        if cs != 0 {
            let id = self.next_temp;
            self.next_temp += 1;
            self.temps.insert(id, RefTape::default());
            self.stack.push(RefFrame { ret: ns, saved: old_current, temp: id });
            if ct == 2 {
                self.current = RefTapeId::Temp(id);
            }
            self.control = cs;
        } else if ns != 0 {
            self.control = ns;
        } else {
            loop {
                let Some(f) = self.stack.pop() else { return RefStep::Crash };
                self.temps.remove(&f.temp);
                self.current = f.saved;
                self.control = f.ret;
                if f.ret != 0 {
                    break;
                }
            }
        }
        if self.control == self.m as u32 + 1 {
            RefStep::End
        } else {
            RefStep::Go
        }
    }

    /// Plays one move, pushing the view after every step. Returns the
    /// outcome and the number of steps taken.
    pub fn play(&mut self, table: &RawTable, action: &[u32], trace: &mut Vec<View>) -> (MoveOutcome, u32) {
        let cur = self.current;
        let head = self.tape(cur).head;
        for (i, &a) in action.iter().enumerate() {
            self.tape(cur).cells.insert(head + i as i64, a as u16);
        }
        let mut seen: Vec<Option<u16>> = vec![None; self.m];
        let mut steps = 0;
        while steps < self.steps_per_move {
            steps += 1;
            let r = self.one_step(table);
            trace.push(self.view());
            match r {
                RefStep::Crash => return (MoveOutcome::Incorrect(IncorrectCause::ReturnOnEmptyStack), steps),
                RefStep::End => {
                    let observation = seen.iter().map(|v| v.map_or(0, |x| x as u32)).collect();
                    return (MoveOutcome::Completed { observation }, steps);
                }
                RefStep::Go => {
                    let c = self.control as usize;
                    if c >= 1 && c <= self.m && seen[c - 1].is_none() {
                        let v = self.memory;
                        seen[c - 1] = Some(v);
                        if v as u32 >= self.k_obs[c - 1] {
                            return (MoveOutcome::Incorrect(IncorrectCause::ObservationOutOfRange), steps);
                        }
                        if c == 1 && v == 4 {
                            return (MoveOutcome::Incorrect(IncorrectCause::ForbiddenRewardFour), steps);
                        }
                    }
                }
            }
        }
        (MoveOutcome::Incorrect(IncorrectCause::Cycled), steps)
    }

    pub fn view(&self) -> View {
        let depth_of = |id: u64| self.stack.iter().position(|f| f.temp == id).expect("live temp tape");
        let tv = |r: RefTapeId| match r {
            RefTapeId::Global(i) => TapeView::Global(i),
            RefTapeId::Temp(t) => TapeView::Temp(depth_of(t)),
        };
        let cells = |t: &RefTape| t.cells.iter().filter(|(_, &v)| v != self.blank).map(|(&p, &v)| (p, v)).collect();
        View {
            globals: self.globals.iter().map(|t| (t.head, cells(t))).collect(),
            current: tv(self.current),
            control: self.control,
            memory: self.memory,
            stack: self
                .stack
                .iter()
                .map(|f| {
                    let t = &self.temps[&f.temp];
                    (f.ret, tv(f.saved), t.head, cells(t))
                })
                .collect(),
        }
    }
}

/// Plays `moves` random actions on a random tiny machine through both the
/// reference interpreter and the library, comparing the state after every
/// step. Incorrect moves are rolled back on both sides.
pub fn equivalence_case(seed: u64, moves: usize) -> Result<(), String> {
    let mut gen = Generator::seed(seed);
    let (g, raw) = tiny_case(&mut gen);
    let table = to_program(&g, &raw);
    let mut reference = RefMachine::new(&g);
    let mut lib = MachineState::initial(g.clone());
    let mut cap = ObservationCapture::new(g.m);
    if view_of(&lib) != reference.view() {
        return Err(format!("seed {seed}: initial states differ"));
    }
    for mv in 0..moves {
        let action = vec![below(&mut gen, g.k[0])];
        let ctx = |what: &str| format!("seed {seed} move {mv} action {action:?}: {what}");
        let ref_before = reference.clone();
        let snap = lib.snapshot();
        let mut ref_trace = Vec::new();
        let (ref_out, ref_steps) = reference.play(&raw, &action, &mut ref_trace);
        let mut lib_trace = Vec::new();
        let report = execute_move_traced(&table, &mut lib, &action, &mut cap, |s| lib_trace.push(view_of(s)))
            .map_err(|e| ctx(&e.to_string()))?;
        if report.outcome != ref_out || report.steps != ref_steps {
            return Err(ctx(&format!(
                "outcome {:?}/{} vs reference {:?}/{}",
                report.outcome, report.steps, ref_out, ref_steps
            )));
        }
        if lib_trace.len() != ref_trace.len() {
            return Err(ctx(&format!("{} traced steps vs {}", lib_trace.len(), ref_trace.len())));
        }
        for (i, (a, b)) in lib_trace.iter().zip(&ref_trace).enumerate() {
            if a != b {
                return Err(ctx(&format!("state after step {} differs:\n lib {a:?}\n ref {b:?}", i + 1)));
            }
        }
        if !report.outcome.is_completed() {
            reference = ref_before;
            lib.restore(&snap).map_err(|e| ctx(&e.to_string()))?;
            if view_of(&lib) != reference.view() {
                return Err(ctx("rolled-back state differs"));
            }
        }
    }
    Ok(())
}

/// Rollback soundness over worlds of the desk chain: at every moment with
/// both correct and incorrect actions, trying the incorrect ones first
/// (restoring after each) must leave the same state as playing the correct
/// action directly. Returns the number of cases checked.
pub fn rollback_cases(cfg: &iqarena::machine::TestConfig, wanted: usize) -> Result<usize, String> {
    use iqarena::worldgen::{generate_world_zero, mutate_world};
    let g = Arc::new(cfg.geometry());
    let zero = generate_world_zero(cfg);
    let widths = g.action_widths().to_vec();
    let mut gen = Generator::seed(77);
    let mut checked = 0;
    let mut world_seed = 0u64;
    while checked < wanted {
        world_seed += 1;
        if world_seed > 50_000 {
            return Err(format!("only {checked} rollback cases found"));
        }
        let table = mutate_world(&zero, world_seed, cfg);
        let mut live = MachineState::initial(g.clone());
        for _moment in 0..60 {
            let s0 = live.snapshot();
            let mut correct = Vec::new();
            let mut incorrect = Vec::new();
            for a in 0..widths[0] {
                let mut probe = MachineState::initial(g.clone());
                probe.restore(&s0).unwrap();
                let r = execute_move(&table, &mut probe, &[a]).unwrap();
                if r.outcome.is_completed() {
                    correct.push((a, r.outcome, probe.hash_hex()));
                } else {
                    incorrect.push(a);
                }
            }
            if correct.is_empty() {
                break;
            }
            let (a, direct_outcome, direct_hash) = correct[below(&mut gen, correct.len() as u32) as usize].clone();
            if !incorrect.is_empty() {
                for &bad in &incorrect {
                    let r = execute_move(&table, &mut live, &[bad]).unwrap();
                    if r.outcome.is_completed() {
                        return Err(format!("world {world_seed}: action {bad} changed its verdict"));
                    }
                    live.restore(&s0).unwrap();
                }
                checked += 1;
            }
            let r = execute_move(&table, &mut live, &[a]).unwrap();
            if r.outcome != direct_outcome || live.hash_hex() != direct_hash {
                return Err(format!("world {world_seed}: rollback left a trace before action {a}"));
            }
            if checked >= wanted {
                break;
            }
        }
    }
    Ok(checked)
}
