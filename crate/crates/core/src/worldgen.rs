//! World generation: random command cells and columns, World Zero, minor
//! mutations, the interestingness filter and the seed-chain manifest.
//!
//! A manifest stores only the list of accepted mutation seeds. World `i` is
//! recovered by starting from World Zero and applying the first `i+1` seeds
//! in order, so a manifest of a thousand numbers pins a thousand tables.

use std::fmt::Write as _;
use std::sync::Arc;

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::arbiter::{run_life_with, LifeObserver, Tally};
use crate::error::{Error, Result};
use crate::machine::{
    split_kv_lines, CommandCell, HeadMove, MemoryOp, ProgramTable, Symbol, TestConfig, WriteOp,
    KEYS,
};
use crate::prng::{call_state_sample, geometric_bounded, uniform_below, Generator, Probability};
use crate::strategy::RandomStrategy;

pub const MANIFEST_HEADER: &str = "iqarena-manifest v1";
pub const MANIFEST_VERSION: u32 = 1;
/// Seed of the random strategy used for the interestingness probe.
pub const PROBE_SEED: u64 = 1;
/// States regenerated at random by each mutation, on top of the special ones.
pub const MUTATED_STATES: u32 = 10;
/// Most utility draws plus utility losses an interesting probe life may show.
pub const MAX_UTILITY_RESULTS: u32 = 10;
pub const DEFAULT_GIVE_UP: u64 = 1_000_000;

struct Sampling {
    p: Probability,
    p_call_zero: Probability,
}

impl Sampling {
    fn new(cfg: &TestConfig) -> Self {
        Sampling { p: cfg.gen_p, p_call_zero: cfg.gen_p.complement() }
    }
}

fn sample_command(gen: &mut Generator, cfg: &TestConfig, s: &Sampling) -> CommandCell {
    let sym_range = cfg.max_symbols + 1;
    let write = match geometric_bounded(gen, sym_range, s.p) {
        0 => WriteOp::Unchanged,
        1 => WriteOp::FromHeadMemory,
        v => WriteOp::Concrete((v - 2) as Symbol),
    };
    let memory = match geometric_bounded(gen, sym_range, s.p) {
        0 => MemoryOp::Unchanged,
        1 => MemoryOp::FromTapeSymbol,
        v => MemoryOp::Concrete((v - 2) as Symbol),
    };
    let head = match geometric_bounded(gen, 2, s.p) {
        0 => HeadMove::Left,
        1 => HeadMove::Right,
        _ => HeadMove::Stay,
    };
    let call_state = call_state_sample(gen, cfg.num_states, s.p_call_zero, s.p);
    let call_tape = geometric_bounded(gen, 2 + cfg.global_tape_count, s.p);
    let next_state = geometric_bounded(gen, cfg.num_states, s.p);
    CommandCell { write, memory, head, call_state, call_tape, next_state }
}

fn sample_column(gen: &mut Generator, cfg: &TestConfig, s: &Sampling) -> Vec<CommandCell> {
    let width = cfg.max_symbols;
    let distinct = geometric_bounded(gen, width, s.p) as usize;
    let mut special: Vec<u32> = Vec::with_capacity(distinct);
    while special.len() < distinct {
        let pos = geometric_bounded(gen, width - 1, s.p);
        if !special.contains(&pos) {
            special.push(pos);
        }
    }
    let special_cells: Vec<CommandCell> = special.iter().map(|_| sample_command(gen, cfg, s)).collect();
    let default = sample_command(gen, cfg, s);
    let mut column = vec![default; width as usize];
    for (&pos, cell) in special.iter().zip(special_cells) {
        column[pos as usize] = cell;
    }
    column
}

/// One command cell: write, memory, head move, call state, call tape and
/// next state, sampled in that order.
pub fn random_command(gen: &mut Generator, cfg: &TestConfig) -> CommandCell {
    sample_command(gen, cfg, &Sampling::new(cfg))
}

/// One switch-style column of `max_symbols` cells: a few special positions
/// with their own commands, and one default command everywhere else.
pub fn random_column(gen: &mut Generator, cfg: &TestConfig) -> Vec<CommandCell> {
    sample_column(gen, cfg, &Sampling::new(cfg))
}

pub fn generate_world_zero(cfg: &TestConfig) -> ProgramTable {
    let g = cfg.geometry();
    let s = Sampling::new(cfg);
    let mut gen = Generator::seed(0);
    let mut table = ProgramTable::filled(&g, CommandCell::goto(g.final_state())).expect("valid filler");
    for state in 1..=cfg.num_states {
        let column = sample_column(&mut gen, cfg, &s);
        table.replace_column(state, &column);
    }
    table
}

/// States a mutation with `seed_value` regenerates, in regeneration order.
pub fn mutated_states(seed_value: u64, cfg: &TestConfig) -> Vec<u32> {
    mutate_in_place_inner(None, seed_value, cfg)
}

/// Copy of `base` with the special states `1..=m+1` and ten other random
/// states regenerated from `seed_value`.
pub fn mutate_world(base: &ProgramTable, seed_value: u64, cfg: &TestConfig) -> ProgramTable {
    let mut table = base.clone();
    mutate_in_place(&mut table, seed_value, cfg);
    table
}

pub fn mutate_in_place(table: &mut ProgramTable, seed_value: u64, cfg: &TestConfig) {
    mutate_in_place_inner(Some(table), seed_value, cfg);
}

fn mutate_in_place_inner(mut table: Option<&mut ProgramTable>, seed_value: u64, cfg: &TestConfig) -> Vec<u32> {
    let s = Sampling::new(cfg);
    let mut gen = Generator::seed(seed_value);
    let special = cfg.m as u32 + 1;
    let mut touched: Vec<u32> = (1..=special).collect();
    for state in 1..=special {
        let column = sample_column(&mut gen, cfg, &s);
        if let Some(t) = table.as_deref_mut() {
            t.replace_column(state, &column);
        }
    }
    let extra = MUTATED_STATES.min(cfg.num_states - special);
    let mut picks = Vec::with_capacity(extra as usize);
    while picks.len() < extra as usize {
        let state = uniform_below(&mut gen, cfg.num_states as u64) as u32 + 1;
        if state > special && !picks.contains(&state) {
            picks.push(state);
        }
    }
    for &state in &picks {
        let column = sample_column(&mut gen, cfg, &s);
        if let Some(t) = table.as_deref_mut() {
            t.replace_column(state, &column);
        }
    }
    touched.extend(picks);
    touched
}

/// Outcome counts of the probe life.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct WorldStats {
    pub victories: u32,
    pub losses: u32,
    pub machine_draws: u32,
    pub utility_draws: u32,
    pub utility_losses: u32,
    pub blind_alley: bool,
    pub disqualified: bool,
}

impl WorldStats {
    fn from_tally(t: &Tally, blind_alley: bool, disqualified: bool) -> Self {
        WorldStats {
            victories: t.victories,
            losses: t.losses,
            machine_draws: t.draws,
            utility_draws: t.utility_draws,
            utility_losses: t.utility_losses,
            blind_alley,
            disqualified,
        }
    }

    pub fn utility_results(&self) -> u32 {
        self.utility_draws + self.utility_losses
    }

    pub fn passes(&self) -> bool {
        !self.blind_alley
            && !self.disqualified
            && self.victories >= 1
            && self.losses + self.utility_losses >= 1
            && self.utility_results() <= MAX_UTILITY_RESULTS
    }
}

/// Runs the probe life (random strategy, seed 1) to completion.
pub fn is_interesting(table: &ProgramTable, cfg: &TestConfig) -> Result<(bool, WorldStats)> {
    let stats = probe(table, cfg, false)?;
    Ok((stats.passes(), stats))
}

struct UtilityCutoff {
    enabled: bool,
}

impl LifeObserver for UtilityCutoff {
    fn should_stop(&mut self, tally: &Tally) -> bool {
        self.enabled && tally.utility_draws + tally.utility_losses > MAX_UTILITY_RESULTS
    }
}

/// The probe life. With `cutoff`, stops as soon as the utility-result limit
/// is exceeded; the verdict cannot change after that point.
fn probe(table: &ProgramTable, cfg: &TestConfig, cutoff: bool) -> Result<WorldStats> {
    let mut strategy = RandomStrategy::new(PROBE_SEED, cfg);
    let mut observer = UtilityCutoff { enabled: cutoff };
    let geometry = Arc::new(cfg.geometry());
    let life = run_life_with(table, &mut strategy, cfg, geometry, &mut observer)?;
    Ok(WorldStats::from_tally(&life.tally, life.record.blind_alley, life.record.disqualified))
}

fn passes_filter(table: &ProgramTable, cfg: &TestConfig) -> Result<bool> {
    Ok(probe(table, cfg, true)?.passes())
}

/// Candidate evaluation order used while growing a seed chain. Every order
/// accepts the same seeds; only the work schedule differs.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EvalOrder {
    /// One candidate at a time, stopping at the first interesting one.
    Sequential,
    /// Each window of candidates evaluated back to front.
    Reverse,
    /// Each window of candidates evaluated in parallel.
    Parallel,
}

#[derive(Clone, Copy, Debug)]
pub struct BuildOptions {
    pub order: EvalOrder,
    /// Candidates examined per window for the windowed orders.
    pub window: u64,
    /// Consecutive rejections tolerated before giving up.
    pub give_up_after: u64,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions { order: EvalOrder::Parallel, window: 64, give_up_after: DEFAULT_GIVE_UP }
    }
}

/// The seed chain behind a list of test worlds.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Manifest {
    pub config: TestConfig,
    pub format_version: u32,
    /// 0 for the primary batch; follow-up batches count up from 1.
    pub batch: u32,
    /// Chain seeds preceding this batch (empty for batch 0).
    pub prefix: Vec<u64>,
    /// Accepted counters of this batch, strictly increasing.
    pub seeds: Vec<u64>,
}

impl Manifest {
    pub fn len(&self) -> usize {
        self.seeds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.seeds.is_empty()
    }

    /// Last accepted counter of the whole chain.
    pub fn last_seed(&self) -> Option<u64> {
        self.seeds.last().or(self.prefix.last()).copied()
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        writeln!(s, "{MANIFEST_HEADER}").unwrap();
        s.push_str(&self.config.to_kv_lines());
        if self.batch > 0 {
            writeln!(s, "batch={}", self.batch).unwrap();
            writeln!(s, "prefix:").unwrap();
            for seed in &self.prefix {
                writeln!(s, "{seed}").unwrap();
            }
        }
        writeln!(s, "seeds:").unwrap();
        for seed in &self.seeds {
            writeln!(s, "{seed}").unwrap();
        }
        s
    }

    pub fn hash_hex(&self) -> String {
        hex::encode(Sha256::digest(self.to_text().as_bytes()))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let bad = |msg: String| Error::Manifest(msg);
        let mut lines = text.lines();
        match lines.next() {
            Some(MANIFEST_HEADER) => {}
            Some(other) if other.starts_with("iqarena-manifest") => {
                return Err(bad(format!("unsupported manifest version line `{other}`")))
            }
            _ => return Err(bad("missing `iqarena-manifest v1` header".into())),
        }
        let mut header = Vec::new();
        let mut batch_value = None;
        let mut section = None;
        for line in lines.by_ref() {
            if line == "seeds:" || line == "prefix:" {
                section = Some(line);
                break;
            }
            header.push(line);
        }
        let mut pairs = split_kv_lines(header.iter().copied()).map_err(|e| bad(e.to_string()))?;
        if let Some(i) = pairs.iter().position(|(k, _)| k == "batch") {
            let (_, v) = pairs.remove(i);
            batch_value = Some(v.parse::<u32>().map_err(|_| bad(format!("bad batch `{v}`")))?);
        }
        let keys: Vec<&str> = pairs.iter().map(|(k, _)| k.as_str()).collect();
        if keys != KEYS {
            return Err(bad(format!("header keys {keys:?} do not match the required order {KEYS:?}")));
        }
        let config = TestConfig::from_pairs(pairs.iter().map(|(k, v)| (k.as_str(), v.as_str())), true)
            .map_err(|e| bad(e.to_string()))?;

        let parse_seed = |l: &str| l.trim().parse::<u64>().map_err(|_| bad(format!("bad seed line `{l}`")));
        let mut prefix = Vec::new();
        match section {
            Some("prefix:") => {
                let mut found_seeds = false;
                for line in lines.by_ref() {
                    if line == "seeds:" {
                        found_seeds = true;
                        break;
                    }
                    prefix.push(parse_seed(line)?);
                }
                if !found_seeds {
                    return Err(bad("missing `seeds:` section".into()));
                }
            }
            Some(_) => {}
            None => return Err(bad("missing `seeds:` section".into())),
        }
        let seeds = lines.filter(|l| !l.trim().is_empty()).map(parse_seed).collect::<Result<Vec<_>>>()?;

        let batch = batch_value.unwrap_or(0);
        if (batch == 0) != prefix.is_empty() {
            return Err(bad("a prefix section is required exactly for follow-up batches".into()));
        }
        if seeds.len() != config.world_count as usize {
            return Err(bad(format!("world_count={} but {} seeds listed", config.world_count, seeds.len())));
        }
        let chain: Vec<u64> = prefix.iter().chain(&seeds).copied().collect();
        if chain.first() == Some(&0) || chain.windows(2).any(|w| w[0] >= w[1]) {
            return Err(bad("seeds must be positive and strictly increasing".into()));
        }
        Ok(Manifest { config, format_version: MANIFEST_VERSION, batch, prefix, seeds })
    }

    /// Tables of this batch, in order.
    pub fn worlds(&self) -> WorldChain<'_> {
        let mut base = generate_world_zero(&self.config);
        for &seed in &self.prefix {
            mutate_in_place(&mut base, seed, &self.config);
        }
        WorldChain { manifest: self, table: base, next: 0 }
    }
}

/// Iterator folding a manifest's seeds over World Zero.
pub struct WorldChain<'a> {
    manifest: &'a Manifest,
    table: ProgramTable,
    next: usize,
}

impl Iterator for WorldChain<'_> {
    type Item = ProgramTable;

    fn next(&mut self) -> Option<ProgramTable> {
        let seed = *self.manifest.seeds.get(self.next)?;
        mutate_in_place(&mut self.table, seed, &self.manifest.config);
        self.next += 1;
        Some(self.table.clone())
    }
}

/// World `i` of the manifest's batch.
pub fn reconstruct_world(manifest: &Manifest, i: usize) -> Result<ProgramTable> {
    if i >= manifest.seeds.len() {
        return Err(Error::WorldIndex { index: i, len: manifest.seeds.len() });
    }
    Ok(manifest.worlds().nth(i).expect("index checked"))
}

/// Extends a chain from `base`, trying counters from `start`, until `count`
/// interesting worlds are found. Returns the accepted seeds and the last
/// accepted world.
pub fn extend_chain(
    cfg: &TestConfig,
    base: ProgramTable,
    start: u64,
    count: usize,
    opts: &BuildOptions,
) -> Result<(Vec<u64>, ProgramTable)> {
    let mut base = base;
    let mut seeds = Vec::with_capacity(count);
    let mut counter = start;
    let mut last_accept = start;
    let window = opts.window.max(1);
    while seeds.len() < count {
        let accepted = match opts.order {
            EvalOrder::Sequential => {
                let candidate = mutate_world(&base, counter, cfg);
                let c = counter;
                counter += 1;
                if passes_filter(&candidate, cfg)? {
                    Some((c, candidate))
                } else {
                    None
                }
            }
            EvalOrder::Reverse | EvalOrder::Parallel => {
                let counters: Vec<u64> = (counter..counter + window).collect();
                let check = |&c: &u64| -> Result<(u64, bool)> {
                    Ok((c, passes_filter(&mutate_world(&base, c, cfg), cfg)?))
                };
                let verdicts: Vec<(u64, bool)> = if opts.order == EvalOrder::Parallel {
                    counters.par_iter().map(check).collect::<Result<_>>()?
                } else {
                    counters.iter().rev().map(check).collect::<Result<_>>()?
                };
                match verdicts.iter().filter(|(_, ok)| *ok).map(|(c, _)| *c).min() {
                    Some(c) => {
                        counter = c + 1;
                        Some((c, mutate_world(&base, c, cfg)))
                    }
                    None => {
                        counter += window;
                        None
                    }
                }
            }
        };
        match accepted {
            Some((c, table)) => {
                seeds.push(c);
                base = table;
                last_accept = c + 1;
            }
            None => {
                let rejections = counter - last_accept;
                if rejections >= opts.give_up_after {
                    return Err(Error::GenerationFailed { counter: counter - 1, rejections });
                }
            }
        }
    }
    Ok((seeds, base))
}

/// Builds a primary manifest of `count` interesting worlds starting from
/// World Zero with counter 1.
pub fn build_manifest(cfg: &TestConfig, count: usize) -> Result<Manifest> {
    build_manifest_with(cfg, count, &BuildOptions::default())
}

pub fn build_manifest_with(cfg: &TestConfig, count: usize, opts: &BuildOptions) -> Result<Manifest> {
    if count == 0 {
        return Err(Error::Precondition("a manifest needs at least one world".into()));
    }
    cfg.validate()?;
    let (seeds, _) = extend_chain(cfg, generate_world_zero(cfg), 1, count, opts)?;
    let mut config = cfg.clone();
    config.world_count = seeds.len() as u32;
    Ok(Manifest { config, format_version: MANIFEST_VERSION, batch: 0, prefix: Vec::new(), seeds })
}
