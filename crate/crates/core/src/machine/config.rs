//! Test parameters and the machine geometry derived from them.

use std::fmt::Write as _;

use num_rational::Ratio;

use crate::error::{Error, Result};
use crate::prng::Probability;

/// Designators `0..=2` of the tape-switch field are relative; globals start here.
pub const FIRST_GLOBAL_TAPE: u32 = 3;
/// Highest tape designator the subprogram command can name.
pub const MAX_TAPE_DESIGNATOR: u32 = 9;
/// Utility symbols appended after the data symbols; the first is the blank.
pub const UTILITY_SYMBOLS: u32 = 10;

/// The numbers a machine needs to run: alphabet layout, channel widths,
/// state count and the per-move step budget.
///
/// Deliberately looser than [`TestConfig`]: tests build tiny machines with
/// only a handful of states and symbols.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Geometry {
    pub n: usize,
    pub m: usize,
    /// Channel widths: `k[0..n]` for actions, `k[n..n+m]` for observations.
    pub k: Vec<u32>,
    pub num_states: u32,
    pub max_symbols: u32,
    pub global_tape_count: u32,
    pub steps_per_move: u32,
}

impl Geometry {
    pub fn new(
        n: usize,
        m: usize,
        k: Vec<u32>,
        num_states: u32,
        max_symbols: u32,
        global_tape_count: u32,
        steps_per_move: u32,
    ) -> Result<Self> {
        let g = Geometry { n, m, k, num_states, max_symbols, global_tape_count, steps_per_move };
        g.validate()?;
        Ok(g)
    }

    fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.n == 0 || self.m == 0 {
            return bad(format!("need n >= 1 and m >= 1, got n={} m={}", self.n, self.m));
        }
        if self.k.len() != self.n + self.m {
            return bad(format!("k has {} entries, expected n+m = {}", self.k.len(), self.n + self.m));
        }
        if let Some(w) = self.k.iter().find(|&&w| w < 2) {
            return bad(format!("every channel width must be >= 2, found {w}"));
        }
        if self.max_symbols <= self.max_k() {
            return bad(format!(
                "max_symbols={} leaves no room for the blank after {} data symbols",
                self.max_symbols,
                self.max_k()
            ));
        }
        if self.max_symbols > u16::MAX as u32 + 1 {
            return bad(format!("max_symbols={} exceeds 65536", self.max_symbols));
        }
        if (self.num_states as usize) < self.m + 1 {
            return bad(format!("num_states={} < m+1={}", self.num_states, self.m + 1));
        }
        if self.global_tape_count == 0
            || self.global_tape_count > MAX_TAPE_DESIGNATOR - FIRST_GLOBAL_TAPE + 1
        {
            return bad(format!("global_tape_count={} not in 1..=7", self.global_tape_count));
        }
        if self.steps_per_move == 0 {
            return bad("steps_per_move must be >= 1".into());
        }
        Ok(())
    }

    pub fn max_k(&self) -> u32 {
        self.k.iter().copied().max().unwrap_or(0)
    }

    /// Index of the blank symbol: the first utility symbol.
    pub fn blank(&self) -> u16 {
        self.max_k() as u16
    }

    /// State `m+1`: where every move starts and ends.
    pub fn final_state(&self) -> u32 {
        self.m as u32 + 1
    }

    pub fn action_widths(&self) -> &[u32] {
        &self.k[..self.n]
    }

    pub fn observation_widths(&self) -> &[u32] {
        &self.k[self.n..]
    }

    /// Highest tape designator valid for this geometry.
    pub fn max_tape_designator(&self) -> u32 {
        FIRST_GLOBAL_TAPE + self.global_tape_count - 1
    }

    /// Size of the action space, `prod k[i]` over the action channels.
    pub fn action_space(&self) -> u64 {
        self.action_widths().iter().map(|&w| w as u64).product()
    }
}

/// The full parameter set of a test.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TestConfig {
    pub n: usize,
    pub m: usize,
    pub k: Vec<u32>,
    pub num_states: u32,
    pub global_tape_count: u32,
    pub max_symbols: u32,
    pub steps_per_move: u32,
    pub moves_per_game: u32,
    pub games_per_life: u32,
    pub gen_p: Probability,
    pub iq_threshold: Ratio<u64>,
    pub world_count: u32,
}

impl TestConfig {
    /// All limits at 1000 with the generation probability 1/10 and
    /// threshold 7/10, for the given channel layout.
    pub fn full(n: usize, m: usize, k: Vec<u32>) -> Result<Self> {
        let max_symbols = UTILITY_SYMBOLS + k.iter().copied().max().unwrap_or(0);
        let cfg = TestConfig {
            n,
            m,
            k,
            num_states: 1000,
            global_tape_count: 7,
            max_symbols,
            steps_per_move: 1000,
            moves_per_game: 1000,
            games_per_life: 1000,
            gen_p: Probability::new(1, 10)?,
            iq_threshold: Ratio::new(7, 10),
            world_count: 1000,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Scaled-down configuration: n=1, m=2, k=(4,5,4), 20 worlds,
    /// 50 games per life, 100 moves per game.
    pub fn desk() -> Self {
        let mut cfg = TestConfig::full(1, 2, vec![4, 5, 4]).expect("desk layout is valid");
        cfg.world_count = 20;
        cfg.games_per_life = 50;
        cfg.moves_per_game = 100;
        cfg
    }

    pub fn validate(&self) -> Result<()> {
        self.geometry_unchecked().validate()?;
        let bad = |msg: String| Err(Error::Config(msg));
        if self.k[self.n] != 5 {
            return bad(format!("the reward channel must have width 5, got {}", self.k[self.n]));
        }
        let expected = UTILITY_SYMBOLS + self.geometry_unchecked().max_k();
        if self.max_symbols != expected {
            return bad(format!("max_symbols must be 10 + max k = {expected}, got {}", self.max_symbols));
        }
        if self.num_states > u16::MAX as u32 {
            return bad(format!("num_states={} exceeds 65535", self.num_states));
        }
        if self.moves_per_game == 0 || self.games_per_life == 0 || self.world_count == 0 {
            return bad("moves_per_game, games_per_life, world_count must be >= 1".into());
        }
        if self.gen_p.is_zero() {
            return bad("gen_p must be positive".into());
        }
        if *self.iq_threshold.numer() > *self.iq_threshold.denom() {
            return bad(format!("iq_threshold {} exceeds 1", self.iq_threshold));
        }
        Ok(())
    }

    fn geometry_unchecked(&self) -> Geometry {
        Geometry {
            n: self.n,
            m: self.m,
            k: self.k.clone(),
            num_states: self.num_states,
            max_symbols: self.max_symbols,
            global_tape_count: self.global_tape_count,
            steps_per_move: self.steps_per_move,
        }
    }

    pub fn geometry(&self) -> Geometry {
        self.geometry_unchecked()
    }

    /// `key=value` lines in the fixed key order shared by config files and
    /// manifest headers.
    pub fn to_kv_lines(&self) -> String {
        let mut s = String::new();
        let k: Vec<String> = self.k.iter().map(u32::to_string).collect();
        writeln!(s, "n={}", self.n).unwrap();
        writeln!(s, "m={}", self.m).unwrap();
        writeln!(s, "k={}", k.join(",")).unwrap();
        writeln!(s, "num_states={}", self.num_states).unwrap();
        writeln!(s, "global_tape_count={}", self.global_tape_count).unwrap();
        writeln!(s, "max_symbols={}", self.max_symbols).unwrap();
        writeln!(s, "steps_per_move={}", self.steps_per_move).unwrap();
        writeln!(s, "moves_per_game={}", self.moves_per_game).unwrap();
        writeln!(s, "games_per_life={}", self.games_per_life).unwrap();
        writeln!(s, "gen_p={}", self.gen_p).unwrap();
        writeln!(s, "iq_threshold={}/{}", self.iq_threshold.numer(), self.iq_threshold.denom()).unwrap();
        writeln!(s, "world_count={}", self.world_count).unwrap();
        s
    }

    /// Builds a config from parsed `(key, value)` pairs.
    ///
    /// With `strict`, every key must be present (manifest headers). Otherwise
    /// missing limits fall back to the full-scale defaults and a missing
    /// `max_symbols` is derived from `k` (config files).
    pub fn from_pairs<'a, I>(pairs: I, strict: bool) -> Result<Self>
    where
        I: IntoIterator<Item = (&'a str, &'a str)>,
    {
        let mut map = std::collections::BTreeMap::new();
        for (key, value) in pairs {
            if !KEYS.contains(&key) {
                return Err(Error::Config(format!("unknown key `{key}`")));
            }
            if map.insert(key, value).is_some() {
                return Err(Error::Config(format!("duplicate key `{key}`")));
            }
        }
        if strict {
            if let Some(missing) = KEYS.iter().find(|k| !map.contains_key(*k)) {
                return Err(Error::Config(format!("missing key `{missing}`")));
            }
        }
        let req = |key: &str| {
            map.get(key).copied().ok_or_else(|| Error::Config(format!("missing key `{key}`")))
        };
        let n: usize = parse_num(req("n")?, "n")?;
        let m: usize = parse_num(req("m")?, "m")?;
        let k = req("k")?
            .split(',')
            .map(|v| parse_num::<u32>(v.trim(), "k"))
            .collect::<Result<Vec<_>>>()?;
        let mut cfg = TestConfig::full_unchecked(n, m, k);
        if let Some(v) = map.get("num_states") {
            cfg.num_states = parse_num(v, "num_states")?;
        }
        if let Some(v) = map.get("global_tape_count") {
            cfg.global_tape_count = parse_num(v, "global_tape_count")?;
        }
        if let Some(v) = map.get("max_symbols") {
            cfg.max_symbols = parse_num(v, "max_symbols")?;
        }
        if let Some(v) = map.get("steps_per_move") {
            cfg.steps_per_move = parse_num(v, "steps_per_move")?;
        }
        if let Some(v) = map.get("moves_per_game") {
            cfg.moves_per_game = parse_num(v, "moves_per_game")?;
        }
        if let Some(v) = map.get("games_per_life") {
            cfg.games_per_life = parse_num(v, "games_per_life")?;
        }
        if let Some(v) = map.get("gen_p") {
            let (a, b) = parse_fraction(v, "gen_p")?;
            cfg.gen_p = Probability::new(a, b)?;
        }
        if let Some(v) = map.get("iq_threshold") {
            let (a, b) = parse_fraction(v, "iq_threshold")?;
            cfg.iq_threshold = Ratio::new(a, b);
        }
        if let Some(v) = map.get("world_count") {
            cfg.world_count = parse_num(v, "world_count")?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn full_unchecked(n: usize, m: usize, k: Vec<u32>) -> Self {
        let max_symbols = UTILITY_SYMBOLS + k.iter().copied().max().unwrap_or(0);
        TestConfig {
            n,
            m,
            k,
            num_states: 1000,
            global_tape_count: 7,
            max_symbols,
            steps_per_move: 1000,
            moves_per_game: 1000,
            games_per_life: 1000,
            gen_p: Probability::new(1, 10).unwrap(),
            iq_threshold: Ratio::new(7, 10),
            world_count: 1000,
        }
    }

    /// Parses a config file: `key=value` lines, blank lines and `#` comments
    /// ignored, an optional leading manifest version line tolerated.
    pub fn parse_config_file(text: &str) -> Result<Self> {
        let pairs = split_kv_lines(text.lines().filter(|l| {
            let t = l.trim();
            !t.is_empty() && !t.starts_with('#') && !t.starts_with("iqarena-manifest")
        }))?;
        TestConfig::from_pairs(pairs.iter().map(|(k, v)| (k.as_str(), v.as_str())), false)
    }
}

pub(crate) const KEYS: [&str; 12] = [
    "n",
    "m",
    "k",
    "num_states",
    "global_tape_count",
    "max_symbols",
    "steps_per_move",
    "moves_per_game",
    "games_per_life",
    "gen_p",
    "iq_threshold",
    "world_count",
];

pub(crate) fn split_kv_lines<'a, I>(lines: I) -> Result<Vec<(String, String)>>
where
    I: IntoIterator<Item = &'a str>,
{
    lines
        .into_iter()
        .map(|line| {
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("expected key=value, got `{line}`")))?;
            Ok((k.trim().to_string(), v.trim().to_string()))
        })
        .collect()
}

fn parse_num<T: std::str::FromStr>(v: &str, key: &str) -> Result<T> {
    v.parse().map_err(|_| Error::Config(format!("bad value `{v}` for `{key}`")))
}

/// Accepts `a/b` or a plain decimal such as `0.7`.
fn parse_fraction(v: &str, key: &str) -> Result<(u64, u64)> {
    let err = || Error::Config(format!("bad fraction `{v}` for `{key}`"));
    if let Some((a, b)) = v.split_once('/') {
        let a = a.trim().parse().map_err(|_| err())?;
        let b = b.trim().parse().map_err(|_| err())?;
        if b == 0 {
            return Err(err());
        }
        return Ok((a, b));
    }
    let (int, frac) = v.split_once('.').unwrap_or((v, ""));
    if frac.len() > 18 || !frac.bytes().all(|c| c.is_ascii_digit()) {
        return Err(err());
    }
    let den = 10u64.pow(frac.len() as u32);
    let int: u64 = int.parse().map_err(|_| err())?;
    let frac_v: u64 = if frac.is_empty() { 0 } else { frac.parse().map_err(|_| err())? };
    let num = int.checked_mul(den).and_then(|x| x.checked_add(frac_v)).ok_or_else(err)?;
    let r = Ratio::new(num, den);
    Ok((*r.numer(), *r.denom()))
}
