//! The device side of a life: what a strategy sees, what it answers, the
//! seeded random strategy, and an adapter for candidate programs that speak
//! the line protocol over standard input and output.
//!
//! Protocol, one line per message:
//!
//! ```text
//! engine -> child  INIT n=<n> m=<m> k=<k1,...,kn+m> games=<G> moves=<M>
//! engine -> child  STEP reward=<r> obs=<v2,...,vm> bad=<a;b;c>
//! child -> engine  ACT <x1,...,xn>
//! engine -> child  END
//! ```

use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread;
use std::time::Duration;

use crate::error::{Error, Result};
use crate::machine::TestConfig;
use crate::prng::{uniform_below, Generator};

pub type Action = Vec<u32>;

pub const DEFAULT_STEP_TIMEOUT_MS: u64 = 1000;

/// What the strategy receives before choosing its next action.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Percept {
    /// 0 nothing, 1 victory, 2 loss, 3 draw, 4 incorrect move.
    pub reward: u32,
    /// Observation channels `2..=m`.
    pub observation: Vec<u32>,
    /// Actions already confirmed incorrect at this moment, in the order tried.
    pub incorrect: Vec<Action>,
}

impl Percept {
    /// The percept of the first moment: everything is "nothing".
    pub fn initial(m: usize) -> Self {
        Percept { reward: 0, observation: vec![0; m - 1], incorrect: Vec::new() }
    }
}

/// Why a strategy was thrown out of a life.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Disqualification {
    /// Proposed an action already confirmed incorrect at this moment.
    RepeatedIncorrect(Action),
    OutOfRange(Action),
    Protocol(String),
    Timeout,
}

impl std::fmt::Display for Disqualification {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Disqualification::RepeatedIncorrect(a) => write!(f, "repeated incorrect action {}", format_action(a)),
            Disqualification::OutOfRange(a) => write!(f, "action {a:?} outside the action space"),
            Disqualification::Protocol(msg) => write!(f, "protocol violation: {msg}"),
            Disqualification::Timeout => write!(f, "step timeout"),
        }
    }
}

/// A device. Implementations must be deterministic: equal percept histories
/// must produce equal actions.
pub trait Strategy {
    fn act(&mut self, percept: &Percept) -> Result<Action, Disqualification>;

    /// Called once when the life is over, however it ended.
    fn end_life(&mut self) {}
}

/// Lexicographic enumeration of the action space, first channel most
/// significant.
#[derive(Clone, Debug)]
pub struct ActionSpace {
    widths: Vec<u32>,
}

impl ActionSpace {
    pub fn new(widths: &[u32]) -> Self {
        ActionSpace { widths: widths.to_vec() }
    }

    pub fn of(cfg: &TestConfig) -> Self {
        ActionSpace::new(&cfg.k[..cfg.n])
    }

    pub fn len(&self) -> u64 {
        self.widths.iter().map(|&w| w as u64).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, action: &[u32]) -> bool {
        action.len() == self.widths.len() && action.iter().zip(&self.widths).all(|(a, w)| a < w)
    }

    pub fn index_of(&self, action: &[u32]) -> u64 {
        action.iter().zip(&self.widths).fold(0, |acc, (&a, &w)| acc * w as u64 + a as u64)
    }

    pub fn action_at(&self, mut index: u64) -> Action {
        let mut out = vec![0; self.widths.len()];
        for (slot, &w) in out.iter_mut().zip(&self.widths).rev() {
            *slot = (index % w as u64) as u32;
            index /= w as u64;
        }
        out
    }
}

/// Picks uniformly among the actions not yet confirmed incorrect.
#[derive(Clone, Debug)]
pub struct RandomStrategy {
    gen: Generator,
    space: ActionSpace,
}

impl RandomStrategy {
    pub fn new(seed: u64, cfg: &TestConfig) -> Self {
        RandomStrategy { gen: Generator::seed(seed), space: ActionSpace::of(cfg) }
    }

    pub fn with_space(seed: u64, space: ActionSpace) -> Self {
        RandomStrategy { gen: Generator::seed(seed), space }
    }
}

impl Strategy for RandomStrategy {
    fn act(&mut self, percept: &Percept) -> Result<Action, Disqualification> {
        let mut bad: Vec<u64> = percept.incorrect.iter().map(|a| self.space.index_of(a)).collect();
        bad.sort_unstable();
        bad.dedup();
        let remaining = self.space.len() - bad.len() as u64;
        let mut pick = uniform_below(&mut self.gen, remaining);
        // Shift past every excluded index at or below the pick.
        for &b in &bad {
            if b <= pick {
                pick += 1;
            } else {
                break;
            }
        }
        Ok(self.space.action_at(pick))
    }
}

pub fn format_action(action: &[u32]) -> String {
    action.iter().map(u32::to_string).collect::<Vec<_>>().join(",")
}

fn parse_list(text: &str) -> Option<Vec<u32>> {
    if text.is_empty() {
        return Some(Vec::new());
    }
    text.split(',').map(|v| v.parse().ok()).collect()
}

pub fn format_init(cfg: &TestConfig) -> String {
    format!(
        "INIT n={} m={} k={} games={} moves={}",
        cfg.n,
        cfg.m,
        format_action(&cfg.k),
        cfg.games_per_life,
        cfg.moves_per_game
    )
}

pub fn format_step(percept: &Percept) -> String {
    let bad: Vec<String> = percept.incorrect.iter().map(|a| format_action(a)).collect();
    format!("STEP reward={} obs={} bad={}", percept.reward, format_action(&percept.observation), bad.join(";"))
}

/// Parses a `STEP` line for a layout with `n` action and `m` observation
/// channels.
pub fn parse_step(line: &str, n: usize, m: usize) -> Option<Percept> {
    let rest = line.strip_prefix("STEP ")?;
    let mut parts = rest.split(' ');
    let reward = parts.next()?.strip_prefix("reward=")?.parse().ok()?;
    let observation = parse_list(parts.next()?.strip_prefix("obs=")?)?;
    let bad = parts.next()?.strip_prefix("bad=")?;
    if parts.next().is_some() || observation.len() != m - 1 {
        return None;
    }
    let incorrect = if bad.is_empty() {
        Vec::new()
    } else {
        bad.split(';').map(parse_list).collect::<Option<Vec<_>>>()?
    };
    if incorrect.iter().any(|a| a.len() != n) {
        return None;
    }
    Some(Percept { reward, observation, incorrect })
}

pub fn format_act(action: &[u32]) -> String {
    format!("ACT {}", format_action(action))
}

pub fn parse_act(line: &str, n: usize) -> Option<Action> {
    let action = parse_list(line.strip_prefix("ACT ")?.trim_end())?;
    (action.len() == n).then_some(action)
}

/// A candidate program running as a child process.
pub struct ExternalStrategy {
    child: Child,
    stdin: Option<ChildStdin>,
    lines: Receiver<std::io::Result<String>>,
    timeout: Duration,
    n: usize,
    finished: bool,
}

impl ExternalStrategy {
    /// Launches `command_line` and sends `INIT`. Plain `prog arg ...` lines
    /// run directly so a missing program fails here; anything with shell
    /// syntax goes through `sh -c`.
    pub fn spawn(command_line: &str, step_timeout_ms: u64, cfg: &TestConfig) -> Result<Self> {
        let mut child = command_for(command_line)?
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| Error::Strategy(format!("cannot start `{command_line}`: {e}")))?;
        let stdout = child.stdout.take().expect("piped stdout");
        let stdin = child.stdin.take().expect("piped stdin");
        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                let stop = line.is_err();
                if tx.send(line).is_err() || stop {
                    break;
                }
            }
        });
        let mut s = ExternalStrategy {
            child,
            stdin: Some(stdin),
            lines: rx,
            timeout: Duration::from_millis(step_timeout_ms),
            n: cfg.n,
            finished: false,
        };
        s.send(&format_init(cfg)).map_err(|e| Error::Strategy(format!("cannot send INIT: {e}")))?;
        Ok(s)
    }

    fn send(&mut self, line: &str) -> std::io::Result<()> {
        let stdin = self.stdin.as_mut().ok_or(std::io::ErrorKind::BrokenPipe)?;
        writeln!(stdin, "{line}")?;
        stdin.flush()
    }

    fn shutdown(&mut self) {
        if self.finished {
            return;
        }
        self.finished = true;
        let _ = self.send("END");
        self.stdin.take();
        for _ in 0..50 {
            if let Ok(Some(_)) = self.child.try_wait() {
                return;
            }
            thread::sleep(Duration::from_millis(2));
        }
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

fn command_for(line: &str) -> Result<Command> {
    const SHELL_CHARS: &str = "|&;<>()$`\\\"'*?[]#~%{}!=\n";
    if line.chars().any(|c| SHELL_CHARS.contains(c)) {
        let mut cmd = Command::new("sh");
        cmd.arg("-c").arg(line);
        return Ok(cmd);
    }
    let mut words = line.split_whitespace();
    let program = words.next().ok_or_else(|| Error::Strategy("empty command".into()))?;
    let mut cmd = Command::new(program);
    cmd.args(words);
    Ok(cmd)
}

impl Strategy for ExternalStrategy {
    fn act(&mut self, percept: &Percept) -> Result<Action, Disqualification> {
        self.send(&format_step(percept)).map_err(|e| Disqualification::Protocol(format!("write failed: {e}")))?;
        let line = match self.lines.recv_timeout(self.timeout) {
            Ok(Ok(line)) => line,
            Ok(Err(e)) => return Err(Disqualification::Protocol(format!("read failed: {e}"))),
            Err(RecvTimeoutError::Timeout) => return Err(Disqualification::Timeout),
            Err(RecvTimeoutError::Disconnected) => {
                return Err(Disqualification::Protocol("child closed its output".into()))
            }
        };
        let action = parse_act(&line, self.n)
            .ok_or_else(|| Disqualification::Protocol(format!("unexpected reply `{line}`")))?;
        Ok(action)
    }

    fn end_life(&mut self) {
        self.shutdown();
    }
}

impl Drop for ExternalStrategy {
    fn drop(&mut self) {
        if !self.finished {
            self.finished = true;
            self.stdin.take();
            let _ = self.child.kill();
            let _ = self.child.wait();
        }
    }
}
