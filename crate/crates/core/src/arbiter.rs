//! The life loop: one strategy, one world, a fixed number of games.
//!
//! A step is any action attempt; a moment ends with the first correct
//! attempt. Incorrect attempts roll the machine back to the start of the
//! moment, so the world only ever sees real life.

use std::sync::Arc;

use num_rational::Ratio;

use crate::error::Result;
use crate::machine::{
    execute_move_with, Geometry, MachineState, MoveOutcome, ObservationCapture, ProgramTable,
    TestConfig,
};
use crate::strategy::{Action, ActionSpace, Disqualification, Percept, Strategy};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GameKind {
    Victory,
    Loss,
    Draw,
    /// The game ran a full block of moves without a final reward.
    UtilityDraw,
    /// Each further block without a final reward.
    UtilityLoss,
    /// Scored after a blind alley or disqualification.
    DeathLoss,
}

impl GameKind {
    /// Score in half points: victory 2, draws 1, losses 0.
    pub fn half_points(self) -> u64 {
        match self {
            GameKind::Victory => 2,
            GameKind::Draw | GameKind::UtilityDraw => 1,
            GameKind::Loss | GameKind::UtilityLoss | GameKind::DeathLoss => 0,
        }
    }

    pub fn score(self) -> Ratio<u64> {
        Ratio::new(self.half_points(), 2)
    }
}

/// Running counts of game results.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Tally {
    pub victories: u32,
    pub losses: u32,
    pub draws: u32,
    pub utility_draws: u32,
    pub utility_losses: u32,
    pub death_losses: u32,
}

impl Tally {
    fn add(&mut self, kind: GameKind) {
        match kind {
            GameKind::Victory => self.victories += 1,
            GameKind::Loss => self.losses += 1,
            GameKind::Draw => self.draws += 1,
            GameKind::UtilityDraw => self.utility_draws += 1,
            GameKind::UtilityLoss => self.utility_losses += 1,
            GameKind::DeathLoss => self.death_losses += 1,
        }
    }

    pub fn total(&self) -> u32 {
        self.victories + self.losses + self.draws + self.utility_draws + self.utility_losses + self.death_losses
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LifeRecord {
    /// Exactly `games_per_life` results.
    pub results: Vec<GameKind>,
    /// Action attempts, incorrect ones included.
    pub steps: u64,
    /// Correct moves.
    pub moments: u64,
    /// Machine steps spent, including those of rolled-back moves.
    pub machine_steps: u64,
    pub blind_alley: bool,
    pub disqualified: bool,
    pub disqualification: Option<Disqualification>,
}

impl LifeRecord {
    pub fn tally(&self) -> Tally {
        let mut t = Tally::default();
        self.results.iter().for_each(|&k| t.add(k));
        t
    }

    pub fn success(&self) -> Ratio<u64> {
        score_life(self)
    }
}

/// Mean game score of a life, exact.
pub fn score_life(record: &LifeRecord) -> Ratio<u64> {
    let half: u64 = record.results.iter().map(|k| k.half_points()).sum();
    Ratio::new(half, 2 * record.results.len().max(1) as u64)
}

/// One action attempt, as seen by an observer.
#[derive(Clone, Debug)]
pub struct Attempt<'a> {
    pub game: usize,
    pub moment: u64,
    pub action: &'a [u32],
    pub outcome: &'a MoveOutcome,
    pub machine_steps: u32,
    /// Reward handed to the strategy for this attempt.
    pub delivered_reward: u32,
    /// Result recorded by this attempt, if any.
    pub result: Option<GameKind>,
}

/// Hooks into a running life. Both methods default to no-ops.
pub trait LifeObserver {
    fn on_attempt(&mut self, _attempt: &Attempt<'_>, _state: &MachineState) {}

    /// Checked after every recorded game; `true` abandons the life.
    fn should_stop(&mut self, _tally: &Tally) -> bool {
        false
    }
}

pub struct NoObserver;

impl LifeObserver for NoObserver {}

/// Result of [`run_life_with`]: the record plus the tally at the moment the
/// life ended or was abandoned.
#[derive(Clone, Debug)]
pub struct LifeRun {
    pub record: LifeRecord,
    /// Counts before padding; equal to `record.tally()` unless stopped early.
    pub tally: Tally,
    pub stopped_early: bool,
}

/// Lives one life of `strategy` in `table` from a fresh machine.
pub fn run_life(table: &ProgramTable, strategy: &mut dyn Strategy, cfg: &TestConfig) -> Result<LifeRecord> {
    let geometry = Arc::new(cfg.geometry());
    Ok(run_life_with(table, strategy, cfg, geometry, &mut NoObserver)?.record)
}

pub fn run_life_with(
    table: &ProgramTable,
    strategy: &mut dyn Strategy,
    cfg: &TestConfig,
    geometry: Arc<Geometry>,
    observer: &mut dyn LifeObserver,
) -> Result<LifeRun> {
    let out = life_loop(table, strategy, cfg, geometry, observer);
    strategy.end_life();
    out
}

fn life_loop(
    table: &ProgramTable,
    strategy: &mut dyn Strategy,
    cfg: &TestConfig,
    geometry: Arc<Geometry>,
    observer: &mut dyn LifeObserver,
) -> Result<LifeRun> {
    let games = cfg.games_per_life as usize;
    let m = geometry.m;
    let space = ActionSpace::new(geometry.action_widths());
    let space_len = space.len();

    let mut state = MachineState::initial(geometry);
    let mut capture = ObservationCapture::new(m);
    let mut percept = Percept::initial(m);
    let mut results: Vec<GameKind> = Vec::with_capacity(games);
    let mut tally = Tally::default();

    let mut steps = 0u64;
    let mut moments = 0u64;
    let mut machine_steps = 0u64;
    let mut game_moments = 0u32;
    let mut utility_given = false;
    let mut blind_alley = false;
    let mut disqualification = None;
    let mut stopped_early = false;
    let mut snapshot = None;

    while results.len() < games {
        let action: Action = match strategy.act(&percept) {
            Ok(a) if !space.contains(&a) => {
                disqualification = Some(Disqualification::OutOfRange(a));
                break;
            }
            Ok(a) if percept.incorrect.contains(&a) => {
                disqualification = Some(Disqualification::RepeatedIncorrect(a));
                break;
            }
            Ok(a) => a,
            Err(d) => {
                disqualification = Some(d);
                break;
            }
        };

        // The state only changes on a correct move, so one snapshot per moment suffices.
        if percept.incorrect.is_empty() {
            snapshot = Some(state.snapshot());
        }
        let report = execute_move_with(table, &mut state, &action, &mut capture)?;
        steps += 1;
        machine_steps += report.steps as u64;

        match &report.outcome {
            MoveOutcome::Incorrect(_) => {
                state.restore(snapshot.as_ref().expect("snapshot taken at moment start"))?;
                observer.on_attempt(
                    &Attempt {
                        game: results.len(),
                        moment: moments,
                        action: &action,
                        outcome: &report.outcome,
                        machine_steps: report.steps,
                        delivered_reward: 4,
                        result: None,
                    },
                    &state,
                );
                let mut incorrect = std::mem::take(&mut percept.incorrect);
                incorrect.push(action);
                if incorrect.len() as u64 >= space_len {
                    blind_alley = true;
                    break;
                }
                percept = Percept { reward: 4, observation: vec![0; m - 1], incorrect };
            }
            MoveOutcome::Completed { observation } => {
                moments += 1;
                game_moments += 1;
                let (delivered, result) = match observation[0] {
                    1 => (1, Some(GameKind::Victory)),
                    2 => (2, Some(GameKind::Loss)),
                    3 => (3, Some(GameKind::Draw)),
                    _ if game_moments >= cfg.moves_per_game => {
                        if utility_given {
                            (2, Some(GameKind::UtilityLoss))
                        } else {
                            (3, Some(GameKind::UtilityDraw))
                        }
                    }
                    _ => (0, None),
                };
                if let Some(kind) = result {
                    match kind {
                        GameKind::UtilityDraw | GameKind::UtilityLoss => utility_given = true,
                        _ => utility_given = false,
                    }
                    game_moments = 0;
                    results.push(kind);
                    tally.add(kind);
                }
                observer.on_attempt(
                    &Attempt {
                        game: results.len() - result.is_some() as usize,
                        moment: moments - 1,
                        action: &action,
                        outcome: &report.outcome,
                        machine_steps: report.steps,
                        delivered_reward: delivered,
                        result,
                    },
                    &state,
                );
                percept = Percept { reward: delivered, observation: observation[1..].to_vec(), incorrect: Vec::new() };
                if result.is_some() && observer.should_stop(&tally) {
                    stopped_early = true;
                    break;
                }
            }
        }
    }

    // Also pads an abandoned life, whose record is then only good for its tally.
    results.resize(games, GameKind::DeathLoss);
    let disqualified = disqualification.is_some();
    Ok(LifeRun {
        record: LifeRecord { results, steps, moments, machine_steps, blind_alley, disqualified, disqualification },
        tally,
        stopped_early,
    })
}
