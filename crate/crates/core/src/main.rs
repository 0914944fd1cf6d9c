use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use iqarena::arbiter::{run_life_with, Attempt, LifeObserver};
use iqarena::harness::{followup_batch, local_iq, StrategySpec};
use iqarena::machine::{MachineState, MoveOutcome, TestConfig};
use iqarena::strategy::{format_action, DEFAULT_STEP_TIMEOUT_MS};
use iqarena::worldgen::{build_manifest, reconstruct_world, Manifest};

#[derive(Parser)]
#[command(name = "iqarena", version, about = "Local IQ of a strategy over fixed random Turing-machine worlds")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Build a manifest of interesting worlds.
    Gen {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        count: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compute the Local IQ of a strategy.
    Eval {
        #[arg(long)]
        manifest: PathBuf,
        #[command(flatten)]
        strategy: StrategyArgs,
        #[arg(long, default_value_t = DEFAULT_STEP_TIMEOUT_MS)]
        timeout_ms: u64,
        /// Evaluate follow-up batch `b` instead of the manifest's own worlds.
        #[arg(long)]
        batch: Option<u32>,
        #[arg(long)]
        report: PathBuf,
    },
    /// Look at one world of a manifest.
    Inspect {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        world: usize,
        #[arg(long, conflicts_with_all = ["dump", "replay"])]
        hash: bool,
        #[arg(long, conflicts_with = "replay")]
        dump: bool,
        #[arg(long)]
        replay: bool,
        #[command(flatten)]
        strategy: StrategyArgs,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Builtin {
    Random,
}

#[derive(Args)]
struct StrategyArgs {
    #[arg(long, value_enum, conflicts_with = "exec")]
    builtin: Option<Builtin>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Command line of an external candidate.
    #[arg(long)]
    exec: Option<String>,
}

impl StrategyArgs {
    fn spec(&self, timeout_ms: u64) -> anyhow::Result<StrategySpec> {
        match (&self.builtin, &self.exec) {
            (Some(Builtin::Random), None) => Ok(StrategySpec::Random { seed: self.seed }),
            (None, Some(cmd)) => Ok(StrategySpec::External { command: cmd.clone(), timeout_ms }),
            _ => bail!("choose a strategy with --builtin random or --exec"),
        }
    }
}

fn read_manifest(path: &PathBuf) -> anyhow::Result<Manifest> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(Manifest::parse(&text)?)
}

/// Prints one line per attempt.
struct Trace;

impl LifeObserver for Trace {
    fn on_attempt(&mut self, a: &Attempt<'_>, state: &MachineState) {
        let outcome = match a.outcome {
            MoveOutcome::Completed { observation } => format!("ok obs={}", format_action(observation)),
            MoveOutcome::Incorrect(cause) => format!("incorrect {cause:?}"),
        };
        let result = a.result.map(|r| format!(" result={r:?}")).unwrap_or_default();
        println!(
            "game={} moment={} action={} steps={} {} reward={}{} state={}",
            a.game,
            a.moment,
            format_action(a.action),
            a.machine_steps,
            outcome,
            a.delivered_reward,
            result,
            &state.hash_hex()[..16]
        );
    }
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Cmd::Gen { config, count, out } => {
            let text = std::fs::read_to_string(&config).with_context(|| format!("reading {}", config.display()))?;
            let cfg = TestConfig::parse_config_file(&text)?;
            let count = count.unwrap_or(cfg.world_count as usize);
            let manifest = build_manifest(&cfg, count)?;
            std::fs::write(&out, manifest.to_text()).with_context(|| format!("writing {}", out.display()))?;
            eprintln!("{} worlds, last seed {}", manifest.len(), manifest.last_seed().unwrap_or(0));
        }
        Cmd::Eval { manifest, strategy, timeout_ms, batch, report } => {
            let mut manifest = read_manifest(&manifest)?;
            match batch {
                Some(b) if b < manifest.batch => bail!("manifest is already at batch {}", manifest.batch),
                Some(b) if b > manifest.batch => manifest = followup_batch(&manifest, b, manifest.len())?,
                _ => {}
            }
            let rep = local_iq(&manifest, &strategy.spec(timeout_ms)?)?;
            std::fs::write(&report, rep.to_text()).with_context(|| format!("writing {}", report.display()))?;
            let last = rep.to_text().lines().rev().take(2).collect::<Vec<_>>().join(" ");
            println!("{last}");
            if rep.disqualification_dominated() {
                return Ok(ExitCode::from(2));
            }
        }
        Cmd::Inspect { manifest, world, hash, dump, replay, strategy } => {
            let manifest = read_manifest(&manifest)?;
            let table = reconstruct_world(&manifest, world)?;
            if replay {
                let cfg = &manifest.config;
                let mut s = strategy.spec(DEFAULT_STEP_TIMEOUT_MS)?.instantiate(cfg)?;
                let run = run_life_with(&table, s.as_mut(), cfg, Arc::new(cfg.geometry()), &mut Trace)?;
                let r = &run.record;
                println!(
                    "success={}/{} steps={} moments={} blind_alley={} disqualified={}",
                    r.success().numer(),
                    r.success().denom(),
                    r.steps,
                    r.moments,
                    r.blind_alley,
                    r.disqualified
                );
            } else if dump {
                print!("{}", table.dump());
            } else if hash {
                println!("{}", table.hash_hex());
            } else {
                bail!("choose one of --hash, --dump or --replay");
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
