//! Local IQ over a manifest, the verdict, follow-up batches and reports.

use std::fmt::Write as _;
use std::sync::Arc;

use num_rational::Ratio;
use rayon::prelude::*;

use crate::arbiter::{run_life_with, LifeRecord, NoObserver, Tally};
use crate::error::{Error, Result};
use crate::machine::TestConfig;
use crate::strategy::{ExternalStrategy, RandomStrategy, Strategy, DEFAULT_STEP_TIMEOUT_MS};
use crate::worldgen::{extend_chain, BuildOptions, Manifest, MANIFEST_VERSION};

/// How to obtain a fresh candidate for each life.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StrategySpec {
    /// The built-in random strategy; every life starts from the same seed.
    Random { seed: u64 },
    /// A child process per life.
    External { command: String, timeout_ms: u64 },
}

impl StrategySpec {
    pub fn external(command: impl Into<String>) -> Self {
        StrategySpec::External { command: command.into(), timeout_ms: DEFAULT_STEP_TIMEOUT_MS }
    }

    pub fn instantiate(&self, cfg: &TestConfig) -> Result<Box<dyn Strategy>> {
        Ok(match self {
            StrategySpec::Random { seed } => Box::new(RandomStrategy::new(*seed, cfg)),
            StrategySpec::External { command, timeout_ms } => {
                Box::new(ExternalStrategy::spawn(command, *timeout_ms, cfg)?)
            }
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WorldRow {
    pub index: usize,
    pub seed: u64,
    pub counts: Tally,
    pub success: Ratio<u64>,
    pub blind_alley: bool,
    pub disqualified: bool,
}

impl WorldRow {
    fn from_record(index: usize, seed: u64, r: &LifeRecord) -> Self {
        WorldRow {
            index,
            seed,
            counts: r.tally(),
            success: r.success(),
            blind_alley: r.blind_alley,
            disqualified: r.disqualified,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IQReport {
    pub manifest_hash: String,
    pub batch: u32,
    pub rows: Vec<WorldRow>,
    pub local_iq: Ratio<u64>,
    pub verdict: bool,
}

impl IQReport {
    /// More than half of the lives ended in disqualification.
    pub fn disqualification_dominated(&self) -> bool {
        2 * self.rows.iter().filter(|r| r.disqualified).count() > self.rows.len()
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        writeln!(s, "manifest={} batch={}", self.manifest_hash, self.batch).unwrap();
        for r in &self.rows {
            let c = &r.counts;
            writeln!(
                s,
                "world={} seed={} v={} l={} d={} ud={} ul={} dl={} success={}/{}",
                r.index,
                r.seed,
                c.victories,
                c.losses,
                c.draws,
                c.utility_draws,
                c.utility_losses,
                c.death_losses,
                r.success.numer(),
                r.success.denom()
            )
            .unwrap();
        }
        writeln!(
            s,
            "local_iq={}/{} ({:.6})",
            self.local_iq.numer(),
            self.local_iq.denom(),
            ratio_to_f64(self.local_iq)
        )
        .unwrap();
        writeln!(s, "verdict={}", self.verdict).unwrap();
        s
    }
}

pub fn ratio_to_f64(r: Ratio<u64>) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// Strictly greater than the configured threshold.
pub fn verdict(iq: Ratio<u64>, cfg: &TestConfig) -> bool {
    iq > cfg.iq_threshold
}

/// Mean success over rows; zero for an empty list.
pub fn mean_success(rows: &[WorldRow]) -> Ratio<u64> {
    if rows.is_empty() {
        return Ratio::new(0, 1);
    }
    let total = rows.iter().fold(Ratio::new(0u64, 1), |acc, r| acc + r.success);
    total / rows.len() as u64
}

pub fn local_iq(manifest: &Manifest, spec: &StrategySpec) -> Result<IQReport> {
    local_iq_with(manifest, |_, cfg| spec.instantiate(cfg))
}

/// Local IQ with a caller-supplied candidate factory, called once per world
/// with the world index. Worlds run in parallel; rows come back in order.
pub fn local_iq_with<F>(manifest: &Manifest, factory: F) -> Result<IQReport>
where
    F: Fn(usize, &TestConfig) -> Result<Box<dyn Strategy>> + Sync,
{
    let records = evaluate(manifest, &factory)?;
    let rows: Vec<WorldRow> = records
        .iter()
        .enumerate()
        .map(|(i, r)| WorldRow::from_record(i, manifest.seeds[i], r))
        .collect();
    let local_iq = mean_success(&rows);
    Ok(IQReport {
        manifest_hash: manifest.hash_hex(),
        batch: manifest.batch,
        rows,
        verdict: verdict(local_iq, &manifest.config),
        local_iq,
    })
}

/// One life record per world, in world order.
pub fn evaluate<F>(manifest: &Manifest, factory: &F) -> Result<Vec<LifeRecord>>
where
    F: Fn(usize, &TestConfig) -> Result<Box<dyn Strategy>> + Sync,
{
    let cfg = &manifest.config;
    let geometry = Arc::new(cfg.geometry());
    let mut indexed: Vec<(usize, LifeRecord)> = manifest
        .worlds()
        .enumerate()
        .par_bridge()
        .map(|(i, table)| {
            let mut strategy = factory(i, cfg)?;
            let run = run_life_with(&table, strategy.as_mut(), cfg, geometry.clone(), &mut NoObserver)?;
            Ok((i, run.record))
        })
        .collect::<Result<_>>()?;
    indexed.sort_by_key(|(i, _)| *i);
    Ok(indexed.into_iter().map(|(_, r)| r).collect())
}

/// Follow-up batch `batch` of `count` worlds, continuing the chain after
/// `manifest`. Intermediate batches are generated on the way.
pub fn followup_batch(manifest: &Manifest, batch: u32, count: usize) -> Result<Manifest> {
    followup_batch_with(manifest, batch, count, &BuildOptions::default())
}

pub fn followup_batch_with(manifest: &Manifest, batch: u32, count: usize, opts: &BuildOptions) -> Result<Manifest> {
    if batch <= manifest.batch {
        return Err(Error::Precondition(format!(
            "follow-up batch must come after batch {}, got {batch}",
            manifest.batch
        )));
    }
    if count == 0 {
        return Err(Error::Precondition("a batch needs at least one world".into()));
    }
    let cfg = &manifest.config;
    let mut prefix = manifest.prefix.clone();
    let mut seeds = manifest.seeds.clone();
    let mut base = manifest
        .worlds()
        .last()
        .ok_or_else(|| Error::Precondition("cannot continue an empty manifest".into()))?;
    for _ in manifest.batch..batch {
        let start = seeds.last().or(prefix.last()).copied().expect("chain is non-empty") + 1;
        let (next, last) = extend_chain(cfg, base, start, count, opts)?;
        prefix.append(&mut seeds);
        seeds = next;
        base = last;
    }
    let mut config = cfg.clone();
    config.world_count = seeds.len() as u32;
    Ok(Manifest { config, format_version: MANIFEST_VERSION, batch, prefix, seeds })
}
