//! The contract every search algorithm implements, and the generation driver
//! that turns an optimizer into an archive plus per-generation statistics.

use std::collections::{BTreeMap, BTreeSet};
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::baselines::AlgorithmTag;
use crate::dataset::TransactionDb;
use crate::error::Result;
use crate::exec::evaluate_batch;
use crate::measures::FitnessVector;
use crate::pareto::ParetoArchive;
use crate::protocol::coverage;
use crate::rule::{random_individual, Individual};

pub type Rng = ChaCha8Rng;

/// One evaluated individual as seen in a snapshot: item membership plus fitness.
#[derive(Clone, Debug, PartialEq)]
pub struct SnapshotRow {
    pub members: Vec<bool>,
    pub fitness: FitnessVector,
}

/// Collects every individual evaluated while enabled.
#[derive(Debug, Default)]
pub struct EvalLog {
    enabled: bool,
    rows: Vec<SnapshotRow>,
}

impl EvalLog {
    pub fn new(enabled: bool) -> Self {
        EvalLog {
            enabled,
            rows: Vec::new(),
        }
    }

    pub fn set_enabled(&mut self, on: bool) {
        self.enabled = on;
    }

    pub fn is_enabled(&self) -> bool {
        self.enabled
    }

    pub fn record(&mut self, batch: &[Individual]) {
        if !self.enabled {
            return;
        }
        self.rows.extend(batch.iter().map(|ind| SnapshotRow {
            members: (0..ind.item_count()).map(|i| ind.is_present(i)).collect(),
            fitness: ind.fitness().unwrap_or(FitnessVector::ZERO),
        }));
    }

    pub fn take(&mut self) -> Vec<SnapshotRow> {
        std::mem::take(&mut self.rows)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct StepStats {
    pub candidates_evaluated: usize,
}

pub trait Optimizer: Send {
    fn tag(&self) -> AlgorithmTag;

    /// Builds and evaluates the initial population.
    fn initialize(&mut self, db: &TransactionDb, rng: &mut Rng, log: &mut EvalLog) -> Result<()>;

    /// Runs one generation. Optimizers may offer rules to `archive` mid-step;
    /// the driver merges the whole population afterwards.
    fn step(
        &mut self,
        db: &TransactionDb,
        archive: &mut ParetoArchive,
        rng: &mut Rng,
        log: &mut EvalLog,
    ) -> Result<StepStats>;

    fn population(&self) -> &[Individual];

    /// Resolved hyperparameters, for provenance dumps.
    fn config_json(&self) -> serde_json::Value;
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenerationStats {
    pub generation: usize,
    pub archive_size: usize,
    pub coverage: f64,
    pub mean_support: f64,
    pub mean_confidence: f64,
    pub mean_cosine: f64,
    pub candidates_evaluated: usize,
    #[serde(with = "duration_secs")]
    pub elapsed: Duration,
}

mod duration_secs {
    use std::time::Duration;

    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(d.as_secs_f64())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        Ok(Duration::from_secs_f64(f64::deserialize(d)?.max(0.0)))
    }
}

#[derive(Clone, Debug)]
pub struct RunOutput {
    pub archive: ParetoArchive,
    pub stats: Vec<GenerationStats>,
    /// Evaluated individuals per snapshot generation; 0 is the initial population.
    pub snapshots: BTreeMap<usize, Vec<SnapshotRow>>,
}

pub(crate) fn random_population(
    size: usize,
    db: &TransactionDb,
    rng: &mut Rng,
) -> Result<Vec<Individual>> {
    let mut pop = (0..size)
        .map(|_| random_individual(db.item_count(), rng))
        .collect::<Result<Vec<_>>>()?;
    evaluate_batch(&mut pop, db);
    Ok(pop)
}

pub(crate) fn fitness(ind: &Individual) -> FitnessVector {
    ind.fitness().expect("population members are evaluated")
}

/// Seeds a fresh stream from `seed`, initializes, then runs `generations` steps.
pub fn run_optimizer(
    opt: &mut dyn Optimizer,
    db: &TransactionDb,
    generations: usize,
    seed: u64,
    snapshot_generations: &BTreeSet<usize>,
) -> Result<RunOutput> {
    let mut rng = Rng::seed_from_u64(seed);
    let mut log = EvalLog::new(snapshot_generations.contains(&0));
    let mut snapshots = BTreeMap::new();

    opt.initialize(db, &mut rng, &mut log)?;
    if log.is_enabled() {
        snapshots.insert(0, log.take());
    }
    let mut archive = ParetoArchive::new();
    archive.merge(opt.population())?;

    let mut stats = Vec::with_capacity(generations);
    for generation in 1..=generations {
        log.set_enabled(snapshot_generations.contains(&generation));
        let started = Instant::now();
        let step = opt.step(db, &mut archive, &mut rng, &mut log)?;
        archive.merge(opt.population())?;
        let elapsed = started.elapsed();
        if log.is_enabled() {
            snapshots.insert(generation, log.take());
        }
        let mean = archive.mean_fitness();
        stats.push(GenerationStats {
            generation,
            archive_size: archive.len(),
            coverage: coverage(&archive, db),
            mean_support: mean.support,
            mean_confidence: mean.confidence,
            mean_cosine: mean.cosine,
            candidates_evaluated: step.candidates_evaluated,
            elapsed,
        });
    }
    Ok(RunOutput {
        archive,
        stats,
        snapshots,
    })
}
