//! Random-search hyperparameter tuning.

use std::collections::BTreeSet;

use rand::Rng;
use serde::Serialize;

use crate::baselines::{AlgorithmParams, AlgorithmTag, OptimizerConfig};
use crate::dataset::TransactionDb;
use crate::error::{Error, Result};
use crate::pareto::ParetoArchive;
use crate::protocol::execute_run;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TuneOptions {
    pub iterations: usize,
    pub generations: usize,
    pub population_size: usize,
}

impl Default for TuneOptions {
    fn default() -> Self {
        TuneOptions {
            iterations: 100,
            generations: 20,
            population_size: 100,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TuneTrial {
    pub params: AlgorithmParams,
    pub seed: u64,
    pub score: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TuneResult {
    pub best: AlgorithmParams,
    pub score: f64,
    pub trials: Vec<TuneTrial>,
}

/// Sum of support + confidence + cosine over the `k` archive entries with the
/// largest objective sum (fewer if the archive is smaller).
pub fn top_k_score(archive: &ParetoArchive, k: usize) -> f64 {
    let mut sums: Vec<f64> = archive.entries().iter().map(|e| e.fitness.sum()).collect();
    sums.sort_by(|a, b| b.total_cmp(a));
    sums.iter().take(k).sum()
}

/// Samples `iterations` hyperparameter sets, scores each by a short run, and
/// returns the first best one along with the full log.
pub fn tune_random_search<R: Rng + ?Sized>(
    tag: AlgorithmTag,
    db: &TransactionDb,
    opts: &TuneOptions,
    rng: &mut R,
) -> Result<TuneResult> {
    if opts.iterations == 0 {
        return Err(Error::config("tuning needs at least one iteration"));
    }
    let mut trials = Vec::with_capacity(opts.iterations);
    for _ in 0..opts.iterations {
        let params = AlgorithmParams::sample(tag, rng)?;
        let seed = rng.random();
        let config = OptimizerConfig {
            population_size: opts.population_size,
            generations: opts.generations,
            seed,
            params: params.clone(),
        };
        let out = execute_run(&config, db, &BTreeSet::new())?;
        trials.push(TuneTrial {
            params,
            seed,
            score: top_k_score(&out.archive, 10),
        });
    }
    let best = trials
        .iter()
        .fold(&trials[0], |b, t| if t.score > b.score { t } else { b });
    Ok(TuneResult {
        best: best.params.clone(),
        score: best.score,
        trials,
    })
}
