//! Repeated runs, per-generation metrics, snapshots and their on-disk layout.
//!
//! Files under a run directory:
//!
//! - `metrics_<algo>_<rep>.csv`: one row per generation
//! - `timing_<algo>_<rep>.csv`: wall time per generation (kept apart so the
//!   metrics stay byte-reproducible)
//! - `front_<algo>_<rep>.json`: final archive
//! - `config_<algo>_<rep>.json`: resolved hyperparameters
//! - `snapshots/<algo>_<rep>_g<gen>.csv`: every individual evaluated in that
//!   generation as a 0/1 item row plus its fitness

use std::collections::BTreeSet;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::baselines::{make_optimizer, AlgorithmTag, OptimizerConfig};
use crate::bitmap::Bitmap;
use crate::dataset::TransactionDb;
use crate::error::{Error, Result};
use crate::exec::map_ordered;
use crate::optimizer::{run_optimizer, GenerationStats, RunOutput};
use crate::pareto::ParetoArchive;

/// Fraction of rows that contain every item of at least one archived rule.
pub fn coverage(archive: &ParetoArchive, db: &TransactionDb) -> f64 {
    let mut covered = Bitmap::zeros(db.row_count());
    for e in archive.entries() {
        let rows = db
            .item_rows(&e.rule.items())
            .expect("archive rules index into the catalog");
        covered.or_assign(&rows);
    }
    covered.count_ones() as f64 / db.row_count() as f64
}

#[derive(Clone, Debug)]
pub struct RunRecord {
    pub algorithm: AlgorithmTag,
    pub dataset_id: String,
    pub repetition: usize,
    pub seed: u64,
    pub config: serde_json::Value,
    pub output: RunOutput,
}

impl RunRecord {
    pub fn metrics(&self) -> &[GenerationStats] {
        &self.output.stats
    }

    pub fn archive(&self) -> &ParetoArchive {
        &self.output.archive
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProtocolConfig {
    pub algorithms: Vec<OptimizerConfig>,
    pub dataset_id: String,
    pub repetitions: usize,
    /// Generations whose evaluated individuals are dumped; 0 is the
    /// evaluated initial population.
    pub snapshot_generations: BTreeSet<usize>,
    pub master_seed: u64,
}

impl ProtocolConfig {
    /// Generations 0, 1, 10, 20, 30, 40 and 49.
    pub fn paper_snapshots() -> BTreeSet<usize> {
        [0, 1, 10, 20, 30, 40, 49].into_iter().collect()
    }
}

/// One run of `config` with its own seed.
pub fn execute_run(
    config: &OptimizerConfig,
    db: &TransactionDb,
    snapshot_generations: &BTreeSet<usize>,
) -> Result<RunOutput> {
    let mut opt = make_optimizer(config)?;
    run_optimizer(
        opt.as_mut(),
        db,
        config.generations,
        config.seed,
        snapshot_generations,
    )
}

/// Runs every algorithm `repetitions` times with seed `master_seed + rep`.
/// Results come back in (algorithm, repetition) order whatever the scheduling;
/// a failed run only loses its own record.
pub fn run_protocol(cfg: &ProtocolConfig, db: &TransactionDb) -> Vec<Result<RunRecord>> {
    let jobs: Vec<(OptimizerConfig, usize)> = cfg
        .algorithms
        .iter()
        .flat_map(|a| {
            (0..cfg.repetitions).map(move |rep| {
                let mut c = a.clone();
                c.seed = cfg.master_seed.wrapping_add(rep as u64);
                (c, rep)
            })
        })
        .collect();
    map_ordered(&jobs, |(config, rep)| {
        let output = execute_run(config, db, &cfg.snapshot_generations)?;
        Ok(RunRecord {
            algorithm: config.tag(),
            dataset_id: cfg.dataset_id.clone(),
            repetition: *rep,
            seed: config.seed,
            config: config.to_json(),
            output,
        })
    })
}

fn write_file(path: &Path, contents: &[u8]) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

pub fn metrics_csv(stats: &[GenerationStats]) -> String {
    let mut s = String::from(
        "generation,archive_size,coverage,mean_support,mean_confidence,mean_cosine,candidates_evaluated\n",
    );
    for g in stats {
        s.push_str(&format!(
            "{},{},{:.6},{:.6},{:.6},{:.6},{}\n",
            g.generation,
            g.archive_size,
            g.coverage,
            g.mean_support,
            g.mean_confidence,
            g.mean_cosine,
            g.candidates_evaluated
        ));
    }
    s
}

fn timing_csv(stats: &[GenerationStats]) -> String {
    let mut s = String::from("generation,elapsed_ms\n");
    for g in stats {
        s.push_str(&format!(
            "{},{:.6}\n",
            g.generation,
            g.elapsed.as_secs_f64() * 1e3
        ));
    }
    s
}

fn snapshot_csv(rows: &[crate::optimizer::SnapshotRow], n_items: usize) -> String {
    let mut s = String::new();
    for k in 0..n_items {
        s.push_str(&format!("item_{k},"));
    }
    s.push_str("support,confidence,cosine\n");
    for r in rows {
        for &m in &r.members {
            s.push_str(if m { "1," } else { "0," });
        }
        let f = r.fitness;
        s.push_str(&format!(
            "{:.6},{:.6},{:.6}\n",
            f.support, f.confidence, f.cosine
        ));
    }
    s
}

/// Writes every file belonging to `record` under `dir`.
pub fn write_record(record: &RunRecord, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let stem = format!("{}_{}", record.algorithm, record.repetition);
    write_file(
        &dir.join(format!("metrics_{stem}.csv")),
        metrics_csv(record.metrics()).as_bytes(),
    )?;
    write_file(
        &dir.join(format!("timing_{stem}.csv")),
        timing_csv(record.metrics()).as_bytes(),
    )?;
    write_file(
        &dir.join(format!("front_{stem}.json")),
        (record.archive().to_json()? + "\n").as_bytes(),
    )?;
    let config = serde_json::json!({
        "dataset": record.dataset_id,
        "repetition": record.repetition,
        "seed": record.seed,
        "optimizer": record.config,
    });
    write_file(
        &dir.join(format!("config_{stem}.json")),
        (serde_json::to_string_pretty(&config)? + "\n").as_bytes(),
    )?;
    if !record.output.snapshots.is_empty() {
        let snap_dir = dir.join("snapshots");
        fs::create_dir_all(&snap_dir).map_err(|e| Error::io(&snap_dir, e))?;
        for (generation, rows) in &record.output.snapshots {
            let n = rows.first().map_or(0, |r| r.members.len());
            let path = snap_dir.join(format!("{stem}_g{generation}.csv"));
            let mut f = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
            f.write_all(snapshot_csv(rows, n).as_bytes())
                .map_err(|e| Error::io(&path, e))?;
        }
    }
    Ok(())
}

/// Runs the protocol and writes all successful records to `dir`. Returns the
/// records plus one message per failed run.
pub fn run_protocol_to_dir(
    cfg: &ProtocolConfig,
    db: &TransactionDb,
    dir: &Path,
) -> Result<(Vec<RunRecord>, Vec<String>)> {
    let mut records = Vec::new();
    let mut failures = Vec::new();
    let labels: Vec<(AlgorithmTag, usize)> = cfg
        .algorithms
        .iter()
        .flat_map(|a| (0..cfg.repetitions).map(move |r| (a.tag(), r)))
        .collect();
    for ((tag, rep), result) in labels.into_iter().zip(run_protocol(cfg, db)) {
        match result {
            Ok(record) => {
                write_record(&record, dir)?;
                records.push(record);
            }
            Err(e) => failures.push(format!("{tag} repetition {rep}: {e}")),
        }
    }
    Ok((records, failures))
}
