//! Command-line front end: `prepare`, `run`, `bench`, `tune` and `report`.
//!
//! `run`, `bench` and `tune` accept `--config <file.json>`, a flat JSON object
//! whose keys mirror the long flags (`dataset`, `algorithms`,
//! `population_size`, `generations`, `repetitions`, `seed`, `output`, `bins`,
//! ...). Flags given on the command line win over the file. The seed falls
//! back to the `ARM_SEED` environment variable, then to 0.

use std::collections::{BTreeMap, BTreeSet};
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use serde::Deserialize;

use crate::baselines::{AlgorithmTag, OptimizerConfig};
use crate::dataset::{load_csv_file, BinarizeOptions, ColumnKind, Schema, TransactionDb};
use crate::error::{Error, Result};
use crate::exec::with_jobs;
use crate::protocol::{run_protocol_to_dir, ProtocolConfig};
use crate::report::{aggregate_and_rank, load_final_metrics};
use crate::tune::{tune_random_search, TuneOptions};

#[derive(Parser, Debug)]
#[command(
    name = "cambrian-arm",
    version,
    about = "Multi-objective association rule mining"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Binarize a CSV and write catalog.json + matrix.bin
    Prepare(PrepareArgs),
    /// Run one algorithm once
    Run(RunArgs),
    /// Repeated runs of one or more algorithms, then a report
    Bench(RunArgs),
    /// Random-search hyperparameter tuning
    Tune(RunArgs),
    /// Aggregate a results directory into summary.csv and ranks.csv
    Report(ReportArgs),
}

#[derive(Args, Debug, Default)]
struct DataArgs {
    /// CSV file, or a directory written by `prepare`
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Equal-width bins per continuous column
    #[arg(long)]
    bins: Option<usize>,
    /// Missing-value token
    #[arg(long)]
    missing: Option<String>,
    /// Columns to treat as continuous
    #[arg(long, value_delimiter = ',')]
    continuous: Vec<String>,
    /// Columns to treat as categorical
    #[arg(long, value_delimiter = ',')]
    categorical: Vec<String>,
    /// JSON schema file: {"default_kind": ..., "columns": {name: kind}}
    #[arg(long)]
    schema: Option<PathBuf>,
    /// Also create items for bins no row falls into
    #[arg(long)]
    keep_empty_bins: bool,
}

#[derive(Args, Debug)]
struct PrepareArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct RunArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Flat JSON config; flags override its values
    #[arg(long)]
    config: Option<PathBuf>,
    /// Algorithm tag(s): cea, nsga2, de, pso, sa
    #[arg(long, value_delimiter = ',')]
    algo: Vec<String>,
    #[arg(long)]
    pop: Option<usize>,
    #[arg(long)]
    gens: Option<usize>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores); output does not depend on it
    #[arg(long)]
    jobs: Option<usize>,
    /// Generations whose evaluated individuals are dumped (0 = initial)
    #[arg(long, value_delimiter = ',')]
    snapshots: Vec<usize>,
    /// Tuning iterations
    #[arg(long)]
    iterations: Option<usize>,
}

#[derive(Args, Debug)]
struct ReportArgs {
    dir: PathBuf,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct FileConfig {
    dataset: Option<PathBuf>,
    bins: Option<usize>,
    missing: Option<String>,
    continuous: Vec<String>,
    categorical: Vec<String>,
    schema: Option<PathBuf>,
    keep_empty_bins: Option<bool>,
    algorithms: Vec<String>,
    population_size: Option<usize>,
    generations: Option<usize>,
    repetitions: Option<usize>,
    seed: Option<u64>,
    output: Option<PathBuf>,
    jobs: Option<usize>,
    snapshots: Option<Vec<usize>>,
    iterations: Option<usize>,
    /// Per-algorithm overrides, e.g. {"nsga2": {"mutation_rate": 0.2}}
    hyperparameters: BTreeMap<String, serde_json::Map<String, serde_json::Value>>,
}

fn read_file_config(path: &Path) -> Result<FileConfig> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::config(format!("{}: {e}", path.display())))
}

/// Paths in a config file are relative to the file itself.
fn relative_to(base: Option<&Path>, p: PathBuf) -> PathBuf {
    match base.and_then(Path::parent) {
        Some(dir) if p.is_relative() => dir.join(p),
        _ => p,
    }
}

fn positive(name: &str, v: usize) -> Result<usize> {
    if v == 0 {
        Err(Error::config(format!("--{name} must be positive")))
    } else {
        Ok(v)
    }
}

struct Resolved {
    dataset: PathBuf,
    binarize: BinarizeOptions,
    algorithms: Vec<OptimizerConfig>,
    repetitions: usize,
    seed: u64,
    out: Option<PathBuf>,
    jobs: Option<usize>,
    snapshots: BTreeSet<usize>,
    iterations: usize,
}

fn env_seed() -> Result<Option<u64>> {
    match std::env::var("ARM_SEED") {
        Ok(s) => s
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Error::config(format!("ARM_SEED is not an unsigned integer: '{s}'"))),
        Err(_) => Ok(None),
    }
}

fn binarize_options(
    data: &DataArgs,
    file: &FileConfig,
    base: Option<&Path>,
) -> Result<BinarizeOptions> {
    let mut opts = BinarizeOptions::default();
    let schema_path = data
        .schema
        .clone()
        .or_else(|| file.schema.clone().map(|p| relative_to(base, p)));
    if let Some(p) = schema_path {
        let text = fs::read_to_string(&p).map_err(|e| Error::io(&p, e))?;
        opts.schema = serde_json::from_str::<Schema>(&text)
            .map_err(|e| Error::config(format!("{}: {e}", p.display())))?;
    }
    let continuous = if data.continuous.is_empty() {
        &file.continuous
    } else {
        &data.continuous
    };
    let categorical = if data.categorical.is_empty() {
        &file.categorical
    } else {
        &data.categorical
    };
    for c in continuous {
        opts.schema
            .columns
            .insert(c.clone(), ColumnKind::Continuous);
    }
    for c in categorical {
        opts.schema
            .columns
            .insert(c.clone(), ColumnKind::Categorical);
    }
    opts.bins = positive("bins", data.bins.or(file.bins).unwrap_or(opts.bins))?;
    if let Some(m) = data.missing.clone().or_else(|| file.missing.clone()) {
        opts.missing = m;
    }
    opts.keep_empty_bins = data.keep_empty_bins || file.keep_empty_bins.unwrap_or(false);
    Ok(opts)
}

fn optimizer_config(
    tag: AlgorithmTag,
    population_size: usize,
    generations: usize,
    seed: u64,
    overrides: Option<&serde_json::Map<String, serde_json::Value>>,
) -> Result<OptimizerConfig> {
    let mut c = OptimizerConfig::defaults(tag);
    c.population_size = population_size;
    c.generations = generations;
    c.seed = seed;
    if let Some(o) = overrides {
        let mut v = c.to_json();
        let obj = v.as_object_mut().expect("config is an object");
        for (k, val) in o {
            if matches!(
                k.as_str(),
                "algorithm" | "population_size" | "generations" | "seed"
            ) {
                return Err(Error::config(format!(
                    "hyperparameters.{tag} cannot set '{k}'"
                )));
            }
            obj.insert(k.clone(), val.clone());
        }
        c = serde_json::from_value(v)
            .map_err(|e| Error::config(format!("hyperparameters.{tag}: {e}")))?;
    }
    c.validate()?;
    Ok(c)
}

fn resolve(args: &RunArgs, default_reps: usize, default_gens: usize) -> Result<Resolved> {
    let file = match &args.config {
        Some(p) => read_file_config(p)?,
        None => FileConfig::default(),
    };
    let base = args.config.as_deref();
    let dataset = args
        .data
        .dataset
        .clone()
        .or_else(|| file.dataset.clone().map(|p| relative_to(base, p)))
        .ok_or_else(|| Error::config("missing --dataset"))?;
    let binarize = binarize_options(&args.data, &file, base)?;

    let algo_names = if args.algo.is_empty() {
        &file.algorithms
    } else {
        &args.algo
    };
    let tags = if algo_names.is_empty() {
        vec![AlgorithmTag::Cea]
    } else {
        algo_names
            .iter()
            .map(|s| s.parse())
            .collect::<Result<Vec<AlgorithmTag>>>()?
    };
    for name in file.hyperparameters.keys() {
        name.parse::<AlgorithmTag>()?;
    }
    let pop = positive("pop", args.pop.or(file.population_size).unwrap_or(100))?;
    let gens = args.gens.or(file.generations).unwrap_or(default_gens);
    let seed = match args.seed.or(file.seed) {
        Some(s) => s,
        None => env_seed()?.unwrap_or(0),
    };
    let algorithms = tags
        .iter()
        .map(|&t| optimizer_config(t, pop, gens, seed, file.hyperparameters.get(t.as_str())))
        .collect::<Result<Vec<_>>>()?;
    let snapshots = if args.snapshots.is_empty() {
        file.snapshots.clone().unwrap_or_default()
    } else {
        args.snapshots.clone()
    };
    Ok(Resolved {
        dataset,
        binarize,
        algorithms,
        repetitions: positive(
            "reps",
            args.reps.or(file.repetitions).unwrap_or(default_reps),
        )?,
        seed,
        out: args
            .out
            .clone()
            .or_else(|| file.output.clone().map(|p| relative_to(base, p))),
        jobs: args
            .jobs
            .or(file.jobs)
            .map(|j| positive("jobs", j))
            .transpose()?,
        snapshots: snapshots.into_iter().collect(),
        iterations: positive(
            "iterations",
            args.iterations.or(file.iterations).unwrap_or(100),
        )?,
    })
}

fn load_dataset(path: &Path, opts: &BinarizeOptions) -> Result<TransactionDb> {
    if path.is_dir() {
        TransactionDb::load_prepared(path)
    } else {
        load_csv_file(path, opts)
    }
}

fn dataset_id(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".to_string())
}

fn cmd_prepare(args: &PrepareArgs) -> Result<()> {
    let path = args
        .data
        .dataset
        .as_deref()
        .ok_or_else(|| Error::config("missing --dataset"))?;
    let opts = binarize_options(&args.data, &FileConfig::default(), None)?;
    let db = load_csv_file(path, &opts)?;
    db.save_prepared(&args.out)?;
    println!(
        "{}: {} rows, {} items -> {}",
        path.display(),
        db.row_count(),
        db.item_count(),
        args.out.display()
    );
    Ok(())
}

fn run_and_write(r: &Resolved, out: &Path) -> Result<Vec<crate::protocol::RunRecord>> {
    let db = load_dataset(&r.dataset, &r.binarize)?;
    let cfg = ProtocolConfig {
        algorithms: r.algorithms.clone(),
        dataset_id: dataset_id(&r.dataset),
        repetitions: r.repetitions,
        snapshot_generations: r.snapshots.clone(),
        master_seed: r.seed,
    };
    let (records, failures) = with_jobs(r.jobs, || run_protocol_to_dir(&cfg, &db, out))?;
    let cat_path = out.join("catalog.json");
    fs::write(&cat_path, db.catalog().to_json()? + "\n").map_err(|e| Error::io(&cat_path, e))?;
    for f in &failures {
        eprintln!("run failed: {f}");
    }
    if !failures.is_empty() {
        return Err(Error::config(format!("{} run(s) failed", failures.len())));
    }
    Ok(records)
}

fn cmd_run(args: &RunArgs) -> Result<()> {
    if args.reps.is_some_and(|r| r != 1) {
        return Err(Error::config(
            "run executes a single repetition; use bench for more",
        ));
    }
    let r = resolve(args, 1, 50)?;
    if r.algorithms.len() != 1 || r.repetitions != 1 {
        return Err(Error::config(
            "run takes exactly one algorithm and one repetition",
        ));
    }
    let out = r
        .out
        .clone()
        .ok_or_else(|| Error::config("missing --out"))?;
    for rec in run_and_write(&r, &out)? {
        if let Some(last) = rec.metrics().last() {
            println!(
                "{} seed {}: {} rules, coverage {:.6}, support {:.6}, confidence {:.6}, cosine {:.6}",
                rec.algorithm,
                rec.seed,
                last.archive_size,
                last.coverage,
                last.mean_support,
                last.mean_confidence,
                last.mean_cosine
            );
        }
    }
    Ok(())
}

fn cmd_bench(args: &RunArgs) -> Result<()> {
    let r = resolve(args, 50, 50)?;
    let out = r
        .out
        .clone()
        .ok_or_else(|| Error::config("missing --out"))?;
    run_and_write(&r, &out)?;
    cmd_report(&ReportArgs { dir: out })
}

fn cmd_tune(args: &RunArgs) -> Result<()> {
    let r = resolve(args, 1, 20)?;
    if r.algorithms.len() != 1 {
        return Err(Error::config("tune takes exactly one algorithm"));
    }
    let tag = r.algorithms[0].tag();
    let db = load_dataset(&r.dataset, &r.binarize)?;
    let opts = TuneOptions {
        iterations: r.iterations,
        generations: r.algorithms[0].generations,
        population_size: r.algorithms[0].population_size,
    };
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(r.seed);
    let result = with_jobs(r.jobs, || tune_random_search(tag, &db, &opts, &mut rng))?;
    let json = serde_json::to_string_pretty(&result)?;
    if let Some(out) = &r.out {
        fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
        let path = out.join(format!("tune_{tag}.json"));
        fs::write(&path, json + "\n").map_err(|e| Error::io(&path, e))?;
    }
    println!(
        "{tag}: best score {:.6} with {}",
        result.score,
        serde_json::to_string(&result.best)?
    );
    Ok(())
}

fn cmd_report(args: &ReportArgs) -> Result<()> {
    let runs = load_final_metrics(&args.dir)?;
    let report = aggregate_and_rank(&runs);
    report.write(&args.dir)?;
    print!("{}", report.summary_csv());
    Ok(())
}

/// Parses `argv` (program name first) and runs the subcommand. Returns the
/// process exit code.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return 0;
            }
            let msg = e.to_string();
            eprintln!("{}", msg.lines().next().unwrap_or("invalid arguments"));
            return 2;
        }
    };
    let result = match &cli.command {
        Command::Prepare(a) => cmd_prepare(a),
        Command::Run(a) => cmd_run(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Tune(a) => cmd_tune(a),
        Command::Report(a) => cmd_report(a),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }

    #[test]
    fn unknown_flag_is_a_usage_error() {
        assert_eq!(run_cli(["cambrian-arm", "run", "--bogus"]), 2);
    }

    #[test]
    fn overrides_merge_into_defaults() {
        let mut o = serde_json::Map::new();
        o.insert("mutation_rate".into(), serde_json::json!(0.2));
        let c = optimizer_config(AlgorithmTag::Nsga2, 10, 5, 1, Some(&o)).unwrap();
        assert_eq!(c.to_json()["mutation_rate"], 0.2);
        assert_eq!(c.to_json()["crossover_rate"], 0.4);
        o.insert("bogus".into(), serde_json::json!(1));
        assert!(optimizer_config(AlgorithmTag::Nsga2, 10, 5, 1, Some(&o)).is_err());
    }
}
