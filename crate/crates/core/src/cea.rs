//! Cambrian Explosion Algorithm.
//!
//! Each generation walks the population once. A dominated target is rebuilt
//! from its dominators; a non-dominated target is archived and then replaced
//! by the best improvement it can produce in the individuals it dominates.
//! Targets that yield no qualifying competitor are replaced by a fresh random
//! `1 => 1` rule. Replacement happens in place, so later targets see earlier
//! replacements within the same generation.

use std::collections::BTreeSet;

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::baselines::AlgorithmTag;
use crate::dataset::TransactionDb;
use crate::error::{Error, Result};
use crate::exec::evaluate_batch;
use crate::measures::FitnessVector;
use crate::optimizer::{
    fitness, random_population, run_optimizer, EvalLog, GenerationStats, Optimizer, Rng as RunRng,
    StepStats,
};
use crate::pareto::{dominates, find_relations, ParetoArchive};
use crate::rule::{magnitude, random_individual, Individual};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CeaConfig {
    pub population_size: usize,
    pub generations: usize,
    pub max_changes: usize,
    pub candidate_cap: usize,
    pub seed: u64,
}

impl Default for CeaConfig {
    fn default() -> Self {
        CeaConfig {
            population_size: 100,
            generations: 50,
            max_changes: 5,
            candidate_cap: 10,
            seed: 0,
        }
    }
}

impl CeaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.population_size == 0 {
            return Err(Error::config("population_size must be at least 1"));
        }
        if self.max_changes == 0 {
            return Err(Error::config("max_changes must be at least 1"));
        }
        if self.candidate_cap == 0 {
            return Err(Error::config("candidate_cap must be at least 1"));
        }
        Ok(())
    }
}

/// One edit of the improvement operator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Change {
    /// Copy a present item of the reference, role included.
    CopyFromReference,
    /// Drop a present item of the target, then copy one from the reference.
    ReplaceFromReference,
    /// Switch on an absent item with a random role.
    AddRandom,
}

impl Change {
    pub fn from_draw(r: f64) -> Change {
        if r <= 1.0 / 3.0 {
            Change::CopyFromReference
        } else if r <= 2.0 / 3.0 {
            Change::ReplaceFromReference
        } else {
            Change::AddRandom
        }
    }
}

fn pick<R: Rng + ?Sized>(items: &[usize], rng: &mut R) -> Option<usize> {
    (!items.is_empty()).then(|| items[rng.random_range(0..items.len())])
}

fn copy_from_reference<R: Rng + ?Sized>(genome: &mut [f64], reference: &[f64], rng: &mut R) {
    let n = genome.len() / 2;
    let present: Vec<usize> = (0..n).filter(|&i| reference[i] > 0.0).collect();
    if let Some(j) = pick(&present, rng) {
        genome[j] = magnitude(rng);
        let m = magnitude(rng);
        genome[n + j] = if reference[n + j] > 0.0 { m } else { -m };
    }
}

/// Applies a single change to `genome`; impossible sub-steps are skipped.
pub fn apply_change<R: Rng + ?Sized>(
    genome: &mut [f64],
    reference: &[f64],
    change: Change,
    rng: &mut R,
) {
    let n = genome.len() / 2;
    match change {
        Change::CopyFromReference => copy_from_reference(genome, reference, rng),
        Change::ReplaceFromReference => {
            let present: Vec<usize> = (0..n).filter(|&i| genome[i] > 0.0).collect();
            if let Some(j) = pick(&present, rng) {
                genome[j] = -magnitude(rng);
            }
            copy_from_reference(genome, reference, rng);
        }
        Change::AddRandom => {
            let absent: Vec<usize> = (0..n).filter(|&i| genome[i] <= 0.0).collect();
            if let Some(j) = pick(&absent, rng) {
                genome[j] = magnitude(rng);
                let m = magnitude(rng);
                genome[n + j] = if rng.random_bool(0.5) { m } else { -m };
            }
        }
    }
}

/// Like [`improve_individual`], also returning the branch taken by each change.
pub fn improve_individual_traced<R: Rng + ?Sized>(
    target: &Individual,
    reference: &Individual,
    max_changes: usize,
    rng: &mut R,
) -> (Individual, Vec<Change>) {
    debug_assert_eq!(target.genome().len(), reference.genome().len());
    let mut genome = target.genome().to_vec();
    let k = rng.random_range(1..=max_changes.max(1));
    let mut trace = Vec::with_capacity(k);
    for _ in 0..k {
        let change = Change::from_draw(rng.random::<f64>());
        apply_change(&mut genome, reference.genome(), change, rng);
        trace.push(change);
    }
    let improved = Individual::new(genome).expect("genome length preserved");
    (improved, trace)
}

/// Applies between 1 and `max_changes` random changes to a copy of `target`,
/// drawing items from `reference`. The result carries no fitness.
pub fn improve_individual<R: Rng + ?Sized>(
    target: &Individual,
    reference: &Individual,
    max_changes: usize,
    rng: &mut R,
) -> Individual {
    improve_individual_traced(target, reference, max_changes, rng).0
}

/// At most `cap` indices, sampled uniformly without replacement when there are more.
pub(crate) fn subsample<R: Rng + ?Sized>(from: &[usize], cap: usize, rng: &mut R) -> Vec<usize> {
    if from.len() <= cap {
        return from.to_vec();
    }
    index::sample(rng, from.len(), cap)
        .into_iter()
        .map(|i| from[i])
        .collect()
}

#[derive(Debug)]
pub struct Cea {
    config: CeaConfig,
    population: Vec<Individual>,
}

impl Cea {
    pub fn new(config: CeaConfig) -> Result<Self> {
        config.validate()?;
        Ok(Cea {
            config,
            population: Vec::new(),
        })
    }

    pub fn config(&self) -> &CeaConfig {
        &self.config
    }

    /// Starts from a caller-provided, evaluated population.
    pub fn with_population(config: CeaConfig, population: Vec<Individual>) -> Result<Self> {
        config.validate()?;
        if population.iter().any(|i| i.fitness().is_none()) {
            return Err(Error::contract("initial population must be evaluated"));
        }
        Ok(Cea { config, population })
    }
}

impl Optimizer for Cea {
    fn tag(&self) -> AlgorithmTag {
        AlgorithmTag::Cea
    }

    fn initialize(
        &mut self,
        db: &TransactionDb,
        rng: &mut RunRng,
        log: &mut EvalLog,
    ) -> Result<()> {
        self.population = random_population(self.config.population_size, db, rng)?;
        log.record(&self.population);
        Ok(())
    }

    fn step(
        &mut self,
        db: &TransactionDb,
        archive: &mut ParetoArchive,
        rng: &mut RunRng,
        log: &mut EvalLog,
    ) -> Result<StepStats> {
        generation_step(&mut self.population, db, archive, &self.config, rng, log)
    }

    fn population(&self) -> &[Individual] {
        &self.population
    }

    fn config_json(&self) -> serde_json::Value {
        serde_json::json!({
            "algorithm": "cea",
            "population_size": self.config.population_size,
            "generations": self.config.generations,
            "seed": self.config.seed,
            "max_changes": self.config.max_changes,
            "candidate_cap": self.config.candidate_cap,
        })
    }
}

/// One generation over `population`, updated in place. The whole population
/// is merged into `archive` at the end.
pub fn generation_step<R: Rng>(
    population: &mut [Individual],
    db: &TransactionDb,
    archive: &mut ParetoArchive,
    config: &CeaConfig,
    rng: &mut R,
    log: &mut EvalLog,
) -> Result<StepStats> {
    let n_items = db.item_count();
    let mut candidates_evaluated = 0;

    for t in 0..population.len() {
        let rel = find_relations(population, t)?;
        let target_fit = fitness(&population[t]);

        // each candidate paired with the fitness it must beat
        let (mut candidates, bars): (Vec<Individual>, Vec<FitnessVector>) = if !rel
            .dominating
            .is_empty()
        {
            subsample(&rel.dominating, config.candidate_cap, rng)
                .into_iter()
                .map(|d| {
                    let c =
                        improve_individual(&population[t], &population[d], config.max_changes, rng);
                    (c, target_fit)
                })
                .unzip()
        } else {
            archive.offer_individual(&population[t])?;
            subsample(&rel.dominated, config.candidate_cap, rng)
                .into_iter()
                .map(|d| {
                    let c =
                        improve_individual(&population[d], &population[t], config.max_changes, rng);
                    (c, fitness(&population[d]))
                })
                .unzip()
        };

        evaluate_batch(&mut candidates, db);
        log.record(&candidates);
        candidates_evaluated += candidates.len();

        let mut competitor: Option<usize> = None;
        for (ci, cand) in candidates.iter().enumerate() {
            let f = fitness(cand);
            let beats_competitor =
                competitor.is_none_or(|k| dominates(&f, &fitness(&candidates[k])));
            if dominates(&f, &bars[ci]) && beats_competitor {
                competitor = Some(ci);
            }
        }

        population[t] = match competitor {
            Some(k) => candidates.swap_remove(k),
            None => {
                let mut fresh = [random_individual(n_items, rng)?];
                evaluate_batch(&mut fresh, db);
                log.record(&fresh);
                let [fresh] = fresh;
                fresh
            }
        };
    }
    archive.merge(population)?;
    Ok(StepStats {
        candidates_evaluated,
    })
}

/// Full CEA run: random initial population, then `generations` steps.
pub fn run(
    config: &CeaConfig,
    db: &TransactionDb,
) -> Result<(ParetoArchive, Vec<GenerationStats>)> {
    run_with_snapshots(config, db, &BTreeSet::new()).map(|o| (o.archive, o.stats))
}

pub fn run_with_snapshots(
    config: &CeaConfig,
    db: &TransactionDb,
    snapshots: &BTreeSet<usize>,
) -> Result<crate::optimizer::RunOutput> {
    if db.item_count() < 2 || db.row_count() == 0 {
        return Err(Error::contract(
            "CEA needs a database with at least two items",
        ));
    }
    let mut cea = Cea::new(config.clone())?;
    run_optimizer(&mut cea, db, config.generations, config.seed, snapshots)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use crate::rule::{decode, Rule};

    fn genome(presence: &[f64], role: &[f64]) -> Vec<f64> {
        presence.iter().chain(role).copied().collect()
    }

    #[test]
    fn draw_thresholds() {
        assert_eq!(Change::from_draw(0.30), Change::CopyFromReference);
        assert_eq!(Change::from_draw(1.0 / 3.0), Change::CopyFromReference);
        assert_eq!(Change::from_draw(0.50), Change::ReplaceFromReference);
        assert_eq!(Change::from_draw(2.0 / 3.0), Change::ReplaceFromReference);
        assert_eq!(Change::from_draw(0.90), Change::AddRandom);
    }

    #[test]
    fn copy_branch_takes_item_and_role_from_reference() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        // target {0} => {1}; reference has only item 3, in the consequent
        let mut g = genome(&[1.0, 1.0, -1.0, -1.0], &[1.0, -1.0, 1.0, 1.0]);
        let r = genome(&[-1.0, -1.0, -1.0, 0.5], &[1.0, 1.0, 1.0, -0.5]);
        apply_change(&mut g, &r, Change::from_draw(0.30), &mut rng);
        let rule = decode(&g).unwrap();
        assert_eq!(rule.antecedent(), &[0]);
        assert_eq!(rule.consequent(), &[1, 3]);
    }

    #[test]
    fn replace_branch_swaps_one_item() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut g = genome(&[1.0, 1.0, -1.0, -1.0], &[1.0, -1.0, 1.0, 1.0]);
        let r = genome(&[-1.0, -1.0, -1.0, 0.5], &[1.0, 1.0, 1.0, 0.5]);
        apply_change(&mut g, &r, Change::from_draw(0.50), &mut rng);
        let present: Vec<usize> = (0..4).filter(|&i| g[i] > 0.0).collect();
        assert_eq!(present.len(), 2);
        assert!(present.contains(&3));
        assert!(g[4 + 3] > 0.0);
    }

    #[test]
    fn add_random_branch_switches_on_an_absent_item() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut g = genome(&[1.0, 1.0, -1.0, -1.0], &[1.0, -1.0, 1.0, 1.0]);
        let r = g.clone();
        apply_change(&mut g, &r, Change::from_draw(0.90), &mut rng);
        let present: Vec<usize> = (0..4).filter(|&i| g[i] > 0.0).collect();
        assert_eq!(present.len(), 3);
        assert!(present.contains(&0) && present.contains(&1));
    }

    #[test]
    fn add_random_is_noop_when_everything_is_present() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut g = genome(&[1.0, 1.0], &[1.0, -1.0]);
        let before = g.clone();
        let r = g.clone();
        apply_change(&mut g, &r, Change::AddRandom, &mut rng);
        assert_eq!(g, before);
    }

    #[test]
    fn idempotent_copy_keeps_rule() {
        let target = Individual::from_rule(&Rule::new(vec![0], vec![1]).unwrap(), 4).unwrap();
        let reference = target.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let mut g = target.genome().to_vec();
            apply_change(
                &mut g,
                reference.genome(),
                Change::CopyFromReference,
                &mut rng,
            );
            assert_eq!(decode(&g), target.decode());
        }
    }

    #[test]
    fn improve_leaves_target_untouched_and_clears_fitness() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut target = random_individual(6, &mut rng).unwrap();
        target.set_fitness(FitnessVector::new(0.1, 0.2, 0.3));
        let reference = random_individual(6, &mut rng).unwrap();
        let before = target.clone();
        let (out, trace) = improve_individual_traced(&target, &reference, 5, &mut rng);
        assert_eq!(target, before);
        assert!(out.fitness().is_none());
        assert!((1..=5).contains(&trace.len()));
        assert_eq!(out.genome().len(), 12);
    }

    #[test]
    fn subsample_caps_without_repeats() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let from: Vec<usize> = (100..130).collect();
        let s = subsample(&from, 10, &mut rng);
        assert_eq!(s.len(), 10);
        assert_eq!(s.iter().collect::<BTreeSet<_>>().len(), 10);
        assert!(s.iter().all(|x| from.contains(x)));
        assert_eq!(subsample(&from[..3], 10, &mut rng), vec![100, 101, 102]);
    }

    #[test]
    fn single_change_branch_frequencies() {
        let mut rng = ChaCha8Rng::seed_from_u64(30_000);
        let target = random_individual(8, &mut rng).unwrap();
        let reference = random_individual(8, &mut rng).unwrap();
        let mut counts = [0usize; 3];
        for _ in 0..30_000 {
            let (_, trace) = improve_individual_traced(&target, &reference, 1, &mut rng);
            assert_eq!(trace.len(), 1);
            counts[trace[0] as usize] += 1;
        }
        let sigma = (30_000.0 * (1.0 / 3.0) * (2.0 / 3.0f64)).sqrt();
        for c in counts {
            assert!((c as f64 - 10_000.0).abs() <= 3.0 * sigma, "{counts:?}");
        }
    }

    fn small_db() -> TransactionDb {
        TransactionDb::from_item_rows(
            6,
            &[
                vec![0, 1, 2],
                vec![0, 1],
                vec![3, 4, 5],
                vec![0, 1, 2, 3],
                vec![4],
            ],
        )
        .unwrap()
    }

    fn evaluated(rule: Rule, db: &TransactionDb) -> Individual {
        let mut ind = Individual::from_rule(&rule, db.item_count()).unwrap();
        evaluate_batch(std::slice::from_mut(&mut ind), db);
        ind
    }

    #[test]
    fn single_individual_is_archived_and_replaced() {
        let db = small_db();
        let only = evaluated(Rule::new(vec![0], vec![1]).unwrap(), &db);
        let mut pop = vec![only.clone()];
        let mut archive = ParetoArchive::new();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut replay = rng.clone();
        let stats = generation_step(
            &mut pop,
            &db,
            &mut archive,
            &CeaConfig::default(),
            &mut rng,
            &mut EvalLog::new(false),
        )
        .unwrap();
        assert_eq!(stats.candidates_evaluated, 0);
        let rule = only.decode().unwrap();
        assert!(archive
            .entries()
            .iter()
            .any(|e| e.rule == rule || dominates(&e.fitness, &fitness(&only))));
        let fresh = random_individual(db.item_count(), &mut replay).unwrap();
        assert_eq!(pop[0].genome(), fresh.genome());
        assert!(pop[0].fitness().is_some());
    }

    /// Replays one generation over `[a, b]` (a dominates b) by hand with a
    /// cloned random stream and compares against `generation_step`.
    #[test]
    fn two_individual_step_matches_replay() {
        let db = small_db();
        let cfg = CeaConfig::default();
        for seed in 0..50 {
            let a = evaluated(Rule::new(vec![0], vec![1]).unwrap(), &db);
            let b = evaluated(Rule::new(vec![3], vec![4]).unwrap(), &db);
            assert!(dominates(&fitness(&a), &fitness(&b)));

            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut replay = rng.clone();
            let mut pop = vec![a.clone(), b.clone()];
            let mut archive = ParetoArchive::new();
            generation_step(
                &mut pop,
                &db,
                &mut archive,
                &cfg,
                &mut rng,
                &mut EvalLog::new(false),
            )
            .unwrap();

            let pick = |cand: Individual, bar: FitnessVector, rng: &mut ChaCha8Rng| {
                let mut c = [cand];
                evaluate_batch(&mut c, &db);
                let [c] = c;
                if dominates(&fitness(&c), &bar) {
                    c
                } else {
                    let mut f = [random_individual(db.item_count(), rng).unwrap()];
                    evaluate_batch(&mut f, &db);
                    let [f] = f;
                    f
                }
            };
            // target a: non-dominated, improves b with a as reference
            let cand = improve_individual(&b, &a, cfg.max_changes, &mut replay);
            let new_a = pick(cand, fitness(&b), &mut replay);
            // target b, against the replaced first slot
            let expected_b = if dominates(&fitness(&new_a), &fitness(&b)) {
                let cand = improve_individual(&b, &new_a, cfg.max_changes, &mut replay);
                pick(cand, fitness(&b), &mut replay)
            } else if dominates(&fitness(&b), &fitness(&new_a)) {
                let cand = improve_individual(&new_a, &b, cfg.max_changes, &mut replay);
                pick(cand, fitness(&new_a), &mut replay)
            } else {
                let mut f = [random_individual(db.item_count(), &mut replay).unwrap()];
                evaluate_batch(&mut f, &db);
                let [f] = f;
                f
            };
            assert_eq!(pop[0].genome(), new_a.genome(), "seed {seed}");
            assert_eq!(pop[1].genome(), expected_b.genome(), "seed {seed}");
            // a was archived; it can only have left again by being dominated
            let a_rule = a.decode().unwrap();
            assert!(archive
                .entries()
                .iter()
                .any(|e| e.rule == a_rule || dominates(&e.fitness, &fitness(&a))));
        }
    }

    #[test]
    fn zero_generations_archive_the_initial_front() {
        let db = small_db();
        let cfg = CeaConfig {
            population_size: 20,
            generations: 0,
            seed: 3,
            ..Default::default()
        };
        let (archive, stats) = run(&cfg, &db).unwrap();
        assert!(stats.is_empty());
        let mut rng = <RunRng as rand::SeedableRng>::seed_from_u64(3);
        let pop = random_population(20, &db, &mut rng).unwrap();
        let mut expected = ParetoArchive::new();
        expected.merge(&pop).unwrap();
        assert_eq!(archive, expected);
    }

    #[test]
    fn same_seed_same_archive() {
        let db = small_db();
        let cfg = CeaConfig {
            population_size: 30,
            generations: 10,
            seed: 11,
            ..Default::default()
        };
        let (a, sa) = run(&cfg, &db).unwrap();
        let (b, sb) = run(&cfg, &db).unwrap();
        assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
        assert_eq!(sa.len(), 10);
        assert!(sa
            .iter()
            .zip(&sb)
            .all(|(x, y)| x.candidates_evaluated == y.candidates_evaluated));
    }

    #[test]
    fn candidate_budget_holds() {
        let db = small_db();
        let cfg = CeaConfig {
            population_size: 100,
            generations: 10,
            seed: 1,
            ..Default::default()
        };
        let (_, stats) = run(&cfg, &db).unwrap();
        assert!(stats
            .iter()
            .all(|s| s.candidates_evaluated <= 100 * cfg.candidate_cap));
    }

    #[test]
    fn config_validation() {
        assert!(CeaConfig::default().validate().is_ok());
        let bad = CeaConfig {
            max_changes: 0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = CeaConfig {
            candidate_cap: 0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }
}
