use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{AlgorithmTag, SaParams};
use crate::dataset::TransactionDb;
use crate::error::Result;
use crate::exec::map_ordered;
use crate::measures::evaluate_genome;
use crate::optimizer::{fitness, random_population, EvalLog, Optimizer, Rng as RunRng, StepStats};
use crate::pareto::{dominates, ParetoArchive};
use crate::rule::{magnitude, Individual};

/// Independent annealing trajectories, one per population slot.
///
/// Every generation each trajectory tries up to `max_local_search` neighbours
/// and moves to the first one it accepts. A dominating neighbour is always
/// accepted; any other with probability `exp(-1 / T)`. `T` starts at 1 and is
/// multiplied by `alpha` after each generation.
#[derive(Debug)]
pub struct SimulatedAnnealing {
    population_size: usize,
    params: SaParams,
    config: serde_json::Value,
    population: Vec<Individual>,
    temperature: f64,
}

/// One random edit: add an absent item, drop a present one, or flip a role.
pub(crate) fn perturb<R: Rng + ?Sized>(genome: &mut [f64], rng: &mut R) {
    let n = genome.len() / 2;
    let (present, absent): (Vec<usize>, Vec<usize>) = (0..n).partition(|&i| genome[i] > 0.0);
    match rng.random_range(0..3) {
        0 if !absent.is_empty() => {
            let j = absent[rng.random_range(0..absent.len())];
            genome[j] = magnitude(rng);
            let m = magnitude(rng);
            genome[n + j] = if rng.random_bool(0.5) { m } else { -m };
        }
        1 if !present.is_empty() => {
            let j = present[rng.random_range(0..present.len())];
            genome[j] = -magnitude(rng);
        }
        2 if !present.is_empty() => {
            let j = present[rng.random_range(0..present.len())];
            genome[n + j] = -genome[n + j];
        }
        _ => {}
    }
}

struct Outcome {
    next: Option<Individual>,
    tried: Vec<Individual>,
}

impl SimulatedAnnealing {
    pub fn new(population_size: usize, params: SaParams, config: serde_json::Value) -> Self {
        SimulatedAnnealing {
            population_size,
            params,
            config,
            population: Vec::new(),
            temperature: 1.0,
        }
    }

    pub fn temperature(&self) -> f64 {
        self.temperature
    }

    fn anneal(&self, current: &Individual, seed: u64, db: &TransactionDb) -> Outcome {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let accept_worse = (-1.0 / self.temperature).exp();
        let cur = fitness(current);
        let mut tried = Vec::new();
        for _ in 0..self.params.max_local_search {
            let mut genome = current.genome().to_vec();
            for _ in 0..rng.random_range(1..=self.params.max_changes) {
                perturb(&mut genome, &mut rng);
            }
            let f = evaluate_genome(&genome, db);
            let mut neighbour = Individual::new(genome).expect("genome length preserved");
            neighbour.set_fitness(f);
            tried.push(neighbour);
            if dominates(&f, &cur) || rng.random::<f64>() < accept_worse {
                return Outcome {
                    next: tried.last().cloned(),
                    tried,
                };
            }
        }
        Outcome { next: None, tried }
    }
}

impl Optimizer for SimulatedAnnealing {
    fn tag(&self) -> AlgorithmTag {
        AlgorithmTag::Sa
    }

    fn initialize(
        &mut self,
        db: &TransactionDb,
        rng: &mut RunRng,
        log: &mut EvalLog,
    ) -> Result<()> {
        self.population = random_population(self.population_size, db, rng)?;
        log.record(&self.population);
        self.temperature = 1.0;
        Ok(())
    }

    fn step(
        &mut self,
        db: &TransactionDb,
        _archive: &mut ParetoArchive,
        rng: &mut RunRng,
        log: &mut EvalLog,
    ) -> Result<StepStats> {
        let jobs: Vec<(usize, u64)> = (0..self.population.len())
            .map(|i| (i, rng.random()))
            .collect();
        let outcomes = map_ordered(&jobs, |&(i, seed)| {
            self.anneal(&self.population[i], seed, db)
        });
        let mut evaluated = 0;
        for (slot, out) in outcomes.into_iter().enumerate() {
            evaluated += out.tried.len();
            log.record(&out.tried);
            if let Some(next) = out.next {
                self.population[slot] = next;
            }
        }
        self.temperature *= self.params.alpha;
        Ok(StepStats {
            candidates_evaluated: evaluated,
        })
    }

    fn population(&self) -> &[Individual] {
        &self.population
    }

    fn config_json(&self) -> serde_json::Value {
        self.config.clone()
    }
}
