use rand::Rng;

use super::{AlgorithmTag, DeParams};
use crate::dataset::TransactionDb;
use crate::error::Result;
use crate::exec::evaluate_batch;
use crate::optimizer::{fitness, random_population, EvalLog, Optimizer, Rng as RunRng, StepStats};
use crate::pareto::{dominates, ParetoArchive};
use crate::rule::Individual;

/// rand/1/bin differential evolution. A trial replaces its target only when it
/// strictly dominates it.
#[derive(Debug)]
pub struct DifferentialEvolution {
    population_size: usize,
    params: DeParams,
    config: serde_json::Value,
    population: Vec<Individual>,
}

impl DifferentialEvolution {
    pub fn new(population_size: usize, params: DeParams, config: serde_json::Value) -> Self {
        DifferentialEvolution {
            population_size,
            params,
            config,
            population: Vec::new(),
        }
    }

    /// Three donors distinct from each other and from `target` when the
    /// population allows it, otherwise drawn with replacement.
    fn donors<R: Rng + ?Sized>(p: usize, target: usize, rng: &mut R) -> [usize; 3] {
        if p < 4 {
            return [0; 3].map(|_| rng.random_range(0..p));
        }
        let mut picked = [usize::MAX; 3];
        for k in 0..3 {
            loop {
                let c = rng.random_range(0..p);
                if c != target && !picked[..k].contains(&c) {
                    picked[k] = c;
                    break;
                }
            }
        }
        picked
    }

    fn trial<R: Rng + ?Sized>(&self, target: usize, rng: &mut R) -> Result<Individual> {
        let [r1, r2, r3] = Self::donors(self.population.len(), target, rng);
        let (x, a, b, c) = (
            self.population[target].genome(),
            self.population[r1].genome(),
            self.population[r2].genome(),
            self.population[r3].genome(),
        );
        let genome = (0..x.len())
            .map(|j| {
                if rng.random::<f64>() < self.params.crossover_rate {
                    a[j] + self.params.f * (b[j] - c[j])
                } else {
                    x[j]
                }
            })
            .collect();
        Individual::new(genome)
    }
}

impl Optimizer for DifferentialEvolution {
    fn tag(&self) -> AlgorithmTag {
        AlgorithmTag::De
    }

    fn initialize(
        &mut self,
        db: &TransactionDb,
        rng: &mut RunRng,
        log: &mut EvalLog,
    ) -> Result<()> {
        self.population = random_population(self.population_size, db, rng)?;
        log.record(&self.population);
        Ok(())
    }

    fn step(
        &mut self,
        db: &TransactionDb,
        _archive: &mut ParetoArchive,
        rng: &mut RunRng,
        log: &mut EvalLog,
    ) -> Result<StepStats> {
        let mut trials = (0..self.population.len())
            .map(|i| self.trial(i, rng))
            .collect::<Result<Vec<_>>>()?;
        evaluate_batch(&mut trials, db);
        log.record(&trials);
        let evaluated = trials.len();
        for (i, t) in trials.into_iter().enumerate() {
            if dominates(&fitness(&t), &fitness(&self.population[i])) {
                self.population[i] = t;
            }
        }
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
