use rand::Rng;

use super::{AlgorithmTag, PsoParams};
use crate::dataset::TransactionDb;
use crate::error::Result;
use crate::exec::{evaluate_batch, fitness_of};
use crate::optimizer::{fitness, random_population, EvalLog, Optimizer, Rng as RunRng, StepStats};
use crate::pareto::{best_of_front, dominates, non_dominated_filter, ParetoArchive};
use crate::rule::Individual;

/// Particle swarm over the real genomes. Velocities start at zero; the global
/// guide is drawn once per generation from the front of personal bests.
#[derive(Debug)]
pub struct ParticleSwarm {
    population_size: usize,
    params: PsoParams,
    config: serde_json::Value,
    population: Vec<Individual>,
    velocity: Vec<Vec<f64>>,
    personal_best: Vec<Individual>,
}

impl ParticleSwarm {
    pub fn new(population_size: usize, params: PsoParams, config: serde_json::Value) -> Self {
        ParticleSwarm {
            population_size,
            params,
            config,
            population: Vec::new(),
            velocity: Vec::new(),
            personal_best: Vec::new(),
        }
    }

    pub fn personal_best(&self) -> &[Individual] {
        &self.personal_best
    }
}

impl Optimizer for ParticleSwarm {
    fn tag(&self) -> AlgorithmTag {
        AlgorithmTag::Pso
    }

    fn initialize(
        &mut self,
        db: &TransactionDb,
        rng: &mut RunRng,
        log: &mut EvalLog,
    ) -> Result<()> {
        self.population = random_population(self.population_size, db, rng)?;
        log.record(&self.population);
        let dims = 2 * db.item_count();
        self.velocity = vec![vec![0.0; dims]; self.population.len()];
        self.personal_best = self.population.clone();
        Ok(())
    }

    fn step(
        &mut self,
        db: &TransactionDb,
        _archive: &mut ParetoArchive,
        rng: &mut RunRng,
        log: &mut EvalLog,
    ) -> Result<StepStats> {
        let front = non_dominated_filter(&fitness_of(&self.personal_best));
        let guide = self.personal_best[best_of_front(&front, rng)?]
            .genome()
            .to_vec();
        let PsoParams {
            inertia,
            local_accel,
            global_accel,
        } = self.params;

        for ((ind, v), pb) in self
            .population
            .iter_mut()
            .zip(&mut self.velocity)
            .zip(&self.personal_best)
        {
            let pb = pb.genome();
            let x = ind.genome_mut();
            for j in 0..x.len() {
                let r1: f64 = rng.random();
                let r2: f64 = rng.random();
                v[j] = inertia * v[j]
                    + local_accel * r1 * (pb[j] - x[j])
                    + global_accel * r2 * (guide[j] - x[j]);
                x[j] += v[j];
            }
        }
        evaluate_batch(&mut self.population, db);
        log.record(&self.population);

        for (pb, ind) in self.personal_best.iter_mut().zip(&self.population) {
            if dominates(&fitness(ind), &fitness(pb)) {
                *pb = ind.clone();
            }
        }
        Ok(StepStats {
            candidates_evaluated: self.population.len(),
        })
    }

    fn population(&self) -> &[Individual] {
        &self.population
    }

    fn config_json(&self) -> serde_json::Value {
        self.config.clone()
    }
}
