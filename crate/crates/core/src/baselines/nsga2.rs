use rand::Rng;

use super::{AlgorithmTag, Nsga2Params};
use crate::dataset::TransactionDb;
use crate::error::Result;
use crate::exec::{evaluate_batch, fitness_of};
use crate::measures::FitnessVector;
use crate::optimizer::{random_population, EvalLog, Optimizer, Rng as RunRng, StepStats};
use crate::pareto::{dominates, ParetoArchive};
use crate::rule::Individual;

/// Fronts in rank order; front 0 is non-dominated. Indices ascend within a front.
pub fn fast_non_dominated_sort(points: &[FitnessVector]) -> Vec<Vec<usize>> {
    let n = points.len();
    let mut dominated_by_me: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut dominator_count = vec![0usize; n];
    for i in 0..n {
        for j in (i + 1)..n {
            if dominates(&points[i], &points[j]) {
                dominated_by_me[i].push(j);
                dominator_count[j] += 1;
            } else if dominates(&points[j], &points[i]) {
                dominated_by_me[j].push(i);
                dominator_count[i] += 1;
            }
        }
    }
    let mut fronts = Vec::new();
    let mut current: Vec<usize> = (0..n).filter(|&i| dominator_count[i] == 0).collect();
    while !current.is_empty() {
        let mut next = Vec::new();
        for &i in &current {
            for &j in &dominated_by_me[i] {
                dominator_count[j] -= 1;
                if dominator_count[j] == 0 {
                    next.push(j);
                }
            }
        }
        next.sort_unstable();
        fronts.push(std::mem::replace(&mut current, next));
    }
    fronts
}

/// Crowding distance of each member of `front`, aligned with `front`.
/// Boundary points get infinity.
pub fn crowding_distance(points: &[FitnessVector], front: &[usize]) -> Vec<f64> {
    let m = front.len();
    let mut dist = vec![0.0; m];
    if m <= 2 {
        return vec![f64::INFINITY; m];
    }
    for k in 0..3 {
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&a, &b| {
            points[front[a]].as_array()[k]
                .total_cmp(&points[front[b]].as_array()[k])
                .then(a.cmp(&b))
        });
        let lo = points[front[order[0]]].as_array()[k];
        let hi = points[front[order[m - 1]]].as_array()[k];
        // an axis with no spread says nothing about crowding
        if hi > lo {
            dist[order[0]] = f64::INFINITY;
            dist[order[m - 1]] = f64::INFINITY;
            for w in 1..m - 1 {
                let prev = points[front[order[w - 1]]].as_array()[k];
                let next = points[front[order[w + 1]]].as_array()[k];
                dist[order[w]] += (next - prev) / (hi - lo);
            }
        }
    }
    dist
}

/// Rank and crowding per index of `points`.
fn rank_and_crowding(points: &[FitnessVector]) -> (Vec<usize>, Vec<f64>) {
    let mut rank = vec![0; points.len()];
    let mut crowd = vec![0.0; points.len()];
    for (r, front) in fast_non_dominated_sort(points).iter().enumerate() {
        for (&i, d) in front.iter().zip(crowding_distance(points, front)) {
            rank[i] = r;
            crowd[i] = d;
        }
    }
    (rank, crowd)
}

#[derive(Debug)]
pub struct Nsga2 {
    population_size: usize,
    params: Nsga2Params,
    config: serde_json::Value,
    population: Vec<Individual>,
}

impl Nsga2 {
    pub fn new(population_size: usize, params: Nsga2Params, config: serde_json::Value) -> Self {
        Nsga2 {
            population_size,
            params,
            config,
            population: Vec::new(),
        }
    }

    fn tournament<R: Rng + ?Sized>(rank: &[usize], crowd: &[f64], rng: &mut R) -> usize {
        let a = rng.random_range(0..rank.len());
        let b = rng.random_range(0..rank.len());
        if rank[b] < rank[a] || (rank[b] == rank[a] && crowd[b] > crowd[a]) {
            b
        } else {
            a
        }
    }

    fn mutate<R: Rng + ?Sized>(&self, genome: &mut [f64], rng: &mut R) {
        for g in genome.iter_mut() {
            if rng.random_bool(self.params.mutation_rate) {
                *g = -*g;
            }
        }
    }
}

/// Survivors of `pool` by front, the split front truncated by descending crowding.
pub(crate) fn environmental_selection(points: &[FitnessVector], size: usize) -> Vec<usize> {
    let mut chosen = Vec::with_capacity(size);
    for front in fast_non_dominated_sort(points) {
        if chosen.len() + front.len() <= size {
            chosen.extend_from_slice(&front);
            continue;
        }
        let d = crowding_distance(points, &front);
        let mut order: Vec<usize> = (0..front.len()).collect();
        order.sort_by(|&a, &b| d[b].total_cmp(&d[a]).then(a.cmp(&b)));
        let room = size - chosen.len();
        chosen.extend(order[..room].iter().map(|&o| front[o]));
        break;
    }
    chosen
}

impl Optimizer for Nsga2 {
    fn tag(&self) -> AlgorithmTag {
        AlgorithmTag::Nsga2
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
        let p = self.population.len();
        let (rank, crowd) = rank_and_crowding(&fitness_of(&self.population));

        let mut offspring: Vec<Individual> = Vec::with_capacity(p + 1);
        while offspring.len() < p {
            let a = Self::tournament(&rank, &crowd, rng);
            let b = Self::tournament(&rank, &crowd, rng);
            let mut ga = self.population[a].genome().to_vec();
            let mut gb = self.population[b].genome().to_vec();
            if rng.random_bool(self.params.crossover_rate) {
                for j in 0..ga.len() {
                    if rng.random_bool(0.5) {
                        std::mem::swap(&mut ga[j], &mut gb[j]);
                    }
                }
            }
            self.mutate(&mut ga, rng);
            self.mutate(&mut gb, rng);
            offspring.push(Individual::new(ga)?);
            offspring.push(Individual::new(gb)?);
        }
        offspring.truncate(p);
        evaluate_batch(&mut offspring, db);
        log.record(&offspring);
        let evaluated = offspring.len();

        let mut pool = std::mem::take(&mut self.population);
        pool.extend(offspring);
        let keep = environmental_selection(&fitness_of(&pool), p);
        let mut slots: Vec<Option<Individual>> = pool.into_iter().map(Some).collect();
        self.population = keep
            .into_iter()
            .map(|i| slots[i].take().expect("each survivor chosen once"))
            .collect();
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
