//! Batch fitness evaluation, data-parallel when the `parallel` feature is on.
//!
//! Results never depend on scheduling: each slot is written by exactly one
//! evaluation and slots keep their input order.

use crate::dataset::TransactionDb;
use crate::measures::{evaluate_genome, FitnessVector};
use crate::rule::Individual;

pub fn evaluate_batch_sequential(batch: &mut [Individual], db: &TransactionDb) {
    for ind in batch.iter_mut() {
        let f = evaluate_genome(ind.genome(), db);
        ind.set_fitness(f);
    }
}

#[cfg(feature = "parallel")]
pub fn evaluate_batch_parallel(batch: &mut [Individual], db: &TransactionDb) {
    use rayon::prelude::*;
    batch.par_iter_mut().with_min_len(8).for_each(|ind| {
        let f = evaluate_genome(ind.genome(), db);
        ind.set_fitness(f);
    });
}

/// Evaluates every individual in place.
pub fn evaluate_batch(batch: &mut [Individual], db: &TransactionDb) {
    #[cfg(feature = "parallel")]
    evaluate_batch_parallel(batch, db);
    #[cfg(not(feature = "parallel"))]
    evaluate_batch_sequential(batch, db);
}

pub fn fitness_of(batch: &[Individual]) -> Vec<FitnessVector> {
    batch
        .iter()
        .map(|i| i.fitness().unwrap_or(FitnessVector::ZERO))
        .collect()
}

/// Order-preserving map over a slice.
pub fn map_ordered<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}

/// Runs `f` on a pool of `jobs` threads (`None` = all cores).
pub fn with_jobs<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> T {
    #[cfg(feature = "parallel")]
    {
        match jobs {
            Some(n) => match rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
            {
                Ok(pool) => pool.install(f),
                Err(_) => f(),
            },
            None => f(),
        }
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = jobs;
        f()
    }
}
