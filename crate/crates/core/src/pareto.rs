//! Pareto domination, non-dominated filtering and the cross-generation archive.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::FitnessVector;
use crate::rule::{Individual, Rule, RuleRecord};

/// `a` is at least as good as `b` everywhere and strictly better somewhere.
#[inline]
pub fn dominates(a: &FitnessVector, b: &FitnessVector) -> bool {
    let (a, b) = (a.as_array(), b.as_array());
    let mut strict = false;
    for k in 0..3 {
        if a[k] < b[k] {
            return false;
        }
        if a[k] > b[k] {
            strict = true;
        }
    }
    strict
}

/// Indices of points no other point dominates, in ascending order.
pub fn non_dominated_filter(points: &[FitnessVector]) -> Vec<usize> {
    // Descending objective sum puts dominators first almost always; the
    // retain handles sums that rounded to equal.
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&i, &j| points[j].sum().total_cmp(&points[i].sum()).then(i.cmp(&j)));
    let mut kept: Vec<usize> = Vec::new();
    for i in order {
        if !kept.iter().any(|&k| dominates(&points[k], &points[i])) {
            kept.retain(|&k| !dominates(&points[i], &points[k]));
            kept.push(i);
        }
    }
    kept.sort_unstable();
    kept
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArchiveEntry {
    pub rule: Rule,
    pub fitness: FitnessVector,
}

/// Mutually non-dominated rules accumulated across generations.
///
/// With a capacity set, a full archive refuses new non-dominated rules instead
/// of evicting existing ones; entries only ever leave when dominated.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ParetoArchive {
    entries: Vec<ArchiveEntry>,
    capacity: Option<usize>,
}

impl ParetoArchive {
    pub fn new() -> Self {
        ParetoArchive::default()
    }

    pub fn bounded(capacity: usize) -> Self {
        ParetoArchive {
            entries: Vec::new(),
            capacity: Some(capacity),
        }
    }

    pub fn entries(&self) -> &[ArchiveEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Offers one rule; returns whether it was admitted.
    pub fn offer(&mut self, rule: &Rule, fitness: FitnessVector) -> bool {
        if self
            .entries
            .iter()
            .any(|e| e.rule == *rule || dominates(&e.fitness, &fitness))
        {
            return false;
        }
        self.entries.retain(|e| !dominates(&fitness, &e.fitness));
        if self.capacity.is_some_and(|c| self.entries.len() >= c) {
            return false;
        }
        self.entries.push(ArchiveEntry {
            rule: rule.clone(),
            fitness,
        });
        true
    }

    /// Offers an evaluated individual; invalid rules are ignored.
    pub fn offer_individual(&mut self, ind: &Individual) -> Result<bool> {
        let fitness = ind
            .fitness()
            .ok_or_else(|| Error::contract("archive merge needs evaluated individuals"))?;
        Ok(match ind.decode() {
            Some(rule) => self.offer(&rule, fitness),
            None => false,
        })
    }

    pub fn merge(&mut self, population: &[Individual]) -> Result<()> {
        for ind in population {
            self.offer_individual(ind)?;
        }
        Ok(())
    }

    pub fn mean_fitness(&self) -> FitnessVector {
        if self.entries.is_empty() {
            return FitnessVector::ZERO;
        }
        let n = self.entries.len() as f64;
        let (s, c, k) = self.entries.iter().fold((0.0, 0.0, 0.0), |acc, e| {
            (
                acc.0 + e.fitness.support,
                acc.1 + e.fitness.confidence,
                acc.2 + e.fitness.cosine,
            )
        });
        FitnessVector::new(s / n, c / n, k / n)
    }

    pub fn records(&self) -> Vec<RuleRecord> {
        self.entries
            .iter()
            .map(|e| RuleRecord::new(&e.rule, e.fitness))
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.records())?)
    }

    pub fn from_records(records: &[RuleRecord]) -> Result<Self> {
        let mut archive = ParetoArchive::new();
        for r in records {
            archive.offer(&r.rule()?, r.fitness());
        }
        Ok(archive)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Relations {
    /// Individuals whose fitness dominates the target's.
    pub dominating: Vec<usize>,
    /// Individuals the target's fitness dominates.
    pub dominated: Vec<usize>,
}

pub fn find_relations(population: &[Individual], target: usize) -> Result<Relations> {
    let tf = population
        .get(target)
        .ok_or_else(|| Error::contract(format!("target {target} out of range")))?
        .fitness()
        .ok_or_else(|| Error::contract("target has no cached fitness"))?;
    let mut rel = Relations::default();
    for (i, ind) in population.iter().enumerate() {
        if i == target {
            continue;
        }
        let f = ind
            .fitness()
            .ok_or_else(|| Error::contract(format!("individual {i} has no cached fitness")))?;
        if dominates(&f, &tf) {
            rel.dominating.push(i);
        } else if dominates(&tf, &f) {
            rel.dominated.push(i);
        }
    }
    Ok(rel)
}

/// Uniform pick from a non-empty front.
pub fn best_of_front<R: Rng + ?Sized>(front: &[usize], rng: &mut R) -> Result<usize> {
    if front.is_empty() {
        return Err(Error::contract("best of an empty front"));
    }
    Ok(front[rng.random_range(0..front.len())])
}

/// Index dominated by the most others; ties broken uniformly.
pub fn worst_of_population<R: Rng + ?Sized>(
    fitness: &[FitnessVector],
    rng: &mut R,
) -> Result<usize> {
    if fitness.is_empty() {
        return Err(Error::contract("worst of an empty population"));
    }
    let counts: Vec<usize> = fitness
        .iter()
        .map(|f| fitness.iter().filter(|g| dominates(g, f)).count())
        .collect();
    let max = *counts.iter().max().expect("non-empty");
    let ties: Vec<usize> = (0..counts.len()).filter(|&i| counts[i] == max).collect();
    Ok(ties[rng.random_range(0..ties.len())])
}
