//! Genome encoding of a single association rule and its decoding.
//!
//! A genome over `N` items has `2N` real entries. Entry `i` marks item `i` as
//! present when positive; entry `N + i` then places a present item in the
//! antecedent when positive and in the consequent otherwise. Magnitudes carry
//! no meaning.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::ItemCatalog;
use crate::error::{Error, Result};
use crate::measures::FitnessVector;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Rule {
    antecedent: Vec<usize>,
    consequent: Vec<usize>,
}

impl Rule {
    /// Sorts both sides; rejects empty or overlapping sides.
    pub fn new(mut antecedent: Vec<usize>, mut consequent: Vec<usize>) -> Result<Self> {
        antecedent.sort_unstable();
        antecedent.dedup();
        consequent.sort_unstable();
        consequent.dedup();
        if antecedent.is_empty() || consequent.is_empty() {
            return Err(Error::contract("rule sides must be non-empty"));
        }
        if antecedent
            .iter()
            .any(|i| consequent.binary_search(i).is_ok())
        {
            return Err(Error::contract("antecedent and consequent overlap"));
        }
        Ok(Rule {
            antecedent,
            consequent,
        })
    }

    pub fn antecedent(&self) -> &[usize] {
        &self.antecedent
    }

    pub fn consequent(&self) -> &[usize] {
        &self.consequent
    }

    /// Sorted union of both sides.
    pub fn items(&self) -> Vec<usize> {
        let mut all: Vec<usize> = self
            .antecedent
            .iter()
            .chain(&self.consequent)
            .copied()
            .collect();
        all.sort_unstable();
        all
    }

    pub fn len(&self) -> usize {
        self.antecedent.len() + self.consequent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn describe(&self, catalog: &ItemCatalog) -> String {
        let side = |items: &[usize]| {
            items
                .iter()
                .map(|&i| catalog.label(i))
                .collect::<Vec<_>>()
                .join(", ")
        };
        format!(
            "{{{}}} => {{{}}}",
            side(&self.antecedent),
            side(&self.consequent)
        )
    }
}

/// Decodes a `2N` genome; `None` when either side comes out empty.
pub fn decode(genome: &[f64]) -> Option<Rule> {
    let n = genome.len() / 2;
    let (presence, role) = genome.split_at(n);
    let mut antecedent = Vec::new();
    let mut consequent = Vec::new();
    for i in 0..n {
        if presence[i] > 0.0 {
            if role[i] > 0.0 {
                antecedent.push(i);
            } else {
                consequent.push(i);
            }
        }
    }
    if antecedent.is_empty() || consequent.is_empty() {
        None
    } else {
        Some(Rule {
            antecedent,
            consequent,
        })
    }
}

/// Uniform magnitude in `(0, 1]`, never zero.
#[inline]
pub(crate) fn magnitude<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    1.0 - rng.random::<f64>()
}

#[derive(Clone, Debug, PartialEq)]
pub struct Individual {
    genome: Vec<f64>,
    fitness: Option<FitnessVector>,
}

impl Individual {
    pub fn new(genome: Vec<f64>) -> Result<Self> {
        if genome.is_empty() || !genome.len().is_multiple_of(2) {
            return Err(Error::contract(format!(
                "genome length {} is not 2N with N >= 1",
                genome.len()
            )));
        }
        Ok(Individual {
            genome,
            fitness: None,
        })
    }

    /// Builds the genome of `rule` over `n` items, absent items negative.
    pub fn from_rule(rule: &Rule, n: usize) -> Result<Self> {
        if rule.items().last().is_some_and(|&i| i >= n) {
            return Err(Error::contract("rule item outside genome"));
        }
        let mut genome = vec![-1.0; 2 * n];
        for &i in rule.antecedent() {
            genome[i] = 1.0;
            genome[n + i] = 1.0;
        }
        for &i in rule.consequent() {
            genome[i] = 1.0;
        }
        Individual::new(genome)
    }

    pub fn item_count(&self) -> usize {
        self.genome.len() / 2
    }

    pub fn genome(&self) -> &[f64] {
        &self.genome
    }

    /// Mutable access drops the cached fitness.
    pub fn genome_mut(&mut self) -> &mut [f64] {
        self.fitness = None;
        &mut self.genome
    }

    pub fn into_genome(self) -> Vec<f64> {
        self.genome
    }

    pub fn fitness(&self) -> Option<FitnessVector> {
        self.fitness
    }

    pub fn set_fitness(&mut self, fitness: FitnessVector) {
        self.fitness = Some(fitness);
    }

    pub fn decode(&self) -> Option<Rule> {
        decode(&self.genome)
    }

    pub fn is_present(&self, item: usize) -> bool {
        self.genome[item] > 0.0
    }

    pub fn present_items(&self) -> Vec<usize> {
        (0..self.item_count())
            .filter(|&i| self.is_present(i))
            .collect()
    }

    pub fn absent_items(&self) -> Vec<usize> {
        (0..self.item_count())
            .filter(|&i| !self.is_present(i))
            .collect()
    }
}

/// A fresh `{a} => {c}` rule over two distinct uniformly drawn items.
pub fn random_individual<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Individual> {
    if n < 2 {
        return Err(Error::contract(format!(
            "random individual needs N >= 2, got {n}"
        )));
    }
    let a = rng.random_range(0..n);
    let mut c = rng.random_range(0..n - 1);
    if c >= a {
        c += 1;
    }
    let mut genome = Vec::with_capacity(2 * n);
    for _ in 0..n {
        genome.push(-magnitude(rng));
    }
    for _ in 0..n {
        let m = magnitude(rng);
        genome.push(if rng.random_bool(0.5) { m } else { -m });
    }
    genome[a] = magnitude(rng);
    genome[c] = magnitude(rng);
    genome[n + a] = magnitude(rng);
    genome[n + c] = -magnitude(rng);
    Individual::new(genome)
}

/// Serialized form of a rule with its objectives.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RuleRecord {
    pub antecedent: Vec<usize>,
    pub consequent: Vec<usize>,
    pub support: f64,
    pub confidence: f64,
    pub cosine: f64,
}

pub(crate) fn round6(x: f64) -> f64 {
    (x * 1e6).round() / 1e6
}

impl RuleRecord {
    pub fn new(rule: &Rule, fitness: FitnessVector) -> Self {
        RuleRecord {
            antecedent: rule.antecedent.clone(),
            consequent: rule.consequent.clone(),
            support: round6(fitness.support),
            confidence: round6(fitness.confidence),
            cosine: round6(fitness.cosine),
        }
    }

    pub fn rule(&self) -> Result<Rule> {
        Rule::new(self.antecedent.clone(), self.consequent.clone())
    }

    pub fn fitness(&self) -> FitnessVector {
        FitnessVector::new(self.support, self.confidence, self.cosine)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn decodes_the_worked_example() {
        let g = [-2.5, 0.8, 1.2, 2.1, 3.6, -8.2, -7.4, 5.5, 4.3, 1.02];
        let rule = decode(&g).unwrap();
        assert_eq!(rule.antecedent(), &[2, 3, 4]);
        assert_eq!(rule.consequent(), &[1]);
    }

    #[test]
    fn no_present_items_is_invalid() {
        assert!(decode(&[-1.0, -2.0, -0.5, 1.0, 1.0, 1.0]).is_none());
    }

    #[test]
    fn all_antecedent_is_invalid() {
        assert!(decode(&[1.0, 2.0, 0.5, 1.0, 1.0, 1.0]).is_none());
    }

    #[test]
    fn zero_presence_means_absent() {
        assert!(decode(&[0.0, 1.0, 1.0, 1.0, 1.0, -1.0]).is_some());
        let r = decode(&[0.0, 1.0, 1.0, 1.0, 1.0, -1.0]).unwrap();
        assert_eq!(r.items(), vec![1, 2]);
    }

    #[test]
    fn rule_new_validates() {
        assert!(Rule::new(vec![], vec![1]).is_err());
        assert!(Rule::new(vec![1, 2], vec![2]).is_err());
        let r = Rule::new(vec![3, 1, 3], vec![0]).unwrap();
        assert_eq!(r.antecedent(), &[1, 3]);
    }

    #[test]
    fn from_rule_roundtrips() {
        let r = Rule::new(vec![0, 4], vec![2]).unwrap();
        let ind = Individual::from_rule(&r, 5).unwrap();
        assert_eq!(ind.decode().unwrap(), r);
        assert!(Individual::from_rule(&r, 4).is_err());
    }

    #[test]
    fn random_individual_on_two_items_reaches_both_rules() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut seen = std::collections::BTreeSet::new();
        for _ in 0..100 {
            let r = random_individual(2, &mut rng).unwrap().decode().unwrap();
            seen.insert((r.antecedent().to_vec(), r.consequent().to_vec()));
        }
        let expected: std::collections::BTreeSet<_> = [(vec![0], vec![1]), (vec![1], vec![0])]
            .into_iter()
            .collect();
        assert_eq!(seen, expected);
    }

    #[test]
    fn random_individual_is_seed_deterministic() {
        let a = random_individual(5, &mut ChaCha8Rng::seed_from_u64(11)).unwrap();
        let b = random_individual(5, &mut ChaCha8Rng::seed_from_u64(11)).unwrap();
        assert_eq!(a.genome(), b.genome());
        let r = a.decode().unwrap();
        assert_eq!((r.antecedent().len(), r.consequent().len()), (1, 1));
    }

    #[test]
    fn random_individual_rejects_tiny_catalog() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(random_individual(1, &mut rng).is_err());
        assert!(random_individual(0, &mut rng).is_err());
    }

    #[test]
    fn random_individual_covers_every_ordered_pair() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let n = 10;
        let mut counts = vec![0usize; n * n];
        for _ in 0..10_000 {
            let r = random_individual(n, &mut rng).unwrap().decode().unwrap();
            counts[r.antecedent()[0] * n + r.consequent()[0]] += 1;
        }
        // 90 ordered pairs, expectation ~111 draws each
        let pairs: Vec<usize> = (0..n * n)
            .filter(|k| k / n != k % n)
            .map(|k| counts[k])
            .collect();
        assert!(pairs.iter().all(|&c| c > 0));
        assert!((0..n).all(|i| counts[i * n + i] == 0));
        let expected = 10_000.0 / 90.0;
        let chi2: f64 = pairs
            .iter()
            .map(|&c| (c as f64 - expected).powi(2) / expected)
            .sum();
        // 89 dof, p = 0.001 critical value is about 134.6
        assert!(chi2 < 134.6, "chi2 = {chi2}");
    }
}
