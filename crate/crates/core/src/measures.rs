//! Objective functions: support, confidence, cosine, plus lift.
//!
//! Counts are exact popcounts; each ratio is a single floating-point division.
//! Any zero denominator yields 0.

use serde::{Deserialize, Serialize};

use crate::dataset::{RuleCounts, TransactionDb};
use crate::rule::Rule;

/// `(support, confidence, cosine)`, each in `[0, 1]`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FitnessVector {
    pub support: f64,
    pub confidence: f64,
    pub cosine: f64,
}

impl FitnessVector {
    pub const ZERO: FitnessVector = FitnessVector {
        support: 0.0,
        confidence: 0.0,
        cosine: 0.0,
    };

    pub const fn new(support: f64, confidence: f64, cosine: f64) -> Self {
        FitnessVector {
            support,
            confidence,
            cosine,
        }
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.support, self.confidence, self.cosine]
    }

    pub fn sum(&self) -> f64 {
        self.support + self.confidence + self.cosine
    }
}

impl RuleCounts {
    pub fn fitness(&self) -> FitnessVector {
        let nac = self.joint as f64;
        let support = nac / self.rows as f64;
        let confidence = if self.antecedent > 0 {
            nac / self.antecedent as f64
        } else {
            0.0
        };
        let cosine = if self.antecedent > 0 && self.consequent > 0 {
            nac / ((self.antecedent as f64) * (self.consequent as f64)).sqrt()
        } else {
            0.0
        };
        FitnessVector {
            support,
            confidence,
            cosine,
        }
    }

    pub fn lift(&self) -> f64 {
        if self.antecedent > 0 && self.consequent > 0 {
            (self.joint as f64 * self.rows as f64)
                / (self.antecedent as f64 * self.consequent as f64)
        } else {
            0.0
        }
    }
}

/// Panics if the rule references an item outside `db`.
pub fn counts(rule: &Rule, db: &TransactionDb) -> RuleCounts {
    db.rule_counts(rule.antecedent(), rule.consequent())
        .expect("rule items within catalog range")
}

/// Fitness of a decoded rule; an invalid rule scores zero everywhere.
pub fn evaluate(rule: Option<&Rule>, db: &TransactionDb) -> FitnessVector {
    match rule {
        Some(r) => counts(r, db).fitness(),
        None => FitnessVector::ZERO,
    }
}

pub fn evaluate_genome(genome: &[f64], db: &TransactionDb) -> FitnessVector {
    evaluate(crate::rule::decode(genome).as_ref(), db)
}

pub fn lift(rule: &Rule, db: &TransactionDb) -> f64 {
    counts(rule, db).lift()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_db() -> TransactionDb {
        // X in rows {0,1,2}, Y in rows {0,1}, Z empty, W everywhere
        TransactionDb::from_item_rows(4, &[vec![0, 1, 2], vec![0, 1], vec![], vec![0, 1, 2, 3]])
            .unwrap()
    }

    #[test]
    fn worked_example() {
        let db = sample_db();
        let r = Rule::new(vec![0], vec![1]).unwrap();
        let f = evaluate(Some(&r), &db);
        assert_eq!(f.support, 0.5);
        assert!((f.confidence - 2.0 / 3.0).abs() < 1e-12);
        assert!((f.cosine - 0.816_496_580_927_726).abs() < 1e-12);
        assert!((lift(&r, &db) - 4.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn empty_item_gives_zero() {
        let db = sample_db();
        let r = Rule::new(vec![2], vec![1]).unwrap();
        assert_eq!(evaluate(Some(&r), &db), FitnessVector::ZERO);
        let r = Rule::new(vec![1], vec![2]).unwrap();
        assert_eq!(evaluate(Some(&r), &db), FitnessVector::ZERO);
        assert_eq!(lift(&r, &db), 0.0);
    }

    #[test]
    fn invalid_rule_is_zero() {
        assert_eq!(evaluate(None, &sample_db()), FitnessVector::ZERO);
    }

    #[test]
    fn perfect_rule() {
        let db = TransactionDb::from_item_rows(3, &[vec![0, 1, 2], vec![0, 1, 2]]).unwrap();
        let r = Rule::new(vec![0], vec![1]).unwrap();
        assert_eq!(evaluate(Some(&r), &db), FitnessVector::new(1.0, 1.0, 1.0));
    }

    #[test]
    fn independent_items_have_unit_lift() {
        let db = TransactionDb::from_item_rows(8, &[vec![0, 1, 2, 3], vec![0, 1, 4, 5]]).unwrap();
        let r = Rule::new(vec![0], vec![1]).unwrap();
        assert_eq!(lift(&r, &db), 1.0);
    }

    #[test]
    fn antecedent_inside_consequent_rows() {
        // rows(A) = {0,1} subset of rows(C) = {0,1,2}, so nAC = nA and lift = R / nC
        let db = TransactionDb::from_item_rows(6, &[vec![0, 1], vec![0, 1, 2]]).unwrap();
        let r = Rule::new(vec![0], vec![1]).unwrap();
        assert!((lift(&r, &db) - 6.0 / 3.0).abs() < 1e-12);
        assert_eq!(evaluate(Some(&r), &db).confidence, 1.0);
    }

    #[test]
    fn cosine_squared_is_lift_times_support() {
        let db = sample_db();
        let r = Rule::new(vec![0, 3], vec![1]).unwrap();
        let f = evaluate(Some(&r), &db);
        assert!((f.cosine.powi(2) - lift(&r, &db) * f.support).abs() < 1e-12);
    }
}
