//! Multi-objective association rule mining with the Cambrian Explosion
//! Algorithm and four baseline meta-heuristics (NSGA-II, differential
//! evolution, particle swarm, simulated annealing).
//!
//! Rules are mined over a binarized transaction database held as one row
//! bitmap per item, and scored on support, confidence and cosine.

pub mod baselines;
pub mod bitmap;
pub mod cea;
pub mod cli;
pub mod dataset;
pub mod error;
pub mod exec;
pub mod measures;
pub mod optimizer;
pub mod pareto;
pub mod protocol;
pub mod report;
pub mod rule;
pub mod tune;

pub use baselines::{make_optimizer, AlgorithmParams, AlgorithmTag, OptimizerConfig};
pub use cea::{improve_individual, Cea, CeaConfig};
pub use dataset::{load_and_binarize, BinarizeOptions, ItemCatalog, Schema, TransactionDb};
pub use error::{Error, Result};
pub use measures::{evaluate, lift, FitnessVector};
pub use optimizer::{run_optimizer, GenerationStats, Optimizer, RunOutput};
pub use pareto::{dominates, non_dominated_filter, ParetoArchive};
pub use protocol::{coverage, run_protocol, ProtocolConfig, RunRecord};
pub use rule::{decode, random_individual, Individual, Rule};
