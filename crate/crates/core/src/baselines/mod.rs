//! Baseline optimizers sharing the [`Optimizer`] contract with CEA.
//!
//! Each follows its textbook form adapted to the sign-coded genome and to
//! Pareto domination over (support, confidence, cosine).

mod de;
mod nsga2;
mod pso;
mod sa;

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::cea::{Cea, CeaConfig};
use crate::error::{Error, Result};
use crate::optimizer::Optimizer;

pub use de::DifferentialEvolution;
pub use nsga2::{crowding_distance, fast_non_dominated_sort, Nsga2};
pub use pso::ParticleSwarm;
pub use sa::SimulatedAnnealing;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AlgorithmTag {
    Cea,
    Nsga2,
    De,
    Pso,
    Sa,
}

impl AlgorithmTag {
    pub const ALL: [AlgorithmTag; 5] = [
        AlgorithmTag::Cea,
        AlgorithmTag::Nsga2,
        AlgorithmTag::De,
        AlgorithmTag::Pso,
        AlgorithmTag::Sa,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            AlgorithmTag::Cea => "cea",
            AlgorithmTag::Nsga2 => "nsga2",
            AlgorithmTag::De => "de",
            AlgorithmTag::Pso => "pso",
            AlgorithmTag::Sa => "sa",
        }
    }
}

impl fmt::Display for AlgorithmTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AlgorithmTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        AlgorithmTag::ALL
            .into_iter()
            .find(|t| t.as_str() == s.trim().to_ascii_lowercase())
            .ok_or_else(|| {
                Error::config(format!(
                    "unknown algorithm '{s}' (expected one of cea, nsga2, de, pso, sa)"
                ))
            })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CeaParams {
    pub max_changes: usize,
    pub candidate_cap: usize,
}

impl Default for CeaParams {
    fn default() -> Self {
        let d = CeaConfig::default();
        CeaParams {
            max_changes: d.max_changes,
            candidate_cap: d.candidate_cap,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Nsga2Params {
    pub mutation_rate: f64,
    pub crossover_rate: f64,
}

impl Default for Nsga2Params {
    fn default() -> Self {
        Nsga2Params {
            mutation_rate: 0.11,
            crossover_rate: 0.4,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DeParams {
    /// Differential weight.
    #[serde(rename = "F")]
    pub f: f64,
    pub crossover_rate: f64,
}

impl Default for DeParams {
    fn default() -> Self {
        DeParams {
            f: 0.08,
            crossover_rate: 0.72,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PsoParams {
    pub inertia: f64,
    pub local_accel: f64,
    pub global_accel: f64,
}

impl Default for PsoParams {
    fn default() -> Self {
        PsoParams {
            inertia: 0.65,
            local_accel: 0.38,
            global_accel: 0.19,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SaParams {
    /// Geometric cooling ratio.
    pub alpha: f64,
    pub max_changes: usize,
    pub max_local_search: usize,
}

impl Default for SaParams {
    fn default() -> Self {
        SaParams {
            alpha: 0.89,
            max_changes: 5,
            max_local_search: 10,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "algorithm", rename_all = "lowercase")]
pub enum AlgorithmParams {
    Cea(CeaParams),
    Nsga2(Nsga2Params),
    De(DeParams),
    Pso(PsoParams),
    Sa(SaParams),
}

fn unit(name: &str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::config(format!("{name} must lie in [0, 1], got {v}")))
    }
}

fn positive(name: &str, v: usize) -> Result<()> {
    if v >= 1 {
        Ok(())
    } else {
        Err(Error::config(format!("{name} must be at least 1")))
    }
}

impl AlgorithmParams {
    pub fn defaults(tag: AlgorithmTag) -> Self {
        match tag {
            AlgorithmTag::Cea => AlgorithmParams::Cea(CeaParams::default()),
            AlgorithmTag::Nsga2 => AlgorithmParams::Nsga2(Nsga2Params::default()),
            AlgorithmTag::De => AlgorithmParams::De(DeParams::default()),
            AlgorithmTag::Pso => AlgorithmParams::Pso(PsoParams::default()),
            AlgorithmTag::Sa => AlgorithmParams::Sa(SaParams::default()),
        }
    }

    pub fn tag(&self) -> AlgorithmTag {
        match self {
            AlgorithmParams::Cea(_) => AlgorithmTag::Cea,
            AlgorithmParams::Nsga2(_) => AlgorithmTag::Nsga2,
            AlgorithmParams::De(_) => AlgorithmTag::De,
            AlgorithmParams::Pso(_) => AlgorithmTag::Pso,
            AlgorithmParams::Sa(_) => AlgorithmTag::Sa,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            AlgorithmParams::Cea(p) => {
                positive("max_changes", p.max_changes)?;
                positive("candidate_cap", p.candidate_cap)
            }
            AlgorithmParams::Nsga2(p) => {
                unit("mutation_rate", p.mutation_rate)?;
                unit("crossover_rate", p.crossover_rate)
            }
            AlgorithmParams::De(p) => {
                unit("F", p.f)?;
                unit("crossover_rate", p.crossover_rate)
            }
            AlgorithmParams::Pso(p) => {
                unit("inertia", p.inertia)?;
                unit("local_accel", p.local_accel)?;
                unit("global_accel", p.global_accel)
            }
            AlgorithmParams::Sa(p) => {
                unit("alpha", p.alpha)?;
                positive("max_changes", p.max_changes)?;
                positive("max_local_search", p.max_local_search)
            }
        }
    }

    /// Draws every [0, 1] hyperparameter uniformly; count parameters keep
    /// their defaults.
    pub fn sample<R: Rng + ?Sized>(tag: AlgorithmTag, rng: &mut R) -> Result<Self> {
        Ok(match tag {
            AlgorithmTag::Cea => {
                return Err(Error::config("cea has no [0, 1] hyperparameters to tune"))
            }
            AlgorithmTag::Nsga2 => AlgorithmParams::Nsga2(Nsga2Params {
                mutation_rate: rng.random(),
                crossover_rate: rng.random(),
            }),
            AlgorithmTag::De => AlgorithmParams::De(DeParams {
                f: rng.random(),
                crossover_rate: rng.random(),
            }),
            AlgorithmTag::Pso => AlgorithmParams::Pso(PsoParams {
                inertia: rng.random(),
                local_accel: rng.random(),
                global_accel: rng.random(),
            }),
            AlgorithmTag::Sa => AlgorithmParams::Sa(SaParams {
                alpha: rng.random(),
                ..SaParams::default()
            }),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub population_size: usize,
    pub generations: usize,
    pub seed: u64,
    #[serde(flatten)]
    pub params: AlgorithmParams,
}

impl OptimizerConfig {
    /// Population 100, 50 generations and the tag's default hyperparameters.
    pub fn defaults(tag: AlgorithmTag) -> Self {
        OptimizerConfig {
            population_size: 100,
            generations: 50,
            seed: 0,
            params: AlgorithmParams::defaults(tag),
        }
    }

    pub fn tag(&self) -> AlgorithmTag {
        self.params.tag()
    }

    pub fn validate(&self) -> Result<()> {
        positive("population_size", self.population_size)?;
        self.params.validate()
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serializes")
    }
}

pub fn make_optimizer(config: &OptimizerConfig) -> Result<Box<dyn Optimizer>> {
    config.validate()?;
    let p = config.population_size;
    Ok(match &config.params {
        AlgorithmParams::Cea(c) => Box::new(Cea::new(CeaConfig {
            population_size: p,
            generations: config.generations,
            max_changes: c.max_changes,
            candidate_cap: c.candidate_cap,
            seed: config.seed,
        })?),
        AlgorithmParams::Nsga2(c) => Box::new(Nsga2::new(p, c.clone(), config.to_json())),
        AlgorithmParams::De(c) => {
            Box::new(DifferentialEvolution::new(p, c.clone(), config.to_json()))
        }
        AlgorithmParams::Pso(c) => Box::new(ParticleSwarm::new(p, c.clone(), config.to_json())),
        AlgorithmParams::Sa(c) => Box::new(SimulatedAnnealing::new(p, c.clone(), config.to_json())),
    })
}
