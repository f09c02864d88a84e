//! Run configuration. Field names follow the algorithm's
//! hyper-parameter symbols so a config file doubles as a parameter
//! sheet; unspecified fields load their standard defaults.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::operators::MutationParams;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config: {0}")]
    Io(#[from] std::io::Error),
    #[error("cannot parse config at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolutionConfig {
    /// Benchmark task: "xor", "pole", "pole:random" or "parity:<length>".
    #[serde(default = "defaults::environment")]
    pub environment: String,
    /// Master RNG seed; every random decision of a run derives from it.
    #[serde(default)]
    pub seed: u64,
    /// Initial population size P_init.
    #[serde(default = "defaults::p_init")]
    pub p_init: usize,
    /// Maximum population size P_max.
    #[serde(default = "defaults::p_max")]
    pub p_max: usize,
    /// Ebb factor: shrink rate when no species were deleted.
    #[serde(default = "defaults::ebb")]
    pub ebb: f64,
    /// Mutation offset m_o.
    #[serde(default = "defaults::m_o")]
    pub m_o: f64,
    /// Maximum mutation attempts m_a.
    #[serde(default = "defaults::m_a")]
    pub m_a: u32,
    /// Maximum nodes added per structural mutation V_max.
    #[serde(default = "defaults::v_max")]
    pub v_max: u32,
    /// Crossover probability P_cross.
    #[serde(default = "defaults::p_cross")]
    pub p_cross: f64,
    /// Generations without improvement before a species is stale.
    #[serde(default = "defaults::staleness")]
    pub staleness: u32,
    /// Oldest-species age coefficient c_4.
    #[serde(default = "defaults::c4")]
    pub c4: f64,
    /// Species fitness proportion coefficient c_3.
    #[serde(default = "defaults::c3")]
    pub c3: f64,
    /// Proportion of newly initialized genomes per generation o_init.
    #[serde(default = "defaults::o_init")]
    pub o_init: f64,
    /// Semantic similarity coefficient c_2.
    #[serde(default = "defaults::c2")]
    pub c2: f64,
    /// Structural similarity coefficient c_1.
    #[serde(default = "defaults::c1")]
    pub c1: f64,
    /// Compatibility threshold delta_t.
    #[serde(default = "defaults::delta_t")]
    pub delta_t: f64,
    /// Fitness threshold override; the environment's default applies
    /// when absent.
    #[serde(default)]
    pub f_t: Option<f64>,
    /// Evaluation worker threads (0 = one per core). Results never
    /// depend on this.
    #[serde(default = "defaults::workers")]
    pub workers: usize,
    /// Whether mutations may create recurrent connections.
    #[serde(default)]
    pub allow_recurrent: bool,
    /// Component toggle: semantic and structural speciation.
    #[serde(default = "defaults::enabled")]
    pub sss: bool,
    /// Component toggle: dynamic adaptation of the population.
    #[serde(default = "defaults::enabled")]
    pub dap: bool,
    /// Component toggle: fitness-based genetic operators.
    #[serde(default = "defaults::enabled")]
    pub fbgo: bool,
    #[serde(default = "defaults::max_generations")]
    pub max_generations: u64,
    /// Wall-clock budget, checked at generation boundaries.
    #[serde(default = "defaults::timeout_s")]
    pub timeout_s: u64,
    /// Weight-op mix: probability of perturbing an existing connection.
    #[serde(default = "defaults::weight_change_p")]
    pub weight_change_p: f64,
    /// Weight-op mix: probability of creating a connection.
    #[serde(default = "defaults::weight_create_p")]
    pub weight_create_p: f64,
    /// Weight-op mix: probability of deleting a connection.
    #[serde(default = "defaults::weight_delete_p")]
    pub weight_delete_p: f64,
    /// Semantic sample ring buffer capacity.
    #[serde(default = "defaults::buffer_capacity")]
    pub buffer_capacity: usize,
    /// Samples drawn from the buffer per comparison.
    #[serde(default = "defaults::buffer_subsample")]
    pub buffer_subsample: usize,
    /// Uniform range for initial connection weights.
    #[serde(default = "defaults::weight_range")]
    pub weight_range: (f64, f64),
}

mod defaults {
    pub fn environment() -> String {
        "xor".to_string()
    }
    pub fn p_init() -> usize {
        150
    }
    pub fn p_max() -> usize {
        300
    }
    pub fn ebb() -> f64 {
        0.05
    }
    pub fn m_o() -> f64 {
        0.1
    }
    pub fn m_a() -> u32 {
        5
    }
    pub fn v_max() -> u32 {
        5
    }
    pub fn p_cross() -> f64 {
        0.7
    }
    pub fn staleness() -> u32 {
        15
    }
    pub fn c4() -> f64 {
        0.5
    }
    pub fn c3() -> f64 {
        0.4
    }
    pub fn o_init() -> f64 {
        0.1
    }
    pub fn c2() -> f64 {
        0.75
    }
    pub fn c1() -> f64 {
        0.25
    }
    pub fn delta_t() -> f64 {
        0.3
    }
    pub fn workers() -> usize {
        1
    }
    pub fn enabled() -> bool {
        true
    }
    pub fn max_generations() -> u64 {
        300
    }
    pub fn timeout_s() -> u64 {
        600
    }
    pub fn weight_change_p() -> f64 {
        0.7
    }
    pub fn weight_create_p() -> f64 {
        0.2
    }
    pub fn weight_delete_p() -> f64 {
        0.1
    }
    pub fn buffer_capacity() -> usize {
        256
    }
    pub fn buffer_subsample() -> usize {
        64
    }
    pub fn weight_range() -> (f64, f64) {
        (-1.0, 1.0)
    }
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("empty config loads all defaults")
    }
}

impl EvolutionConfig {
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let config: EvolutionConfig =
            serde_json::from_str(text).map_err(|e| ConfigError::Parse {
                line: e.line(),
                column: e.column(),
                message: e.to_string(),
            })?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |msg: &str| Err(ConfigError::Invalid(msg.to_string()));
        if self.p_init < 2 {
            return invalid("p_init must be at least 2");
        }
        if self.p_max < self.p_init {
            return invalid("p_max must be at least p_init");
        }
        if !(self.ebb >= 0.0 && self.ebb <= 1.0) {
            return invalid("ebb must lie in [0, 1]");
        }
        if !(self.p_cross >= 0.0 && self.p_cross <= 1.0) {
            return invalid("p_cross must lie in [0, 1]");
        }
        if self.staleness == 0 {
            return invalid("staleness must be at least 1");
        }
        if !(self.c3 >= 0.0) || !(self.c4 >= 0.0) {
            return invalid("c3 and c4 must be nonnegative");
        }
        if !(self.o_init >= 0.0 && self.o_init < 1.0) {
            return invalid("o_init must lie in [0, 1)");
        }
        if !(self.c1 >= 0.0) || !(self.c2 >= 0.0) || !(self.c1 + self.c2 > 0.0) {
            return invalid("c1 and c2 must be nonnegative and not both zero");
        }
        if !(self.delta_t > 0.0 && self.delta_t <= 1.0) {
            return invalid("delta_t must lie in (0, 1]");
        }
        if let Some(f_t) = self.f_t {
            if !(f_t > 0.0) {
                return invalid("f_t override must be positive");
            }
        }
        if self.max_generations == 0 {
            return invalid("max_generations must be at least 1");
        }
        if self.timeout_s == 0 {
            return invalid("timeout_s must be at least 1");
        }
        if !(self.weight_range.0 < self.weight_range.1) {
            return invalid("weight_range must be a non-empty interval");
        }
        crate::environments::by_name(&self.environment)
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        crate::speciation::SemanticSampleBuffer::new(self.buffer_capacity, self.buffer_subsample)
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.mutation_params(1.0)
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        Ok(())
    }

    /// Operator parameters for a resolved fitness threshold.
    pub fn mutation_params(&self, fitness_threshold: f64) -> MutationParams {
        MutationParams {
            mutation_offset: self.m_o,
            max_attempts: self.m_a,
            max_added_nodes: self.v_max,
            weight_change_p: self.weight_change_p,
            weight_create_p: self.weight_create_p,
            weight_delete_p: self.weight_delete_p,
            fitness_threshold,
            allow_recurrent: self.allow_recurrent,
            fbgo: self.fbgo,
        }
    }
}
