//! Deterministic, seedable benchmark tasks behind one evaluation
//! contract.
//!
//! Every environment scales its observations into [-1, 1] per
//! component and is a pure function of its seed: identical action
//! sequences always produce identical fitness.

mod parity;
mod pole;
mod xor;

pub use parity::SequentialParity;
pub use pole::{pole_physics_step, CartPole, PoleState};
pub use xor::Xor;

#[derive(Debug, thiserror::Error)]
pub enum EnvironmentError {
    #[error("unknown environment '{0}' (expected \"xor\", \"pole\", \"pole:random\" or \"parity:<length>\")")]
    UnknownName(String),
    #[error("invalid environment parameter: {0}")]
    InvalidParameter(String),
}

/// Result of advancing an environment by one action.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub observation: Vec<f64>,
    pub done: bool,
    /// An episode boundary was just crossed: recurrent network state
    /// should be cleared before the next activation.
    pub episode_boundary: bool,
}

/// Common evaluation contract of all benchmark tasks.
pub trait Environment: Send {
    fn input_arity(&self) -> usize;
    fn output_arity(&self) -> usize;
    /// Task-specific fitness threshold f_t.
    fn fitness_threshold(&self) -> f64;
    fn max_steps(&self) -> usize;
    /// Start an evaluation; returns the first observation.
    fn reset(&mut self, seed: u64) -> Vec<f64>;
    /// Consume one action vector.
    fn step(&mut self, action: &[f64]) -> StepOutcome;
    /// Accumulated fitness of the evaluation so far (>= 0).
    fn fitness(&self) -> f64;
}

/// Everything the engine keeps from evaluating one individual.
#[derive(Debug, Clone)]
pub struct EpisodeResult {
    pub fitness: f64,
    pub steps: usize,
    /// Subsampled observation trace, feeding the semantic sample
    /// buffer when this individual turns out to be the generation's
    /// best.
    pub observations: Vec<Vec<f64>>,
}

/// Instantiate a benchmark by name: `xor`, `pole`, `pole:random` or
/// `parity:<length>`.
pub fn by_name(name: &str) -> Result<Box<dyn Environment>, EnvironmentError> {
    match name {
        "xor" => Ok(Box::new(Xor::new())),
        "pole" => Ok(Box::new(CartPole::new(false))),
        "pole:random" => Ok(Box::new(CartPole::new(true))),
        _ => {
            if let Some(arg) = name.strip_prefix("parity:") {
                let length: usize = arg.parse().map_err(|_| {
                    EnvironmentError::InvalidParameter(format!("parity length '{arg}' is not a number"))
                })?;
                Ok(Box::new(SequentialParity::new(length)?))
            } else {
                Err(EnvironmentError::UnknownName(name.to_string()))
            }
        }
    }
}

/// Drive a network through one full evaluation of `env`.
///
/// The observation trace is subsampled with a fixed stride so the
/// result stays bounded; `trace_cap` is the maximum number of retained
/// observations (0 disables tracing).
pub fn evaluate_network(
    net: &mut crate::network::Network,
    env: &mut dyn Environment,
    seed: u64,
    trace_cap: usize,
) -> EpisodeResult {
    net.reset();
    let mut observation = env.reset(seed);
    let stride = if trace_cap == 0 {
        usize::MAX
    } else {
        (env.max_steps() / trace_cap).max(1)
    };
    let mut observations = Vec::new();
    let mut steps = 0usize;
    loop {
        if trace_cap > 0 && steps % stride == 0 && observations.len() < trace_cap {
            observations.push(observation.clone());
        }
        let action = net
            .activate(&observation)
            .expect("environment arity matches network");
        let outcome = env.step(&action);
        steps += 1;
        if outcome.episode_boundary {
            net.reset();
        }
        if outcome.done || steps >= env.max_steps() {
            break;
        }
        observation = outcome.observation;
    }
    EpisodeResult {
        fitness: env.fitness(),
        steps,
        observations,
    }
}
