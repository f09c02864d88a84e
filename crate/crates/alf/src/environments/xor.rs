//! XOR benchmark: four input cases, squared-error fitness.
//!
//! Inputs are presented as +/-1, the network output is rescaled from
//! the squashing range [-1, 1] to [0, 1] and compared against the 0/1
//! truth table. Not linearly separable, so solving it requires evolved
//! hidden structure.

use super::{Environment, StepOutcome};

const CASES: [([f64; 2], f64); 4] = [
    ([-1.0, -1.0], 0.0),
    ([-1.0, 1.0], 1.0),
    ([1.0, -1.0], 1.0),
    ([1.0, 1.0], 0.0),
];

pub struct Xor {
    case: usize,
    squared_error: f64,
    done: bool,
}

impl Xor {
    pub fn new() -> Self {
        Xor {
            case: 0,
            squared_error: 0.0,
            done: false,
        }
    }
}

impl Default for Xor {
    fn default() -> Self {
        Self::new()
    }
}

impl Environment for Xor {
    fn input_arity(&self) -> usize {
        2
    }

    fn output_arity(&self) -> usize {
        1
    }

    fn fitness_threshold(&self) -> f64 {
        3.9
    }

    fn max_steps(&self) -> usize {
        CASES.len()
    }

    fn reset(&mut self, _seed: u64) -> Vec<f64> {
        self.case = 0;
        self.squared_error = 0.0;
        self.done = false;
        CASES[0].0.to_vec()
    }

    fn step(&mut self, action: &[f64]) -> StepOutcome {
        if !self.done {
            let (_, target) = CASES[self.case];
            let rescaled = (action[0] + 1.0) / 2.0;
            self.squared_error += (target - rescaled).powi(2);
            self.case += 1;
            self.done = self.case == CASES.len();
        }
        let observation = if self.done {
            vec![0.0, 0.0]
        } else {
            CASES[self.case].0.to_vec()
        };
        StepOutcome {
            observation,
            done: self.done,
            // every case is its own episode: recurrent state resets
            episode_boundary: true,
        }
    }

    fn fitness(&self) -> f64 {
        (CASES.len() as f64 - self.squared_error).max(0.0)
    }
}
