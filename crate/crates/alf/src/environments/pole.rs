//! Single-pole cart balancing with bang-bang force control.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Environment, StepOutcome};

const GRAVITY: f64 = 9.8;
const MASS_CART: f64 = 1.0;
const MASS_POLE: f64 = 0.1;
const MASS_TOTAL: f64 = MASS_CART + MASS_POLE;
const POLE_LENGTH: f64 = 0.5;
const POLE_MASS_LENGTH: f64 = MASS_POLE * POLE_LENGTH;
const FORCE_MAG: f64 = 10.0;
const TAU: f64 = 0.02;
const TRACK_LIMIT: f64 = 2.4;
const TWELVE_DEGREES: f64 = 12.0 * std::f64::consts::PI / 180.0;
const MAX_STEPS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoleState {
    pub x: f64,
    pub x_dot: f64,
    pub theta: f64,
    pub theta_dot: f64,
}

/// One Euler step of the cart-pole dynamics under `force` newtons.
pub fn pole_physics_step(state: &mut PoleState, force: f64) {
    let cos_theta = state.theta.cos();
    let sin_theta = state.theta.sin();
    let temp = (force + POLE_MASS_LENGTH * state.theta_dot.powi(2) * sin_theta) / MASS_TOTAL;
    let theta_acc = (GRAVITY * sin_theta - cos_theta * temp)
        / (POLE_LENGTH * (4.0 / 3.0 - MASS_POLE * cos_theta.powi(2) / MASS_TOTAL));
    let x_acc = temp - POLE_MASS_LENGTH * theta_acc * cos_theta / MASS_TOTAL;
    state.x += TAU * state.x_dot;
    state.x_dot += TAU * x_acc;
    state.theta += TAU * state.theta_dot;
    state.theta_dot += TAU * theta_acc;
}

pub struct CartPole {
    randomized_start: bool,
    state: PoleState,
    steps: usize,
    balanced: usize,
    done: bool,
}

impl CartPole {
    pub fn new(randomized_start: bool) -> Self {
        CartPole {
            randomized_start,
            state: PoleState {
                x: 0.0,
                x_dot: 0.0,
                theta: 0.0,
                theta_dot: 0.0,
            },
            steps: 0,
            balanced: 0,
            done: false,
        }
    }

    fn observation(&self) -> Vec<f64> {
        vec![
            (self.state.x / TRACK_LIMIT).clamp(-1.0, 1.0),
            (self.state.x_dot / 10.0).clamp(-1.0, 1.0),
            (self.state.theta / TWELVE_DEGREES).clamp(-1.0, 1.0),
            (self.state.theta_dot / 10.0).clamp(-1.0, 1.0),
        ]
    }

    fn failed(&self) -> bool {
        self.state.theta.abs() > TWELVE_DEGREES || self.state.x.abs() > TRACK_LIMIT
    }
}

impl Environment for CartPole {
    fn input_arity(&self) -> usize {
        4
    }

    fn output_arity(&self) -> usize {
        1
    }

    fn fitness_threshold(&self) -> f64 {
        MAX_STEPS as f64
    }

    fn max_steps(&self) -> usize {
        MAX_STEPS
    }

    fn reset(&mut self, seed: u64) -> Vec<f64> {
        self.state = if self.randomized_start {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            PoleState {
                x: rng.gen_range(-0.5..0.5),
                x_dot: rng.gen_range(-0.5..0.5),
                theta: rng.gen_range(-0.1..0.1),
                theta_dot: rng.gen_range(-0.5..0.5),
            }
        } else {
            // fixed upright start with a small angular offset
            PoleState {
                x: 0.0,
                x_dot: 0.0,
                theta: 0.04,
                theta_dot: 0.0,
            }
        };
        self.steps = 0;
        self.balanced = 0;
        self.done = false;
        self.observation()
    }

    fn step(&mut self, action: &[f64]) -> StepOutcome {
        if !self.done {
            let force = if action[0] >= 0.0 { FORCE_MAG } else { -FORCE_MAG };
            pole_physics_step(&mut self.state, force);
            self.steps += 1;
            if self.failed() {
                self.done = true;
            } else {
                self.balanced = self.steps;
                self.done = self.steps >= MAX_STEPS;
            }
        }
        StepOutcome {
            observation: self.observation(),
            done: self.done,
            episode_boundary: false,
        }
    }

    fn fitness(&self) -> f64 {
        self.balanced as f64
    }
}
