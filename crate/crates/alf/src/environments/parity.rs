//! Sequential parity: one +/-1 bit per tick; after `length` ticks the
//! network must report the running parity of the sequence. Scored over
//! a fixed seeded batch of 64 sequences, so a feed-forward network
//! (which only ever sees the current bit) cannot pass the threshold
//! for lengths beyond one.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Environment, EnvironmentError, StepOutcome};

const EPISODES: usize = 64;

pub struct SequentialParity {
    length: usize,
    sequences: Vec<Vec<f64>>,
    episode: usize,
    tick: usize,
    correct: usize,
    done: bool,
}

impl SequentialParity {
    pub fn new(length: usize) -> Result<Self, EnvironmentError> {
        if length == 0 {
            return Err(EnvironmentError::InvalidParameter(
                "parity length must be at least 1".into(),
            ));
        }
        Ok(SequentialParity {
            length,
            sequences: Vec::new(),
            episode: 0,
            tick: 0,
            correct: 0,
            done: false,
        })
    }

    fn parity(&self, episode: usize) -> f64 {
        self.sequences[episode].iter().product::<f64>().signum()
    }
}

impl Environment for SequentialParity {
    fn input_arity(&self) -> usize {
        1
    }

    fn output_arity(&self) -> usize {
        1
    }

    fn fitness_threshold(&self) -> f64 {
        0.98
    }

    fn max_steps(&self) -> usize {
        EPISODES * self.length
    }

    fn reset(&mut self, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.sequences = (0..EPISODES)
            .map(|_| {
                (0..self.length)
                    .map(|_| if rng.gen::<bool>() { 1.0 } else { -1.0 })
                    .collect()
            })
            .collect();
        self.episode = 0;
        self.tick = 0;
        self.correct = 0;
        self.done = false;
        vec![self.sequences[0][0]]
    }

    fn step(&mut self, action: &[f64]) -> StepOutcome {
        let mut boundary = false;
        if !self.done {
            self.tick += 1;
            if self.tick == self.length {
                // the response to the final bit is the answer
                let answer = if action[0] >= 0.0 { 1.0 } else { -1.0 };
                if answer == self.parity(self.episode) {
                    self.correct += 1;
                }
                self.episode += 1;
                self.tick = 0;
                boundary = true;
                self.done = self.episode == EPISODES;
            }
        }
        let observation = if self.done {
            vec![0.0]
        } else {
            vec![self.sequences[self.episode][self.tick]]
        };
        StepOutcome {
            observation,
            done: self.done,
            episode_boundary: boundary,
        }
    }

    fn fitness(&self) -> f64 {
        self.correct as f64 / EPISODES as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environments::evaluate_network;
    use crate::genome::{ConnectionMatrix, GeneSlot, Genome, Layer, LayerConnection, LayerId};
    use crate::network::Network;

    #[test]
    fn length_one_is_identity_and_minimal_solvable() {
        // a single positive passthrough weight answers every episode
        let mut input = Layer::new(LayerId::INPUT, 1);
        input.outgoing.push(LayerConnection::new(
            LayerId::INPUT,
            LayerId::OUTPUT,
            false,
            ConnectionMatrix {
                rows: 1,
                cols: 1,
                weights: vec![2.0],
            },
        ));
        let g = Genome::from_layers(vec![input, Layer::new(LayerId::OUTPUT, 1)]).unwrap();
        let mut net = Network::decode(&g);
        let mut env = SequentialParity::new(1).unwrap();
        let result = evaluate_network(&mut net, &mut env, 11, 0);
        assert_eq!(result.fitness, 1.0);
    }

    /// Hand-built recurrent parity machine: two hidden gate nodes fed
    /// by the current bit and the previous output, recombined so the
    /// output tracks the running product of the input signs.
    pub(crate) fn parity_machine() -> Genome {
        let k = 5.0;
        let hidden = LayerId(2);
        let mut input = Layer::new(LayerId::INPUT, 1);
        input.outgoing.push(LayerConnection::new(
            LayerId::INPUT,
            hidden,
            true,
            ConnectionMatrix {
                rows: 2,
                cols: 2,
                // [bias, x] rows: u detects both-positive, v both-negative
                weights: vec![-k, 2.0 * k, -3.0 * k, -2.0 * k],
            },
        ));
        let mut hidden_layer = Layer::new(hidden, 2);
        hidden_layer.outgoing.push(LayerConnection::new(
            hidden,
            LayerId::OUTPUT,
            false,
            ConnectionMatrix {
                rows: 1,
                cols: 2,
                weights: vec![2.0 * k, 2.0 * k],
            },
        ));
        let mut output = Layer::new(LayerId::OUTPUT, 1);
        output.outgoing.push(LayerConnection::new(
            LayerId::OUTPUT,
            hidden,
            false,
            ConnectionMatrix {
                rows: 2,
                cols: 1,
                weights: vec![2.0 * k, -2.0 * k],
            },
        ));
        let mut g = Genome::from_layers(vec![input, hidden_layer, output]).unwrap();
        g.set_gene(
            GeneSlot::Bias {
                destination: LayerId::OUTPUT,
                dest_node: 0,
            },
            2.0 * k,
        );
        g.canonicalize();
        g.validate().unwrap();
        g
    }

    #[test]
    fn hand_built_machine_is_exact_up_to_length_eight() {
        let g = parity_machine();
        let mut net = Network::decode(&g);
        for length in 1..=8usize {
            for pattern in 0..(1u32 << length) {
                let bits: Vec<f64> = (0..length)
                    .map(|i| if pattern >> i & 1 == 1 { 1.0 } else { -1.0 })
                    .collect();
                net.reset();
                let mut last = 0.0;
                for b in &bits {
                    last = net.activate(&[*b]).unwrap()[0];
                }
                let expect: f64 = bits.iter().product::<f64>().signum();
                assert_eq!(
                    last.signum(),
                    expect,
                    "length {length} pattern {pattern:b}"
                );
            }
        }
    }

    #[test]
    fn hand_built_machine_scores_perfectly_in_env() {
        let g = parity_machine();
        let mut net = Network::decode(&g);
        let mut env = SequentialParity::new(3).unwrap();
        let result = evaluate_network(&mut net, &mut env, 4, 0);
        assert_eq!(result.fitness, 1.0);
        let mut env8 = SequentialParity::new(8).unwrap();
        let result8 = evaluate_network(&mut net, &mut env8, 4, 0);
        assert_eq!(result8.fitness, 1.0);
    }
}
