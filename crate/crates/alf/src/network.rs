//! Phenotype: a genome decoded into an executable network with
//! per-tick activation state.
//!
//! Layers are evaluated in ascending id order. A forward edge reads the
//! source value already computed this tick; a recurrent edge reads the
//! value stored by the previous tick (single-tick delay), so feedback
//! loops unroll like a discrete-time recurrent network.

use serde::{Deserialize, Serialize};

use crate::genome::{Genome, LayerId};

/// Activation function tag carried per layer in the genotype.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    /// `sig_m(v) = 2 / (1 + e^(-4.9 v)) - 1`, squashing into [-1, 1]
    /// and supporting inhibitory (negative) signals.
    ModifiedSigmoid,
}

impl Activation {
    pub fn apply(self, v: f64) -> f64 {
        match self {
            Activation::ModifiedSigmoid => 2.0 / (1.0 + (-4.9 * v).exp()) - 1.0,
        }
    }
}

/// Errors from network evaluation.
#[derive(Debug, thiserror::Error)]
pub enum NetworkError {
    #[error("expected {expected} inputs, got {got}")]
    InputArity { expected: usize, got: usize },
}

struct Incoming {
    /// Index into `Network::layers` of the source layer.
    source: usize,
    recurrent: bool,
    has_bias: bool,
    rows: usize,
    cols: usize,
    weights: Vec<f64>,
}

struct DecodedLayer {
    offset: usize,
    node_count: usize,
    activation: Activation,
    /// Connections feeding this layer, ordered by source layer id.
    incoming: Vec<Incoming>,
}

/// Executable network with previous- and current-tick activation state.
pub struct Network {
    layers: Vec<DecodedLayer>,
    input_count: usize,
    output_count: usize,
    node_count: usize,
    edge_count: usize,
    state_prev: Vec<f64>,
    state_curr: Vec<f64>,
}

impl Network {
    /// Decode a genome: every nonzero matrix entry becomes one weighted
    /// edge, zero entries produce no edge.
    pub fn decode(genome: &Genome) -> Network {
        let index_of = |id: LayerId| {
            genome
                .layers
                .binary_search_by_key(&id, |l| l.id)
                .expect("valid genome")
        };
        let mut offset = 0;
        let mut layers: Vec<DecodedLayer> = genome
            .layers
            .iter()
            .map(|l| {
                let decoded = DecodedLayer {
                    offset,
                    node_count: l.node_count,
                    activation: l.activation,
                    incoming: Vec::new(),
                };
                offset += l.node_count;
                decoded
            })
            .collect();
        let mut edge_count = 0;
        for layer in &genome.layers {
            for conn in &layer.outgoing {
                edge_count += conn.matrix.nonzero_count();
                layers[index_of(conn.destination)].incoming.push(Incoming {
                    source: index_of(conn.source),
                    recurrent: conn.is_recurrent(),
                    has_bias: conn.has_bias,
                    rows: conn.matrix.rows,
                    cols: conn.matrix.cols,
                    weights: conn.matrix.weights.clone(),
                });
            }
        }
        Network {
            input_count: genome.input_layer().node_count,
            output_count: genome.output_layer().node_count,
            node_count: offset,
            edge_count,
            layers,
            state_prev: vec![0.0; offset],
            state_curr: vec![0.0; offset],
        }
    }

    pub fn input_count(&self) -> usize {
        self.input_count
    }

    pub fn output_count(&self) -> usize {
        self.output_count
    }

    /// Expressed edges, equal to the genome's connection count.
    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    /// Hidden nodes, equal to the genome's hidden node count.
    pub fn hidden_count(&self) -> usize {
        self.node_count - self.input_count - self.output_count
    }

    /// Zero all stored activations, as between episodes.
    pub fn reset(&mut self) {
        self.state_prev.iter_mut().for_each(|v| *v = 0.0);
        self.state_curr.iter_mut().for_each(|v| *v = 0.0);
    }

    /// Advance one tick: feed `inputs`, evaluate layers in ascending id
    /// order, return the output-layer activations.
    pub fn activate(&mut self, inputs: &[f64]) -> Result<Vec<f64>, NetworkError> {
        if inputs.len() != self.input_count {
            return Err(NetworkError::InputArity {
                expected: self.input_count,
                got: inputs.len(),
            });
        }
        std::mem::swap(&mut self.state_prev, &mut self.state_curr);
        // Input values pass through unmodified.
        self.state_curr[..self.input_count].copy_from_slice(inputs);
        for li in 1..self.layers.len() {
            let (done, rest) = self.layers.split_at(li);
            let layer = &rest[0];
            for node in 0..layer.node_count {
                let mut sum = 0.0;
                for conn in &layer.incoming {
                    let src = if conn.source < li {
                        &done[conn.source]
                    } else {
                        &rest[conn.source - li]
                    };
                    let bias_cols = usize::from(conn.has_bias);
                    debug_assert_eq!(conn.rows, layer.node_count);
                    let row = &conn.weights[node * conn.cols..(node + 1) * conn.cols];
                    if conn.has_bias {
                        sum += row[0];
                    }
                    let source_state = if conn.recurrent {
                        &self.state_prev
                    } else {
                        &self.state_curr
                    };
                    for (j, w) in row[bias_cols..].iter().enumerate() {
                        if *w != 0.0 {
                            sum += w * source_state[src.offset + j];
                        }
                    }
                }
                self.state_curr[layer.offset + node] = layer.activation.apply(sum);
            }
        }
        let out = self.layers.last().expect("network has layers");
        Ok(self.state_curr[out.offset..out.offset + out.node_count].to_vec())
    }
}
