//! Direct genetic encoding: ordered layers connected by dense weight
//! matrices, with a reserved bias column per destination layer.
//!
//! The encoding is unique: layers are kept sorted by id, a layer's
//! outgoing connections are sorted by destination id, at most one
//! connection exists per (source, destination) pair, a zero matrix entry
//! means "no connection", and the bias column for a destination layer
//! always lives on the connection coming from the input layer. Two
//! genomes describing the same weighted graph therefore serialize to
//! identical bytes, which keeps crossover free of the permutations
//! problem.

use serde::{Deserialize, Serialize};

use crate::network::Activation;

/// Identifier of a layer inside a genome.
///
/// The input layer is always id 1. Hidden layers receive increasing ids
/// as they are appended (2, 3, ...). The output layer keeps a fixed
/// reserved id larger than any hidden id so that alignment by id stays
/// stable while hidden layers accumulate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LayerId(pub u32);

impl LayerId {
    pub const INPUT: LayerId = LayerId(1);
    pub const OUTPUT: LayerId = LayerId(u32::MAX);

    pub fn is_input(self) -> bool {
        self == Self::INPUT
    }

    pub fn is_output(self) -> bool {
        self == Self::OUTPUT
    }
}

/// Errors produced by genome construction, validation and parsing.
#[derive(Debug, thiserror::Error)]
pub enum GenomeError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("invalid genome: {0}")]
    Invalid(String),
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
}

/// Dense `rows x cols` weight matrix of one layer connection.
///
/// When the owning connection carries a bias, column 0 is the bias
/// column and source node `j` maps to column `j + 1`. An entry of
/// exactly `0.0` encodes the absence of a connection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConnectionMatrix {
    pub rows: usize,
    pub cols: usize,
    pub weights: Vec<f64>,
}

impl ConnectionMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        ConnectionMatrix {
            rows,
            cols,
            weights: vec![0.0; rows * cols],
        }
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        debug_assert!(row < self.rows && col < self.cols);
        self.weights[row * self.cols + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        debug_assert!(row < self.rows && col < self.cols);
        // Normalize -0.0 so "zero means absent" stays byte-stable.
        self.weights[row * self.cols + col] = if value == 0.0 { 0.0 } else { value };
    }

    pub fn nonzero_count(&self) -> usize {
        self.weights.iter().filter(|w| **w != 0.0).count()
    }

    pub fn is_all_zero(&self) -> bool {
        self.weights.iter().all(|w| *w == 0.0)
    }

    /// Append `extra` zero-filled rows (destination layer grew).
    pub fn grow_rows(&mut self, extra: usize) {
        self.rows += extra;
        self.weights.resize(self.rows * self.cols, 0.0);
    }

    /// Append `extra` zero-filled columns (source layer grew).
    pub fn grow_cols(&mut self, extra: usize) {
        let new_cols = self.cols + extra;
        let mut weights = vec![0.0; self.rows * new_cols];
        for r in 0..self.rows {
            weights[r * new_cols..r * new_cols + self.cols]
                .copy_from_slice(&self.weights[r * self.cols..(r + 1) * self.cols]);
        }
        self.cols = new_cols;
        self.weights = weights;
    }

    fn validate(&self) -> Result<(), GenomeError> {
        if self.rows == 0 || self.cols == 0 {
            return Err(GenomeError::Invalid("empty connection matrix".into()));
        }
        if self.weights.len() != self.rows * self.cols {
            return Err(GenomeError::Invalid(format!(
                "matrix claims {}x{} but holds {} weights",
                self.rows,
                self.cols,
                self.weights.len()
            )));
        }
        if self.weights.iter().any(|w| !w.is_finite()) {
            return Err(GenomeError::Invalid("non-finite weight".into()));
        }
        Ok(())
    }
}

/// One layer connection: all weights from `source` nodes to
/// `destination` nodes, plus an optional bias column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerConnection {
    #[serde(rename = "src")]
    pub source: LayerId,
    #[serde(rename = "dst")]
    pub destination: LayerId,
    #[serde(rename = "bias")]
    pub has_bias: bool,
    #[serde(flatten)]
    pub matrix: ConnectionMatrix,
}

impl LayerConnection {
    pub fn new(source: LayerId, destination: LayerId, has_bias: bool, matrix: ConnectionMatrix) -> Self {
        LayerConnection {
            source,
            destination,
            has_bias,
            matrix,
        }
    }

    /// A connection whose destination id does not exceed its source id
    /// feeds backwards (or sideways) in evaluation order.
    pub fn is_recurrent(&self) -> bool {
        self.destination <= self.source
    }

    /// Number of matrix columns that map to source nodes.
    pub fn source_cols(&self) -> usize {
        self.matrix.cols - usize::from(self.has_bias)
    }

    /// Weight from source node `j` to destination node `i` (node
    /// indices, bias column excluded).
    pub fn weight(&self, dest_node: usize, source_node: usize) -> f64 {
        self.matrix.get(dest_node, source_node + usize::from(self.has_bias))
    }

    /// Bias weight for destination node `i`, 0.0 when no bias column.
    pub fn bias_weight(&self, dest_node: usize) -> f64 {
        if self.has_bias {
            self.matrix.get(dest_node, 0)
        } else {
            0.0
        }
    }
}

/// A layer: node count, activation tag and outgoing connections sorted
/// ascending by destination id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub id: LayerId,
    #[serde(rename = "nodes")]
    pub node_count: usize,
    pub activation: Activation,
    #[serde(rename = "connections")]
    pub outgoing: Vec<LayerConnection>,
}

impl Layer {
    pub fn new(id: LayerId, node_count: usize) -> Self {
        Layer {
            id,
            node_count,
            activation: Activation::ModifiedSigmoid,
            outgoing: Vec::new(),
        }
    }

    pub fn connection_to(&self, destination: LayerId) -> Option<&LayerConnection> {
        self.outgoing
            .binary_search_by_key(&destination, |c| c.destination)
            .ok()
            .map(|idx| &self.outgoing[idx])
    }

    fn connection_to_mut(&mut self, destination: LayerId) -> Option<&mut LayerConnection> {
        self.outgoing
            .binary_search_by_key(&destination, |c| c.destination)
            .ok()
            .map(move |idx| &mut self.outgoing[idx])
    }
}

/// Identity of one connection-level gene after layer alignment.
///
/// Bias genes are keyed by destination only: the hosting matrix is a
/// canonical-form detail, not part of the gene's identity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum GeneSlot {
    /// Weight from (source layer, source node) to (destination layer,
    /// destination node).
    Edge {
        source: LayerId,
        destination: LayerId,
        dest_node: usize,
        source_node: usize,
    },
    /// Bias weight of (destination layer, destination node).
    Bias {
        destination: LayerId,
        dest_node: usize,
    },
}

/// The genotype: ordered layers with weight matrices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Genome {
    pub layers: Vec<Layer>,
    pub fitness: f64,
    pub id: u64,
    /// Fitness stand-in used by the genetic operators before this
    /// individual's first evaluation (the fitter parent's fitness, or 0
    /// for freshly initialized individuals).
    #[serde(skip)]
    pub parent_fitness_hint: f64,
    /// Whether `fitness` holds an actual evaluation result.
    #[serde(skip)]
    pub evaluated: bool,
}

impl Genome {
    /// Minimal genome: input and output layer joined by one full
    /// connection of uniformly drawn weights. No draw is exactly zero,
    /// so every matrix cell is an expressed connection.
    pub fn new_minimal<R: rand::Rng>(
        inputs: usize,
        outputs: usize,
        rng: &mut R,
        weight_range: (f64, f64),
    ) -> Result<Genome, GenomeError> {
        if inputs == 0 || outputs == 0 {
            return Err(GenomeError::InvalidArgument(
                "a genome needs at least one input and one output node".into(),
            ));
        }
        if !(weight_range.0 < weight_range.1) {
            return Err(GenomeError::InvalidArgument(
                "weight range must be a non-empty interval".into(),
            ));
        }
        let mut matrix = ConnectionMatrix::zeros(outputs, inputs);
        for w in matrix.weights.iter_mut() {
            *w = draw_nonzero(rng, weight_range);
        }
        let mut input = Layer::new(LayerId::INPUT, inputs);
        input.outgoing.push(LayerConnection::new(
            LayerId::INPUT,
            LayerId::OUTPUT,
            false,
            matrix,
        ));
        let output = Layer::new(LayerId::OUTPUT, outputs);
        Genome::from_layers(vec![input, output])
    }

    /// Build a genome from explicit layers; validates and canonicalizes.
    pub fn from_layers(layers: Vec<Layer>) -> Result<Genome, GenomeError> {
        let mut genome = Genome {
            layers,
            fitness: 0.0,
            id: 0,
            parent_fitness_hint: 0.0,
            evaluated: false,
        };
        genome.canonicalize();
        genome.validate()?;
        Ok(genome)
    }

    pub fn input_layer(&self) -> &Layer {
        &self.layers[0]
    }

    pub fn output_layer(&self) -> &Layer {
        self.layers.last().expect("genome has layers")
    }

    pub fn layer(&self, id: LayerId) -> Option<&Layer> {
        self.layers
            .binary_search_by_key(&id, |l| l.id)
            .ok()
            .map(|idx| &self.layers[idx])
    }

    pub(crate) fn layer_mut(&mut self, id: LayerId) -> Option<&mut Layer> {
        self.layers
            .binary_search_by_key(&id, |l| l.id)
            .ok()
            .map(move |idx| &mut self.layers[idx])
    }

    pub fn connection(&self, source: LayerId, destination: LayerId) -> Option<&LayerConnection> {
        self.layer(source).and_then(|l| l.connection_to(destination))
    }

    /// Hidden layer ids in ascending order.
    pub fn hidden_ids(&self) -> impl Iterator<Item = LayerId> + '_ {
        self.layers
            .iter()
            .map(|l| l.id)
            .filter(|id| !id.is_input() && !id.is_output())
    }

    /// Id for the next appended hidden layer (consecutive from 2).
    pub fn next_hidden_id(&self) -> LayerId {
        LayerId(self.hidden_ids().map(|id| id.0).max().unwrap_or(1) + 1)
    }

    /// Number of hidden nodes H.
    pub fn hidden_node_count(&self) -> usize {
        self.layers
            .iter()
            .filter(|l| !l.id.is_input() && !l.id.is_output())
            .map(|l| l.node_count)
            .sum()
    }

    /// Current number of expressed connections E: nonzero matrix
    /// entries, bias columns included.
    pub fn connection_count(&self) -> usize {
        self.layers
            .iter()
            .flat_map(|l| l.outgoing.iter())
            .map(|c| c.matrix.nonzero_count())
            .sum()
    }

    /// Number of possible connections E_full over the current layer
    /// set: every ordered layer pair with a non-input destination
    /// (forward pairs only unless recurrent connections are allowed)
    /// contributes source-nodes x destination-nodes slots, plus one bias
    /// slot per non-input node.
    pub fn full_connection_count(&self, allow_recurrent: bool) -> usize {
        let mut total = 0;
        for dst in &self.layers {
            if dst.id.is_input() {
                continue;
            }
            // one bias slot per destination node
            total += dst.node_count;
            for src in &self.layers {
                if allow_recurrent || dst.id > src.id {
                    total += src.node_count * dst.node_count;
                }
            }
        }
        total
    }

    /// All expressed genes as `(slot, weight)` pairs in canonical order.
    pub fn gene_slots(&self) -> Vec<(GeneSlot, f64)> {
        let mut slots = Vec::with_capacity(self.connection_count());
        for layer in &self.layers {
            for conn in &layer.outgoing {
                let bias_cols = usize::from(conn.has_bias);
                for i in 0..conn.matrix.rows {
                    for j in 0..conn.matrix.cols {
                        let w = conn.matrix.get(i, j);
                        if w == 0.0 {
                            continue;
                        }
                        let slot = if conn.has_bias && j == 0 {
                            GeneSlot::Bias {
                                destination: conn.destination,
                                dest_node: i,
                            }
                        } else {
                            GeneSlot::Edge {
                                source: conn.source,
                                destination: conn.destination,
                                dest_node: i,
                                source_node: j - bias_cols,
                            }
                        };
                        slots.push((slot, w));
                    }
                }
            }
        }
        slots
    }

    /// Write the weight of one gene slot, creating the hosting
    /// connection or bias column on demand.
    pub(crate) fn set_gene(&mut self, slot: GeneSlot, value: f64) {
        match slot {
            GeneSlot::Edge {
                source,
                destination,
                dest_node,
                source_node,
            } => {
                self.ensure_connection(source, destination);
                let conn = self
                    .layer_mut(source)
                    .unwrap()
                    .connection_to_mut(destination)
                    .unwrap();
                let col = source_node + usize::from(conn.has_bias);
                conn.matrix.set(dest_node, col, value);
            }
            GeneSlot::Bias {
                destination,
                dest_node,
            } => {
                // Bias columns canonically live on the connection from
                // the input layer.
                self.ensure_connection(LayerId::INPUT, destination);
                let conn = self
                    .layer_mut(LayerId::INPUT)
                    .unwrap()
                    .connection_to_mut(destination)
                    .unwrap();
                if !conn.has_bias {
                    let mut with_bias = ConnectionMatrix::zeros(conn.matrix.rows, conn.matrix.cols + 1);
                    for r in 0..conn.matrix.rows {
                        for c in 0..conn.matrix.cols {
                            with_bias.set(r, c + 1, conn.matrix.get(r, c));
                        }
                    }
                    conn.matrix = with_bias;
                    conn.has_bias = true;
                }
                conn.matrix.set(dest_node, 0, value);
            }
        }
    }

    /// Ensure a (source, destination) connection object exists,
    /// inserting an all-zero matrix at the sorted position if not.
    pub(crate) fn ensure_connection(&mut self, source: LayerId, destination: LayerId) {
        debug_assert!(!destination.is_input());
        let rows = self.layer(destination).expect("destination layer").node_count;
        let cols = self.layer(source).expect("source layer").node_count;
        let layer = self.layer_mut(source).unwrap();
        if let Err(idx) = layer
            .outgoing
            .binary_search_by_key(&destination, |c| c.destination)
        {
            layer.outgoing.insert(
                idx,
                LayerConnection::new(source, destination, false, ConnectionMatrix::zeros(rows, cols)),
            );
        }
    }

    /// Grow a layer by `extra` nodes, zero-padding every matrix that
    /// touches it. New destination rows append at the bottom, new
    /// source columns at the right, so existing slots keep their
    /// indices.
    pub(crate) fn grow_layer(&mut self, id: LayerId, extra: usize) {
        for layer in self.layers.iter_mut() {
            if layer.id == id {
                layer.node_count += extra;
            }
            for conn in layer.outgoing.iter_mut() {
                if conn.destination == id {
                    conn.matrix.grow_rows(extra);
                }
                if conn.source == id {
                    conn.matrix.grow_cols(extra);
                }
            }
        }
    }

    /// Insert a hidden layer at its sorted position.
    pub(crate) fn insert_layer(&mut self, layer: Layer) {
        let idx = self
            .layers
            .binary_search_by_key(&layer.id, |l| l.id)
            .expect_err("layer id already present");
        self.layers.insert(idx, layer);
    }

    /// Restore canonical form: layers sorted by id, connections sorted
    /// by destination, -0.0 normalized, dead bias columns and dead
    /// connections removed.
    pub fn canonicalize(&mut self) {
        self.layers.sort_by_key(|l| l.id);
        for layer in self.layers.iter_mut() {
            for conn in layer.outgoing.iter_mut() {
                for w in conn.matrix.weights.iter_mut() {
                    if *w == 0.0 {
                        *w = 0.0;
                    }
                }
                if conn.has_bias && (0..conn.matrix.rows).all(|i| conn.matrix.get(i, 0) == 0.0) {
                    let mut trimmed = ConnectionMatrix::zeros(conn.matrix.rows, conn.matrix.cols - 1);
                    for r in 0..conn.matrix.rows {
                        for c in 1..conn.matrix.cols {
                            trimmed.set(r, c - 1, conn.matrix.get(r, c));
                        }
                    }
                    conn.matrix = trimmed;
                    conn.has_bias = false;
                }
            }
            layer.outgoing.retain(|c| !c.matrix.is_all_zero());
            layer.outgoing.sort_by_key(|c| c.destination);
        }
    }

    /// Check every structural invariant of the encoding.
    pub fn validate(&self) -> Result<(), GenomeError> {
        if self.layers.len() < 2 {
            return Err(GenomeError::Invalid("fewer than two layers".into()));
        }
        if self.layers[0].id != LayerId::INPUT {
            return Err(GenomeError::Invalid("first layer is not the input layer".into()));
        }
        if self.layers.last().unwrap().id != LayerId::OUTPUT {
            return Err(GenomeError::Invalid("last layer is not the output layer".into()));
        }
        if !self.layers.windows(2).all(|w| w[0].id < w[1].id) {
            return Err(GenomeError::Invalid("layer ids not strictly ascending".into()));
        }
        if !(self.fitness >= 0.0) {
            return Err(GenomeError::Invalid("negative fitness".into()));
        }
        for layer in &self.layers {
            if layer.node_count == 0 {
                return Err(GenomeError::Invalid(format!("layer {} has no nodes", layer.id.0)));
            }
            if !layer
                .outgoing
                .windows(2)
                .all(|w| w[0].destination < w[1].destination)
            {
                return Err(GenomeError::Invalid(format!(
                    "connections of layer {} not strictly sorted by destination",
                    layer.id.0
                )));
            }
            for conn in &layer.outgoing {
                conn.matrix.validate()?;
                if conn.source != layer.id {
                    return Err(GenomeError::Invalid("connection stored under wrong layer".into()));
                }
                if conn.destination.is_input() {
                    return Err(GenomeError::Invalid(
                        "connections to the input layer are prohibited".into(),
                    ));
                }
                let dst = self.layer(conn.destination).ok_or_else(|| {
                    GenomeError::Invalid(format!("connection to unknown layer {}", conn.destination.0))
                })?;
                if conn.matrix.rows != dst.node_count {
                    return Err(GenomeError::Invalid(format!(
                        "connection {}->{} has {} rows for {} destination nodes",
                        conn.source.0, conn.destination.0, conn.matrix.rows, dst.node_count
                    )));
                }
                if conn.source_cols() != layer.node_count {
                    return Err(GenomeError::Invalid(format!(
                        "connection {}->{} has {} source columns for {} source nodes",
                        conn.source.0,
                        conn.destination.0,
                        conn.source_cols(),
                        layer.node_count
                    )));
                }
                if conn.has_bias && !layer.id.is_input() {
                    return Err(GenomeError::Invalid(
                        "bias column hosted away from the input-layer connection".into(),
                    ));
                }
                if conn.has_bias && (0..conn.matrix.rows).all(|i| conn.matrix.get(i, 0) == 0.0) {
                    return Err(GenomeError::Invalid("dead bias column".into()));
                }
                if conn.matrix.is_all_zero() {
                    return Err(GenomeError::Invalid("dead connection".into()));
                }
            }
        }
        Ok(())
    }

    /// Canonical bytes of the full genome record (layers, fitness, id).
    pub fn serialize(&self) -> Vec<u8> {
        serde_json::to_vec(self).expect("genome serialization cannot fail")
    }

    /// Canonical bytes of the structure alone; equal graphs yield equal
    /// bytes regardless of individual identity or fitness.
    pub fn structural_bytes(&self) -> Vec<u8> {
        serde_json::to_vec(&self.layers).expect("genome serialization cannot fail")
    }

    /// Parse a genome record, then validate it.
    pub fn deserialize(bytes: &[u8]) -> Result<Genome, GenomeError> {
        let genome: Genome = serde_json::from_slice(bytes).map_err(|e| GenomeError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        genome.validate()?;
        Ok(genome)
    }
}

pub(crate) fn draw_nonzero<R: rand::Rng>(rng: &mut R, range: (f64, f64)) -> f64 {
    loop {
        let w: f64 = rng.gen_range(range.0..range.1);
        if w != 0.0 {
            return w;
        }
    }
}
