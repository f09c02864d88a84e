//! Fitness-based genetic operators.
//!
//! Mutation rate, perturbation magnitude, structural-mutation
//! probability and the number of added nodes all scale with the
//! individual's fitness relative to the task's fitness threshold:
//! low-fitness genomes explore with many large changes, near-threshold
//! genomes fine-tune. Crossover inherits genes slot-by-slot with
//! probabilities derived from the parents' fitness shares.
//!
//! With the `fbgo` flag off every operator falls back to fixed-rate
//! baseline behaviour (half the maximum attempts, unit perturbation,
//! uniform inheritance), which is the reference point for ablations.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::genome::{GeneSlot, Genome, Layer, LayerId};
use crate::speciation::align;

/// Smallest allowed perturbation magnitude; the scaled deviation
/// `1.25 - F/f_t` turns nonpositive once fitness exceeds the threshold
/// by 25 %.
pub const SIGMA_MIN: f64 = 0.01;

/// Structural-mutation probability of the fixed-rate baseline: the
/// midpoint of the scaled operator's range, matching the baseline's
/// half-maximum attempt rate and unit deviation.
pub const BASELINE_STRUCT_PROB: f64 = 0.55;

#[derive(Debug, thiserror::Error)]
pub enum OperatorError {
    #[error("invalid operator configuration: {0}")]
    InvalidConfig(String),
}

/// Knobs of the mutation operators.
#[derive(Debug, Clone)]
pub struct MutationParams {
    /// Mutation offset m_o.
    pub mutation_offset: f64,
    /// Maximum mutation attempts m_a.
    pub max_attempts: u32,
    /// Maximum nodes added per structural mutation V_max.
    pub max_added_nodes: u32,
    /// Weight-op mix: probability of changing an existing connection.
    pub weight_change_p: f64,
    /// Probability of creating a connection in an empty slot.
    pub weight_create_p: f64,
    /// Probability of deleting (zeroing) a connection.
    pub weight_delete_p: f64,
    /// Task fitness threshold f_t.
    pub fitness_threshold: f64,
    /// Whether mutations may create recurrent connections.
    pub allow_recurrent: bool,
    /// Fitness-based scaling on (true) or fixed-rate baseline (false).
    pub fbgo: bool,
}

impl MutationParams {
    pub fn validate(&self) -> Result<(), OperatorError> {
        if !(self.fitness_threshold > 0.0) {
            return Err(OperatorError::InvalidConfig(
                "fitness threshold must be positive".into(),
            ));
        }
        if self.mutation_offset < 0.0 {
            return Err(OperatorError::InvalidConfig("mutation offset must be >= 0".into()));
        }
        if self.max_attempts < 1 {
            return Err(OperatorError::InvalidConfig("max attempts must be >= 1".into()));
        }
        if self.max_added_nodes < 1 {
            return Err(OperatorError::InvalidConfig("max added nodes must be >= 1".into()));
        }
        let mix = self.weight_change_p + self.weight_create_p + self.weight_delete_p;
        if (mix - 1.0).abs() > 1e-9
            || self.weight_change_p < 0.0
            || self.weight_create_p < 0.0
            || self.weight_delete_p < 0.0
        {
            return Err(OperatorError::InvalidConfig(
                "weight-op probabilities must be nonnegative and sum to 1".into(),
            ));
        }
        Ok(())
    }
}

/// Fitness-based mutation rate: how many attempts are made per
/// operator invocation. Never 0, never above the configured maximum.
pub fn mutation_rate(fitness: f64, params: &MutationParams) -> Result<u32, OperatorError> {
    if !(params.fitness_threshold > 0.0) {
        return Err(OperatorError::InvalidConfig(
            "fitness threshold must be positive".into(),
        ));
    }
    let m_a = params.max_attempts as f64;
    let raw = ((1.0 + params.mutation_offset) - fitness / params.fitness_threshold) * m_a;
    Ok(raw.round().clamp(1.0, m_a) as u32)
}

/// Probability of attempting a node or layer mutation, driven by the
/// remaining connection potential E/E_full and the fitness ratio.
pub fn structural_mutation_probability(
    connections: usize,
    full_connections: usize,
    fitness: f64,
    params: &MutationParams,
) -> f64 {
    debug_assert!(full_connections >= 1);
    debug_assert!(connections <= full_connections);
    let saturation = connections as f64 / full_connections as f64;
    let ratio = fitness / params.fitness_threshold;
    (1.0 + params.mutation_offset - (saturation + ratio) / 2.0).clamp(0.0, 1.0)
}

/// Number of nodes a node (or new-layer) mutation adds.
pub fn nodes_to_add(fitness: f64, fitness_threshold: f64, max_added_nodes: u32) -> u32 {
    let v_max = max_added_nodes as f64;
    (v_max - (fitness / fitness_threshold) * v_max)
        .ceil()
        .clamp(0.0, v_max) as u32
}

/// Standard deviation of weight perturbations for a given fitness.
pub fn weight_sigma(fitness: f64, params: &MutationParams) -> f64 {
    if params.fbgo {
        (1.25 - fitness / params.fitness_threshold).max(SIGMA_MIN)
    } else {
        1.0
    }
}

fn effective_rate(fitness: f64, params: &MutationParams) -> u32 {
    if params.fbgo {
        mutation_rate(fitness, params).expect("params validated")
    } else {
        (params.max_attempts.div_ceil(2)).max(1)
    }
}

fn effective_struct_prob(
    connections: usize,
    full_connections: usize,
    fitness: f64,
    params: &MutationParams,
) -> f64 {
    if params.fbgo {
        structural_mutation_probability(connections, full_connections, fitness, params)
    } else {
        BASELINE_STRUCT_PROB
    }
}

fn effective_added_nodes(fitness: f64, params: &MutationParams) -> u32 {
    if params.fbgo {
        nodes_to_add(fitness, params.fitness_threshold, params.max_added_nodes)
    } else {
        (params.max_added_nodes.div_ceil(2)).max(1)
    }
}

fn sample_nonzero_normal<R: Rng>(rng: &mut R, sigma: f64) -> f64 {
    let normal = Normal::new(0.0, sigma).expect("sigma is clamped positive");
    loop {
        let w = normal.sample(rng);
        if w != 0.0 {
            return w;
        }
    }
}

/// All currently expressed slots, in canonical order.
fn nonzero_slots(g: &Genome) -> Vec<GeneSlot> {
    g.gene_slots().into_iter().map(|(s, _)| s).collect()
}

/// All empty slots a weight-creation may fill: zero cells of existing
/// matrices plus bias slots of layers that have no bias column yet.
fn zero_slots(g: &Genome, allow_recurrent: bool) -> Vec<GeneSlot> {
    let mut slots = Vec::new();
    for layer in &g.layers {
        for conn in &layer.outgoing {
            if conn.is_recurrent() && !allow_recurrent {
                continue;
            }
            let bias_cols = usize::from(conn.has_bias);
            for i in 0..conn.matrix.rows {
                for j in 0..conn.matrix.cols {
                    if conn.matrix.get(i, j) != 0.0 {
                        continue;
                    }
                    slots.push(if conn.has_bias && j == 0 {
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
                    });
                }
            }
        }
    }
    // Bias slots of destinations whose canonical host carries no bias
    // column yet.
    for layer in &g.layers {
        if layer.id.is_input() {
            continue;
        }
        let hosted = g
            .connection(LayerId::INPUT, layer.id)
            .map_or(false, |c| c.has_bias);
        if !hosted {
            for i in 0..layer.node_count {
                slots.push(GeneSlot::Bias {
                    destination: layer.id,
                    dest_node: i,
                });
            }
        }
    }
    slots
}

/// Perform the fitness-scaled weight mutation: `m_r` attempts, each
/// changing, creating or deleting one connection.
pub fn mutate_weights<R: Rng>(g: &mut Genome, fitness: f64, params: &MutationParams, rng: &mut R) {
    let attempts = effective_rate(fitness, params);
    let sigma = weight_sigma(fitness, params);
    // Slot pools are snapshot once per call; an attempt that lands on
    // a slot another attempt already rewrote simply acts on the new
    // value.
    let mut occupied = nonzero_slots(g);
    let mut empty = zero_slots(g, params.allow_recurrent);
    for _ in 0..attempts {
        let roll: f64 = rng.gen();
        if roll < params.weight_change_p {
            if occupied.is_empty() {
                continue; // nothing to change
            }
            let slot = occupied[rng.gen_range(0..occupied.len())];
            let old = lookup(g, slot);
            let mut updated = old + sample_nonzero_normal(rng, sigma);
            while updated == 0.0 {
                updated = old + sample_nonzero_normal(rng, sigma);
            }
            g.set_gene(slot, updated);
        } else if roll < params.weight_change_p + params.weight_create_p {
            if empty.is_empty() {
                continue; // genome is fully connected
            }
            let idx = rng.gen_range(0..empty.len());
            let slot = empty.swap_remove(idx);
            g.set_gene(slot, sample_nonzero_normal(rng, sigma));
            occupied.push(slot);
        } else {
            if occupied.is_empty() {
                continue;
            }
            let idx = rng.gen_range(0..occupied.len());
            let slot = occupied.swap_remove(idx);
            g.set_gene(slot, 0.0);
            empty.push(slot);
        }
    }
    g.canonicalize();
    debug_assert!(g.validate().is_ok());
}

/// Perform the fitness-scaled structural mutation: `m_r` attempts,
/// each passing the probability gate and then adding nodes to a hidden
/// layer or inserting a layer connection / new hidden layer.
pub fn mutate_structure<R: Rng>(g: &mut Genome, fitness: f64, params: &MutationParams, rng: &mut R) {
    let attempts = effective_rate(fitness, params);
    for _ in 0..attempts {
        let connections = g.connection_count();
        let full = g.full_connection_count(params.allow_recurrent).max(1);
        let gate = effective_struct_prob(connections.min(full), full, fitness, params);
        if rng.gen::<f64>() >= gate {
            continue;
        }
        if rng.gen::<bool>() {
            node_mutation(g, fitness, params, rng);
        } else {
            layer_mutation(g, fitness, params, rng);
        }
    }
    g.canonicalize();
    debug_assert!(g.validate().is_ok());
}

/// Add nodes to a uniformly chosen hidden layer, creating the first
/// hidden layer when none exists. Every new node is wired with one
/// random incoming and one random outgoing connection so it cannot be
/// born dead.
fn node_mutation<R: Rng>(g: &mut Genome, fitness: f64, params: &MutationParams, rng: &mut R) {
    let added = effective_added_nodes(fitness, params);
    if added == 0 {
        return;
    }
    let hidden: Vec<LayerId> = g.hidden_ids().collect();
    let target = if hidden.is_empty() {
        let id = g.next_hidden_id();
        g.insert_layer(Layer::new(id, added as usize));
        wire_new_nodes(g, id, 0, added as usize, fitness, params, rng);
        return;
    } else {
        hidden[rng.gen_range(0..hidden.len())]
    };
    let old_count = g.layer(target).expect("hidden layer exists").node_count;
    g.grow_layer(target, added as usize);
    wire_new_nodes(g, target, old_count, added as usize, fitness, params, rng);
}

fn wire_new_nodes<R: Rng>(
    g: &mut Genome,
    layer: LayerId,
    from_index: usize,
    count: usize,
    fitness: f64,
    params: &MutationParams,
    rng: &mut R,
) {
    let sigma = weight_sigma(fitness, params);
    let sources: Vec<LayerId> = g
        .layers
        .iter()
        .map(|l| l.id)
        .filter(|id| params.allow_recurrent || *id < layer)
        .collect();
    let destinations: Vec<LayerId> = g
        .layers
        .iter()
        .map(|l| l.id)
        .filter(|id| !id.is_input())
        .filter(|id| params.allow_recurrent || *id > layer)
        .collect();
    for node in from_index..from_index + count {
        let source = sources[rng.gen_range(0..sources.len())];
        let source_node = rng.gen_range(0..g.layer(source).unwrap().node_count);
        g.set_gene(
            GeneSlot::Edge {
                source,
                destination: layer,
                dest_node: node,
                source_node,
            },
            sample_nonzero_normal(rng, sigma),
        );
        let destination = destinations[rng.gen_range(0..destinations.len())];
        let dest_node = rng.gen_range(0..g.layer(destination).unwrap().node_count);
        g.set_gene(
            GeneSlot::Edge {
                source: layer,
                destination,
                dest_node,
                source_node: node,
            },
            sample_nonzero_normal(rng, sigma),
        );
    }
}

/// Pick a random layer; insert one still-missing layer connection from
/// it, or append a new hidden layer wired between the chosen layer and
/// the output layer when it is already fully connected.
fn layer_mutation<R: Rng>(g: &mut Genome, fitness: f64, params: &MutationParams, rng: &mut R) {
    let sigma = weight_sigma(fitness, params);
    // Without recurrency the output layer cannot host new outgoing
    // connections, so it is not a candidate.
    let candidates: Vec<LayerId> = g
        .layers
        .iter()
        .map(|l| l.id)
        .filter(|id| params.allow_recurrent || !id.is_output())
        .collect();
    let source = candidates[rng.gen_range(0..candidates.len())];
    let missing: Vec<LayerId> = g
        .layers
        .iter()
        .map(|l| l.id)
        .filter(|id| !id.is_input())
        .filter(|id| params.allow_recurrent || *id > source)
        .filter(|id| g.connection(source, *id).is_none())
        .collect();
    if !missing.is_empty() {
        let destination = missing[rng.gen_range(0..missing.len())];
        let dest_node = rng.gen_range(0..g.layer(destination).unwrap().node_count);
        let source_node = rng.gen_range(0..g.layer(source).unwrap().node_count);
        g.set_gene(
            GeneSlot::Edge {
                source,
                destination,
                dest_node,
                source_node,
            },
            sample_nonzero_normal(rng, sigma),
        );
    } else {
        let nodes = effective_added_nodes(fitness, params).max(1) as usize;
        let id = g.next_hidden_id();
        g.insert_layer(Layer::new(id, nodes));
        let out_nodes = g.output_layer().node_count;
        let src_nodes = g.layer(source).unwrap().node_count;
        for node in 0..nodes {
            g.set_gene(
                GeneSlot::Edge {
                    source,
                    destination: id,
                    dest_node: node,
                    source_node: rng.gen_range(0..src_nodes),
                },
                sample_nonzero_normal(rng, sigma),
            );
            g.set_gene(
                GeneSlot::Edge {
                    source: id,
                    destination: LayerId::OUTPUT,
                    dest_node: rng.gen_range(0..out_nodes),
                    source_node: node,
                },
                sample_nonzero_normal(rng, sigma),
            );
        }
    }
}

fn lookup(g: &Genome, slot: GeneSlot) -> f64 {
    match slot {
        GeneSlot::Edge {
            source,
            destination,
            dest_node,
            source_node,
        } => g
            .connection(source, destination)
            .map_or(0.0, |c| c.weight(dest_node, source_node)),
        GeneSlot::Bias {
            destination,
            dest_node,
        } => g
            .connection(LayerId::INPUT, destination)
            .map_or(0.0, |c| c.bias_weight(dest_node)),
    }
}

/// Fitness-proportionate parent selection within a species, without
/// replacement. A single-member species mates with itself.
pub fn select_parents<'a, R: Rng>(members: &[&'a Genome], rng: &mut R) -> (&'a Genome, &'a Genome) {
    assert!(!members.is_empty(), "species has at least one member");
    if members.len() == 1 {
        return (members[0], members[0]);
    }
    let min = members
        .iter()
        .map(|m| m.fitness)
        .fold(f64::INFINITY, f64::min);
    let shift = if min <= 0.0 { -min + 1e-9 } else { 0.0 };
    let weights: Vec<f64> = members.iter().map(|m| m.fitness + shift).collect();
    let first = weighted_pick(&weights, None, rng);
    let second = weighted_pick(&weights, Some(first), rng);
    (members[first], members[second])
}

fn weighted_pick<R: Rng>(weights: &[f64], exclude: Option<usize>, rng: &mut R) -> usize {
    let total: f64 = weights
        .iter()
        .enumerate()
        .filter(|(i, _)| Some(*i) != exclude)
        .map(|(_, w)| *w)
        .sum();
    if total <= 0.0 {
        // all remaining weight collapsed; pick uniformly
        let candidates: Vec<usize> = (0..weights.len()).filter(|i| Some(*i) != exclude).collect();
        return candidates[rng.gen_range(0..candidates.len())];
    }
    let mut roll = rng.gen_range(0.0..total);
    for (i, w) in weights.iter().enumerate() {
        if Some(i) == exclude {
            continue;
        }
        if roll < *w {
            return i;
        }
        roll -= w;
    }
    weights.len() - 1 - usize::from(exclude == Some(weights.len() - 1))
}

/// Fitness-weighted crossover. Matching genes come from the first
/// parent with probability equal to its fitness share; disjoint genes
/// are inherited with their owner's share. With `fitness_weighted`
/// false every decision is an even coin flip (ablation baseline).
pub fn crossover<R: Rng>(p1: &Genome, p2: &Genome, rng: &mut R, fitness_weighted: bool) -> Genome {
    use std::collections::BTreeMap;
    let share = if !fitness_weighted {
        0.5
    } else if p1.fitness + p2.fitness > 0.0 {
        p1.fitness / (p1.fitness + p2.fitness)
    } else {
        0.5
    };
    let genes_a: BTreeMap<GeneSlot, f64> = p1.gene_slots().into_iter().collect();
    let genes_b: BTreeMap<GeneSlot, f64> = p2.gene_slots().into_iter().collect();
    let mut inherited: Vec<(GeneSlot, f64)> = Vec::new();
    let mut slots: Vec<GeneSlot> = genes_a.keys().chain(genes_b.keys()).copied().collect();
    slots.sort_unstable();
    slots.dedup();
    for slot in slots {
        match (genes_a.get(&slot), genes_b.get(&slot)) {
            (Some(&wa), Some(&wb)) => {
                let w = if rng.gen::<f64>() < share { wa } else { wb };
                inherited.push((slot, w));
            }
            (Some(&wa), None) => {
                if rng.gen::<f64>() < share {
                    inherited.push((slot, wa));
                }
            }
            (None, Some(&wb)) => {
                if rng.gen::<f64>() < 1.0 - share {
                    inherited.push((slot, wb));
                }
            }
            (None, None) => unreachable!(),
        }
    }
    // Layers: the union of the parents' layers (unified node counts),
    // restricted to layers that host at least one inherited gene.
    let mut used: std::collections::BTreeSet<LayerId> =
        [LayerId::INPUT, LayerId::OUTPUT].into_iter().collect();
    for (slot, _) in &inherited {
        match slot {
            GeneSlot::Edge {
                source, destination, ..
            } => {
                used.insert(*source);
                used.insert(*destination);
            }
            GeneSlot::Bias { destination, .. } => {
                used.insert(*destination);
            }
        }
    }
    let layers: Vec<Layer> = align(p1, p2)
        .into_iter()
        .filter(|l| used.contains(&l.id))
        .map(|l| Layer::new(l.id, l.union_nodes()))
        .collect();
    let mut child = Genome::from_layers(layers).expect("union layers are valid");
    for (slot, w) in inherited {
        child.set_gene(slot, w);
    }
    child.canonicalize();
    debug_assert!(child.validate().is_ok());
    child.parent_fitness_hint = p1.fitness.max(p2.fitness);
    child
}

/// One species' contribution to the next generation.
pub struct BreedGroup<'a> {
    pub species_id: u64,
    pub members: Vec<&'a Genome>,
    pub offspring: usize,
}

/// Produce exactly the planned offspring: per species, select parents,
/// cross over with probability `p_cross` (otherwise clone the fitter
/// parent), then apply weight and structural mutation with the fitter
/// parent's fitness as hint. Fresh minimal genomes fill the remaining
/// slots with a zero fitness hint.
#[allow(clippy::too_many_arguments)]
pub fn reproduce(
    groups: &[BreedGroup<'_>],
    fresh_count: usize,
    input_arity: usize,
    output_arity: usize,
    weight_range: (f64, f64),
    p_cross: f64,
    params: &MutationParams,
    next_genome_id: &mut u64,
    mut rng_for: impl FnMut(u64) -> rand_chacha::ChaCha8Rng,
) -> Vec<Genome> {
    let mut offspring = Vec::new();
    for group in groups {
        debug_assert!(!group.members.is_empty() || group.offspring == 0);
        for _ in 0..group.offspring {
            let id = *next_genome_id;
            *next_genome_id += 1;
            let mut rng = rng_for(id);
            let (p1, p2) = select_parents(&group.members, &mut rng);
            let fitter = if p2.fitness > p1.fitness { p2 } else { p1 };
            let hint = fitter.fitness;
            let mut child = if rng.gen::<f64>() < p_cross {
                crossover(p1, p2, &mut rng, params.fbgo)
            } else {
                fitter.clone()
            };
            child.id = id;
            child.fitness = 0.0;
            child.parent_fitness_hint = hint;
            child.evaluated = false;
            mutate_weights(&mut child, hint, params, &mut rng);
            mutate_structure(&mut child, hint, params, &mut rng);
            offspring.push(child);
        }
    }
    for _ in 0..fresh_count {
        let id = *next_genome_id;
        *next_genome_id += 1;
        let mut rng = rng_for(id);
        let mut g = Genome::new_minimal(input_arity, output_arity, &mut rng, weight_range)
            .expect("arity validated by the environment");
        g.id = id;
        offspring.push(g);
    }
    offspring
}
