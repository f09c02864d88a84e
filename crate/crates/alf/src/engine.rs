//! The generational loop: parallel evaluation, semantic sample
//! collection, species bookkeeping, population adaptation,
//! reproduction and speciation of offspring, plus checkpointing and
//! the component-ablation harness.
//!
//! Determinism: a run's output is a pure function of (config, seed).
//! All randomness is drawn from streams keyed by genome id and
//! generation, evaluation results are applied in genome-id order, and
//! environments are seeded from the master seed, so worker count and
//! scheduling cannot influence anything.

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::config::EvolutionConfig;
use crate::environments::{self, EpisodeResult};
use crate::genome::Genome;
use crate::network::Network;
use crate::operators::{self, BreedGroup, MutationParams};
use crate::population::{
    next_population_size, GenerationStats, GlobalBest, Population, ReproductionPlan,
};
use crate::rng::{stream, StreamDomain};
use crate::speciation::{Assigner, SemanticSampleBuffer, Species};

const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum EngineError {
    #[error(transparent)]
    Config(#[from] crate::config::ConfigError),
    #[error(transparent)]
    Environment(#[from] crate::environments::EnvironmentError),
    #[error(transparent)]
    Speciation(#[from] crate::speciation::SpeciationError),
    #[error(transparent)]
    Population(#[from] crate::population::PopulationError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed checkpoint: {0}")]
    CheckpointParse(String),
    #[error("checkpoint version {found} is not supported (expected {expected})")]
    CheckpointVersion { found: u32, expected: u32 },
}

/// Fitness source for the engine. The default implementation wraps a
/// named benchmark environment; custom evaluators plug in simulated or
/// external tasks.
pub trait Evaluator: Send + Sync {
    fn input_arity(&self) -> usize;
    fn output_arity(&self) -> usize;
    /// Fitness threshold used when the config does not override it.
    fn default_fitness_threshold(&self) -> f64;
    fn evaluate(&self, genome: &Genome, env_seed: u64, trace_cap: usize) -> EpisodeResult;
}

struct EnvironmentEvaluator {
    name: String,
    input_arity: usize,
    output_arity: usize,
    fitness_threshold: f64,
}

impl EnvironmentEvaluator {
    fn new(name: &str) -> Result<Self, EngineError> {
        let env = environments::by_name(name)?;
        Ok(EnvironmentEvaluator {
            name: name.to_string(),
            input_arity: env.input_arity(),
            output_arity: env.output_arity(),
            fitness_threshold: env.fitness_threshold(),
        })
    }
}

impl Evaluator for EnvironmentEvaluator {
    fn input_arity(&self) -> usize {
        self.input_arity
    }

    fn output_arity(&self) -> usize {
        self.output_arity
    }

    fn default_fitness_threshold(&self) -> f64 {
        self.fitness_threshold
    }

    fn evaluate(&self, genome: &Genome, env_seed: u64, trace_cap: usize) -> EpisodeResult {
        let mut env = environments::by_name(&self.name).expect("name validated at construction");
        let mut net = Network::decode(genome);
        environments::evaluate_network(&mut net, &mut *env, env_seed, trace_cap)
    }
}

/// Result of a full run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    pub solved: bool,
    /// Number of evaluated generations G.
    pub generations: u64,
    pub wall_time_s: f64,
    pub timed_out: bool,
    pub best_fitness: f64,
    /// Connections E of the champion.
    pub champion_connections: usize,
    /// Hidden nodes H of the champion.
    pub champion_hidden_nodes: usize,
    pub environment: String,
    pub seed: u64,
    pub workers: usize,
    pub stats: Vec<GenerationStats>,
}

#[derive(Serialize, Deserialize)]
struct IndividualState {
    genome: Genome,
    evaluated: bool,
    parent_fitness_hint: f64,
}

#[derive(Serialize, Deserialize)]
struct CheckpointDoc {
    version: u32,
    config: EvolutionConfig,
    generation: u64,
    next_genome_id: u64,
    next_species_id: u64,
    individuals: Vec<IndividualState>,
    species: Vec<Species>,
    global_best: Option<GlobalBest>,
    buffer_samples: Vec<Vec<f64>>,
    stats: Vec<GenerationStats>,
    last_deleted_species: usize,
    last_culled: usize,
}

/// One evolutionary run over a population.
pub struct Engine {
    config: EvolutionConfig,
    evaluator: Box<dyn Evaluator>,
    params: MutationParams,
    fitness_threshold: f64,
    env_seed: u64,
    pool: rayon::ThreadPool,
    population: Population,
    buffer: SemanticSampleBuffer,
    stats: Vec<GenerationStats>,
    last_deleted_species: usize,
    last_culled: usize,
    current_generation_evaluated: bool,
}

impl Engine {
    /// Engine over the benchmark named in the config.
    pub fn new(config: EvolutionConfig) -> Result<Engine, EngineError> {
        config.validate()?;
        let evaluator = Box::new(EnvironmentEvaluator::new(&config.environment)?);
        Engine::with_evaluator(config, evaluator)
    }

    /// Engine over a custom fitness source.
    pub fn with_evaluator(
        config: EvolutionConfig,
        evaluator: Box<dyn Evaluator>,
    ) -> Result<Engine, EngineError> {
        config.validate()?;
        let fitness_threshold = config
            .f_t
            .unwrap_or_else(|| evaluator.default_fitness_threshold());
        let mut engine = Engine::assemble(config, evaluator, fitness_threshold)?;
        engine.seed_population()?;
        Ok(engine)
    }

    fn assemble(
        config: EvolutionConfig,
        evaluator: Box<dyn Evaluator>,
        fitness_threshold: f64,
    ) -> Result<Engine, EngineError> {
        use rand::Rng;
        let params = config.mutation_params(fitness_threshold);
        let buffer = SemanticSampleBuffer::new(config.buffer_capacity, config.buffer_subsample)?;
        let env_seed = stream(config.seed, StreamDomain::Environment, 0, 0).gen();
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.workers)
            .build()
            .expect("thread pool construction");
        Ok(Engine {
            config,
            evaluator,
            params,
            fitness_threshold,
            env_seed,
            pool,
            population: Population::new(),
            buffer,
            stats: Vec::new(),
            last_deleted_species: 0,
            last_culled: 0,
            current_generation_evaluated: false,
        })
    }

    fn seed_population(&mut self) -> Result<(), EngineError> {
        let mut fresh = Vec::with_capacity(self.config.p_init);
        for _ in 0..self.config.p_init {
            let id = self.population.next_genome_id;
            self.population.next_genome_id += 1;
            let mut rng = stream(self.config.seed, StreamDomain::Init, 0, id);
            let mut genome = Genome::new_minimal(
                self.evaluator.input_arity(),
                self.evaluator.output_arity(),
                &mut rng,
                self.config.weight_range,
            )
            .expect("environment arities are positive");
            genome.id = id;
            fresh.push(genome);
        }
        self.speciate_and_admit(fresh)?;
        Ok(())
    }

    /// Assign new individuals to species, then add them to the
    /// population.
    fn speciate_and_admit(&mut self, newcomers: Vec<Genome>) -> Result<(), EngineError> {
        if self.config.sss {
            let mut assigner = Assigner::new(
                &self.population.species,
                &self.buffer,
                self.config.c1,
                self.config.c2,
                self.config.delta_t,
            )?;
            for genome in &newcomers {
                assigner.assign(
                    genome,
                    &mut self.population.species,
                    &mut self.population.next_species_id,
                );
            }
        } else {
            // speciation disabled: every individual forms its own species
            for genome in &newcomers {
                let id = self.population.next_species_id;
                self.population.next_species_id += 1;
                self.population.species.push(Species::new(id, genome.clone()));
            }
        }
        self.population.individuals.extend(newcomers);
        Ok(())
    }

    pub fn population(&self) -> &Population {
        &self.population
    }

    pub fn fitness_threshold(&self) -> f64 {
        self.fitness_threshold
    }

    pub fn stats(&self) -> &[GenerationStats] {
        &self.stats
    }

    /// Champion so far: the immortal copy of the best individual.
    pub fn champion(&self) -> Option<&Genome> {
        self.population.global_best.as_ref().map(|b| &b.genome)
    }

    pub fn solved(&self) -> bool {
        self.population
            .global_best
            .as_ref()
            .map_or(false, |b| b.fitness() >= self.fitness_threshold)
    }

    /// Evaluate every pending individual in parallel and apply the
    /// results in genome-id order.
    fn evaluate_pending(&mut self) {
        use rayon::prelude::*;
        let evaluator = &*self.evaluator;
        let env_seed = self.env_seed;
        let results: Vec<(u64, f64)> = self.pool.install(|| {
            self.population
                .individuals
                .par_iter()
                .filter(|g| !g.evaluated)
                .map(|g| (g.id, evaluator.evaluate(g, env_seed, 0).fitness))
                .collect()
        });
        let mut sorted = results;
        sorted.sort_by_key(|(id, _)| *id);
        for (id, fitness) in sorted {
            let genome = self
                .population
                .genome_mut(id)
                .expect("evaluated genome is present");
            genome.fitness = fitness.max(0.0);
            genome.evaluated = true;
        }
    }

    /// Close the evaluation phase of the current generation: fitness,
    /// semantic samples, species statistics, one stats record.
    fn evaluate_generation(&mut self) {
        if self.current_generation_evaluated {
            return;
        }
        self.evaluate_pending();
        self.population.refresh_best_records();
        self.population.tick_staleness();
        // the semantic buffer collects the observation trace of the
        // generation's best individual
        if let Some(best) = self.population.best_individual() {
            let trace_cap = (self.config.buffer_capacity / 4).max(1);
            let episode = self.evaluator.evaluate(best, self.env_seed, trace_cap);
            for observation in episode.observations {
                self.buffer.push(observation);
            }
        }
        let best = self
            .population
            .global_best
            .as_ref()
            .expect("population evaluated");
        let mean = self
            .population
            .individuals
            .iter()
            .map(|g| g.fitness)
            .sum::<f64>()
            / self.population.size().max(1) as f64;
        let record = GenerationStats {
            gen: self.population.generation,
            pop_size: self.population.size(),
            species_count: self.population.species.len(),
            best_fitness: best.fitness(),
            mean_fitness: mean,
            e_best: best.genome.connection_count(),
            h_best: best.genome.hidden_node_count(),
            deleted_species: self.last_deleted_species,
            culled: self.last_culled,
        };
        log::debug!(
            "gen {} pop {} species {} best {:.4} mean {:.4}",
            record.gen,
            record.pop_size,
            record.species_count,
            record.best_fitness,
            record.mean_fitness
        );
        self.stats.push(record);
        self.current_generation_evaluated = true;
    }

    /// Apply population adaptation and reproduction, producing the
    /// next generation.
    fn breed_next_generation(&mut self) -> Result<(), EngineError> {
        let p_old = self.population.size();
        let species_before = self.population.species.len();

        // species deletion: fitness/age rule plus staleness with the
        // population component enabled, staleness alone otherwise
        let shares = self.population.species_fitness_shares()?;
        let doomed = if self.config.dap {
            self.population.select_species_for_deletion(
                &shares,
                self.config.c3,
                self.config.c4,
                self.config.staleness,
            )
        } else {
            let best_species = self
                .population
                .best_individual()
                .and_then(|g| self.population.species_of(g.id))
                .map(|s| s.id);
            self.population
                .species
                .iter()
                .filter(|s| Some(s.id) != best_species && s.staleness >= self.config.staleness)
                .map(|s| s.id)
                .collect()
        };
        self.last_deleted_species = doomed.len();
        self.population.remove_species(&doomed);
        if self.population.individuals.is_empty() {
            // every species went extinct: reseed around the immortal best
            self.reseed()?;
            self.population.advance_generation();
            self.current_generation_evaluated = false;
            return Ok(());
        }

        let offspring = if self.config.dap {
            self.breed_dynamic(p_old, species_before, doomed.len())?
        } else {
            self.breed_fixed()?
        };
        self.speciate_and_admit(offspring)?;
        self.population.advance_generation();
        self.current_generation_evaluated = false;
        Ok(())
    }

    /// Population adaptation: cull, resize, allocate, reproduce.
    fn breed_dynamic(
        &mut self,
        p_old: usize,
        species_before: usize,
        deleted: usize,
    ) -> Result<Vec<Genome>, EngineError> {
        let s_del = deleted as f64 / species_before.max(1) as f64;
        let cull_budget = p_old / 2;
        let p_new = next_population_size(
            p_old,
            s_del,
            self.config.p_init,
            self.config.p_max,
            self.config.ebb,
        );
        // Share-gradient cull extended to a guaranteed turnover:
        // survivors are bounded by half the target size, with every
        // removal happening weakest-first inside its own species so
        // individuals compete mainly within their species.
        let shares = self.population.species_fitness_shares()?;
        let target_survivors = p_new.div_ceil(2);
        let mut cull = self.population.turnover_cull(&shares, target_survivors);
        trim_to_budget(&mut cull, cull_budget);
        self.population.remove_individuals(&cull);
        // The ebb can demand a smaller population than the cull left;
        // shrink further from the globally weakest unprotected
        // individuals. (A population fragmented into one-member species
        // may refuse to shrink; staleness clears such states.)
        let remaining_budget = cull_budget.saturating_sub(cull.len());
        let (extra, _unreachable) = self.population.extra_shrink(p_new, remaining_budget);
        self.population.remove_individuals(&extra);
        cull.extend(extra);
        self.last_culled = cull.len();

        let shares = self.population.species_fitness_shares()?;
        let mut plan = self.population.allocate_offspring(p_new, &shares, self.config.o_init);
        plan.cull = cull;
        Ok(self.run_plan(&plan))
    }

    /// Fixed-size reproduction used when the population component is
    /// off: keep the best individual, replace everyone else with
    /// offspring allocated by total species fitness.
    fn breed_fixed(&mut self) -> Result<Vec<Genome>, EngineError> {
        let slots = self.config.p_init.saturating_sub(1);
        let totals: Vec<f64> = self
            .population
            .species
            .iter()
            .map(|s| {
                self.population
                    .members_of(s)
                    .iter()
                    .map(|g| g.fitness)
                    .sum::<f64>()
            })
            .collect();
        let sum: f64 = totals.iter().sum();
        let quotas: Vec<(u64, f64)> = self
            .population
            .species
            .iter()
            .zip(&totals)
            .map(|(s, total)| {
                let share = if sum > 0.0 {
                    total / sum
                } else {
                    1.0 / totals.len() as f64
                };
                (s.id, share * slots as f64)
            })
            .collect();
        let counts = crate::population::apportion(&quotas, slots);
        let plan = ReproductionPlan {
            offspring: self
                .population
                .species
                .iter()
                .zip(&counts)
                .map(|(s, c)| (s.id, *c))
                .collect(),
            fresh_count: 0,
            cull: Vec::new(),
            p_new: self.config.p_init,
            shrink_event: false,
        };
        let offspring = self.run_plan(&plan);
        // generational replacement with an elite of one
        let best_id = self
            .population
            .best_individual()
            .expect("population is non-empty")
            .id;
        let removals: Vec<u64> = self
            .population
            .individuals
            .iter()
            .map(|g| g.id)
            .filter(|id| *id != best_id)
            .collect();
        self.last_culled = removals.len();
        self.population.remove_individuals(&removals);
        Ok(offspring)
    }

    /// Breed every planned offspring from the current members.
    fn run_plan(&mut self, plan: &ReproductionPlan) -> Vec<Genome> {
        let groups: Vec<BreedGroup<'_>> = plan
            .offspring
            .iter()
            .filter_map(|(species_id, count)| {
                let species = self.population.species.iter().find(|s| s.id == *species_id)?;
                let members = self.population.members_of(species);
                if members.is_empty() {
                    return None;
                }
                Some(BreedGroup {
                    species_id: *species_id,
                    members,
                    offspring: *count,
                })
            })
            .collect();
        let master = self.config.seed;
        let generation = self.population.generation;
        let mut next_id = self.population.next_genome_id;
        let offspring = operators::reproduce(
            &groups,
            plan.fresh_count,
            self.evaluator.input_arity(),
            self.evaluator.output_arity(),
            self.config.weight_range,
            self.config.p_cross,
            &self.params,
            &mut next_id,
            |id| stream(master, StreamDomain::Reproduce, generation, id),
        );
        self.population.next_genome_id = next_id;
        offspring
    }

    fn reseed(&mut self) -> Result<(), EngineError> {
        log::warn!("all species extinct; reseeding around the best individual");
        self.population.species.clear();
        let mut newcomers = Vec::new();
        if let Some(best) = &self.population.global_best {
            let mut immortal = best.genome.clone();
            immortal.id = self.population.next_genome_id;
            self.population.next_genome_id += 1;
            newcomers.push(immortal);
        }
        for _ in newcomers.len()..self.config.p_init {
            let id = self.population.next_genome_id;
            self.population.next_genome_id += 1;
            let mut rng = stream(self.config.seed, StreamDomain::Init, self.population.generation + 1, id);
            let mut genome = Genome::new_minimal(
                self.evaluator.input_arity(),
                self.evaluator.output_arity(),
                &mut rng,
                self.config.weight_range,
            )
            .expect("environment arities are positive");
            genome.id = id;
            newcomers.push(genome);
        }
        self.speciate_and_admit(newcomers)
    }

    /// Run `n` full generations (evaluate + breed) without termination
    /// checks. Useful with checkpointing.
    pub fn run_generations(&mut self, n: u64) -> Result<(), EngineError> {
        for _ in 0..n {
            self.evaluate_generation();
            self.breed_next_generation()?;
        }
        Ok(())
    }

    /// Run until the fitness threshold, the generation cap or the
    /// wall-clock timeout is reached.
    pub fn run(&mut self) -> Result<RunReport, EngineError> {
        let started = Instant::now();
        let mut timed_out = false;
        loop {
            self.evaluate_generation();
            if self.solved() {
                break;
            }
            if self.population.generation + 1 >= self.config.max_generations {
                break;
            }
            if started.elapsed().as_secs() >= self.config.timeout_s {
                timed_out = true;
                break;
            }
            self.breed_next_generation()?;
        }
        let champion = self.champion().cloned();
        let best_fitness = champion.as_ref().map_or(0.0, |c| c.fitness);
        Ok(RunReport {
            solved: self.solved(),
            generations: self.population.generation + 1,
            wall_time_s: started.elapsed().as_secs_f64(),
            timed_out,
            best_fitness,
            champion_connections: champion.as_ref().map_or(0, |c| c.connection_count()),
            champion_hidden_nodes: champion.as_ref().map_or(0, |c| c.hidden_node_count()),
            environment: self.config.environment.clone(),
            seed: self.config.seed,
            workers: self.config.workers,
            stats: self.stats.clone(),
        })
    }

    /// Serialize the full engine state. Resuming continues
    /// bit-identically to an uninterrupted run.
    pub fn checkpoint(&self, path: impl AsRef<Path>) -> Result<(), EngineError> {
        let doc = CheckpointDoc {
            version: CHECKPOINT_VERSION,
            config: self.config.clone(),
            generation: self.population.generation,
            next_genome_id: self.population.next_genome_id,
            next_species_id: self.population.next_species_id,
            individuals: self
                .population
                .individuals
                .iter()
                .map(|g| IndividualState {
                    genome: g.clone(),
                    evaluated: g.evaluated,
                    parent_fitness_hint: g.parent_fitness_hint,
                })
                .collect(),
            species: self.population.species.clone(),
            global_best: self.population.global_best.clone(),
            buffer_samples: self.buffer.snapshot(),
            stats: self.stats.clone(),
            last_deleted_species: self.last_deleted_species,
            last_culled: self.last_culled,
        };
        let mut file = std::fs::File::create(path)?;
        let bytes = serde_json::to_vec(&doc).expect("checkpoint serialization");
        file.write_all(&bytes)?;
        file.flush()?;
        Ok(())
    }

    /// Restore an engine from a checkpoint file.
    pub fn resume(path: impl AsRef<Path>) -> Result<Engine, EngineError> {
        let text = std::fs::read_to_string(path)?;
        let doc: CheckpointDoc =
            serde_json::from_str(&text).map_err(|e| EngineError::CheckpointParse(e.to_string()))?;
        if doc.version != CHECKPOINT_VERSION {
            return Err(EngineError::CheckpointVersion {
                found: doc.version,
                expected: CHECKPOINT_VERSION,
            });
        }
        doc.config.validate()?;
        let evaluator = Box::new(EnvironmentEvaluator::new(&doc.config.environment)?);
        let fitness_threshold = doc
            .config
            .f_t
            .unwrap_or_else(|| evaluator.default_fitness_threshold());
        let buffer_capacity = doc.config.buffer_capacity;
        let buffer_subsample = doc.config.buffer_subsample;
        let mut engine = Engine::assemble(doc.config, evaluator, fitness_threshold)?;
        engine.population.generation = doc.generation;
        engine.population.next_genome_id = doc.next_genome_id;
        engine.population.next_species_id = doc.next_species_id;
        engine.population.individuals = doc
            .individuals
            .into_iter()
            .map(|state| {
                let mut g = state.genome;
                g.evaluated = state.evaluated;
                g.parent_fitness_hint = state.parent_fitness_hint;
                g
            })
            .collect();
        for genome in &engine.population.individuals {
            genome
                .validate()
                .map_err(|e| EngineError::CheckpointParse(e.to_string()))?;
        }
        engine.population.species = doc.species;
        engine.population.global_best = doc.global_best;
        engine.buffer =
            SemanticSampleBuffer::restore(buffer_capacity, buffer_subsample, doc.buffer_samples);
        engine.stats = doc.stats;
        engine.last_deleted_species = doc.last_deleted_species;
        engine.last_culled = doc.last_culled;
        Ok(engine)
    }
}

fn trim_to_budget(cull: &mut Vec<u64>, budget: usize) {
    if cull.len() > budget {
        cull.truncate(budget);
    }
}

// --- ablation harness ---

/// One on/off combination of the three components.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ComponentSet {
    pub sss: bool,
    pub dap: bool,
    pub fbgo: bool,
}

impl ComponentSet {
    pub const ALL_OFF: ComponentSet = ComponentSet {
        sss: false,
        dap: false,
        fbgo: false,
    };
    pub const ALL_ON: ComponentSet = ComponentSet {
        sss: true,
        dap: true,
        fbgo: true,
    };

    /// Power set of the given component names, in canonical order
    /// (none, sss, dap, fbgo, sss+dap, sss+fbgo, dap+fbgo, all).
    pub fn power_set(components: &[&str]) -> Result<Vec<ComponentSet>, EngineError> {
        let mut allowed = ComponentSet::ALL_OFF;
        for c in components {
            match c.to_ascii_lowercase().as_str() {
                "sss" => allowed.sss = true,
                "dap" => allowed.dap = true,
                "fbgo" => allowed.fbgo = true,
                other => {
                    return Err(EngineError::CheckpointParse(format!(
                        "unknown component '{other}'"
                    )))
                }
            }
        }
        let full = [
            ComponentSet::ALL_OFF,
            ComponentSet { sss: true, dap: false, fbgo: false },
            ComponentSet { sss: false, dap: true, fbgo: false },
            ComponentSet { sss: false, dap: false, fbgo: true },
            ComponentSet { sss: true, dap: true, fbgo: false },
            ComponentSet { sss: true, dap: false, fbgo: true },
            ComponentSet { sss: false, dap: true, fbgo: true },
            ComponentSet::ALL_ON,
        ];
        Ok(full
            .into_iter()
            .filter(|s| (!s.sss || allowed.sss) && (!s.dap || allowed.dap) && (!s.fbgo || allowed.fbgo))
            .collect())
    }

    pub fn label(&self) -> String {
        let mut parts = Vec::new();
        if self.sss {
            parts.push("sss");
        }
        if self.dap {
            parts.push("dap");
        }
        if self.fbgo {
            parts.push("fbgo");
        }
        if parts.is_empty() {
            "none".to_string()
        } else {
            parts.join("+")
        }
    }

    pub fn apply(&self, config: &EvolutionConfig) -> EvolutionConfig {
        let mut c = config.clone();
        c.sss = self.sss;
        c.dap = self.dap;
        c.fbgo = self.fbgo;
        c
    }
}

/// Aggregated metrics of one component combination.
#[derive(Debug, Clone, Serialize)]
pub struct AblationRow {
    pub symbiosis: String,
    /// Mean wall time of solved runs, minutes.
    pub t_min: f64,
    /// Mean generations of solved runs.
    pub generations: f64,
    /// Mean champion connections of solved runs.
    pub connections: f64,
    /// Mean champion hidden nodes of solved runs.
    pub hidden: f64,
    pub solved: usize,
    pub runs: usize,
}

/// Run every requested component combination over a shared seed list
/// (`config.seed`, `config.seed + 1`, ...), so comparisons are paired.
/// Averages cover solved runs only; the solved count is reported
/// separately.
pub fn ablation(
    config: &EvolutionConfig,
    sets: &[ComponentSet],
    runs: usize,
) -> Result<Vec<AblationRow>, EngineError> {
    let mut rows = Vec::with_capacity(sets.len());
    for set in sets {
        let mut solved_metrics: Vec<(f64, f64, f64, f64)> = Vec::new();
        for offset in 0..runs {
            let mut run_config = set.apply(config);
            run_config.seed = config.seed.wrapping_add(offset as u64);
            let mut engine = Engine::new(run_config)?;
            let report = engine.run()?;
            log::info!(
                "ablation {} seed {} solved={} G={}",
                set.label(),
                report.seed,
                report.solved,
                report.generations
            );
            if report.solved {
                solved_metrics.push((
                    report.wall_time_s / 60.0,
                    report.generations as f64,
                    report.champion_connections as f64,
                    report.champion_hidden_nodes as f64,
                ));
            }
        }
        let n = solved_metrics.len();
        let mean = |pick: fn(&(f64, f64, f64, f64)) -> f64| {
            if n == 0 {
                f64::NAN
            } else {
                solved_metrics.iter().map(pick).sum::<f64>() / n as f64
            }
        };
        rows.push(AblationRow {
            symbiosis: set.label(),
            t_min: mean(|m| m.0),
            generations: mean(|m| m.1),
            connections: mean(|m| m.2),
            hidden: mean(|m| m.3),
            solved: n,
            runs,
        });
    }
    Ok(rows)
}

/// Render ablation rows in the fixed five-column layout.
pub fn ablation_csv(rows: &[AblationRow]) -> String {
    let mut csv = String::from("symbiosis,t_min,G,E,H\n");
    for row in rows {
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            row.symbiosis, row.t_min, row.generations, row.connections, row.hidden
        ));
    }
    csv
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_config() -> EvolutionConfig {
        let mut config = EvolutionConfig::default();
        config.p_init = 20;
        config.p_max = 40;
        config.max_generations = 5;
        config.seed = 3;
        config
    }

    #[test]
    fn initial_population_is_minimal_and_speciated() {
        let engine = Engine::new(tiny_config()).unwrap();
        let pop = engine.population();
        assert_eq!(pop.size(), 20);
        // structurally identical minimal genomes share one species
        assert_eq!(pop.species.len(), 1);
        assert_eq!(pop.species[0].members.len(), 20);
        for g in &pop.individuals {
            assert_eq!(g.hidden_node_count(), 0);
            assert_eq!(g.connection_count(), 2);
        }
    }

    #[test]
    fn sss_off_gives_one_species_per_individual() {
        let mut config = tiny_config();
        config.sss = false;
        let engine = Engine::new(config).unwrap();
        assert_eq!(engine.population().species.len(), 20);
    }

    #[test]
    fn generations_change_population_and_accounting_holds() {
        let mut engine = Engine::new(tiny_config()).unwrap();
        engine.run_generations(5).unwrap();
        let pop = engine.population();
        assert_eq!(pop.generation, 5);
        assert!(pop.size() >= 20 && pop.size() <= 40);
        let member_total: usize = pop.species.iter().map(|s| s.members.len()).sum();
        assert_eq!(member_total, pop.size());
        for g in &pop.individuals {
            g.validate().unwrap();
        }
    }

    #[test]
    fn run_report_is_complete_when_unsolved() {
        let mut config = tiny_config();
        config.max_generations = 2;
        let mut engine = Engine::new(config).unwrap();
        let report = engine.run().unwrap();
        assert_eq!(report.generations, 2);
        assert_eq!(report.stats.len(), 2);
        assert!(!report.timed_out);
        assert!(report.best_fitness > 0.0);
    }

    #[test]
    fn identical_configs_give_identical_runs() {
        let build = |workers: usize| {
            let mut config = tiny_config();
            config.workers = workers;
            let mut engine = Engine::new(config).unwrap();
            engine.run_generations(4).unwrap();
            let champion = engine.champion().unwrap().serialize();
            let stats = serde_json::to_string(engine.stats()).unwrap();
            (champion, stats)
        };
        let (c1, s1) = build(1);
        let (c2, s2) = build(4);
        assert_eq!(c1, c2);
        assert_eq!(s1, s2);
    }

    #[test]
    fn checkpoint_resume_continues_bit_identically(){
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("checkpoint.json");
        let mut split = Engine::new(tiny_config()).unwrap();
        split.run_generations(3).unwrap();
        split.checkpoint(&path).unwrap();
        let mut resumed = Engine::resume(&path).unwrap();
        resumed.run_generations(2).unwrap();

        let mut straight = Engine::new(tiny_config()).unwrap();
        straight.run_generations(5).unwrap();

        assert_eq!(
            resumed.champion().unwrap().serialize(),
            straight.champion().unwrap().serialize()
        );
        assert_eq!(
            serde_json::to_string(resumed.stats()).unwrap(),
            serde_json::to_string(straight.stats()).unwrap()
        );
        // identical continuation state, not just identical champions
        let a = dir.path().join("resumed.json");
        let b = dir.path().join("straight.json");
        resumed.checkpoint(&a).unwrap();
        straight.checkpoint(&b).unwrap();
        assert_eq!(std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
    }

    #[test]
    fn resume_rejects_missing_and_bad_versions() {
        assert!(matches!(
            Engine::resume("/nonexistent/checkpoint.json"),
            Err(EngineError::Io(_))
        ));
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("checkpoint.json");
        let mut engine = Engine::new(tiny_config()).unwrap();
        engine.run_generations(1).unwrap();
        engine.checkpoint(&path).unwrap();
        let text = std::fs::read_to_string(&path)
            .unwrap()
            .replace("\"version\":1", "\"version\":9");
        std::fs::write(&path, text).unwrap();
        assert!(matches!(
            Engine::resume(&path),
            Err(EngineError::CheckpointVersion { found: 9, .. })
        ));
    }

    #[test]
    fn power_set_has_eight_rows_and_subsets_filter() {
        let all = ComponentSet::power_set(&["sss", "dap", "fbgo"]).unwrap();
        assert_eq!(all.len(), 8);
        let labels: Vec<String> = all.iter().map(|s| s.label()).collect();
        assert_eq!(labels[0], "none");
        assert_eq!(labels[7], "sss+dap+fbgo");
        let subset = ComponentSet::power_set(&["sss", "fbgo"]).unwrap();
        assert_eq!(subset.len(), 4);
        assert!(ComponentSet::power_set(&["nope"]).is_err());
    }

    #[test]
    fn ablation_rows_share_seeds_and_csv_shape() {
        let mut config = tiny_config();
        config.max_generations = 2;
        let sets = ComponentSet::power_set(&["sss"]).unwrap();
        let rows = ablation(&config, &sets, 2).unwrap();
        assert_eq!(rows.len(), 2);
        let csv = ablation_csv(&rows);
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "symbiosis,t_min,G,E,H");
        for line in lines {
            assert_eq!(line.split(',').count(), 5);
        }
    }
}
