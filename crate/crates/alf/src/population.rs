//! Dynamic adaptation of the population: fitness sharing, species
//! aging and staleness deletion, culling of weak individuals, ebb and
//! growth of the population size, and fitness-proportional offspring
//! allocation.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::genome::Genome;
use crate::speciation::Species;

#[derive(Debug, thiserror::Error)]
pub enum PopulationError {
    #[error("invalid population state: {0}")]
    InvalidState(String),
}

/// Immortal record of the best individual seen so far.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GlobalBest {
    pub genome: Genome,
}

impl GlobalBest {
    pub fn id(&self) -> u64 {
        self.genome.id
    }

    pub fn fitness(&self) -> f64 {
        self.genome.fitness
    }
}

/// Per-generation statistics record (one JSONL line per generation).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GenerationStats {
    pub gen: u64,
    pub pop_size: usize,
    pub species_count: usize,
    pub best_fitness: f64,
    pub mean_fitness: f64,
    pub e_best: usize,
    pub h_best: usize,
    pub deleted_species: usize,
    pub culled: usize,
}

/// How the next generation is filled: per-species offspring counts,
/// freshly initialized genomes, and the individuals to remove.
#[derive(Debug, Clone, Default)]
pub struct ReproductionPlan {
    /// `(species id, offspring count)` in species order.
    pub offspring: Vec<(u64, usize)>,
    /// Newly initialized minimal genomes to append.
    pub fresh_count: usize,
    /// Genome ids culled before reproduction.
    pub cull: Vec<u64>,
    pub p_new: usize,
    /// Survivors exceeded the target size and could not be trimmed
    /// further without touching protected individuals.
    pub shrink_event: bool,
}

impl ReproductionPlan {
    pub fn total_offspring(&self) -> usize {
        self.offspring.iter().map(|(_, n)| n).sum::<usize>() + self.fresh_count
    }
}

/// All individuals and species of one evolutionary run.
#[derive(Debug, Clone)]
pub struct Population {
    pub individuals: Vec<Genome>,
    /// Species sorted ascending by id.
    pub species: Vec<Species>,
    /// Generation counter t.
    pub generation: u64,
    pub next_genome_id: u64,
    pub next_species_id: u64,
    pub global_best: Option<GlobalBest>,
}

impl Population {
    pub fn new() -> Self {
        Population {
            individuals: Vec::new(),
            species: Vec::new(),
            generation: 0,
            next_genome_id: 0,
            next_species_id: 1,
            global_best: None,
        }
    }

    pub fn size(&self) -> usize {
        self.individuals.len()
    }

    // Individuals are created with strictly increasing ids and only
    // ever removed, so the vector stays sorted by id.
    pub fn genome(&self, id: u64) -> Option<&Genome> {
        self.individuals
            .binary_search_by_key(&id, |g| g.id)
            .ok()
            .map(|i| &self.individuals[i])
    }

    pub fn genome_mut(&mut self, id: u64) -> Option<&mut Genome> {
        self.individuals
            .binary_search_by_key(&id, |g| g.id)
            .ok()
            .map(move |i| &mut self.individuals[i])
    }

    /// Member genomes of one species, in member-id order.
    pub fn members_of<'a>(&'a self, species: &Species) -> Vec<&'a Genome> {
        let mut members: Vec<&Genome> = species
            .members
            .iter()
            .filter_map(|id| self.genome(*id))
            .collect();
        members.sort_by_key(|g| g.id);
        members
    }

    /// Best individual of the current population: maximum fitness,
    /// ties broken by the lowest genome id.
    pub fn best_individual(&self) -> Option<&Genome> {
        self.individuals
            .iter()
            .max_by(|a, b| match a.fitness.total_cmp(&b.fitness) {
                std::cmp::Ordering::Equal => b.id.cmp(&a.id),
                other => other,
            })
    }

    /// Age of the oldest species A_o.
    pub fn oldest_species_age(&self) -> u32 {
        self.species.iter().map(|s| s.age).max().unwrap_or(0)
    }

    /// Mean member fitness per species, the fitness shares
    /// F_si = f_si / sum(f_sj), and the species averages refreshed in
    /// place. All-zero fitness degenerates to uniform shares.
    pub fn species_fitness_shares(&mut self) -> Result<Vec<f64>, PopulationError> {
        if self.individuals.is_empty() || self.species.is_empty() {
            return Err(PopulationError::InvalidState(
                "cannot compute fitness shares of an empty population".into(),
            ));
        }
        let mut means = Vec::with_capacity(self.species.len());
        for s in &self.species {
            let members = self.members_of(s);
            let mean = if members.is_empty() {
                0.0
            } else {
                members.iter().map(|g| g.fitness).sum::<f64>() / members.len() as f64
            };
            means.push(mean);
        }
        for (s, mean) in self.species.iter_mut().zip(&means) {
            s.avg_fitness = *mean;
        }
        let total: f64 = means.iter().sum();
        let n = means.len() as f64;
        Ok(if total > 0.0 {
            means.iter().map(|m| m / total).collect()
        } else {
            means.iter().map(|_| 1.0 / n).collect()
        })
    }

    /// Update the global best record and each species' mascot (the
    /// fittest current member). Idempotent.
    pub fn refresh_best_records(&mut self) {
        if let Some(best) = self.best_individual().cloned() {
            let improved = self
                .global_best
                .as_ref()
                .map_or(true, |gb| best.fitness > gb.fitness());
            if improved {
                self.global_best = Some(GlobalBest { genome: best });
            }
        }
        let mascots: Vec<(usize, Genome)> = self
            .species
            .iter()
            .enumerate()
            .filter_map(|(i, s)| {
                self.members_of(s)
                    .into_iter()
                    .max_by(|a, b| match a.fitness.total_cmp(&b.fitness) {
                        std::cmp::Ordering::Equal => b.id.cmp(&a.id),
                        other => other,
                    })
                    .map(|g| (i, g.clone()))
            })
            .collect();
        for (i, mascot) in mascots {
            self.species[i].mascot = mascot;
        }
    }

    /// Once per generation: reset the staleness counter of species
    /// whose best-ever fitness improved, increment it otherwise.
    pub fn tick_staleness(&mut self) {
        let bests: Vec<f64> = self
            .species
            .iter()
            .map(|s| {
                self.members_of(s)
                    .iter()
                    .map(|g| g.fitness)
                    .fold(f64::NEG_INFINITY, f64::max)
            })
            .collect();
        for (s, best) in self.species.iter_mut().zip(bests) {
            if best > s.best_fitness_ever {
                s.best_fitness_ever = best;
                s.staleness = 0;
            } else {
                s.staleness += 1;
            }
        }
    }

    /// Species ids marked for deletion: old species holding a fitness
    /// share below `c3 / n`, or species stale for `staleness_limit`
    /// generations. The species containing the population's best
    /// individual is never marked.
    pub fn select_species_for_deletion(
        &self,
        shares: &[f64],
        c3: f64,
        c4: f64,
        staleness_limit: u32,
    ) -> Vec<u64> {
        let n = self.species.len() as f64;
        let oldest = self.oldest_species_age() as f64;
        let best_species = self
            .best_individual()
            .and_then(|g| self.species_of(g.id))
            .map(|s| s.id);
        self.species
            .iter()
            .zip(shares)
            .filter(|(s, share)| {
                if Some(s.id) == best_species {
                    return false;
                }
                let weak_and_old = **share < (1.0 / n) * c3 && (s.age as f64) > oldest * c4;
                weak_and_old || s.staleness >= staleness_limit
            })
            .map(|(s, _)| s.id)
            .collect()
    }

    pub fn species_of(&self, genome_id: u64) -> Option<&Species> {
        self.species.iter().find(|s| s.members.contains(&genome_id))
    }

    /// Remove whole species together with their members.
    pub fn remove_species(&mut self, ids: &[u64]) {
        let doomed: BTreeSet<u64> = ids.iter().copied().collect();
        let mut dead_members: BTreeSet<u64> = BTreeSet::new();
        for s in &self.species {
            if doomed.contains(&s.id) {
                dead_members.extend(s.members.iter().copied());
            }
        }
        self.species.retain(|s| !doomed.contains(&s.id));
        self.individuals.retain(|g| !dead_members.contains(&g.id));
    }

    /// Remove individuals by id, keeping species member lists in sync.
    pub fn remove_individuals(&mut self, ids: &[u64]) {
        let doomed: BTreeSet<u64> = ids.iter().copied().collect();
        self.individuals.retain(|g| !doomed.contains(&g.id));
        for s in self.species.iter_mut() {
            s.members.retain(|id| !doomed.contains(id));
        }
    }

    /// Per-species removal counts from the fitness-share gradient: the
    /// cull fraction scales linearly from 0 (for the species holding
    /// the maximum fitness share) to one half (for a zero-share
    /// species).
    fn gradient_requests(&self, shares: &[f64]) -> Vec<(u64, usize)> {
        let n = self.species.len() as f64;
        let f_max = shares.iter().copied().fold(0.0, f64::max);
        let denominator = (f_max * n).max(1.0);
        self.species
            .iter()
            .zip(shares)
            .map(|(s, share)| {
                let size = s.members.len();
                if size == 0 {
                    return (s.id, 0);
                }
                let fraction = 0.5 * (1.0 - (share * n) / denominator);
                (s.id, (((size as f64) * fraction).floor() as usize).min(size / 2))
            })
            .collect()
    }

    /// Resolve per-species removal counts into concrete genome ids,
    /// weakest first within each species, never the species' best
    /// member.
    fn resolve_cull(&self, requests: &[(u64, usize)]) -> Vec<u64> {
        let mut cull = Vec::new();
        for (species_id, want) in requests {
            if *want == 0 {
                continue;
            }
            let species = self.species.iter().find(|s| s.id == *species_id).unwrap();
            let mut members = self.members_of(species);
            // weakest first; equal fitness resolved by genome id
            members.sort_by(|a, b| match a.fitness.total_cmp(&b.fitness) {
                std::cmp::Ordering::Equal => a.id.cmp(&b.id),
                other => other,
            });
            let best_id = members
                .iter()
                .max_by(|a, b| match a.fitness.total_cmp(&b.fitness) {
                    std::cmp::Ordering::Equal => b.id.cmp(&a.id),
                    other => other,
                })
                .map(|g| g.id);
            cull.extend(
                members
                    .iter()
                    .filter(|g| Some(g.id) != best_id)
                    .take(*want)
                    .map(|g| g.id),
            );
        }
        cull
    }

    /// Weakest members to cull per species. A species' cull fraction
    /// scales linearly from 0 (for the species holding the maximum
    /// fitness share) to one half (for a zero-share species); the best
    /// member of a species is never culled and the total never exceeds
    /// half the population.
    pub fn cull_weak(&self, shares: &[f64]) -> Vec<u64> {
        let mut requests = self.gradient_requests(shares);
        trim_cull_requests(&mut requests, self.size() / 2);
        self.resolve_cull(&requests)
    }

    /// Share-gradient cull extended to a guaranteed turnover: when the
    /// gradient alone removes fewer than `size - target_survivors`
    /// members, the shortfall is spread over the species (most
    /// remaining capacity first), each capped at one below its size so
    /// the best member always survives. Members always die
    /// weakest-first within their own species, so individuals compete
    /// mainly inside their species and cross-species stepping stones
    /// survive.
    pub fn turnover_cull(&self, shares: &[f64], target_survivors: usize) -> Vec<u64> {
        let mut requests = self.gradient_requests(shares);
        let wanted = self.size().saturating_sub(target_survivors);
        let mut assigned: usize = requests.iter().map(|(_, n)| n).sum();
        if wanted > assigned {
            let caps: Vec<usize> = self
                .species
                .iter()
                .map(|s| s.members.len().saturating_sub(1))
                .collect();
            let mut shortfall = wanted - assigned;
            while shortfall > 0 {
                // give one removal to the species with the most
                // remaining capacity (ties to the lowest id)
                let candidate = requests
                    .iter()
                    .enumerate()
                    .filter(|(i, (_, n))| *n < caps[*i])
                    .max_by(|(i, (ida, na)), (j, (idb, nb))| {
                        (caps[*i] - na).cmp(&(caps[*j] - nb)).then(idb.cmp(ida))
                    })
                    .map(|(i, _)| i);
                match candidate {
                    Some(i) => {
                        requests[i].1 += 1;
                        shortfall -= 1;
                    }
                    None => break, // every species is at its half-size cap
                }
            }
            assigned = requests.iter().map(|(_, n)| n).sum();
        }
        let _ = assigned;
        trim_cull_requests(&mut requests, self.size() / 2);
        self.resolve_cull(&requests)
    }

    /// Additional weakest individuals to remove so the population can
    /// shrink to `target`, never touching the population's best
    /// individual or the best member of any multi-member species, and
    /// never exceeding `cull_budget` removals in total. Returns the
    /// ids and whether the target was unreachable. Single-member
    /// species are not exempt here: making every singleton immortal
    /// would freeze turnover whenever the population fragments.
    pub fn extra_shrink(&self, target: usize, cull_budget: usize) -> (Vec<u64>, bool) {
        let excess = self.size().saturating_sub(target);
        if excess == 0 {
            return (Vec::new(), false);
        }
        let mut protected: BTreeSet<u64> = BTreeSet::new();
        if let Some(best) = self.best_individual() {
            protected.insert(best.id);
        }
        for s in &self.species {
            if s.members.len() < 2 {
                continue;
            }
            if let Some(best) = self
                .members_of(s)
                .into_iter()
                .max_by(|a, b| match a.fitness.total_cmp(&b.fitness) {
                    std::cmp::Ordering::Equal => b.id.cmp(&a.id),
                    other => other,
                })
            {
                protected.insert(best.id);
            }
        }
        let mut candidates: Vec<&Genome> = self
            .individuals
            .iter()
            .filter(|g| !protected.contains(&g.id))
            .collect();
        candidates.sort_by(|a, b| match a.fitness.total_cmp(&b.fitness) {
            std::cmp::Ordering::Equal => a.id.cmp(&b.id),
            other => other,
        });
        let take = excess.min(cull_budget).min(candidates.len());
        let ids: Vec<u64> = candidates[..take].iter().map(|g| g.id).collect();
        let unreachable = take < excess;
        (ids, unreachable)
    }

    /// Offspring allocation by largest-remainder apportionment of the
    /// open slots: each surviving species receives its fitness share of
    /// `(1 - o_init)` of the slots, the rest is replenished with
    /// newly initialized genomes.
    pub fn allocate_offspring(&self, p_new: usize, shares: &[f64], o_init: f64) -> ReproductionPlan {
        let survivors = self.size();
        let shrink_event = survivors > p_new;
        let slots = p_new.saturating_sub(survivors);
        // quota per species plus one trailing quota for fresh genomes
        let mut quotas: Vec<(u64, f64)> = self
            .species
            .iter()
            .zip(shares)
            .map(|(s, share)| (s.id, share * (1.0 - o_init) * slots as f64))
            .collect();
        quotas.push((u64::MAX, o_init * slots as f64));
        let counts = apportion(&quotas, slots);
        let fresh_count = counts.last().copied().unwrap_or(0);
        let offspring = self
            .species
            .iter()
            .zip(&counts)
            .map(|(s, c)| (s.id, *c))
            .collect();
        ReproductionPlan {
            offspring,
            fresh_count,
            cull: Vec::new(),
            p_new,
            shrink_event,
        }
    }

    /// Close the generation: drop emptied species, age the survivors,
    /// refresh mascots, advance the counter.
    pub fn advance_generation(&mut self) {
        self.species.retain(|s| !s.members.is_empty());
        self.refresh_best_records();
        for s in self.species.iter_mut() {
            s.age += 1;
        }
        self.generation += 1;
    }
}

impl Default for Population {
    fn default() -> Self {
        Self::new()
    }
}

/// New population size from the proportion of deleted species: growth
/// proportional to the deletions (capped at `p_max`), or an ebb shrink
/// (floored at `p_init`) when nothing was deleted.
pub fn next_population_size(
    p_old: usize,
    s_del: f64,
    p_init: usize,
    p_max: usize,
    ebb: f64,
) -> usize {
    if s_del > 0.0 {
        let grown = (p_old as f64 * (1.0 + s_del)).round() as usize;
        grown.min(p_max)
    } else {
        let shrunk = (p_old as f64 - p_init as f64 * ebb).round().max(0.0) as usize;
        shrunk.max(p_init)
    }
}

/// Integerize real-valued quotas so they sum exactly to `total`:
/// floors first, then one unit to each of the largest remainders (ties
/// to the lowest key).
pub(crate) fn apportion(quotas: &[(u64, f64)], total: usize) -> Vec<usize> {
    let mut counts: Vec<usize> = quotas.iter().map(|(_, q)| q.floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut leftover = total.saturating_sub(assigned);
    let mut order: Vec<usize> = (0..quotas.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = quotas[a].1 - quotas[a].1.floor();
        let rb = quotas[b].1 - quotas[b].1.floor();
        rb.total_cmp(&ra).then(quotas[a].0.cmp(&quotas[b].0))
    });
    let mut cursor = 0;
    while leftover > 0 {
        counts[order[cursor % order.len()]] += 1;
        cursor += 1;
        leftover -= 1;
    }
    counts
}

/// Reduce cull requests until their sum respects `cap`, taking one at
/// a time from the currently largest request (ties to the lowest
/// species id).
pub(crate) fn trim_cull_requests(requests: &mut [(u64, usize)], cap: usize) {
    let mut total: usize = requests.iter().map(|(_, n)| n).sum();
    while total > cap {
        let idx = requests
            .iter()
            .enumerate()
            .max_by(|(_, (ida, a)), (_, (idb, b))| a.cmp(b).then(idb.cmp(ida)))
            .map(|(i, _)| i)
            .expect("nonempty requests");
        requests[idx].1 -= 1;
        total -= 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::speciation::Species;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn genome_with(id: u64, fitness: f64) -> Genome {
        let mut rng = ChaCha8Rng::seed_from_u64(id);
        let mut g = Genome::new_minimal(2, 1, &mut rng, (-1.0, 1.0)).unwrap();
        g.id = id;
        g.fitness = fitness;
        g
    }

    /// Population with one species per fitness list.
    fn population(species_fitness: &[&[f64]]) -> Population {
        let mut pop = Population::new();
        let mut id = 0;
        for (i, members) in species_fitness.iter().enumerate() {
            let mut member_ids = Vec::new();
            for f in members.iter() {
                let g = genome_with(id, *f);
                member_ids.push(g.id);
                pop.individuals.push(g);
                id += 1;
            }
            let mascot = pop.genome(member_ids[0]).unwrap().clone();
            let mut species = Species::new((i + 1) as u64, mascot);
            species.members = member_ids;
            pop.species.push(species);
        }
        pop.next_genome_id = id;
        pop.next_species_id = species_fitness.len() as u64 + 1;
        pop
    }

    #[test]
    fn shares_are_proportional_to_mean_fitness() {
        let mut pop = population(&[&[10.0], &[30.0]]);
        let shares = pop.species_fitness_shares().unwrap();
        assert_eq!(shares, vec![0.25, 0.75]);
        assert!((shares.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_species_has_full_share() {
        let mut pop = population(&[&[5.0, 3.0]]);
        assert_eq!(pop.species_fitness_shares().unwrap(), vec![1.0]);
    }

    #[test]
    fn all_zero_fitness_gives_uniform_shares() {
        let mut pop = population(&[&[0.0], &[0.0], &[0.0, 0.0]]);
        let shares = pop.species_fitness_shares().unwrap();
        for s in shares {
            assert!((s - 1.0 / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn empty_population_is_an_invalid_state() {
        let mut pop = Population::new();
        assert!(pop.species_fitness_shares().is_err());
    }

    #[test]
    fn weak_old_species_is_marked() {
        let mut pop = population(&[&[85.0], &[15.0]]);
        pop.species[0].age = 10;
        pop.species[1].age = 8;
        let shares = pop.species_fitness_shares().unwrap();
        // species 2: share 0.15 < 0.2 and age 8 > 0.5 * 10
        let marked = pop.select_species_for_deletion(&shares, 0.4, 0.5, 15);
        assert_eq!(marked, vec![2]);
    }

    #[test]
    fn best_species_is_never_marked() {
        let mut pop = population(&[&[1.0]]);
        pop.species[0].staleness = 100;
        pop.species[0].age = 50;
        let shares = pop.species_fitness_shares().unwrap();
        assert!(pop.select_species_for_deletion(&shares, 0.4, 0.5, 15).is_empty());
    }

    #[test]
    fn stale_species_is_marked_at_the_limit() {
        let mut pop = population(&[&[50.0], &[50.0]]);
        pop.species[1].staleness = 15;
        let shares = pop.species_fitness_shares().unwrap();
        assert_eq!(pop.select_species_for_deletion(&shares, 0.4, 0.5, 15), vec![2]);
    }

    #[test]
    fn population_size_grows_with_deletions() {
        assert_eq!(next_population_size(150, 0.2, 150, 300, 0.05), 180);
        assert_eq!(next_population_size(150, 0.0, 150, 300, 0.05), 150);
        assert_eq!(next_population_size(300, 1.0, 150, 300, 0.05), 300);
        // the ebb path shrinks but never below the initial size
        assert_eq!(next_population_size(300, 0.0, 150, 300, 0.05), 293);
        assert_eq!(next_population_size(152, 0.0, 150, 300, 0.05), 150);
    }

    #[test]
    fn top_share_species_culls_nothing() {
        let mut pop = population(&[&[10.0; 10]]);
        let shares = pop.species_fitness_shares().unwrap();
        assert!(pop.cull_weak(&shares).is_empty());
    }

    #[test]
    fn cull_counts_follow_the_share_gradient() {
        let fit_a = [30.0; 10];
        let fit_b = [10.0; 10];
        let mut pop = population(&[&fit_a, &fit_b]);
        let shares = pop.species_fitness_shares().unwrap();
        assert_eq!(shares, vec![0.75, 0.25]);
        let cull = pop.cull_weak(&shares);
        // first species loses none, second loses three
        assert_eq!(cull.len(), 3);
        assert!(cull.iter().all(|id| *id >= 10));
    }

    #[test]
    fn cull_never_takes_the_species_best() {
        let mut pop = population(&[&[1.0, 2.0, 3.0, 4.0], &[100.0; 4]]);
        let shares = pop.species_fitness_shares().unwrap();
        let cull = pop.cull_weak(&shares);
        let best_id = pop
            .members_of(&pop.species[0])
            .iter()
            .max_by(|a, b| a.fitness.total_cmp(&b.fitness))
            .unwrap()
            .id;
        assert!(!cull.contains(&best_id));
    }

    #[test]
    fn trim_respects_the_global_cap() {
        let mut requests = vec![(1u64, 40usize), (2, 35), (3, 30)];
        trim_cull_requests(&mut requests, 50);
        let total: usize = requests.iter().map(|(_, n)| n).sum();
        assert_eq!(total, 50);
        // reductions hit the largest requests first
        assert!(requests[0].1 <= 40 && requests.iter().all(|(_, n)| *n > 0));
    }

    #[test]
    fn allocation_splits_slots_between_offspring_and_fresh() {
        let members = [1.0; 100];
        let mut pop = population(&[&members]);
        let shares = pop.species_fitness_shares().unwrap();
        let plan = pop.allocate_offspring(150, &shares, 0.1);
        assert_eq!(plan.offspring, vec![(1, 45)]);
        assert_eq!(plan.fresh_count, 5);
        assert_eq!(pop.size() + plan.total_offspring(), 150);
    }

    #[test]
    fn zero_fresh_proportion_allocates_everything_to_species() {
        let mut pop = population(&[&[2.0; 10], &[1.0; 10]]);
        let shares = pop.species_fitness_shares().unwrap();
        let plan = pop.allocate_offspring(35, &shares, 0.0);
        assert_eq!(plan.fresh_count, 0);
        assert_eq!(plan.total_offspring(), 15);
    }

    #[test]
    fn largest_remainder_example() {
        let mut pop = population(&[&[1.0; 3], &[1.0; 3]]);
        pop.individuals.truncate(6);
        let shares = vec![0.5, 0.5];
        let plan = pop.allocate_offspring(15, &shares, 0.1);
        // slots = 9: quotas 4.05 / 4.05 / fresh 0.9
        assert_eq!(plan.offspring, vec![(1, 4), (2, 4)]);
        assert_eq!(plan.fresh_count, 1);
    }

    #[test]
    fn shrink_event_clamps_slots() {
        let mut pop = population(&[&[1.0; 20]]);
        let shares = pop.species_fitness_shares().unwrap();
        let plan = pop.allocate_offspring(10, &shares, 0.1);
        assert!(plan.shrink_event);
        assert_eq!(plan.total_offspring(), 0);
    }

    #[test]
    fn staleness_resets_on_improvement() {
        let mut pop = population(&[&[5.0]]);
        pop.species[0].best_fitness_ever = 4.0;
        pop.species[0].staleness = 7;
        pop.tick_staleness();
        assert_eq!(pop.species[0].staleness, 0);
        assert_eq!(pop.species[0].best_fitness_ever, 5.0);
        pop.tick_staleness();
        assert_eq!(pop.species[0].staleness, 1);
    }

    #[test]
    fn advance_ages_survivors_and_prunes_empty_species() {
        let mut pop = population(&[&[1.0], &[2.0]]);
        pop.species[0].members.clear();
        pop.advance_generation();
        assert_eq!(pop.species.len(), 1);
        assert_eq!(pop.species[0].age, 2);
        assert_eq!(pop.generation, 1);
        assert_eq!(pop.oldest_species_age(), 2);
    }

    #[test]
    fn global_best_is_monotone() {
        let mut pop = population(&[&[3.0]]);
        pop.refresh_best_records();
        assert_eq!(pop.global_best.as_ref().unwrap().fitness(), 3.0);
        pop.individuals[0].fitness = 1.0;
        pop.refresh_best_records();
        assert_eq!(pop.global_best.as_ref().unwrap().fitness(), 3.0);
        pop.individuals[0].fitness = 9.0;
        pop.refresh_best_records();
        assert_eq!(pop.global_best.as_ref().unwrap().fitness(), 9.0);
    }

    #[test]
    fn extra_shrink_protects_species_bests() {
        let mut pop = population(&[&[1.0, 2.0, 3.0], &[4.0, 5.0]]);
        let (ids, unreachable) = pop.extra_shrink(2, 100);
        assert!(!unreachable);
        assert_eq!(ids.len(), 3);
        pop.remove_individuals(&ids);
        assert_eq!(pop.size(), 2);
        // the two species bests survive
        let survivors: Vec<f64> = pop.individuals.iter().map(|g| g.fitness).collect();
        assert!(survivors.contains(&3.0) && survivors.contains(&5.0));
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            /// Eq-5 behaviour: monotone in the deletion share, bounded
            /// by [p_init, p_max] whenever p_old is.
            #[test]
            fn size_update_is_monotone_and_bounded(
                p_old in 150usize..=300,
                s1 in 0.0f64..1.0,
                s2 in 0.0f64..1.0,
            ) {
                let (lo, hi) = if s1 <= s2 { (s1, s2) } else { (s2, s1) };
                let a = next_population_size(p_old, lo, 150, 300, 0.05);
                let b = next_population_size(p_old, hi, 150, 300, 0.05);
                prop_assert!(a <= b || lo == 0.0);
                for s in [lo, hi] {
                    let p = next_population_size(p_old, s, 150, 300, 0.05);
                    prop_assert!((150..=300).contains(&p));
                }
            }

            /// Conservation: survivors + offspring + fresh = p_new for
            /// arbitrary share splits.
            #[test]
            fn allocation_conserves_total(
                size_a in 1usize..100,
                size_b in 1usize..100,
                extra in 0usize..150,
                weight in 0.05f64..0.95,
                o_init in 0.0f64..0.5,
            ) {
                let fit_a: Vec<f64> = vec![weight; size_a];
                let fit_b: Vec<f64> = vec![1.0 - weight; size_b];
                let mut pop = population(&[&fit_a, &fit_b]);
                let p_new = pop.size() + extra;
                let shares = pop.species_fitness_shares().unwrap();
                let plan = pop.allocate_offspring(p_new, &shares, o_init);
                prop_assert_eq!(pop.size() + plan.total_offspring(), p_new);
            }
        }
    }
}
