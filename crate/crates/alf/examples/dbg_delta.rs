use alf::speciation::{self, SemanticSampleBuffer, SemanticSimilarity};

fn main() {
    let seed: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(8);
    let gens: u64 = std::env::args().nth(2).and_then(|s| s.parse().ok()).unwrap_or(40);
    let mut config = alf::config::EvolutionConfig::default();
    config.seed = seed;
    let mut engine = alf::engine::Engine::new(config).unwrap();
    engine.run_generations(gens).unwrap();
    let pop = engine.population();
    println!("gen {} pop {} species {}", pop.generation, pop.size(), pop.species.len());
    let sizes: Vec<usize> = pop.species.iter().map(|s| s.members.len()).collect();
    let multi = sizes.iter().filter(|s| **s > 1).count();
    println!("species sizes: multi-member={} max={}", multi, sizes.iter().max().unwrap());
    // mimic the engine's buffer: XOR observations
    let mut buf = SemanticSampleBuffer::new(256, 64).unwrap();
    let cases = [[-1.0, -1.0], [-1.0, 1.0], [1.0, -1.0], [1.0, 1.0]];
    for i in 0..64 { buf.push(cases[i % 4].to_vec()); }
    // distribution of delta between members and mascots
    let mut below = 0; let mut total = 0;
    let mut b_zero = 0; let mut b_unav = 0;
    let mut t_sum = 0.0; let mut b_sum = 0.0;
    for g in pop.individuals.iter().take(60) {
        for s in pop.species.iter().take(60) {
            let t = speciation::structural_similarity(g, &s.mascot);
            let b = speciation::semantic_similarity(g, &s.mascot, &buf);
            let bval = match b { SemanticSimilarity::Measured(v) => v, _ => { b_unav += 1; 0.0 } };
            if bval == 0.0 { b_zero += 1; }
            let delta = speciation::blend(t, b, 0.25, 0.75).unwrap();
            t_sum += t; b_sum += bval;
            total += 1;
            if delta < 0.3 { below += 1; }
        }
    }
    println!("pairs {total}: delta<0.3 {below}, B==0 {b_zero}, unavailable {b_unav}, mean T {:.3}, mean B {:.3}",
        t_sum / total as f64, b_sum / total as f64);
    let evaluated = pop.individuals.iter().filter(|g| g.evaluated).count();
    let best = pop.best_individual().unwrap();
    println!("evaluated {}/{} best fitness {:.4} E={} H={}", evaluated, pop.size(), best.fitness, best.connection_count(), best.hidden_node_count());
}
