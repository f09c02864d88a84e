use rayon::prelude::*;
fn main() {
    let n: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(10);
    let mut results: Vec<(u64, bool, u64, f64, usize, usize, f64, usize)> = (0..n)
        .into_par_iter()
        .map(|seed| {
            let mut config = alf::config::EvolutionConfig::default();
            config.seed = seed;
            config.max_generations = 300;
            let mut engine = alf::engine::Engine::new(config).unwrap();
            let report = engine.run().unwrap();
            (
                seed,
                report.solved,
                report.generations,
                report.best_fitness,
                report.champion_connections,
                report.champion_hidden_nodes,
                report.wall_time_s,
                report.stats.last().unwrap().species_count,
            )
        })
        .collect();
    results.sort_by_key(|r| r.0);
    let mut gens: Vec<u64> = Vec::new();
    let mut solved_count = 0;
    for (seed, solved, g, best, e, h, t, sp) in &results {
        println!("seed {seed}: solved={solved} G={g} best={best:.4} E={e} H={h} t={t:.2}s species_end={sp}");
        if *solved { solved_count += 1; }
        gens.push(*g);
    }
    gens.sort();
    println!("median G = {}, solved {}/{}", gens[gens.len() / 2], solved_count, n);
}
