use rayon::prelude::*;
fn main() {
    let args: Vec<String> = std::env::args().collect();
    let env = args.get(1).cloned().unwrap_or("xor".into());
    let n: u64 = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(10);
    let max_gen: u64 = args.get(3).and_then(|s| s.parse().ok()).unwrap_or(300);
    let toggles = args.get(4).cloned().unwrap_or("111".into()); // sss dap fbgo
    let recurrent = args.get(5).map(|s| s == "rec").unwrap_or(false);
    let mut results: Vec<(u64, bool, u64, usize, usize, f64)> = (0..n)
        .into_par_iter()
        .map(|seed| {
            let mut config = alf::config::EvolutionConfig::default();
            config.environment = env.clone();
            config.seed = seed;
            config.max_generations = max_gen;
            config.timeout_s = 3000;
            config.sss = toggles.as_bytes()[0] == b'1';
            config.dap = toggles.as_bytes()[1] == b'1';
            config.fbgo = toggles.as_bytes()[2] == b'1';
            config.allow_recurrent = recurrent;
            let mut engine = alf::engine::Engine::new(config).unwrap();
            let report = engine.run().unwrap();
            (seed, report.solved, report.generations, report.champion_connections, report.champion_hidden_nodes, report.wall_time_s)
        })
        .collect();
    results.sort_by_key(|r| r.0);
    let mut gens: Vec<u64> = Vec::new();
    let mut solved_count = 0;
    let mut size_sum = 0.0;
    for (seed, solved, g, e, h, t) in &results {
        println!("seed {seed}: solved={solved} G={g} E={e} H={h} t={t:.1}s");
        if *solved { solved_count += 1; size_sum += (*e + *h) as f64; }
        gens.push(*g);
    }
    gens.sort();
    println!("== env={env} toggles={toggles} rec={recurrent}: median G {}, solved {}/{}, mean solved size {:.1}",
        gens[gens.len()/2], solved_count, n, size_sum / solved_count.max(1) as f64);
}
