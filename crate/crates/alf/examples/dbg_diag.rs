use rayon::prelude::*;
fn main() {
    // variants: (label, v_max, m_o, sss, dap, fbgo)
    let variants: Vec<(&str, u32, f64, bool, bool, bool)> = vec![
        ("full", 5, 0.1, true, true, true),
        ("full_vmax1", 1, 0.1, true, true, true),
        ("sss_only", 5, 0.1, true, false, false),
        ("dap_only", 5, 0.1, false, true, false),
        ("fbgo_only", 5, 0.1, false, false, true),
        ("none", 5, 0.1, false, false, false),
    ];
    for (label, v_max, m_o, sss, dap, fbgo) in variants {
        let results: Vec<(bool, u64, usize)> = (0..12u64)
            .into_par_iter()
            .map(|seed| {
                let mut config = alf::config::EvolutionConfig::default();
                config.seed = seed;
                config.max_generations = 400;
                config.v_max = v_max;
                config.m_o = m_o;
                config.sss = sss;
                config.dap = dap;
                config.fbgo = fbgo;
                let mut engine = alf::engine::Engine::new(config).unwrap();
                let r = engine.run().unwrap();
                (r.solved, r.generations, r.champion_connections + r.champion_hidden_nodes)
            })
            .collect();
        let mut gens: Vec<u64> = results.iter().map(|r| r.1).collect();
        gens.sort();
        let solved = results.iter().filter(|r| r.0).count();
        let mean_size: f64 = results.iter().filter(|r| r.0).map(|r| r.2 as f64).sum::<f64>()
            / solved.max(1) as f64;
        println!(
            "{label:12} median G {:4} solved {solved:2}/12 mean solved size {mean_size:.0}",
            gens[gens.len() / 2]
        );
    }
}
