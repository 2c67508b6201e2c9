//! Multi-start CCCP on small random instances against the exact optimum of
//! the knapsack formulation.
//!
//! ```text
//! cargo run --release --example oracle_gap -- [instances]
//! ```

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vr3c::heterogeneous::{brute_force_mmkp, multi_start_with_baselines, CccpConfig};
use vr3c::instance::{generate, GeneratorConfig};
use vr3c::lp::DenseSimplex;

fn main() -> vr3c::Result<()> {
    let count: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(10);
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    println!("seed,cache_fraction,energy_fraction,optimum,cccp,gap_percent");
    for seed in 0..count {
        let gen = GeneratorConfig {
            n: 10,
            cache_fraction: rng.gen_range(0.1..0.5),
            energy_fraction: rng.gen_range(0.1..0.6),
            ..GeneratorConfig::default()
        };
        let inst = generate(&gen, 1000 + seed)?;
        let cfg = CccpConfig {
            seed,
            ..CccpConfig::default()
        };
        let (mmkp, report) = multi_start_with_baselines(&inst.viewpoints, &inst.device, &cfg, &DenseSimplex::default());
        let (_, opt) = brute_force_mmkp(&mmkp)?;
        println!(
            "{seed},{:.3},{:.3},{opt:.6e},{:.6e},{:.3}",
            gen.cache_fraction,
            gen.energy_fraction,
            report.rate,
            100.0 * (report.rate - opt) / opt
        );
    }
    Ok(())
}
