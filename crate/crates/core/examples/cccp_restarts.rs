//! Multi-start CCCP on a random 100-viewpoint instance, compared with the
//! greedy baselines.
//!
//! ```text
//! cargo run --release --example cccp_restarts -- [seed] [restarts]
//! ```

use std::time::Instant;

use vr3c::heterogeneous::{multi_start_with_baselines, CccpConfig};
use vr3c::instance::{generate, GeneratorConfig};
use vr3c::lp::DenseSimplex;

fn main() -> vr3c::Result<()> {
    let mut args = std::env::args().skip(1);
    let seed: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(1);
    let restarts: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(100);

    let gen = GeneratorConfig {
        cache_fraction: 0.2,
        ..GeneratorConfig::default()
    };
    let inst = generate(&gen, seed)?;
    let cfg = CccpConfig {
        restarts,
        seed,
        ..CccpConfig::default()
    };
    let start = Instant::now();
    let (_, report) = multi_start_with_baselines(&inst.viewpoints, &inst.device, &cfg, &DenseSimplex::default());
    let elapsed = start.elapsed();
    let b = report.baselines.expect("baselines attached");

    let gain = |r: f64| 100.0 * (1.0 - r / b.all_mec);
    println!("restarts          {restarts} in {:.2?}", elapsed);
    println!("all-MEC           {:.4e} bit/s", b.all_mec);
    println!("greedy 3D caching {:.4e} bit/s  gain {:.1}%", b.greedy_3d_caching, gain(b.greedy_3d_caching));
    println!(
        "greedy cache+comp {:.4e} bit/s  gain {:.1}%",
        b.greedy_caching_computing,
        gain(b.greedy_caching_computing)
    );
    println!("multi-start CCCP  {:.4e} bit/s  gain {:.1}%", report.rate, gain(report.rate));
    let iters: usize = report.restarts.iter().map(|r| r.iterations).sum();
    println!("mean CCCP iterations per restart {:.1}", iters as f64 / restarts.max(1) as f64);
    Ok(())
}
