//! Generates a random heterogeneous instance, writes it as JSON and reads
//! it back.
//!
//! ```text
//! cargo run --example generate_instance -- [seed] [path]
//! ```

use std::path::PathBuf;

use vr3c::instance::{generate, GeneratorConfig, Instance, SizeDistribution};

fn main() -> vr3c::Result<()> {
    let mut args = std::env::args().skip(1);
    let seed: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(7);
    let path = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("vr3c-instance.json"));

    let cfg = GeneratorConfig {
        n: 20,
        distribution: SizeDistribution::LogUniform,
        ..GeneratorConfig::default()
    };
    let inst = generate(&cfg, seed)?;
    inst.save(&path)?;
    let back = Instance::load(&path)?;
    assert_eq!(back, inst);

    let total: f64 = inst.viewpoints.iter().map(|v| v.task.d_in()).sum();
    println!("wrote {} viewpoints to {}", inst.viewpoints.len(), path.display());
    println!("total 2D size   {total:.4e} bit");
    println!("cache budget    {:.4e} bit", inst.device.cache_bits);
    println!("energy budget   {:.4e} J", inst.device.energy_budget);
    println!("most popular    P = {:.4}", inst.viewpoints[0].popularity);
    Ok(())
}
