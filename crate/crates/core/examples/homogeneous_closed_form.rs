//! Closed-form optimum for identical viewpoints, checked against an
//! exhaustive search over count policies.
//!
//! ```text
//! cargo run --example homogeneous_closed_form -- [n] [cache_units] [cap_fraction]
//! ```

use vr3c::homogeneous::{brute_force_problem2, closed_form, HomogeneousInstance};
use vr3c::model::{crossover_frequency, DeviceCapability, ProjectionTask};

fn main() -> vr3c::Result<()> {
    let mut args = std::env::args().skip(1);
    let n: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(40);
    let cache_units: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(12);
    let cap_fraction: f64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(0.3);

    let task = ProjectionTask::new(25e6, 50e6, 10.0, 0.02)?;
    let big_f = crossover_frequency(&task)?;
    for scale in [0.7, 1.2] {
        let f = scale * big_f;
        let unit = 1e-27 * f * f * task.cycles();
        let dev = DeviceCapability::new(0.0, cap_fraction * unit, f, 1e-27)?;
        let inst = HomogeneousInstance::new(task, n, cache_units, dev)?;
        let sol = closed_form(&inst)?;
        let (counts, oracle) = brute_force_problem2(&inst)?;
        println!("f_V = {scale} F ({})", sol.regime.as_str());
        println!(
            "  closed form: 3D {} 2D {} compute {} -> {:.6e} bit/s",
            sol.counts.n_cache3d, sol.counts.n_cache2d, sol.counts.n_compute, sol.rate
        );
        println!(
            "  exhaustive:  3D {} 2D {} compute {} -> {:.6e} bit/s",
            counts.n_cache3d, counts.n_cache2d, counts.n_compute, oracle
        );
    }
    Ok(())
}
