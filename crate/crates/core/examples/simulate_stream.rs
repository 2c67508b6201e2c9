//! Replays a Zipf request stream against the homogeneous optimum and the
//! all-MEC policy.
//!
//! ```text
//! cargo run --release --example simulate_stream -- [requests] [seed]
//! ```

use vr3c::homogeneous::{closed_form, expand_counts, HomogeneousInstance};
use vr3c::model::{crossover_frequency, DeviceCapability, JointPolicy, ProjectionTask};
use vr3c::sim::{generate_stream, simulate};

fn main() -> vr3c::Result<()> {
    let mut args = std::env::args().skip(1);
    let requests: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(1_000_000);
    let seed: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(2019);

    let task = ProjectionTask::new(25e6, 50e6, 10.0, 0.02)?;
    let f = 0.7 * crossover_frequency(&task)?;
    let unit = 1e-27 * f * f * task.cycles();
    let dev = DeviceCapability::new(0.0, 0.3 * unit, f, 1e-27)?;
    let inst = HomogeneousInstance::new(task, 60_000, 18_000, dev)?;
    let sol = closed_form(&inst)?;
    let vps = inst.viewpoints();
    let pops: Vec<f64> = vps.iter().map(|v| v.popularity).collect();
    let stream = generate_stream(&pops, requests, seed)?;

    for (name, policy) in [
        ("optimal", expand_counts(sol.counts, inst.n)?),
        ("all-MEC", JointPolicy::all_mec(vps.len())),
    ] {
        let r = simulate(&policy, &vps, &inst.dev, &stream)?;
        println!("{name}");
        println!(
            "  rate   {:.6e} bit/s (expected {:.6e}, SE {:.1e})",
            r.empirical_avg_rate, r.expected_rate, r.rate_std_error
        );
        println!("  energy {:.4} J/request (budget {:.4})", r.mean_energy, inst.dev.energy_budget);
        println!("  deadline violations {}, max latency {:.4e} s", r.deadline_violations, r.max_latency);
        print!("{}", r.route_histogram_csv());
    }
    Ok(())
}
