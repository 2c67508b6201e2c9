//! Sweeps cache size and energy budget for 60 000 identical viewpoints and
//! prints the closed-form rate grid as CSV.
//!
//! ```text
//! cargo run --release --example homogeneous_sweep > sweep.csv
//! ```

use vr3c::homogeneous::{sweep, sweep_csv, HomogeneousInstance, SweepAxes};
use vr3c::model::{crossover_frequency, DeviceCapability, ProjectionTask};

fn main() -> vr3c::Result<()> {
    let task = ProjectionTask::new(25e6, 50e6, 10.0, 0.02)?;
    let f = 0.7 * crossover_frequency(&task)?;
    let dev = DeviceCapability::new(0.0, 0.0, f, 1e-27)?;
    let template = HomogeneousInstance::new(task, 60_000, 0, dev)?;
    let grid: Vec<f64> = (0..=10).map(|k| k as f64 / 10.0).collect();
    let axes = SweepAxes {
        cache_fraction: grid.clone(),
        energy_fraction: grid,
        cpu_freq: Vec::new(),
    };
    print!("{}", sweep_csv(&sweep(&template, &axes)));
    Ok(())
}
