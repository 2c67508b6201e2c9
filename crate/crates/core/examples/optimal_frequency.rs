//! The CPU frequency that minimizes the average rate when nothing is cached,
//! next to a coarse scan of the rate curve above the crossover frequency.

use vr3c::homogeneous::{optimal_frequency, tradeoff_rate, HomogeneousInstance};
use vr3c::model::{crossover_frequency, DeviceCapability, ProjectionTask};

fn main() -> vr3c::Result<()> {
    let task = ProjectionTask::new(25e6, 50e6, 10.0, 0.02)?;
    let big_f = crossover_frequency(&task)?;
    let unit = 1e-27 * big_f * big_f * task.cycles();
    let dev = DeviceCapability::new(0.0, 0.3 * unit, big_f, 1e-27)?;
    let inst = HomogeneousInstance::new(task, 60_000, 0, dev)?;

    let fstar = optimal_frequency(&task)?;
    println!("crossover F = {big_f:.4e} Hz");
    println!("optimum  f* = {fstar:.4e} Hz ({:.4} F)", fstar / big_f);
    println!("rate at f*  = {:.6e} bit/s", tradeoff_rate(&inst.with_cpu_freq(fstar))?);
    for k in 0..=12 {
        let f = big_f * (1.0 + 0.25 * k as f64);
        println!("  {:.2} F  {:.6e}", f / big_f, tradeoff_rate(&inst.with_cpu_freq(f))?);
    }
    Ok(())
}
