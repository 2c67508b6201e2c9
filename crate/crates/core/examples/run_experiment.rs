//! Drives a config-file experiment the same way the `vr3c run` binary does
//! and lists the files it would write.
//!
//! ```text
//! cargo run --release --example run_experiment -- <config.json> [mode]
//! ```

use std::path::PathBuf;

use vr3c::experiment::{run, ExperimentConfig, Mode};

fn main() -> vr3c::Result<()> {
    let mut args = std::env::args().skip(1);
    let Some(path) = args.next().map(PathBuf::from) else {
        eprintln!("usage: run_experiment <config.json> [mode]");
        std::process::exit(2);
    };
    let mut cfg = ExperimentConfig::load(&path)?;
    if let Some(mode) = args.next() {
        cfg.mode = Some(mode.parse::<Mode>().map_err(|message| vr3c::Error::Config {
            path: path.clone(),
            message,
        })?);
    }
    let output = run(&cfg)?;
    for (name, body) in &output.files {
        println!("== {name} ({} bytes)", body.len());
        for line in body.lines().take(8) {
            println!("{line}");
        }
    }
    if let Some(dir) = &cfg.out {
        output.write_to(dir)?;
    }
    Ok(())
}
