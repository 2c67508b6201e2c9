use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use vr3c::experiment::{self, ExperimentConfig, Mode};
use vr3c::instance::{generate, GeneratorConfig, SizeDistribution};
use vr3c::Error;

#[derive(Parser)]
#[command(name = "vr3c", version, about = "Joint caching and computing policies for edge-assisted mobile VR")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write result.json plus mode-specific CSVs.
    Run {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Instance file; overrides the config.
        #[arg(long)]
        instance: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        mode: Option<Mode>,
        #[arg(long)]
        restarts: Option<usize>,
        #[arg(long)]
        mu: Option<f64>,
        /// Write the final simplex tableau of every CCCP subproblem.
        #[arg(long)]
        dump_lp: bool,
    },
    /// Generate a random heterogeneous instance file.
    Generate {
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Generator parameters as JSON; flags below override it.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        cache_fraction: Option<f64>,
        #[arg(long)]
        energy_fraction: Option<f64>,
        #[arg(long, value_parser = ["uniform", "log-uniform"])]
        distribution: Option<String>,
    },
}

fn fail(err: &Error, out: Option<&PathBuf>) -> ExitCode {
    let record = experiment::error_record(err);
    eprint!("{record}");
    if let Some(dir) = out {
        if std::fs::create_dir_all(dir).is_ok() {
            let _ = std::fs::write(dir.join("error.json"), &record);
        }
    }
    ExitCode::from(experiment::exit_code(err) as u8)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match Cli::parse().command {
        Command::Run {
            config,
            instance,
            seed,
            out,
            mode,
            restarts,
            mu,
            dump_lp,
        } => {
            let mut cfg = match config.as_deref().map(ExperimentConfig::load).transpose() {
                Ok(c) => c.unwrap_or_default(),
                Err(e) => return fail(&e, out.as_ref()),
            };
            cfg.instance = instance.or(cfg.instance);
            cfg.seed = seed.unwrap_or(cfg.seed);
            cfg.out = out.or(cfg.out);
            cfg.mode = mode.or(cfg.mode);
            cfg.cccp.restarts = restarts.or(cfg.cccp.restarts);
            cfg.cccp.mu = mu.or(cfg.cccp.mu);
            cfg.dump_lp |= dump_lp;
            let dir = cfg.out.clone().unwrap_or_else(|| PathBuf::from("."));
            match experiment::run(&cfg).and_then(|o| o.write_to(&dir)) {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => fail(&e, Some(&dir)),
            }
        }
        Command::Generate {
            seed,
            out,
            config,
            n,
            cache_fraction,
            energy_fraction,
            distribution,
        } => {
            let mut gen = match config {
                Some(path) => match std::fs::read_to_string(&path)
                    .map_err(|e| e.to_string())
                    .and_then(|t| serde_json::from_str::<GeneratorConfig>(&t).map_err(|e| e.to_string()))
                {
                    Ok(g) => g,
                    Err(message) => return fail(&Error::Config { path, message }, None),
                },
                None => GeneratorConfig::default(),
            };
            gen.n = n.unwrap_or(gen.n);
            gen.cache_fraction = cache_fraction.unwrap_or(gen.cache_fraction);
            gen.energy_fraction = energy_fraction.unwrap_or(gen.energy_fraction);
            if let Some(d) = distribution {
                gen.distribution = if d == "uniform" {
                    SizeDistribution::Uniform
                } else {
                    SizeDistribution::LogUniform
                };
            }
            match generate(&gen, seed).and_then(|inst| inst.save(&out)) {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => fail(&e, None),
            }
        }
    }
}
