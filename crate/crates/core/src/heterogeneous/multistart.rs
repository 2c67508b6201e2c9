use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    build_mmkp, cccp_solve, greedy_3d_caching, greedy_caching_computing, improve_greedily, initial_feasible_point,
    round_and_repair,
};
use super::{CccpConfig, CccpTrace, MmkpInstance};
use crate::lp::LpBackend;
use crate::model::{DeviceCapability, JointPolicy, Viewpoint};

pub const SCHEMA_VERSION: &str = "v1";

/// Outcome of one CCCP restart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestartRecord {
    pub index: usize,
    pub final_objective: Option<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Average rate of the rounded and repaired policy.
    pub rate: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip)]
    pub trace: Option<CccpTrace>,
    #[serde(skip)]
    pub policy: Option<JointPolicy>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaselineRates {
    pub all_mec: f64,
    pub greedy_3d_caching: f64,
    pub greedy_caching_computing: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub schema: String,
    pub policy: JointPolicy,
    pub rate: f64,
    /// Index of the restart that produced `policy`, or `None` when every
    /// restart was beaten by serving all requests from the MEC server.
    pub best_restart: Option<usize>,
    pub mec_fallback: bool,
    pub restarts: Vec<RestartRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub baselines: Option<BaselineRates>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle_rate: Option<f64>,
}

impl SolveReport {
    /// Every successful restart's trace, in restart order.
    pub fn traces(&self) -> impl Iterator<Item = &CccpTrace> {
        self.restarts.iter().filter_map(|r| r.trace.as_ref())
    }
}

/// Thread count from `VR3C_THREADS`; zero or unset lets the pool decide.
fn thread_count() -> usize {
    std::env::var("VR3C_THREADS")
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(0)
}

fn restart(inst: &MmkpInstance, cfg: &CccpConfig, backend: &dyn LpBackend, index: usize) -> RestartRecord {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(index as u64);
    let x0 = initial_feasible_point(inst, &mut rng);
    match cccp_solve(inst, &x0, cfg, backend) {
        Ok((x, trace)) => {
            let mut routes = round_and_repair(&x, inst).routes().expect("repaired policies are structurally valid");
            improve_greedily(&mut routes, inst);
            let policy = JointPolicy::from_routes(&routes);
            let rate = Some(inst.rate(&routes));
            RestartRecord {
                index,
                final_objective: Some(trace.final_objective()),
                iterations: trace.iterations,
                converged: trace.converged,
                rate,
                error: None,
                trace: Some(trace),
                policy: Some(policy),
            }
        }
        Err(e) => {
            log::warn!("restart {index} failed: {e}");
            RestartRecord {
                index,
                final_objective: None,
                iterations: 0,
                converged: false,
                rate: None,
                error: Some(e.to_string()),
                trace: None,
                policy: None,
            }
        }
    }
}

/// Runs `cfg.restarts` CCCP runs from seeded random feasible points and
/// keeps the rounded policy of lowest average rate (earliest restart on
/// ties). Falls back to all-MEC when no restart beats it.
pub fn multi_start(inst: &MmkpInstance, cfg: &CccpConfig, backend: &dyn LpBackend) -> SolveReport {
    let run = || -> Vec<RestartRecord> {
        (0..cfg.restarts)
            .into_par_iter()
            .map(|k| restart(inst, cfg, backend, k))
            .collect()
    };
    let restarts = match rayon::ThreadPoolBuilder::new().num_threads(thread_count()).build() {
        Ok(pool) => pool.install(run),
        Err(e) => {
            log::warn!("falling back to the global thread pool: {e}");
            run()
        }
    };

    let best = restarts
        .iter()
        .filter_map(|r| Some((r.rate?, r.index, r.policy.as_ref()?)))
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let (policy, rate, best_restart) = match best {
        Some((rate, index, policy)) if rate <= inst.mec_rate => (policy.clone(), rate, Some(index)),
        _ => (JointPolicy::all_mec(inst.n()), inst.mec_rate, None),
    };
    SolveReport {
        schema: SCHEMA_VERSION.to_string(),
        policy,
        rate,
        mec_fallback: best_restart.is_none(),
        best_restart,
        restarts,
        baselines: None,
        oracle_rate: None,
    }
}

/// Builds the knapsack form, runs [`multi_start`], and attaches the rates of
/// the all-MEC policy and both greedy baselines.
pub fn multi_start_with_baselines(
    viewpoints: &[Viewpoint],
    dev: &DeviceCapability,
    cfg: &CccpConfig,
    backend: &dyn LpBackend,
) -> (MmkpInstance, SolveReport) {
    let inst = build_mmkp(viewpoints, dev);
    let mut report = multi_start(&inst, cfg, backend);
    report.baselines = Some(baseline_rates(&inst, viewpoints, dev));
    (inst, report)
}

pub fn baseline_rates(inst: &MmkpInstance, viewpoints: &[Viewpoint], dev: &DeviceCapability) -> BaselineRates {
    let rate = |p: JointPolicy| inst.rate(&p.routes().expect("greedy policies are structurally valid"));
    BaselineRates {
        all_mec: inst.mec_rate,
        greedy_3d_caching: rate(greedy_3d_caching(viewpoints, dev)),
        greedy_caching_computing: rate(greedy_caching_computing(viewpoints, dev)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::DenseSimplex;
    use crate::model::{self, zipf_popularities, ProjectionTask};

    fn instance(n: usize, cache_frac: f64, energy_frac: f64) -> (Vec<Viewpoint>, DeviceCapability) {
        let pops = zipf_popularities(0.8, n);
        let vps: Vec<Viewpoint> = pops
            .iter()
            .enumerate()
            .map(|(i, &p)| Viewpoint {
                task: ProjectionTask::new((1 + (i * 7) % 25) as f64 * 1e6, 2.0 * (1 + (i * 7) % 25) as f64 * 1e6, 10.0, 0.02)
                    .unwrap(),
                popularity: p,
            })
            .collect();
        let total_d: f64 = vps.iter().map(|v| v.task.d_in()).sum();
        let weighted: f64 = vps.iter().map(|v| v.popularity * v.task.d_in()).sum();
        let dev = DeviceCapability::new(cache_frac * total_d, energy_frac * 1e-27 * 10.0 * 2.5e21 * weighted, 5e10, 1e-27).unwrap();
        (vps, dev)
    }

    #[test]
    fn seeded_run_is_reproducible() {
        let (vps, dev) = instance(8, 0.3, 0.25);
        let cfg = CccpConfig {
            restarts: 1,
            seed: 99,
            ..CccpConfig::default()
        };
        let (_, a) = multi_start_with_baselines(&vps, &dev, &cfg, &DenseSimplex::default());
        let (_, b) = multi_start_with_baselines(&vps, &dev, &cfg, &DenseSimplex::default());
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }

    #[test]
    fn never_worse_than_all_mec() {
        let (vps, dev) = instance(10, 0.2, 0.25);
        let cfg = CccpConfig {
            restarts: 8,
            seed: 5,
            ..CccpConfig::default()
        };
        let (inst, report) = multi_start_with_baselines(&vps, &dev, &cfg, &DenseSimplex::default());
        assert!(report.rate <= inst.mec_rate);
        assert_eq!(report.restarts.len(), 8);
        assert!(model::validate_policy(&report.policy, &vps, &dev).is_empty());
        let direct = model::average_rate(&report.policy, &vps, &dev).unwrap();
        assert!((direct - report.rate).abs() <= 1e-9 * inst.mec_rate);
        for t in report.traces() {
            assert!(t.is_non_increasing(1e-9));
        }
        let baselines = report.baselines.unwrap();
        assert_eq!(baselines.all_mec, inst.mec_rate);
    }

    #[test]
    fn zero_restarts_fall_back_to_mec() {
        let (vps, dev) = instance(4, 0.2, 0.25);
        let inst = build_mmkp(&vps, &dev);
        let cfg = CccpConfig {
            restarts: 0,
            ..CccpConfig::default()
        };
        let report = multi_start(&inst, &cfg, &DenseSimplex::default());
        assert!(report.mec_fallback);
        assert_eq!(report.policy, JointPolicy::all_mec(4));
        assert_eq!(report.rate, inst.mec_rate);
    }
}
