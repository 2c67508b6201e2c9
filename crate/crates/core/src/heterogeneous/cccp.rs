//! Concave-convex procedure on the penalized relaxation
//! `min G(x) - mu Σ x(x - 1)` over the knapsack polytope.
//!
//! Each step linearizes the convex penalty term at the current iterate and
//! solves the resulting linear program; the linearization majorizes the
//! penalized objective, so its value never increases along the iterates.

use serde::{Deserialize, Serialize};

use super::{objective, MmkpInstance, RelaxedAssignment, ROUTES};
use crate::error::{Error, Result};
use crate::error::LpError;
use crate::lp::{LinearProgram, LpBackend, LpStatus};

const INCREASE_RTOL: f64 = 1e-8;

/// Rates enter the penalized objective in Mbit/s, so `mu` and `delta` are
/// read on that scale.
pub const RATE_UNIT: f64 = 1e6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CccpConfig {
    pub mu: f64,
    pub delta: f64,
    pub max_iters: usize,
    pub restarts: usize,
    pub seed: u64,
}

impl Default for CccpConfig {
    fn default() -> Self {
        Self {
            mu: 1e5,
            delta: 1e-3,
            max_iters: 200,
            restarts: 100,
            seed: 0,
        }
    }
}

/// Per-iteration record of one CCCP run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CccpTrace {
    /// Penalized objective at `x^0, x^1, ...`.
    pub penalized: Vec<f64>,
    /// Value of the linearized objective at each LP solution.
    pub surrogate: Vec<f64>,
    /// Relative duality gap of each LP solve.
    pub lp_gaps: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tableaus: Vec<String>,
}

impl CccpTrace {
    pub fn final_objective(&self) -> f64 {
        self.penalized.last().copied().unwrap_or(f64::NAN)
    }

    /// True when the penalized objective never rises by more than `rtol`
    /// relative to its magnitude.
    pub fn is_non_increasing(&self, rtol: f64) -> bool {
        self.penalized
            .windows(2)
            .all(|w| w[1] - w[0] <= rtol * w[0].abs().max(1.0))
    }
}

/// `G(x) / RATE_UNIT + mu Σ x(1 - x)`.
pub fn penalized_objective(x: &RelaxedAssignment, inst: &MmkpInstance, mu: f64) -> Result<f64> {
    Ok(objective(x, inst)? / RATE_UNIT + mu * x.binarity_gap())
}

fn subproblem(inst: &MmkpInstance) -> LinearProgram {
    let n = inst.n();
    let mut lp = LinearProgram::unit_box(vec![0.0; n * ROUTES]);
    for (i, en) in inst.enabled.iter().enumerate() {
        for j in 0..ROUTES {
            lp.upper[i * ROUTES + j] = if en[j] { 1.0 } else { 0.0 };
        }
    }
    lp.add_le(inst.cache_costs.iter().flatten().copied().collect(), inst.cache_budget);
    lp.add_le(inst.energy_costs.iter().flatten().copied().collect(), inst.energy_budget);
    for i in 0..n {
        let mut row = vec![0.0; n * ROUTES];
        row[i * ROUTES..(i + 1) * ROUTES].fill(1.0);
        lp.add_eq(row, 1.0);
    }
    lp
}

/// Runs CCCP from `x0` until the penalized objective drops by at most
/// `cfg.delta` in one step or `cfg.max_iters` LPs have been solved.
pub fn cccp_solve(
    inst: &MmkpInstance,
    x0: &RelaxedAssignment,
    cfg: &CccpConfig,
    backend: &dyn LpBackend,
) -> Result<(RelaxedAssignment, CccpTrace)> {
    let mut lp = subproblem(inst);
    let profits: Vec<f64> = inst.profits.iter().flatten().map(|v| v / RATE_UNIT).collect();
    let mut x = x0.clone();
    let mut f = penalized_objective(&x, inst, cfg.mu)?;
    let mut trace = CccpTrace {
        penalized: vec![f],
        ..CccpTrace::default()
    };

    for iteration in 1..=cfg.max_iters {
        let xt = x.flat();
        for (c, (v, xv)) in lp.costs.iter_mut().zip(profits.iter().zip(&xt)) {
            *c = -v - cfg.mu * (2.0 * xv - 1.0);
        }
        let sol = backend
            .solve(&lp)
            .map_err(|source| Error::LpFailure { iteration, source })?;
        if sol.status != LpStatus::Optimal {
            return Err(Error::LpFailure {
                iteration,
                source: LpError::Verification(format!("subproblem reported {:?}", sol.status)),
            });
        }
        let next = RelaxedAssignment::from_flat(&sol.x);
        // constant part of the linearized penalty
        let constant: f64 = xt.iter().map(|&a| cfg.mu * (a * a)).sum();
        trace.surrogate.push(sol.objective + constant);
        trace.lp_gaps.push(sol.relative_gap().unwrap_or(0.0));
        if let Some(t) = sol.tableau {
            trace.tableaus.push(t);
        }
        let f_next = penalized_objective(&next, inst, cfg.mu)?;
        if f_next - f > INCREASE_RTOL * f.abs().max(1.0) {
            return Err(Error::NonDecreasingObjective {
                iteration,
                previous: f,
                current: f_next,
            });
        }
        trace.penalized.push(f_next);
        trace.iterations = iteration;
        let decrease = f - f_next;
        x = next;
        f = f_next;
        if decrease <= cfg.delta {
            trace.converged = true;
            break;
        }
    }
    Ok((x, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::heterogeneous::{brute_force_mmkp, build_mmkp, round_and_repair};
    use crate::lp::DenseSimplex;
    use crate::model::{self, DeviceCapability, JointPolicy, ProjectionTask, ServiceRoute, Viewpoint};

    fn viewpoints() -> Vec<Viewpoint> {
        vec![
            Viewpoint {
                task: ProjectionTask::new(10e6, 20e6, 10.0, 0.02).unwrap(),
                popularity: 0.7,
            },
            Viewpoint {
                task: ProjectionTask::new(4e6, 8e6, 10.0, 0.02).unwrap(),
                popularity: 0.3,
            },
        ]
    }

    #[test]
    fn ample_cache_converges_to_all_3d() {
        let vps = viewpoints();
        let dev = DeviceCapability::new(28e6, 0.0, 5e10, 1e-27).unwrap();
        let inst = build_mmkp(&vps, &dev);
        let x0 = RelaxedAssignment(vec![[0.5, 0.0, 0.0, 0.5]; 2]);
        let (x, trace) = cccp_solve(&inst, &x0, &CccpConfig::default(), &DenseSimplex::default()).unwrap();
        let policy = round_and_repair(&x, &inst);
        assert_eq!(policy, JointPolicy::from_routes(&[ServiceRoute::Local3dCache; 2]));
        assert!(trace.converged);
        assert!((objective(&x, &inst).unwrap() + inst.mec_rate).abs() <= 1e-6 * inst.mec_rate);
        let (oracle, rate) = brute_force_mmkp(&inst).unwrap();
        assert_eq!(oracle, policy);
        assert!(rate.abs() <= 1e-6 * inst.mec_rate);
    }

    #[test]
    fn optimal_vertex_is_fixed_point() {
        let vps = viewpoints();
        let dev = DeviceCapability::new(28e6, 0.0, 5e10, 1e-27).unwrap();
        let inst = build_mmkp(&vps, &dev);
        let x0 = RelaxedAssignment::from_routes(&[ServiceRoute::Local3dCache; 2]);
        let (x, trace) = cccp_solve(&inst, &x0, &CccpConfig::default(), &DenseSimplex::default()).unwrap();
        assert_eq!(trace.iterations, 1);
        assert!(trace.converged);
        for (a, b) in x.flat().iter().zip(x0.flat()) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn trace_is_monotone_and_majorized() {
        let vps = viewpoints();
        let dev = DeviceCapability::new(12e6, 5.0, 5e10, 1e-27).unwrap();
        let inst = build_mmkp(&vps, &dev);
        let x0 = RelaxedAssignment(vec![[0.25, 0.0, 0.0, 0.75], [0.5, 0.0, 0.0, 0.5]]);
        assert!(x0.max_violation(&inst) <= 0.0);
        let cfg = CccpConfig {
            mu: 1e6,
            ..CccpConfig::default()
        };
        let (x, trace) = cccp_solve(&inst, &x0, &cfg, &DenseSimplex::default()).unwrap();
        assert!(trace.is_non_increasing(1e-9));
        for (t, s) in trace.surrogate.iter().enumerate() {
            let scale = trace.penalized[t].abs().max(1.0);
            assert!(*s <= trace.penalized[t] + 1e-9 * scale);
            assert!(trace.penalized[t + 1] <= *s + 1e-9 * scale);
        }
        assert!(x.max_violation(&inst) <= 1e-9);
        let policy = round_and_repair(&x, &inst);
        assert!(model::validate_policy(&policy, &vps, &dev).is_empty());
    }

    #[test]
    fn penalty_vanishes_on_binary_points() {
        let vps = viewpoints();
        let dev = DeviceCapability::new(12e6, 5.0, 5e10, 1e-27).unwrap();
        let inst = build_mmkp(&vps, &dev);
        let x = RelaxedAssignment::from_routes(&[ServiceRoute::Local3dCache, ServiceRoute::MecCompute]);
        assert_eq!(
            penalized_objective(&x, &inst, 1e5).unwrap(),
            objective(&x, &inst).unwrap() / RATE_UNIT
        );
        let half = RelaxedAssignment(vec![[0.5, 0.0, 0.0, 0.5], [0.0, 0.0, 0.0, 1.0]]);
        let diff = penalized_objective(&half, &inst, 1e5).unwrap() - objective(&half, &inst).unwrap() / RATE_UNIT;
        assert!((diff - 1e5 * 0.5).abs() < 1e-6);
    }

    struct FailingBackend;

    impl LpBackend for FailingBackend {
        fn solve(&self, _: &LinearProgram) -> std::result::Result<crate::lp::LpSolution, LpError> {
            Err(LpError::NumericalBreakdown { limit: 7 })
        }
    }

    #[test]
    fn lp_failure_carries_iteration() {
        let vps = viewpoints();
        let dev = DeviceCapability::new(12e6, 5.0, 5e10, 1e-27).unwrap();
        let inst = build_mmkp(&vps, &dev);
        let x0 = RelaxedAssignment::from_routes(&[ServiceRoute::MecCompute; 2]);
        let err = cccp_solve(&inst, &x0, &CccpConfig::default(), &FailingBackend).unwrap_err();
        assert!(matches!(err, Error::LpFailure { iteration: 1, .. }));
    }
}
