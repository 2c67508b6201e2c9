//! Heterogeneous viewpoints as a 4-choice, 2-dimensional knapsack.
//!
//! Each viewpoint picks one service route; route `j` of viewpoint `i` earns
//! profit `v[i][j]` (rate saved against MEC computing) and spends `w1[i][j]`
//! cache bits and `w2[i][j]` joules of the average energy budget.

mod cccp;
mod greedy;
mod multistart;
mod oracle;
mod repair;

pub use cccp::{cccp_solve, penalized_objective, CccpConfig, CccpTrace, RATE_UNIT};
pub use greedy::{greedy_3d_caching, greedy_caching_computing};
pub use multistart::{baseline_rates, multi_start, multi_start_with_baselines, BaselineRates, RestartRecord, SolveReport, SCHEMA_VERSION};
pub use oracle::{brute_force_mmkp, MAX_ORACLE_VIEWPOINTS};
pub use repair::{improve_greedily, initial_feasible_point, round_and_repair};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{self, DeviceCapability, JointPolicy, ServiceRoute, Viewpoint};

pub const ROUTES: usize = 4;

/// Profit and cost matrices of the knapsack form, with both budgets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MmkpInstance {
    pub profits: Vec<[f64; ROUTES]>,
    pub cache_costs: Vec<[f64; ROUTES]>,
    pub energy_costs: Vec<[f64; ROUTES]>,
    pub cache_budget: f64,
    pub energy_budget: f64,
    /// Routes usable by each viewpoint; local computing is disabled when it
    /// cannot meet the deadline.
    pub enabled: Vec<[bool; ROUTES]>,
    /// Average rate of the all-MEC policy, `Σ P_i R_i^S`.
    pub mec_rate: f64,
}

impl MmkpInstance {
    pub fn n(&self) -> usize {
        self.profits.len()
    }

    /// Profit assigned to disabled routes: below the negated total of all
    /// other profits, so no optimum ever selects one.
    pub fn disabled_profit(&self) -> f64 {
        let total: f64 = self
            .profits
            .iter()
            .zip(&self.enabled)
            .flat_map(|(row, en)| row.iter().zip(en).filter(|(_, &e)| e).map(|(v, _)| v.abs()))
            .sum();
        -(total + 1.0)
    }

    /// Total profit of a binary route assignment.
    pub fn profit(&self, routes: &[ServiceRoute]) -> f64 {
        routes
            .iter()
            .enumerate()
            .map(|(i, r)| self.profits[i][r.index()])
            .sum()
    }

    pub fn cache_used(&self, routes: &[ServiceRoute]) -> f64 {
        routes
            .iter()
            .enumerate()
            .map(|(i, r)| self.cache_costs[i][r.index()])
            .sum()
    }

    pub fn energy_used(&self, routes: &[ServiceRoute]) -> f64 {
        routes
            .iter()
            .enumerate()
            .map(|(i, r)| self.energy_costs[i][r.index()])
            .sum()
    }

    pub fn feasible(&self, routes: &[ServiceRoute]) -> bool {
        routes.iter().enumerate().all(|(i, r)| self.enabled[i][r.index()])
            && !model::exceeds(self.cache_used(routes), self.cache_budget)
            && !model::exceeds(self.energy_used(routes), self.energy_budget)
    }

    /// Average transmission rate of a binary assignment.
    pub fn rate(&self, routes: &[ServiceRoute]) -> f64 {
        self.mec_rate - self.profit(routes)
    }
}

/// Fills the profit and cost matrices from the viewpoint parameters.
pub fn build_mmkp(viewpoints: &[Viewpoint], dev: &DeviceCapability) -> MmkpInstance {
    let n = viewpoints.len();
    let mut profits = Vec::with_capacity(n);
    let mut cache_costs = Vec::with_capacity(n);
    let mut energy_costs = Vec::with_capacity(n);
    let mut enabled = Vec::with_capacity(n);
    let mut mec_rate = 0.0;
    for vp in viewpoints {
        let p = vp.popularity;
        let t = &vp.task;
        let rs = model::rate_mec(t);
        mec_rate += p * rs;
        let energy = p * t.compute_energy(dev);
        let local = model::rate_local_compute(t, dev).ok();
        profits.push([p * rs, p * rs, local.map_or(0.0, |rv| p * (rs - rv)), 0.0]);
        cache_costs.push([t.alpha() * t.d_in(), t.d_in(), 0.0, 0.0]);
        energy_costs.push([0.0, energy, energy, 0.0]);
        enabled.push([true, local.is_some(), local.is_some(), true]);
    }
    let mut inst = MmkpInstance {
        profits,
        cache_costs,
        energy_costs,
        cache_budget: dev.cache_bits,
        energy_budget: dev.energy_budget,
        enabled,
        mec_rate,
    };
    let disabled = inst.disabled_profit();
    for (row, en) in inst.profits.iter_mut().zip(&inst.enabled) {
        for j in 0..ROUTES {
            if !en[j] {
                row[j] = disabled;
            }
        }
    }
    inst
}

/// Fractional route assignment: one probability-like row per viewpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelaxedAssignment(pub Vec<[f64; ROUTES]>);

impl RelaxedAssignment {
    pub fn from_routes(routes: &[ServiceRoute]) -> Self {
        Self(
            routes
                .iter()
                .map(|r| {
                    let mut row = [0.0; ROUTES];
                    row[r.index()] = 1.0;
                    row
                })
                .collect(),
        )
    }

    pub fn from_flat(x: &[f64]) -> Self {
        Self(
            x.chunks_exact(ROUTES)
                .map(|c| [c[0], c[1], c[2], c[3]])
                .collect(),
        )
    }

    pub fn flat(&self) -> Vec<f64> {
        self.0.iter().flatten().copied().collect()
    }

    pub fn n(&self) -> usize {
        self.0.len()
    }

    /// `Σ x (1 - x)`; zero exactly on binary points.
    pub fn binarity_gap(&self) -> f64 {
        self.0.iter().flatten().map(|x| x * (1.0 - x)).sum()
    }

    pub fn is_binary(&self, tol: f64) -> bool {
        self.0.iter().flatten().all(|&x| x.abs() <= tol || (x - 1.0).abs() <= tol)
    }

    /// Largest violation of the cache, energy, row-sum and box constraints,
    /// with knapsack rows measured relative to their largest coefficient.
    pub fn max_violation(&self, inst: &MmkpInstance) -> f64 {
        let mut worst: f64 = 0.0;
        for row in &self.0 {
            worst = worst.max((row.iter().sum::<f64>() - 1.0).abs());
            for &x in row {
                worst = worst.max(-x).max(x - 1.0);
            }
        }
        for (costs, budget) in [(&inst.cache_costs, inst.cache_budget), (&inst.energy_costs, inst.energy_budget)] {
            let scale = costs.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
            if scale > 0.0 {
                let used: f64 = costs
                    .iter()
                    .zip(&self.0)
                    .map(|(c, x)| c.iter().zip(x).map(|(a, b)| a * b).sum::<f64>())
                    .sum();
                worst = worst.max((used - budget) / scale);
            }
        }
        worst
    }
}

/// Linear objective `-Σ v x` (negated total profit).
pub fn objective(x: &RelaxedAssignment, inst: &MmkpInstance) -> Result<f64> {
    if x.n() != inst.n() {
        return Err(Error::ShapeMismatch {
            expected: inst.n(),
            got: x.n(),
        });
    }
    Ok(-x
        .0
        .iter()
        .zip(&inst.profits)
        .map(|(xr, vr)| xr.iter().zip(vr).map(|(a, b)| a * b).sum::<f64>())
        .sum::<f64>())
}

/// Converts a binary policy back to its per-viewpoint routes.
pub fn policy_routes(policy: &JointPolicy) -> Result<Vec<ServiceRoute>> {
    policy.routes()
}
