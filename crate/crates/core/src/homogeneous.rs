//! Homogeneous viewpoints: closed-form optimal counts, the count-to-vector
//! layout, an exhaustive oracle over the count problem, the rate-minimizing
//! CPU frequency and grid sweeps of the tradeoff surface.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{self, DeviceCapability, JointPolicy, ProjectionTask, Viewpoint};

/// Largest `(C+1)(cap+1)` the oracle will enumerate.
pub const ENUMERATION_LIMIT: u128 = 100_000_000;

/// Relative distance under which two rates count as tied.
const TIE_RTOL: f64 = 1e-12;

/// `N` identical viewpoints sharing one device.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HomogeneousInstance {
    pub task: ProjectionTask,
    pub n: u64,
    /// Cache size in units of one 2D FOV.
    pub cache_units: u64,
    pub dev: DeviceCapability,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    /// `f_V < F`: local computing without a cached 2D FOV costs bandwidth.
    LocalComputeLimited,
    /// `f_V >= F`.
    MecComputeLimited,
}

impl Regime {
    pub fn as_str(self) -> &'static str {
        match self {
            Regime::LocalComputeLimited => "local_compute_limited",
            Regime::MecComputeLimited => "mec_compute_limited",
        }
    }
}

/// Count form of a homogeneous policy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CountPolicy {
    pub n_cache3d: u64,
    pub n_cache2d: u64,
    pub n_compute: u64,
}

impl CountPolicy {
    pub fn new(n_cache3d: u64, n_cache2d: u64, n_compute: u64) -> Self {
        Self {
            n_cache3d,
            n_cache2d,
            n_compute,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HomogeneousSolution {
    pub counts: CountPolicy,
    pub rate: f64,
    pub regime: Regime,
    /// Cache units left unused because `alpha` does not divide the leftover.
    pub cache_remainder: f64,
    /// Whether `C/alpha + cap <= N` holds for the instance.
    pub assumption_holds: bool,
}

impl HomogeneousInstance {
    /// Builds an instance; `dev.cache_bits` is overwritten with `C * D^I`.
    pub fn new(task: ProjectionTask, n: u64, cache_units: u64, dev: DeviceCapability) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidViewpoints("N must be positive".into()));
        }
        let dev = DeviceCapability {
            cache_bits: cache_units as f64 * task.d_in(),
            ..dev
        };
        dev.validate()?;
        let inst = Self {
            task,
            n,
            cache_units,
            dev,
        };
        if !inst.assumption_holds() {
            log::warn!(
                "C/alpha + cap = {} exceeds N = {n}; closed form clamps counts to N",
                inst.cache_units as f64 / task.alpha() + inst.raw_capacity()
            );
        }
        Ok(inst)
    }

    /// Energy of one local projection.
    pub fn unit_energy(&self) -> f64 {
        self.task.compute_energy(&self.dev)
    }

    /// `N Ē / (k f_V^2 D^I w)` before rounding.
    pub fn raw_capacity(&self) -> f64 {
        let unit = self.unit_energy();
        if unit > 0.0 {
            self.n as f64 * self.dev.energy_budget / unit
        } else {
            f64::INFINITY
        }
    }

    /// Number of projections the energy budget affords, floored and capped at `N`.
    pub fn capacity(&self) -> u64 {
        floor_snapped(self.raw_capacity()).min(self.n)
    }

    pub fn assumption_holds(&self) -> bool {
        self.cache_units as f64 / self.task.alpha() + self.raw_capacity() <= self.n as f64 * (1.0 + 1e-12)
    }

    pub fn crossover(&self) -> Result<f64> {
        model::crossover_frequency(&self.task)
    }

    pub fn regime(&self) -> Result<Regime> {
        Ok(if self.dev.cpu_freq < self.crossover()? {
            Regime::LocalComputeLimited
        } else {
            Regime::MecComputeLimited
        })
    }

    pub fn rate_mec(&self) -> f64 {
        model::rate_mec(&self.task)
    }

    pub fn rate_local(&self) -> Result<f64> {
        model::rate_local_compute(&self.task, &self.dev)
    }

    /// Most 3D FOVs that fit in `units` cache units, evaluated in bits.
    fn max_cache3d(&self, units: u64) -> u64 {
        let bits = units as f64 * self.task.d_in();
        let per = self.task.d_out();
        floor_snapped(bits / per)
    }

    /// The 3D count paired with `(c^I, d)`: all leftover cache goes to 3D
    /// FOVs, limited by the viewpoints not already served locally.
    fn paired_cache3d(&self, cache2d: u64, compute: u64) -> Option<u64> {
        let used = cache2d.max(compute);
        if used > self.n || cache2d > self.cache_units {
            return None;
        }
        Some(self.max_cache3d(self.cache_units - cache2d).min(self.n - used))
    }

    /// The count-problem objective at `counts`.
    pub fn count_rate(&self, counts: CountPolicy) -> Result<f64> {
        let n = self.n as f64;
        let rs = self.rate_mec();
        let served_2d = counts.n_cache2d.min(counts.n_compute);
        let uncached_compute = counts.n_compute - served_2d;
        if counts.n_compute > 0 && !self.task.local_compute_feasible(self.dev.cpu_freq) {
            return Err(Error::InfeasibleCompute {
                latency: self.task.compute_latency(self.dev.cpu_freq),
                deadline: self.task.deadline(),
            });
        }
        let mut rate = rs - rs / n * counts.n_cache3d as f64 - rs / n * served_2d as f64;
        if uncached_compute > 0 {
            let rv = self.rate_local()?;
            rate -= (rs - rv) / n * uncached_compute as f64;
        }
        Ok(rate)
    }

    pub fn with_cpu_freq(&self, cpu_freq: f64) -> Self {
        Self {
            dev: self.dev.with_cpu_freq(cpu_freq),
            ..*self
        }
    }

    /// The instance as `N` explicit viewpoints with uniform popularity.
    pub fn viewpoints(&self) -> Vec<Viewpoint> {
        let p = 1.0 / self.n as f64;
        (0..self.n)
            .map(|_| Viewpoint {
                task: self.task,
                popularity: p,
            })
            .collect()
    }
}

/// `floor(x)`, except values within 1e-9 (relative) below an integer round up
/// to it.
fn floor_snapped(x: f64) -> u64 {
    if !x.is_finite() {
        return if x > 0.0 { u64::MAX } else { 0 };
    }
    if x <= 0.0 {
        return 0;
    }
    let r = x.round();
    if (x - r).abs() <= 1e-9 * r.max(1.0) {
        r as u64
    } else {
        x.floor() as u64
    }
}

/// Optimal counts and minimum rate from the closed-form policy: 2D caching
/// paired with local computing first, leftover cache to 3D FOVs, and extra
/// uncached local computing only when `f_V >= F`.
pub fn closed_form(inst: &HomogeneousInstance) -> Result<HomogeneousSolution> {
    let regime = inst.regime()?;
    let cap = inst.capacity();
    let cache2d = inst.cache_units.min(cap);
    let compute = match regime {
        Regime::LocalComputeLimited => cache2d,
        Regime::MecComputeLimited => cap,
    };
    let cache3d = inst
        .paired_cache3d(cache2d, compute)
        .expect("capacity is capped at N");
    let counts = CountPolicy::new(cache3d, cache2d, compute);
    let rate = inst.count_rate(counts)?;
    let cache_remainder = (inst.cache_units - cache2d) as f64 - cache3d as f64 * inst.task.alpha();
    Ok(HomogeneousSolution {
        counts,
        rate,
        regime,
        cache_remainder: if cache_remainder > 1e-9 { cache_remainder } else { 0.0 },
        assumption_holds: inst.assumption_holds(),
    })
}

/// Real-valued tradeoff surface: the closed-form rate with `C / alpha` and
/// the energy capacity left unrounded.
pub fn tradeoff_rate(inst: &HomogeneousInstance) -> Result<f64> {
    let regime = inst.regime()?;
    let n = inst.n as f64;
    let c = inst.cache_units as f64;
    let alpha = inst.task.alpha();
    let cap = inst.raw_capacity();
    let rs = inst.rate_mec();
    let paired = c.min(cap);
    let mut rate = rs - rs / n * (c / alpha + (1.0 - 1.0 / alpha) * paired);
    if regime == Regime::MecComputeLimited && cap > paired {
        let rv = inst.rate_local()?;
        rate -= (rs - rv) / n * (cap - paired);
    } else if paired > 0.0 && !inst.task.local_compute_feasible(inst.dev.cpu_freq) {
        return Err(Error::InfeasibleCompute {
            latency: inst.task.compute_latency(inst.dev.cpu_freq),
            deadline: inst.task.deadline(),
        });
    }
    Ok(rate)
}

/// Lays counts out over viewpoint indices: 3D FOVs first, then 2D FOVs and
/// local computations on the following indices.
pub fn expand_counts(counts: CountPolicy, n: u64) -> Result<JointPolicy> {
    let needed = counts.n_cache3d + counts.n_cache2d.max(counts.n_compute);
    if needed > n {
        return Err(Error::CountsExceedN { needed, n });
    }
    if counts.n_cache2d > counts.n_compute {
        return Err(Error::CountsInconsistent {
            cache2d: counts.n_cache2d,
            compute: counts.n_compute,
        });
    }
    let n = n as usize;
    let o = counts.n_cache3d as usize;
    let mut policy = JointPolicy::all_mec(n);
    policy.cache3d[..o].fill(true);
    policy.cache2d[o..o + counts.n_cache2d as usize].fill(true);
    policy.compute_local[o..o + counts.n_compute as usize].fill(true);
    Ok(policy)
}

/// Exhaustive minimum of the count problem over `c^I in 0..=C`,
/// `d in 0..=cap`. Ties go to the smaller `d`, then the smaller `c^O`, then
/// the smaller `c^I`.
pub fn brute_force_problem2(inst: &HomogeneousInstance) -> Result<(CountPolicy, f64)> {
    let cap = inst.capacity();
    let size = (inst.cache_units as u128 + 1) * (cap as u128 + 1);
    if size > ENUMERATION_LIMIT {
        return Err(Error::EnumerationTooLarge {
            size,
            limit: ENUMERATION_LIMIT,
        });
    }
    let feasible_compute = inst.task.local_compute_feasible(inst.dev.cpu_freq);
    let rs = inst.rate_mec();
    let mut best: Option<(CountPolicy, f64)> = None;
    for cache2d in 0..=inst.cache_units {
        for compute in 0..=cap {
            if compute > 0 && !feasible_compute {
                break;
            }
            let Some(cache3d) = inst.paired_cache3d(cache2d, compute) else {
                continue;
            };
            let counts = CountPolicy::new(cache3d, cache2d, compute);
            let rate = inst.count_rate(counts)?;
            let replace = match best {
                None => true,
                Some((b, r)) => {
                    if (rate - r).abs() <= TIE_RTOL * rs {
                        (counts.n_compute, counts.n_cache3d, counts.n_cache2d)
                            < (b.n_compute, b.n_cache3d, b.n_cache2d)
                    } else {
                        rate < r
                    }
                }
            };
            if replace {
                best = Some((counts, rate));
            }
        }
    }
    Ok(best.expect("the all-zero policy is always enumerated"))
}

/// CPU frequency minimizing the rate at `C = 0` in the MEC-limited regime.
pub fn optimal_frequency(task: &ProjectionTask) -> Result<f64> {
    let big_f = model::crossover_frequency(task)?;
    let rs = model::rate_mec(task);
    let a = 1.0 - task.d_in() / (4.0 * rs * task.deadline());
    let radicand = a * a * big_f * big_f - task.cycles() / task.deadline() * big_f;
    if radicand < 0.0 {
        return Err(Error::NegativeDiscriminant {
            alpha: task.alpha(),
            radicand,
        });
    }
    Ok(a * big_f + radicand.sqrt())
}

/// Grid axes of a tradeoff sweep.
///
/// `energy_fraction` fixes `Ē = e · k f_ref^2 D^I w` at the template's CPU
/// frequency, so sweeping `cpu_freq` holds the energy budget constant. An
/// empty `cpu_freq` axis means the template frequency.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SweepAxes {
    pub cache_fraction: Vec<f64>,
    pub energy_fraction: Vec<f64>,
    #[serde(default)]
    pub cpu_freq: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub cache_fraction: f64,
    pub energy_fraction: f64,
    pub cpu_freq: f64,
    pub rate: Option<f64>,
    pub regime: Option<Regime>,
    pub counts: Option<CountPolicy>,
    pub status: String,
}

pub const SWEEP_HEADER: &str = "cache_fraction,energy_fraction,cpu_freq,rate,regime,c3d,c2d,d,status";

/// Evaluates the closed form at every grid point, row-major over
/// (cache, energy, frequency).
pub fn sweep(template: &HomogeneousInstance, axes: &SweepAxes) -> Vec<SweepRow> {
    let freqs = if axes.cpu_freq.is_empty() {
        vec![template.dev.cpu_freq]
    } else {
        axes.cpu_freq.clone()
    };
    let f_ref = template.dev.cpu_freq;
    let unit_ref = template.dev.k_eff * f_ref * f_ref * template.task.cycles();
    let mut points = Vec::new();
    for &c in &axes.cache_fraction {
        for &e in &axes.energy_fraction {
            for &f in &freqs {
                points.push((c, e, f));
            }
        }
    }
    points
        .par_iter()
        .map(|&(c, e, f)| {
            let cache_units = (c * template.n as f64).round().max(0.0) as u64;
            let dev = DeviceCapability {
                energy_budget: e * unit_ref,
                cpu_freq: f,
                ..template.dev
            };
            let outcome = HomogeneousInstance::new(template.task, template.n, cache_units, dev)
                .and_then(|inst| closed_form(&inst));
            match outcome {
                Ok(sol) => SweepRow {
                    cache_fraction: c,
                    energy_fraction: e,
                    cpu_freq: f,
                    rate: Some(sol.rate),
                    regime: Some(sol.regime),
                    counts: Some(sol.counts),
                    status: if sol.cache_remainder > 0.0 {
                        "ok_cache_remainder".into()
                    } else {
                        "ok".into()
                    },
                },
                Err(err) => SweepRow {
                    cache_fraction: c,
                    energy_fraction: e,
                    cpu_freq: f,
                    rate: None,
                    regime: None,
                    counts: None,
                    status: err.kind_detail(),
                },
            }
        })
        .collect()
}

impl Error {
    fn kind_detail(&self) -> String {
        match self {
            Error::InfeasibleCompute { .. } => "infeasible_compute".into(),
            Error::AlphaDegenerate { .. } => "alpha_degenerate".into(),
            other => format!("error:{}", other.kind()),
        }
    }
}

/// Renders sweep rows as CSV under [`SWEEP_HEADER`].
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(SWEEP_HEADER);
    out.push('\n');
    for r in rows {
        let (c3, c2, d) = r
            .counts
            .map(|c| (c.n_cache3d.to_string(), c.n_cache2d.to_string(), c.n_compute.to_string()))
            .unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            crate::fmt_num(r.cache_fraction),
            crate::fmt_num(r.energy_fraction),
            crate::fmt_num(r.cpu_freq),
            r.rate.map(crate::fmt_num).unwrap_or_default(),
            r.regime.map(Regime::as_str).unwrap_or(""),
            c3,
            c2,
            d,
            r.status
        );
    }
    out
}
