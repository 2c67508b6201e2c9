//! System model: projection workloads, device capability, joint policies and
//! the rate/latency/energy arithmetic of the four service routes.
//!
//! All quantities are in base SI units (bits, seconds, joules, cycles).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative slack applied when comparing accumulated resource usage to a budget.
pub(crate) const BUDGET_RTOL: f64 = 1e-12;

pub(crate) fn exceeds(used: f64, budget: f64) -> bool {
    used - budget > BUDGET_RTOL * used.abs().max(budget.abs())
}

/// One FOV projection workload: 2D input size, 3D output size, computation
/// load and latency deadline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTask", into = "RawTask")]
pub struct ProjectionTask {
    d_in: f64,
    d_out: f64,
    cycles_per_bit: f64,
    deadline: f64,
}

#[derive(Serialize, Deserialize)]
struct RawTask {
    d_in: f64,
    d_out: f64,
    cycles_per_bit: f64,
    deadline: f64,
}

impl TryFrom<RawTask> for ProjectionTask {
    type Error = Error;

    fn try_from(raw: RawTask) -> Result<Self> {
        ProjectionTask::new(raw.d_in, raw.d_out, raw.cycles_per_bit, raw.deadline)
    }
}

impl From<ProjectionTask> for RawTask {
    fn from(t: ProjectionTask) -> Self {
        RawTask {
            d_in: t.d_in,
            d_out: t.d_out,
            cycles_per_bit: t.cycles_per_bit,
            deadline: t.deadline,
        }
    }
}

impl ProjectionTask {
    pub fn new(d_in: f64, d_out: f64, cycles_per_bit: f64, deadline: f64) -> Result<Self> {
        for (name, v) in [
            ("d_in", d_in),
            ("d_out", d_out),
            ("cycles_per_bit", cycles_per_bit),
            ("deadline", deadline),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidTask(format!("{name} must be finite and > 0, got {v}")));
            }
        }
        let alpha = d_out / d_in;
        if alpha <= 1.0 {
            return Err(Error::AlphaDegenerate { alpha });
        }
        if alpha < 2.0 {
            log::warn!("3D/2D size ratio {alpha} is below 2");
        }
        Ok(Self {
            d_in,
            d_out,
            cycles_per_bit,
            deadline,
        })
    }

    pub fn d_in(&self) -> f64 {
        self.d_in
    }

    pub fn d_out(&self) -> f64 {
        self.d_out
    }

    pub fn cycles_per_bit(&self) -> f64 {
        self.cycles_per_bit
    }

    pub fn deadline(&self) -> f64 {
        self.deadline
    }

    /// Size ratio of the 3D FOV to the 2D FOV.
    pub fn alpha(&self) -> f64 {
        self.d_out / self.d_in
    }

    /// Total CPU cycles needed to project one 2D FOV.
    pub fn cycles(&self) -> f64 {
        self.d_in * self.cycles_per_bit
    }

    /// Latency of projecting locally at `cpu_freq`.
    pub fn compute_latency(&self, cpu_freq: f64) -> f64 {
        self.cycles() / cpu_freq
    }

    /// Whether local projection finishes strictly before the deadline.
    pub fn local_compute_feasible(&self, cpu_freq: f64) -> bool {
        cpu_freq > 0.0 && self.compute_latency(cpu_freq) < self.deadline
    }

    /// Energy of one local projection at `cpu_freq` (`k f^2` joules per cycle).
    pub fn compute_energy(&self, dev: &DeviceCapability) -> f64 {
        dev.k_eff * dev.cpu_freq * dev.cpu_freq * self.cycles()
    }
}

/// Caching and computing resources of the VR device.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeviceCapability {
    /// Cache size in bits.
    pub cache_bits: f64,
    /// Average energy per request in joules.
    pub energy_budget: f64,
    /// CPU-cycle frequency in cycles/s.
    pub cpu_freq: f64,
    /// Power-efficiency constant, J s^2 / cycle^3.
    pub k_eff: f64,
}

impl DeviceCapability {
    pub fn new(cache_bits: f64, energy_budget: f64, cpu_freq: f64, k_eff: f64) -> Result<Self> {
        let dev = Self {
            cache_bits,
            energy_budget,
            cpu_freq,
            k_eff,
        };
        dev.validate()?;
        Ok(dev)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("cache_bits", self.cache_bits),
            ("energy_budget", self.energy_budget),
            ("cpu_freq", self.cpu_freq),
            ("k_eff", self.k_eff),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidDevice(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        Ok(())
    }

    pub fn with_cpu_freq(mut self, cpu_freq: f64) -> Self {
        self.cpu_freq = cpu_freq;
        self
    }
}

/// A viewpoint of the heterogeneous model: its projection task and request
/// probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Viewpoint {
    pub task: ProjectionTask,
    pub popularity: f64,
}

/// Checks popularities lie in [0, 1] and sum to one within 1e-12.
pub fn validate_popularities(viewpoints: &[Viewpoint]) -> Result<()> {
    if viewpoints.is_empty() {
        return Err(Error::InvalidViewpoints("no viewpoints".into()));
    }
    let mut sum = 0.0;
    for (i, vp) in viewpoints.iter().enumerate() {
        let p = vp.popularity;
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidViewpoints(format!("popularity of viewpoint {i} is {p}")));
        }
        sum += p;
    }
    if (sum - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidViewpoints(format!("popularities sum to {sum}")));
    }
    Ok(())
}

/// Zipf popularity profile `P_i ∝ 1/i^gamma`, normalized to sum to one.
pub fn zipf_popularities(gamma: f64, n: usize) -> Vec<f64> {
    let weights: Vec<f64> = (1..=n).map(|i| (i as f64).powf(-gamma)).collect();
    let total: f64 = weights.iter().sum();
    weights.into_iter().map(|w| w / total).collect()
}

/// The four ways a request can be served.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[repr(u8)]
pub enum ServiceRoute {
    Local3dCache = 1,
    LocalComputeWith2dCache = 2,
    LocalComputeNoCache = 3,
    MecCompute = 4,
}

impl ServiceRoute {
    pub const ALL: [ServiceRoute; 4] = [
        ServiceRoute::Local3dCache,
        ServiceRoute::LocalComputeWith2dCache,
        ServiceRoute::LocalComputeNoCache,
        ServiceRoute::MecCompute,
    ];

    /// Zero-based column index (route number minus one).
    pub fn index(self) -> usize {
        self as usize - 1
    }

    pub fn from_index(j: usize) -> Option<Self> {
        Self::ALL.get(j).copied()
    }

    /// The `(c^O, c^I, d)` decision triple of this route.
    pub fn bits(self) -> (bool, bool, bool) {
        match self {
            ServiceRoute::Local3dCache => (true, false, false),
            ServiceRoute::LocalComputeWith2dCache => (false, true, true),
            ServiceRoute::LocalComputeNoCache => (false, false, true),
            ServiceRoute::MecCompute => (false, false, false),
        }
    }

    pub fn from_bits(cache3d: bool, cache2d: bool, compute: bool) -> Option<Self> {
        match (cache3d, cache2d, compute) {
            (true, false, false) => Some(ServiceRoute::Local3dCache),
            (false, true, true) => Some(ServiceRoute::LocalComputeWith2dCache),
            (false, false, true) => Some(ServiceRoute::LocalComputeNoCache),
            (false, false, false) => Some(ServiceRoute::MecCompute),
            _ => None,
        }
    }

    pub fn uses_local_compute(self) -> bool {
        self.bits().2
    }
}

/// Per-viewpoint binary caching and computing decisions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JointPolicy {
    pub cache3d: Vec<bool>,
    pub cache2d: Vec<bool>,
    pub compute_local: Vec<bool>,
}

impl JointPolicy {
    pub fn all_mec(n: usize) -> Self {
        Self {
            cache3d: vec![false; n],
            cache2d: vec![false; n],
            compute_local: vec![false; n],
        }
    }

    pub fn from_routes(routes: &[ServiceRoute]) -> Self {
        let mut p = Self::all_mec(routes.len());
        for (i, r) in routes.iter().enumerate() {
            let (o, c, d) = r.bits();
            p.cache3d[i] = o;
            p.cache2d[i] = c;
            p.compute_local[i] = d;
        }
        p
    }

    pub fn len(&self) -> usize {
        self.cache3d.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cache3d.is_empty()
    }

    fn shape_ok(&self) -> bool {
        self.cache2d.len() == self.len() && self.compute_local.len() == self.len()
    }

    /// The route implied by viewpoint `i`'s bits, or `None` if the bits break
    /// the structural properties.
    pub fn route(&self, i: usize) -> Option<ServiceRoute> {
        ServiceRoute::from_bits(self.cache3d[i], self.cache2d[i], self.compute_local[i])
    }

    pub fn routes(&self) -> Result<Vec<ServiceRoute>> {
        if !self.shape_ok() {
            return Err(Error::ShapeMismatch {
                expected: self.len(),
                got: self.cache2d.len().min(self.compute_local.len()),
            });
        }
        let mut out = Vec::with_capacity(self.len());
        let mut bad = Vec::new();
        for i in 0..self.len() {
            match self.route(i) {
                Some(r) => out.push(r),
                None => bad.push(self.structural_violation(i)),
            }
        }
        if bad.is_empty() {
            Ok(out)
        } else {
            Err(Error::InvalidPolicy(bad))
        }
    }

    fn structural_violation(&self, i: usize) -> Violation {
        let property = if self.cache3d[i] && self.cache2d[i] {
            StructuralProperty::Cached3dAnd2d
        } else if self.cache3d[i] && self.compute_local[i] {
            StructuralProperty::Cached3dAndComputed
        } else {
            StructuralProperty::Cached2dNotComputed
        };
        Violation::Structural {
            viewpoint: i,
            property,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StructuralProperty {
    /// `c^O = 1` together with `c^I = 1`.
    Cached3dAnd2d,
    /// `c^O + d > 1`.
    Cached3dAndComputed,
    /// `c^I > d`.
    Cached2dNotComputed,
}

/// One failed policy constraint, with its measured slack.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Violation {
    ShapeMismatch { expected: usize, got: usize },
    Structural { viewpoint: usize, property: StructuralProperty },
    CacheOverflow { used: f64, budget: f64, overflow: f64 },
    EnergyOverflow { used: f64, budget: f64, overflow: f64 },
    InfeasibleCompute { viewpoint: usize, latency: f64, deadline: f64 },
}

/// Minimum rate when the MEC server projects: `D^O / tau`.
pub fn rate_mec(task: &ProjectionTask) -> f64 {
    task.d_out / task.deadline
}

/// Minimum rate when the device downloads the 2D FOV and projects it:
/// `D^I / (tau - D^I w / f_V)`.
pub fn rate_local_compute(task: &ProjectionTask, dev: &DeviceCapability) -> Result<f64> {
    let latency = task.compute_latency(dev.cpu_freq);
    if !task.local_compute_feasible(dev.cpu_freq) {
        return Err(Error::InfeasibleCompute {
            latency,
            deadline: task.deadline,
        });
    }
    Ok(task.d_in / (task.deadline - latency))
}

/// CPU frequency at which local computing and MEC computing need the same
/// rate; below it local computing without caching costs more bandwidth.
pub fn crossover_frequency(task: &ProjectionTask) -> Result<f64> {
    let alpha = task.alpha();
    if alpha <= 1.0 {
        return Err(Error::AlphaDegenerate { alpha });
    }
    Ok(task.d_out * task.cycles_per_bit / ((alpha - 1.0) * task.deadline))
}

/// Minimum rate of `route` for `task`.
pub fn route_rate(route: ServiceRoute, task: &ProjectionTask, dev: &DeviceCapability) -> Result<f64> {
    match route {
        ServiceRoute::Local3dCache => Ok(0.0),
        ServiceRoute::LocalComputeWith2dCache => {
            if task.local_compute_feasible(dev.cpu_freq) {
                Ok(0.0)
            } else {
                Err(Error::InfeasibleCompute {
                    latency: task.compute_latency(dev.cpu_freq),
                    deadline: task.deadline,
                })
            }
        }
        ServiceRoute::LocalComputeNoCache => rate_local_compute(task, dev),
        ServiceRoute::MecCompute => Ok(rate_mec(task)),
    }
}

/// Popularity-weighted minimum average transmission rate of `policy`.
pub fn average_rate(policy: &JointPolicy, viewpoints: &[Viewpoint], dev: &DeviceCapability) -> Result<f64> {
    if policy.len() != viewpoints.len() {
        return Err(Error::ShapeMismatch {
            expected: viewpoints.len(),
            got: policy.len(),
        });
    }
    let routes = policy.routes()?;
    routes.iter().zip(viewpoints).try_fold(0.0, |acc, (route, vp)| {
        Ok(acc + vp.popularity * route_rate(*route, &vp.task, dev)?)
    })
}

/// Cache bits occupied by `policy`.
pub fn cache_usage(policy: &JointPolicy, viewpoints: &[Viewpoint]) -> f64 {
    viewpoints
        .iter()
        .enumerate()
        .map(|(i, vp)| {
            let mut bits = 0.0;
            if policy.cache2d[i] {
                bits += vp.task.d_in;
            }
            if policy.cache3d[i] {
                bits += vp.task.alpha() * vp.task.d_in;
            }
            bits
        })
        .sum()
}

/// Expected energy per request of `policy`.
pub fn energy_usage(policy: &JointPolicy, viewpoints: &[Viewpoint], dev: &DeviceCapability) -> f64 {
    viewpoints
        .iter()
        .zip(&policy.compute_local)
        .filter(|(_, &d)| d)
        .map(|(vp, _)| vp.popularity * vp.task.compute_energy(dev))
        .sum()
}

/// Every violated constraint of `policy`; empty iff the policy is feasible.
pub fn validate_policy(policy: &JointPolicy, viewpoints: &[Viewpoint], dev: &DeviceCapability) -> Vec<Violation> {
    let n = viewpoints.len();
    if policy.len() != n || !policy.shape_ok() {
        return vec![Violation::ShapeMismatch {
            expected: n,
            got: policy.len(),
        }];
    }
    let mut out = Vec::new();
    for i in 0..n {
        if policy.route(i).is_none() {
            out.push(policy.structural_violation(i));
        }
    }
    for (i, vp) in viewpoints.iter().enumerate() {
        if policy.compute_local[i] && !vp.task.local_compute_feasible(dev.cpu_freq) {
            out.push(Violation::InfeasibleCompute {
                viewpoint: i,
                latency: vp.task.compute_latency(dev.cpu_freq),
                deadline: vp.task.deadline,
            });
        }
    }
    let cache = cache_usage(policy, viewpoints);
    if exceeds(cache, dev.cache_bits) {
        out.push(Violation::CacheOverflow {
            used: cache,
            budget: dev.cache_bits,
            overflow: cache - dev.cache_bits,
        });
    }
    let energy = energy_usage(policy, viewpoints, dev);
    if exceeds(energy, dev.energy_budget) {
        out.push(Violation::EnergyOverflow {
            used: energy,
            budget: dev.energy_budget,
            overflow: energy - dev.energy_budget,
        });
    }
    out
}
