//! Replays a policy against an i.i.d. request stream and measures the
//! empirical rate, latency and energy per request.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{self, DeviceCapability, JointPolicy, ServiceRoute, Viewpoint};

const LATENCY_RTOL: f64 = 1e-12;
const CHUNK: usize = 1 << 16;

/// Requested viewpoint indices (zero-based) drawn from the popularity
/// distribution.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RequestStream {
    pub seed: u64,
    pub requests: Vec<u32>,
}

impl RequestStream {
    pub fn len(&self) -> usize {
        self.requests.len()
    }

    pub fn is_empty(&self) -> bool {
        self.requests.is_empty()
    }

    /// Number of requests for each of `n` viewpoints.
    pub fn frequencies(&self, n: usize) -> Vec<u64> {
        count(&self.requests, n)
    }
}

fn count(requests: &[u32], n: usize) -> Vec<u64> {
    requests
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut c = vec![0u64; n];
            for &i in chunk {
                c[i as usize] += 1;
            }
            c
        })
        .reduce(
            || vec![0u64; n],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
                a
            },
        )
}

/// Draws `t` requests by inverse-CDF sampling from a seeded ChaCha8 stream.
pub fn generate_stream(popularities: &[f64], t: usize, seed: u64) -> Result<RequestStream> {
    if popularities.is_empty() {
        return Err(Error::BadDistribution("no viewpoints".into()));
    }
    if t == 0 {
        return Err(Error::BadDistribution("stream length must be at least 1".into()));
    }
    if let Some((i, p)) = popularities
        .iter()
        .enumerate()
        .find(|(_, p)| !(p.is_finite() && (0.0..=1.0).contains(*p)))
    {
        return Err(Error::BadDistribution(format!("popularity {i} is {p}")));
    }
    let mut cdf = Vec::with_capacity(popularities.len());
    let mut acc = 0.0;
    for p in popularities {
        acc += p;
        cdf.push(acc);
    }
    if (acc - 1.0).abs() > 1e-12 {
        return Err(Error::BadDistribution(format!("popularities sum to {acc}")));
    }
    let last = popularities.iter().rposition(|&p| p > 0.0).expect("sum is one");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let requests = (0..t)
        .map(|_| {
            let u: f64 = rng.gen();
            cdf.partition_point(|&c| c <= u).min(last) as u32
        })
        .collect();
    Ok(RequestStream { seed, requests })
}

/// Aggregate measurements of one simulation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub requests: u64,
    pub empirical_avg_rate: f64,
    pub rate_std_error: f64,
    /// Requests served by routes 1 to 4.
    pub route_counts: [u64; 4],
    pub mean_energy: f64,
    pub energy_std_error: f64,
    pub deadline_violations: u64,
    pub max_latency: f64,
    /// Average rate of the policy under the true popularities.
    pub expected_rate: f64,
    /// Average energy per request under the true popularities.
    pub expected_energy: f64,
}

impl SimResult {
    /// Per-route request histogram as CSV.
    pub fn route_histogram_csv(&self) -> String {
        let mut out = String::from("route,requests,share\n");
        for (j, &c) in self.route_counts.iter().enumerate() {
            out.push_str(&format!(
                "{},{},{}\n",
                j + 1,
                c,
                crate::fmt_num(c as f64 / self.requests as f64)
            ));
        }
        out
    }
}

struct Service {
    route: ServiceRoute,
    rate: f64,
    latency: f64,
    energy: f64,
}

fn service(i: usize, route: ServiceRoute, vp: &Viewpoint, dev: &DeviceCapability) -> Result<Service> {
    let t = &vp.task;
    let compute = t.compute_latency(dev.cpu_freq);
    let infeasible = || Error::InfeasibleRoute {
        viewpoint: i,
        route: route as u8,
    };
    let (rate, latency, energy) = match route {
        ServiceRoute::Local3dCache => (0.0, 0.0, 0.0),
        ServiceRoute::LocalComputeWith2dCache => {
            if !t.local_compute_feasible(dev.cpu_freq) {
                return Err(infeasible());
            }
            (0.0, compute, t.compute_energy(dev))
        }
        ServiceRoute::LocalComputeNoCache => {
            let rv = model::rate_local_compute(t, dev).map_err(|_| infeasible())?;
            (rv, t.d_in() / rv + compute, t.compute_energy(dev))
        }
        ServiceRoute::MecCompute => {
            let rs = model::rate_mec(t);
            (rs, t.d_out() / rs, 0.0)
        }
    };
    Ok(Service {
        route,
        rate,
        latency,
        energy,
    })
}

/// Mean and standard error of a discrete sample given as `(weight, value)`
/// levels with weights summing to one.
fn moments(levels: &[(f64, f64)], t: f64) -> (f64, f64) {
    let mean: f64 = levels.iter().map(|(w, v)| w * v).sum();
    let second: f64 = levels.iter().map(|(w, v)| w * (v - mean) * (v - mean)).sum();
    (mean, (second / t).sqrt())
}

/// Serves every request in `stream` by the route `policy` assigns to its
/// viewpoint, charging that route's minimum rate.
pub fn simulate(
    policy: &JointPolicy,
    viewpoints: &[Viewpoint],
    dev: &DeviceCapability,
    stream: &RequestStream,
) -> Result<SimResult> {
    if policy.len() != viewpoints.len() {
        return Err(Error::ShapeMismatch {
            expected: viewpoints.len(),
            got: policy.len(),
        });
    }
    if stream.is_empty() {
        return Err(Error::BadDistribution("empty request stream".into()));
    }
    let routes = policy.routes()?;
    let services: Vec<Service> = routes
        .iter()
        .zip(viewpoints)
        .enumerate()
        .map(|(i, (&r, vp))| service(i, r, vp, dev))
        .collect::<Result<_>>()?;
    if let Some(&bad) = stream.requests.iter().find(|&&i| i as usize >= viewpoints.len()) {
        return Err(Error::ShapeMismatch {
            expected: viewpoints.len(),
            got: bad as usize + 1,
        });
    }

    let freq = count(&stream.requests, viewpoints.len());
    let t = stream.len() as f64;

    // merge viewpoints with identical rate (or energy) so that a policy with a
    // single level reports that level exactly
    let mut rate_levels: Vec<(u64, f64)> = Vec::new();
    let mut energy_levels: Vec<(u64, f64)> = Vec::new();
    let mut route_counts = [0u64; 4];
    let mut deadline_violations = 0;
    let mut max_latency: f64 = 0.0;
    for (s, (&c, vp)) in services.iter().zip(freq.iter().zip(viewpoints)) {
        if c == 0 {
            continue;
        }
        route_counts[s.route.index()] += c;
        for (levels, v) in [(&mut rate_levels, s.rate), (&mut energy_levels, s.energy)] {
            match levels.iter_mut().find(|(_, x)| *x == v) {
                Some(level) => level.0 += c,
                None => levels.push((c, v)),
            }
        }
        let deadline = vp.task.deadline();
        if s.latency > deadline * (1.0 + LATENCY_RTOL) {
            deadline_violations += c;
        }
        max_latency = max_latency.max(s.latency);
    }
    let weights = |levels: Vec<(u64, f64)>| -> Vec<(f64, f64)> { levels.into_iter().map(|(c, v)| (c as f64 / t, v)).collect() };
    let (empirical_avg_rate, rate_std_error) = moments(&weights(rate_levels), t);
    let (mean_energy, energy_std_error) = moments(&weights(energy_levels), t);

    Ok(SimResult {
        requests: stream.len() as u64,
        empirical_avg_rate,
        rate_std_error,
        route_counts,
        mean_energy,
        energy_std_error,
        deadline_violations,
        max_latency,
        expected_rate: model::average_rate(policy, viewpoints, dev)?,
        expected_energy: model::energy_usage(policy, viewpoints, dev),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::homogeneous::{closed_form, expand_counts, HomogeneousInstance};
    use crate::model::ProjectionTask;

    fn fig3_task() -> ProjectionTask {
        ProjectionTask::new(10e6, 20e6, 10.0, 0.02).unwrap()
    }

    #[test]
    fn single_viewpoint_stream_is_constant() {
        let s = generate_stream(&[1.0], 1000, 4).unwrap();
        assert!(s.requests.iter().all(|&i| i == 0));
    }

    #[test]
    fn stream_is_seeded() {
        let p = [0.2, 0.3, 0.5];
        assert_eq!(generate_stream(&p, 500, 9).unwrap(), generate_stream(&p, 500, 9).unwrap());
        assert_ne!(generate_stream(&p, 500, 9).unwrap(), generate_stream(&p, 500, 10).unwrap());
    }

    #[test]
    fn zero_popularity_never_requested() {
        let s = generate_stream(&[0.5, 0.0, 0.5, 0.0], 100_000, 1).unwrap();
        let f = s.frequencies(4);
        assert_eq!(f[1], 0);
        assert_eq!(f[3], 0);
    }

    #[test]
    fn bad_distributions_rejected() {
        assert!(matches!(generate_stream(&[0.5, 0.4], 10, 0), Err(Error::BadDistribution(_))));
        assert!(matches!(generate_stream(&[1.2, -0.2], 10, 0), Err(Error::BadDistribution(_))));
        assert!(matches!(generate_stream(&[], 10, 0), Err(Error::BadDistribution(_))));
        assert!(matches!(generate_stream(&[1.0], 0, 0), Err(Error::BadDistribution(_))));
    }

    #[test]
    fn all_mec_rate_is_exact() {
        let vps: Vec<Viewpoint> = (0..7)
            .map(|_| Viewpoint {
                task: fig3_task(),
                popularity: 1.0 / 7.0,
            })
            .collect();
        let vps = {
            let mut v = vps;
            let s: f64 = v.iter().map(|x| x.popularity).sum();
            v[6].popularity += 1.0 - s;
            v
        };
        let dev = DeviceCapability::new(0.0, 0.0, 5e10, 1e-27).unwrap();
        let pops: Vec<f64> = vps.iter().map(|v| v.popularity).collect();
        let stream = generate_stream(&pops, 10_000, 3).unwrap();
        let r = simulate(&JointPolicy::all_mec(7), &vps, &dev, &stream).unwrap();
        assert_eq!(r.empirical_avg_rate, 1e9);
        assert_eq!(r.rate_std_error, 0.0);
        assert_eq!(r.route_counts, [0, 0, 0, 10_000]);
        assert_eq!(r.deadline_violations, 0);
    }

    #[test]
    fn local_projection_meets_deadline_exactly() {
        let vps = vec![Viewpoint {
            task: fig3_task(),
            popularity: 1.0,
        }];
        let dev = DeviceCapability::new(0.0, 1e9, 5e10, 1e-27).unwrap();
        let policy = JointPolicy::from_routes(&[ServiceRoute::LocalComputeNoCache]);
        let stream = generate_stream(&[1.0], 100, 0).unwrap();
        let r = simulate(&policy, &vps, &dev, &stream).unwrap();
        assert_eq!(r.deadline_violations, 0);
        assert!((r.max_latency - 0.02).abs() <= 1e-15);
        assert!((r.mean_energy - 250.0).abs() <= 1e-12 * 250.0);
    }

    #[test]
    fn infeasible_local_route_rejected() {
        let vps = vec![Viewpoint {
            task: fig3_task(),
            popularity: 1.0,
        }];
        let dev = DeviceCapability::new(1e9, 1e9, 5e9, 1e-27).unwrap();
        let stream = generate_stream(&[1.0], 10, 0).unwrap();
        for route in [ServiceRoute::LocalComputeWith2dCache, ServiceRoute::LocalComputeNoCache] {
            let err = simulate(&JointPolicy::from_routes(&[route]), &vps, &dev, &stream).unwrap_err();
            assert!(matches!(err, Error::InfeasibleRoute { viewpoint: 0, .. }));
        }
    }

    #[test]
    fn sample_mean_tracks_expected_rate() {
        let task = fig3_task();
        let dev = DeviceCapability::new(0.0, 0.0, 1e10, 1e-27).unwrap();
        let mut homog = HomogeneousInstance::new(task, 20, 6, dev).unwrap();
        homog.dev.energy_budget = 6.0 * 1e-27 * 1e20 * 1e8 / 20.0;
        let sol = closed_form(&homog).unwrap();
        let policy = expand_counts(sol.counts, 20).unwrap();
        let vps = homog.viewpoints();
        let pops: Vec<f64> = vps.iter().map(|v| v.popularity).collect();
        let stream = generate_stream(&pops, 200_000, 12).unwrap();
        let r = simulate(&policy, &vps, &homog.dev, &stream).unwrap();
        assert!((r.empirical_avg_rate - r.expected_rate).abs() <= 5.0 * r.rate_std_error.max(1.0));
        assert!((r.expected_rate - sol.rate).abs() <= 1e-9 * sol.rate);
        assert_eq!(r.deadline_violations, 0);
    }
}
