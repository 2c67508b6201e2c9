//! Greedy baselines: ratio-sorted packing of 3D FOVs, and of 2D FOVs plus
//! local projection.

use crate::model::{self, DeviceCapability, JointPolicy, ServiceRoute, Viewpoint};

fn sorted_by_ratio(candidates: impl Iterator<Item = (usize, f64)>) -> Vec<usize> {
    let mut items: Vec<(usize, f64)> = candidates.collect();
    items.sort_by(|a, b| b.1.total_cmp(&a.1));
    items.into_iter().map(|(i, _)| i).collect()
}

fn fits(used: f64, add: f64, budget: f64) -> bool {
    !model::exceeds(used + add, budget)
}

/// Packs `route` onto `order` while each item's cost fits the remaining
/// budget, stopping at the first item that does not.
fn pack(routes: &mut [ServiceRoute], order: &[usize], route: ServiceRoute, cost: impl Fn(usize) -> f64, used: &mut f64, budget: f64) {
    for &i in order {
        let c = cost(i);
        if !fits(*used, c, budget) {
            break;
        }
        *used += c;
        routes[i] = route;
    }
}

/// Caches 3D FOVs in descending `P R^S / D^O` until the next one would
/// overflow the cache; every other viewpoint uses MEC computing.
pub fn greedy_3d_caching(viewpoints: &[Viewpoint], dev: &DeviceCapability) -> JointPolicy {
    let mut routes = vec![ServiceRoute::MecCompute; viewpoints.len()];
    let order = sorted_by_ratio(
        viewpoints
            .iter()
            .enumerate()
            .map(|(i, vp)| (i, vp.popularity * model::rate_mec(&vp.task) / vp.task.d_out())),
    );
    let mut used = 0.0;
    pack(&mut routes, &order, ServiceRoute::Local3dCache, |i| viewpoints[i].task.d_out(), &mut used, dev.cache_bits);
    JointPolicy::from_routes(&routes)
}

/// Two-phase greedy over caching and computing.
///
/// Phase one caches 2D FOVs with local projection in descending
/// `P R^S / (D^I + P k D^I w f^2)` and stops at the first viewpoint that
/// overflows either budget. If that stop came from the energy budget, the
/// leftover cache is packed with 3D FOVs of the untouched viewpoints;
/// otherwise the leftover energy is packed with local projection of
/// uncached 2D FOVs, ranked by rate saved per joule and skipping viewpoints
/// where local projection would raise the rate.
pub fn greedy_caching_computing(viewpoints: &[Viewpoint], dev: &DeviceCapability) -> JointPolicy {
    let n = viewpoints.len();
    let mut routes = vec![ServiceRoute::MecCompute; n];
    let energy = |i: usize| viewpoints[i].popularity * viewpoints[i].task.compute_energy(dev);
    let local_rate: Vec<Option<f64>> = viewpoints
        .iter()
        .map(|vp| model::rate_local_compute(&vp.task, dev).ok())
        .collect();

    let phase1 = sorted_by_ratio(viewpoints.iter().enumerate().filter(|(i, _)| local_rate[*i].is_some()).map(|(i, vp)| {
        let rs = model::rate_mec(&vp.task);
        (i, vp.popularity * rs / (vp.task.d_in() + energy(i)))
    }));
    let mut cache_used = 0.0;
    let mut energy_used = 0.0;
    let mut stopped_on_cache = false;
    for &i in &phase1 {
        let d = viewpoints[i].task.d_in();
        let cache_ok = fits(cache_used, d, dev.cache_bits);
        let energy_ok = fits(energy_used, energy(i), dev.energy_budget);
        if !(cache_ok && energy_ok) {
            stopped_on_cache = !cache_ok;
            break;
        }
        cache_used += d;
        energy_used += energy(i);
        routes[i] = ServiceRoute::LocalComputeWith2dCache;
    }

    if !stopped_on_cache {
        let order = sorted_by_ratio(
            viewpoints
                .iter()
                .enumerate()
                .filter(|(i, _)| routes[*i] == ServiceRoute::MecCompute)
                .map(|(i, vp)| (i, vp.popularity * model::rate_mec(&vp.task) / vp.task.d_out())),
        );
        pack(&mut routes, &order, ServiceRoute::Local3dCache, |i| viewpoints[i].task.d_out(), &mut cache_used, dev.cache_bits);
    } else {
        let order = sorted_by_ratio(
            viewpoints
                .iter()
                .enumerate()
                .filter(|(i, _)| routes[*i] == ServiceRoute::MecCompute)
                .filter_map(|(i, vp)| {
                    let rv = local_rate[i]?;
                    let gain = vp.popularity * (model::rate_mec(&vp.task) - rv);
                    let e = energy(i);
                    (gain > 0.0 && e > 0.0).then(|| (i, gain / e))
                }),
        );
        pack(&mut routes, &order, ServiceRoute::LocalComputeNoCache, energy, &mut energy_used, dev.energy_budget);
    }
    JointPolicy::from_routes(&routes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ProjectionTask;

    fn task(d_in: f64) -> ProjectionTask {
        ProjectionTask::new(d_in, 2.0 * d_in, 10.0, 0.02).unwrap()
    }

    fn uniform(n: usize) -> Vec<Viewpoint> {
        (0..n)
            .map(|_| Viewpoint {
                task: task(10e6),
                popularity: 1.0 / n as f64,
            })
            .collect()
    }

    fn routes(p: &JointPolicy) -> Vec<ServiceRoute> {
        p.routes().unwrap()
    }

    #[test]
    fn uniform_caches_prefix() {
        let vps = uniform(5);
        let dev = DeviceCapability::new(65e6, 0.0, 5e10, 1e-27).unwrap();
        let got = routes(&greedy_3d_caching(&vps, &dev));
        use ServiceRoute::*;
        assert_eq!(got, vec![Local3dCache, Local3dCache, Local3dCache, MecCompute, MecCompute]);
    }

    #[test]
    fn zero_cache_is_all_mec() {
        let vps = uniform(4);
        let dev = DeviceCapability::new(0.0, 0.0, 5e10, 1e-27).unwrap();
        assert_eq!(greedy_3d_caching(&vps, &dev), JointPolicy::all_mec(4));
    }

    #[test]
    fn ratio_order_with_exact_fit() {
        // ratios P/tau: 0.2, 0.5, 0.3 -> order 1, 2, 0
        let vps = vec![
            Viewpoint { task: task(10e6), popularity: 0.2 },
            Viewpoint { task: task(10e6), popularity: 0.5 },
            Viewpoint { task: task(10e6), popularity: 0.3 },
        ];
        let dev = DeviceCapability::new(40e6, 0.0, 5e10, 1e-27).unwrap();
        use ServiceRoute::*;
        assert_eq!(routes(&greedy_3d_caching(&vps, &dev)), vec![MecCompute, Local3dCache, Local3dCache]);
    }

    #[test]
    fn stops_at_first_overflow() {
        let vps = vec![
            Viewpoint { task: task(10e6), popularity: 0.5 },
            Viewpoint { task: task(30e6), popularity: 0.3 },
            Viewpoint { task: task(1e6), popularity: 0.2 },
        ];
        let dev = DeviceCapability::new(30e6, 0.0, 5e10, 1e-27).unwrap();
        use ServiceRoute::*;
        assert_eq!(routes(&greedy_3d_caching(&vps, &dev)), vec![Local3dCache, MecCompute, MecCompute]);
    }

    #[test]
    fn no_energy_matches_3d_greedy() {
        let vps: Vec<Viewpoint> = [0.4, 0.3, 0.2, 0.1]
            .iter()
            .enumerate()
            .map(|(i, &p)| Viewpoint {
                task: task((i + 1) as f64 * 3e6),
                popularity: p,
            })
            .collect();
        let dev = DeviceCapability::new(25e6, 0.0, 5e10, 1e-27).unwrap();
        assert_eq!(greedy_caching_computing(&vps, &dev), greedy_3d_caching(&vps, &dev));
    }

    #[test]
    fn no_cache_packs_local_projection() {
        let vps = uniform(4);
        // energy per viewpoint: 0.25 * 1e-27 * 1e8 * 2.5e21 = 62.5 J
        let dev = DeviceCapability::new(0.0, 130.0, 5e10, 1e-27).unwrap();
        use ServiceRoute::*;
        assert_eq!(
            routes(&greedy_caching_computing(&vps, &dev)),
            vec![LocalComputeNoCache, LocalComputeNoCache, MecCompute, MecCompute]
        );
    }

    #[test]
    fn local_projection_skipped_when_it_raises_rate() {
        // f below the crossover, so local projection needs more rate than MEC
        let vps = uniform(2);
        let dev = DeviceCapability::new(0.0, 1e9, 8e9, 1e-27).unwrap();
        assert!(vps[0].task.local_compute_feasible(dev.cpu_freq));
        assert_eq!(greedy_caching_computing(&vps, &dev), JointPolicy::all_mec(2));
    }

    #[test]
    fn energy_stop_fills_cache_with_3d() {
        let vps = uniform(4);
        // one 2D-cached projection fits the energy budget, then 3D FOVs fill the cache
        let dev = DeviceCapability::new(50e6, 70.0, 5e10, 1e-27).unwrap();
        let p = greedy_caching_computing(&vps, &dev);
        use ServiceRoute::*;
        assert_eq!(routes(&p), vec![LocalComputeWith2dCache, Local3dCache, Local3dCache, MecCompute]);
        assert!(model::validate_policy(&p, &vps, &dev).is_empty());
    }

    #[test]
    fn popularity_scaling_keeps_choice() {
        let base = [0.1, 0.4, 0.2, 0.3];
        let skewed = [0.05, 0.2, 0.1, 0.65];
        let make = |p: &[f64]| -> Vec<Viewpoint> {
            p.iter()
                .enumerate()
                .map(|(i, &p)| Viewpoint {
                    task: task((i + 2) as f64 * 2e6),
                    popularity: p,
                })
                .collect()
        };
        let dev = DeviceCapability::new(20e6, 40.0, 5e10, 1e-27).unwrap();
        let a = make(&base);
        let mut b = make(&base);
        for vp in &mut b {
            vp.popularity *= 3.0;
        }
        assert_eq!(greedy_3d_caching(&a, &dev), greedy_3d_caching(&b, &dev));
        let c = make(&skewed);
        assert!(model::validate_policy(&greedy_caching_computing(&c, &dev), &c, &dev).is_empty());
    }
}
