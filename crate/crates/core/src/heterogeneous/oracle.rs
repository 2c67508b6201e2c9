use super::{MmkpInstance, ROUTES};
use crate::error::{Error, Result};
use crate::model::{self, JointPolicy, ServiceRoute};

pub const MAX_ORACLE_VIEWPOINTS: usize = 14;

struct Search<'a> {
    inst: &'a MmkpInstance,
    /// `bound[i]` = sum over viewpoints `i..` of their best enabled profit.
    bound: Vec<f64>,
    current: Vec<usize>,
    best: Option<(f64, Vec<usize>)>,
}

impl Search<'_> {
    fn visit(&mut self, i: usize, profit: f64, cache: f64, energy: f64) {
        if let Some((best, _)) = &self.best {
            if profit + self.bound[i] <= *best {
                return;
            }
        }
        if i == self.inst.n() {
            self.best = Some((profit, self.current.clone()));
            return;
        }
        for j in 0..ROUTES {
            if !self.inst.enabled[i][j] {
                continue;
            }
            let c = cache + self.inst.cache_costs[i][j];
            let e = energy + self.inst.energy_costs[i][j];
            if model::exceeds(c, self.inst.cache_budget) || model::exceeds(e, self.inst.energy_budget) {
                continue;
            }
            self.current[i] = j;
            self.visit(i + 1, profit + self.inst.profits[i][j], c, e);
        }
    }
}

/// Exhaustive depth-first search for the profit-maximal feasible route
/// assignment. Routes are tried in ascending order and only strict
/// improvements replace the incumbent, so ties resolve to the
/// lexicographically smallest route vector. Returns the policy and its
/// average rate.
pub fn brute_force_mmkp(inst: &MmkpInstance) -> Result<(JointPolicy, f64)> {
    let n = inst.n();
    if n > MAX_ORACLE_VIEWPOINTS {
        return Err(Error::TooLarge {
            n,
            max: MAX_ORACLE_VIEWPOINTS,
        });
    }
    let mut bound = vec![0.0; n + 1];
    for i in (0..n).rev() {
        let best = (0..ROUTES)
            .filter(|&j| inst.enabled[i][j])
            .map(|j| inst.profits[i][j])
            .fold(f64::NEG_INFINITY, f64::max);
        bound[i] = bound[i + 1] + best;
    }
    let mut search = Search {
        inst,
        bound,
        current: vec![ServiceRoute::MecCompute.index(); n],
        best: None,
    };
    search.visit(0, 0.0, 0.0, 0.0);
    let (_, choice) = search.best.expect("all-MEC assignment is always feasible");
    let routes: Vec<ServiceRoute> = choice
        .into_iter()
        .map(|j| ServiceRoute::from_index(j).expect("route index in range"))
        .collect();
    let rate = inst.rate(&routes);
    Ok((JointPolicy::from_routes(&routes), rate))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::heterogeneous::build_mmkp;
    use crate::homogeneous::{brute_force_problem2, HomogeneousInstance};
    use crate::model::{DeviceCapability, ProjectionTask, Viewpoint};

    fn exhaustive(inst: &MmkpInstance) -> (Vec<ServiceRoute>, f64) {
        let n = inst.n();
        let mut best: Option<(Vec<ServiceRoute>, f64)> = None;
        for code in 0..ROUTES.pow(n as u32) {
            let routes: Vec<ServiceRoute> = (0..n)
                .map(|i| ServiceRoute::from_index(code / ROUTES.pow((n - 1 - i) as u32) % ROUTES).unwrap())
                .collect();
            if !inst.feasible(&routes) {
                continue;
            }
            let p = inst.profit(&routes);
            if best.as_ref().is_none_or(|(_, b)| p > *b) {
                best = Some((routes, p));
            }
        }
        let (routes, _) = best.unwrap();
        let rate = inst.rate(&routes);
        (routes, rate)
    }

    #[test]
    fn single_ample_viewpoint_caches_3d() {
        let vps = vec![Viewpoint {
            task: ProjectionTask::new(10e6, 20e6, 10.0, 0.02).unwrap(),
            popularity: 1.0,
        }];
        let dev = DeviceCapability::new(1e9, 1e9, 5e10, 1e-27).unwrap();
        let (policy, rate) = brute_force_mmkp(&build_mmkp(&vps, &dev)).unwrap();
        assert_eq!(policy.route(0), Some(ServiceRoute::Local3dCache));
        assert_eq!(rate, 0.0);
    }

    #[test]
    fn mixes_route_one_and_two() {
        // cache holds one 3D FOV (20e6) or 2D FOVs; energy allows one projection
        let vps = vec![
            Viewpoint {
                task: ProjectionTask::new(10e6, 20e6, 10.0, 0.02).unwrap(),
                popularity: 0.5,
            },
            Viewpoint {
                task: ProjectionTask::new(10e6, 20e6, 10.0, 0.02).unwrap(),
                popularity: 0.5,
            },
        ];
        let dev = DeviceCapability::new(30e6, 125.0, 5e10, 1e-27).unwrap();
        let inst = build_mmkp(&vps, &dev);
        let (policy, rate) = brute_force_mmkp(&inst).unwrap();
        let (routes, want) = exhaustive(&inst);
        assert_eq!(policy.routes().unwrap(), routes);
        assert_eq!(routes, vec![ServiceRoute::Local3dCache, ServiceRoute::LocalComputeWith2dCache]);
        assert_eq!(rate, want);
        assert_eq!(rate, 0.0);
    }

    #[test]
    fn matches_exhaustive_enumeration() {
        let pops = [0.35, 0.25, 0.2, 0.12, 0.08];
        let vps: Vec<Viewpoint> = pops
            .iter()
            .enumerate()
            .map(|(i, &p)| Viewpoint {
                task: ProjectionTask::new((3 + 4 * i) as f64 * 1e6, (6 + 8 * i) as f64 * 1e6, 10.0, 0.02).unwrap(),
                popularity: p,
            })
            .collect();
        for (cache, energy) in [(0.0, 0.0), (20e6, 10.0), (40e6, 60.0), (13e6, 200.0)] {
            let dev = DeviceCapability::new(cache, energy, 5e10, 1e-27).unwrap();
            let inst = build_mmkp(&vps, &dev);
            let (policy, rate) = brute_force_mmkp(&inst).unwrap();
            let (routes, want) = exhaustive(&inst);
            assert_eq!(policy.routes().unwrap(), routes);
            assert!((rate - want).abs() <= 1e-9 * inst.mec_rate);
            let direct = model::average_rate(&policy, &vps, &dev).unwrap();
            assert!((rate - direct).abs() <= 1e-9 * inst.mec_rate);
        }
    }

    #[test]
    fn agrees_with_homogeneous_oracle() {
        let task = ProjectionTask::new(10e6, 20e6, 10.0, 0.02).unwrap();
        for (cache_units, energy) in [(0, 0.0), (3, 5.0), (4, 20.0), (7, 11.0), (20, 0.0)] {
            let dev = DeviceCapability::new(0.0, energy, 5e10, 1e-27).unwrap();
            let homog = HomogeneousInstance::new(task, 10, cache_units, dev).unwrap();
            let (_, want) = brute_force_problem2(&homog).unwrap();
            let vps = homog.viewpoints();
            let inst = build_mmkp(&vps, &homog.dev);
            let (_, rate) = brute_force_mmkp(&inst).unwrap();
            assert!((rate - want).abs() <= 1e-9 * want.max(1.0), "C={cache_units} E={energy}: {rate} vs {want}");
        }
    }

    #[test]
    fn rejects_large_instances() {
        let vps: Vec<Viewpoint> = (0..15)
            .map(|_| Viewpoint {
                task: ProjectionTask::new(1e6, 2e6, 10.0, 0.02).unwrap(),
                popularity: 1.0 / 15.0,
            })
            .collect();
        let dev = DeviceCapability::new(0.0, 0.0, 5e10, 1e-27).unwrap();
        let err = brute_force_mmkp(&build_mmkp(&vps, &dev)).unwrap_err();
        assert!(matches!(err, Error::TooLarge { n: 15, max: 14 }));
    }
}
