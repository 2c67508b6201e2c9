use rand::Rng;

use super::{MmkpInstance, RelaxedAssignment, ROUTES};
use crate::model::{self, JointPolicy, ServiceRoute};

/// Rounds each row to its largest entry (ties to the lower route) and then
/// demotes viewpoints to MEC computing until both budgets hold.
pub fn round_and_repair(x: &RelaxedAssignment, inst: &MmkpInstance) -> JointPolicy {
    let mut routes: Vec<ServiceRoute> = x
        .0
        .iter()
        .zip(&inst.enabled)
        .map(|(row, en)| {
            let mut best = ServiceRoute::MecCompute.index();
            let mut best_val = f64::NEG_INFINITY;
            for j in 0..ROUTES {
                if en[j] && row[j] > best_val {
                    best = j;
                    best_val = row[j];
                }
            }
            ServiceRoute::from_index(best).expect("route index in range")
        })
        .collect();
    repair(&mut routes, inst);
    JointPolicy::from_routes(&routes)
}

/// Demotes to route 4 the viewpoint with the smallest profit per unit of the
/// violated resource, cache first and then energy, until both fit.
pub(crate) fn repair(routes: &mut [ServiceRoute], inst: &MmkpInstance) {
    demote_until_fits(routes, inst, &inst.cache_costs, inst.cache_budget);
    demote_until_fits(routes, inst, &inst.energy_costs, inst.energy_budget);
}

fn demote_until_fits(routes: &mut [ServiceRoute], inst: &MmkpInstance, costs: &[[f64; ROUTES]], budget: f64) {
    let used = |routes: &[ServiceRoute]| -> f64 {
        routes
            .iter()
            .enumerate()
            .map(|(i, r)| costs[i][r.index()])
            .sum()
    };
    while model::exceeds(used(routes), budget) {
        let victim = routes
            .iter()
            .enumerate()
            .filter(|(i, r)| costs[*i][r.index()] > 0.0)
            .map(|(i, r)| (i, inst.profits[i][r.index()] / costs[i][r.index()]))
            .fold(None, |best: Option<(usize, f64)>, (i, ratio)| match best {
                Some((_, b)) if b <= ratio => best,
                _ => Some((i, ratio)),
            });
        match victim {
            Some((i, _)) => routes[i] = ServiceRoute::MecCompute,
            None => break,
        }
    }
}

/// Repeatedly moves one viewpoint to the route with the largest profit gain
/// that keeps both budgets, until no such move exists.
pub fn improve_greedily(routes: &mut [ServiceRoute], inst: &MmkpInstance) {
    loop {
        let cache = inst.cache_used(routes);
        let energy = inst.energy_used(routes);
        let mut best: Option<(f64, usize, usize)> = None;
        for (i, r) in routes.iter().enumerate() {
            let cur = r.index();
            for j in 0..ROUTES {
                let gain = inst.profits[i][j] - inst.profits[i][cur];
                if !inst.enabled[i][j] || gain <= 0.0 || best.is_some_and(|(g, _, _)| g >= gain) {
                    continue;
                }
                let c = cache - inst.cache_costs[i][cur] + inst.cache_costs[i][j];
                let e = energy - inst.energy_costs[i][cur] + inst.energy_costs[i][j];
                if !model::exceeds(c, inst.cache_budget) && !model::exceeds(e, inst.energy_budget) {
                    best = Some((gain, i, j));
                }
            }
        }
        match best {
            Some((_, i, j)) => routes[i] = ServiceRoute::from_index(j).expect("route index in range"),
            None => break,
        }
    }
}

/// A random binary starting point: a uniformly drawn enabled route per
/// viewpoint, repaired to feasibility.
pub fn initial_feasible_point<R: Rng + ?Sized>(inst: &MmkpInstance, rng: &mut R) -> RelaxedAssignment {
    let mut routes: Vec<ServiceRoute> = inst
        .enabled
        .iter()
        .map(|en| {
            let choices: Vec<usize> = (0..ROUTES).filter(|&j| en[j]).collect();
            let j = choices[rng.gen_range(0..choices.len())];
            ServiceRoute::from_index(j).expect("route index in range")
        })
        .collect();
    repair(&mut routes, inst);
    RelaxedAssignment::from_routes(&routes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::heterogeneous::build_mmkp;
    use crate::model::{DeviceCapability, ProjectionTask, Viewpoint};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn two_viewpoints(cache_bits: f64, energy: f64) -> (Vec<Viewpoint>, DeviceCapability, MmkpInstance) {
        let vps = vec![
            Viewpoint {
                task: ProjectionTask::new(10e6, 20e6, 10.0, 0.02).unwrap(),
                popularity: 0.6,
            },
            Viewpoint {
                task: ProjectionTask::new(5e6, 10e6, 10.0, 0.02).unwrap(),
                popularity: 0.4,
            },
        ];
        let dev = DeviceCapability::new(cache_bits, energy, 5e10, 1e-27).unwrap();
        let inst = build_mmkp(&vps, &dev);
        (vps, dev, inst)
    }

    #[test]
    fn improvement_fills_spare_budget_and_stays_feasible() {
        let (vps, dev, inst) = two_viewpoints(12e6, 1e9);
        let mut routes = vec![ServiceRoute::MecCompute; 2];
        improve_greedily(&mut routes, &inst);
        assert_eq!(routes[0], ServiceRoute::LocalComputeWith2dCache);
        assert!(model::validate_policy(&JointPolicy::from_routes(&routes), &vps, &dev).is_empty());
        let before = routes.clone();
        improve_greedily(&mut routes, &inst);
        assert_eq!(routes, before);
    }

    #[test]
    fn binary_feasible_is_identity() {
        let (_, _, inst) = two_viewpoints(1e9, 1e9);
        let routes = [ServiceRoute::LocalComputeWith2dCache, ServiceRoute::Local3dCache];
        let policy = round_and_repair(&RelaxedAssignment::from_routes(&routes), &inst);
        assert_eq!(policy, JointPolicy::from_routes(&routes));
    }

    #[test]
    fn argmax_row() {
        let (_, _, inst) = two_viewpoints(1e9, 1e9);
        let x = RelaxedAssignment(vec![[0.4, 0.35, 0.15, 0.1], [0.25, 0.25, 0.25, 0.25]]);
        let policy = round_and_repair(&x, &inst);
        assert_eq!(policy.route(0), Some(ServiceRoute::Local3dCache));
        assert_eq!(policy.route(1), Some(ServiceRoute::Local3dCache));
    }

    #[test]
    fn overflow_demotes_smallest_ratio() {
        // room for viewpoint 0's 3D FOV only; viewpoint 1 has ratio
        // 0.4*R_S/D^O = 0.4/tau against 0.6/tau for viewpoint 0
        let (vps, dev, inst) = two_viewpoints(20e6, 0.0);
        let x = RelaxedAssignment::from_routes(&[ServiceRoute::Local3dCache; 2]);
        let policy = round_and_repair(&x, &inst);
        assert_eq!(policy.route(0), Some(ServiceRoute::Local3dCache));
        assert_eq!(policy.route(1), Some(ServiceRoute::MecCompute));
        assert!(model::validate_policy(&policy, &vps, &dev).is_empty());
    }

    #[test]
    fn zero_budgets_start_all_mec() {
        let (_, _, inst) = two_viewpoints(0.0, 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let x = initial_feasible_point(&inst, &mut rng);
            assert_eq!(x, RelaxedAssignment::from_routes(&[ServiceRoute::MecCompute; 2]));
        }
    }

    #[test]
    fn ample_budgets_keep_random_routes() {
        let (_, _, inst) = two_viewpoints(1e12, 1e12);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut seen = std::collections::HashSet::new();
        for _ in 0..200 {
            let x = initial_feasible_point(&inst, &mut rng);
            assert!(x.is_binary(0.0));
            for row in &x.0 {
                seen.insert(row.iter().position(|&v| v == 1.0).unwrap());
            }
        }
        assert_eq!(seen.len(), 4);
    }

    #[test]
    fn seeded_start_is_reproducible() {
        let (_, _, inst) = two_viewpoints(15e6, 5.0);
        let a = initial_feasible_point(&inst, &mut ChaCha8Rng::seed_from_u64(42));
        let b = initial_feasible_point(&inst, &mut ChaCha8Rng::seed_from_u64(42));
        assert_eq!(a, b);
    }
}
