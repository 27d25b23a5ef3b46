mod common;

use common::{dense_min_energy, random_multigraph};
use dirflow::electrical::{energy, repair_conservation, ElectricalSolver, ResistanceVector};
use dirflow::{FlowAssignment, FlowNetwork};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn energy_matches_dense_least_squares() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..40 {
        let n = rng.gen_range(2..=8);
        let extra = rng.gen_range(0..12);
        let g = random_multigraph(&mut rng, n, extra);
        let r: Vec<f64> = (0..g.edge_count()).map(|_| rng.gen_range(0.1..10.0)).collect();
        let value = rng.gen_range(0.5..5.0);
        let (min, _) = dense_min_energy(&g, &r, value).expect("connected");
        let mut solver = ElectricalSolver::new(&g, 1e-10).unwrap();
        let out = solver.solve(&g, &ResistanceVector::new(r).unwrap(), value).unwrap();
        assert!(out.energy <= min * (1.0 + 1e-8), "{} vs {min}", out.energy);
        assert!(out.energy >= min * (1.0 - 1e-8));
        assert!((out.flow.value(&g).unwrap() - value).abs() <= 1e-9 * value);
    }
}

/// Adds `delta` around a random closed walk in the support graph.
fn perturb_cycle(rng: &mut ChaCha8Rng, g: &impl FlowNetwork, f: &mut [f64], delta: f64) -> bool {
    let n = g.vertex_count();
    let mut adj = vec![Vec::new(); n];
    for i in 0..g.edge_count() {
        let (a, b) = g.endpoints(i);
        adj[a].push((i, b, 1.0));
        adj[b].push((i, a, -1.0));
    }
    let start = rng.gen_range(0..n);
    let mut v = start;
    let mut walk = Vec::new();
    let mut seen = vec![usize::MAX; n];
    seen[v] = 0;
    for _ in 0..4 * n {
        if adj[v].is_empty() {
            return false;
        }
        let (e, w, sign) = adj[v][rng.gen_range(0..adj[v].len())];
        walk.push((e, sign));
        v = w;
        if seen[v] != usize::MAX {
            for &(e, sign) in &walk[seen[v]..] {
                f[e] += sign * delta;
            }
            return true;
        }
        seen[v] = walk.len();
    }
    false
}

#[test]
fn cycle_perturbations_raise_energy() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..30 {
        let n = rng.gen_range(3..=8);
        let extra = rng.gen_range(2..10);
        let g = random_multigraph(&mut rng, n, extra);
        let r: Vec<f64> = (0..g.edge_count()).map(|_| rng.gen_range(0.1..10.0)).collect();
        let rv = ResistanceVector::new(r).unwrap();
        let mut solver = ElectricalSolver::new(&g, 1e-12).unwrap();
        let out = solver.solve(&g, &rv, 2.0).unwrap();
        for _ in 0..10 {
            let mut f = out.flow.values().to_vec();
            let delta = rng.gen_range(-0.5..0.5);
            if !perturb_cycle(&mut rng, &g, &mut f, delta) {
                continue;
            }
            let f = FlowAssignment::new(f);
            assert!((f.value(&g).unwrap() - 2.0).abs() < 1e-9);
            assert!(energy(&f, &rv) >= out.energy * (1.0 - 1e-10));
        }
    }
}

#[test]
fn repair_keeps_energy_close() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..30 {
        let n = rng.gen_range(3..=8);
        let g = random_multigraph(&mut rng, n, 6);
        let r: Vec<f64> = (0..g.edge_count()).map(|_| rng.gen_range(0.5..2.0)).collect();
        let rv = ResistanceVector::new(r.clone()).unwrap();
        let mut solver = ElectricalSolver::new(&g, 1e-12).unwrap();
        let out = solver.solve(&g, &rv, 1.0).unwrap();
        let noisy: Vec<f64> = out.flow.values().iter().map(|x| x + rng.gen_range(-1e-4..1e-4)).collect();
        let noisy = FlowAssignment::new(noisy);
        let fixed = repair_conservation(&noisy, &g, 1.0).unwrap();
        assert!(fixed.flow.max_interior_residual(&g) <= 1e-12);
        let l1: f64 = fixed.flow.values().iter().zip(noisy.values()).map(|(a, b)| (a - b).abs()).sum();
        assert!(fixed.max_correction <= l1 + 1e-15);
        let r_max = r.iter().cloned().fold(0.0, f64::max);
        let f_max = fixed.flow.max_abs().max(noisy.max_abs());
        let bound = 2.0 * l1 * f_max * r_max + r_max * l1 * l1;
        assert!((energy(&fixed.flow, &rv) - energy(&noisy, &rv)).abs() <= bound + 1e-12);
    }
}

#[test]
fn solves_are_deterministic() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let g = random_multigraph(&mut rng, 8, 12);
    let rv = ResistanceVector::new((0..g.edge_count()).map(|i| 1.0 + i as f64 * 0.1).collect()).unwrap();
    let a = ElectricalSolver::new(&g, 1e-10).unwrap().solve(&g, &rv, 3.0).unwrap();
    let b = ElectricalSolver::new(&g, 1e-10).unwrap().solve(&g, &rv, 3.0).unwrap();
    assert_eq!(a.flow, b.flow);
    assert_eq!(a.energy.to_bits(), b.energy.to_bits());
}
