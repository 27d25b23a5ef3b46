//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use dirflow::generate::{random_network, GenParams};
use dirflow::{Arc, DirectedNetwork, FlowNetwork};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Seeded digraph with `n` in `[n_lo, n_hi]`, at most `m_max` arcs and
/// integer capacities in `1..=cap`.
pub fn small_digraph(seed: u64, n_lo: usize, n_hi: usize, m_max: usize, cap: u64) -> DirectedNetwork {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let n = rng.gen_range(n_lo..=n_hi);
    let m = rng.gen_range(1..=m_max.min(n * (n - 1)));
    random_network(&GenParams {
        n,
        m,
        max_capacity: cap,
        seed,
    })
    .unwrap()
}

/// Minimum over s-t cuts of the undirected capacity, by enumerating every
/// vertex subset.
pub fn brute_min_cut<N: FlowNetwork>(net: &N) -> f64 {
    let n = net.vertex_count();
    let (s, t) = (net.source(), net.sink());
    let free: Vec<usize> = (0..n).filter(|&v| v != s && v != t).collect();
    assert!(free.len() <= 16);
    let mut best = f64::INFINITY;
    for mask in 0u32..(1 << free.len()) {
        let mut side = vec![false; n];
        side[s] = true;
        for (i, &v) in free.iter().enumerate() {
            side[v] = mask >> i & 1 == 1;
        }
        let cut: f64 = (0..net.edge_count())
            .filter(|&i| {
                let (a, b) = net.endpoints(i);
                side[a] != side[b]
            })
            .map(|i| net.capacity(i))
            .sum();
        best = best.min(cut);
    }
    best
}

/// `min_S Σ_{fwd} (2+ε)u − Σ_{bwd} εu` over vertex sets containing s and not t.
pub fn symmetrized_cut_formula(g: &DirectedNetwork, eps: f64) -> f64 {
    let n = g.vertex_count();
    let (s, t) = (g.source(), g.sink());
    let free: Vec<usize> = (0..n).filter(|&v| v != s && v != t).collect();
    let mut best = f64::INFINITY;
    for mask in 0u32..(1 << free.len()) {
        let mut side = vec![false; n];
        side[s] = true;
        for (i, &v) in free.iter().enumerate() {
            side[v] = mask >> i & 1 == 1;
        }
        let mut x = 0.0;
        for a in g.arcs() {
            match (side[a.tail], side[a.head]) {
                (true, false) => x += (2.0 + eps) * a.capacity,
                (false, true) => x -= eps * a.capacity,
                _ => {}
            }
        }
        best = best.min(x);
    }
    best + (1.0 + eps) * g.total_capacity()
}

/// Maximum integral flow by enumerating every assignment `0..=cap` per arc.
pub fn brute_integral_max_flow(g: &DirectedNetwork) -> f64 {
    let caps: Vec<u32> = g.arcs().iter().map(|a| a.capacity as u32).collect();
    let mut f = vec![0u32; caps.len()];
    let mut best = 0i64;
    loop {
        let mut bal = vec![0i64; g.vertex_count()];
        for (a, &x) in g.arcs().iter().zip(&f) {
            bal[a.tail] += x as i64;
            bal[a.head] -= x as i64;
        }
        let ok = (0..g.vertex_count())
            .all(|v| v == g.source() || v == g.sink() || bal[v] == 0);
        if ok {
            best = best.max(bal[g.source()]);
        }
        let mut i = 0;
        loop {
            if i == f.len() {
                return best as f64;
            }
            if f[i] < caps[i] {
                f[i] += 1;
                break;
            }
            f[i] = 0;
            i += 1;
        }
    }
}

/// Minimum of `Σ r_a f_a²` subject to `Bf = F(χ_s − χ_t)`, from the dense KKT
/// system with the sink's row of `B` removed. `None` when the KKT matrix is
/// singular (s and t disconnected).
pub fn dense_min_energy<N: FlowNetwork>(net: &N, r: &[f64], value: f64) -> Option<(f64, Vec<f64>)> {
    let n = net.vertex_count();
    let m = net.edge_count();
    let rows: Vec<usize> = (0..n).filter(|&v| v != net.sink()).collect();
    let k = m + rows.len();
    let mut a = DMatrix::<f64>::zeros(k, k);
    let mut rhs = DVector::<f64>::zeros(k);
    for i in 0..m {
        a[(i, i)] = 2.0 * r[i];
    }
    for (row, &v) in rows.iter().enumerate() {
        for i in 0..m {
            let (x, y) = net.endpoints(i);
            let coef = (x == v) as i32 as f64 - (y == v) as i32 as f64;
            a[(m + row, i)] = coef;
            a[(i, m + row)] = coef;
        }
        if v == net.source() {
            rhs[m + row] = value;
        }
    }
    // Vertices not connected to t leave zero rows; pin their multipliers.
    for (row, &v) in rows.iter().enumerate() {
        if (0..m).all(|i| {
            let (x, y) = net.endpoints(i);
            x != v && y != v
        }) {
            a[(m + row, m + row)] = 1.0;
        }
    }
    let sol = a.lu().solve(&rhs)?;
    let f: Vec<f64> = (0..m).map(|i| sol[i]).collect();
    let residual: f64 = (0..rows.len())
        .map(|row| {
            let v = rows[row];
            let out: f64 = (0..m)
                .map(|i| {
                    let (x, y) = net.endpoints(i);
                    ((x == v) as i32 - (y == v) as i32) as f64 * f[i]
                })
                .sum();
            let want = if v == net.source() { value } else { 0.0 };
            (out - want).abs()
        })
        .fold(0.0, f64::max);
    if !residual.is_finite() || residual > 1e-6 * value.abs().max(1.0) {
        return None;
    }
    let e = f.iter().zip(r).map(|(x, ra)| ra * x * x).sum();
    Some((e, f))
}

/// Connected random multigraph on `n` vertices (a random tree plus `extra`
/// edges) with s = 0, t = n − 1 and capacities in `[1, 4)`.
pub fn random_multigraph(rng: &mut ChaCha8Rng, n: usize, extra: usize) -> DirectedNetwork {
    let mut arcs = Vec::new();
    for v in 1..n {
        let a = rng.gen_range(0..v);
        arcs.push(Arc::new(a, v, rng.gen_range(1.0..4.0)));
    }
    for _ in 0..extra {
        let a = rng.gen_range(0..n);
        let mut b = rng.gen_range(0..n - 1);
        if b >= a {
            b += 1;
        }
        arcs.push(Arc::new(a, b, rng.gen_range(1.0..4.0)));
    }
    DirectedNetwork::new(n, arcs, 0, n - 1).unwrap().0
}
