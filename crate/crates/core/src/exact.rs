//! Exact reference max flow (Dinic) for verification.

use crate::graph::{Arc, DirectedNetwork, FlowAssignment, FlowNetwork, SymmetrizedNetwork};
use std::collections::VecDeque;

struct Residual {
    head: Vec<usize>,
    cap: Vec<f64>,
    adj: Vec<Vec<usize>>,
    level: Vec<i32>,
    iter: Vec<usize>,
    zero: f64,
}

impl Residual {
    fn new(n: usize, zero: f64) -> Self {
        Residual {
            head: Vec::new(),
            cap: Vec::new(),
            adj: vec![Vec::new(); n],
            level: vec![0; n],
            iter: vec![0; n],
            zero,
        }
    }

    fn add(&mut self, from: usize, to: usize, cap: f64) -> usize {
        let id = self.head.len();
        self.head.push(to);
        self.cap.push(cap);
        self.adj[from].push(id);
        self.head.push(from);
        self.cap.push(0.0);
        self.adj[to].push(id + 1);
        id
    }

    fn bfs(&mut self, s: usize, t: usize) -> bool {
        self.level.iter_mut().for_each(|l| *l = -1);
        self.level[s] = 0;
        let mut q = VecDeque::from([s]);
        while let Some(v) = q.pop_front() {
            for &e in &self.adj[v] {
                let w = self.head[e];
                if self.cap[e] > self.zero && self.level[w] < 0 {
                    self.level[w] = self.level[v] + 1;
                    q.push_back(w);
                }
            }
        }
        self.level[t] >= 0
    }

    fn dfs(&mut self, v: usize, t: usize, limit: f64) -> f64 {
        if v == t {
            return limit;
        }
        while self.iter[v] < self.adj[v].len() {
            let e = self.adj[v][self.iter[v]];
            let w = self.head[e];
            if self.cap[e] > self.zero && self.level[w] == self.level[v] + 1 {
                let pushed = self.dfs(w, t, limit.min(self.cap[e]));
                if pushed > 0.0 {
                    self.cap[e] -= pushed;
                    self.cap[e ^ 1] += pushed;
                    return pushed;
                }
            }
            self.iter[v] += 1;
        }
        0.0
    }

    fn run(&mut self, s: usize, t: usize) -> f64 {
        let mut total = 0.0;
        while self.bfs(s, t) {
            self.iter.iter_mut().for_each(|i| *i = 0);
            loop {
                let pushed = self.dfs(s, t, f64::INFINITY);
                if pushed <= 0.0 {
                    break;
                }
                total += pushed;
            }
        }
        total
    }
}

/// Maximum flow value and a witness flow per arc.
pub fn exact_max_flow(g: &DirectedNetwork) -> (f64, FlowAssignment) {
    let max_cap = g.arcs().iter().fold(0.0f64, |m, a| m.max(a.capacity));
    let mut res = Residual::new(g.vertex_count(), 1e-12 * max_cap);
    let ids: Vec<usize> = g
        .arcs()
        .iter()
        .map(|a| res.add(a.tail, a.head, a.capacity))
        .collect();
    let value = res.run(g.source(), g.sink());
    let flow = ids
        .iter()
        .zip(g.arcs())
        .map(|(&id, a)| (a.capacity - res.cap[id]).clamp(0.0, a.capacity))
        .collect();
    (value, FlowAssignment::new(flow))
}

/// Max flow of the symmetrized network, each undirected edge as two opposite arcs.
pub fn exact_undirected_max_flow(net: &SymmetrizedNetwork) -> f64 {
    let arcs = net
        .edges()
        .iter()
        .flat_map(|e| [Arc::new(e.a, e.b, e.capacity), Arc::new(e.b, e.a, e.capacity)])
        .collect();
    let (g, _) = DirectedNetwork::new(net.vertex_count(), arcs, net.source(), net.sink())
        .expect("symmetrized network has valid endpoints");
    exact_max_flow(&g).0
}
