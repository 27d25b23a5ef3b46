//! Turning a flow of the symmetrized network back into a feasible directed
//! flow: remove the canonical per-arc flows, halve, cancel cycles, restrict
//! to the original edges and rescale if needed.

use crate::graph::{DirectedNetwork, FlowAssignment, FlowNetwork, Provenance, SymmetrizedNetwork};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RecoveryError {
    #[error("edge {edge} ({provenance:?}) has flow {value} outside [{lo}, {hi}]")]
    OutOfRange {
        edge: usize,
        provenance: Provenance,
        value: f64,
        lo: f64,
        hi: f64,
    },
    #[error("link edge {edge} still carries {value} after cycle canceling")]
    LinkFlow { edge: usize, value: f64 },
    #[error("expected {expected} per-edge values, got {got}")]
    LengthMismatch { expected: usize, got: usize },
}

fn tol(scale: f64) -> f64 {
    1e-9 * scale.max(1.0)
}

fn check_len(expected: usize, got: usize) -> Result<(), RecoveryError> {
    if expected == got {
        Ok(())
    } else {
        Err(RecoveryError::LengthMismatch { expected, got })
    }
}

/// `f̃' = ½ (f̃ − Σ_e f^e)` where `f^e` pushes `(1+ε)u_e` along `s → v → u → t`
/// for every arc `e = (u, v)`.
pub fn subtract_and_halve(
    f: &FlowAssignment,
    net: &SymmetrizedNetwork,
) -> Result<FlowAssignment, RecoveryError> {
    check_len(net.edge_count(), f.len())?;
    let scale = 1.0 + net.epsilon();
    let mut out = Vec::with_capacity(f.len());
    for (i, (&x, e)) in f.values().iter().zip(net.edges()).enumerate() {
        let full = scale * net.parent_capacity(i);
        let canonical = match e.provenance {
            Provenance::Original => -full,
            Provenance::SourceLink | Provenance::SinkLink => full,
        };
        let y = 0.5 * (x - canonical);
        let (lo, hi) = match e.provenance {
            Provenance::Original => (0.0, full),
            Provenance::SourceLink | Provenance::SinkLink => (-full, 0.0),
        };
        let slack = tol(full);
        if y < lo - slack || y > hi + slack {
            return Err(RecoveryError::OutOfRange {
                edge: i,
                provenance: e.provenance,
                value: y,
                lo,
                hi,
            });
        }
        out.push(y.clamp(lo, hi));
    }
    Ok(FlowAssignment::new(out))
}

/// Removes every directed cycle from the support of `f` (each edge oriented
/// along its flow). Net vertex balances are unchanged and no edge magnitude
/// grows.
pub fn cycle_cancel<N: FlowNetwork>(f: &FlowAssignment, net: &N) -> FlowAssignment {
    let mut values = f.values().to_vec();
    let n = net.vertex_count();
    // Directed support adjacency; rebuilt lazily by skipping dead edges.
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    let head_tail = |values: &[f64], i: usize| -> (usize, usize) {
        let (a, b) = net.endpoints(i);
        if values[i] > 0.0 {
            (a, b)
        } else {
            (b, a)
        }
    };
    for (i, &x) in values.iter().enumerate() {
        if x != 0.0 {
            let (from, _) = head_tail(&values, i);
            adj[from].push(i);
        }
    }

    // 0 = unvisited, 1 = on stack, 2 = done
    let mut state = vec![0u8; n];
    let mut cursor = vec![0usize; n];
    let mut stack: Vec<(usize, usize)> = Vec::new(); // (vertex, edge used to enter)
    for root in 0..n {
        if state[root] != 0 {
            continue;
        }
        state[root] = 1;
        stack.push((root, usize::MAX));
        while let Some(&(v, _)) = stack.last() {
            if cursor[v] == adj[v].len() {
                state[v] = 2;
                stack.pop();
                continue;
            }
            let e = adj[v][cursor[v]];
            if values[e] == 0.0 {
                cursor[v] += 1;
                continue;
            }
            let (_, w) = head_tail(&values, e);
            match state[w] {
                0 => {
                    state[w] = 1;
                    stack.push((w, e));
                }
                1 => {
                    // Cycle: w ... v on the stack, closed by e.
                    let start = stack.iter().rposition(|&(x, _)| x == w).unwrap();
                    let mut cycle: Vec<usize> = stack[start + 1..].iter().map(|&(_, e)| e).collect();
                    cycle.push(e);
                    let amount = cycle
                        .iter()
                        .map(|&c| values[c].abs())
                        .fold(f64::INFINITY, f64::min);
                    for &c in &cycle {
                        let mag = values[c].abs() - amount;
                        values[c] = if mag <= 0.0 {
                            0.0
                        } else {
                            mag.copysign(values[c])
                        };
                    }
                    // Unwind to the first vertex whose outgoing edge died.
                    let cut = (start..stack.len())
                        .find(|&k| {
                            let out_edge = if k + 1 < stack.len() { stack[k + 1].1 } else { e };
                            values[out_edge] == 0.0
                        })
                        .unwrap();
                    for &(x, _) in &stack[cut + 1..] {
                        state[x] = 0;
                    }
                    stack.truncate(cut + 1);
                }
                _ => cursor[v] += 1,
            }
        }
    }
    FlowAssignment::new(values)
}

/// Whether the support digraph of `f` is acyclic (Kahn's algorithm).
pub fn is_acyclic<N: FlowNetwork>(f: &FlowAssignment, net: &N) -> bool {
    let n = net.vertex_count();
    let mut indeg = vec![0usize; n];
    let mut adj = vec![Vec::new(); n];
    for (i, &x) in f.values().iter().enumerate() {
        if x == 0.0 {
            continue;
        }
        let (a, b) = net.endpoints(i);
        let (from, to) = if x > 0.0 { (a, b) } else { (b, a) };
        adj[from].push(to);
        indeg[to] += 1;
    }
    let mut queue: Vec<usize> = (0..n).filter(|&v| indeg[v] == 0).collect();
    let mut seen = 0;
    while let Some(v) = queue.pop() {
        seen += 1;
        for &w in &adj[v] {
            indeg[w] -= 1;
            if indeg[w] == 0 {
                queue.push(w);
            }
        }
    }
    seen == n
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecoveryResult {
    /// Per arc of the directed network.
    pub directed_flow: FlowAssignment,
    pub value: f64,
    pub scaled: bool,
    /// `max_e f(e)/u_e` before scaling.
    pub max_capacity_ratio: f64,
}

/// Keeps the original-edge flows of an acyclic flow, scaled down if some arc
/// is above capacity.
pub fn extract_directed(
    f: &FlowAssignment,
    net: &SymmetrizedNetwork,
    g: &DirectedNetwork,
) -> Result<RecoveryResult, RecoveryError> {
    check_len(net.edge_count(), f.len())?;
    let max_cap = g.arcs().iter().fold(0.0f64, |m, a| m.max(a.capacity));
    let link_tol = 1e-9 * max_cap.max(1e-300);
    let mut arc_flow = vec![0.0; g.arc_count()];
    for (i, (&x, e)) in f.values().iter().zip(net.edges()).enumerate() {
        match e.provenance {
            Provenance::Original => {
                let u = net.parent_capacity(i);
                let hi = (1.0 + net.epsilon()) * u;
                if x < -tol(u) || x > hi + tol(hi) {
                    return Err(RecoveryError::OutOfRange {
                        edge: i,
                        provenance: e.provenance,
                        value: x,
                        lo: 0.0,
                        hi,
                    });
                }
                arc_flow[e.parent_arc] = x.max(0.0);
            }
            Provenance::SourceLink | Provenance::SinkLink => {
                if x.abs() > link_tol {
                    return Err(RecoveryError::LinkFlow { edge: i, value: x });
                }
            }
        }
    }
    let ratio = arc_flow
        .iter()
        .zip(g.arcs())
        .fold(0.0f64, |m, (x, a)| m.max(x / a.capacity));
    let scaled = ratio > 1.0;
    if scaled {
        arc_flow.iter_mut().for_each(|x| *x /= ratio);
    }
    // Rounding can leave hairline overshoot after division.
    for (x, a) in arc_flow.iter_mut().zip(g.arcs()) {
        *x = x.min(a.capacity);
    }
    let flow = FlowAssignment::new(arc_flow);
    let s = g.source();
    let value = flow.net_outflow(g)[s];
    Ok(RecoveryResult {
        directed_flow: flow,
        value,
        scaled,
        max_capacity_ratio: ratio,
    })
}

/// Full pipeline from a solver flow of value `2F + Σ(1+ε)u_e` to a feasible
/// directed flow.
pub fn recover(
    f: &FlowAssignment,
    net: &SymmetrizedNetwork,
    g: &DirectedNetwork,
) -> Result<RecoveryResult, RecoveryError> {
    let halved = subtract_and_halve(f, net)?;
    let acyclic = cycle_cancel(&halved, net);
    extract_directed(&acyclic, net, g)
}
