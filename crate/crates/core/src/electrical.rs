//! Weighted Laplacians and approximate s-t electrical flows.
//!
//! Potentials come from Jacobi-preconditioned conjugate gradient on the
//! Laplacian grounded at the sink and restricted to the connected component
//! containing s and t. The induced flow is then made exactly conserving by
//! routing the leftover vertex imbalance along a fixed BFS spanning tree.

use crate::graph::{FlowAssignment, FlowNetwork};
use crate::par::{self, Csr};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ElectricalError {
    #[error("source {from} and sink {to} are not connected")]
    Disconnected { from: usize, to: usize },
    #[error("conjugate gradient stopped after {iterations} iterations at relative residual {residual:e} (target {target:e})")]
    NotConverged {
        iterations: usize,
        residual: f64,
        target: f64,
    },
    #[error("resistance {value} on edge {edge} is not positive and finite")]
    InvalidResistance { edge: usize, value: f64 },
    #[error("expected {expected} per-edge values, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("conservation repair moved {correction:e} units on edge {edge} of capacity {capacity:e}")]
    RepairTooLarge {
        edge: usize,
        correction: f64,
        capacity: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResistanceVector(Vec<f64>);

impl ResistanceVector {
    pub fn new(values: Vec<f64>) -> Result<Self, ElectricalError> {
        if let Some((edge, &value)) = values
            .iter()
            .enumerate()
            .find(|(_, r)| !(r.is_finite() && **r > 0.0))
        {
            return Err(ElectricalError::InvalidResistance { edge, value });
        }
        Ok(ResistanceVector(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Vertex potentials with `φ_t = 0`; vertices outside the s-t component hold 0.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialVector(Vec<f64>);

impl PotentialVector {
    pub fn new(values: Vec<f64>) -> Self {
        PotentialVector(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }
}

/// Full `n × n` weighted Laplacian `Σ_a (1/r_a)(χ_a − χ_b)(χ_a − χ_b)ᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct Laplacian {
    matrix: Csr,
}

impl Laplacian {
    pub fn assemble<N: FlowNetwork>(
        net: &N,
        r: &ResistanceVector,
    ) -> Result<Self, ElectricalError> {
        check_len(net.edge_count(), r.len())?;
        let n = net.vertex_count();
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for (i, &ri) in r.values().iter().enumerate() {
            let (a, b) = net.endpoints(i);
            if a == b {
                continue;
            }
            let g = 1.0 / ri;
            rows[a].push((a, g));
            rows[b].push((b, g));
            rows[a].push((b, -g));
            rows[b].push((a, -g));
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col = Vec::new();
        let mut val = Vec::new();
        row_ptr.push(0);
        for mut row in rows {
            row.sort_by_key(|&(c, _)| c);
            let mut last = usize::MAX;
            for (c, v) in row {
                if c == last {
                    *val.last_mut().unwrap() += v;
                } else {
                    col.push(c);
                    val.push(v);
                    last = c;
                }
            }
            row_ptr.push(col.len());
        }
        Ok(Laplacian {
            matrix: Csr { row_ptr, col, val },
        })
    }

    pub fn order(&self) -> usize {
        self.matrix.rows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (lo, hi) = (self.matrix.row_ptr[i], self.matrix.row_ptr[i + 1]);
        match self.matrix.col[lo..hi].binary_search(&j) {
            Ok(k) => self.matrix.val[lo + k],
            Err(_) => 0.0,
        }
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.order();
        (0..n)
            .map(|i| (0..n).map(|j| self.get(i, j)).collect())
            .collect()
    }

    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.matrix.apply(x, y);
    }

    /// Off-diagonal conductances `(i, j, g)` with `i < j`.
    fn conductances(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::new();
        for i in 0..self.order() {
            for k in self.matrix.row_ptr[i]..self.matrix.row_ptr[i + 1] {
                let j = self.matrix.col[k];
                if j > i && self.matrix.val[k] != 0.0 {
                    out.push((i, j, -self.matrix.val[k]));
                }
            }
        }
        out
    }
}

fn check_len(expected: usize, got: usize) -> Result<(), ElectricalError> {
    if expected == got {
        Ok(())
    } else {
        Err(ElectricalError::LengthMismatch { expected, got })
    }
}

const NONE: usize = usize::MAX;

/// Sparsity pattern of the sink-grounded Laplacian on the s-t component, with
/// the CSR slots each edge writes into.
#[derive(Debug, Clone)]
struct GroundedPattern {
    n: usize,
    source: usize,
    /// Global vertex -> row, `NONE` for the sink and vertices outside the component.
    local: Vec<usize>,
    /// Row -> global vertex.
    global: Vec<usize>,
    in_component: Vec<bool>,
    matrix: Csr,
    diag_slot: Vec<usize>,
    /// Per edge: (diag a, diag b, off a-b, off b-a).
    edge_slots: Vec<[usize; 4]>,
}

fn component_of(n: usize, pairs: &[(usize, usize)], root: usize) -> Vec<bool> {
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in pairs {
        if a != b {
            adj[a].push(b);
            adj[b].push(a);
        }
    }
    let mut seen = vec![false; n];
    let mut stack = vec![root];
    seen[root] = true;
    while let Some(v) = stack.pop() {
        for &w in &adj[v] {
            if !seen[w] {
                seen[w] = true;
                stack.push(w);
            }
        }
    }
    seen
}

impl GroundedPattern {
    fn build(
        n: usize,
        pairs: &[(usize, usize)],
        source: usize,
        sink: usize,
    ) -> Result<Self, ElectricalError> {
        let in_component = component_of(n, pairs, source);
        if !in_component[sink] {
            return Err(ElectricalError::Disconnected { from: source, to: sink });
        }
        let mut local = vec![NONE; n];
        let mut global = Vec::new();
        for v in 0..n {
            if in_component[v] && v != sink {
                local[v] = global.len();
                global.push(v);
            }
        }
        let rows = global.len();
        let mut cols: Vec<Vec<usize>> = (0..rows).map(|i| vec![i]).collect();
        for &(a, b) in pairs {
            if a == b {
                continue;
            }
            let (la, lb) = (local[a], local[b]);
            if la != NONE && lb != NONE {
                cols[la].push(lb);
                cols[lb].push(la);
            }
        }
        let mut row_ptr = vec![0];
        let mut col = Vec::new();
        for c in &mut cols {
            c.sort_unstable();
            c.dedup();
            col.extend_from_slice(c);
            row_ptr.push(col.len());
        }
        let slot = |row: usize, c: usize| -> usize {
            let (lo, hi) = (row_ptr[row], row_ptr[row + 1]);
            lo + col[lo..hi].binary_search(&c).expect("pattern entry")
        };
        let diag_slot: Vec<usize> = (0..rows).map(|i| slot(i, i)).collect();
        let edge_slots = pairs
            .iter()
            .map(|&(a, b)| {
                let mut s = [NONE; 4];
                if a == b || !in_component[a] {
                    return s;
                }
                let (la, lb) = (local[a], local[b]);
                if la != NONE {
                    s[0] = diag_slot[la];
                }
                if lb != NONE {
                    s[1] = diag_slot[lb];
                }
                if la != NONE && lb != NONE {
                    s[2] = slot(la, lb);
                    s[3] = slot(lb, la);
                }
                s
            })
            .collect();
        let nnz = col.len();
        Ok(GroundedPattern {
            n,
            source,
            local,
            global,
            in_component,
            matrix: Csr {
                row_ptr,
                col,
                val: vec![0.0; nnz],
            },
            diag_slot,
            edge_slots,
        })
    }

    fn fill(&mut self, conductance: impl Iterator<Item = f64>) {
        let val = &mut self.matrix.val;
        val.iter_mut().for_each(|v| *v = 0.0);
        for (slots, g) in self.edge_slots.iter().zip(conductance) {
            if slots[0] != NONE {
                val[slots[0]] += g;
            }
            if slots[1] != NONE {
                val[slots[1]] += g;
            }
            if slots[2] != NONE {
                val[slots[2]] -= g;
                val[slots[3]] -= g;
            }
        }
    }

    fn edge_in_component(&self, i: usize) -> bool {
        self.edge_slots[i][0] != NONE || self.edge_slots[i][1] != NONE
    }

    /// Solves `L φ = F(χ_s − χ_t)` with `φ_t = 0` to relative residual `tol`
    /// (measured on the full, ungrounded system).
    fn solve(
        &self,
        flow_value: f64,
        tol: f64,
        warm: Option<&[f64]>,
    ) -> Result<PotentialSolve, ElectricalError> {
        let rows = self.global.len();
        let mut phi = vec![0.0; self.n];
        if flow_value == 0.0 {
            return Ok(PotentialSolve {
                potentials: PotentialVector(phi),
                iterations: 0,
                residual_norm: 0.0,
            });
        }
        let mut b = vec![0.0; rows];
        b[self.local[self.source]] = flow_value;
        let b_norm = flow_value.abs() * std::f64::consts::SQRT_2;
        let target = tol * b_norm;
        let inv_diag: Vec<f64> = self
            .diag_slot
            .iter()
            .map(|&k| 1.0 / self.matrix.val[k])
            .collect();

        let mut x = vec![0.0; rows];
        if let Some(w) = warm {
            for (i, &g) in self.global.iter().enumerate() {
                x[i] = w[g];
            }
        }
        let full_norm = |r: &[f64]| {
            let sum: f64 = r.iter().sum();
            (par::dot(r, r) + sum * sum).sqrt()
        };
        let mut r = vec![0.0; rows];
        let mut ap = vec![0.0; rows];
        let max_iter = 50 * rows + 1000;
        let mut iterations = 0;
        let mut residual;
        // Restart from the current iterate when the recurrence residual has
        // drifted away from the true one.
        for _restart in 0..4 {
            self.matrix.apply(&x, &mut ap);
            for i in 0..rows {
                r[i] = b[i] - ap[i];
            }
            residual = full_norm(&r);
            if residual <= target {
                return Ok(self.finish(x, phi, iterations, residual / b_norm));
            }
            let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(a, d)| a * d).collect();
            let mut p = z.clone();
            let mut rz = par::dot(&r, &z);
            while iterations < max_iter {
                iterations += 1;
                self.matrix.apply(&p, &mut ap);
                let pap = par::dot(&p, &ap);
                if !(pap > 0.0) {
                    break;
                }
                let alpha = rz / pap;
                for i in 0..rows {
                    x[i] += alpha * p[i];
                    r[i] -= alpha * ap[i];
                }
                if full_norm(&r) <= 0.5 * target {
                    break;
                }
                for i in 0..rows {
                    z[i] = r[i] * inv_diag[i];
                }
                let rz_next = par::dot(&r, &z);
                let beta = rz_next / rz;
                rz = rz_next;
                for i in 0..rows {
                    p[i] = z[i] + beta * p[i];
                }
            }
            if iterations >= max_iter {
                break;
            }
        }
        self.matrix.apply(&x, &mut ap);
        for i in 0..rows {
            r[i] = b[i] - ap[i];
        }
        residual = full_norm(&r);
        if residual <= target {
            return Ok(self.finish(x, phi, iterations, residual / b_norm));
        }
        phi.clear();
        Err(ElectricalError::NotConverged {
            iterations,
            residual: residual / b_norm,
            target: tol,
        })
    }

    fn finish(
        &self,
        x: Vec<f64>,
        mut phi: Vec<f64>,
        iterations: usize,
        relative_residual: f64,
    ) -> PotentialSolve {
        for (i, &g) in self.global.iter().enumerate() {
            phi[g] = x[i];
        }
        PotentialSolve {
            potentials: PotentialVector(phi),
            iterations,
            residual_norm: relative_residual,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PotentialSolve {
    pub potentials: PotentialVector,
    pub iterations: usize,
    /// `‖Lφ − b‖₂ / ‖b‖₂`
    pub residual_norm: f64,
}

/// Potentials for an s-t current of `flow_value`, to relative residual `tol`.
pub fn solve_potentials(
    laplacian: &Laplacian,
    source: usize,
    sink: usize,
    flow_value: f64,
    tol: f64,
) -> Result<PotentialSolve, ElectricalError> {
    let cond = laplacian.conductances();
    let pairs: Vec<(usize, usize)> = cond.iter().map(|&(i, j, _)| (i, j)).collect();
    let mut pattern = GroundedPattern::build(laplacian.order(), &pairs, source, sink)?;
    pattern.fill(cond.iter().map(|c| c.2));
    pattern.solve(flow_value, tol, None)
}

/// Ohm's law: `f(a) = (φ_from − φ_to) / r_a`.
pub fn induced_flow<N: FlowNetwork>(
    potentials: &PotentialVector,
    net: &N,
    r: &ResistanceVector,
) -> FlowAssignment {
    let phi = potentials.values();
    FlowAssignment::new(
        par::map_indexed(net.edge_count(), |i| {
            let (a, b) = net.endpoints(i);
            (phi[a] - phi[b]) / r.values()[i]
        }),
    )
}

pub fn energy(f: &FlowAssignment, r: &ResistanceVector) -> f64 {
    f.values()
        .iter()
        .zip(r.values())
        .map(|(x, ri)| ri * x * x)
        .sum()
}

/// BFS tree rooted at the sink over the sink's component.
#[derive(Debug, Clone)]
struct SpanningTree {
    /// Vertices in BFS order, root first.
    order: Vec<usize>,
    /// Per vertex: (edge to parent, parent); root and unreached vertices hold `NONE`.
    parent: Vec<(usize, usize)>,
}

impl SpanningTree {
    fn build<N: FlowNetwork>(net: &N) -> Self {
        let n = net.vertex_count();
        let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
        for i in 0..net.edge_count() {
            let (a, b) = net.endpoints(i);
            if a != b {
                adj[a].push((i, b));
                adj[b].push((i, a));
            }
        }
        let root = net.sink();
        let mut parent = vec![(NONE, NONE); n];
        let mut seen = vec![false; n];
        let mut order = vec![root];
        seen[root] = true;
        let mut head = 0;
        while head < order.len() {
            let v = order[head];
            head += 1;
            for &(e, w) in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    parent[w] = (e, v);
                    order.push(w);
                }
            }
        }
        SpanningTree { order, parent }
    }

    fn reaches(&self, v: usize) -> bool {
        self.parent[v].0 != NONE || v == self.order[0]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Repair {
    pub flow: FlowAssignment,
    /// Largest per-edge change.
    pub max_correction: f64,
}

/// Routes vertex imbalances along a BFS spanning tree so that every vertex of
/// the s-t component other than s, t is exactly balanced and the value is
/// `flow_value`.
pub fn repair_conservation<N: FlowNetwork>(
    f: &FlowAssignment,
    net: &N,
    flow_value: f64,
) -> Result<Repair, ElectricalError> {
    repair_with_tree(f.clone(), net, flow_value, &SpanningTree::build(net))
}

fn repair_with_tree<N: FlowNetwork>(
    mut f: FlowAssignment,
    net: &N,
    flow_value: f64,
    tree: &SpanningTree,
) -> Result<Repair, ElectricalError> {
    check_len(net.edge_count(), f.len())?;
    let (s, t) = (net.source(), net.sink());
    if !tree.reaches(s) {
        return Err(ElectricalError::Disconnected { from: s, to: t });
    }
    let mut out = f.net_outflow(net);
    let mut max_correction: f64 = 0.0;
    let values = f.values_mut();
    for &v in tree.order.iter().skip(1).rev() {
        let demand = if v == s { flow_value } else { 0.0 };
        let need = demand - out[v];
        if need == 0.0 {
            continue;
        }
        let (e, p) = tree.parent[v];
        let (a, _) = net.endpoints(e);
        if a == v {
            values[e] += need;
        } else {
            values[e] -= need;
        }
        out[v] += need;
        out[p] -= need;
        let magnitude = need.abs();
        max_correction = max_correction.max(magnitude);
        if magnitude > 0.1 * net.capacity(e) {
            return Err(ElectricalError::RepairTooLarge {
                edge: e,
                correction: magnitude,
                capacity: net.capacity(e),
            });
        }
    }
    Ok(Repair { flow: f, max_correction })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ElectricalSolveResult {
    pub flow: FlowAssignment,
    pub potentials: PotentialVector,
    pub energy: f64,
    pub iterations: usize,
    pub residual_norm: f64,
    pub max_correction: f64,
}

/// Electrical flows on a fixed network with changing resistances. Keeps the
/// Laplacian pattern, the repair tree and the last potentials (used as the
/// next starting point).
#[derive(Debug, Clone)]
pub struct ElectricalSolver {
    pattern: GroundedPattern,
    tree: SpanningTree,
    warm: Option<Vec<f64>>,
    tol: f64,
}

impl ElectricalSolver {
    pub fn new<N: FlowNetwork>(net: &N, tol: f64) -> Result<Self, ElectricalError> {
        let pairs: Vec<(usize, usize)> = (0..net.edge_count()).map(|i| net.endpoints(i)).collect();
        let pattern = GroundedPattern::build(net.vertex_count(), &pairs, net.source(), net.sink())?;
        Ok(ElectricalSolver {
            pattern,
            tree: SpanningTree::build(net),
            warm: None,
            tol,
        })
    }

    pub fn tolerance(&self) -> f64 {
        self.tol
    }

    pub fn in_component(&self, v: usize) -> bool {
        self.pattern.in_component[v]
    }

    pub fn solve<N: FlowNetwork>(
        &mut self,
        net: &N,
        r: &ResistanceVector,
        flow_value: f64,
    ) -> Result<ElectricalSolveResult, ElectricalError> {
        check_len(net.edge_count(), r.len())?;
        self.pattern.fill(r.values().iter().map(|x| 1.0 / x));
        let solve = self
            .pattern
            .solve(flow_value, self.tol, self.warm.as_deref())?;
        let mut f = induced_flow(&solve.potentials, net, r);
        for (i, x) in f.values_mut().iter_mut().enumerate() {
            if !self.pattern.edge_in_component(i) {
                *x = 0.0;
            }
        }
        let repair = repair_with_tree(f, net, flow_value, &self.tree)?;
        let energy = energy(&repair.flow, r);
        self.warm = Some(solve.potentials.values().to_vec());
        Ok(ElectricalSolveResult {
            flow: repair.flow,
            potentials: solve.potentials,
            energy,
            iterations: solve.iterations,
            residual_norm: solve.residual_norm,
            max_correction: repair.max_correction,
        })
    }
}
