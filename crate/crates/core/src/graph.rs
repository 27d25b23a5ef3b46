//! Input networks, the three-edge symmetrization and flow bookkeeping.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("source and sink must differ (both are vertex {0})")]
    SourceIsSink(usize),
    #[error("vertex {vertex} out of range for a network with {n} vertices")]
    VertexOutOfRange { vertex: usize, n: usize },
    #[error("network must have at least one vertex")]
    Empty,
    #[error("arc {index} has invalid capacity {capacity}")]
    InvalidCapacity { index: usize, capacity: f64 },
    #[error("epsilon {0} outside (0, 1/2]")]
    EpsilonOutOfRange(f64),
    #[error("flow has {got} entries but the network has {expected} edges")]
    LengthMismatch { expected: usize, got: usize },
    #[error("conservation residual {residual:e} at vertex {vertex} exceeds tolerance {tolerance:e}")]
    NotConserving {
        vertex: usize,
        residual: f64,
        tolerance: f64,
    },
}

/// Arc of a directed network, capacities stored as reals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Arc {
    pub tail: usize,
    pub head: usize,
    pub capacity: f64,
}

impl Arc {
    pub fn new(tail: usize, head: usize, capacity: f64) -> Self {
        Arc {
            tail,
            head,
            capacity,
        }
    }
}

/// What was discarded while building a [`DirectedNetwork`]. Indices refer to
/// the arc list handed to the constructor.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LoadReport {
    pub zero_capacity: Vec<usize>,
    pub self_loops: Vec<usize>,
}

impl LoadReport {
    pub fn dropped(&self) -> usize {
        self.zero_capacity.len() + self.self_loops.len()
    }
}

/// Anything flows can be defined on: a vertex set plus oriented edges.
pub trait FlowNetwork: Sync {
    fn vertex_count(&self) -> usize;
    fn edge_count(&self) -> usize;
    /// `(from, to)` of edge `i` under its positive orientation.
    fn endpoints(&self, i: usize) -> (usize, usize);
    fn capacity(&self, i: usize) -> f64;
    fn source(&self) -> usize;
    fn sink(&self) -> usize;
}

#[derive(Debug, Clone, PartialEq)]
pub struct DirectedNetwork {
    n: usize,
    arcs: Vec<Arc>,
    source: usize,
    sink: usize,
}

impl DirectedNetwork {
    /// Validates the vertex ids and capacities, then drops zero-capacity arcs
    /// and self-loops. Parallel arcs are kept.
    pub fn new(
        n: usize,
        arcs: Vec<Arc>,
        source: usize,
        sink: usize,
    ) -> Result<(Self, LoadReport), GraphError> {
        if n == 0 {
            return Err(GraphError::Empty);
        }
        for v in [source, sink] {
            if v >= n {
                return Err(GraphError::VertexOutOfRange { vertex: v, n });
            }
        }
        if source == sink {
            return Err(GraphError::SourceIsSink(source));
        }
        let mut report = LoadReport::default();
        let mut kept = Vec::with_capacity(arcs.len());
        for (index, arc) in arcs.into_iter().enumerate() {
            for v in [arc.tail, arc.head] {
                if v >= n {
                    return Err(GraphError::VertexOutOfRange { vertex: v, n });
                }
            }
            if !arc.capacity.is_finite() || arc.capacity < 0.0 {
                return Err(GraphError::InvalidCapacity {
                    index,
                    capacity: arc.capacity,
                });
            }
            if arc.tail == arc.head {
                report.self_loops.push(index);
            } else if arc.capacity == 0.0 {
                report.zero_capacity.push(index);
            } else {
                kept.push(arc);
            }
        }
        Ok((
            DirectedNetwork {
                n,
                arcs: kept,
                source,
                sink,
            },
            report,
        ))
    }

    pub fn arcs(&self) -> &[Arc] {
        &self.arcs
    }

    pub fn arc_count(&self) -> usize {
        self.arcs.len()
    }

    pub fn total_capacity(&self) -> f64 {
        self.arcs.iter().map(|a| a.capacity).sum()
    }

    /// min(capacity leaving s, capacity entering t): an upper bound on the max flow.
    pub fn degree_cut_bound(&self) -> f64 {
        let out_s: f64 = self
            .arcs
            .iter()
            .filter(|a| a.tail == self.source)
            .map(|a| a.capacity)
            .sum();
        let in_t: f64 = self
            .arcs
            .iter()
            .filter(|a| a.head == self.sink)
            .map(|a| a.capacity)
            .sum();
        out_s.min(in_t)
    }

    /// Indices of the arcs that can lie on an s-t path: not entering s, not
    /// leaving t, tail reachable from s and head reaching t. Removing the rest
    /// leaves the max flow value unchanged.
    pub fn useful_arcs(&self) -> Vec<usize> {
        let usable = |a: &Arc| a.head != self.source && a.tail != self.sink;
        let mut fwd = vec![Vec::new(); self.n];
        let mut bwd = vec![Vec::new(); self.n];
        for a in self.arcs.iter().filter(|a| usable(a)) {
            fwd[a.tail].push(a.head);
            bwd[a.head].push(a.tail);
        }
        let from_s = reach(&fwd, self.source);
        let to_t = reach(&bwd, self.sink);
        (0..self.arcs.len())
            .filter(|&i| {
                let a = &self.arcs[i];
                usable(a) && from_s[a.tail] && to_t[a.head]
            })
            .collect()
    }

    /// The sub-network on the given arcs, same vertices and terminals.
    pub fn restrict(&self, arcs: &[usize]) -> DirectedNetwork {
        DirectedNetwork {
            n: self.n,
            arcs: arcs.iter().map(|&i| self.arcs[i]).collect(),
            source: self.source,
            sink: self.sink,
        }
    }

    /// Whether t is reachable from s along arcs.
    pub fn sink_reachable(&self) -> bool {
        let mut adj = vec![Vec::new(); self.n];
        for a in &self.arcs {
            adj[a.tail].push(a.head);
        }
        let mut seen = vec![false; self.n];
        let mut stack = vec![self.source];
        seen[self.source] = true;
        while let Some(v) = stack.pop() {
            if v == self.sink {
                return true;
            }
            for &w in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        false
    }
}

fn reach(adj: &[Vec<usize>], root: usize) -> Vec<bool> {
    let mut seen = vec![false; adj.len()];
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

impl FlowNetwork for DirectedNetwork {
    fn vertex_count(&self) -> usize {
        self.n
    }
    fn edge_count(&self) -> usize {
        self.arcs.len()
    }
    fn endpoints(&self, i: usize) -> (usize, usize) {
        (self.arcs[i].tail, self.arcs[i].head)
    }
    fn capacity(&self, i: usize) -> f64 {
        self.arcs[i].capacity
    }
    fn source(&self) -> usize {
        self.source
    }
    fn sink(&self) -> usize {
        self.sink
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Provenance {
    Original,
    SourceLink,
    SinkLink,
}

/// Undirected edge of the symmetrized network. `a -> b` is the positive
/// orientation for signed flow values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
    pub capacity: f64,
    pub provenance: Provenance,
    pub parent_arc: usize,
}

/// The undirected multigraph obtained by replacing each arc `(u, v)` with
/// `u–v` (capacity `c`), `s–v` and `u–t` (capacity `(1+ε)c` each).
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetrizedNetwork {
    n: usize,
    source: usize,
    sink: usize,
    epsilon: f64,
    edges: Vec<Edge>,
    parent_capacity: Vec<f64>,
}

pub fn check_epsilon(epsilon: f64) -> Result<(), GraphError> {
    if epsilon > 0.0 && epsilon <= 0.5 {
        Ok(())
    } else {
        Err(GraphError::EpsilonOutOfRange(epsilon))
    }
}

pub fn symmetrize(g: &DirectedNetwork, epsilon: f64) -> Result<SymmetrizedNetwork, GraphError> {
    check_epsilon(epsilon)?;
    let (s, t) = (g.source, g.sink);
    let mut edges = Vec::with_capacity(3 * g.arcs.len());
    for (parent_arc, arc) in g.arcs.iter().enumerate() {
        let link = (1.0 + epsilon) * arc.capacity;
        edges.push(Edge {
            a: arc.tail,
            b: arc.head,
            capacity: arc.capacity,
            provenance: Provenance::Original,
            parent_arc,
        });
        edges.push(Edge {
            a: s,
            b: arc.head,
            capacity: link,
            provenance: Provenance::SourceLink,
            parent_arc,
        });
        edges.push(Edge {
            a: arc.tail,
            b: t,
            capacity: link,
            provenance: Provenance::SinkLink,
            parent_arc,
        });
    }
    let parent_capacity = edges
        .iter()
        .map(|e| g.arcs[e.parent_arc].capacity)
        .collect();
    Ok(SymmetrizedNetwork {
        n: g.n,
        source: s,
        sink: t,
        epsilon,
        edges,
        parent_capacity,
    })
}

impl SymmetrizedNetwork {
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Number of arcs of the directed network this was built from.
    pub fn parent_arc_count(&self) -> usize {
        self.edges.len() / 3
    }

    /// Capacity `u_e` of the parent arc of edge `i`.
    pub fn parent_capacity(&self, i: usize) -> f64 {
        self.parent_capacity[i]
    }

    pub fn parent_capacities(&self) -> &[f64] {
        &self.parent_capacity
    }

    /// Σ_e (1+ε) u_e: the value carried by the canonical flows `f^e`.
    pub fn baseline_value(&self) -> f64 {
        (0..self.parent_arc_count())
            .map(|k| (1.0 + self.epsilon) * self.parent_capacity[3 * k])
            .sum()
    }
}

impl FlowNetwork for SymmetrizedNetwork {
    fn vertex_count(&self) -> usize {
        self.n
    }
    fn edge_count(&self) -> usize {
        self.edges.len()
    }
    fn endpoints(&self, i: usize) -> (usize, usize) {
        (self.edges[i].a, self.edges[i].b)
    }
    fn capacity(&self, i: usize) -> f64 {
        self.edges[i].capacity
    }
    fn source(&self) -> usize {
        self.source
    }
    fn sink(&self) -> usize {
        self.sink
    }
}

/// Signed flow per edge, positive along the edge's orientation.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowAssignment {
    values: Vec<f64>,
}

impl FlowAssignment {
    pub fn new(values: Vec<f64>) -> Self {
        FlowAssignment { values }
    }

    pub fn zero(edges: usize) -> Self {
        FlowAssignment {
            values: vec![0.0; edges],
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// Net outflow at every vertex (signed). Sums to zero up to rounding.
    pub fn net_outflow<N: FlowNetwork>(&self, net: &N) -> Vec<f64> {
        let mut out = vec![0.0; net.vertex_count()];
        for (i, &x) in self.values.iter().enumerate() {
            let (a, b) = net.endpoints(i);
            out[a] += x;
            out[b] -= x;
        }
        out
    }

    /// Worst absolute conservation residual over vertices other than s, t.
    pub fn max_interior_residual<N: FlowNetwork>(&self, net: &N) -> f64 {
        let (s, t) = (net.source(), net.sink());
        self.net_outflow(net)
            .iter()
            .enumerate()
            .filter(|&(v, _)| v != s && v != t)
            .fold(0.0, |m, (_, r)| m.max(r.abs()))
    }

    /// Net outflow at the source, after checking interior conservation to
    /// `tolerance`.
    pub fn value_checked<N: FlowNetwork>(
        &self,
        net: &N,
        tolerance: f64,
    ) -> Result<f64, GraphError> {
        if self.values.len() != net.edge_count() {
            return Err(GraphError::LengthMismatch {
                expected: net.edge_count(),
                got: self.values.len(),
            });
        }
        let out = self.net_outflow(net);
        let (s, t) = (net.source(), net.sink());
        for (v, &r) in out.iter().enumerate() {
            if v != s && v != t && r.abs() > tolerance {
                return Err(GraphError::NotConserving {
                    vertex: v,
                    residual: r,
                    tolerance,
                });
            }
        }
        Ok(out[s])
    }

    /// [`value_checked`](Self::value_checked) with a tolerance of 1e-9 relative
    /// to the largest edge flow.
    pub fn value<N: FlowNetwork>(&self, net: &N) -> Result<f64, GraphError> {
        let tol = 1e-9 * self.max_abs().max(1.0);
        self.value_checked(net, tol)
    }
}

/// `|f(a)| / u_parent(a)` per edge of a symmetrized network.
#[derive(Debug, Clone, PartialEq)]
pub struct CongestionVector(Vec<f64>);

impl CongestionVector {
    pub fn of(f: &FlowAssignment, net: &SymmetrizedNetwork) -> Self {
        CongestionVector(
            f.values()
                .iter()
                .zip(net.parent_capacities())
                .map(|(x, u)| x.abs() / u)
                .collect(),
        )
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn max(&self) -> f64 {
        self.0.iter().fold(0.0, |m, &c| m.max(c))
    }
}
