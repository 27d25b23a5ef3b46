//! The electrical-flow oracle, the multiplicative-weights loop around it and
//! the resulting solver for the symmetrized network.
//!
//! The solver takes a target value `F_tot` above the baseline `Σ(1+ε)u_e` and
//! either returns a flow of exactly that value with `|f(a)| ≤ (1+ε)u_e` on
//! every edge, or reports failure.

use crate::electrical::{ElectricalError, ElectricalSolver, ResistanceVector};
use crate::graph::{CongestionVector, FlowAssignment, FlowNetwork, Provenance, SymmetrizedNetwork};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MwuError {
    #[error(transparent)]
    Electrical(#[from] ElectricalError),
    #[error("congestion {congestion} on edge {edge} exceeds the oracle width {rho}")]
    WidthViolated {
        edge: usize,
        congestion: f64,
        rho: f64,
    },
    #[error("target value {target} does not exceed the baseline {baseline}")]
    BelowBaseline { target: f64, baseline: f64 },
}

/// Weights above this are rescaled into a running log factor.
const RESCALE_AT: f64 = 1e300;

/// Positive per-edge weights. Stored as `scaled[a] · exp(log_scale)`; every
/// quantity derived from weights (resistances, fail threshold, energy) is
/// homogeneous of degree one, so the oracle works on the scaled values.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector {
    scaled: Vec<f64>,
    log_scale: f64,
    total: f64,
}

impl WeightVector {
    pub fn uniform(len: usize) -> Self {
        WeightVector {
            scaled: vec![1.0; len],
            log_scale: 0.0,
            total: len as f64,
        }
    }

    pub fn from_values(values: Vec<f64>) -> Self {
        assert!(
            values.iter().all(|w| w.is_finite() && *w > 0.0),
            "weights must be positive"
        );
        let total = values.iter().sum();
        WeightVector {
            scaled: values,
            log_scale: 0.0,
            total,
        }
    }

    pub fn scaled(&self) -> &[f64] {
        &self.scaled
    }

    /// Σ of the scaled weights.
    pub fn scaled_total(&self) -> f64 {
        self.total
    }

    pub fn log_scale(&self) -> f64 {
        self.log_scale
    }

    /// ln |w̃|₁
    pub fn log_total(&self) -> f64 {
        self.total.ln() + self.log_scale
    }

    pub fn len(&self) -> usize {
        self.scaled.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scaled.is_empty()
    }

    fn renormalize(&mut self) {
        let max = self.scaled.iter().fold(0.0f64, |m, &w| m.max(w));
        if max > RESCALE_AT {
            self.scaled.iter_mut().for_each(|w| *w /= max);
            self.log_scale += max.ln();
        }
        self.total = self.scaled.iter().sum();
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleParams {
    pub epsilon: f64,
    /// Oracle width `√(27m/ε)`, `m` the arc count of the directed network.
    pub rho: f64,
    /// Electrical-flow approximation factor, `ε/10`.
    pub delta: f64,
}

impl OracleParams {
    pub fn new(epsilon: f64, arc_count: usize) -> Self {
        OracleParams {
            epsilon,
            rho: (27.0 * arc_count as f64 / epsilon).sqrt(),
            delta: epsilon / 10.0,
        }
    }

    /// `⌈2ρ ln|Ẽ| / ε²⌉`, at least one.
    pub fn iteration_count(&self, edges: usize) -> usize {
        let n = (2.0 * self.rho * (edges.max(2) as f64).ln() / (self.epsilon * self.epsilon)).ceil();
        (n as usize).max(1)
    }

    /// Linear-solve relative residual `min(1e-8, ε/(100|Ẽ|))`.
    pub fn solve_tolerance(&self, edges: usize) -> f64 {
        (self.epsilon / (100.0 * edges.max(1) as f64)).min(1e-8)
    }
}

fn regularizer(w: &WeightVector, epsilon: f64) -> f64 {
    epsilon * w.scaled_total() / (3.0 * w.len().max(1) as f64)
}

/// `r_a = (w_a + ε|w̃|₁/(3|Ẽ|)) / u_parent(a)²`, on the scaled weights.
pub fn compute_resistances(
    net: &SymmetrizedNetwork,
    w: &WeightVector,
    epsilon: f64,
) -> ResistanceVector {
    let reg = regularizer(w, epsilon);
    let r = w
        .scaled()
        .iter()
        .zip(net.parent_capacities())
        .map(|(wa, u)| (wa + reg) / (u * u))
        .collect();
    ResistanceVector::new(r).expect("positive weights and capacities")
}

/// `(1+ε/10) Σ_a (w_a + ε|w̃|₁/(3|Ẽ|)) β(a)²` with `β = 1` on original edges
/// and `1+ε` on link edges, on the scaled weights.
pub fn fail_threshold(net: &SymmetrizedNetwork, w: &WeightVector, epsilon: f64) -> f64 {
    let reg = regularizer(w, epsilon);
    let link = (1.0 + epsilon) * (1.0 + epsilon);
    let sum: f64 = w
        .scaled()
        .iter()
        .zip(net.edges())
        .map(|(wa, e)| {
            let beta2 = match e.provenance {
                Provenance::Original => 1.0,
                Provenance::SourceLink | Provenance::SinkLink => link,
            };
            (wa + reg) * beta2
        })
        .sum();
    (1.0 + epsilon / 10.0) * sum
}

pub fn congestion_of(f: &FlowAssignment, net: &SymmetrizedNetwork) -> CongestionVector {
    CongestionVector::of(f, net)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Flow,
    Fail,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleDiagnostics {
    pub energy: f64,
    pub threshold: f64,
    pub max_congestion: f64,
    /// Σ_a w_a cong(a)
    pub weighted_congestion: f64,
    /// Σ_a w_a cong(a)²
    pub weighted_congestion_sq: f64,
    pub weight_total: f64,
    pub solve_iterations: usize,
    pub solve_residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleOutcome {
    pub verdict: Verdict,
    pub flow: Option<FlowAssignment>,
    pub congestion: Option<CongestionVector>,
    pub diagnostics: OracleDiagnostics,
}

/// One oracle call: electrical flow of value `target` under the resistances
/// derived from `w`, rejected when its energy exceeds the fail threshold.
pub fn oracle_step(
    solver: &mut ElectricalSolver,
    net: &SymmetrizedNetwork,
    w: &WeightVector,
    target: f64,
    params: &OracleParams,
) -> Result<OracleOutcome, MwuError> {
    let r = compute_resistances(net, w, params.epsilon);
    let threshold = fail_threshold(net, w, params.epsilon);
    let solved = solver.solve(net, &r, target)?;
    let cong = congestion_of(&solved.flow, net);
    let (mut weighted, mut weighted_sq) = (0.0, 0.0);
    for (wa, c) in w.scaled().iter().zip(cong.values()) {
        weighted += wa * c;
        weighted_sq += wa * c * c;
    }
    let diagnostics = OracleDiagnostics {
        energy: solved.energy,
        threshold,
        max_congestion: cong.max(),
        weighted_congestion: weighted,
        weighted_congestion_sq: weighted_sq,
        weight_total: w.scaled_total(),
        solve_iterations: solved.iterations,
        solve_residual: solved.residual_norm,
    };
    if solved.energy > threshold {
        return Ok(OracleOutcome {
            verdict: Verdict::Fail,
            flow: None,
            congestion: None,
            diagnostics,
        });
    }
    Ok(OracleOutcome {
        verdict: Verdict::Flow,
        flow: Some(solved.flow),
        congestion: Some(cong),
        diagnostics,
    })
}

/// `w'_a = w_a (1 + (ε/ρ) cong(a))`.
pub fn update_weights(
    w: &WeightVector,
    cong: &CongestionVector,
    params: &OracleParams,
) -> Result<WeightVector, MwuError> {
    let limit = params.rho * (1.0 + 1e-9);
    if let Some((edge, &c)) = cong.values().iter().enumerate().find(|(_, &c)| c > limit) {
        return Err(MwuError::WidthViolated {
            edge,
            congestion: c,
            rho: params.rho,
        });
    }
    let step = params.epsilon / params.rho;
    let mut next = WeightVector {
        scaled: w
            .scaled()
            .iter()
            .zip(cong.values())
            .map(|(wa, c)| wa * (1.0 + step * c))
            .collect(),
        log_scale: w.log_scale,
        total: 0.0,
    };
    next.renormalize();
    Ok(next)
}

/// Per-oracle-call trace record.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub iteration: usize,
    pub verdict: Verdict,
    pub diagnostics: OracleDiagnostics,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FailReason {
    /// An oracle call exceeded the energy threshold.
    Oracle,
    /// The averaged flow still violated the capacity bound after the budget.
    PostVerification,
    /// s and t disconnected in the symmetrized network.
    Disconnected,
}

#[derive(Debug, Clone, PartialEq)]
pub enum MagicOutcome {
    Flow(FlowAssignment),
    Fail(FailReason),
}

#[derive(Debug, Clone, PartialEq)]
pub struct MagicRun {
    pub outcome: MagicOutcome,
    pub oracle_calls: usize,
    /// `N` from the iteration-count formula (before doubling).
    pub budget: usize,
    /// `max_a |f(a)| / ((1+ε) u_parent)` of the last averaged flow.
    pub capacity_ratio: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MagicOptions {
    /// Overrides the iteration-count formula.
    pub budget: Option<usize>,
    /// Return as soon as the running average passes verification.
    pub early_exit: bool,
    /// Allow one doubling of the budget before failing verification.
    pub allow_doubling: bool,
    /// Also try the mean over a trailing window of iterates.
    pub trailing_window: bool,
}

impl Default for MagicOptions {
    fn default() -> Self {
        MagicOptions {
            budget: None,
            early_exit: true,
            allow_doubling: true,
            trailing_window: true,
        }
    }
}

const VERIFY_TOL: f64 = 1e-9;

fn capacity_ratio(f: &[f64], net: &SymmetrizedNetwork) -> f64 {
    let scale = 1.0 + net.epsilon();
    f.iter()
        .zip(net.parent_capacities())
        .fold(0.0, |m, (x, u)| m.max(x.abs() / (scale * u)))
}

/// Checks both output conditions: `|value − target| ≤ 1e-9·target` and
/// `|f(a)| ≤ (1+ε)u_e (1 + 1e-9)`.
pub fn verify_magic_flow(f: &FlowAssignment, net: &SymmetrizedNetwork, target: f64) -> bool {
    let value_ok = f
        .value(net)
        .map(|v| (v - target).abs() <= VERIFY_TOL * target)
        .unwrap_or(false);
    value_ok && capacity_ratio(f.values(), net) <= 1.0 + VERIFY_TOL
}

pub fn magic_solver(
    net: &SymmetrizedNetwork,
    target: f64,
    options: &MagicOptions,
    trace: &mut dyn FnMut(&TraceRecord),
) -> Result<MagicRun, MwuError> {
    let baseline = net.baseline_value();
    if !(target > baseline) {
        return Err(MwuError::BelowBaseline { target, baseline });
    }
    let edges = net.edge_count();
    let params = OracleParams::new(net.epsilon(), net.parent_arc_count());
    let budget = options
        .budget
        .unwrap_or_else(|| params.iteration_count(edges));
    let mut solver = match ElectricalSolver::new(net, params.solve_tolerance(edges)) {
        Ok(s) => s,
        Err(ElectricalError::Disconnected { .. }) => {
            return Ok(MagicRun {
                outcome: MagicOutcome::Fail(FailReason::Disconnected),
                oracle_calls: 0,
                budget,
                capacity_ratio: f64::INFINITY,
            })
        }
        Err(e) => return Err(e.into()),
    };
    let limit = if options.allow_doubling { 2 * budget } else { budget };
    let mut w = WeightVector::uniform(edges);
    let mut avg = Averages::new(edges, options.trailing_window);
    let mut ratio = f64::INFINITY;

    for k in 1..=limit {
        let step = oracle_step(&mut solver, net, &w, target, &params)?;
        trace(&TraceRecord {
            iteration: k - 1,
            verdict: step.verdict,
            diagnostics: step.diagnostics.clone(),
        });
        let (flow, cong) = match (step.flow, step.congestion) {
            (Some(f), Some(c)) => (f, c),
            _ => {
                return Ok(MagicRun {
                    outcome: MagicOutcome::Fail(FailReason::Oracle),
                    oracle_calls: k,
                    budget,
                    capacity_ratio: ratio,
                })
            }
        };
        avg.push(flow.values());
        let checkpoint = k == budget || k == limit;
        if (options.early_exit && k % check_stride(k) == 0) || checkpoint {
            let (r, candidate) = avg.best(net);
            ratio = r;
            if ratio <= 1.0 + VERIFY_TOL {
                let f = FlowAssignment::new(candidate);
                if verify_magic_flow(&f, net, target) {
                    return Ok(MagicRun {
                        outcome: MagicOutcome::Flow(f),
                        oracle_calls: k,
                        budget,
                        capacity_ratio: ratio,
                    });
                }
            }
        }
        if k < limit {
            w = update_weights(&w, &cong, &params)?;
        }
    }
    Ok(MagicRun {
        outcome: MagicOutcome::Fail(FailReason::PostVerification),
        oracle_calls: limit,
        budget,
        capacity_ratio: ratio,
    })
}

/// Candidates are checked every iteration up to 128, then 64 times per
/// doubling, always including the powers of two.
fn check_stride(k: usize) -> usize {
    let bits = usize::BITS - 1 - k.leading_zeros();
    1 << bits.saturating_sub(6)
}

/// Running means of the oracle flows: over all iterates, and over a trailing
/// window `[2^(j-1), k]` where `2^j ≤ k < 2^(j+1)`. The window drops the
/// early iterates computed under nearly uniform weights.
struct Averages {
    count: usize,
    all: Vec<f64>,
    window: Option<Window>,
    scratch: Vec<f64>,
}

struct Window {
    previous: Vec<f64>,
    current: Vec<f64>,
    previous_count: usize,
    current_count: usize,
}

impl Averages {
    fn new(edges: usize, trailing: bool) -> Self {
        Averages {
            count: 0,
            all: vec![0.0; edges],
            window: trailing.then(|| Window {
                previous: vec![0.0; edges],
                current: vec![0.0; edges],
                previous_count: 0,
                current_count: 0,
            }),
            scratch: vec![0.0; edges],
        }
    }

    fn push(&mut self, flow: &[f64]) {
        self.count += 1;
        for (acc, x) in self.all.iter_mut().zip(flow) {
            *acc += x;
        }
        if let Some(w) = &mut self.window {
            if self.count.is_power_of_two() {
                std::mem::swap(&mut w.previous, &mut w.current);
                w.current.iter_mut().for_each(|x| *x = 0.0);
                w.previous_count = w.current_count;
                w.current_count = 0;
            }
            for (acc, x) in w.current.iter_mut().zip(flow) {
                *acc += x;
            }
            w.current_count += 1;
        }
    }

    /// The candidate with the smaller capacity ratio, and that ratio.
    fn best(&mut self, net: &SymmetrizedNetwork) -> (f64, Vec<f64>) {
        let inv = 1.0 / self.count as f64;
        let full: Vec<f64> = self.all.iter().map(|s| s * inv).collect();
        let full_ratio = capacity_ratio(&full, net);
        let Some(w) = &self.window else {
            return (full_ratio, full);
        };
        let n = w.previous_count + w.current_count;
        if n == self.count {
            return (full_ratio, full);
        }
        let inv = 1.0 / n as f64;
        for ((out, a), b) in self.scratch.iter_mut().zip(&w.previous).zip(&w.current) {
            *out = (a + b) * inv;
        }
        let window_ratio = capacity_ratio(&self.scratch, net);
        if window_ratio < full_ratio {
            (window_ratio, self.scratch.clone())
        } else {
            (full_ratio, full)
        }
    }
}
