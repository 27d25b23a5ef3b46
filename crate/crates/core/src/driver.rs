//! Search over the target value, wrapped around the symmetrized-network solver
//! and the recovery pipeline.

use crate::exact::exact_max_flow;
use crate::graph::{check_epsilon, symmetrize, DirectedNetwork, FlowAssignment, GraphError};
use crate::mwu::{magic_solver, MagicOptions, MagicOutcome, MwuError, TraceRecord};
use crate::recovery::{recover, RecoveryError, RecoveryResult};
use std::time::{Duration, Instant};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DriverError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Mwu(#[from] MwuError),
    #[error(transparent)]
    Recovery(#[from] RecoveryError),
}

/// Fraction of the caller's ε handed to the symmetrization, solver and recovery.
pub const INNER_EPSILON_SHARE: f64 = 1.0;

/// Bisection stops once the bracket is this many halvings below the initial
/// upper bound.
const FLOOR_HALVINGS: i32 = 20;

const MAX_PROBES: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOptions {
    pub magic: MagicOptions,
    /// Also compute the exact value and fill in `exact_value` / `ratio`.
    pub exact_check: bool,
    /// Fraction of ε used by the symmetrization, solver and recovery.
    pub inner_share: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            magic: MagicOptions::default(),
            exact_check: false,
            inner_share: INNER_EPSILON_SHARE,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeRecord {
    pub target: f64,
    pub success: bool,
    pub recovered: Option<f64>,
    pub oracle_calls: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub approx_value: f64,
    pub exact_value: Option<f64>,
    pub ratio: Option<f64>,
    pub epsilon: f64,
    pub search_iterations: usize,
    pub oracle_calls: usize,
    pub mwu_iterations_total: usize,
    pub fail_count: usize,
    pub wall_time: Duration,
    pub probes: Vec<ProbeRecord>,
}

/// Trace record tagged with the probe it belongs to.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeTrace<'a> {
    pub probe: usize,
    pub record: &'a TraceRecord,
}

/// `(1−ε)`-approximate maximum flow of `g`.
pub fn approx_max_flow(
    g: &DirectedNetwork,
    epsilon: f64,
    options: &SolveOptions,
    trace: &mut dyn FnMut(ProbeTrace<'_>),
) -> Result<(RecoveryResult, SolveReport), DriverError> {
    check_epsilon(epsilon)?;
    let started = Instant::now();
    let inner = epsilon * options.inner_share;
    let mut best = RecoveryResult {
        directed_flow: FlowAssignment::zero(0),
        value: 0.0,
        scaled: false,
        max_capacity_ratio: 0.0,
    };
    let mut report = SolveReport {
        approx_value: 0.0,
        exact_value: None,
        ratio: None,
        epsilon,
        search_iterations: 0,
        oracle_calls: 0,
        mwu_iterations_total: 0,
        fail_count: 0,
        wall_time: Duration::ZERO,
        probes: Vec::new(),
    };

    // Arcs off every s-t path carry no flow in an acyclic maximum flow; they
    // would only add slack to the symmetrized cuts.
    let kept = g.useful_arcs();
    let h = g.restrict(&kept);
    if !kept.is_empty() {
        let g = &h;
        let net = symmetrize(g, inner)?;
        let baseline = net.baseline_value();
        let granularity = 1.0 + inner / 2.0;
        let mut f_hi = g.degree_cut_bound();
        let mut f_lo: f64 = 0.0;
        let floor = f_hi * 2f64.powi(-FLOOR_HALVINGS);
        // Bracket over probe targets: a probe above (1+ε')F* cannot pass the
        // capacity check, so (1+ε')·F_hi bounds every useful target.
        let mut probe_lo: f64 = 0.0;
        let mut probe_hi = (1.0 + inner) * f_hi;

        while report.search_iterations < MAX_PROBES {
            if f_hi <= granularity * f_lo.max(floor) {
                break;
            }
            let lo = probe_lo.max(floor);
            if probe_hi <= granularity * lo {
                break;
            }
            let target = 0.5 * (probe_hi + lo);
            let probe = report.search_iterations;
            report.search_iterations += 1;

            let mut calls = 0;
            let run = magic_solver(&net, 2.0 * target + baseline, &options.magic, &mut |rec| {
                calls += 1;
                trace(ProbeTrace { probe, record: rec });
            })?;
            report.oracle_calls += run.oracle_calls;
            match run.outcome {
                MagicOutcome::Flow(f) => {
                    report.mwu_iterations_total += run.oracle_calls.saturating_sub(1);
                    let rec = recover(&f, &net, g)?;
                    report.probes.push(ProbeRecord {
                        target,
                        success: true,
                        recovered: Some(rec.value),
                        oracle_calls: run.oracle_calls,
                    });
                    probe_lo = target;
                    f_lo = f_lo.max(rec.value);
                    if rec.value >= best.value {
                        best = rec;
                    }
                }
                MagicOutcome::Fail(_) => {
                    report.mwu_iterations_total += run.oracle_calls.saturating_sub(1);
                    report.fail_count += 1;
                    report.probes.push(ProbeRecord {
                        target,
                        success: false,
                        recovered: None,
                        oracle_calls: run.oracle_calls,
                    });
                    probe_hi = target;
                    // Failure is only permitted above (2+ε')F* + Σ(1+ε')u_e.
                    f_hi = f_hi.min(target / granularity).max(f_lo);
                }
            }
            debug_assert_eq!(calls, run.oracle_calls);
        }
    }

    let mut full = vec![0.0; g.arc_count()];
    for (&i, &x) in kept.iter().zip(best.directed_flow.values()) {
        full[i] = x;
    }
    best.directed_flow = FlowAssignment::new(full);
    report.approx_value = best.value;
    if options.exact_check {
        let exact = exact_max_flow(g).0;
        report.exact_value = Some(exact);
        report.ratio = Some(if exact > 0.0 { best.value / exact } else { 1.0 });
    }
    report.wall_time = started.elapsed();
    Ok((best, report))
}
