//! Acceptance criteria 1-8. Prints one line per criterion and exits non-zero
//! when any of them fails. `ACCEPTANCE_ONLY=1,4` restricts the run.

mod common;

use common::{brute_integral_max_flow, dense_min_energy, small_digraph, symmetrized_cut_formula};
use dirflow::electrical::ElectricalSolver;
use dirflow::generate::{random_network, GenParams};
use dirflow::mwu::{
    compute_resistances, magic_solver, verify_magic_flow, MagicOptions, MagicOutcome, OracleParams, TraceRecord,
    Verdict, WeightVector,
};
use dirflow::par::map_jobs;
use dirflow::recovery::{cycle_cancel, extract_directed, is_acyclic, subtract_and_halve};
use dirflow::{
    approx_max_flow, exact_max_flow, exact_undirected_max_flow, symmetrize, DirectedNetwork, FlowNetwork,
    Provenance, SolveOptions, SymmetrizedNetwork,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::Mutex;
use std::time::{Duration, Instant};

const IDENTITY_TOL: f64 = 1e-6;
const ENERGY_SLACK: f64 = 0.2 / 10.0;
const ELECTRICAL_EPS: f64 = 0.2;
const CONSERVATION_TOL: f64 = 1e-9;
const MAGIC_TOL: f64 = 1e-9;
const WALL_LIMIT: Duration = Duration::from_secs(300);

struct Outcome {
    pass: bool,
    detail: String,
}

fn corpus_1() -> Vec<DirectedNetwork> {
    (0..200).map(|seed| small_digraph(seed, 2, 12, 30, 5)).collect()
}

const CORPUS_1_EPS: [f64; 3] = [0.1, 0.25, 0.4];

fn relative_gap(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

fn criterion_1() -> Outcome {
    let started = Instant::now();
    let graphs = corpus_1();
    let jobs: Vec<(usize, f64)> = (0..graphs.len())
        .flat_map(|i| CORPUS_1_EPS.iter().map(move |&e| (i, e)))
        .collect();
    let gaps = map_jobs(&jobs, |&(i, eps)| {
        let g = &graphs[i];
        let f_star = exact_max_flow(g).0;
        let net = symmetrize(g, eps).unwrap();
        let closed = (2.0 + eps) * f_star + net.baseline_value();
        let got = exact_undirected_max_flow(&net);
        (relative_gap(got, closed), relative_gap(got, symmetrized_cut_formula(g, eps)))
    });
    let elapsed = started.elapsed();
    let cut_formula_misses = gaps.iter().filter(|g| g.1 > IDENTITY_TOL).count();
    let gaps: Vec<f64> = gaps.into_iter().map(|g| g.0).collect();
    let bad = gaps.iter().filter(|&&g| g > IDENTITY_TOL).count();
    let worst = gaps.iter().cloned().fold(0.0, f64::max);
    Outcome {
        pass: bad == 0 && elapsed < Duration::from_secs(10),
        detail: format!(
            "{bad}/{} (graph, eps) pairs off by more than {IDENTITY_TOL:e} relative, worst {worst:.3e}, {:.2}s \
             (min over cuts of (2+eps)fwd - eps*bwd + sum (1+eps)u misses {cut_formula_misses})",
            jobs.len(),
            elapsed.as_secs_f64()
        ),
    }
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst_ratio: f64 = 0.0;
    let mut worst_residual: f64 = 0.0;
    let mut failures = 0;
    for k in 0..100 {
        let g = small_digraph(10_000 + k, 2, 8, 20, 5);
        let net = symmetrize(&g, ELECTRICAL_EPS).unwrap();
        let weights: Vec<f64> = (0..net.edge_count()).map(|_| rng.gen_range(0.01..10.0)).collect();
        let w = WeightVector::from_values(weights);
        let r = compute_resistances(&net, &w, ELECTRICAL_EPS);
        let params = OracleParams::new(ELECTRICAL_EPS, g.arc_count());
        let value = net.baseline_value() * rng.gen_range(0.2..2.0);
        let mut solver = ElectricalSolver::new(&net, params.solve_tolerance(net.edge_count())).unwrap();
        let out = match solver.solve(&net, &r, value) {
            Ok(out) => out,
            Err(_) => {
                failures += 1;
                continue;
            }
        };
        let (min, _) = dense_min_energy(&net, r.values(), value).expect("dense oracle");
        worst_ratio = worst_ratio.max(out.energy / min);
        let residual = out.flow.max_interior_residual(&net);
        let value_gap = (out.flow.net_outflow(&net)[net.source()] - value).abs();
        worst_residual = worst_residual.max(residual.max(value_gap) / value);
    }
    Outcome {
        pass: failures == 0 && worst_ratio <= 1.0 + ENERGY_SLACK && worst_residual <= CONSERVATION_TOL,
        detail: format!(
            "100 graphs, worst energy / minimum = {worst_ratio:.12}, worst residual / F = {worst_residual:.2e}, {failures} solve errors"
        ),
    }
}

#[derive(Default, Debug)]
struct OracleAudit {
    calls: usize,
    flow_calls: usize,
    energy_violations: usize,
    tied_calls: usize,
    tied_violations: usize,
    width_violations: usize,
}

impl OracleAudit {
    fn record(&mut self, rec: &TraceRecord, net: &SymmetrizedNetwork) {
        let eps = net.epsilon();
        let rho = OracleParams::new(eps, net.parent_arc_count()).rho;
        let d = &rec.diagnostics;
        self.calls += 1;
        if rec.verdict == Verdict::Fail {
            return;
        }
        self.flow_calls += 1;
        if d.energy > d.threshold {
            self.energy_violations += 1;
        }
        if d.max_congestion > rho {
            self.width_violations += 1;
        }
        if rec.iteration == 0 {
            self.tied_calls += 1;
            if d.weighted_congestion >= (1.0 + eps) * d.weight_total {
                self.tied_violations += 1;
            }
        }
    }

    fn merge(&mut self, o: &OracleAudit) {
        self.calls += o.calls;
        self.flow_calls += o.flow_calls;
        self.energy_violations += o.energy_violations;
        self.tied_calls += o.tied_calls;
        self.tied_violations += o.tied_violations;
        self.width_violations += o.width_violations;
    }

    fn clean(&self) -> bool {
        self.energy_violations == 0 && self.tied_violations == 0 && self.width_violations == 0
    }
}

const FRACTIONS: [f64; 4] = [0.25, 0.5, 0.9, 1.0];

#[derive(Default)]
struct MagicTally {
    runs: usize,
    skipped_zero: usize,
    fails: Vec<String>,
    fails_above_ceiling: usize,
    contract_violations: Vec<String>,
    recovery_runs: usize,
    recovery_violations: Vec<String>,
    worst_recovery: f64,
}

/// Criteria 4 and 5 on one (graph, ε, fraction) job.
fn magic_job(g: &DirectedNetwork, eps: f64, frac: f64, audit: &mut OracleAudit) -> MagicTally {
    let mut t = MagicTally {
        worst_recovery: f64::INFINITY,
        ..Default::default()
    };
    let f_star = exact_max_flow(g).0;
    if f_star <= 0.0 {
        t.skipped_zero = 1;
        return t;
    }
    let net = symmetrize(g, eps).unwrap();
    let f = frac * f_star;
    let target = 2.0 * f + net.baseline_value();
    t.runs = 1;
    let run = magic_solver(&net, target, &MagicOptions::default(), &mut |rec| audit.record(rec, &net)).unwrap();
    let flow = match run.outcome {
        MagicOutcome::Flow(flow) => flow,
        MagicOutcome::Fail(reason) => {
            let ceiling = exact_undirected_max_flow(&net);
            t.fails_above_ceiling += usize::from(target > ceiling * (1.0 + 1e-12));
            t.fails.push(format!(
                "F = {frac}F* (eps {eps}): {reason:?} after {} calls, F_tot {target} vs undirected max flow {ceiling}",
                run.oracle_calls
            ));
            return t;
        }
    };
    let value = flow.value(&net).unwrap();
    let over = flow
        .values()
        .iter()
        .zip(net.parent_capacities())
        .fold(0.0f64, |m, (x, u)| m.max(x.abs() / ((1.0 + eps) * u)));
    if (value - target).abs() > MAGIC_TOL * target || over > 1.0 + MAGIC_TOL || !verify_magic_flow(&flow, &net, target) {
        t.contract_violations.push(format!("value {value} vs {target}, capacity ratio {over}"));
        return t;
    }

    t.recovery_runs = 1;
    let mut problems = Vec::new();
    let halved = match subtract_and_halve(&flow, &net) {
        Ok(h) => h,
        Err(e) => {
            t.recovery_violations.push(e.to_string());
            return t;
        }
    };
    let acyclic = cycle_cancel(&halved, &net);
    if !is_acyclic(&acyclic, &net) {
        problems.push("cycle remains after canceling".to_string());
    }
    let max_cap = g.arcs().iter().fold(0.0f64, |m, a| m.max(a.capacity));
    let link_max = acyclic
        .values()
        .iter()
        .zip(net.edges())
        .filter(|(_, e)| e.provenance != Provenance::Original)
        .fold(0.0f64, |m, (x, _)| m.max(x.abs()));
    if link_max > 1e-9 * max_cap {
        problems.push(format!("link flow {link_max} after canceling"));
    }
    match extract_directed(&acyclic, &net, g) {
        Ok(rec) => {
            let d = &rec.directed_flow;
            if d.values().iter().zip(g.arcs()).any(|(x, a)| *x < 0.0 || *x > a.capacity) {
                problems.push("directed flow outside [0, u]".to_string());
            }
            match d.value_checked(g, CONSERVATION_TOL * max_cap.max(1.0)) {
                Ok(v) => {
                    let bound = f / (1.0 + eps);
                    t.worst_recovery = t.worst_recovery.min(v / bound);
                    if v < bound * (1.0 - 1e-9) {
                        problems.push(format!("recovered {v} < F/(1+eps) = {bound}"));
                    }
                }
                Err(e) => problems.push(e.to_string()),
            }
        }
        Err(e) => problems.push(e.to_string()),
    }
    t.recovery_violations.extend(problems.into_iter().map(|p| format!("F = {frac}F* (eps {eps}): {p}")));
    t
}

fn criteria_4_5(audit: &Mutex<OracleAudit>) -> (Outcome, Outcome) {
    let started = Instant::now();
    let graphs = corpus_1();
    let mut jobs = Vec::new();
    for i in 0..graphs.len() {
        for &eps in &CORPUS_1_EPS {
            for &frac in &FRACTIONS {
                jobs.push((i, eps, frac));
            }
        }
    }
    let tallies = map_jobs(&jobs, |&(i, eps, frac)| {
        let mut local = OracleAudit::default();
        let t = magic_job(&graphs[i], eps, frac, &mut local);
        audit.lock().unwrap().merge(&local);
        (i, frac, t)
    });
    let mut runs = 0;
    let mut skipped = 0;
    let mut fails = Vec::new();
    let mut above = 0;
    let mut by_fraction = [0usize; 4];
    let mut contract = Vec::new();
    let mut rec_runs = 0;
    let mut rec_bad = Vec::new();
    let mut worst: f64 = f64::INFINITY;
    for (i, frac, t) in tallies {
        runs += t.runs;
        skipped += t.skipped_zero;
        above += t.fails_above_ceiling;
        if !t.fails.is_empty() {
            by_fraction[FRACTIONS.iter().position(|&f| f == frac).unwrap()] += t.fails.len();
        }
        fails.extend(t.fails.into_iter().map(|s| format!("graph {i}, {s}")));
        contract.extend(t.contract_violations.into_iter().map(|s| format!("graph {i}, {s}")));
        rec_runs += t.recovery_runs;
        rec_bad.extend(t.recovery_violations.into_iter().map(|s| format!("graph {i}, {s}")));
        worst = worst.min(t.worst_recovery);
    }
    let first = |v: &[String]| v.first().cloned().map(|s| format!("; first: {s}")).unwrap_or_default();
    let c4 = Outcome {
        pass: fails.is_empty() && contract.is_empty(),
        detail: format!(
            "{} successes out of {runs} runs ({skipped} jobs with F* = 0 skipped), {} fails (by fraction {:?}; {above} with F_tot \
             above the undirected max flow of the symmetrized network), {} contract violations, {:.1}s{}{}",
            runs - fails.len() - contract.len(),
            fails.len(),
            by_fraction,
            contract.len(),
            started.elapsed().as_secs_f64(),
            first(&fails),
            first(&contract)
        ),
    };
    let c5 = Outcome {
        pass: rec_bad.is_empty() && rec_runs > 0,
        detail: format!(
            "{rec_runs} recoveries, {} violations, worst value / (F/(1+eps)) = {worst:.6}{}",
            rec_bad.len(),
            first(&rec_bad)
        ),
    };
    (c4, c5)
}

struct Desk {
    n: usize,
    m: usize,
    eps: f64,
    seed: u64,
}

/// 50 instances, sizes spread geometrically up to n = 200, m = 2000.
fn corpus_6() -> Vec<Desk> {
    (0..50)
        .map(|i| {
            let x = i as f64 / 49.0;
            let n = (12.0 * (200.0f64 / 12.0).powf(x)).round() as usize;
            let m = (10 * n).min(2000).min(n * (n - 1));
            Desk {
                n,
                m,
                eps: if i % 2 == 0 { 0.25 } else { 0.1 },
                seed: 600 + i as u64,
            }
        })
        .collect()
}

struct DeskResult {
    line: String,
    ok: bool,
}

fn criteria_6_7(audit: &Mutex<OracleAudit>) -> (Outcome, Outcome) {
    let corpus = corpus_6();
    let results = map_jobs(&corpus, |d| {
        let g = random_network(&GenParams {
            n: d.n,
            m: d.m,
            max_capacity: 10,
            seed: d.seed,
        })
        .unwrap();
        let f_star = exact_max_flow(&g).0;
        let mut local = OracleAudit::default();
        let net_eps = d.eps * SolveOptions::default().inner_share;
        let net = symmetrize(&g, net_eps).unwrap();
        let started = Instant::now();
        let (rec, report) = approx_max_flow(&g, d.eps, &SolveOptions::default(), &mut |t| local.record(t.record, &net)).unwrap();
        let wall = started.elapsed();
        audit.lock().unwrap().merge(&local);
        let flow = &rec.directed_flow;
        let max_cap = g.arcs().iter().fold(0.0f64, |m, a| m.max(a.capacity));
        let feasible = flow.values().iter().zip(g.arcs()).all(|(x, a)| *x >= 0.0 && *x <= a.capacity)
            && flow.value_checked(&g, CONSERVATION_TOL * max_cap.max(1.0)).is_ok();
        let ratio = if f_star > 0.0 { rec.value / f_star } else { 1.0 };
        let ok = feasible && rec.value >= (1.0 - d.eps) * f_star && wall <= WALL_LIMIT;
        DeskResult {
            line: format!(
                "n={:3} m={:4} eps={:.2} F*={:6} value={:10.4} ratio={:.4} probes={:2} oracle_calls={:7} {:6.1}s{}",
                d.n,
                d.m,
                d.eps,
                f_star,
                rec.value,
                ratio,
                report.search_iterations,
                report.oracle_calls,
                wall.as_secs_f64(),
                if ok { "" } else { "  <-- FAIL" }
            ),
            ok,
        }
    });
    for r in &results {
        println!("    {}", r.line);
    }
    let bad = results.iter().filter(|r| !r.ok).count();
    (
        Outcome {
            pass: bad == 0,
            detail: format!("{}/{} instances feasible, >= (1-eps)F*, within {}s", results.len() - bad, results.len(), WALL_LIMIT.as_secs()),
        },
        Outcome {
            pass: true,
            detail: "oracle-call counts reported per instance above (not asserted)".to_string(),
        },
    )
}

fn criterion_8() -> Outcome {
    let graphs: Vec<DirectedNetwork> = (0..500).map(|seed| small_digraph(50_000 + seed, 2, 5, 9, 2)).collect();
    let bad = map_jobs(&graphs, |g| exact_max_flow(g).0 != brute_integral_max_flow(g))
        .into_iter()
        .filter(|&b| b)
        .count();
    Outcome {
        pass: bad == 0,
        detail: format!("{}/500 graphs match brute-force enumeration exactly", 500 - bad),
    }
}

fn main() {
    let only: Option<Vec<u32>> = std::env::var("ACCEPTANCE_ONLY")
        .ok()
        .map(|s| s.split(',').filter_map(|x| x.trim().parse().ok()).collect());
    let wants = |k: u32| only.as_ref().is_none_or(|v| v.contains(&k));
    let mut results: Vec<(u32, &str, Outcome)> = Vec::new();
    let audit = Mutex::new(OracleAudit::default());

    if wants(1) {
        results.push((1, "reduction identity", criterion_1()));
    }
    if wants(2) {
        results.push((2, "electrical contract", criterion_2()));
    }
    if wants(4) || wants(5) || wants(3) {
        let (c4, c5) = criteria_4_5(&audit);
        results.push((4, "magic solver contract", c4));
        results.push((5, "directed recovery", c5));
    }
    if wants(6) || wants(7) || wants(3) {
        let (c6, c7) = criteria_6_7(&audit);
        results.push((6, "desk-scale approximation", c6));
        results.push((7, "oracle-call count", c7));
    }
    if wants(3) || wants(4) || wants(6) {
        let a = audit.lock().unwrap();
        results.push((
            3,
            "oracle inequalities",
            Outcome {
                pass: a.clean() && a.flow_calls > 0,
                detail: format!(
                    "{} calls ({} returned flows): {} energy > T, {} of {} tied calls with sum w cong >= (1+eps)|w|, {} above width",
                    a.calls, a.flow_calls, a.energy_violations, a.tied_violations, a.tied_calls, a.width_violations
                ),
            },
        ));
    }
    if wants(8) {
        results.push((8, "exact oracle", criterion_8()));
    }

    results.sort_by_key(|r| r.0);
    let mut failed = 0;
    for (k, name, o) in &results {
        println!("criterion {k} ({name}): {}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        failed += usize::from(!o.pass);
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
