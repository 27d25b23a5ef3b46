//! Command-line frontend: `solve`, `gen` and `verify`.

use crate::dimacs::{parse_dimacs, write_dimacs};
use crate::driver::{approx_max_flow, ProbeTrace, SolveOptions, SolveReport};
use crate::exact::{exact_max_flow, exact_undirected_max_flow};
use crate::generate::{random_network, GenParams};
use crate::graph::{check_epsilon, symmetrize, DirectedNetwork, FlowAssignment, FlowNetwork};
use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_INTERNAL: i32 = 3;
pub const EXIT_VERIFY: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "dirflow", about = "Approximate directed max flow via electrical flows")]
pub struct RunConfig {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Approximate the max flow of a DIMACS instance.
    Solve {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 0.1)]
        epsilon: f64,
        /// Compare against the exact max flow.
        #[arg(long)]
        exact_check: bool,
        /// JSON report destination (standard output when absent).
        #[arg(long)]
        report: Option<PathBuf>,
        /// JSON-lines trace, one record per oracle call.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Flow certificate (per-arc flows) destination.
        #[arg(long)]
        flow_out: Option<PathBuf>,
    },
    /// Write a seeded random DIMACS instance.
    Gen {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: usize,
        #[arg(long, default_value_t = 10)]
        max_cap: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Destination (standard output when absent).
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Check the symmetrization identity and, optionally, a flow certificate.
    Verify {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 0.25)]
        epsilon: f64,
        #[arg(long)]
        certificate: Option<PathBuf>,
    },
}

/// Rounds to 12 significant digits.
pub fn sig12(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.11e}").parse().unwrap_or(x)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportJson {
    pub instance: String,
    pub n: usize,
    pub m: usize,
    pub epsilon: f64,
    pub approx_value: f64,
    pub exact_value: Option<f64>,
    pub ratio: Option<f64>,
    pub search_iterations: usize,
    pub oracle_calls: usize,
    pub mwu_iterations_total: usize,
    pub fail_count: usize,
    pub wall_time_ms: f64,
}

impl ReportJson {
    pub fn new(instance: &str, g: &DirectedNetwork, r: &SolveReport) -> Self {
        ReportJson {
            instance: instance.to_string(),
            n: g.vertex_count(),
            m: g.arc_count(),
            epsilon: sig12(r.epsilon),
            approx_value: sig12(r.approx_value),
            exact_value: r.exact_value.map(sig12),
            ratio: r.ratio.map(sig12),
            search_iterations: r.search_iterations,
            oracle_calls: r.oracle_calls,
            mwu_iterations_total: r.mwu_iterations_total,
            fail_count: r.fail_count,
            wall_time_ms: sig12(r.wall_time.as_secs_f64() * 1e3),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceLine {
    pub probe: usize,
    pub iter: usize,
    pub energy: f64,
    pub threshold: f64,
    pub max_cong: f64,
    pub weighted_cong: f64,
    pub weight_total: f64,
}

impl TraceLine {
    pub fn new(t: &ProbeTrace<'_>) -> Self {
        let d = &t.record.diagnostics;
        TraceLine {
            probe: t.probe,
            iter: t.record.iteration,
            energy: sig12(d.energy),
            threshold: sig12(d.threshold),
            max_cong: sig12(d.max_congestion),
            weighted_cong: sig12(d.weighted_congestion),
            weight_total: sig12(d.weight_total),
        }
    }
}

/// Per-arc flows in the order of the loaded network's arcs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub value: f64,
    pub arc_flows: Vec<f64>,
}

/// Problems found in a certificate.
pub fn check_certificate(g: &DirectedNetwork, cert: &Certificate, exact: f64) -> Vec<String> {
    let mut problems = Vec::new();
    if cert.arc_flows.len() != g.arc_count() {
        problems.push(format!(
            "certificate has {} arc flows, network has {} arcs",
            cert.arc_flows.len(),
            g.arc_count()
        ));
        return problems;
    }
    for (i, (&x, a)) in cert.arc_flows.iter().zip(g.arcs()).enumerate() {
        let tol = 1e-9 * a.capacity.max(1.0);
        if x < -tol || x > a.capacity + tol {
            problems.push(format!(
                "arc {} flow {} outside [0, {}]",
                i + 1,
                x,
                a.capacity
            ));
        }
    }
    let f = FlowAssignment::new(cert.arc_flows.clone());
    match f.value(g) {
        Ok(v) => {
            if (v - cert.value).abs() > 1e-6 * v.abs().max(1.0) {
                problems.push(format!("claimed value {} but flow carries {}", cert.value, v));
            }
            if v > exact * (1.0 + 1e-9) + 1e-9 {
                problems.push(format!("value {v} exceeds the maximum {exact}"));
            }
        }
        Err(e) => problems.push(e.to_string()),
    }
    problems
}

fn load(path: &Path) -> Result<DirectedNetwork, i32> {
    let text = fs::read_to_string(path).map_err(|e| {
        eprintln!("error: cannot read {}: {e}", path.display());
        EXIT_INPUT
    })?;
    let parsed = parse_dimacs(&text).map_err(|e| {
        eprintln!("error: {}: {e}", path.display());
        EXIT_INPUT
    })?;
    for w in &parsed.warnings {
        eprintln!("warning: {w}");
    }
    Ok(parsed.network)
}

fn write_out(path: Option<&Path>, text: &str) -> Result<(), i32> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| {
            eprintln!("error: cannot write {}: {e}", p.display());
            EXIT_INPUT
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn check_eps(epsilon: f64) -> Result<(), i32> {
    check_epsilon(epsilon).map_err(|e| {
        eprintln!("error: {e}");
        EXIT_USAGE
    })
}

fn cmd_solve(
    input: &Path,
    epsilon: f64,
    exact_check: bool,
    report: Option<&Path>,
    trace: Option<&Path>,
    flow_out: Option<&Path>,
) -> Result<(), i32> {
    check_eps(epsilon)?;
    let g = load(input)?;
    let mut trace_file = match trace {
        Some(p) => Some(std::io::BufWriter::new(fs::File::create(p).map_err(|e| {
            eprintln!("error: cannot write {}: {e}", p.display());
            EXIT_INPUT
        })?)),
        None => None,
    };
    let mut trace_error = None;
    let options = SolveOptions {
        exact_check,
        ..SolveOptions::default()
    };
    let result = approx_max_flow(&g, epsilon, &options, &mut |t| {
        if let Some(out) = trace_file.as_mut() {
            let line = serde_json::to_string(&TraceLine::new(&t)).expect("trace serializes");
            if let Err(e) = writeln!(out, "{line}") {
                trace_error.get_or_insert(e);
            }
        }
    });
    let (rec, rep) = result.map_err(|e| {
        eprintln!("error: internal invariant violated: {e}");
        EXIT_INTERNAL
    })?;
    if let Some(mut out) = trace_file {
        if let Some(e) = trace_error.or_else(|| out.flush().err()) {
            eprintln!("error: writing trace: {e}");
            return Err(EXIT_INPUT);
        }
    }
    let json = ReportJson::new(&input.display().to_string(), &g, &rep);
    let mut text = serde_json::to_string_pretty(&json).expect("report serializes");
    text.push('\n');
    write_out(report, &text)?;
    if let Some(p) = flow_out {
        let cert = Certificate {
            value: sig12(rec.value),
            arc_flows: rec.directed_flow.values().to_vec(),
        };
        let mut text = serde_json::to_string(&cert).expect("certificate serializes");
        text.push('\n');
        write_out(Some(p), &text)?;
    }
    Ok(())
}

fn cmd_gen(n: usize, m: usize, max_cap: u64, seed: u64, output: Option<&Path>) -> Result<(), i32> {
    let g = random_network(&GenParams {
        n,
        m,
        max_capacity: max_cap,
        seed,
    })
    .map_err(|e| {
        eprintln!("error: {e}");
        EXIT_USAGE
    })?;
    let text = format!("c seed {seed}\n{}", write_dimacs(&g));
    write_out(output, &text)
}

fn cmd_verify(input: &Path, epsilon: f64, certificate: Option<&Path>) -> Result<(), i32> {
    check_eps(epsilon)?;
    let g = load(input)?;
    let (exact, _) = exact_max_flow(&g);
    let net = symmetrize(&g, epsilon).map_err(|e| {
        eprintln!("error: {e}");
        EXIT_INTERNAL
    })?;
    let undirected = exact_undirected_max_flow(&net);
    let predicted = (2.0 + epsilon) * exact + net.baseline_value();
    let mut ok = (undirected - predicted).abs() <= 1e-6 * predicted.abs().max(1.0);
    println!(
        "max flow {}; symmetrized max flow {}; (2+eps)F* + sum (1+eps)u_e = {}; {}",
        sig12(exact),
        sig12(undirected),
        sig12(predicted),
        if ok { "identity holds" } else { "IDENTITY VIOLATED" }
    );
    if let Some(p) = certificate {
        let text = fs::read_to_string(p).map_err(|e| {
            eprintln!("error: cannot read {}: {e}", p.display());
            EXIT_INPUT
        })?;
        let cert: Certificate = serde_json::from_str(&text).map_err(|e| {
            eprintln!("error: {}: {e}", p.display());
            EXIT_INPUT
        })?;
        let problems = check_certificate(&g, &cert, exact);
        if problems.is_empty() {
            println!("certificate valid, value {}", sig12(cert.value));
        } else {
            ok = false;
            for pr in problems {
                println!("certificate invalid: {pr}");
            }
        }
    }
    if ok {
        Ok(())
    } else {
        Err(EXIT_VERIFY)
    }
}

/// Runs a parsed command and returns the process exit status.
pub fn run(cfg: RunConfig) -> i32 {
    let result = match &cfg.command {
        Command::Solve {
            input,
            epsilon,
            exact_check,
            report,
            trace,
            flow_out,
        } => cmd_solve(
            input,
            *epsilon,
            *exact_check,
            report.as_deref(),
            trace.as_deref(),
            flow_out.as_deref(),
        ),
        Command::Gen {
            n,
            m,
            max_cap,
            seed,
            output,
        } => cmd_gen(*n, *m, *max_cap, *seed, output.as_deref()),
        Command::Verify {
            input,
            epsilon,
            certificate,
        } => cmd_verify(input, *epsilon, certificate.as_deref()),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(code) => code,
    }
}
