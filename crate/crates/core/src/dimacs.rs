//! DIMACS max-flow format.
//!
//! ```text
//! c comment
//! p max <n> <m>
//! n <id> s
//! n <id> t
//! a <tail> <head> <capacity>
//! ```
//!
//! Vertex ids are 1-based in the file and 0-based in memory.

use crate::graph::{Arc, DirectedNetwork, FlowNetwork, GraphError, LoadReport};
use std::fmt::Write as _;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseError {
    #[error("malformed problem line, line {line}")]
    MalformedHeader { line: usize },
    #[error("missing problem line")]
    MissingHeader,
    #[error("duplicate problem line, line {line}")]
    DuplicateHeader { line: usize },
    #[error("unknown line tag '{tag}', line {line}")]
    UnknownTag { tag: String, line: usize },
    #[error("malformed {kind} line, line {line}")]
    Malformed { kind: &'static str, line: usize },
    #[error("vertex out of range, line {line}")]
    VertexOutOfRange { line: usize },
    #[error("source designated twice, line {line}")]
    DuplicateSource { line: usize },
    #[error("sink designated twice, line {line}")]
    DuplicateSink { line: usize },
    #[error("missing source designation")]
    MissingSource,
    #[error("missing sink designation")]
    MissingSink,
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Parsed {
    pub network: DirectedNetwork,
    /// Arc indices in the report are 0-based positions among `a` lines.
    pub report: LoadReport,
    pub warnings: Vec<String>,
}

fn vertex(tok: Option<&str>, n: usize, line: usize, kind: &'static str) -> Result<usize, ParseError> {
    let id: usize = tok
        .and_then(|t| t.parse().ok())
        .ok_or(ParseError::Malformed { kind, line })?;
    if id == 0 || id > n {
        return Err(ParseError::VertexOutOfRange { line });
    }
    Ok(id - 1)
}

pub fn parse_dimacs(text: &str) -> Result<Parsed, ParseError> {
    let mut header: Option<(usize, usize)> = None;
    let (mut source, mut sink) = (None, None);
    let mut arcs = Vec::new();
    let mut arc_lines = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let mut tok = raw.split_whitespace();
        let Some(tag) = tok.next() else { continue };
        match tag {
            "c" => {}
            "p" => {
                if header.is_some() {
                    return Err(ParseError::DuplicateHeader { line });
                }
                let kind = tok.next();
                let n = tok.next().and_then(|t| t.parse::<usize>().ok());
                let m = tok.next().and_then(|t| t.parse::<usize>().ok());
                match (kind, n, m, tok.next()) {
                    (Some("max"), Some(n), Some(m), None) if n > 0 => header = Some((n, m)),
                    _ => return Err(ParseError::MalformedHeader { line }),
                }
            }
            "n" => {
                let (n, _) = header.ok_or(ParseError::MissingHeader)?;
                let v = vertex(tok.next(), n, line, "node")?;
                match (tok.next(), tok.next()) {
                    (Some("s"), None) => {
                        if source.replace(v).is_some() {
                            return Err(ParseError::DuplicateSource { line });
                        }
                    }
                    (Some("t"), None) => {
                        if sink.replace(v).is_some() {
                            return Err(ParseError::DuplicateSink { line });
                        }
                    }
                    _ => return Err(ParseError::Malformed { kind: "node", line }),
                }
            }
            "a" => {
                let (n, _) = header.ok_or(ParseError::MissingHeader)?;
                let tail = vertex(tok.next(), n, line, "arc")?;
                let head = vertex(tok.next(), n, line, "arc")?;
                let cap: f64 = tok
                    .next()
                    .and_then(|t| t.parse().ok())
                    .filter(|c: &f64| c.is_finite() && *c >= 0.0)
                    .ok_or(ParseError::Malformed { kind: "arc", line })?;
                if tok.next().is_some() {
                    return Err(ParseError::Malformed { kind: "arc", line });
                }
                arcs.push(Arc::new(tail, head, cap));
                arc_lines.push(line);
            }
            other => {
                return Err(ParseError::UnknownTag {
                    tag: other.to_string(),
                    line,
                })
            }
        }
    }
    let (n, m) = header.ok_or(ParseError::MissingHeader)?;
    let source = source.ok_or(ParseError::MissingSource)?;
    let sink = sink.ok_or(ParseError::MissingSink)?;
    let mut warnings = Vec::new();
    if arcs.len() != m {
        warnings.push(format!(
            "problem line declares {m} arcs, file has {}",
            arcs.len()
        ));
    }
    let (network, report) = DirectedNetwork::new(n, arcs, source, sink)?;
    for &i in &report.self_loops {
        warnings.push(format!("dropped self-loop, line {}", arc_lines[i]));
    }
    for &i in &report.zero_capacity {
        warnings.push(format!("dropped zero-capacity arc, line {}", arc_lines[i]));
    }
    Ok(Parsed {
        network,
        report,
        warnings,
    })
}

/// Formats a real with at most 12 significant digits; integers print without
/// a fractional part.
pub fn format_number(x: f64) -> String {
    if x == x.trunc() && x.abs() < 1e15 {
        format!("{}", x as i64)
    } else {
        let rounded: f64 = format!("{x:.11e}").parse().unwrap_or(x);
        format!("{rounded}")
    }
}

pub fn write_dimacs(g: &DirectedNetwork) -> String {
    let mut out = String::new();
    writeln!(out, "p max {} {}", g.vertex_count(), g.arc_count()).unwrap();
    writeln!(out, "n {} s", g.source() + 1).unwrap();
    writeln!(out, "n {} t", g.sink() + 1).unwrap();
    for a in g.arcs() {
        writeln!(
            out,
            "a {} {} {}",
            a.tail + 1,
            a.head + 1,
            format_number(a.capacity)
        )
        .unwrap();
    }
    out
}
