//! Approximate maximum flow on directed networks.
//!
//! Each arc `(u, v)` becomes three undirected edges (`u–v`, `s–v`, `u–t`); the
//! undirected problem is solved by multiplicative weights over electrical
//! flows, and a feasible directed flow is recovered by subtracting the
//! canonical per-arc flows and canceling cycles. A search over the target
//! value yields a `(1−ε)`-approximate maximum flow.

pub mod cli;
pub mod dimacs;
pub mod driver;
pub mod electrical;
pub mod exact;
pub mod generate;
pub mod graph;
pub mod mwu;
pub mod par;
pub mod recovery;

pub use driver::{approx_max_flow, SolveOptions, SolveReport};
pub use exact::{exact_max_flow, exact_undirected_max_flow};
pub use graph::{
    symmetrize, Arc, CongestionVector, DirectedNetwork, FlowAssignment, FlowNetwork, Provenance,
    SymmetrizedNetwork,
};
