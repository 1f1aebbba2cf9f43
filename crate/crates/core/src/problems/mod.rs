//! Benchmark problems with their initial guesses, continuation settings and
//! reference statistics.

pub mod goddard;
pub mod vdp;
pub mod zermelo;

use crate::continuation::{ContinuationConfig, Method, OcpGuess};
use crate::ocp::OcpSpec;

/// Final barrier value targeted by every benchmark.
pub const DEFAULT_TOL: f64 = 1e-7;

/// Registry keys accepted by [`bundle`].
pub const REGISTRY: [&str; 3] = ["vdp", "zermelo", "goddard"];

/// Published performance row. `exec_time` is in seconds and machine dependent.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ReferenceStats {
    pub method: Method,
    pub alpha: f64,
    pub iterations: usize,
    pub mesh_len: usize,
    pub exec_time: f64,
}

#[derive(Debug, Clone)]
pub struct BenchmarkBundle {
    pub name: &'static str,
    /// Fixed-horizon form handed to the solver.
    pub spec: OcpSpec,
    /// Problem as posed, possibly with a free final time.
    pub original: OcpSpec,
    pub guess_primal: OcpGuess,
    pub guess_primal_dual: OcpGuess,
    pub config_primal: ContinuationConfig,
    pub config_primal_dual: ContinuationConfig,
    pub reference: Vec<ReferenceStats>,
    /// Departures from the commonly printed statement of the problem.
    pub corrections: Vec<&'static str>,
}

impl BenchmarkBundle {
    pub fn guess(&self, method: Method) -> &OcpGuess {
        match method {
            Method::Primal => &self.guess_primal,
            Method::PrimalDual => &self.guess_primal_dual,
        }
    }

    pub fn config(&self, method: Method) -> &ContinuationConfig {
        match method {
            Method::Primal => &self.config_primal,
            Method::PrimalDual => &self.config_primal_dual,
        }
    }

    pub fn reference(&self, method: Method) -> Option<&ReferenceStats> {
        self.reference.iter().find(|r| r.method == method)
    }
}

/// Looks up a benchmark by registry key.
pub fn bundle(name: &str) -> Option<BenchmarkBundle> {
    match name {
        "vdp" => Some(vdp::bundle()),
        "zermelo" => Some(zermelo::bundle()),
        "goddard" => Some(goddard::bundle()),
        _ => None,
    }
}
