//! JSON report blocks for `theory` and `fullrun`.

use mixphase::extraction::Status;
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TheoryBlock {
    /// Pure-state Pancharatnam phase φ; absent when ν = 0.
    pub phi: Option<f64>,
    pub nu: f64,
    /// Mixed-state phase Φ, modulo π.
    pub mixed_phi: Option<f64>,
    pub visibility: f64,
    pub cos2_phi: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunInputs {
    pub r: f64,
    pub xi: f64,
    pub delta: f64,
    pub zeta: f64,
    pub samples: usize,
    pub analyzer_samples: usize,
    pub shots: Option<u64>,
    pub seed: u64,
    pub tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Measured {
    pub i_min_rho: f64,
    pub i_max_rho: f64,
    pub i_min_t: f64,
    pub i_max_t: f64,
    pub r_hat: f64,
    pub cos2_phi: Option<f64>,
    pub visibility: Option<f64>,
    pub status: Status,
    pub clamped: bool,
}

/// |theory − measured| for every quantity both sides report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Discrepancy {
    pub r: f64,
    pub cos2_phi: Option<f64>,
    pub visibility: Option<f64>,
    pub max: f64,
}

impl Discrepancy {
    pub fn between(r: f64, theory: &TheoryBlock, measured: &Measured) -> Self {
        let diff = |a: Option<f64>, b: Option<f64>| a.zip(b).map(|(a, b)| (a - b).abs());
        let r_diff = (r - measured.r_hat).abs();
        let cos2_phi = diff(theory.cos2_phi, measured.cos2_phi);
        let visibility = diff(Some(theory.visibility), measured.visibility);
        let max = [Some(r_diff), cos2_phi, visibility]
            .into_iter()
            .flatten()
            .fold(0.0, f64::max);
        Self {
            r: r_diff,
            cos2_phi,
            visibility,
            max,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metadata {
    pub version: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub inputs: RunInputs,
    pub theory: TheoryBlock,
    pub measured: Measured,
    pub discrepancy: Discrepancy,
    pub within_tol: bool,
    pub metadata: Metadata,
}

impl RunReport {
    pub fn new(
        inputs: RunInputs,
        theory: TheoryBlock,
        measured: Measured,
        discrepancy: Discrepancy,
        timestamp: bool,
    ) -> Self {
        let within_tol = discrepancy.max <= inputs.tol;
        Self {
            inputs,
            theory,
            measured,
            discrepancy,
            within_tol,
            metadata: Metadata {
                version: env!("CARGO_PKG_VERSION"),
                timestamp: timestamp.then(|| chrono::Utc::now().to_rfc3339()),
            },
        }
    }
}
