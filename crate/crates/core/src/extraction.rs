//! Inversion of measured extreme intensities into cos²Φ, visibility and the
//! degree of polarization.
//!
//! With known r the η-sweep extremes give
//!
//! ```text
//! A = (I_min − (1−r)/2) / r          = cos²ξ cos²δ
//! B = r ((1+r)/2 − I_max)            = r² cos²ξ sin²δ
//! cos²Φ = A / (A + B),   V = √(A + B)
//! ```
//!
//! and at r = 1 these collapse to the pure-state expressions. When r is
//! unknown, the analyzer extremes (1 ∓ r)/2 supply it through the differences
//! ΔI_min = I_min − Ĩ_min, ΔI_max = Ĩ_max − I_max and ΔĨ = Ĩ_max − Ĩ_min = r.
//! Measured analyzer pairs are centred on Ĩ_min + Ĩ_max = 1 before the
//! differences are taken, so the blind estimate equals the known-r estimate
//! at r = ΔĨ.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Boundary between rounding dust and physically inconsistent data.
pub const CLAMP_TOL: f64 = 1e-9;

/// Below this squared visibility the phase is reported as undefined; below
/// this r the visibility is reported as undetermined.
pub const DEGENERACY_TOL: f64 = 1e-9;

/// Tolerance on Ĩ_min + Ĩ_max = 1.
pub const ANALYZER_SUM_TOL: f64 = 1e-6;

/// V² below this is indistinguishable from rounding in the extremes and is
/// reported as V = 0.
pub const VISIBILITY_FLOOR: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    /// Visibility vanishes (the orthogonal-output case); no phase exists.
    PhaseUndefined,
    /// r = 0: both extremes sit at ½ and carry no visibility information.
    VisibilityUndetermined,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseEstimate {
    pub cos2_phi: Option<f64>,
    pub visibility: Option<f64>,
    pub status: Status,
}

/// The non-negative differences used by the blind protocol.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeltaIntensities {
    pub d_min: f64,
    pub d_max: f64,
    pub d_tilde: f64,
    /// Some difference was within rounding outside [0, 1] and was clamped.
    pub clamped: bool,
}

impl DeltaIntensities {
    /// The analyzer pair is first projected onto Ĩ_min + Ĩ_max = 1, keeping
    /// ΔĨ. Noise or rounding that breaks the sum then cannot bias ΔI_min
    /// against ΔI_max.
    pub fn new(i_min_rho: f64, i_max_rho: f64, i_min_t: f64, i_max_t: f64) -> Result<Self> {
        let mut clamped = false;
        let mut settle = |quantity: &'static str, v: f64| -> Result<f64> {
            if v < -CLAMP_TOL {
                return Err(Error::InconsistentData {
                    quantity,
                    value: v,
                    reason: "must be non-negative",
                });
            }
            if v < 0.0 || v > 1.0 {
                clamped = true;
            }
            Ok(v.clamp(0.0, 1.0))
        };
        let d_tilde = settle("delta_i_tilde", i_max_t - i_min_t)?;
        let d_min = settle("delta_i_min", i_min_rho - 0.5 * (1.0 - d_tilde))?;
        let d_max = settle("delta_i_max", 0.5 * (1.0 + d_tilde) - i_max_rho)?;
        Ok(Self {
            d_min,
            d_max,
            d_tilde,
            clamped,
        })
    }
}

/// Intensities may overshoot [0, 1] by rounding dust up to [`CLAMP_TOL`].
fn check_pair(min_name: &'static str, i_min: f64, max_name: &'static str, i_max: f64) -> Result<()> {
    let range = -CLAMP_TOL..=1.0 + CLAMP_TOL;
    if !range.contains(&i_min) {
        return Err(Error::domain(min_name, i_min, "intensity must lie in [0, 1]"));
    }
    if !range.contains(&i_max) {
        return Err(Error::domain(max_name, i_max, "intensity must lie in [0, 1]"));
    }
    if i_min > i_max {
        return Err(Error::domain(min_name, i_min, "minimum exceeds maximum"));
    }
    Ok(())
}

/// Phase/visibility from the combinations A = cos²ξcos²δ-like and
/// B = sin²-like terms shared by all three protocols.
fn estimate_from_terms(a: f64, b: f64) -> PhaseEstimate {
    let v2 = a + b;
    if v2 < DEGENERACY_TOL {
        return PhaseEstimate {
            cos2_phi: None,
            visibility: Some(if v2 < VISIBILITY_FLOOR { 0.0 } else { v2.sqrt() }),
            status: Status::PhaseUndefined,
        };
    }
    PhaseEstimate {
        cos2_phi: Some((a / v2).clamp(0.0, 1.0)),
        visibility: Some(v2.sqrt().min(1.0)),
        status: Status::Ok,
    }
}

fn undetermined() -> PhaseEstimate {
    PhaseEstimate {
        cos2_phi: Some(1.0),
        visibility: None,
        status: Status::VisibilityUndetermined,
    }
}

/// Pure-beam extraction: cos²φ = I_min/(1 − I_max + I_min), ν = √(1 − I_max + I_min).
pub fn pure_from_extrema(i_min: f64, i_max: f64) -> Result<PhaseEstimate> {
    check_pair("i_min", i_min, "i_max", i_max)?;
    Ok(estimate_from_terms(i_min.max(0.0), (1.0 - i_max).max(0.0)))
}

/// Known-r extraction of cos²Φ and V.
pub fn mixed_from_extrema(i_min: f64, i_max: f64, r: f64) -> Result<PhaseEstimate> {
    check_pair("i_min", i_min, "i_max", i_max)?;
    if !(0.0..=1.0).contains(&r) {
        return Err(Error::domain("r", r, "degree of polarization must lie in [0, 1]"));
    }
    let floor = 0.5 * (1.0 - r);
    let ceiling = 0.5 * (1.0 + r);
    if i_min < floor - CLAMP_TOL {
        return Err(Error::InconsistentData {
            quantity: "i_min",
            value: i_min,
            reason: "below (1 - r)/2",
        });
    }
    if i_max > ceiling + CLAMP_TOL {
        return Err(Error::InconsistentData {
            quantity: "i_max",
            value: i_max,
            reason: "above (1 + r)/2",
        });
    }
    if r < DEGENERACY_TOL {
        return Ok(undetermined());
    }
    let a = ((i_min - floor) / r).max(0.0);
    let b = (r * (ceiling - i_max)).max(0.0);
    Ok(estimate_from_terms(a, b))
}

/// r = Ĩ_max − Ĩ_min from the analyzer extremes (1 ∓ r)/2.
pub fn polarization_from_analyzer(i_min_t: f64, i_max_t: f64) -> Result<f64> {
    check_pair("i_min_t", i_min_t, "i_max_t", i_max_t)?;
    let sum = i_min_t + i_max_t;
    if (sum - 1.0).abs() > ANALYZER_SUM_TOL {
        return Err(Error::InconsistentData {
            quantity: "i_min_t + i_max_t",
            value: sum,
            reason: "analyzer extremes must sum to 1",
        });
    }
    Ok((i_max_t - i_min_t).clamp(0.0, 1.0))
}

/// Extraction without prior knowledge of r, using the analyzer extremes.
///
/// Returns the estimate together with r = ΔĨ.
pub fn blind_estimate(
    i_min_rho: f64,
    i_max_rho: f64,
    i_min_t: f64,
    i_max_t: f64,
) -> Result<(PhaseEstimate, f64)> {
    blind_estimate_detailed(i_min_rho, i_max_rho, i_min_t, i_max_t).map(|(e, d)| (e, d.d_tilde))
}

/// [`blind_estimate`] that also returns the Δ quantities used.
pub fn blind_estimate_detailed(
    i_min_rho: f64,
    i_max_rho: f64,
    i_min_t: f64,
    i_max_t: f64,
) -> Result<(PhaseEstimate, DeltaIntensities)> {
    check_pair("i_min_rho", i_min_rho, "i_max_rho", i_max_rho)?;
    check_pair("i_min_t", i_min_t, "i_max_t", i_max_t)?;
    let d = DeltaIntensities::new(i_min_rho, i_max_rho, i_min_t, i_max_t)?;
    if d.d_tilde < DEGENERACY_TOL {
        return Ok((undetermined(), d));
    }
    let a = d.d_min / d.d_tilde;
    let b = d.d_tilde * d.d_max;
    Ok((estimate_from_terms(a, b), d))
}
