//! Closed-form relative phases and visibilities, plus geodesic paths on the
//! Bloch sphere and the solid angle they enclose.
//!
//! For an input ρ = ½(1 + rσz) and U = U(ξ, δ, ζ) the mixed-state amplitude is
//! the polarization-weighted sum of the two pure-state phase factors,
//!
//! ```text
//! V e^{iΦ} = (1+r)/2 · cos ξ e^{iδ} + (1−r)/2 · cos ξ e^{−iδ} = Tr(ρU),
//! ```
//!
//! which gives Φ = arctan(r tan δ) and V = ν √(cos²δ + r² sin²δ) with ν = cos ξ.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spinops::{axis_rotation, wrap_angle, SU2Matrix, STRUCT_TOL};
use crate::vec3::{self, Vec3};

/// Below this modulus the phase of an amplitude is not reported.
pub const DEFINED_TOL: f64 = 1e-12;

/// Pancharatnam phase φ = arg⟨+z|U|+z⟩ and visibility ν = |⟨+z|U|+z⟩|.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PureReport {
    pub phi: f64,
    pub nu: f64,
    pub defined: bool,
}

impl PureReport {
    pub fn cos2_phi(&self) -> Option<f64> {
        self.defined.then(|| self.phi.cos().powi(2))
    }
}

/// Mixed-state relative phase Φ (reported modulo π, in (−π/2, π/2]) and
/// visibility V.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixedReport {
    pub phi: f64,
    pub visibility: f64,
    pub defined: bool,
}

impl MixedReport {
    pub fn cos2_phi(&self) -> Option<f64> {
        self.defined.then(|| self.phi.cos().powi(2))
    }
}

pub fn pure_phase_visibility(u: &SU2Matrix) -> PureReport {
    let amp = u.element(0, 0);
    let nu = amp.norm();
    let defined = nu >= DEFINED_TOL;
    PureReport {
        phi: if defined { canonical_arg(amp) } else { 0.0 },
        nu,
        defined,
    }
}

/// Φ and V for ρ = ½(1 + rσz) evolving under `u`.
pub fn mixed_phase_visibility(r: f64, u: &SU2Matrix) -> Result<MixedReport> {
    if !(0.0..=1.0).contains(&r) {
        return Err(Error::domain("r", r, "degree of polarization must lie in [0, 1]"));
    }
    let amp = u.element(0, 0);
    let cos_xi = amp.norm();
    let delta = if cos_xi > 0.0 { amp.arg() } else { 0.0 };
    let (sd, cd) = delta.sin_cos();

    let weighted = Complex64::from_polar(0.5 * (1.0 + r) * cos_xi, delta)
        + Complex64::from_polar(0.5 * (1.0 - r) * cos_xi, -delta);
    let visibility = cos_xi * (cd * cd + r * r * sd * sd).sqrt();
    let defined = visibility >= DEFINED_TOL;
    // arctan(r tan δ) without the tan singularity at δ = ±π/2.
    let phi = if defined {
        mod_pi(f64::atan2(r * sd, cd))
    } else {
        0.0
    };
    debug_assert!((weighted.norm() - visibility).abs() < 1e-12);
    Ok(MixedReport {
        phi,
        visibility,
        defined,
    })
}

/// cos²Φ = 1 / (1 + r² tan²δ), continuous through δ = ±π/2.
///
/// `r` is expected in [0, 1].
pub fn cos2_mixed_phase(r: f64, delta: f64) -> f64 {
    let (s, c) = delta.sin_cos();
    if c.abs() < 1e-15 {
        return if r > 0.0 { 0.0 } else { 1.0 };
    }
    let c2 = c * c;
    c2 / (c2 + r * r * s * s)
}

/// Geometric phase −Ω/2 associated with an enclosed solid angle.
pub fn geometric_phase(omega: f64) -> f64 {
    -0.5 * omega
}

fn canonical_arg(z: Complex64) -> f64 {
    let a = z.arg();
    if a <= -PI {
        PI
    } else {
        a
    }
}

/// Reduces an angle into (−π/2, π/2].
fn mod_pi(a: f64) -> f64 {
    let w = a.rem_euclid(PI);
    if w > FRAC_PI_2 {
        w - PI
    } else {
        w
    }
}

/// Piecewise great-circle path on the Bloch sphere starting at ẑ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeodesicPath {
    vertices: Vec<Vec3>,
}

/// Signed solid angle in steradians; positive for counter-clockwise
/// traversal seen from outside the sphere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolidAngle {
    pub omega: f64,
}

const UNIT_TOL: f64 = STRUCT_TOL;
const COINCIDENT_TOL: f64 = 1e-12;

fn antipodal(a: Vec3, b: Vec3) -> bool {
    vec3::norm(vec3::cross(a, b)) < COINCIDENT_TOL && vec3::dot(a, b) < 0.0
}

fn coincident(a: Vec3, b: Vec3) -> bool {
    vec3::norm(vec3::cross(a, b)) < COINCIDENT_TOL && vec3::dot(a, b) > 0.0
}

impl GeodesicPath {
    pub fn new(vertices: Vec<Vec3>) -> Result<Self> {
        if vertices.len() < 2 {
            return Err(Error::InvalidPath("need at least two vertices".into()));
        }
        for (i, v) in vertices.iter().enumerate() {
            let len = vec3::norm(*v);
            if !len.is_finite() || (len - 1.0).abs() > UNIT_TOL {
                return Err(Error::InvalidPath(format!(
                    "vertex {i} has length {len}, expected 1"
                )));
            }
        }
        if !coincident(vertices[0], [0.0, 0.0, 1.0]) {
            return Err(Error::InvalidPath("first vertex must be +z".into()));
        }
        for (i, w) in vertices.windows(2).enumerate() {
            if antipodal(w[0], w[1]) {
                return Err(Error::AmbiguousGeodesic { from: i, to: i + 1 });
            }
        }
        Ok(Self { vertices })
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    /// Last vertex coincides with the first.
    pub fn closed(&self) -> bool {
        coincident(self.vertices[0], *self.vertices.last().unwrap())
    }
}

/// One rotation per arc, in path order. Zero-length arcs map to the identity.
pub fn segment_unitaries(path: &GeodesicPath) -> Vec<SU2Matrix> {
    path.vertices
        .windows(2)
        .map(|w| {
            let (from, to) = (w[0], w[1]);
            match vec3::normalize(vec3::cross(from, to)) {
                Some(axis) if !coincident(from, to) => {
                    let angle = vec3::dot(from, to).clamp(-1.0, 1.0).acos();
                    axis_rotation(axis, angle).expect("normalized axis")
                }
                _ => SU2Matrix::identity(),
            }
        })
        .collect()
}

/// Parallel-transporting unitary along the path: the ordered product of
/// rotations about each arc normal.
pub fn geodesic_unitary(path: &GeodesicPath) -> SU2Matrix {
    segment_unitaries(path)
        .into_iter()
        .fold(SU2Matrix::identity(), |acc, s| s * acc)
}

/// Signed spherical excess of the geodesic polygon, closing an open path
/// with the shortest arc back to the first vertex.
///
/// Computed as 2π minus the sum of signed turning angles, which equals the
/// sum of interior angles minus (n − 2)π. The result lies in (−2π, 2π]; if the
/// polygon retraces itself anywhere the turning direction there is ambiguous
/// by 2π and the result is reported in (−π, π].
pub fn solid_angle(path: &GeodesicPath) -> Result<SolidAngle> {
    let mut poly: Vec<Vec3> = path.vertices.clone();
    if path.closed() {
        poly.pop();
    } else if antipodal(*poly.last().unwrap(), poly[0]) {
        return Err(Error::AmbiguousGeodesic {
            from: poly.len() - 1,
            to: 0,
        });
    }
    poly.dedup_by(|b, a| coincident(*a, *b));
    while poly.len() > 1 && coincident(poly[0], *poly.last().unwrap()) {
        poly.pop();
    }
    if poly.len() < 3 {
        return Ok(SolidAngle { omega: 0.0 });
    }

    let n = poly.len();
    let mut turning = 0.0;
    let mut retraced = false;
    for i in 0..n {
        let prev = poly[(i + n - 1) % n];
        let here = poly[i];
        let next = poly[(i + 1) % n];
        // Travel direction arriving at `here`, and leaving it.
        let t_in = vec3::normalize(vec3::add(
            vec3::scale(here, vec3::dot(prev, here)),
            vec3::scale(prev, -1.0),
        ));
        let t_out = vec3::normalize(vec3::add(next, vec3::scale(here, -vec3::dot(next, here))));
        let (Some(t_in), Some(t_out)) = (t_in, t_out) else {
            // Neighbour antipodal to this vertex; the arc is ill-defined.
            return Err(Error::AmbiguousGeodesic {
                from: (i + n - 1) % n,
                to: i,
            });
        };
        let sin = vec3::dot(here, vec3::cross(t_in, t_out));
        let cos = vec3::dot(t_in, t_out);
        if sin.abs() < 1e-12 && cos < 0.0 {
            retraced = true;
        }
        turning += sin.atan2(cos);
    }

    let raw = 2.0 * PI - turning;
    let omega = if retraced {
        wrap_angle(raw)
    } else {
        let w = raw.rem_euclid(4.0 * PI);
        if w > 2.0 * PI {
            w - 4.0 * PI
        } else {
            w
        }
    };
    // Round-off dust around a zero-area polygon.
    let omega = if omega.abs() < 1e-14 { 0.0 } else { omega };
    Ok(SolidAngle { omega })
}
