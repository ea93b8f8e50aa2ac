//! Operator-level model of the flipper polarimeter.
//!
//! A beam polarized along +z passes a +π/2 flipper about ŷ, the device U, and a
//! −π/2 flipper about ŷ, and is then projected onto |+z⟩. Translating the
//! flipper pair inside a guide field along ẑ conjugates U by a z-rotation
//! G(η), so the full chain is
//!
//! ```text
//! T(η) = F₋ · G(−η) · U · G(η) · F₊
//! ```
//!
//! which shifts ζ → ζ − η and leaves δ untouched. For a pure input this gives
//! I(η) = cos²ξ cos²δ + sin²ξ sin²(ζ − η), and for ρ = ½(1 + rσz) the
//! intensity is (1 − r)/2 + r·I(η).
//!
//! The analyzer stage replaces the final +z projection by a projection onto
//! an arbitrary direction **n**.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spinops::{
    axis_rotation, density_from_polarization, so3_of, su2_from_params, DensityOperator,
    SU2Matrix, SU2Params,
};
use crate::vec3::{self, Vec3};

/// ħ in J·s (CODATA 2018, exact by SI definition of h).
pub const HBAR: f64 = 1.054_571_817e-34;

/// Magnitude of the neutron magnetic moment in J/T.
pub const NEUTRON_MAGNETIC_MOMENT: f64 = 9.662_365_1e-27;

pub const DEFAULT_SAMPLES: usize = 1024;
pub const DEFAULT_REFINE_TOL: f64 = 1e-10;
pub const ANALYZER_STEPS: usize = 512;

const INTENSITY_TOL: f64 = 1e-12;

const Y_AXIS: Vec3 = [0.0, 1.0, 0.0];
const Z_AXIS: Vec3 = [0.0, 0.0, 1.0];

/// Guide-field and flipper geometry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HardwareConfig {
    /// |μ| in J/T.
    pub mu: f64,
    /// Guide field in T.
    pub b_field: f64,
    /// Particle speed in m/s.
    pub speed: f64,
    /// Flipper separation index: L₀ spans n half-turns of relative phase.
    pub n: u32,
}

impl HardwareConfig {
    pub fn new(mu: f64, b_field: f64, speed: f64, n: u32) -> Result<Self> {
        for (name, v) in [("mu", mu), ("B", b_field), ("v", speed)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::domain(name, v, "must be finite and positive"));
            }
        }
        if n == 0 {
            return Err(Error::domain("n", 0.0, "flipper separation index must be >= 1"));
        }
        let hw = Self {
            mu,
            b_field,
            speed,
            n,
        };
        let l0 = hw.l0();
        if !(l0 > 0.0 && l0.is_finite()) {
            return Err(Error::domain("L0", l0, "flipper separation must be finite"));
        }
        Ok(hw)
    }

    pub fn neutron(b_field: f64, speed: f64, n: u32) -> Result<Self> {
        Self::new(NEUTRON_MAGNETIC_MOMENT, b_field, speed, n)
    }

    pub fn hbar(&self) -> f64 {
        HBAR
    }

    /// Relative |±z⟩ phase accumulated per metre of flight, 2μB/(ħv).
    pub fn phase_per_metre(&self) -> f64 {
        2.0 * self.mu * self.b_field / (HBAR * self.speed)
    }

    /// Distance over which η advances by 2π.
    pub fn precession_wavelength(&self) -> f64 {
        TAU / self.phase_per_metre()
    }

    /// Flipper separation L₀ = nπħv/(μB).
    pub fn l0(&self) -> f64 {
        self.n as f64 * PI * HBAR * self.speed / (self.mu * self.b_field)
    }
}

/// Phase η ∈ [0, 2π) applied by translating the flipper pair by `d` metres.
pub fn translation_to_eta(d: f64, hw: &HardwareConfig) -> f64 {
    (hw.phase_per_metre() * d).rem_euclid(TAU)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub samples: usize,
    pub refine_tol: f64,
}

impl SweepConfig {
    pub fn new(samples: usize, refine_tol: f64) -> Result<Self> {
        if samples < 16 {
            return Err(Error::domain("samples", samples as f64, "need at least 16 samples"));
        }
        if !(refine_tol > 0.0) {
            return Err(Error::domain("refine_tol", refine_tol, "must be positive"));
        }
        Ok(Self {
            samples,
            refine_tol,
        })
    }
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            samples: DEFAULT_SAMPLES,
            refine_tol: DEFAULT_REFINE_TOL,
        }
    }
}

/// The (r, U) that generated a trace; lets extrema be refined on the model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceSource {
    pub r: f64,
    pub params: SU2Params,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub eta: f64,
    pub intensity: f64,
}

/// Intensity sampled over one period of a phase-like control angle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntensityTrace {
    pub points: Vec<TracePoint>,
    pub source: Option<TraceSource>,
    pub refine_tol: f64,
}

impl IntensityTrace {
    /// A trace with no generating model (e.g. loaded from disk). Angles must
    /// be strictly increasing within [0, 2π) and intensities within [0, 1].
    pub fn from_points(points: Vec<TracePoint>) -> Result<Self> {
        for (i, p) in points.iter().enumerate() {
            if !(0.0..TAU).contains(&p.eta) {
                return Err(Error::domain("eta", p.eta, "must lie in [0, 2pi)"));
            }
            if !(p.intensity >= -INTENSITY_TOL && p.intensity <= 1.0 + INTENSITY_TOL) {
                return Err(Error::InconsistentData {
                    quantity: "intensity",
                    value: p.intensity,
                    reason: "outside [0, 1]",
                });
            }
            if i > 0 && p.eta <= points[i - 1].eta {
                return Err(Error::domain("eta", p.eta, "must be strictly increasing"));
            }
        }
        Ok(Self {
            points,
            source: None,
            refine_tol: DEFAULT_REFINE_TOL,
        })
    }

    pub fn intensities(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|p| p.intensity)
    }
}

/// Extreme intensities and where they occur.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Extrema {
    pub i_min: f64,
    pub i_max: f64,
    pub eta_min: f64,
    pub eta_max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalyzerPoint {
    pub direction: Vec3,
    pub intensity: f64,
}

/// Analyzer intensities along a great circle of directions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyzerTrace {
    pub points: Vec<AnalyzerPoint>,
    pub i_min: f64,
    pub i_max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CountPoint {
    pub eta: f64,
    pub counts_up: u64,
    pub shots: u64,
}

impl CountPoint {
    pub fn frequency(&self) -> f64 {
        self.counts_up as f64 / self.shots as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountTrace {
    pub points: Vec<CountPoint>,
    pub seed: u64,
}

impl CountTrace {
    /// Empirical intensities counts_up/shots as a model-free trace.
    pub fn to_intensity_trace(&self) -> Result<IntensityTrace> {
        IntensityTrace::from_points(
            self.points
                .iter()
                .map(|p| TracePoint {
                    eta: p.eta,
                    intensity: p.frequency(),
                })
                .collect(),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AnalyzerMode {
    Analytic,
    Sweep,
}

fn check_r(r: f64) -> Result<()> {
    if (0.0..=1.0).contains(&r) {
        Ok(())
    } else {
        Err(Error::domain("r", r, "degree of polarization must lie in [0, 1]"))
    }
}

/// Full chain F₋ · G(−η) · U · G(η) · F₊.
pub fn pipeline_operator(p: SU2Params, eta: f64) -> SU2Matrix {
    let flip_in = axis_rotation(Y_AXIS, FRAC_PI_2).expect("unit axis");
    let flip_out = axis_rotation(Y_AXIS, -FRAC_PI_2).expect("unit axis");
    let guide = axis_rotation(Z_AXIS, eta).expect("unit axis");
    let unguide = axis_rotation(Z_AXIS, -eta).expect("unit axis");
    flip_out * unguide * su2_from_params(p) * guide * flip_in
}

/// ⟨+z|T ρ T†|+z⟩ for an arbitrary input state.
pub fn output_intensity(rho: &DensityOperator, p: SU2Params, eta: f64) -> f64 {
    let t = pipeline_operator(p, eta);
    let row = [t.element(0, 0).conj(), t.element(0, 1).conj()];
    rho.expectation(row)
}

/// Detector intensity at flipper phase `eta` for ρ = ½(1 + rσz).
pub fn pipeline_intensity(r: f64, p: SU2Params, eta: f64) -> Result<f64> {
    let rho = density_from_polarization(r)?;
    Ok(output_intensity(&rho, p, eta))
}

/// Uniform η grid over [0, 2π).
pub fn eta_grid(samples: usize) -> impl Iterator<Item = f64> {
    (0..samples).map(move |k| TAU * k as f64 / samples as f64)
}

pub fn sweep_eta(r: f64, p: SU2Params, cfg: &SweepConfig) -> Result<IntensityTrace> {
    let rho = density_from_polarization(r)?;
    let points = eta_grid(cfg.samples)
        .map(|eta| TracePoint {
            eta,
            intensity: output_intensity(&rho, p, eta),
        })
        .collect();
    Ok(IntensityTrace {
        points,
        source: Some(TraceSource { r, params: p }),
        refine_tol: cfg.refine_tol,
    })
}

/// Closed-form extrema: the minimum sits at η = ζ and the maximum a quarter
/// turn away. Intensities are evaluated on the operator chain.
pub fn analytic_extrema(r: f64, p: SU2Params) -> Result<Extrema> {
    let eta_min = p.zeta.rem_euclid(TAU);
    let eta_max = (p.zeta + FRAC_PI_2).rem_euclid(TAU);
    let i_min = pipeline_intensity(r, p, eta_min)?;
    let i_max = pipeline_intensity(r, p, eta_max)?;
    Ok(Extrema {
        i_min: i_min.min(i_max),
        i_max: i_max.max(i_min),
        eta_min,
        eta_max,
    })
}

/// Locates the extreme intensities of a trace.
///
/// With `analytic` set the closed-form positions are used (the trace must
/// carry its generating source for r). Otherwise the grid argmin/argmax are
/// refined by golden-section search between their neighbours, evaluating the
/// generating model when known and a local 5-point interpolant otherwise.
pub fn find_extrema(trace: &IntensityTrace, analytic: Option<SU2Params>) -> Result<Extrema> {
    if trace.points.is_empty() {
        return Err(Error::EmptyTrace);
    }
    if let Some(p) = analytic {
        let src = trace.source.ok_or_else(|| {
            Error::Validation("analytic extrema need the generating polarization".into())
        })?;
        return analytic_extrema(src.r, p);
    }

    let model = match trace.source {
        Some(src) => {
            let rho = density_from_polarization(src.r)?;
            Some((rho, src.params))
        }
        None => None,
    };
    let eval = |idx: usize, eta: f64| -> f64 {
        match &model {
            Some((rho, p)) => output_intensity(rho, *p, eta),
            None => interpolate(&trace.points, idx, eta),
        }
    };

    let (lo_idx, hi_idx) = grid_extrema(trace.points.iter().map(|p| p.intensity));
    let (eta_min, i_min) = refine(&trace.points, lo_idx, trace.refine_tol, |eta| {
        eval(lo_idx, eta)
    });
    let (eta_max, neg_max) = refine(&trace.points, hi_idx, trace.refine_tol, |eta| {
        -eval(hi_idx, eta)
    });
    let i_min = i_min.min(trace.points[lo_idx].intensity).max(0.0);
    let i_max = (-neg_max).max(trace.points[hi_idx].intensity).min(1.0);
    Ok(Extrema {
        i_min: i_min.min(i_max),
        i_max,
        eta_min,
        eta_max,
    })
}

fn grid_extrema(values: impl Iterator<Item = f64>) -> (usize, usize) {
    let mut lo = (0, f64::INFINITY);
    let mut hi = (0, f64::NEG_INFINITY);
    for (i, v) in values.enumerate() {
        if v < lo.1 {
            lo = (i, v);
        }
        if v > hi.1 {
            hi = (i, v);
        }
    }
    (lo.0, hi.0)
}

/// Angle of `points[idx + offset]`, unwrapped so that it lies on the same
/// branch as `points[idx]` (the trace is one period of a periodic signal).
fn unwrapped_eta(points: &[TracePoint], idx: usize, offset: isize) -> f64 {
    let n = points.len() as isize;
    let k = idx as isize + offset;
    let wraps = k.div_euclid(n);
    points[k.rem_euclid(n) as usize].eta + TAU * wraps as f64
}

/// Golden-section minimisation of `f` over the bracket formed by the grid
/// neighbours of `idx`. Returns (η reduced to [0, 2π), f(η)).
fn refine(points: &[TracePoint], idx: usize, tol: f64, f: impl Fn(f64) -> f64) -> (f64, f64) {
    if points.len() < 3 {
        let p = points[idx];
        return (p.eta, f(p.eta));
    }
    let a = unwrapped_eta(points, idx, -1);
    let b = unwrapped_eta(points, idx, 1);
    let (x, fx) = golden_section_min(&f, a, b, tol);
    (x.rem_euclid(TAU), fx)
}

/// Golden-section search for a minimum of a unimodal `f` on [a, b].
pub fn golden_section_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    let fx = f(x);
    // Keep the best point actually evaluated.
    [(x, fx), (c, fc), (d, fd)]
        .into_iter()
        .min_by(|l, r| l.1.total_cmp(&r.1))
        .unwrap()
}

/// Lagrange interpolation through the five samples centred on `idx`.
fn interpolate(points: &[TracePoint], idx: usize, eta: f64) -> f64 {
    let n = points.len();
    if n < 5 {
        return points[idx].intensity;
    }
    let nodes: Vec<(f64, f64)> = (-2..=2)
        .map(|k: isize| {
            let j = (idx as isize + k).rem_euclid(n as isize) as usize;
            (unwrapped_eta(points, idx, k), points[j].intensity)
        })
        .collect();
    nodes
        .iter()
        .enumerate()
        .map(|(i, &(xi, yi))| {
            let basis: f64 = nodes
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, &(xj, _))| (eta - xj) / (xi - xj))
                .product();
            yi * basis
        })
        .sum()
}

/// Spin-up ket along a unit direction, up to a global phase.
fn ket_along(n: Vec3) -> [Complex64; 2] {
    // Branch on the hemisphere to avoid cancellation in 1 ± n_z.
    if n[2] >= 0.0 {
        let denom = (2.0 * (1.0 + n[2])).sqrt();
        [
            Complex64::new((1.0 + n[2]) / denom, 0.0),
            Complex64::new(n[0] / denom, n[1] / denom),
        ]
    } else {
        let denom = (2.0 * (1.0 - n[2])).sqrt();
        [
            Complex64::new(n[0] / denom, -n[1] / denom),
            Complex64::new((1.0 - n[2]) / denom, 0.0),
        ]
    }
}

fn overlap_sq(bra: [Complex64; 2], ket: [Complex64; 2]) -> f64 {
    (bra[0].conj() * ket[0] + bra[1].conj() * ket[1]).norm_sqr()
}

fn check_unit(n: Vec3) -> Result<()> {
    let len = vec3::norm(n);
    if (len - 1.0).abs() > 1e-12 {
        return Err(Error::domain("|n|", len, "analyzer direction must be a unit vector"));
    }
    Ok(())
}

/// Analyzer intensity ½ + (r/2)(|⟨n|Ũ|+z⟩|² − |⟨n|Ũ|−z⟩|²).
///
/// Also evaluated as ½(1 + r **n**·Rẑ) with R the rotation of Ũ; the two must
/// agree to 1e-12.
pub fn analyzer_intensity(r: f64, u_total: &SU2Matrix, n: Vec3) -> Result<f64> {
    check_r(r)?;
    check_unit(n)?;
    let bra = ket_along(n);
    let up = u_total.matrix().apply([Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)]);
    let down = u_total.matrix().apply([Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)]);
    let projected = 0.5 + 0.5 * r * (overlap_sq(bra, up) - overlap_sq(bra, down));

    let rz = vec3::mat_vec(&so3_of(u_total), Z_AXIS);
    let geometric = 0.5 * (1.0 + r * vec3::dot(n, rz));
    if (projected - geometric).abs() > 1e-12 {
        return Err(Error::Validation(format!(
            "analyzer intensity mismatch: {projected} vs {geometric}"
        )));
    }
    Ok(projected)
}

/// Great circle of analyzer directions through the output Bloch direction:
/// n(θ) = cos θ·(Rẑ) + sin θ·w with w ⟂ Rẑ.
pub fn analyzer_direction(u_total: &SU2Matrix, theta: f64) -> Vec3 {
    let (m, w) = analyzer_plane(u_total);
    let (s, c) = theta.sin_cos();
    let n = vec3::add(vec3::scale(m, c), vec3::scale(w, s));
    vec3::normalize(n).unwrap_or(m)
}

fn analyzer_plane(u_total: &SU2Matrix) -> (Vec3, Vec3) {
    let m = vec3::normalize(vec3::mat_vec(&so3_of(u_total), Z_AXIS)).unwrap_or(Z_AXIS);
    (m, vec3::any_perpendicular(m))
}

/// Analyzer rotation angles θ on a uniform grid over [0, 2π).
pub fn analyzer_sweep(r: f64, u_total: &SU2Matrix, steps: usize, refine_tol: f64) -> Result<(IntensityTrace, AnalyzerTrace)> {
    check_r(r)?;
    if steps < 3 {
        return Err(Error::domain("steps", steps as f64, "need at least 3 analyzer steps"));
    }
    let mut angle_points = Vec::with_capacity(steps);
    let mut points = Vec::with_capacity(steps);
    for theta in eta_grid(steps) {
        let direction = analyzer_direction(u_total, theta);
        let intensity = analyzer_intensity(r, u_total, direction)?;
        angle_points.push(TracePoint {
            eta: theta,
            intensity,
        });
        points.push(AnalyzerPoint {
            direction,
            intensity,
        });
    }
    let f = |theta: f64| -> f64 {
        analyzer_intensity(r, u_total, analyzer_direction(u_total, theta)).unwrap_or(f64::NAN)
    };
    let (lo, hi) = grid_extrema(angle_points.iter().map(|p| p.intensity));
    let (_, i_min) = refine(&angle_points, lo, refine_tol, f);
    let (_, neg_max) = refine(&angle_points, hi, refine_tol, |t| -f(t));
    let i_min = i_min.min(angle_points[lo].intensity);
    let i_max = (-neg_max).max(angle_points[hi].intensity);
    let trace = IntensityTrace {
        points: angle_points,
        source: None,
        refine_tol,
    };
    Ok((
        trace,
        AnalyzerTrace {
            points,
            i_min,
            i_max,
        },
    ))
}

/// Extremes of the analyzer intensity as the direction is rotated.
pub fn analyzer_extrema(r: f64, u_total: &SU2Matrix, mode: AnalyzerMode) -> Result<(f64, f64)> {
    match mode {
        AnalyzerMode::Analytic => {
            let m = vec3::mat_vec(&so3_of(u_total), Z_AXIS);
            let lo = analyzer_intensity(r, u_total, vec3::scale(m, -1.0))?;
            let hi = analyzer_intensity(r, u_total, m)?;
            Ok((lo, hi))
        }
        AnalyzerMode::Sweep => {
            let (_, t) = analyzer_sweep(r, u_total, ANALYZER_STEPS, DEFAULT_REFINE_TOL)?;
            Ok((t.i_min, t.i_max))
        }
    }
}

/// Stream offset separating analyzer draws from η-sweep draws under one seed.
pub const ANALYZER_STREAM: u64 = 1 << 32;

/// Binomial detector counts for a list of (angle, probability) settings.
///
/// Each point draws from its own ChaCha stream `stream_base + index` under
/// `seed`, so the result does not depend on evaluation order.
pub fn binomial_counts(
    settings: &[(f64, f64)],
    shots: u64,
    seed: u64,
    stream_base: u64,
) -> Result<CountTrace> {
    if shots == 0 {
        return Err(Error::domain("shots", 0.0, "need at least one shot"));
    }
    let points = settings
        .iter()
        .enumerate()
        .map(|(i, &(eta, prob))| {
            let p = prob.clamp(0.0, 1.0);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(stream_base + i as u64);
            let dist = Binomial::new(shots, p)
                .map_err(|_| Error::domain("intensity", prob, "not a probability"))?;
            Ok(CountPoint {
                eta,
                counts_up: dist.sample(&mut rng),
                shots,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CountTrace { points, seed })
}

/// Seeded spin-up counts at every η of the sweep grid.
pub fn simulate_counts(
    r: f64,
    p: SU2Params,
    cfg: &SweepConfig,
    shots: u64,
    seed: u64,
) -> Result<CountTrace> {
    let trace = sweep_eta(r, p, cfg)?;
    let settings: Vec<(f64, f64)> = trace.points.iter().map(|q| (q.eta, q.intensity)).collect();
    binomial_counts(&settings, shots, seed, 0)
}

/// Seeded counts along the analyzer great circle.
pub fn simulate_analyzer_counts(
    r: f64,
    u_total: &SU2Matrix,
    steps: usize,
    shots: u64,
    seed: u64,
) -> Result<CountTrace> {
    let (trace, _) = analyzer_sweep(r, u_total, steps, DEFAULT_REFINE_TOL)?;
    let settings: Vec<(f64, f64)> = trace.points.iter().map(|q| (q.eta, q.intensity)).collect();
    binomial_counts(&settings, shots, seed, ANALYZER_STREAM)
}
