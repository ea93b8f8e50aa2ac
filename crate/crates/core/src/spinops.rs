//! Exact 2×2 complex linear algebra for spin-½ states and SU(2) unitaries.
//!
//! Matrices are indexed in the basis {|+z⟩, |−z⟩}. An SU(2) element is
//! parametrized by three angles (ξ, δ, ζ) as
//!
//! ```text
//! U = [[ e^{iδ} cos ξ,  −e^{−iζ} sin ξ ],
//!      [ e^{iζ} sin ξ,   e^{−iδ} cos ξ ]]
//! ```
//!
//! with ξ restricted to [0, π/2] so that cos ξ ≥ 0.

use std::f64::consts::{FRAC_PI_2, PI};
use std::ops::Mul;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vec3::{self, Vec3};

/// Tolerance for structural invariants (hermiticity, trace, unitarity, det).
pub const STRUCT_TOL: f64 = 1e-12;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Row-major 2×2 complex matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexMatrix2 {
    pub m: [[Complex64; 2]; 2],
}

impl ComplexMatrix2 {
    pub const fn new(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Self {
        Self { m: [[a, b], [c, d]] }
    }

    pub const fn identity() -> Self {
        Self::new(ONE, ZERO, ZERO, ONE)
    }

    pub const fn zero() -> Self {
        Self::new(ZERO, ZERO, ZERO, ZERO)
    }

    pub fn diag(a: Complex64, d: Complex64) -> Self {
        Self::new(a, ZERO, ZERO, d)
    }

    /// Pauli matrices σx, σy, σz.
    pub fn pauli() -> [Self; 3] {
        [
            Self::new(ZERO, ONE, ONE, ZERO),
            Self::new(ZERO, -I, I, ZERO),
            Self::new(ONE, ZERO, ZERO, -ONE),
        ]
    }

    /// `n·σ` for a real 3-vector.
    pub fn pauli_dot(n: Vec3) -> Self {
        Self::new(
            Complex64::new(n[2], 0.0),
            Complex64::new(n[0], -n[1]),
            Complex64::new(n[0], n[1]),
            Complex64::new(-n[2], 0.0),
        )
    }

    pub fn adjoint(&self) -> Self {
        let m = &self.m;
        Self::new(m[0][0].conj(), m[1][0].conj(), m[0][1].conj(), m[1][1].conj())
    }

    pub fn trace(&self) -> Complex64 {
        self.m[0][0] + self.m[1][1]
    }

    pub fn det(&self) -> Complex64 {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    pub fn scale(&self, s: Complex64) -> Self {
        let m = &self.m;
        Self::new(m[0][0] * s, m[0][1] * s, m[1][0] * s, m[1][1] * s)
    }

    pub fn add(&self, other: &Self) -> Self {
        let (a, b) = (&self.m, &other.m);
        Self::new(
            a[0][0] + b[0][0],
            a[0][1] + b[0][1],
            a[1][0] + b[1][0],
            a[1][1] + b[1][1],
        )
    }

    pub fn apply(&self, v: [Complex64; 2]) -> [Complex64; 2] {
        let m = &self.m;
        [
            m[0][0] * v[0] + m[0][1] * v[1],
            m[1][0] * v[0] + m[1][1] * v[1],
        ]
    }

    /// Largest entrywise modulus of `self − other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let mut worst = 0.0_f64;
        for i in 0..2 {
            for j in 0..2 {
                worst = worst.max((self.m[i][j] - other.m[i][j]).norm());
            }
        }
        worst
    }

    pub fn is_finite(&self) -> bool {
        self.m.iter().flatten().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

impl Mul for ComplexMatrix2 {
    type Output = ComplexMatrix2;

    fn mul(self, rhs: ComplexMatrix2) -> ComplexMatrix2 {
        let (a, b) = (&self.m, &rhs.m);
        let mut out = ComplexMatrix2::zero();
        for i in 0..2 {
            for j in 0..2 {
                out.m[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        out
    }
}

/// Bloch vector **s** of a spin-½ density operator ρ = ½(1 + **s**·σ).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlochVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl BlochVector {
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self> {
        let s = Self { x, y, z };
        let len = s.length();
        if !len.is_finite() || len > 1.0 + STRUCT_TOL {
            return Err(Error::domain("|s|", len, "Bloch vector length must be <= 1"));
        }
        Ok(s)
    }

    pub fn as_array(&self) -> Vec3 {
        [self.x, self.y, self.z]
    }

    /// Degree of polarization r = |**s**|.
    pub fn length(&self) -> f64 {
        vec3::norm(self.as_array())
    }
}

/// Hermitian, unit-trace, positive semidefinite 2×2 operator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityOperator {
    matrix: ComplexMatrix2,
}

impl DensityOperator {
    /// Validates hermiticity, unit trace and positivity at [`STRUCT_TOL`].
    pub fn new(matrix: ComplexMatrix2) -> Result<Self> {
        if !matrix.is_finite() {
            return Err(Error::Validation("density operator has non-finite entries".into()));
        }
        let herm = matrix.max_abs_diff(&matrix.adjoint());
        if herm > STRUCT_TOL {
            return Err(Error::Validation(format!(
                "density operator not Hermitian (deviation {herm:e})"
            )));
        }
        let tr = matrix.trace();
        if (tr - ONE).norm() > STRUCT_TOL {
            return Err(Error::Validation(format!("density operator trace {tr} != 1")));
        }
        let rho = Self { matrix };
        let [low, _] = rho.eigenvalues();
        if low < -STRUCT_TOL {
            return Err(Error::Validation(format!(
                "density operator has negative eigenvalue {low:e}"
            )));
        }
        Ok(rho)
    }

    pub fn from_bloch(s: BlochVector) -> Self {
        let half = Complex64::new(0.5, 0.0);
        let matrix = ComplexMatrix2::identity()
            .add(&ComplexMatrix2::pauli_dot(s.as_array()))
            .scale(half);
        Self { matrix }
    }

    pub fn matrix(&self) -> &ComplexMatrix2 {
        &self.matrix
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> [f64; 2] {
        let m = &self.matrix.m;
        let mean = 0.5 * (m[0][0].re + m[1][1].re);
        let half_gap = (0.5 * (m[0][0].re - m[1][1].re)).hypot(m[0][1].norm());
        [mean - half_gap, mean + half_gap]
    }

    /// Degree of polarization (Bloch-vector length).
    pub fn polarization(&self) -> f64 {
        bloch_of(self).length()
    }

    /// ⟨ψ|ρ|ψ⟩ for a normalized ket.
    pub fn expectation(&self, ket: [Complex64; 2]) -> f64 {
        let rk = self.matrix.apply(ket);
        (ket[0].conj() * rk[0] + ket[1].conj() * rk[1]).re
    }
}

/// The three SU(2) angles (ξ, δ, ζ).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SU2Params {
    pub xi: f64,
    pub delta: f64,
    pub zeta: f64,
}

impl SU2Params {
    /// Checked constructor: ξ ∈ [0, π/2], δ and ζ ∈ (−π, π].
    pub fn new(xi: f64, delta: f64, zeta: f64) -> Result<Self> {
        if !(0.0..=FRAC_PI_2).contains(&xi) {
            return Err(Error::domain("xi", xi, "must lie in [0, pi/2]"));
        }
        for (name, v) in [("delta", delta), ("zeta", zeta)] {
            if !(v > -PI && v <= PI) {
                return Err(Error::domain(name, v, "must lie in (-pi, pi]"));
            }
        }
        Ok(Self { xi, delta, zeta })
    }

    /// Like [`SU2Params::new`] but wraps δ and ζ into (−π, π] first.
    pub fn wrapped(xi: f64, delta: f64, zeta: f64) -> Result<Self> {
        Self::new(xi, wrap_angle(delta), wrap_angle(zeta))
    }
}

/// Wraps an angle into (−π, π].
pub fn wrap_angle(a: f64) -> f64 {
    let w = a.rem_euclid(2.0 * PI);
    if w > PI {
        w - 2.0 * PI
    } else {
        w
    }
}

fn arg_canonical(z: Complex64) -> f64 {
    let a = z.arg();
    if a <= -PI {
        PI
    } else {
        a
    }
}

/// Unitary 2×2 matrix with determinant +1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SU2Matrix {
    matrix: ComplexMatrix2,
}

impl SU2Matrix {
    /// Validates U†U = 1 and det U = 1 at [`STRUCT_TOL`].
    pub fn new(matrix: ComplexMatrix2) -> Result<Self> {
        if !matrix.is_finite() {
            return Err(Error::Validation("SU(2) matrix has non-finite entries".into()));
        }
        let unit = (matrix.adjoint() * matrix).max_abs_diff(&ComplexMatrix2::identity());
        if unit > STRUCT_TOL {
            return Err(Error::Validation(format!(
                "matrix is not unitary (deviation {unit:e})"
            )));
        }
        let det = matrix.det();
        if (det - ONE).norm() > STRUCT_TOL {
            return Err(Error::Validation(format!("determinant {det} != 1")));
        }
        Ok(Self { matrix })
    }

    pub fn identity() -> Self {
        Self {
            matrix: ComplexMatrix2::identity(),
        }
    }

    pub fn matrix(&self) -> &ComplexMatrix2 {
        &self.matrix
    }

    pub fn adjoint(&self) -> Self {
        Self {
            matrix: self.matrix.adjoint(),
        }
    }

    /// Matrix element ⟨i|U|j⟩ with 0 ↔ |+z⟩, 1 ↔ |−z⟩.
    pub fn element(&self, i: usize, j: usize) -> Complex64 {
        self.matrix.m[i][j]
    }
}

impl Mul for SU2Matrix {
    type Output = SU2Matrix;

    // SU(2) is closed under products; no revalidation.
    fn mul(self, rhs: SU2Matrix) -> SU2Matrix {
        SU2Matrix {
            matrix: self.matrix * rhs.matrix,
        }
    }
}

/// ρ = ½(1 + r σz).
pub fn density_from_polarization(r: f64) -> Result<DensityOperator> {
    if !(0.0..=1.0).contains(&r) {
        return Err(Error::domain("r", r, "degree of polarization must lie in [0, 1]"));
    }
    Ok(DensityOperator {
        matrix: ComplexMatrix2::diag(
            Complex64::new(0.5 * (1.0 + r), 0.0),
            Complex64::new(0.5 * (1.0 - r), 0.0),
        ),
    })
}

pub fn su2_from_params(p: SU2Params) -> SU2Matrix {
    let (s, c) = p.xi.sin_cos();
    let ed = Complex64::from_polar(1.0, p.delta);
    let ez = Complex64::from_polar(1.0, p.zeta);
    SU2Matrix {
        matrix: ComplexMatrix2::new(ed * c, -ez.conj() * s, ez * s, ed.conj() * c),
    }
}

/// Entries smaller than this are treated as zero when reading off angles.
const DEGENERATE_ENTRY: f64 = 1e-15;

/// Inverse of [`su2_from_params`] under the branch ξ = arccos|U₁₁| ∈ [0, π/2].
///
/// On the degenerate lines the undefined angle is set to 0: ζ when ξ = 0,
/// δ when ξ = π/2.
pub fn params_from_su2(u: &SU2Matrix) -> Result<SU2Params> {
    // Re-validate: callers may have assembled the matrix by hand.
    let u = SU2Matrix::new(u.matrix)?;
    let u11 = u.element(0, 0);
    let u21 = u.element(1, 0);
    // atan2 keeps full precision near ξ = 0, where arccos|U₁₁| loses half the digits.
    let xi = u21.norm().atan2(u11.norm());
    let delta = if u11.norm() > DEGENERATE_ENTRY { arg_canonical(u11) } else { 0.0 };
    let zeta = if u21.norm() > DEGENERATE_ENTRY { arg_canonical(u21) } else { 0.0 };
    Ok(SU2Params { xi, delta, zeta })
}

/// exp(−i·angle·(axis·σ)/2): rotates Bloch vectors by `angle` about `axis`
/// (right-handed).
pub fn axis_rotation(axis: Vec3, angle: f64) -> Result<SU2Matrix> {
    let len = vec3::norm(axis);
    if (len - 1.0).abs() > STRUCT_TOL {
        return Err(Error::domain("|axis|", len, "rotation axis must be a unit vector"));
    }
    if !angle.is_finite() {
        return Err(Error::domain("angle", angle, "must be finite"));
    }
    let (s, c) = (0.5 * angle).sin_cos();
    let matrix = ComplexMatrix2::identity()
        .scale(Complex64::new(c, 0.0))
        .add(&ComplexMatrix2::pauli_dot(axis).scale(Complex64::new(0.0, -s)));
    Ok(SU2Matrix { matrix })
}

/// Unitary channel ρ ↦ UρU†.
pub fn evolve(rho: &DensityOperator, u: &SU2Matrix) -> DensityOperator {
    let m = u.matrix * rho.matrix * u.matrix.adjoint();
    // Symmetrize away rounding so hermiticity holds to the last bit.
    let h = m.add(&m.adjoint()).scale(Complex64::new(0.5, 0.0));
    DensityOperator { matrix: h }
}

/// **s** = (Tr ρσx, Tr ρσy, Tr ρσz).
pub fn bloch_of(rho: &DensityOperator) -> BlochVector {
    let m = &rho.matrix.m;
    BlochVector {
        x: 2.0 * m[0][1].re,
        y: -2.0 * m[0][1].im,
        z: (m[0][0] - m[1][1]).re,
    }
}

/// SO(3) image of U: the rotation R with U(**n**·σ)U† = (R**n**)·σ.
pub fn so3_of(u: &SU2Matrix) -> [[f64; 3]; 3] {
    let paulis = ComplexMatrix2::pauli();
    let ud = u.matrix.adjoint();
    let mut r = [[0.0; 3]; 3];
    for (j, sj) in paulis.iter().enumerate() {
        let rotated = u.matrix * *sj * ud;
        for (i, si) in paulis.iter().enumerate() {
            r[i][j] = 0.5 * (*si * rotated).trace().re;
        }
    }
    r
}
