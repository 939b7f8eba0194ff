//! 2×2 complex matrix kernel for Möbius transformations.
//!
//! A Möbius map `z ↦ (az + b) / (cz + d)` is stored as the matrix
//! `[[a, b], [c, d]]` normalized to determinant one. The normalized matrix is
//! unique up to a global sign, so every comparison in this module is made up
//! to sign. Logarithms are taken only of ratios between neighboring face
//! transformations, after flipping the sign that brings the ratio closer to
//! the identity.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use thiserror::Error;

/// Complex scalar used throughout the crate.
pub type Complex = Complex64;

/// Pole tolerance on `|cz + d|`.
pub const POLE_EPS: f64 = 1e-14;
/// Smallest `|det|` accepted by [`MoebiusMatrix::normalize`].
pub const SINGULAR_EPS: f64 = 1e-14;
/// Trace tolerance for [`LogMoebius`] inputs.
pub const TRACE_EPS: f64 = 1e-10;
/// Below this `|tr − 2|` a ratio is treated as parabolic.
pub const PARABOLIC_EPS: f64 = 1e-10;
/// Cutoff for the Taylor branch of `cosh(q)` and `sinh(q)/q`.
const SINHC_TAYLOR_CUTOFF: f64 = 1e-6;
/// Cutoff on `|cosh²(μ) − 1|` for the Taylor branch of `asinh(x)/x`.
const ASINHC_TAYLOR_CUTOFF: f64 = 1e-6;
/// Half-width of the band around the negative real axis treated as the branch cut.
const BRANCH_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum MoebiusError {
    #[error("point {z} is at the pole of the transformation (|cz+d| = {magnitude:.3e})")]
    Pole { z: Complex, magnitude: f64 },
    #[error("matrix is singular (|det| = {det_abs:.3e})")]
    Degenerate { det_abs: f64 },
    #[error("ratio has an eigenvalue on the negative real axis ({eigenvalue}); logarithm is not defined")]
    Branch { eigenvalue: Complex },
    #[error("log matrix is not traceless (|tr| = {trace_abs:.3e})")]
    InvalidTrace { trace_abs: f64 },
}

/// General 2×2 complex matrix, row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat2 {
    pub a: Complex,
    pub b: Complex,
    pub c: Complex,
    pub d: Complex,
}

impl Mat2 {
    pub const fn new(a: Complex, b: Complex, c: Complex, d: Complex) -> Self {
        Self { a, b, c, d }
    }

    pub fn from_real(a: f64, b: f64, c: f64, d: f64) -> Self {
        Self::new(a.into(), b.into(), c.into(), d.into())
    }

    pub fn identity() -> Self {
        Self::from_real(1.0, 0.0, 0.0, 1.0)
    }

    pub fn zero() -> Self {
        Self::from_real(0.0, 0.0, 0.0, 0.0)
    }

    pub fn scalar(s: Complex) -> Self {
        Self::new(s, Complex::new(0.0, 0.0), Complex::new(0.0, 0.0), s)
    }

    pub fn det(&self) -> Complex {
        self.a * self.d - self.b * self.c
    }

    pub fn trace(&self) -> Complex {
        self.a + self.d
    }

    /// Adjugate `[[d, −b], [−c, a]]`; the inverse when `det = 1`.
    pub fn adjugate(&self) -> Self {
        Self::new(self.d, -self.b, -self.c, self.a)
    }

    pub fn scale(&self, s: Complex) -> Self {
        Self::new(self.a * s, self.b * s, self.c * s, self.d * s)
    }

    pub fn frobenius_norm(&self) -> f64 {
        (self.a.norm_sqr() + self.b.norm_sqr() + self.c.norm_sqr() + self.d.norm_sqr()).sqrt()
    }

    pub fn entries(&self) -> [Complex; 4] {
        [self.a, self.b, self.c, self.d]
    }

    pub fn is_finite(&self) -> bool {
        self.entries().iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

impl Add for Mat2 {
    type Output = Mat2;
    fn add(self, o: Mat2) -> Mat2 {
        Mat2::new(self.a + o.a, self.b + o.b, self.c + o.c, self.d + o.d)
    }
}

impl Sub for Mat2 {
    type Output = Mat2;
    fn sub(self, o: Mat2) -> Mat2 {
        Mat2::new(self.a - o.a, self.b - o.b, self.c - o.c, self.d - o.d)
    }
}

impl Neg for Mat2 {
    type Output = Mat2;
    fn neg(self) -> Mat2 {
        Mat2::new(-self.a, -self.b, -self.c, -self.d)
    }
}

impl Mul for Mat2 {
    type Output = Mat2;
    fn mul(self, o: Mat2) -> Mat2 {
        Mat2::new(
            self.a * o.a + self.b * o.c,
            self.a * o.b + self.b * o.d,
            self.c * o.a + self.d * o.c,
            self.c * o.b + self.d * o.d,
        )
    }
}

impl Mul<f64> for Mat2 {
    type Output = Mat2;
    fn mul(self, s: f64) -> Mat2 {
        self.scale(Complex::new(s, 0.0))
    }
}

/// A Möbius transformation as a determinant-one matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MoebiusMatrix(Mat2);

impl MoebiusMatrix {
    pub fn identity() -> Self {
        Self(Mat2::identity())
    }

    /// Divides by the principal square root of the determinant.
    pub fn normalize(m: Mat2) -> Result<Self, MoebiusError> {
        let det = m.det();
        let det_abs = det.norm();
        if !(det_abs > SINGULAR_EPS) || !m.is_finite() {
            return Err(MoebiusError::Degenerate { det_abs });
        }
        Ok(Self(m.scale(det.sqrt().inv())))
    }

    /// Builds from entries, normalizing.
    pub fn from_entries(a: Complex, b: Complex, c: Complex, d: Complex) -> Result<Self, MoebiusError> {
        Self::normalize(Mat2::new(a, b, c, d))
    }

    /// The similarity `z ↦ scale·z + shift`.
    pub fn similarity(scale: Complex, shift: Complex) -> Result<Self, MoebiusError> {
        Self::from_entries(scale, shift, Complex::new(0.0, 0.0), Complex::new(1.0, 0.0))
    }

    pub fn matrix(&self) -> &Mat2 {
        &self.0
    }

    pub fn a(&self) -> Complex {
        self.0.a
    }
    pub fn b(&self) -> Complex {
        self.0.b
    }
    pub fn c(&self) -> Complex {
        self.0.c
    }
    pub fn d(&self) -> Complex {
        self.0.d
    }

    pub fn det(&self) -> Complex {
        self.0.det()
    }

    pub fn trace(&self) -> Complex {
        self.0.trace()
    }

    pub fn inverse(&self) -> Self {
        Self(self.0.adjugate())
    }

    /// `(az + b) / (cz + d)`.
    pub fn apply(&self, z: Complex) -> Result<Complex, MoebiusError> {
        let den = self.0.c * z + self.0.d;
        let magnitude = den.norm();
        if !(magnitude >= POLE_EPS) {
            return Err(MoebiusError::Pole { z, magnitude });
        }
        Ok((self.0.a * z + self.0.b) / den)
    }

    /// The point sent to infinity, if any.
    pub fn pole(&self) -> Option<Complex> {
        if self.0.c.norm() < POLE_EPS {
            None
        } else {
            Some(-self.0.d / self.0.c)
        }
    }

    /// Frobenius distance to `other` minimized over the global sign.
    pub fn distance_up_to_sign(&self, other: &MoebiusMatrix) -> f64 {
        let plus = (self.0 - other.0).frobenius_norm();
        let minus = (self.0 + other.0).frobenius_norm();
        plus.min(minus)
    }

    pub fn approx_eq_up_to_sign(&self, other: &MoebiusMatrix, tol: f64) -> bool {
        self.distance_up_to_sign(other) <= tol
    }
}

impl Mul for MoebiusMatrix {
    type Output = MoebiusMatrix;
    fn mul(self, o: MoebiusMatrix) -> MoebiusMatrix {
        MoebiusMatrix(self.0 * o.0)
    }
}

impl Neg for MoebiusMatrix {
    type Output = MoebiusMatrix;
    fn neg(self) -> MoebiusMatrix {
        MoebiusMatrix(-self.0)
    }
}

impl fmt::Display for MoebiusMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[[{}, {}], [{}, {}]]", self.0.a, self.0.b, self.0.c, self.0.d)
    }
}

/// Traceless logarithm of a Möbius ratio. Closed under linear blends.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogMoebius(Mat2);

impl LogMoebius {
    pub fn zero() -> Self {
        Self(Mat2::zero())
    }

    pub fn new(m: Mat2) -> Result<Self, MoebiusError> {
        let trace_abs = m.trace().norm();
        if !(trace_abs <= TRACE_EPS) {
            return Err(MoebiusError::InvalidTrace { trace_abs });
        }
        Ok(Self(m))
    }

    pub fn matrix(&self) -> &Mat2 {
        &self.0
    }

    pub fn trace(&self) -> Complex {
        self.0.trace()
    }

    pub fn scale(&self, s: f64) -> Self {
        Self(self.0 * s)
    }

    /// `Σ wᵢ Lᵢ`; tracelessness is preserved exactly up to rounding.
    pub fn blend(terms: &[(f64, LogMoebius)]) -> Self {
        terms
            .iter()
            .fold(Self::zero(), |acc, (w, l)| Self(acc.0 + l.0 * *w))
    }
}

impl Add for LogMoebius {
    type Output = LogMoebius;
    fn add(self, o: LogMoebius) -> LogMoebius {
        LogMoebius(self.0 + o.0)
    }
}

impl Neg for LogMoebius {
    type Output = LogMoebius;
    fn neg(self) -> LogMoebius {
        LogMoebius(-self.0)
    }
}

impl Mul<f64> for LogMoebius {
    type Output = LogMoebius;
    fn mul(self, s: f64) -> LogMoebius {
        self.scale(s)
    }
}

/// The sign that brings `±d` closest to the identity in Frobenius norm:
/// `+1` when `Re tr(d) ≥ 0`.
pub fn ratio_sign(d: &MoebiusMatrix) -> f64 {
    if d.trace().re >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// Logarithm of the sign-corrected ratio `s·d`.
///
/// With `τ = tr(s·d)` the eigenvalues are `e^{±μ}` where `cosh μ = τ/2`, and
/// the traceless log is `(μ / sinh μ)·(s·d − (τ/2)·I)`. The factor is written
/// as `asinh(x)/x` with `x² = τ²/4 − 1` so the parabolic limit is smooth.
pub fn log_ratio(d: &MoebiusMatrix) -> Result<LogMoebius, MoebiusError> {
    let tr = d.trace();
    if tr.re == 0.0 && tr.norm() > 0.0 {
        log::debug!("ratio trace has zero real part ({tr}); using the + sign");
    }
    let sd = d.matrix().scale(ratio_sign(d).into());
    let tau = sd.trace();
    let half_tau = tau * 0.5;
    let traceless = sd - Mat2::scalar(half_tau);

    if (tau - 2.0).norm() < PARABOLIC_EPS {
        // I + N with N nilpotent: log = N.
        return Ok(LogMoebius(traceless));
    }

    let x2 = half_tau * half_tau - 1.0;
    let factor = if x2.norm() < ASINHC_TAYLOR_CUTOFF {
        // asinh(x)/x = 1 − x²/6 + 3x⁴/40 − 5x⁶/112
        Complex::new(1.0, 0.0) - x2 / 6.0 + x2 * x2 * (3.0 / 40.0) - x2 * x2 * x2 * (5.0 / 112.0)
    } else {
        let x = x2.sqrt();
        let mut lambda = half_tau + x;
        let mut root = x;
        if lambda.norm() < 1.0 {
            lambda = half_tau - x;
            root = -x;
        }
        if lambda.re < 0.0 && lambda.im.abs() <= BRANCH_EPS * lambda.norm().max(1.0) {
            return Err(MoebiusError::Branch { eigenvalue: lambda });
        }
        lambda.ln() / root
    };
    Ok(LogMoebius(traceless.scale(factor)))
}

/// `exp(L) = cosh(q)·I + (sinh(q)/q)·L` with `q² = −det(L)`.
pub fn exp_traceless(l: &LogMoebius) -> Result<MoebiusMatrix, MoebiusError> {
    let m = l.matrix();
    let trace_abs = m.trace().norm();
    if !(trace_abs <= TRACE_EPS) {
        return Err(MoebiusError::InvalidTrace { trace_abs });
    }
    let q2 = -m.det();
    let (cosh, sinhc) = if q2.norm() < SINHC_TAYLOR_CUTOFF * SINHC_TAYLOR_CUTOFF {
        let q4 = q2 * q2;
        (
            Complex::new(1.0, 0.0) + q2 / 2.0 + q4 / 24.0,
            Complex::new(1.0, 0.0) + q2 / 6.0 + q4 / 120.0,
        )
    } else {
        let q = q2.sqrt();
        (q.cosh(), q.sinh() / q)
    };
    Ok(MoebiusMatrix(Mat2::scalar(cosh) + m.scale(sinhc)))
}

/// `exp(½·log_ratio(d))`; squares back to `±d`.
pub fn sqrt_ratio(d: &MoebiusMatrix) -> Result<MoebiusMatrix, MoebiusError> {
    exp_traceless(&log_ratio(d)?.scale(0.5))
}
