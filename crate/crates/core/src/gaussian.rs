//! Single-mode Gaussian states.
//!
//! A state is parameterized by the triple `(a, b, c)` of its Wigner function
//!
//! ```text
//! W(x, y) = (2/π) √(ab − c²) · exp(−[a δx² + b δy² − 2c δx δy])
//! ```
//!
//! and described equivalently by a [`QuadratureCM`] over `(δx, δy)` or an
//! [`AmplitudeCM`] over `(δα, δα*)` with `δα = (δx + iδy)/√2`. Every CM entry is a
//! doubled second moment, so the vacuum CM is the identity and the Heisenberg
//! bound reads `det ≥ 1`.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt;

use nalgebra::Matrix2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance below which `ab − c²` (or a CM determinant) counts as zero.
pub const DEGENERACY_TOL: f64 = 1e-12;

/// Slack on the purity ≤ 1 (det ≥ 1) physicality bound.
pub const PHYSICAL_SLACK: f64 = 1e-9;

/// `a·b − c²` if it is safely positive, `None` if the form is degenerate.
pub(crate) fn positive_discriminant(a: f64, b: f64, c: f64) -> Option<f64> {
    if !(a.is_finite() && b.is_finite() && c.is_finite()) || a <= 0.0 || b <= 0.0 {
        return None;
    }
    let ab = a * b;
    let c2 = c * c;
    let disc = ab - c2;
    (disc > DEGENERACY_TOL * ab.max(c2)).then_some(disc)
}

/// Determinant of a symmetric 2×2 `[[xx, xy], [xy, yy]]`, or `SingularCm`.
pub(crate) fn positive_det(xx: f64, yy: f64, xy: f64) -> Result<f64> {
    let det = xx * yy - xy * xy;
    let scale = (xx * yy).abs().max(xy * xy);
    if !det.is_finite() || det <= DEGENERACY_TOL * scale || scale == 0.0 {
        return Err(Error::SingularCm { det });
    }
    Ok(det)
}

/// Wigner-function parameters `(a, b, c)` of a single oscillator.
///
/// Construction through [`GaussianParams::new`] rejects degenerate triples;
/// [`GaussianParams::raw`] accepts anything so that [`validate_physicality`]
/// can report on it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    /// Mean amplitude `(⟨x⟩, ⟨y⟩)`. Carried along, never used in second-moment math.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean: Option<PhasePoint>,
}

impl GaussianParams {
    pub fn new(a: f64, b: f64, c: f64) -> Result<Self> {
        let p = Self::raw(a, b, c);
        p.discriminant()?;
        Ok(p)
    }

    pub const fn raw(a: f64, b: f64, c: f64) -> Self {
        Self { a, b, c, mean: None }
    }

    pub const fn vacuum() -> Self {
        Self::raw(1.0, 1.0, 0.0)
    }

    /// Thermal state with mean photon number `n̄`: `a = b = 1/(2n̄ + 1)`.
    pub fn thermal(n_bar: f64) -> Result<Self> {
        let a = 1.0 / (2.0 * n_bar + 1.0);
        Self::new(a, a, 0.0)
    }

    pub fn with_mean(mut self, mean: PhasePoint) -> Self {
        self.mean = Some(mean);
        self
    }

    /// `ab − c²`, failing with `DegenerateParams` when it is not safely positive.
    pub fn discriminant(&self) -> Result<f64> {
        positive_discriminant(self.a, self.b, self.c).ok_or(Error::DegenerateParams {
            a: self.a,
            b: self.b,
            c: self.c,
        })
    }

    pub fn is_normalizable(&self) -> bool {
        positive_discriminant(self.a, self.b, self.c).is_some()
    }

    pub fn is_physical(&self) -> bool {
        matches!(self.discriminant(), Ok(d) if d <= 1.0 + PHYSICAL_SLACK)
    }
}

impl fmt::Display for GaussianParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(a={}, b={}, c={})", self.a, self.b, self.c)
    }
}

/// A point `(δx, δy)` of quadrature deviations.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PhasePoint {
    pub x: f64,
    pub y: f64,
}

impl PhasePoint {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    /// `δα = (δx + iδy)/√2`.
    pub fn amplitude(&self) -> Complex64 {
        Complex64::new(self.x, self.y) * FRAC_1_SQRT_2
    }

    pub fn from_amplitude(alpha: Complex64) -> Self {
        let scaled = alpha * std::f64::consts::SQRT_2;
        Self::new(scaled.re, scaled.im)
    }
}

/// Which pair of real quadratures a 2×2 CM is built on. The numbers alone do
/// not say; the purity law that applies depends on it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Basis {
    /// Intracavity quadratures `(x, y)`.
    IntracavityXy,
    /// Hermitian spectral quadratures `(q_Ω, p_Ω)` of one oscillator.
    SpectralPq,
    /// Non-Hermitian spectral quadratures of a `(Ω, −Ω)` pair.
    SpectralXyPair,
}

impl Basis {
    pub fn name(self) -> &'static str {
        match self {
            Basis::IntracavityXy => "INTRACAVITY_XY",
            Basis::SpectralPq => "SPECTRAL_PQ",
            Basis::SpectralXyPair => "SPECTRAL_XY_PAIR",
        }
    }
}

impl fmt::Display for Basis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Doubled second moments `[[2⟨δx²⟩, 2⟨δxδy⟩], [2⟨δxδy⟩, 2⟨δy²⟩]]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureCM {
    pub m_xx: f64,
    pub m_yy: f64,
    pub m_xy: f64,
    pub basis: Basis,
}

impl QuadratureCM {
    pub const fn new(m_xx: f64, m_yy: f64, m_xy: f64, basis: Basis) -> Self {
        Self { m_xx, m_yy, m_xy, basis }
    }

    pub const fn identity(basis: Basis) -> Self {
        Self::new(1.0, 1.0, 0.0, basis)
    }

    pub fn with_basis(self, basis: Basis) -> Self {
        Self { basis, ..self }
    }

    pub fn det(&self) -> f64 {
        self.m_xx * self.m_yy - self.m_xy * self.m_xy
    }

    pub fn matrix(&self) -> Matrix2<f64> {
        Matrix2::new(self.m_xx, self.m_xy, self.m_xy, self.m_yy)
    }

    /// Checks positivity of the diagonal and the determinant; returns the determinant.
    pub fn validate(&self) -> Result<f64> {
        if !(self.m_xx > 0.0) {
            return Err(Error::InvariantViolation("m_xx > 0".into()));
        }
        if !(self.m_yy > 0.0) {
            return Err(Error::InvariantViolation("m_yy > 0".into()));
        }
        positive_det(self.m_xx, self.m_yy, self.m_xy)
    }

    /// Heisenberg bound `det ≥ 1` in the doubled-moment convention.
    pub fn is_physical(&self) -> bool {
        self.validate().is_ok() && self.det() >= 1.0 - PHYSICAL_SLACK
    }
}

/// Doubled moments over the complex amplitude: `m_abs = 2⟨|δα|²⟩`,
/// `m_aa = 2⟨δα²⟩`. The lower-left entry `2⟨δα*²⟩` is `conj(m_aa)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AmplitudeCM {
    pub m_abs: f64,
    pub m_aa: Complex64,
}

impl AmplitudeCM {
    pub const fn new(m_abs: f64, m_aa: Complex64) -> Self {
        Self { m_abs, m_aa }
    }

    /// `m_abs² − |m_aa|² = 4(⟨|δα|²⟩² − |⟨δα²⟩|²)`.
    pub fn det(&self) -> f64 {
        self.m_abs * self.m_abs - self.m_aa.norm_sqr()
    }

    pub fn validate(&self) -> Result<f64> {
        if !(self.m_abs > 0.0) {
            return Err(Error::InvariantViolation("m_abs > 0".into()));
        }
        if !(self.m_aa.re.is_finite() && self.m_aa.im.is_finite()) {
            return Err(Error::InvariantViolation("m_aa finite".into()));
        }
        let det = self.det();
        if !(det > DEGENERACY_TOL * self.m_abs * self.m_abs) {
            return Err(Error::SingularCm { det });
        }
        Ok(det)
    }

    pub fn is_physical(&self) -> bool {
        self.validate().is_ok() && self.det() >= 1.0 - PHYSICAL_SLACK
    }

    /// Same second moments in the `(δx, δy)` basis.
    pub fn to_quadrature(&self, basis: Basis) -> QuadratureCM {
        let half_sum = self.m_abs;
        let half_diff = self.m_aa.re;
        QuadratureCM::new(half_sum + half_diff, half_sum - half_diff, self.m_aa.im, basis)
    }

    pub fn from_quadrature(m: &QuadratureCM) -> Self {
        Self::new(
            0.5 * (m.m_xx + m.m_yy),
            Complex64::new(0.5 * (m.m_xx - m.m_yy), m.m_xy),
        )
    }
}

/// `2⟨δx²⟩ = b/(ab−c²)`, `2⟨δy²⟩ = a/(ab−c²)`, `2⟨δxδy⟩ = c/(ab−c²)`.
pub fn moments_from_params(p: &GaussianParams) -> Result<QuadratureCM> {
    let d = p.discriminant()?;
    Ok(QuadratureCM::new(p.b / d, p.a / d, p.c / d, Basis::IntracavityXy))
}

/// Inverse of [`moments_from_params`]: `a = m_yy/det`, `b = m_xx/det`, `c = m_xy/det`.
pub fn params_from_quadrature_cm(m: &QuadratureCM) -> Result<GaussianParams> {
    let det = m.validate()?;
    Ok(GaussianParams::raw(m.m_yy / det, m.m_xx / det, m.m_xy / det))
}

pub fn amplitude_cm_from_params(p: &GaussianParams) -> Result<AmplitudeCM> {
    let d = p.discriminant()?;
    // 2⟨|δα|²⟩ = (a+b)/(2D); 2⟨δα²⟩ = −((a−b)/2 − ic)/D
    Ok(AmplitudeCM::new(
        0.5 * (p.a + p.b) / d,
        Complex64::new(-0.5 * (p.a - p.b), p.c) / d,
    ))
}

/// Solves `a + b = 2 m_abs/det` and `(a − b)/2 + ic = −conj(m_aa)/det`.
pub fn params_from_amplitude_cm(m: &AmplitudeCM) -> Result<GaussianParams> {
    let det = m.validate()?;
    let sum = 2.0 * m.m_abs / det;
    let z = -m.m_aa.conj() / det;
    let diff = 2.0 * z.re;
    Ok(GaussianParams::raw(
        0.5 * (sum + diff),
        0.5 * (sum - diff),
        z.im,
    ))
}

/// Wigner density at `(δx, δy)`, normalized over `d²α = dx dy / 2`.
pub fn wigner_eval(p: &GaussianParams, pt: PhasePoint) -> Result<f64> {
    let d = p.discriminant()?;
    let (x, y) = (pt.x, pt.y);
    let form = p.a * x * x + p.b * y * y - 2.0 * p.c * x * y;
    Ok(2.0 / PI * d.sqrt() * (-form).exp())
}

/// The same density written over the complex amplitude `δα`:
/// `exp(−(a+b)|δα|² − [(a−b)/2 + ic] δα² − [(a−b)/2 − ic] δα*²)`.
pub fn wigner_eval_amplitude(p: &GaussianParams, alpha: Complex64) -> Result<f64> {
    let d = p.discriminant()?;
    let k = Complex64::new(0.5 * (p.a - p.b), p.c);
    let alpha2 = alpha * alpha;
    let cross = k * alpha2 + k.conj() * alpha2.conj();
    let form = (p.a + p.b) * alpha.norm_sqr() + cross.re;
    Ok(2.0 / PI * d.sqrt() * (-form).exp())
}

/// Anything carrying enough information to give a single-oscillator purity.
pub trait SingleModePurity {
    fn purity(&self) -> Result<f64>;
}

impl SingleModePurity for GaussianParams {
    /// `√(ab − c²)`
    fn purity(&self) -> Result<f64> {
        Ok(self.discriminant()?.sqrt())
    }
}

impl SingleModePurity for QuadratureCM {
    /// `1/√det M`
    fn purity(&self) -> Result<f64> {
        Ok(1.0 / self.validate()?.sqrt())
    }
}

impl SingleModePurity for AmplitudeCM {
    fn purity(&self) -> Result<f64> {
        Ok(1.0 / self.validate()?.sqrt())
    }
}

pub fn purity_single<T: SingleModePurity + ?Sized>(state: &T) -> Result<f64> {
    state.purity()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalityReport {
    pub normalizable: bool,
    pub physical: bool,
    /// `√(ab − c²)`; `None` when the parameters are not normalizable.
    pub purity: Option<f64>,
}

pub fn validate_physicality(p: &GaussianParams) -> PhysicalityReport {
    match p.discriminant() {
        Ok(d) => PhysicalityReport {
            normalizable: true,
            physical: d <= 1.0 + PHYSICAL_SLACK,
            purity: Some(d.sqrt()),
        },
        Err(_) => PhysicalityReport { normalizable: false, physical: false, purity: None },
    }
}
