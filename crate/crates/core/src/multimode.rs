//! Spectral modes of the free-space field.
//!
//! Each frequency bin `Ω` carries an oscillator with Hermitian quadratures
//! `(q_Ω, p_Ω)`, `α_Ω = (q_Ω + ip_Ω)/√2`. Broadband homodyning instead sees the
//! non-Hermitian pair quadratures
//!
//! ```text
//! x_Ω = (α_Ω + α*_{−Ω})/√2,   y_Ω = (α_Ω − α*_{−Ω})/(i√2),   x_{−Ω} = x*_Ω,  y_{−Ω} = y*_Ω
//! ```
//!
//! which mix the `±Ω` oscillators. The two bases lead to different purity laws:
//! `1/√det` for the 4×4 `(q, p)` CM of two oscillators, `1/det` for the 2×2
//! `(x, y)` CM of a `±Ω` pair. [`expand_xy_to_full_pq_cm`] connects them.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt;
use std::ops::Neg;

use nalgebra::{Matrix2, Matrix4};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::{
    positive_det, positive_discriminant, Basis, QuadratureCM, SingleModePurity, PHYSICAL_SLACK,
};

/// Signed frequency bin, the offset of an oscillator from the carrier in units
/// of the bin width.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ModeIndex(pub i64);

impl ModeIndex {
    pub fn is_opposite(self, other: ModeIndex) -> bool {
        self.0 == -other.0
    }
}

impl Neg for ModeIndex {
    type Output = ModeIndex;

    fn neg(self) -> ModeIndex {
        ModeIndex(-self.0)
    }
}

impl fmt::Display for ModeIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// One realization `(q_Ω, p_Ω)` of a single spectral oscillator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralQuadratures {
    pub q: f64,
    pub p: f64,
    pub mode: ModeIndex,
}

impl SpectralQuadratures {
    pub const fn new(q: f64, p: f64, mode: ModeIndex) -> Self {
        Self { q, p, mode }
    }

    /// `α_Ω = (q + ip)/√2`
    pub fn amplitude(&self) -> Complex64 {
        Complex64::new(self.q, self.p) * FRAC_1_SQRT_2
    }
}

/// `x_Ω`, `y_Ω` of a `±Ω` pair. Only the `+Ω` member is stored; the `−Ω`
/// member is its conjugate.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct XYPairQuadratures {
    pub x_re: f64,
    pub x_im: f64,
    pub y_re: f64,
    pub y_im: f64,
}

impl XYPairQuadratures {
    pub fn from_complex(x: Complex64, y: Complex64) -> Self {
        Self { x_re: x.re, x_im: x.im, y_re: y.re, y_im: y.im }
    }

    pub fn x(&self) -> Complex64 {
        Complex64::new(self.x_re, self.x_im)
    }

    pub fn y(&self) -> Complex64 {
        Complex64::new(self.y_re, self.y_im)
    }

    /// `x_{−Ω} = x*_Ω`
    pub fn x_minus(&self) -> Complex64 {
        self.x().conj()
    }

    /// `y_{−Ω} = y*_Ω`
    pub fn y_minus(&self) -> Complex64 {
        self.y().conj()
    }
}

/// Maps the `(q, p)` realizations of bins `Ω` and `−Ω` to `(x_Ω, y_Ω)`.
pub fn xy_from_pq(plus: &SpectralQuadratures, minus: &SpectralQuadratures) -> Result<XYPairQuadratures> {
    if !plus.mode.is_opposite(minus.mode) {
        return Err(Error::ModeMismatch { plus: plus.mode, minus: minus.mode });
    }
    let alpha = plus.amplitude();
    let alpha_minus_conj = minus.amplitude().conj();
    let x = (alpha + alpha_minus_conj) * FRAC_1_SQRT_2;
    let y = (alpha - alpha_minus_conj) / Complex64::new(0.0, std::f64::consts::SQRT_2);
    Ok(XYPairQuadratures::from_complex(x, y))
}

/// Inverse of [`xy_from_pq`]: returns the `(q, p)` of bins `mode` and `−mode`.
pub fn pq_from_xy(xy: &XYPairQuadratures, mode: ModeIndex) -> (SpectralQuadratures, SpectralQuadratures) {
    let plus = SpectralQuadratures::new(xy.x_re - xy.y_im, xy.x_im + xy.y_re, mode);
    let minus = SpectralQuadratures::new(xy.x_re + xy.y_im, xy.y_re - xy.x_im, -mode);
    (plus, minus)
}

/// Orthogonal map from `(q_Ω, p_Ω, q_{−Ω}, p_{−Ω})` to
/// `√2 (Re x_Ω, Im x_Ω, Re y_Ω, Im y_Ω)`.
pub fn pq_to_scaled_xy_transform() -> Matrix4<f64> {
    let s = FRAC_1_SQRT_2;
    #[rustfmt::skip]
    let m = Matrix4::new(
         s, 0.0,   s, 0.0,
        0.0,   s, 0.0,  -s,
        0.0,   s, 0.0,   s,
        -s, 0.0,   s, 0.0,
    );
    m
}

/// 4×4 CM of two spectral oscillators `Ω₁`, `Ω₂`:
/// `[[M_Ω₁, N], [Nᵀ, M_Ω₂]]` with `N_ij = 2⟨δu¹_i δu²_j⟩`, `u = (q, p)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoModeCM {
    pub block_1: QuadratureCM,
    pub block_2: QuadratureCM,
    pub cross: Matrix2<f64>,
    pub modes: (ModeIndex, ModeIndex),
    /// Set when a nonzero cross block was discarded by the stationarity rule.
    pub diagnostic: Option<String>,
}

impl TwoModeCM {
    pub fn matrix(&self) -> Matrix4<f64> {
        let mut m = Matrix4::zeros();
        m.fixed_view_mut::<2, 2>(0, 0).copy_from(&self.block_1.matrix());
        m.fixed_view_mut::<2, 2>(2, 2).copy_from(&self.block_2.matrix());
        m.fixed_view_mut::<2, 2>(0, 2).copy_from(&self.cross);
        m.fixed_view_mut::<2, 2>(2, 0).copy_from(&self.cross.transpose());
        m
    }

    pub fn is_correlated_pair(&self) -> bool {
        self.modes.0.is_opposite(self.modes.1) && self.cross != Matrix2::zeros()
    }
}

/// Builds a [`TwoModeCM`], applying the stationary-flux rule: oscillators that
/// are not a `±Ω` pair are uncorrelated, so their cross block is forced to zero.
pub fn assemble_two_mode_cm(
    m1: &QuadratureCM,
    m2: &QuadratureCM,
    n: &Matrix2<f64>,
    modes: (ModeIndex, ModeIndex),
) -> Result<TwoModeCM> {
    for m in [m1, m2] {
        if m.basis != Basis::SpectralPq {
            return Err(Error::WrongBasis { expected: Basis::SpectralPq.name(), found: m.basis.name() });
        }
        m.validate()?;
    }
    let (cross, diagnostic) = if modes.0.is_opposite(modes.1) || *n == Matrix2::zeros() {
        (*n, None)
    } else {
        (
            Matrix2::zeros(),
            Some(format!(
                "bins {} and {} are not a ±Ω pair; stationary flux forces the cross block to zero",
                modes.0, modes.1
            )),
        )
    };
    let cm = TwoModeCM { block_1: *m1, block_2: *m2, cross, modes, diagnostic };
    if cm.matrix().cholesky().is_none() {
        return Err(Error::NotPositiveDefinite);
    }
    Ok(cm)
}

/// Product law `1/√det M₄ = P_Ω₁ · P_Ω₂` for independent oscillators.
pub fn purity_two_mode_pq(cm: &TwoModeCM) -> Result<f64> {
    if cm.is_correlated_pair() {
        return Err(Error::CorrelatedPairNotSupported(cm.modes.0, cm.modes.1));
    }
    let det = cm.matrix().determinant();
    if !(det > 0.0) {
        return Err(Error::SingularCm { det });
    }
    Ok(1.0 / det.sqrt())
}

/// Factorized form of [`purity_two_mode_pq`]; valid only for a zero cross block.
pub fn purity_product(cm: &TwoModeCM) -> Result<f64> {
    Ok(cm.block_1.purity()? * cm.block_2.purity()?)
}

/// CM of a `±Ω` pair over the pair quadratures:
/// `[[2⟨δx_Ω δx_{−Ω}⟩, 2⟨δx_Ω δy_{−Ω}⟩], [·, 2⟨δy_Ω δy_{−Ω}⟩]]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct XYPairCM {
    pub m_xx: f64,
    pub m_yy: f64,
    pub m_xy: f64,
    /// The `+Ω` bin of the pair.
    pub mode: ModeIndex,
}

impl XYPairCM {
    pub const fn new(m_xx: f64, m_yy: f64, m_xy: f64, mode: ModeIndex) -> Self {
        Self { m_xx, m_yy, m_xy, mode }
    }

    pub const fn identity(mode: ModeIndex) -> Self {
        Self::new(1.0, 1.0, 0.0, mode)
    }

    pub fn mode_pair(&self) -> (ModeIndex, ModeIndex) {
        (self.mode, -self.mode)
    }

    pub fn det(&self) -> f64 {
        self.m_xx * self.m_yy - self.m_xy * self.m_xy
    }

    pub fn matrix(&self) -> Matrix2<f64> {
        Matrix2::new(self.m_xx, self.m_xy, self.m_xy, self.m_yy)
    }

    pub fn validate(&self) -> Result<f64> {
        self.as_quadrature().validate()
    }

    pub fn is_physical(&self) -> bool {
        self.validate().is_ok() && self.det() >= 1.0 - PHYSICAL_SLACK
    }

    pub fn as_quadrature(&self) -> QuadratureCM {
        QuadratureCM::new(self.m_xx, self.m_yy, self.m_xy, Basis::SpectralXyPair)
    }
}

/// Parameters of the `±Ω` pair Wigner function
/// `(4/π²)(ab − c²) exp(−a|δx_Ω|² − b|δy_Ω|² + c(δx_Ω δy_{−Ω} + δx_{−Ω} δy_Ω))`.
///
/// This three-parameter family is exactly the stationary pair family with a
/// real `⟨δx_Ω δy_{−Ω}⟩`; general two-oscillator states are handled only as raw
/// 4×4 CMs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoModeGaussianParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl TwoModeGaussianParams {
    pub fn new(a: f64, b: f64, c: f64) -> Result<Self> {
        let p = Self::raw(a, b, c);
        p.discriminant()?;
        Ok(p)
    }

    pub const fn raw(a: f64, b: f64, c: f64) -> Self {
        Self { a, b, c }
    }

    pub const fn vacuum() -> Self {
        Self::raw(1.0, 1.0, 0.0)
    }

    pub fn discriminant(&self) -> Result<f64> {
        positive_discriminant(self.a, self.b, self.c).ok_or(Error::DegenerateParams {
            a: self.a,
            b: self.b,
            c: self.c,
        })
    }

    pub fn is_physical(&self) -> bool {
        matches!(self.discriminant(), Ok(d) if d <= 1.0 + PHYSICAL_SLACK)
    }
}

impl fmt::Display for TwoModeGaussianParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(a={}, b={}, c={})", self.a, self.b, self.c)
    }
}

/// `2⟨|δx_Ω|²⟩ = b/(ab−c²)`, `2⟨|δy_Ω|²⟩ = a/(ab−c²)`, `2⟨δx_Ω δy_{−Ω}⟩ = c/(ab−c²)`.
pub fn xy_cm_from_two_mode_params(p: &TwoModeGaussianParams, mode: ModeIndex) -> Result<XYPairCM> {
    let d = p.discriminant()?;
    Ok(XYPairCM::new(p.b / d, p.a / d, p.c / d, mode))
}

pub fn two_mode_params_from_xy_cm(cm: &XYPairCM) -> Result<TwoModeGaussianParams> {
    let det = cm.validate()?;
    Ok(TwoModeGaussianParams::raw(cm.m_yy / det, cm.m_xx / det, cm.m_xy / det))
}

/// Pair Wigner density at `pt`. It integrates to one against `d⁴/4`, where
/// `d⁴ = dRe x dIm x dRe y dIm y` is the measure of the purity integral.
pub fn two_mode_wigner_eval(p: &TwoModeGaussianParams, pt: &XYPairQuadratures) -> Result<f64> {
    let d = p.discriminant()?;
    let x2 = pt.x_re * pt.x_re + pt.x_im * pt.x_im;
    let y2 = pt.y_re * pt.y_re + pt.y_im * pt.y_im;
    // δx_Ω δy_{−Ω} + δx_{−Ω} δy_Ω = 2 Re(x_Ω y*_Ω)
    let mixed = 2.0 * (pt.x_re * pt.y_re + pt.x_im * pt.y_im);
    let exponent = -p.a * x2 - p.b * y2 + p.c * mixed;
    Ok(4.0 / (PI * PI) * d * exponent.exp())
}

/// `1/det M_{Ω,−Ω}`, with no square root.
pub fn purity_xy(cm: &XYPairCM) -> Result<f64> {
    Ok(1.0 / cm.validate()?)
}

/// The 4×4 `(q_Ω, p_Ω, q_{−Ω}, p_{−Ω})` CM of the pair described by `cm`.
///
/// Stationarity makes `(x_Ω, y_Ω)` circularly symmetric, so in the real basis
/// `√2 (Re x, Im x, Re y, Im y)` the CM is `M ⊗ I₂`; the orthogonal
/// [`pq_to_scaled_xy_transform`] carries it back to `(q, p)`. Hence
/// `det M₄ = (det M)²`.
pub fn expand_xy_to_full_pq_cm(cm: &XYPairCM) -> Result<Matrix4<f64>> {
    cm.validate()?;
    let scaled = cm.matrix().kronecker(&Matrix2::<f64>::identity());
    let o = pq_to_scaled_xy_transform();
    let full = o.transpose() * scaled * o;
    Ok(Matrix4::from_fn(|i, j| full[(i, j)]))
}

/// Inverse of [`expand_xy_to_full_pq_cm`]. Fails with `InvariantViolation` when
/// the 4×4 CM is not of the stationary `M ⊗ I₂` form within `tol`.
pub fn xy_cm_from_full_pq_cm(full: &Matrix4<f64>, mode: ModeIndex, tol: f64) -> Result<XYPairCM> {
    let o = pq_to_scaled_xy_transform();
    let scaled = o * full * o.transpose();
    let (m_xx, m_yy, m_xy) = (scaled[(0, 0)], scaled[(2, 2)], scaled[(0, 2)]);
    let expected = Matrix2::new(m_xx, m_xy, m_xy, m_yy).kronecker(&Matrix2::<f64>::identity());
    let scale = full.abs().max().max(1.0);
    if (scaled - expected).abs().max() > tol * scale {
        return Err(Error::InvariantViolation(
            "4x4 CM is not the stationary embedding of a ±Ω pair CM".into(),
        ));
    }
    let cm = XYPairCM::new(m_xx, m_yy, m_xy, mode);
    positive_det(m_xx, m_yy, m_xy)?;
    Ok(cm)
}

/// Splits a 4×4 `(q₁, p₁, q₂, p₂)` CM into a [`TwoModeCM`] without applying the
/// stationarity rule.
pub fn two_mode_cm_from_matrix(full: &Matrix4<f64>, modes: (ModeIndex, ModeIndex)) -> Result<TwoModeCM> {
    let block = |r: usize| {
        QuadratureCM::new(full[(r, r)], full[(r + 1, r + 1)], full[(r, r + 1)], Basis::SpectralPq)
    };
    let cross = full.fixed_view::<2, 2>(0, 2).into_owned();
    assemble_two_mode_cm(&block(0), &block(2), &cross, modes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::purity_single;
    use proptest::prelude::*;
    use std::f64::consts::SQRT_2;

    const BIN: ModeIndex = ModeIndex(3);

    fn pq(q: f64, p: f64, bin: i64) -> SpectralQuadratures {
        SpectralQuadratures::new(q, p, ModeIndex(bin))
    }

    #[test]
    fn xy_from_pq_examples() {
        let xy = xy_from_pq(&pq(SQRT_2, 0.0, 3), &pq(SQRT_2, 0.0, -3)).unwrap();
        assert!((xy.x() - Complex64::new(SQRT_2, 0.0)).norm() < 1e-15);
        assert!(xy.y().norm() < 1e-15);

        let zero = xy_from_pq(&pq(0.0, 0.0, 3), &pq(0.0, 0.0, -3)).unwrap();
        assert_eq!(zero, XYPairQuadratures::default());

        assert!(matches!(
            xy_from_pq(&pq(1.0, 0.0, 3), &pq(1.0, 0.0, 4)),
            Err(Error::ModeMismatch { .. })
        ));
    }

    #[test]
    fn transform_matches_complex_formulas() {
        let plus = pq(0.3, -1.2, 5);
        let minus = pq(2.1, 0.7, -5);
        let xy = xy_from_pq(&plus, &minus).unwrap();
        let s = pq_to_scaled_xy_transform() * nalgebra::Vector4::new(plus.q, plus.p, minus.q, minus.p);
        let direct = [xy.x_re, xy.x_im, xy.y_re, xy.y_im];
        for k in 0..4 {
            assert!((s[k] / SQRT_2 - direct[k]).abs() < 1e-15);
        }
        let o = pq_to_scaled_xy_transform();
        assert!((o * o.transpose() - Matrix4::identity()).abs().max() < 1e-15);
    }

    #[test]
    fn assemble_examples() {
        let vac = QuadratureCM::identity(Basis::SpectralPq);
        let cm = assemble_two_mode_cm(&vac, &vac, &Matrix2::zeros(), (ModeIndex(3), ModeIndex(7))).unwrap();
        assert_eq!(cm.matrix(), Matrix4::identity());
        assert!(cm.diagnostic.is_none());

        let n = Matrix2::new(0.1, 0.0, 0.0, -0.1);
        let zeroed = assemble_two_mode_cm(&vac, &vac, &n, (ModeIndex(3), ModeIndex(7))).unwrap();
        assert_eq!(zeroed.cross, Matrix2::zeros());
        assert!(zeroed.diagnostic.is_some());

        let kept = assemble_two_mode_cm(&vac, &vac, &n, (ModeIndex(3), ModeIndex(-3))).unwrap();
        assert_eq!(kept.cross, n);

        let too_strong = Matrix2::new(2.0, 0.0, 0.0, 2.0);
        assert_eq!(
            assemble_two_mode_cm(&vac, &vac, &too_strong, (ModeIndex(3), ModeIndex(-3))),
            Err(Error::NotPositiveDefinite)
        );

        let intracavity = QuadratureCM::identity(Basis::IntracavityXy);
        assert!(matches!(
            assemble_two_mode_cm(&intracavity, &vac, &Matrix2::zeros(), (ModeIndex(1), ModeIndex(2))),
            Err(Error::WrongBasis { .. })
        ));
    }

    #[test]
    fn product_law_examples() {
        let vac = QuadratureCM::identity(Basis::SpectralPq);
        let modes = (ModeIndex(3), ModeIndex(7));
        let cm = assemble_two_mode_cm(&vac, &vac, &Matrix2::zeros(), modes).unwrap();
        assert_eq!(purity_two_mode_pq(&cm).unwrap(), 1.0);

        let det4 = QuadratureCM::new(2.0, 2.0, 0.0, Basis::SpectralPq);
        let cm = assemble_two_mode_cm(&det4, &vac, &Matrix2::zeros(), modes).unwrap();
        let p = purity_two_mode_pq(&cm).unwrap();
        assert!((p - 0.5).abs() < 1e-15);
        assert!((p - purity_single(&det4).unwrap() * purity_single(&vac).unwrap()).abs() < 1e-15);

        let cm = assemble_two_mode_cm(&det4, &det4, &Matrix2::zeros(), modes).unwrap();
        assert!((purity_two_mode_pq(&cm).unwrap() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn product_law_refuses_correlated_pair() {
        let full = expand_xy_to_full_pq_cm(&XYPairCM::new(1.0, 1.25, 0.5, BIN)).unwrap();
        let cm = two_mode_cm_from_matrix(&full, (BIN, -BIN)).unwrap();
        assert!(matches!(purity_two_mode_pq(&cm), Err(Error::CorrelatedPairNotSupported(..))));
    }

    #[test]
    fn xy_cm_examples() {
        let vac = xy_cm_from_two_mode_params(&TwoModeGaussianParams::vacuum(), BIN).unwrap();
        assert_eq!(vac, XYPairCM::identity(BIN));

        let mixed = xy_cm_from_two_mode_params(&TwoModeGaussianParams::new(0.8, 0.8, 0.0).unwrap(), BIN).unwrap();
        assert!((mixed.m_xx - 1.25).abs() < 1e-15 && (mixed.m_yy - 1.25).abs() < 1e-15);
        assert_eq!(mixed.m_xy, 0.0);
        assert!((mixed.det() - 1.5625).abs() < 1e-14);

        let pure = xy_cm_from_two_mode_params(&TwoModeGaussianParams::new(1.25, 1.0, 0.5).unwrap(), BIN).unwrap();
        assert!((pure.m_xx - 1.0).abs() < 1e-15 && (pure.m_yy - 1.25).abs() < 1e-15);
        assert!((pure.m_xy - 0.5).abs() < 1e-15 && (pure.det() - 1.0).abs() < 1e-15);
        assert!((purity_xy(&pure).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn xy_reconstruction_examples() {
        let vac = two_mode_params_from_xy_cm(&XYPairCM::identity(BIN)).unwrap();
        assert_eq!(vac, TwoModeGaussianParams::vacuum());
        let p = two_mode_params_from_xy_cm(&XYPairCM::new(1.25, 1.25, 0.0, BIN)).unwrap();
        assert!((p.a - 0.8).abs() < 1e-15 && (p.b - 0.8).abs() < 1e-15 && p.c == 0.0);
        let p = two_mode_params_from_xy_cm(&XYPairCM::new(1.0, 1.25, 0.5, BIN)).unwrap();
        assert!((p.a - 1.25).abs() < 1e-12 && (p.b - 1.0).abs() < 1e-12 && (p.c - 0.5).abs() < 1e-12);
        assert!(matches!(
            two_mode_params_from_xy_cm(&XYPairCM::new(1.0, 1.0, 1.0, BIN)),
            Err(Error::SingularCm { .. })
        ));
    }

    #[test]
    fn two_mode_wigner_examples() {
        let origin = XYPairQuadratures::default();
        let vac = two_mode_wigner_eval(&TwoModeGaussianParams::vacuum(), &origin).unwrap();
        assert!((vac - 4.0 / (PI * PI)).abs() < 1e-15);

        let p = TwoModeGaussianParams::new(0.8, 0.8, 0.0).unwrap();
        let pt = XYPairQuadratures { x_re: 1.0, ..Default::default() };
        let want = 4.0 / (PI * PI) * 0.64 * (-0.8_f64).exp();
        assert!((two_mode_wigner_eval(&p, &pt).unwrap() - want).abs() < 1e-15);
    }

    #[test]
    fn purity_xy_examples() {
        assert_eq!(purity_xy(&XYPairCM::identity(BIN)).unwrap(), 1.0);
        let cm = xy_cm_from_two_mode_params(&TwoModeGaussianParams::new(0.8, 0.8, 0.0).unwrap(), BIN).unwrap();
        assert!((purity_xy(&cm).unwrap() - 0.64).abs() < 1e-14);
        // the root law would give 0.8 here
        assert!((1.0 / cm.det().sqrt() - 0.8).abs() < 1e-14);
    }

    #[test]
    fn expansion_examples() {
        let vac = expand_xy_to_full_pq_cm(&XYPairCM::identity(BIN)).unwrap();
        assert!((vac - Matrix4::identity()).abs().max() < 1e-15);

        let cm = XYPairCM::new(1.25, 1.25, 0.0, BIN);
        let full = expand_xy_to_full_pq_cm(&cm).unwrap();
        assert!((full.determinant() - 2.44140625).abs() < 1e-12);

        let back = xy_cm_from_full_pq_cm(&full, BIN, 1e-12).unwrap();
        assert!((back.m_xx - 1.25).abs() < 1e-14 && back.m_xy.abs() < 1e-14);

        let general = Matrix4::from_diagonal(&nalgebra::Vector4::new(1.0, 2.0, 3.0, 4.0));
        assert!(xy_cm_from_full_pq_cm(&general, BIN, 1e-9).is_err());
    }

    fn valid_xy_cm() -> impl Strategy<Value = XYPairCM> {
        (0.05f64..20.0, 0.05f64..20.0, -0.99f64..0.99)
            .prop_map(|(xx, yy, rho)| XYPairCM::new(xx, yy, rho * (xx * yy).sqrt(), BIN))
    }

    proptest! {
        #[test]
        fn pq_xy_round_trip(q1 in -10.0f64..10.0, p1 in -10.0f64..10.0, q2 in -10.0f64..10.0, p2 in -10.0f64..10.0) {
            let xy = xy_from_pq(&pq(q1, p1, 2), &pq(q2, p2, -2)).unwrap();
            let (plus, minus) = pq_from_xy(&xy, ModeIndex(2));
            prop_assert!((plus.q - q1).abs() < 1e-14 && (plus.p - p1).abs() < 1e-14);
            prop_assert!((minus.q - q2).abs() < 1e-14 && (minus.p - p2).abs() < 1e-14);
            prop_assert_eq!(minus.mode, ModeIndex(-2));
        }

        #[test]
        fn purity_laws_reconcile(cm in valid_xy_cm()) {
            let full = expand_xy_to_full_pq_cm(&cm).unwrap();
            let via_root = 1.0 / full.determinant().sqrt();
            let direct = purity_xy(&cm).unwrap();
            prop_assert!((via_root - direct).abs() <= 1e-12 * direct.max(1.0));
        }

        #[test]
        fn factorization_for_independent_bins(
            a in valid_xy_cm(), b in valid_xy_cm(), m1 in -20i64..20, m2 in -20i64..20,
        ) {
            prop_assume!(m1 != -m2 && m1 != m2);
            let cm = assemble_two_mode_cm(
                &a.as_quadrature().with_basis(Basis::SpectralPq),
                &b.as_quadrature().with_basis(Basis::SpectralPq),
                &Matrix2::new(0.3, 0.1, -0.2, 0.05),
                (ModeIndex(m1), ModeIndex(m2)),
            ).unwrap();
            let root = purity_two_mode_pq(&cm).unwrap();
            let product = purity_product(&cm).unwrap();
            prop_assert!((root - product).abs() <= 1e-12 * product.max(1.0));
        }

        #[test]
        fn xy_round_trip(a in 0.1f64..10.0, b in 0.1f64..10.0, rho in -0.99f64..0.99) {
            let p = TwoModeGaussianParams::raw(a, b, rho * (a * b).sqrt());
            let back = two_mode_params_from_xy_cm(&xy_cm_from_two_mode_params(&p, BIN).unwrap()).unwrap();
            let scale = a.max(b).max(1.0);
            prop_assert!((back.a - p.a).abs() <= 1e-12 * scale);
            prop_assert!((back.b - p.b).abs() <= 1e-12 * scale);
            prop_assert!((back.c - p.c).abs() <= 1e-12 * scale);
            let d = p.a * p.b - p.c * p.c;
            let purity = purity_xy(&xy_cm_from_two_mode_params(&p, BIN).unwrap()).unwrap();
            prop_assert!((purity - d).abs() <= 1e-12 * d.max(1.0));
        }
    }
}
