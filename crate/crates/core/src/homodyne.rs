//! Simulated homodyne measurements on stationary Gaussian light.
//!
//! Samples are drawn in the Wigner (eigenvalue) domain: symmetrized operator
//! moments equal the classical moments of the Wigner distribution, so ordinary
//! Gaussian sampling reproduces every CM entry exactly in distribution.
//!
//! Each solo bin draws `(q, p)` from the single-oscillator law; each `±Ω` pair
//! draws `(q_Ω, p_Ω, q_{−Ω}, p_{−Ω})` jointly. Bins use independent ChaCha
//! streams keyed by `(seed, bin)`, so generation order cannot change results.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4};
use std::io::Write;

use nalgebra::{Matrix2, SMatrix, SVector};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::gaussian::{
    moments_from_params, params_from_quadrature_cm, Basis, GaussianParams, QuadratureCM,
    SingleModePurity,
};
use crate::multimode::{
    expand_xy_to_full_pq_cm, purity_xy, two_mode_params_from_xy_cm, xy_cm_from_two_mode_params,
    xy_from_pq, ModeIndex, SpectralQuadratures, TwoModeGaussianParams, XYPairCM, XYPairQuadratures,
};

/// Estimators refuse ensembles smaller than this.
pub const MIN_SAMPLES: usize = 100;

/// Number of jackknife blocks behind every reported standard error.
pub const JACKKNIFE_BLOCKS: usize = 100;

/// Local oscillator `A_LO = (Q_LO + iP_LO)/√2`. Photocurrent gain is fixed to 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalOscillator {
    pub q_lo: f64,
    pub p_lo: f64,
    /// Bin whose frequency the LO is modulated at, for resonator detection.
    pub modulation_bin: Option<ModeIndex>,
}

impl LocalOscillator {
    pub fn new(q_lo: f64, p_lo: f64) -> Result<Self> {
        if !(q_lo.is_finite() && p_lo.is_finite()) || q_lo * q_lo + p_lo * p_lo <= 0.0 {
            return Err(Error::InvariantViolation("q_lo^2 + p_lo^2 > 0".into()));
        }
        Ok(Self { q_lo, p_lo, modulation_bin: None })
    }

    /// Unit LO `(cos θ, sin θ)` selecting the quadrature at phase `θ`.
    pub fn at_angle(theta: f64) -> Self {
        Self { q_lo: theta.cos(), p_lo: theta.sin(), modulation_bin: None }
    }

    pub fn modulated_at(mut self, bin: ModeIndex) -> Self {
        self.modulation_bin = Some(bin);
        self
    }

    pub fn amplitude(&self) -> Complex64 {
        Complex64::new(self.q_lo, self.p_lo) * FRAC_1_SQRT_2
    }
}

/// Resonator detection of one spectral oscillator: `i = Q_LO q_Ω + P_LO p_Ω`.
pub fn photocurrent_resonator(sample: &SpectralQuadratures, lo: &LocalOscillator) -> f64 {
    lo.q_lo * sample.q + lo.p_lo * sample.p
}

/// Spectral component of the broadband photocurrent, `i_Ω = Q_LO x_Ω + P_LO y_Ω`.
/// Complex because `x_Ω`, `y_Ω` are not Hermitian; `i_{−Ω} = i*_Ω`.
pub fn photocurrent_broadband(pair: &XYPairQuadratures, lo: &LocalOscillator) -> Complex64 {
    pair.x() * lo.q_lo + pair.y() * lo.p_lo
}

/// Scenario to simulate: which bins exist and how each is distributed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumConfig {
    /// Correlated `(Ω, −Ω)` pairs, keyed by the positive bin.
    #[serde(default)]
    pub pair_params: BTreeMap<ModeIndex, TwoModeGaussianParams>,
    /// Independent oscillators.
    #[serde(default)]
    pub solo_params: BTreeMap<ModeIndex, GaussianParams>,
    pub seed: u64,
    pub n_samples: usize,
}

impl SpectrumConfig {
    pub fn new(seed: u64, n_samples: usize) -> Self {
        Self { pair_params: BTreeMap::new(), solo_params: BTreeMap::new(), seed, n_samples }
    }

    pub fn with_pair(mut self, bin: i64, params: TwoModeGaussianParams) -> Self {
        self.pair_params.insert(ModeIndex(bin), params);
        self
    }

    pub fn with_solo(mut self, bin: i64, params: GaussianParams) -> Self {
        self.solo_params.insert(ModeIndex(bin), params);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let invalid = |msg: String| Err(Error::ConfigInvalid(msg));
        if self.n_samples < MIN_SAMPLES {
            return invalid(format!("n_samples: {} is below the minimum of {MIN_SAMPLES}", self.n_samples));
        }
        if self.pair_params.is_empty() && self.solo_params.is_empty() {
            return invalid("no bins configured".into());
        }
        for (bin, p) in &self.pair_params {
            if bin.0 <= 0 {
                return invalid(format!("pair_params[{bin}]: pair key must be a positive bin"));
            }
            if let Err(e) = p.discriminant() {
                return invalid(format!("pair_params[{bin}]: {e}"));
            }
        }
        for (bin, p) in &self.solo_params {
            let owner = ModeIndex(bin.0.abs());
            if bin.0 != 0 && self.pair_params.contains_key(&owner) {
                return invalid(format!("solo_params[{bin}]: bin already belongs to pair {owner}"));
            }
            if let Err(e) = p.discriminant() {
                return invalid(format!("solo_params[{bin}]: {e}"));
            }
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form.
    pub fn digest(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }
}

/// Sampled `(q, p)` realizations per bin. All bins hold `n_samples` rows.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldEnsemble {
    bins: BTreeMap<ModeIndex, Vec<[f64; 2]>>,
    seed: u64,
    n_samples: usize,
    config_digest: String,
}

impl FieldEnsemble {
    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn config_digest(&self) -> &str {
        &self.config_digest
    }

    pub fn bins(&self) -> impl Iterator<Item = ModeIndex> + '_ {
        self.bins.keys().copied()
    }

    pub fn samples(&self, bin: ModeIndex) -> Result<&[[f64; 2]]> {
        self.bins.get(&bin).map(Vec::as_slice).ok_or(Error::BinAbsent(bin))
    }

    pub fn quadratures(&self, bin: ModeIndex, index: usize) -> Result<SpectralQuadratures> {
        let [q, p] = self.samples(bin)?[index];
        Ok(SpectralQuadratures::new(q, p, bin))
    }

    /// Writes the `bin,sample_index,q,p` table, one row per sample, bins ascending.
    pub fn write_table<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "bin,sample_index,q,p")?;
        for (bin, rows) in &self.bins {
            for (i, [q, p]) in rows.iter().enumerate() {
                writeln!(out, "{bin},{i},{q:?},{p:?}")?;
            }
        }
        out.flush()
    }
}

fn bin_rng(seed: u64, bin: ModeIndex) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(bin.0 as u64);
    rng
}

/// Draws `n` vectors from `N(mean, cov)`.
fn draw_gaussian<const D: usize>(
    rng: &mut ChaCha8Rng,
    cov: SMatrix<f64, D, D>,
    mean: SVector<f64, D>,
    n: usize,
) -> Result<Vec<[f64; D]>> {
    let chol = cov.cholesky().ok_or(Error::NotPositiveDefinite)?;
    let l = chol.l();
    Ok((0..n)
        .map(|_| {
            let z = SVector::<f64, D>::from_fn(|_, _| StandardNormal.sample(rng));
            (mean + l * z).into()
        })
        .collect())
}

enum Job {
    Solo(ModeIndex, GaussianParams),
    Pair(ModeIndex, TwoModeGaussianParams),
}

pub fn sample_ensemble(cfg: &SpectrumConfig) -> Result<FieldEnsemble> {
    cfg.validate()?;
    let n = cfg.n_samples;
    let jobs: Vec<Job> = cfg
        .solo_params
        .iter()
        .map(|(b, p)| Job::Solo(*b, *p))
        .chain(cfg.pair_params.iter().map(|(b, p)| Job::Pair(*b, *p)))
        .collect();

    let produced: Vec<Vec<(ModeIndex, Vec<[f64; 2]>)>> = jobs
        .par_iter()
        .map(|job| -> Result<_> {
            match job {
                Job::Solo(bin, p) => {
                    let cm = moments_from_params(p)?;
                    let mean = p.mean.map_or([0.0; 2], |m| [m.x, m.y]);
                    let rows = draw_gaussian::<2>(
                        &mut bin_rng(cfg.seed, *bin),
                        cm.matrix() * 0.5,
                        mean.into(),
                        n,
                    )?;
                    Ok(vec![(*bin, rows)])
                }
                Job::Pair(bin, p) => {
                    let full = expand_xy_to_full_pq_cm(&xy_cm_from_two_mode_params(p, *bin)?)?;
                    let rows = draw_gaussian::<4>(
                        &mut bin_rng(cfg.seed, *bin),
                        full * 0.5,
                        SVector::zeros(),
                        n,
                    )?;
                    let plus = rows.iter().map(|r| [r[0], r[1]]).collect();
                    let minus = rows.iter().map(|r| [r[2], r[3]]).collect();
                    Ok(vec![(*bin, plus), (-*bin, minus)])
                }
            }
        })
        .collect::<Result<_>>()?;

    Ok(FieldEnsemble {
        bins: produced.into_iter().flatten().collect(),
        seed: cfg.seed,
        n_samples: n,
        config_digest: cfg.digest(),
    })
}

/// Running first and second moments of a `D`-vector.
#[derive(Debug, Clone, Copy)]
struct MomentSums<const D: usize> {
    n: f64,
    sum: [f64; D],
    prod: [[f64; D]; D],
}

impl<const D: usize> MomentSums<D> {
    fn zero() -> Self {
        Self { n: 0.0, sum: [0.0; D], prod: [[0.0; D]; D] }
    }

    fn push(&mut self, v: &[f64; D]) {
        self.n += 1.0;
        for i in 0..D {
            self.sum[i] += v[i];
            for j in i..D {
                self.prod[i][j] += v[i] * v[j];
            }
        }
    }

    fn minus(&self, other: &Self) -> Self {
        let mut out = *self;
        out.n -= other.n;
        for i in 0..D {
            out.sum[i] -= other.sum[i];
            for j in i..D {
                out.prod[i][j] -= other.prod[i][j];
            }
        }
        out
    }

    fn plus(&self, other: &Self) -> Self {
        let mut out = *self;
        out.n += other.n;
        for i in 0..D {
            out.sum[i] += other.sum[i];
            for j in i..D {
                out.prod[i][j] += other.prod[i][j];
            }
        }
        out
    }

    /// Sample covariance with mean subtraction.
    fn cov(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        (self.prod[i][j] - self.sum[i] * self.sum[j] / self.n) / (self.n - 1.0)
    }

    /// `2⟨δu_i δu_j⟩`
    fn doubled(&self, i: usize, j: usize) -> f64 {
        2.0 * self.cov(i, j)
    }
}

/// Full-sample value and jackknife standard error of `stat`.
fn jackknife<const D: usize, const P: usize>(
    n: usize,
    row: impl Fn(usize) -> Result<[f64; D]> + Sync,
    stat: impl Fn(&MomentSums<D>) -> Result<[f64; P]>,
) -> Result<([f64; P], [f64; P])> {
    if n < MIN_SAMPLES {
        return Err(Error::InvariantViolation(format!("n_samples >= {MIN_SAMPLES}")));
    }
    let k = JACKKNIFE_BLOCKS;
    let blocks: Vec<MomentSums<D>> = (0..k)
        .into_par_iter()
        .map(|b| {
            let mut s = MomentSums::zero();
            for i in b * n / k..(b + 1) * n / k {
                s.push(&row(i)?);
            }
            Ok(s)
        })
        .collect::<Result<_>>()?;
    let total = blocks.iter().fold(MomentSums::zero(), |acc, b| acc.plus(b));
    let value = stat(&total)?;
    let leave_out: Vec<[f64; P]> = blocks.iter().map(|b| stat(&total.minus(b))).collect::<Result<_>>()?;
    let mut err = [0.0; P];
    for (p, e) in err.iter_mut().enumerate() {
        let mean = leave_out.iter().map(|v| v[p]).sum::<f64>() / k as f64;
        let ss: f64 = leave_out.iter().map(|v| (v[p] - mean).powi(2)).sum();
        *e = ((k as f64 - 1.0) / k as f64 * ss).sqrt();
    }
    Ok((value, err))
}

/// A CM estimate with jackknife standard errors ordered `(m_xx, m_yy, m_xy)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CmEstimate<C> {
    pub cm: C,
    pub std_err: [f64; 3],
}

/// Reconstructed `(a, b, c)` and purity with jackknife standard errors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamEstimate {
    pub params: [f64; 3],
    pub params_std_err: [f64; 3],
    pub purity: f64,
    pub purity_std_err: f64,
}

/// Cross block `N_ij = 2⟨δu¹_i δu²_j⟩`, `u = (q, p)`, with standard errors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossEstimate {
    pub n: Matrix2<f64>,
    pub std_err: Matrix2<f64>,
}

fn pq_cm(s: &MomentSums<2>) -> QuadratureCM {
    QuadratureCM::new(s.doubled(0, 0), s.doubled(1, 1), s.doubled(0, 1), Basis::SpectralPq)
}

pub fn estimate_cm_pq(ens: &FieldEnsemble, bin: ModeIndex) -> Result<CmEstimate<QuadratureCM>> {
    let rows = ens.samples(bin)?;
    let (v, err) = jackknife::<2, 3>(rows.len(), |i| Ok(rows[i]), |s| {
        let m = pq_cm(s);
        Ok([m.m_xx, m.m_yy, m.m_xy])
    })?;
    Ok(CmEstimate { cm: QuadratureCM::new(v[0], v[1], v[2], Basis::SpectralPq), std_err: err })
}

/// Reconstructs single-oscillator `(a, b, c)` from the `(q, p)` CM of `bin`.
pub fn reconstruct_pq(ens: &FieldEnsemble, bin: ModeIndex) -> Result<ParamEstimate> {
    let rows = ens.samples(bin)?;
    let (v, err) = jackknife::<2, 4>(rows.len(), |i| Ok(rows[i]), |s| {
        let m = pq_cm(s);
        let p = params_from_quadrature_cm(&m)?;
        Ok([p.a, p.b, p.c, m.purity()?])
    })?;
    Ok(ParamEstimate {
        params: [v[0], v[1], v[2]],
        params_std_err: [err[0], err[1], err[2]],
        purity: v[3],
        purity_std_err: err[3],
    })
}

type Rows<'a> = &'a [[f64; 2]];

fn pair_rows(ens: &FieldEnsemble, bin: ModeIndex) -> Result<(Rows<'_>, Rows<'_>)> {
    if bin.0 <= 0 {
        return Err(Error::InvariantViolation(format!("pair bin must be positive, got {bin}")));
    }
    Ok((ens.samples(bin)?, ens.samples(-bin)?))
}

/// `√2·(Re x, Im x, Re y, Im y)` of sample `i`, through [`xy_from_pq`].
fn xy_row(plus: &[[f64; 2]], minus: &[[f64; 2]], bin: ModeIndex, i: usize) -> Result<[f64; 4]> {
    let xy = xy_from_pq(
        &SpectralQuadratures::new(plus[i][0], plus[i][1], bin),
        &SpectralQuadratures::new(minus[i][0], minus[i][1], -bin),
    )?;
    Ok([xy.x_re, xy.x_im, xy.y_re, xy.y_im])
}

/// `m_xx = 2⟨|δx|²⟩`, `m_yy = 2⟨|δy|²⟩`, `m_xy = 2 Re⟨δx δy*⟩`; the real part is
/// the average of `⟨δx_Ω δy_{−Ω}⟩` and `⟨δx_{−Ω} δy_Ω⟩`.
fn xy_cm(s: &MomentSums<4>, bin: ModeIndex) -> XYPairCM {
    let m_xx = s.doubled(0, 0) + s.doubled(1, 1);
    let m_yy = s.doubled(2, 2) + s.doubled(3, 3);
    let m_xy = s.doubled(0, 2) + s.doubled(1, 3);
    XYPairCM::new(m_xx, m_yy, m_xy, bin)
}

pub fn estimate_cm_xy(ens: &FieldEnsemble, bin: ModeIndex) -> Result<CmEstimate<XYPairCM>> {
    let (plus, minus) = pair_rows(ens, bin)?;
    let (v, err) = jackknife::<4, 3>(plus.len(), |i| xy_row(plus, minus, bin, i), |s| {
        let m = xy_cm(s, bin);
        Ok([m.m_xx, m.m_yy, m.m_xy])
    })?;
    Ok(CmEstimate { cm: XYPairCM::new(v[0], v[1], v[2], bin), std_err: err })
}

/// Reconstructs pair `(a, b, c)` and the `1/det` purity from the `(x, y)` CM.
pub fn reconstruct_xy(ens: &FieldEnsemble, bin: ModeIndex) -> Result<ParamEstimate> {
    let (plus, minus) = pair_rows(ens, bin)?;
    let (v, err) = jackknife::<4, 4>(plus.len(), |i| xy_row(plus, minus, bin, i), |s| {
        let m = xy_cm(s, bin);
        let p = two_mode_params_from_xy_cm(&m)?;
        Ok([p.a, p.b, p.c, purity_xy(&m)?])
    })?;
    Ok(ParamEstimate {
        params: [v[0], v[1], v[2]],
        params_std_err: [err[0], err[1], err[2]],
        purity: v[3],
        purity_std_err: err[3],
    })
}

pub fn estimate_cross_block(ens: &FieldEnsemble, bin1: ModeIndex, bin2: ModeIndex) -> Result<CrossEstimate> {
    let first = ens.samples(bin1)?;
    let second = ens.samples(bin2)?;
    let (v, err) = jackknife::<4, 4>(
        first.len(),
        |i| Ok([first[i][0], first[i][1], second[i][0], second[i][1]]),
        |s| Ok([s.doubled(0, 2), s.doubled(0, 3), s.doubled(1, 2), s.doubled(1, 3)]),
    )?;
    Ok(CrossEstimate {
        n: Matrix2::new(v[0], v[1], v[2], v[3]),
        std_err: Matrix2::new(err[0], err[1], err[2], err[3]),
    })
}

/// The `(q, p)` CM recovered from photocurrent variances at LO phases
/// `0`, `π/2` and `π/4`.
pub fn estimate_cm_pq_lo_sweep(ens: &FieldEnsemble, bin: ModeIndex) -> Result<QuadratureCM> {
    let rows = ens.samples(bin)?;
    if rows.len() < MIN_SAMPLES {
        return Err(Error::InvariantViolation(format!("n_samples >= {MIN_SAMPLES}")));
    }
    let variance = |theta: f64| {
        let lo = LocalOscillator::at_angle(theta).modulated_at(bin);
        let currents: Vec<f64> = rows
            .iter()
            .map(|[q, p]| photocurrent_resonator(&SpectralQuadratures::new(*q, *p, bin), &lo))
            .collect();
        let n = currents.len() as f64;
        let mean = currents.iter().sum::<f64>() / n;
        currents.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (n - 1.0)
    };
    let m_xx = 2.0 * variance(0.0);
    let m_yy = 2.0 * variance(FRAC_PI_2);
    let m_xy = 2.0 * variance(FRAC_PI_4) - 0.5 * (m_xx + m_yy);
    Ok(QuadratureCM::new(m_xx, m_yy, m_xy, Basis::SpectralPq))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::SQRT_2;

    fn sample(q: f64, p: f64) -> SpectralQuadratures {
        SpectralQuadratures::new(q, p, ModeIndex(1))
    }

    #[test]
    fn resonator_photocurrent_examples() {
        let s = sample(2.0, 5.0);
        assert_eq!(photocurrent_resonator(&s, &LocalOscillator::new(1.0, 0.0).unwrap()), 2.0);
        assert_eq!(photocurrent_resonator(&s, &LocalOscillator::new(0.0, 1.0).unwrap()), 5.0);
        let mixed = LocalOscillator::new(FRAC_1_SQRT_2, FRAC_1_SQRT_2).unwrap();
        assert!((photocurrent_resonator(&s, &mixed) - 7.0 / SQRT_2).abs() < 1e-14);
        assert!(LocalOscillator::new(0.0, 0.0).is_err());
    }

    #[test]
    fn resonator_photocurrent_is_linear() {
        let lo1 = LocalOscillator::new(0.5, -1.25).unwrap();
        let lo2 = LocalOscillator::new(2.0, 0.5).unwrap();
        let (s1, s2) = (sample(1.5, -0.25), sample(-3.0, 0.75));
        let sum = sample(s1.q + s2.q, s1.p + s2.p);
        assert_eq!(
            photocurrent_resonator(&sum, &lo1),
            photocurrent_resonator(&s1, &lo1) + photocurrent_resonator(&s2, &lo1)
        );
        let lo_sum = LocalOscillator::new(lo1.q_lo + lo2.q_lo, lo1.p_lo + lo2.p_lo).unwrap();
        assert_eq!(
            photocurrent_resonator(&s1, &lo_sum),
            photocurrent_resonator(&s1, &lo1) + photocurrent_resonator(&s1, &lo2)
        );
    }

    #[test]
    fn broadband_photocurrent_examples() {
        let x_only = XYPairQuadratures { x_re: 1.0, x_im: 2.0, ..Default::default() };
        let lo_q = LocalOscillator::new(1.0, 0.0).unwrap();
        assert_eq!(photocurrent_broadband(&x_only, &lo_q), Complex64::new(1.0, 2.0));
        let y_only = XYPairQuadratures { y_re: 3.0, y_im: -1.0, ..Default::default() };
        let lo_p = LocalOscillator::new(0.0, 1.0).unwrap();
        assert_eq!(photocurrent_broadband(&y_only, &lo_p), Complex64::new(3.0, -1.0));

        // i_{−Ω} built from the conjugate members equals conj(i_Ω)
        let pair = XYPairQuadratures { x_re: 0.4, x_im: -1.3, y_re: 2.2, y_im: 0.9 };
        let lo = LocalOscillator::new(0.6, 0.8).unwrap();
        let minus = pair.x_minus() * lo.q_lo + pair.y_minus() * lo.p_lo;
        assert_eq!(minus, photocurrent_broadband(&pair, &lo).conj());
    }

    #[test]
    fn config_validation() {
        let vac = GaussianParams::vacuum();
        assert!(SpectrumConfig::new(1, 50).with_solo(0, vac).validate().is_err());
        assert!(SpectrumConfig::new(1, 1000).validate().is_err());
        let clash = SpectrumConfig::new(1, 1000)
            .with_pair(3, TwoModeGaussianParams::vacuum())
            .with_solo(-3, vac);
        assert!(matches!(clash.validate(), Err(Error::ConfigInvalid(m)) if m.contains("solo_params[-3]")));
        let negative_pair = SpectrumConfig::new(1, 1000).with_pair(-2, TwoModeGaussianParams::vacuum());
        assert!(negative_pair.validate().is_err());
        let degenerate = SpectrumConfig::new(1, 1000).with_solo(4, GaussianParams::raw(1.0, 1.0, 1.0));
        assert!(degenerate.validate().is_err());
    }

    #[test]
    fn config_json_round_trip() {
        let cfg = SpectrumConfig::new(42, 1000)
            .with_pair(3, TwoModeGaussianParams::raw(0.8, 0.8, 0.0))
            .with_solo(0, GaussianParams::vacuum());
        let text = serde_json::to_string(&cfg).unwrap();
        assert!(text.contains("\"3\""));
        let back: SpectrumConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.digest(), cfg.digest());
    }

    #[test]
    fn ensemble_layout_and_absent_bins() {
        let cfg = SpectrumConfig::new(7, 200)
            .with_pair(2, TwoModeGaussianParams::vacuum())
            .with_solo(5, GaussianParams::vacuum());
        let ens = sample_ensemble(&cfg).unwrap();
        assert_eq!(ens.bins().collect::<Vec<_>>(), vec![ModeIndex(-2), ModeIndex(2), ModeIndex(5)]);
        assert!(ens.bins().all(|b| ens.samples(b).unwrap().len() == 200));
        assert_eq!(estimate_cm_pq(&ens, ModeIndex(9)).unwrap_err(), Error::BinAbsent(ModeIndex(9)));
        assert!(estimate_cm_xy(&ens, ModeIndex(5)).is_err());
        assert!(estimate_cm_xy(&ens, ModeIndex(-2)).is_err());

        let mut table = Vec::new();
        ens.write_table(&mut table).unwrap();
        let text = String::from_utf8(table).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("bin,sample_index,q,p"));
        assert_eq!(lines.count(), 600);
    }

    #[test]
    fn jackknife_matches_textbook_error_of_mean_variance() {
        // For iid N(0, 1/2) samples, 2·var has standard error ≈ 2·(1/2)·√(2/n).
        let cfg = SpectrumConfig::new(11, 100_000).with_solo(0, GaussianParams::vacuum());
        let ens = sample_ensemble(&cfg).unwrap();
        let est = estimate_cm_pq(&ens, ModeIndex(0)).unwrap();
        let textbook = (2.0 / 100_000f64).sqrt();
        assert!((est.std_err[0] / textbook - 1.0).abs() < 0.2, "{:?}", est.std_err);
    }
}
