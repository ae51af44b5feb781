//! Brute-force purity: integrate the squared Wigner function numerically.
//!
//! ```text
//! single oscillator:  P = π ∫ d²α W²        (d²α = dx dy / 2)
//! ±Ω pair:            P = (π²/4) ∫ d⁴ W²    (d⁴ = dRe x dIm x dRe y dIm y)
//! ```
//!
//! Nothing here uses a determinant law; the integrand comes from
//! [`wigner_eval`] / [`two_mode_wigner_eval`] and the results are meant to be
//! compared against the closed forms.
//!
//! Each run is gated by two self-tests that must reproduce purity 1:
//! the vacuum itself, which pins the measure constant, and the *reference
//! vacuum*, the unit-purity state with the target's shape (`(a, b, c)/√(ab−c²)`).
//! The reference sits on a grid with exactly the target's geometry in σ units,
//! so it exposes an under-resolved grid (strong squeezing, near-singular
//! correlation) before the target's result is trusted.

use std::f64::consts::PI;

use nalgebra::{Matrix2, Vector2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gaussian::{wigner_eval, GaussianParams, PhasePoint};
use crate::multimode::{two_mode_wigner_eval, TwoModeGaussianParams, XYPairQuadratures};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    TensorGrid,
    MonteCarlo,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    /// Integration extent per axis, in standard deviations of that axis.
    pub half_width_sigmas: f64,
    /// Midpoint-rule nodes per axis; odd so that the origin is a node.
    pub points_per_axis: usize,
    pub method: Method,
    pub mc_samples: usize,
    /// Largest tensor grid (total nodes) the caller is willing to evaluate.
    pub point_budget: u128,
    /// Allowed deviation of the grid self-tests from 1.
    pub self_test_tolerance: f64,
    pub seed: u64,
    /// Reduce partial sums in a fixed pairwise order.
    pub deterministic: bool,
}

impl GridSpec {
    pub const DEFAULT_BUDGET: u128 = 100_000_000;
    const MC_CHUNK: usize = 100_000;

    /// 8σ, 401 points per axis, gate at 1e-6.
    pub fn single_mode() -> Self {
        Self {
            half_width_sigmas: 8.0,
            points_per_axis: 401,
            method: Method::TensorGrid,
            mc_samples: 10_000_000,
            point_budget: Self::DEFAULT_BUDGET,
            self_test_tolerance: 1e-6,
            seed: 0,
            deterministic: true,
        }
    }

    /// 8σ, 81 points per axis (81⁴ ≈ 4.3·10⁷ nodes), gate at 1e-4.
    pub fn two_mode() -> Self {
        Self { points_per_axis: 81, self_test_tolerance: 1e-4, ..Self::single_mode() }
    }

    pub fn monte_carlo(self, samples: usize, seed: u64) -> Self {
        Self { method: Method::MonteCarlo, mc_samples: samples, seed, ..self }
    }

    pub fn with_points(self, points_per_axis: usize) -> Self {
        Self { points_per_axis, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvariantViolation(m.into()));
        if !(self.half_width_sigmas > 0.0 && self.half_width_sigmas.is_finite()) {
            return bad("half_width_sigmas > 0");
        }
        if self.points_per_axis < 3 || self.points_per_axis.is_multiple_of(2) {
            return bad("points_per_axis odd and >= 3");
        }
        if self.method == Method::MonteCarlo && self.mc_samples < 2 {
            return bad("mc_samples >= 2");
        }
        if !(self.self_test_tolerance > 0.0) {
            return bad("self_test_tolerance > 0");
        }
        Ok(())
    }
}

/// Outcome of one self-test run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelfTest {
    pub purity: f64,
    pub deviation: f64,
    pub tolerance: f64,
}

impl SelfTest {
    fn new(purity: f64, tolerance: f64) -> Self {
        Self { purity, deviation: (purity - 1.0).abs(), tolerance }
    }

    pub fn passed(&self) -> bool {
        self.deviation <= self.tolerance
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleReport {
    pub purity: f64,
    /// Monte Carlo standard error; `None` on a grid.
    pub std_err: Option<f64>,
    pub vacuum: SelfTest,
    /// Reference-vacuum test; grid runs only.
    pub reference: Option<SelfTest>,
    pub evaluations: u128,
    pub method: Method,
}

/// Marginal standard deviations of `exp(−[a u² + b v² − 2c uv])` as a density.
fn marginal_sigmas(a: f64, b: f64, c: f64) -> Result<(f64, f64)> {
    let form = Matrix2::new(a, -c, -c, b) * 2.0;
    let cov = form.try_inverse().ok_or(Error::DegenerateParams { a, b, c })?;
    Ok((cov[(0, 0)].sqrt(), cov[(1, 1)].sqrt()))
}

/// Cholesky factor of the covariance of the same density, for sampling.
fn sampling_factor(a: f64, b: f64, c: f64) -> Result<Matrix2<f64>> {
    let form = Matrix2::new(a, -c, -c, b) * 2.0;
    let cov = form.try_inverse().ok_or(Error::DegenerateParams { a, b, c })?;
    Ok(cov.cholesky().ok_or(Error::DegenerateParams { a, b, c })?.l())
}

fn unit_purity_reference(a: f64, b: f64, c: f64) -> (f64, f64, f64) {
    let scale = (a * b - c * c).sqrt();
    (a / scale, b / scale, c / scale)
}

/// Midpoint nodes on `[−kσ, kσ]` and the cell width.
fn axis_nodes(sigma: f64, g: &GridSpec) -> (Vec<f64>, f64) {
    let n = g.points_per_axis;
    let half = g.half_width_sigmas * sigma;
    let h = 2.0 * half / n as f64;
    ((0..n).map(|i| -half + (i as f64 + 0.5) * h).collect(), h)
}

fn pairwise_sum(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        n => pairwise_sum(&values[..n / 2]) + pairwise_sum(&values[n / 2..]),
    }
}

fn reduce_outer(n: usize, deterministic: bool, inner: impl Fn(usize) -> f64 + Sync + Send) -> f64 {
    if deterministic {
        let partials: Vec<f64> = (0..n).into_par_iter().map(inner).collect();
        pairwise_sum(&partials)
    } else {
        (0..n).into_par_iter().map(inner).sum()
    }
}

fn check_budget(g: &GridSpec, dims: u32) -> Result<u128> {
    let needed = (g.points_per_axis as u128).pow(dims);
    if needed > g.point_budget {
        return Err(Error::BudgetExceeded { needed, budget: g.point_budget });
    }
    Ok(needed)
}

fn single_grid_integral(p: &GaussianParams, g: &GridSpec, power: i32) -> Result<f64> {
    let (sx, sy) = marginal_sigmas(p.a, p.b, p.c)?;
    let (xs, hx) = axis_nodes(sx, g);
    let (ys, hy) = axis_nodes(sy, g);
    let sum = reduce_outer(xs.len(), g.deterministic, |i| {
        ys.iter()
            .map(|&y| wigner_eval(p, PhasePoint::new(xs[i], y)).map_or(f64::NAN, |w| w.powi(power)))
            .sum()
    });
    // d²α = dx dy / 2
    Ok(sum * hx * hy / 2.0)
}

fn single_grid_purity(p: &GaussianParams, g: &GridSpec) -> Result<f64> {
    Ok(PI * single_grid_integral(p, g, 2)?)
}

fn gate(name: &str, test: SelfTest) -> Result<SelfTest> {
    if test.passed() {
        Ok(test)
    } else {
        Err(Error::GridTooCoarse(format!(
            "{name} self-test gave purity {:.12} (deviation {:.3e} > {:.1e})",
            test.purity, test.deviation, test.tolerance
        )))
    }
}

fn mc_mean<F>(g: &GridSpec, draw_and_eval: F) -> (f64, f64)
where
    F: Fn(&mut ChaCha8Rng) -> f64 + Sync,
{
    let chunks = g.mc_samples.div_ceil(GridSpec::MC_CHUNK);
    let partial: Vec<(f64, f64, f64)> = (0..chunks)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(g.seed);
            rng.set_stream(k as u64);
            let count = GridSpec::MC_CHUNK.min(g.mc_samples - k * GridSpec::MC_CHUNK);
            let (mut s, mut s2) = (0.0, 0.0);
            for _ in 0..count {
                let w = draw_and_eval(&mut rng);
                s += w;
                s2 += w * w;
            }
            (count as f64, s, s2)
        })
        .collect();
    let n: f64 = partial.iter().map(|t| t.0).sum();
    let s = pairwise_sum(&partial.iter().map(|t| t.1).collect::<Vec<_>>());
    let s2 = pairwise_sum(&partial.iter().map(|t| t.2).collect::<Vec<_>>());
    let mean = s / n;
    let var = (s2 / n - mean * mean).max(0.0) * n / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// `π E[W]` with samples drawn from `W d²α` itself.
fn single_mc_purity(p: &GaussianParams, g: &GridSpec) -> Result<(f64, f64)> {
    let l = sampling_factor(p.a, p.b, p.c)?;
    let (mean, err) = mc_mean(g, |rng| {
        let z = Vector2::new(StandardNormal.sample(rng), StandardNormal.sample(rng));
        let v = l * z;
        wigner_eval(p, PhasePoint::new(v[0], v[1])).unwrap_or(f64::NAN)
    });
    Ok((PI * mean, PI * err))
}

/// `π ∫ d²α W²` for a single oscillator.
pub fn purity_integral_single(p: &GaussianParams, g: &GridSpec) -> Result<OracleReport> {
    g.validate()?;
    p.discriminant()?;
    match g.method {
        Method::TensorGrid => {
            let evaluations = check_budget(g, 2)?;
            let vacuum = gate(
                "vacuum",
                SelfTest::new(single_grid_purity(&GaussianParams::vacuum(), g)?, g.self_test_tolerance),
            )?;
            let (ra, rb, rc) = unit_purity_reference(p.a, p.b, p.c);
            let reference = gate(
                "reference vacuum",
                SelfTest::new(
                    single_grid_purity(&GaussianParams::raw(ra, rb, rc), g)?,
                    g.self_test_tolerance,
                ),
            )?;
            Ok(OracleReport {
                purity: single_grid_purity(p, g)?,
                std_err: None,
                vacuum,
                reference: Some(reference),
                evaluations: 3 * evaluations,
                method: g.method,
            })
        }
        Method::MonteCarlo => {
            let (vac, vac_err) = single_mc_purity(&GaussianParams::vacuum(), g)?;
            let vacuum = gate("vacuum", SelfTest::new(vac, g.self_test_tolerance.max(5.0 * vac_err)))?;
            let (purity, err) = single_mc_purity(p, g)?;
            Ok(OracleReport {
                purity,
                std_err: Some(err),
                vacuum,
                reference: None,
                evaluations: 2 * g.mc_samples as u128,
                method: g.method,
            })
        }
    }
}

/// `∫ d²α W`, which is 1 for every normalizable state.
pub fn normalization_integral_single(p: &GaussianParams, g: &GridSpec) -> Result<f64> {
    g.validate()?;
    p.discriminant()?;
    check_budget(g, 2)?;
    single_grid_integral(p, g, 1)
}

/// `∫ d⁴ W^power` over `(Re x, Im x, Re y, Im y)`.
fn two_mode_grid_integral(p: &TwoModeGaussianParams, g: &GridSpec, power: i32) -> Result<f64> {
    let (sx, sy) = marginal_sigmas(p.a, p.b, p.c)?;
    let (xs, hx) = axis_nodes(sx, g);
    let (ys, hy) = axis_nodes(sy, g);
    let sum = reduce_outer(xs.len(), g.deterministic, |i| {
        let mut acc = 0.0;
        for &x_im in &xs {
            for &y_re in &ys {
                for &y_im in &ys {
                    let pt = XYPairQuadratures { x_re: xs[i], x_im, y_re, y_im };
                    acc += two_mode_wigner_eval(p, &pt).map_or(f64::NAN, |w| w.powi(power));
                }
            }
        }
        acc
    });
    Ok(sum * (hx * hy).powi(2))
}

fn two_mode_grid_purity(p: &TwoModeGaussianParams, g: &GridSpec) -> Result<f64> {
    Ok(PI * PI / 4.0 * two_mode_grid_integral(p, g, 2)?)
}

/// `π² E[W]` with samples drawn from `W d⁴/4`: `(Re x, Re y)` and
/// `(Im x, Im y)` are independent copies of the same 2-D Gaussian.
fn two_mode_mc_purity(p: &TwoModeGaussianParams, g: &GridSpec) -> Result<(f64, f64)> {
    let l = sampling_factor(p.a, p.b, p.c)?;
    let (mean, err) = mc_mean(g, |rng| {
        let re = l * Vector2::new(StandardNormal.sample(rng), StandardNormal.sample(rng));
        let im = l * Vector2::new(StandardNormal.sample(rng), StandardNormal.sample(rng));
        let pt = XYPairQuadratures { x_re: re[0], x_im: im[0], y_re: re[1], y_im: im[1] };
        two_mode_wigner_eval(p, &pt).unwrap_or(f64::NAN)
    });
    Ok((PI * PI * mean, PI * PI * err))
}

/// `(π²/4) ∫ d⁴ W²` for a `±Ω` pair.
pub fn purity_integral_two_mode(p: &TwoModeGaussianParams, g: &GridSpec) -> Result<OracleReport> {
    g.validate()?;
    p.discriminant()?;
    match g.method {
        Method::TensorGrid => {
            let evaluations = check_budget(g, 4)?;
            let vacuum = gate(
                "vacuum",
                SelfTest::new(two_mode_grid_purity(&TwoModeGaussianParams::vacuum(), g)?, g.self_test_tolerance),
            )?;
            let (ra, rb, rc) = unit_purity_reference(p.a, p.b, p.c);
            let reference = gate(
                "reference vacuum",
                SelfTest::new(
                    two_mode_grid_purity(&TwoModeGaussianParams::raw(ra, rb, rc), g)?,
                    g.self_test_tolerance,
                ),
            )?;
            Ok(OracleReport {
                purity: two_mode_grid_purity(p, g)?,
                std_err: None,
                vacuum,
                reference: Some(reference),
                evaluations: 3 * evaluations,
                method: g.method,
            })
        }
        Method::MonteCarlo => {
            let (vac, vac_err) = two_mode_mc_purity(&TwoModeGaussianParams::vacuum(), g)?;
            let vacuum = gate("vacuum", SelfTest::new(vac, g.self_test_tolerance.max(5.0 * vac_err)))?;
            let (purity, err) = two_mode_mc_purity(p, g)?;
            Ok(OracleReport {
                purity,
                std_err: Some(err),
                vacuum,
                reference: None,
                evaluations: 2 * g.mc_samples as u128,
                method: g.method,
            })
        }
    }
}

/// `∫ d⁴/4 W`, which is 1 for every normalizable pair state.
pub fn normalization_integral_two_mode(p: &TwoModeGaussianParams, g: &GridSpec) -> Result<f64> {
    g.validate()?;
    p.discriminant()?;
    check_budget(g, 4)?;
    Ok(two_mode_grid_integral(p, g, 1)? / 4.0)
}
