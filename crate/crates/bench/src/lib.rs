//! Fixtures shared by the benchmarks.

use cvpurity_core::homodyne::SpectrumConfig;
use cvpurity_core::{GaussianParams, TwoModeGaussianParams};

/// A squeezed, correlated single-mode state with purity 0.8.
pub fn squeezed_single() -> GaussianParams {
    GaussianParams::raw(2.0, 0.5, 0.6)
}

/// The `(0.8, 0.8, 0)` pair state, purity 0.64.
pub fn thermal_pair() -> TwoModeGaussianParams {
    TwoModeGaussianParams::raw(0.8, 0.8, 0.0)
}

/// One correlated pair and two independent bins.
pub fn mixed_spectrum(n_samples: usize) -> SpectrumConfig {
    SpectrumConfig::new(42, n_samples)
        .with_pair(3, thermal_pair())
        .with_solo(1, squeezed_single())
        .with_solo(5, GaussianParams::vacuum())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_are_valid() {
        assert!((squeezed_single().discriminant().unwrap() - 0.64).abs() < 1e-12);
        mixed_spectrum(1_000).validate().unwrap();
    }
}
