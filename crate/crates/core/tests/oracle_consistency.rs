//! The grid and Monte Carlo oracles against each other and against known values.

use cvpurity_core::oracle::*;
use cvpurity_core::*;
use proptest::prelude::*;

#[test]
fn thermal_states_integrate_to_inverse_occupation() {
    for n_bar in [0.0, 0.5, 1.0, 3.0] {
        let p = GaussianParams::thermal(n_bar).unwrap();
        let r = purity_integral_single(&p, &GridSpec::single_mode()).unwrap();
        assert!((r.purity - 1.0 / (2.0 * n_bar + 1.0)).abs() < 1e-9, "n̄ = {n_bar}: {}", r.purity);
    }
}

#[test]
fn monte_carlo_agrees_with_the_grid() {
    for (a, b, c) in [(1.0, 1.0, 0.0), (0.6, 1.1, 0.3), (0.3, 0.4, -0.2)] {
        let p = GaussianParams::new(a, b, c).unwrap();
        let grid = purity_integral_single(&p, &GridSpec::single_mode()).unwrap();
        let mc = purity_integral_single(&p, &GridSpec::single_mode().monte_carlo(400_000, 17)).unwrap();
        let se = mc.std_err.unwrap();
        assert!((grid.purity - mc.purity).abs() < 3.0 * se, "single {a},{b},{c}: {} vs {} ± {se}", grid.purity, mc.purity);

        let pair = TwoModeGaussianParams::new(a, b, c).unwrap();
        let grid = purity_integral_two_mode(&pair, &GridSpec::two_mode().with_points(41)).unwrap();
        let mc = purity_integral_two_mode(&pair, &GridSpec::two_mode().monte_carlo(400_000, 23)).unwrap();
        let se = mc.std_err.unwrap();
        assert!((grid.purity - mc.purity).abs() < 3.0 * se, "pair {a},{b},{c}: {} vs {} ± {se}", grid.purity, mc.purity);
    }
}

#[test]
fn seeded_monte_carlo_is_repeatable() {
    let p = TwoModeGaussianParams::new(0.8, 0.8, 0.0).unwrap();
    let g = GridSpec::two_mode().monte_carlo(50_000, 5);
    assert_eq!(purity_integral_two_mode(&p, &g).unwrap(), purity_integral_two_mode(&p, &g).unwrap());
}

#[test]
fn budget_is_enforced_before_any_work() {
    let p = TwoModeGaussianParams::vacuum();
    let g = GridSpec { point_budget: 1_000, ..GridSpec::two_mode() };
    assert!(matches!(purity_integral_two_mode(&p, &g), Err(Error::BudgetExceeded { needed, .. }) if needed == 81u128.pow(4)));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn single_mode_wigner_is_normalized(a in 0.2f64..5.0, b in 0.2f64..5.0, rho in -0.9f64..0.9) {
        let p = GaussianParams::new(a, b, rho * (a * b).sqrt()).unwrap();
        let norm = normalization_integral_single(&p, &GridSpec::single_mode()).unwrap();
        prop_assert!((norm - 1.0).abs() < 1e-9, "{}", norm);
    }

    #[test]
    fn pair_wigner_is_normalized(a in 0.3f64..3.0, b in 0.3f64..3.0, rho in -0.9f64..0.9) {
        let p = TwoModeGaussianParams::new(a, b, rho * (a * b).sqrt()).unwrap();
        let norm = normalization_integral_two_mode(&p, &GridSpec::two_mode().with_points(31)).unwrap();
        prop_assert!((norm - 1.0).abs() < 1e-6, "{}", norm);
    }

    #[test]
    fn oracle_reproduces_the_pair_law(a in 0.3f64..3.0, b in 0.3f64..3.0, rho in -0.9f64..0.9) {
        let p = TwoModeGaussianParams::new(a, b, rho * (a * b).sqrt()).unwrap();
        let law = purity_xy(&xy_cm_from_two_mode_params(&p, ModeIndex(1)).unwrap()).unwrap();
        let r = purity_integral_two_mode(&p, &GridSpec::two_mode().with_points(41)).unwrap();
        prop_assert!((r.purity - law).abs() < 1e-3, "{} vs {}", r.purity, law);
    }
}
