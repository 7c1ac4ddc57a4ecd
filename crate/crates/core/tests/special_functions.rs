use approx::assert_relative_eq;
use fso_geoloss::experiments::{erf_series_oracle, i0_scaled_series_oracle, log_grid};
use fso_geoloss::numerics::{bessel_i0, bessel_i0_scaled, erf, erfc};
use proptest::prelude::*;

#[test]
fn erf_against_series_on_log_grid() {
    for x in log_grid(1e-6, 6.0, 400) {
        let oracle = erf_series_oracle(x);
        assert_relative_eq!(erf(x), oracle, max_relative = 1e-12);
        assert_relative_eq!(erf(-x), -oracle, max_relative = 1e-12);
    }
    assert_eq!(erf(0.0), 0.0);
    assert_relative_eq!(erf(0.5), 0.520_499_877_8, max_relative = 1e-10);
}

#[test]
fn erfc_tail() {
    // erfc(5) = 1.5374597944280349e-12, erfc(10) = 2.0884875837625446e-45
    assert_relative_eq!(erfc(5.0), 1.537_459_794_428_035e-12, max_relative = 1e-12);
    assert_relative_eq!(erfc(10.0), 2.088_487_583_762_545e-45, max_relative = 1e-12);
}

#[test]
fn bessel_against_series_on_log_grid() {
    for x in log_grid(1e-6, 700.0, 400) {
        let oracle = i0_scaled_series_oracle(x);
        assert_relative_eq!(bessel_i0_scaled(x), oracle, max_relative = 1e-10);
        assert_relative_eq!(bessel_i0_scaled(-x), oracle, max_relative = 1e-10);
    }
    assert_eq!(bessel_i0(0.0).unwrap(), 1.0);
    assert_relative_eq!(bessel_i0(1.0).unwrap(), 1.266_065_877_8, max_relative = 1e-10);
    assert!(bessel_i0(700.0).unwrap().is_finite());
    assert!(bessel_i0(800.0).is_err());
}

proptest! {
    #[test]
    fn erf_odd_and_bounded(x in -10.0f64..10.0) {
        let e = erf(x);
        prop_assert_eq!(erf(-x), -e);
        prop_assert!(e.abs() <= 1.0);
        prop_assert!((erf(x) + erfc(x) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn i0_even_and_at_least_one(x in -700.0f64..700.0) {
        let v = bessel_i0(x).unwrap();
        prop_assert_eq!(v, bessel_i0(-x).unwrap());
        prop_assert!(v >= 1.0);
    }
}
