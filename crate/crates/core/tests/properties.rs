use num_complex::Complex64;
use proptest::prelude::*;

use weylap::ap_certifier::{class_quantity, ClassSpec};
use weylap::function_model::{gallery_chi_half, Domain, FunctionHandle};
use weylap::harmonic::TrigPolynomial;
use weylap::quadrature::{Cube, QuadratureConfig};
use weylap::vexp_lebesgue::{luxemburg_norm, ExponentField, NORM_TOL};
use weylap::weyl_metrics::{stepanov_distance, weyl_distance, LSchedule};

fn trig(a: f64, b: f64, la: f64, lb: f64) -> FunctionHandle {
    TrigPolynomial::scalar(vec![(vec![la], Complex64::new(a, 0.0)), (vec![lb], Complex64::new(0.0, b))])
        .unwrap()
        .to_handle("trig")
}

fn norm(f: &FunctionHandle, p: f64, cube: &Cube) -> f64 {
    luxemburg_norm(f, 0, &ExponentField::constant(p).unwrap(), cube, &QuadratureConfig::default(), NORM_TOL).unwrap().value
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn norm_is_homogeneous(a in 0.1f64..2.0, b in 0.1f64..2.0, c in -3.0f64..3.0, p in 1.0f64..4.0, lo in -5.0f64..5.0) {
        let f = trig(a, b, 1.0, 2.3);
        let cube = Cube::new(vec![lo], vec![1.5]).unwrap();
        let lhs = norm(&f.scaled(Complex64::new(c, 0.0)), p, &cube);
        let rhs = c.abs() * norm(&f, p, &cube);
        prop_assert!((lhs - rhs).abs() <= 1e-8 * rhs.max(1.0));
    }

    #[test]
    fn norm_obeys_minkowski(a in 0.1f64..2.0, b in 0.1f64..2.0, p in 1.0f64..4.0, lo in -5.0f64..5.0) {
        let f = trig(a, b, 1.0, 2.3);
        let g = gallery_chi_half();
        let cube = Cube::new(vec![lo], vec![2.0]).unwrap();
        let sum = norm(&f.add(&g).unwrap(), p, &cube);
        prop_assert!(sum <= norm(&f, p, &cube) + norm(&g, p, &cube) + 1e-9);
    }

    #[test]
    fn stepanov_distance_is_symmetric(a in 0.1f64..2.0, b in 0.1f64..2.0, l in 0.5f64..4.0, p in 1.0f64..3.0) {
        let f = trig(a, b, 0.7, 1.9);
        let g = gallery_chi_half();
        let d = Domain::euclidean(1, vec![], -3.0, 3.0, 1.0).unwrap();
        let q = QuadratureConfig::default();
        let x = stepanov_distance(&f, &g, p, l, &d, &[0], &q).unwrap();
        let y = stepanov_distance(&g, &f, p, l, &d, &[0], &q).unwrap();
        prop_assert!((x - y).abs() <= 1e-12 * x.max(1.0));
    }

    #[test]
    fn exact_periods_have_null_quantity(k in 1i32..5, l in 0.5f64..6.0, t in -20.0f64..20.0, sigma in 0.0f64..2.0) {
        let f = trig(1.0, 0.5, 1.0, 2.0);
        let d = Domain::euclidean(1, vec![], -1.0, 1.0, 1.0).unwrap();
        let spec = ClassSpec::paren_power(2.0, sigma, false, d).unwrap();
        let v = class_quantity(&f, &spec, &[2.0 * std::f64::consts::PI * k as f64], l, &[t], 0, &QuadratureConfig::default()).unwrap();
        prop_assert!(v < 1e-9, "{}", v);
    }
}

#[test]
fn weyl_distance_of_distinct_frequencies() {
    // Mean of |e^{it} − e^{i√2 t}|² is 2, so the p = 2 Weyl distance is √2.
    let f = TrigPolynomial::scalar(vec![(vec![1.0], Complex64::new(1.0, 0.0))]).unwrap().to_handle("e1");
    let g = TrigPolynomial::scalar(vec![(vec![2f64.sqrt()], Complex64::new(1.0, 0.0))]).unwrap().to_handle("e2");
    let d = Domain::euclidean(1, vec![], -20.0, 20.0, 5.0).unwrap();
    let s = LSchedule::geometric(16.0, 4.0, 3, 2, 0.05).unwrap();
    let w = weyl_distance(&f, &g, 2.0, &s, &d, &[0], &QuadratureConfig::default()).unwrap();
    assert!((w.value - 2f64.sqrt()).abs() < 0.05, "{}", w.value);
}
