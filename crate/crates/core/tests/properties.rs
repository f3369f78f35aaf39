use confinv_core::energy::{det_g, newton_expansion_residuals, pab_density, quartic_traceless_residual};
use confinv_core::expr::parse_expression;
use confinv_core::geometry::PointFrame;
use confinv_core::jet::Jet;
use confinv_core::tensor::{enumerate_terms, parse_sum, parse_term, ContractionSum};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn symmetric(n: usize) -> impl Strategy<Value = DMatrix<f64>> {
    prop::collection::vec(-2.0..2.0f64, n * n).prop_map(move |v| {
        let a = DMatrix::from_vec(n, n, v);
        (&a + a.transpose()) * 0.5
    })
}

fn spd(n: usize) -> impl Strategy<Value = DMatrix<f64>> {
    prop::collection::vec(-1.0..1.0f64, n * n).prop_map(move |v| {
        let a = DMatrix::from_vec(n, n, v);
        &a * a.transpose() + DMatrix::identity(n, n) * 0.2
    })
}

fn frobenius4(a: &DMatrix<f64>) -> f64 {
    (a * a).trace().powi(2)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn traceless_quartic_identity(a in symmetric(4)) {
        let ho = &a - DMatrix::identity(4, 4) * (a.trace() / 4.0);
        let r = quartic_traceless_residual(&ho).unwrap();
        prop_assert!(r.abs() < 1e-10 * (1.0 + frobenius4(&ho)));
    }

    #[test]
    fn newton_expansions(h in symmetric(4), g in spd(4)) {
        let gi = g.clone().try_inverse().unwrap();
        let scale = 1.0 + frobenius4(&(&gi * &h));
        let (r1, r2, r3) = newton_expansion_residuals(&h, &g).unwrap();
        prop_assert!(r1.abs() < 1e-10 * scale, "{r1}");
        prop_assert!(r2.abs() < 1e-10 * scale, "{r2}");
        prop_assert!(r3.abs() < 1e-10 * scale, "{r3}");
    }

    #[test]
    fn surface_det_difference_is_mean_square(h in symmetric(2), g in spd(2)) {
        let fr = PointFrame::synthetic(g, vec![h]).unwrap();
        let d = det_g(&fr.h[0], &fr.g_inv) - det_g(&fr.traceless[0], &fr.g_inv);
        prop_assert!((d - fr.mean_sq()).abs() < 1e-10 * (1.0 + fr.mean_sq()));
    }

    #[test]
    fn pab_young_bound(h in symmetric(4), g in spd(4), ab in prop::sample::select(vec![(2.0, 6.0), (1.0, 9.0), (4.0, 0.1)])) {
        let fr = PointFrame::synthetic(g, vec![h]).unwrap();
        let (alpha, beta): (f64, f64) = ab;
        let bound = (1.0 - (3.0 * alpha + beta) / 12.0) * fr.mean[0].powi(4);
        prop_assert!(pab_density(&fr, alpha, beta) >= bound - 1e-10 * (1.0 + fr.mean[0].powi(4)));
    }

    #[test]
    fn weight_is_homogeneity(t in 0.2..5.0f64, h in symmetric(3), g in spd(3)) {
        let fr = PointFrame::synthetic(g, vec![h]).unwrap();
        for sum in [ContractionSum::gauss_curvature(), ContractionSum::traceless_sq(1), ContractionSum::conformal_willmore(1)] {
            let w = sum.weight().unwrap().unwrap();
            let a = confinv_core::tensor::evaluate_sum(&sum, &fr).unwrap();
            let b = confinv_core::tensor::evaluate_sum(&sum, &fr.rescaled(t)).unwrap();
            prop_assert!((b - t.powi(w) * a).abs() < 1e-9 * (1.0 + a.abs()) * t.powi(w).max(1.0));
        }
    }

    #[test]
    fn jets_match_closed_form_derivatives(x in -1.0..1.0f64, y in 0.1..2.0f64) {
        let e = parse_expression("sin(u1) * exp(u2) + u1^3 / u2").unwrap();
        let p = Jet::seed(&[x, y], 2);
        let v = e.eval(&p);
        let dx = x.cos() * y.exp() + 3.0 * x * x / y;
        let dyy = x.sin() * y.exp() + 2.0 * x.powi(3) / y.powi(3);
        prop_assert!((v.value() - (x.sin() * y.exp() + x.powi(3) / y)).abs() < 1e-12);
        prop_assert!((v.coeff(&[1, 0]) - dx).abs() < 1e-11);
        prop_assert!((2.0 * v.coeff(&[0, 2]) - dyy).abs() < 1e-10);
    }
}

#[test]
fn enumerated_terms_round_trip_through_text() {
    for codim in [1, 2] {
        for t in enumerate_terms(-2, 2, codim).unwrap() {
            let back = parse_term(&t.to_string()).unwrap();
            assert_eq!(back.canonical(), t);
        }
    }
    let s = parse_sum("g-1(a,b) g-1(c,d) ho(a,c) ho(b,d) + 2 g-1(a,c) g-1(b,d) R(a,b,c,d)").unwrap();
    assert_eq!(parse_sum(&s.to_string()).unwrap(), s);
}
