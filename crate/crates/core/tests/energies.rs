use std::f64::consts::PI;

use confinv_core::conformal::{apply_mobius, MobiusMap};
use confinv_core::energy::{self, EnergySpec, ZSpec};
use confinv_core::expr::parse_expression;
use confinv_core::geometry::{surfaces, AmbientMetric};
use confinv_core::quadrature::{integrate, uniform_grid};

#[test]
fn energies_are_scale_invariant() {
    let e2 = surfaces::ellipsoid(&[1.0, 1.3, 0.7]).unwrap();
    let e4 = surfaces::ellipsoid(&[1.0, 1.0, 1.2, 1.0, 1.5]).unwrap();
    let cases = [
        (EnergySpec::Willmore, &e2, 24),
        (EnergySpec::ConformalWillmore, &e2, 24),
        (EnergySpec::GaussCurvatureTotal, &e2, 24),
        (EnergySpec::P4, &e4, 8),
        (EnergySpec::Pab { alpha: 2.0, beta: 6.0 }, &e4, 8),
        (EnergySpec::F(ZSpec::CNorm { c: 0.1875 }), &e4, 8),
        (EnergySpec::DetHTotal, &e4, 8),
    ];
    for (spec, f, n) in cases {
        let amb = AmbientMetric::flat(f.n());
        let base = spec.evaluate(f, &amb, &[n]).unwrap().value;
        for t in [0.5, 3.0] {
            let v = spec.evaluate(&f.scaled(t), &amb, &[n]).unwrap().value;
            assert!((v - base).abs() <= 1e-8 * base.abs().max(1.0), "{spec} t={t}: {v} vs {base}");
        }
    }
}

#[test]
fn euler_characteristic_survives_conformal_ambient() {
    let s = surfaces::sphere(2, 1.0).unwrap();
    let amb = AmbientMetric::conformal(3, parse_expression("0.2*x1*x2 + 0.1*sin(x3)").unwrap()).unwrap();
    assert!((energy::euler_from_k(&s, &amb, &[40]).unwrap() - 2.0).abs() < 1e-8);
}

#[test]
fn willmore_of_inverted_ellipsoid() {
    let f = surfaces::ellipsoid(&[1.0, 1.4, 0.8]).unwrap();
    let amb = AmbientMetric::flat(3);
    let w = energy::willmore(&f, &amb, &[48]).unwrap().value;
    let g = apply_mobius(&f, &MobiusMap::inversion(vec![0.4, 2.1, -0.3], 0.9)).unwrap();
    let wg = energy::willmore(&g, &amb, &[48]).unwrap().value;
    assert!(((w - wg) / w).abs() < 1e-8, "{w} {wg}");
    assert!(w > 4.0 * PI);
}

#[test]
fn richardson_differences_shrink() {
    for f in [surfaces::torus(2.0, 1.0).unwrap(), surfaces::ellipsoid(&[1.0, 1.5, 0.8]).unwrap()] {
        let amb = AmbientMetric::flat(3);
        let at = |n: usize| {
            integrate(&f, &amb, &uniform_grid(f.domain(), n).unwrap(), |fr| Ok(fr.mean_sq())).unwrap().value
        };
        let (a, b, c, d) = (at(8), at(16), at(32), at(64));
        let (e1, e2, e3) = ((a - b).abs(), (b - c).abs(), (c - d).abs());
        assert!(e1 > e2 && e2 >= e3, "{} {e1} {e2} {e3}", f.label());
    }
}

#[test]
fn lower_bound_on_hypersurfaces() {
    let bound = 8.0 * PI * PI / 3.0;
    let e = surfaces::ellipsoid(&[1.0, 1.0, 1.0, 1.0, 1.5]).unwrap();
    for z in [ZSpec::PabForm { alpha: 2.0, beta: 6.0 }, ZSpec::CNorm { c: 0.1875 }] {
        let v = energy::energy_f(&e, z, &[16]).unwrap().value;
        assert!(v > bound + 1e-2, "{z:?}: {v}");
        let s = energy::energy_f(&surfaces::sphere(4, 1.3).unwrap(), z, &[16]).unwrap().value;
        assert!((s - bound).abs() < 1e-6);
    }
}

#[test]
fn pfaffian_matches_det_h_on_hypersurfaces() {
    let e = surfaces::ellipsoid(&[1.0, 1.2, 0.9, 1.0, 1.5]).unwrap();
    let amb = AmbientMetric::flat(5);
    for p in [[0.7, 1.1, 2.0, 0.3], [1.9, 0.4, 1.2, 4.0]] {
        let fr = confinv_core::geometry::frame_at(&e, &amb, &p).unwrap();
        let pf = energy::pfaffian4(&fr.riemann, &fr.g).unwrap();
        let d = energy::det_g(&fr.h[0], &fr.g_inv);
        assert!((pf - d).abs() < 1e-8 * (1.0 + d.abs()), "{pf} {d}");
    }
}
