//! Willmore-type energies, topological integrands and pointwise identities.

mod algebra;
mod constant;

pub use algebra::{
    det_g, newton_expansion_residuals, pfaffian4, quartic_traceless_residual, sphere_area, traceless_traces,
    TracelessTraces,
};
pub use constant::{certify_c, estimate_c, CEstimate, CERTIFY_S};

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{AmbientMetric, Immersion, PointFrame};
use crate::quadrature::{build_grid, integrate, Integral, MIN_RESOLUTION};

/// Lower-order term `Z(h°)` in `ℱ = ∫ det_g h + Z(h°)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "z", rename_all = "snake_case")]
pub enum ZSpec {
    /// The `P_{αβ}` correction (m = 4 only).
    PabForm { alpha: f64, beta: f64 },
    /// `C ‖h°‖^m`.
    CNorm { c: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EnergySpec {
    Willmore,
    ConformalWillmore,
    GaussCurvatureTotal,
    NormalEulerTotal,
    #[serde(rename = "det_h_total")]
    DetHTotal,
    P4,
    Pab { alpha: f64, beta: f64 },
    F(ZSpec),
}

impl EnergySpec {
    pub fn name(&self) -> String {
        match self {
            EnergySpec::Willmore => "willmore".into(),
            EnergySpec::ConformalWillmore => "conformal_willmore".into(),
            EnergySpec::GaussCurvatureTotal => "gauss_curvature_total".into(),
            EnergySpec::NormalEulerTotal => "normal_euler_total".into(),
            EnergySpec::DetHTotal => "det_h_total".into(),
            EnergySpec::P4 => "p4".into(),
            EnergySpec::Pab { alpha, beta } => format!("pab({alpha},{beta})"),
            EnergySpec::F(ZSpec::PabForm { alpha, beta }) => format!("f(pab_form,{alpha},{beta})"),
            EnergySpec::F(ZSpec::CNorm { c }) => format!("f(c_norm,{c})"),
        }
    }

    /// Checks parameters and dimensions before integrating.
    pub fn validate(&self, m: usize, codim: usize) -> Result<()> {
        let need = |ok: bool, what: &str| {
            if ok {
                Ok(())
            } else {
                Err(Error::Dimension(format!("{} needs {what}; got m = {m}, codim = {codim}", self.name())))
            }
        };
        let positive = |alpha: f64, beta: f64| {
            if alpha > 0.0 && beta > 0.0 && alpha.is_finite() && beta.is_finite() {
                Ok(())
            } else {
                Err(Error::Invalid(format!("α and β must be positive, got α = {alpha}, β = {beta}")))
            }
        };
        match *self {
            EnergySpec::Willmore | EnergySpec::ConformalWillmore | EnergySpec::GaussCurvatureTotal => {
                need(m == 2, "a surface")
            }
            EnergySpec::NormalEulerTotal => need(m == 2 && codim == 2, "a surface of codimension 2"),
            EnergySpec::DetHTotal => need(m.is_multiple_of(2) && codim == 1, "an even-dimensional hypersurface"),
            EnergySpec::P4 => need(m == 4 && codim == 1, "a 4-dimensional hypersurface"),
            EnergySpec::Pab { alpha, beta } | EnergySpec::F(ZSpec::PabForm { alpha, beta }) => {
                need(m == 4 && codim == 1, "a 4-dimensional hypersurface")?;
                positive(alpha, beta)
            }
            EnergySpec::F(ZSpec::CNorm { c }) => {
                need(m.is_multiple_of(2) && codim == 1, "an even-dimensional hypersurface")?;
                if c >= 0.0 && c.is_finite() {
                    Ok(())
                } else {
                    Err(Error::Invalid(format!("C must be nonnegative, got {c}")))
                }
            }
        }
    }

    /// Integrand at one frame, against `dμ_g`.
    pub fn integrand(&self, fr: &PointFrame) -> Result<f64> {
        self.validate(fr.m, fr.codim)?;
        Ok(match *self {
            EnergySpec::Willmore => fr.mean_sq() + fr.ambient_sectional(),
            EnergySpec::ConformalWillmore => 0.5 * fr.traceless_sq() + fr.gauss_curvature(),
            EnergySpec::GaussCurvatureTotal => fr.gauss_curvature(),
            EnergySpec::NormalEulerTotal => fr.normal_curvature_scalar(),
            EnergySpec::DetHTotal => det_g(&fr.h[0], &fr.g_inv),
            EnergySpec::P4 => p4_density(fr),
            EnergySpec::Pab { alpha, beta } | EnergySpec::F(ZSpec::PabForm { alpha, beta }) => {
                pab_density(fr, alpha, beta)
            }
            EnergySpec::F(ZSpec::CNorm { c }) => {
                det_g(&fr.h[0], &fr.g_inv) + c * fr.traceless_sq().powf(fr.m as f64 / 2.0)
            }
        })
    }

    /// Integral with a Richardson-style error estimate.
    pub fn evaluate(&self, f: &Immersion, amb: &AmbientMetric, resolution: &[usize]) -> Result<EnergyReport> {
        self.validate(f.m(), f.codim())?;
        let (fine, err, res) = integrate_estimated(f, amb, resolution, |fr| self.integrand(fr))?;
        Ok(EnergyReport {
            energy: self.name(),
            surface: f.label().to_string(),
            value: fine.value,
            resolution: res,
            estimated_quadrature_error: err,
            pointwise_min_integrand: fine.min_integrand,
            area: fine.area,
        })
    }
}

impl fmt::Display for EnergySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyReport {
    pub energy: String,
    pub surface: String,
    pub value: f64,
    pub resolution: Vec<usize>,
    /// `|I(N) − I(N/2)|`.
    pub estimated_quadrature_error: f64,
    pub pointwise_min_integrand: f64,
    pub area: f64,
}

/// Expands a resolution list: one entry is broadcast to every coordinate.
pub fn expand_resolution(m: usize, resolution: &[usize]) -> Result<Vec<usize>> {
    match resolution.len() {
        1 => Ok(vec![resolution[0]; m]),
        k if k == m => Ok(resolution.to_vec()),
        k => Err(Error::Dimension(format!("{k} resolutions given for a {m}-dimensional chart"))),
    }
}

fn integrate_estimated<F>(
    f: &Immersion,
    amb: &AmbientMetric,
    resolution: &[usize],
    integrand: F,
) -> Result<(Integral, f64, Vec<usize>)>
where
    F: Fn(&PointFrame) -> Result<f64> + Sync,
{
    let res = expand_resolution(f.m(), resolution)?;
    let fine = integrate(f, amb, &build_grid(f.domain(), &res)?, &integrand)?;
    let coarse_res: Vec<usize> = res.iter().map(|&n| (n / 2).max(MIN_RESOLUTION)).collect();
    let err = if coarse_res != res {
        let coarse = integrate(f, amb, &build_grid(f.domain(), &coarse_res)?, &integrand)?;
        (fine.value - coarse.value).abs()
    } else {
        0.0
    };
    Ok((fine, err, res))
}

/// `det_g(h) − det_g(h°)`.
pub fn p4_density(fr: &PointFrame) -> f64 {
    det_g(&fr.h[0], &fr.g_inv) - det_g(&fr.traceless[0], &fr.g_inv)
}

/// `P_{αβ}` with `[Tr h°³]^{4/3}` read as `|Tr h°³|^{4/3}`.
pub fn pab_density(fr: &PointFrame, alpha: f64, beta: f64) -> f64 {
    let t = traceless_traces(&fr.traceless[0], &fr.g_inv);
    det_g(&fr.h[0], &fr.g_inv) + pab_correction(&t, alpha, beta)
}

/// `¼Tr h°⁴ + (1/(4α) − 1/8)|h°|⁴ + |Tr h°³|^{4/3} / (4β^{1/3})`.
pub fn pab_correction(t: &TracelessTraces, alpha: f64, beta: f64) -> f64 {
    0.25 * t.tr4 + (0.25 / alpha - 0.125) * t.sq * t.sq + t.tr3.abs().powf(4.0 / 3.0) / (4.0 * beta.cbrt())
}

fn report(spec: EnergySpec, f: &Immersion, amb: &AmbientMetric, resolution: &[usize]) -> Result<EnergyReport> {
    spec.evaluate(f, amb, resolution)
}

/// `∫ (|H|² + K̄) dμ` with `H = ½ tr_g h`.
pub fn willmore(f: &Immersion, amb: &AmbientMetric, resolution: &[usize]) -> Result<EnergyReport> {
    report(EnergySpec::Willmore, f, amb, resolution)
}

/// `∫ (½|h°|² + K) dμ`.
pub fn conformal_willmore(f: &Immersion, amb: &AmbientMetric, resolution: &[usize]) -> Result<EnergyReport> {
    report(EnergySpec::ConformalWillmore, f, amb, resolution)
}

/// `(1/2π) ∫ K dμ`.
pub fn euler_from_k(f: &Immersion, amb: &AmbientMetric, resolution: &[usize]) -> Result<f64> {
    Ok(report(EnergySpec::GaussCurvatureTotal, f, amb, resolution)?.value / (2.0 * PI))
}

/// `(1/2π) ∫ K⊥ dμ` in flat space.
pub fn normal_euler_from_kperp(f: &Immersion, resolution: &[usize]) -> Result<f64> {
    let amb = AmbientMetric::flat(f.n());
    Ok(report(EnergySpec::NormalEulerTotal, f, &amb, resolution)?.value / (2.0 * PI))
}

/// `∫ (det_g h − det_g h°) dμ` for a 4-dimensional hypersurface.
pub fn energy_p4(f: &Immersion, resolution: &[usize]) -> Result<EnergyReport> {
    report(EnergySpec::P4, f, &AmbientMetric::flat(f.n()), resolution)
}

pub fn energy_pab(f: &Immersion, alpha: f64, beta: f64, resolution: &[usize]) -> Result<EnergyReport> {
    report(EnergySpec::Pab { alpha, beta }, f, &AmbientMetric::flat(f.n()), resolution)
}

/// `∫ det_g h + Z(h°) dμ`.
pub fn energy_f(f: &Immersion, z: ZSpec, resolution: &[usize]) -> Result<EnergyReport> {
    if !f.m().is_multiple_of(2) {
        return Err(Error::Dimension(format!("ℱ needs an even dimension, got m = {}", f.m())));
    }
    report(EnergySpec::F(z), f, &AmbientMetric::flat(f.n()), resolution)
}

/// Degree of the Gauss map of an even-dimensional hypersurface, `∫ det_g h dμ / ω_m`.
pub fn gauss_degree(f: &Immersion, resolution: &[usize]) -> Result<f64> {
    let r = report(EnergySpec::DetHTotal, f, &AmbientMetric::flat(f.n()), resolution)?;
    Ok(r.value / sphere_area(f.m()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::surfaces;

    const VOL_S4: f64 = 8.0 * PI * PI / 3.0;

    #[test]
    fn sphere_willmore_is_scale_free() {
        for r in [0.5, 1.0, 2.0] {
            let s = surfaces::sphere(2, r).unwrap();
            let w = willmore(&s, &AmbientMetric::flat(3), &[32]).unwrap();
            assert!((w.value - 4.0 * PI).abs() < 1e-8 * 4.0 * PI, "{r}: {}", w.value);
            assert!(w.estimated_quadrature_error >= 0.0);
        }
    }

    #[test]
    fn stereographic_clifford_willmore() {
        let s = surfaces::stereographic_clifford().unwrap();
        let w = willmore(&s, &AmbientMetric::flat(3), &[48]).unwrap();
        assert!((w.value - 2.0 * PI * PI).abs() < 1e-5, "{}", w.value);
    }

    #[test]
    fn euler_characteristics() {
        let e = surfaces::ellipsoid(&[1.0, 1.5, 0.7]).unwrap();
        assert!((euler_from_k(&e, &AmbientMetric::flat(3), &[48]).unwrap() - 2.0).abs() < 1e-6);
        let t = surfaces::torus(2.0, 1.0).unwrap();
        assert!(euler_from_k(&t, &AmbientMetric::flat(3), &[48]).unwrap().abs() < 1e-8);
        let c = surfaces::clifford_torus(1.0, 0.1).unwrap();
        assert!(normal_euler_from_kperp(&c, &[48]).unwrap().abs() < 1e-6);
    }

    #[test]
    fn four_sphere_energies() {
        let s = surfaces::sphere(4, 1.0).unwrap();
        let p4 = energy_p4(&s, &[16]).unwrap();
        assert!((p4.value - VOL_S4).abs() < 1e-6, "{}", p4.value);
        let pab = energy_pab(&s, 2.0, 6.0, &[16]).unwrap();
        assert!((pab.value - VOL_S4).abs() < 1e-6);
        assert!((gauss_degree(&s, &[16]).unwrap() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn wrong_dimensions_rejected() {
        let s = surfaces::sphere(2, 1.0).unwrap();
        assert!(matches!(energy_p4(&s, &[8]), Err(Error::Dimension(_))));
        let s4 = surfaces::sphere(4, 1.0).unwrap();
        assert!(matches!(willmore(&s4, &AmbientMetric::flat(5), &[8]), Err(Error::Dimension(_))));
        assert!(matches!(energy_pab(&s4, 0.0, 1.0, &[8]), Err(Error::Invalid(_))));
    }

    #[test]
    fn surface_f_with_half_norm_is_willmore() {
        let e = surfaces::ellipsoid(&[1.0, 1.3, 0.8]).unwrap();
        let amb = AmbientMetric::flat(3);
        let w = willmore(&e, &amb, &[40]).unwrap().value;
        let f = energy_f(&e, ZSpec::CNorm { c: 0.5 }, &[40]).unwrap().value;
        assert!((w - f).abs() < 1e-10 * w);
    }

    #[test]
    fn spec_json() {
        let s: EnergySpec = serde_json::from_str(r#"{"kind":"pab","alpha":2,"beta":6}"#).unwrap();
        assert_eq!(s, EnergySpec::Pab { alpha: 2.0, beta: 6.0 });
        let f: EnergySpec = serde_json::from_str(r#"{"kind":"f","z":"c_norm","c":0.5}"#).unwrap();
        assert_eq!(f, EnergySpec::F(ZSpec::CNorm { c: 0.5 }));
        let d: EnergySpec = serde_json::from_str(r#"{"kind":"det_h_total"}"#).unwrap();
        assert_eq!(d, EnergySpec::DetHTotal);
    }
}
