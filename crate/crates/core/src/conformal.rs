//! Conformal deformations, Möbius maps, transformation-law checks and the
//! invariance defect `I`.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{parse_expression, Expression, Program, VarFamily};
use crate::geometry::{frame_at, AmbientMetric, Immersion, MetricChart, PointFrame, Tensor4};
use crate::quadrature::{default_resolution, uniform_grid, QuadratureGrid};
use crate::tensor::{evaluate_sum, ContractionSum};

/// Minimum distance between an inversion center and the surface nodes.
pub const CENTER_CLEARANCE: f64 = 1e-6;

/// One primitive conformal map of `R^n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MobiusPrimitive {
    Translation(Vec<f64>),
    /// Orthogonal matrix, given by rows.
    Rotation(Vec<Vec<f64>>),
    Dilation(f64),
    /// `x ↦ c + r² (x − c)/|x − c|²`.
    Inversion { center: Vec<f64>, radius: f64 },
}

/// A composition of primitives, applied first to last.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MobiusMap(pub Vec<MobiusPrimitive>);

fn x(k: usize) -> Expression {
    Expression::variable(VarFamily::Ambient, k)
}

impl MobiusPrimitive {
    fn validate(&self, n: usize) -> Result<()> {
        let bad = |msg: String| Err(Error::Invalid(msg));
        match self {
            MobiusPrimitive::Translation(v) if v.len() != n => bad(format!("translation needs {n} entries")),
            MobiusPrimitive::Rotation(rows) => {
                if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                    return bad(format!("rotation must be {n}×{n}"));
                }
                let q = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
                if (q.transpose() * &q - DMatrix::identity(n, n)).amax() > 1e-10 {
                    return bad("rotation matrix is not orthogonal".into());
                }
                Ok(())
            }
            MobiusPrimitive::Dilation(l) if !(*l > 0.0 && l.is_finite()) => bad(format!("dilation factor {l} must be positive")),
            MobiusPrimitive::Inversion { center, radius } => {
                if center.len() != n {
                    return bad(format!("inversion center needs {n} entries"));
                }
                if !(*radius > 0.0 && radius.is_finite()) {
                    return bad(format!("inversion radius {radius} must be positive"));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// The primitive as a program in `x1..xn`.
    fn program(&self, n: usize) -> Result<Program> {
        let comps: Vec<Expression> = match self {
            MobiusPrimitive::Translation(v) => (0..n).map(|k| x(k).add(&Expression::constant(v[k]))).collect(),
            MobiusPrimitive::Rotation(rows) => (0..n)
                .map(|i| {
                    (0..n)
                        .filter(|&j| rows[i][j] != 0.0)
                        .fold(Expression::constant(0.0), |acc, j| acc.add(&x(j).scaled(rows[i][j])))
                })
                .collect(),
            MobiusPrimitive::Dilation(l) => (0..n).map(|k| x(k).scaled(*l)).collect(),
            MobiusPrimitive::Inversion { center, radius } => {
                let d: Vec<Expression> = (0..n).map(|k| x(k).sub(&Expression::constant(center[k]))).collect();
                let r2 = d.iter().fold(Expression::constant(0.0), |acc, dk| acc.add(&dk.mul(dk)));
                let s = Expression::constant(radius * radius).div(&r2);
                (0..n).map(|k| Expression::constant(center[k]).add(&d[k].mul(&s))).collect()
            }
        };
        let comps: Vec<Expression> = comps.into_iter().map(|e| e.with_family(VarFamily::Ambient)).collect();
        Program::from_expressions(&comps, n)
    }

    fn apply_point(&self, p: &[f64]) -> Vec<f64> {
        match self {
            MobiusPrimitive::Translation(v) => p.iter().zip(v).map(|(a, b)| a + b).collect(),
            MobiusPrimitive::Rotation(rows) => rows.iter().map(|r| r.iter().zip(p).map(|(a, b)| a * b).sum()).collect(),
            MobiusPrimitive::Dilation(l) => p.iter().map(|a| a * l).collect(),
            MobiusPrimitive::Inversion { center, radius } => {
                let d2: f64 = p.iter().zip(center).map(|(a, c)| (a - c) * (a - c)).sum();
                p.iter().zip(center).map(|(a, c)| c + radius * radius * (a - c) / d2).collect()
            }
        }
    }
}

impl MobiusMap {
    pub fn inversion(center: Vec<f64>, radius: f64) -> MobiusMap {
        MobiusMap(vec![MobiusPrimitive::Inversion { center, radius }])
    }

    /// Image of an ambient point.
    pub fn apply_point(&self, p: &[f64]) -> Vec<f64> {
        self.0.iter().fold(p.to_vec(), |q, t| t.apply_point(&q))
    }

    /// The whole map as one program in `x1..xn`.
    pub fn program(&self, n: usize) -> Result<Program> {
        let identity: Vec<Expression> = (0..n).map(x).collect();
        let mut map = Program::from_expressions(&identity, n)?;
        for t in &self.0 {
            t.validate(n)?;
            map = t.program(n)?.compose(&map)?;
        }
        Ok(map)
    }
}

/// `T ∘ f`, checking inversion centers against the grid nodes.
pub fn apply_mobius_on(f: &Immersion, t: &MobiusMap, grid: &QuadratureGrid) -> Result<Immersion> {
    let n = f.n();
    let map = t.program(n)?;
    let mut points: Vec<Vec<f64>> = grid.nodes.iter().map(|p| f.position(p)).collect();
    for prim in &t.0 {
        if let MobiusPrimitive::Inversion { center, .. } = prim {
            let (k, d) = points
                .iter()
                .enumerate()
                .map(|(k, q)| (k, q.iter().zip(center).map(|(a, c)| (a - c) * (a - c)).sum::<f64>().sqrt()))
                .fold((0, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best });
            if d <= CENTER_CLEARANCE {
                return Err(Error::CenterOnSurface {
                    center: center.clone(),
                    distance: d,
                    node: grid.nodes[k].clone(),
                });
            }
        }
        points = points.iter().map(|q| prim.apply_point(q)).collect();
    }
    let image = map.compose(f.map())?;
    let mut out = f.with_map(image)?;
    if !t.0.is_empty() {
        out = out.with_label(format!("mobius({})", f.label()));
    }
    Ok(out)
}

/// `T ∘ f`, checked on the default grid of the chart.
pub fn apply_mobius(f: &Immersion, t: &MobiusMap) -> Result<Immersion> {
    apply_mobius_on(f, t, &uniform_grid(f.domain(), default_resolution(f.m()))?)
}

/// Frame of `f` under `e^{2ψ} ḡ`, normals sign-aligned with `base`.
fn aligned_frame(f: &Immersion, amb: &AmbientMetric, psi: &Expression, p: &[f64], base: &PointFrame) -> Result<PointFrame> {
    let mut fr = frame_at(f, &amb.rescaled(psi)?, p)?;
    for a in 0..fr.codim {
        if fr.normals[a].dot(&base.normals[a]) < 0.0 {
            fr.normals[a] *= -1.0;
            fr.h[a] *= -1.0;
            fr.traceless[a] *= -1.0;
            fr.mean[a] = -fr.mean[a];
        }
    }
    Ok(fr)
}

/// Largest deviation from `ĥ° = e^ψ h°` and `Ĥ = e^{−ψ}(H − dψ(ν))`,
/// comparing frames computed independently under `ḡ` and `e^{2ψ} ḡ`.
pub fn h_transform_residual(f: &Immersion, amb: &AmbientMetric, psi: &Expression, p: &[f64]) -> Result<f64> {
    let base = frame_at(f, amb, p)?;
    let hat = aligned_frame(f, amb, psi, p, &base)?;
    let j = psi.eval(&crate::jet::Jet::seed(base.position.as_slice(), 1));
    let e = j.value().exp();
    let grad = DVector::from_iterator(f.n(), (0..f.n()).map(|a| j.d1(a)));
    let mut res: f64 = 0.0;
    for a in 0..base.codim {
        res = res.max((&hat.traceless[a] - &base.traceless[a] * e).amax());
        let expected = (base.mean[a] - grad.dot(&base.normals[a])) / e;
        res = res.max((hat.mean[a] - expected).abs());
    }
    Ok(res)
}

/// Right-hand side of the conformal curvature law for `e^{2φ} g`, from `R`, `∇φ` and `∇²φ` of `g`.
pub fn conformal_curvature_rhs(g: &MetricChart, phi: &Expression, p: &[f64]) -> Result<Tensor4> {
    let d = g.dim();
    let r = g.riemann(p)?;
    let jets = g.metric_jets(p, 1);
    let g0 = DMatrix::from_fn(d, d, |i, j| jets[i][j].value());
    let g_inv = g0
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Evaluation("metric is singular".into()))?;
    // Γ^k_ij
    let christoffel = |k: usize, i: usize, j: usize| -> f64 {
        (0..d)
            .map(|l| 0.5 * g_inv[(k, l)] * (jets[l][i].d1(j) + jets[l][j].d1(i) - jets[i][j].d1(l)))
            .sum()
    };
    let pj = phi.eval(&crate::jet::Jet::seed(p, 2));
    let dphi: Vec<f64> = (0..d).map(|i| pj.d1(i)).collect();
    let hess = DMatrix::from_fn(d, d, |i, j| pj.d2(i, j) - (0..d).map(|k| christoffel(k, i, j) * dphi[k]).sum::<f64>());
    let dv = DVector::from_column_slice(&dphi);
    let grad_sq = (dv.transpose() * &g_inv * &dv)[(0, 0)];
    let e2 = (2.0 * pj.value()).exp();
    let mut out = Tensor4::zeros([d; 4]);
    for a in 0..d {
        for b in 0..d {
            for c in 0..d {
                for e in 0..d {
                    let v = r.get(a, b, c, e)
                        + hess[(a, e)] * g0[(b, c)]
                        + hess[(b, c)] * g0[(a, e)]
                        - hess[(a, c)] * g0[(b, e)]
                        - hess[(b, e)] * g0[(a, c)]
                        + dphi[a] * dphi[c] * g0[(b, e)]
                        + dphi[b] * dphi[e] * g0[(a, c)]
                        - dphi[a] * dphi[e] * g0[(b, c)]
                        - dphi[b] * dphi[c] * g0[(a, e)]
                        + grad_sq * (g0[(a, e)] * g0[(b, c)] - g0[(a, c)] * g0[(e, b)]);
                    out.set(a, b, c, e, e2 * v);
                }
            }
        }
    }
    Ok(out)
}

/// Largest deviation between `R̂` computed from `e^{2φ} g` directly and the
/// transformation law assembled from data of `g`.
pub fn curvature_transform_residual(g: &MetricChart, phi: &Expression, p: &[f64]) -> Result<f64> {
    if phi.family() == Some(VarFamily::Ambient) {
        return Err(Error::Invalid("φ on a metric chart must use u-variables".into()));
    }
    let direct = g.conformal(phi)?.riemann(p)?;
    Ok(direct.max_abs_diff(&conformal_curvature_rhs(g, phi, p)?))
}

fn check_weight(p: &ContractionSum, m: usize) -> Result<()> {
    let target = -(m as i32);
    for (_, t) in p.terms() {
        if t.weight() != target {
            return Err(Error::Weight {
                expected: target,
                found: t.weight(),
            });
        }
    }
    Ok(())
}

/// `I(ψ) = e^{mψ} P(e^{2ψ} ḡ) − P(ḡ)` at the chart point `p`.
pub fn i_operator(p_sum: &ContractionSum, psi: &Expression, f: &Immersion, amb: &AmbientMetric, p: &[f64]) -> Result<f64> {
    check_weight(p_sum, f.m())?;
    let base = frame_at(f, amb, p)?;
    let hat = aligned_frame(f, amb, psi, p, &base)?;
    let s = psi.eval(base.position.as_slice());
    Ok((f.m() as f64 * s).exp() * evaluate_sum(p_sum, &hat)? - evaluate_sum(p_sum, &base)?)
}

/// Scalings applied to every deformation of a sweep.
pub const SWEEP_LAMBDAS: [f64; 4] = [0.25, 0.5, 1.0, 2.0];

/// Bound on `sup |φ|` over the surface for the default family.
pub const PHI_BOUND: f64 = 0.3;

/// Five test deformations in `x1..xn`, each scaled so that `sup |φ| = 0.3`
/// over the grid nodes of `f`.
pub fn default_phi_family(f: &Immersion, grid: &QuadratureGrid) -> Result<Vec<Expression>> {
    let n = f.n();
    let c: Vec<String> = (0..n).map(|k| format!("{:?}", [0.3, -0.2, 0.15, 0.1, -0.1][k % 5])).collect();
    let bump_den = (0..n)
        .map(|k| format!("(x{} - ({}))^2", k + 1, c[k]))
        .collect::<Vec<_>>()
        .join(" + ");
    let raw = [
        "x1 + 0.5*x2 - 0.25*x3".to_string(),
        "x1^2".to_string(),
        "x1*x2".to_string(),
        format!("1/(1 + {bump_den})"),
        format!("sin(x1 + 0.7*x{n}) + 0.3*x2*x{n}"),
    ];
    let points: Vec<Vec<f64>> = grid.nodes.iter().map(|p| f.position(p)).collect();
    raw.iter()
        .map(|text| {
            let e = parse_expression(text)?;
            let sup = points.iter().map(|q| e.eval(q.as_slice()).abs()).fold(0.0, f64::max);
            if !(sup > 0.0) || !sup.is_finite() {
                return Err(Error::Invalid(format!("deformation `{text}` vanishes on the surface")));
            }
            Ok(e.scaled(PHI_BOUND / sup).with_family(VarFamily::Ambient))
        })
        .collect()
}

/// One `(φ, λ)` entry of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepEntry {
    pub phi: String,
    pub lambda: f64,
    /// `∫ P dμ` under `ḡ`.
    pub baseline: f64,
    /// `∫ P dμ` under `e^{2λφ} ḡ`.
    pub deformed: f64,
    /// `∫ I dμ`.
    pub integral: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InvarianceReport {
    pub integrand: String,
    pub surface: String,
    pub resolution: Vec<usize>,
    pub area: f64,
    pub tolerance: f64,
    pub entries: Vec<SweepEntry>,
    pub max_abs_integral: f64,
    pub invariant: bool,
}

/// Relative tolerance on `∫ I` (times the surface area) used by default.
pub const SWEEP_TOLERANCE: f64 = 1e-6;

/// Integrates `I(λφ)` for every `φ` in `family` and `λ` in [`SWEEP_LAMBDAS`].
///
/// The verdict is "invariant" when every `|∫ I| ≤ tol_factor · area`.
pub fn invariance_sweep(
    p_sum: &ContractionSum,
    f: &Immersion,
    amb: &AmbientMetric,
    family: &[Expression],
    grid: &QuadratureGrid,
    tol_factor: f64,
) -> Result<InvarianceReport> {
    check_weight(p_sum, f.m())?;
    let base: Vec<Result<(f64, f64)>> = grid
        .nodes
        .par_iter()
        .map(|p| {
            let fr = frame_at(f, amb, p)?;
            Ok((fr.vol, evaluate_sum(p_sum, &fr)?))
        })
        .collect();
    let base = base.into_iter().collect::<Result<Vec<_>>>()?;
    let area: f64 = base.iter().zip(&grid.weights).map(|((v, _), w)| v * w).sum();
    let baseline: f64 = base.iter().zip(&grid.weights).map(|((v, p), w)| v * p * w).sum();
    let mut entries = Vec::new();
    for phi in family {
        for &lambda in &SWEEP_LAMBDAS {
            let psi = phi.scaled(lambda);
            let deformed_amb = amb.rescaled(&psi)?;
            let vals: Vec<Result<f64>> = grid
                .nodes
                .par_iter()
                .map(|p| {
                    let fr = frame_at(f, &deformed_amb, p)?;
                    Ok(fr.vol * evaluate_sum(p_sum, &fr)?)
                })
                .collect();
            let mut deformed = 0.0;
            let mut integral = 0.0;
            // P̂ dμ_ĝ − P dμ_ḡ = I dμ_ḡ
            for ((v, w), (vol, pb)) in vals.into_iter().zip(&grid.weights).zip(&base) {
                let pd_vol = v?;
                deformed += w * pd_vol;
                integral += w * (pd_vol - vol * pb);
            }
            entries.push(SweepEntry {
                phi: phi.to_string(),
                lambda,
                baseline,
                deformed,
                integral,
            });
        }
    }
    let max_abs_integral = entries.iter().map(|e| e.integral.abs()).fold(0.0, f64::max);
    let tolerance = tol_factor * area;
    Ok(InvarianceReport {
        integrand: p_sum.to_string(),
        surface: f.label().to_string(),
        resolution: grid.resolution.clone(),
        area,
        tolerance,
        entries,
        invariant: max_abs_integral <= tolerance,
        max_abs_integral,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::surfaces;
    use crate::quadrature::integrate;

    fn e(s: &str) -> Expression {
        parse_expression(s).unwrap()
    }

    #[test]
    fn inversion_maps_sphere_to_sphere() {
        let f = surfaces::sphere(2, 2.0).unwrap();
        let g = apply_mobius(&f, &MobiusMap::inversion(vec![0.0; 3], 1.0)).unwrap();
        for p in [[0.3, 1.0], [2.0, 5.0]] {
            let r: f64 = g.position(&p).iter().map(|x| x * x).sum::<f64>().sqrt();
            assert!((r - 0.5).abs() < 1e-14);
        }
    }

    #[test]
    fn inversion_centered_on_surface_rejected() {
        let f = surfaces::torus(2.0, 1.0).unwrap();
        let grid = uniform_grid(f.domain(), 8).unwrap();
        let c = f.position(&grid.nodes[5]);
        match apply_mobius_on(&f, &MobiusMap::inversion(c, 1.0), &grid) {
            Err(Error::CenterOnSurface { node, .. }) => assert_eq!(node, grid.nodes[5]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn json_form() {
        let t: MobiusMap = serde_json::from_str(
            r#"[{"translation":[1,0,0]},{"dilation":2},{"inversion":{"center":[0,0,5],"radius":1}},
                {"rotation":[[0,-1,0],[1,0,0],[0,0,1]]}]"#,
        )
        .unwrap();
        assert_eq!(t.0.len(), 4);
        let p = t.program(3).unwrap().eval(&[0.5, 0.25, 1.0]);
        let q = t.apply_point(&[0.5, 0.25, 1.0]);
        assert!(p.iter().zip(&q).all(|(a, b)| (a - b).abs() < 1e-14));
        assert!(MobiusMap(vec![MobiusPrimitive::Dilation(-1.0)]).program(3).is_err());
    }

    #[test]
    fn h_transform_law() {
        let f = surfaces::ellipsoid(&[1.0, 1.3, 0.8]).unwrap();
        let amb = AmbientMetric::flat(3);
        assert!(h_transform_residual(&f, &amb, &e("0"), &[0.4, 1.0]).unwrap() < 1e-14);
        assert!(h_transform_residual(&f, &amb, &e("0.7"), &[0.4, 1.0]).unwrap() < 1e-12);
        let psi = e("0.2*x1*x2 - 0.1*x3^2 + 0.05*x1");
        assert!(h_transform_residual(&f, &amb, &psi, &[1.2, 4.0]).unwrap() < 1e-10);
        let curved = AmbientMetric::conformal(3, e("0.1*x2*x3")).unwrap();
        assert!(h_transform_residual(&f, &curved, &psi, &[2.2, 0.3]).unwrap() < 1e-10);
        let t = surfaces::clifford_torus(1.0, 0.1).unwrap();
        assert!(h_transform_residual(&t, &AmbientMetric::flat(4), &e("0.2*x1*x4 + 0.1*x3"), &[0.5, 2.0]).unwrap() < 1e-10);
    }

    #[test]
    fn totally_geodesic_sphere_in_cylinder_metric() {
        let f = surfaces::sphere(2, 1.0).unwrap();
        let amb = AmbientMetric::conformal(3, e("-0.5*log(x1^2 + x2^2 + x3^2)")).unwrap();
        let fr = frame_at(&f, &amb, &[1.0, 2.0]).unwrap();
        assert!(fr.mean[0].abs() < 1e-13);
    }

    #[test]
    fn curvature_law() {
        let flat = MetricChart::flat(3);
        assert!(curvature_transform_residual(&flat, &e("0"), &[0.1, 0.2, 0.3]).unwrap() < 1e-15);
        assert!(curvature_transform_residual(&flat, &e("0.3*u1*u2 + 0.2*sin(u3)"), &[0.1, 0.2, 0.3]).unwrap() < 1e-10);
        let s2 = MetricChart::round_sphere();
        assert!(curvature_transform_residual(&s2, &e("0.2*cos(u1)*sin(u2) + 0.1*u1^2"), &[1.1, 0.4]).unwrap() < 1e-10);
    }

    #[test]
    fn i_operator_cases() {
        let f = surfaces::ellipsoid(&[1.0, 1.4, 0.9]).unwrap();
        let amb = AmbientMetric::flat(3);
        let p = [0.9, 2.3];
        let h2 = ContractionSum::mean_sq(2, 1);
        let ho = ContractionSum::traceless_sq(1);
        assert!(i_operator(&h2, &e("0.4"), &f, &amb, &p).unwrap().abs() < 1e-10);
        let bump = e("0.3/(1 + (x1-0.2)^2 + x2^2 + (x3+0.1)^2)");
        assert!(i_operator(&ho, &bump, &f, &amb, &p).unwrap().abs() < 1e-8);
        assert!(i_operator(&h2, &bump, &f, &amb, &p).unwrap().abs() > 1e-4);
        let bad = crate::tensor::parse_sum("g-1(a,b) Hg(a,b)").unwrap();
        assert!(matches!(i_operator(&bad, &bump, &f, &amb, &p), Err(Error::Weight { .. })));
    }

    #[test]
    fn sweep_separates_invariants_from_h_squared() {
        let f = surfaces::torus(2.0, 1.0).unwrap();
        let amb = AmbientMetric::flat(3);
        let grid = uniform_grid(f.domain(), 32).unwrap();
        let fam = default_phi_family(&f, &grid).unwrap();
        assert_eq!(fam.len(), 5);
        for phi in &fam {
            let sup = grid.nodes.iter().map(|p| phi.eval(f.position(p).as_slice()).abs()).fold(0.0, f64::max);
            assert!((sup - PHI_BOUND).abs() < 1e-12);
        }
        let w = invariance_sweep(&ContractionSum::conformal_willmore(1), &f, &amb, &fam[..2], &grid, SWEEP_TOLERANCE).unwrap();
        assert!(w.invariant, "{}", w.max_abs_integral);
        let h = invariance_sweep(&ContractionSum::mean_sq(2, 1), &f, &amb, &fam[..2], &grid, SWEEP_TOLERANCE).unwrap();
        assert!(!h.invariant && h.max_abs_integral > 1e-3);
        let area = integrate(&f, &amb, &grid, |_| Ok(1.0)).unwrap().value;
        assert!((w.area - area).abs() < 1e-12);
    }

    #[test]
    fn semigroup_of_conformal_factors() {
        let f = surfaces::torus(2.0, 1.0).unwrap();
        let a = AmbientMetric::conformal(3, e("0.1*x1*x2")).unwrap().rescaled(&e("0.05*x3^2")).unwrap();
        let b = AmbientMetric::conformal(3, e("0.1*x1*x2 + 0.05*x3^2")).unwrap();
        let fa = frame_at(&f, &a, &[0.3, 0.8]).unwrap();
        let fb = frame_at(&f, &b, &[0.3, 0.8]).unwrap();
        assert!((&fa.h[0] - &fb.h[0]).amax() < 1e-8);
        assert!(fa.riemann.max_abs_diff(&fb.riemann) < 1e-8);
    }
}
