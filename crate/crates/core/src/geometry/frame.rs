//! Pointwise extrinsic and intrinsic geometry of an immersion.

use nalgebra::{DMatrix, DVector};

use super::immersion::{AmbientMetric, Immersion};
use super::tensor4::Tensor4;
use crate::error::{Error, Result};
use crate::jet::Jet;

/// Smallest admissible singular value of the differential.
pub const RANK_TOLERANCE: f64 = 1e-8;

/// All geometric tensors of an immersion at one chart point.
///
/// Tangential indices are chart coordinates; normal indices refer to the
/// `ḡ`-orthonormal frame in `normals`.
#[derive(Debug, Clone)]
pub struct PointFrame {
    pub m: usize,
    pub codim: usize,
    pub point: Vec<f64>,
    pub position: DVector<f64>,
    pub tangents: Vec<DVector<f64>>,
    /// `ḡ`-unit normals, in ambient coordinates.
    pub normals: Vec<DVector<f64>>,
    pub g: DMatrix<f64>,
    pub g_inv: DMatrix<f64>,
    /// `h^α_{ij}`, one matrix per normal.
    pub h: Vec<DMatrix<f64>>,
    /// `H^α = g^{ij} h^α_{ij} / m`.
    pub mean: Vec<f64>,
    pub traceless: Vec<DMatrix<f64>>,
    /// `R_{ijkl}` of the induced metric, with `R_{1212} = K det g` on surfaces.
    pub riemann: Tensor4,
    /// `R⊥_{ijαβ}`; all zeros in codimension 1.
    pub normal_curvature: Tensor4,
    /// `R̄_{ijkl}` restricted to the tangent space.
    pub ambient_riemann: Tensor4,
    /// `√det g`.
    pub vol: f64,
    /// Conformal factor `φ` and its Euclidean gradient at `f(p)`.
    pub phi: f64,
    pub dphi: DVector<f64>,
}

impl PointFrame {
    /// Gauss curvature `R_{1212} / det g` (surfaces only).
    pub fn gauss_curvature(&self) -> f64 {
        debug_assert_eq!(self.m, 2);
        self.riemann.get(0, 1, 0, 1) / self.g.determinant()
    }

    /// Sectional curvature of the ambient metric on the tangent plane (surfaces only).
    pub fn ambient_sectional(&self) -> f64 {
        debug_assert_eq!(self.m, 2);
        self.ambient_riemann.get(0, 1, 0, 1) / self.g.determinant()
    }

    /// `K⊥ = R⊥(e1, e2, ν1, ν2)` for an oriented orthonormal tangent frame.
    pub fn normal_curvature_scalar(&self) -> f64 {
        if self.m != 2 || self.codim != 2 {
            return 0.0;
        }
        self.normal_curvature.get(0, 1, 0, 1) / self.vol
    }

    /// `|H|²`.
    pub fn mean_sq(&self) -> f64 {
        self.mean.iter().map(|h| h * h).sum()
    }

    /// `|h°|² = Σ_α g^{ik} g^{jl} h°_{ij} h°_{kl}`.
    pub fn traceless_sq(&self) -> f64 {
        self.traceless
            .iter()
            .map(|t| {
                let s = &self.g_inv * t;
                (&s * &s).trace()
            })
            .sum()
    }

    /// Shape operator `g⁻¹ h^α`.
    pub fn shape_operator(&self, alpha: usize) -> DMatrix<f64> {
        &self.g_inv * &self.h[alpha]
    }

    /// Traceless shape operator `g⁻¹ h°^α`.
    pub fn traceless_operator(&self, alpha: usize) -> DMatrix<f64> {
        &self.g_inv * &self.traceless[alpha]
    }

    /// The frame seen through the homothety `ḡ ↦ t² ḡ`.
    pub fn rescaled(&self, t: f64) -> PointFrame {
        let t2 = t * t;
        PointFrame {
            g: &self.g * t2,
            g_inv: &self.g_inv / t2,
            h: self.h.iter().map(|h| h * t).collect(),
            mean: self.mean.iter().map(|h| h / t).collect(),
            traceless: self.traceless.iter().map(|h| h * t).collect(),
            riemann: self.riemann.scaled(t2),
            normal_curvature: self.normal_curvature.clone(),
            ambient_riemann: self.ambient_riemann.scaled(t2),
            vol: self.vol * t.powi(self.m as i32),
            normals: self.normals.iter().map(|v| v / t).collect(),
            ..self.clone()
        }
    }
}

impl PointFrame {
    /// A frame from a metric and second fundamental forms alone, with flat
    /// ambient curvature: `R` and `R⊥` follow from the Gauss and Ricci equations.
    ///
    /// Positions, tangents and normals are placeholders (standard basis vectors).
    pub fn synthetic(g: DMatrix<f64>, h: Vec<DMatrix<f64>>) -> Result<PointFrame> {
        let m = g.nrows();
        let codim = h.len();
        if codim == 0 || h.iter().any(|x| x.shape() != (m, m)) || g.ncols() != m {
            return Err(Error::Dimension("second fundamental forms must be m×m, at least one".into()));
        }
        let g_inv = g
            .clone()
            .cholesky()
            .ok_or_else(|| Error::Invalid("metric is not positive definite".into()))?
            .inverse();
        let mean: Vec<f64> = h.iter().map(|ha| (&g_inv * ha).trace() / m as f64).collect();
        let traceless: Vec<DMatrix<f64>> = h.iter().zip(&mean).map(|(ha, &hm)| ha - &g * hm).collect();
        let mut riemann = Tensor4::zeros([m, m, m, m]);
        for i in 0..m {
            for j in 0..m {
                for k in 0..m {
                    for l in 0..m {
                        let quad: f64 = h.iter().map(|ha| ha[(i, l)] * ha[(j, k)] - ha[(i, k)] * ha[(j, l)]).sum();
                        riemann.set(i, j, k, l, -quad);
                    }
                }
            }
        }
        let mut normal_curvature = Tensor4::zeros([m, m, codim, codim]);
        for a in 0..codim {
            for b in 0..codim {
                let ab = &h[a] * &g_inv * &h[b];
                for i in 0..m {
                    for j in 0..m {
                        normal_curvature.set(i, j, a, b, -(ab[(i, j)] - ab[(j, i)]));
                    }
                }
            }
        }
        let n = m + codim;
        let basis = |k: usize| {
            let mut v = DVector::zeros(n);
            v[k] = 1.0;
            v
        };
        Ok(PointFrame {
            m,
            codim,
            point: vec![0.0; m],
            position: DVector::zeros(n),
            tangents: (0..m).map(basis).collect(),
            normals: (m..n).map(basis).collect(),
            vol: g.determinant().sqrt(),
            g,
            g_inv,
            h,
            mean,
            traceless,
            riemann,
            normal_curvature,
            ambient_riemann: Tensor4::zeros([m, m, m, m]),
            phi: 0.0,
            dphi: DVector::zeros(n),
        })
    }
}

/// Riemann tensor of `e^{2φ} δ`, evaluated on Euclidean-coordinate vectors.
///
/// Only dot products, `dφ` and the Euclidean Hessian of `φ` enter, so the
/// tensor is applied through precomputed Gram data of a vector family.
struct ConformallyFlatCurvature {
    e2phi: f64,
    /// Euclidean dot products of the family.
    dot: DMatrix<f64>,
    /// `dφ(V_a)`.
    dphi: Vec<f64>,
    /// `∂²φ(V_a, V_b)`.
    hess: DMatrix<f64>,
    grad_sq: f64,
}

impl ConformallyFlatCurvature {
    fn new(vectors: &[DVector<f64>], phi: f64, grad: &DVector<f64>, hess: &DMatrix<f64>) -> Self {
        let k = vectors.len();
        let dot = DMatrix::from_fn(k, k, |a, b| vectors[a].dot(&vectors[b]));
        let hv: Vec<DVector<f64>> = vectors.iter().map(|v| hess * v).collect();
        ConformallyFlatCurvature {
            e2phi: (2.0 * phi).exp(),
            dot,
            dphi: vectors.iter().map(|v| grad.dot(v)).collect(),
            hess: DMatrix::from_fn(k, k, |a, b| vectors[a].dot(&hv[b])),
            grad_sq: grad.norm_squared(),
        }
    }

    /// `R̄(V_a, V_b, V_c, V_d)`.
    fn eval(&self, a: usize, b: usize, c: usize, d: usize) -> f64 {
        let (p, h, f) = (&self.dot, &self.hess, &self.dphi);
        let bracket = h[(a, d)] * p[(b, c)] + h[(b, c)] * p[(a, d)]
            - h[(a, c)] * p[(b, d)]
            - h[(b, d)] * p[(a, c)]
            + f[a] * f[c] * p[(b, d)]
            + f[b] * f[d] * p[(a, c)]
            - f[a] * f[d] * p[(b, c)]
            - f[b] * f[c] * p[(a, d)]
            + self.grad_sq * (p[(a, d)] * p[(b, c)] - p[(a, c)] * p[(b, d)]);
        self.e2phi * bracket
    }
}

fn to_vec(v: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(v)
}

/// Orthonormal (Euclidean) basis of the complement of `tangents`.
///
/// Candidates are the ambient coordinate vectors; each step takes the one
/// with the largest rejection from the current span, ties going to the lower
/// coordinate index.
fn normal_complement(tangents: &[DVector<f64>], n: usize, codim: usize) -> Option<Vec<DVector<f64>>> {
    let mut basis: Vec<DVector<f64>> = Vec::with_capacity(n);
    for t in tangents {
        let mut v = t.clone();
        for _ in 0..2 {
            for b in &basis {
                v -= b * b.dot(&v);
            }
        }
        let norm = v.norm();
        if norm < 1e-14 {
            return None;
        }
        basis.push(v / norm);
    }
    let mut normals = Vec::with_capacity(codim);
    for _ in 0..codim {
        let mut best: Option<(f64, DVector<f64>)> = None;
        for k in 0..n {
            let mut v = DVector::zeros(n);
            v[k] = 1.0;
            for _ in 0..2 {
                for b in &basis {
                    v -= b * b.dot(&v);
                }
            }
            let norm = v.norm();
            if best.as_ref().is_none_or(|(bn, _)| norm > *bn + 1e-12) {
                best = Some((norm, v));
            }
        }
        let (norm, v) = best?;
        if norm < 1e-10 {
            return None;
        }
        let unit = v / norm;
        basis.push(unit.clone());
        normals.push(unit);
    }
    Some(normals)
}

/// Computes every tensor of [`PointFrame`] at chart point `p`.
pub fn frame_at(f: &Immersion, amb: &AmbientMetric, p: &[f64]) -> Result<PointFrame> {
    let (m, n, codim) = (f.m(), f.n(), f.codim());
    if amb.n() != n {
        return Err(Error::Dimension(format!(
            "ambient metric lives in R^{} but the immersion maps into R^{n}",
            amb.n()
        )));
    }
    if p.len() != m {
        return Err(Error::Dimension(format!("chart point has {} coordinates, expected {m}", p.len())));
    }
    let comps = f.jets(p, 2);
    let position = DVector::from_iterator(n, comps.iter().map(Jet::value));
    if !position.iter().all(|x| x.is_finite()) {
        return Err(Error::NonFinite { point: p.to_vec() });
    }
    let tangents: Vec<DVector<f64>> = (0..m)
        .map(|i| DVector::from_iterator(n, comps.iter().map(|c| c.d1(i))))
        .collect();
    let (phi, grad, hess) = amb.phi_derivatives(position.as_slice());
    let grad = to_vec(&grad);
    let hess = DMatrix::from_fn(n, n, |a, b| hess[a][b]);
    let e2phi = (2.0 * phi).exp();
    let ephi = phi.exp();

    let gram = DMatrix::from_fn(m, m, |i, j| tangents[i].dot(&tangents[j]));
    let lambda_min = gram.clone().symmetric_eigenvalues().min();
    let sigma_min = lambda_min.max(0.0).sqrt();
    if !sigma_min.is_finite() || sigma_min <= RANK_TOLERANCE {
        return Err(Error::RankDeficient {
            point: p.to_vec(),
            sigma_min,
        });
    }

    let mut unit_normals = normal_complement(&tangents, n, codim)
        .ok_or_else(|| Error::NormalFrame { point: p.to_vec() })?;
    let mut oriented = DMatrix::zeros(n, n);
    for (c, v) in tangents.iter().chain(unit_normals.iter()).enumerate() {
        oriented.set_column(c, v);
    }
    if oriented.determinant() < 0.0 {
        let last = unit_normals.len() - 1;
        unit_normals[last] *= -1.0;
    }
    if f.flip_normal() {
        for v in unit_normals.iter_mut() {
            *v *= -1.0;
        }
    }
    // ḡ-unit normals
    let normals: Vec<DVector<f64>> = unit_normals.iter().map(|v| v / ephi).collect();

    let g = &gram * e2phi;
    let g_inv = g
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::RankDeficient {
            point: p.to_vec(),
            sigma_min,
        })?;

    // ∇̄_{X_i} X_j = ∂_i∂_j f + Γ(X_i, X_j), Γ(U,V) = dφ(V) U + dφ(U) V - (U·V) ∇φ
    let dphi_t: Vec<f64> = tangents.iter().map(|t| grad.dot(t)).collect();
    let mut h = vec![DMatrix::zeros(m, m); codim];
    for i in 0..m {
        for j in i..m {
            let mut cov = DVector::from_iterator(n, comps.iter().map(|c| c.d2(i, j)));
            cov += &tangents[i] * dphi_t[j] + &tangents[j] * dphi_t[i] - &grad * gram[(i, j)];
            for (alpha, nu) in unit_normals.iter().enumerate() {
                let v = ephi * cov.dot(nu);
                h[alpha][(i, j)] = v;
                h[alpha][(j, i)] = v;
            }
        }
    }
    let mean: Vec<f64> = h.iter().map(|ha| (&g_inv * ha).trace() / m as f64).collect();
    let traceless: Vec<DMatrix<f64>> = h
        .iter()
        .zip(&mean)
        .map(|(ha, &hm)| ha - &g * hm)
        .collect();

    let family: Vec<DVector<f64>> = tangents.iter().chain(normals.iter()).cloned().collect();
    let curv = ConformallyFlatCurvature::new(&family, phi, &grad, &hess);

    let mut ambient_riemann = Tensor4::zeros([m, m, m, m]);
    let mut riemann = Tensor4::zeros([m, m, m, m]);
    for i in 0..m {
        for j in 0..m {
            for k in 0..m {
                for l in 0..m {
                    let rbar = curv.eval(i, j, k, l);
                    ambient_riemann.set(i, j, k, l, rbar);
                    let quad: f64 = h
                        .iter()
                        .map(|ha| ha[(i, l)] * ha[(j, k)] - ha[(i, k)] * ha[(j, l)])
                        .sum();
                    riemann.set(i, j, k, l, rbar - quad);
                }
            }
        }
    }

    let mut normal_curvature = Tensor4::zeros([m, m, codim, codim]);
    if codim > 1 {
        let raised: Vec<DMatrix<f64>> = h.iter().map(|ha| &g_inv * ha).collect();
        for a in 0..codim {
            for b in 0..codim {
                // (h_a g⁻¹ h_b)_{ij}
                let ab = &h[a] * &raised[b];
                for i in 0..m {
                    for j in 0..m {
                        let rbar = curv.eval(i, j, m + a, m + b);
                        normal_curvature.set(i, j, a, b, rbar - (ab[(i, j)] - ab[(j, i)]));
                    }
                }
            }
        }
    }

    let vol = g.determinant().sqrt();
    let frame = PointFrame {
        m,
        codim,
        point: p.to_vec(),
        position,
        tangents,
        normals,
        g,
        g_inv,
        h,
        mean,
        traceless,
        riemann,
        normal_curvature,
        ambient_riemann,
        vol,
        phi,
        dphi: grad,
    };
    if !frame.vol.is_finite() || frame.h.iter().any(|x| x.iter().any(|v| !v.is_finite())) {
        return Err(Error::NonFinite { point: p.to_vec() });
    }
    Ok(frame)
}

/// Riemann tensor `R_{ijkl}` of a metric given by jets (order ≥ 2) of its components.
///
/// Same sign convention as [`PointFrame::riemann`]: positive `R_{1212}` on round spheres.
pub fn riemann_from_metric_jets(g: &[Vec<Jet>]) -> Result<Tensor4> {
    let d = g.len();
    let g0 = DMatrix::from_fn(d, d, |i, j| g[i][j].value());
    let g_inv = g0
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Evaluation("metric is singular".into()))?;
    // dg[k][(i,j)] = ∂_k g_ij ; ddg[k][l][(i,j)] = ∂_k ∂_l g_ij
    let dg: Vec<DMatrix<f64>> = (0..d)
        .map(|k| DMatrix::from_fn(d, d, |i, j| g[i][j].d1(k)))
        .collect();
    let ddg = |k: usize, l: usize, i: usize, j: usize| g[i][j].d2(k, l);
    // Christoffel symbols of the first kind Γ_{k,ij} and second kind Γ^p_{ij}
    let mut first = vec![DMatrix::zeros(d, d); d];
    for (k, fk) in first.iter_mut().enumerate() {
        for i in 0..d {
            for j in 0..d {
                fk[(i, j)] = 0.5 * (dg[i][(j, k)] + dg[j][(i, k)] - dg[k][(i, j)]);
            }
        }
    }
    let mut second = vec![DMatrix::zeros(d, d); d];
    for (p, sp) in second.iter_mut().enumerate() {
        for k in 0..d {
            *sp += &first[k] * g_inv[(p, k)];
        }
    }
    let mut out = Tensor4::zeros([d, d, d, d]);
    for i in 0..d {
        for k in 0..d {
            for l in 0..d {
                for mm in 0..d {
                    let mut r = 0.5
                        * (ddg(k, l, i, mm) + ddg(i, mm, k, l) - ddg(k, mm, i, l) - ddg(i, l, k, mm));
                    for a in 0..d {
                        for b in 0..d {
                            r += g0[(a, b)]
                                * (second[a][(k, l)] * second[b][(i, mm)]
                                    - second[a][(k, mm)] * second[b][(i, l)]);
                        }
                    }
                    out.set(i, k, l, mm, r);
                }
            }
        }
    }
    Ok(out)
}

/// Order-2 jets of the induced metric `g_ij = e^{2φ∘f} ∂_i f · ∂_j f`.
pub fn induced_metric_jets(f: &Immersion, amb: &AmbientMetric, p: &[f64]) -> Vec<Vec<Jet>> {
    let m = f.m();
    let comps = f.jets(p, 3);
    let factor = (amb.phi_on(&comps) * 2.0).exp();
    let factor = if factor.nvars() == 0 {
        factor
    } else {
        factor.truncate(2)
    };
    let partials: Vec<Vec<Jet>> = (0..m)
        .map(|i| comps.iter().map(|c| c.partial(i)).collect())
        .collect();
    (0..m)
        .map(|i| {
            (0..m)
                .map(|j| {
                    let dot = partials[i]
                        .iter()
                        .zip(&partials[j])
                        .fold(Jet::constant(0.0), |acc, (a, b)| acc + *a * *b);
                    factor * dot
                })
                .collect()
        })
        .collect()
}

/// Riemann tensor of the induced metric straight from its Christoffel symbols.
///
/// Independent of the Gauss equation route taken by [`frame_at`].
pub fn intrinsic_curvature_direct(f: &Immersion, amb: &AmbientMetric, p: &[f64]) -> Result<Tensor4> {
    if amb.n() != f.n() {
        return Err(Error::Dimension("ambient dimension mismatch".into()));
    }
    let comps = f.jets(p, 1);
    let tangents: Vec<DVector<f64>> = (0..f.m())
        .map(|i| DVector::from_iterator(f.n(), comps.iter().map(|c| c.d1(i))))
        .collect();
    let gram = DMatrix::from_fn(f.m(), f.m(), |i, j| tangents[i].dot(&tangents[j]));
    let sigma_min = gram.symmetric_eigenvalues().min().max(0.0).sqrt();
    if sigma_min <= RANK_TOLERANCE {
        return Err(Error::RankDeficient {
            point: p.to_vec(),
            sigma_min,
        });
    }
    riemann_from_metric_jets(&induced_metric_jets(f, amb, p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_expression;
    use crate::geometry::{surfaces, Interval};
    use std::f64::consts::PI;

    fn lat_long_sphere() -> Immersion {
        let d = vec![Interval::open(0.0, PI), Interval::periodic(0.0, 2.0 * PI)];
        Immersion::from_strs(&["sin(u1)*cos(u2)", "sin(u1)*sin(u2)", "cos(u1)"], d).unwrap()
    }

    #[test]
    fn unit_sphere_equator() {
        let f = lat_long_sphere();
        let fr = frame_at(&f, &AmbientMetric::flat(3), &[PI / 2.0, 0.3]).unwrap();
        assert!((&fr.g - DMatrix::identity(2, 2)).amax() < 1e-14);
        assert!((&fr.h[0] + &fr.g).amax() < 1e-14, "outward normal gives h = -g");
        assert!((fr.mean[0] + 1.0).abs() < 1e-14);
        assert!(fr.traceless[0].amax() < 1e-14);
        assert!((fr.riemann.get(0, 1, 0, 1) - 1.0).abs() < 1e-14);
        let flipped = frame_at(&f.clone().with_flip_normal(true), &AmbientMetric::flat(3), &[PI / 2.0, 0.3]).unwrap();
        assert!((flipped.mean[0] - 1.0).abs() < 1e-14);
        let builtin = frame_at(&surfaces::sphere(2, 1.0).unwrap(), &AmbientMetric::flat(3), &[1.0, 2.0]).unwrap();
        assert!((builtin.mean[0] - 1.0).abs() < 1e-13);
    }

    #[test]
    fn paraboloid_at_origin() {
        let f = surfaces::graph("(u1^2 + u2^2)/2").unwrap();
        let fr = frame_at(&f, &AmbientMetric::flat(3), &[0.0, 0.0]).unwrap();
        assert!((&fr.h[0] - DMatrix::identity(2, 2)).amax() < 1e-14);
        assert!((fr.mean[0] - 1.0).abs() < 1e-14);
        assert!((fr.gauss_curvature() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn clifford_torus_is_flat_with_flat_normal_bundle() {
        let f = surfaces::clifford_torus(1.0, 0.0).unwrap();
        for p in [[0.1, 0.2], [2.0, 4.0]] {
            let fr = frame_at(&f, &AmbientMetric::flat(4), &p).unwrap();
            assert!(fr.riemann.max_abs() < 1e-14);
            assert!(fr.normal_curvature.max_abs() < 1e-14);
            assert!(intrinsic_curvature_direct(&f, &AmbientMetric::flat(4), &p).unwrap().max_abs() < 1e-13);
        }
    }

    #[test]
    fn sphere_direct_curvature() {
        let f = lat_long_sphere();
        for p in [[0.4, 1.0], [2.0, -0.5]] {
            let r = intrinsic_curvature_direct(&f, &AmbientMetric::flat(3), &p).unwrap();
            let g = frame_at(&f, &AmbientMetric::flat(3), &p).unwrap().g;
            assert!((r.get(0, 1, 0, 1) - g.determinant()).abs() < 1e-12);
        }
    }

    #[test]
    fn gauss_equation_matches_direct_route_in_conformal_ambient() {
        let f = Immersion::from_strs(
            &[
                "(1 + 0.2*cos(2*u2)*sin(u1))*sin(u1)*cos(u2)",
                "(1 + 0.2*cos(2*u2)*sin(u1))*sin(u1)*sin(u2)",
                "(1 + 0.1*sin(3*u2))*cos(u1)",
            ],
            vec![Interval::open(0.0, PI), Interval::periodic(0.0, 2.0 * PI)],
        )
        .unwrap();
        let amb = AmbientMetric::conformal(3, parse_expression("0.3*x1*x2 - 0.2*x3^2 + 0.1*x1").unwrap()).unwrap();
        for p in [[0.7, 0.3], [1.9, 4.4]] {
            let fr = frame_at(&f, &amb, &p).unwrap();
            let direct = intrinsic_curvature_direct(&f, &amb, &p).unwrap();
            assert!(fr.riemann.max_abs_diff(&direct) < 1e-10, "{}", fr.riemann.max_abs_diff(&direct));
        }
    }

    #[test]
    fn codim_two_gauss_and_ricci() {
        let f = surfaces::clifford_torus(1.0, 0.2).unwrap();
        let amb = AmbientMetric::conformal(4, parse_expression("0.2*x1*x4 + 0.1*x2^2").unwrap()).unwrap();
        let p = [0.8, 2.1];
        let fr = frame_at(&f, &amb, &p).unwrap();
        let direct = intrinsic_curvature_direct(&f, &amb, &p).unwrap();
        assert!(fr.riemann.max_abs_diff(&direct) < 1e-10);
        let rn = &fr.normal_curvature;
        for i in 0..2 {
            for j in 0..2 {
                for a in 0..2 {
                    for b in 0..2 {
                        assert!((rn.get(i, j, a, b) + rn.get(j, i, a, b)).abs() < 1e-10);
                        assert!((rn.get(i, j, a, b) + rn.get(i, j, b, a)).abs() < 1e-10);
                    }
                }
            }
        }
        assert!(rn.max_abs() > 1e-4);
    }

    #[test]
    fn frame_invariants() {
        let f = surfaces::ellipsoid(&[1.0, 1.5, 0.7]).unwrap();
        let amb = AmbientMetric::conformal(3, parse_expression("0.2*x1 - 0.1*x2*x3").unwrap()).unwrap();
        let fr = frame_at(&f, &amb, &[1.1, 0.4]).unwrap();
        assert!((&fr.g_inv * &fr.g - DMatrix::identity(2, 2)).amax() < 1e-10);
        assert!((&fr.g_inv * &fr.traceless[0]).trace().abs() < 1e-9);
        let e2 = (2.0 * fr.phi).exp();
        assert!((e2 * fr.normals[0].norm_squared() - 1.0).abs() < 1e-12);
        assert!(fr.tangents.iter().all(|t| t.dot(&fr.normals[0]).abs() < 1e-12));
    }

    #[test]
    fn rank_deficiency_detected() {
        let f = Immersion::from_strs(&["u1", "u1", "0"], vec![Interval::open(0.0, 1.0); 2]).unwrap();
        assert!(matches!(
            frame_at(&f, &AmbientMetric::flat(3), &[0.5, 0.5]),
            Err(Error::RankDeficient { .. })
        ));
    }

    #[test]
    fn homothety_rescaling_matches_recomputation() {
        let f = surfaces::torus(2.0, 1.0).unwrap();
        let t: f64 = 1.7;
        let base = frame_at(&f, &AmbientMetric::flat(3), &[0.3, 0.9]).unwrap();
        let amb = AmbientMetric::conformal(3, crate::expr::Expression::constant(t.ln())).unwrap();
        let direct = frame_at(&f, &amb, &[0.3, 0.9]).unwrap();
        let scaled = base.rescaled(t);
        assert!((&scaled.g - &direct.g).amax() < 1e-12);
        assert!((&scaled.h[0] - &direct.h[0]).amax() < 1e-12);
        assert!(scaled.riemann.max_abs_diff(&direct.riemann) < 1e-12);
        assert!((scaled.vol - direct.vol).abs() < 1e-12);
    }
}
