use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::geometry::Tensor4;

/// `det(g⁻¹ h)`.
pub fn det_g(h: &DMatrix<f64>, g_inv: &DMatrix<f64>) -> f64 {
    (g_inv * h).determinant()
}

/// Traces of powers of the traceless shape operator `S = g⁻¹h°`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TracelessTraces {
    /// `|h°|² = tr S²`.
    pub sq: f64,
    pub tr3: f64,
    pub tr4: f64,
}

pub fn traceless_traces(ho: &DMatrix<f64>, g_inv: &DMatrix<f64>) -> TracelessTraces {
    let s = g_inv * ho;
    let s2 = &s * &s;
    TracelessTraces {
        sq: s2.trace(),
        tr3: (&s2 * &s).trace(),
        tr4: (&s2 * &s2).trace(),
    }
}

fn check_square(a: &DMatrix<f64>, n: usize, what: &str) -> Result<()> {
    if a.shape() != (n, n) {
        return Err(Error::Dimension(format!("{what} must be {n}×{n}, got {}×{}", a.nrows(), a.ncols())));
    }
    Ok(())
}

/// `Tr h°⁴ − ½|h°|⁴ + 4 det h°` for a traceless symmetric 4×4 matrix.
pub fn quartic_traceless_residual(ho: &DMatrix<f64>) -> Result<f64> {
    check_square(ho, 4, "h°")?;
    let tr = ho.trace();
    if tr.abs() >= 1e-10 {
        return Err(Error::Invalid(format!("matrix is not traceless (trace = {tr:e})")));
    }
    let id = DMatrix::identity(4, 4);
    let t = traceless_traces(ho, &id);
    Ok(t.tr4 - 0.5 * t.sq * t.sq + 4.0 * ho.determinant())
}

/// Residuals of the three expansions of `det_g h` for a 4×4 symmetric `h`
/// and SPD `g`, with `H = ¼ tr_g h`:
///
/// * `r1`: in powers of `H` and traces of `g⁻¹h`,
/// * `r2`: in powers of `H` and traces of `g⁻¹h°`,
/// * `r3`: the difference `det_g h − det_g h°`.
pub fn newton_expansion_residuals(h: &DMatrix<f64>, g: &DMatrix<f64>) -> Result<(f64, f64, f64)> {
    check_square(h, 4, "h")?;
    check_square(g, 4, "g")?;
    let g_inv = g
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Invalid("g is not positive definite".into()))?
        .inverse();
    let s = &g_inv * h;
    let hm = s.trace() / 4.0;
    let s2 = &s * &s;
    let (n2, n3, n4) = (s2.trace(), (&s2 * &s).trace(), (&s2 * &s2).trace());
    let det = s.determinant();
    let ho = h - g * hm;
    let t = traceless_traces(&ho, &g_inv);
    let det_o = det_g(&ho, &g_inv);
    let h2 = hm * hm;
    let r1 = det - (32.0 / 3.0 * h2 * h2 - 4.0 * h2 * n2 + 4.0 / 3.0 * hm * n3 + n2 * n2 / 8.0 - n4 / 4.0);
    let diff = h2 * h2 - 0.5 * h2 * t.sq + hm * t.tr3 / 3.0;
    let r2 = det - (diff + t.sq * t.sq / 8.0 - t.tr4 / 4.0);
    let r3 = (det - det_o) - diff;
    Ok((r1, r2, r3))
}

/// Euler density of a 4-dimensional metric, `(|Rm|² − 4|Ric|² + Scal²)/24`,
/// normalized so that its integral is `(4π²/3)χ`.
pub fn pfaffian4(r: &Tensor4, g: &DMatrix<f64>) -> Result<f64> {
    check_square(g, 4, "g")?;
    if r.dims() != [4; 4] {
        return Err(Error::Dimension(format!("curvature tensor has dimensions {:?}", r.dims())));
    }
    let gi = g
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Invalid("g is not positive definite".into()))?
        .inverse();
    // R^{ij}{}_{kl}: raise the first two slots
    let mut up = Tensor4::zeros([4; 4]);
    let mut ric = DMatrix::<f64>::zeros(4, 4);
    for i in 0..4 {
        for j in 0..4 {
            for k in 0..4 {
                for l in 0..4 {
                    let mut v = 0.0;
                    for a in 0..4 {
                        for b in 0..4 {
                            v += gi[(i, a)] * gi[(j, b)] * r.get(a, b, k, l);
                        }
                    }
                    up.set(i, j, k, l, v);
                }
            }
            for a in 0..4 {
                for b in 0..4 {
                    ric[(j, b)] += gi[(i, a)] * r.get(i, j, a, b);
                }
            }
        }
    }
    let mut rm2 = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            for k in 0..4 {
                for l in 0..4 {
                    rm2 += up.get(i, j, k, l) * up.get(k, l, i, j);
                }
            }
        }
    }
    let ric_up = &gi * &ric;
    let ric2 = (&ric_up * &ric_up).trace();
    let scal = ric_up.trace();
    Ok((rm2 - 4.0 * ric2 + scal * scal) / 24.0)
}

/// `Γ(k/2)` for a positive integer `k`.
fn gamma_half(k: usize) -> f64 {
    let mut x = if k.is_multiple_of(2) { 1.0 } else { PI.sqrt() };
    let mut a = if k.is_multiple_of(2) { 2 } else { 1 };
    while a < k {
        x *= a as f64 / 2.0;
        a += 2;
    }
    x
}

/// Area of the unit `k`-sphere, `2π^{(k+1)/2} / Γ((k+1)/2)`.
pub fn sphere_area(k: usize) -> f64 {
    2.0 * PI.powf((k + 1) as f64 / 2.0) / gamma_half(k + 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sphere_areas() {
        assert!((sphere_area(1) - 2.0 * PI).abs() < 1e-14);
        assert!((sphere_area(2) - 4.0 * PI).abs() < 1e-14);
        assert!((sphere_area(3) - 2.0 * PI * PI).abs() < 1e-13);
        assert!((sphere_area(4) - 8.0 * PI * PI / 3.0).abs() < 1e-13);
    }

    #[test]
    fn lemma_example() {
        let ho = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![-2.5, -2.5, 2.5, 2.5]));
        assert_eq!(quartic_traceless_residual(&ho).unwrap(), 0.0);
        assert_eq!(ho.determinant(), 625.0 / 16.0);
        assert!(quartic_traceless_residual(&DMatrix::identity(4, 4)).is_err());
    }

    #[test]
    fn newton_at_identity_and_counterexample() {
        let id = DMatrix::<f64>::identity(4, 4);
        let (a, b, c) = newton_expansion_residuals(&id, &id).unwrap();
        assert!(a.abs() < 1e-14 && b.abs() < 1e-14 && c.abs() < 1e-14);
        let h = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 1.0, 6.0, 6.0]));
        let (_, _, r3) = newton_expansion_residuals(&h, &id).unwrap();
        assert!(r3.abs() < 1e-12);
        let ho = &h - &id * 3.5;
        assert_eq!(det_g(&h, &id) - det_g(&ho, &id), -49.0 / 16.0);
        let bad = -DMatrix::<f64>::identity(4, 4);
        assert!(newton_expansion_residuals(&h, &bad).is_err());
    }

    #[test]
    fn pfaffian_of_round_metric() {
        let g = DMatrix::<f64>::identity(4, 4) * 2.0;
        let mut r = Tensor4::zeros([4; 4]);
        for i in 0..4 {
            for j in 0..4 {
                for k in 0..4 {
                    for l in 0..4 {
                        r.set(i, j, k, l, g[(i, k)] * g[(j, l)] - g[(i, l)] * g[(j, k)]);
                    }
                }
            }
        }
        assert!((pfaffian4(&r, &g).unwrap() - 1.0).abs() < 1e-12);
    }
}
