//! Tensor-product quadrature over chart domains.
//!
//! Periodic coordinates use the uniform trapezoidal rule, which is spectrally
//! accurate for smooth periodic integrands; the others use Gauss–Legendre.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{frame_at, AmbientMetric, Immersion, Interval, PointFrame};

/// Smallest resolution accepted per coordinate.
pub const MIN_RESOLUTION: usize = 3;

/// Gauss–Legendre nodes and weights on `[-1, 1]`, ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Tricomi's initial guess, then Newton on P_n
        let k = (i + 1) as f64;
        let nf = n as f64;
        let mut z = (std::f64::consts::PI * (k - 0.25) / (nf + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, z);
        if d != 0.0 {
            dp = d;
        }
        let weight = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = weight;
        w[n - 1 - i] = weight;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

/// `(P_n(z), P_n'(z))` by the three-term recurrence.
fn legendre(n: usize, z: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, z);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    (p1, nf * (z * p1 - p0) / (z * z - 1.0))
}

/// One-dimensional rule on an interval.
pub fn rule_1d(iv: &Interval, n: usize) -> (Vec<f64>, Vec<f64>) {
    if iv.periodic {
        let h = iv.length() / n as f64;
        ((0..n).map(|k| iv.min + k as f64 * h).collect(), vec![h; n])
    } else {
        let (x, w) = gauss_legendre(n);
        let half = 0.5 * iv.length();
        let mid = 0.5 * (iv.min + iv.max);
        (
            x.iter().map(|t| mid + half * t).collect(),
            w.iter().map(|v| v * half).collect(),
        )
    }
}

/// Tensor-product nodes and weights, last coordinate varying fastest.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuadratureGrid {
    pub nodes: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    pub resolution: Vec<usize>,
}

impl QuadratureGrid {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.resolution.len()
    }
}

pub fn build_grid(domain: &[Interval], resolution: &[usize]) -> Result<QuadratureGrid> {
    if domain.len() != resolution.len() {
        return Err(Error::Dimension(format!(
            "{} resolutions given for a {}-dimensional domain",
            resolution.len(),
            domain.len()
        )));
    }
    if let Some(&r) = resolution.iter().find(|&&r| r < MIN_RESOLUTION) {
        return Err(Error::Invalid(format!(
            "resolution {r} is below the minimum of {MIN_RESOLUTION} nodes per coordinate"
        )));
    }
    let rules: Vec<(Vec<f64>, Vec<f64>)> = domain.iter().zip(resolution).map(|(iv, &n)| rule_1d(iv, n)).collect();
    let total: usize = resolution.iter().product();
    let mut nodes = Vec::with_capacity(total);
    let mut weights = Vec::with_capacity(total);
    let mut idx = vec![0usize; domain.len()];
    for _ in 0..total {
        nodes.push(idx.iter().enumerate().map(|(d, &k)| rules[d].0[k]).collect());
        weights.push(idx.iter().enumerate().map(|(d, &k)| rules[d].1[k]).product());
        for d in (0..idx.len()).rev() {
            idx[d] += 1;
            if idx[d] < resolution[d] {
                break;
            }
            idx[d] = 0;
        }
    }
    Ok(QuadratureGrid {
        nodes,
        weights,
        resolution: resolution.to_vec(),
    })
}

/// Same resolution in every coordinate.
pub fn uniform_grid(domain: &[Interval], n: usize) -> Result<QuadratureGrid> {
    build_grid(domain, &vec![n; domain.len()])
}

/// Default per-coordinate resolution for an `m`-dimensional chart.
pub fn default_resolution(m: usize) -> usize {
    if m <= 2 {
        48
    } else {
        16
    }
}

/// Upper bound on the per-coordinate resolution of 4-dimensional grids.
pub const MAX_RESOLUTION_4D: usize = 24;

/// Result of integrating one scalar over a grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Integral {
    pub value: f64,
    /// Smallest integrand value over the nodes.
    pub min_integrand: f64,
    /// `Σ w_k vol_k`.
    pub area: f64,
}

/// Integrates `integrand(frame)` against `dμ_g` over every grid node.
///
/// Nodes are evaluated in parallel; the sum runs sequentially in node order,
/// so the result does not depend on the thread count.
pub fn integrate<F>(f: &Immersion, amb: &AmbientMetric, grid: &QuadratureGrid, integrand: F) -> Result<Integral>
where
    F: Fn(&PointFrame) -> Result<f64> + Sync,
{
    integrate_many(f, amb, grid, 1, |fr| Ok(vec![integrand(fr)?])).map(|v| v[0])
}

/// Like [`integrate`], for `k` integrands sharing each frame.
pub fn integrate_many<F>(
    f: &Immersion,
    amb: &AmbientMetric,
    grid: &QuadratureGrid,
    k: usize,
    integrand: F,
) -> Result<Vec<Integral>>
where
    F: Fn(&PointFrame) -> Result<Vec<f64>> + Sync,
{
    if grid.dim() != f.m() {
        return Err(Error::Dimension(format!(
            "grid has {} coordinates but the immersion has {}",
            grid.dim(),
            f.m()
        )));
    }
    let samples: Vec<Result<(f64, Vec<f64>)>> = grid
        .nodes
        .par_iter()
        .map(|p| {
            let fr = frame_at(f, amb, p)?;
            let vals = integrand(&fr)?;
            debug_assert_eq!(vals.len(), k);
            if vals.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite { point: p.clone() });
            }
            Ok((fr.vol, vals))
        })
        .collect();
    let mut out = vec![
        Integral {
            value: 0.0,
            min_integrand: f64::INFINITY,
            area: 0.0,
        };
        k
    ];
    for (sample, w) in samples.into_iter().zip(&grid.weights) {
        let (vol, vals) = sample?;
        for (o, v) in out.iter_mut().zip(vals) {
            o.value += w * v * vol;
            o.area += w * vol;
            o.min_integrand = o.min_integrand.min(v);
        }
    }
    Ok(out)
}

/// Value at `n` plus the Richardson-style error estimate `|I(n) − I(n/2)|`.
pub fn integrate_with_estimate<F>(
    f: &Immersion,
    amb: &AmbientMetric,
    n: usize,
    integrand: F,
) -> Result<(Integral, f64)>
where
    F: Fn(&PointFrame) -> Result<f64> + Sync,
{
    let fine = integrate(f, amb, &uniform_grid(f.domain(), n)?, &integrand)?;
    let coarse_n = (n / 2).max(MIN_RESOLUTION);
    let err = if coarse_n < n {
        let coarse = integrate(f, amb, &uniform_grid(f.domain(), coarse_n)?, &integrand)?;
        (fine.value - coarse.value).abs()
    } else {
        0.0
    };
    Ok((fine, err))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::surfaces;
    use std::f64::consts::PI;

    #[test]
    fn legendre_rules_integrate_polynomials() {
        for n in 1..=20 {
            let (x, w) = gauss_legendre(n);
            assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-13);
            assert!(x.windows(2).all(|p| p[0] < p[1]));
            for deg in 0..2 * n {
                let exact = if deg % 2 == 0 { 2.0 / (deg as f64 + 1.0) } else { 0.0 };
                let approx: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
                assert!((approx - exact).abs() < 1e-13, "n={n} deg={deg}");
            }
        }
    }

    #[test]
    fn cubic_with_two_nodes() {
        let (x, w) = rule_1d(&Interval::open(0.0, 1.0), 2);
        let v: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(3)).sum();
        assert!((v - 0.25).abs() < 1e-15);
    }

    #[test]
    fn periodic_sine_squared() {
        for n in 3..8 {
            let (x, w) = rule_1d(&Interval::periodic(0.0, 2.0 * PI), n);
            let v: f64 = x.iter().zip(&w).map(|(x, w)| w * x.sin().powi(2)).sum();
            assert!((v - PI).abs() < 1e-14, "n={n}");
        }
    }

    #[test]
    fn grid_shape_and_weights() {
        let d = [Interval::open(-1.0, 2.0), Interval::periodic(0.0, 5.0), Interval::open(0.0, 0.5)];
        let g = build_grid(&d, &[4, 5, 3]).unwrap();
        assert_eq!(g.len(), 60);
        assert!((g.weights.iter().sum::<f64>() - 7.5).abs() < 1e-12);
        assert!(g.weights.iter().all(|w| *w > 0.0));
        assert!(build_grid(&d, &[4, 2, 3]).is_err());
        assert!(build_grid(&d, &[4, 5]).is_err());
    }

    #[test]
    fn sphere_area() {
        let f = surfaces::sphere(2, 1.0).unwrap();
        let g = build_grid(f.domain(), &[32, 64]).unwrap();
        let a = integrate(&f, &AmbientMetric::flat(3), &g, |_| Ok(1.0)).unwrap();
        assert!((a.value - 4.0 * PI).abs() < 1e-10);
        let h = integrate(&f, &AmbientMetric::flat(3), &g, |fr| Ok(fr.mean_sq())).unwrap();
        assert!((h.value - 4.0 * PI).abs() < 1e-10);
    }

    #[test]
    fn torus_total_curvature_vanishes() {
        let f = surfaces::torus(2.0, 1.0).unwrap();
        let g = uniform_grid(f.domain(), 48).unwrap();
        let k = integrate(&f, &AmbientMetric::flat(3), &g, |fr| Ok(fr.gauss_curvature())).unwrap();
        assert!(k.value.abs() < 1e-10);
    }
}
