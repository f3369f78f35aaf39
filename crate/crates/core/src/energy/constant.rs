use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use super::algebra::det_g;
use crate::error::{Error, Result};

/// Half-width of the shift interval. A unit traceless vector has all entries
/// inside `(−1, 1)`, so every sign change of `Π(λ_i + s)` lies in `[−1, 1]`.
pub const CERTIFY_S: f64 = 1.0;

const SHIFT_GRID: usize = 129;
const POLISHED: usize = 8;

/// Worst configuration found by [`estimate_c`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CEstimate {
    pub n: usize,
    /// `−min det(h° + sI)` over unit traceless `h°`.
    pub c: f64,
    /// Eigenvalues of the worst `h°`.
    pub eigenvalues: Vec<f64>,
    pub shift: f64,
    pub samples: usize,
    pub seed: u64,
}

fn product(lambda: &[f64], s: f64) -> f64 {
    lambda.iter().map(|l| l + s).product()
}

/// `min_{|s| ≤ S} Π(λ_i + s)` and its minimizer.
fn min_over_shift(lambda: &[f64]) -> (f64, f64) {
    let step = 2.0 * CERTIFY_S / (SHIFT_GRID - 1) as f64;
    let at = |k: usize| -CERTIFY_S + k as f64 * step;
    let best = (0..SHIFT_GRID)
        .min_by(|&a, &b| product(lambda, at(a)).total_cmp(&product(lambda, at(b))))
        .unwrap();
    let (mut lo, mut hi) = (at(best.saturating_sub(1)), at((best + 1).min(SHIFT_GRID - 1)));
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - r * (hi - lo);
    let mut x2 = lo + r * (hi - lo);
    let (mut f1, mut f2) = (product(lambda, x1), product(lambda, x2));
    while hi - lo > 1e-13 {
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - r * (hi - lo);
            f1 = product(lambda, x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + r * (hi - lo);
            f2 = product(lambda, x2);
        }
    }
    let s = 0.5 * (lo + hi);
    let (v, s) = [(product(lambda, s), s), (product(lambda, at(best)), at(best))]
        .into_iter()
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .unwrap();
    (v, s)
}

fn normalize(v: &mut [f64]) {
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    v.iter_mut().for_each(|x| *x -= mean);
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= norm);
}

/// Coordinate descent on pairs of eigenvalues, keeping the trace at zero.
fn polish(lambda: &mut Vec<f64>) -> (f64, f64) {
    let mut best = min_over_shift(lambda);
    let mut delta = 0.05;
    let d = lambda.len();
    while delta > 1e-13 {
        let mut improved = false;
        for i in 0..d {
            for j in (i + 1)..d {
                for sign in [1.0, -1.0] {
                    let mut trial = lambda.clone();
                    trial[i] += sign * delta;
                    trial[j] -= sign * delta;
                    normalize(&mut trial);
                    let v = min_over_shift(&trial);
                    if v.0 < best.0 {
                        best = v;
                        *lambda = trial;
                        improved = true;
                    }
                }
            }
        }
        if !improved {
            delta *= 0.5;
        }
    }
    best
}

/// Sampling estimate of the smallest `C` with `det(h) + C‖h°‖^{2n} ≥ 0` for
/// symmetric `2n × 2n` matrices `h`, followed by local refinement of the
/// worst samples.
pub fn estimate_c(n: usize, samples: usize, seed: u64) -> Result<CEstimate> {
    if n == 0 {
        return Err(Error::Invalid("n must be at least 1".into()));
    }
    if samples == 0 {
        return Err(Error::Invalid("at least one sample is needed".into()));
    }
    let d = 2 * n;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pool: Vec<(f64, Vec<f64>)> = Vec::new();
    if n == 1 {
        pool.push((0.0, vec![0.5f64.sqrt(), -0.5f64.sqrt()]));
    }
    let draws: Vec<Vec<f64>> = (0..samples)
        .map(|_| {
            let mut v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
            normalize(&mut v);
            v
        })
        .collect();
    pool.extend(draws.into_par_iter().map(|v| (min_over_shift(&v).0, v)).collect::<Vec<_>>());
    pool.sort_by(|a, b| a.0.total_cmp(&b.0));
    pool.truncate(POLISHED);
    let polished: Vec<(f64, f64, Vec<f64>)> = pool
        .into_par_iter()
        .map(|(_, mut v)| {
            let (val, s) = polish(&mut v);
            (val, s, v)
        })
        .collect();
    let (val, shift, mut eigenvalues) =
        polished.into_iter().min_by(|a, b| a.0.total_cmp(&b.0)).expect("pool is nonempty");
    eigenvalues.sort_by(f64::total_cmp);
    Ok(CEstimate {
        n,
        c: (-val).max(0.0),
        eigenvalues,
        shift,
        samples,
        seed,
    })
}

/// Smallest value of `det_g(h) + c‖h°‖^{2n}` over `frames` random pairs
/// `(g, h)` of size `2n`, with `g = I + 0.1·S` and `h` uniform in `[−1, 1]`.
pub fn certify_c(n: usize, c: f64, frames: usize, seed: u64) -> f64 {
    const CHUNK: usize = 4096;
    let d = 2 * n;
    let chunks = frames.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k as u64);
            let mut sym = |scale: f64| {
                let mut a = DMatrix::<f64>::zeros(d, d);
                for i in 0..d {
                    for j in i..d {
                        let v = scale * rng.random_range(-1.0..=1.0);
                        a[(i, j)] = v;
                        a[(j, i)] = v;
                    }
                }
                a
            };
            let mut worst = f64::INFINITY;
            for _ in 0..CHUNK.min(frames - k * CHUNK) {
                let g = DMatrix::identity(d, d) + sym(0.1);
                let h = sym(1.0);
                let g_inv = g.clone().cholesky().expect("perturbed identity").inverse();
                let hm = (&g_inv * &h).trace() / d as f64;
                let ho = &h - &g * hm;
                let s = &g_inv * &ho;
                let norm_sq = (&s * &s).trace();
                worst = worst.min(det_g(&h, &g_inv) + c * norm_sq.powi(n as i32));
            }
            worst
        })
        .reduce(|| f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn surfaces_give_one_half() {
        let e = estimate_c(1, 10_000, 1).unwrap();
        assert!((e.c - 0.5).abs() < 1e-9, "{}", e.c);
        assert!(certify_c(1, e.c, 100_000, 2) >= -1e-8);
    }

    #[test]
    fn four_dimensional_constant() {
        let e = estimate_c(2, 10_000, 3).unwrap();
        assert!((e.c - 0.1875).abs() < 1e-9, "{e:?}");
        assert!(certify_c(2, e.c, 100_000, 4) >= -1e-8);
        assert!(certify_c(2, 0.9 * e.c, 100_000, 4) < 0.0 || e.c == 0.0);
    }
}
