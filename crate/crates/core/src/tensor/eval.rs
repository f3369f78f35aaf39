use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{ContractionSum, ContractionTerm, FactorKind, Sort};
use crate::error::{Error, Result};
use crate::geometry::PointFrame;

/// Components of one factor, flattened row-major over its slots.
fn factor_data(kind: FactorKind, frame: &PointFrame) -> Result<Vec<f64>> {
    let (m, c) = (frame.m, frame.codim);
    use FactorKind::*;
    let scalar_only = |name: &str| {
        if c != 1 {
            Err(Error::Evaluation(format!(
                "scalar `{name}` needs a codimension-1 frame; use the normal-valued form with three slots"
            )))
        } else {
            Ok(())
        }
    };
    Ok(match kind {
        MetricInverseTangent => frame.g_inv.transpose().as_slice().to_vec(),
        MetricInverseNormal => DMatrix::<f64>::identity(c, c).as_slice().to_vec(),
        IntrinsicRiemann => frame.riemann.data().to_vec(),
        NormalCurvature => frame.normal_curvature.data().to_vec(),
        TracelessH { normal: false } => {
            scalar_only("ho")?;
            frame.traceless[0].transpose().as_slice().to_vec()
        }
        MeanHTimesMetric { normal: false } => {
            scalar_only("Hg")?;
            (&frame.g * frame.mean[0]).transpose().as_slice().to_vec()
        }
        TracelessH { normal: true } | MeanHTimesMetric { normal: true } => {
            let mut v = Vec::with_capacity(m * m * c);
            for i in 0..m {
                for j in 0..m {
                    for a in 0..c {
                        v.push(match kind {
                            TracelessH { .. } => frame.traceless[a][(i, j)],
                            _ => frame.mean[a] * frame.g[(i, j)],
                        });
                    }
                }
            }
            v
        }
    })
}

/// Numeric value of a complete contraction at a frame.
///
/// Tangent indices run over chart coordinates and normal indices over the
/// orthonormal normal frame, where `ḡ⁻¹` is the identity.
pub fn evaluate_term(term: &ContractionTerm, frame: &PointFrame) -> Result<f64> {
    let nslots = term.slot_count();
    let mut pair_of = vec![0usize; nslots];
    let mut ranges = Vec::with_capacity(term.pairing().len());
    let sorts: Vec<Sort> = term.factors().iter().flat_map(|f| f.slots().iter().copied()).collect();
    for (k, &(a, b)) in term.pairing().iter().enumerate() {
        pair_of[a] = k;
        pair_of[b] = k;
        ranges.push(match sorts[a] {
            Sort::Tangent => frame.m,
            Sort::Normal => frame.codim,
        });
    }
    // (data, per-slot (pair, stride))
    let offsets = term.offsets();
    let mut factors: Vec<(Vec<f64>, Vec<(usize, usize)>)> = Vec::with_capacity(term.factors().len());
    for (k, &kind) in term.factors().iter().enumerate() {
        let data = factor_data(kind, frame)?;
        let dims: Vec<usize> = kind
            .slots()
            .iter()
            .map(|s| match s {
                Sort::Tangent => frame.m,
                Sort::Normal => frame.codim,
            })
            .collect();
        let mut strides = vec![1usize; dims.len()];
        for s in (0..dims.len().saturating_sub(1)).rev() {
            strides[s] = strides[s + 1] * dims[s + 1];
        }
        if data.len() != dims.iter().product::<usize>() {
            return Err(Error::Evaluation(format!("frame data for `{}` has the wrong shape", kind.name())));
        }
        let slots = (0..kind.arity()).map(|s| (pair_of[offsets[k] + s], strides[s])).collect();
        factors.push((data, slots));
    }
    if ranges.contains(&0) {
        return Ok(0.0);
    }
    let mut idx = vec![0usize; ranges.len()];
    let mut total = 0.0;
    loop {
        let mut prod = 1.0;
        for (data, slots) in &factors {
            let at: usize = slots.iter().map(|&(p, st)| idx[p] * st).sum();
            prod *= data[at];
            if prod == 0.0 {
                break;
            }
        }
        total += prod;
        let mut d = 0;
        while d < idx.len() {
            idx[d] += 1;
            if idx[d] < ranges[d] {
                break;
            }
            idx[d] = 0;
            d += 1;
        }
        if d == idx.len() {
            break;
        }
    }
    Ok(total)
}

pub fn evaluate_sum(sum: &ContractionSum, frame: &PointFrame) -> Result<f64> {
    sum.terms()
        .iter()
        .map(|(c, t)| evaluate_term(t, frame).map(|v| c * v))
        .sum()
}

/// Pseudo-random frames for identity testing.
///
/// `g = I + 0.1·S` with `S` symmetric, entries uniform in `[-1, 1]`; each
/// second fundamental form has uniform entries; `R` and `R⊥` satisfy the
/// flat-ambient Gauss and Ricci equations.
#[derive(Debug, Clone)]
pub struct FrameSampler {
    m: usize,
    codim: usize,
    rng: ChaCha8Rng,
}

impl FrameSampler {
    pub const RNG_NAME: &'static str = "ChaCha8";

    pub fn new(m: usize, codim: usize, seed: u64) -> FrameSampler {
        FrameSampler {
            m,
            codim,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    pub fn symmetric(&mut self, scale: f64) -> DMatrix<f64> {
        let m = self.m;
        let mut s = DMatrix::zeros(m, m);
        for i in 0..m {
            for j in i..m {
                let v = scale * self.rng.random_range(-1.0..=1.0);
                s[(i, j)] = v;
                s[(j, i)] = v;
            }
        }
        s
    }

    pub fn metric(&mut self) -> DMatrix<f64> {
        DMatrix::identity(self.m, self.m) + self.symmetric(0.1)
    }

    pub fn frame(&mut self) -> PointFrame {
        let g = self.metric();
        let h = (0..self.codim).map(|_| self.symmetric(1.0)).collect();
        PointFrame::synthetic(g, h).expect("perturbed identity is positive definite")
    }
}

/// Randomized test of `A = B` on `trials` frames; `false` is certain.
///
/// Frames have `m = 2` and the codimension the sums require.
pub fn sums_equal_numeric(a: &ContractionSum, b: &ContractionSum, trials: usize, tol: f64) -> bool {
    let codim = if a.uses_normal_slots() || b.uses_normal_slots() { 2 } else { 1 };
    let mut sampler = FrameSampler::new(2, codim, 0x5eed);
    sampler.sums_equal(a, b, trials, tol)
}

impl FrameSampler {
    /// `max |A − B| < tol` over `trials` fresh frames; evaluation errors count as inequality.
    pub fn sums_equal(&mut self, a: &ContractionSum, b: &ContractionSum, trials: usize, tol: f64) -> bool {
        let diff = a.minus(b);
        for _ in 0..trials.max(1) {
            let fr = self.frame();
            match evaluate_sum(&diff, &fr) {
                Ok(v) if v.abs() < tol => {}
                _ => return false,
            }
        }
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::parse_sum;

    fn unit_sphere_frame() -> PointFrame {
        PointFrame::synthetic(DMatrix::identity(2, 2), vec![DMatrix::identity(2, 2)]).unwrap()
    }

    #[test]
    fn unit_sphere_values() {
        let fr = unit_sphere_frame();
        let ho = ContractionSum::traceless_sq(1);
        assert_eq!(evaluate_sum(&ho, &fr).unwrap(), 0.0);
        let scal = parse_sum("g-1(a,c) g-1(b,d) R(a,b,c,d)").unwrap();
        assert!((evaluate_sum(&scal, &fr).unwrap() - 2.0).abs() < 1e-15);
        let tr = parse_sum("g-1(a,b) Hg(a,b)").unwrap();
        assert!((evaluate_sum(&tr, &fr).unwrap() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn gauss_identity_holds_and_falsifier_fails() {
        let k = ContractionSum::gauss_curvature();
        let rhs = ContractionSum::mean_sq(2, 1).minus(&ContractionSum::traceless_sq(1).scaled(0.5));
        assert!(sums_equal_numeric(&k, &rhs, 20, 1e-10));
        assert!(sums_equal_numeric(&k, &k, 5, 1e-12));
        assert!(!sums_equal_numeric(&ContractionSum::traceless_sq(1), &ContractionSum::mean_sq(2, 1), 5, 1e-6));
        let k2 = ContractionSum::mean_sq(2, 2).minus(&ContractionSum::traceless_sq(2).scaled(0.5));
        assert!(sums_equal_numeric(&k, &k2, 20, 1e-10));
    }

    #[test]
    fn scalar_h_rejected_in_codim_two() {
        let mut s = FrameSampler::new(2, 2, 1);
        let fr = s.frame();
        assert!(evaluate_sum(&ContractionSum::traceless_sq(1), &fr).is_err());
        assert!(evaluate_sum(&ContractionSum::traceless_sq(2), &fr).is_ok());
    }

    #[test]
    fn weight_matches_scaling() {
        let mut s = FrameSampler::new(3, 1, 7);
        for text in [
            "g-1(a,c) g-1(b,d) R(a,b,c,d)",
            "g-1(a,b) Hg(a,b)",
            "g-1(a,b) g-1(c,d) g-1(e,f) ho(a,c) ho(d,e) ho(f,b)",
            "g-1(a,e) g-1(b,f) g-1(c,g) g-1(d,h) R(a,b,c,d) R(e,f,g,h)",
        ] {
            let sum = parse_sum(text).unwrap();
            let w = sum.weight().unwrap().unwrap();
            let fr = s.frame();
            let v = evaluate_sum(&sum, &fr).unwrap();
            let v2 = evaluate_sum(&sum, &fr.rescaled(2.0)).unwrap();
            assert!((v2 - 2f64.powi(w) * v).abs() <= 1e-12 * v2.abs().max(1e-300), "{text}");
        }
    }
}
