use nalgebra::DMatrix;

use super::frame::riemann_from_metric_jets;
use super::tensor4::Tensor4;
use crate::error::{Error, Result};
use crate::expr::{parse_expression, Expression, Func, Program, VarFamily};
use crate::jet::Jet;

/// A Riemannian metric on a coordinate patch, `g_ij(u)` given symbolically.
#[derive(Debug, Clone)]
pub struct MetricChart {
    dim: usize,
    /// `d²` outputs, row-major, symmetric.
    entries: Program,
}

impl MetricChart {
    /// `entries` is either the full `d×d` row-major matrix or its upper triangle
    /// `g11, g12, .., g1d, g22, ..`.
    pub fn new(dim: usize, entries: &[Expression]) -> Result<MetricChart> {
        if !(1..=4).contains(&dim) {
            return Err(Error::Dimension(format!("metric charts support 1..4 dimensions, got {dim}")));
        }
        let full: Vec<Expression> = if entries.len() == dim * dim {
            entries.to_vec()
        } else if entries.len() == dim * (dim + 1) / 2 {
            let mut upper = entries.iter();
            let mut m = vec![vec![None; dim]; dim];
            for i in 0..dim {
                for j in i..dim {
                    let e = upper.next().expect("length checked").clone();
                    m[i][j] = Some(e.clone());
                    m[j][i] = Some(e);
                }
            }
            m.into_iter().flatten().map(|e| e.expect("filled")).collect()
        } else {
            return Err(Error::Dimension(format!(
                "a {dim}-dimensional metric needs {} or {} entries, got {}",
                dim * (dim + 1) / 2,
                dim * dim,
                entries.len()
            )));
        };
        if full.iter().any(|e| e.family() == Some(VarFamily::Ambient)) {
            return Err(Error::Invalid("metric entries must use chart variables".into()));
        }
        Ok(MetricChart {
            dim,
            entries: Program::from_expressions(&full, dim)?,
        })
    }

    pub fn from_strs(dim: usize, entries: &[&str]) -> Result<MetricChart> {
        let exprs = entries
            .iter()
            .map(|s| parse_expression(s))
            .collect::<Result<Vec<_>>>()?;
        MetricChart::new(dim, &exprs)
    }

    /// The Euclidean metric `δ`.
    pub fn flat(dim: usize) -> MetricChart {
        let entries: Vec<Expression> = (0..dim * dim)
            .map(|k| Expression::constant(if k / dim == k % dim { 1.0 } else { 0.0 }))
            .collect();
        MetricChart::new(dim, &entries).expect("valid dimension")
    }

    /// `du1² + sin²(u1) du2²` on the unit sphere.
    pub fn round_sphere() -> MetricChart {
        MetricChart::from_strs(2, &["1", "0", "sin(u1)^2"]).expect("well-formed")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entry(&self, i: usize, j: usize) -> Expression {
        self.entries.output(i * self.dim + j)
    }

    /// `e^{2φ} g` for `φ` in chart variables.
    pub fn conformal(&self, phi: &Expression) -> Result<MetricChart> {
        if phi.family() == Some(VarFamily::Ambient) {
            return Err(Error::Invalid("conformal factor on a chart must use u-variables".into()));
        }
        let factor = phi.scaled(2.0).call(Func::Exp);
        let entries: Vec<Expression> = (0..self.dim * self.dim)
            .map(|k| factor.mul(&self.entries.output(k)))
            .collect();
        MetricChart::new(self.dim, &entries)
    }

    pub fn metric_at(&self, p: &[f64]) -> DMatrix<f64> {
        let v = self.entries.eval(p);
        DMatrix::from_row_slice(self.dim, self.dim, &v)
    }

    /// Jets of `g_ij` at `p`.
    pub fn metric_jets(&self, p: &[f64], order: usize) -> Vec<Vec<Jet>> {
        let v = self.entries.eval(&Jet::seed(p, order));
        (0..self.dim)
            .map(|i| v[i * self.dim..(i + 1) * self.dim].to_vec())
            .collect()
    }

    /// `R_{ijkl}` from the Christoffel symbols of the chart metric.
    pub fn riemann(&self, p: &[f64]) -> Result<Tensor4> {
        riemann_from_metric_jets(&self.metric_jets(p, 2))
    }
}
