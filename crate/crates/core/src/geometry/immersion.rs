use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{parse_expression, Expression, Program, VarFamily};
use crate::jet::Jet;

/// One chart coordinate range. Periodic ranges wrap; the others are open intervals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub min: f64,
    pub max: f64,
    #[serde(default)]
    pub periodic: bool,
}

impl Interval {
    pub fn open(min: f64, max: f64) -> Interval {
        Interval {
            min,
            max,
            periodic: false,
        }
    }

    pub fn periodic(min: f64, max: f64) -> Interval {
        Interval {
            min,
            max,
            periodic: true,
        }
    }

    pub fn length(&self) -> f64 {
        self.max - self.min
    }
}

/// A parametrized immersion `f: M^m → R^n` with codimension 1 or 2.
#[derive(Debug, Clone)]
pub struct Immersion {
    m: usize,
    n: usize,
    map: Program,
    domain: Vec<Interval>,
    flip_normal: bool,
    label: String,
}

impl Immersion {
    pub fn new(components: &[Expression], domain: Vec<Interval>) -> Result<Immersion> {
        let m = domain.len();
        for c in components {
            if c.family() == Some(VarFamily::Ambient) {
                return Err(Error::Invalid(format!(
                    "component `{c}` uses ambient variables; use u1..u{m}"
                )));
            }
        }
        let map = Program::from_expressions(components, m)?;
        Immersion::from_map(map, domain)
    }

    pub fn from_strs(components: &[&str], domain: Vec<Interval>) -> Result<Immersion> {
        let exprs = components
            .iter()
            .map(|s| parse_expression(s))
            .collect::<Result<Vec<_>>>()?;
        Immersion::new(&exprs, domain)
    }

    pub(crate) fn from_map(map: Program, domain: Vec<Interval>) -> Result<Immersion> {
        let m = domain.len();
        let n = map.outputs();
        if m < 1 {
            return Err(Error::Dimension("an immersion needs at least one chart variable".into()));
        }
        if !(n == m + 1 || n == m + 2) {
            return Err(Error::Dimension(format!(
                "codimension must be 1 or 2 (m = {m}, n = {n})"
            )));
        }
        if map.arity() > m {
            return Err(Error::Dimension(format!(
                "components use {} chart variables but the domain has {m}",
                map.arity()
            )));
        }
        for iv in &domain {
            if !(iv.max > iv.min) || !iv.min.is_finite() || !iv.max.is_finite() {
                return Err(Error::Invalid(format!("empty or unbounded interval {iv:?}")));
            }
        }
        let mut map = map;
        if map.arity() < m {
            // pad so that evaluation accepts exactly m inputs
            map = Program::from_expressions(
                &(0..n).map(|k| map.output(k)).collect::<Vec<_>>(),
                m,
            )?;
        }
        Ok(Immersion {
            m,
            n,
            map,
            domain,
            flip_normal: false,
            label: String::new(),
        })
    }

    pub fn with_flip_normal(mut self, flip: bool) -> Immersion {
        self.flip_normal = flip;
        self
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Immersion {
        self.label = label.into();
        self
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn codim(&self) -> usize {
        self.n - self.m
    }

    pub fn map(&self) -> &Program {
        &self.map
    }

    pub fn domain(&self) -> &[Interval] {
        &self.domain
    }

    pub fn flip_normal(&self) -> bool {
        self.flip_normal
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn component(&self, k: usize) -> Expression {
        self.map.output(k)
    }

    /// `f(p)`.
    pub fn position(&self, p: &[f64]) -> Vec<f64> {
        self.map.eval(p)
    }

    /// Component jets of the requested order at `p`.
    pub fn jets(&self, p: &[f64], order: usize) -> Vec<Jet> {
        self.map.eval(&Jet::seed(p, order))
    }

    /// `t · f`.
    pub fn scaled(&self, t: f64) -> Immersion {
        let comps: Vec<Expression> = (0..self.n).map(|k| self.component(k).scaled(t)).collect();
        let mut out = Immersion::new(&comps, self.domain.clone()).expect("scaling keeps dimensions");
        out.flip_normal = self.flip_normal;
        out.label = format!("{}*{}", t, self.label);
        out
    }

    /// Replaces the map, keeping domain, orientation switch and label.
    pub(crate) fn with_map(&self, map: Program) -> Result<Immersion> {
        let mut out = Immersion::from_map(map, self.domain.clone())?;
        out.flip_normal = self.flip_normal;
        out.label = self.label.clone();
        Ok(out)
    }
}

/// The JSON surface description accepted by the CLI.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceSpec {
    pub m: usize,
    pub n: usize,
    pub components: Vec<String>,
    pub domain: Vec<Interval>,
    #[serde(default)]
    pub flip_normal: bool,
}

impl SurfaceSpec {
    pub fn build(&self) -> Result<Immersion> {
        if self.domain.len() != self.m {
            return Err(Error::Dimension(format!(
                "m = {} but {} domain intervals given",
                self.m,
                self.domain.len()
            )));
        }
        if self.components.len() != self.n {
            return Err(Error::Dimension(format!(
                "n = {} but {} components given",
                self.n,
                self.components.len()
            )));
        }
        let comps: Vec<&str> = self.components.iter().map(String::as_str).collect();
        Ok(Immersion::from_strs(&comps, self.domain.clone())?.with_flip_normal(self.flip_normal))
    }
}

/// Ambient metric `e^{2φ} δ` on `R^n`; flat when `φ` is absent.
#[derive(Debug, Clone)]
pub struct AmbientMetric {
    n: usize,
    phi: Option<Expression>,
}

impl AmbientMetric {
    pub fn flat(n: usize) -> AmbientMetric {
        AmbientMetric { n, phi: None }
    }

    /// `e^{2φ} δ`; `phi` must be written in `x1..xn`.
    pub fn conformal(n: usize, phi: Expression) -> Result<AmbientMetric> {
        if phi.family() == Some(VarFamily::Chart) {
            return Err(Error::Invalid(format!(
                "conformal factor `{phi}` must use ambient variables x1..x{n}"
            )));
        }
        if phi.arity() > n {
            return Err(Error::UnknownIdentifier(format!("x{}", phi.arity())));
        }
        Ok(AmbientMetric {
            n,
            phi: if phi.is_zero() { None } else { Some(phi) },
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn phi(&self) -> Option<&Expression> {
        self.phi.as_ref()
    }

    pub fn is_flat(&self) -> bool {
        self.phi.is_none()
    }

    /// `e^{2ψ} · self`.
    pub fn rescaled(&self, psi: &Expression) -> Result<AmbientMetric> {
        let total = match &self.phi {
            None => psi.clone(),
            Some(phi) => phi.add(psi),
        };
        AmbientMetric::conformal(self.n, total)
    }

    /// `φ(x)`.
    pub fn phi_at(&self, x: &[f64]) -> f64 {
        match &self.phi {
            None => 0.0,
            Some(phi) => phi.eval(&x[..self.n]),
        }
    }

    /// `φ`, `∂φ` and `∂²φ` at an ambient point.
    pub fn phi_derivatives(&self, x: &[f64]) -> (f64, Vec<f64>, Vec<Vec<f64>>) {
        let n = self.n;
        match &self.phi {
            None => (0.0, vec![0.0; n], vec![vec![0.0; n]; n]),
            Some(phi) => {
                let j = phi.eval(&Jet::seed(&x[..n], 2));
                let grad = (0..n).map(|a| j.d1(a)).collect();
                let hess = (0..n)
                    .map(|a| (0..n).map(|b| j.d2(a, b)).collect())
                    .collect();
                (j.value(), grad, hess)
            }
        }
    }

    /// `φ ∘ f` as chart jets, given the component jets of `f`.
    pub fn phi_on(&self, components: &[Jet]) -> Jet {
        match &self.phi {
            None => Jet::constant(0.0),
            Some(phi) => phi.eval(components),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn codimension_is_checked() {
        let d = vec![Interval::periodic(0.0, 1.0)];
        assert!(Immersion::from_strs(&["u1"], d.clone()).is_err());
        assert!(Immersion::from_strs(&["cos(u1)", "sin(u1)"], d.clone()).is_ok());
        assert!(Immersion::from_strs(&["u1", "u1", "u1", "u1"], d).is_err());
    }

    #[test]
    fn ambient_variables_rejected_in_components() {
        let d = vec![Interval::periodic(0.0, 1.0)];
        assert!(Immersion::from_strs(&["x1", "u1"], d).is_err());
    }

    #[test]
    fn constant_component_padding() {
        let d = vec![Interval::periodic(0.0, 1.0), Interval::open(-1.0, 1.0)];
        let f = Immersion::from_strs(&["u1", "u2", "0"], d).unwrap();
        assert_eq!(f.position(&[0.5, 0.25]), vec![0.5, 0.25, 0.0]);
        let f = Immersion::from_strs(&["u1", "1", "0"], vec![Interval::open(0.0, 1.0), Interval::open(0.0, 1.0)]).unwrap();
        assert_eq!(f.map().arity(), 2);
    }

    #[test]
    fn spec_json_round_trip() {
        let json = r#"{ "m": 2, "n": 3, "components": ["cos(u1)*sin(u2)", "sin(u1)*sin(u2)", "cos(u2)"],
            "domain": [{"min":0,"max":6.283185307179586,"periodic":true}, {"min":0,"max":3.141592653589793}] }"#;
        let spec: SurfaceSpec = serde_json::from_str(json).unwrap();
        assert!(!spec.flip_normal);
        let f = spec.build().unwrap();
        assert_eq!((f.m(), f.n(), f.codim()), (2, 3, 1));
    }

    #[test]
    fn rescaling_adds_factors() {
        let a = AmbientMetric::conformal(3, parse_expression("0.1*x1").unwrap()).unwrap();
        let b = a.rescaled(&parse_expression("0.2*x2").unwrap()).unwrap();
        assert!((b.phi_at(&[1.0, 1.0, 0.0]) - 0.3).abs() < 1e-15);
        assert!(AmbientMetric::conformal(3, parse_expression("u1").unwrap()).is_err());
        assert!(AmbientMetric::conformal(3, parse_expression("0").unwrap()).unwrap().is_flat());
    }
}
