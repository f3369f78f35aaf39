//! Built-in parametrized surfaces and their textual names.
//!
//! Names look like function calls: `sphere(2,1)`, `ellipsoid(1,1,1,1,1.5)`,
//! `torus(2,1)`, `clifford_torus(1)`, `graph(u1^2 - u2^2)`. Numeric arguments
//! are constant expressions, so `torus(sqrt(2),1)` works.

use std::f64::consts::PI;

use super::immersion::{Immersion, Interval};
use crate::error::{Error, Result};
use crate::expr::parse_expression;

fn num(v: f64) -> String {
    format!("({v:?})")
}

/// Hyperspherical chart of the radius-`r` sphere `S^m`, padded with zero
/// coordinates up to `R^n`. Inward normal, so `H = 1/r`.
pub fn sphere_in(m: usize, r: f64, n: usize) -> Result<Immersion> {
    ellipsoid_in(&vec![r; m + 1], n).map(|f| f.with_label(format!("sphere({m},{})", r)))
}

pub fn sphere(m: usize, r: f64) -> Result<Immersion> {
    sphere_in(m, r, m + 1)
}

/// `Σ x_k² / a_k² = 1` through the hyperspherical chart.
pub fn ellipsoid(semiaxes: &[f64]) -> Result<Immersion> {
    ellipsoid_in(semiaxes, semiaxes.len())
}

fn ellipsoid_in(semiaxes: &[f64], n: usize) -> Result<Immersion> {
    let k = semiaxes.len();
    if k < 2 {
        return Err(Error::Invalid("an ellipsoid needs at least two semiaxes".into()));
    }
    if semiaxes.iter().any(|a| !(*a > 0.0) || !a.is_finite()) {
        return Err(Error::Invalid(format!("semiaxes must be positive: {semiaxes:?}")));
    }
    let m = k - 1;
    let mut comps = Vec::with_capacity(n);
    let mut prefix = String::new();
    for (i, a) in semiaxes.iter().enumerate() {
        let trig = if i < m {
            format!("cos(u{})", i + 1)
        } else {
            format!("sin(u{})", m)
        };
        comps.push(format!("{}{}*{}", num(*a), prefix, trig));
        if i + 1 < m {
            prefix.push_str(&format!("*sin(u{})", i + 1));
        }
    }
    comps.resize(n, "0".to_string());
    let mut domain = vec![Interval::open(0.0, PI); m - 1];
    domain.push(Interval::periodic(0.0, 2.0 * PI));
    let strs: Vec<&str> = comps.iter().map(String::as_str).collect();
    Ok(Immersion::from_strs(&strs, domain)?
        .with_flip_normal(true)
        .with_label(format!(
            "ellipsoid({})",
            semiaxes.iter().map(|a| a.to_string()).collect::<Vec<_>>().join(",")
        )))
}

/// Torus of revolution about the `x3` axis.
pub fn torus(big: f64, small: f64) -> Result<Immersion> {
    if !(small > 0.0 && big > small) {
        return Err(Error::Invalid(format!("torus needs R > r > 0, got ({big}, {small})")));
    }
    let (a, b) = (num(big), num(small));
    let ring = format!("({a} + {b}*cos(u2))");
    let comps = [
        format!("{ring}*cos(u1)"),
        format!("{ring}*sin(u1)"),
        format!("{b}*sin(u2)"),
    ];
    let strs: Vec<&str> = comps.iter().map(String::as_str).collect();
    Ok(Immersion::from_strs(&strs, vec![Interval::periodic(0.0, 2.0 * PI); 2])?
        .with_label(format!("torus({big},{small})")))
}

/// `r/√2 (cos u1, sin u1, cos u2, sin u2)`, radially modulated by
/// `1 + eps·sin(u1 + 2u2)`.
pub fn clifford_torus(r: f64, eps: f64) -> Result<Immersion> {
    if !(r > 0.0) || eps.abs() >= 0.5 {
        return Err(Error::Invalid(format!("clifford_torus needs r > 0 and |eps| < 0.5, got ({r}, {eps})")));
    }
    let s = if eps == 0.0 {
        num(r / 2f64.sqrt())
    } else {
        format!("{}*(1 + {}*sin(u1 + 2*u2))", num(r / 2f64.sqrt()), num(eps))
    };
    let comps = [
        format!("{s}*cos(u1)"),
        format!("{s}*sin(u1)"),
        format!("{s}*cos(u2)"),
        format!("{s}*sin(u2)"),
    ];
    let strs: Vec<&str> = comps.iter().map(String::as_str).collect();
    let label = if eps == 0.0 {
        format!("clifford_torus({r})")
    } else {
        format!("clifford_torus({r},{eps})")
    };
    Ok(Immersion::from_strs(&strs, vec![Interval::periodic(0.0, 2.0 * PI); 2])?.with_label(label))
}

/// Stereographic projection into `R³` of the Clifford torus in the unit `S³`.
pub fn stereographic_clifford() -> Result<Immersion> {
    let den = "(1 - sin(u2)/sqrt(2))";
    let comps = [
        format!("cos(u1)/sqrt(2)/{den}"),
        format!("sin(u1)/sqrt(2)/{den}"),
        format!("cos(u2)/sqrt(2)/{den}"),
    ];
    let strs: Vec<&str> = comps.iter().map(String::as_str).collect();
    Ok(Immersion::from_strs(&strs, vec![Interval::periodic(0.0, 2.0 * PI); 2])?
        .with_label("stereographic_clifford"))
}

/// The graph `(u1, u2, z(u1,u2))` over `(-1,1)²`.
pub fn graph(z: &str) -> Result<Immersion> {
    let comps = ["u1", "u2", z];
    Ok(Immersion::from_strs(&comps, vec![Interval::open(-1.0, 1.0); 2])?.with_label(format!("graph({z})")))
}

fn split_args(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, c) in text.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => depth -= 1,
            ',' if depth == 0 => {
                out.push(text[start..i].trim());
                start = i + 1;
            }
            _ => {}
        }
    }
    let last = text[start..].trim();
    if !last.is_empty() || !out.is_empty() {
        out.push(last);
    }
    out
}

fn constant(arg: &str) -> Result<f64> {
    let e = parse_expression(arg)?;
    if e.arity() > 0 {
        return Err(Error::Invalid(format!("surface argument `{arg}` must be a constant")));
    }
    let v = e.eval(&[] as &[f64]);
    if !v.is_finite() {
        return Err(Error::Invalid(format!("surface argument `{arg}` is not finite")));
    }
    Ok(v)
}

fn dimension(arg: &str) -> Result<usize> {
    let v = constant(arg)?;
    if v.fract() != 0.0 || !(1.0..=4.0).contains(&v) {
        return Err(Error::Invalid(format!("dimension `{arg}` must be an integer in 1..=4")));
    }
    Ok(v as usize)
}

/// Builds a surface from its name, e.g. `torus(2,1)`.
pub fn named(text: &str) -> Result<Immersion> {
    let text = text.trim();
    let (name, args) = match (text.find('('), text.ends_with(')')) {
        (Some(open), true) => (&text[..open], split_args(&text[open + 1..text.len() - 1])),
        (None, _) => (text, Vec::new()),
        _ => return Err(Error::Invalid(format!("malformed surface name `{text}`"))),
    };
    let arity_err = |want: &str| Error::Invalid(format!("`{name}` takes {want} arguments, got {}", args.len()));
    match name.trim() {
        "sphere" => match args.len() {
            2 => sphere(dimension(args[0])?, constant(args[1])?),
            3 => {
                let (m, n) = (dimension(args[0])?, constant(args[2])?);
                if n != (m + 1) as f64 && n != (m + 2) as f64 {
                    return Err(Error::Dimension(format!("sphere({m},r,n) needs n = {} or {}", m + 1, m + 2)));
                }
                sphere_in(m, constant(args[1])?, n as usize)
            }
            _ => Err(arity_err("2 or 3")),
        },
        "ellipsoid" => {
            let axes = args.iter().map(|a| constant(a)).collect::<Result<Vec<_>>>()?;
            ellipsoid(&axes)
        }
        "torus" => match args.len() {
            2 => torus(constant(args[0])?, constant(args[1])?),
            _ => Err(arity_err("2")),
        },
        "clifford_torus" => match args.len() {
            0 => clifford_torus(1.0, 0.0),
            1 => clifford_torus(constant(args[0])?, 0.0),
            2 => clifford_torus(constant(args[0])?, constant(args[1])?),
            _ => Err(arity_err("1 or 2")),
        },
        "stereographic_clifford" if args.is_empty() => stereographic_clifford(),
        "graph" => match args.len() {
            1 => graph(args[0]),
            _ => Err(arity_err("1")),
        },
        _ => Err(Error::UnknownIdentifier(format!("surface `{text}`"))),
    }
}
