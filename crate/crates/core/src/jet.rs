//! Truncated multivariate Taylor expansions.
//!
//! A [`Jet`] stores the Taylor coefficients `c_α` of a scalar function around
//! a fixed point, `f(p + δ) = Σ_{|α| ≤ order} c_α δ^α`, for up to
//! [`MAX_VARS`] variables and order at most [`MAX_ORDER`]. Arithmetic is the
//! truncated Cauchy product, so derivatives of arbitrary expressions come out
//! exact up to floating point rounding. Partial derivatives are recovered as
//! `∂^α f(p) = α! c_α`.
//!
//! Coefficient storage is a fixed-size array; the monomial bookkeeping lives
//! in a process-wide table of [`JetLayout`]s built on first use.

use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::OnceLock;

/// Largest number of variables a jet can carry.
pub const MAX_VARS: usize = 5;
/// Largest truncation order.
pub const MAX_ORDER: usize = 3;
/// Coefficient slots: enough for 4 variables at order 3 or 5 variables at order 2.
pub const CAPACITY: usize = 35;

/// Monomial bookkeeping for one `(nvars, order)` pair.
#[derive(Debug)]
pub struct JetLayout {
    nvars: usize,
    order: usize,
    exponents: Vec<[u8; MAX_VARS]>,
    /// `(i, j, k)`: coefficient `k` of a product receives `a_i * b_j`.
    products: Vec<(u8, u8, u8)>,
    /// Per variable: `(source, target, factor)` into the `order - 1` layout.
    partials: Vec<Vec<(u8, u8, f64)>>,
    /// `truncation[k]` is the index of monomial `k` in the `order - 1` layout, if kept.
    truncation: Vec<Option<u8>>,
}

impl JetLayout {
    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn len(&self) -> usize {
        self.exponents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exponents.is_empty()
    }

    pub fn exponents(&self, k: usize) -> &[u8] {
        &self.exponents[k][..self.nvars]
    }

    pub fn index_of(&self, exps: &[u8]) -> Option<usize> {
        if exps.len() != self.nvars {
            return None;
        }
        self.exponents
            .iter()
            .position(|e| &e[..self.nvars] == exps)
    }

    fn build(nvars: usize, order: usize) -> Option<JetLayout> {
        let mut exponents: Vec<[u8; MAX_VARS]> = Vec::new();
        for d in 0..=order {
            let mut current = [0u8; MAX_VARS];
            push_graded(nvars, 0, d, &mut current, &mut exponents);
        }
        if exponents.len() > CAPACITY {
            return None;
        }
        let degree: Vec<u8> = exponents
            .iter()
            .map(|e| e.iter().copied().sum())
            .collect();
        let mut products = Vec::new();
        for (i, a) in exponents.iter().enumerate() {
            for (j, b) in exponents.iter().enumerate() {
                if (degree[i] + degree[j]) as usize > order {
                    continue;
                }
                let mut s = [0u8; MAX_VARS];
                for v in 0..MAX_VARS {
                    s[v] = a[v] + b[v];
                }
                let k = exponents.iter().position(|e| *e == s).expect("closed");
                products.push((i as u8, j as u8, k as u8));
            }
        }
        Some(JetLayout {
            nvars,
            order,
            exponents,
            products,
            partials: Vec::new(),
            truncation: Vec::new(),
        })
    }
}

fn push_graded(
    nvars: usize,
    var: usize,
    remaining: usize,
    current: &mut [u8; MAX_VARS],
    out: &mut Vec<[u8; MAX_VARS]>,
) {
    if nvars == 0 {
        if remaining == 0 {
            out.push(*current);
        }
        return;
    }
    if var == nvars - 1 {
        current[var] = remaining as u8;
        out.push(*current);
        current[var] = 0;
        return;
    }
    for e in (0..=remaining).rev() {
        current[var] = e as u8;
        push_graded(nvars, var + 1, remaining - e, current, out);
    }
    current[var] = 0;
}

fn slot(nvars: usize, order: usize) -> usize {
    nvars * (MAX_ORDER + 1) + order
}

fn table() -> &'static [Option<JetLayout>] {
    static TABLE: OnceLock<Vec<Option<JetLayout>>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t: Vec<Option<JetLayout>> = Vec::new();
        for nvars in 0..=MAX_VARS {
            for order in 0..=MAX_ORDER {
                t.push(JetLayout::build(nvars, order));
            }
        }
        for nvars in 0..=MAX_VARS {
            for order in 1..=MAX_ORDER {
                let (partials, truncation) = {
                    let (Some(hi), Some(lo)) =
                        (&t[slot(nvars, order)], &t[slot(nvars, order - 1)])
                    else {
                        continue;
                    };
                    let mut partials = vec![Vec::new(); nvars];
                    for (k, e) in hi.exponents.iter().enumerate() {
                        for (v, list) in partials.iter_mut().enumerate() {
                            if e[v] == 0 {
                                continue;
                            }
                            let mut reduced = *e;
                            reduced[v] -= 1;
                            let target = lo
                                .exponents
                                .iter()
                                .position(|x| *x == reduced)
                                .expect("lower layout contains reduced monomial");
                            list.push((k as u8, target as u8, e[v] as f64));
                        }
                    }
                    let truncation = hi
                        .exponents
                        .iter()
                        .map(|e| lo.exponents.iter().position(|x| x == e).map(|i| i as u8))
                        .collect();
                    (partials, truncation)
                };
                if let Some(hi) = t[slot(nvars, order)].as_mut() {
                    hi.partials = partials;
                    hi.truncation = truncation;
                }
            }
        }
        t
    })
}

/// The shared layout for `nvars` variables at the given order, if it fits in [`CAPACITY`].
pub fn layout(nvars: usize, order: usize) -> Option<&'static JetLayout> {
    if nvars > MAX_VARS || order > MAX_ORDER {
        return None;
    }
    table()[slot(nvars, order)].as_ref()
}

/// Truncated Taylor expansion of a scalar around a point.
#[derive(Clone, Copy)]
pub struct Jet {
    layout: &'static JetLayout,
    c: [f64; CAPACITY],
}

impl std::fmt::Debug for Jet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Jet")
            .field("nvars", &self.layout.nvars)
            .field("order", &self.layout.order)
            .field("coefficients", &self.coefficients())
            .finish()
    }
}

impl Jet {
    /// A constant; combines with jets of any layout.
    pub fn constant(value: f64) -> Jet {
        let mut c = [0.0; CAPACITY];
        c[0] = value;
        Jet {
            layout: layout(0, 0).expect("scalar layout"),
            c,
        }
    }

    /// The coordinate function `x_var` expanded around `value`.
    ///
    /// Panics if the `(nvars, order)` pair does not fit in [`CAPACITY`].
    pub fn variable(nvars: usize, order: usize, var: usize, value: f64) -> Jet {
        let layout = layout(nvars, order).expect("unsupported jet layout");
        assert!(var < nvars, "variable index out of range");
        let mut c = [0.0; CAPACITY];
        c[0] = value;
        if order >= 1 {
            c[1 + var] = 1.0;
        }
        Jet { layout, c }
    }

    /// Seeds one jet per coordinate at the point `p`.
    pub fn seed(point: &[f64], order: usize) -> Vec<Jet> {
        let n = point.len();
        point
            .iter()
            .enumerate()
            .map(|(k, &v)| Jet::variable(n, order, k, v))
            .collect()
    }

    pub fn layout(&self) -> &'static JetLayout {
        self.layout
    }

    pub fn nvars(&self) -> usize {
        self.layout.nvars
    }

    pub fn order(&self) -> usize {
        self.layout.order
    }

    pub fn value(&self) -> f64 {
        self.c[0]
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.c[..self.layout.len()]
    }

    /// Taylor coefficient of the monomial with the given exponents (0 if truncated away).
    pub fn coeff(&self, exps: &[u8]) -> f64 {
        self.layout.index_of(exps).map_or(0.0, |k| self.c[k])
    }

    /// Partial derivative `∂^α` at the expansion point.
    pub fn derivative(&self, exps: &[u8]) -> f64 {
        let factorial: f64 = exps
            .iter()
            .map(|&e| (1..=e as u32).product::<u32>() as f64)
            .product();
        self.coeff(exps) * factorial
    }

    /// `∂_k` at the expansion point.
    pub fn d1(&self, k: usize) -> f64 {
        if self.layout.order == 0 || k >= self.layout.nvars {
            return 0.0;
        }
        self.c[1 + k]
    }

    /// `∂_k ∂_l` at the expansion point.
    pub fn d2(&self, k: usize, l: usize) -> f64 {
        if self.layout.order < 2 || k >= self.layout.nvars || l >= self.layout.nvars {
            return 0.0;
        }
        let mut e = [0u8; MAX_VARS];
        e[k] += 1;
        e[l] += 1;
        let scale = if k == l { 2.0 } else { 1.0 };
        self.coeff(&e[..self.layout.nvars]) * scale
    }

    /// The jet of `∂f/∂x_var`, one order lower.
    pub fn partial(&self, var: usize) -> Jet {
        let lo = layout(self.layout.nvars, self.layout.order.saturating_sub(1))
            .expect("lower layout exists");
        let mut c = [0.0; CAPACITY];
        if self.layout.order > 0 {
            for &(src, dst, factor) in &self.layout.partials[var] {
                c[dst as usize] += factor * self.c[src as usize];
            }
        }
        Jet { layout: lo, c }
    }

    /// Drops all terms above `order`.
    pub fn truncate(&self, order: usize) -> Jet {
        let mut out = *self;
        while out.layout.order > order {
            let lo = layout(out.layout.nvars, out.layout.order - 1).expect("lower layout exists");
            let mut c = [0.0; CAPACITY];
            for (k, t) in out.layout.truncation.iter().enumerate() {
                if let Some(t) = t {
                    c[*t as usize] = out.c[k];
                }
            }
            out = Jet { layout: lo, c };
        }
        out
    }

    fn is_scalar(&self) -> bool {
        self.layout.nvars == 0
    }

    /// True when every non-constant coefficient vanishes.
    pub fn is_constant(&self) -> bool {
        self.coefficients()[1..].iter().all(|&x| x == 0.0)
    }

    fn align(a: Jet, b: Jet) -> (Jet, Jet) {
        if a.layout.nvars != b.layout.nvars {
            panic!(
                "jet layouts disagree: {} vs {} variables",
                a.layout.nvars, b.layout.nvars
            );
        }
        let order = a.layout.order.min(b.layout.order);
        (a.truncate(order), b.truncate(order))
    }

    fn broadcast(self, value: f64) -> Jet {
        Jet {
            layout: self.layout,
            c: {
                let mut c = [0.0; CAPACITY];
                c[0] = value;
                c
            },
        }
    }

    fn scale(mut self, s: f64) -> Jet {
        for x in self.c[..self.layout.len()].iter_mut() {
            *x *= s;
        }
        self
    }

    /// `Σ_k g^{(k)}(a_0)/k! · (a - a_0)^k` given `derivs[k] = g^{(k)}(a_0)`.
    pub fn compose(&self, derivs: &[f64]) -> Jet {
        let order = self.layout.order;
        let mut out = self.broadcast(derivs[0]);
        if order == 0 {
            return out;
        }
        let mut tail = *self;
        tail.c[0] = 0.0;
        let mut power = tail;
        let mut factorial = 1.0;
        for (k, &d) in derivs.iter().enumerate().take(order + 1).skip(1) {
            factorial *= k as f64;
            if d != 0.0 {
                let w = d / factorial;
                for i in 0..self.layout.len() {
                    out.c[i] += w * power.c[i];
                }
            }
            if k < order {
                power = power * tail;
            }
        }
        out
    }

    pub fn sin(&self) -> Jet {
        let (s, c) = self.value().sin_cos();
        self.compose(&[s, c, -s, -c])
    }

    pub fn cos(&self) -> Jet {
        let (s, c) = self.value().sin_cos();
        self.compose(&[c, -s, -c, s])
    }

    pub fn exp(&self) -> Jet {
        let e = self.value().exp();
        self.compose(&[e, e, e, e])
    }

    pub fn ln(&self) -> Jet {
        let a = self.value();
        self.compose(&[a.ln(), 1.0 / a, -1.0 / (a * a), 2.0 / (a * a * a)])
    }

    pub fn sqrt(&self) -> Jet {
        let a = self.value();
        let r = a.sqrt();
        self.compose(&[r, 0.5 / r, -0.25 / (r * a), 0.375 / (r * a * a)])
    }

    pub fn recip(&self) -> Jet {
        let a = self.value();
        let r = 1.0 / a;
        self.compose(&[r, -r * r, 2.0 * r * r * r, -6.0 * r * r * r * r])
    }

    /// `self^p` for a real constant exponent.
    pub fn powf(&self, p: f64) -> Jet {
        let a = self.value();
        let mut derivs = [0.0; MAX_ORDER + 1];
        let mut falling = 1.0;
        for (k, d) in derivs.iter_mut().enumerate() {
            if falling != 0.0 {
                *d = falling * a.powf(p - k as f64);
            }
            falling *= p - k as f64;
        }
        self.compose(&derivs)
    }

    /// `self^e` for a jet exponent.
    pub fn pow(&self, e: &Jet) -> Jet {
        if e.is_scalar() || e.is_constant() {
            self.powf(e.value())
        } else {
            (*e * self.ln()).exp()
        }
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, rhs: Jet) -> Jet {
        if rhs.is_scalar() {
            let mut out = self;
            out.c[0] += rhs.c[0];
            return out;
        }
        if self.is_scalar() {
            return rhs + self;
        }
        let (mut a, b) = Jet::align(self, rhs);
        for i in 0..a.layout.len() {
            a.c[i] += b.c[i];
        }
        a
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, rhs: Jet) -> Jet {
        self + (-rhs)
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, rhs: Jet) -> Jet {
        if rhs.is_scalar() {
            return self.scale(rhs.c[0]);
        }
        if self.is_scalar() {
            return rhs.scale(self.c[0]);
        }
        let (a, b) = Jet::align(self, rhs);
        let mut c = [0.0; CAPACITY];
        for &(i, j, k) in &a.layout.products {
            c[k as usize] += a.c[i as usize] * b.c[j as usize];
        }
        Jet { layout: a.layout, c }
    }
}

impl Div for Jet {
    type Output = Jet;
    fn div(self, rhs: Jet) -> Jet {
        if rhs.is_scalar() {
            return self.scale(1.0 / rhs.c[0]);
        }
        self * rhs.recip()
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(self, rhs: f64) -> Jet {
        self.scale(rhs)
    }
}

impl Add<f64> for Jet {
    type Output = Jet;
    fn add(mut self, rhs: f64) -> Jet {
        self.c[0] += rhs;
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_sizes() {
        assert_eq!(layout(2, 2).unwrap().len(), 6);
        assert_eq!(layout(4, 3).unwrap().len(), 35);
        assert_eq!(layout(5, 2).unwrap().len(), 21);
        assert!(layout(5, 3).is_none());
        assert_eq!(layout(0, 0).unwrap().len(), 1);
    }

    #[test]
    fn square_of_variable() {
        let x = Jet::variable(1, 2, 0, 1.0);
        let y = x * x;
        assert_eq!(y.value(), 1.0);
        assert_eq!(y.d1(0), 2.0);
        assert_eq!(y.coeff(&[2]), 1.0);
        assert_eq!(y.d2(0, 0), 2.0);
    }

    #[test]
    fn mixed_partials_of_product() {
        // f = x^2 y at (2, 3): f_xy = 2x = 4, f_xxy = 2
        let v = Jet::seed(&[2.0, 3.0], 3);
        let f = v[0] * v[0] * v[1];
        assert!((f.value() - 12.0).abs() < 1e-15);
        assert!((f.d2(0, 1) - 4.0).abs() < 1e-15);
        assert!((f.derivative(&[2, 1]) - 2.0).abs() < 1e-15);
        assert_eq!(f.derivative(&[0, 3]), 0.0);
    }

    #[test]
    fn partial_lowers_order() {
        let v = Jet::seed(&[0.5, -1.0], 3);
        let f = (v[0] * v[1]).sin();
        let fx = f.partial(0);
        assert_eq!(fx.order(), 2);
        // d/dx sin(xy) = y cos(xy)
        let expect = -(-0.5f64).cos();
        assert!((fx.value() - expect).abs() < 1e-14);
        assert!((fx.d1(1) - f.d2(0, 1)).abs() < 1e-14);
    }

    #[test]
    fn constants_broadcast() {
        let x = Jet::variable(2, 2, 1, 3.0);
        let y = Jet::constant(2.0) * x + Jet::constant(1.0);
        assert_eq!(y.value(), 7.0);
        assert_eq!(y.d1(1), 2.0);
        assert_eq!(y.d1(0), 0.0);
    }

    #[test]
    fn integer_power_at_zero_is_finite() {
        let x = Jet::variable(1, 3, 0, 0.0);
        let y = x.powf(2.0);
        assert!(y.coefficients().iter().all(|c| c.is_finite()));
        assert_eq!(y.coeff(&[2]), 1.0);
        assert_eq!(y.coeff(&[3]), 0.0);
    }

    #[test]
    fn truncation_keeps_low_terms() {
        let v = Jet::seed(&[1.0, 2.0], 3);
        let f = (v[0] * v[1]).exp();
        let t = f.truncate(1);
        assert_eq!(t.order(), 1);
        assert_eq!(t.value(), f.value());
        assert_eq!(t.d1(1), f.d1(1));
    }

    #[test]
    fn elementary_function_series() {
        let x = Jet::variable(1, 3, 0, 0.7);
        for (jet, d) in [
            (x.exp(), [0.7f64.exp(); 4]),
            (x.ln(), [0.7f64.ln(), 1.0 / 0.7, -1.0 / 0.49, 2.0 / 0.343]),
            (x.recip(), [1.0 / 0.7, -1.0 / 0.49, 2.0 / 0.343, -6.0 / 0.2401]),
        ] {
            for (k, want) in d.iter().enumerate() {
                let got = jet.derivative(&[k as u8]);
                assert!((got - want).abs() < 1e-12, "k={k}: {got} vs {want}");
            }
        }
    }
}
