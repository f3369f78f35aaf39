//! Scalar expressions over chart (`u1..um`) or ambient (`x1..xn`) variables.
//!
//! Expressions are stored as straight-line programs: a flat list of nodes in
//! which every operand refers to an earlier node. Composition (for example a
//! Möbius map applied to an immersion) appends nodes and rewires variables, so
//! shared subexpressions are evaluated once per point.

mod parse;

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use crate::error::{Error, Result};
use crate::jet::Jet;

pub use parse::parse_expression;

/// Values an expression can be evaluated on.
pub trait Scalar:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn from_f64(c: f64) -> Self;
    fn value(&self) -> f64;
    fn sin(&self) -> Self;
    fn cos(&self) -> Self;
    fn exp(&self) -> Self;
    fn ln(&self) -> Self;
    fn sqrt(&self) -> Self;
    fn pow(&self, e: &Self) -> Self;
}

impl Scalar for f64 {
    fn from_f64(c: f64) -> Self {
        c
    }
    fn value(&self) -> f64 {
        *self
    }
    fn sin(&self) -> Self {
        f64::sin(*self)
    }
    fn cos(&self) -> Self {
        f64::cos(*self)
    }
    fn exp(&self) -> Self {
        f64::exp(*self)
    }
    fn ln(&self) -> Self {
        f64::ln(*self)
    }
    fn sqrt(&self) -> Self {
        f64::sqrt(*self)
    }
    fn pow(&self, e: &Self) -> Self {
        self.powf(*e)
    }
}

impl Scalar for Jet {
    fn from_f64(c: f64) -> Self {
        Jet::constant(c)
    }
    fn value(&self) -> f64 {
        Jet::value(self)
    }
    fn sin(&self) -> Self {
        Jet::sin(self)
    }
    fn cos(&self) -> Self {
        Jet::cos(self)
    }
    fn exp(&self) -> Self {
        Jet::exp(self)
    }
    fn ln(&self) -> Self {
        Jet::ln(self)
    }
    fn sqrt(&self) -> Self {
        Jet::sqrt(self)
    }
    fn pow(&self, e: &Self) -> Self {
        Jet::pow(self, e)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
        }
    }

    fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "log" | "ln" => Func::Log,
            "sqrt" => Func::Sqrt,
            _ => return None,
        })
    }
}

/// One instruction of a straight-line program; operands index earlier nodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Node {
    Const(f64),
    Var(usize),
    Neg(usize),
    Add(usize, usize),
    Sub(usize, usize),
    Mul(usize, usize),
    Div(usize, usize),
    Pow(usize, usize),
    Call(Func, usize),
}

impl Node {
    fn shifted(self, offset: usize) -> Node {
        match self {
            Node::Const(_) | Node::Var(_) => self,
            Node::Neg(a) => Node::Neg(a + offset),
            Node::Add(a, b) => Node::Add(a + offset, b + offset),
            Node::Sub(a, b) => Node::Sub(a + offset, b + offset),
            Node::Mul(a, b) => Node::Mul(a + offset, b + offset),
            Node::Div(a, b) => Node::Div(a + offset, b + offset),
            Node::Pow(a, b) => Node::Pow(a + offset, b + offset),
            Node::Call(f, a) => Node::Call(f, a + offset),
        }
    }
}

/// Which letter an expression's variables use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum VarFamily {
    /// `u1, u2, ...`: chart coordinates.
    Chart,
    /// `x1, x2, ...`: ambient coordinates.
    Ambient,
}

impl VarFamily {
    pub fn letter(self) -> char {
        match self {
            VarFamily::Chart => 'u',
            VarFamily::Ambient => 'x',
        }
    }
}

/// A multi-output straight-line program in `arity` variables.
#[derive(Debug, Clone, PartialEq)]
pub struct Program {
    nodes: Vec<Node>,
    outputs: Vec<usize>,
    arity: usize,
    family: Option<VarFamily>,
}

impl Program {
    /// Bundles expressions into one program with one output per expression.
    ///
    /// All expressions must use the same variable family (or none).
    pub fn from_expressions(exprs: &[Expression], arity: usize) -> Result<Program> {
        let mut family = None;
        let mut nodes = Vec::new();
        let mut outputs = Vec::new();
        for e in exprs {
            if let Some(f) = e.family() {
                if family.is_some_and(|g| g != f) {
                    return Err(Error::Invalid(
                        "expressions mix chart and ambient variables".into(),
                    ));
                }
                family = Some(f);
            }
            if e.arity() > arity {
                return Err(Error::UnknownIdentifier(format!(
                    "{}{}",
                    e.family().map_or('u', VarFamily::letter),
                    e.arity()
                )));
            }
            let offset = nodes.len();
            nodes.extend(e.program.nodes.iter().map(|n| n.shifted(offset)));
            outputs.push(e.program.outputs[0] + offset);
        }
        Ok(Program {
            nodes,
            outputs,
            arity,
            family,
        })
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn outputs(&self) -> usize {
        self.outputs.len()
    }

    pub fn family(&self) -> Option<VarFamily> {
        self.family
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Evaluates every output at the given inputs.
    pub fn eval<T: Scalar>(&self, inputs: &[T]) -> Vec<T> {
        assert!(
            inputs.len() >= self.arity,
            "program needs {} inputs, got {}",
            self.arity,
            inputs.len()
        );
        let mut values: Vec<T> = Vec::with_capacity(self.nodes.len());
        for node in &self.nodes {
            let v = match *node {
                Node::Const(c) => T::from_f64(c),
                Node::Var(k) => inputs[k],
                Node::Neg(a) => -values[a],
                Node::Add(a, b) => values[a] + values[b],
                Node::Sub(a, b) => values[a] - values[b],
                Node::Mul(a, b) => values[a] * values[b],
                Node::Div(a, b) => values[a] / values[b],
                Node::Pow(a, b) => values[a].pow(&values[b]),
                Node::Call(f, a) => {
                    let x = values[a];
                    match f {
                        Func::Sin => x.sin(),
                        Func::Cos => x.cos(),
                        Func::Exp => x.exp(),
                        Func::Log => x.ln(),
                        Func::Sqrt => x.sqrt(),
                    }
                }
            };
            values.push(v);
        }
        self.outputs.iter().map(|&i| values[i]).collect()
    }

    /// Substitutes `inner`'s outputs for this program's variables: `(self ∘ inner)(v)`.
    pub fn compose(&self, inner: &Program) -> Result<Program> {
        if inner.outputs.len() != self.arity {
            return Err(Error::Dimension(format!(
                "cannot compose a map of {} variables with one of {} outputs",
                self.arity,
                inner.outputs.len()
            )));
        }
        let mut nodes = inner.nodes.clone();
        let mut remap = Vec::with_capacity(self.nodes.len());
        for node in &self.nodes {
            let idx = match *node {
                Node::Var(k) => inner.outputs[k],
                other => {
                    let shifted = remap_node(other, &remap);
                    nodes.push(shifted);
                    nodes.len() - 1
                }
            };
            remap.push(idx);
        }
        Ok(Program {
            outputs: self.outputs.iter().map(|&o| remap[o]).collect(),
            nodes,
            arity: inner.arity,
            family: inner.family,
        })
    }

    /// Extracts output `k` as a standalone expression.
    pub fn output(&self, k: usize) -> Expression {
        Expression {
            program: Program {
                nodes: self.nodes.clone(),
                outputs: vec![self.outputs[k]],
                arity: self.arity,
                family: self.family,
            },
        }
    }

    fn write_node(&self, f: &mut fmt::Formatter<'_>, idx: usize, parent_prec: u8) -> fmt::Result {
        let letter = self.family.map_or('u', VarFamily::letter);
        let (prec, open) = match self.nodes[idx] {
            Node::Add(..) | Node::Sub(..) => (1, parent_prec > 1),
            Node::Mul(..) | Node::Div(..) => (2, parent_prec > 2),
            Node::Neg(_) => (3, parent_prec > 3),
            Node::Pow(..) => (4, parent_prec >= 4),
            _ => (5, false),
        };
        if open {
            write!(f, "(")?;
        }
        match self.nodes[idx] {
            Node::Const(c) => {
                if c < 0.0 {
                    write!(f, "({c:?})")?
                } else {
                    write!(f, "{c:?}")?
                }
            }
            Node::Var(k) => write!(f, "{letter}{}", k + 1)?,
            Node::Neg(a) => {
                write!(f, "-")?;
                self.write_node(f, a, 4)?;
            }
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
                let op = match self.nodes[idx] {
                    Node::Add(..) => " + ",
                    Node::Sub(..) => " - ",
                    Node::Mul(..) => "*",
                    _ => "/",
                };
                self.write_node(f, a, prec)?;
                write!(f, "{op}")?;
                self.write_node(f, b, prec + 1)?;
            }
            Node::Pow(a, b) => {
                self.write_node(f, a, 5)?;
                write!(f, "^")?;
                self.write_node(f, b, 4)?;
            }
            Node::Call(func, a) => {
                write!(f, "{}(", func.name())?;
                self.write_node(f, a, 0)?;
                write!(f, ")")?;
            }
        }
        if open {
            write!(f, ")")?;
        }
        Ok(())
    }
}

fn remap_node(node: Node, remap: &[usize]) -> Node {
    match node {
        Node::Const(_) | Node::Var(_) => node,
        Node::Neg(a) => Node::Neg(remap[a]),
        Node::Add(a, b) => Node::Add(remap[a], remap[b]),
        Node::Sub(a, b) => Node::Sub(remap[a], remap[b]),
        Node::Mul(a, b) => Node::Mul(remap[a], remap[b]),
        Node::Div(a, b) => Node::Div(remap[a], remap[b]),
        Node::Pow(a, b) => Node::Pow(remap[a], remap[b]),
        Node::Call(f, a) => Node::Call(f, remap[a]),
    }
}

/// A parsed scalar expression.
#[derive(Debug, Clone, PartialEq)]
pub struct Expression {
    program: Program,
}

impl Expression {
    pub fn constant(c: f64) -> Expression {
        Expression {
            program: Program {
                nodes: vec![Node::Const(c)],
                outputs: vec![0],
                arity: 0,
                family: None,
            },
        }
    }

    /// The coordinate `u{k+1}` or `x{k+1}`.
    pub fn variable(family: VarFamily, k: usize) -> Expression {
        Expression {
            program: Program {
                nodes: vec![Node::Var(k)],
                outputs: vec![0],
                arity: k + 1,
                family: Some(family),
            },
        }
    }

    /// Number of variables referenced (highest index + 1).
    pub fn arity(&self) -> usize {
        self.program.arity
    }

    pub fn family(&self) -> Option<VarFamily> {
        self.program.family
    }

    pub fn program(&self) -> &Program {
        &self.program
    }

    /// Evaluates on plain numbers or jets; `inputs` must cover [`Expression::arity`].
    pub fn eval<T: Scalar>(&self, inputs: &[T]) -> T {
        self.program.eval(inputs)[0]
    }

    /// True when the expression is the literal constant 0.
    pub fn is_zero(&self) -> bool {
        matches!(self.program.nodes.as_slice(), [Node::Const(c)] if *c == 0.0)
    }

    fn binary(&self, rhs: &Expression, make: fn(usize, usize) -> Node) -> Expression {
        let family = self.family().or(rhs.family());
        let mut nodes = self.program.nodes.clone();
        let left = self.program.outputs[0];
        let offset = nodes.len();
        nodes.extend(rhs.program.nodes.iter().map(|n| n.shifted(offset)));
        let right = rhs.program.outputs[0] + offset;
        nodes.push(make(left, right));
        let root = nodes.len() - 1;
        Expression {
            program: Program {
                nodes,
                outputs: vec![root],
                arity: self.arity().max(rhs.arity()),
                family,
            },
        }
    }

    pub fn add(&self, rhs: &Expression) -> Expression {
        self.binary(rhs, Node::Add)
    }

    pub fn sub(&self, rhs: &Expression) -> Expression {
        self.binary(rhs, Node::Sub)
    }

    pub fn mul(&self, rhs: &Expression) -> Expression {
        self.binary(rhs, Node::Mul)
    }

    pub fn div(&self, rhs: &Expression) -> Expression {
        self.binary(rhs, Node::Div)
    }

    pub fn scaled(&self, factor: f64) -> Expression {
        Expression::constant(factor).mul(self)
    }

    pub fn call(&self, func: Func) -> Expression {
        let mut program = self.program.clone();
        program.nodes.push(Node::Call(func, program.outputs[0]));
        program.outputs[0] = program.nodes.len() - 1;
        Expression { program }
    }

    /// Reinterprets the variables as belonging to `family`.
    pub fn with_family(mut self, family: VarFamily) -> Expression {
        self.program.family = Some(family);
        self
    }

    /// `self ∘ inner`, where `inner` supplies one output per variable.
    pub fn compose(&self, inner: &Program) -> Result<Expression> {
        if self.arity() > inner.outputs() {
            return Err(Error::Dimension(format!(
                "expression uses {} variables but the inner map has {} outputs",
                self.arity(),
                inner.outputs()
            )));
        }
        let mut outer = self.program.clone();
        outer.arity = inner.outputs();
        Ok(Expression {
            program: outer.compose(inner)?,
        })
    }
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.program.write_node(f, self.program.outputs[0], 0)
    }
}

impl std::str::FromStr for Expression {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        parse_expression(s)
    }
}

impl serde::Serialize for Expression {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> serde::Deserialize<'de> for Expression {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        parse_expression(&text).map_err(serde::de::Error::custom)
    }
}
