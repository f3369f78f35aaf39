//! Recursive-descent parser for the expression language.
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := primary ('^' unary)?
//! primary := number | 'pi' | var | func '(' expr ')' | 'pow' '(' expr ',' expr ')' | '(' expr ')'
//! var     := ('u' | 'x') digits
//! ```

use super::{Expression, Func, Node, Program, VarFamily};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Number(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    Comma,
    End,
}

fn syntax(position: usize, message: impl Into<String>) -> Error {
    Error::Syntax {
        position,
        message: message.into(),
    }
}

fn tokenize(text: &str) -> Result<Vec<(Token, usize)>> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        if c.is_ascii_digit() || (c == '.' && bytes.get(i + 1).is_some_and(u8::is_ascii_digit)) {
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    i = j;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let lit = &text[start..i];
            let v: f64 = lit
                .parse()
                .map_err(|_| syntax(start, format!("bad number `{lit}`")))?;
            out.push((Token::Number(v), start));
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((Token::Ident(text[start..i].to_string()), start));
            continue;
        }
        let tok = match c {
            '+' | '-' | '*' | '/' | '^' => Token::Op(c),
            '(' => Token::LParen,
            ')' => Token::RParen,
            ',' => Token::Comma,
            _ => return Err(syntax(i, format!("unexpected character `{c}`"))),
        };
        out.push((tok, i));
        i += c.len_utf8();
    }
    out.push((Token::End, text.len()));
    Ok(out)
}

struct Parser {
    tokens: Vec<(Token, usize)>,
    pos: usize,
    nodes: Vec<Node>,
    arity: usize,
    family: Option<(VarFamily, usize)>,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos].0
    }

    fn offset(&self) -> usize {
        self.tokens[self.pos].1
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.pos].0.clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn push(&mut self, node: Node) -> usize {
        self.nodes.push(node);
        self.nodes.len() - 1
    }

    fn expect(&mut self, want: Token, what: &str) -> Result<()> {
        if *self.peek() == want {
            self.bump();
            Ok(())
        } else {
            Err(syntax(self.offset(), format!("expected {what}")))
        }
    }

    fn expr(&mut self) -> Result<usize> {
        let mut lhs = self.term()?;
        loop {
            let node = match self.peek() {
                Token::Op('+') => Node::Add as fn(usize, usize) -> Node,
                Token::Op('-') => Node::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.term()?;
            lhs = self.push(node(lhs, rhs));
        }
    }

    fn term(&mut self) -> Result<usize> {
        let mut lhs = self.unary()?;
        loop {
            let node = match self.peek() {
                Token::Op('*') => Node::Mul as fn(usize, usize) -> Node,
                Token::Op('/') => Node::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.unary()?;
            lhs = self.push(node(lhs, rhs));
        }
    }

    fn unary(&mut self) -> Result<usize> {
        if *self.peek() == Token::Op('-') {
            self.bump();
            let a = self.unary()?;
            return Ok(self.push(Node::Neg(a)));
        }
        if *self.peek() == Token::Op('+') {
            self.bump();
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<usize> {
        let base = self.primary()?;
        if *self.peek() == Token::Op('^') {
            self.bump();
            let exp = self.unary()?;
            return Ok(self.push(Node::Pow(base, exp)));
        }
        Ok(base)
    }

    fn variable(&mut self, name: &str, at: usize) -> Result<Option<usize>> {
        let mut chars = name.chars();
        let family = match chars.next() {
            Some('u') => VarFamily::Chart,
            Some('x') => VarFamily::Ambient,
            _ => return Ok(None),
        };
        let digits = chars.as_str();
        if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return Ok(None);
        }
        let index: usize = digits
            .parse()
            .map_err(|_| syntax(at, format!("bad variable `{name}`")))?;
        if index == 0 {
            return Err(Error::UnknownIdentifier(name.to_string()));
        }
        match self.family {
            Some((f, first)) if f != family => {
                return Err(syntax(
                    at,
                    format!(
                        "`{name}` mixes {} and {} variables (first seen at {first})",
                        family.letter(),
                        f.letter()
                    ),
                ))
            }
            None => self.family = Some((family, at)),
            _ => {}
        }
        self.arity = self.arity.max(index);
        Ok(Some(self.push(Node::Var(index - 1))))
    }

    fn primary(&mut self) -> Result<usize> {
        let at = self.offset();
        match self.bump() {
            Token::Number(v) => Ok(self.push(Node::Const(v))),
            Token::LParen => {
                let inner = self.expr()?;
                self.expect(Token::RParen, "`)`")?;
                Ok(inner)
            }
            Token::Ident(name) => {
                if name == "pi" {
                    return Ok(self.push(Node::Const(std::f64::consts::PI)));
                }
                if let Some(v) = self.variable(&name, at)? {
                    return Ok(v);
                }
                if name == "pow" {
                    self.expect(Token::LParen, "`(` after `pow`")?;
                    let a = self.expr()?;
                    self.expect(Token::Comma, "`,` in `pow(a, b)`")?;
                    let b = self.expr()?;
                    self.expect(Token::RParen, "`)`")?;
                    return Ok(self.push(Node::Pow(a, b)));
                }
                if let Some(func) = Func::from_name(&name) {
                    self.expect(Token::LParen, &format!("`(` after `{name}`"))?;
                    let a = self.expr()?;
                    self.expect(Token::RParen, "`)`")?;
                    return Ok(self.push(Node::Call(func, a)));
                }
                Err(Error::UnknownIdentifier(name))
            }
            Token::End => Err(syntax(at, "unexpected end of input")),
            other => Err(syntax(at, format!("unexpected token {other:?}"))),
        }
    }
}

/// Parses an expression in chart (`u1..`) or ambient (`x1..`) variables.
pub fn parse_expression(text: &str) -> Result<Expression> {
    let tokens = tokenize(text)?;
    let mut p = Parser {
        tokens,
        pos: 0,
        nodes: Vec::new(),
        arity: 0,
        family: None,
    };
    let root = p.expr()?;
    if *p.peek() != Token::End {
        return Err(syntax(p.offset(), "unexpected trailing input"));
    }
    Ok(Expression {
        program: Program {
            nodes: p.nodes,
            outputs: vec![root],
            arity: p.arity,
            family: p.family.map(|(f, _)| f),
        },
    })
}
