//! Text form of terms and sums.
//!
//! ```text
//! sum    := ['+' | '-'] term (('+' | '-') term)*
//! term   := [number ['*']] factor* | number
//! factor := name '(' index (',' index)* ')'
//! name   := g-1 | gb-1 | R | Rn | ho | Hg
//! ```
//!
//! An index letter must occur exactly twice in a term; the two occurrences
//! form a contraction pair. `ho` and `Hg` take two indices, or three for the
//! normal-valued form.

use std::collections::BTreeMap;
use std::fmt;

use super::{ContractionSum, ContractionTerm, FactorKind};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Word(String),
    Plus,
    Minus,
    Star,
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

fn lex(text: &str) -> Result<Vec<(Tok, usize)>> {
    let b = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < b.len() {
        let c = b[i] as char;
        let start = i;
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        if c.is_ascii_digit() || c == '.' {
            while i < b.len() && (b[i].is_ascii_digit() || b[i] == b'.' || b[i] == b'e' || b[i] == b'E'
                || ((b[i] == b'-' || b[i] == b'+') && matches!(b[i - 1], b'e' | b'E')))
            {
                i += 1;
            }
            let lit = &text[start..i];
            let v = lit.parse().map_err(|_| syntax(start, format!("bad number `{lit}`")))?;
            out.push((Tok::Num(v), start));
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            while i < b.len() && (b[i].is_ascii_alphanumeric() || b[i] == b'_') {
                i += 1;
            }
            // metric inverses are spelled `g-1` and `gb-1`
            let word = &text[start..i];
            if (word == "g" || word == "gb") && text[i..].starts_with("-1") {
                i += 2;
            }
            out.push((Tok::Word(text[start..i].to_string()), start));
            continue;
        }
        let t = match c {
            '+' => Tok::Plus,
            '-' => Tok::Minus,
            '*' => Tok::Star,
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            ',' => Tok::Comma,
            _ => return Err(syntax(i, format!("unexpected character `{c}`"))),
        };
        out.push((t, i));
        i += c.len_utf8();
    }
    out.push((Tok::End, text.len()));
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn at(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn sum(&mut self) -> Result<Vec<(f64, ContractionTerm)>> {
        let mut terms = Vec::new();
        let mut sign = match self.peek() {
            Tok::Minus => {
                self.bump();
                -1.0
            }
            Tok::Plus => {
                self.bump();
                1.0
            }
            _ => 1.0,
        };
        loop {
            let (c, t) = self.term()?;
            terms.push((sign * c, t));
            sign = match self.peek() {
                Tok::Plus => 1.0,
                Tok::Minus => -1.0,
                Tok::End => return Ok(terms),
                _ => return Err(syntax(self.at(), "expected `+`, `-` or end of input")),
            };
            self.bump();
        }
    }

    fn term(&mut self) -> Result<(f64, ContractionTerm)> {
        let start = self.at();
        let mut coeff = 1.0;
        let mut saw_number = false;
        if let Tok::Num(v) = *self.peek() {
            self.bump();
            coeff = v;
            saw_number = true;
            if *self.peek() == Tok::Star {
                self.bump();
            }
        }
        let mut factors = Vec::new();
        let mut indices: Vec<(String, usize)> = Vec::new();
        while let Tok::Word(_) = self.peek() {
            let at = self.at();
            let Tok::Word(name) = self.bump() else { unreachable!() };
            if *self.peek() != Tok::LParen {
                return Err(syntax(self.at(), format!("expected `(` after `{name}`")));
            }
            self.bump();
            let mut args = Vec::new();
            loop {
                let iat = self.at();
                match self.bump() {
                    Tok::Word(ix) => args.push((ix, iat)),
                    _ => return Err(syntax(iat, "expected an index letter")),
                }
                match self.bump() {
                    Tok::Comma => continue,
                    Tok::RParen => break,
                    _ => return Err(syntax(self.toks[self.pos.saturating_sub(1)].1, "expected `,` or `)`")),
                }
            }
            let kind = factor_kind(&name, args.len()).ok_or_else(|| match factor_kind_any(&name) {
                true => syntax(at, format!("`{name}` cannot take {} indices", args.len())),
                false => Error::UnknownIdentifier(name.clone()),
            })?;
            factors.push(kind);
            indices.extend(args);
        }
        if factors.is_empty() && !saw_number {
            return Err(syntax(start, "expected a factor or a coefficient"));
        }
        let mut by_name: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
        for (slot, (ix, _)) in indices.iter().enumerate() {
            by_name.entry(ix.as_str()).or_default().push(slot);
        }
        let mut pairing = Vec::new();
        for (ix, slots) in by_name {
            if slots.len() != 2 {
                let first = indices[slots[0]].1;
                return Err(Error::Structure(format!(
                    "index `{ix}` (at {first}) occurs {} times; every index must occur exactly twice",
                    slots.len()
                )));
            }
            pairing.push((slots[0], slots[1]));
        }
        Ok((coeff, ContractionTerm::new(factors, pairing)?))
    }
}

fn factor_kind_any(name: &str) -> bool {
    FactorKind::ALL.iter().any(|f| f.name() == name)
}

fn factor_kind(name: &str, arity: usize) -> Option<FactorKind> {
    FactorKind::ALL.iter().copied().find(|f| f.name() == name && f.arity() == arity)
}

/// Parses one term; a leading coefficient is rejected.
pub fn parse_term(text: &str) -> Result<ContractionTerm> {
    let mut p = Parser { toks: lex(text)?, pos: 0 };
    if matches!(p.peek(), Tok::Num(_)) {
        return Err(syntax(p.at(), "a single term takes no coefficient"));
    }
    let (_, t) = p.term()?;
    if *p.peek() != Tok::End {
        return Err(syntax(p.at(), "unexpected trailing input"));
    }
    Ok(t)
}

pub fn parse_sum(text: &str) -> Result<ContractionSum> {
    let mut p = Parser { toks: lex(text)?, pos: 0 };
    Ok(ContractionSum::new(p.sum()?))
}

fn index_name(k: usize) -> String {
    let letter = (b'a' + (k % 26) as u8) as char;
    if k < 26 {
        letter.to_string()
    } else {
        format!("{letter}{}", k / 26)
    }
}

pub(super) fn write_term(term: &ContractionTerm, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if term.factors().is_empty() {
        return write!(f, "1");
    }
    let mut partner = vec![0usize; term.slot_count()];
    for &(a, b) in term.pairing() {
        partner[a] = b;
        partner[b] = a;
    }
    let mut label: Vec<Option<usize>> = vec![None; term.slot_count()];
    let mut next = 0;
    let mut slot = 0;
    for (k, kind) in term.factors().iter().enumerate() {
        if k > 0 {
            write!(f, " ")?;
        }
        write!(f, "{}(", kind.name())?;
        for s in 0..kind.arity() {
            let id = match label[slot] {
                Some(id) => id,
                None => {
                    label[slot] = Some(next);
                    label[partner[slot]] = Some(next);
                    next += 1;
                    next - 1
                }
            };
            if s > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", index_name(id))?;
            slot += 1;
        }
        write!(f, ")")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        for text in [
            "g-1(a,b) g-1(c,d) ho(a,c) ho(b,d)",
            "g-1(a,c) g-1(b,d) gb-1(p,q) Hg(a,b,p) Hg(c,d,q)",
            "g-1(a,b) gb-1(c,d) Rn(a,b,c,d)",
        ] {
            let t = parse_term(text).unwrap();
            assert_eq!(parse_term(&t.to_string()).unwrap(), t);
        }
        let s = parse_sum("0.5 * g-1(a,c) g-1(b,d) R(a,b,c,d) - 0.25 g-1(a,b) g-1(c,d) Hg(a,b) Hg(c,d)").unwrap();
        assert_eq!(parse_sum(&s.to_string()).unwrap(), s);
        assert_eq!(s.terms().len(), 2);
    }

    #[test]
    fn errors() {
        assert!(matches!(parse_term("g-1(a,b) ho(a,c)"), Err(Error::Structure(_))));
        assert!(matches!(parse_term("g-1(a,b) foo(a,b)"), Err(Error::UnknownIdentifier(_))));
        assert!(matches!(parse_term("R(a,b)"), Err(Error::Syntax { position: 0, .. })));
        assert!(matches!(parse_term("g-1(a,b"), Err(Error::Syntax { .. })));
        assert!(matches!(parse_term("ho(a,b) ho(a,b)"), Err(Error::Structure(_))));
        assert!(parse_sum("").is_err());
    }

    #[test]
    fn constant_terms() {
        let s = parse_sum("2 + g-1(a,b) Hg(a,b)").unwrap();
        assert_eq!(s.terms().len(), 2);
        assert_eq!(s.weight().unwrap_err(), Error::Weight { expected: 0, found: -1 });
    }
}
