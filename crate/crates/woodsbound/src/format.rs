//! Text syntax for constraints and numbers used in script files.
//!
//! Constraints:
//!
//! ```text
//! B2 <= 1.8815            B4 >= B5               B3 >= max(B4..)
//! B1*B2*B3 <= 4.11        B1^3/(B2*B3*B4) >= 2   B1*B2*B3*B4*B5*B6*B7*B8 < 1.8278^11
//! ```
//!
//! Strict and non-strict relations mean the same closed constraint.
//! Numbers are decimal literals combined with `*`, `/`, integer powers and
//! parentheses; each literal enters as a tight enclosure.

use num_rational::Ratio;
use woodsbound_core::expr::Exp;
use woodsbound_core::{iv_from_decimal, Constraint, Interval, Side};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("cannot read {text:?}: {reason}")]
pub struct SyntaxError {
    pub text: String,
    pub reason: String,
}

struct Cursor<'a> {
    s: &'a [u8],
    at: usize,
}

impl<'a> Cursor<'a> {
    fn new(s: &'a str) -> Self {
        Self {
            s: s.as_bytes(),
            at: 0,
        }
    }

    fn skip_ws(&mut self) {
        while self.at < self.s.len() && self.s[self.at].is_ascii_whitespace() {
            self.at += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.s.get(self.at).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.at += 1;
            true
        } else {
            false
        }
    }

    fn eat_str(&mut self, t: &str) -> bool {
        self.skip_ws();
        if self.s[self.at..].starts_with(t.as_bytes()) {
            self.at += t.len();
            true
        } else {
            false
        }
    }

    fn take_while(&mut self, f: impl Fn(u8) -> bool) -> &'a str {
        self.skip_ws();
        let start = self.at;
        while self.at < self.s.len() && f(self.s[self.at]) {
            self.at += 1;
        }
        std::str::from_utf8(&self.s[start..self.at]).expect("ascii slice")
    }

    fn int(&mut self) -> Result<i64, String> {
        let neg = self.eat(b'-');
        let t = self.take_while(|c| c.is_ascii_digit());
        let v: i64 = t.parse().map_err(|_| "expected an integer".to_string())?;
        Ok(if neg { -v } else { v })
    }

    fn done(&mut self) -> bool {
        self.peek().is_none()
    }
}

fn number_factor(c: &mut Cursor) -> Result<Interval, String> {
    let base = if c.eat(b'(') {
        let v = number_expr(c)?;
        if !c.eat(b')') {
            return Err("missing ')'".into());
        }
        v
    } else {
        let lit = c.take_while(|b| b.is_ascii_digit() || b == b'.');
        if lit.is_empty() {
            return Err("expected a number".into());
        }
        iv_from_decimal(lit).map_err(|e| e.to_string())?
    };
    if c.eat(b'^') {
        let p = c.int()?;
        return if p >= 0 {
            Ok(base.powi(p as u64))
        } else {
            base.powi((-p) as u64).recip().map_err(|e| e.to_string())
        };
    }
    Ok(base)
}

fn number_expr(c: &mut Cursor) -> Result<Interval, String> {
    let mut acc = number_factor(c)?;
    loop {
        if c.eat(b'*') {
            acc = acc * number_factor(c)?;
        } else if c.eat(b'/') {
            acc = acc.div(number_factor(c)?).map_err(|e| e.to_string())?;
        } else {
            return Ok(acc);
        }
    }
}

/// Parses a number expression such as `1.8278^11` or `2.2254706*1.9517`.
pub fn parse_number(text: &str) -> Result<Interval, SyntaxError> {
    let err = |reason: String| SyntaxError {
        text: text.into(),
        reason,
    };
    let mut c = Cursor::new(text);
    let v = number_expr(&mut c).map_err(err)?;
    if !c.done() {
        return Err(err("trailing input".into()));
    }
    Ok(v)
}

fn var(c: &mut Cursor) -> Result<usize, String> {
    if !c.eat(b'B') {
        return Err("expected B<index>".into());
    }
    let t = c.take_while(|b| b.is_ascii_digit());
    t.parse()
        .map_err(|_| "expected an index after B".to_string())
}

fn exponent(c: &mut Cursor) -> Result<Exp, String> {
    if !c.eat(b'^') {
        return Ok(Exp::from_integer(1));
    }
    if c.eat(b'(') {
        let p = c.int()?;
        let q = if c.eat(b'/') { c.int()? } else { 1 };
        if !c.eat(b')') || q == 0 {
            return Err("bad exponent".into());
        }
        return Ok(Ratio::new(p, q));
    }
    Ok(Exp::from_integer(c.int()?))
}

// Monomial in B's: factors joined by * and /, a parenthesized product after /.
fn monomial(c: &mut Cursor, out: &mut Vec<(usize, Exp)>, sign: i64) -> Result<(), String> {
    let mut sign_next = sign;
    loop {
        if c.eat(b'(') {
            monomial(c, out, sign_next)?;
            if !c.eat(b')') {
                return Err("missing ')'".into());
            }
        } else {
            let v = var(c)?;
            let e = exponent(c)?;
            out.push((v, e * sign_next));
        }
        if c.eat(b'*') {
            sign_next = sign;
        } else if c.eat(b'/') {
            sign_next = -sign;
        } else {
            return Ok(());
        }
    }
}

fn merge(powers: Vec<(usize, Exp)>) -> Vec<(usize, Exp)> {
    let mut out: Vec<(usize, Exp)> = Vec::new();
    for (v, e) in powers {
        match out.iter_mut().find(|p| p.0 == v) {
            Some(p) => p.1 += e,
            None => out.push((v, e)),
        }
    }
    out.retain(|p| p.1 != Exp::from_integer(0));
    out.sort_by_key(|p| p.0);
    out
}

/// Parses one constraint.
pub fn parse_constraint(text: &str) -> Result<Constraint, SyntaxError> {
    let err = |reason: String| SyntaxError {
        text: text.into(),
        reason,
    };
    let mut c = Cursor::new(text);
    let mut lhs = Vec::new();
    monomial(&mut c, &mut lhs, 1).map_err(err)?;
    let lower = if c.eat_str(">=") || c.eat(b'>') {
        true
    } else if c.eat_str("<=") || c.eat(b'<') {
        false
    } else {
        return Err(err("expected a relation".into()));
    };
    let powers = merge(lhs);
    let single = match powers.as_slice() {
        [(v, e)] if *e == Exp::from_integer(1) => Some(*v),
        _ => None,
    };
    let out = if c.eat_str("max(") {
        let i = single.ok_or_else(|| err("max(..) needs a single B on the left".into()))?;
        let j = var(&mut c).map_err(err)?;
        if !c.eat_str("..") || !c.eat(b')') || j != i + 1 {
            return Err(err(format!("expected max(B{}..)", i + 1)));
        }
        if lower {
            Constraint::Dominates(i)
        } else {
            Constraint::BelowTail(i)
        }
    } else if c.peek() == Some(b'B') {
        let i = single
            .ok_or_else(|| err("comparison of two B's needs a single B on the left".into()))?;
        let j = var(&mut c).map_err(err)?;
        if lower {
            Constraint::Ge { a: i, b: j }
        } else {
            Constraint::Ge { a: j, b: i }
        }
    } else {
        let value = number_expr(&mut c).map_err(err)?;
        match single {
            Some(var) if lower => Constraint::AtLeast { var, value },
            Some(var) => Constraint::AtMost { var, value },
            None => Constraint::Mono {
                powers,
                side: if lower { Side::Lower } else { Side::Upper },
                value,
            },
        }
    };
    if !c.done() {
        return Err(err("trailing input".into()));
    }
    Ok(out)
}
