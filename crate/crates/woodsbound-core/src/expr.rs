//! Sums of power monomials `c·∏ x_j^{e_j}` with rational exponents.

use alloc::vec::Vec;
use core::fmt;

use num_rational::Ratio;
use num_traits::{One, Zero};

use crate::interval::{Interval, IntervalError};

/// Rational exponent.
pub type Exp = Ratio<i64>;

/// `coef · ∏ x_var^exp`, with variables sorted and exponents nonzero.
#[derive(Debug, Clone, PartialEq)]
pub struct Monomial {
    pub coef: Interval,
    powers: Vec<(usize, Exp)>,
}

pub(crate) fn pow_exp(x: Interval, e: Exp) -> Result<Interval, IntervalError> {
    let (p, q) = (*e.numer(), *e.denom());
    if q == 1 {
        if p == 1 {
            return Ok(x);
        }
        if p == -1 {
            return x.recip();
        }
        if p > 0 {
            return Ok(x.powi(p as u64));
        }
    }
    x.pow_rational(p, q as u64)
}

impl Monomial {
    pub fn constant(c: Interval) -> Self {
        Self {
            coef: c,
            powers: Vec::new(),
        }
    }

    /// `x_var`.
    pub fn var(var: usize) -> Self {
        Self {
            coef: Interval::point(1.0),
            powers: alloc::vec![(var, Exp::one())],
        }
    }

    /// Builds a monomial from unsorted `(var, exponent)` pairs, merging repeats.
    pub fn new(coef: Interval, powers: &[(usize, Exp)]) -> Self {
        let mut m = Self::constant(coef);
        for &(v, e) in powers {
            m.add_exp(v, e);
        }
        m
    }

    pub fn powers(&self) -> &[(usize, Exp)] {
        &self.powers
    }

    pub fn exponent(&self, var: usize) -> Exp {
        self.powers
            .iter()
            .find(|p| p.0 == var)
            .map(|p| p.1)
            .unwrap_or_else(Exp::zero)
    }

    /// Multiplies in `x_var^e`.
    pub fn add_exp(&mut self, var: usize, e: Exp) {
        if e.is_zero() {
            return;
        }
        match self.powers.binary_search_by(|p| p.0.cmp(&var)) {
            Ok(i) => {
                let ne = self.powers[i].1 + e;
                if ne.is_zero() {
                    self.powers.remove(i);
                } else {
                    self.powers[i].1 = ne;
                }
            }
            Err(i) => self.powers.insert(i, (var, e)),
        }
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let mut m = self.clone();
        m.coef = m.coef * other.coef;
        for &(v, e) in &other.powers {
            m.add_exp(v, e);
        }
        m
    }

    /// `self^e`; the coefficient must be positive when `e` is fractional.
    pub fn pow(&self, e: Exp) -> Result<Monomial, IntervalError> {
        let coef = pow_exp(self.coef, e)?;
        let powers = self.powers.iter().map(|&(v, x)| (v, x * e)).collect();
        Ok(Monomial { coef, powers })
    }

    /// Multiplies by `(x_0 ⋯ x_{n−1})^t`. Under the constraint ∏x = 1 this
    /// leaves the value unchanged.
    pub fn times_full_product(&self, t: Exp, n: usize) -> Monomial {
        let mut m = self.clone();
        for v in 0..n {
            m.add_exp(v, t);
        }
        m
    }

    /// Interval enclosure at the given variable boxes.
    pub fn eval(&self, x: &[Interval]) -> Result<Interval, IntervalError> {
        let mut acc = self.coef;
        for &(v, e) in &self.powers {
            acc = acc * pow_exp(x[v], e)?;
        }
        Ok(acc)
    }

    /// Enclosure of the monomial part without the coefficient.
    pub fn eval_unit(&self, x: &[Interval]) -> Result<Interval, IntervalError> {
        let mut acc = Interval::point(1.0);
        for &(v, e) in &self.powers {
            acc = acc * pow_exp(x[v], e)?;
        }
        Ok(acc)
    }

    /// Renames variables through `map` (old index → new index), merging.
    pub fn remap(&self, map: impl Fn(usize) -> Option<usize>) -> Monomial {
        let mut m = Monomial::constant(self.coef);
        for &(v, e) in &self.powers {
            if let Some(w) = map(v) {
                m.add_exp(w, e);
            }
        }
        m
    }

    pub fn is_negative(&self) -> bool {
        self.coef.hi() < 0.0
    }
}

/// A sum of monomials.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Expr {
    pub terms: Vec<Monomial>,
}

impl Expr {
    pub fn new(terms: Vec<Monomial>) -> Self {
        Self { terms }
    }

    pub fn eval(&self, x: &[Interval]) -> Result<Interval, IntervalError> {
        let mut acc = Interval::point(0.0);
        for t in &self.terms {
            acc = acc + t.eval(x)?;
        }
        Ok(acc)
    }

    /// Variables that occur, ascending.
    pub fn vars(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self
            .terms
            .iter()
            .flat_map(|t| t.powers.iter().map(|p| p.0))
            .collect();
        v.sort_unstable();
        v.dedup();
        v
    }
}

/// Weighted AM-GM on negative terms: `−Σ c_i M_i ≤ −k (∏ c_i M_i)^{1/k}`
/// for positive `c_i M_i`. Returns the single replacement term.
pub fn amgm_merge(terms: &[Monomial]) -> Result<Monomial, IntervalError> {
    let k = terms.len() as i64;
    let mut prod = Monomial::constant(Interval::point(1.0));
    for t in terms {
        let mut pos = t.clone();
        pos.coef = -pos.coef;
        prod = prod.mul(&pos);
    }
    let mut root = prod.pow(Exp::new(1, k))?;
    root.coef = -(Interval::int(k) * root.coef);
    Ok(root)
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = self.coef.mid();
        write!(f, "{}", fmt_num(c))?;
        for &(v, e) in &self.powers {
            if e.is_one() {
                write!(f, "*B{}", v + 1)?;
            } else if e.is_integer() {
                write!(f, "*B{}^{}", v + 1, e.numer())?;
            } else {
                write!(f, "*B{}^({}/{})", v + 1, e.numer(), e.denom())?;
            }
        }
        Ok(())
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, t) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{t}")?;
        }
        Ok(())
    }
}

fn fmt_num(c: f64) -> alloc::string::String {
    let r = libm::round(c * 1e9) / 1e9;
    alloc::format!("{r}")
}
