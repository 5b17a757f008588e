//! Closed intervals with binary64 endpoints and outward rounding.
//!
//! Every operation rounds to nearest and then inspects the exact rounding
//! error (two-sum, fused multiply-add remainders) to decide whether the
//! endpoint has to move one ulp outward. Exact results therefore stay exact.

use core::cmp::Ordering;
use core::fmt;
use core::ops::{Add, Mul, Neg, Sub};

use num_integer::Integer;

/// Errors raised by interval operations.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum IntervalError {
    #[error("invalid interval endpoints")]
    InvalidEndpoints,
    #[error("division by an interval containing zero")]
    DivisionByZero,
    #[error("rational power {p}/{q} needs a strictly positive base")]
    NonPositiveBase { p: i64, q: u64 },
    #[error("zero denominator in rational exponent")]
    ZeroDenominator,
}

/// A closed interval `[lo, hi]` of extended reals. Neither endpoint is NaN.
#[derive(Clone, Copy, PartialEq)]
pub struct Interval {
    lo: f64,
    hi: f64,
}

impl fmt::Debug for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{:e}, {:e}]", self.lo, self.hi)
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

#[inline]
fn fma(a: f64, b: f64, c: f64) -> f64 {
    #[cfg(feature = "std")]
    {
        extern crate std;
        a.mul_add(b, c)
    }
    #[cfg(not(feature = "std"))]
    {
        libm::fma(a, b, c)
    }
}

// Products below this magnitude may lose bits of the fma remainder.
const TINY: f64 = 1e-290;

#[inline]
fn two_sum_err(a: f64, b: f64, s: f64) -> f64 {
    let bb = s - a;
    (a - (s - bb)) + (b - bb)
}

pub(crate) fn add_down(a: f64, b: f64) -> f64 {
    let s = a + b;
    if !s.is_finite() {
        return if s == f64::INFINITY && a.is_finite() && b.is_finite() {
            f64::MAX
        } else {
            s
        };
    }
    if two_sum_err(a, b, s) < 0.0 {
        s.next_down()
    } else {
        s
    }
}

pub(crate) fn add_up(a: f64, b: f64) -> f64 {
    let s = a + b;
    if !s.is_finite() {
        return if s == f64::NEG_INFINITY && a.is_finite() && b.is_finite() {
            f64::MIN
        } else {
            s
        };
    }
    if two_sum_err(a, b, s) > 0.0 {
        s.next_up()
    } else {
        s
    }
}

fn mul_err_sign(a: f64, b: f64, p: f64) -> Option<Ordering> {
    if !p.is_finite() || (p != 0.0 && p.abs() < TINY) || (p == 0.0 && a != 0.0 && b != 0.0) {
        return None;
    }
    let e = fma(a, b, -p);
    e.partial_cmp(&0.0)
}

pub(crate) fn mul_down(a: f64, b: f64) -> f64 {
    if a == 0.0 || b == 0.0 {
        return 0.0;
    }
    let p = a * b;
    match mul_err_sign(a, b, p) {
        Some(Ordering::Less) => p.next_down(),
        Some(_) => p,
        None => {
            if p == f64::INFINITY {
                f64::MAX
            } else {
                p.next_down()
            }
        }
    }
}

pub(crate) fn mul_up(a: f64, b: f64) -> f64 {
    if a == 0.0 || b == 0.0 {
        return 0.0;
    }
    let p = a * b;
    match mul_err_sign(a, b, p) {
        Some(Ordering::Greater) => p.next_up(),
        Some(_) => p,
        None => {
            if p == f64::NEG_INFINITY {
                f64::MIN
            } else {
                p.next_up()
            }
        }
    }
}

// Sign of (a/b - q), with b nonzero and finite.
fn div_err_sign(a: f64, b: f64, q: f64) -> Option<Ordering> {
    if !q.is_finite() || !a.is_finite() || q.abs() < TINY || a.abs() < TINY {
        return None;
    }
    let r = fma(-q, b, a);
    let s = r.partial_cmp(&0.0)?;
    Some(if b > 0.0 { s } else { s.reverse() })
}

pub(crate) fn div_down(a: f64, b: f64) -> f64 {
    if a == 0.0 {
        return 0.0;
    }
    if b.is_infinite() {
        return if (a > 0.0) == (b > 0.0) {
            0.0
        } else {
            -f64::MIN_POSITIVE
        };
    }
    let q = a / b;
    match div_err_sign(a, b, q) {
        Some(Ordering::Less) => q.next_down(),
        Some(_) => q,
        None => {
            if q == f64::INFINITY && a.is_finite() {
                f64::MAX
            } else {
                q.next_down()
            }
        }
    }
}

pub(crate) fn div_up(a: f64, b: f64) -> f64 {
    if a == 0.0 {
        return 0.0;
    }
    if b.is_infinite() {
        return if (a > 0.0) == (b > 0.0) {
            f64::MIN_POSITIVE
        } else {
            0.0
        };
    }
    let q = a / b;
    match div_err_sign(a, b, q) {
        Some(Ordering::Greater) => q.next_up(),
        Some(_) => q,
        None => {
            if q == f64::NEG_INFINITY && a.is_finite() {
                f64::MIN
            } else {
                q.next_up()
            }
        }
    }
}

// x^n for x >= 0, rounded down/up.
fn powi_dir(x: f64, n: u64, up: bool) -> f64 {
    let mul = if up { mul_up } else { mul_down };
    let mut acc = 1.0;
    let mut base = x;
    let mut e = n;
    while e > 0 {
        if e & 1 == 1 {
            acc = mul(acc, base);
        }
        e >>= 1;
        if e > 0 {
            base = mul(base, base);
        }
    }
    acc
}

// Largest-known r with r^q <= y (down) or smallest with r^q >= y (up), y > 0.
fn root_dir(y: f64, q: u64, up: bool) -> f64 {
    if q == 1 {
        return y;
    }
    if y == f64::INFINITY {
        return if up { f64::INFINITY } else { f64::MAX };
    }
    let mut r = libm::pow(y, 1.0 / q as f64);
    if !r.is_finite() || r <= 0.0 {
        r = if up { f64::MAX } else { f64::MIN_POSITIVE };
    }
    let mut step = 1u32;
    loop {
        if up {
            if powi_dir(r, q, false) >= y {
                return r;
            }
            for _ in 0..step {
                r = r.next_up();
            }
        } else {
            if powi_dir(r, q, true) <= y {
                return r;
            }
            for _ in 0..step {
                r = r.next_down();
            }
            if r <= 0.0 {
                return 0.0;
            }
        }
        step = (step * 2).min(1 << 20);
    }
}

impl Interval {
    /// Builds `[lo, hi]`, rejecting NaN and reversed endpoints.
    pub fn new(lo: f64, hi: f64) -> Result<Self, IntervalError> {
        if lo.is_nan() || hi.is_nan() || lo > hi {
            return Err(IntervalError::InvalidEndpoints);
        }
        Ok(Self { lo, hi })
    }

    /// The degenerate interval `[x, x]`. Panics on NaN.
    pub fn point(x: f64) -> Self {
        assert!(!x.is_nan(), "NaN endpoint");
        Self { lo: x, hi: x }
    }

    /// Integer-valued point interval.
    pub fn int(k: i64) -> Self {
        let x = k as f64;
        if x as i64 == k && x.abs() <= 9_007_199_254_740_992.0 {
            Self { lo: x, hi: x }
        } else {
            Self {
                lo: x.next_down(),
                hi: x.next_up(),
            }
        }
    }

    /// Enclosure of the rational number `p/q`.
    pub fn ratio(p: i64, q: i64) -> Result<Self, IntervalError> {
        Self::int(p).div(Self::int(q))
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn is_point(&self) -> bool {
        self.lo == self.hi
    }

    pub fn width(&self) -> f64 {
        add_up(self.hi, -self.lo)
    }

    /// A representable point inside the interval.
    pub fn mid(&self) -> f64 {
        if self.lo.is_infinite() || self.hi.is_infinite() {
            if self.lo.is_finite() {
                return self.lo;
            }
            if self.hi.is_finite() {
                return self.hi;
            }
            return 0.0;
        }
        let m = self.lo * 0.5 + self.hi * 0.5;
        m.clamp(self.lo, self.hi)
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn contains_interval(&self, other: &Interval) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    pub fn contains_zero(&self) -> bool {
        self.lo <= 0.0 && 0.0 <= self.hi
    }

    pub fn intersect(&self, other: &Interval) -> Option<Interval> {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        if lo <= hi {
            Some(Interval { lo, hi })
        } else {
            None
        }
    }

    pub fn hull(&self, other: &Interval) -> Interval {
        Interval {
            lo: self.lo.min(other.lo),
            hi: self.hi.max(other.hi),
        }
    }

    /// Enclosure of `max(x, y)` for `x` in `self`, `y` in `other`.
    pub fn max(&self, other: &Interval) -> Interval {
        Interval {
            lo: self.lo.max(other.lo),
            hi: self.hi.max(other.hi),
        }
    }

    /// Enclosure of `min(x, y)`.
    pub fn min(&self, other: &Interval) -> Interval {
        Interval {
            lo: self.lo.min(other.lo),
            hi: self.hi.min(other.hi),
        }
    }

    /// True when every member is `<=` every member of `other`.
    pub fn certainly_le(&self, other: &Interval) -> bool {
        self.hi <= other.lo
    }

    /// True when every member is `<` every member of `other`.
    pub fn certainly_lt(&self, other: &Interval) -> bool {
        self.hi < other.lo
    }

    /// Division; errors when `other` contains zero.
    pub fn div(self, other: Interval) -> Result<Interval, IntervalError> {
        if other.contains_zero() {
            return Err(IntervalError::DivisionByZero);
        }
        let (a, b) = (self, other);
        let cands_lo = [
            div_down(a.lo, b.lo),
            div_down(a.lo, b.hi),
            div_down(a.hi, b.lo),
            div_down(a.hi, b.hi),
        ];
        let cands_hi = [
            div_up(a.lo, b.lo),
            div_up(a.lo, b.hi),
            div_up(a.hi, b.lo),
            div_up(a.hi, b.hi),
        ];
        Ok(Interval {
            lo: min4(cands_lo),
            hi: max4(cands_hi),
        })
    }

    pub fn recip(self) -> Result<Interval, IntervalError> {
        Interval::point(1.0).div(self)
    }

    /// Enclosure of `{x^(p/q) : x in self}`.
    ///
    /// Fractional or negative exponents need `self.lo > 0`.
    pub fn pow_rational(self, p: i64, q: u64) -> Result<Interval, IntervalError> {
        if q == 0 {
            return Err(IntervalError::ZeroDenominator);
        }
        let g = (p.unsigned_abs()).gcd(&q);
        let (p, q) = if g > 1 { (p / g as i64, q / g) } else { (p, q) };
        if p == 0 {
            return Ok(Interval::point(1.0));
        }
        if (q > 1 || p < 0) && self.lo <= 0.0 {
            return Err(IntervalError::NonPositiveBase { p, q });
        }
        if q == 1 && p > 0 {
            return Ok(self.powi(p as u64));
        }
        let m = p.unsigned_abs();
        let lo = root_dir(powi_dir(self.lo, m, false), q, false);
        let hi = root_dir(powi_dir(self.hi, m, true), q, true);
        let pos = Interval { lo, hi };
        if p < 0 {
            pos.recip()
        } else {
            Ok(pos)
        }
    }

    /// Enclosure of `{x^n : x in self}` for a natural exponent.
    pub fn powi(self, n: u64) -> Interval {
        if n == 0 {
            return Interval::point(1.0);
        }
        if self.lo >= 0.0 {
            return Interval {
                lo: powi_dir(self.lo, n, false),
                hi: powi_dir(self.hi, n, true),
            };
        }
        if self.hi <= 0.0 {
            let a = -self.hi;
            let b = -self.lo;
            return if n % 2 == 0 {
                Interval {
                    lo: powi_dir(a, n, false),
                    hi: powi_dir(b, n, true),
                }
            } else {
                Interval {
                    lo: -powi_dir(b, n, true),
                    hi: -powi_dir(a, n, false),
                }
            };
        }
        let top = powi_dir(self.hi, n, true);
        let bottom = powi_dir(-self.lo, n, true);
        if n % 2 == 0 {
            Interval {
                lo: 0.0,
                hi: top.max(bottom),
            }
        } else {
            Interval {
                lo: -bottom,
                hi: top,
            }
        }
    }

    /// Splits at the midpoint.
    pub fn bisect(&self) -> (Interval, Interval) {
        let m = self.mid();
        (
            Interval { lo: self.lo, hi: m },
            Interval { lo: m, hi: self.hi },
        )
    }

    /// Same interval with the lower endpoint raised to at least `x`.
    pub(crate) fn with_lo_at_least(&self, x: f64) -> Interval {
        Interval {
            lo: self.lo.max(x),
            hi: self.hi,
        }
    }

    /// Same interval with the upper endpoint lowered to at most `x`.
    pub(crate) fn with_hi_at_most(&self, x: f64) -> Interval {
        Interval {
            lo: self.lo,
            hi: self.hi.min(x),
        }
    }

    /// Unchecked construction for internal use where `lo <= hi` may fail
    /// transiently (emptiness is detected by the caller).
    pub(crate) fn raw(lo: f64, hi: f64) -> Interval {
        Interval { lo, hi }
    }
}

fn min4(v: [f64; 4]) -> f64 {
    v.iter().copied().fold(f64::INFINITY, f64::min)
}

fn max4(v: [f64; 4]) -> f64 {
    v.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

impl Add for Interval {
    type Output = Interval;
    fn add(self, o: Interval) -> Interval {
        Interval {
            lo: add_down(self.lo, o.lo),
            hi: add_up(self.hi, o.hi),
        }
    }
}

impl Sub for Interval {
    type Output = Interval;
    fn sub(self, o: Interval) -> Interval {
        Interval {
            lo: add_down(self.lo, -o.hi),
            hi: add_up(self.hi, -o.lo),
        }
    }
}

impl Neg for Interval {
    type Output = Interval;
    fn neg(self) -> Interval {
        Interval {
            lo: -self.hi,
            hi: -self.lo,
        }
    }
}

impl Mul for Interval {
    type Output = Interval;
    fn mul(self, o: Interval) -> Interval {
        let (a, b) = (self, o);
        if a.lo >= 0.0 && b.lo >= 0.0 {
            return Interval {
                lo: mul_down(a.lo, b.lo),
                hi: mul_up(a.hi, b.hi),
            };
        }
        let lo = min4([
            mul_down(a.lo, b.lo),
            mul_down(a.lo, b.hi),
            mul_down(a.hi, b.lo),
            mul_down(a.hi, b.hi),
        ]);
        let hi = max4([
            mul_up(a.lo, b.lo),
            mul_up(a.lo, b.hi),
            mul_up(a.hi, b.lo),
            mul_up(a.hi, b.hi),
        ]);
        Interval { lo, hi }
    }
}

/// The four arithmetic operations, as a value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Div,
}

/// Applies `op` with outward rounding.
pub fn iv_arith(op: ArithOp, a: Interval, b: Interval) -> Result<Interval, IntervalError> {
    match op {
        ArithOp::Add => Ok(a + b),
        ArithOp::Sub => Ok(a - b),
        ArithOp::Mul => Ok(a * b),
        ArithOp::Div => a.div(b),
    }
}

/// Enclosure of `a^(p/q)`.
pub fn iv_pow_rational(a: Interval, p: i64, q: u64) -> Result<Interval, IntervalError> {
    a.pow_rational(p, q)
}
