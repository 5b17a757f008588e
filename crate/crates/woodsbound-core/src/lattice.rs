//! Interval bounds on the squared reduced lengths B_1..B_n together with the
//! order facts known about them, and the propagation rules that tighten them.
//!
//! All indices in the public API are 1-based, matching B_1..B_n.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::constants::{ConstantsError, ConstantsTable, MAX_TABLE_DIM};
use crate::expr::{pow_exp, Exp};
use crate::interval::{div_up, mul_down, mul_up, Interval};

/// The box became empty: the hypotheses that built it are contradictory.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Infeasible {
    /// 1-based index whose interval emptied, or 0 for a product violation.
    pub index: usize,
    pub reason: InfeasibleReason,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InfeasibleReason {
    EmptyInterval,
    ProductAboveOne,
    ProductBelowOne,
    MonomialBound,
}

impl core::fmt::Display for Infeasible {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self.reason {
            InfeasibleReason::EmptyInterval => write!(f, "bounds on B{} are empty", self.index),
            InfeasibleReason::ProductAboveOne => write!(f, "product of lower bounds exceeds 1"),
            InfeasibleReason::ProductBelowOne => write!(f, "product of upper bounds is below 1"),
            InfeasibleReason::MonomialBound => write!(f, "a monomial bound cannot be met"),
        }
    }
}

/// Which side of a bound a hypothesis fixes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// B_i ≥ value
    Lower,
    /// B_i ≤ value
    Upper,
}

/// A fact about the B_i that can be added to a box.
#[derive(Debug, Clone, PartialEq)]
pub enum Constraint {
    /// B_var ≥ value (the enclosure's lower end is used).
    AtLeast { var: usize, value: Interval },
    /// B_var ≤ value (the enclosure's upper end is used).
    AtMost { var: usize, value: Interval },
    /// B_a ≥ B_b.
    Ge { a: usize, b: usize },
    /// B_i ≥ B_j for every j > i.
    Dominates(usize),
    /// B_i ≤ max{B_j : j > i}.
    BelowTail(usize),
    /// ∏ B_var^exp compared with value (Lower: ≥, Upper: ≤).
    Mono {
        powers: Vec<(usize, Exp)>,
        side: Side,
        value: Interval,
    },
}

impl Constraint {
    /// The closed complement: the two constraints together cover everything.
    pub fn complement(&self) -> Constraint {
        match self {
            &Constraint::AtLeast { var, value } => Constraint::AtMost { var, value },
            &Constraint::AtMost { var, value } => Constraint::AtLeast { var, value },
            &Constraint::Ge { a, b } => Constraint::Ge { a: b, b: a },
            &Constraint::Dominates(i) => Constraint::BelowTail(i),
            &Constraint::BelowTail(i) => Constraint::Dominates(i),
            Constraint::Mono {
                powers,
                side,
                value,
            } => {
                let side = match side {
                    Side::Lower => Side::Upper,
                    Side::Upper => Side::Lower,
                };
                Constraint::Mono {
                    powers: powers.clone(),
                    side,
                    value: *value,
                }
            }
        }
    }

    /// Largest index mentioned.
    pub fn max_index(&self) -> usize {
        match self {
            &Constraint::AtLeast { var, .. } | &Constraint::AtMost { var, .. } => var,
            &Constraint::Ge { a, b } => a.max(b),
            &Constraint::Dominates(i) | &Constraint::BelowTail(i) => i,
            Constraint::Mono { powers, .. } => powers.iter().map(|p| p.0).max().unwrap_or(0),
        }
    }

    /// Smallest index mentioned.
    pub fn min_index(&self) -> usize {
        match self {
            &Constraint::AtLeast { var, .. } | &Constraint::AtMost { var, .. } => var,
            &Constraint::Ge { a, b } => a.min(b),
            &Constraint::Dominates(i) | &Constraint::BelowTail(i) => i,
            Constraint::Mono { powers, .. } => powers.iter().map(|p| p.0).min().unwrap_or(0),
        }
    }
}

/// Shortest decimal inside the enclosure, so a parsed `1.7046` prints back
/// as written.
fn short_decimal(x: Interval) -> f64 {
    let m = x.mid();
    for digits in 0..17 {
        let t: f64 = alloc::format!("{m:.digits$e}").parse().unwrap_or(m);
        if x.lo() <= t && t <= x.hi() {
            return t;
        }
    }
    m
}

impl core::fmt::Display for Constraint {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            Constraint::AtLeast { var, value } => write!(f, "B{var} >= {}", short_decimal(*value)),
            Constraint::AtMost { var, value } => write!(f, "B{var} <= {}", short_decimal(*value)),
            Constraint::Ge { a, b } => write!(f, "B{a} >= B{b}"),
            Constraint::Dominates(i) => write!(f, "B{i} >= max(B{}..)", i + 1),
            Constraint::BelowTail(i) => write!(f, "B{i} <= max(B{}..)", i + 1),
            Constraint::Mono {
                powers,
                side,
                value,
            } => {
                for (k, (v, e)) in powers.iter().enumerate() {
                    if k > 0 {
                        write!(f, "*")?;
                    }
                    if *e == Exp::from_integer(1) {
                        write!(f, "B{v}")?;
                    } else {
                        write!(f, "B{v}^({e})")?;
                    }
                }
                match side {
                    Side::Lower => write!(f, " >= {}", short_decimal(*value)),
                    Side::Upper => write!(f, " <= {}", short_decimal(*value)),
                }
            }
        }
    }
}

/// Errors building a box.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BoxError {
    #[error("unsupported dimension {0}")]
    UnsupportedDimension(usize),
    #[error("index {index} outside 1..={n}")]
    BadIndex { index: usize, n: usize },
    #[error(transparent)]
    Constants(#[from] ConstantsError),
    #[error(transparent)]
    Interval(#[from] crate::interval::IntervalError),
    #[error("the initial box is infeasible: {0}")]
    Infeasible(Infeasible),
}

/// Dimension-dependent data shared by every box of that dimension.
#[derive(Debug)]
pub struct BoxRules {
    n: usize,
    eps: Interval,
    three_quarters: f64,
    two_thirds_lo: f64,
    // γ_e^e (upper) indexed by e = 1..=n
    hermite_pow: Vec<f64>,
    // Upper bound on B_1⋯B_s from the Hermite chain, indexed by s = 0..=n.
    chain_mu: Vec<Interval>,
    // Lower-bound coefficient f(r) of the ε-chains on consecutive B_i, r = 0..=n.
    chain_coef: Vec<Interval>,
    gamma_n: f64,
}

impl BoxRules {
    pub fn new(n: usize, consts: &ConstantsTable) -> Result<Self, BoxError> {
        if !(2..=MAX_TABLE_DIM).contains(&n) {
            return Err(BoxError::UnsupportedDimension(n));
        }
        let eps = consts.epsilon();
        let mut hermite_pow = vec![1.0; n + 1];
        for (e, slot) in hermite_pow.iter_mut().enumerate().skip(1) {
            *slot = consts.hermite_power(e)?.hi();
        }
        let mut chain_mu = vec![Interval::point(1.0); n + 1];
        for s in 1..n {
            let mut prod = Interval::point(1.0);
            for j in 0..s {
                let d = n - j;
                prod = prod * consts.hermite_bound(d)?.pow_rational(1, (d - 1) as u64)?;
            }
            chain_mu[s] = prod.powi((n - s) as u64);
        }
        let mut chain_coef = Vec::with_capacity(n + 1);
        for r in 0..=n {
            chain_coef.push(chain_coefficient(r, eps));
        }
        Ok(Self {
            n,
            eps,
            three_quarters: 0.75,
            two_thirds_lo: Interval::ratio(2, 3)?.lo(),
            hermite_pow,
            chain_mu,
            chain_coef,
            gamma_n: consts.hermite_bound(n)?.hi(),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn epsilon(&self) -> Interval {
        self.eps
    }
}

/// Lower bound coefficient of a product of r consecutive B's relative to the
/// r-th power of the first (or, read backwards, of the last) one.
pub fn chain_coefficient(r: usize, eps: Interval) -> Interval {
    if r == 0 {
        return Interval::point(1.0);
    }
    let k = (r / 4) as u64;
    let four_k = Interval::point(4.0).powi(k);
    let res = match r % 4 {
        0 => eps.powi(k * (2 * k).saturating_sub(2)).div(four_k),
        1 => eps.powi(k * (2 * k).saturating_sub(1)).div(four_k),
        2 => (Interval::point(3.0) * eps.powi(2 * k * k)).div(Interval::point(4.0) * four_k),
        _ => eps.powi(k * (2 * k + 1)).div(Interval::point(2.0) * four_k),
    };
    res.expect("positive denominators")
}

/// One propagation rule; the set of rules is applied to a fixed point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rule {
    /// B_{i+1} ≥ ¾B_i and B_i ≤ (4/3)B_{i+1}
    Step1(usize),
    /// B_{i+2} ≥ ⅔B_i and B_i ≤ (3/2)B_{i+2}
    Step2(usize),
    /// B_{i+4} ≥ εB_i and B_i ≤ B_{i+4}/ε
    Step4(usize),
    /// B_i ≤ B_1
    Head(usize),
    /// A recorded order fact B_a ≥ B_b (0-based pair index).
    Order(usize),
    /// A recorded cap B_i ≤ max(floor, max tail) (cap list index).
    Cap(usize),
    /// B_1⋯B_{s−1}·B_s^{n−s+1} ≤ γ_{n−s+1}^{n−s+1}
    Hermite(usize),
    /// A recorded monomial bound (list index).
    Mono(usize),
}

/// The constraint state: intervals, order facts and tail caps.
#[derive(Debug, Clone)]
pub struct BoundBox {
    rules: Arc<BoxRules>,
    b: Vec<Interval>,
    // order[a * n + b] = B_a ≥ B_b is known (0-based, transitively closed)
    order: Vec<bool>,
    caps: Vec<(usize, f64)>,
    monos: Vec<MonoFact>,
}

/// A recorded monomial bound, 0-based variables.
#[derive(Debug, Clone, PartialEq)]
pub struct MonoFact {
    pub powers: Vec<(usize, Exp)>,
    /// true: monomial ≤ value; false: monomial ≥ value.
    pub upper: bool,
    pub value: f64,
}

impl MonoFact {
    /// Enclosure of the monomial over the bounds.
    pub fn eval(&self, b: &[Interval]) -> Option<Interval> {
        let mut acc = Interval::point(1.0);
        for &(v, e) in &self.powers {
            acc = acc * pow_exp(b[v], e).ok()?;
        }
        Some(acc)
    }
}

impl PartialEq for BoundBox {
    fn eq(&self, other: &Self) -> bool {
        self.b == other.b
            && self.order == other.order
            && self.caps == other.caps
            && self.monos == other.monos
    }
}

impl BoundBox {
    /// The opening box for dimension k: B_1 ∈ [1, γ_k], Hermite caps on every
    /// B_s, B_k ∈ [l_k, m_k], then propagation.
    pub fn new(k: usize, consts: &ConstantsTable) -> Result<Self, BoxError> {
        let rules = Arc::new(BoxRules::new(k, consts)?);
        Self::with_rules(rules, consts)
    }

    pub fn with_rules(rules: Arc<BoxRules>, consts: &ConstantsTable) -> Result<Self, BoxError> {
        let n = rules.n;
        let g = rules.gamma_n;
        let mut b = vec![Interval::raw(0.0, g); n];
        b[0] = Interval::raw(1.0, g);
        // Using B_j ≥ f(j)B_1 ≥ f(j)B_s for j < s gives B_s^n·∏f ≤ γ_e^e.
        for s in 1..n {
            let chain = rules.chain_coef[s];
            let cap = Interval::point(rules.hermite_pow[n - s])
                .div(chain)
                .ok()
                .and_then(|x| x.pow_rational(1, n as u64).ok());
            if let Some(cap) = cap {
                b[s] = b[s].with_hi_at_most(cap.hi());
            }
        }
        if n >= 7 {
            let (l, m) = consts.bn_range(n)?;
            b[n - 1] = b[n - 1].with_lo_at_least(l.lo()).with_hi_at_most(m.hi());
        }
        let mut order = vec![false; n * n];
        for j in 0..n {
            order[j] = true;
            order[j * n + j] = true;
        }
        let mut bx = BoundBox {
            rules,
            b,
            order,
            caps: Vec::new(),
            monos: Vec::new(),
        };
        bx.propagate().map_err(BoxError::Infeasible)?;
        Ok(bx)
    }

    pub fn n(&self) -> usize {
        self.rules.n
    }

    pub fn rules(&self) -> &Arc<BoxRules> {
        &self.rules
    }

    /// Bounds on B_i (1-based).
    pub fn get(&self, i: usize) -> Interval {
        self.b[i - 1]
    }

    /// All bounds, B_1 first.
    pub fn bounds(&self) -> &[Interval] {
        &self.b
    }

    /// Is B_a ≥ B_b known (1-based)?
    pub fn knows_ge(&self, a: usize, b: usize) -> bool {
        self.order[(a - 1) * self.n() + (b - 1)]
    }

    /// Recorded caps as (1-based index, floor).
    pub fn caps(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.caps.iter().map(|&(i, f)| (i + 1, f))
    }

    /// Recorded monomial bounds.
    pub fn mono_facts(&self) -> &[MonoFact] {
        &self.monos
    }

    /// Replaces the bounds on B_i by their intersection with `value`,
    /// without propagating.
    pub fn restrict(&mut self, i: usize, value: Interval) -> Result<(), Infeasible> {
        let cur = self.b[i - 1];
        match cur.intersect(&value) {
            Some(v) => {
                self.b[i - 1] = v;
                Ok(())
            }
            None => Err(Infeasible {
                index: i,
                reason: InfeasibleReason::EmptyInterval,
            }),
        }
    }

    fn add_order(&mut self, a: usize, b: usize) {
        let n = self.n();
        if self.order[a * n + b] {
            return;
        }
        let above: Vec<usize> = (0..n).filter(|&x| self.order[x * n + a]).collect();
        let below: Vec<usize> = (0..n).filter(|&y| self.order[b * n + y]).collect();
        for &x in &above {
            for &y in &below {
                self.order[x * n + y] = true;
            }
        }
    }

    fn add_cap(&mut self, i: usize, floor: f64) {
        if let Some(c) = self.caps.iter_mut().find(|c| c.0 == i) {
            c.1 = c.1.min(floor);
        } else {
            self.caps.push((i, floor));
            self.caps.sort_by(|x, y| x.0.cmp(&y.0));
        }
    }

    /// Records B_i ≤ max(floor, max{B_j : j > i}) (1-based).
    pub fn add_tail_cap(&mut self, i: usize, floor: f64) {
        self.add_cap(i - 1, floor);
    }

    /// Adds a constraint without propagating.
    pub fn add_constraint(&mut self, c: &Constraint) -> Result<(), Infeasible> {
        let n = self.n();
        match *c {
            Constraint::Mono {
                ref powers,
                side,
                value,
            } => {
                let mut m = crate::expr::Monomial::constant(Interval::point(1.0));
                for &(v, e) in powers {
                    m.add_exp(v - 1, e);
                }
                let powers = m.powers().to_vec();
                if powers.is_empty() {
                    return Ok(());
                }
                let (upper, value) = match side {
                    Side::Upper => (true, value.hi()),
                    Side::Lower => (false, value.lo()),
                };
                if let Some(f) = self
                    .monos
                    .iter_mut()
                    .find(|f| f.powers == powers && f.upper == upper)
                {
                    f.value = if upper {
                        f.value.min(value)
                    } else {
                        f.value.max(value)
                    };
                } else {
                    self.monos.push(MonoFact {
                        powers,
                        upper,
                        value,
                    });
                }
            }
            Constraint::AtLeast { var, value } => {
                let cur = self.b[var - 1];
                self.restrict(var, Interval::raw(value.lo(), cur.hi().max(value.lo())))?;
            }
            Constraint::AtMost { var, value } => {
                let cur = self.b[var - 1];
                self.restrict(var, Interval::raw(cur.lo().min(value.hi()), value.hi()))?;
            }
            Constraint::Ge { a, b } => self.add_order(a - 1, b - 1),
            Constraint::Dominates(i) => {
                for j in i..n {
                    self.add_order(i - 1, j);
                }
            }
            Constraint::BelowTail(i) => {
                if i < n {
                    self.add_cap(i - 1, f64::NEG_INFINITY);
                }
            }
        }
        Ok(())
    }

    /// New box with the constraint added and propagated.
    pub fn apply(&self, c: &Constraint) -> Result<BoundBox, Infeasible> {
        let mut nb = self.clone();
        nb.add_constraint(c)?;
        nb.propagate()?;
        Ok(nb)
    }

    /// Intersects B_i with a half-line and propagates.
    pub fn intersect_hypothesis(
        &self,
        i: usize,
        side: Side,
        value: Interval,
    ) -> Result<BoundBox, Infeasible> {
        let c = match side {
            Side::Lower => Constraint::AtLeast { var: i, value },
            Side::Upper => Constraint::AtMost { var: i, value },
        };
        self.apply(&c)
    }

    /// The rules in their default order.
    pub fn rule_list(&self) -> Vec<Rule> {
        let n = self.n();
        let mut v = Vec::with_capacity(8 * n);
        for i in 0..n {
            if i + 1 < n {
                v.push(Rule::Step1(i));
            }
            if i + 2 < n {
                v.push(Rule::Step2(i));
            }
            if i + 4 < n {
                v.push(Rule::Step4(i));
            }
            if i > 0 {
                v.push(Rule::Head(i));
            }
            v.push(Rule::Hermite(i));
        }
        let mut k = 0;
        for a in 0..n {
            for b in 0..n {
                if a != b && self.order[a * n + b] && a != 0 {
                    v.push(Rule::Order(k));
                }
                k += 1;
            }
        }
        for c in 0..self.caps.len() {
            v.push(Rule::Cap(c));
        }
        for m in 0..self.monos.len() {
            v.push(Rule::Mono(m));
        }
        v
    }

    // Applies one rule; returns whether a bound moved.
    fn apply_rule(&mut self, r: Rule) -> bool {
        let n = self.n();
        let eps = self.rules.eps;
        let mut changed = false;
        let mut raise = |b: &mut [Interval], j: usize, x: f64| {
            if x > b[j].lo() {
                changed |= significant(b[j].lo(), x);
                b[j] = Interval::raw(x, b[j].hi());
            }
        };
        match r {
            Rule::Step1(i) => {
                let x = mul_down(self.b[i].lo(), self.rules.three_quarters);
                raise(&mut self.b, i + 1, x);
                let y = mul_up(self.b[i + 1].hi(), 4.0);
                let y = div_up(y, 3.0);
                changed |= self.lower_hi(i, y);
            }
            Rule::Step2(i) => {
                let x = mul_down(self.b[i].lo(), self.rules.two_thirds_lo);
                raise(&mut self.b, i + 2, x);
                let y = mul_up(self.b[i + 2].hi(), 1.5);
                changed |= self.lower_hi(i, y);
            }
            Rule::Step4(i) => {
                let x = mul_down(self.b[i].lo(), eps.lo());
                raise(&mut self.b, i + 4, x);
                let y = div_up(self.b[i + 4].hi(), eps.lo());
                changed |= self.lower_hi(i, y);
            }
            Rule::Head(i) => {
                let x = self.b[i].lo();
                raise(&mut self.b, 0, x);
                let y = self.b[0].hi();
                changed |= self.lower_hi(i, y);
            }
            Rule::Order(k) => {
                let (a, bb) = (k / n, k % n);
                let x = self.b[bb].lo();
                raise(&mut self.b, a, x);
                let y = self.b[a].hi();
                changed |= self.lower_hi(bb, y);
            }
            Rule::Cap(c) => {
                let (i, floor) = self.caps[c];
                let tail = self.b[i + 1..]
                    .iter()
                    .map(|x| x.hi())
                    .fold(f64::NEG_INFINITY, f64::max);
                changed |= self.lower_hi(i, tail.max(floor));
            }
            Rule::Mono(k) => {
                changed |= self.apply_mono(k);
            }
            Rule::Hermite(s) => {
                let e = n - s;
                let g = self.rules.hermite_pow[e];
                let mut p = 1.0;
                for j in 0..s {
                    p = mul_down(p, self.b[j].lo());
                }
                if p > 0.0 {
                    let q = div_up(g, p);
                    let cap = if e == 1 {
                        q
                    } else {
                        Interval::point(q)
                            .pow_rational(1, e as u64)
                            .map(|x| x.hi())
                            .unwrap_or(f64::INFINITY)
                    };
                    changed |= self.lower_hi(s, cap);
                }
            }
        }
        changed
    }

    fn lower_hi(&mut self, j: usize, y: f64) -> bool {
        if y < self.b[j].hi() {
            let old = self.b[j].hi();
            self.b[j] = Interval::raw(self.b[j].lo(), y);
            significant(old, y)
        } else {
            false
        }
    }

    fn raise_lo(&mut self, j: usize, y: f64) -> bool {
        if y > self.b[j].lo() {
            let old = self.b[j].lo();
            self.b[j] = Interval::raw(y, self.b[j].hi());
            significant(old, y)
        } else {
            false
        }
    }

    // ∏ x_v^{e_v} ≤ V gives x_u^{e_u} ≤ V / rest.lo; ≥ V gives x_u^{e_u} ≥ V / rest.hi.
    fn apply_mono(&mut self, k: usize) -> bool {
        let fact = &self.monos[k];
        let (upper, value) = (fact.upper, fact.value);
        let powers = fact.powers.clone();
        let mut changed = false;
        for (idx, &(u, eu)) in powers.iter().enumerate() {
            let mut rest = Interval::point(1.0);
            let mut ok = true;
            for (jdx, &(v, ev)) in powers.iter().enumerate() {
                if jdx != idx {
                    match pow_exp(self.b[v], ev) {
                        Ok(x) => rest = rest * x,
                        Err(_) => ok = false,
                    }
                }
            }
            if !ok {
                continue;
            }
            let r = if upper { rest.lo() } else { rest.hi() };
            if !(r > 0.0) || r.is_infinite() {
                continue;
            }
            let Ok(q) = Interval::point(value).div(Interval::point(r)) else {
                continue;
            };
            let qb = if upper { q.hi() } else { q.lo() };
            if !(qb > 0.0) || qb.is_infinite() {
                continue;
            }
            let inv = Exp::from_integer(1) / eu;
            let Ok(x) = pow_exp(Interval::point(qb), inv) else {
                continue;
            };
            // x_u^{e_u} ≤ qb: for e_u > 0 caps x_u above, for e_u < 0 below.
            let positive = eu > Exp::from_integer(0);
            if upper == positive {
                changed |= self.lower_hi(u, x.hi());
            } else {
                changed |= self.raise_lo(u, x.lo());
            }
        }
        changed
    }

    fn check(&self) -> Result<(), Infeasible> {
        for (i, x) in self.b.iter().enumerate() {
            if !(x.lo() <= x.hi()) {
                return Err(Infeasible {
                    index: i + 1,
                    reason: InfeasibleReason::EmptyInterval,
                });
            }
        }
        let mut plo = 1.0;
        let mut phi = 1.0;
        for x in &self.b {
            plo = mul_down(plo, x.lo());
            phi = mul_up(phi, x.hi());
        }
        if plo > 1.0 {
            return Err(Infeasible {
                index: 0,
                reason: InfeasibleReason::ProductAboveOne,
            });
        }
        if phi < 1.0 {
            return Err(Infeasible {
                index: 0,
                reason: InfeasibleReason::ProductBelowOne,
            });
        }
        for m in &self.monos {
            if let Some(enc) = m.eval(&self.b) {
                if (m.upper && enc.lo() > m.value) || (!m.upper && enc.hi() < m.value) {
                    return Err(Infeasible {
                        index: 0,
                        reason: InfeasibleReason::MonomialBound,
                    });
                }
            }
        }
        Ok(())
    }

    /// Applies every rule until nothing moves, then checks consistency with
    /// B_1⋯B_n = 1. Only ever shrinks the box.
    pub fn propagate(&mut self) -> Result<(), Infeasible> {
        let rules = self.rule_list();
        self.propagate_with(&rules)
    }

    /// Same as [`Self::propagate`] with an explicit rule order.
    pub fn propagate_with(&mut self, rules: &[Rule]) -> Result<(), Infeasible> {
        self.check()?;
        // Each pass is monotone; the bound guards against pathological creep.
        for _ in 0..64 * self.n() {
            let mut changed = false;
            for &r in rules {
                changed |= self.apply_rule(r);
            }
            self.check()?;
            if !changed {
                return Ok(());
            }
        }
        Ok(())
    }

    fn prod_lo(&self, range: core::ops::Range<usize>) -> f64 {
        range.fold(1.0, |p, j| mul_down(p, self.b[j].lo()))
    }

    fn prod_hi(&self, range: core::ops::Range<usize>) -> f64 {
        range.fold(1.0, |p, j| mul_up(p, self.b[j].hi()))
    }

    /// μ_s: an upper bound on B_1⋯B_s (the returned enclosure's `hi`).
    pub fn mu_s(&self, s: usize) -> Interval {
        let n = self.n();
        if s >= n {
            return Interval::point(1.0);
        }
        let mut best = self.rules.chain_mu[s];
        let direct = Interval::point(self.prod_hi(0..s));
        if direct.hi() < best.hi() {
            best = direct;
        }
        let tail = self.prod_lo(s..n);
        if tail > 0.0 {
            let c = Interval::point(1.0)
                .div(Interval::point(tail))
                .expect("positive");
            if c.hi() < best.hi() {
                best = c;
            }
        }
        best
    }

    /// λ_s: a lower bound on B_1⋯B_s (the returned enclosure's `lo`).
    pub fn lambda_s(&self, s: usize) -> Interval {
        let n = self.n();
        if s >= n {
            return Interval::point(1.0);
        }
        let head = Interval::point(self.b[0].lo()).powi(s as u64) * self.rules.chain_coef[s];
        let mut best = head;
        let r = n - s;
        if let Ok(tail) =
            self.rules.chain_coef[r].div(Interval::point(self.b[n - 1].hi()).powi(r as u64))
        {
            if tail.lo() > best.lo() {
                best = tail;
            }
        }
        let direct = Interval::point(self.prod_lo(0..s));
        if direct.lo() > best.lo() {
            best = direct;
        }
        let comp = self.prod_hi(s..n);
        if let Ok(c) = Interval::point(1.0).div(Interval::point(comp)) {
            if c.lo() > best.lo() {
                best = c;
            }
        }
        best
    }

    /// Interval snapshot, B_1 first.
    pub fn snapshot(&self) -> Vec<(f64, f64)> {
        self.b.iter().map(|x| (x.lo(), x.hi())).collect()
    }
}

// Moves below a relative 1e-13 still apply but do not keep the fixed-point
// loop alive.
fn significant(old: f64, new: f64) -> bool {
    if old.is_infinite() {
        return true;
    }
    (old - new).abs() > 1e-13 * old.abs().max(new.abs()).max(f64::MIN_POSITIVE)
}

/// Free-function form of [`BoundBox::new`].
pub fn new_box(k: usize, consts: &ConstantsTable) -> Result<BoundBox, BoxError> {
    if !(10..=MAX_TABLE_DIM).contains(&k) {
        return Err(BoxError::UnsupportedDimension(k));
    }
    BoundBox::new(k, consts)
}

/// Free-function form of [`BoundBox::propagate`].
pub fn propagate(mut b: BoundBox) -> Result<BoundBox, Infeasible> {
    b.propagate()?;
    Ok(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::fixture;
    use crate::decimal::iv_from_decimal;

    fn d(s: &str) -> Interval {
        iv_from_decimal(s).unwrap()
    }

    #[test]
    fn opening_box_n10() {
        let t = fixture::table();
        let b = new_box(10, &t).unwrap();
        assert!(b.get(1).lo() >= 1.0 && b.get(1).hi() <= 2.2636303);
        assert!(b.get(10).lo() >= 0.4006 && b.get(10).hi() <= 1.9770809);
    }

    #[test]
    fn opening_box_n12_second_cap() {
        let t = fixture::table();
        let b = new_box(12, &t).unwrap();
        // The printed cap is truncated to seven decimals.
        assert!(
            (b.get(2).hi() - 2.2254706).abs() < 1e-7,
            "{}",
            b.get(2).hi()
        );
    }

    #[test]
    fn propagation_from_last_cap() {
        let t = fixture::table();
        let b = new_box(10, &t).unwrap();
        let b = b
            .intersect_hypothesis(10, Side::Upper, d("0.4398"))
            .unwrap();
        assert!(b.get(9).hi() <= 0.5864);
        assert!(b.get(6).hi() <= 0.9383);
        assert!(b.get(2).hi() <= 2.0018);
    }

    #[test]
    fn propagation_is_idempotent() {
        let t = fixture::table();
        let b = new_box(17, &t)
            .unwrap()
            .intersect_hypothesis(16, Side::Upper, d("0.3328"))
            .unwrap();
        assert!(b.get(7).hi() <= 2.0197, "{}", b.get(7).hi());
        let mut c = b.clone();
        c.propagate().unwrap();
        assert_eq!(b, c);
    }

    #[test]
    fn hypotheses_outside_the_box() {
        let t = fixture::table();
        let b = new_box(10, &t).unwrap();
        let same = b.intersect_hypothesis(2, Side::Lower, d("0.01")).unwrap();
        assert_eq!(same, b);
        assert!(b.intersect_hypothesis(2, Side::Lower, d("5")).is_err());
        let c = b.intersect_hypothesis(2, Side::Lower, d("1.8815")).unwrap();
        assert!(c.get(6).lo() >= 0.46873 * 1.8815 - 1e-12);
    }

    #[test]
    fn product_bounds() {
        let t = fixture::table();
        let b = new_box(16, &t).unwrap();
        assert!(b.mu_s(1).hi() <= 3.0263938);
        assert_eq!(b.mu_s(16), Interval::point(1.0));
        assert_eq!(b.lambda_s(16), Interval::point(1.0));
        let b21 = new_box(21, &t).unwrap();
        assert!(b21.lambda_s(2).lo() >= 0.75 - 1e-15);
        let b19 = new_box(19, &t).unwrap();
        assert!(b19.mu_s(9).hi() <= 1.994589_f64.powi(10) * (1.0 + 1e-6));
    }

    #[test]
    fn chain_coefficients_match_stepwise_products() {
        let eps = d("0.46873");
        let e: f64 = 0.46873;
        let expect = [
            1.0,
            1.0,
            0.75,
            0.5,
            0.25,
            0.25 * e,
            3.0 * e * e / 16.0,
            e * e * e / 8.0,
            e.powi(4) / 16.0,
        ];
        for (r, &x) in expect.iter().enumerate() {
            let c = chain_coefficient(r, eps);
            assert!((c.mid() - x).abs() < 1e-12 * x.max(1.0), "r={r}");
        }
    }

    #[test]
    fn order_facts_are_closed() {
        let t = fixture::table();
        let b = new_box(12, &t).unwrap();
        let b = b.apply(&Constraint::Ge { a: 3, b: 4 }).unwrap();
        let b = b.apply(&Constraint::Ge { a: 4, b: 6 }).unwrap();
        assert!(b.knows_ge(3, 6));
        assert!(b.knows_ge(1, 6));
        assert!(!b.knows_ge(6, 3));
    }
}
