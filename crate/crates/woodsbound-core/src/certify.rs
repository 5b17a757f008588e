//! Branch-and-bound certification of `sup objective ≤ threshold` over a box.
//!
//! The objective is first rewritten with ∏B = 1 so that it depends on as few
//! independent quantities ("atoms") as possible. An atom is either one B_i or
//! a product of B_i's that always appear with the same exponent. The search
//! bisects atoms, re-propagating the box after every split, and fixes atoms at
//! an endpoint wherever the objective is monotone in them.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::sync::atomic::{AtomicUsize, Ordering};

use crate::compile::{condition_status, Condition, ConditionStatus, ConditionalInequality};
use crate::expr::{amgm_merge, pow_exp, Exp, Expr, Monomial};
use crate::interval::{div_down, div_up, mul_down, mul_up, Interval};
use crate::lattice::{BoundBox, Constraint, Side};
use crate::partition::Flavor;

/// Search limits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Budget {
    pub max_depth: u32,
    pub max_boxes: u64,
}

impl Default for Budget {
    fn default() -> Self {
        Self {
            max_depth: 60,
            max_boxes: 10_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Certified,
    /// The box is empty, so the statement holds trivially.
    Vacuous,
    Inconclusive,
}

impl Status {
    pub fn is_proven(self) -> bool {
        matches!(self, Status::Certified | Status::Vacuous)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Status::Certified => "certified",
            Status::Vacuous => "vacuous",
            Status::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CertStats {
    pub boxes: u64,
    pub max_depth: u32,
    pub atoms: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    /// What was certified, e.g. `(9*,1)`.
    pub statement: String,
    pub n: usize,
    pub threshold: Interval,
    /// Root box, B_1 first.
    pub domain: Vec<(f64, f64)>,
    pub status: Status,
    /// Why the search gave up.
    pub reason: Option<String>,
    /// Largest objective upper bound over the closed leaves.
    pub max_upper: f64,
    /// The objective was weakened by AM-GM before the search.
    pub surrogate: bool,
    pub stats: CertStats,
    /// The inequality and box that were searched, kept for auditing.
    pub obligation: Option<Obligation>,
}

/// What a certificate speaks about.
#[derive(Debug, Clone, PartialEq)]
pub struct Obligation {
    pub inequality: ConditionalInequality,
    pub region: BoundBox,
}

/// Tuning switches.
#[derive(Debug, Clone, PartialEq)]
pub struct Options {
    /// Fix atoms at an endpoint where the objective is monotone.
    pub monotone: bool,
    /// Number of independent subtrees after the breadth-first prefix.
    pub frontier: usize,
}

impl Default for Options {
    fn default() -> Self {
        Self {
            monotone: true,
            frontier: 64,
        }
    }
}

/// Outcome of one subtree.
#[derive(Debug, Clone, PartialEq)]
pub enum SubtreeOutcome {
    Done {
        boxes: u64,
        depth: u32,
        upper: f64,
    },
    Failed {
        boxes: u64,
        depth: u32,
        reason: String,
    },
    Cancelled,
}

/// Runs independent jobs; results must come back in index order.
pub trait Executor: Sync {
    fn run(
        &self,
        count: usize,
        job: &(dyn Fn(usize) -> SubtreeOutcome + Sync),
    ) -> Vec<SubtreeOutcome>;
}

/// Runs jobs one after another.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl Executor for Sequential {
    fn run(
        &self,
        count: usize,
        job: &(dyn Fn(usize) -> SubtreeOutcome + Sync),
    ) -> Vec<SubtreeOutcome> {
        (0..count).map(job).collect()
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AmgmError {
    #[error("part {0} does not exist")]
    BadPart(usize),
    #[error("part {0} has no negative term")]
    NoNegativeTerm(usize),
    #[error("an AM-GM group needs at least two parts")]
    TooSmall,
    #[error("part {0} is used twice")]
    Repeated(usize),
}

/// Replaces the negative terms of each group of parts (1-based positions) by
/// their AM-GM bound `−k·(∏ c_i M_i)^{1/k}`, which can only raise the objective.
pub fn apply_amgm(
    ineq: &ConditionalInequality,
    groups: &[Vec<usize>],
) -> Result<ConditionalInequality, AmgmError> {
    let mut used = vec![false; ineq.part_terms.len()];
    let mut drop = vec![false; ineq.objective.terms.len()];
    let mut added = Vec::new();
    for g in groups {
        if g.len() < 2 {
            return Err(AmgmError::TooSmall);
        }
        let mut terms = Vec::new();
        for &p in g {
            if p == 0 || p > ineq.part_terms.len() {
                return Err(AmgmError::BadPart(p));
            }
            if used[p - 1] {
                return Err(AmgmError::Repeated(p));
            }
            used[p - 1] = true;
            let part = ineq.partition.parts()[p - 1];
            if part.flavor != Flavor::Plain || part.size < 2 {
                return Err(AmgmError::NoNegativeTerm(p));
            }
            let t = ineq.part_terms[p - 1]
                .iter()
                .copied()
                .find(|&t| ineq.objective.terms[t].is_negative())
                .ok_or(AmgmError::NoNegativeTerm(p))?;
            drop[t] = true;
            terms.push(ineq.objective.terms[t].clone());
        }
        added.push(amgm_merge(&terms).map_err(|_| AmgmError::NoNegativeTerm(g[0]))?);
    }
    let mut out = ineq.clone();
    let mut terms: Vec<Monomial> = ineq
        .objective
        .terms
        .iter()
        .zip(&drop)
        .filter(|(_, d)| !**d)
        .map(|(t, _)| t.clone())
        .collect();
    terms.extend(added);
    out.objective = Expr::new(terms);
    out.part_terms = Vec::new();
    Ok(out)
}

// --- normalization and atoms -------------------------------------------------

fn zero() -> Exp {
    Exp::from_integer(0)
}

// Number of distinct nonzero exponent columns after shifting row m by t[m].
fn atom_count(rows: &[Vec<Exp>], t: &[Exp], n: usize) -> usize {
    let mut seen: Vec<Vec<Exp>> = Vec::new();
    for v in 0..n {
        let col: Vec<Exp> = rows.iter().zip(t).map(|(r, &s)| r[v] + s).collect();
        if col.iter().all(|e| *e == zero()) {
            continue;
        }
        if !seen.contains(&col) {
            seen.push(col);
        }
    }
    seen.len()
}

fn candidates(row: &[Exp]) -> Vec<Exp> {
    let mut c = vec![zero()];
    for &e in row {
        if !c.contains(&-e) {
            c.push(-e);
        }
    }
    c
}

// Picks a shift t_m per monomial (multiplying it by (∏B)^{t_m}) minimizing the
// number of atoms; ties go to fewer nonzero shifts.
fn choose_shifts(rows: &[Vec<Exp>], n: usize) -> Vec<Exp> {
    let cands: Vec<Vec<Exp>> = rows.iter().map(|r| candidates(r)).collect();
    let key = |t: &[Exp]| {
        (
            atom_count(rows, t, n),
            t.iter().filter(|x| **x != zero()).count(),
        )
    };
    let total: usize = cands
        .iter()
        .map(|c| c.len())
        .try_fold(1usize, |a, b| a.checked_mul(b))
        .unwrap_or(usize::MAX);
    if total <= 4096 {
        let mut best = vec![zero(); rows.len()];
        let mut best_key = key(&best);
        let mut idx = vec![0usize; rows.len()];
        loop {
            let t: Vec<Exp> = idx.iter().zip(&cands).map(|(&i, c)| c[i]).collect();
            let k = key(&t);
            if k < best_key {
                best_key = k;
                best = t;
            }
            let mut pos = 0;
            loop {
                if pos == idx.len() {
                    return best;
                }
                idx[pos] += 1;
                if idx[pos] < cands[pos].len() {
                    break;
                }
                idx[pos] = 0;
                pos += 1;
            }
        }
    }
    let mut t = vec![zero(); rows.len()];
    let mut cur = key(&t);
    for _ in 0..4 {
        let mut moved = false;
        for m in 0..rows.len() {
            for &c in &cands[m] {
                let old = t[m];
                t[m] = c;
                let k = key(&t);
                if k < cur {
                    cur = k;
                    moved = true;
                } else {
                    t[m] = old;
                }
            }
        }
        if !moved {
            break;
        }
    }
    t
}

#[derive(Debug, Clone)]
struct ProbCond {
    orig: Condition,
    // Same condition over atoms, when expressible.
    atom_powers: Option<Vec<(usize, Exp)>>,
    vars: Vec<usize>,
}

/// The objective over atoms, ready for the search.
#[derive(Debug, Clone)]
pub struct Problem {
    n: usize,
    /// 0-based B indices of each atom.
    atoms: Vec<Vec<usize>>,
    /// Variables outside every atom.
    free: Vec<usize>,
    objective: Expr,
    grad: Vec<Expr>,
    conds: Vec<ProbCond>,
    threshold: Interval,
    monotone: bool,
}

impl Problem {
    pub fn new(ineq: &ConditionalInequality, threshold: Interval, monotone: bool) -> Self {
        let n = ineq.n;
        let mut rows: Vec<Vec<Exp>> = Vec::new();
        for t in &ineq.objective.terms {
            let mut r = vec![zero(); n];
            for &(v, e) in t.powers() {
                r[v] = e;
            }
            rows.push(r);
        }
        let n_obj = rows.len();
        let mut cond_rows = Vec::new();
        for c in &ineq.conditions {
            if let Condition::Monomial { powers, .. } = c {
                let mut r = vec![zero(); n];
                for &(v, e) in powers {
                    r[v] = e;
                }
                cond_rows.push(rows.len());
                rows.push(r);
            }
        }
        let shifts = choose_shifts(&rows, n);
        let shifted: Vec<Vec<Exp>> = rows
            .iter()
            .zip(&shifts)
            .map(|(r, &s)| r.iter().map(|e| *e + s).collect())
            .collect();
        let mut atoms: Vec<Vec<usize>> = Vec::new();
        let mut sigs: Vec<Vec<Exp>> = Vec::new();
        for v in 0..n {
            let col: Vec<Exp> = shifted.iter().map(|r| r[v]).collect();
            if col.iter().all(|e| *e == zero()) {
                continue;
            }
            match sigs.iter().position(|s| *s == col) {
                Some(a) => atoms[a].push(v),
                None => {
                    sigs.push(col);
                    atoms.push(vec![v]);
                }
            }
        }
        let to_atoms = |m: usize, coef: Interval| {
            let mut mono = Monomial::constant(coef);
            for (a, vars) in atoms.iter().enumerate() {
                mono.add_exp(a, shifted[m][vars[0]]);
            }
            mono
        };
        let terms: Vec<Monomial> = (0..n_obj)
            .map(|m| to_atoms(m, ineq.objective.terms[m].coef))
            .collect();
        let objective = Expr::new(terms);
        let grad = (0..atoms.len())
            .map(|a| {
                let mut d = Vec::new();
                for t in &objective.terms {
                    let e = t.exponent(a);
                    if e != zero() {
                        let mut m = t.clone();
                        m.coef = m.coef * exp_interval(e);
                        m.add_exp(a, -Exp::from_integer(1));
                        d.push(m);
                    }
                }
                Expr::new(d)
            })
            .collect();
        let mut conds = Vec::new();
        let mut k = 0;
        for c in &ineq.conditions {
            match c {
                Condition::Monomial { powers, .. } => {
                    let m = to_atoms(cond_rows[k], Interval::point(1.0));
                    k += 1;
                    conds.push(ProbCond {
                        orig: c.clone(),
                        atom_powers: Some(m.powers().to_vec()),
                        vars: powers.iter().map(|p| p.0).collect(),
                    });
                }
                &Condition::Dominates { lead, last, .. } => {
                    conds.push(ProbCond {
                        orig: c.clone(),
                        atom_powers: None,
                        vars: (lead - 1..last).collect(),
                    });
                }
            }
        }
        let free = (0..n)
            .filter(|v| !atoms.iter().any(|a| a.contains(v)))
            .collect();
        Self {
            n,
            atoms,
            free,
            objective,
            grad,
            conds,
            threshold,
            monotone,
        }
    }

    pub fn atom_count(&self) -> usize {
        self.atoms.len()
    }

    /// Atom variable lists, 0-based.
    pub fn atoms(&self) -> &[Vec<usize>] {
        &self.atoms
    }

    pub fn objective(&self) -> &Expr {
        &self.objective
    }

    /// Enclosures of every atom over the box; `None` when one is empty.
    pub fn atom_bounds(&self, b: &BoundBox) -> Option<Vec<Interval>> {
        let mut x: Vec<Interval> = self
            .atoms
            .iter()
            .map(|vars| group_bounds(vars, b, self.n))
            .collect::<Option<_>>()?;
        let rest = if self.free.is_empty() {
            Interval::point(1.0)
        } else {
            group_bounds(&self.free, b, self.n)?
        };
        // The atoms and the free variables multiply to 1.
        for _ in 0..2 {
            for k in 0..x.len() {
                let mut others = rest;
                for (j, xj) in x.iter().enumerate() {
                    if j != k {
                        others = others * *xj;
                    }
                }
                if others.lo() <= 0.0 {
                    continue;
                }
                let r = others.recip().ok()?;
                x[k] = x[k].intersect(&r)?;
            }
        }
        Some(x)
    }
}

fn exp_interval(e: Exp) -> Interval {
    Interval::ratio(*e.numer(), *e.denom()).expect("nonzero denominator")
}

/// Enclosure of ∏_{v ∈ vars} B_v over the box, using every product fact known.
pub fn group_bounds(vars: &[usize], b: &BoundBox, n: usize) -> Option<Interval> {
    let bd = b.bounds();
    if vars.len() == 1 {
        return Some(bd[vars[0]]);
    }
    let mut lo = vars.iter().fold(1.0, |p, &v| mul_down(p, bd[v].lo()));
    let mut hi = vars.iter().fold(1.0, |p, &v| mul_up(p, bd[v].hi()));
    let mut in_set = vec![false; n];
    for &v in vars {
        in_set[v] = true;
    }
    let (mut clo, mut chi) = (1.0, 1.0);
    for v in 0..n {
        if !in_set[v] {
            clo = mul_down(clo, bd[v].lo());
            chi = mul_up(chi, bd[v].hi());
        }
    }
    if chi > 0.0 {
        lo = lo.max(div_down(1.0, chi));
    }
    if clo > 0.0 {
        hi = hi.min(div_up(1.0, clo));
    }
    let s = vars.len();
    let contiguous = vars.windows(2).all(|w| w[1] == w[0] + 1);
    if contiguous && vars[0] == 0 {
        lo = lo.max(b.lambda_s(s).lo());
        hi = hi.min(b.mu_s(s).hi());
    } else if contiguous && vars[s - 1] == n - 1 {
        let k = n - s;
        let mu = b.mu_s(k).hi();
        let la = b.lambda_s(k).lo();
        if mu > 0.0 {
            lo = lo.max(div_down(1.0, mu));
        }
        if la > 0.0 {
            hi = hi.min(div_up(1.0, la));
        }
    }
    for f in b.mono_facts() {
        // A fact on the complement bounds the group through ∏B = 1.
        let e = if f.powers.len() == s && f.powers.iter().zip(vars).all(|(p, &v)| p.0 == v) {
            f.powers[0].1
        } else if f.powers.len() == n - s && f.powers.iter().all(|p| !in_set[p.0]) {
            -f.powers[0].1
        } else {
            continue;
        };
        if f.powers.iter().any(|p| p.1 != f.powers[0].1) || f.value <= 0.0 {
            continue;
        }
        let Ok(x) = pow_exp(Interval::point(f.value), Exp::from_integer(1) / e) else {
            continue;
        };
        // P^e ≤ v: for e > 0 caps P above, for e < 0 below.
        if f.upper == (e > zero()) {
            hi = hi.min(x.hi());
        } else {
            lo = lo.max(x.lo());
        }
    }
    (lo <= hi).then(|| Interval::new(lo, hi).expect("ordered"))
}

// --- search ------------------------------------------------------------------

enum Step {
    Closed(f64),
    Vacuous,
    /// Children in search order; empty halves are dropped.
    Split(Vec<BoundBox>),
    Fail(String),
}

enum Cut {
    Var(usize),
    Group(usize),
}

fn split_box(
    b: &BoundBox,
    cut: Cut,
    atoms: &[Vec<usize>],
    x: &[Interval],
) -> (Option<BoundBox>, Option<BoundBox>) {
    match cut {
        Cut::Var(v) => {
            // The contracted atom range can be far narrower than the raw bound.
            let own = b.bounds()[v];
            let range = match atoms.iter().position(|a| a.len() == 1 && a[0] == v) {
                Some(a) => own.intersect(&x[a]).unwrap_or(own),
                None => own,
            };
            let m = Interval::point(range.mid());
            (
                b.apply(&Constraint::AtMost {
                    var: v + 1,
                    value: m,
                })
                .ok(),
                b.apply(&Constraint::AtLeast {
                    var: v + 1,
                    value: m,
                })
                .ok(),
            )
        }
        Cut::Group(a) => {
            let m = Interval::point(x[a].mid());
            let powers: Vec<(usize, Exp)> = atoms[a]
                .iter()
                .map(|&v| (v + 1, Exp::from_integer(1)))
                .collect();
            (
                b.apply(&Constraint::Mono {
                    powers: powers.clone(),
                    side: Side::Upper,
                    value: m,
                })
                .ok(),
                b.apply(&Constraint::Mono {
                    powers,
                    side: Side::Lower,
                    value: m,
                })
                .ok(),
            )
        }
    }
}

fn split_step(b: &BoundBox, halves: (Option<BoundBox>, Option<BoundBox>)) -> Step {
    match halves {
        (Some(l), Some(r)) => Step::Split(vec![l, r]),
        (Some(c), None) | (None, Some(c)) if &c == b => {
            Step::Fail(String::from("split made no progress"))
        }
        (Some(c), None) | (None, Some(c)) => Step::Split(vec![c]),
        (None, None) => Step::Vacuous,
    }
}

fn magnitude(g: Interval) -> f64 {
    g.lo().abs().max(g.hi().abs())
}

impl Problem {
    // The second value is the variable to split on when undetermined, or the
    // failing condition index.
    fn conditions(&self, b: &BoundBox, x: &[Interval]) -> (ConditionStatus, Option<usize>) {
        let mut status = ConditionStatus::HoldsEverywhere;
        let mut pick: Option<(f64, usize)> = None;
        for (ci, c) in self.conds.iter().enumerate() {
            let mut st = condition_status(&c.orig, b);
            if st == ConditionStatus::Undetermined {
                if let (Some(ap), Condition::Monomial { at_least, .. }) = (&c.atom_powers, &c.orig)
                {
                    if let Ok(enc) = Monomial::new(Interval::point(1.0), ap).eval(x) {
                        if enc.lo() >= at_least.hi() {
                            st = ConditionStatus::HoldsEverywhere;
                        } else if enc.hi() < at_least.lo() {
                            st = ConditionStatus::FailsEverywhere;
                        }
                    }
                }
            }
            match st {
                ConditionStatus::FailsEverywhere => return (st, Some(ci)),
                ConditionStatus::HoldsEverywhere => {}
                ConditionStatus::Undetermined => {
                    status = ConditionStatus::Undetermined;
                    for &v in &c.vars {
                        let iv = b.bounds()[v];
                        let w = iv.width() / iv.hi().max(f64::MIN_POSITIVE);
                        if w > 0.0 && pick.is_none_or(|p| w > p.0) {
                            pick = Some((w, v));
                        }
                    }
                }
            }
        }
        (status, pick.map(|p| p.1))
    }

    fn upper(&self, x: &[Interval]) -> Option<(f64, Vec<Interval>)> {
        let naive = self.objective.eval(x).ok()?;
        let grads: Vec<Interval> = self
            .grad
            .iter()
            .map(|g| g.eval(x))
            .collect::<Result<_, _>>()
            .ok()?;
        let mid: Vec<Interval> = x.iter().map(|i| Interval::point(i.mid())).collect();
        let mut mv = self.objective.eval(&mid).ok()?;
        for (a, g) in grads.iter().enumerate() {
            if x[a].is_point() {
                continue;
            }
            mv = mv + *g * (x[a] - mid[a]);
        }
        Some((naive.hi().min(mv.hi()), grads))
    }

    // Fixes atoms at the endpoint where the objective is largest, as long as
    // the gradient keeps a constant sign over the (shrinking) atom box.
    fn fix_monotone(&self, x: &mut [Interval]) {
        for _ in 0..x.len() + 1 {
            let mut moved = false;
            for a in 0..x.len() {
                if x[a].is_point() {
                    continue;
                }
                let Ok(g) = self.grad[a].eval(x) else { return };
                if g.lo() >= 0.0 {
                    x[a] = Interval::point(x[a].hi());
                    moved = true;
                } else if g.hi() <= 0.0 {
                    x[a] = Interval::point(x[a].lo());
                    moved = true;
                }
            }
            if !moved {
                break;
            }
        }
    }

    fn describe(&self, x: &[Interval]) -> String {
        let mut out = String::new();
        for (atom, v) in self.atoms.iter().zip(x) {
            if !out.is_empty() {
                out.push_str(", ");
            }
            let names: Vec<String> = atom.iter().map(|i| format!("B{}", i + 1)).collect();
            out.push_str(&format!("{}={}", names.join("*"), v.mid()));
        }
        out
    }

    fn describe_box(&self, b: &BoundBox) -> String {
        match self.atom_bounds(b) {
            Some(x) => self.describe(&x),
            None => String::from("an empty box"),
        }
    }

    // Writes the contracted atom ranges back into the box so that order
    // facts and caps see them, until nothing moves.
    fn tighten(&self, b: &BoundBox) -> Option<(BoundBox, Vec<Interval>)> {
        let mut cur = b.clone();
        for _ in 0..4 {
            let x = self.atom_bounds(&cur)?;
            let mut next = cur.clone();
            for (atom, xa) in self.atoms.iter().zip(&x) {
                let own = group_bounds(atom, &next, self.n)?;
                let rel = 1e-12 * own.hi().abs().max(1.0);
                let (lo_up, hi_down) = (xa.lo() > own.lo() + rel, xa.hi() < own.hi() - rel);
                if !lo_up && !hi_down {
                    continue;
                }
                let powers: Vec<(usize, Exp)> = atom
                    .iter()
                    .map(|&v| (v + 1, Exp::from_integer(1)))
                    .collect();
                if lo_up {
                    let c = match atom[..] {
                        [v] => Constraint::AtLeast {
                            var: v + 1,
                            value: Interval::point(xa.lo()),
                        },
                        _ => Constraint::Mono {
                            powers: powers.clone(),
                            side: Side::Lower,
                            value: Interval::point(xa.lo()),
                        },
                    };
                    next = next.apply(&c).ok()?;
                }
                if hi_down {
                    let c = match atom[..] {
                        [v] => Constraint::AtMost {
                            var: v + 1,
                            value: Interval::point(xa.hi()),
                        },
                        _ => Constraint::Mono {
                            powers,
                            side: Side::Upper,
                            value: Interval::point(xa.hi()),
                        },
                    };
                    next = next.apply(&c).ok()?;
                }
            }
            if next == cur {
                return Some((cur, x));
            }
            cur = next;
        }
        let x = self.atom_bounds(&cur)?;
        Some((cur, x))
    }

    fn step(&self, b: &BoundBox) -> Step {
        let Some((tight, x)) = self.tighten(b) else {
            return Step::Vacuous;
        };
        let b = &tight;
        let (cs, pick) = self.conditions(b, &x);
        match cs {
            ConditionStatus::FailsEverywhere => {
                let part = pick.map(|k| self.conds[k].orig.part() + 1).unwrap_or(0);
                return Step::Fail(format!(
                    "the condition of part {part} fails at {}",
                    self.describe(&x)
                ));
            }
            ConditionStatus::Undetermined => {
                let Some(v) = pick else {
                    return Step::Fail(String::from("undecidable condition on a point"));
                };
                return split_step(b, split_box(b, Cut::Var(v), &self.atoms, &x));
            }
            ConditionStatus::HoldsEverywhere => {}
        }
        // Fixing ignores the product coupling between atoms, so splits are
        // ranked on the unfixed widths.
        let widths: Vec<f64> = x.iter().map(|v| v.width()).collect();
        let mut fixed = x.clone();
        if self.monotone {
            self.fix_monotone(&mut fixed);
        }
        let Some((up, grads)) = self.upper(&fixed) else {
            return Step::Fail(String::from("objective undefined on a subbox"));
        };
        if up <= self.threshold.lo() {
            return Step::Closed(up);
        }
        let mut best: Option<(f64, usize)> = None;
        for (a, g) in grads.iter().enumerate() {
            let score = widths[a] * magnitude(*g);
            if score > 0.0 && best.is_none_or(|p| score > p.0) {
                best = Some((score, a));
            }
        }
        let Some((_, a)) = best else {
            return Step::Fail(format!(
                "objective bound {up} exceeds the threshold at {}",
                self.describe(&fixed)
            ));
        };
        let cut = if self.atoms[a].len() == 1 {
            Cut::Var(self.atoms[a][0])
        } else {
            Cut::Group(a)
        };
        split_step(b, split_box(b, cut, &self.atoms, &x))
    }
}

struct Tally {
    boxes: u64,
    depth: u32,
    upper: f64,
}

fn run_subtree(
    p: &Problem,
    root: BoundBox,
    depth0: u32,
    budget: Budget,
    cancel: &dyn Fn() -> bool,
) -> SubtreeOutcome {
    let mut stack = vec![(root, depth0)];
    let mut t = Tally {
        boxes: 0,
        depth: depth0,
        upper: f64::NEG_INFINITY,
    };
    while let Some((b, d)) = stack.pop() {
        if t.boxes % 1024 == 1023 && cancel() {
            return SubtreeOutcome::Cancelled;
        }
        t.boxes += 1;
        t.depth = t.depth.max(d);
        if t.boxes > budget.max_boxes {
            return SubtreeOutcome::Failed {
                boxes: t.boxes,
                depth: t.depth,
                reason: String::from("box budget exhausted"),
            };
        }
        match p.step(&b) {
            Step::Closed(u) => t.upper = t.upper.max(u),
            Step::Vacuous => {}
            Step::Fail(reason) => {
                return SubtreeOutcome::Failed {
                    boxes: t.boxes,
                    depth: t.depth,
                    reason,
                }
            }
            Step::Split(kids) => {
                if d + 1 > budget.max_depth {
                    let reason = format!("depth limit reached near {}", p.describe_box(&b));
                    return SubtreeOutcome::Failed {
                        boxes: t.boxes,
                        depth: t.depth,
                        reason,
                    };
                }
                stack.extend(kids.into_iter().rev().map(|k| (k, d + 1)));
            }
        }
    }
    SubtreeOutcome::Done {
        boxes: t.boxes,
        depth: t.depth,
        upper: t.upper,
    }
}

/// Certifies `sup objective ≤ threshold.lo` over the box, sequentially.
pub fn certify_sup_below(
    ineq: &ConditionalInequality,
    b: &BoundBox,
    threshold: Interval,
    budget: Budget,
) -> Certificate {
    certify_with(ineq, b, threshold, budget, &Options::default(), &Sequential)
}

/// Same as [`certify_sup_below`] with explicit options and executor.
pub fn certify_with(
    ineq: &ConditionalInequality,
    b: &BoundBox,
    threshold: Interval,
    budget: Budget,
    opts: &Options,
    exec: &dyn Executor,
) -> Certificate {
    let p = Problem::new(ineq, threshold, opts.monotone);
    let mut cert = Certificate {
        statement: format!("{}", ineq.partition),
        n: ineq.n,
        threshold,
        domain: b.snapshot(),
        status: Status::Certified,
        reason: None,
        max_upper: f64::NEG_INFINITY,
        surrogate: false,
        stats: CertStats {
            boxes: 0,
            max_depth: 0,
            atoms: p.atom_count(),
        },
        obligation: Some(Obligation {
            inequality: ineq.clone(),
            region: b.clone(),
        }),
    };
    let mut root = b.clone();
    if root.propagate().is_err() {
        cert.status = Status::Vacuous;
        return cert;
    }
    run_problem(&p, root, budget, opts.frontier.max(1), exec, &mut cert);
    cert
}

/// Runs the search for a prepared problem, filling in the certificate.
pub fn run_problem(
    p: &Problem,
    root: BoundBox,
    budget: Budget,
    k: usize,
    exec: &dyn Executor,
    cert: &mut Certificate,
) {
    let fail = |cert: &mut Certificate, reason: String| {
        cert.status = Status::Inconclusive;
        cert.reason = Some(reason);
    };
    // Breadth-first prefix until there are k open nodes.
    let mut queue: alloc::collections::VecDeque<(BoundBox, u32)> =
        alloc::collections::VecDeque::new();
    queue.push_back((root, 0));
    let mut any_closed = false;
    while !queue.is_empty() && queue.len() < k {
        let (b, d) = queue.pop_front().expect("nonempty");
        cert.stats.boxes += 1;
        cert.stats.max_depth = cert.stats.max_depth.max(d);
        match p.step(&b) {
            Step::Closed(u) => {
                any_closed = true;
                cert.max_upper = cert.max_upper.max(u);
            }
            Step::Vacuous => {}
            Step::Fail(r) => return fail(cert, r),
            Step::Split(kids) => {
                if d + 1 > budget.max_depth {
                    return fail(
                        cert,
                        format!("depth limit reached near {}", p.describe_box(&b)),
                    );
                }
                queue.extend(kids.into_iter().map(|k| (k, d + 1)));
            }
        }
    }
    let open: Vec<(BoundBox, u32)> = queue.into_iter().collect();
    let each = Budget {
        max_depth: budget.max_depth,
        max_boxes: (budget.max_boxes / k as u64).max(1),
    };
    let min_fail = AtomicUsize::new(usize::MAX);
    let job = |i: usize| {
        let cancel = || min_fail.load(Ordering::Relaxed) < i;
        let out = run_subtree(p, open[i].0.clone(), open[i].1, each, &cancel);
        if matches!(out, SubtreeOutcome::Failed { .. }) {
            min_fail.fetch_min(i, Ordering::Relaxed);
        }
        out
    };
    let results = exec.run(open.len(), &job);
    for r in results {
        match r {
            SubtreeOutcome::Done {
                boxes,
                depth,
                upper,
            } => {
                cert.stats.boxes += boxes;
                cert.stats.max_depth = cert.stats.max_depth.max(depth);
                cert.max_upper = cert.max_upper.max(upper);
                any_closed |= upper > f64::NEG_INFINITY;
            }
            SubtreeOutcome::Failed {
                boxes,
                depth,
                reason,
            } => {
                cert.stats.boxes += boxes;
                cert.stats.max_depth = cert.stats.max_depth.max(depth);
                return fail(cert, reason);
            }
            SubtreeOutcome::Cancelled => {
                unreachable!("only subtrees after the first failure are cancelled")
            }
        }
    }
    if !any_closed {
        cert.status = Status::Vacuous;
    }
}

// --- prefix-product steps -----------------------------------------------------

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LemmaError {
    #[error("prefix length {s} must lie in 1..={max}")]
    BadPrefix { s: usize, max: usize },
    #[error(transparent)]
    Compile(#[from] crate::compile::CompileError),
    #[error(transparent)]
    Constants(#[from] crate::constants::ConstantsError),
}

/// Result of a prefix step: the certificate and the box after installing the
/// conclusion (`None` when the conclusion empties the box).
#[derive(Debug, Clone)]
pub struct LemmaOutcome {
    pub certificate: Certificate,
    pub next: Option<BoundBox>,
    /// Floor of the recorded cap B_{s+1} ≤ max(floor, max tail).
    pub floor: f64,
}

fn split_inequality(
    n: usize,
    s: usize,
    consts: &crate::constants::ConstantsTable,
) -> Result<ConditionalInequality, LemmaError> {
    if s == 0 || s + 1 >= n {
        return Err(LemmaError::BadPrefix {
            s,
            max: n.saturating_sub(2),
        });
    }
    use crate::partition::{Part, Partition};
    let p = Partition::new(vec![
        Part {
            size: s,
            flavor: Flavor::Starred,
        },
        Part {
            size: n - s,
            flavor: Flavor::Starred,
        },
    ])
    .expect("positive parts");
    Ok(crate::compile::compile(&p, n, consts)?)
}

/// If B_{s+1} dominated the tail, (s*, (n−s)*) would hold; certifying its
/// objective stays ≤ ω_n over the box shows B_{s+1} ≤ max{B_j : j > s+1}.
pub fn lemma10_step(
    b: &BoundBox,
    s: usize,
    consts: &crate::constants::ConstantsTable,
    budget: Budget,
    opts: &Options,
    exec: &dyn Executor,
) -> Result<LemmaOutcome, LemmaError> {
    prefix_step(b, s, None, consts, budget, opts, exec)
}

/// Splits on B_1⋯B_s < σ. Below σ the argument of [`lemma10_step`] applies;
/// above it B_{s+1} ≤ μ_{s+1}/σ. Records B_{s+1} ≤ max(μ_{s+1}/σ, max tail).
pub fn lemma11_step(
    b: &BoundBox,
    s: usize,
    sigma: Interval,
    consts: &crate::constants::ConstantsTable,
    budget: Budget,
    opts: &Options,
    exec: &dyn Executor,
) -> Result<LemmaOutcome, LemmaError> {
    prefix_step(b, s, Some(sigma), consts, budget, opts, exec)
}

fn prefix_step(
    b: &BoundBox,
    s: usize,
    sigma: Option<Interval>,
    consts: &crate::constants::ConstantsTable,
    budget: Budget,
    opts: &Options,
    exec: &dyn Executor,
) -> Result<LemmaOutcome, LemmaError> {
    let n = b.n();
    let ineq = split_inequality(n, s, consts)?;
    let omega = consts.omega(n)?;
    let mut hyp = b.apply(&Constraint::Dominates(s + 1));
    if let (Some(sig), Ok(h)) = (sigma, &hyp) {
        let powers = (1..=s).map(|v| (v, Exp::from_integer(1))).collect();
        hyp = h.apply(&Constraint::Mono {
            powers,
            side: Side::Upper,
            value: sig,
        });
    }
    let certificate = match hyp {
        Ok(h) => certify_with(&ineq, &h, omega, budget, opts, exec),
        Err(_) => Certificate {
            statement: format!("{}", ineq.partition),
            n,
            threshold: omega,
            domain: b.snapshot(),
            status: Status::Vacuous,
            reason: None,
            max_upper: f64::NEG_INFINITY,
            surrogate: false,
            stats: CertStats::default(),
            obligation: None,
        },
    };
    let floor = match sigma {
        None => f64::NEG_INFINITY,
        Some(sig) => div_up(b.mu_s(s + 1).hi(), sig.lo()),
    };
    let next = if certificate.status.is_proven() {
        let mut nb = b.clone();
        nb.add_tail_cap(s + 1, floor);
        nb.propagate().ok().map(|_| nb)
    } else {
        Some(b.clone())
    };
    Ok(LemmaOutcome {
        certificate,
        next,
        floor,
    })
}
