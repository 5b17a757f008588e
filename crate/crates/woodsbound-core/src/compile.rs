//! Partition → conditional inequality: an objective over B_1..B_n whose value
//! must exceed ω_n whenever the conditions hold.

use alloc::vec;
use alloc::vec::Vec;

use crate::constants::{critical_determinant_squared, ConstantsError, ConstantsTable};
use crate::expr::{pow_exp, Exp, Expr, Monomial};
use crate::interval::{div_down, mul_down, Interval, IntervalError};
use crate::lattice::BoundBox;
use crate::partition::{Flavor, Partition};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CompileError {
    #[error("partition sums to {total}, expected {n}")]
    SizeMismatch { total: usize, n: usize },
    #[error("plain part of size {0} needs a critical determinant beyond dimension 8")]
    UnsupportedPart(usize),
    #[error("no omega available for a starred part of size {0}")]
    MissingOmega(usize),
    #[error(transparent)]
    Constants(#[from] ConstantsError),
    #[error(transparent)]
    Interval(#[from] IntervalError),
}

/// A side condition under which the inequality holds.
#[derive(Debug, Clone, PartialEq)]
pub enum Condition {
    /// ∏ B_v^{e_v} ≥ at_least (0-based variables).
    Monomial {
        part: usize,
        powers: Vec<(usize, Exp)>,
        at_least: Interval,
    },
    /// B_lead ≥ B_j for lead < j ≤ last (1-based).
    Dominates {
        part: usize,
        lead: usize,
        last: usize,
    },
}

impl Condition {
    pub fn part(&self) -> usize {
        match self {
            Condition::Monomial { part, .. } | Condition::Dominates { part, .. } => *part,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConditionStatus {
    HoldsEverywhere,
    FailsEverywhere,
    Undetermined,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalInequality {
    pub n: usize,
    pub partition: Partition,
    pub objective: Expr,
    pub conditions: Vec<Condition>,
    /// Objective term indices contributed by each part.
    pub part_terms: Vec<Vec<usize>>,
}

fn q(p: i64, d: i64) -> Exp {
    Exp::new(p, d)
}

/// Compiles `p` into the inequality for dimension `n`.
pub fn compile(
    p: &Partition,
    n: usize,
    consts: &ConstantsTable,
) -> Result<ConditionalInequality, CompileError> {
    if p.total() != n {
        return Err(CompileError::SizeMismatch {
            total: p.total(),
            n,
        });
    }
    let mut terms = Vec::new();
    let mut conditions = Vec::new();
    let mut part_terms = Vec::new();
    for (k, (part, start)) in p.parts().iter().zip(p.starts()).enumerate() {
        let i = start - 1;
        let lam = part.size;
        let mut idx = Vec::new();
        match part.flavor {
            Flavor::Weak => {
                idx.push(terms.len());
                terms.push(Monomial::new(Interval::point(2.0), &[(i + 1, q(1, 1))]));
            }
            Flavor::Plain if lam == 1 => {
                idx.push(terms.len());
                terms.push(Monomial::var(i));
            }
            Flavor::Plain => {
                if lam + 1 > 8 {
                    return Err(CompileError::UnsupportedPart(lam));
                }
                let c = Interval::point(4.0) * critical_determinant_squared(lam + 1)?;
                idx.push(terms.len());
                terms.push(Monomial::new(Interval::point(4.0), &[(i, q(1, 1))]));
                let mut powers = vec![(i, q(lam as i64, 1))];
                let mut cond = vec![(i, q(lam as i64 - 1, 1))];
                for j in i + 1..i + lam {
                    powers.push((j, q(-1, 1)));
                    cond.push((j, q(-1, 1)));
                }
                idx.push(terms.len());
                terms.push(Monomial::new(-c, &powers));
                let m = Monomial::new(Interval::point(1.0), &cond);
                conditions.push(Condition::Monomial {
                    part: k,
                    powers: m.powers().to_vec(),
                    at_least: c.recip()?,
                });
            }
            Flavor::Starred => {
                let w = consts
                    .omega(lam)
                    .map_err(|_| CompileError::MissingOmega(lam))?;
                let powers: Vec<(usize, Exp)> =
                    (i..i + lam).map(|j| (j, q(1, lam as i64))).collect();
                idx.push(terms.len());
                terms.push(Monomial::new(w, &powers));
                if start > 1 && lam > 1 {
                    conditions.push(Condition::Dominates {
                        part: k,
                        lead: start,
                        last: start + lam - 1,
                    });
                }
            }
        }
        part_terms.push(idx);
    }
    Ok(ConditionalInequality {
        n,
        partition: p.clone(),
        objective: Expr::new(terms),
        conditions,
        part_terms,
    })
}

/// Naive interval enclosure of the objective over the box.
pub fn eval_objective(
    ineq: &ConditionalInequality,
    b: &BoundBox,
) -> Result<Interval, IntervalError> {
    ineq.objective.eval(b.bounds())
}

/// Lower bound of ∏ B_v^{e_v} over the box, pairing B_a/B_b ≥ 1 where
/// B_a ≥ B_b is known.
pub fn monomial_lower_bound(powers: &[(usize, Exp)], b: &BoundBox) -> f64 {
    let bounds = b.bounds();
    let mut pos: Vec<(usize, Exp)> = powers.iter().filter(|p| p.1 > q(0, 1)).copied().collect();
    let mut neg: Vec<(usize, Exp)> = powers
        .iter()
        .filter(|p| p.1 < q(0, 1))
        .map(|&(v, e)| (v, -e))
        .collect();
    let mut acc = 1.0_f64;
    for nv in neg.iter_mut() {
        for pv in pos.iter_mut() {
            if nv.1 == q(0, 1) {
                break;
            }
            if pv.1 == q(0, 1) || !b.knows_ge(pv.0 + 1, nv.0 + 1) {
                continue;
            }
            let t = if pv.1 < nv.1 { pv.1 } else { nv.1 };
            let r = div_down(bounds[pv.0].lo(), bounds[nv.0].hi()).max(1.0);
            let f = pow_exp(Interval::point(r), t)
                .map(|x| x.lo())
                .unwrap_or(1.0);
            acc = mul_down(acc, f);
            pv.1 -= t;
            nv.1 -= t;
        }
    }
    let mut rest = Interval::point(1.0);
    let left = pos
        .iter()
        .copied()
        .chain(neg.iter().map(|&(v, e)| (v, -e)))
        .filter(|p| p.1 != q(0, 1));
    for (v, e) in left {
        match pow_exp(bounds[v], e) {
            Ok(x) => rest = rest * x,
            Err(_) => return 0.0,
        }
    }
    let mut lo = mul_down(acc, rest.lo().max(0.0));
    for m in b.mono_facts() {
        if m.upper {
            continue;
        }
        if let Some(t) = proportional(powers, &m.powers) {
            if m.value > 0.0 {
                if let Ok(x) = pow_exp(Interval::point(m.value), q(1, 1) / t) {
                    lo = lo.max(x.lo());
                }
            }
        }
    }
    lo
}

// Returns t > 0 with fact = t·target exponent-wise, if any.
fn proportional(target: &[(usize, Exp)], fact: &[(usize, Exp)]) -> Option<Exp> {
    if target.len() != fact.len() || target.is_empty() {
        return None;
    }
    let t = fact[0].1 / target[0].1;
    if t <= q(0, 1) {
        return None;
    }
    target
        .iter()
        .zip(fact)
        .all(|(a, b)| a.0 == b.0 && a.1 * t == b.1)
        .then_some(t)
}

/// Upper bound of ∏ B_v^{e_v} over the box.
pub fn monomial_upper_bound(powers: &[(usize, Exp)], b: &BoundBox) -> f64 {
    let m = Monomial::new(Interval::point(1.0), powers);
    let mut hi = m.eval(b.bounds()).map(|x| x.hi()).unwrap_or(f64::INFINITY);
    for f in b.mono_facts() {
        if !f.upper {
            continue;
        }
        if let Some(t) = proportional(powers, &f.powers) {
            if f.value > 0.0 {
                if let Ok(x) = pow_exp(Interval::point(f.value), q(1, 1) / t) {
                    hi = hi.min(x.hi());
                }
            }
        }
    }
    hi
}

/// Status of a single condition over the box.
pub fn condition_status(c: &Condition, b: &BoundBox) -> ConditionStatus {
    match c {
        Condition::Monomial {
            powers, at_least, ..
        } => {
            if monomial_lower_bound(powers, b) >= at_least.hi() {
                ConditionStatus::HoldsEverywhere
            } else if monomial_upper_bound(powers, b) < at_least.lo() {
                ConditionStatus::FailsEverywhere
            } else {
                ConditionStatus::Undetermined
            }
        }
        &Condition::Dominates { lead, last, .. } => {
            let bl = b.get(lead);
            let mut all = true;
            for j in lead + 1..=last {
                let bj = b.get(j);
                if bj.lo() > bl.hi() {
                    return ConditionStatus::FailsEverywhere;
                }
                if !(b.knows_ge(lead, j) || bl.lo() >= bj.hi()) {
                    all = false;
                }
            }
            if all {
                ConditionStatus::HoldsEverywhere
            } else {
                ConditionStatus::Undetermined
            }
        }
    }
}

/// Conservative aggregate: holds only if every condition holds on the whole box.
pub fn check_conditions(ineq: &ConditionalInequality, b: &BoundBox) -> ConditionStatus {
    let mut status = ConditionStatus::HoldsEverywhere;
    for c in &ineq.conditions {
        match condition_status(c, b) {
            ConditionStatus::FailsEverywhere => return ConditionStatus::FailsEverywhere,
            ConditionStatus::Undetermined => status = ConditionStatus::Undetermined,
            ConditionStatus::HoldsEverywhere => {}
        }
    }
    status
}

/// The positive multiplier 4Δ²(S_{λ+1}) of a plain part of size λ.
pub fn plain_coefficient(lam: usize) -> Result<Interval, CompileError> {
    if !(2..=7).contains(&lam) {
        return Err(CompileError::UnsupportedPart(lam));
    }
    Ok(Interval::point(4.0) * critical_determinant_squared(lam + 1)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::fixture;
    use crate::decimal::iv_from_decimal;
    use crate::lattice::{new_box, Constraint, Side};

    fn d(s: &str) -> Interval {
        iv_from_decimal(s).unwrap()
    }

    #[test]
    fn plain_coefficients() {
        let expect = [
            (2, 2.0),
            (3, 1.0),
            (4, 0.5),
            (5, 0.1875),
            (6, 0.0625),
            (7, 1.0 / 64.0),
        ];
        for (lam, c) in expect {
            assert_eq!(plain_coefficient(lam).unwrap(), Interval::point(c), "{lam}");
        }
        assert!(plain_coefficient(8).is_err());
    }

    #[test]
    fn four_then_ones() {
        let t = fixture::table();
        let p = Partition::parse("(4,1,1,1,1,1,1)").unwrap();
        let c = compile(&p, 10, &t).unwrap();
        assert_eq!(c.objective.terms.len(), 8);
        assert_eq!(c.objective.terms[1].coef, Interval::point(-0.5));
        assert_eq!(c.objective.terms[1].exponent(0), q(4, 1));
        match &c.conditions[0] {
            Condition::Monomial {
                powers, at_least, ..
            } => {
                assert_eq!(powers[0], (0, q(3, 1)));
                assert_eq!(*at_least, Interval::point(2.0));
            }
            _ => panic!(),
        }
    }

    #[test]
    fn starred_and_weak() {
        let t = fixture::table();
        let c = compile(&Partition::parse("(9*,1)").unwrap(), 10, &t).unwrap();
        assert!(c.conditions.is_empty());
        let one = [Interval::point(1.0); 10];
        let v = c.objective.eval(&one).unwrap();
        assert!(v.contains(10.0));
        let c = compile(&Partition::parse("(4,6*)").unwrap(), 10, &t).unwrap();
        assert_eq!(c.conditions.len(), 2);
        assert!(matches!(
            c.conditions[1],
            Condition::Dominates {
                lead: 5,
                last: 10,
                ..
            }
        ));
        let c = compile(&Partition::parse("(2,2,2,2,2)w").unwrap(), 10, &t).unwrap();
        assert!(c.conditions.is_empty());
        assert_eq!(c.objective.terms[4].exponent(9), q(1, 1));
        assert!(compile(&Partition::parse("(8,2)").unwrap(), 10, &t).is_err());
        assert!(compile(&Partition::parse("(8,1)").unwrap(), 10, &t).is_err());
    }

    #[test]
    fn condition_status_on_boxes() {
        let t = fixture::table();
        let c = compile(&Partition::parse("(1,2,7*)").unwrap(), 10, &t).unwrap();
        let b = new_box(10, &t).unwrap();
        assert_eq!(check_conditions(&c, &b), ConditionStatus::Undetermined);
        let b2 = b
            .apply(&Constraint::AtMost {
                var: 2,
                value: d("1.0"),
            })
            .unwrap()
            .apply(&Constraint::AtLeast {
                var: 3,
                value: d("1.0"),
            })
            .unwrap();
        // 2B2 ≥ B3 holds: B3 ≤ (4/3)… and B2 ≥ B3·3/4
        let st = condition_status(&c.conditions[0], &b2);
        assert_eq!(st, ConditionStatus::HoldsEverywhere);
    }

    #[test]
    fn pairing_uses_known_order() {
        let t = fixture::table();
        let b = new_box(10, &t)
            .unwrap()
            .apply(&Constraint::Dominates(2))
            .unwrap();
        let powers = [(1, q(1, 1)), (2, q(-1, 1))];
        assert!(monomial_lower_bound(&powers, &b) >= 1.0);
        let b = b
            .apply(&Constraint::Mono {
                powers: vec![(2, q(2, 1)), (3, q(-2, 1))],
                side: Side::Lower,
                value: d("1.69"),
            })
            .unwrap();
        assert!(monomial_lower_bound(&powers, &b) >= 1.3 - 1e-12);
    }
}
