#![allow(dead_code)]

use woodsbound::data::{script_dimensions, DataSource};
use woodsbound_core::certify::{
    Budget, Certificate, Executor, Options, Problem, Sequential, Status,
};
use woodsbound_core::compile::{check_conditions, ConditionStatus};
use woodsbound_core::expr::Exp;
use woodsbound_core::script::{replay_script, ReplayConfig, Report};
use woodsbound_core::{BoundBox, ConstantsTable, Constraint, Interval, Side};

pub fn consts() -> ConstantsTable {
    DataSource::default()
        .constants()
        .expect("bundled constants")
}

pub fn replay(n: usize, consts: &ConstantsTable, exec: &dyn Executor) -> Report {
    let script = DataSource::default()
        .load_script(n)
        .expect("bundled script");
    let cfg = ReplayConfig {
        budget: Budget::default(),
        options: Options::default(),
        exec,
    };
    replay_script(&script, consts, &cfg).expect("replay runs")
}

pub fn replay_all(consts: &ConstantsTable) -> Vec<Report> {
    script_dimensions()
        .map(|n| replay(n, consts, &Sequential))
        .collect()
}

/// Certificates with their step labels, in replay order.
pub fn labelled_certificates(r: &Report) -> Vec<(String, &Certificate)> {
    use woodsbound_core::script::{CaseRecord, StepRecord};
    fn cases<'a>(owner: &str, cs: &'a [CaseRecord], out: &mut Vec<(String, &'a Certificate)>) {
        for c in cs {
            steps(&c.steps, out);
            let label = match &c.label {
                Some(l) => format!("{owner}/{l}"),
                None => owner.to_string(),
            };
            if let Some(cert) = &c.certificate {
                out.push((label, cert));
            }
        }
    }
    fn steps<'a>(ss: &'a [StepRecord], out: &mut Vec<(String, &'a Certificate)>) {
        for s in ss {
            cases(&s.label, &s.cases, out);
        }
    }
    let mut out = Vec::new();
    if let Some(t) = &r.truncation {
        cases(&t.label, &t.cases, &mut out);
    }
    for b in &r.branches {
        steps(&b.steps, &mut out);
        cases(&format!("{}/final", b.label), &b.finish, &mut out);
    }
    out
}

#[derive(Debug, Default)]
pub struct OracleOutcome {
    pub points: u64,
    /// Feasible grid points above the threshold or outside the side
    /// conditions.
    pub counterexamples: Vec<Vec<f64>>,
    /// Largest objective value over feasible grid points.
    pub feasible_max: f64,
}

/// The statement's objective in atom coordinates, evaluated in plain f64.
fn eval_f64(p: &Problem, x: &[f64]) -> f64 {
    p.objective()
        .terms
        .iter()
        .map(|t| {
            t.powers().iter().fold(t.coef.mid(), |acc, &(a, e)| {
                acc * x[a].powf(*e.numer() as f64 / *e.denom() as f64)
            })
        })
        .sum()
}

fn pin(region: &BoundBox, atoms: &[Vec<usize>], x: &[f64]) -> Option<BoundBox> {
    let mut b = region.clone();
    for (vars, &v) in atoms.iter().zip(x) {
        let (lo, hi) = (
            Interval::point(v * (1.0 - 1e-12)),
            Interval::point(v * (1.0 + 1e-12)),
        );
        let cs = if vars.len() == 1 {
            vec![
                Constraint::AtLeast {
                    var: vars[0] + 1,
                    value: lo,
                },
                Constraint::AtMost {
                    var: vars[0] + 1,
                    value: hi,
                },
            ]
        } else {
            let powers: Vec<(usize, Exp)> = vars
                .iter()
                .map(|&v| (v + 1, Exp::from_integer(1)))
                .collect();
            vec![
                Constraint::Mono {
                    powers: powers.clone(),
                    side: Side::Lower,
                    value: lo,
                },
                Constraint::Mono {
                    powers,
                    side: Side::Upper,
                    value: hi,
                },
            ]
        };
        for c in &cs {
            b = b.apply(c).ok()?;
        }
    }
    Some(b)
}

fn grid(lo: f64, hi: f64, k: usize) -> impl Iterator<Item = f64> {
    (0..k).map(move |i| {
        if k == 1 {
            0.5 * (lo + hi)
        } else {
            lo + (hi - lo) * i as f64 / (k - 1) as f64
        }
    })
}

/// Dense grid check of a certified statement with one or two atoms. With two
/// atoms, each axis is swept at `per_axis` points along `lines` lines of the
/// other. Returns `None` for statements with more atoms or no obligation.
pub fn grid_oracle(
    cert: &Certificate,
    threshold: f64,
    per_axis: usize,
    lines: usize,
) -> Option<OracleOutcome> {
    let ob = cert.obligation.as_ref()?;
    let p = Problem::new(&ob.inequality, cert.threshold, false);
    let atoms = p.atoms().to_vec();
    if atoms.is_empty() || atoms.len() > 2 {
        return None;
    }
    let mut region = ob.region.clone();
    let mut out = OracleOutcome {
        feasible_max: f64::NEG_INFINITY,
        ..Default::default()
    };
    if region.propagate().is_err() {
        return Some(out);
    }
    let Some(r) = p.atom_bounds(&region) else {
        return Some(out);
    };
    let mut points: Vec<Vec<f64>> = Vec::new();
    if atoms.len() == 1 {
        points.extend(grid(r[0].lo(), r[0].hi(), per_axis).map(|x| vec![x]));
    } else {
        for y in grid(r[1].lo(), r[1].hi(), lines) {
            points.extend(grid(r[0].lo(), r[0].hi(), per_axis).map(|x| vec![x, y]));
        }
        for x in grid(r[0].lo(), r[0].hi(), lines) {
            points.extend(grid(r[1].lo(), r[1].hi(), per_axis).map(|y| vec![x, y]));
        }
    }
    // Feasibility is only decided for points that could matter: above the
    // threshold, or a sparse sample for the feasible maximum.
    let stride = (points.len() / 2000).max(1);
    for (i, x) in points.iter().enumerate() {
        out.points += 1;
        let f = eval_f64(&p, x);
        let above = f > threshold * (1.0 + 1e-9);
        if !above && (i % stride != 0 || f <= out.feasible_max) {
            continue;
        }
        let Some(b) = pin(&region, &atoms, x) else {
            continue;
        };
        out.feasible_max = out.feasible_max.max(f);
        // A certificate also vouches for the side conditions.
        if above || check_conditions(&ob.inequality, &b) == ConditionStatus::FailsEverywhere {
            out.counterexamples.push(x.clone());
        }
    }
    Some(out)
}

pub fn is_certified(c: &Certificate) -> bool {
    c.status == Status::Certified
}
