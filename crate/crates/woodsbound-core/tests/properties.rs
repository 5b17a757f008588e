//! Property tests for the interval kernel, the box and the certifier.

use num_rational::BigRational;
use proptest::prelude::*;
use woodsbound_core::certify::{
    apply_amgm, certify_with, Budget, Options, Problem, Sequential, Status,
};
use woodsbound_core::compile::compile;
use woodsbound_core::partition::Partition;
use woodsbound_core::{
    iv_arith, iv_pow_rational, new_box, ArithOp, ConstantRow, ConstantsTable, Constraint, Interval,
};

const GAMMA: [(usize, &str, &str); 25] = [
    (9, "2.1326324", "9"),
    (10, "2.2636302", "10.3"),
    (11, "2.3933470", "11.62"),
    (12, "2.5217871", "13"),
    (13, "2.6492947", "14.455765"),
    (14, "2.7758041", "15.955156"),
    (15, "2.9014777", "17.498499"),
    (16, "3.0263937", "19.285"),
    (17, "3.1506793", "21.101"),
    (18, "3.2743307", "22.955"),
    (19, "3.3974439", "24.691"),
    (20, "3.5200620", "26.629"),
    (21, "3.6422432", "28.605"),
    (22, "3.7640371", "30.62"),
    (23, "3.8854763", "32.68"),
    (24, "4.0065998", "34.78"),
    (25, "4.1274438", "37.05"),
    (26, "4.2480446", "39.24"),
    (27, "4.3684312", "41.78"),
    (28, "4.488631", "44.36"),
    (29, "4.6086676", "47.18"),
    (30, "4.7285667", "49.86"),
    (31, "4.8483483", "53.04"),
    (32, "4.9680344", "56.06"),
    (33, "5.0876409", "59.58"),
];

fn table() -> ConstantsTable {
    let mut rows: Vec<ConstantRow> = (2..=8usize)
        .map(|k| ConstantRow {
            dimension: k,
            gamma_upper: None,
            omega: k.to_string(),
            source: "fixture".into(),
        })
        .collect();
    for (k, g, w) in GAMMA {
        rows.push(ConstantRow {
            dimension: k,
            gamma_upper: Some(g.into()),
            omega: w.into(),
            source: "fixture".into(),
        });
    }
    ConstantsTable::from_rows("0.46873", "8.5337", &rows).unwrap()
}

fn q(x: f64) -> BigRational {
    BigRational::from_float(x).unwrap()
}

fn encloses(r: Interval, x: &BigRational) -> bool {
    q(r.lo()) <= *x && *x <= q(r.hi())
}

fn magnitude() -> impl Strategy<Value = f64> {
    (0.5f64..1.0, -6i32..7).prop_map(|(m, e)| m * 10f64.powi(e))
}

fn signed() -> impl Strategy<Value = f64> {
    (magnitude(), any::<bool>()).prop_map(|(x, neg)| if neg { -x } else { x })
}

// An interval and a point inside it, as (interval, fraction along it).
fn interval(positive: bool) -> impl Strategy<Value = (Interval, f64)> {
    let end = if positive {
        magnitude().boxed()
    } else {
        signed().boxed()
    };
    (end.clone(), end, 0.0f64..=1.0).prop_map(|(a, b, t)| {
        let v = Interval::new(a.min(b), a.max(b)).unwrap();
        let x = (v.lo() + (v.hi() - v.lo()) * t).clamp(v.lo(), v.hi());
        (v, x)
    })
}

fn op() -> impl Strategy<Value = ArithOp> {
    prop_oneof![
        Just(ArithOp::Add),
        Just(ArithOp::Sub),
        Just(ArithOp::Mul),
        Just(ArithOp::Div)
    ]
}

proptest! {
    #[test]
    fn arithmetic_encloses_exact_results(o in op(), (a, x) in interval(false), (b, y) in interval(false), (c, z) in interval(true)) {
        let (b, y) = if o == ArithOp::Div { (c, z) } else { (b, y) };
        let r = iv_arith(o, a, b).unwrap();
        let (x, y) = (q(x), q(y));
        let exact = match o {
            ArithOp::Add => &x + &y,
            ArithOp::Sub => &x - &y,
            ArithOp::Mul => &x * &y,
            ArithOp::Div => &x / &y,
        };
        prop_assert!(encloses(r, &exact), "{:?} {:?} {:?} = {:?}", o, a, b, r);
    }

    #[test]
    fn rational_powers_enclose(( a, x) in interval(true), p in -6i64..=6, d in 1u64..=6) {
        prop_assume!(p != 0);
        let r = iv_pow_rational(a, p, d).unwrap();
        let xp = q(x).pow(p as i32);
        prop_assert!(q(r.lo()).pow(d as i32) <= xp && xp <= q(r.hi()).pow(d as i32), "{:?}^({}/{}) = {:?}", a, p, d, r);
    }

    #[test]
    fn propagation_ignores_order(n in 10usize..=16, picks in prop::collection::vec((0usize..64, 0.0f64..1.0, any::<bool>()), 1..5)) {
        let consts = table();
        let root = new_box(n, &consts).unwrap();
        let cs: Vec<Constraint> = picks
            .iter()
            .map(|&(i, t, upper)| {
                let var = i % n + 1;
                let r = root.get(var);
                let v = Interval::point(r.lo() + (r.hi() - r.lo()) * t);
                if upper { Constraint::AtMost { var, value: v } } else { Constraint::AtLeast { var, value: v } }
            })
            .collect();
        let run = |order: &mut dyn Iterator<Item = &Constraint>| {
            let mut b = root.clone();
            for c in order {
                b = b.apply(c).ok()?;
            }
            b.propagate().ok()?;
            Some(b.snapshot())
        };
        let fwd = run(&mut cs.iter());
        let back = run(&mut cs.iter().rev());
        prop_assert_eq!(fwd.is_some(), back.is_some());
        if let (Some(f), Some(g)) = (fwd, back) {
            for (x, y) in f.iter().zip(&g) {
                prop_assert!((x.0 - y.0).abs() <= 1e-9 * x.0.abs() && (x.1 - y.1).abs() <= 1e-9 * x.1.abs(), "{:?} vs {:?}", f, g);
            }
        }
    }

    #[test]
    fn mu_and_lambda_bracket(n in 10usize..=20, var in 0usize..64, t in 0.0f64..1.0, upper in any::<bool>()) {
        let consts = table();
        let mut root = new_box(n, &consts).unwrap();
        root.propagate().unwrap();
        let var = var % n + 1;
        let r = root.get(var);
        let v = Interval::point(r.lo() + (r.hi() - r.lo()) * t);
        let c = if upper { Constraint::AtMost { var, value: v } } else { Constraint::AtLeast { var, value: v } };
        let Ok(mut tight) = root.apply(&c) else { return Ok(()) };
        prop_assume!(tight.propagate().is_ok());
        for s in 1..n {
            prop_assert!(root.lambda_s(s).lo() <= root.mu_s(s).hi());
            prop_assert!(tight.lambda_s(s).lo() <= tight.mu_s(s).hi());
            // Shrinking the box can only tighten both.
            prop_assert!(tight.mu_s(s).hi() <= root.mu_s(s).hi());
            prop_assert!(tight.lambda_s(s).lo() >= root.lambda_s(s).lo());
        }
    }

    #[test]
    fn amgm_surrogate_dominates(xs in prop::collection::vec(0.2f64..3.0, 9)) {
        let consts = table();
        let ineq = compile(&Partition::parse("(1,2,4,2,1)").unwrap(), 10, &consts).unwrap();
        let sur = apply_amgm(&ineq, &[vec![2, 3, 4]]).unwrap();
        let last = 1.0 / xs.iter().product::<f64>();
        let point: Vec<Interval> = xs.iter().chain([&last]).map(|&x| Interval::point(x)).collect();
        let raw = ineq.objective.eval(&point).unwrap();
        let bound = sur.objective.eval(&point).unwrap();
        prop_assert!(bound.hi() >= raw.lo(), "{:?} < {:?}", bound, raw);
    }

    #[test]
    fn atom_objective_matches_original(
        text in prop_oneof![Just("(9*,1)"), Just("(2w,2w,2w,2w,2w)"), Just("(1,4,5*)"), Just("(4*,4,2)"), Just("(1,2,4,2,1)")],
        xs in prop::collection::vec(0.3f64..2.5, 9),
    ) {
        let consts = table();
        let ineq = compile(&Partition::parse(text).unwrap(), 10, &consts).unwrap();
        let p = Problem::new(&ineq, Interval::point(10.3), false);
        // Points on the surface B_1⋯B_n = 1, where the substitution is exact.
        let last = 1.0 / xs.iter().product::<f64>();
        let b: Vec<f64> = xs.iter().copied().chain([last]).collect();
        let point: Vec<Interval> = b.iter().map(|&x| Interval::point(x)).collect();
        let atoms: Vec<Interval> = p.atoms().iter().map(|a| Interval::point(a.iter().map(|&v| b[v]).product())).collect();
        let orig = ineq.objective.eval(&point).unwrap().mid();
        let sub = p.objective().eval(&atoms).unwrap().mid();
        prop_assert!((orig - sub).abs() <= 1e-9 * orig.abs().max(1.0), "{} vs {}", orig, sub);
    }

    #[test]
    fn monotone_fixing_keeps_the_verdict(lo in 0.4398f64..1.0, w in 0.05f64..1.0, scale in prop_oneof![Just(1.0f64), Just(0.9)]) {
        let consts = table();
        let ineq = compile(&Partition::parse("(9*,1)").unwrap(), 10, &consts).unwrap();
        let hi = (lo + w).min(1.9378);
        let b = new_box(10, &consts)
            .unwrap()
            .apply(&Constraint::AtLeast { var: 10, value: Interval::point(lo) })
            .and_then(|b| b.apply(&Constraint::AtMost { var: 10, value: Interval::point(hi) }));
        let Ok(b) = b else { return Ok(()) };
        let thr = consts.omega(10).unwrap() * Interval::point(scale);
        let run = |monotone| {
            certify_with(&ineq, &b, thr, Budget::default(), &Options { monotone, ..Options::default() }, &Sequential).status
        };
        let (on, off) = (run(true), run(false));
        prop_assert_eq!(on, off);
        if scale == 1.0 {
            prop_assert!(on.is_proven());
        } else {
            prop_assert_eq!(on, Status::Inconclusive);
        }
    }
}
