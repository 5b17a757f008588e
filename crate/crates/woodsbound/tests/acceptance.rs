//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit on any
//! failure.

mod common;

use std::time::{Duration, Instant};

use num_rational::BigRational;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use woodsbound::data::{script_dimensions, DataSource};
use woodsbound::exec::executor;
use woodsbound::report::ReportJson;
use woodsbound::tables::agrees_with_printed;
use woodsbound_core::certify::{certify_with, Budget, Options, Sequential, Status};
use woodsbound_core::script::{
    replay_script, ProofScript, ReplayConfig, Report, StepRecord, Verdict,
};
use woodsbound_core::{iv_arith, iv_pow_rational, ArithOp, ConstantsTable, Interval};

use common::{consts, grid_oracle, is_certified, labelled_certificates, replay};

type Outcome = Result<String, String>;

fn check(cond: bool, what: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(what())
    }
}

fn nu_table(c: &ConstantsTable) -> Outcome {
    let published = DataSource::default()
        .published()
        .map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    for (&n, printed) in &published.nu {
        let t = Instant::now();
        let v = c.nu(n).map_err(|e| format!("nu({n}): {e}"))?;
        let rel = v.width() / v.mid().abs();
        worst = worst.max(rel);
        check(agrees_with_printed(v, printed), || {
            format!("nu({n}) = [{}, {}] vs printed {printed}", v.lo(), v.hi())
        })?;
        check(rel < 1e-4, || format!("nu({n}) relative width {rel:e}"))?;
        check(t.elapsed() < Duration::from_secs(1), || {
            format!("nu({n}) took {:?}", t.elapsed())
        })?;
    }
    Ok(format!(
        "{} values, worst relative width {worst:.1e}",
        published.nu.len()
    ))
}

fn bounds_table(c: &ConstantsTable) -> Outcome {
    let published = DataSource::default()
        .published()
        .map_err(|e| e.to_string())?;
    for (&n, (l, m)) in &published.bounds {
        let (lo, hi) = c.bn_range(n).map_err(|e| format!("bn_range({n}): {e}"))?;
        check(agrees_with_printed(lo, l), || {
            format!("l_{n} = [{}, {}] vs printed {l}", lo.lo(), lo.hi())
        })?;
        check(agrees_with_printed(hi, m), || {
            format!("m_{n} = [{}, {}] vs printed {m}", hi.lo(), hi.hi())
        })?;
    }
    Ok(format!("{} dimensions", published.bounds.len()))
}

fn hermite_closed_forms(c: &ConstantsTable) -> Outcome {
    for (k, exact) in [(4, 2f64.sqrt()), (8, 2.0)] {
        let g = c.hermite_bound(k).map_err(|e| e.to_string())?;
        check(g.contains(exact) && g.width() < 1e-12 * exact, || {
            format!("gamma_{k} = [{}, {}]", g.lo(), g.hi())
        })?;
    }
    Ok("gamma_4 = sqrt 2, gamma_8 = 2".into())
}

fn all_dimensions(reports: &[(Report, Duration)]) -> Outcome {
    let dims: Vec<usize> = reports.iter().map(|r| r.0.n).collect();
    check(dims == (10..=33).collect::<Vec<_>>(), || {
        format!("scripts cover {dims:?}")
    })?;
    for (r, t) in reports {
        check(r.verdict == Verdict::Proven, || {
            format!("n = {}: {:?}", r.n, r.verdict)
        })?;
        check(*t < Duration::from_secs(300), || {
            format!("n = {} took {t:?}", r.n)
        })?;
    }
    let total: Duration = reports.iter().map(|r| r.1).sum();
    Ok(format!("n = 10..33 proven in {:.1} s", total.as_secs_f64()))
}

fn find_step<'a>(r: &'a Report, label: &str) -> Option<&'a StepRecord> {
    fn walk<'a>(ss: &'a [StepRecord], label: &str) -> Option<&'a StepRecord> {
        ss.iter().find_map(|s| {
            if s.label == label {
                return Some(s);
            }
            s.cases.iter().find_map(|c| walk(&c.steps, label))
        })
    }
    r.truncation
        .iter()
        .find_map(|t| walk(std::slice::from_ref(t), label))
        .or_else(|| r.branches.iter().find_map(|b| walk(&b.steps, label)))
}

fn spot_claims(reports: &[(Report, Duration)]) -> Outcome {
    let by_n = |n: usize| &reports.iter().find(|r| r.0.n == n).expect("replayed").0;
    let spots: [(usize, &str, &str, &str); 5] = [
        (10, "n10/middle", "(9*,1)", "10.3"),
        (10, "n10/low/i", "(2w,2w,2w,2w,2w)", "10.3"),
        (16, "n16/all/iii", "(1*,15*)", ""),
        (19, "n19/all/iv", "(8*,11*)", ""),
        (
            33,
            "n33/all/final",
            "(2w,1,2w,2w,2w,2w,2w,2w,2w,2w,2w,2w,2w,2w,2w,2w,2w)",
            "",
        ),
    ];
    let mut slowest = Duration::ZERO;
    for (n, label, statement, threshold) in spots {
        let certs = labelled_certificates(by_n(n));
        let (_, cert) = certs
            .iter()
            .find(|(l, _)| l == label)
            .ok_or_else(|| format!("no certificate at {label}"))?;
        check(cert.statement == statement, || {
            format!("{label} certifies {}", cert.statement)
        })?;
        if !threshold.is_empty() {
            check(agrees_with_printed(cert.threshold, threshold), || {
                format!("{label} threshold {:?}", cert.threshold)
            })?;
        }
        let ob = cert
            .obligation
            .as_ref()
            .ok_or_else(|| format!("{label} has no obligation"))?;
        let t = Instant::now();
        let again = certify_with(
            &ob.inequality,
            &ob.region,
            cert.threshold,
            Budget::default(),
            &Options::default(),
            &Sequential,
        );
        let took = t.elapsed();
        slowest = slowest.max(took);
        check(again.status == Status::Certified, || {
            format!("{label}: {:?}", again.reason)
        })?;
        check(took < Duration::from_secs(10), || {
            format!("{label} took {took:?}")
        })?;
    }
    let trunc = by_n(10)
        .truncation
        .as_ref()
        .ok_or("n10 has no truncation")?;
    let cert = trunc.cases[0]
        .certificate
        .as_ref()
        .ok_or("n10 truncation has no certificate")?;
    let b10 = cert.domain[9];
    check(
        (b10.0 - 0.4398).abs() < 1e-9 && (b10.1 - 1.9378).abs() < 1e-9,
        || format!("n10 truncation B10 in {b10:?}"),
    )?;
    let step = find_step(by_n(19), "n19/all/iv").ok_or("no step n19/all/iv")?;
    let floor: f64 = step
        .conclusion
        .as_deref()
        .and_then(|c| {
            c.split_once("max(")?
                .1
                .split_once(',')
                .map(|x| x.0.to_string())
        })
        .and_then(|x| x.parse().ok())
        .ok_or_else(|| format!("n19/all/iv installs {:?}", step.conclusion))?;
    check(floor < 1.31015, || format!("n19 B9 floor {floor}"))?;
    Ok(format!(
        "5 spot claims, slowest {:.3} s, n19 B9 floor {floor:.10}",
        slowest.as_secs_f64()
    ))
}

fn without_step(mut s: ProofScript, label: &str) -> ProofScript {
    for b in &mut s.branches {
        b.steps.retain(|st| st.label() != label);
    }
    s
}

fn replay_with(script: &ProofScript, c: &ConstantsTable) -> Result<Report, String> {
    let cfg = ReplayConfig {
        budget: Budget::default(),
        options: Options::default(),
        exec: &Sequential,
    };
    replay_script(script, c, &cfg).map_err(|e| e.to_string())
}

fn oracle_and_mutations(c: &ConstantsTable, reports: &[(Report, Duration)]) -> Outcome {
    let (mut statements, mut points, mut refuted) = (0usize, 0u64, 0usize);
    for (r, _) in reports {
        for (label, cert) in labelled_certificates(r) {
            if !is_certified(cert) {
                continue;
            }
            let Some(o) = grid_oracle(cert, cert.threshold.lo(), 100_001, 33) else {
                continue;
            };
            statements += 1;
            points += o.points;
            check(o.counterexamples.is_empty(), || {
                format!(
                    "{label}: {} grid counterexamples, first {:?}",
                    o.counterexamples.len(),
                    o.counterexamples[0]
                )
            })?;
            // Below the sampled maximum the certifier must give up. Pinning
            // decides feasibility a little more loosely than the certifier's
            // contraction, hence the margin.
            if o.feasible_max.is_finite() && o.feasible_max > 0.0 {
                let ob = cert
                    .obligation
                    .as_ref()
                    .expect("oracle needs an obligation");
                let low = Interval::point(o.feasible_max * (1.0 - 1e-3));
                let c2 = certify_with(
                    &ob.inequality,
                    &ob.region,
                    low,
                    Budget::default(),
                    &Options::default(),
                    &Sequential,
                );
                check(c2.status == Status::Inconclusive, || {
                    format!("{label} certified below its grid maximum")
                })?;
                refuted += 1;
            }
        }
    }
    check(statements > 0, || "no one- or two-atom statements".into())?;

    let src = DataSource::default();
    let mut mutations: Vec<(String, usize, Result<Report, String>)> = Vec::new();
    for n in [10, 13, 16, 19, 25, 33] {
        let mut weak = c.clone();
        let w = c.omega(n).map_err(|e| e.to_string())?;
        weak.push_omega(n, Interval::point(w.lo() * 0.99));
        let script = src.load_script(n).map_err(|e| e.to_string())?;
        mutations.push((
            format!("omega_{n} lowered by 1%"),
            n,
            replay_with(&script, &weak),
        ));
    }
    for (n, label) in [
        (10, "n10/low/i"),
        (16, "n16/all/iii"),
        (19, "n19/all/iv"),
        (13, "n13/all/v"),
        (25, "n25/all/i"),
        (33, "n33/all/i"),
    ] {
        let script = src.load_script(n).map_err(|e| e.to_string())?;
        let before = script.branches.iter().map(|b| b.steps.len()).sum::<usize>();
        let cut = without_step(script, label);
        check(
            cut.branches.iter().map(|b| b.steps.len()).sum::<usize>() + 1 == before,
            || format!("no step {label}"),
        )?;
        mutations.push((format!("{label} deleted"), n, replay_with(&cut, c)));
    }
    let mut dims: Vec<usize> = Vec::new();
    for (what, n, res) in &mutations {
        let r = res.as_ref().map_err(|e| format!("{what}: {e}"))?;
        match &r.verdict {
            Verdict::Failed { label, .. } if label.starts_with(&format!("n{n}/")) => dims.push(*n),
            v => return Err(format!("{what}: {v:?}")),
        }
    }
    dims.sort_unstable();
    dims.dedup();
    check(mutations.len() >= 10 && dims.len() >= 3, || {
        format!("{} mutations over {dims:?}", mutations.len())
    })?;
    Ok(format!(
        "{statements} statements, {points} grid points, 0 counterexamples, {refuted} lowered thresholds refused, {} mutations failed over n = {dims:?}",
        mutations.len()
    ))
}

fn q(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite")
}

fn encloses(r: Interval, exact: &BigRational) -> bool {
    q(r.lo()) <= *exact && *exact <= q(r.hi())
}

fn random_interval(rng: &mut ChaCha8Rng, positive: bool) -> Interval {
    let mut end = || {
        let x = rng.gen_range(0.5..1.0) * 10f64.powi(rng.gen_range(-4..5));
        if positive || rng.gen_bool(0.5) {
            x
        } else {
            -x
        }
    };
    let (a, b) = (end(), end());
    Interval::new(a.min(b), a.max(b)).expect("ordered")
}

fn point_in(rng: &mut ChaCha8Rng, v: Interval) -> f64 {
    match rng.gen_range(0..8) {
        0 => v.lo(),
        1 => v.hi(),
        _ => (v.lo() + (v.hi() - v.lo()) * rng.gen_range(0.0..1.0)).clamp(v.lo(), v.hi()),
    }
}

fn containment(c: &ConstantsTable) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut checks = 0u64;
    for i in 0..600_000u64 {
        let op = [ArithOp::Add, ArithOp::Sub, ArithOp::Mul, ArithOp::Div][(i % 4) as usize];
        let a = random_interval(&mut rng, false);
        let b = random_interval(&mut rng, op == ArithOp::Div);
        let r = iv_arith(op, a, b).map_err(|e| format!("{op:?} {a:?} {b:?}: {e}"))?;
        let (x, y) = (q(point_in(&mut rng, a)), q(point_in(&mut rng, b)));
        let exact = match op {
            ArithOp::Add => &x + &y,
            ArithOp::Sub => &x - &y,
            ArithOp::Mul => &x * &y,
            ArithOp::Div => {
                if y.is_zero() {
                    continue;
                }
                &x / &y
            }
        };
        check(encloses(r, &exact), || {
            format!("{op:?} {a:?} {b:?} misses {exact}")
        })?;
        checks += 1;
    }
    for _ in 0..400_000u64 {
        let a = random_interval(&mut rng, true);
        let p = [-5, -4, -3, -2, -1, 1, 2, 3, 4, 5][rng.gen_range(0..10)];
        let qd: u64 = rng.gen_range(1..=5);
        let r = iv_pow_rational(a, p, qd).map_err(|e| format!("{a:?}^({p}/{qd}): {e}"))?;
        let x = q(point_in(&mut rng, a));
        // r.lo ≤ x^(p/q) ≤ r.hi, raised to the q-th power.
        let xp = x.pow(p as i32);
        let ok = q(r.lo()).pow(qd as i32) <= xp && xp <= q(r.hi()).pow(qd as i32);
        check(ok, || format!("{a:?}^({p}/{qd}) = {r:?} misses a point"))?;
        checks += 1;
    }
    check(checks >= 1_000_000 - 1_000, || {
        format!("only {checks} checks")
    })?;

    let mut runs: Vec<String> = Vec::new();
    for jobs in [1, 4, 8] {
        let exec = executor(jobs).map_err(|e| e.to_string())?;
        let all: Vec<ReportJson> = script_dimensions()
            .map(|n| ReportJson::new(&replay(n, c, exec.as_ref()), None))
            .collect();
        runs.push(serde_json::to_string(&all).map_err(|e| e.to_string())?);
    }
    check(runs.iter().all(|r| r == &runs[0]), || {
        "reports differ between job counts".into()
    })?;
    Ok(format!(
        "{checks} containment checks, identical reports at jobs 1/4/8 ({} bytes)",
        runs[0].len()
    ))
}

fn main() {
    let c = consts();
    let reports: Vec<(Report, Duration)> = script_dimensions()
        .map(|n| {
            let t = Instant::now();
            let r = replay(n, &c, &Sequential);
            (r, t.elapsed())
        })
        .collect();
    let criteria: [(&str, &dyn Fn() -> Outcome); 7] = [
        ("nu table", &|| nu_table(&c)),
        ("B_n range", &|| bounds_table(&c)),
        ("Hermite closed forms", &|| hermite_closed_forms(&c)),
        ("all dimensions", &|| all_dimensions(&reports)),
        ("spot claims", &|| spot_claims(&reports)),
        ("grid oracle and mutations", &|| {
            oracle_and_mutations(&c, &reports)
        }),
        ("interval containment and determinism", &|| containment(&c)),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let res = run();
        let secs = t.elapsed().as_secs_f64();
        match res {
            Ok(msg) => println!("criterion {}: PASS {name}: {msg} [{secs:.1} s]", i + 1),
            Err(msg) => {
                failed += 1;
                println!("criterion {}: FAIL {name}: {msg} [{secs:.1} s]", i + 1);
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
