//! Proof scripts: chains of claims over the box, and their replay.
//!
//! A claim assumes one constraint, refutes it case by case, and installs its
//! closed complement. Each case either compiles a partition inequality and
//! certifies that its objective stays at or below ω_n, or shows that the case
//! box is empty.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::certify::{
    apply_amgm, certify_with, lemma10_step, lemma11_step, AmgmError, Budget, Certificate, Executor,
    LemmaError, Options,
};
use crate::compile::{compile, CompileError};
use crate::constants::{ConstantsError, ConstantsTable};
use crate::interval::Interval;
use crate::lattice::{new_box, BoundBox, BoxError, Constraint};
use crate::partition::Partition;

/// Where a step comes from in the written argument.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Anchor {
    pub section: String,
    pub item: String,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Proof {
    /// Certify the partition's objective ≤ ω_n, optionally after AM-GM on
    /// groups of parts (1-based positions).
    Partition {
        partition: Partition,
        amgm: Vec<Vec<usize>>,
    },
    /// The case box must be empty. A claim whose only case is this, with
    /// no givens, also passes when propagation already gives the conclusion
    /// up to rounding; the box then keeps its own bound.
    Infeasible,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Case {
    pub label: Option<String>,
    pub given: Vec<Constraint>,
    /// Local claims proved inside the case before the final argument.
    pub steps: Vec<Step>,
    pub proof: Proof,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Claim {
    pub label: String,
    pub anchor: Anchor,
    pub hypothesis: Constraint,
    pub cases: Vec<Case>,
}

impl Claim {
    /// The installed conclusion: the closed complement of the hypothesis.
    pub fn conclusion(&self) -> Constraint {
        self.hypothesis.complement()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Step {
    Claim(Claim),
    Lemma10 {
        label: String,
        anchor: Anchor,
        s: usize,
    },
    Lemma11 {
        label: String,
        anchor: Anchor,
        s: usize,
        sigma: Interval,
        sigma_text: String,
    },
}

impl Step {
    pub fn label(&self) -> &str {
        match self {
            Step::Claim(c) => &c.label,
            Step::Lemma10 { label, .. } | Step::Lemma11 { label, .. } => label,
        }
    }
}

/// A region refuted outright, such as the middle of the B_n range.
#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    pub label: String,
    pub anchor: Anchor,
    pub hypothesis: Vec<Constraint>,
    pub cases: Vec<Case>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub label: String,
    pub anchor: Anchor,
    pub hypothesis: Vec<Constraint>,
    pub steps: Vec<Step>,
    /// Closing argument on the fully tightened box.
    pub finish: Vec<Case>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProofScript {
    pub n: usize,
    pub truncation: Option<Region>,
    pub branches: Vec<Branch>,
}

// --- lint --------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LintIssue {
    pub label: String,
    pub message: String,
}

/// True when the case list covers everything: some case has no extra
/// constraints, or the cases split on a constraint and its complement and
/// both halves are covered.
pub fn cases_cover(cases: &[Vec<Constraint>]) -> bool {
    if cases.iter().any(|g| g.is_empty()) {
        return true;
    }
    let Some(c) = cases.first().and_then(|g| g.first()) else {
        return false;
    };
    let comp = c.complement();
    let strip = |target: &Constraint| -> Vec<Vec<Constraint>> {
        cases
            .iter()
            .filter(|g| g.contains(target))
            .map(|g| g.iter().filter(|x| *x != target).cloned().collect())
            .collect()
    };
    let yes = strip(c);
    let no = strip(&comp);
    !yes.is_empty() && !no.is_empty() && cases_cover(&yes) && cases_cover(&no)
}

fn lint_cases(
    label: &str,
    cases: &[Case],
    n: usize,
    consts: &ConstantsTable,
    out: &mut Vec<LintIssue>,
) {
    let givens: Vec<Vec<Constraint>> = cases.iter().map(|c| c.given.clone()).collect();
    if !cases_cover(&givens) {
        out.push(LintIssue {
            label: label.into(),
            message: "cases do not cover the claim".into(),
        });
    }
    for c in cases {
        let l = match &c.label {
            Some(x) => format!("{label}/{x}"),
            None => label.into(),
        };
        for g in &c.given {
            check_index(&l, g, n, out);
        }
        lint_steps(&l, &c.steps, n, consts, out);
        if let Proof::Partition { partition, amgm } = &c.proof {
            match compile(partition, n, consts) {
                Ok(i) => {
                    if let Err(e) = apply_amgm(&i, amgm) {
                        out.push(LintIssue {
                            label: l.clone(),
                            message: format!("{e}"),
                        });
                    }
                }
                Err(e) => out.push(LintIssue {
                    label: l.clone(),
                    message: format!("{partition}: {e}"),
                }),
            }
        }
    }
}

fn check_index(label: &str, c: &Constraint, n: usize, out: &mut Vec<LintIssue>) {
    if c.min_index() == 0 || c.max_index() > n {
        out.push(LintIssue {
            label: label.into(),
            message: format!("constraint {c} mentions an index outside 1..={n}"),
        });
    }
}

fn lint_steps(
    prefix: &str,
    steps: &[Step],
    n: usize,
    consts: &ConstantsTable,
    out: &mut Vec<LintIssue>,
) {
    for s in steps {
        match s {
            Step::Claim(c) => {
                check_index(&c.label, &c.hypothesis, n, out);
                lint_cases(&c.label, &c.cases, n, consts, out);
            }
            Step::Lemma10 { label, s, .. } | Step::Lemma11 { label, s, .. } => {
                if *s == 0 || s + 1 >= n {
                    out.push(LintIssue {
                        label: label.clone(),
                        message: format!("prefix {s} out of range"),
                    });
                }
            }
        }
        let _ = prefix;
    }
}

/// Structural checks: indices, partitions, case coverage, branch coverage of
/// [l_n, m_n] and unique labels.
pub fn lint_script(script: &ProofScript, consts: &ConstantsTable) -> Vec<LintIssue> {
    let n = script.n;
    let mut out = Vec::new();
    if let Some(t) = &script.truncation {
        for h in &t.hypothesis {
            check_index(&t.label, h, n, &mut out);
        }
        lint_cases(&t.label, &t.cases, n, consts, &mut out);
    }
    for b in &script.branches {
        for h in &b.hypothesis {
            check_index(&b.label, h, n, &mut out);
        }
        lint_steps(&b.label, &b.steps, n, consts, &mut out);
        lint_cases(
            &format!("{}/final", b.label),
            &b.finish,
            n,
            consts,
            &mut out,
        );
    }
    if let Err(m) = branch_coverage(script, consts) {
        out.push(LintIssue {
            label: format!("n{n}"),
            message: m,
        });
    }
    let mut labels = Vec::new();
    collect_labels(script, &mut labels);
    labels.sort();
    for w in labels.windows(2) {
        if w[0] == w[1] {
            out.push(LintIssue {
                label: w[0].clone(),
                message: "duplicate label".into(),
            });
        }
    }
    out
}

fn collect_labels(script: &ProofScript, out: &mut Vec<String>) {
    fn steps(s: &[Step], out: &mut Vec<String>) {
        for st in s {
            out.push(st.label().into());
            if let Step::Claim(c) = st {
                for case in &c.cases {
                    steps(&case.steps, out);
                }
            }
        }
    }
    if let Some(t) = &script.truncation {
        out.push(t.label.clone());
    }
    for b in &script.branches {
        out.push(b.label.clone());
        steps(&b.steps, out);
    }
}

// B_n interval allowed by constraints that only mention B_n.
fn bn_interval(cs: &[Constraint], n: usize) -> Option<(f64, f64)> {
    let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
    for c in cs {
        match *c {
            Constraint::AtLeast { var, value } if var == n => lo = lo.max(value.lo()),
            Constraint::AtMost { var, value } if var == n => hi = hi.min(value.hi()),
            _ => return None,
        }
    }
    Some((lo, hi))
}

/// Branch hypotheses together with the refuted region must cover [l_n, m_n].
pub fn branch_coverage(script: &ProofScript, consts: &ConstantsTable) -> Result<(), String> {
    let n = script.n;
    let (l, m) = consts.bn_range(n).map_err(|e| format!("{e}"))?;
    let mut pieces = Vec::new();
    if let Some(t) = &script.truncation {
        pieces.push(
            bn_interval(&t.hypothesis, n).ok_or("the refuted region constrains more than B_n")?,
        );
    }
    for b in &script.branches {
        pieces.push(
            bn_interval(&b.hypothesis, n)
                .ok_or_else(|| format!("branch {} constrains more than B_n", b.label))?,
        );
    }
    pieces.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut reach = l.lo();
    for (lo, hi) in pieces {
        if lo > reach {
            break;
        }
        reach = reach.max(hi);
    }
    if reach >= m.hi() {
        Ok(())
    } else {
        Err(format!(
            "branches cover B_{n} only up to {reach}, short of {}",
            m.hi()
        ))
    }
}

// --- replay ------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ReplayError {
    #[error(transparent)]
    Box(#[from] BoxError),
    #[error(transparent)]
    Constants(#[from] ConstantsError),
    #[error("{label}: {source}")]
    Compile { label: String, source: CompileError },
    #[error("{label}: {source}")]
    Amgm { label: String, source: AmgmError },
    #[error("{label}: {source}")]
    Lemma { label: String, source: LemmaError },
}

/// Replay settings.
pub struct ReplayConfig<'a> {
    pub budget: Budget,
    pub options: Options,
    pub exec: &'a dyn Executor,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CaseRecord {
    pub label: Option<String>,
    /// Certificate of the closing argument; `None` when the case box was
    /// empty before it.
    pub certificate: Option<Certificate>,
    pub steps: Vec<StepRecord>,
    pub proven: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub label: String,
    pub anchor: Anchor,
    pub kind: &'static str,
    /// Installed fact, rendered.
    pub conclusion: Option<String>,
    pub cases: Vec<CaseRecord>,
    pub proven: bool,
    /// Set when the conclusion emptied the box.
    pub closes_branch: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BranchReport {
    pub label: String,
    pub anchor: Anchor,
    pub steps: Vec<StepRecord>,
    pub finish: Vec<CaseRecord>,
    pub proven: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    Proven,
    Failed { label: String, reason: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub n: usize,
    pub truncation: Option<StepRecord>,
    pub branches: Vec<BranchReport>,
    pub verdict: Verdict,
}

// A printed bound such as B5 < 3/2·0.92 = 1.38 comes out of propagation a
// few ulps above 1.38 after outward rounding, so B5 ≥ 1.38 leaves a sliver.
fn implied_up_to_rounding(b: &BoundBox, h: &Constraint) -> bool {
    const REL: f64 = 1e-13;
    match *h {
        Constraint::AtLeast { var, value } => b.bounds()[var - 1].hi() <= value.lo() * (1.0 + REL),
        Constraint::AtMost { var, value } => b.bounds()[var - 1].lo() >= value.hi() * (1.0 - REL),
        _ => false,
    }
}

fn is_derived(c: &Claim) -> bool {
    matches!(&c.cases[..], [Case { given, steps, proof: Proof::Infeasible, .. }] if given.is_empty() && steps.is_empty())
}

struct Ctx<'a> {
    consts: &'a ConstantsTable,
    cfg: &'a ReplayConfig<'a>,
    omega: Interval,
    failure: Option<(String, String)>,
}

impl Ctx<'_> {
    fn fail(&mut self, label: &str, reason: String) {
        if self.failure.is_none() {
            self.failure = Some((label.into(), reason));
        }
    }

    // Runs one case on the box restricted by `region`.
    fn run_case(
        &mut self,
        label: &str,
        b: &BoundBox,
        region: &[Constraint],
        case: &Case,
    ) -> Result<CaseRecord, ReplayError> {
        let l = match &case.label {
            Some(x) => format!("{label}/{x}"),
            None => label.into(),
        };
        let mut rec = CaseRecord {
            label: case.label.clone(),
            certificate: None,
            steps: Vec::new(),
            proven: false,
        };
        let mut cur = b.clone();
        for c in region.iter().chain(&case.given) {
            match cur.apply(c) {
                Ok(nb) => cur = nb,
                Err(_) => {
                    rec.proven = true;
                    return Ok(rec);
                }
            }
        }
        let (next, steps) = self.run_steps(&cur, &case.steps)?;
        rec.steps = steps;
        if self.failure.is_some() {
            return Ok(rec);
        }
        let Some(cur) = next else {
            rec.proven = true;
            return Ok(rec);
        };
        match &case.proof {
            Proof::Infeasible => {
                self.fail(&l, "the case box is not empty".into());
            }
            Proof::Partition { partition, amgm } => {
                let cert = self.certify(&l, &cur, partition, amgm)?;
                rec.proven = cert.status.is_proven();
                if !rec.proven {
                    self.fail(
                        &l,
                        format!("{partition}: {}", cert.reason.clone().unwrap_or_default()),
                    );
                }
                rec.certificate = Some(cert);
            }
        }
        Ok(rec)
    }

    fn certify(
        &mut self,
        label: &str,
        b: &BoundBox,
        p: &Partition,
        amgm: &[Vec<usize>],
    ) -> Result<Certificate, ReplayError> {
        let ineq = compile(p, b.n(), self.consts).map_err(|source| ReplayError::Compile {
            label: label.into(),
            source,
        })?;
        let surrogate = !amgm.is_empty();
        let ineq = if surrogate {
            apply_amgm(&ineq, amgm).map_err(|source| ReplayError::Amgm {
                label: label.into(),
                source,
            })?
        } else {
            ineq
        };
        let mut cert = certify_with(
            &ineq,
            b,
            self.omega,
            self.cfg.budget,
            &self.cfg.options,
            self.cfg.exec,
        );
        cert.surrogate = surrogate;
        Ok(cert)
    }

    fn run_cases(
        &mut self,
        label: &str,
        b: &BoundBox,
        region: &[Constraint],
        cases: &[Case],
    ) -> Result<Vec<CaseRecord>, ReplayError> {
        let mut out = Vec::new();
        for case in cases {
            let r = self.run_case(label, b, region, case)?;
            out.push(r);
            if self.failure.is_some() {
                break;
            }
        }
        Ok(out)
    }

    // Folds steps over the box; `None` once the box is empty.
    fn run_steps(
        &mut self,
        b: &BoundBox,
        steps: &[Step],
    ) -> Result<(Option<BoundBox>, Vec<StepRecord>), ReplayError> {
        let mut cur = b.clone();
        let mut recs = Vec::new();
        for st in steps {
            let (next, rec) = self.run_step(&cur, st)?;
            recs.push(rec);
            if self.failure.is_some() {
                return Ok((Some(cur), recs));
            }
            match next {
                Some(nb) => cur = nb,
                None => return Ok((None, recs)),
            }
        }
        Ok((Some(cur), recs))
    }

    fn run_step(
        &mut self,
        b: &BoundBox,
        st: &Step,
    ) -> Result<(Option<BoundBox>, StepRecord), ReplayError> {
        match st {
            Step::Claim(c) if is_derived(c) && implied_up_to_rounding(b, &c.hypothesis) => {
                let rec = StepRecord {
                    label: c.label.clone(),
                    anchor: c.anchor.clone(),
                    kind: "derived",
                    conclusion: Some(format!("{}", c.conclusion())),
                    cases: alloc::vec![CaseRecord {
                        label: None,
                        certificate: None,
                        steps: Vec::new(),
                        proven: true
                    }],
                    proven: true,
                    closes_branch: false,
                };
                Ok((Some(b.clone()), rec))
            }
            Step::Claim(c) => {
                let cases =
                    self.run_cases(&c.label, b, core::slice::from_ref(&c.hypothesis), &c.cases)?;
                let proven = self.failure.is_none();
                let concl = c.conclusion();
                let next = if proven {
                    b.apply(&concl).ok()
                } else {
                    Some(b.clone())
                };
                let rec = StepRecord {
                    label: c.label.clone(),
                    anchor: c.anchor.clone(),
                    kind: "claim",
                    conclusion: Some(format!("{concl}")),
                    cases,
                    proven,
                    closes_branch: proven && next.is_none(),
                };
                Ok((next, rec))
            }
            Step::Lemma10 { label, anchor, s }
            | Step::Lemma11 {
                label, anchor, s, ..
            } => {
                let (kind, out) = match st {
                    Step::Lemma11 { sigma, .. } => (
                        "lemma11",
                        lemma11_step(
                            b,
                            *s,
                            *sigma,
                            self.consts,
                            self.cfg.budget,
                            &self.cfg.options,
                            self.cfg.exec,
                        ),
                    ),
                    _ => (
                        "lemma10",
                        lemma10_step(
                            b,
                            *s,
                            self.consts,
                            self.cfg.budget,
                            &self.cfg.options,
                            self.cfg.exec,
                        ),
                    ),
                };
                let out = out.map_err(|source| ReplayError::Lemma {
                    label: label.clone(),
                    source,
                })?;
                let proven = out.certificate.status.is_proven();
                if !proven {
                    self.fail(
                        label,
                        format!(
                            "{}: {}",
                            out.certificate.statement,
                            out.certificate.reason.clone().unwrap_or_default()
                        ),
                    );
                }
                let conclusion = if out.floor.is_finite() {
                    format!("B{} <= max({}, max(B{}..))", s + 1, out.floor, s + 2)
                } else {
                    format!("B{} <= max(B{}..)", s + 1, s + 2)
                };
                let rec = StepRecord {
                    label: label.clone(),
                    anchor: anchor.clone(),
                    kind,
                    conclusion: Some(conclusion),
                    cases: alloc::vec![CaseRecord {
                        label: None,
                        certificate: Some(out.certificate),
                        steps: Vec::new(),
                        proven,
                    }],
                    proven,
                    closes_branch: proven && out.next.is_none(),
                };
                Ok((out.next, rec))
            }
        }
    }
}

/// Certifies an unconditional partition against ω_k over the final box.
pub fn final_weak_contradiction(
    b: &BoundBox,
    p: &Partition,
    consts: &ConstantsTable,
    cfg: &ReplayConfig<'_>,
) -> Result<Certificate, ReplayError> {
    let label = format!("{p}");
    if !p.is_unconditional() {
        return Err(ReplayError::Compile {
            label,
            source: CompileError::UnsupportedPart(0),
        });
    }
    let omega = consts.omega(b.n())?;
    let ineq =
        compile(p, b.n(), consts).map_err(|source| ReplayError::Compile { label, source })?;
    Ok(certify_with(
        &ineq,
        b,
        omega,
        cfg.budget,
        &cfg.options,
        cfg.exec,
    ))
}

/// Replays a full script from the opening box.
pub fn replay_script(
    script: &ProofScript,
    consts: &ConstantsTable,
    cfg: &ReplayConfig<'_>,
) -> Result<Report, ReplayError> {
    let n = script.n;
    let omega = consts.omega(n)?;
    let root = new_box(n, consts)?;
    let mut ctx = Ctx {
        consts,
        cfg,
        omega,
        failure: None,
    };
    let mut report = Report {
        n,
        truncation: None,
        branches: Vec::new(),
        verdict: Verdict::Proven,
    };
    if let Err(m) = branch_coverage(script, consts) {
        report.verdict = Verdict::Failed {
            label: format!("n{n}"),
            reason: m,
        };
        return Ok(report);
    }
    if let Some(t) = &script.truncation {
        let cases = ctx.run_cases(&t.label, &root, &t.hypothesis, &t.cases)?;
        report.truncation = Some(StepRecord {
            label: t.label.clone(),
            anchor: t.anchor.clone(),
            kind: "region",
            conclusion: None,
            proven: ctx.failure.is_none(),
            cases,
            closes_branch: false,
        });
    }
    if ctx.failure.is_none() {
        for br in &script.branches {
            let mut b = root.clone();
            let mut closed = false;
            for h in &br.hypothesis {
                match b.apply(h) {
                    Ok(nb) => b = nb,
                    Err(_) => closed = true,
                }
            }
            let mut rep = BranchReport {
                label: br.label.clone(),
                anchor: br.anchor.clone(),
                steps: Vec::new(),
                finish: Vec::new(),
                proven: false,
            };
            if !closed {
                let (next, steps) = ctx.run_steps(&b, &br.steps)?;
                rep.steps = steps;
                if ctx.failure.is_none() {
                    if let Some(fb) = next {
                        let label = format!("{}/final", br.label);
                        rep.finish = ctx.run_cases(&label, &fb, &[], &br.finish)?;
                    }
                }
            }
            rep.proven = ctx.failure.is_none();
            report.branches.push(rep);
            if ctx.failure.is_some() {
                break;
            }
        }
    }
    if let Some((label, reason)) = ctx.failure {
        report.verdict = Verdict::Failed { label, reason };
    }
    Ok(report)
}
