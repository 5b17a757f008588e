//! JSON and markdown renderings of certificates and replay reports.
//!
//! Everything outside the `stats` object of a report is a function of the
//! inputs alone, so two runs can be diffed byte for byte after dropping it.

use std::fmt::Write as _;

use serde::Serialize;
use woodsbound_core::certify::Certificate;
use woodsbound_core::script::{Anchor, CaseRecord, Report, StepRecord, Verdict};

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct CertStatsJson {
    pub boxes: u64,
    pub max_depth: u32,
    pub atoms: usize,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct CertificateJson {
    pub statement: String,
    pub n: usize,
    pub status: &'static str,
    pub threshold: [f64; 2],
    #[serde(rename = "box")]
    pub domain: Vec<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    /// Largest closed-leaf upper bound; null when no leaf was closed.
    pub max_upper: Option<f64>,
    pub surrogate: bool,
    pub search: CertStatsJson,
}

impl From<&Certificate> for CertificateJson {
    fn from(c: &Certificate) -> Self {
        Self {
            statement: c.statement.clone(),
            n: c.n,
            status: c.status.as_str(),
            threshold: [c.threshold.lo(), c.threshold.hi()],
            domain: c.domain.iter().map(|&(a, b)| [a, b]).collect(),
            reason: c.reason.clone(),
            max_upper: c.max_upper.is_finite().then_some(c.max_upper),
            surrogate: c.surrogate,
            search: CertStatsJson {
                boxes: c.stats.boxes,
                max_depth: c.stats.max_depth,
                atoms: c.stats.atoms,
            },
        }
    }
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct AnchorJson {
    pub section: String,
    pub item: String,
}

impl From<&Anchor> for AnchorJson {
    fn from(a: &Anchor) -> Self {
        Self {
            section: a.section.clone(),
            item: a.item.clone(),
        }
    }
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct CaseJson {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub proven: bool,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub steps: Vec<StepJson>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificate: Option<CertificateJson>,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct StepJson {
    pub label: String,
    pub kind: &'static str,
    pub anchor: AnchorJson,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub conclusion: Option<String>,
    pub proven: bool,
    pub closes_branch: bool,
    pub cases: Vec<CaseJson>,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct BranchJson {
    pub label: String,
    pub anchor: AnchorJson,
    pub proven: bool,
    pub steps: Vec<StepJson>,
    pub finish: Vec<CaseJson>,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct RunStats {
    pub seconds: f64,
    pub jobs: usize,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct ReportJson {
    pub n: usize,
    pub verdict: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failed_at: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    pub surrogates: usize,
    pub boxes: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truncation: Option<StepJson>,
    pub branches: Vec<BranchJson>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stats: Option<RunStats>,
}

fn case_json(c: &CaseRecord) -> CaseJson {
    CaseJson {
        label: c.label.clone(),
        proven: c.proven,
        steps: c.steps.iter().map(step_json).collect(),
        certificate: c.certificate.as_ref().map(CertificateJson::from),
    }
}

fn step_json(s: &StepRecord) -> StepJson {
    StepJson {
        label: s.label.clone(),
        kind: s.kind,
        anchor: (&s.anchor).into(),
        conclusion: s.conclusion.clone(),
        proven: s.proven,
        closes_branch: s.closes_branch,
        cases: s.cases.iter().map(case_json).collect(),
    }
}

/// Every certificate in a report, in replay order.
pub fn certificates(r: &Report) -> Vec<&Certificate> {
    fn cases<'a>(cs: &'a [CaseRecord], out: &mut Vec<&'a Certificate>) {
        for c in cs {
            steps(&c.steps, out);
            out.extend(c.certificate.as_ref());
        }
    }
    fn steps<'a>(ss: &'a [StepRecord], out: &mut Vec<&'a Certificate>) {
        for s in ss {
            cases(&s.cases, out);
        }
    }
    let mut out = Vec::new();
    if let Some(t) = &r.truncation {
        cases(&t.cases, &mut out);
    }
    for b in &r.branches {
        steps(&b.steps, &mut out);
        cases(&b.finish, &mut out);
    }
    out
}

impl ReportJson {
    pub fn new(r: &Report, stats: Option<RunStats>) -> Self {
        let (verdict, failed_at, reason) = match &r.verdict {
            Verdict::Proven => ("proven", None, None),
            Verdict::Failed { label, reason } => {
                ("failed", Some(label.clone()), Some(reason.clone()))
            }
        };
        let certs = certificates(r);
        Self {
            n: r.n,
            verdict,
            failed_at,
            reason,
            surrogates: certs.iter().filter(|c| c.surrogate).count(),
            boxes: certs.iter().map(|c| c.stats.boxes).sum(),
            truncation: r.truncation.as_ref().map(step_json),
            branches: r
                .branches
                .iter()
                .map(|b| BranchJson {
                    label: b.label.clone(),
                    anchor: (&b.anchor).into(),
                    proven: b.proven,
                    steps: b.steps.iter().map(step_json).collect(),
                    finish: b.finish.iter().map(case_json).collect(),
                })
                .collect(),
            stats,
        }
    }
}

fn anchor_text(a: &AnchorJson) -> String {
    match (a.section.is_empty(), a.item.is_empty()) {
        (true, true) => String::new(),
        (false, true) => a.section.clone(),
        (true, false) => a.item.clone(),
        (false, false) => format!("{} {}", a.section, a.item),
    }
}

fn case_cell(c: &CaseJson) -> String {
    let who = c.label.clone().unwrap_or_else(|| "-".into());
    match &c.certificate {
        Some(cert) => {
            let flag = if cert.surrogate { " (AM-GM)" } else { "" };
            format!(
                "{who}: {} {}{flag}, {} boxes",
                cert.statement, cert.status, cert.search.boxes
            )
        }
        None if c.proven => format!("{who}: empty"),
        None => format!("{who}: not reached"),
    }
}

fn md_steps(out: &mut String, steps: &[StepJson], depth: usize) {
    for s in steps {
        let cases: Vec<String> = s.cases.iter().map(case_cell).collect();
        let mark = if s.proven { "ok" } else { "FAILED" };
        let _ = writeln!(
            out,
            "| {}{} | {} | {} | {} | {} | {} |",
            "&nbsp;&nbsp;".repeat(depth),
            s.label,
            anchor_text(&s.anchor),
            s.kind,
            s.conclusion.clone().unwrap_or_default(),
            cases.join("; "),
            mark
        );
        for c in &s.cases {
            md_steps(out, &c.steps, depth + 1);
        }
    }
}

/// Human-readable summary.
pub fn markdown(r: &ReportJson) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "## n = {}: {}", r.n, r.verdict);
    if let (Some(l), Some(why)) = (&r.failed_at, &r.reason) {
        let _ = writeln!(out, "\nFailed at `{l}`: {why}");
    }
    let _ = writeln!(
        out,
        "\n{} boxes searched, {} AM-GM surrogate objectives.",
        r.boxes, r.surrogates
    );
    if let Some(s) = &r.stats {
        let _ = writeln!(out, "Wall time {:.2} s on {} threads.", s.seconds, s.jobs);
    }
    let head = "| step | anchor | kind | installs | cases | status |\n|---|---|---|---|---|---|";
    if let Some(t) = &r.truncation {
        let _ = writeln!(out, "\n### {}\n\n{head}", t.label);
        md_steps(&mut out, std::slice::from_ref(t), 0);
    }
    for b in &r.branches {
        let _ = writeln!(
            out,
            "\n### {} ({})\n\n{head}",
            b.label,
            anchor_text(&b.anchor)
        );
        md_steps(&mut out, &b.steps, 0);
        let fin: Vec<String> = b.finish.iter().map(case_cell).collect();
        let _ = writeln!(
            out,
            "| final | | finish | | {} | {} |",
            fin.join("; "),
            if b.proven { "ok" } else { "FAILED" }
        );
    }
    out
}
