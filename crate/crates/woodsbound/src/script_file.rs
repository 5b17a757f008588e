//! JSON schema of proof-script files and its conversion to the core model.

use serde::{Deserialize, Serialize};
use woodsbound_core::partition::Partition;
use woodsbound_core::script::{Anchor, Branch, Case, Claim, Proof, ProofScript, Region, Step};

use crate::format::{parse_constraint, parse_number, SyntaxError};

#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct AnchorFile {
    #[serde(default)]
    pub section: String,
    #[serde(default)]
    pub item: String,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct CaseFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub given: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub steps: Vec<StepFile>,
    /// Partition whose objective is certified; absent when the case box is
    /// empty.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub partition: Option<String>,
    /// AM-GM groups of part positions, 1-based.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub amgm: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StepFile {
    Claim {
        label: String,
        #[serde(default)]
        anchor: AnchorFile,
        suppose: String,
        cases: Vec<CaseFile>,
    },
    Lemma10 {
        label: String,
        #[serde(default)]
        anchor: AnchorFile,
        s: usize,
    },
    Lemma11 {
        label: String,
        #[serde(default)]
        anchor: AnchorFile,
        s: usize,
        sigma: String,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RegionFile {
    pub label: String,
    #[serde(default)]
    pub anchor: AnchorFile,
    pub suppose: Vec<String>,
    pub cases: Vec<CaseFile>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct BranchFile {
    pub label: String,
    #[serde(default)]
    pub anchor: AnchorFile,
    pub assume: Vec<String>,
    #[serde(default)]
    pub steps: Vec<StepFile>,
    pub finish: Vec<CaseFile>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ScriptFile {
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncation: Option<RegionFile>,
    pub branches: Vec<BranchFile>,
}

#[derive(Debug, thiserror::Error)]
pub enum ScriptError {
    #[error("script JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{label}: {source}")]
    Syntax { label: String, source: SyntaxError },
    #[error("{label}: {source}")]
    Partition {
        label: String,
        source: woodsbound_core::partition::PartitionError,
    },
}

fn anchor(a: &AnchorFile) -> Anchor {
    Anchor {
        section: a.section.clone(),
        item: a.item.clone(),
    }
}

fn constraints(
    label: &str,
    items: &[String],
) -> Result<Vec<woodsbound_core::Constraint>, ScriptError> {
    items
        .iter()
        .map(|t| {
            parse_constraint(t).map_err(|source| ScriptError::Syntax {
                label: label.into(),
                source,
            })
        })
        .collect()
}

fn case(label: &str, c: &CaseFile) -> Result<Case, ScriptError> {
    let l = match &c.label {
        Some(x) => format!("{label}/{x}"),
        None => label.to_string(),
    };
    let proof = match &c.partition {
        Some(p) => Proof::Partition {
            partition: Partition::parse(p).map_err(|source| ScriptError::Partition {
                label: l.clone(),
                source,
            })?,
            amgm: c.amgm.clone(),
        },
        None => Proof::Infeasible,
    };
    Ok(Case {
        label: c.label.clone(),
        given: constraints(&l, &c.given)?,
        steps: steps(&c.steps)?,
        proof,
    })
}

fn cases(label: &str, cs: &[CaseFile]) -> Result<Vec<Case>, ScriptError> {
    cs.iter().map(|c| case(label, c)).collect()
}

fn steps(items: &[StepFile]) -> Result<Vec<Step>, ScriptError> {
    items
        .iter()
        .map(|s| {
            Ok(match s {
                StepFile::Claim {
                    label,
                    anchor: a,
                    suppose,
                    cases: cs,
                } => Step::Claim(Claim {
                    label: label.clone(),
                    anchor: anchor(a),
                    hypothesis: parse_constraint(suppose).map_err(|source| {
                        ScriptError::Syntax {
                            label: label.clone(),
                            source,
                        }
                    })?,
                    cases: cases(label, cs)?,
                }),
                StepFile::Lemma10 {
                    label,
                    anchor: a,
                    s,
                } => Step::Lemma10 {
                    label: label.clone(),
                    anchor: anchor(a),
                    s: *s,
                },
                StepFile::Lemma11 {
                    label,
                    anchor: a,
                    s,
                    sigma,
                } => Step::Lemma11 {
                    label: label.clone(),
                    anchor: anchor(a),
                    s: *s,
                    sigma: parse_number(sigma).map_err(|source| ScriptError::Syntax {
                        label: label.clone(),
                        source,
                    })?,
                    sigma_text: sigma.clone(),
                },
            })
        })
        .collect()
}

impl ScriptFile {
    pub fn from_json(text: &str) -> Result<Self, ScriptError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_script(&self) -> Result<ProofScript, ScriptError> {
        let truncation = match &self.truncation {
            Some(t) => Some(Region {
                label: t.label.clone(),
                anchor: anchor(&t.anchor),
                hypothesis: constraints(&t.label, &t.suppose)?,
                cases: cases(&t.label, &t.cases)?,
            }),
            None => None,
        };
        let branches = self
            .branches
            .iter()
            .map(|b| {
                Ok(Branch {
                    label: b.label.clone(),
                    anchor: anchor(&b.anchor),
                    hypothesis: constraints(&b.label, &b.assume)?,
                    steps: steps(&b.steps)?,
                    finish: cases(&format!("{}/final", b.label), &b.finish)?,
                })
            })
            .collect::<Result<_, ScriptError>>()?;
        Ok(ProofScript {
            n: self.n,
            truncation,
            branches,
        })
    }

    /// Every decimal bound installed by a claim, as written.
    pub fn claim_values(&self) -> Vec<(String, String)> {
        fn walk(items: &[StepFile], out: &mut Vec<(String, String)>) {
            for s in items {
                if let StepFile::Claim {
                    label,
                    suppose,
                    cases,
                    ..
                } = s
                {
                    if let Some((_, v)) = suppose.rsplit_once(['<', '>', '=']) {
                        let v = v.trim();
                        if !v.is_empty() && !v.starts_with('B') && !v.starts_with("max") {
                            out.push((label.clone(), v.to_string()));
                        }
                    }
                    for c in cases {
                        walk(&c.steps, out);
                    }
                }
            }
        }
        let mut out = Vec::new();
        for b in &self.branches {
            walk(&b.steps, &mut out);
        }
        out
    }
}
