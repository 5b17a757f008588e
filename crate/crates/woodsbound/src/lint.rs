//! Script checks that need the data files: structure, coverage and the
//! manifest of printed claim values.

use woodsbound_core::script::{lint_script, LintIssue};
use woodsbound_core::{iv_from_decimal, ConstantsTable};

use crate::data::{DataError, DataSource, Published};
use crate::script_file::ScriptFile;

// A replacement may only move the printed bound by a few units in its last place.
fn close_to_printed(value: &str, printed: &str) -> bool {
    let (Ok(v), Ok(p)) = (iv_from_decimal(value), iv_from_decimal(printed)) else {
        return false;
    };
    (v.mid() - p.mid()).abs() <= 10.0 * crate::tables::last_place(printed)
}

/// Installed claim values against the manifest in `published.json`.
pub fn manifest_issues(file: &ScriptFile, published: &Published) -> Vec<LintIssue> {
    let n = file.n;
    let printed = published
        .claims
        .get(&n)
        .map(Vec::as_slice)
        .unwrap_or_default();
    let adjusted = published.adjusted.get(&n);
    let mut out = Vec::new();
    for (label, v) in file.claim_values() {
        if printed.contains(&v) {
            continue;
        }
        match adjusted.and_then(|a| a.get(&v)) {
            Some(p) if printed.contains(p) && close_to_printed(&v, p) => {}
            Some(p) => out.push(LintIssue {
                label,
                message: format!("{v} replaces {p}, which is not a nearby printed value"),
            }),
            None => out.push(LintIssue {
                label,
                message: format!("{v} is not in the manifest for n = {n}"),
            }),
        }
    }
    out
}

/// All issues for one dimension.
pub fn lint_dimension(
    src: &DataSource,
    n: usize,
    consts: &ConstantsTable,
    published: &Published,
) -> Result<Vec<LintIssue>, DataError> {
    let file = src.script_file(n)?;
    let script = file
        .to_script()
        .map_err(|source| DataError::Script { n, source })?;
    let mut out = lint_script(&script, consts);
    if script.n != n {
        out.push(LintIssue {
            label: format!("n{n}"),
            message: format!("file declares n = {}", script.n),
        });
    }
    out.extend(manifest_issues(&file, published));
    Ok(out)
}
