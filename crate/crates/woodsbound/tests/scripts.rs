use woodsbound::data::{script_dimensions, DataSource};
use woodsbound::format::parse_constraint;
use woodsbound::lint::{lint_dimension, manifest_issues};
use woodsbound::script_file::ScriptFile;
use woodsbound_core::script::{Case, Step};
use woodsbound_core::Constraint;

fn hypotheses(steps: &[Step], out: &mut Vec<Constraint>) {
    for s in steps {
        if let Step::Claim(c) = s {
            out.push(c.hypothesis.clone());
            for case in &c.cases {
                given(case, out);
            }
        }
    }
}

fn given(case: &Case, out: &mut Vec<Constraint>) {
    out.extend(case.given.iter().cloned());
    hypotheses(&case.steps, out);
}

#[test]
fn bundled_scripts_round_trip() {
    let src = DataSource::default();
    for n in script_dimensions() {
        let file = src.script_file(n).unwrap();
        let text = serde_json::to_string_pretty(&file).unwrap();
        let again = ScriptFile::from_json(&text).unwrap();
        assert_eq!(file, again, "n{n}");
        assert_eq!(file.to_script().unwrap(), again.to_script().unwrap());
    }
}

#[test]
fn rendered_constraints_parse_back() {
    let src = DataSource::default();
    for n in script_dimensions() {
        let script = src.load_script(n).unwrap();
        let mut cs = Vec::new();
        for b in &script.branches {
            cs.extend(b.hypothesis.iter().cloned());
            hypotheses(&b.steps, &mut cs);
            for c in &b.finish {
                given(c, &mut cs);
            }
        }
        for c in cs {
            let text = c.to_string();
            let back = parse_constraint(&text).unwrap_or_else(|e| panic!("n{n}: {text}: {e}"));
            assert_eq!(back.to_string(), text, "n{n}");
        }
    }
}

#[test]
fn data_directory_matches_bundled_copy() {
    let dir = DataSource::with_dir(concat!(env!("CARGO_MANIFEST_DIR"), "/data"));
    let bundled = DataSource::default();
    for n in script_dimensions() {
        assert_eq!(dir.script_file(n).unwrap(), bundled.script_file(n).unwrap());
    }
    assert_eq!(dir.constants().unwrap().dimensions(), bundled.constants().unwrap().dimensions());
    assert!(bundled.script_file(34).is_err());
}

#[test]
fn all_scripts_lint_clean() {
    let src = DataSource::default();
    let consts = src.constants().unwrap();
    let published = src.published().unwrap();
    for n in script_dimensions() {
        let issues = lint_dimension(&src, n, &consts, &published).unwrap();
        assert!(issues.is_empty(), "n{n}: {issues:?}");
    }
}

#[test]
fn manifest_flags_unprinted_values() {
    let src = DataSource::default();
    let published = src.published().unwrap();
    let file = src.script_file(10).unwrap();
    let text = serde_json::to_string(&file).unwrap().replace("B2 <= 1.7046", "B2 <= 1.7047");
    let edited = ScriptFile::from_json(&text).unwrap();
    assert_ne!(edited, file, "the edit must hit a claim");
    let issues = manifest_issues(&edited, &published);
    assert_eq!(issues.len(), 1, "{issues:?}");
    assert!(issues[0].message.contains("1.7047"));
}
