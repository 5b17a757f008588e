use std::io::Write;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use woodsbound::data::{script_dimensions, DataSource};
use woodsbound::report::{CertificateJson, ReportJson};
use woodsbound::tables::{self, Which};
use woodsbound::{exec, format, verify_script};
use woodsbound_core::certify::{certify_with, Budget, Options};
use woodsbound_core::compile::{check_conditions, compile};
use woodsbound_core::partition::Partition;
use woodsbound_core::script::Verdict;
use woodsbound_core::{new_box, Constraint, Interval};

#[derive(Parser)]
#[command(
    name = "woodsbound",
    version,
    about = "Replays certified covering-radius proofs for reduced lattices"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum, PartialEq, Eq)]
enum Format {
    Json,
    Markdown,
}

#[derive(Args)]
struct Common {
    #[arg(long, value_enum, default_value = "markdown")]
    format: Format,
    /// Data directory; defaults to $WOODSBOUND_DATA, then the bundled files.
    #[arg(long)]
    data: Option<std::path::PathBuf>,
    #[arg(long, default_value_t = 60)]
    max_depth: u32,
    #[arg(long, default_value_t = 10_000_000)]
    max_boxes: u64,
    /// Worker threads for the box search.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Turn off fixing of monotone atoms.
    #[arg(long)]
    no_monotone: bool,
}

#[derive(Subcommand)]
enum Cmd {
    /// Replay proof scripts.
    Verify {
        #[arg(long, required_unless_present = "all")]
        n: Vec<usize>,
        #[arg(long)]
        all: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Check scripts: structure, branch coverage and printed claim values.
    Lint {
        #[arg(long, required_unless_present = "all")]
        n: Vec<usize>,
        #[arg(long)]
        all: bool,
        #[arg(long)]
        data: Option<std::path::PathBuf>,
    },
    /// Print a recomputed constants table.
    Table {
        #[arg(long, value_enum)]
        which: Which,
        #[command(flatten)]
        common: Common,
    },
    /// Certify one partition inequality on a box.
    Certify {
        partition: String,
        #[arg(long)]
        n: usize,
        /// Box override, e.g. `B10=[0.4398,1.9378]`; repeatable.
        #[arg(long = "set")]
        set: Vec<String>,
        /// Extra constraint in script syntax, e.g. `B1^3/(B2*B3*B4) >= 2`.
        #[arg(long = "given")]
        given: Vec<String>,
        /// Defaults to ω_n.
        #[arg(long)]
        threshold: Option<String>,
        #[command(flatten)]
        common: Common,
    },
}

struct Usage(String);

impl Common {
    fn source(&self) -> DataSource {
        match &self.data {
            Some(d) => DataSource::with_dir(d),
            None => DataSource::from_env(),
        }
    }

    fn budget(&self) -> Result<Budget, Usage> {
        if self.max_depth == 0 || self.max_boxes == 0 {
            return Err(Usage("budgets must be positive".into()));
        }
        Ok(Budget {
            max_depth: self.max_depth,
            max_boxes: self.max_boxes,
        })
    }

    fn options(&self) -> Options {
        Options {
            monotone: !self.no_monotone,
            ..Options::default()
        }
    }
}

fn parse_set(text: &str) -> Result<Vec<Constraint>, Usage> {
    let bad = || Usage(format!("cannot read --set {text:?}; expected B<i>=[lo,hi]"));
    let (lhs, rhs) = text.split_once('=').ok_or_else(bad)?;
    let var: usize = lhs
        .trim()
        .strip_prefix('B')
        .and_then(|v| v.parse().ok())
        .ok_or_else(bad)?;
    let inner = rhs
        .trim()
        .strip_prefix('[')
        .and_then(|r| r.strip_suffix(']'))
        .ok_or_else(bad)?;
    let (lo, hi) = inner.split_once(',').ok_or_else(bad)?;
    let lo = format::parse_number(lo.trim()).map_err(|e| Usage(e.to_string()))?;
    let hi = format::parse_number(hi.trim()).map_err(|e| Usage(e.to_string()))?;
    Ok(vec![
        Constraint::AtLeast { var, value: lo },
        Constraint::AtMost { var, value: hi },
    ])
}

fn write_out(text: &str) {
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(text.as_bytes());
    if !text.ends_with('\n') {
        let _ = out.write_all(b"\n");
    }
}

fn run(cli: Cli) -> Result<bool, Usage> {
    let err = |e: &dyn std::fmt::Display| Usage(e.to_string());
    match cli.cmd {
        Cmd::Verify { n, all, common } => {
            let dims: Vec<usize> = if all {
                script_dimensions().collect()
            } else {
                n
            };
            if let Some(bad) = dims.iter().find(|&&k| !(10..=33).contains(&k)) {
                return Err(Usage(format!("dimension {bad} is outside 10..=33")));
            }
            let src = common.source();
            let consts = src.constants().map_err(|e| err(&e))?;
            let budget = common.budget()?;
            let ex = exec::executor(common.jobs).map_err(|e| err(&e))?;
            let mut reports: Vec<ReportJson> = Vec::new();
            let mut ok = true;
            for k in dims {
                let script = src.load_script(k).map_err(|e| err(&e))?;
                let (rep, json) = verify_script(
                    &script,
                    &consts,
                    budget,
                    common.options(),
                    ex.as_ref(),
                    common.jobs,
                )
                .map_err(|e| err(&e))?;
                if let Verdict::Failed { label, reason } = &rep.verdict {
                    eprintln!("n{k}: failed at {label}: {reason}");
                    ok = false;
                }
                if common.format == Format::Markdown {
                    write_out(&woodsbound::markdown(&json));
                }
                reports.push(json);
            }
            if common.format == Format::Json {
                write_out(&serde_json::to_string_pretty(&reports).expect("serializable"));
            }
            Ok(ok)
        }
        Cmd::Lint { n, all, data } => {
            let dims: Vec<usize> = if all {
                script_dimensions().collect()
            } else {
                n
            };
            let src = match data {
                Some(d) => DataSource::with_dir(d),
                None => DataSource::from_env(),
            };
            let consts = src.constants().map_err(|e| err(&e))?;
            let published = src.published().map_err(|e| err(&e))?;
            let mut clean = true;
            for k in dims {
                let issues = woodsbound::lint::lint_dimension(&src, k, &consts, &published)
                    .map_err(|e| err(&e))?;
                for i in &issues {
                    write_out(&format!("{}: {}", i.label, i.message));
                }
                clean &= issues.is_empty();
            }
            Ok(clean)
        }
        Cmd::Table { which, common } => {
            let src = common.source();
            let consts = src.constants().map_err(|e| err(&e))?;
            let published = src.published().map_err(|e| err(&e))?;
            let t = tables::build(which, &consts, &published).map_err(|e| err(&e))?;
            match common.format {
                Format::Json => write_out(&serde_json::to_string_pretty(&t).expect("serializable")),
                Format::Markdown => write_out(&tables::markdown(&t)),
            }
            Ok(true)
        }
        Cmd::Certify {
            partition,
            n,
            set,
            given,
            threshold,
            common,
        } => {
            let p = Partition::parse(&partition).map_err(|e| err(&e))?;
            let consts = common.source().constants().map_err(|e| err(&e))?;
            let ineq = compile(&p, n, &consts).map_err(|e| err(&e))?;
            let mut b = new_box(n, &consts).map_err(|e| err(&e))?;
            let mut cs = Vec::new();
            for s in &set {
                cs.extend(parse_set(s)?);
            }
            for g in &given {
                cs.push(format::parse_constraint(g).map_err(|e| err(&e))?);
            }
            if let Some(bad) = cs.iter().find(|c| c.min_index() == 0 || c.max_index() > n) {
                return Err(Usage(format!("{bad} is outside B1..B{n}")));
            }
            for c in &cs {
                b = match b.apply(c) {
                    Ok(nb) => nb,
                    Err(e) => {
                        eprintln!("the box is empty after {c}: {e}");
                        b.clone()
                    }
                };
            }
            let thr: Interval = match threshold {
                Some(t) => format::parse_number(&t).map_err(|e| err(&e))?,
                None => consts.omega(n).map_err(|e| err(&e))?,
            };
            let ex = exec::executor(common.jobs).map_err(|e| err(&e))?;
            eprintln!("conditions on the box: {:?}", check_conditions(&ineq, &b));
            let cert = certify_with(
                &ineq,
                &b,
                thr,
                common.budget()?,
                &common.options(),
                ex.as_ref(),
            );
            let json = CertificateJson::from(&cert);
            match common.format {
                Format::Json => {
                    write_out(&serde_json::to_string_pretty(&json).expect("serializable"))
                }
                Format::Markdown => write_out(&format!(
                    "{} on n = {}: {} (max upper {:?}, {} boxes){}",
                    json.statement,
                    json.n,
                    json.status,
                    json.max_upper,
                    json.search.boxes,
                    json.reason
                        .as_ref()
                        .map(|r| format!("; {r}"))
                        .unwrap_or_default()
                )),
            }
            Ok(cert.status.is_proven())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}
