//! Recomputed constant tables next to the printed values.

use serde::Serialize;
use woodsbound_core::{iv_from_decimal, ConstantsError, ConstantsTable, Interval};

use crate::data::Published;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Which {
    Nu,
    Omega,
    Bounds,
    Gamma,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct Cell {
    pub lo: f64,
    pub hi: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub printed: Option<String>,
    /// The enclosure is within one unit of the last printed digit.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub agrees: Option<bool>,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct Row {
    pub n: usize,
    pub cells: Vec<Cell>,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct Table {
    pub which: Which,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Row>,
}

/// One unit in the last place of a printed decimal.
pub fn last_place(printed: &str) -> f64 {
    match printed.split_once('.') {
        Some((_, frac)) => 10f64.powi(-(frac.len() as i32)),
        None => 1.0,
    }
}

/// True when `x` lies within one unit of the last printed digit of `printed`.
pub fn agrees_with_printed(x: Interval, printed: &str) -> bool {
    let Ok(p) = iv_from_decimal(printed) else {
        return false;
    };
    let u = last_place(printed);
    x.hi() >= p.lo() - u && x.lo() <= p.hi() + u
}

fn cell(x: Interval, printed: Option<&String>) -> Cell {
    Cell {
        lo: x.lo(),
        hi: x.hi(),
        printed: printed.cloned(),
        agrees: printed.map(|p| agrees_with_printed(x, p)),
    }
}

pub fn build(
    which: Which,
    consts: &ConstantsTable,
    published: &Published,
) -> Result<Table, ConstantsError> {
    let dims = 10..=woodsbound_core::constants::MAX_TABLE_DIM;
    let mut rows = Vec::new();
    let columns = match which {
        Which::Nu => vec!["nu"],
        Which::Omega => vec!["omega"],
        Which::Bounds => vec!["l", "m"],
        Which::Gamma => vec!["gamma"],
    };
    match which {
        Which::Gamma => {
            for n in 2..=woodsbound_core::constants::MAX_TABLE_DIM {
                rows.push(Row {
                    n,
                    cells: vec![cell(consts.hermite_bound(n)?, published.gamma.get(&n))],
                });
            }
        }
        _ => {
            for n in dims {
                let cells = match which {
                    Which::Nu => vec![cell(consts.nu(n)?, published.nu.get(&n))],
                    Which::Omega => vec![cell(consts.omega(n)?, published.omega.get(&n))],
                    _ => {
                        let (l, m) = consts.bn_range(n)?;
                        let p = published.bounds.get(&n);
                        vec![cell(l, p.map(|x| &x.0)), cell(m, p.map(|x| &x.1))]
                    }
                };
                rows.push(Row { n, cells });
            }
        }
    }
    Ok(Table {
        which,
        columns,
        rows,
    })
}

pub fn markdown(t: &Table) -> String {
    let mut out = String::from("| n |");
    for c in &t.columns {
        out.push_str(&format!(" {c} enclosure | printed | |"));
    }
    out.push_str("\n|---|");
    out.push_str(&"---|---|---|".repeat(t.columns.len()));
    out.push('\n');
    for r in &t.rows {
        out.push_str(&format!("| {} |", r.n));
        for c in &r.cells {
            let mark = match c.agrees {
                Some(true) => "✓",
                Some(false) => "✗",
                None => "",
            };
            out.push_str(&format!(
                " [{:.10}, {:.10}] | {} | {mark} |",
                c.lo,
                c.hi,
                c.printed.as_deref().unwrap_or("")
            ));
        }
        out.push('\n');
    }
    out
}
