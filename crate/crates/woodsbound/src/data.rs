//! Bundled data: constants, published values and proof scripts.
//!
//! Files are read from the directory named by `WOODSBOUND_DATA` when it is
//! set, otherwise the copies compiled into the binary are used.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use woodsbound_core::{ConstantRow, ConstantsError, ConstantsTable};

use crate::script_file::{ScriptError, ScriptFile};

pub const DATA_ENV: &str = "WOODSBOUND_DATA";

const CONSTANTS: &str = include_str!("../data/constants.json");
const PUBLISHED: &str = include_str!("../data/published.json");

macro_rules! bundled {
    ($($n:literal),*) => {
        &[$(($n, include_str!(concat!("../data/scripts/n", $n, ".json")))),*]
    };
}

const SCRIPTS: &[(usize, &str)] = bundled!(
    10, 11, 12, 13, 14, 15, 16, 17, 18, 19, 20, 21, 22, 23, 24, 25, 26, 27, 28, 29, 30, 31, 32, 33
);

#[derive(Debug, thiserror::Error)]
pub enum DataError {
    #[error("reading {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{what}: {source}")]
    Json {
        what: String,
        source: serde_json::Error,
    },
    #[error(transparent)]
    Constants(#[from] ConstantsError),
    #[error("n{n}: {source}")]
    Script { n: usize, source: ScriptError },
    #[error("no proof script for n = {0}")]
    NoScript(usize),
}

/// Where data files come from.
#[derive(Debug, Clone, Default)]
pub struct DataSource {
    pub dir: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
struct RowFile {
    dimension: usize,
    #[serde(default)]
    gamma_upper: Option<String>,
    omega: String,
    source: String,
}

#[derive(Debug, Deserialize)]
struct ConstantsFile {
    epsilon: String,
    lemma7_factor: String,
    rows: Vec<RowFile>,
}

/// Printed values kept for comparison.
#[derive(Debug, Clone, Deserialize)]
pub struct Published {
    pub nu: BTreeMap<usize, String>,
    pub omega: BTreeMap<usize, String>,
    pub gamma: BTreeMap<usize, String>,
    /// Printed (l_n, m_n).
    pub bounds: BTreeMap<usize, (String, String)>,
    /// Bounds installed by claims, per dimension, as printed.
    #[serde(default)]
    pub claims: BTreeMap<usize, Vec<String>>,
    /// Script values that replace a printed bound rounded the unsafe way,
    /// mapped to the printed value.
    #[serde(default)]
    pub adjusted: BTreeMap<usize, BTreeMap<String, String>>,
}

impl DataSource {
    /// Uses `WOODSBOUND_DATA` if set.
    pub fn from_env() -> Self {
        Self {
            dir: std::env::var_os(DATA_ENV).map(PathBuf::from),
        }
    }

    pub fn with_dir(dir: impl AsRef<Path>) -> Self {
        Self {
            dir: Some(dir.as_ref().to_path_buf()),
        }
    }

    fn read(&self, rel: &str, bundled: Option<&'static str>) -> Result<String, DataError> {
        match &self.dir {
            Some(d) => {
                let path = d.join(rel);
                std::fs::read_to_string(&path).map_err(|source| DataError::Io { path, source })
            }
            None => Ok(bundled.unwrap_or_default().to_string()),
        }
    }

    pub fn constants(&self) -> Result<ConstantsTable, DataError> {
        let text = self.read("constants.json", Some(CONSTANTS))?;
        let f: ConstantsFile = serde_json::from_str(&text).map_err(|source| DataError::Json {
            what: "constants.json".into(),
            source,
        })?;
        let rows: Vec<ConstantRow> = f
            .rows
            .into_iter()
            .map(|r| ConstantRow {
                dimension: r.dimension,
                gamma_upper: r.gamma_upper,
                omega: r.omega,
                source: r.source,
            })
            .collect();
        Ok(ConstantsTable::from_rows(
            &f.epsilon,
            &f.lemma7_factor,
            &rows,
        )?)
    }

    pub fn published(&self) -> Result<Published, DataError> {
        let text = self.read("published.json", Some(PUBLISHED))?;
        serde_json::from_str(&text).map_err(|source| DataError::Json {
            what: "published.json".into(),
            source,
        })
    }

    pub fn script_file(&self, n: usize) -> Result<ScriptFile, DataError> {
        let bundled = SCRIPTS.iter().find(|s| s.0 == n).map(|s| s.1);
        if self.dir.is_none() && bundled.is_none() {
            return Err(DataError::NoScript(n));
        }
        let text = self.read(&format!("scripts/n{n}.json"), bundled)?;
        let f = ScriptFile::from_json(&text).map_err(|source| DataError::Script { n, source })?;
        Ok(f)
    }

    pub fn load_script(&self, n: usize) -> Result<woodsbound_core::script::ProofScript, DataError> {
        self.script_file(n)?
            .to_script()
            .map_err(|source| DataError::Script { n, source })
    }
}

/// Dimensions with a proof script.
pub fn script_dimensions() -> impl Iterator<Item = usize> {
    SCRIPTS.iter().map(|s| s.0)
}
