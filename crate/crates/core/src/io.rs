//! On-disk formats: matrix files, GA run files (JSON) and result tables (CSV).

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::ser::SerializeSeq;
use serde::{Deserialize, Serialize, Serializer};
use serde_json::value::RawValue;

use crate::criteria::CriterionSpec;
use crate::error::{Error, Result};
use crate::ga::{GaConfig, GaRun, GenerationRecord};
use crate::model::SignatureMatrix;

pub const SCHEMA_VERSION: u32 = 1;

/// Serialized signature matrix. Entries are row-major and written with 17
/// significant digits so that reloading is exact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixFile {
    pub schema_version: u32,
    pub m: usize,
    pub n: usize,
    #[serde(serialize_with = "full_precision")]
    pub entries: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_design: Option<f64>,
}

fn full_precision<S: Serializer>(values: &[f64], ser: S) -> std::result::Result<S::Ok, S::Error> {
    let mut seq = ser.serialize_seq(Some(values.len()))?;
    for v in values {
        let raw = RawValue::from_string(format!("{v:.16e}")).map_err(serde::ser::Error::custom)?;
        seq.serialize_element(&raw)?;
    }
    seq.end()
}

impl MatrixFile {
    pub fn from_matrix(a: &SignatureMatrix, label: Option<String>, sigma_design: Option<f64>) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            m: a.chips(),
            n: a.users(),
            entries: a.entries().to_vec(),
            label,
            sigma_design,
        }
    }

    /// Validates the schema and the unit-column invariant (checked, never re-applied).
    pub fn to_matrix(&self) -> Result<SignatureMatrix> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Format(format!("unsupported schema_version {}", self.schema_version)));
        }
        SignatureMatrix::new(self.m, self.n, self.entries.clone())
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

pub fn write_matrix(path: &Path, file: &MatrixFile) -> Result<()> {
    fs::write(path, file.to_json()?)?;
    Ok(())
}

pub fn read_matrix_file(path: &Path) -> Result<MatrixFile> {
    let text = fs::read_to_string(path)?;
    MatrixFile::from_json(&text).map_err(|e| Error::Format(format!("{}: {e}", path.display())))
}

pub fn read_matrix(path: &Path) -> Result<SignatureMatrix> {
    read_matrix_file(path)?.to_matrix()
}

/// Best of an equal-budget random search, stored next to a GA run for comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomBaseline {
    pub evaluations: usize,
    pub best_fitness: f64,
}

/// Serialized [`GaRun`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunFile {
    pub schema_version: u32,
    pub m: usize,
    pub n: usize,
    pub criterion: CriterionSpec,
    pub config: GaConfig,
    pub best_fitness: f64,
    pub best_matrix: MatrixFile,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub random_baseline: Option<RandomBaseline>,
    pub history: Vec<GenerationRecord>,
}

impl RunFile {
    pub fn from_run(run: &GaRun, random_baseline: Option<RandomBaseline>) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            m: run.best_matrix.chips(),
            n: run.best_matrix.users(),
            criterion: run.criterion,
            config: run.config.clone(),
            best_fitness: run.best_fitness,
            best_matrix: MatrixFile::from_matrix(&run.best_matrix, Some(run.criterion.kind.name().into()), run.criterion.sigma),
            random_baseline,
            history: run.history.clone(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Serializes rows as CSV with a header line.
pub fn write_csv<T: Serialize, W: Write>(rows: &[T], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
