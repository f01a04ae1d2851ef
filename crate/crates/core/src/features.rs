use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

/// Per-segment feature vectors with named columns.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    rows: Vec<Vec<f64>>,
    schema: Vec<String>,
    pub source_id: String,
}

impl FeatureMatrix {
    pub fn new(
        schema: Vec<String>,
        rows: Vec<Vec<f64>>,
        source_id: impl Into<String>,
    ) -> Result<Self> {
        if schema.is_empty() {
            return Err(Error::Schema("feature dimension must be positive".into()));
        }
        for (i, r) in rows.iter().enumerate() {
            if r.len() != schema.len() {
                return Err(Error::Schema(format!(
                    "row {i} has {} values, schema has {}",
                    r.len(),
                    schema.len()
                )));
            }
            if r.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite);
            }
        }
        Ok(Self {
            rows,
            schema,
            source_id: source_id.into(),
        })
    }

    pub fn empty(schema: Vec<String>, source_id: impl Into<String>) -> Result<Self> {
        Self::new(schema, Vec::new(), source_id)
    }

    pub fn dim(&self) -> usize {
        self.schema.len()
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn schema(&self) -> &[String] {
        &self.schema
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn push_row(&mut self, row: Vec<f64>) -> Result<()> {
        if row.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: row.len(),
            });
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        self.rows.push(row);
        Ok(())
    }

    /// Append all rows of `other`; schemas must match.
    pub fn extend_from(&mut self, other: &FeatureMatrix) -> Result<()> {
        if other.schema != self.schema {
            return Err(Error::Schema(
                "cannot concatenate matrices with different schemas".into(),
            ));
        }
        self.rows.extend(other.rows.iter().cloned());
        Ok(())
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[j]).collect()
    }

    pub fn column_means(&self) -> Vec<f64> {
        let n = self.rows.len().max(1) as f64;
        (0..self.dim())
            .map(|j| self.rows.iter().map(|r| r[j]).sum::<f64>() / n)
            .collect()
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = self.schema.join(",");
        out.push('\n');
        for r in &self.rows {
            for (j, v) in r.iter().enumerate() {
                if j > 0 {
                    out.push(',');
                }
                let _ = write!(out, "{v:.16e}");
            }
            out.push('\n');
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_csv_string())?;
        Ok(())
    }

    pub fn parse_csv(text: &str, source_id: impl Into<String>) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::Schema("missing header line".into()))?;
        let schema: Vec<String> = header.split(',').map(|s| s.trim().to_string()).collect();
        let mut rows = Vec::new();
        for (i, line) in lines.enumerate() {
            let row = line
                .split(',')
                .map(|f| {
                    f.trim()
                        .parse::<f64>()
                        .map_err(|e| Error::Schema(format!("line {}: {e}", i + 2)))
                })
                .collect::<Result<Vec<f64>>>()?;
            if row.len() != schema.len() {
                return Err(Error::Schema(format!(
                    "line {}: {} values but header has {} columns",
                    i + 2,
                    row.len(),
                    schema.len()
                )));
            }
            rows.push(row);
        }
        Self::new(schema, rows, source_id)
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        Self::parse_csv(&text, path.display().to_string())
    }
}

/// Column names `prefix1..prefixN`.
pub fn numbered_schema(prefix: &str, n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("{prefix}{i}")).collect()
}
