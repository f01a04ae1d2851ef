use std::collections::{BTreeSet, HashSet};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub path: PathBuf,
    pub label: String,
    pub speaker: String,
}

/// Labeled corpus listing, stored as CSV with header `path,label,speaker`.
/// Relative paths are resolved against the manifest's directory on read.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CorpusManifest {
    pub entries: Vec<ManifestEntry>,
}

impl CorpusManifest {
    pub fn new(entries: Vec<ManifestEntry>) -> Result<Self> {
        let mut seen = HashSet::new();
        for e in &entries {
            if e.label.trim().is_empty() || e.speaker.trim().is_empty() {
                return Err(Error::Manifest(format!(
                    "empty label or speaker for {}",
                    e.path.display()
                )));
            }
            if !seen.insert(e.path.clone()) {
                return Err(Error::Manifest(format!(
                    "duplicate path {}",
                    e.path.display()
                )));
            }
        }
        Ok(Self { entries })
    }

    pub fn labels(&self) -> Vec<String> {
        self.entries
            .iter()
            .map(|e| e.label.clone())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    }

    pub fn speakers(&self) -> Vec<String> {
        self.entries
            .iter()
            .map(|e| e.speaker.clone())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        let base = path.parent().unwrap_or_else(|| Path::new(""));
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::Manifest("empty manifest".into()))?;
        let cols: Vec<&str> = header.split(',').map(str::trim).collect();
        if cols != ["path", "label", "speaker"] {
            return Err(Error::Manifest(format!(
                "expected header path,label,speaker, got {header}"
            )));
        }
        let mut entries = Vec::new();
        for (i, line) in lines.enumerate() {
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != 3 {
                return Err(Error::Manifest(format!(
                    "line {}: expected 3 fields",
                    i + 2
                )));
            }
            let p = PathBuf::from(fields[0]);
            let p = if p.is_relative() { base.join(p) } else { p };
            entries.push(ManifestEntry {
                path: p,
                label: fields[1].to_string(),
                speaker: fields[2].to_string(),
            });
        }
        Self::new(entries)
    }

    /// Write the manifest; paths under `relative_to` are stored relative to it.
    pub fn write_csv(&self, path: impl AsRef<Path>, relative_to: Option<&Path>) -> Result<()> {
        let mut out = String::from("path,label,speaker\n");
        for e in &self.entries {
            let p = match relative_to {
                Some(base) => e.path.strip_prefix(base).unwrap_or(&e.path),
                None => &e.path,
            };
            out.push_str(&format!("{},{},{}\n", p.display(), e.label, e.speaker));
        }
        std::fs::write(path, out)?;
        Ok(())
    }
}
