//! Corpus manifests: CSV rows of `path,label,environment[,genre]`.
//!
//! The header row is required. Labels come from the fixed four-class
//! vocabulary; environment ids are open but must be plain identifiers.
//! All validation failures name the offending row.

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::cascade::{AudioClass, Environment};

#[derive(Debug, Error)]
pub enum ManifestError {
    #[error("manifest is empty (need a header row)")]
    Empty,
    #[error("manifest header: {0}")]
    Header(String),
    #[error("manifest row {row}: {message}")]
    Row { row: usize, message: String },
    #[error("io error reading manifest: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestRow {
    pub path: PathBuf,
    pub label: AudioClass,
    pub environment: Environment,
    pub genre: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Manifest {
    pub rows: Vec<ManifestRow>,
}

impl Manifest {
    pub fn parse(text: &str) -> Result<Manifest, ManifestError> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or(ManifestError::Empty)?;
        let columns: Vec<&str> = header.split(',').map(str::trim).collect();

        let col_of = |name: &str| -> Result<Option<usize>, ManifestError> {
            let hits: Vec<usize> = columns
                .iter()
                .enumerate()
                .filter(|(_, c)| **c == name)
                .map(|(i, _)| i)
                .collect();
            match hits.len() {
                0 => Ok(None),
                1 => Ok(Some(hits[0])),
                _ => Err(ManifestError::Header(format!("duplicate column {name:?}"))),
            }
        };
        let path_col = col_of("path")?
            .ok_or_else(|| ManifestError::Header("missing column \"path\"".into()))?;
        let label_col = col_of("label")?
            .ok_or_else(|| ManifestError::Header("missing column \"label\"".into()))?;
        let env_col = col_of("environment")?
            .ok_or_else(|| ManifestError::Header("missing column \"environment\"".into()))?;
        let genre_col = col_of("genre")?;

        let mut rows = Vec::new();
        for (line_idx, line) in lines {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let row_no = line_idx + 1; // 1-based, header is row 1
            let cells: Vec<&str> = line.split(',').map(str::trim).collect();
            let cell = |col: usize, what: &str| -> Result<&str, ManifestError> {
                cells.get(col).copied().filter(|c| !c.is_empty()).ok_or_else(|| {
                    ManifestError::Row {
                        row: row_no,
                        message: format!("missing {what}"),
                    }
                })
            };
            let path = PathBuf::from(cell(path_col, "path")?);
            let label_text = cell(label_col, "label")?;
            let label = AudioClass::parse(label_text).ok_or_else(|| ManifestError::Row {
                row: row_no,
                message: format!(
                    "unknown label {label_text:?} (expected SPEECH, MUSIC, SPEECH_MUSIC, or NOISE)"
                ),
            })?;
            let env_text = cell(env_col, "environment")?;
            let environment =
                Environment::parse(env_text).map_err(|e| ManifestError::Row {
                    row: row_no,
                    message: e,
                })?;
            let genre = match genre_col {
                Some(col) => cells.get(col).map(|s| s.trim()).filter(|s| !s.is_empty()).map(String::from),
                None => None,
            };
            rows.push(ManifestRow {
                path,
                label,
                environment,
                genre,
            });
        }
        Ok(Manifest { rows })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Manifest, ManifestError> {
        let text = std::fs::read_to_string(path.as_ref())?;
        let mut manifest = Manifest::parse(&text)?;
        // Relative clip paths resolve against the manifest's directory.
        if let Some(dir) = path.as_ref().parent() {
            for row in &mut manifest.rows {
                if row.path.is_relative() {
                    row.path = dir.join(&row.path);
                }
            }
        }
        Ok(manifest)
    }

    pub fn for_environment(&self, env: &Environment) -> Vec<&ManifestRow> {
        self.rows.iter().filter(|r| &r.environment == env).collect()
    }

    pub fn environments(&self) -> Vec<Environment> {
        let mut envs: Vec<Environment> = Vec::new();
        for row in &self.rows {
            if !envs.contains(&row.environment) {
                envs.push(row.environment.clone());
            }
        }
        envs.sort();
        envs
    }

    /// Render back to CSV (always includes the genre column).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("path,label,environment,genre\n");
        for row in &self.rows {
            out.push_str(&format!(
                "{},{},{},{}\n",
                row.path.display(),
                row.label.name(),
                row.environment.id(),
                row.genre.as_deref().unwrap_or("")
            ));
        }
        out
    }
}
