//! Artifact files: written with a `.partial` suffix, renamed when the run
//! succeeds, hashed into the manifest and re-checkable against their
//! declared schemas.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::PipelineError;

pub const PARTIAL_SUFFIX: &str = ".partial";
pub const MANIFEST: &str = "manifest.json";

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn io_err(path: &Path, e: std::io::Error) -> PipelineError {
    PipelineError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

/// Collects artifacts under `root` as `.partial` files.
pub struct ArtifactWriter {
    root: PathBuf,
    hashes: BTreeMap<String, String>,
}

impl ArtifactWriter {
    pub fn create(root: &Path) -> Result<Self, PipelineError> {
        std::fs::create_dir_all(root).map_err(|e| io_err(root, e))?;
        Ok(Self {
            root: root.to_path_buf(),
            hashes: BTreeMap::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), PipelineError> {
        let path = self.root.join(format!("{name}{PARTIAL_SUFFIX}"));
        std::fs::write(&path, bytes).map_err(|e| io_err(&path, e))?;
        self.hashes.insert(name.to_string(), sha256_hex(bytes));
        Ok(())
    }

    pub fn hashes(&self) -> &BTreeMap<String, String> {
        &self.hashes
    }

    /// Rename every `.partial` file to its final name.
    pub fn commit(self) -> Result<BTreeMap<String, String>, PipelineError> {
        for name in self.hashes.keys() {
            let from = self.root.join(format!("{name}{PARTIAL_SUFFIX}"));
            let to = self.root.join(name);
            std::fs::rename(&from, &to).map_err(|e| io_err(&from, e))?;
        }
        Ok(self.hashes)
    }
}

/// Column layout an artifact must follow.
#[derive(Debug, Clone, Copy)]
pub enum Schema {
    /// Exact header; every cell after the first `text_cols` must parse as a
    /// finite number or be empty when `blanks` allows.
    Csv {
        header: &'static [&'static str],
        text_cols: usize,
    },
    /// Fixed leading columns, then any number of numeric columns.
    CsvPrefix {
        header: &'static [&'static str],
        text_cols: usize,
        blanks: bool,
    },
    Json,
}

pub const WINDOWS_HEADER: [&str; 7] = [
    "event_id", "label", "t_0", "t_max", "t_end", "n_tweets", "dropped",
];
pub const REPORT_HEADER: [&str; 5] = ["model", "feature_group", "hour", "fold", "accuracy"];
pub const SUMMARY_HEADER: [&str; 10] = [
    "model",
    "feature_group",
    "hour",
    "mean",
    "std",
    "pooled",
    "true_news",
    "false_rumor",
    "false_news",
    "true_rumor",
];
pub const IMPORTANCE_HEADER: [&str; 4] = ["feature", "rank", "importance", "hour"];
pub const GROUP_IMPORTANCE_HEADER: [&str; 5] = ["group", "rank", "importance", "std", "hour"];
pub const SCORES_HEADER: [&str; 7] = [
    "event_id",
    "label",
    "interval",
    "n_tweets",
    "CreditScore",
    "CrowdWisdom",
    "credit_fallback",
];
pub const VOLUME_HEADER: [&str; 6] = ["event_id", "interval", "observed", "sis", "seiz", "spikem"];
pub const FEATURES_PREFIX: [&str; 3] = ["event_id", "label", "interval"];
pub const EPI_PREFIX: [&str; 2] = ["event_id", "interval"];
pub const DSTS_PREFIX: [&str; 3] = ["event_id", "label", "prefix_hours"];

/// Schema of each artifact the pipeline may emit.
pub fn schema_of(name: &str) -> Option<Schema> {
    use Schema::*;
    Some(match name {
        "windows.csv" => Csv {
            header: &WINDOWS_HEADER,
            text_cols: 5,
        },
        "report.csv" => Csv {
            header: &REPORT_HEADER,
            text_cols: 4,
        },
        "summary.csv" => Csv {
            header: &SUMMARY_HEADER,
            text_cols: 2,
        },
        "importance.csv" => Csv {
            header: &IMPORTANCE_HEADER,
            text_cols: 1,
        },
        "group_importance.csv" => Csv {
            header: &GROUP_IMPORTANCE_HEADER,
            text_cols: 1,
        },
        "scores.csv" => Csv {
            header: &SCORES_HEADER,
            text_cols: 2,
        },
        "volume_fit.csv" => Csv {
            header: &VOLUME_HEADER,
            text_cols: 1,
        },
        "features.csv" => CsvPrefix {
            header: &FEATURES_PREFIX,
            text_cols: 2,
            blanks: false,
        },
        "epi_features.csv" => CsvPrefix {
            header: &EPI_PREFIX,
            text_cols: 1,
            blanks: false,
        },
        "dsts.csv" => CsvPrefix {
            header: &DSTS_PREFIX,
            text_cols: 2,
            blanks: false,
        },
        n if n.ends_with(".json") => Json,
        _ => return None,
    })
}

fn check_csv(
    name: &str,
    bytes: &[u8],
    header: &[&str],
    exact: bool,
    text_cols: usize,
    blanks: bool,
) -> Result<usize, String> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(bytes);
    let got = r.headers().map_err(|e| e.to_string())?.clone();
    let prefix_ok =
        got.len() >= header.len() && header.iter().zip(got.iter()).all(|(a, b)| *a == b);
    if !prefix_ok || (exact && got.len() != header.len()) {
        return Err(format!(
            "{name}: unexpected header {:?}",
            got.iter().collect::<Vec<_>>()
        ));
    }
    let width = got.len();
    let mut rows = 0;
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| format!("{name} row {}: {e}", i + 2))?;
        if rec.len() != width {
            return Err(format!(
                "{name} row {}: {} cells, expected {width}",
                i + 2,
                rec.len()
            ));
        }
        for (c, cell) in rec.iter().enumerate().skip(text_cols) {
            if cell.is_empty() && blanks {
                continue;
            }
            // Summary-style rows use a text tag in the fold column.
            if name == "report.csv" && c == 3 {
                continue;
            }
            match cell.parse::<f64>() {
                Ok(v) if v.is_finite() => {}
                _ => {
                    return Err(format!(
                        "{name} row {} column `{}`: `{cell}` is not a finite number",
                        i + 2,
                        &got[c]
                    ))
                }
            }
        }
        rows += 1;
    }
    Ok(rows)
}

/// Check one artifact's bytes against its schema; returns the row count
/// (0 for JSON).
pub fn check_artifact(name: &str, bytes: &[u8]) -> Result<usize, String> {
    match schema_of(name) {
        Some(Schema::Csv { header, text_cols }) => {
            check_csv(name, bytes, header, true, text_cols, false)
        }
        Some(Schema::CsvPrefix {
            header,
            text_cols,
            blanks,
        }) => check_csv(name, bytes, header, false, text_cols, blanks),
        Some(Schema::Json) => serde_json::from_slice::<serde_json::Value>(bytes)
            .map(|_| 0)
            .map_err(|e| format!("{name}: {e}")),
        None => Err(format!("{name}: no declared schema")),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArtifactCheck {
    pub name: String,
    pub rows: usize,
}

#[derive(Deserialize)]
struct ManifestHashes {
    artifacts: BTreeMap<String, String>,
}

/// Re-hash every artifact listed in the run manifest and check its schema.
pub fn validate_run_dir(dir: &Path) -> Result<Vec<ArtifactCheck>, PipelineError> {
    let bad = |message: String| PipelineError::Validation { message };
    let manifest_path = dir.join(MANIFEST);
    let text = std::fs::read(&manifest_path).map_err(|e| io_err(&manifest_path, e))?;
    let manifest: ManifestHashes = serde_json::from_slice(&text)
        .map_err(|e| bad(format!("{}: {e}", manifest_path.display())))?;
    let mut out = Vec::new();
    for (name, hash) in &manifest.artifacts {
        let path = dir.join(name);
        let bytes = std::fs::read(&path).map_err(|e| io_err(&path, e))?;
        if sha256_hex(&bytes) != *hash {
            return Err(bad(format!("{name}: content does not match manifest hash")));
        }
        let rows = check_artifact(name, &bytes).map_err(bad)?;
        out.push(ArtifactCheck {
            name: name.clone(),
            rows,
        });
    }
    Ok(out)
}
