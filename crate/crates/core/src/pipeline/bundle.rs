use std::fmt::Write;
use std::path::{Path, PathBuf};

use crate::ampl::ParamValue;
use crate::databind::{bind, load_tables, parse_decimal, BindError, BindingManifest, BoundData, IngestError, ManifestError};

#[derive(Debug, thiserror::Error)]
pub enum BundleError {
    #[error("bundle {}: {message}", dir.display())]
    Layout { dir: PathBuf, message: String },
    #[error("cannot read {}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Manifest(#[from] ManifestError),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Bind(#[from] BindError),
}

/// A problem directory: `description.md`, `tables/*.csv`,
/// `binding.manifest`, `ground_truth.txt`, optional `notes.md` and
/// `inline/description.md`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemBundle {
    pub id: String,
    pub dir: PathBuf,
    pub description: String,
    /// Description with every value written out, for inline-data runs.
    pub inline_description: Option<String>,
    pub tables: Vec<PathBuf>,
    pub manifest: Option<PathBuf>,
    pub ground_truth: f64,
    pub notes: Option<String>,
}

fn read(path: &Path) -> Result<String, BundleError> {
    std::fs::read_to_string(path).map_err(|source| BundleError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn read_optional(path: &Path) -> Result<Option<String>, BundleError> {
    if path.is_file() {
        read(path).map(Some)
    } else {
        Ok(None)
    }
}

impl ProblemBundle {
    pub fn load(dir: &Path) -> Result<Self, BundleError> {
        let layout = |message: String| BundleError::Layout {
            dir: dir.to_path_buf(),
            message,
        };
        if !dir.is_dir() {
            return Err(layout("not a directory".into()));
        }
        let id = dir
            .file_name()
            .and_then(|n| n.to_str())
            .ok_or_else(|| layout("directory name is not valid text".into()))?
            .to_string();
        let description = read(&dir.join("description.md"))?;
        if description.trim().is_empty() {
            return Err(layout("description.md is empty".into()));
        }
        let gt_text = read(&dir.join("ground_truth.txt"))?;
        let ground_truth = parse_decimal(gt_text.trim())
            .filter(|g| g.is_finite())
            .ok_or_else(|| layout(format!("ground_truth.txt holds '{}', not a finite decimal", gt_text.trim())))?;
        let mut tables = Vec::new();
        let tdir = dir.join("tables");
        if tdir.is_dir() {
            for entry in std::fs::read_dir(&tdir).map_err(|source| BundleError::Io {
                path: tdir.clone(),
                source,
            })? {
                let p = entry.map_err(|source| BundleError::Io {
                    path: tdir.clone(),
                    source,
                })?;
                let p = p.path();
                if p.extension().is_some_and(|x| x == "csv") {
                    tables.push(p);
                }
            }
            tables.sort();
        }
        let manifest = Some(dir.join("binding.manifest")).filter(|p| p.is_file());
        let inline_description = read_optional(&dir.join("inline").join("description.md"))?;
        if inline_description.as_ref().is_some_and(|d| d.trim().is_empty()) {
            return Err(layout("inline/description.md is empty".into()));
        }
        Ok(ProblemBundle {
            id,
            dir: dir.to_path_buf(),
            description,
            inline_description,
            tables,
            manifest,
            ground_truth,
            notes: read_optional(&dir.join("notes.md"))?,
        })
    }

    /// Every bundle directly below `root`, sorted by id.
    pub fn load_all(root: &Path) -> Result<Vec<Self>, BundleError> {
        let entries = std::fs::read_dir(root).map_err(|source| BundleError::Io {
            path: root.to_path_buf(),
            source,
        })?;
        let mut dirs: Vec<PathBuf> = entries.filter_map(|e| e.ok().map(|e| e.path())).filter(|p| p.is_dir()).collect();
        dirs.sort();
        dirs.iter().map(|d| Self::load(d)).collect()
    }

    /// Runs the binding step over the bundle's own tables.
    pub fn bind(&self) -> Result<BundleData, BundleError> {
        let path = self.manifest.as_ref().ok_or_else(|| BundleError::Layout {
            dir: self.dir.clone(),
            message: "binding.manifest is missing".into(),
        })?;
        let manifest = BindingManifest::load(path)?;
        let tables = load_tables(&self.tables)?;
        let bound = bind(&manifest, None, &tables)?;
        let schema = data_schema(&manifest, &bound);
        Ok(BundleData { bound, schema })
    }
}

/// Bound values plus the declaration summary shown to the generator.
#[derive(Debug, Clone, PartialEq)]
pub struct BundleData {
    pub bound: BoundData,
    pub schema: String,
}

fn count(n: usize, what: &str) -> String {
    if n == 1 {
        format!("1 {what}")
    } else {
        format!("{n} {what}s")
    }
}

/// Declarations of the bound sets and params, e.g. `param cost {FOODS};`.
/// Index sets come from the manifest, or from a set whose members match
/// the keys.
pub fn data_schema(manifest: &BindingManifest, bound: &BoundData) -> String {
    let data = &bound.data;
    let mut out = String::new();
    for (name, members) in &data.sets {
        let _ = writeln!(out, "set {name};  # {}", count(members.len(), "member"));
    }
    let set_for = |keys: &[String]| -> String {
        data.sets
            .iter()
            .find(|(_, m)| m.len() == keys.len() && keys.iter().all(|k| m.contains(k)))
            .map_or_else(|| "?".to_string(), |(n, _)| n.clone())
    };
    for (name, value) in &data.params {
        let declared = manifest.params.get(name).map(|b| b.index.clone()).unwrap_or_default();
        let index: Vec<String> = match value {
            ParamValue::Scalar(_) => Vec::new(),
            _ if !declared.is_empty() => declared,
            ParamValue::OneD(m) => vec![set_for(&m.keys().cloned().collect::<Vec<_>>())],
            ParamValue::TwoD(t) => vec![set_for(&t.rows), set_for(&t.cols)],
        };
        if index.is_empty() {
            let _ = writeln!(out, "param {name};");
        } else {
            let _ = writeln!(out, "param {name} {{{}}};", index.join(", "));
        }
    }
    out
}
