use std::collections::{BTreeMap, HashSet};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::llm::sha256_hex;

use super::bundle::{BundleData, BundleError, ProblemBundle};
use super::record::{cell_key, RunRecord};
use super::run::Runner;
use super::variant::VariantConfig;

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("record store {}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("record {}: {message}", path.display())]
    Corrupt { path: PathBuf, message: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexEntry {
    pub key: String,
    pub file: String,
    pub sha256: String,
}

/// One JSON document per record under `records/`, plus `index.json`.
/// Every file is written to a temporary name and renamed into place.
#[derive(Debug)]
pub struct RecordStore {
    root: PathBuf,
    index: Mutex<BTreeMap<String, IndexEntry>>,
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> StoreError + '_ {
    move |source| StoreError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn write_atomic(path: &Path, text: &str) -> Result<(), StoreError> {
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, text).map_err(io(&tmp))?;
    std::fs::rename(&tmp, path).map_err(io(path))
}

impl RecordStore {
    pub fn open(root: &Path) -> Result<Self, StoreError> {
        std::fs::create_dir_all(root.join("records")).map_err(io(root))?;
        let store = RecordStore {
            root: root.to_path_buf(),
            index: Mutex::new(BTreeMap::new()),
        };
        // The record files are authoritative; the index is rebuilt from them.
        let mut index = BTreeMap::new();
        for rec in store.load_all()? {
            let file = format!("{}.json", rec.key());
            let text = std::fs::read_to_string(store.records_dir().join(&file)).map_err(io(root))?;
            index.insert(
                rec.key(),
                IndexEntry {
                    key: rec.key(),
                    sha256: sha256_hex(&text),
                    file,
                },
            );
        }
        *store.index.lock().unwrap_or_else(|e| e.into_inner()) = index;
        Ok(store)
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn records_dir(&self) -> PathBuf {
        self.root.join("records")
    }

    pub fn path_for(&self, key: &str) -> PathBuf {
        self.records_dir().join(format!("{key}.json"))
    }

    pub fn contains(&self, key: &str) -> bool {
        self.index.lock().unwrap_or_else(|e| e.into_inner()).contains_key(key)
    }

    pub fn put(&self, record: &RunRecord) -> Result<PathBuf, StoreError> {
        let key = record.key();
        let mut text = serde_json::to_string_pretty(record).expect("records serialize");
        text.push('\n');
        let path = self.path_for(&key);
        write_atomic(&path, &text)?;
        let mut index = self.index.lock().unwrap_or_else(|e| e.into_inner());
        index.insert(
            key.clone(),
            IndexEntry {
                file: format!("{key}.json"),
                key,
                sha256: sha256_hex(&text),
            },
        );
        let entries: Vec<&IndexEntry> = index.values().collect();
        let mut doc = serde_json::to_string_pretty(&entries).expect("index serializes");
        doc.push('\n');
        write_atomic(&self.root.join("index.json"), &doc)?;
        Ok(path)
    }

    pub fn get(&self, key: &str) -> Result<Option<RunRecord>, StoreError> {
        let path = self.path_for(key);
        if !path.is_file() {
            return Ok(None);
        }
        read_record(&path).map(Some)
    }

    pub fn index(&self) -> Vec<IndexEntry> {
        self.index.lock().unwrap_or_else(|e| e.into_inner()).values().cloned().collect()
    }

    /// All stored records sorted by (problem, variant, run).
    pub fn load_all(&self) -> Result<Vec<RunRecord>, StoreError> {
        load_records(&self.records_dir())
    }
}

pub fn read_record(path: &Path) -> Result<RunRecord, StoreError> {
    let text = std::fs::read_to_string(path).map_err(io(path))?;
    serde_json::from_str(&text).map_err(|e| StoreError::Corrupt {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

/// Reads every `*.json` record in `dir`, sorted by (problem, variant, run).
pub fn load_records(dir: &Path) -> Result<Vec<RunRecord>, StoreError> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(io(dir))? {
        let path = entry.map_err(io(dir))?.path();
        if path.extension().is_some_and(|x| x == "json") {
            out.push(read_record(&path)?);
        }
    }
    sort_records(&mut out);
    Ok(out)
}

pub fn sort_records(records: &mut [RunRecord]) {
    records.sort_by(|a, b| {
        (&a.problem_id, &a.variant, a.run_index).cmp(&(&b.problem_id, &b.variant, b.run_index))
    });
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BenchOptions {
    pub jobs: usize,
    /// Stop scheduling after this many newly executed cells.
    pub stop_after: Option<usize>,
}

impl Default for BenchOptions {
    fn default() -> Self {
        BenchOptions { jobs: 1, stop_after: None }
    }
}

#[derive(Debug)]
pub struct BenchSummary {
    /// Records of every finished cell of this matrix, sorted.
    pub records: Vec<RunRecord>,
    pub executed: usize,
    pub skipped: usize,
    /// Cells neither stored before nor run now.
    pub pending: usize,
}

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("invalid matrix: {0}")]
    Matrix(String),
    #[error(transparent)]
    Bundle(#[from] BundleError),
    #[error(transparent)]
    Store(#[from] StoreError),
}

struct Cell<'a> {
    bundle: usize,
    variant: &'a VariantConfig,
    run: usize,
    key: String,
}

/// Runs every (bundle, variant, run) cell not already in the store.
pub fn bench(
    runner: &Runner,
    bundles: &[ProblemBundle],
    matrix: &[VariantConfig],
    store: &RecordStore,
    opts: BenchOptions,
) -> Result<BenchSummary, BenchError> {
    let mut labels = HashSet::new();
    for v in matrix {
        v.validate().map_err(BenchError::Matrix)?;
        if !labels.insert(v.label.as_str()) {
            return Err(BenchError::Matrix(format!("label {} appears twice", v.label)));
        }
    }
    let mut ids = HashSet::new();
    for b in bundles {
        if !ids.insert(b.id.as_str()) {
            return Err(BenchError::Matrix(format!("bundle id {} appears twice", b.id)));
        }
    }
    let needs_data = matrix.iter().any(|v| !v.inline_data);
    let mut data: Vec<Option<BundleData>> = Vec::new();
    for b in bundles {
        if needs_data {
            data.push(Some(b.bind()?));
        } else {
            data.push(None);
        }
        if matrix.iter().any(|v| v.inline_data) && b.inline_description.is_none() {
            return Err(BenchError::Bundle(BundleError::Layout {
                dir: b.dir.clone(),
                message: "inline/description.md is missing".into(),
            }));
        }
    }

    let mut cells = Vec::new();
    let mut skipped = 0;
    for (bi, b) in bundles.iter().enumerate() {
        for v in matrix {
            for run in 0..v.runs {
                let key = cell_key(&b.id, &v.label, run);
                if store.contains(&key) {
                    skipped += 1;
                } else {
                    cells.push(Cell {
                        bundle: bi,
                        variant: v,
                        run,
                        key,
                    });
                }
            }
        }
    }

    let next = AtomicUsize::new(0);
    let executed = AtomicUsize::new(0);
    let failure: Mutex<Option<BenchError>> = Mutex::new(None);
    let limit = opts.stop_after.unwrap_or(usize::MAX);
    std::thread::scope(|s| {
        for _ in 0..opts.jobs.max(1) {
            s.spawn(|| loop {
                if failure.lock().unwrap_or_else(|e| e.into_inner()).is_some() {
                    break;
                }
                // Claim a budget slot before a cell so stop_after is exact.
                if executed.fetch_add(1, Ordering::SeqCst) >= limit {
                    executed.fetch_sub(1, Ordering::SeqCst);
                    break;
                }
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(cell) = cells.get(i) else {
                    executed.fetch_sub(1, Ordering::SeqCst);
                    break;
                };
                let bundle = &bundles[cell.bundle];
                let result = runner
                    .run_cell(bundle, data[cell.bundle].as_ref(), cell.variant, cell.run)
                    .map_err(BenchError::from)
                    .and_then(|rec| {
                        debug_assert_eq!(rec.key(), cell.key);
                        store.put(&rec).map_err(BenchError::from)
                    });
                if let Err(e) = result {
                    failure.lock().unwrap_or_else(|e| e.into_inner()).get_or_insert(e);
                    break;
                }
            });
        }
    });
    if let Some(e) = failure.into_inner().unwrap_or_else(|e| e.into_inner()) {
        return Err(e);
    }

    let mut records = Vec::new();
    for b in bundles {
        for v in matrix {
            for run in 0..v.runs {
                if let Some(r) = store.get(&cell_key(&b.id, &v.label, run))? {
                    records.push(r);
                }
            }
        }
    }
    sort_records(&mut records);
    let executed = executed.into_inner();
    Ok(BenchSummary {
        pending: cells.len() - executed,
        records,
        executed,
        skipped,
    })
}
