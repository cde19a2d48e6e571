//! The generate/solve/refine loop for one problem and one variant, the
//! inline-data baseline, and the resumable bench over a variant matrix.

mod bench;
mod bundle;
mod execute;
mod record;
mod run;
mod variant;

pub use bench::{
    bench, load_records, read_record, sort_records, BenchError, BenchOptions, BenchSummary, IndexEntry, RecordStore,
    StoreError,
};
pub use bundle::{data_schema, BundleData, BundleError, ProblemBundle};
pub use execute::{execute_spec, split_inline, Execution, ExternalRuntime, SpecData};
pub use record::{cell_key, ExecOutcome, OutcomeClass, PromptStep, RunRecord, SpecAttempt, TranscriptEntry};
pub use run::Runner;
pub use variant::VariantConfig;
