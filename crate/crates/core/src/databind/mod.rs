//! Tabular data ingestion and binding to model parameters, plus the two data
//! document emitters (modeling-language data and flat JSON).

mod bind;
mod emit;
mod tables;

pub use bind::{
    bind, BindError, BindErrorKind, BindingManifest, BoundData, InlineValues, ManifestError, ParamBinding, SetBinding,
};
pub use emit::{emit_ampl_data, emit_generic_data, read_generic_data, GenericDataError};
pub use tables::{load_tables, parse_decimal, ColumnType, IngestError, IngestErrorKind, Table, TableSet};
