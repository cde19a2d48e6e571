use std::path::{Path, PathBuf};

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::ampl::{DataSection, ParamValue, Table2};
use crate::llm::{SymbolKind, SymbolMeta};

use super::tables::{parse_decimal, TableSet};

/// Column-per-set binding, or an inline member list.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SetBinding {
    pub table: Option<String>,
    pub column: Option<String>,
    pub members: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InlineValues {
    OneD(IndexMap<String, f64>),
    TwoD(IndexMap<String, IndexMap<String, f64>>),
}

/// One parameter's source: `table` + `keys` + `column`, or inline `value` /
/// `values`. `index` names the sets the keys range over; with it, gaps can
/// be detected and filled from `default`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamBinding {
    pub table: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub keys: Vec<String>,
    pub column: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub index: Vec<String>,
    pub default: Option<f64>,
    pub value: Option<f64>,
    pub values: Option<InlineValues>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BindingManifest {
    #[serde(default)]
    pub sets: IndexMap<String, SetBinding>,
    #[serde(default)]
    pub params: IndexMap<String, ParamBinding>,
}

#[derive(Debug, thiserror::Error)]
pub enum ManifestError {
    #[error("cannot read manifest {}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("invalid manifest: {0}")]
    Syntax(#[from] toml::de::Error),
}

impl BindingManifest {
    pub fn from_toml(text: &str) -> Result<Self, ManifestError> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self, ManifestError> {
        let text = std::fs::read_to_string(path).map_err(|source| ManifestError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&text)
    }

    /// Distinct table names referenced by the manifest, in first-use order.
    pub fn table_names(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        let used = self
            .sets
            .values()
            .filter_map(|s| s.table.clone())
            .chain(self.params.values().filter_map(|p| p.table.clone()));
        for t in used {
            if !out.contains(&t) {
                out.push(t);
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BindErrorKind {
    UnknownParameter,
    ArityMismatch,
    MissingMemberValue,
    DuplicateKey,
    NonNumericValue,
    UnknownMember,
    /// Table, column or index set that is not available.
    UnknownSource,
    /// Binding that mixes or omits source fields.
    InvalidSource,
}

impl BindErrorKind {
    pub fn as_str(self) -> &'static str {
        match self {
            BindErrorKind::UnknownParameter => "unknown-parameter",
            BindErrorKind::ArityMismatch => "arity-mismatch",
            BindErrorKind::MissingMemberValue => "missing-member-value",
            BindErrorKind::DuplicateKey => "duplicate-key",
            BindErrorKind::NonNumericValue => "non-numeric-value",
            BindErrorKind::UnknownMember => "unknown-member",
            BindErrorKind::UnknownSource => "unknown-source",
            BindErrorKind::InvalidSource => "invalid-source",
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{} in '{symbol}': {message}", kind.as_str())]
pub struct BindError {
    pub kind: BindErrorKind,
    pub symbol: String,
    pub message: String,
}

fn fail<T>(kind: BindErrorKind, symbol: &str, message: impl Into<String>) -> Result<T, BindError> {
    Err(BindError {
        kind,
        symbol: symbol.to_string(),
        message: message.into(),
    })
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct BoundData {
    pub data: DataSection,
    /// Symbol name to a description of where its values came from.
    pub provenance: IndexMap<String, String>,
}

type Entries = Vec<(Vec<String>, f64)>;

fn push_entry(entries: &mut Entries, name: &str, key: Vec<String>, value: f64) -> Result<(), BindError> {
    if entries.iter().any(|(k, _)| *k == key) {
        return fail(
            BindErrorKind::DuplicateKey,
            name,
            format!("more than one value for [{}]", key.join(",")),
        );
    }
    entries.push((key, value));
    Ok(())
}

fn first_seen(entries: &Entries, pos: usize) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for (k, _) in entries {
        if !out.contains(&k[pos]) {
            out.push(k[pos].clone());
        }
    }
    out
}

fn table_entries(name: &str, pb: &ParamBinding, tables: &TableSet) -> Result<(Entries, String), BindError> {
    let (Some(tname), Some(col)) = (&pb.table, &pb.column) else {
        return fail(BindErrorKind::InvalidSource, name, "a table binding needs both 'table' and 'column'");
    };
    let Some(table) = tables.get(tname) else {
        return fail(BindErrorKind::UnknownSource, name, format!("table '{tname}' is not loaded"));
    };
    let column = |c: &str| {
        table.column(c).ok_or_else(|| BindError {
            kind: BindErrorKind::UnknownSource,
            symbol: name.to_string(),
            message: format!("table '{tname}' has no column '{c}'"),
        })
    };
    let vcol = column(col)?;
    let kcols = pb.keys.iter().map(|k| column(k)).collect::<Result<Vec<_>, _>>()?;
    let mut entries = Entries::new();
    for (row, line) in table.rows.iter().zip(&table.lines) {
        let cell = &row[vcol];
        let Some(v) = parse_decimal(cell) else {
            return fail(
                BindErrorKind::NonNumericValue,
                name,
                format!("'{cell}' in {tname} line {line}, column '{col}' is not a decimal number"),
            );
        };
        let key = kcols.iter().map(|&c| row[c].clone()).collect();
        push_entry(&mut entries, name, key, v)?;
    }
    let by = if pb.keys.is_empty() {
        String::new()
    } else {
        format!(" by {}", pb.keys.join(","))
    };
    Ok((entries, format!("{}:{col}{by}", table.name)))
}

fn inline_entries(name: &str, pb: &ParamBinding) -> Result<Entries, BindError> {
    let mut entries = Entries::new();
    match (&pb.value, &pb.values) {
        (Some(v), None) => entries.push((Vec::new(), *v)),
        (None, Some(InlineValues::OneD(m))) => {
            for (k, v) in m {
                push_entry(&mut entries, name, vec![k.clone()], *v)?;
            }
        }
        (None, Some(InlineValues::TwoD(m))) => {
            for (r, row) in m {
                for (c, v) in row {
                    push_entry(&mut entries, name, vec![r.clone(), c.clone()], *v)?;
                }
            }
        }
        _ => return fail(BindErrorKind::InvalidSource, name, "give exactly one of 'value' or 'values'"),
    }
    Ok(entries)
}

fn inline_arity(pb: &ParamBinding) -> usize {
    match &pb.values {
        Some(InlineValues::OneD(_)) => 1,
        Some(InlineValues::TwoD(_)) => 2,
        None => 0,
    }
}

fn bind_set(name: &str, sb: &SetBinding, tables: &TableSet) -> Result<(Vec<String>, String), BindError> {
    match (&sb.table, &sb.column, &sb.members) {
        (Some(tname), Some(col), None) => {
            let Some(table) = tables.get(tname) else {
                return fail(BindErrorKind::UnknownSource, name, format!("table '{tname}' is not loaded"));
            };
            let Some(c) = table.column(col) else {
                return fail(BindErrorKind::UnknownSource, name, format!("table '{tname}' has no column '{col}'"));
            };
            let mut members: Vec<String> = Vec::new();
            for row in &table.rows {
                if !members.contains(&row[c]) {
                    members.push(row[c].clone());
                }
            }
            Ok((members, format!("{}:{col}", table.name)))
        }
        (None, None, Some(m)) => {
            for (i, x) in m.iter().enumerate() {
                if m[..i].contains(x) {
                    return fail(BindErrorKind::DuplicateKey, name, format!("member '{x}' is listed twice"));
                }
            }
            Ok((m.clone(), "inline".into()))
        }
        _ => fail(
            BindErrorKind::InvalidSource,
            name,
            "a set binding needs either 'table' and 'column' or 'members'",
        ),
    }
}

/// Binds every manifest entry against the loaded tables. With `meta`, each
/// parameter must be a declared parameter symbol of matching dimension.
pub fn bind(manifest: &BindingManifest, meta: Option<&[SymbolMeta]>, tables: &TableSet) -> Result<BoundData, BindError> {
    let mut out = BoundData::default();
    for (name, sb) in &manifest.sets {
        let (members, prov) = bind_set(name, sb, tables)?;
        out.data.sets.insert(name.clone(), members);
        out.provenance.insert(name.clone(), prov);
    }
    for (name, pb) in &manifest.params {
        let from_table = pb.table.is_some() || pb.column.is_some();
        if from_table && (pb.value.is_some() || pb.values.is_some()) {
            return fail(BindErrorKind::InvalidSource, name, "mixes a table source with inline values");
        }
        let arity = if from_table { pb.keys.len() } else { inline_arity(pb) };
        if let Some(meta) = meta {
            let Some(sym) = meta.iter().find(|s| s.name == *name && s.kind == SymbolKind::Parameter) else {
                return fail(BindErrorKind::UnknownParameter, name, "no parameter with this name in the problem metadata");
            };
            if sym.dimension.arity() != arity {
                return fail(
                    BindErrorKind::ArityMismatch,
                    name,
                    format!("declared {} but bound with {arity} key(s)", sym.dimension.as_str()),
                );
            }
        }
        if arity > 2 {
            return fail(BindErrorKind::ArityMismatch, name, format!("{arity} keys given, at most 2 supported"));
        }
        if !pb.index.is_empty() && pb.index.len() != arity {
            return fail(
                BindErrorKind::ArityMismatch,
                name,
                format!("index lists {} set(s) but the binding has {arity} key(s)", pb.index.len()),
            );
        }
        let mut index_members = Vec::new();
        for set in &pb.index {
            let Some(m) = out.data.sets.get(set) else {
                return fail(BindErrorKind::UnknownSource, name, format!("index set '{set}' has no binding"));
            };
            index_members.push(m.clone());
        }
        let (entries, prov) = if from_table {
            table_entries(name, pb, tables)?
        } else {
            (inline_entries(name, pb)?, "inline".to_string())
        };
        for (key, _) in &entries {
            for (pos, members) in index_members.iter().enumerate() {
                if !members.contains(&key[pos]) {
                    return fail(
                        BindErrorKind::UnknownMember,
                        name,
                        format!("'{}' is not a member of set '{}'", key[pos], pb.index[pos]),
                    );
                }
            }
        }
        let axis = |pos: usize| index_members.get(pos).cloned().unwrap_or_else(|| first_seen(&entries, pos));
        let lookup = |key: &[String]| -> Result<f64, BindError> {
            match entries.iter().find(|(k, _)| k == key) {
                Some((_, v)) => Ok(*v),
                None => pb.default.ok_or_else(|| BindError {
                    kind: BindErrorKind::MissingMemberValue,
                    symbol: name.clone(),
                    message: format!("no value for [{}] and no default", key.join(",")),
                }),
            }
        };
        let value = match arity {
            0 => match entries.len() {
                1 => ParamValue::Scalar(entries[0].1),
                0 => match pb.default {
                    Some(d) => ParamValue::Scalar(d),
                    None => return fail(BindErrorKind::MissingMemberValue, name, "source has no rows"),
                },
                n => return fail(BindErrorKind::DuplicateKey, name, format!("scalar bound to {n} rows")),
            },
            1 => {
                let mut m = IndexMap::new();
                for k in axis(0) {
                    let v = lookup(std::slice::from_ref(&k))?;
                    m.insert(k, v);
                }
                ParamValue::OneD(m)
            }
            _ => {
                let (rows, cols) = (axis(0), axis(1));
                let values = rows
                    .iter()
                    .map(|r| cols.iter().map(|c| lookup(&[r.clone(), c.clone()])).collect())
                    .collect::<Result<Vec<Vec<f64>>, _>>()?;
                ParamValue::TwoD(Table2 { rows, cols, values })
            }
        };
        out.data.params.insert(name.clone(), value);
        out.provenance.insert(name.clone(), prov);
    }
    Ok(out)
}
