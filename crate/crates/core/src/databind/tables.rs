use std::path::{Path, PathBuf};

use indexmap::IndexMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum IngestErrorKind {
    MissingFile,
    RaggedRow,
    EmptyTable,
    Malformed,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{}: {}{}: {message}", kind_str(*kind), path.display(), row.map(|r| format!(" row {r}")).unwrap_or_default())]
pub struct IngestError {
    pub kind: IngestErrorKind,
    pub path: PathBuf,
    /// 1-based line number in the file.
    pub row: Option<usize>,
    pub message: String,
}

fn kind_str(k: IngestErrorKind) -> &'static str {
    match k {
        IngestErrorKind::MissingFile => "missing-file",
        IngestErrorKind::RaggedRow => "ragged-row",
        IngestErrorKind::EmptyTable => "empty-table",
        IngestErrorKind::Malformed => "malformed",
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColumnType {
    Numeric,
    Symbolic,
}

/// Plain decimal notation: optional sign, digits, optional fraction. No
/// exponents, no `inf`/`nan`, no thousands separators.
pub fn parse_decimal(s: &str) -> Option<f64> {
    let t = s.trim();
    let body = t.strip_prefix(['-', '+']).unwrap_or(t);
    let (int, frac) = body.split_once('.').unwrap_or((body, ""));
    let digits = |p: &str| p.bytes().all(|b| b.is_ascii_digit());
    if int.is_empty() && frac.is_empty() || !digits(int) || !digits(frac) {
        return None;
    }
    t.parse().ok()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub types: Vec<ColumnType>,
    /// Line number of each data row, for error messages.
    pub lines: Vec<usize>,
}

impl Table {
    pub fn column(&self, name: &str) -> Option<usize> {
        self.headers.iter().position(|h| h == name)
    }

    pub fn from_reader(name: &str, path: &Path, reader: impl std::io::Read) -> Result<Table, IngestError> {
        let err = |kind, row, message: String| IngestError {
            kind,
            path: path.to_path_buf(),
            row,
            message,
        };
        let mut rdr = csv::ReaderBuilder::new().flexible(true).has_headers(true).from_reader(reader);
        let headers: Vec<String> = rdr
            .headers()
            .map_err(|e| err(IngestErrorKind::Malformed, Some(1), e.to_string()))?
            .iter()
            .map(|h| h.trim().to_string())
            .collect();
        if headers.iter().all(|h| h.is_empty()) {
            return Err(err(IngestErrorKind::EmptyTable, None, "no header row".into()));
        }
        let mut rows = Vec::new();
        let mut lines = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| {
                let line = e.position().map(|p| p.line() as usize);
                err(IngestErrorKind::Malformed, line, e.to_string())
            })?;
            let line = rec.position().map_or(0, |p| p.line() as usize);
            if rec.len() != headers.len() {
                return Err(err(
                    IngestErrorKind::RaggedRow,
                    Some(line),
                    format!("expected {} fields, found {}", headers.len(), rec.len()),
                ));
            }
            rows.push(rec.iter().map(|c| c.trim().to_string()).collect::<Vec<_>>());
            lines.push(line);
        }
        if rows.is_empty() {
            return Err(err(IngestErrorKind::EmptyTable, None, "header but no data rows".into()));
        }
        let types = (0..headers.len())
            .map(|c| {
                if rows.iter().all(|r: &Vec<String>| parse_decimal(&r[c]).is_some()) {
                    ColumnType::Numeric
                } else {
                    ColumnType::Symbolic
                }
            })
            .collect();
        Ok(Table {
            name: name.to_string(),
            headers,
            rows,
            types,
            lines,
        })
    }
}

/// Loaded tables keyed by file name.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TableSet {
    pub tables: IndexMap<String, Table>,
}

impl TableSet {
    /// Looks a table up by file name (`resources.csv`) or stem (`resources`).
    pub fn get(&self, name: &str) -> Option<&Table> {
        self.tables.get(name).or_else(|| {
            self.tables
                .iter()
                .find(|(k, _)| Path::new(k).file_stem().is_some_and(|s| s == name))
                .map(|(_, t)| t)
        })
    }
}

pub fn load_tables<P: AsRef<Path>>(paths: &[P]) -> Result<TableSet, IngestError> {
    let mut set = TableSet::default();
    for p in paths {
        let path = p.as_ref();
        let file = std::fs::File::open(path).map_err(|e| IngestError {
            kind: IngestErrorKind::MissingFile,
            path: path.to_path_buf(),
            row: None,
            message: e.to_string(),
        })?;
        let name = path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        let table = Table::from_reader(&name, path, file)?;
        set.tables.insert(name, table);
    }
    Ok(set)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn read(text: &str) -> Result<Table, IngestError> {
        Table::from_reader("t.csv", Path::new("t.csv"), text.as_bytes())
    }

    #[test]
    fn decimals() {
        for ok in ["1", "-2", "+3.5", "0.25", ".5", "7."] {
            assert!(parse_decimal(ok).is_some(), "{ok}");
        }
        for bad in ["", "-", ".", "1e3", "inf", "NaN", "1,000", "0x10", "1.2.3"] {
            assert!(parse_decimal(bad).is_none(), "{bad}");
        }
    }

    #[test]
    fn typed_columns() {
        let t = read("resource, avail ,note\nR1,8,a\nR2,10.5,b\nR3,3,4\n").unwrap();
        assert_eq!(t.headers, vec!["resource", "avail", "note"]);
        assert_eq!(t.rows.len(), 3);
        assert_eq!(t.types, vec![ColumnType::Symbolic, ColumnType::Numeric, ColumnType::Symbolic]);
    }

    #[test]
    fn ragged_and_empty() {
        let e = read("a,b\n1,2\n3\n").unwrap_err();
        assert_eq!(e.kind, IngestErrorKind::RaggedRow);
        assert_eq!(e.row, Some(3));
        assert_eq!(read("a,b\n").unwrap_err().kind, IngestErrorKind::EmptyTable);
        assert_eq!(read("").unwrap_err().kind, IngestErrorKind::EmptyTable);
        let missing = load_tables(&["/nonexistent/x.csv"]).unwrap_err();
        assert_eq!(missing.kind, IngestErrorKind::MissingFile);
    }
}
