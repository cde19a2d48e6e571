use std::fmt::Write;

use indexmap::IndexMap;
use serde_json::{Map, Value};

use crate::ampl::{is_identifier, render_number, quote_member, DataSection, ParamValue, Table2};

fn member(m: &str) -> String {
    if is_identifier(m) {
        m.to_string()
    } else {
        quote_member(m)
    }
}

/// Renders a data document; [`crate::ampl::parse_data`] reads it back to the
/// same values and member order.
pub fn emit_ampl_data(data: &DataSection) -> String {
    let mut out = String::new();
    for (name, members) in &data.sets {
        let list: Vec<String> = members.iter().map(|m| member(m)).collect();
        if list.is_empty() {
            let _ = writeln!(out, "set {name} := ;");
        } else {
            let _ = writeln!(out, "set {name} := {};", list.join(" "));
        }
    }
    for (name, value) in &data.params {
        match value {
            ParamValue::Scalar(v) => {
                let _ = writeln!(out, "param {name} := {};", render_number(*v));
            }
            ParamValue::OneD(m) if m.is_empty() => {
                let _ = writeln!(out, "param {name} := ;");
            }
            ParamValue::OneD(m) => {
                let _ = write!(out, "param {name} :=");
                for (k, v) in m {
                    let _ = write!(out, "\n  {} {}", member(k), render_number(*v));
                }
                out.push_str(";\n");
            }
            ParamValue::TwoD(t) => {
                let cols: Vec<String> = t.cols.iter().map(|c| member(c)).collect();
                let _ = write!(out, "param {name} :\n  {} :=", cols.join(" "));
                for (r, row) in t.rows.iter().zip(&t.values) {
                    let vals: Vec<String> = row.iter().map(|v| render_number(*v)).collect();
                    let _ = write!(out, "\n  {} {}", member(r), vals.join(" "));
                }
                out.push_str(";\n");
            }
        }
    }
    out
}

fn number(v: f64) -> Value {
    if v.fract() == 0.0 && v.abs() < 9.007_199_254_740_992e15 {
        Value::from(v as i64)
    } else {
        Value::from(v)
    }
}

/// Flat JSON document: sets as string arrays, scalars as numbers, 1-D
/// parameters as `member -> value`, 2-D as `row -> col -> value`.
pub fn emit_generic_data(data: &DataSection) -> String {
    let mut doc = Map::new();
    for (name, members) in &data.sets {
        doc.insert(name.clone(), Value::from(members.clone()));
    }
    for (name, value) in &data.params {
        let v = match value {
            ParamValue::Scalar(v) => number(*v),
            ParamValue::OneD(m) => Value::Object(m.iter().map(|(k, v)| (k.clone(), number(*v))).collect()),
            ParamValue::TwoD(t) => Value::Object(
                t.rows
                    .iter()
                    .zip(&t.values)
                    .map(|(r, row)| {
                        let cells = t.cols.iter().zip(row).map(|(c, v)| (c.clone(), number(*v))).collect();
                        (r.clone(), Value::Object(cells))
                    })
                    .collect(),
            ),
        };
        doc.insert(name.clone(), v);
    }
    let mut s = serde_json::to_string_pretty(&Value::Object(doc)).expect("JSON values serialize");
    s.push('\n');
    s
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("generic data document: {0}")]
pub struct GenericDataError(pub String);

/// Reads a document written by [`emit_generic_data`].
pub fn read_generic_data(text: &str) -> Result<DataSection, GenericDataError> {
    let err = |m: String| GenericDataError(m);
    let doc: Value = serde_json::from_str(text).map_err(|e| err(e.to_string()))?;
    let Value::Object(doc) = doc else {
        return Err(err("top level is not an object".into()));
    };
    let mut data = DataSection::default();
    for (name, v) in doc {
        match v {
            Value::Array(items) => {
                let members = items
                    .into_iter()
                    .map(|i| match i {
                        Value::String(s) => Ok(s),
                        other => Err(err(format!("set '{name}' has non-string member {other}"))),
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                data.sets.insert(name, members);
            }
            Value::Number(n) => {
                data.params.insert(name, ParamValue::Scalar(n.as_f64().unwrap_or(f64::NAN)));
            }
            Value::Object(m) if m.values().all(Value::is_number) => {
                let map: IndexMap<String, f64> = m.into_iter().map(|(k, v)| (k, v.as_f64().unwrap())).collect();
                data.params.insert(name, ParamValue::OneD(map));
            }
            Value::Object(m) if m.values().all(Value::is_object) => {
                let mut table = Table2 {
                    rows: Vec::new(),
                    cols: Vec::new(),
                    values: Vec::new(),
                };
                for (i, (r, row)) in m.into_iter().enumerate() {
                    let Value::Object(row) = row else { unreachable!() };
                    let cols: Vec<String> = row.keys().cloned().collect();
                    if i == 0 {
                        table.cols = cols;
                    } else if cols != table.cols {
                        return Err(err(format!("param '{name}' row '{r}' has different columns")));
                    }
                    let vals = row
                        .values()
                        .map(|v| v.as_f64().ok_or_else(|| err(format!("param '{name}' row '{r}' has a non-number"))))
                        .collect::<Result<Vec<_>, _>>()?;
                    table.rows.push(r);
                    table.values.push(vals);
                }
                data.params.insert(name, ParamValue::TwoD(table));
            }
            other => return Err(err(format!("'{name}' has unsupported value {other}"))),
        }
    }
    Ok(data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ampl::parse_data;

    #[test]
    fn scalar_and_empty_set_forms() {
        let mut d = DataSection::default();
        d.sets.insert("S".into(), Vec::new());
        d.params.insert("b".into(), ParamValue::Scalar(10.0));
        assert_eq!(emit_ampl_data(&d), "set S := ;\nparam b := 10;\n");
        assert_eq!(parse_data(&emit_ampl_data(&d)).unwrap(), d);
    }

    #[test]
    fn awkward_members_are_quoted() {
        let mut d = DataSection::default();
        d.sets.insert("S".into(), vec!["007".into(), "two words".into(), "it's".into(), "ok_1".into()]);
        d.params.insert(
            "p".into(),
            ParamValue::OneD([("007".to_string(), -0.5), ("ok_1".to_string(), 1e-7)].into_iter().collect()),
        );
        let text = emit_ampl_data(&d);
        assert!(text.starts_with("set S := '007' 'two words' \"it's\" ok_1;"));
        assert_eq!(parse_data(&text).unwrap(), d);
    }

    #[test]
    fn generic_numbers_keep_their_type() {
        let mut d = DataSection::default();
        d.sets.insert("P".into(), vec!["A".into(), "B".into()]);
        d.params.insert("budget".into(), ParamValue::Scalar(10.0));
        d.params.insert("rate".into(), ParamValue::Scalar(0.25));
        let text = emit_generic_data(&d);
        assert_eq!(text, "{\n  \"P\": [\n    \"A\",\n    \"B\"\n  ],\n  \"budget\": 10,\n  \"rate\": 0.25\n}\n");
        assert_eq!(read_generic_data(&text).unwrap(), d);
    }
}
