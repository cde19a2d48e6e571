use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use super::error::{CompileError, CompileErrorKind};
use super::lexer::Tok;
use super::parser::TokenStream;

/// A rectangular two-dimensional parameter table (rows × columns).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table2 {
    pub rows: Vec<String>,
    pub cols: Vec<String>,
    pub values: Vec<Vec<f64>>,
}

impl Table2 {
    pub fn get(&self, row: &str, col: &str) -> Option<f64> {
        let r = self.rows.iter().position(|x| x == row)?;
        let c = self.cols.iter().position(|x| x == col)?;
        Some(self.values[r][c])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ParamValue {
    Scalar(f64),
    OneD(IndexMap<String, f64>),
    TwoD(Table2),
}

impl ParamValue {
    pub fn arity(&self) -> usize {
        match self {
            ParamValue::Scalar(_) => 0,
            ParamValue::OneD(_) => 1,
            ParamValue::TwoD(_) => 2,
        }
    }

    pub fn lookup(&self, keys: &[&str]) -> Option<f64> {
        match (self, keys) {
            (ParamValue::Scalar(v), []) => Some(*v),
            (ParamValue::OneD(m), [k]) => m.get(*k).copied(),
            (ParamValue::TwoD(t), [r, c]) => t.get(r, c),
            _ => None,
        }
    }

    /// Every stored value with its key tuple, in storage order.
    pub fn entries(&self) -> Vec<(Vec<String>, f64)> {
        match self {
            ParamValue::Scalar(v) => vec![(Vec::new(), *v)],
            ParamValue::OneD(m) => m.iter().map(|(k, v)| (vec![k.clone()], *v)).collect(),
            ParamValue::TwoD(t) => t
                .rows
                .iter()
                .enumerate()
                .flat_map(|(i, r)| {
                    t.cols
                        .iter()
                        .enumerate()
                        .map(move |(j, c)| (vec![r.clone(), c.clone()], t.values[i][j]))
                })
                .collect(),
        }
    }
}

/// A parsed data document. Map equality ignores declaration order; member
/// lists and table axes compare in order.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DataSection {
    pub sets: IndexMap<String, Vec<String>>,
    pub params: IndexMap<String, ParamValue>,
}

fn member(ts: &mut TokenStream) -> Option<String> {
    let m = match ts.peek() {
        Tok::Ident(s) => s.clone(),
        Tok::Str(s) => s.clone(),
        Tok::Number(v) => format!("{v}"),
        _ => return None,
    };
    ts.next();
    Some(m)
}

fn is_value_start(ts: &TokenStream) -> bool {
    match ts.peek() {
        Tok::Number(_) => true,
        Tok::Minus | Tok::Plus => matches!(ts.peek_at(1), Tok::Number(_)),
        _ => false,
    }
}

/// Parses a data document: `set` member lists and scalar, 1-D, or 2-D
/// header-table `param` statements. A leading `data;` is accepted.
pub fn parse_data(text: &str) -> Result<DataSection, CompileError> {
    let mut ts = TokenStream::new(text)?;
    let mut data = DataSection::default();
    while !ts.at_eof() {
        if ts.eat_keyword("data") {
            ts.expect(&Tok::Semi, "after 'data'")?;
        } else if ts.eat_keyword("set") {
            let loc = ts.loc();
            let name = ts.name("set")?;
            ts.expect(&Tok::Assign, &format!("after set name '{name}'"))?;
            let mut members: Vec<String> = Vec::new();
            loop {
                if ts.eat(&Tok::Semi) {
                    break;
                }
                if ts.eat(&Tok::Comma) {
                    continue;
                }
                let mloc = ts.loc();
                let Some(m) = member(&mut ts) else {
                    return Err(ts.unexpected(&format!("a member of set '{name}' or ';'")));
                };
                if members.contains(&m) {
                    return Err(CompileError::at(
                        CompileErrorKind::Syntax,
                        mloc,
                        format!("member '{m}' appears twice in set '{name}'"),
                    ));
                }
                members.push(m);
            }
            if data.sets.contains_key(&name) {
                return Err(CompileError::at(
                    CompileErrorKind::DuplicateDeclaration,
                    loc,
                    format!("set '{name}' is given data twice"),
                ));
            }
            data.sets.insert(name, members);
        } else if ts.eat_keyword("param") {
            let loc = ts.loc();
            let name = ts.name("param")?;
            let value = if ts.eat(&Tok::Colon) {
                parse_table(&mut ts, &name)?
            } else {
                ts.expect(&Tok::Assign, &format!("after param name '{name}'"))?;
                parse_list(&mut ts, &name)?
            };
            if data.params.contains_key(&name) {
                return Err(CompileError::at(
                    CompileErrorKind::DuplicateDeclaration,
                    loc,
                    format!("param '{name}' is given data twice"),
                ));
            }
            data.params.insert(name, value);
        } else {
            return Err(ts.unexpected("'set', 'param' or 'data' in data document"));
        }
    }
    Ok(data)
}

fn parse_list(ts: &mut TokenStream, name: &str) -> Result<ParamValue, CompileError> {
    let lone_value = match ts.peek() {
        Tok::Number(_) => *ts.peek_at(1) == Tok::Semi,
        Tok::Minus | Tok::Plus => matches!(ts.peek_at(1), Tok::Number(_)) && *ts.peek_at(2) == Tok::Semi,
        _ => false,
    };
    if lone_value {
        let v = ts.signed_number()?;
        ts.expect(&Tok::Semi, &format!("after the value of param '{name}'"))?;
        return Ok(ParamValue::Scalar(v));
    }
    let mut map = IndexMap::new();
    loop {
        if ts.eat(&Tok::Semi) {
            break;
        }
        if ts.eat(&Tok::Comma) {
            continue;
        }
        let kloc = ts.loc();
        let Some(key) = member(ts) else {
            return Err(ts.unexpected(&format!("a key of param '{name}' or ';'")));
        };
        if !is_value_start(ts) {
            return Err(ts.unexpected(&format!("a numeric value for {name}[{key}]")));
        }
        let v = ts.signed_number()?;
        if map.insert(key.clone(), v).is_some() {
            return Err(CompileError::at(
                CompileErrorKind::DuplicateDeclaration,
                kloc,
                format!("{name}[{key}] is given a value twice"),
            ));
        }
    }
    Ok(ParamValue::OneD(map))
}

fn parse_table(ts: &mut TokenStream, name: &str) -> Result<ParamValue, CompileError> {
    let mut cols = Vec::new();
    while !ts.eat(&Tok::Assign) {
        let cloc = ts.loc();
        let Some(c) = member(ts) else {
            return Err(ts.unexpected(&format!("a column label or ':=' in the table header of '{name}'")));
        };
        if cols.contains(&c) {
            return Err(CompileError::at(
                CompileErrorKind::Syntax,
                cloc,
                format!("column '{c}' appears twice in the header of '{name}'"),
            ));
        }
        cols.push(c);
    }
    if cols.is_empty() {
        return Err(ts.error(format!("table header of '{name}' lists no columns")));
    }
    let mut rows = Vec::new();
    let mut values = Vec::new();
    while !ts.eat(&Tok::Semi) {
        let rloc = ts.loc();
        let Some(r) = member(ts) else {
            return Err(ts.unexpected(&format!("a row label or ';' in table '{name}'")));
        };
        if rows.contains(&r) {
            return Err(CompileError::at(
                CompileErrorKind::DuplicateDeclaration,
                rloc,
                format!("row '{r}' appears twice in table '{name}'"),
            ));
        }
        let mut row = Vec::with_capacity(cols.len());
        while row.len() < cols.len() {
            if !is_value_start(ts) {
                return Err(CompileError::at(
                    CompileErrorKind::RaggedTable,
                    ts.loc(),
                    format!(
                        "row '{r}' of table '{name}' has {} value(s) but the header has {} column(s)",
                        row.len(),
                        cols.len()
                    ),
                ));
            }
            row.push(ts.signed_number()?);
        }
        rows.push(r);
        values.push(row);
    }
    Ok(ParamValue::TwoD(Table2 { rows, cols, values }))
}
