use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::ast::*;
use super::data::{DataSection, ParamValue};
use super::error::{CompileError, CompileErrorKind};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub warnings: Vec<String>,
}

/// Checks a model on its own: unique names, resolvable references, subscript
/// arity, and the presence of at least one variable and one objective.
pub fn check_model(model: &Model) -> Result<(), CompileError> {
    let mut seen = HashSet::new();
    let names = model
        .sets
        .iter()
        .map(|s| &s.name)
        .chain(model.params.iter().map(|p| &p.name))
        .chain(model.vars.iter().map(|v| &v.name))
        .chain(model.constraints.iter().map(|c| &c.name))
        .chain(model.objectives.iter().map(|o| &o.name));
    for name in names {
        if !seen.insert(name.as_str()) {
            return Err(CompileError::symbol(
                CompileErrorKind::DuplicateDeclaration,
                name,
                format!("'{name}' is declared more than once"),
            ));
        }
    }
    if model.vars.is_empty() {
        return Err(CompileError::symbol(
            CompileErrorKind::UnresolvedSymbol,
            "var",
            "the model declares no decision variables",
        ));
    }
    if model.objectives.is_empty() {
        return Err(CompileError::symbol(
            CompileErrorKind::UnresolvedSymbol,
            "objective",
            "the model declares no objective (maximize/minimize)",
        ));
    }

    for p in &model.params {
        declaration_scope(model, &p.name, &p.index)?;
    }
    for v in &model.vars {
        let scope = declaration_scope(model, &v.name, &v.index)?;
        for bound in v.lower.iter().chain(v.upper.iter()) {
            check_expr(model, &v.name, bound, &mut scope.clone(), false)?;
        }
    }
    for c in &model.constraints {
        let mut scope = declaration_scope(model, &c.name, &c.index)?;
        check_expr(model, &c.name, &c.lhs, &mut scope, true)?;
        check_expr(model, &c.name, &c.rhs, &mut scope, true)?;
    }
    for o in &model.objectives {
        check_expr(model, &o.name, &o.expr, &mut Vec::new(), true)?;
    }
    Ok(())
}

fn declaration_scope(model: &Model, owner: &str, index: &[IndexEntry]) -> Result<Vec<String>, CompileError> {
    let mut scope = Vec::new();
    for entry in index {
        bind_entry(model, owner, entry, &mut scope)?;
    }
    Ok(scope)
}

fn bind_entry(model: &Model, owner: &str, entry: &IndexEntry, scope: &mut Vec<String>) -> Result<(), CompileError> {
    if !model.has_set(&entry.set) {
        return Err(CompileError::symbol(
            CompileErrorKind::UnresolvedSymbol,
            &entry.set,
            format!("'{owner}' is indexed over '{}', which is not a declared set", entry.set),
        ));
    }
    if let Some(d) = &entry.dummy {
        if scope.contains(d) {
            return Err(CompileError::symbol(
                CompileErrorKind::DuplicateDeclaration,
                d,
                format!("index '{d}' in '{owner}' is already bound by an enclosing indexing expression"),
            ));
        }
        if declared_kind(model, d).is_some() {
            return Err(CompileError::symbol(
                CompileErrorKind::DuplicateDeclaration,
                d,
                format!("index '{d}' in '{owner}' shadows a declared name"),
            ));
        }
        scope.push(d.clone());
    }
    Ok(())
}

fn declared_kind(model: &Model, name: &str) -> Option<&'static str> {
    if model.has_set(name) {
        Some("set")
    } else if model.param(name).is_some() {
        Some("param")
    } else if model.var(name).is_some() {
        Some("var")
    } else if model.constraints.iter().any(|c| c.name == name) {
        Some("constraint")
    } else if model.objectives.iter().any(|o| o.name == name) {
        Some("objective")
    } else {
        None
    }
}

fn check_expr(
    model: &Model,
    owner: &str,
    expr: &Expr,
    scope: &mut Vec<String>,
    vars_allowed: bool,
) -> Result<(), CompileError> {
    match expr {
        Expr::Num(_) => Ok(()),
        Expr::Ref { name, subscripts } => {
            if scope.contains(name) {
                return Err(CompileError::symbol(
                    CompileErrorKind::UnresolvedSymbol,
                    name,
                    format!("in '{owner}': index '{name}' names a set member and cannot be used as a number"),
                ));
            }
            let arity = if let Some(p) = model.param(name) {
                p.index.len()
            } else if let Some(v) = model.var(name) {
                if !vars_allowed {
                    return Err(CompileError::symbol(
                        CompileErrorKind::UnresolvedSymbol,
                        name,
                        format!("bound of variable '{owner}' refers to variable '{name}'; bounds may only use parameters"),
                    ));
                }
                v.index.len()
            } else {
                let what = match declared_kind(model, name) {
                    Some(kind) => format!("'{name}' is a {kind} and cannot be used in an expression"),
                    None => format!("'{name}' is not declared"),
                };
                return Err(CompileError::symbol(
                    CompileErrorKind::UnresolvedSymbol,
                    name,
                    format!("in '{owner}': {what}"),
                ));
            };
            if subscripts.len() != arity {
                return Err(CompileError::symbol(
                    CompileErrorKind::ArityMismatch,
                    name,
                    format!(
                        "in '{owner}': '{name}' is declared with {arity} index set(s) but used with {} subscript(s)",
                        subscripts.len()
                    ),
                ));
            }
            for s in subscripts {
                if let Subscript::Dummy(d) = s {
                    if !scope.contains(d) {
                        return Err(CompileError::symbol(
                            CompileErrorKind::UnresolvedSymbol,
                            d,
                            format!("in '{owner}': subscript '{d}' of '{name}' is not a bound index"),
                        ));
                    }
                }
            }
            Ok(())
        }
        Expr::Sum { binder, body } => {
            let depth = scope.len();
            bind_entry(model, owner, binder, scope)?;
            let r = check_expr(model, owner, body, scope, vars_allowed);
            scope.truncate(depth);
            r
        }
        Expr::Add(l, r) | Expr::Sub(l, r) | Expr::Mul(l, r) => {
            check_expr(model, owner, l, scope, vars_allowed)?;
            check_expr(model, owner, r, scope, vars_allowed)
        }
        Expr::Neg(e) => check_expr(model, owner, e, scope, vars_allowed),
    }
}

/// Checks a model against a data section: every declared set and param has
/// data of the right shape covering its index sets, and values respect the
/// declared bounds. Undeclared data entries and empty sets are warnings.
pub fn validate(model: &Model, data: &DataSection) -> Result<ValidationReport, CompileError> {
    check_model(model)?;
    let mut report = ValidationReport::default();

    for s in &model.sets {
        match data.sets.get(&s.name) {
            None => {
                return Err(CompileError::symbol(
                    CompileErrorKind::UnresolvedSymbol,
                    &s.name,
                    format!("no data is given for set '{}'", s.name),
                ))
            }
            Some(members) if members.is_empty() => {
                report.warnings.push(format!("set '{}' is empty", s.name));
            }
            Some(_) => {}
        }
    }

    for p in &model.params {
        let Some(value) = data.params.get(&p.name) else {
            return Err(CompileError::symbol(
                CompileErrorKind::UnresolvedSymbol,
                &p.name,
                format!("no data is given for param '{}'", p.name),
            ));
        };
        if value.arity() != p.index.len() {
            return Err(CompileError::symbol(
                CompileErrorKind::ArityMismatch,
                &p.name,
                format!(
                    "param '{}' is declared with {} index set(s) but its data has {} dimension(s)",
                    p.name,
                    p.index.len(),
                    value.arity()
                ),
            ));
        }
        check_param_coverage(p, value, data)?;
        for (keys, v) in value.entries() {
            let label = subscripted(&p.name, &keys);
            if let Some(lb) = p.lower {
                if v < lb {
                    return Err(CompileError::symbol(
                        CompileErrorKind::BoundViolation,
                        &label,
                        format!("{label} = {v} violates the declared bound >= {lb}"),
                    ));
                }
            }
            if let Some(ub) = p.upper {
                if v > ub {
                    return Err(CompileError::symbol(
                        CompileErrorKind::BoundViolation,
                        &label,
                        format!("{label} = {v} violates the declared bound <= {ub}"),
                    ));
                }
            }
        }
    }

    for name in data.sets.keys() {
        if !model.has_set(name) {
            report.warnings.push(format!("data for set '{name}' has no matching declaration"));
        }
    }
    for name in data.params.keys() {
        if model.param(name).is_none() {
            report.warnings.push(format!("data for param '{name}' has no matching declaration"));
        }
    }
    Ok(report)
}

pub(crate) fn subscripted(name: &str, keys: &[String]) -> String {
    if keys.is_empty() {
        name.to_owned()
    } else {
        format!("{name}[{}]", keys.join(","))
    }
}

fn check_param_coverage(p: &ParamDecl, value: &ParamValue, data: &DataSection) -> Result<(), CompileError> {
    // The sets themselves were checked to have data before params are visited.
    let axes: Vec<&Vec<String>> = p.index.iter().map(|e| &data.sets[&e.set]).collect();
    let stray = |key: &str, axis: usize| {
        CompileError::symbol(
            CompileErrorKind::UnresolvedSymbol,
            &p.name,
            format!(
                "data for param '{}' uses '{key}', which is not a member of set '{}'",
                p.name, p.index[axis].set
            ),
        )
    };
    let missing = |keys: &[&String]| {
        let keys: Vec<String> = keys.iter().map(|k| (*k).clone()).collect();
        let label = subscripted(&p.name, &keys);
        CompileError::symbol(
            CompileErrorKind::UnresolvedSymbol,
            &label,
            format!("no value is given for {label}"),
        )
    };
    match value {
        ParamValue::Scalar(_) => {}
        ParamValue::OneD(map) => {
            if let Some(k) = map.keys().find(|k| !axes[0].contains(k)) {
                return Err(stray(k, 0));
            }
            if let Some(m) = axes[0].iter().find(|m| !map.contains_key(*m)) {
                return Err(missing(&[m]));
            }
        }
        ParamValue::TwoD(t) => {
            if let Some(r) = t.rows.iter().find(|r| !axes[0].contains(r)) {
                return Err(stray(r, 0));
            }
            if let Some(c) = t.cols.iter().find(|c| !axes[1].contains(c)) {
                return Err(stray(c, 1));
            }
            for r in axes[0] {
                for c in axes[1] {
                    if t.get(r, c).is_none() {
                        return Err(missing(&[r, c]));
                    }
                }
            }
        }
    }
    Ok(())
}
