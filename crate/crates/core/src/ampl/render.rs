use std::fmt::Write;

use super::ast::*;

/// Renders a model in canonical form, one declaration per line.
///
/// Parenthesization follows the parser's precedence so the output re-parses
/// to the same tree. Numeric literals are expected to be non-negative (the
/// parser represents `-3` as a negation of `3`).
pub fn render_model(model: &Model) -> String {
    let mut out = String::new();
    for s in &model.sets {
        let _ = writeln!(out, "set {};", s.name);
    }
    for p in &model.params {
        let _ = write!(out, "param {}{}", p.name, indexing(&p.index));
        let mut clauses = Vec::new();
        if let Some(lb) = p.lower {
            clauses.push(format!(" >= {}", number(lb)));
        }
        if let Some(ub) = p.upper {
            clauses.push(format!(" <= {}", number(ub)));
        }
        out.push_str(&clauses.join(","));
        out.push_str(";\n");
    }
    for v in &model.vars {
        let _ = write!(out, "var {}{}", v.name, indexing(&v.index));
        let mut clauses = Vec::new();
        if let Some(lb) = &v.lower {
            clauses.push(format!(" >= {}", render_expr(lb)));
        }
        if let Some(ub) = &v.upper {
            clauses.push(format!(" <= {}", render_expr(ub)));
        }
        match v.integrality {
            Integrality::Continuous => {}
            Integrality::Integer => clauses.push(" integer".into()),
            Integrality::Binary => clauses.push(" binary".into()),
        }
        out.push_str(&clauses.join(","));
        out.push_str(";\n");
    }
    for c in &model.constraints {
        let _ = writeln!(
            out,
            "subject to {}{}: {} {} {};",
            c.name,
            indexing(&c.index),
            render_expr(&c.lhs),
            c.relation.symbol(),
            render_expr(&c.rhs)
        );
    }
    for o in &model.objectives {
        let _ = writeln!(out, "{} {}: {};", o.sense.keyword(), o.name, render_expr(&o.expr));
    }
    out
}

fn indexing(entries: &[IndexEntry]) -> String {
    if entries.is_empty() {
        return String::new();
    }
    let inner: Vec<String> = entries.iter().map(index_entry).collect();
    format!(" {{{}}}", inner.join(", "))
}

fn index_entry(e: &IndexEntry) -> String {
    match &e.dummy {
        Some(d) => format!("{d} in {}", e.set),
        None => e.set.clone(),
    }
}

pub(crate) fn number(v: f64) -> String {
    format!("{v}")
}

pub(crate) fn quote_member(m: &str) -> String {
    if m.contains('\'') {
        format!("\"{m}\"")
    } else {
        format!("'{m}'")
    }
}

pub fn render_expr(e: &Expr) -> String {
    let mut s = String::new();
    write_expr(&mut s, e);
    s
}

fn write_expr(out: &mut String, e: &Expr) {
    match e {
        Expr::Num(v) => out.push_str(&number(*v)),
        Expr::Ref { name, subscripts } => {
            out.push_str(name);
            if !subscripts.is_empty() {
                let subs: Vec<String> = subscripts
                    .iter()
                    .map(|s| match s {
                        Subscript::Dummy(d) => d.clone(),
                        Subscript::Member(m) => quote_member(m),
                    })
                    .collect();
                let _ = write!(out, "[{}]", subs.join(","));
            }
        }
        Expr::Sum { binder, body } => {
            let _ = write!(out, "sum {{{}}} ", index_entry(binder));
            write_wrapped(out, body, matches!(**body, Expr::Add(..) | Expr::Sub(..)));
        }
        Expr::Add(l, r) | Expr::Sub(l, r) => {
            write_expr(out, l);
            out.push_str(if matches!(e, Expr::Add(..)) { " + " } else { " - " });
            write_wrapped(out, r, matches!(**r, Expr::Add(..) | Expr::Sub(..)));
        }
        Expr::Mul(l, r) => {
            write_wrapped(out, l, matches!(**l, Expr::Add(..) | Expr::Sub(..) | Expr::Sum { .. }));
            out.push_str(" * ");
            write_wrapped(
                out,
                r,
                matches!(**r, Expr::Add(..) | Expr::Sub(..) | Expr::Mul(..) | Expr::Sum { .. }),
            );
        }
        Expr::Neg(inner) => {
            out.push('-');
            write_wrapped(
                out,
                inner,
                matches!(**inner, Expr::Add(..) | Expr::Sub(..) | Expr::Mul(..) | Expr::Sum { .. }),
            );
        }
    }
}

fn write_wrapped(out: &mut String, e: &Expr, parens: bool) {
    if parens {
        out.push('(');
        write_expr(out, e);
        out.push(')');
    } else {
        write_expr(out, e);
    }
}

#[cfg(test)]
mod tests {
    use super::super::parser::parse_model;
    use super::*;

    #[test]
    fn minimal_canonical_text() {
        let m = parse_model("var x >= 0;\n\n maximize Z:  x ;").unwrap();
        assert_eq!(render_model(&m), "var x >= 0;\nmaximize Z: x;\n");
    }

    #[test]
    fn two_dimensional_param_form() {
        let m = parse_model("set RESOURCES; set PRODUCTS; param unit {RESOURCES, PRODUCTS} >= 0;").unwrap();
        assert!(render_model(&m).contains("param unit {RESOURCES, PRODUCTS} >= 0;"));
    }

    #[test]
    fn parenthesization_round_trips() {
        let src = "set S; var x{S}; var y;\n\
                   maximize z: -(y * 2) + 3 * (sum {i in S} x[i]) - (y - 1) + (sum {i in S} x[i]) * 2 - -y \
                   + sum {i in S} (x[i] + 1) + 2 * (3 * y);";
        let m = parse_model(src).unwrap();
        let again = parse_model(&render_model(&m)).unwrap();
        assert_eq!(m, again);
    }
}
