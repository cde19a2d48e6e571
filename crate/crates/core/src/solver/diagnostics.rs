//! Solver feedback text for the refinement loop.
//!
//! ```text
//! ERROR infeasible
//! row Budget_Limit
//! var y[R1]
//! The constraints listed above cannot all hold at once ...
//! ```

use std::fmt::Write;

use crate::instance::{ProblemInstance, Row};

use super::simplex::{self, LpStatus};
use super::{bounds, SolveErrorKind, SolveOutcome, SolverParams};

fn feasible(lower: &[f64], upper: &[f64], rows: &[Row], params: &SolverParams) -> bool {
    let zero = vec![0.0; lower.len()];
    !matches!(
        simplex::minimize(lower, upper, rows, &zero, params).status,
        LpStatus::Infeasible
    )
}

/// Greedy explanation of infeasibility: rows whose removal keeps the relaxation
/// infeasible are dropped, then variables whose bounds the remaining rows
/// depend on are reported.
fn explain_infeasible(instance: &ProblemInstance, params: &SolverParams) -> (Vec<usize>, Vec<usize>) {
    let (lower, upper) = bounds(instance);
    let mut keep: Vec<usize> = (0..instance.rows.len()).collect();
    let subset = |keep: &[usize]| -> Vec<Row> { keep.iter().map(|&i| instance.rows[i].clone()).collect() };
    if feasible(&lower, &upper, &instance.rows, params) {
        // Only the integer lattice is empty; every row participates.
        return (keep, Vec::new());
    }
    let mut i = 0;
    while i < keep.len() {
        let mut trial = keep.clone();
        trial.remove(i);
        if !feasible(&lower, &upper, &subset(&trial), params) {
            keep = trial;
        } else {
            i += 1;
        }
    }
    let rows = subset(&keep);
    let mut touched: Vec<usize> = rows
        .iter()
        .flat_map(|r| r.coefficients.iter().map(|&(j, _)| j))
        .collect();
    touched.sort_unstable();
    touched.dedup();
    let vars = touched
        .into_iter()
        .filter(|&j| {
            let (mut l, mut u) = (lower.clone(), upper.clone());
            l[j] = f64::NEG_INFINITY;
            u[j] = f64::INFINITY;
            feasible(&l, &u, &rows, params)
        })
        .collect();
    (keep, vars)
}

/// Renders a runtime error as feedback text. Solved outcomes render as an
/// empty string.
pub fn render_diagnostics(outcome: &SolveOutcome, instance: &ProblemInstance) -> String {
    let SolveOutcome::RuntimeError(err) = outcome else {
        return String::new();
    };
    let params = SolverParams::default();
    let mut out = format!("ERROR {}\n", err.kind);
    match err.kind {
        SolveErrorKind::Infeasible => {
            let (rows, vars) = explain_infeasible(instance, &params);
            for i in rows {
                let _ = writeln!(out, "row {}", instance.rows[i].name);
            }
            for j in vars {
                let _ = writeln!(out, "var {}", instance.variables[j].name);
            }
            out.push_str(
                "The model is infeasible: the constraints listed above cannot all hold at once \
                 given the bounds of the listed variables. Check their directions, right-hand sides \
                 and the data they use.\n",
            );
        }
        SolveErrorKind::Unbounded => {
            for &j in &err.ray {
                let _ = writeln!(out, "var {}", instance.variables[j].name);
            }
            let _ = writeln!(
                out,
                "The model is unbounded: objective {} can be improved without limit by changing the \
                 listed variables. A constraint or a variable bound is probably missing.",
                instance.objective.name
            );
        }
        _ => {
            let _ = writeln!(out, "The solver did not finish: {}.", err.message);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{Integrality, LinearObjective, Relation, Sense, Variable};
    use crate::solver::solve_milp;

    fn one_var(rows: Vec<Row>) -> ProblemInstance {
        ProblemInstance {
            variables: vec![Variable {
                name: "x".into(),
                lower: 0.0,
                upper: f64::INFINITY,
                integrality: Integrality::Continuous,
            }],
            objective: LinearObjective {
                name: "Total".into(),
                sense: Sense::Maximize,
                coefficients: vec![(0, 1.0)],
                constant: 0.0,
            },
            tiebreak_objectives: Vec::new(),
            rows,
            var_provenance: Vec::new(),
            row_provenance: Vec::new(),
        }
    }

    fn row(name: &str, relation: Relation, rhs: f64) -> Row {
        Row {
            name: name.into(),
            coefficients: vec![(0, 1.0)],
            relation,
            rhs,
        }
    }

    #[test]
    fn infeasible_pair() {
        let inst = one_var(vec![
            row("Free", Relation::Le, 100.0),
            row("AtLeast", Relation::Ge, 5.0),
            row("AtMost", Relation::Le, 3.0),
        ]);
        let out = solve_milp(&inst, &SolverParams::default());
        let text = render_diagnostics(&out, &inst);
        assert_eq!(text.lines().next(), Some("ERROR infeasible"));
        assert!(text.contains("row AtLeast\nrow AtMost\n"));
        assert!(!text.contains("row Free"));
        assert!(text.contains("infeasible"));
    }

    #[test]
    fn unbounded_names_variable() {
        let inst = one_var(vec![]);
        let out = solve_milp(&inst, &SolverParams::default());
        let text = render_diagnostics(&out, &inst);
        assert!(text.starts_with("ERROR unbounded\nvar x\n"));
        assert!(text.contains("unbounded"));
    }
}
