//! Embedded LP/MILP solver: two-phase simplex, branch-and-bound, and the
//! textual diagnostics fed back to the model generator.

mod branch;
mod diagnostics;
mod simplex;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::instance::{LinearObjective, ProblemInstance, Relation, Row, Sense};

pub use diagnostics::render_diagnostics;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverParams {
    pub feasibility_tol: f64,
    pub pivot_tol: f64,
    pub integrality_tol: f64,
    pub max_simplex_iterations: usize,
    pub max_bb_nodes: usize,
}

impl Default for SolverParams {
    fn default() -> Self {
        SolverParams {
            feasibility_tol: 1e-6,
            pivot_tol: 1e-9,
            integrality_tol: 1e-6,
            max_simplex_iterations: 100_000,
            max_bb_nodes: 100_000,
        }
    }
}

impl SolverParams {
    pub fn validate(&self) -> Result<(), String> {
        for (name, v) in [
            ("feasibility_tol", self.feasibility_tol),
            ("pivot_tol", self.pivot_tol),
            ("integrality_tol", self.integrality_tol),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(format!("{name} must be a positive number, got {v}"));
            }
        }
        if self.max_simplex_iterations == 0 {
            return Err("max_simplex_iterations must be at least 1".into());
        }
        if self.max_bb_nodes == 0 {
            return Err("max_bb_nodes must be at least 1".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveErrorKind {
    Infeasible,
    Unbounded,
    IterationLimit,
    NodeLimit,
    NumericFailure,
    /// The solve did not finish (timeout, crash of an external runtime).
    UnexpectedTermination,
}

impl SolveErrorKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SolveErrorKind::Infeasible => "infeasible",
            SolveErrorKind::Unbounded => "unbounded",
            SolveErrorKind::IterationLimit => "iteration-limit",
            SolveErrorKind::NodeLimit => "node-limit",
            SolveErrorKind::NumericFailure => "numeric-failure",
            SolveErrorKind::UnexpectedTermination => "unexpected-termination",
        }
    }
}

impl std::fmt::Display for SolveErrorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveError {
    pub kind: SolveErrorKind,
    pub message: String,
    /// Variables moving along an improving ray (unbounded only).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub ray: Vec<usize>,
}

impl SolveError {
    pub fn new(kind: SolveErrorKind, message: impl Into<String>) -> Self {
        SolveError {
            kind,
            message: message.into(),
            ray: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub objective: f64,
    pub assignment: IndexMap<String, f64>,
    pub node_count: usize,
    pub iterations: usize,
    /// Row multipliers of the final LP, in the instance's objective sense.
    /// Empty for branch-and-bound results.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub row_duals: Vec<f64>,
}

impl Solution {
    /// Assignment as a dense vector in instance variable order.
    pub fn values(&self) -> Vec<f64> {
        self.assignment.values().copied().collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "kebab-case")]
pub enum SolveOutcome {
    Solved(Solution),
    RuntimeError(SolveError),
}

impl SolveOutcome {
    pub fn solution(&self) -> Option<&Solution> {
        match self {
            SolveOutcome::Solved(s) => Some(s),
            SolveOutcome::RuntimeError(_) => None,
        }
    }

    pub fn error(&self) -> Option<&SolveError> {
        match self {
            SolveOutcome::Solved(_) => None,
            SolveOutcome::RuntimeError(e) => Some(e),
        }
    }
}

fn min_costs(instance: &ProblemInstance, objective: &LinearObjective) -> Vec<f64> {
    let mut c = vec![0.0; instance.variables.len()];
    let s = match objective.sense {
        Sense::Minimize => 1.0,
        Sense::Maximize => -1.0,
    };
    for &(j, a) in &objective.coefficients {
        c[j] = s * a;
    }
    c
}

fn bounds(instance: &ProblemInstance) -> (Vec<f64>, Vec<f64>) {
    instance.variables.iter().map(|v| (v.lower, v.upper)).unzip()
}

fn assignment(instance: &ProblemInstance, x: &[f64]) -> IndexMap<String, f64> {
    instance
        .variables
        .iter()
        .zip(x)
        .map(|(v, &val)| (v.name.clone(), val))
        .collect()
}

fn status_error(status: &simplex::LpStatus, params: &SolverParams) -> Option<SolveError> {
    match status {
        simplex::LpStatus::Optimal { .. } => None,
        simplex::LpStatus::Infeasible => Some(SolveError::new(
            SolveErrorKind::Infeasible,
            "no assignment satisfies all constraints and variable bounds",
        )),
        simplex::LpStatus::Unbounded { ray } => Some(SolveError {
            kind: SolveErrorKind::Unbounded,
            message: "the objective improves without limit".into(),
            ray: ray.clone(),
        }),
        simplex::LpStatus::IterationLimit => Some(SolveError::new(
            SolveErrorKind::IterationLimit,
            format!("simplex stopped after {} iterations", params.max_simplex_iterations),
        )),
    }
}

/// Keeps `objective` at its optimal `value` on later lexicographic stages.
fn face_row(objective: &LinearObjective, value: f64) -> Row {
    let rhs = value - objective.constant;
    let relation = match objective.sense {
        Sense::Maximize => Relation::Ge,
        Sense::Minimize => Relation::Le,
    };
    Row {
        name: format!("{}_face", objective.name),
        coefficients: objective.coefficients.clone(),
        relation,
        rhs,
    }
}

/// Solves the continuous relaxation; integrality attributes are ignored.
pub fn solve_lp(instance: &ProblemInstance, params: &SolverParams) -> SolveOutcome {
    if let Err(e) = params.validate() {
        return SolveOutcome::RuntimeError(SolveError::new(SolveErrorKind::NumericFailure, e));
    }
    let (lower, upper) = bounds(instance);
    let mut rows = instance.rows.clone();
    let mut iterations = 0;
    let mut last = None;
    for (stage, objective) in std::iter::once(&instance.objective)
        .chain(&instance.tiebreak_objectives)
        .enumerate()
    {
        let run = simplex::minimize(&lower, &upper, &rows, &min_costs(instance, objective), params);
        iterations += run.iterations;
        if let Some(e) = status_error(&run.status, params) {
            if stage == 0 {
                return SolveOutcome::RuntimeError(e);
            }
            break;
        }
        let simplex::LpStatus::Optimal { x, duals } = run.status else {
            unreachable!()
        };
        rows.push(face_row(objective, objective.evaluate(&x)));
        last = Some((x, duals));
    }
    let (x, duals) = last.expect("first stage is solved");
    let sense = match instance.objective.sense {
        Sense::Minimize => 1.0,
        Sense::Maximize => -1.0,
    };
    let row_duals = if instance.tiebreak_objectives.is_empty() {
        duals[..instance.rows.len()].iter().map(|y| sense * y + 0.0).collect()
    } else {
        Vec::new()
    };
    SolveOutcome::Solved(Solution {
        objective: instance.objective.evaluate(&x),
        assignment: assignment(instance, &x),
        node_count: 0,
        iterations,
        row_duals,
    })
}

/// Branch-and-bound over integer and binary variables; continuous instances
/// are passed to [`solve_lp`].
pub fn solve_milp(instance: &ProblemInstance, params: &SolverParams) -> SolveOutcome {
    if instance.is_continuous() {
        return solve_lp(instance, params);
    }
    if let Err(e) = params.validate() {
        return SolveOutcome::RuntimeError(SolveError::new(SolveErrorKind::NumericFailure, e));
    }
    let mut rows = instance.rows.clone();
    let mut iterations = 0;
    let mut nodes = 0;
    let mut last: Option<Vec<f64>> = None;
    for (stage, objective) in std::iter::once(&instance.objective)
        .chain(&instance.tiebreak_objectives)
        .enumerate()
    {
        let result = branch::branch_and_bound(instance, &rows, objective, params);
        iterations += result.iterations;
        nodes += result.nodes;
        match result.outcome {
            Ok(x) => {
                rows.push(face_row(objective, objective.evaluate(&x)));
                last = Some(x);
            }
            Err(e) if stage == 0 => return SolveOutcome::RuntimeError(e),
            Err(_) => break,
        }
    }
    let x = last.expect("first stage is solved");
    SolveOutcome::Solved(Solution {
        objective: instance.objective.evaluate(&x),
        assignment: assignment(instance, &x),
        node_count: nodes,
        iterations,
        row_duals: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{Integrality, Variable};

    fn var(name: &str, lower: f64, upper: f64, integrality: Integrality) -> Variable {
        Variable {
            name: name.into(),
            lower,
            upper,
            integrality,
        }
    }

    fn instance(vars: Vec<Variable>, sense: Sense, c: &[(usize, f64)], rows: Vec<Row>) -> ProblemInstance {
        ProblemInstance {
            variables: vars,
            objective: LinearObjective {
                name: "obj".into(),
                sense,
                coefficients: c.to_vec(),
                constant: 0.0,
            },
            tiebreak_objectives: Vec::new(),
            rows,
            var_provenance: Vec::new(),
            row_provenance: Vec::new(),
        }
    }

    fn row(name: &str, c: &[(usize, f64)], relation: Relation, rhs: f64) -> Row {
        Row {
            name: name.into(),
            coefficients: c.to_vec(),
            relation,
            rhs,
        }
    }

    #[test]
    fn single_bound_lp() {
        let inst = instance(
            vec![var("x", 0.0, f64::INFINITY, Integrality::Continuous)],
            Sense::Maximize,
            &[(0, 10.0)],
            vec![row("cap", &[(0, 1.0)], Relation::Le, 8.0)],
        );
        let out = solve_lp(&inst, &SolverParams::default());
        let s = out.solution().unwrap();
        assert_eq!(s.objective, 80.0);
        assert_eq!(s.assignment["x"], 8.0);
        assert_eq!(s.row_duals, vec![10.0]);
    }

    #[test]
    fn contradictory_bounds_are_infeasible() {
        let inst = instance(
            vec![var("x", 0.0, f64::INFINITY, Integrality::Continuous)],
            Sense::Maximize,
            &[(0, 1.0)],
            vec![
                row("low", &[(0, 1.0)], Relation::Ge, 5.0),
                row("high", &[(0, 1.0)], Relation::Le, 3.0),
            ],
        );
        let out = solve_lp(&inst, &SolverParams::default());
        assert_eq!(out.error().unwrap().kind, SolveErrorKind::Infeasible);
    }

    #[test]
    fn small_integer_program() {
        let inst = instance(
            vec![
                var("x", 0.0, 10.0, Integrality::Integer),
                var("y", 0.0, 10.0, Integrality::Integer),
            ],
            Sense::Maximize,
            &[(0, 1.0), (1, 1.0)],
            vec![row("r", &[(0, 2.0), (1, 3.0)], Relation::Le, 12.0)],
        );
        let s = solve_milp(&inst, &SolverParams::default()).solution().cloned().unwrap();
        assert_eq!(s.objective, 6.0);
        assert_eq!(s.values(), vec![6.0, 0.0]);
    }

    #[test]
    fn knapsack_with_oversized_items() {
        let inst = instance(
            (0..3).map(|i| var(&format!("take[{i}]"), 0.0, 1.0, Integrality::Binary)).collect(),
            Sense::Maximize,
            &[(0, 5.0), (1, 4.0), (2, 3.0)],
            vec![row("cap", &[(0, 11.0), (1, 12.0), (2, 13.0)], Relation::Le, 10.0)],
        );
        let s = solve_milp(&inst, &SolverParams::default()).solution().cloned().unwrap();
        assert_eq!(s.objective, 0.0);
        assert_eq!(s.values(), vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn unbounded_integer_relaxation() {
        let inst = instance(
            vec![var("n", 0.0, f64::INFINITY, Integrality::Integer)],
            Sense::Maximize,
            &[(0, 1.0)],
            vec![],
        );
        let out = solve_milp(&inst, &SolverParams::default());
        let e = out.error().unwrap();
        assert_eq!(e.kind, SolveErrorKind::Unbounded);
        assert_eq!(e.ray, vec![0]);
    }

    #[test]
    fn node_limit_is_reported() {
        let inst = instance(
            vec![
                var("x", 0.0, 10.0, Integrality::Integer),
                var("y", 0.0, 10.0, Integrality::Integer),
            ],
            Sense::Maximize,
            &[(0, 1.0), (1, 1.0)],
            vec![row("r", &[(0, 2.0), (1, 2.0)], Relation::Le, 9.0)],
        );
        let p = SolverParams {
            max_bb_nodes: 1,
            ..SolverParams::default()
        };
        assert_eq!(solve_milp(&inst, &p).error().unwrap().kind, SolveErrorKind::NodeLimit);
    }

    #[test]
    fn lexicographic_stages() {
        // max x, then min y, over x + y >= 2, x <= 3, y <= 5
        let mut inst = instance(
            vec![
                var("x", 0.0, 3.0, Integrality::Continuous),
                var("y", 0.0, 5.0, Integrality::Continuous),
            ],
            Sense::Maximize,
            &[(0, 1.0)],
            vec![row("r", &[(0, 1.0), (1, 1.0)], Relation::Ge, 2.0)],
        );
        inst.tiebreak_objectives.push(LinearObjective {
            name: "second".into(),
            sense: Sense::Minimize,
            coefficients: vec![(1, 1.0)],
            constant: 0.0,
        });
        let s = solve_lp(&inst, &SolverParams::default()).solution().cloned().unwrap();
        assert_eq!(s.values(), vec![3.0, 0.0]);
        assert_eq!(s.objective, 3.0);
    }

    #[test]
    fn params_validation() {
        assert!(SolverParams::default().validate().is_ok());
        let bad = SolverParams {
            pivot_tol: 0.0,
            ..SolverParams::default()
        };
        assert!(bad.validate().is_err());
    }
}
