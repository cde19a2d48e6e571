//! Grounded LP/MILP form produced by instantiating a model over its data.

use serde::{Deserialize, Serialize};

pub use crate::ampl::ast::{Integrality, Relation, Sense};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Variable {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    pub integrality: Integrality,
}

impl Variable {
    pub fn is_integral(&self) -> bool {
        self.integrality != Integrality::Continuous
    }
}

/// Sparse linear form: `(variable id, coefficient)` pairs sorted by id with no
/// repeated ids and no zero coefficients.
pub type SparseCoefficients = Vec<(usize, f64)>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearObjective {
    pub name: String,
    pub sense: Sense,
    pub coefficients: SparseCoefficients,
    pub constant: f64,
}

impl LinearObjective {
    pub fn evaluate(&self, x: &[f64]) -> f64 {
        self.constant + self.coefficients.iter().map(|&(j, a)| a * x[j]).sum::<f64>()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub name: String,
    pub coefficients: SparseCoefficients,
    pub relation: Relation,
    pub rhs: f64,
}

impl Row {
    pub fn activity(&self, x: &[f64]) -> f64 {
        self.coefficients.iter().map(|&(j, a)| a * x[j]).sum()
    }

    /// Amount by which `x` violates this row (0 when satisfied).
    pub fn violation(&self, x: &[f64]) -> f64 {
        let lhs = self.activity(x);
        match self.relation {
            Relation::Le => (lhs - self.rhs).max(0.0),
            Relation::Ge => (self.rhs - lhs).max(0.0),
            Relation::Eq => (lhs - self.rhs).abs(),
        }
    }
}

/// Which model declaration (and which set members) an instance row or
/// variable came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub declaration: String,
    pub members: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemInstance {
    pub variables: Vec<Variable>,
    pub objective: LinearObjective,
    /// Further objectives optimized in order, each restricted to the optimal
    /// face of the ones before it. Empty unless lexicographic lowering was
    /// requested.
    pub tiebreak_objectives: Vec<LinearObjective>,
    pub rows: Vec<Row>,
    pub var_provenance: Vec<Provenance>,
    pub row_provenance: Vec<Provenance>,
}

impl ProblemInstance {
    pub fn is_continuous(&self) -> bool {
        self.variables.iter().all(|v| !v.is_integral())
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.variables.iter().position(|v| v.name == name)
    }

    pub fn row_index(&self, name: &str) -> Option<usize> {
        self.rows.iter().position(|r| r.name == name)
    }
}
