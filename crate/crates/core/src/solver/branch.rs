//! Best-bound branch-and-bound over the LP relaxation.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::instance::{LinearObjective, ProblemInstance, Row, Sense};

use super::simplex::{self, LpStatus};
use super::{bounds, status_error, SolveError, SolveErrorKind, SolverParams};

pub(crate) struct BranchResult {
    pub outcome: Result<Vec<f64>, SolveError>,
    pub nodes: usize,
    pub iterations: usize,
}

struct Node {
    /// Parent relaxation value in minimization form.
    bound: f64,
    depth: usize,
    seq: usize,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Node {}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Node {
    // Max-heap: the smallest bound wins, then the deepest node, then the
    // earliest created.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .total_cmp(&self.bound)
            .then(self.depth.cmp(&other.depth))
            .then(other.seq.cmp(&self.seq))
    }
}

fn most_fractional(instance: &ProblemInstance, x: &[f64], tol: f64) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (j, v) in instance.variables.iter().enumerate() {
        if !v.is_integral() {
            continue;
        }
        let frac = x[j] - x[j].floor();
        let dist = frac.min(1.0 - frac);
        if dist > tol && best.is_none_or(|(_, d)| dist > d) {
            best = Some((j, dist));
        }
    }
    best.map(|(j, _)| j)
}

pub(crate) fn branch_and_bound(
    instance: &ProblemInstance,
    rows: &[Row],
    objective: &LinearObjective,
    params: &SolverParams,
) -> BranchResult {
    let cost = super::min_costs(instance, objective);
    let sign = match objective.sense {
        Sense::Minimize => 1.0,
        Sense::Maximize => -1.0,
    };
    let (mut lower, mut upper) = bounds(instance);
    for (j, v) in instance.variables.iter().enumerate() {
        if v.is_integral() {
            lower[j] = (lower[j] - params.integrality_tol).ceil();
            upper[j] = (upper[j] + params.integrality_tol).floor();
        }
    }
    let mut result = BranchResult {
        outcome: Err(SolveError::new(
            SolveErrorKind::Infeasible,
            "no integer assignment satisfies all constraints and variable bounds",
        )),
        nodes: 0,
        iterations: 0,
    };
    if lower.iter().zip(&upper).any(|(l, u)| l > u) {
        return result;
    }
    let mut heap = BinaryHeap::new();
    heap.push(Node {
        bound: f64::NEG_INFINITY,
        depth: 0,
        seq: 0,
        lower,
        upper,
    });
    let mut seq = 1;
    let mut incumbent: Option<(f64, Vec<f64>)> = None;
    let better = |value: f64, incumbent: &Option<(f64, Vec<f64>)>| match incumbent {
        None => true,
        Some((best, _)) => value < best - 1e-9 * best.abs().max(1.0),
    };

    while let Some(node) = heap.pop() {
        if !better(node.bound, &incumbent) {
            continue;
        }
        if result.nodes >= params.max_bb_nodes {
            result.outcome = Err(SolveError::new(
                SolveErrorKind::NodeLimit,
                format!("branch-and-bound stopped after {} nodes", params.max_bb_nodes),
            ));
            return result;
        }
        result.nodes += 1;
        let run = simplex::minimize(&node.lower, &node.upper, rows, &cost, params);
        result.iterations += run.iterations;
        let x = match run.status {
            LpStatus::Optimal { x, .. } => x,
            LpStatus::Infeasible => continue,
            ref status => {
                result.outcome = Err(status_error(status, params).expect("non-optimal status"));
                return result;
            }
        };
        let value = sign * objective.evaluate(&x);
        if !better(value, &incumbent) {
            continue;
        }
        match most_fractional(instance, &x, params.integrality_tol) {
            None => {
                let mut x = x;
                for (j, v) in instance.variables.iter().enumerate() {
                    if v.is_integral() {
                        x[j] = x[j].round() + 0.0;
                    }
                }
                let value = sign * objective.evaluate(&x);
                incumbent = Some((value, x));
            }
            Some(j) => {
                let mut down = Node {
                    bound: value,
                    depth: node.depth + 1,
                    seq,
                    lower: node.lower.clone(),
                    upper: node.upper.clone(),
                };
                down.upper[j] = x[j].floor();
                let mut up = Node {
                    bound: value,
                    depth: node.depth + 1,
                    seq: seq + 1,
                    lower: node.lower,
                    upper: node.upper,
                };
                up.lower[j] = x[j].ceil();
                seq += 2;
                heap.push(down);
                heap.push(up);
            }
        }
    }
    if let Some((_, x)) = incumbent {
        result.outcome = Ok(x);
    }
    result
}
