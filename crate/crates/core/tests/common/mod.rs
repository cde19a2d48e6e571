//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use num_rational::Ratio;
use num_traits::{One, Signed, Zero};
use optspec_core::instance::{Integrality, LinearObjective, ProblemInstance, Relation, Row, Sense, Variable};
use rand::Rng;

pub type Q = Ratio<i128>;

pub fn fixture_path(rel: &str) -> std::path::PathBuf {
    std::path::PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(rel)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Verdict {
    Optimal(f64),
    Infeasible,
    Unbounded,
}

fn q(v: f64) -> Q {
    assert_eq!(v.fract(), 0.0, "oracle instances use integer data");
    Q::from_integer(v as i128)
}

fn to_f64(v: &Q) -> f64 {
    *v.numer() as f64 / *v.denom() as f64
}

/// `a · x <= b` rows plus `a · x = b` rows.
struct Polyhedron {
    le: Vec<(Vec<Q>, Q)>,
    eq: Vec<(Vec<Q>, Q)>,
}

fn solve_square(mut m: Vec<Vec<Q>>, mut rhs: Vec<Q>) -> Option<Vec<Q>> {
    let n = rhs.len();
    for c in 0..n {
        let p = (c..n).find(|&r| !m[r][c].is_zero())?;
        m.swap(c, p);
        rhs.swap(c, p);
        let inv = Q::one() / m[c][c];
        for k in c..n {
            m[c][k] *= inv;
        }
        rhs[c] *= inv;
        for r in 0..n {
            if r != c && !m[r][c].is_zero() {
                let f = m[r][c];
                for k in c..n {
                    let v = m[c][k];
                    m[r][k] -= f * v;
                }
                let v = rhs[c];
                rhs[r] -= f * v;
            }
        }
    }
    Some(rhs)
}

fn combinations(n: usize, k: usize, start: usize, cur: &mut Vec<usize>, out: &mut dyn FnMut(&[usize])) {
    if cur.len() == k {
        out(cur);
        return;
    }
    for i in start..n {
        if n - i < k - cur.len() {
            break;
        }
        cur.push(i);
        combinations(n, k, i + 1, cur, out);
        cur.pop();
    }
}

impl Polyhedron {
    fn contains(&self, x: &[Q]) -> bool {
        let dot = |a: &[Q]| a.iter().zip(x).fold(Q::zero(), |s, (p, v)| s + p * v);
        self.le.iter().all(|(a, b)| dot(a) <= *b) && self.eq.iter().all(|(a, b)| dot(a) == *b)
    }

    /// All vertices, by solving every square subsystem of active constraints
    /// that contains the equalities.
    fn vertices(&self, n: usize) -> Vec<Vec<Q>> {
        let mut out = Vec::new();
        if self.eq.len() > n {
            // Only possible if some equalities are redundant; fall back to
            // treating them as two inequalities.
            let mut le = self.le.clone();
            for (a, b) in &self.eq {
                le.push((a.clone(), *b));
                le.push((a.iter().map(|v| -v).collect(), -b));
            }
            return Polyhedron { le, eq: Vec::new() }.vertices(n);
        }
        let need = n - self.eq.len();
        combinations(self.le.len(), need, 0, &mut Vec::new(), &mut |pick| {
            let mut m: Vec<Vec<Q>> = self.eq.iter().map(|(a, _)| a.clone()).collect();
            let mut r: Vec<Q> = self.eq.iter().map(|(_, b)| *b).collect();
            for &i in pick {
                m.push(self.le[i].0.clone());
                r.push(self.le[i].1);
            }
            if let Some(x) = solve_square(m, r) {
                if self.contains(&x) && !out.contains(&x) {
                    out.push(x);
                }
            }
        });
        out
    }
}

/// Exact LP classification by vertex enumeration. Requires integer data and
/// finite lower bounds (which makes the feasible region pointed).
pub fn lp_oracle(inst: &ProblemInstance) -> Verdict {
    let n = inst.variables.len();
    let dense = |coefs: &[(usize, f64)]| {
        let mut a = vec![Q::zero(); n];
        for &(j, v) in coefs {
            a[j] = q(v);
        }
        a
    };
    let mut le = Vec::new();
    let mut eq = Vec::new();
    let mut cone_le = Vec::new();
    let mut cone_eq = Vec::new();
    for r in &inst.rows {
        let a = dense(&r.coefficients);
        let neg: Vec<Q> = a.iter().map(|v| -v).collect();
        match r.relation {
            Relation::Le => {
                le.push((a.clone(), q(r.rhs)));
                cone_le.push((a, Q::zero()));
            }
            Relation::Ge => {
                le.push((neg.clone(), -q(r.rhs)));
                cone_le.push((neg, Q::zero()));
            }
            Relation::Eq => {
                eq.push((a.clone(), q(r.rhs)));
                cone_eq.push((a, Q::zero()));
            }
        }
    }
    let mut ones = vec![Q::zero(); n];
    for (j, v) in inst.variables.iter().enumerate() {
        assert!(v.lower.is_finite());
        let mut e = vec![Q::zero(); n];
        e[j] = Q::one();
        let neg_e: Vec<Q> = e.iter().map(|v| -v).collect();
        le.push((neg_e.clone(), -q(v.lower)));
        if v.upper.is_finite() {
            le.push((e.clone(), q(v.upper)));
            cone_eq.push((e, Q::zero()));
        } else {
            cone_le.push((neg_e, Q::zero()));
            ones[j] = Q::one();
        }
    }
    let sign = match inst.objective.sense {
        Sense::Maximize => Q::one(),
        Sense::Minimize => -Q::one(),
    };
    let c: Vec<Q> = dense(&inst.objective.coefficients).into_iter().map(|v| v * sign).collect();
    let value = |x: &[Q]| c.iter().zip(x).fold(Q::zero(), |s, (p, v)| s + p * v);

    let verts = Polyhedron { le, eq }.vertices(n);
    if verts.is_empty() {
        return Verdict::Infeasible;
    }
    if ones.iter().any(|v| !v.is_zero()) {
        cone_eq.push((ones, Q::one()));
        let dirs = Polyhedron { le: cone_le, eq: cone_eq }.vertices(n);
        if dirs.iter().any(|d| value(d).is_positive()) {
            return Verdict::Unbounded;
        }
    }
    let best = verts.iter().map(|x| value(x)).max().unwrap();
    Verdict::Optimal(to_f64(&(best * sign)) + inst.objective.constant)
}

/// Exhaustive search over the integer box; all variables must be integral
/// with finite bounds and all data integral.
pub fn milp_oracle(inst: &ProblemInstance) -> Option<f64> {
    let n = inst.variables.len();
    let lo: Vec<i64> = inst.variables.iter().map(|v| v.lower.ceil() as i64).collect();
    let hi: Vec<i64> = inst.variables.iter().map(|v| v.upper.floor() as i64).collect();
    if lo.iter().zip(&hi).any(|(l, h)| l > h) {
        return None;
    }
    let mut x = lo.clone();
    let mut best: Option<i64> = None;
    let dot = |coefs: &[(usize, f64)], x: &[i64]| coefs.iter().map(|&(j, a)| a as i64 * x[j]).sum::<i64>();
    loop {
        let ok = inst.rows.iter().all(|r| {
            let lhs = dot(&r.coefficients, &x);
            let rhs = r.rhs as i64;
            match r.relation {
                Relation::Le => lhs <= rhs,
                Relation::Ge => lhs >= rhs,
                Relation::Eq => lhs == rhs,
            }
        });
        if ok {
            let v = dot(&inst.objective.coefficients, &x);
            best = Some(match (best, inst.objective.sense) {
                (None, _) => v,
                (Some(b), Sense::Maximize) => b.max(v),
                (Some(b), Sense::Minimize) => b.min(v),
            });
        }
        let mut k = 0;
        loop {
            if k == n {
                return best.map(|b| b as f64 + inst.objective.constant);
            }
            if x[k] < hi[k] {
                x[k] += 1;
                break;
            }
            x[k] = lo[k];
            k += 1;
        }
    }
}

/// Random integer-data instance: `n` variables, up to `max_rows` rows, bounds
/// inside `[0, 10]`. With `open_upper`, each upper bound is dropped with
/// probability 1/4.
pub fn random_instance(rng: &mut impl Rng, max_vars: usize, max_rows: usize, integrality: Integrality, open_upper: bool) -> ProblemInstance {
    let n = rng.gen_range(1..=max_vars);
    let m = rng.gen_range(0..=max_rows);
    let variables = (0..n)
        .map(|j| {
            let lower = rng.gen_range(0..=4) as f64;
            let mut upper = rng.gen_range(lower as i32..=10) as f64;
            if open_upper && rng.gen_bool(0.25) {
                upper = f64::INFINITY;
            }
            Variable {
                name: format!("x[{j}]"),
                lower,
                upper,
                integrality,
            }
        })
        .collect();
    let sparse = |rng: &mut dyn rand::RngCore| -> Vec<(usize, f64)> {
        (0..n)
            .filter_map(|j| {
                let a = rng.gen_range(-5..=5);
                (a != 0).then_some((j, a as f64))
            })
            .collect()
    };
    let rows = (0..m)
        .map(|i| {
            let relation = match rng.gen_range(0..20) {
                0..=11 => Relation::Le,
                12..=16 => Relation::Ge,
                _ => Relation::Eq,
            };
            Row {
                name: format!("r{i}"),
                coefficients: sparse(rng),
                relation,
                rhs: rng.gen_range(-5..=25) as f64,
            }
        })
        .collect();
    let sense = if rng.gen_bool(0.5) { Sense::Maximize } else { Sense::Minimize };
    ProblemInstance {
        variables,
        objective: LinearObjective {
            name: "obj".into(),
            sense,
            coefficients: sparse(rng),
            constant: 0.0,
        },
        tiebreak_objectives: Vec::new(),
        rows,
        var_provenance: Vec::new(),
        row_provenance: Vec::new(),
    }
}

pub fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-6_f64.max(1e-6 * b.abs())
}

/// Re-checks LP optimality from the reported row multipliers: dual signs must
/// match the row senses and the Lagrangian bound over the variable box must
/// equal the primal objective.
pub fn dual_bound(inst: &ProblemInstance, duals: &[f64]) -> Option<f64> {
    let max = inst.objective.sense == Sense::Maximize;
    let mut reduced = vec![0.0; inst.variables.len()];
    for &(j, c) in &inst.objective.coefficients {
        reduced[j] = c;
    }
    let mut bound = inst.objective.constant;
    for (r, &y) in inst.rows.iter().zip(duals) {
        let sign_ok = match (r.relation, max) {
            (Relation::Le, true) | (Relation::Ge, false) => y >= -1e-9,
            (Relation::Ge, true) | (Relation::Le, false) => y <= 1e-9,
            (Relation::Eq, _) => true,
        };
        if !sign_ok {
            return None;
        }
        bound += y * r.rhs;
        for &(j, a) in &r.coefficients {
            reduced[j] -= y * a;
        }
    }
    for (v, d) in inst.variables.iter().zip(reduced) {
        let d = if d.abs() <= 1e-9 { 0.0 } else { d };
        let pick = match (d > 0.0, max) {
            _ if d == 0.0 => continue,
            (true, true) | (false, false) => v.upper,
            _ => v.lower,
        };
        if !pick.is_finite() {
            return None;
        }
        bound += d * pick;
    }
    Some(bound)
}

/// Minimal record with the given final outcome.
pub fn record(
    problem: &str,
    variant: &str,
    outcome: optspec_core::pipeline::ExecOutcome,
    ground_truth: f64,
) -> optspec_core::pipeline::RunRecord {
    use optspec_core::pipeline::{RunRecord, SpecAttempt};
    RunRecord {
        problem_id: problem.into(),
        variant: variant.into(),
        model: "m".into(),
        run_index: 0,
        target: optspec_core::llm::Target::Ampl,
        structured: false,
        refinement: false,
        inline_data: false,
        max_refinements: 5,
        ground_truth: Some(ground_truth),
        structured_problem: None,
        structure_error: None,
        spec_history: vec![SpecAttempt {
            spec: String::new(),
            outcome: outcome.clone(),
            feedback: String::new(),
        }],
        objective: outcome.objective(),
        final_outcome: outcome,
        refinement_count: 0,
        gateway_error: None,
        wall_time_ms: 0,
        prompt_transcript: Vec::new(),
    }
}

/// Random outcome: solved with an objective in -3..=3, a compile error, or
/// a runtime error.
pub fn random_outcome(rng: &mut impl Rng) -> optspec_core::pipeline::ExecOutcome {
    use optspec_core::pipeline::ExecOutcome;
    match rng.gen_range(0..3) {
        0 => ExecOutcome::Solved {
            objective: rng.gen_range(-3..=3) as f64,
            assignment: Default::default(),
        },
        1 => ExecOutcome::CompileError {
            kind: "syntax".into(),
            message: String::new(),
        },
        _ => ExecOutcome::RuntimeError {
            kind: optspec_core::SolveErrorKind::Infeasible,
            message: String::new(),
        },
    }
}

/// P(U_x <= observed) under the null, by trying every way to label
/// `xs.len()` of the pooled values as the first sample. U counts pairs
/// directly instead of using ranks.
pub fn u_oracle(xs: &[f64], ys: &[f64]) -> f64 {
    let u = |a: &[f64], b: &[f64]| -> f64 {
        let mut s = 0.0;
        for x in a {
            for y in b {
                if x > y {
                    s += 1.0;
                } else if x == y {
                    s += 0.5;
                }
            }
        }
        s
    };
    let observed = u(xs, ys);
    let pooled: Vec<f64> = xs.iter().chain(ys).copied().collect();
    let n = pooled.len();
    let (mut hits, mut total) = (0u64, 0u64);
    for mask in 0u32..(1 << n) {
        if mask.count_ones() as usize != xs.len() {
            continue;
        }
        let (a, b): (Vec<(usize, f64)>, Vec<(usize, f64)>) =
            pooled.iter().copied().enumerate().partition(|(i, _)| mask & (1 << i) != 0);
        let a: Vec<f64> = a.into_iter().map(|p| p.1).collect();
        let b: Vec<f64> = b.into_iter().map(|p| p.1).collect();
        total += 1;
        if u(&a, &b) <= observed {
            hits += 1;
        }
    }
    hits as f64 / total as f64
}
