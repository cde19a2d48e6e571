mod common;

use common::{close, dual_bound, fixture_path, lp_oracle, milp_oracle, random_instance, Verdict};
use optspec_core::ampl::{instantiate, parse_data, parse_model, ObjectivePolicy};
use optspec_core::instance::{Integrality, ProblemInstance};
use optspec_core::{render_diagnostics, solve_lp, solve_milp, SolveErrorKind, SolveOutcome, SolverParams};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn production(policy: &str, dat_edit: impl Fn(String) -> String, mod_edit: impl Fn(String) -> String) -> ProblemInstance {
    let model = mod_edit(std::fs::read_to_string(fixture_path("production/production.mod")).unwrap());
    let data = dat_edit(std::fs::read_to_string(fixture_path("production/production.dat")).unwrap());
    instantiate(&parse_model(&model).unwrap(), &parse_data(&data).unwrap(), &policy.parse::<ObjectivePolicy>().unwrap()).unwrap()
}

fn assert_feasible(inst: &ProblemInstance, out: &SolveOutcome) {
    let s = out.solution().unwrap();
    let x = s.values();
    for r in &inst.rows {
        assert!(r.violation(&x) <= 1e-6, "{} violated by {}", r.name, r.violation(&x));
    }
    for (v, &val) in inst.variables.iter().zip(&x) {
        assert!(val >= v.lower - 1e-6 && val <= v.upper + 1e-6, "{} = {val}", v.name);
        if v.is_integral() {
            assert!((val - val.round()).abs() <= 1e-6);
        }
    }
    let expect = inst.objective.evaluate(&x);
    assert!((s.objective - expect).abs() <= 1e-6 * expect.abs().max(1.0));
}

#[test]
fn production_revenue_optimum() {
    let inst = production("single", |d| d, |m| m[..m.find("minimize Hold_Cost").unwrap()].to_string());
    assert_eq!(inst.tiebreak_objectives.len(), 0);
    let out = solve_lp(&inst, &SolverParams::default());
    assert_feasible(&inst, &out);
    assert!((out.solution().unwrap().objective - 140.0).abs() < 1e-9);
    assert_eq!(lp_oracle(&inst), Verdict::Optimal(140.0));
}

#[test]
fn production_weighted_optimum() {
    let inst = production("weighted:Revenue=1,Hold_Cost=-1", |d| d, |m| m);
    let out = solve_milp(&inst, &SolverParams::default());
    assert_feasible(&inst, &out);
    let s = out.solution().unwrap();
    assert!((s.objective - 140.0).abs() < 1e-9);
    for (name, v) in [("x[A]", 9.5), ("x[B]", 3.0), ("y[R1]", 4.5), ("y[R2]", 5.5)] {
        assert!((s.assignment[name] - v).abs() < 1e-9, "{name}");
    }
}

#[test]
fn production_negative_budget_diagnostics() {
    let inst = production(
        "weighted:Revenue=1,Hold_Cost=-1",
        |d| d.replace("param budget := 10;", "param budget := -1;"),
        |m| m.replace("param budget >= 0;", "param budget;"),
    );
    let out = solve_milp(&inst, &SolverParams::default());
    assert_eq!(out.error().unwrap().kind, SolveErrorKind::Infeasible);
    let text = render_diagnostics(&out, &inst);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[..5], ["ERROR infeasible", "row Budget_Limit", "var y[R1]", "var y[R2]", "var y[R3]"]);
    assert_eq!(inst.row_provenance[inst.row_index("Budget_Limit").unwrap()].declaration, "Budget_Limit");
}

#[test]
fn continuous_dispatch_matches_lp() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..50 {
        let inst = random_instance(&mut rng, 4, 5, Integrality::Continuous, true);
        assert_eq!(solve_lp(&inst, &SolverParams::default()), solve_milp(&inst, &SolverParams::default()));
    }
}

#[test]
fn lp_with_open_bounds_matches_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut seen = [0; 3];
    for _ in 0..300 {
        let inst = random_instance(&mut rng, 4, 5, Integrality::Continuous, true);
        let out = solve_lp(&inst, &SolverParams::default());
        match (lp_oracle(&inst), &out) {
            (Verdict::Optimal(v), SolveOutcome::Solved(s)) => {
                seen[0] += 1;
                assert!(close(s.objective, v), "{} vs {v}: {inst:?}", s.objective);
                assert_feasible(&inst, &out);
            }
            (Verdict::Infeasible, SolveOutcome::RuntimeError(e)) if e.kind == SolveErrorKind::Infeasible => seen[1] += 1,
            (Verdict::Unbounded, SolveOutcome::RuntimeError(e)) if e.kind == SolveErrorKind::Unbounded => seen[2] += 1,
            (v, o) => panic!("oracle {v:?}, solver {o:?}: {inst:?}"),
        }
    }
    assert!(seen.iter().all(|&c| c > 10), "{seen:?}");
}

#[test]
fn lp_duals_certify_optimality() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut checked = 0;
    for _ in 0..200 {
        let inst = random_instance(&mut rng, 4, 5, Integrality::Continuous, false);
        if let SolveOutcome::Solved(s) = solve_lp(&inst, &SolverParams::default()) {
            let bound = dual_bound(&inst, &s.row_duals).expect("dual signs and finite bound");
            assert!(close(bound, s.objective), "{bound} vs {}", s.objective);
            checked += 1;
        }
    }
    assert!(checked > 50);
}

#[test]
fn milp_matches_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..150 {
        let inst = random_instance(&mut rng, 3, 4, Integrality::Integer, false);
        let out = solve_milp(&inst, &SolverParams::default());
        match (milp_oracle(&inst), &out) {
            (Some(v), SolveOutcome::Solved(s)) => {
                assert_eq!(s.objective, v, "{inst:?}");
                assert_feasible(&inst, &out);
            }
            (None, SolveOutcome::RuntimeError(e)) => assert_eq!(e.kind, SolveErrorKind::Infeasible),
            (v, o) => panic!("oracle {v:?}, solver {o:?}: {inst:?}"),
        }
    }
}

#[test]
fn solves_are_deterministic() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..30 {
        let inst = random_instance(&mut rng, 3, 4, Integrality::Integer, false);
        let p = SolverParams::default();
        assert_eq!(solve_milp(&inst, &p), solve_milp(&inst, &p));
    }
}

proptest! {
    #[test]
    fn positive_objective_scaling(seed in any::<u64>(), scale in 1u32..50) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inst = random_instance(&mut rng, 4, 5, Integrality::Continuous, false);
        let mut scaled = inst.clone();
        for c in &mut scaled.objective.coefficients {
            c.1 *= scale as f64;
        }
        let p = SolverParams::default();
        match (solve_lp(&inst, &p), solve_lp(&scaled, &p)) {
            (SolveOutcome::Solved(a), SolveOutcome::Solved(b)) => {
                prop_assert_eq!(a.values(), b.values());
                prop_assert!(close(b.objective, a.objective * scale as f64));
            }
            (SolveOutcome::RuntimeError(a), SolveOutcome::RuntimeError(b)) => prop_assert_eq!(a.kind, b.kind),
            (a, b) => prop_assert!(false, "{:?} vs {:?}", a, b),
        }
    }
}
