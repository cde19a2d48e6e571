//! Dense two-phase tableau simplex over bounded variables.
//!
//! Variables are shifted or mirrored onto `x' >= 0` (free variables are
//! split), finite upper bounds become extra `<=` rows, every row gets a
//! non-negative right-hand side, and `>=`/`=` rows receive one artificial
//! column each. Pivoting uses Bland's rule throughout.

use crate::instance::{Relation, Row};

use super::SolverParams;

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum LpStatus {
    Optimal { x: Vec<f64>, duals: Vec<f64> },
    Infeasible,
    /// Original variable ids that move along an improving ray.
    Unbounded { ray: Vec<usize> },
    IterationLimit,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct LpRun {
    pub status: LpStatus,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy)]
enum ColumnMap {
    /// `x = offset + x'`
    Shift { col: usize, offset: f64 },
    /// `x = offset - x'`
    Mirror { col: usize, offset: f64 },
    /// `x = x+ - x-`
    Split { pos: usize, neg: usize },
}

#[derive(Debug, Clone, Copy)]
enum Origin {
    Instance(usize),
    Bound,
}

struct StdRow {
    coefs: Vec<(usize, f64)>,
    relation: Relation,
    rhs: f64,
    origin: Origin,
    sign: f64,
}

struct Tableau {
    width: usize,
    cells: Vec<f64>,
    basis: Vec<usize>,
    unit_col: Vec<usize>,
    origin: Vec<Origin>,
    sign: Vec<f64>,
}

impl Tableau {
    fn rows(&self) -> usize {
        self.basis.len()
    }

    fn rhs_col(&self) -> usize {
        self.width - 1
    }

    fn at(&self, i: usize, j: usize) -> f64 {
        self.cells[i * self.width + j]
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.cells[i * self.width..(i + 1) * self.width]
    }

    fn pivot(&mut self, r: usize, c: usize, d: Option<&mut [f64]>) {
        let w = self.width;
        let p = self.at(r, c);
        for v in &mut self.cells[r * w..(r + 1) * w] {
            *v /= p;
        }
        let pivot_row: Vec<f64> = self.row(r).to_vec();
        for i in 0..self.rows() {
            if i == r {
                continue;
            }
            let f = self.at(i, c);
            if f != 0.0 {
                for (v, pr) in self.cells[i * w..(i + 1) * w].iter_mut().zip(&pivot_row) {
                    *v -= f * pr;
                }
                self.cells[i * w + c] = 0.0;
            }
        }
        if let Some(d) = d {
            let f = d[c];
            if f != 0.0 {
                for (v, pr) in d.iter_mut().zip(&pivot_row) {
                    *v -= f * pr;
                }
                d[c] = 0.0;
            }
        }
        self.basis[r] = c;
    }

    fn remove_row(&mut self, r: usize) {
        let w = self.width;
        self.cells.drain(r * w..(r + 1) * w);
        self.basis.remove(r);
        self.unit_col.remove(r);
        self.origin.remove(r);
        self.sign.remove(r);
    }
}

enum Stop {
    Unbounded(usize),
    Limit,
}

/// Runs Bland's-rule pivots on reduced-cost row `d` (minimization) until no
/// allowed column has reduced cost below `-pivot_tol`.
fn iterate(
    t: &mut Tableau,
    d: &mut [f64],
    allowed: &[bool],
    params: &SolverParams,
    iterations: &mut usize,
) -> Result<(), Stop> {
    let rhs = t.rhs_col();
    loop {
        let Some(enter) = (0..rhs).find(|&j| allowed[j] && d[j] < -params.pivot_tol) else {
            return Ok(());
        };
        let mut leave: Option<(usize, f64)> = None;
        for i in 0..t.rows() {
            let a = t.at(i, enter);
            if a <= params.pivot_tol {
                continue;
            }
            let ratio = t.at(i, rhs).max(0.0) / a;
            leave = match leave {
                None => Some((i, ratio)),
                Some((bi, br)) => {
                    let tie = (ratio - br).abs() <= 1e-12 * br.abs().max(1.0);
                    if (tie && t.basis[i] < t.basis[bi]) || (!tie && ratio < br) {
                        Some((i, ratio))
                    } else {
                        Some((bi, br))
                    }
                }
            };
        }
        let Some((r, _)) = leave else {
            return Err(Stop::Unbounded(enter));
        };
        if *iterations >= params.max_simplex_iterations {
            return Err(Stop::Limit);
        }
        t.pivot(r, enter, Some(d));
        *iterations += 1;
    }
}

/// Minimizes `cost · x` over `rows` and the box `lower <= x <= upper`.
///
/// `duals` in an optimal result are simplex multipliers for `rows` in the
/// minimization sense: `cost_j - sum_i duals_i * a_ij` is the reduced cost of
/// variable `j`.
pub(crate) fn minimize(lower: &[f64], upper: &[f64], rows: &[Row], cost: &[f64], params: &SolverParams) -> LpRun {
    let n = lower.len();
    let mut maps = Vec::with_capacity(n);
    let mut ncols = 0;
    let mut std_rows: Vec<StdRow> = Vec::new();
    let mut bound_rows = Vec::new();
    for j in 0..n {
        let (l, u) = (lower[j], upper[j]);
        let m = if l.is_finite() {
            let col = ncols;
            ncols += 1;
            if u.is_finite() {
                bound_rows.push((col, u - l));
            }
            ColumnMap::Shift { col, offset: l }
        } else if u.is_finite() {
            let col = ncols;
            ncols += 1;
            ColumnMap::Mirror { col, offset: u }
        } else {
            let pos = ncols;
            ncols += 2;
            ColumnMap::Split { pos, neg: pos + 1 }
        };
        maps.push(m);
    }
    for (i, row) in rows.iter().enumerate() {
        let mut coefs = Vec::with_capacity(row.coefficients.len());
        let mut rhs = row.rhs;
        for &(j, a) in &row.coefficients {
            match maps[j] {
                ColumnMap::Shift { col, offset } => {
                    coefs.push((col, a));
                    rhs -= a * offset;
                }
                ColumnMap::Mirror { col, offset } => {
                    coefs.push((col, -a));
                    rhs -= a * offset;
                }
                ColumnMap::Split { pos, neg } => {
                    coefs.push((pos, a));
                    coefs.push((neg, -a));
                }
            }
        }
        std_rows.push(StdRow {
            coefs,
            relation: row.relation,
            rhs,
            origin: Origin::Instance(i),
            sign: 1.0,
        });
    }
    for (col, width) in bound_rows {
        std_rows.push(StdRow {
            coefs: vec![(col, 1.0)],
            relation: Relation::Le,
            rhs: width,
            origin: Origin::Bound,
            sign: 1.0,
        });
    }
    for r in &mut std_rows {
        if r.rhs < 0.0 {
            r.rhs = -r.rhs;
            for c in &mut r.coefs {
                c.1 = -c.1;
            }
            r.relation = match r.relation {
                Relation::Le => Relation::Ge,
                Relation::Ge => Relation::Le,
                Relation::Eq => Relation::Eq,
            };
            r.sign = -1.0;
        }
    }

    // Column layout: structural, then per row slack/surplus and artificial.
    let mut next = ncols;
    let mut extra = Vec::with_capacity(std_rows.len());
    let mut is_artificial = vec![false; ncols];
    for r in &std_rows {
        match r.relation {
            Relation::Le => {
                extra.push((Some((next, 1.0)), None));
                is_artificial.push(false);
                next += 1;
            }
            Relation::Ge => {
                extra.push((Some((next, -1.0)), Some(next + 1)));
                is_artificial.extend([false, true]);
                next += 2;
            }
            Relation::Eq => {
                extra.push((None, Some(next)));
                is_artificial.push(true);
                next += 1;
            }
        }
    }
    let total = next;
    let width = total + 1;
    let m = std_rows.len();
    let mut t = Tableau {
        width,
        cells: vec![0.0; m * width],
        basis: Vec::with_capacity(m),
        unit_col: Vec::with_capacity(m),
        origin: Vec::with_capacity(m),
        sign: Vec::with_capacity(m),
    };
    for (i, (r, (slack, art))) in std_rows.iter().zip(&extra).enumerate() {
        for &(c, a) in &r.coefs {
            t.cells[i * width + c] += a;
        }
        if let Some((c, s)) = slack {
            t.cells[i * width + c] = *s;
        }
        if let Some(c) = art {
            t.cells[i * width + c] = 1.0;
        }
        t.cells[i * width + total] = r.rhs;
        let unit = match (slack, art) {
            (_, Some(a)) => *a,
            (Some((s, _)), None) => *s,
            (None, None) => unreachable!("every row has a slack or an artificial"),
        };
        t.basis.push(unit);
        t.unit_col.push(unit);
        t.origin.push(r.origin);
        t.sign.push(r.sign);
    }

    let mut iterations = 0;
    if is_artificial.iter().any(|&a| a) {
        let mut d = vec![0.0; width];
        for (j, dj) in d.iter_mut().enumerate().take(total) {
            if is_artificial[j] {
                *dj = 1.0;
            }
        }
        for i in 0..m {
            if is_artificial[t.basis[i]] {
                for j in 0..width {
                    d[j] -= t.at(i, j);
                }
            }
        }
        let allowed = vec![true; total];
        match iterate(&mut t, &mut d, &allowed, params, &mut iterations) {
            Ok(()) => {}
            Err(Stop::Limit) => {
                return LpRun {
                    status: LpStatus::IterationLimit,
                    iterations,
                }
            }
            Err(Stop::Unbounded(_)) => unreachable!("phase one objective is bounded below by zero"),
        }
        let infeasibility: f64 = (0..t.rows())
            .filter(|&i| is_artificial[t.basis[i]])
            .map(|i| t.at(i, total))
            .sum();
        if infeasibility > params.feasibility_tol {
            return LpRun {
                status: LpStatus::Infeasible,
                iterations,
            };
        }
        let mut i = 0;
        while i < t.rows() {
            if is_artificial[t.basis[i]] {
                match (0..total).find(|&j| !is_artificial[j] && t.at(i, j).abs() > params.pivot_tol) {
                    Some(j) => {
                        t.pivot(i, j, None);
                        i += 1;
                    }
                    None => t.remove_row(i),
                }
            } else {
                i += 1;
            }
        }
    }

    let mut col_cost = vec![0.0; total];
    for (j, map) in maps.iter().enumerate() {
        match *map {
            ColumnMap::Shift { col, .. } => col_cost[col] = cost[j],
            ColumnMap::Mirror { col, .. } => col_cost[col] = -cost[j],
            ColumnMap::Split { pos, neg } => {
                col_cost[pos] = cost[j];
                col_cost[neg] = -cost[j];
            }
        }
    }
    let mut d = vec![0.0; width];
    d[..total].copy_from_slice(&col_cost);
    for i in 0..t.rows() {
        let cb = col_cost[t.basis[i]];
        if cb != 0.0 {
            for j in 0..width {
                d[j] -= cb * t.at(i, j);
            }
        }
    }
    let allowed: Vec<bool> = is_artificial.iter().map(|a| !a).collect();
    match iterate(&mut t, &mut d, &allowed, params, &mut iterations) {
        Ok(()) => {}
        Err(Stop::Limit) => {
            return LpRun {
                status: LpStatus::IterationLimit,
                iterations,
            }
        }
        Err(Stop::Unbounded(enter)) => {
            let mut dir = vec![0.0; total];
            dir[enter] = 1.0;
            for i in 0..t.rows() {
                dir[t.basis[i]] = -t.at(i, enter);
            }
            let ray = maps
                .iter()
                .enumerate()
                .filter(|(_, map)| {
                    let v = match **map {
                        ColumnMap::Shift { col, .. } => dir[col],
                        ColumnMap::Mirror { col, .. } => -dir[col],
                        ColumnMap::Split { pos, neg } => dir[pos] - dir[neg],
                    };
                    v.abs() > params.pivot_tol
                })
                .map(|(j, _)| j)
                .collect();
            return LpRun {
                status: LpStatus::Unbounded { ray },
                iterations,
            };
        }
    }

    let mut xs = vec![0.0; total];
    for i in 0..t.rows() {
        xs[t.basis[i]] = t.at(i, total);
    }
    let x = maps
        .iter()
        .map(|map| {
            let v = match *map {
                ColumnMap::Shift { col, offset } => offset + xs[col],
                ColumnMap::Mirror { col, offset } => offset - xs[col],
                ColumnMap::Split { pos, neg } => xs[pos] - xs[neg],
            };
            v + 0.0
        })
        .collect();
    let mut duals = vec![0.0; rows.len()];
    for i in 0..t.rows() {
        if let Origin::Instance(k) = t.origin[i] {
            duals[k] = -d[t.unit_col[i]] * t.sign[i] + 0.0;
        }
    }
    LpRun {
        status: LpStatus::Optimal { x, duals },
        iterations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(coefs: &[(usize, f64)], relation: Relation, rhs: f64) -> Row {
        Row {
            name: String::new(),
            coefficients: coefs.to_vec(),
            relation,
            rhs,
        }
    }

    #[test]
    fn bounded_box_maximization() {
        // max 3x + 2y  <=>  min -3x - 2y ; x + y <= 4, x <= 3
        let run = minimize(
            &[0.0, 0.0],
            &[3.0, f64::INFINITY],
            &[row(&[(0, 1.0), (1, 1.0)], Relation::Le, 4.0)],
            &[-3.0, -2.0],
            &SolverParams::default(),
        );
        let LpStatus::Optimal { x, duals } = run.status else { panic!("{run:?}") };
        assert_eq!(x, vec![3.0, 1.0]);
        assert_eq!(duals, vec![-2.0]);
    }

    #[test]
    fn free_and_mirrored_variables() {
        // min x - y ; x free, y <= 2 (no lower), x >= -5 via row, x - y = 1
        let run = minimize(
            &[f64::NEG_INFINITY, f64::NEG_INFINITY],
            &[f64::INFINITY, 2.0],
            &[row(&[(0, 1.0)], Relation::Ge, -5.0), row(&[(0, 1.0), (1, -1.0)], Relation::Eq, 1.0)],
            &[1.0, 0.0],
            &SolverParams::default(),
        );
        let LpStatus::Optimal { x, .. } = run.status else { panic!("{run:?}") };
        assert_eq!(x, vec![-5.0, -6.0]);
    }

    #[test]
    fn detects_infeasible_and_unbounded() {
        let p = SolverParams::default();
        let inf = minimize(
            &[0.0],
            &[f64::INFINITY],
            &[row(&[(0, 1.0)], Relation::Ge, 5.0), row(&[(0, 1.0)], Relation::Le, 3.0)],
            &[0.0],
            &p,
        );
        assert_eq!(inf.status, LpStatus::Infeasible);
        let unb = minimize(&[0.0, 0.0], &[f64::INFINITY, 1.0], &[], &[-1.0, 0.0], &p);
        assert_eq!(unb.status, LpStatus::Unbounded { ray: vec![0] });
    }

    #[test]
    fn redundant_equalities_are_dropped() {
        let p = SolverParams::default();
        let run = minimize(
            &[0.0, 0.0],
            &[f64::INFINITY, f64::INFINITY],
            &[
                row(&[(0, 1.0), (1, 1.0)], Relation::Eq, 2.0),
                row(&[(0, 2.0), (1, 2.0)], Relation::Eq, 4.0),
            ],
            &[1.0, 2.0],
            &p,
        );
        let LpStatus::Optimal { x, .. } = run.status else { panic!("{run:?}") };
        assert_eq!(x, vec![2.0, 0.0]);
    }

    #[test]
    fn iteration_limit() {
        let p = SolverParams {
            max_simplex_iterations: 1,
            ..SolverParams::default()
        };
        let run = minimize(
            &[0.0, 0.0],
            &[5.0, 5.0],
            &[
                row(&[(0, 1.0), (1, 1.0)], Relation::Ge, 3.0),
                row(&[(0, 1.0), (1, -1.0)], Relation::Ge, 1.0),
            ],
            &[1.0, 1.0],
            &p,
        );
        assert_eq!(run.status, LpStatus::IterationLimit);
    }
}
