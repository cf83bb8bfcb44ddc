//! Dense revised simplex for small and medium linear programs.
//!
//! Two phases with artificial variables, an explicit basis inverse updated by
//! elementary row operations and refactorized periodically. Entering columns
//! are chosen by Dantzig's rule; after a run of degenerate pivots the solver
//! switches to Bland's rule until the objective moves again.

use thiserror::Error;

pub const TOLERANCE: f64 = 1e-7;
const REFACTOR_EVERY: usize = 64;
const DEGENERATE_STREAK: usize = 25;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowSense {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    /// Sparse coefficients `(variable, value)`.
    pub coefficients: Vec<(usize, f64)>,
    pub sense: RowSense,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub sense: Sense,
    pub objective: Vec<f64>,
    pub constraints: Vec<Constraint>,
    /// `false` marks a free variable.
    pub nonnegative: Vec<bool>,
}

#[derive(Debug, Error, PartialEq)]
pub enum LpError {
    #[error("constraint {row} references variable {var} but the program has {vars} variables")]
    VariableOutOfRange { row: usize, var: usize, vars: usize },
    #[error("{found} nonnegativity flags for {vars} variables")]
    FlagCount { found: usize, vars: usize },
    #[error("non-finite coefficient in constraint {0}")]
    NonFinite(usize),
    #[error("simplex did not converge within {0} iterations")]
    IterationLimit(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Objective value in the program's own sense (meaningful when optimal).
    pub value: f64,
    pub primal: Vec<f64>,
    /// One dual per constraint with `value = Σ rhs_i · dual_i` at optimality.
    pub duals: Vec<f64>,
    pub iterations: usize,
}

impl LinearProgram {
    /// All variables nonnegative, no constraints yet.
    pub fn new(sense: Sense, objective: Vec<f64>) -> Self {
        let vars = objective.len();
        LinearProgram { sense, objective, constraints: Vec::new(), nonnegative: vec![true; vars] }
    }

    pub fn variables(&self) -> usize {
        self.objective.len()
    }

    pub fn add_constraint(&mut self, coefficients: Vec<(usize, f64)>, sense: RowSense, rhs: f64) {
        self.constraints.push(Constraint { coefficients, sense, rhs });
    }

    pub fn validate(&self) -> Result<(), LpError> {
        let vars = self.variables();
        if self.nonnegative.len() != vars {
            return Err(LpError::FlagCount { found: self.nonnegative.len(), vars });
        }
        for (row, c) in self.constraints.iter().enumerate() {
            if !c.rhs.is_finite() {
                return Err(LpError::NonFinite(row));
            }
            for &(var, v) in &c.coefficients {
                if var >= vars {
                    return Err(LpError::VariableOutOfRange { row, var, vars });
                }
                if !v.is_finite() {
                    return Err(LpError::NonFinite(row));
                }
            }
        }
        Ok(())
    }

    /// Objective of `x` in the program's sense.
    pub fn evaluate(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    /// Largest violation of any constraint or sign restriction by `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for c in &self.constraints {
            let lhs: f64 = c.coefficients.iter().map(|&(j, v)| v * x[j]).sum();
            let gap = match c.sense {
                RowSense::Le => lhs - c.rhs,
                RowSense::Ge => c.rhs - lhs,
                RowSense::Eq => (lhs - c.rhs).abs(),
            };
            worst = worst.max(gap);
        }
        for (j, &nn) in self.nonnegative.iter().enumerate() {
            if nn {
                worst = worst.max(-x[j]);
            }
        }
        worst
    }
}

/// Standard form `min c·x, A x = b, x >= 0, b >= 0` with sparse columns.
struct Standard {
    rows: usize,
    columns: Vec<Vec<(usize, f64)>>,
    cost: Vec<f64>,
    rhs: Vec<f64>,
    /// Index of the first artificial column.
    artificial_from: usize,
    /// Sign applied to each original row while normalizing `b >= 0`.
    row_sign: Vec<f64>,
    /// `(positive part, negative part)` column of each original variable.
    var_columns: Vec<(usize, Option<usize>)>,
    initial_basis: Vec<usize>,
}

fn standardize(lp: &LinearProgram) -> Standard {
    let rows = lp.constraints.len();
    let flip = if lp.sense == Sense::Maximize { -1.0 } else { 1.0 };
    let mut columns: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut cost = Vec::new();
    let mut var_columns = Vec::with_capacity(lp.variables());
    let mut row_sign = vec![1.0; rows];
    let mut senses = Vec::with_capacity(rows);
    let mut rhs = vec![0.0; rows];
    for (i, c) in lp.constraints.iter().enumerate() {
        let (sign, sense) = if c.rhs < 0.0 {
            let s = match c.sense {
                RowSense::Le => RowSense::Ge,
                RowSense::Ge => RowSense::Le,
                RowSense::Eq => RowSense::Eq,
            };
            (-1.0, s)
        } else {
            (1.0, c.sense)
        };
        row_sign[i] = sign;
        senses.push(sense);
        rhs[i] = sign * c.rhs;
    }
    let mut by_var: Vec<Vec<(usize, f64)>> = vec![Vec::new(); lp.variables()];
    for (i, c) in lp.constraints.iter().enumerate() {
        for &(j, v) in &c.coefficients {
            if v != 0.0 {
                by_var[j].push((i, row_sign[i] * v));
            }
        }
    }
    for (j, col) in by_var.into_iter().enumerate() {
        let pos = columns.len();
        let negated: Vec<(usize, f64)> = col.iter().map(|&(i, v)| (i, -v)).collect();
        columns.push(col);
        cost.push(flip * lp.objective[j]);
        let neg = if lp.nonnegative[j] {
            None
        } else {
            columns.push(negated);
            cost.push(-flip * lp.objective[j]);
            Some(pos + 1)
        };
        var_columns.push((pos, neg));
    }
    let mut initial_basis = vec![usize::MAX; rows];
    for (i, sense) in senses.iter().enumerate() {
        match sense {
            RowSense::Le => {
                initial_basis[i] = columns.len();
                columns.push(vec![(i, 1.0)]);
                cost.push(0.0);
            }
            RowSense::Ge => {
                columns.push(vec![(i, -1.0)]);
                cost.push(0.0);
            }
            RowSense::Eq => {}
        }
    }
    let artificial_from = columns.len();
    for i in 0..rows {
        if initial_basis[i] == usize::MAX {
            initial_basis[i] = columns.len();
            columns.push(vec![(i, 1.0)]);
            cost.push(0.0);
        }
    }
    Standard { rows, columns, cost, rhs, artificial_from, row_sign, var_columns, initial_basis }
}

enum PhaseEnd {
    Optimal,
    Unbounded,
}

struct Simplex<'a> {
    sf: &'a Standard,
    basis: Vec<usize>,
    in_basis: Vec<bool>,
    binv: Vec<Vec<f64>>,
    x_basic: Vec<f64>,
    iterations: usize,
    limit: usize,
    since_refactor: usize,
}

impl<'a> Simplex<'a> {
    fn new(sf: &'a Standard) -> Self {
        let rows = sf.rows;
        let mut in_basis = vec![false; sf.columns.len()];
        for &b in &sf.initial_basis {
            in_basis[b] = true;
        }
        let mut binv = vec![vec![0.0; rows]; rows];
        for (i, row) in binv.iter_mut().enumerate() {
            row[i] = 1.0;
        }
        Simplex {
            sf,
            basis: sf.initial_basis.clone(),
            in_basis,
            binv,
            x_basic: sf.rhs.clone(),
            iterations: 0,
            limit: 20_000 + 50 * (rows + sf.columns.len()),
            since_refactor: 0,
        }
    }

    /// Rebuilds the basis inverse by Gauss-Jordan elimination.
    fn refactor(&mut self) {
        let r = self.sf.rows;
        let mut a = vec![vec![0.0; 2 * r]; r];
        for (pos, &col) in self.basis.iter().enumerate() {
            for &(i, v) in &self.sf.columns[col] {
                a[i][pos] = v;
            }
        }
        for (i, row) in a.iter_mut().enumerate() {
            row[r + i] = 1.0;
        }
        for c in 0..r {
            let p = (c..r)
                .max_by(|&x, &y| a[x][c].abs().total_cmp(&a[y][c].abs()))
                .expect("non-empty range");
            a.swap(c, p);
            let pivot = a[c][c];
            if pivot.abs() < 1e-12 {
                // singular drift; keep the product-form inverse
                return;
            }
            for v in a[c].iter_mut() {
                *v /= pivot;
            }
            let pivot_row = a[c].clone();
            for (i, row) in a.iter_mut().enumerate() {
                if i != c {
                    let f = row[c];
                    if f != 0.0 {
                        for (v, p) in row.iter_mut().zip(&pivot_row) {
                            *v -= f * p;
                        }
                    }
                }
            }
        }
        // a = [I | B^-1] with rows in basis-position order
        for (pos, row) in a.into_iter().enumerate() {
            self.binv[pos] = row[r..].to_vec();
        }
        for pos in 0..r {
            self.x_basic[pos] =
                (0..r).map(|i| self.binv[pos][i] * self.sf.rhs[i]).sum::<f64>();
        }
        self.since_refactor = 0;
    }

    fn duals(&self, cost: &[f64]) -> Vec<f64> {
        let r = self.sf.rows;
        let mut y = vec![0.0; r];
        for (pos, &col) in self.basis.iter().enumerate() {
            let cb = cost[col];
            if cb != 0.0 {
                for (yi, b) in y.iter_mut().zip(&self.binv[pos]) {
                    *yi += cb * b;
                }
            }
        }
        y
    }

    fn column_direction(&self, col: usize) -> Vec<f64> {
        let mut d = vec![0.0; self.sf.rows];
        for &(i, v) in &self.sf.columns[col] {
            for (pos, dv) in d.iter_mut().enumerate() {
                *dv += self.binv[pos][i] * v;
            }
        }
        d
    }

    fn pivot(&mut self, leave: usize, enter: usize, d: &[f64]) {
        let r = self.sf.rows;
        let step = self.x_basic[leave] / d[leave];
        for pos in 0..r {
            if pos != leave {
                self.x_basic[pos] -= step * d[pos];
            }
        }
        self.x_basic[leave] = step;
        let pivot_row: Vec<f64> = self.binv[leave].iter().map(|v| v / d[leave]).collect();
        for pos in 0..r {
            if pos != leave && d[pos] != 0.0 {
                let f = d[pos];
                for (v, p) in self.binv[pos].iter_mut().zip(&pivot_row) {
                    *v -= f * p;
                }
            }
        }
        self.binv[leave] = pivot_row;
        self.in_basis[self.basis[leave]] = false;
        self.in_basis[enter] = true;
        self.basis[leave] = enter;
        self.since_refactor += 1;
        if self.since_refactor >= REFACTOR_EVERY {
            self.refactor();
        }
    }

    /// Minimizes `cost` over columns `< allowed`, starting from the current basis.
    fn run(&mut self, cost: &[f64], allowed: usize) -> Result<PhaseEnd, LpError> {
        let mut degenerate = 0usize;
        loop {
            if self.iterations >= self.limit {
                return Err(LpError::IterationLimit(self.limit));
            }
            let y = self.duals(cost);
            let bland = degenerate >= DEGENERATE_STREAK;
            let mut enter = None;
            let mut best = -TOLERANCE;
            for j in 0..allowed {
                if self.in_basis[j] {
                    continue;
                }
                let rc = cost[j] - self.sf.columns[j].iter().map(|&(i, v)| y[i] * v).sum::<f64>();
                if rc < best {
                    enter = Some(j);
                    if bland {
                        break;
                    }
                    best = rc;
                }
            }
            let Some(q) = enter else {
                return Ok(PhaseEnd::Optimal);
            };
            let d = self.column_direction(q);
            let mut leave: Option<usize> = None;
            let mut ratio = f64::INFINITY;
            for (pos, &dv) in d.iter().enumerate() {
                let is_artificial = self.basis[pos] >= self.sf.artificial_from;
                // a basic artificial in phase two is fixed at zero
                let blocks = dv > TOLERANCE || (is_artificial && allowed <= self.sf.artificial_from && dv.abs() > TOLERANCE);
                if !blocks {
                    continue;
                }
                let t = if dv > 0.0 { self.x_basic[pos].max(0.0) / dv } else { 0.0 };
                let better = match leave {
                    None => true,
                    Some(l) => {
                        if t < ratio - 1e-12 {
                            true
                        } else if t <= ratio + 1e-12 {
                            if bland {
                                self.basis[pos] < self.basis[l]
                            } else {
                                dv.abs() > d[l].abs()
                            }
                        } else {
                            false
                        }
                    }
                };
                if better {
                    leave = Some(pos);
                    ratio = t;
                }
            }
            let Some(p) = leave else {
                return Ok(PhaseEnd::Unbounded);
            };
            if ratio <= 1e-12 {
                degenerate += 1;
            } else {
                degenerate = 0;
            }
            self.iterations += 1;
            if d[p] < 0.0 {
                // leaving artificial at zero: the step length is zero
                self.x_basic[p] = 0.0;
            }
            self.pivot(p, q, &d);
        }
    }

    /// Pivots basic artificials out on any usable structural column.
    fn drive_out_artificials(&mut self) {
        for pos in 0..self.sf.rows {
            if self.basis[pos] < self.sf.artificial_from {
                continue;
            }
            let row = self.binv[pos].clone();
            let candidate = (0..self.sf.artificial_from).find(|&j| {
                !self.in_basis[j]
                    && self.sf.columns[j].iter().map(|&(i, v)| row[i] * v).sum::<f64>().abs() > 1e-9
            });
            if let Some(q) = candidate {
                let d = self.column_direction(q);
                self.x_basic[pos] = 0.0;
                self.pivot(pos, q, &d);
            }
        }
    }
}

/// Solves `lp`. Construction errors are reported before any pivoting.
pub fn lp_solve(lp: &LinearProgram) -> Result<LpSolution, LpError> {
    lp.validate()?;
    let sf = standardize(lp);
    let vars = lp.variables();
    let rows = sf.rows;
    let mut simplex = Simplex::new(&sf);

    let needs_phase_one = sf.initial_basis.iter().any(|&b| b >= sf.artificial_from);
    if needs_phase_one {
        let phase_one: Vec<f64> =
            (0..sf.columns.len()).map(|j| if j >= sf.artificial_from { 1.0 } else { 0.0 }).collect();
        simplex.run(&phase_one, sf.columns.len())?;
        simplex.refactor();
        let infeasibility: f64 = simplex
            .basis
            .iter()
            .zip(&simplex.x_basic)
            .filter(|(&b, _)| b >= sf.artificial_from)
            .map(|(_, &x)| x.max(0.0))
            .sum();
        let scale = 1.0 + sf.rhs.iter().fold(0.0f64, |a, &b| a.max(b));
        if infeasibility > TOLERANCE * scale {
            return Ok(LpSolution {
                status: LpStatus::Infeasible,
                value: f64::NAN,
                primal: vec![0.0; vars],
                duals: vec![0.0; rows],
                iterations: simplex.iterations,
            });
        }
        simplex.drive_out_artificials();
    }

    let end = simplex.run(&sf.cost, sf.artificial_from)?;
    simplex.refactor();
    let mut x = vec![0.0; sf.columns.len()];
    for (pos, &b) in simplex.basis.iter().enumerate() {
        x[b] = simplex.x_basic[pos].max(0.0);
    }
    let primal: Vec<f64> = sf
        .var_columns
        .iter()
        .map(|&(p, n)| x[p] - n.map_or(0.0, |n| x[n]))
        .collect();
    let status = match end {
        PhaseEnd::Optimal => LpStatus::Optimal,
        PhaseEnd::Unbounded => LpStatus::Unbounded,
    };
    let flip = if lp.sense == Sense::Maximize { -1.0 } else { 1.0 };
    let y = simplex.duals(&sf.cost);
    let duals: Vec<f64> = y.iter().zip(&sf.row_sign).map(|(v, s)| flip * v * s).collect();
    let value = match status {
        LpStatus::Optimal => lp.evaluate(&primal),
        LpStatus::Unbounded => {
            if lp.sense == Sense::Maximize {
                f64::INFINITY
            } else {
                f64::NEG_INFINITY
            }
        }
        LpStatus::Infeasible => unreachable!("handled after phase one"),
    };
    Ok(LpSolution { status, value, primal, duals, iterations: simplex.iterations })
}
