//! Dense bounded-variable simplex for small linear programs.
//!
//! Solves `min c·x  s.t.  A_le x <= b_le,  A_eq x = b_eq,  l <= x <= u` with
//! finite bounds. Bounds are handled natively (nonbasic variables sit at
//! either bound), so the working tableau has one row per constraint and one
//! column per variable, slack and artificial. Rows and costs are equilibrated
//! before pivoting; the returned solution and dual certificate are in the
//! caller's units.
//!
//! Pricing is Dantzig's rule, switching to Bland's rule after a run of
//! degenerate pivots so the method cannot cycle.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::LpError;

pub const DEFAULT_TOL: f64 = 1e-9;

const PIVOT_TOL: f64 = 1e-9;
const DJ_TOL: f64 = 1e-11;
const DEGENERATE_STREAK: usize = 50;

/// A linear program over box-bounded variables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearProgram {
    pub costs: Vec<f64>,
    pub ineq_rows: Vec<Vec<f64>>,
    pub ineq_rhs: Vec<f64>,
    pub eq_rows: Vec<Vec<f64>>,
    pub eq_rhs: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl LinearProgram {
    /// A program with the given costs and every variable boxed in [0, 1].
    pub fn unit_box(costs: Vec<f64>) -> Self {
        let n = costs.len();
        Self {
            costs,
            ineq_rows: Vec::new(),
            ineq_rhs: Vec::new(),
            eq_rows: Vec::new(),
            eq_rhs: Vec::new(),
            lower: vec![0.0; n],
            upper: vec![1.0; n],
        }
    }

    pub fn n_vars(&self) -> usize {
        self.costs.len()
    }

    pub fn n_constraints(&self) -> usize {
        self.ineq_rows.len() + self.eq_rows.len()
    }

    pub fn add_le(&mut self, row: Vec<f64>, rhs: f64) {
        self.ineq_rows.push(row);
        self.ineq_rhs.push(rhs);
    }

    pub fn add_eq(&mut self, row: Vec<f64>, rhs: f64) {
        self.eq_rows.push(row);
        self.eq_rhs.push(rhs);
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        dot(&self.costs, x)
    }

    pub fn validate(&self) -> Result<(), LpError> {
        let n = self.n_vars();
        let bad = |m: String| Err(LpError::Malformed(m));
        if self.lower.len() != n || self.upper.len() != n {
            return bad(format!("bounds have length {}/{}, expected {n}", self.lower.len(), self.upper.len()));
        }
        if self.ineq_rows.len() != self.ineq_rhs.len() || self.eq_rows.len() != self.eq_rhs.len() {
            return bad("row/rhs count mismatch".into());
        }
        for (k, row) in self.ineq_rows.iter().chain(&self.eq_rows).enumerate() {
            if row.len() != n {
                return bad(format!("row {k} has {} entries, expected {n}", row.len()));
            }
            if row.iter().any(|v| !v.is_finite()) {
                return bad(format!("row {k} has a non-finite coefficient"));
            }
        }
        if self.ineq_rhs.iter().chain(&self.eq_rhs).any(|v| !v.is_finite()) {
            return bad("non-finite right-hand side".into());
        }
        if self.costs.iter().any(|v| !v.is_finite()) {
            return bad("non-finite cost".into());
        }
        for j in 0..n {
            let (l, u) = (self.lower[j], self.upper[j]);
            if !(l.is_finite() && u.is_finite() && l <= u) {
                return bad(format!("variable {j} has bounds [{l}, {u}]"));
            }
        }
        Ok(())
    }

    /// Largest constraint or bound violation of `x`, each row measured after
    /// scaling it to unit max coefficient.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for (row, &b) in self.ineq_rows.iter().zip(&self.ineq_rhs) {
            let s = row_scale(row);
            worst = worst.max((dot(row, x) - b) * s);
        }
        for (row, &b) in self.eq_rows.iter().zip(&self.eq_rhs) {
            let s = row_scale(row);
            worst = worst.max(((dot(row, x) - b) * s).abs());
        }
        for (j, &v) in x.iter().enumerate() {
            worst = worst.max(self.lower[j] - v).max(v - self.upper[j]);
        }
        worst
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LpStatus {
    Optimal,
    Infeasible,
}

/// Lagrange multipliers proving optimality of a primal solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualCertificate {
    /// Multipliers of the `<=` rows (all non-positive at optimality).
    pub ineq_duals: Vec<f64>,
    pub eq_duals: Vec<f64>,
    /// `c - A^T y`, recomputed from the original data.
    pub reduced_costs: Vec<f64>,
    pub objective: f64,
}

impl DualCertificate {
    /// Builds the certificate implied by multipliers `y`, evaluating the dual
    /// function `b·y + Σ min(d_j l_j, d_j u_j)`.
    pub fn from_multipliers(lp: &LinearProgram, ineq_duals: Vec<f64>, eq_duals: Vec<f64>) -> Self {
        let mut reduced_costs = lp.costs.clone();
        for (row, y) in lp.ineq_rows.iter().zip(&ineq_duals).chain(lp.eq_rows.iter().zip(&eq_duals)) {
            for (d, a) in reduced_costs.iter_mut().zip(row) {
                *d -= y * a;
            }
        }
        let mut objective = dot(&lp.ineq_rhs, &ineq_duals) + dot(&lp.eq_rhs, &eq_duals);
        for (j, &d) in reduced_costs.iter().enumerate() {
            objective += if d >= 0.0 { d * lp.lower[j] } else { d * lp.upper[j] };
        }
        Self {
            ineq_duals,
            eq_duals,
            reduced_costs,
            objective,
        }
    }

    /// Largest positive `<=` multiplier; zero for a dual-feasible certificate.
    pub fn sign_violation(&self) -> f64 {
        self.ineq_duals.iter().fold(0.0f64, |m, &y| m.max(y))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpSolution {
    pub status: LpStatus,
    pub x: Vec<f64>,
    pub objective: f64,
    pub dual: Option<DualCertificate>,
    pub iterations: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tableau: Option<String>,
}

impl LpSolution {
    /// `|primal - dual| / max(1, |primal|)`.
    pub fn relative_gap(&self) -> Option<f64> {
        self.dual
            .as_ref()
            .map(|d| (self.objective - d.objective).abs() / self.objective.abs().max(1.0))
    }
}

/// Anything that can solve the CCCP subproblems.
pub trait LpBackend: Sync {
    fn solve(&self, lp: &LinearProgram) -> Result<LpSolution, LpError>;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DenseSimplex {
    pub tol: f64,
    /// Attach a plain-text dump of the final tableau to every solution.
    pub dump_tableau: bool,
}

impl Default for DenseSimplex {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOL,
            dump_tableau: false,
        }
    }
}

impl LpBackend for DenseSimplex {
    fn solve(&self, lp: &LinearProgram) -> Result<LpSolution, LpError> {
        solve_with(lp, self.tol, self.dump_tableau)
    }
}

/// Solves `lp` to a vertex optimum and verifies primal feasibility and the
/// duality gap against `tol`.
pub fn solve_lp(lp: &LinearProgram, tol: f64) -> Result<LpSolution, LpError> {
    solve_with(lp, tol, false)
}

fn solve_with(lp: &LinearProgram, tol: f64, dump: bool) -> Result<LpSolution, LpError> {
    lp.validate()?;
    let mut t = Tableau::build(lp);
    let limit = 50 * (lp.n_vars() + lp.n_constraints()).max(1);

    let phase1_costs: Vec<f64> = (0..t.ncols).map(|j| if t.is_artificial(j) { 1.0 } else { 0.0 }).collect();
    t.set_costs(phase1_costs);
    t.run(limit)?;
    t.refresh_values();
    let infeasibility: f64 = t.artificial_total();
    if infeasibility > tol * (1.0 + t.rhs_norm()) {
        let iterations = t.iterations;
        return Ok(LpSolution {
            status: LpStatus::Infeasible,
            x: t.structural_values(),
            objective: f64::NAN,
            dual: None,
            iterations,
            tableau: dump.then(|| t.dump()),
        });
    }
    t.expel_artificials();

    let mut phase2 = vec![0.0; t.ncols];
    for j in 0..t.n {
        phase2[j] = lp.costs[j] * t.cost_scale;
    }
    t.set_costs(phase2);
    t.run(limit)?;
    t.refresh_values();
    t.recompute_reduced_costs();

    let x = t.structural_values();
    let objective = lp.objective(&x);
    let (ineq_duals, eq_duals) = t.duals();
    let dual = DualCertificate::from_multipliers(lp, ineq_duals, eq_duals);

    let viol = lp.max_violation(&x);
    if viol > tol * (1.0 + t.rhs_norm()) {
        return Err(LpError::Verification(format!("primal violation {viol:e}")));
    }
    let cost_norm = 1.0 / t.cost_scale;
    if dual.sign_violation() > tol * cost_norm.max(1.0) {
        return Err(LpError::Verification(format!("dual sign violation {:e}", dual.sign_violation())));
    }
    let sol = LpSolution {
        status: LpStatus::Optimal,
        x,
        objective,
        dual: Some(dual),
        iterations: t.iterations,
        tableau: dump.then(|| t.dump()),
    };
    let gap = sol.relative_gap().unwrap_or(0.0);
    if gap > tol {
        return Err(LpError::Verification(format!("duality gap {gap:e}")));
    }
    Ok(sol)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn row_scale(row: &[f64]) -> f64 {
    let m = row.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if m > 0.0 {
        1.0 / m
    } else {
        1.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ColKind {
    Structural,
    Slack,
    Artificial,
}

/// Full dense tableau `B^{-1} [A | I_slack | ±I_art]`, row-scaled.
struct Tableau {
    m: usize,
    n: usize,
    ncols: usize,
    n_ineq: usize,
    a: Vec<f64>,
    rhs: Vec<f64>,
    beta: Vec<f64>,
    basis: Vec<usize>,
    basic_row: Vec<Option<usize>>,
    at_upper: Vec<bool>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    kind: Vec<ColKind>,
    /// Column whose original data is `sign * e_r`, one per row.
    id_col: Vec<(usize, f64)>,
    /// Original (scaled) data of every column, kept for value refreshes.
    orig: Vec<f64>,
    costs: Vec<f64>,
    dj: Vec<f64>,
    cost_scale: f64,
    row_scales: Vec<f64>,
    iterations: usize,
}

impl Tableau {
    fn build(lp: &LinearProgram) -> Self {
        let n = lp.n_vars();
        let n_ineq = lp.ineq_rows.len();
        let m = n_ineq + lp.eq_rows.len();

        let mut rows: Vec<Vec<f64>> = Vec::with_capacity(m);
        let mut rhs = Vec::with_capacity(m);
        let mut row_scales = Vec::with_capacity(m);
        for (row, &b) in lp.ineq_rows.iter().zip(&lp.ineq_rhs).chain(lp.eq_rows.iter().zip(&lp.eq_rhs)) {
            let s = row_scale(row);
            rows.push(row.iter().map(|v| v * s).collect());
            rhs.push(b * s);
            row_scales.push(s);
        }
        let cmax = lp.costs.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let cost_scale = if cmax > 0.0 { 1.0 / cmax } else { 1.0 };

        // residual with every structural at its lower bound
        let residual: Vec<f64> = rows
            .iter()
            .zip(&rhs)
            .map(|(row, b)| b - dot(row, &lp.lower))
            .collect();
        let needs_art: Vec<bool> = (0..m).map(|r| r >= n_ineq || residual[r] < 0.0).collect();
        let n_art = needs_art.iter().filter(|&&b| b).count();
        let ncols = n + n_ineq + n_art;

        let mut kind = vec![ColKind::Structural; n];
        kind.extend(std::iter::repeat_n(ColKind::Slack, n_ineq));
        kind.extend(std::iter::repeat_n(ColKind::Artificial, n_art));
        let mut lower = lp.lower.clone();
        let mut upper = lp.upper.clone();
        lower.extend(std::iter::repeat_n(0.0, n_ineq + n_art));
        upper.extend(std::iter::repeat_n(f64::INFINITY, n_ineq + n_art));

        let mut orig = vec![0.0; m * ncols];
        let mut basis = vec![0; m];
        let mut beta = vec![0.0; m];
        let mut id_col = vec![(0, 1.0); m];
        let mut next_art = n + n_ineq;
        for r in 0..m {
            let base = r * ncols;
            orig[base..base + n].copy_from_slice(&rows[r]);
            if r < n_ineq {
                orig[base + n + r] = 1.0;
                id_col[r] = (n + r, 1.0);
            }
            if needs_art[r] {
                let sign = if residual[r] >= 0.0 { 1.0 } else { -1.0 };
                orig[base + next_art] = sign;
                if r >= n_ineq {
                    id_col[r] = (next_art, sign);
                }
                basis[r] = next_art;
                beta[r] = residual[r].abs();
                next_art += 1;
            } else {
                basis[r] = n + r;
                beta[r] = residual[r];
            }
        }
        // B is diagonal with entries ±1, so B^{-1} A is a sign flip per row.
        let mut a = orig.clone();
        for r in 0..m {
            let coef = orig[r * ncols + basis[r]];
            if coef < 0.0 {
                for v in &mut a[r * ncols..(r + 1) * ncols] {
                    *v = -*v;
                }
            }
        }
        let mut basic_row = vec![None; ncols];
        for (r, &b) in basis.iter().enumerate() {
            basic_row[b] = Some(r);
        }
        Self {
            m,
            n,
            ncols,
            n_ineq,
            a,
            rhs,
            beta,
            basis,
            basic_row,
            at_upper: vec![false; ncols],
            lower,
            upper,
            kind,
            id_col,
            orig,
            costs: vec![0.0; ncols],
            dj: vec![0.0; ncols],
            cost_scale,
            row_scales,
            iterations: 0,
        }
    }

    fn is_artificial(&self, j: usize) -> bool {
        self.kind[j] == ColKind::Artificial
    }

    fn rhs_norm(&self) -> f64 {
        self.rhs.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    fn value(&self, j: usize) -> f64 {
        match self.basic_row[j] {
            Some(r) => self.beta[r],
            None if self.at_upper[j] => self.upper[j],
            None => self.lower[j],
        }
    }

    fn structural_values(&self) -> Vec<f64> {
        (0..self.n)
            .map(|j| self.value(j).clamp(self.lower[j], self.upper[j]))
            .collect()
    }

    fn artificial_total(&self) -> f64 {
        (0..self.ncols)
            .filter(|&j| self.is_artificial(j))
            .map(|j| self.value(j).max(0.0))
            .sum()
    }

    fn set_costs(&mut self, costs: Vec<f64>) {
        self.costs = costs;
        self.recompute_reduced_costs();
    }

    fn recompute_reduced_costs(&mut self) {
        let ncols = self.ncols;
        self.dj.copy_from_slice(&self.costs);
        for r in 0..self.m {
            let cb = self.costs[self.basis[r]];
            if cb != 0.0 {
                let row = &self.a[r * ncols..(r + 1) * ncols];
                for (d, v) in self.dj.iter_mut().zip(row) {
                    *d -= cb * v;
                }
            }
        }
        for &b in &self.basis {
            self.dj[b] = 0.0;
        }
    }

    /// Recomputes basic values as `B^{-1} (b - N x_N)` from the original data.
    fn refresh_values(&mut self) {
        let ncols = self.ncols;
        let mut reduced_rhs = self.rhs.clone();
        for j in 0..ncols {
            if self.basic_row[j].is_some() {
                continue;
            }
            let v = self.value(j);
            if v != 0.0 {
                for (r, b) in reduced_rhs.iter_mut().enumerate() {
                    *b -= self.orig[r * ncols + j] * v;
                }
            }
        }
        let mut beta = vec![0.0; self.m];
        for (k, &bk) in reduced_rhs.iter().enumerate() {
            if bk == 0.0 {
                continue;
            }
            let (col, sign) = self.id_col[k];
            for (r, out) in beta.iter_mut().enumerate() {
                *out += self.a[r * ncols + col] * sign * bk;
            }
        }
        self.beta = beta;
    }

    fn run(&mut self, limit: usize) -> Result<(), LpError> {
        let mut degenerate_run = 0usize;
        loop {
            if self.iterations >= limit {
                return Err(LpError::NumericalBreakdown { limit });
            }
            let bland = degenerate_run >= DEGENERATE_STREAK;
            let Some((j, dir)) = self.price(bland) else {
                return Ok(());
            };
            let step = self.ratio_test(j, dir, bland)?;
            self.iterations += 1;
            if step.theta <= 1e-12 {
                degenerate_run += 1;
            } else {
                degenerate_run = 0;
            }
            self.apply(j, dir, step);
        }
    }

    fn price(&self, bland: bool) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64, f64)> = None;
        for j in 0..self.ncols {
            if self.basic_row[j].is_some() || self.lower[j] == self.upper[j] {
                continue;
            }
            let d = self.dj[j];
            let dir = if !self.at_upper[j] && d < -DJ_TOL {
                1.0
            } else if self.at_upper[j] && d > DJ_TOL {
                -1.0
            } else {
                continue;
            };
            if bland {
                return Some((j, dir));
            }
            if best.is_none_or(|(_, _, m)| d.abs() > m) {
                best = Some((j, dir, d.abs()));
            }
        }
        best.map(|(j, dir, _)| (j, dir))
    }

    fn ratio_test(&self, j: usize, dir: f64, bland: bool) -> Result<Step, LpError> {
        let ncols = self.ncols;
        let mut theta = self.upper[j] - self.lower[j];
        let mut leave: Option<(usize, f64)> = None;
        for r in 0..self.m {
            let alpha = self.a[r * ncols + j] * dir;
            let b = self.basis[r];
            let t = if alpha > PIVOT_TOL {
                (self.beta[r] - self.lower[b]) / alpha
            } else if alpha < -PIVOT_TOL && self.upper[b].is_finite() {
                (self.upper[b] - self.beta[r]) / -alpha
            } else {
                continue;
            };
            let t = t.max(0.0);
            let better = match leave {
                None => t < theta,
                Some(_) if t < theta - 1e-12 => true,
                Some((lr, la)) if t <= theta + 1e-12 => {
                    if bland {
                        b < self.basis[lr]
                    } else {
                        alpha.abs() > la.abs()
                    }
                }
                Some(_) => false,
            };
            if better {
                theta = t.min(theta);
                leave = Some((r, alpha));
            }
        }
        if !theta.is_finite() {
            return Err(LpError::UnexpectedUnbounded);
        }
        Ok(Step { theta, leave })
    }

    fn apply(&mut self, j: usize, dir: f64, step: Step) {
        let ncols = self.ncols;
        let Step { theta, leave } = step;
        if theta > 0.0 {
            for r in 0..self.m {
                let col = self.a[r * ncols + j];
                if col != 0.0 {
                    self.beta[r] -= dir * theta * col;
                }
            }
        }
        let Some((r, alpha)) = leave else {
            self.at_upper[j] = !self.at_upper[j];
            return;
        };
        let entering_value = if self.at_upper[j] {
            self.upper[j] - theta
        } else {
            self.lower[j] + theta
        };
        let leaving = self.basis[r];
        self.at_upper[leaving] = alpha < 0.0;
        self.basic_row[leaving] = None;
        self.at_upper[j] = false;
        self.basis[r] = j;
        self.basic_row[j] = Some(r);
        self.beta[r] = entering_value;
        self.pivot(r, j);
    }

    fn pivot(&mut self, r: usize, j: usize) {
        let ncols = self.ncols;
        let p = self.a[r * ncols + j];
        let (before, rest) = self.a.split_at_mut(r * ncols);
        let (prow, after) = rest.split_at_mut(ncols);
        for v in prow.iter_mut() {
            *v /= p;
        }
        prow[j] = 1.0;
        let eliminate = |row: &mut [f64]| {
            let f = row[j];
            if f != 0.0 {
                for (v, pv) in row.iter_mut().zip(prow.iter()) {
                    *v -= f * pv;
                }
                row[j] = 0.0;
            }
        };
        before.chunks_mut(ncols).for_each(eliminate);
        after.chunks_mut(ncols).for_each(eliminate);
        let f = self.dj[j];
        if f != 0.0 {
            for (d, pv) in self.dj.iter_mut().zip(prow.iter()) {
                *d -= f * pv;
            }
            self.dj[j] = 0.0;
        }
    }

    /// Pivots zero-valued artificials out of the basis and fixes all
    /// artificials at zero.
    fn expel_artificials(&mut self) {
        let ncols = self.ncols;
        for r in 0..self.m {
            let b = self.basis[r];
            if !self.is_artificial(b) {
                continue;
            }
            let mut best: Option<(usize, f64)> = None;
            for j in 0..ncols {
                if self.is_artificial(j) || self.basic_row[j].is_some() {
                    continue;
                }
                let v = self.a[r * ncols + j].abs();
                if v > PIVOT_TOL && best.is_none_or(|(_, m)| v > m) {
                    best = Some((j, v));
                }
            }
            if let Some((j, _)) = best {
                let value = self.value(j);
                self.basic_row[b] = None;
                self.at_upper[b] = false;
                self.basis[r] = j;
                self.basic_row[j] = Some(r);
                self.at_upper[j] = false;
                self.beta[r] = value;
                self.pivot(r, j);
            }
        }
        for j in 0..ncols {
            if self.is_artificial(j) {
                self.upper[j] = 0.0;
            }
        }
        self.refresh_values();
    }

    /// Row multipliers in the caller's units.
    fn duals(&self) -> (Vec<f64>, Vec<f64>) {
        let mut y = vec![0.0; self.m];
        for (r, yr) in y.iter_mut().enumerate() {
            let (col, sign) = self.id_col[r];
            // d_col = 0 - sign * y_r in scaled units
            let scaled = -sign * self.dj[col];
            *yr = scaled * self.row_scales[r] / self.cost_scale;
        }
        let eq = y.split_off(self.n_ineq);
        (y, eq)
    }

    fn dump(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# rows={} cols={} iterations={}", self.m, self.ncols, self.iterations);
        let _ = writeln!(s, "# basis: {:?}", self.basis);
        let _ = write!(s, "dj:");
        for v in &self.dj {
            let _ = write!(s, " {v:.6e}");
        }
        let _ = writeln!(s);
        for r in 0..self.m {
            let _ = write!(s, "r{r} [x{} = {:.6e}]:", self.basis[r], self.beta[r]);
            for v in &self.a[r * self.ncols..(r + 1) * self.ncols] {
                let _ = write!(s, " {v:.6e}");
            }
            let _ = writeln!(s);
        }
        s
    }
}

#[derive(Debug, Clone, Copy)]
struct Step {
    theta: f64,
    leave: Option<(usize, f64)>,
}
