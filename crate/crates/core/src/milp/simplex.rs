//! Bounded-variable primal simplex on a dense full tableau.
//!
//! Phase 1 drives bound violations of the basic variables to zero with the
//! composite (infeasibility-sum) objective; phase 2 optimizes the true
//! objective. Pricing is by steepest reduced cost with an automatic switch
//! to Bland's least-index rule after a run of degenerate pivots, which
//! guarantees termination. Bound flips of nonbasic variables are handled
//! without basis changes.
//!
//! The same tableau object supports bound changes followed by
//! re-optimization, which is what makes branch-and-bound dives cheap.

/// Standardized LP: `min cᵀx` s.t. `a x + s = b` with per-column bounds,
/// slack column `n + i` belonging to row `i`.
#[derive(Debug, Clone)]
pub struct DenseLp {
    pub m: usize,
    pub n: usize,
    /// Row-major `m x n` structural coefficients (slacks implicit).
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    /// Objective over all `n + m` columns (slack cost 0).
    pub obj: Vec<f64>,
    pub lb: Vec<f64>,
    pub ub: Vec<f64>,
}

impl DenseLp {
    pub fn total_cols(&self) -> usize {
        self.n + self.m
    }

    fn coef(&self, row: usize, col: usize) -> f64 {
        if col < self.n {
            self.a[row * self.n + col]
        } else if col - self.n == row {
            1.0
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VStat {
    Basic,
    Lower,
    Upper,
    /// Nonbasic free column pinned at value 0.
    Free,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterLimit,
}

const PIVOT_TOL: f64 = 1e-9;
const PRICE_TOL: f64 = 1e-9;
const FEAS_TOL: f64 = 1e-8;
const DEGEN_SWITCH: usize = 60;

pub struct Simplex {
    pub lp: DenseLp,
    /// Dense tableau `b⁻¹ [a | i]`, row-major `m x (n + m)`.
    tab: Vec<f64>,
    /// Basic column per row.
    basis: Vec<usize>,
    stat: Vec<VStat>,
    /// Values of basic variables per row.
    xb: Vec<f64>,
    /// Scratch copy of the pivot row.
    scratch: Vec<f64>,
    pub iterations: usize,
    iter_limit: usize,
}

impl Simplex {
    pub fn new(lp: DenseLp) -> Simplex {
        let m = lp.m;
        let total = lp.total_cols();
        let mut s = Simplex {
            lp,
            tab: vec![0.0; m * total],
            basis: (0..m).collect(),
            stat: vec![VStat::Lower; total],
            xb: vec![0.0; m],
            scratch: vec![0.0; total],
            iterations: 0,
            iter_limit: 50_000 + 200 * (m + total),
        };
        s.reset_slack_basis();
        s
    }

    /// Slack basis with nonbasic structurals at their finite bound nearest
    /// zero (or free at zero).
    pub fn reset_slack_basis(&mut self) {
        let (m, n, total) = (self.lp.m, self.lp.n, self.lp.total_cols());
        for col in 0..n {
            self.stat[col] = initial_status(self.lp.lb[col], self.lp.ub[col]);
        }
        for i in 0..m {
            self.basis[i] = n + i;
            self.stat[n + i] = VStat::Basic;
        }
        for i in 0..m {
            for j in 0..total {
                self.tab[i * total + j] = self.lp.coef(i, j);
            }
        }
        self.recompute_xb();
    }

    fn nonbasic_value(&self, col: usize) -> f64 {
        match self.stat[col] {
            VStat::Lower => self.lp.lb[col],
            VStat::Upper => self.lp.ub[col],
            VStat::Free => 0.0,
            VStat::Basic => unreachable!("nonbasic_value on basic column"),
        }
    }

    /// Recompute basic values from the current tableau:
    /// `xb = b⁻¹ b - Σ_nonbasic tab_col * value`.
    fn recompute_xb(&mut self) {
        let (m, total) = (self.lp.m, self.lp.total_cols());
        // first: b⁻¹ b. We do not store b⁻¹ separately; derive from the fact
        // that tab columns of the initial identity (slacks) span b⁻¹.
        // b⁻¹ b = Σ_i b_i * (b⁻¹ e_i) = Σ_i b_i * tab[:, n + i].
        let n = self.lp.n;
        for i in 0..m {
            let mut acc = 0.0;
            for r in 0..m {
                acc += self.lp.b[r] * self.tab[i * total + n + r];
            }
            self.xb[i] = acc;
        }
        for col in 0..total {
            if self.stat[col] == VStat::Basic {
                continue;
            }
            let v = self.nonbasic_value(col);
            if v != 0.0 {
                for i in 0..m {
                    self.xb[i] -= self.tab[i * total + col] * v;
                }
            }
        }
    }

    /// Change one column's bounds (branching or model edit) and keep the
    /// tableau consistent. Nonbasic columns are snapped to a valid status.
    pub fn set_bounds(&mut self, col: usize, lb: f64, ub: f64) {
        self.lp.lb[col] = lb;
        self.lp.ub[col] = ub;
        if self.stat[col] == VStat::Basic {
            return;
        }
        let old = self.nonbasic_value(col);
        self.stat[col] = match self.stat[col] {
            VStat::Lower if lb.is_finite() => VStat::Lower,
            VStat::Upper if ub.is_finite() => VStat::Upper,
            _ => initial_status(lb, ub),
        };
        let newv = self.nonbasic_value(col);
        if newv != old {
            let (m, total) = (self.lp.m, self.lp.total_cols());
            for i in 0..m {
                self.xb[i] -= self.tab[i * total + col] * (newv - old);
            }
        }
    }

    pub fn statuses(&self) -> Vec<VStat> {
        self.stat.clone()
    }

    /// Rebuild the tableau for a previously seen basis (frontier jumps in
    /// branch-and-bound). Falls back to the slack basis when the stored
    /// basis is singular.
    pub fn restore_statuses(&mut self, stat: &[VStat]) {
        let (m, n, total) = (self.lp.m, self.lp.n, self.lp.total_cols());
        let basic_cols: Vec<usize> = (0..total).filter(|&c| stat[c] == VStat::Basic).collect();
        if basic_cols.len() != m {
            self.reset_slack_basis();
            return;
        }
        // dense basis matrix, column per basic variable
        let mut bmat = nalgebra::DMatrix::<f64>::zeros(m, m);
        for (k, &c) in basic_cols.iter().enumerate() {
            for i in 0..m {
                bmat[(i, k)] = self.lp.coef(i, c);
            }
        }
        let lu = bmat.lu();
        // b⁻¹ applied to every original column
        let mut rhs = nalgebra::DMatrix::<f64>::zeros(m, n);
        for i in 0..m {
            for j in 0..n {
                rhs[(i, j)] = self.lp.a[i * n + j];
            }
        }
        let Some(solved) = lu.solve(&rhs) else {
            self.reset_slack_basis();
            return;
        };
        let ident = nalgebra::DMatrix::<f64>::identity(m, m);
        let Some(binv) = lu.solve(&ident) else {
            self.reset_slack_basis();
            return;
        };
        self.stat.copy_from_slice(stat);
        for (k, &c) in basic_cols.iter().enumerate() {
            self.basis[k] = c;
        }
        // reorder rows so row i hosts basic_cols[i]; the permuted system is
        // expressed by writing tab rows in basis order
        for i in 0..m {
            for j in 0..n {
                self.tab[i * total + j] = solved[(i, j)];
            }
            for j in 0..m {
                self.tab[i * total + n + j] = binv[(i, j)];
            }
        }
        self.recompute_xb();
    }

    fn infeasibility(&self, row: usize) -> i8 {
        let col = self.basis[row];
        if self.xb[row] < self.lp.lb[col] - FEAS_TOL {
            -1
        } else if self.xb[row] > self.lp.ub[col] + FEAS_TOL {
            1
        } else {
            0
        }
    }

    fn total_infeasibility(&self) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.lp.m {
            let col = self.basis[i];
            acc += (self.lp.lb[col] - self.xb[i]).max(0.0);
            acc += (self.xb[i] - self.lp.ub[col]).max(0.0);
        }
        acc
    }

    /// Solve from the current state: phase 1 to feasibility, then phase 2.
    pub fn optimize(&mut self) -> LpStatus {
        match self.phase1() {
            LpStatus::Optimal => {}
            other => return other,
        }
        self.phase2()
    }

    fn phase1(&mut self) -> LpStatus {
        let total = self.lp.total_cols();
        let mut degen_run = 0usize;
        loop {
            if self.iterations >= self.iter_limit {
                return LpStatus::IterLimit;
            }
            let any_infeasible = (0..self.lp.m).any(|i| self.infeasibility(i) != 0);
            if !any_infeasible {
                return LpStatus::Optimal;
            }
            // gradient of the infeasibility sum wrt each nonbasic column
            let m = self.lp.m;
            let mut grad = vec![0.0f64; total];
            for i in 0..m {
                let s = self.infeasibility(i) as f64;
                if s != 0.0 {
                    let row = &self.tab[i * total..(i + 1) * total];
                    for (g, &t) in grad.iter_mut().zip(row) {
                        // d(infeasibility)/d(x_col): below-bound rows push
                        // +tab, above-bound rows push -tab
                        *g -= s * t;
                    }
                }
            }
            // note: moving x_col by +t changes xb_i by -t*tab, so the
            // infeasibility derivative is +tab for below rows (s = -1) and
            // -tab for above rows (s = +1): grad = Σ (-s) tab. (matches above)
            let bland = degen_run >= DEGEN_SWITCH;
            let Some((col, dir)) = self.pick_entering(&grad, bland) else {
                return LpStatus::Infeasible;
            };
            let before = self.total_infeasibility();
            if !self.step(col, dir, true) {
                // no blocking event in phase 1 means unbounded infeasibility
                // descent, which cannot happen; treat as numerical failure
                return LpStatus::Infeasible;
            }
            self.iterations += 1;
            let after = self.total_infeasibility();
            if before - after <= 1e-12 {
                degen_run += 1;
            } else {
                degen_run = 0;
            }
        }
    }

    fn phase2(&mut self) -> LpStatus {
        let total = self.lp.total_cols();
        let mut degen_run = 0usize;
        loop {
            if self.iterations >= self.iter_limit {
                return LpStatus::IterLimit;
            }
            // reduced costs d_j = c_j - c_b' tab_j
            let m = self.lp.m;
            let mut red = self.lp.obj.clone();
            for i in 0..m {
                let cb = self.lp.obj[self.basis[i]];
                if cb != 0.0 {
                    let row = &self.tab[i * total..(i + 1) * total];
                    for (d, &t) in red.iter_mut().zip(row) {
                        *d -= cb * t;
                    }
                }
            }
            let bland = degen_run >= DEGEN_SWITCH;
            let Some((col, dir)) = self.pick_entering_phase2(&red, bland) else {
                return LpStatus::Optimal;
            };
            let before: f64 = (0..m).map(|i| self.lp.obj[self.basis[i]] * self.xb[i]).sum();
            if !self.step(col, dir, false) {
                return LpStatus::Unbounded;
            }
            self.iterations += 1;
            let after: f64 = (0..m).map(|i| self.lp.obj[self.basis[i]] * self.xb[i]).sum();
            if before - after <= 1e-12 {
                degen_run += 1;
            } else {
                degen_run = 0;
            }
        }
    }

    /// Entering column for phase 1 given the infeasibility gradient.
    fn pick_entering(&self, grad: &[f64], bland: bool) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64, f64)> = None;
        for col in 0..grad.len() {
            let (eligible, dir) = match self.stat[col] {
                VStat::Basic => (false, 0.0),
                VStat::Lower => (grad[col] < -PRICE_TOL, 1.0),
                VStat::Upper => (grad[col] > PRICE_TOL, -1.0),
                VStat::Free => {
                    if grad[col] < -PRICE_TOL {
                        (true, 1.0)
                    } else {
                        (grad[col] > PRICE_TOL, -1.0)
                    }
                }
            };
            if !eligible {
                continue;
            }
            if bland {
                return Some((col, dir));
            }
            let score = grad[col].abs();
            if best.map_or(true, |(_, _, s)| score > s) {
                best = Some((col, dir, score));
            }
        }
        best.map(|(c, d, _)| (c, d))
    }

    fn pick_entering_phase2(&self, red: &[f64], bland: bool) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64, f64)> = None;
        for col in 0..red.len() {
            let (eligible, dir) = match self.stat[col] {
                VStat::Basic => (false, 0.0),
                VStat::Lower => (red[col] < -PRICE_TOL, 1.0),
                VStat::Upper => (red[col] > PRICE_TOL, -1.0),
                VStat::Free => {
                    if red[col] < -PRICE_TOL {
                        (true, 1.0)
                    } else {
                        (red[col] > PRICE_TOL, -1.0)
                    }
                }
            };
            if !eligible {
                continue;
            }
            if bland {
                return Some((col, dir));
            }
            let score = red[col].abs();
            if best.map_or(true, |(_, _, s)| score > s) {
                best = Some((col, dir, score));
            }
        }
        best.map(|(c, d, _)| (c, d))
    }

    /// Move the entering column in direction `dir` until a blocking event,
    /// then flip or pivot. In phase 1, infeasible basics block at their
    /// violated bound (where they become feasible); feasible basics block at
    /// either bound. Returns false when no event limits the step.
    fn step(&mut self, col: usize, dir: f64, phase1: bool) -> bool {
        let (m, total) = (self.lp.m, self.lp.total_cols());
        let entering_span =
            if self.lp.lb[col].is_finite() && self.lp.ub[col].is_finite() {
                self.lp.ub[col] - self.lp.lb[col]
            } else {
                f64::INFINITY
            };

        let mut t_best = entering_span;
        // event: None = entering bound flip; Some((row, to_upper))
        let mut event: Option<(usize, bool)> = None;
        for i in 0..m {
            let a = self.tab[i * total + col];
            if a.abs() <= PIVOT_TOL {
                continue;
            }
            let delta = -dir * a; // rate of change of xb_i
            let bcol = self.basis[i];
            let (lb, ub) = (self.lp.lb[bcol], self.lp.ub[bcol]);
            let infeas = if phase1 { self.infeasibility(i) } else { 0 };
            let (limit, to_upper) = if infeas < 0 {
                // below its lower bound: blocks when rising to lb
                if delta > 0.0 {
                    ((lb - self.xb[i]) / delta, false)
                } else {
                    continue;
                }
            } else if infeas > 0 {
                if delta < 0.0 {
                    ((ub - self.xb[i]) / delta, true)
                } else {
                    continue;
                }
            } else if delta > 0.0 {
                if ub.is_finite() {
                    ((ub - self.xb[i]) / delta, true)
                } else {
                    continue;
                }
            } else if lb.is_finite() {
                ((lb - self.xb[i]) / delta, false)
            } else {
                continue;
            };
            let limit = limit.max(0.0);
            if limit < t_best - 1e-12 {
                t_best = limit;
                event = Some((i, to_upper));
            } else if (limit - t_best).abs() <= 1e-12 {
                // deterministic tie break: prefer the pivot with the larger
                // |a| for stability, then the lower row index
                if let Some((prev, _)) = event {
                    let pa = self.tab[prev * total + col].abs();
                    if a.abs() > pa + 1e-12 {
                        event = Some((i, to_upper));
                    }
                } else if limit < entering_span {
                    event = Some((i, to_upper));
                }
            }
        }

        if t_best.is_infinite() {
            return false;
        }
        let t = t_best.max(0.0);

        // apply the move to basic values
        for i in 0..m {
            let a = self.tab[i * total + col];
            if a != 0.0 {
                self.xb[i] -= dir * t * a;
            }
        }

        match event {
            None => {
                // bound flip of the entering column
                self.stat[col] = match self.stat[col] {
                    VStat::Lower => VStat::Upper,
                    VStat::Upper => VStat::Lower,
                    s => s,
                };
            }
            Some((row, to_upper)) => {
                let leaving = self.basis[row];
                let enter_val = self.nonbasic_value(col) + dir * t;
                self.pivot(row, col);
                self.stat[leaving] = if to_upper { VStat::Upper } else { VStat::Lower };
                if !self.lp.lb[leaving].is_finite() && !self.lp.ub[leaving].is_finite() {
                    self.stat[leaving] = VStat::Free;
                }
                self.stat[col] = VStat::Basic;
                self.basis[row] = col;
                self.xb[row] = enter_val;
            }
        }
        true
    }

    /// Gauss pivot of the full tableau on `(row, col)`.
    fn pivot(&mut self, row: usize, col: usize) {
        let (m, total) = (self.lp.m, self.lp.total_cols());
        let piv = self.tab[row * total + col];
        debug_assert!(piv.abs() > 1e-12, "pivot {piv}");
        let inv = 1.0 / piv;
        for j in 0..total {
            self.tab[row * total + j] *= inv;
        }
        self.tab[row * total + col] = 1.0; // kill roundoff on the pivot itself
        self.scratch.copy_from_slice(&self.tab[row * total..row * total + total]);
        for i in 0..m {
            if i == row {
                continue;
            }
            let f = self.tab[i * total + col];
            if f != 0.0 {
                let dst = &mut self.tab[i * total..i * total + total];
                for (d, s) in dst.iter_mut().zip(&self.scratch) {
                    *d -= f * s;
                }
                self.tab[i * total + col] = 0.0;
            }
        }
    }

    /// Current value of every column (structural and slack).
    pub fn values(&self) -> Vec<f64> {
        let total = self.lp.total_cols();
        let mut x = vec![0.0; total];
        for col in 0..total {
            if self.stat[col] != VStat::Basic {
                x[col] = self.nonbasic_value(col);
            }
        }
        for i in 0..self.lp.m {
            x[self.basis[i]] = self.xb[i];
        }
        x
    }

    /// Re-derive basic values from the original data through an LU solve of
    /// the basis, clearing accumulated pivot drift. Cheap relative to a
    /// solve; used before accepting incumbents.
    pub fn refine(&mut self) {
        let m = self.lp.m;
        if m == 0 {
            return;
        }
        let mut bmat = nalgebra::DMatrix::<f64>::zeros(m, m);
        for (k, &c) in self.basis.iter().enumerate() {
            for i in 0..m {
                bmat[(i, k)] = self.lp.coef(i, c);
            }
        }
        let mut rhs = nalgebra::DVector::<f64>::from_column_slice(&self.lp.b);
        let total = self.lp.total_cols();
        for col in 0..total {
            if self.stat[col] == VStat::Basic {
                continue;
            }
            let v = self.nonbasic_value(col);
            if v != 0.0 {
                for i in 0..m {
                    rhs[i] -= self.lp.coef(i, col) * v;
                }
            }
        }
        if let Some(sol) = bmat.lu().solve(&rhs) {
            for i in 0..m {
                self.xb[i] = sol[i];
            }
        }
    }

    pub fn objective(&self) -> f64 {
        let x = self.values();
        self.lp.obj.iter().zip(&x).map(|(c, v)| c * v).sum()
    }

    /// Largest violation of any column bound at the current point.
    #[cfg(test)]
    pub fn max_bound_violation(&self) -> f64 {
        let x = self.values();
        let mut worst = 0.0f64;
        for (j, &v) in x.iter().enumerate() {
            worst = worst.max(self.lp.lb[j] - v).max(v - self.lp.ub[j]);
        }
        worst
    }
}

fn initial_status(lb: f64, ub: f64) -> VStat {
    match (lb.is_finite(), ub.is_finite()) {
        (true, true) => {
            if lb.abs() <= ub.abs() {
                VStat::Lower
            } else {
                VStat::Upper
            }
        }
        (true, false) => VStat::Lower,
        (false, true) => VStat::Upper,
        (false, false) => VStat::Free,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// rows as (coefs, sense, rhs) with sense -1 (<=), 0 (=), 1 (>=)
    fn build(n: usize, obj: &[f64], rows: &[(Vec<f64>, i8, f64)], bounds: &[(f64, f64)]) -> DenseLp {
        let m = rows.len();
        let mut a = vec![0.0; m * n];
        let mut b = vec![0.0; m];
        let mut lb = vec![0.0; n + m];
        let mut ub = vec![0.0; n + m];
        for (j, &(l, u)) in bounds.iter().enumerate() {
            lb[j] = l;
            ub[j] = u;
        }
        for (i, (coefs, sense, rhs)) in rows.iter().enumerate() {
            a[i * n..i * n + n].copy_from_slice(coefs);
            b[i] = *rhs;
            let (sl, su) = match sense {
                -1 => (0.0, f64::INFINITY),
                0 => (0.0, 0.0),
                1 => (f64::NEG_INFINITY, 0.0),
                _ => unreachable!(),
            };
            lb[n + i] = sl;
            ub[n + i] = su;
        }
        let mut o = vec![0.0; n + m];
        o[..n].copy_from_slice(obj);
        DenseLp { m, n, a, b, obj: o, lb, ub }
    }

    #[test]
    fn simple_two_var_max() {
        // max x + y s.t. x + 2y <= 4, 3x + y <= 6, 0 <= x,y <= 10
        // optimum at intersection: x = 8/5, y = 6/5, value 14/5
        let lp = build(
            2,
            &[-1.0, -1.0],
            &[(vec![1.0, 2.0], -1, 4.0), (vec![3.0, 1.0], -1, 6.0)],
            &[(0.0, 10.0), (0.0, 10.0)],
        );
        let mut s = Simplex::new(lp);
        assert_eq!(s.optimize(), LpStatus::Optimal);
        assert_relative_eq!(s.objective(), -14.0 / 5.0, epsilon = 1e-9);
        let x = s.values();
        assert_relative_eq!(x[0], 8.0 / 5.0, epsilon = 1e-9);
        assert_relative_eq!(x[1], 6.0 / 5.0, epsilon = 1e-9);
    }

    #[test]
    fn equality_rows_need_phase1() {
        // min x + y s.t. x + y = 3, x - y = 1, free vars -> x=2, y=1
        let lp = build(
            2,
            &[1.0, 1.0],
            &[(vec![1.0, 1.0], 0, 3.0), (vec![1.0, -1.0], 0, 1.0)],
            &[(f64::NEG_INFINITY, f64::INFINITY), (f64::NEG_INFINITY, f64::INFINITY)],
        );
        let mut s = Simplex::new(lp);
        assert_eq!(s.optimize(), LpStatus::Optimal);
        let x = s.values();
        assert_relative_eq!(x[0], 2.0, epsilon = 1e-9);
        assert_relative_eq!(x[1], 1.0, epsilon = 1e-9);
    }

    #[test]
    fn infeasible_detected() {
        // x >= 1 and x <= 0
        let lp = build(
            1,
            &[1.0],
            &[(vec![1.0], 1, 1.0), (vec![1.0], -1, 0.0)],
            &[(f64::NEG_INFINITY, f64::INFINITY)],
        );
        let mut s = Simplex::new(lp);
        assert_eq!(s.optimize(), LpStatus::Infeasible);
    }

    #[test]
    fn unbounded_detected() {
        // min -x, x >= 0 unbounded above
        let lp = build(1, &[-1.0], &[(vec![1.0], 1, 0.0)], &[(0.0, f64::INFINITY)]);
        let mut s = Simplex::new(lp);
        assert_eq!(s.optimize(), LpStatus::Unbounded);
    }

    #[test]
    fn bound_flip_path() {
        // min -x - 2y with x in [0,1], y in [0,1], x + y <= 1.5
        // optimum x = 0.5, y = 1 (y flips to upper bound)
        let lp = build(
            2,
            &[-1.0, -2.0],
            &[(vec![1.0, 1.0], -1, 1.5)],
            &[(0.0, 1.0), (0.0, 1.0)],
        );
        let mut s = Simplex::new(lp);
        assert_eq!(s.optimize(), LpStatus::Optimal);
        let x = s.values();
        assert_relative_eq!(x[0], 0.5, epsilon = 1e-9);
        assert_relative_eq!(x[1], 1.0, epsilon = 1e-9);
    }

    #[test]
    fn negative_bounds_and_ge_rows() {
        // min x s.t. x >= -3, x in [-10, 10] -> x = -3
        let lp = build(1, &[1.0], &[(vec![1.0], 1, -3.0)], &[(-10.0, 10.0)]);
        let mut s = Simplex::new(lp);
        assert_eq!(s.optimize(), LpStatus::Optimal);
        assert_relative_eq!(s.values()[0], -3.0, epsilon = 1e-9);
    }

    #[test]
    fn reoptimize_after_bound_change() {
        // same as simple_two_var_max, then force x <= 1 and re-optimize:
        // optimum y = 1.5 (row 1), value -(1 + 1.5)
        let lp = build(
            2,
            &[-1.0, -1.0],
            &[(vec![1.0, 2.0], -1, 4.0), (vec![3.0, 1.0], -1, 6.0)],
            &[(0.0, 10.0), (0.0, 10.0)],
        );
        let mut s = Simplex::new(lp);
        assert_eq!(s.optimize(), LpStatus::Optimal);
        s.set_bounds(0, 0.0, 1.0);
        assert_eq!(s.optimize(), LpStatus::Optimal);
        assert_relative_eq!(s.objective(), -2.5, epsilon = 1e-9);
        let x = s.values();
        assert_relative_eq!(x[0], 1.0, epsilon = 1e-9);
        assert_relative_eq!(x[1], 1.5, epsilon = 1e-9);
    }

    #[test]
    fn statuses_round_trip() {
        let lp = build(
            2,
            &[-1.0, -1.0],
            &[(vec![1.0, 2.0], -1, 4.0), (vec![3.0, 1.0], -1, 6.0)],
            &[(0.0, 10.0), (0.0, 10.0)],
        );
        let mut s = Simplex::new(lp);
        s.optimize();
        let snap = s.statuses();
        let obj = s.objective();
        // perturb then restore
        s.reset_slack_basis();
        s.restore_statuses(&snap);
        assert_relative_eq!(s.objective(), obj, epsilon = 1e-9);
        assert!(s.max_bound_violation() < 1e-9);
    }

    #[test]
    fn degenerate_cycling_guard() {
        // classic degenerate LP (Beale-like); just require termination
        let lp = build(
            4,
            &[-0.75, 150.0, -0.02, 6.0],
            &[
                (vec![0.25, -60.0, -0.04, 9.0], -1, 0.0),
                (vec![0.5, -90.0, -0.02, 3.0], -1, 0.0),
                (vec![0.0, 0.0, 1.0, 0.0], -1, 1.0),
            ],
            &[(0.0, f64::INFINITY); 4],
        );
        let mut s = Simplex::new(lp);
        let st = s.optimize();
        assert_eq!(st, LpStatus::Optimal);
        assert_relative_eq!(s.objective(), -0.05, epsilon = 1e-9);
    }
}

#[cfg(test)]
mod debug_tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn knapsack_relaxation() {
        // max 5a+4b+3c st 2a+3b+c <= 5, vars in [0,1]
        // LP relaxation optimum: a=1, c=1, b=2/3 -> -5-3-8/3 = -31/3
        let n = 3;
        let mut a = vec![0.0; n];
        a.copy_from_slice(&[2.0, 3.0, 1.0]);
        let lp = DenseLp {
            m: 1,
            n,
            a,
            b: vec![5.0],
            obj: vec![-5.0, -4.0, -3.0, 0.0],
            lb: vec![0.0, 0.0, 0.0, 0.0],
            ub: vec![1.0, 1.0, 1.0, f64::INFINITY],
        };
        let mut s = Simplex::new(lp);
        assert_eq!(s.optimize(), LpStatus::Optimal);
        let x = s.values();
        eprintln!("x = {x:?} obj = {}", s.objective());
        assert_relative_eq!(s.objective(), -5.0 - 3.0 - 4.0 * 2.0 / 3.0, epsilon = 1e-9);
    }
}
