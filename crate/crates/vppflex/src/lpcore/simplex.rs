//! Dense revised simplex with an explicit basis inverse.
//!
//! The program is reduced to standard form `min c'y, A y = b, y >= 0, b >= 0`:
//! finite lower bounds are shifted out, variables bounded only above are
//! mirrored, free variables are split, and finite upper bounds become extra
//! rows. Phase 1 minimizes artificial variables; a phase-1 optimum above
//! tolerance certifies infeasibility. Pricing is Dantzig with a permanent
//! switch to Bland's rule if the objective stalls, which rules out cycling.
//! The basis inverse is rebuilt from scratch periodically, and the final point
//! is re-checked against the original rows and the dual objective, so a
//! corrupted basis reports `IllConditioned` instead of returning garbage.

use super::{LinearProgram, LpSolution, LpStatus, Relation, Sense};
use nalgebra::{DMatrix, DVector};

const EPS_PIVOT: f64 = 1e-9;
const EPS_REDUCED: f64 = 1e-9;
const REFACTOR_EVERY: usize = 64;

#[derive(Clone, Copy)]
enum Xform {
    /// x = offset + y
    Shift { col: usize, offset: f64 },
    /// x = offset - y
    Mirror { col: usize, offset: f64 },
    /// x = y_pos - y_neg
    Split { pos: usize, neg: usize },
}

struct StandardForm {
    m: usize,
    /// Sparse columns: (row, value) pairs, rows ascending.
    cols: Vec<Vec<(usize, f64)>>,
    b: Vec<f64>,
    /// Phase-2 cost per column (internal minimize sense).
    cost: Vec<f64>,
    artificial: Vec<bool>,
    init_basis: Vec<usize>,
    xforms: Vec<Xform>,
    /// Per standard row: source original row (None for bound rows) and the
    /// sign applied during b >= 0 normalization.
    row_src: Vec<Option<usize>>,
    row_sign: Vec<f64>,
    /// +1 for Minimize, -1 for Maximize (internal cost = sign * original).
    sense_sign: f64,
    /// Trivially contradictory bounds detected during the reduction.
    infeasible_bounds: bool,
}

impl StandardForm {
    fn build(lp: &LinearProgram) -> StandardForm {
        let n = lp.n_vars();
        let (c_orig, sense) = lp.objective();
        let sense_sign = match sense {
            Sense::Minimize => 1.0,
            Sense::Maximize => -1.0,
        };

        let mut xforms = Vec::with_capacity(n);
        let mut n_structural = 0usize;
        let mut ub_rows: Vec<(usize, f64)> = Vec::new(); // (col, bound on y)
        let mut infeasible_bounds = false;
        for j in 0..n {
            let (lo, hi) = lp.bounds(j);
            if lo > hi {
                infeasible_bounds = true;
            }
            if lo.is_finite() {
                let col = n_structural;
                n_structural += 1;
                xforms.push(Xform::Shift { col, offset: lo });
                if hi.is_finite() {
                    ub_rows.push((col, hi - lo));
                }
            } else if hi.is_finite() {
                let col = n_structural;
                n_structural += 1;
                xforms.push(Xform::Mirror { col, offset: hi });
            } else {
                let (pos, neg) = (n_structural, n_structural + 1);
                n_structural += 2;
                xforms.push(Xform::Split { pos, neg });
            }
        }

        // Accumulate transformed rows through a dense scratch so duplicate
        // variable references in a row collapse into one coefficient.
        let m = lp.n_rows() + ub_rows.len();
        let mut row_coeffs: Vec<Vec<(usize, f64)>> = Vec::with_capacity(m);
        let mut b = Vec::with_capacity(m);
        let mut rels = Vec::with_capacity(m);
        let mut row_src = Vec::with_capacity(m);
        let mut scratch = vec![0.0; n_structural];
        for (i, row) in lp.rows().iter().enumerate() {
            let mut rhs = row.rhs;
            let mut touched: Vec<usize> = Vec::with_capacity(row.coeffs.len() * 2);
            for &(j, a) in &row.coeffs {
                match xforms[j] {
                    Xform::Shift { col, offset } => {
                        touched.push(col);
                        scratch[col] += a;
                        rhs -= a * offset;
                    }
                    Xform::Mirror { col, offset } => {
                        touched.push(col);
                        scratch[col] -= a;
                        rhs -= a * offset;
                    }
                    Xform::Split { pos, neg } => {
                        touched.push(pos);
                        touched.push(neg);
                        scratch[pos] += a;
                        scratch[neg] -= a;
                    }
                }
            }
            touched.sort_unstable();
            touched.dedup();
            let coeffs: Vec<(usize, f64)> = touched
                .iter()
                .filter(|&&c| scratch[c] != 0.0)
                .map(|&c| (c, scratch[c]))
                .collect();
            for &c in &touched {
                scratch[c] = 0.0;
            }
            row_coeffs.push(coeffs);
            b.push(rhs);
            rels.push(row.rel);
            row_src.push(Some(i));
        }
        for &(col, bound) in &ub_rows {
            row_coeffs.push(vec![(col, 1.0)]);
            b.push(bound);
            rels.push(Relation::Le);
            row_src.push(None);
        }

        // Normalize b >= 0.
        let mut row_sign = vec![1.0; m];
        for i in 0..m {
            if b[i] < 0.0 {
                b[i] = -b[i];
                row_sign[i] = -1.0;
                for e in row_coeffs[i].iter_mut() {
                    e.1 = -e.1;
                }
                rels[i] = match rels[i] {
                    Relation::Le => Relation::Ge,
                    Relation::Ge => Relation::Le,
                    Relation::Eq => Relation::Eq,
                };
            }
        }

        let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n_structural];
        for (i, coeffs) in row_coeffs.iter().enumerate() {
            for &(c, v) in coeffs {
                cols[c].push((i, v));
            }
        }
        let mut cost = vec![0.0; n_structural];
        for j in 0..n {
            let c = sense_sign * c_orig[j];
            match xforms[j] {
                Xform::Shift { col, .. } => cost[col] += c,
                Xform::Mirror { col, .. } => cost[col] -= c,
                Xform::Split { pos, neg } => {
                    cost[pos] += c;
                    cost[neg] -= c;
                }
            }
        }

        // Slack columns for inequalities; artificial columns for rows without
        // an identity candidate.
        let mut artificial = vec![false; n_structural];
        let mut init_basis = vec![usize::MAX; m];
        for i in 0..m {
            match rels[i] {
                Relation::Le => {
                    cols.push(vec![(i, 1.0)]);
                    cost.push(0.0);
                    artificial.push(false);
                    init_basis[i] = cols.len() - 1;
                }
                Relation::Ge => {
                    cols.push(vec![(i, -1.0)]);
                    cost.push(0.0);
                    artificial.push(false);
                }
                Relation::Eq => {}
            }
        }
        for i in 0..m {
            if init_basis[i] == usize::MAX {
                cols.push(vec![(i, 1.0)]);
                cost.push(0.0);
                artificial.push(true);
                init_basis[i] = cols.len() - 1;
            }
        }

        StandardForm {
            m,
            cols,
            b,
            cost,
            artificial,
            init_basis,
            xforms,
            row_src,
            row_sign,
            sense_sign,
            infeasible_bounds,
        }
    }
}

struct Tableau {
    m: usize,
    cols: Vec<Vec<(usize, f64)>>,
    b: Vec<f64>,
    cost: Vec<f64>,
    artificial: Vec<bool>,
    basis: Vec<usize>,
    /// col -> row + 1, 0 if nonbasic.
    basic_pos: Vec<usize>,
    binv: DMatrix<f64>,
    x_b: Vec<f64>,
    bland: bool,
    pivots: usize,
}

enum PhaseEnd {
    Converged,
    Unbounded,
    Breakdown,
}

impl Tableau {
    fn new(sf: &StandardForm) -> Tableau {
        let m = sf.m;
        let mut basic_pos = vec![0usize; sf.cols.len()];
        for (i, &j) in sf.init_basis.iter().enumerate() {
            basic_pos[j] = i + 1;
        }
        Tableau {
            m,
            cols: sf.cols.clone(),
            b: sf.b.clone(),
            cost: sf.cost.clone(),
            artificial: sf.artificial.clone(),
            basis: sf.init_basis.clone(),
            basic_pos,
            binv: DMatrix::identity(m, m),
            x_b: sf.b.clone(),
            bland: false,
            pivots: 0,
        }
    }

    /// u = B^-1 a_j, exploiting the sparsity of a_j.
    fn ftran(&self, j: usize, out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        for &(row, val) in &self.cols[j] {
            let bc = self.binv.column(row);
            for i in 0..self.m {
                out[i] += val * bc[i];
            }
        }
    }

    /// y = c_B' B^-1 under the given per-column cost.
    fn btran(&self, cost_of: impl Fn(usize) -> f64, out: &mut [f64]) {
        for k in 0..self.m {
            let bc = self.binv.column(k);
            let mut acc = 0.0;
            for i in 0..self.m {
                let cb = cost_of(self.basis[i]);
                if cb != 0.0 {
                    acc += cb * bc[i];
                }
            }
            out[k] = acc;
        }
    }

    fn refactor(&mut self) -> bool {
        if self.m == 0 {
            return true;
        }
        let mut bmat = DMatrix::zeros(self.m, self.m);
        for (i, &j) in self.basis.iter().enumerate() {
            for &(row, val) in &self.cols[j] {
                bmat[(row, i)] = val;
            }
        }
        match bmat.lu().try_inverse() {
            Some(inv) => {
                self.binv = inv;
                let xb = &self.binv * DVector::from_column_slice(&self.b);
                for i in 0..self.m {
                    let v = xb[i];
                    if v < -1e-7 * (1.0 + self.b[i].abs()) {
                        return false;
                    }
                    self.x_b[i] = v.max(0.0);
                }
                true
            }
            None => false,
        }
    }

    fn run_phase(&mut self, phase1: bool) -> PhaseEnd {
        let phase2_cost = self.cost.clone();
        let artificial = self.artificial.clone();
        let cost_of = move |j: usize| -> f64 {
            if phase1 {
                if artificial[j] {
                    1.0
                } else {
                    0.0
                }
            } else {
                phase2_cost[j]
            }
        };
        let cost_scale = if phase1 {
            1.0
        } else {
            1.0 + self.cost.iter().fold(0.0f64, |a, c| a.max(c.abs()))
        };
        let tol_d = EPS_REDUCED * cost_scale;
        let max_iter = 200 * (self.m + self.cols.len()) + 10_000;
        let bland_after = 10 * (self.m + self.cols.len()) + 200;
        let mut y = vec![0.0; self.m];
        let mut u = vec![0.0; self.m];
        let mut stall = 0usize;
        let mut last_obj = f64::INFINITY;

        loop {
            if self.pivots > max_iter {
                return PhaseEnd::Breakdown;
            }
            if self.pivots > 0 && self.pivots % REFACTOR_EVERY == 0 && !self.refactor() {
                return PhaseEnd::Breakdown;
            }

            self.btran(&cost_of, &mut y);

            // Pricing. Artificial columns never re-enter the basis.
            let mut entering = usize::MAX;
            let mut best = -tol_d;
            for j in 0..self.cols.len() {
                if self.basic_pos[j] != 0 || self.artificial[j] {
                    continue;
                }
                let mut d = cost_of(j);
                for &(row, val) in &self.cols[j] {
                    d -= y[row] * val;
                }
                if self.bland {
                    if d < -tol_d {
                        entering = j;
                        break;
                    }
                } else if d < best {
                    best = d;
                    entering = j;
                }
            }
            if entering == usize::MAX {
                return PhaseEnd::Converged;
            }

            self.ftran(entering, &mut u);

            // Ratio test: smallest ratio. Ties prefer evicting artificials,
            // then the lowest basis column id (pure lowest-id under Bland).
            let mut leave_row = usize::MAX;
            let mut best_ratio = f64::INFINITY;
            for i in 0..self.m {
                if u[i] > EPS_PIVOT {
                    let ratio = self.x_b[i] / u[i];
                    if leave_row == usize::MAX || ratio < best_ratio - 1e-12 {
                        best_ratio = ratio;
                        leave_row = i;
                    } else if ratio < best_ratio + 1e-12 {
                        let cand = self.basis[i];
                        let cur = self.basis[leave_row];
                        let better = if self.bland {
                            cand < cur
                        } else {
                            (self.artificial[cand] && !self.artificial[cur])
                                || (self.artificial[cand] == self.artificial[cur] && cand < cur)
                        };
                        if better {
                            leave_row = i;
                            best_ratio = best_ratio.min(ratio);
                        }
                    }
                }
            }
            if leave_row == usize::MAX {
                return if phase1 {
                    PhaseEnd::Breakdown
                } else {
                    PhaseEnd::Unbounded
                };
            }

            self.pivot(entering, leave_row, &u);

            let obj: f64 = (0..self.m)
                .map(|i| cost_of(self.basis[i]) * self.x_b[i])
                .sum();
            if obj < last_obj - 1e-12 * cost_scale {
                stall = 0;
            } else {
                stall += 1;
                if stall > bland_after {
                    self.bland = true;
                }
            }
            last_obj = obj;
        }
    }

    fn pivot(&mut self, entering: usize, leave_row: usize, u: &[f64]) {
        let p = u[leave_row];
        let m = self.m;
        for k in 0..m {
            let mut col = self.binv.column_mut(k);
            let pr = col[leave_row] / p;
            col[leave_row] = pr;
            for i in 0..m {
                if i != leave_row {
                    col[i] -= u[i] * pr;
                }
            }
        }
        let xr = self.x_b[leave_row] / p;
        self.x_b[leave_row] = xr;
        for i in 0..m {
            if i != leave_row {
                let v = self.x_b[i] - u[i] * xr;
                self.x_b[i] = if v.abs() < 1e-13 { 0.0 } else { v.max(0.0) };
            }
        }
        let leaving = self.basis[leave_row];
        self.basic_pos[leaving] = 0;
        self.basis[leave_row] = entering;
        self.basic_pos[entering] = leave_row + 1;
        self.pivots += 1;
    }

    /// Pivots basic artificials out at zero step where possible. Rows whose
    /// artificial cannot be evicted are linearly dependent; their artificial
    /// stays pinned at zero because every non-artificial column has a zero
    /// component there, so they are harmless in phase 2.
    fn drive_out_artificials(&mut self) {
        let mut u = vec![0.0; self.m];
        for row in 0..self.m {
            if !self.artificial[self.basis[row]] {
                continue;
            }
            for j in 0..self.cols.len() {
                if self.artificial[j] || self.basic_pos[j] != 0 {
                    continue;
                }
                self.ftran(j, &mut u);
                if u[row].abs() > 1e-7 {
                    let uc = u.clone();
                    self.pivot(j, row, &uc);
                    break;
                }
            }
        }
    }
}

fn bad(status: LpStatus) -> LpSolution {
    LpSolution {
        status,
        value: f64::NAN,
        x: Vec::new(),
        row_duals: Vec::new(),
    }
}

pub(super) fn solve(lp: &LinearProgram, feasibility_only: bool) -> LpSolution {
    let sf = StandardForm::build(lp);
    if sf.infeasible_bounds {
        return bad(LpStatus::Infeasible);
    }
    let mut t = Tableau::new(&sf);

    let b_scale = 1.0 + sf.b.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let needs_phase1 = sf.init_basis.iter().any(|&j| sf.artificial[j]);
    if needs_phase1 {
        match t.run_phase(true) {
            PhaseEnd::Converged => {}
            _ => return bad(LpStatus::IllConditioned),
        }
        let infeas: f64 = (0..t.m)
            .filter(|&i| t.artificial[t.basis[i]])
            .map(|i| t.x_b[i])
            .sum();
        if infeas > 1e-8 * b_scale {
            return bad(LpStatus::Infeasible);
        }
        t.drive_out_artificials();
    }
    if feasibility_only {
        return LpSolution {
            status: LpStatus::Optimal,
            value: 0.0,
            x: Vec::new(),
            row_duals: Vec::new(),
        };
    }

    match t.run_phase(false) {
        PhaseEnd::Converged => {}
        PhaseEnd::Unbounded => return bad(LpStatus::Unbounded),
        PhaseEnd::Breakdown => return bad(LpStatus::IllConditioned),
    }

    // Recover the point in original variables.
    let mut x_std = vec![0.0; t.cols.len()];
    for i in 0..t.m {
        x_std[t.basis[i]] = t.x_b[i];
    }
    let mut x = vec![0.0; lp.n_vars()];
    for (j, xf) in sf.xforms.iter().enumerate() {
        x[j] = match *xf {
            Xform::Shift { col, offset } => offset + x_std[col],
            Xform::Mirror { col, offset } => offset - x_std[col],
            Xform::Split { pos, neg } => x_std[pos] - x_std[neg],
        };
    }
    let (c_orig, _) = lp.objective();
    let value: f64 = c_orig.iter().zip(&x).map(|(c, v)| c * v).sum();

    // Certification: primal residuals, bound residuals, duality gap.
    for (i, row) in lp.rows().iter().enumerate() {
        let lhs: f64 = row.coeffs.iter().map(|&(j, a)| a * x[j]).sum();
        let tol = 1e-7 * (1.0 + row.rhs.abs() + b_scale);
        let ok = match row.rel {
            Relation::Le => lhs <= row.rhs + tol,
            Relation::Ge => lhs >= row.rhs - tol,
            Relation::Eq => (lhs - row.rhs).abs() <= tol,
        };
        if !ok {
            log::warn!("simplex residual check failed on row {i}: lhs = {lhs}");
            return bad(LpStatus::IllConditioned);
        }
    }
    for j in 0..lp.n_vars() {
        let (lo, hi) = lp.bounds(j);
        let tol = 1e-7 * (1.0 + x[j].abs());
        if x[j] < lo - tol || x[j] > hi + tol {
            return bad(LpStatus::IllConditioned);
        }
    }

    let mut y = vec![0.0; t.m];
    let cost = t.cost.clone();
    t.btran(|j| cost[j], &mut y);
    let internal_primal: f64 = (0..t.m).map(|i| t.cost[t.basis[i]] * t.x_b[i]).sum();
    let internal_dual: f64 = y.iter().zip(&sf.b).map(|(yi, bi)| yi * bi).sum();
    if (internal_primal - internal_dual).abs() > 1e-6 * (1.0 + internal_primal.abs()) {
        log::warn!(
            "simplex duality gap check failed: {internal_primal} vs {internal_dual}"
        );
        return bad(LpStatus::IllConditioned);
    }
    let mut row_duals = vec![0.0; lp.n_rows()];
    for (k, src) in sf.row_src.iter().enumerate() {
        if let Some(i) = *src {
            row_duals[i] = sf.sense_sign * sf.row_sign[k] * y[k];
        }
    }

    LpSolution {
        status: LpStatus::Optimal,
        value,
        x,
        row_duals,
    }
}
