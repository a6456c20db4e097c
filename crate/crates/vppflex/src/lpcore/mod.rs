//! Linear-program carrier type and a self-contained dense revised-simplex
//! solver. Every optimization in the crate (flexibility sweeps, envelope
//! feasibility tests, cost sampling, scenario checks) goes through this
//! contract, so statuses are certified here: an OPTIMAL answer has passed a
//! primal-residual and duality-gap check, INFEASIBLE comes from a phase-1
//! optimum above tolerance, and numerical breakdown surfaces as
//! `IllConditioned` rather than a silently wrong answer.

mod simplex;
mod vertex;

pub use vertex::{enumerate_vertices, enumerate_vertices_2d, polygon_area};

use thiserror::Error;

/// Objective direction.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

/// Row relation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

/// One linear constraint `sum(coeffs) rel rhs`.
#[derive(Clone, Debug)]
pub struct Row {
    pub coeffs: Vec<(usize, f64)>,
    pub rel: Relation,
    pub rhs: f64,
}

/// Dense-objective, sparse-row linear program with per-variable bounds and an
/// optional name registry for diagnostics.
#[derive(Clone, Debug)]
pub struct LinearProgram {
    n_vars: usize,
    objective: Vec<f64>,
    sense: Sense,
    rows: Vec<Row>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    names: Vec<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IllConditioned,
}

/// Solver outcome. `x` and `row_duals` are meaningful only when `status` is
/// `Optimal`; `row_duals` has one entry per constraint row, in insertion
/// order.
#[derive(Clone, Debug)]
pub struct LpSolution {
    pub status: LpStatus,
    pub value: f64,
    pub x: Vec<f64>,
    pub row_duals: Vec<f64>,
}

#[derive(Debug, Error)]
pub enum LpError {
    #[error("malformed linear program: {0}")]
    Malformed(String),
    #[error("feasibility solve failed with status {status:?} ({detail})")]
    Feasibility { status: LpStatus, detail: String },
}

impl LinearProgram {
    pub fn new(n_vars: usize) -> Self {
        Self {
            n_vars,
            objective: vec![0.0; n_vars],
            sense: Sense::Minimize,
            rows: Vec::new(),
            lower: vec![f64::NEG_INFINITY; n_vars],
            upper: vec![f64::INFINITY; n_vars],
            names: (0..n_vars).map(|j| format!("x{j}")).collect(),
        }
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    pub fn objective(&self) -> (&[f64], Sense) {
        (&self.objective, self.sense)
    }

    pub fn bounds(&self, var: usize) -> (f64, f64) {
        (self.lower[var], self.upper[var])
    }

    pub fn set_objective(&mut self, coeffs: &[(usize, f64)], sense: Sense) {
        self.objective.iter_mut().for_each(|c| *c = 0.0);
        for &(j, v) in coeffs {
            self.objective[j] += v;
        }
        self.sense = sense;
    }

    /// Adds a constraint row and returns its id (position).
    pub fn add_row(&mut self, coeffs: Vec<(usize, f64)>, rel: Relation, rhs: f64) -> usize {
        self.rows.push(Row { coeffs, rel, rhs });
        self.rows.len() - 1
    }

    pub fn set_bounds(&mut self, var: usize, lower: f64, upper: f64) {
        self.lower[var] = lower;
        self.upper[var] = upper;
    }

    pub fn set_name(&mut self, var: usize, name: impl Into<String>) {
        self.names[var] = name.into();
    }

    pub fn name(&self, var: usize) -> &str {
        &self.names[var]
    }

    fn validate(&self) -> Result<(), LpError> {
        for (j, c) in self.objective.iter().enumerate() {
            if !c.is_finite() {
                return Err(LpError::Malformed(format!(
                    "non-finite objective coefficient on {}",
                    self.names[j]
                )));
            }
        }
        for (i, row) in self.rows.iter().enumerate() {
            if !row.rhs.is_finite() {
                return Err(LpError::Malformed(format!("non-finite rhs in row {i}")));
            }
            for &(j, v) in &row.coeffs {
                if j >= self.n_vars {
                    return Err(LpError::Malformed(format!(
                        "row {i} references variable {j} out of {}",
                        self.n_vars
                    )));
                }
                if !v.is_finite() {
                    return Err(LpError::Malformed(format!(
                        "non-finite coefficient in row {i} on {}",
                        self.names[j]
                    )));
                }
            }
        }
        for j in 0..self.n_vars {
            if self.lower[j].is_nan() || self.upper[j].is_nan() {
                return Err(LpError::Malformed(format!("NaN bound on {}", self.names[j])));
            }
        }
        Ok(())
    }
}

/// Solves the program. See module docs for the status contract.
pub fn solve_lp(lp: &LinearProgram) -> Result<LpSolution, LpError> {
    lp.validate()?;
    Ok(simplex::solve(lp, false))
}

/// Phase-1-only feasibility probe: `Ok(true)` iff the constraint set admits a
/// point. Cheaper than `solve_lp` when only feasibility matters.
pub fn lp_feasible(lp: &LinearProgram) -> Result<bool, LpError> {
    lp.validate()?;
    let sol = simplex::solve(lp, true);
    match sol.status {
        LpStatus::Optimal => Ok(true),
        LpStatus::Infeasible => Ok(false),
        status => Err(LpError::Feasibility {
            status,
            detail: "feasibility probe broke down".into(),
        }),
    }
}

/// Result of an elastic feasibility solve: the minimal total violation of the
/// designated equality rows and the attaining point.
#[derive(Clone, Debug)]
pub struct FeasibilityOutcome {
    pub violation: f64,
    pub x: Vec<f64>,
    /// Per designated row, the (positive, negative) slack pair values.
    pub slacks: Vec<(f64, f64)>,
}

/// Attaches a nonnegative slack pair `(s+, s-)` to each designated equality
/// row, turning `a'x = rhs` into `a'x + s+ - s- = rhs`, and minimizes the
/// total slack sum. A zero optimum certifies that the designated targets are
/// realizable within the remaining constraints.
pub fn solve_feasibility(
    lp: &LinearProgram,
    designated_eq_rows: &[usize],
) -> Result<FeasibilityOutcome, LpError> {
    lp.validate()?;
    for &r in designated_eq_rows {
        if r >= lp.rows.len() {
            return Err(LpError::Malformed(format!("designated row {r} out of range")));
        }
        if lp.rows[r].rel != Relation::Eq {
            return Err(LpError::Malformed(format!(
                "designated row {r} is not an equality"
            )));
        }
    }
    let n = lp.n_vars();
    let mut aug = LinearProgram::new(n + 2 * designated_eq_rows.len());
    for j in 0..n {
        let (lo, hi) = lp.bounds(j);
        aug.set_bounds(j, lo, hi);
    }
    let mut obj = Vec::with_capacity(2 * designated_eq_rows.len());
    for (k, &r) in designated_eq_rows.iter().enumerate() {
        let (sp, sm) = (n + 2 * k, n + 2 * k + 1);
        aug.set_bounds(sp, 0.0, f64::INFINITY);
        aug.set_bounds(sm, 0.0, f64::INFINITY);
        aug.set_name(sp, format!("slack+r{r}"));
        aug.set_name(sm, format!("slack-r{r}"));
        obj.push((sp, 1.0));
        obj.push((sm, 1.0));
    }
    for (i, row) in lp.rows().iter().enumerate() {
        let mut coeffs = row.coeffs.clone();
        if let Some(k) = designated_eq_rows.iter().position(|&r| r == i) {
            coeffs.push((n + 2 * k, 1.0));
            coeffs.push((n + 2 * k + 1, -1.0));
        }
        aug.add_row(coeffs, row.rel, row.rhs);
    }
    aug.set_objective(&obj, Sense::Minimize);
    let sol = solve_lp(&aug)?;
    match sol.status {
        LpStatus::Optimal => {
            let slacks = (0..designated_eq_rows.len())
                .map(|k| (sol.x[n + 2 * k], sol.x[n + 2 * k + 1]))
                .collect();
            Ok(FeasibilityOutcome {
                violation: sol.value,
                x: sol.x[..n].to_vec(),
                slacks,
            })
        }
        status => Err(LpError::Feasibility {
            status,
            detail: "base constraints admit no point even with elastic rows".into(),
        }),
    }
}

#[cfg(test)]
mod tests;
