//! Block-diagonal semidefinite programs with free variables, and a
//! primal-dual interior-point solver for them.
//!
//! Primal (kernel form):
//!
//! ```text
//! minimize   <C, X> + c_f . y
//! subject to <A_i, X> + (B y)_i = b_i,   X = diag(X_1, ..., X_k) PSD,  y free
//! ```
//!
//! Dual:
//!
//! ```text
//! maximize   b . z
//! subject to S = C - sum_i z_i A_i PSD,   B^T z = c_f
//! ```
//!
//! Symmetric matrices are stored as upper-triangle entries `(block, row, col,
//! value)` with `row <= col`; an off-diagonal entry stands for both `(r, c)`
//! and `(c, r)`.

mod dump;
mod facial;
mod solver;

pub use dump::{read_sparse, write_sparse};
pub use facial::{facial_reduce, Reduction};
pub use solver::{solve, IterationInfo};

use crate::error::{Error, Result};

/// One upper-triangle entry of a block-diagonal symmetric matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Entry {
    pub block: usize,
    pub row: usize,
    pub col: usize,
    pub value: f64,
}

impl Entry {
    pub fn new(block: usize, row: usize, col: usize, value: f64) -> Self {
        let (row, col) = if row <= col { (row, col) } else { (col, row) };
        Entry {
            block,
            row,
            col,
            value,
        }
    }
}

/// One equality constraint `<A_i, X> + (B y)_i = b_i`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Constraint {
    pub matrix: Vec<Entry>,
    pub free: Vec<(usize, f64)>,
    pub rhs: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SdpProblem {
    pub block_sizes: Vec<usize>,
    pub num_free: usize,
    pub objective: Vec<Entry>,
    pub objective_free: Vec<(usize, f64)>,
    pub constraints: Vec<Constraint>,
}

impl SdpProblem {
    pub fn new(block_sizes: Vec<usize>, num_free: usize) -> Self {
        SdpProblem {
            block_sizes,
            num_free,
            ..Default::default()
        }
    }

    pub fn total_dimension(&self) -> usize {
        self.block_sizes.iter().sum()
    }

    pub fn validate(&self) -> Result<()> {
        let check_entry = |e: &Entry| -> Result<()> {
            let n = *self
                .block_sizes
                .get(e.block)
                .ok_or_else(|| Error::Solver(format!("entry refers to missing block {}", e.block)))?;
            if e.row > e.col || e.col >= n {
                return Err(Error::Solver(format!(
                    "entry ({}, {}) out of range for block {} of size {n}",
                    e.row, e.col, e.block
                )));
            }
            if !e.value.is_finite() {
                return Err(Error::Solver("non-finite matrix entry".into()));
            }
            Ok(())
        };
        let check_free = |&(j, v): &(usize, f64)| -> Result<()> {
            if j >= self.num_free || !v.is_finite() {
                return Err(Error::Solver(format!("bad free-variable entry ({j}, {v})")));
            }
            Ok(())
        };
        if self.block_sizes.iter().any(|&n| n == 0) {
            return Err(Error::Solver("empty block".into()));
        }
        self.objective.iter().try_for_each(check_entry)?;
        self.objective_free.iter().try_for_each(check_free)?;
        for c in &self.constraints {
            c.matrix.iter().try_for_each(check_entry)?;
            c.free.iter().try_for_each(check_free)?;
            if !c.rhs.is_finite() {
                return Err(Error::Solver("non-finite right-hand side".into()));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolverStatus {
    Optimal,
    PrimalInfeasible,
    DualInfeasible,
    SlowProgress,
    IterationLimit,
}

impl SolverStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            SolverStatus::Optimal => "Optimal",
            SolverStatus::PrimalInfeasible => "PrimalInfeasible",
            SolverStatus::DualInfeasible => "DualInfeasible",
            SolverStatus::SlowProgress => "SlowProgress",
            SolverStatus::IterationLimit => "IterationLimit",
        }
    }
}

impl std::fmt::Display for SolverStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug)]
pub struct SolverOptions {
    pub gap_tol: f64,
    pub feas_tol: f64,
    pub max_iterations: usize,
    pub step_fraction: f64,
    pub verbose: bool,
    /// Remove matrix indices forced to zero before solving (see
    /// [`facial_reduce`]).
    pub facial_reduction: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            gap_tol: 1e-8,
            feas_tol: 1e-8,
            max_iterations: 200,
            step_fraction: 0.98,
            verbose: false,
            facial_reduction: true,
        }
    }
}

pub type DenseBlock = nalgebra::DMatrix<f64>;

#[derive(Clone, Debug)]
pub struct SdpSolution {
    pub status: SolverStatus,
    pub primal_objective: f64,
    pub dual_objective: f64,
    /// Primal matrix blocks.
    pub x: Vec<DenseBlock>,
    /// Primal free variables.
    pub y: Vec<f64>,
    /// Dual multipliers, one per constraint.
    pub z: Vec<f64>,
    /// Dual slack blocks.
    pub s: Vec<DenseBlock>,
    pub iterations: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub relative_gap: f64,
    pub trace: Vec<IterationInfo>,
}
