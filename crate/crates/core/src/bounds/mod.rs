//! Upper bounds on `max Φ` along trajectories: single solves, degree sweeps,
//! and iterative tightening of the domain.

use std::time::Instant;

use log::{info, warn};

use crate::error::Result;
use crate::polynomial::Polynomial;
use crate::sdp::{solve, SolverOptions, SolverStatus};
use crate::soscert::{assemble_bound_sdp, BoundFormulation, BoundSdp, RecoveredCertificate};
use crate::system::{ProblemSpec, SemialgebraicSet};

#[derive(Clone, Debug)]
pub struct BoundOptions {
    pub formulation: BoundFormulation,
    pub solver: SolverOptions,
    /// Solve in rescaled states `y = c x`; results are mapped back to `x`.
    pub state_scale: Option<f64>,
}

impl BoundOptions {
    pub fn new(degree: u32) -> Self {
        BoundOptions {
            formulation: BoundFormulation::new(degree),
            solver: SolverOptions::default(),
            state_scale: None,
        }
    }

    pub fn time_independent(mut self, yes: bool) -> Self {
        self.formulation.time_independent = yes;
        self
    }

    pub fn terminal_time(mut self, yes: bool) -> Self {
        self.formulation.terminal_time = yes;
        self
    }

    pub fn gap_tol(mut self, tol: f64) -> Self {
        self.solver.gap_tol = tol;
        self
    }
}

/// Outcome of one bound computation.
#[derive(Clone, Debug)]
pub struct BoundResult {
    pub degree: u32,
    pub status: SolverStatus,
    /// The bound `λ`; meaningful as a certificate only when `status` is
    /// `Optimal` and the certificate residuals are small.
    pub lambda: f64,
    pub v: Polynomial,
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub iterations: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub relative_gap: f64,
    pub certificate: RecoveredCertificate,
    pub num_constraints: usize,
    pub num_free: usize,
    pub seconds: f64,
}

impl BoundResult {
    pub fn is_optimal(&self) -> bool {
        self.status == SolverStatus::Optimal
    }
}

/// Time scale used for `spec`: finite horizons are mapped into `[-1, 1]`.
fn time_scale(spec: &ProblemSpec) -> f64 {
    match spec.horizon().t_end() {
        Some(t_end) => t_end.abs().max(spec.horizon().t0().abs()),
        None => 1.0,
    }
}

/// Assembles the bound SDP for `spec`, posed in rescaled time (see
/// [`time_scale`]) and optionally rescaled states.
pub fn build_sdp(spec: &ProblemSpec, opts: &BoundOptions) -> Result<BoundSdp> {
    let ct = time_scale(spec);
    let spec = if ct != 1.0 { spec.time_rescaled(ct)? } else { spec.clone() };
    match opts.state_scale {
        Some(c) => assemble_bound_sdp(&spec.rescaled(c)?, &opts.formulation),
        None => assemble_bound_sdp(&spec, &opts.formulation),
    }
}

pub fn compute_bound(spec: &ProblemSpec, opts: &BoundOptions) -> Result<BoundResult> {
    let start = Instant::now();
    let bsdp = build_sdp(spec, opts)?;
    info!(
        "{}: degree {} with {} rows, {} free variables, blocks {:?}",
        spec.name(),
        opts.formulation.degree,
        bsdp.sdp.constraints.len(),
        bsdp.sdp.num_free,
        bsdp.sdp.block_sizes
    );
    let sol = solve(&bsdp.sdp, &opts.solver)?;
    let mut certificate = bsdp.recover(&sol);
    let mut factors = vec![opts.state_scale.unwrap_or(1.0); spec.vars().len()];
    factors[0] = 1.0 / time_scale(spec);
    if factors.iter().any(|&f| f != 1.0) {
        certificate.v = certificate.v.scale_vars(&factors);
    }
    if sol.status != SolverStatus::Optimal {
        warn!(
            "{}: degree {} solver status {}",
            spec.name(),
            opts.formulation.degree,
            sol.status
        );
    }
    Ok(BoundResult {
        degree: opts.formulation.degree,
        status: sol.status,
        lambda: certificate.lambda,
        v: certificate.v.clone(),
        primal_objective: sol.primal_objective,
        dual_objective: sol.dual_objective,
        iterations: sol.iterations,
        primal_residual: sol.primal_residual,
        dual_residual: sol.dual_residual,
        relative_gap: sol.relative_gap,
        certificate,
        num_constraints: bsdp.sdp.constraints.len(),
        num_free: bsdp.sdp.num_free,
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// One bound per degree, in the given order.
pub fn degree_sweep(spec: &ProblemSpec, degrees: &[u32], opts: &BoundOptions) -> Result<Vec<BoundResult>> {
    degrees
        .iter()
        .map(|&d| {
            let mut o = opts.clone();
            o.formulation.degree = d;
            compute_bound(spec, &o)
        })
        .collect()
}

/// Repeats the bound computation with Ω replaced by `Ω ∩ {Φ <= λ_i}`, where
/// `λ_i` is the previous bound. Stops after `max_iters` solves, when the
/// bound changes by less than `stop_tol`, or when a solve is not optimal.
pub fn iterative_tighten(
    spec: &ProblemSpec,
    opts: &BoundOptions,
    max_iters: usize,
    stop_tol: f64,
) -> Result<Vec<BoundResult>> {
    let mut out: Vec<BoundResult> = Vec::new();
    let base = opts.formulation.extra_domain.clone();
    for _ in 0..max_iters.max(1) {
        let mut o = opts.clone();
        if let Some(prev) = out.last() {
            let vars = spec.vars();
            let cap = &Polynomial::constant(vars, prev.lambda) - spec.observable();
            o.formulation.extra_domain = base.union_constraints(&SemialgebraicSet::new(vec![cap], vec![]));
        }
        let r = compute_bound(spec, &o)?;
        let stop = match out.last() {
            Some(prev) => !r.is_optimal() || (prev.lambda - r.lambda).abs() < stop_tol,
            None => !r.is_optimal(),
        };
        out.push(r);
        if stop {
            break;
        }
    }
    Ok(out)
}
