use nalgebra::DMatrix;

use super::{assemble_sos_constraint, monomial_basis, LinearForm, Registry, SosLayout, WsosConstraint};
use crate::error::{Error, Result};
use crate::polynomial::{Monomial, Polynomial};
use crate::sdp::{Entry, SdpProblem, SdpSolution};
use crate::system::{build_omega, lie_derivative, ProblemSpec, SemialgebraicSet, TIME_VAR};

/// Options shaping the bound SDP.
#[derive(Clone, Debug)]
pub struct BoundFormulation {
    /// Total degree `d` of the auxiliary function.
    pub degree: u32,
    /// Restrict `V` to functions of `x` alone.
    pub time_independent: bool,
    /// Bound `Φ` at the final time only: `V(T, x) >= Φ(T, x)` replaces
    /// `V >= Φ` on all of Ω. Requires a finite horizon.
    pub terminal_time: bool,
    /// Extra constraints (over `(t, x)`) intersected with Ω in the
    /// decrease and domination conditions.
    pub extra_domain: SemialgebraicSet,
    /// Weight of `tr Q` over all Gram matrices `Q` added to the objective.
    /// A small value keeps the set of optimal certificates bounded, which
    /// the interior-point solver needs; any feasible point still certifies
    /// its `λ`, so the bound stays valid and moves up by at most this weight
    /// times the trace.
    pub trace_penalty: f64,
    pub multipliers: MultiplierDegree,
}

/// Degree budget for the S-procedure multipliers of the decrease and
/// domination constraints.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum MultiplierDegree {
    /// Multipliers as large as the constraint degree allows.
    #[default]
    Maximal,
    /// Multipliers budgeted by the degree of `V` (and `Φ`), so `σ_i` has
    /// degree at most `d - deg h_i` in both constraints.
    MatchV,
}

impl BoundFormulation {
    pub fn new(degree: u32) -> Self {
        BoundFormulation {
            degree,
            time_independent: false,
            terminal_time: false,
            extra_domain: SemialgebraicSet::whole_space(),
            trace_penalty: 1e-8,
            multipliers: MultiplierDegree::Maximal,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConstraintRole {
    /// `-LV (- Ψ) >= 0` on Ω.
    Decrease,
    /// `V - Φ >= 0` on Ω (or on the final-time slice).
    Dominate,
    /// `λ - V(t0, x) >= 0` on X0.
    Initial,
}

impl ConstraintRole {
    pub fn label(&self) -> &'static str {
        match self {
            ConstraintRole::Decrease => "decrease",
            ConstraintRole::Dominate => "dominate",
            ConstraintRole::Initial => "initial",
        }
    }
}

/// The assembled SDP plus what is needed to read a certificate back out.
#[derive(Clone, Debug)]
pub struct BoundSdp {
    pub sdp: SdpProblem,
    pub registry: Registry,
    pub lambda: usize,
    /// Variables of `V`: the problem's `(t, x)`.
    pub vars: Vec<String>,
    pub v_basis: Vec<Monomial>,
    pub v_first: usize,
    pub layouts: Vec<(ConstraintRole, SosLayout)>,
    /// True when time was dropped from the constraint variables entirely.
    pub state_only: bool,
}

/// A certificate read back from a solved bound SDP.
#[derive(Clone, Debug)]
pub struct RecoveredCertificate {
    pub lambda: f64,
    pub v: Polynomial,
    /// Largest coefficient of the polynomial identity residual, per constraint.
    pub identity_residuals: Vec<(ConstraintRole, f64)>,
    /// Smallest eigenvalue over all Gram blocks.
    pub min_gram_eigenvalue: f64,
}

impl RecoveredCertificate {
    pub fn max_identity_residual(&self) -> f64 {
        self.identity_residuals
            .iter()
            .map(|(_, r)| *r)
            .fold(0.0, f64::max)
    }
}

fn substitute_time(p: &Polynomial, t: f64, state_vars: &[String]) -> Result<Polynomial> {
    p.substitute_value(TIME_VAR, t)?.embed(state_vars)
}

/// Builds the SDP for `min λ` subject to the three auxiliary-function
/// conditions at degree `form.degree`.
pub fn assemble_bound_sdp(spec: &ProblemSpec, form: &BoundFormulation) -> Result<BoundSdp> {
    let d = form.degree;
    if d == 0 {
        return Err(Error::InvalidProblem("auxiliary function degree must be positive".into()));
    }
    if form.terminal_time && !spec.horizon().is_finite() {
        return Err(Error::InvalidProblem(
            "final-time bounds need a finite horizon".into(),
        ));
    }
    let vars = spec.vars().to_vec();
    let state = spec.state_vars().to_vec();
    let full_signs = spec.symmetry_signs();
    let state_only = form.time_independent
        && !spec.horizon().is_finite()
        && spec.is_autonomous()
        && !form.extra_domain.polynomials().any(|p| p.degree_in(0) > 0);

    let mut registry = Registry::default();
    let lambda = registry.add("lambda");
    let v_basis: Vec<Monomial> = monomial_basis(vars.len(), d, full_signs.as_deref().map(|s| (s, 1)))
        .into_iter()
        .filter(|m| !form.time_independent || m.exponent(0) == 0)
        .collect();
    let v_first = registry.len();
    for m in &v_basis {
        registry.add(format!("v[{}]", Polynomial::monomial(&vars, m.clone(), 1.0)));
    }
    let v_form = LinearForm {
        constant: Polynomial::zero(&vars),
        terms: v_basis
            .iter()
            .enumerate()
            .map(|(k, m)| (v_first + k, Polynomial::monomial(&vars, m.clone(), 1.0)))
            .collect(),
    };

    let gamma_vars = if state_only { state.clone() } else { vars.clone() };
    let gamma_signs = if state_only {
        spec.symmetry().map(|s| s.to_vec())
    } else {
        full_signs.clone()
    };
    let mut omega = build_omega(spec).union_constraints(&form.extra_domain);
    if state_only {
        omega.inequalities.remove(0);
    }
    let omega = omega.embed(&gamma_vars)?;

    let mut sdp = SdpProblem::new(Vec::new(), 0);
    let mut layouts = Vec::new();

    // -LV - Ψ >= 0 on Ω.
    let mut lv_terms = Vec::with_capacity(v_basis.len());
    for (k, m) in v_basis.iter().enumerate() {
        let lm = lie_derivative(&Polynomial::monomial(&vars, m.clone(), 1.0), spec)?;
        lv_terms.push((v_first + k, lm.scale(-1.0)));
    }
    let mut decrease = LinearForm {
        constant: Polynomial::zero(&vars),
        terms: lv_terms,
    };
    if let Some(psi) = spec.integrand() {
        decrease = decrease.add_polynomial(&psi.scale(-1.0));
    }
    let mu = (d - 1 + spec.dynamics_degree())
        .max(spec.integrand().map_or(0, Polynomial::degree))
        .max(1);
    let budget = match form.multipliers {
        MultiplierDegree::Maximal => None,
        MultiplierDegree::MatchV => Some(d.max(spec.observable().degree())),
    };
    let decrease = WsosConstraint {
        label: ConstraintRole::Decrease.label().into(),
        target: decrease.embed(&gamma_vars)?,
        degree: mu,
        multiplier_degree: budget,
        inequalities: omega.inequalities.clone(),
        equalities: omega.equalities.clone(),
        symmetry: gamma_signs.clone(),
    };
    layouts.push((
        ConstraintRole::Decrease,
        assemble_sos_constraint(&decrease, &mut registry, &mut sdp)?,
    ));

    // V - Φ >= 0 on Ω, or V(T, .) - Φ(T, .) >= 0 on the final-time slice.
    let dominate_target = v_form.add_polynomial(&spec.observable().scale(-1.0));
    let mu = d.max(spec.observable().degree());
    let dominate = if form.terminal_time {
        let t_end = spec.horizon().t_end().expect("finite horizon");
        let slice = spec.omega_extra().union_constraints(&form.extra_domain);
        let sub = |p: &Polynomial| substitute_time(p, t_end, &state);
        WsosConstraint {
            label: ConstraintRole::Dominate.label().into(),
            target: dominate_target.map(sub)?,
            degree: mu,
            multiplier_degree: budget,
            inequalities: slice.inequalities.iter().map(sub).collect::<Result<_>>()?,
            equalities: slice.equalities.iter().map(sub).collect::<Result<_>>()?,
            symmetry: spec.symmetry().map(|s| s.to_vec()),
        }
    } else {
        WsosConstraint {
            label: ConstraintRole::Dominate.label().into(),
            target: dominate_target.embed(&gamma_vars)?,
            degree: mu,
            multiplier_degree: budget,
            inequalities: omega.inequalities.clone(),
            equalities: omega.equalities.clone(),
            symmetry: gamma_signs.clone(),
        }
    };
    layouts.push((
        ConstraintRole::Dominate,
        assemble_sos_constraint(&dominate, &mut registry, &mut sdp)?,
    ));

    // λ - V(t0, .) >= 0 on X0.
    let t0 = spec.horizon().t0();
    let initial_target = v_form
        .scale(-1.0)
        .map(|p| substitute_time(p, t0, &state))?;
    let initial_target = LinearForm {
        constant: initial_target.constant,
        terms: std::iter::once((lambda, Polynomial::constant(&state, 1.0)))
            .chain(initial_target.terms)
            .collect(),
    };
    let initial = WsosConstraint {
        label: ConstraintRole::Initial.label().into(),
        target: initial_target,
        degree: d,
        multiplier_degree: None,
        inequalities: spec.initial_set().inequalities.clone(),
        equalities: spec.initial_set().equalities.clone(),
        symmetry: spec.symmetry().map(|s| s.to_vec()),
    };
    layouts.push((
        ConstraintRole::Initial,
        assemble_sos_constraint(&initial, &mut registry, &mut sdp)?,
    ));

    sdp.num_free = registry.len();
    sdp.objective_free.push((lambda, 1.0));
    if form.trace_penalty != 0.0 {
        for (b, &n) in sdp.block_sizes.iter().enumerate() {
            sdp.objective
                .extend((0..n).map(|i| Entry::new(b, i, i, form.trace_penalty)));
        }
    }
    Ok(BoundSdp {
        sdp,
        registry,
        lambda,
        vars,
        v_basis,
        v_first,
        layouts,
        state_only,
    })
}

impl BoundSdp {
    /// The auxiliary function encoded by free-variable values `y`.
    pub fn v_from(&self, y: &[f64]) -> Polynomial {
        Polynomial::from_terms(
            &self.vars,
            self.v_basis
                .iter()
                .enumerate()
                .map(|(k, m)| (m.clone(), y[self.v_first + k])),
        )
    }

    /// Reads `λ` and `V` from a solution and measures how well the SOS
    /// identities and Gram positivity hold.
    pub fn recover(&self, sol: &SdpSolution) -> RecoveredCertificate {
        let identity_residuals = self
            .layouts
            .iter()
            .map(|(role, layout)| (*role, layout.identity_residual(&sol.x, &sol.y).max_abs_coefficient()))
            .collect();
        let min_gram_eigenvalue = sol
            .x
            .iter()
            .map(min_eigenvalue)
            .fold(f64::INFINITY, f64::min);
        RecoveredCertificate {
            lambda: sol.y[self.lambda],
            v: self.v_from(&sol.y),
            identity_residuals,
            min_gram_eigenvalue,
        }
    }
}

pub(crate) fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 1 {
        return m[(0, 0)];
    }
    m.clone().symmetric_eigenvalues().min()
}
