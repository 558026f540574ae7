//! Problem model: dynamics, observable, sets, horizon.

mod builtins;

pub use builtins::{builtin_problem, burgers_truncation, BuiltinParams, InitialKind, BUILTIN_NAMES};

use crate::error::{Error, Result};
use crate::polynomial::Polynomial;

/// Name of the time variable; always the first entry of a problem's variable list.
pub const TIME_VAR: &str = "t";

/// `{ z : f(z) >= 0 for f in inequalities, g(z) = 0 for g in equalities }`.
/// Empty lists denote the whole space.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SemialgebraicSet {
    pub inequalities: Vec<Polynomial>,
    pub equalities: Vec<Polynomial>,
}

impl SemialgebraicSet {
    pub fn whole_space() -> Self {
        Self::default()
    }

    pub fn new(inequalities: Vec<Polynomial>, equalities: Vec<Polynomial>) -> Self {
        SemialgebraicSet {
            inequalities,
            equalities,
        }
    }

    pub fn is_whole_space(&self) -> bool {
        self.inequalities.is_empty() && self.equalities.is_empty()
    }

    pub fn polynomials(&self) -> impl Iterator<Item = &Polynomial> {
        self.inequalities.iter().chain(self.equalities.iter())
    }

    pub fn max_degree(&self) -> u32 {
        self.polynomials().map(Polynomial::degree).max().unwrap_or(0)
    }

    /// Membership with tolerance `tol` for a point listed in variable order.
    pub fn contains(&self, point: &[f64], tol: f64) -> bool {
        self.inequalities.iter().all(|f| f.eval(point) >= -tol)
            && self.equalities.iter().all(|g| g.eval(point).abs() <= tol)
    }

    pub fn union_constraints(&self, other: &SemialgebraicSet) -> SemialgebraicSet {
        let mut out = self.clone();
        out.inequalities.extend(other.inequalities.iter().cloned());
        out.equalities.extend(other.equalities.iter().cloned());
        out
    }

    pub fn embed(&self, vars: &[String]) -> Result<SemialgebraicSet> {
        Ok(SemialgebraicSet {
            inequalities: self
                .inequalities
                .iter()
                .map(|p| p.embed(vars))
                .collect::<Result<_>>()?,
            equalities: self
                .equalities
                .iter()
                .map(|p| p.embed(vars))
                .collect::<Result<_>>()?,
        })
    }

    fn map(&self, f: impl Fn(&Polynomial) -> Result<Polynomial>) -> Result<SemialgebraicSet> {
        Ok(SemialgebraicSet {
            inequalities: self.inequalities.iter().map(&f).collect::<Result<_>>()?,
            equalities: self.equalities.iter().map(&f).collect::<Result<_>>()?,
        })
    }
}

/// Time interval `[t0, T]` or `[t0, inf)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Horizon {
    Finite { t0: f64, t_end: f64 },
    Infinite { t0: f64 },
}

impl Horizon {
    pub fn finite(t0: f64, t_end: f64) -> Result<Self> {
        if !(t_end > t0) || !t_end.is_finite() || !t0.is_finite() {
            return Err(Error::InvalidProblem(format!(
                "finite horizon needs T > t0 (got t0 = {t0}, T = {t_end})"
            )));
        }
        Ok(Horizon::Finite { t0, t_end })
    }

    pub fn infinite(t0: f64) -> Self {
        Horizon::Infinite { t0 }
    }

    pub fn t0(&self) -> f64 {
        match *self {
            Horizon::Finite { t0, .. } | Horizon::Infinite { t0 } => t0,
        }
    }

    pub fn t_end(&self) -> Option<f64> {
        match *self {
            Horizon::Finite { t_end, .. } => Some(t_end),
            Horizon::Infinite { .. } => None,
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, Horizon::Finite { .. })
    }

    pub fn contains(&self, t: f64) -> bool {
        match *self {
            Horizon::Finite { t0, t_end } => t >= t0 && t <= t_end,
            Horizon::Infinite { t0 } => t >= t0,
        }
    }
}

/// A parameterization of the initial set used by lower-bound searches.
#[derive(Clone, Debug, PartialEq)]
pub enum InitialParam {
    /// A single initial condition.
    Point(Vec<f64>),
    /// `(c1 + r cos θ, c2 + r sin θ)`.
    Circle { center: [f64; 2], radius: f64 },
    /// `lo <= x <= hi` in one dimension.
    Interval { lo: f64, hi: f64 },
    /// `{ x : sum_i w_i (x_i - c_i)^2 = level }`, parameterized by a direction.
    Ellipsoid {
        center: Vec<f64>,
        weights: Vec<f64>,
        level: f64,
    },
}

impl InitialParam {
    /// Number of free search parameters.
    pub fn dimension(&self) -> usize {
        match self {
            InitialParam::Point(_) => 0,
            InitialParam::Circle { .. } | InitialParam::Interval { .. } => 1,
            InitialParam::Ellipsoid { center, .. } => center.len(),
        }
    }

    /// Maps search parameters to an initial state.
    pub fn point(&self, params: &[f64]) -> Vec<f64> {
        match self {
            InitialParam::Point(p) => p.clone(),
            InitialParam::Circle { center, radius } => {
                let th = params[0];
                vec![center[0] + radius * th.cos(), center[1] + radius * th.sin()]
            }
            InitialParam::Interval { lo, hi } => {
                // Reflect into [lo, hi] so unconstrained searches stay feasible.
                let w = hi - lo;
                if w <= 0.0 {
                    return vec![*lo];
                }
                let mut s = (params[0] - lo).rem_euclid(2.0 * w);
                if s > w {
                    s = 2.0 * w - s;
                }
                vec![lo + s]
            }
            InitialParam::Ellipsoid {
                center,
                weights,
                level,
            } => {
                let q: f64 = params
                    .iter()
                    .zip(weights)
                    .map(|(u, w)| w * u * u)
                    .sum::<f64>();
                let scale = if q > 0.0 { (level / q).sqrt() } else { 0.0 };
                let mut out: Vec<f64> = center
                    .iter()
                    .zip(params)
                    .map(|(c, u)| c + scale * u)
                    .collect();
                if q == 0.0 && !out.is_empty() {
                    out[0] = center[0] + (level / weights[0]).sqrt();
                }
                out
            }
        }
    }

    /// Recognizes the simple shapes produced by the builtins and by hand-written
    /// problem files: a point, a 1-D interval, or an axis-aligned ellipsoid.
    pub fn infer(set: &SemialgebraicSet, nstate: usize) -> Option<InitialParam> {
        if set.inequalities.is_empty() && set.equalities.len() == nstate {
            let mut point = vec![f64::NAN; nstate];
            for g in &set.equalities {
                if g.degree() != 1 {
                    break;
                }
                let linear: Vec<(usize, f64)> = g
                    .terms()
                    .filter(|(m, _)| !m.is_one())
                    .map(|(m, c)| (m.iter().next().unwrap().0, c))
                    .collect();
                if linear.len() != 1 {
                    break;
                }
                let (i, a) = linear[0];
                point[i] = -g.coefficient(&crate::polynomial::Monomial::one()) / a;
            }
            if point.iter().all(|v| v.is_finite()) {
                return Some(InitialParam::Point(point));
            }
        }
        if set.inequalities.is_empty() && set.equalities.len() == 1 {
            let g = &set.equalities[0];
            if g.degree() == 2 {
                let mut w = vec![0.0; nstate];
                let mut b = vec![0.0; nstate];
                let mut c = 0.0;
                for (m, coef) in g.terms() {
                    let e: Vec<(usize, u32)> = m.iter().collect();
                    match e.as_slice() {
                        [] => c = coef,
                        [(i, 1)] => b[*i] = coef,
                        [(i, 2)] => w[*i] = coef,
                        _ => return None,
                    }
                }
                let sign = if w.iter().all(|&v| v > 0.0) {
                    1.0
                } else if w.iter().all(|&v| v < 0.0) {
                    -1.0
                } else {
                    return None;
                };
                let weights: Vec<f64> = w.iter().map(|v| v * sign).collect();
                let center: Vec<f64> = (0..nstate).map(|i| -b[i] / (2.0 * w[i])).collect();
                let level = -sign * c
                    + center
                        .iter()
                        .zip(&weights)
                        .map(|(ci, wi)| wi * ci * ci)
                        .sum::<f64>();
                if level <= 0.0 {
                    return None;
                }
                if nstate == 2 && (weights[0] - weights[1]).abs() <= 1e-14 * weights[0] {
                    return Some(InitialParam::Circle {
                        center: [center[0], center[1]],
                        radius: (level / weights[0]).sqrt(),
                    });
                }
                return Some(InitialParam::Ellipsoid {
                    center,
                    weights,
                    level,
                });
            }
        }
        if nstate == 1 && set.equalities.is_empty() {
            let mut lo = f64::NEG_INFINITY;
            let mut hi = f64::INFINITY;
            for f in &set.inequalities {
                if f.degree() != 1 {
                    return None;
                }
                let a = f.coefficient(&crate::polynomial::Monomial::var(0));
                let c = f.coefficient(&crate::polynomial::Monomial::one());
                if a > 0.0 {
                    lo = lo.max(-c / a);
                } else if a < 0.0 {
                    hi = hi.min(-c / a);
                }
            }
            if lo.is_finite() && hi.is_finite() && lo <= hi {
                return Some(InitialParam::Interval { lo, hi });
            }
        }
        None
    }
}

/// A bounding problem: `dx/dt = F(t, x)`, observable `Φ(t, x)`, optional
/// integrand `Ψ`, horizon, initial set `X0` (in `x`), and extra constraints
/// on the spacetime domain `Ω` (in `t, x`).
#[derive(Clone, Debug, PartialEq)]
pub struct ProblemSpec {
    name: String,
    vars: Vec<String>,
    dynamics: Vec<Polynomial>,
    observable: Polynomial,
    integrand: Option<Polynomial>,
    horizon: Horizon,
    initial_set: SemialgebraicSet,
    omega_extra: SemialgebraicSet,
    symmetry: Option<Vec<i8>>,
    initial_param: Option<InitialParam>,
}

impl ProblemSpec {
    /// Builds and validates a problem. `state_vars` must not contain `t`.
    /// Dynamics and observable may be given over any sub-list of `(t, x)`;
    /// initial-set polynomials must not involve `t`.
    pub fn new(
        name: impl Into<String>,
        state_vars: &[String],
        dynamics: Vec<Polynomial>,
        observable: Polynomial,
        horizon: Horizon,
        initial_set: SemialgebraicSet,
    ) -> Result<Self> {
        if state_vars.is_empty() {
            return Err(Error::InvalidProblem("no state variables".into()));
        }
        if state_vars.iter().any(|v| v == TIME_VAR) {
            return Err(Error::InvalidProblem(
                "`t` is reserved for time and cannot be a state variable".into(),
            ));
        }
        for (i, v) in state_vars.iter().enumerate() {
            if state_vars[..i].contains(v) {
                return Err(Error::InvalidProblem(format!("duplicate state variable `{v}`")));
            }
        }
        if dynamics.len() != state_vars.len() {
            return Err(Error::InvalidProblem(format!(
                "{} state variables but {} dynamics components",
                state_vars.len(),
                dynamics.len()
            )));
        }
        let mut vars = vec![TIME_VAR.to_string()];
        vars.extend(state_vars.iter().cloned());
        let dynamics = dynamics
            .iter()
            .map(|f| f.embed(&vars))
            .collect::<Result<Vec<_>>>()?;
        let observable = observable.embed(&vars)?;
        let initial_set = initial_set.embed(state_vars).map_err(|e| match e {
            Error::VariableMismatch(v) if v == TIME_VAR => Error::InvalidProblem(
                "initial-set polynomials must not depend on t".into(),
            ),
            other => other,
        })?;
        let initial_param = InitialParam::infer(&initial_set, state_vars.len());
        Ok(ProblemSpec {
            name: name.into(),
            vars,
            dynamics,
            observable,
            integrand: None,
            horizon,
            initial_set,
            omega_extra: SemialgebraicSet::whole_space(),
            symmetry: None,
            initial_param,
        })
    }

    pub fn with_integrand(mut self, integrand: Option<Polynomial>) -> Result<Self> {
        self.integrand = integrand.map(|p| p.embed(&self.vars)).transpose()?;
        self.check_symmetry()?;
        Ok(self)
    }

    pub fn with_omega_extra(mut self, omega: SemialgebraicSet) -> Result<Self> {
        self.omega_extra = omega.embed(&self.vars)?;
        self.check_symmetry()?;
        Ok(self)
    }

    pub fn with_symmetry(mut self, signs: Option<Vec<i8>>) -> Result<Self> {
        if let Some(s) = &signs {
            if s.len() != self.nstate() {
                return Err(Error::InvalidProblem(format!(
                    "symmetry has {} signs for {} states",
                    s.len(),
                    self.nstate()
                )));
            }
            if s.iter().any(|&v| v != 1 && v != -1) {
                return Err(Error::InvalidProblem("symmetry signs must be +1 or -1".into()));
            }
        }
        self.symmetry = signs;
        self.check_symmetry()?;
        Ok(self)
    }

    pub fn with_initial_param(mut self, param: Option<InitialParam>) -> Self {
        self.initial_param = param;
        self
    }

    pub fn with_horizon(mut self, horizon: Horizon) -> Self {
        self.horizon = horizon;
        self
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn with_observable(mut self, observable: Polynomial) -> Result<Self> {
        self.observable = observable.embed(&self.vars)?;
        self.check_symmetry()?;
        Ok(self)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// `(t, x1, ..., xn)`.
    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    pub fn state_vars(&self) -> &[String] {
        &self.vars[1..]
    }

    pub fn nstate(&self) -> usize {
        self.vars.len() - 1
    }

    pub fn dynamics(&self) -> &[Polynomial] {
        &self.dynamics
    }

    pub fn observable(&self) -> &Polynomial {
        &self.observable
    }

    pub fn integrand(&self) -> Option<&Polynomial> {
        self.integrand.as_ref()
    }

    pub fn horizon(&self) -> Horizon {
        self.horizon
    }

    pub fn initial_set(&self) -> &SemialgebraicSet {
        &self.initial_set
    }

    pub fn omega_extra(&self) -> &SemialgebraicSet {
        &self.omega_extra
    }

    pub fn symmetry(&self) -> Option<&[i8]> {
        self.symmetry.as_deref()
    }

    pub fn initial_param(&self) -> Option<&InitialParam> {
        self.initial_param.as_ref()
    }

    pub fn dynamics_degree(&self) -> u32 {
        self.dynamics.iter().map(Polynomial::degree).max().unwrap_or(0)
    }

    /// True when none of F, Φ, Ψ, or the extra Ω constraints involve `t`.
    pub fn is_autonomous(&self) -> bool {
        !self.dynamics.iter().any(|f| f.degree_in(0) > 0)
            && self.observable.degree_in(0) == 0
            && self.integrand.as_ref().map_or(true, |p| p.degree_in(0) == 0)
            && !self.omega_extra.polynomials().any(|p| p.degree_in(0) > 0)
    }

    /// Full sign vector over `(t, x)` (time is never flipped).
    pub fn symmetry_signs(&self) -> Option<Vec<i8>> {
        self.symmetry.as_ref().map(|s| {
            let mut v = vec![1i8];
            v.extend_from_slice(s);
            v
        })
    }

    fn check_symmetry(&self) -> Result<()> {
        let Some(signs) = self.symmetry_signs() else {
            return Ok(());
        };
        let factors: Vec<f64> = signs.iter().map(|&s| s as f64).collect();
        for (i, f) in self.dynamics.iter().enumerate() {
            let lhs = f.scale_vars(&factors);
            let rhs = f.scale(factors[i + 1]);
            if lhs != rhs {
                return Err(Error::InvalidProblem(format!(
                    "dynamics component {} is not equivariant under the declared symmetry",
                    i + 1
                )));
            }
        }
        let invariant = |p: &Polynomial| p.scale_vars(&factors[..p.nvars()]) == *p;
        if !invariant(&self.observable) {
            return Err(Error::InvalidProblem(
                "observable is not invariant under the declared symmetry".into(),
            ));
        }
        if let Some(psi) = &self.integrand {
            if !invariant(psi) {
                return Err(Error::InvalidProblem(
                    "integrand is not invariant under the declared symmetry".into(),
                ));
            }
        }
        let x_factors = &factors[1..];
        for p in self.initial_set.polynomials() {
            if p.scale_vars(x_factors) != *p {
                return Err(Error::InvalidProblem(
                    "initial set is not invariant under the declared symmetry".into(),
                ));
            }
        }
        if !self.omega_extra.polynomials().all(invariant) {
            return Err(Error::InvalidProblem(
                "domain constraints are not invariant under the declared symmetry".into(),
            ));
        }
        Ok(())
    }

    /// Evaluates `F(t, x)` into `out`.
    pub fn eval_dynamics(&self, t: f64, x: &[f64], out: &mut [f64]) {
        let mut point = Vec::with_capacity(x.len() + 1);
        point.push(t);
        point.extend_from_slice(x);
        for (o, f) in out.iter_mut().zip(&self.dynamics) {
            *o = f.eval(&point);
        }
    }

    pub fn eval_observable(&self, t: f64, x: &[f64]) -> f64 {
        let mut point = Vec::with_capacity(x.len() + 1);
        point.push(t);
        point.extend_from_slice(x);
        self.observable.eval(&point)
    }

    /// Integral-observable transformer: appends a state `z` with `dz/dt = Ψ`,
    /// `z(t0) = 0`, and replaces the observable by `Φ + z`.
    pub fn augment_integral(&self) -> Result<ProblemSpec> {
        let psi = self
            .integrand
            .clone()
            .ok_or_else(|| Error::InvalidProblem("problem has no integrand".into()))?;
        let mut z_name = "z".to_string();
        while self.vars.contains(&z_name) {
            z_name.push('_');
        }
        let mut state = self.state_vars().to_vec();
        state.push(z_name.clone());
        let mut vars = self.vars.clone();
        vars.push(z_name.clone());
        let mut dynamics: Vec<Polynomial> = self
            .dynamics
            .iter()
            .map(|f| f.embed(&vars))
            .collect::<Result<_>>()?;
        dynamics.push(psi.embed(&vars)?);
        let z = Polynomial::variable(&vars, &z_name)?;
        let observable = &self.observable.embed(&vars)? + &z;
        let mut initial = self.initial_set.embed(&state)?;
        initial
            .equalities
            .push(Polynomial::variable(&state, &z_name)?);
        let symmetry = self.symmetry.clone().map(|mut s| {
            s.push(1);
            s
        });
        let initial_param = self.initial_param.as_ref().and_then(|p| match p {
            InitialParam::Point(v) => {
                let mut v = v.clone();
                v.push(0.0);
                Some(InitialParam::Point(v))
            }
            _ => None,
        });
        let spec = ProblemSpec::new(
            format!("{}+integral", self.name),
            &state,
            dynamics,
            observable,
            self.horizon,
            initial,
        )?
        .with_omega_extra(self.omega_extra.embed(&vars)?)?
        .with_symmetry(symmetry)?
        .with_initial_param(initial_param);
        Ok(spec)
    }

    /// Rescales states `x -> c x`: the returned problem is posed in `y = c x`.
    pub fn rescaled(&self, c: f64) -> Result<ProblemSpec> {
        if !(c > 0.0) {
            return Err(Error::InvalidProblem("state scale must be positive".into()));
        }
        let n = self.nstate();
        let mut to_x = vec![1.0 / c; n + 1];
        to_x[0] = 1.0;
        // y' = c F(t, y / c)
        let dynamics = self
            .dynamics
            .iter()
            .map(|f| f.scale_vars(&to_x).scale(c))
            .collect();
        let observable = self.observable.scale_vars(&to_x);
        let initial = self.initial_set.map(|p| Ok(p.scale_vars(&to_x[1..])))?;
        let omega = self.omega_extra.map(|p| Ok(p.scale_vars(&to_x)))?;
        let integrand = self.integrand.as_ref().map(|p| p.scale_vars(&to_x));
        let initial_param = self.initial_param.as_ref().map(|p| match p {
            InitialParam::Point(v) => InitialParam::Point(v.iter().map(|x| x * c).collect()),
            InitialParam::Circle { center, radius } => InitialParam::Circle {
                center: [center[0] * c, center[1] * c],
                radius: radius * c,
            },
            InitialParam::Interval { lo, hi } => InitialParam::Interval {
                lo: lo * c,
                hi: hi * c,
            },
            InitialParam::Ellipsoid {
                center,
                weights,
                level,
            } => InitialParam::Ellipsoid {
                center: center.iter().map(|x| x * c).collect(),
                weights: weights.clone(),
                level: level * c * c,
            },
        });
        ProblemSpec::new(
            self.name.clone(),
            self.state_vars(),
            dynamics,
            observable,
            self.horizon,
            initial,
        )?
        .with_integrand(integrand)?
        .with_omega_extra(omega)?
        .with_symmetry(self.symmetry.clone())
        .map(|s| s.with_initial_param(initial_param))
    }
}

impl ProblemSpec {
    /// Rescales time `t -> c s`: the returned problem is posed in `s = t / c`.
    pub fn time_rescaled(&self, c: f64) -> Result<ProblemSpec> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::InvalidProblem("time scale must be positive".into()));
        }
        let mut to_t = vec![1.0; self.nstate() + 1];
        to_t[0] = c;
        let mut out = self.clone();
        // dx/ds = c F(c s, x)
        out.dynamics = self.dynamics.iter().map(|f| f.scale_vars(&to_t).scale(c)).collect();
        out.observable = self.observable.scale_vars(&to_t);
        out.integrand = self.integrand.as_ref().map(|p| p.scale_vars(&to_t).scale(c));
        out.omega_extra = self.omega_extra.map(|p| Ok(p.scale_vars(&to_t)))?;
        out.horizon = match self.horizon {
            Horizon::Finite { t0, t_end } => Horizon::Finite {
                t0: t0 / c,
                t_end: t_end / c,
            },
            Horizon::Infinite { t0 } => Horizon::Infinite { t0: t0 / c },
        };
        Ok(out)
    }
}

/// `∂t V + F · ∇x V`, fully expanded, over the problem's variables.
pub fn lie_derivative(v: &Polynomial, spec: &ProblemSpec) -> Result<Polynomial> {
    let v = v.embed(spec.vars())?;
    let mut out = v.differentiate_index(0);
    for (i, f) in spec.dynamics().iter().enumerate() {
        let dv = v.differentiate_index(i + 1);
        if dv.is_zero() {
            continue;
        }
        out = &out + &(f * &dv);
    }
    Ok(out)
}

/// Extra Ω constraints plus `t - t0 >= 0` (infinite horizon) or
/// `(t - t0)(T - t) >= 0` (finite horizon).
pub fn build_omega(spec: &ProblemSpec) -> SemialgebraicSet {
    let vars = spec.vars();
    let t = Polynomial::variable(vars, TIME_VAR).expect("time variable");
    let t0 = Polynomial::constant(vars, spec.horizon().t0());
    let since = &t - &t0;
    let time_constraint = match spec.horizon() {
        Horizon::Infinite { .. } => since,
        Horizon::Finite { t_end, .. } => &since * &(&Polynomial::constant(vars, t_end) - &t),
    };
    let mut out = spec.omega_extra().clone();
    out.inequalities.insert(0, time_constraint);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polynomial::{parse, var_list};

    fn nonautonomous() -> ProblemSpec {
        builtin_problem("nonautonomous2d", &BuiltinParams::default()).unwrap()
    }

    #[test]
    fn lie_derivative_of_quadratic_matches_hand_computation() {
        let spec = nonautonomous();
        let v = parse("0.5*(1 + x1^2 + x2^2)", spec.vars()).unwrap();
        let lv = lie_derivative(&v, &spec).unwrap();
        let expected = parse("-0.1*x1^2 - x2^2", spec.vars()).unwrap();
        assert!((&lv - &expected).max_abs_coefficient() < 1e-15, "{lv}");
    }

    #[test]
    fn lie_derivative_one_dimensional_and_time() {
        let spec = builtin_problem("quadratic1d", &BuiltinParams::default()).unwrap();
        let v = parse("x", spec.vars()).unwrap();
        assert_eq!(
            lie_derivative(&v, &spec).unwrap(),
            parse("x^2", spec.vars()).unwrap()
        );
        let vt = parse("t", spec.vars()).unwrap();
        assert_eq!(
            lie_derivative(&vt, &spec).unwrap(),
            parse("1", spec.vars()).unwrap()
        );
    }

    #[test]
    fn omega_for_each_horizon() {
        let spec = nonautonomous();
        let om = build_omega(&spec);
        assert_eq!(om.inequalities, vec![parse("t", spec.vars()).unwrap()]);
        let finite = spec.clone().with_horizon(Horizon::finite(0.0, 3.0).unwrap());
        let om = build_omega(&finite);
        assert_eq!(
            om.inequalities,
            vec![parse("t*(3 - t)", spec.vars()).unwrap()]
        );
        let extra = SemialgebraicSet::new(vec![parse("4 - x1^2 - x2^2", spec.vars()).unwrap()], vec![]);
        let local = spec.with_omega_extra(extra).unwrap();
        let om = build_omega(&local);
        assert_eq!(om.inequalities.len(), 2);
        assert!(om.contains(&[1.0, 1.0, 1.0], 1e-9));
        assert!(!om.contains(&[1.0, 2.0, 1.0], 1e-9));
        assert!(!om.contains(&[-1.0, 0.0, 0.0], 1e-9));
    }

    #[test]
    fn initial_set_must_be_time_free() {
        let vars = var_list(&["t", "x"]);
        let state = var_list(&["x"]);
        let f = parse("x", &vars).unwrap();
        let bad = SemialgebraicSet::new(vec![], vec![parse("x - t", &vars).unwrap()]);
        let err = ProblemSpec::new("bad", &state, vec![f.clone()], f.clone(), Horizon::infinite(0.0), bad);
        assert!(matches!(err, Err(Error::InvalidProblem(_))));
    }

    #[test]
    fn symmetry_is_validated() {
        let spec = nonautonomous();
        assert!(spec.clone().with_symmetry(Some(vec![-1, -1])).is_err());
        let focus = builtin_problem("unstableFocus2d", &BuiltinParams::default()).unwrap();
        assert_eq!(focus.symmetry(), Some(&[-1i8, -1][..]));
    }

    #[test]
    fn initial_param_inference() {
        let spec = nonautonomous();
        assert_eq!(spec.initial_param(), Some(&InitialParam::Point(vec![0.0, 1.0])));
        let circ = builtin_problem(
            "nonautonomous2d",
            &BuiltinParams {
                initial: Some(InitialKind::Circle),
                ..Default::default()
            },
        )
        .unwrap();
        match circ.initial_param() {
            Some(InitialParam::Circle { center, radius }) => {
                assert!((center[0] + 0.75).abs() < 1e-15 && center[1] == 0.0);
                assert!((radius - 1.0).abs() < 1e-15);
            }
            other => panic!("{other:?}"),
        }
        let cubic = builtin_problem("cubicSemistable1d", &BuiltinParams::default()).unwrap();
        assert_eq!(
            cubic.initial_param(),
            Some(&InitialParam::Interval { lo: -1.0, hi: 0.0 })
        );
    }

    #[test]
    fn augmented_integral_adds_state() {
        let vars = var_list(&["t", "x"]);
        let state = var_list(&["x"]);
        let spec = ProblemSpec::new(
            "decay",
            &state,
            vec![parse("-x", &vars).unwrap()],
            parse("x", &vars).unwrap(),
            Horizon::finite(0.0, 1.0).unwrap(),
            SemialgebraicSet::new(vec![], vec![parse("x - 1", &state).unwrap()]),
        )
        .unwrap()
        .with_integrand(Some(parse("x^2", &vars).unwrap()))
        .unwrap();
        let aug = spec.augment_integral().unwrap();
        assert_eq!(aug.nstate(), 2);
        assert_eq!(aug.dynamics()[1], parse("x^2", aug.vars()).unwrap());
        assert_eq!(aug.observable(), &parse("x + z", aug.vars()).unwrap());
        assert_eq!(aug.initial_param(), Some(&InitialParam::Point(vec![1.0, 0.0])));
    }

    #[test]
    fn rescaling_conjugates_dynamics() {
        let spec = builtin_problem("unstableFocus2d", &BuiltinParams::default()).unwrap();
        let c = 2.0;
        let scaled = spec.rescaled(c).unwrap();
        let x = [0.3, -0.2];
        let y = [0.6, -0.4];
        let mut fx = [0.0; 2];
        let mut fy = [0.0; 2];
        spec.eval_dynamics(0.0, &x, &mut fx);
        scaled.eval_dynamics(0.0, &y, &mut fy);
        for i in 0..2 {
            assert!((fy[i] - c * fx[i]).abs() < 1e-14);
        }
        assert!((scaled.eval_observable(0.0, &y) - spec.eval_observable(0.0, &x)).abs() < 1e-14);
    }

    #[test]
    fn time_rescaling_conjugates_dynamics() {
        let params = BuiltinParams {
            t_end: Some(3.0),
            ..Default::default()
        };
        let spec = builtin_problem("nonautonomous2d", &params).unwrap();
        let c = 3.0;
        let scaled = spec.time_rescaled(c).unwrap();
        assert_eq!(scaled.horizon(), Horizon::finite(0.0, 1.0).unwrap());
        let x = [0.3, -0.2];
        let (t, s) = (1.8, 0.6);
        let mut fx = [0.0; 2];
        let mut fs = [0.0; 2];
        spec.eval_dynamics(t, &x, &mut fx);
        scaled.eval_dynamics(s, &x, &mut fs);
        for i in 0..2 {
            assert!((fs[i] - c * fx[i]).abs() < 1e-13);
        }
        assert!((scaled.eval_observable(s, &x) - spec.eval_observable(t, &x)).abs() < 1e-14);
    }
}
