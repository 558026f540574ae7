use std::f64::consts::PI;

use super::{Horizon, InitialParam, ProblemSpec, SemialgebraicSet};
use crate::error::{Error, Result};
use crate::polynomial::{parse, Monomial, Polynomial};

pub const BUILTIN_NAMES: &[&str] = &[
    "nonautonomous2d",
    "quadratic1d",
    "cubicSemistable1d",
    "unstableFocus2d",
    "vanDerPol",
    "burgers",
];

/// Initial-set variant for builtins that offer more than one.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InitialKind {
    Point,
    Circle,
}

/// Optional knobs for builtin problems. Unset fields take each builtin's default.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct BuiltinParams {
    pub initial: Option<InitialKind>,
    /// Horizon end `T`; `Some(f64::INFINITY)` or `None` keeps the default.
    pub t_end: Option<f64>,
    /// Initial value for `quadratic1d`.
    pub x0: Option<f64>,
    /// Number of Fourier modes for `burgers`.
    pub modes: Option<usize>,
    /// Initial energy level for `burgers`.
    pub phi0: Option<f64>,
    /// Add the a-priori ball constraint to Ω where a builtin offers one.
    pub local: Option<bool>,
}

impl BuiltinParams {
    fn horizon(&self, default: Horizon) -> Result<Horizon> {
        match self.t_end {
            Some(t) if t.is_finite() => Horizon::finite(default.t0(), t),
            Some(_) => Ok(Horizon::infinite(default.t0())),
            None => Ok(default),
        }
    }
}

fn vars_of(state: &[&str]) -> (Vec<String>, Vec<String>) {
    let state: Vec<String> = state.iter().map(|s| s.to_string()).collect();
    let mut vars = vec!["t".to_string()];
    vars.extend(state.iter().cloned());
    (vars, state)
}

fn p(text: &str, vars: &[String]) -> Polynomial {
    parse(text, vars).expect("builtin polynomial")
}

/// Instantiates a named example problem.
pub fn builtin_problem(name: &str, params: &BuiltinParams) -> Result<ProblemSpec> {
    match name {
        "nonautonomous2d" => {
            let (vars, state) = vars_of(&["x1", "x2"]);
            let dynamics = vec![
                p("x2*t - 0.1*x1 - x1*x2", &vars),
                p("-x1*t - x2 + x1^2", &vars),
            ];
            let initial = match params.initial.unwrap_or(InitialKind::Point) {
                InitialKind::Point => {
                    SemialgebraicSet::new(vec![], vec![p("x1", &state), p("x2 - 1", &state)])
                }
                InitialKind::Circle => {
                    SemialgebraicSet::new(vec![], vec![p("(x1 + 0.75)^2 + x2^2 - 1", &state)])
                }
            };
            ProblemSpec::new(
                name,
                &state,
                dynamics,
                p("x1", &vars),
                params.horizon(Horizon::infinite(0.0))?,
                initial,
            )
        }
        "quadratic1d" => {
            let (vars, state) = vars_of(&["x"]);
            let x0 = params.x0.unwrap_or(-0.75);
            ProblemSpec::new(
                name,
                &state,
                vec![p("x^2", &vars)],
                p("x", &vars),
                params.horizon(Horizon::infinite(0.0))?,
                SemialgebraicSet::new(
                    vec![],
                    vec![&p("x", &state) - &Polynomial::constant(&state, x0)],
                ),
            )
        }
        "cubicSemistable1d" => {
            let (vars, state) = vars_of(&["x"]);
            let spec = ProblemSpec::new(
                name,
                &state,
                vec![p("x^2 - x^3", &vars)],
                p("4*x*(1 - x)", &vars),
                params.horizon(Horizon::infinite(0.0))?,
                SemialgebraicSet::new(vec![p("x + 1", &state), p("-x", &state)], vec![]),
            )?;
            if params.local.unwrap_or(true) {
                spec.with_omega_extra(SemialgebraicSet::new(vec![p("1 - x^2", &vars)], vec![]))
            } else {
                Ok(spec)
            }
        }
        "unstableFocus2d" => {
            let (vars, state) = vars_of(&["x1", "x2"]);
            ProblemSpec::new(
                name,
                &state,
                vec![
                    p("0.2*x1 + x2 - x2*(x1^2 + x2^2)", &vars),
                    p("-0.4*x2 + x1*(x1^2 + x2^2)", &vars),
                ],
                p("x1^2 + x2^2", &vars),
                params.horizon(Horizon::infinite(0.0))?,
                SemialgebraicSet::new(vec![], vec![p("x1^2 + x2^2 - 0.25", &state)]),
            )?
            .with_symmetry(Some(vec![-1, -1]))
        }
        "vanDerPol" => {
            let (vars, state) = vars_of(&["x1", "x2"]);
            ProblemSpec::new(
                name,
                &state,
                vec![p("x2", &vars), p("(1 - 9*x1^2)*x2 - x1", &vars)],
                p("x1^2 + x2^2", &vars),
                params.horizon(Horizon::infinite(0.0))?,
                SemialgebraicSet::new(vec![], vec![p("x1^2 + x2^2 - 0.04", &state)]),
            )?
            .with_symmetry(Some(vec![-1, -1]))
        }
        "burgers" => {
            let n = params.modes.unwrap_or(16);
            let phi0 = params.phi0.unwrap_or(1.0);
            if n == 0 {
                return Err(Error::InvalidProblem("burgers needs at least one mode".into()));
            }
            if !(phi0 > 0.0) {
                return Err(Error::InvalidProblem("burgers needs phi0 > 0".into()));
            }
            let (dynamics, observable) = burgers_truncation(n);
            let vars = observable.vars().to_vec();
            let state = vars[1..].to_vec();
            let obs_x = observable.embed(&state)?;
            let initial = SemialgebraicSet::new(
                vec![],
                vec![&obs_x - &Polynomial::constant(&state, phi0)],
            );
            let weights: Vec<f64> = (1..=n).map(|k| 2.0 * PI * PI * (k * k) as f64).collect();
            let signs: Vec<i8> = (1..=n).map(|k| if k % 2 == 1 { -1 } else { 1 }).collect();
            let mut spec = ProblemSpec::new(
                name,
                &state,
                dynamics,
                observable,
                params.horizon(Horizon::infinite(0.0))?,
                initial,
            )?
            .with_symmetry(Some(signs))?
            .with_initial_param(Some(InitialParam::Ellipsoid {
                center: vec![0.0; n],
                weights,
                level: phi0,
            }));
            if params.local.unwrap_or(false) {
                let r2 = phi0 / (2.0 * PI * PI);
                let mut ball = Polynomial::constant(&vars, r2);
                for k in 1..=n {
                    ball.add_term(Monomial::from_pairs([(k, 2)]), -1.0);
                }
                spec = spec.with_omega_extra(SemialgebraicSet::new(vec![ball], vec![]))?;
            }
            Ok(spec)
        }
        other => Err(Error::UnknownBuiltin(other.to_string())),
    }
}

/// Galerkin truncation of the viscous Burgers equation on `N` sine modes:
/// returns the dynamics over `(t, a1, ..., aN)` and the energy-dissipation
/// observable `2π² Σ n² a_n²`.
pub fn burgers_truncation(n_modes: usize) -> (Vec<Polynomial>, Polynomial) {
    let mut vars = vec!["t".to_string()];
    vars.extend((1..=n_modes).map(|k| format!("a{k}")));
    let mut dynamics = Vec::with_capacity(n_modes);
    let sq2pi = std::f64::consts::SQRT_2 * PI;
    for n in 1..=n_modes {
        let mut f = Polynomial::zero(&vars);
        let nf = n as f64;
        f.add_term(Monomial::var(n), -(2.0 * PI * nf).powi(2));
        let c = sq2pi * nf;
        for m in 1..=(n_modes - n) {
            f.add_term(Monomial::from_pairs([(m, 1), (m + n, 1)]), c);
        }
        for m in 1..n {
            f.add_term(Monomial::from_pairs([(m, 1), (n - m, 1)]), -0.5 * c);
        }
        dynamics.push(f);
    }
    let mut phi = Polynomial::zero(&vars);
    for k in 1..=n_modes {
        phi.add_term(Monomial::from_pairs([(k, 2)]), 2.0 * PI * PI * (k * k) as f64);
    }
    (dynamics, phi)
}
