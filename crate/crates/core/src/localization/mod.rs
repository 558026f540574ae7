//! Spacetime sets that must contain near-optimal trajectories: the level
//! band `S_δ = {0 ≤ λ − V ≤ δ}` and the slow-decay band `R_ε = {−ε ≤ LV ≤ 0}`.

mod format;

pub use format::{read_rle, write_csv, write_rle};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::system::ProblemSpec;
use crate::trajectories::{AuxFunction, Trajectory};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SetKind {
    SDelta,
    REps,
    Intersection,
}

impl SetKind {
    pub(crate) fn code(self) -> u8 {
        match self {
            SetKind::SDelta => 0,
            SetKind::REps => 1,
            SetKind::Intersection => 2,
        }
    }

    pub(crate) fn from_code(c: u8) -> Option<Self> {
        match c {
            0 => Some(SetKind::SDelta),
            1 => Some(SetKind::REps),
            2 => Some(SetKind::Intersection),
            _ => None,
        }
    }
}

/// Membership of grid nodes in a localization set.
#[derive(Clone, Debug, PartialEq)]
pub struct LevelSetGrid {
    pub grid: Grid,
    /// Axis names: `t` followed by the state names, or the state names only.
    pub axes: Vec<String>,
    pub kind: SetKind,
    /// `λ` for `S_δ`; NaN otherwise.
    pub lambda: f64,
    /// `δ` for `S_δ`, `ε` for `R_ε`.
    pub parameter: f64,
    pub members: Vec<bool>,
}

impl LevelSetGrid {
    pub fn count(&self) -> usize {
        self.members.iter().filter(|&&m| m).count()
    }

    pub fn is_subset_of(&self, other: &LevelSetGrid) -> bool {
        self.grid == other.grid && self.members.iter().zip(&other.members).all(|(a, b)| !a || *b)
    }

    /// Nodewise AND of two sets on the same grid.
    pub fn intersect(&self, other: &LevelSetGrid) -> Result<LevelSetGrid> {
        if self.grid != other.grid {
            return Err(Error::InvalidProblem("cannot intersect sets on different grids".into()));
        }
        Ok(LevelSetGrid {
            grid: self.grid.clone(),
            axes: self.axes.clone(),
            kind: SetKind::Intersection,
            lambda: f64::NAN,
            parameter: f64::NAN,
            members: self.members.iter().zip(&other.members).map(|(a, b)| *a && *b).collect(),
        })
    }
}

fn axes_for(spec: &ProblemSpec, grid: &Grid) -> Result<(bool, Vec<String>)> {
    let n = spec.nstate();
    if grid.dimension() == n + 1 {
        Ok((true, spec.vars().to_vec()))
    } else if grid.dimension() == n {
        Ok((false, spec.state_vars().to_vec()))
    } else {
        Err(Error::InvalidProblem(format!(
            "grid has {} axes; expected {n} (state) or {} (time and state)",
            grid.dimension(),
            n + 1
        )))
    }
}

fn classify(
    spec: &ProblemSpec,
    grid: &Grid,
    member: impl Fn(f64, &[f64]) -> bool + Sync,
) -> Result<(Vec<String>, Vec<bool>)> {
    let (with_time, axes) = axes_for(spec, grid)?;
    let t0 = spec.horizon().t0();
    let members = (0..grid.len())
        .into_par_iter()
        .map(|idx| {
            let c = grid.node_vec(idx);
            if with_time {
                member(c[0], &c[1..])
            } else {
                member(t0, &c)
            }
        })
        .collect();
    Ok((axes, members))
}

/// Nodes with `0 ≤ λ − V ≤ δ`.
pub fn compute_s_delta(v: &dyn AuxFunction, lambda: f64, delta: f64, spec: &ProblemSpec, grid: &Grid) -> Result<LevelSetGrid> {
    if !(delta >= 0.0) {
        return Err(Error::InvalidProblem("delta must be nonnegative".into()));
    }
    let (axes, members) = classify(spec, grid, |t, x| {
        let gap = lambda - v.value(t, x);
        (0.0..=delta).contains(&gap)
    })?;
    Ok(LevelSetGrid {
        grid: grid.clone(),
        axes,
        kind: SetKind::SDelta,
        lambda,
        parameter: delta,
        members,
    })
}

/// Nodes with `−ε ≤ LV ≤ 0`.
pub fn compute_r_eps(v: &dyn AuxFunction, eps: f64, spec: &ProblemSpec, grid: &Grid) -> Result<LevelSetGrid> {
    if !(eps >= 0.0) {
        return Err(Error::InvalidProblem("eps must be nonnegative".into()));
    }
    let (axes, members) = classify(spec, grid, |t, x| {
        let lv = v.lie_derivative(spec, t, x);
        (-eps..=0.0).contains(&lv)
    })?;
    Ok(LevelSetGrid {
        grid: grid.clone(),
        axes,
        kind: SetKind::REps,
        lambda: f64::NAN,
        parameter: eps,
        members,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ContainmentAudit {
    /// False when `Φ` never reaches `λ − δ` along the trajectory.
    pub applicable: bool,
    /// Latest time at which `Φ ≥ λ − δ`.
    pub t_star: f64,
    pub in_s_delta_until_t_star: bool,
    /// Extremes of `λ − V` along the trajectory on `[t0, t*]`.
    pub min_gap: f64,
    pub max_gap: f64,
    /// Time on `[t0, t*]` with `LV < −ε`.
    pub time_outside_r_eps: f64,
    pub budget: f64,
    /// Largest sampling interval used for the time measurement.
    pub max_sample_spacing: f64,
}

const SUBSAMPLES: usize = 10;

/// Audits a trajectory against `S_δ` and `R_ε` on `[t0, t*]`, sampling the
/// dense output at ten points per accepted step.
pub fn audit_containment(
    v: &dyn AuxFunction,
    lambda: f64,
    delta: f64,
    eps: f64,
    spec: &ProblemSpec,
    traj: &Trajectory,
) -> Result<ContainmentAudit> {
    if !(delta >= 0.0) || !(eps > 0.0) {
        return Err(Error::InvalidProblem("need delta >= 0 and eps > 0".into()));
    }
    let mut times = Vec::with_capacity(traj.times.len() * SUBSAMPLES);
    for w in traj.times.windows(2) {
        for j in 0..SUBSAMPLES {
            times.push(w[0] + (w[1] - w[0]) * j as f64 / SUBSAMPLES as f64);
        }
    }
    times.push(traj.t_final());
    let n = traj.dimension();
    let mut x = vec![0.0; n];
    let threshold = lambda - delta;
    let phi = |t: f64, x: &mut Vec<f64>| {
        traj.eval(t, x);
        spec.eval_observable(t, x)
    };

    let last = times.iter().rposition(|&t| phi(t, &mut x) >= threshold);
    let budget = delta / eps;
    let Some(last) = last else {
        return Ok(ContainmentAudit {
            applicable: false,
            t_star: f64::NAN,
            in_s_delta_until_t_star: false,
            min_gap: f64::NAN,
            max_gap: f64::NAN,
            time_outside_r_eps: 0.0,
            budget,
            max_sample_spacing: 0.0,
        });
    };
    let mut t_star = times[last];
    if last + 1 < times.len() {
        let (mut lo, mut hi) = (times[last], times[last + 1]);
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if phi(mid, &mut x) >= threshold {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        t_star = lo;
    }
    let mut samples: Vec<f64> = times.into_iter().filter(|&t| t < t_star).collect();
    samples.push(t_star);

    let mut min_gap = f64::INFINITY;
    let mut max_gap = f64::NEG_INFINITY;
    let mut lie = Vec::with_capacity(samples.len());
    for &t in &samples {
        traj.eval(t, &mut x);
        let gap = lambda - v.value(t, &x);
        min_gap = min_gap.min(gap);
        max_gap = max_gap.max(gap);
        lie.push(v.lie_derivative(spec, t, &x) + eps);
    }

    // Piecewise-linear measure of {LV + ε < 0}.
    let mut outside = 0.0;
    let mut spacing: f64 = 0.0;
    for k in 1..samples.len() {
        let dt = samples[k] - samples[k - 1];
        spacing = spacing.max(dt);
        let (a, b) = (lie[k - 1], lie[k]);
        outside += if a < 0.0 && b < 0.0 {
            dt
        } else if a < 0.0 {
            dt * a / (a - b)
        } else if b < 0.0 {
            dt * b / (b - a)
        } else {
            0.0
        };
    }
    Ok(ContainmentAudit {
        applicable: true,
        t_star,
        in_s_delta_until_t_star: min_gap >= 0.0 && max_gap <= delta,
        min_gap,
        max_gap,
        time_outside_r_eps: outside,
        budget,
        max_sample_spacing: spacing,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polynomial::{parse, Polynomial};
    use crate::system::{builtin_problem, BuiltinParams, Horizon, SemialgebraicSet};
    use crate::trajectories::{integrate, IntegrateOptions, PolynomialAux};

    fn ex21() -> ProblemSpec {
        builtin_problem("nonautonomous2d", &BuiltinParams::default()).unwrap()
    }

    #[test]
    fn constant_v_fills_s_delta() {
        let spec = ex21();
        let v = PolynomialAux::new(&Polynomial::constant(spec.vars(), 0.7), &spec).unwrap();
        let grid = Grid::parse("-1:1,-1:1", "9").unwrap();
        let s = compute_s_delta(&v, 0.7, 0.0, &spec, &grid).unwrap();
        assert_eq!(s.count(), grid.len());
        assert_eq!(s.axes, vec!["x1", "x2"]);
    }

    #[test]
    fn quadratic_r_eps_is_ellipse() {
        let spec = ex21();
        let v = PolynomialAux::new(&parse("0.5*(1 + x1^2 + x2^2)", spec.vars()).unwrap(), &spec).unwrap();
        let grid = Grid::parse("0:1,-2:2,-1:1", "3,41,21").unwrap();
        let r = compute_r_eps(&v, 0.1, &spec, &grid).unwrap();
        for idx in 0..grid.len() {
            let c = grid.node_vec(idx);
            let inside = 0.1 * c[1] * c[1] + c[2] * c[2] <= 0.1 + 1e-12;
            assert_eq!(r.members[idx], inside, "{c:?}");
        }
        let wider = compute_r_eps(&v, 0.2, &spec, &grid).unwrap();
        assert!(r.is_subset_of(&wider));
        assert!(r.intersect(&wider).unwrap().members == r.members);
    }

    #[test]
    fn exact_pair_spends_no_time_outside() {
        let vars = ["t".to_string(), "x".to_string()];
        let state = vec!["x".to_string()];
        let spec = ProblemSpec::new(
            "drift",
            &state,
            vec![Polynomial::constant(&vars, 1.0)],
            parse("x", &vars).unwrap(),
            Horizon::finite(0.0, 1.0).unwrap(),
            SemialgebraicSet::new(vec![], vec![parse("x", &state).unwrap()]),
        )
        .unwrap();
        let v = PolynomialAux::new(&parse("x + 1 - t", &vars).unwrap(), &spec).unwrap();
        let traj = integrate(&spec, &[0.0], 1.0, &IntegrateOptions::default()).unwrap();
        let a = audit_containment(&v, 1.0, 0.1, 0.01, &spec, &traj).unwrap();
        assert!(a.applicable && a.in_s_delta_until_t_star);
        assert!((a.t_star - 1.0).abs() < 1e-12);
        assert_eq!(a.time_outside_r_eps, 0.0);

        let never = audit_containment(&v, 5.0, 0.1, 0.01, &spec, &traj).unwrap();
        assert!(!never.applicable);
    }
}
