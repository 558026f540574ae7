use std::cell::Cell;
use std::cmp::Ordering;
use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::{integrate_from, IntegrateOptions};
use crate::error::{Error, Result};
use crate::system::{Horizon, InitialParam, ProblemSpec};

#[derive(Clone, Debug)]
pub struct LowerBoundOptions {
    pub starts: usize,
    /// Objective evaluations allowed per local search.
    pub local_budget: usize,
    /// Integration window; for infinite horizons this is the initial window,
    /// doubled until the maximum settles.
    pub t_end: Option<f64>,
    pub seed: u64,
    /// Overrides the problem's own parameterization of `X0`.
    pub param: Option<InitialParam>,
    pub integrate: IntegrateOptions,
}

impl Default for LowerBoundOptions {
    fn default() -> Self {
        LowerBoundOptions {
            starts: 16,
            local_budget: 400,
            t_end: None,
            seed: 0,
            param: None,
            integrate: IntegrateOptions::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LowerBound {
    pub value: f64,
    pub x0: Vec<f64>,
    /// Time at which the maximum is attained.
    pub time: f64,
    pub evaluations: usize,
    /// Objective evaluations skipped because integration failed.
    pub failures: usize,
}

const DEFAULT_WINDOW: f64 = 10.0;
const MAX_DOUBLINGS: usize = 12;

/// Largest `Φ(t, x(t))` along the trajectory from `x0`, with its time.
///
/// Finite horizons integrate to `T` (or `window` if given). Infinite horizons
/// integrate to `window` and keep doubling until the maximum changes by at
/// most `1e-9`.
pub fn max_along(spec: &ProblemSpec, x0: &[f64], window: Option<f64>, opts: &IntegrateOptions) -> Result<(f64, f64)> {
    let t0 = spec.horizon().t0();
    let phi = |t: f64, x: &[f64]| spec.eval_observable(t, x);
    match spec.horizon() {
        Horizon::Finite { t_end, .. } => {
            let end = window.unwrap_or(t_end);
            let tr = integrate_from(spec, t0, x0, end, opts)?;
            Ok(tr.max_of(t0, tr.t_final(), phi))
        }
        Horizon::Infinite { .. } => {
            let mut end = t0 + window.unwrap_or(DEFAULT_WINDOW);
            let tr = integrate_from(spec, t0, x0, end, opts)?;
            let mut best = tr.max_of(t0, tr.t_final(), phi);
            if tr.blowup.is_some() {
                return Ok(best);
            }
            let mut start = end;
            let mut x = tr.final_state().to_vec();
            for _ in 0..MAX_DOUBLINGS {
                end = t0 + 2.0 * (end - t0);
                let tr = integrate_from(spec, start, &x, end, opts)?;
                let ext = tr.max_of(start, tr.t_final(), phi);
                let gain = ext.0 - best.0;
                if ext.0 > best.0 {
                    best = ext;
                }
                if tr.blowup.is_some() || gain <= 1e-9 {
                    break;
                }
                start = end;
                x = tr.final_state().to_vec();
            }
            Ok(best)
        }
    }
}

/// Multistart Nelder–Mead maximization of `max_t Φ` over the initial set.
/// The result is a valid lower bound on the true maximum but carries no
/// global guarantee.
pub fn lower_bound(spec: &ProblemSpec, opts: &LowerBoundOptions) -> Result<LowerBound> {
    let param = opts
        .param
        .clone()
        .or_else(|| spec.initial_param().cloned())
        .ok_or_else(|| Error::InvalidProblem("initial set has no known parameterization".into()))?;
    if param.point(&vec![0.0; param.dimension()]).len() != spec.nstate() {
        return Err(Error::InvalidProblem("initial-set parameterization has the wrong dimension".into()));
    }
    let objective = |p: &[f64]| -> Option<(f64, f64)> {
        let x0 = param.point(p);
        match max_along(spec, &x0, opts.t_end, &opts.integrate) {
            Ok(v) if v.0.is_finite() => Some(v),
            Ok(_) => None,
            Err(e) => {
                log::warn!("skipping initial condition {x0:?}: {e}");
                None
            }
        }
    };

    let dim = param.dimension();
    let starts = initial_points(&param, opts.starts.max(1), opts.seed);
    let step = initial_step(&param, opts.starts.max(1));
    let runs: Vec<LocalResult> = if dim == 0 {
        vec![local_search(&objective, &[], 0.0, 1)]
    } else {
        starts
            .par_iter()
            .map(|p| local_search(&objective, p, step, opts.local_budget))
            .collect()
    };

    let evaluations = runs.iter().map(|r| r.evaluations).sum();
    let failures = runs.iter().map(|r| r.failures).sum();
    let best = runs
        .into_iter()
        .filter(|r| r.value.is_finite())
        .map(|r| (r.value, param.point(&r.params), r.time))
        .max_by(|a, b| {
            a.0.partial_cmp(&b.0)
                .unwrap_or(Ordering::Equal)
                .then_with(|| lex_cmp(&b.1, &a.1))
        })
        .ok_or_else(|| Error::Numerical("every sampled trajectory failed to integrate".into()))?;
    Ok(LowerBound {
        value: best.0,
        x0: best.1,
        time: best.2,
        evaluations,
        failures,
    })
}

fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.partial_cmp(y) {
            Some(Ordering::Equal) | None => continue,
            Some(o) => return o,
        }
    }
    Ordering::Equal
}

fn initial_points(param: &InitialParam, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|k| {
            let u: f64 = rng.random();
            let frac = (k as f64 + u) / count as f64;
            match param {
                InitialParam::Point(_) => vec![],
                InitialParam::Circle { .. } => vec![2.0 * PI * frac],
                InitialParam::Interval { lo, hi } => vec![lo + (hi - lo) * frac],
                InitialParam::Ellipsoid { center, .. } => {
                    (0..center.len()).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
                }
            }
        })
        .collect()
}

fn initial_step(param: &InitialParam, count: usize) -> f64 {
    match param {
        InitialParam::Point(_) => 0.0,
        InitialParam::Circle { .. } => 2.0 * PI / count as f64,
        InitialParam::Interval { lo, hi } => (hi - lo) / count as f64,
        InitialParam::Ellipsoid { .. } => 0.5,
    }
}

struct LocalResult {
    value: f64,
    time: f64,
    params: Vec<f64>,
    evaluations: usize,
    failures: usize,
}

/// Nelder–Mead maximization from `start` with an axis-aligned initial simplex.
fn local_search(
    objective: &(impl Fn(&[f64]) -> Option<(f64, f64)> + Sync),
    start: &[f64],
    step: f64,
    budget: usize,
) -> LocalResult {
    let n = start.len();
    let evaluations = Cell::new(0usize);
    let failures = Cell::new(0usize);
    let eval = |p: &[f64]| -> (f64, f64) {
        evaluations.set(evaluations.get() + 1);
        match objective(p) {
            Some(v) => v,
            None => {
                failures.set(failures.get() + 1);
                (f64::NEG_INFINITY, f64::NAN)
            }
        }
    };

    let mut simplex: Vec<(Vec<f64>, (f64, f64))> = Vec::with_capacity(n + 1);
    let f0 = eval(start);
    simplex.push((start.to_vec(), f0));
    for i in 0..n {
        let mut p = start.to_vec();
        p[i] += step;
        let f = eval(&p);
        simplex.push((p, f));
    }
    let by_value = |a: &(Vec<f64>, (f64, f64)), b: &(Vec<f64>, (f64, f64))| {
        b.1 .0.partial_cmp(&a.1 .0).unwrap_or(Ordering::Equal)
    };
    while n > 0 && evaluations.get() < budget {
        simplex.sort_by(by_value);
        let best = simplex[0].1 .0;
        let worst = simplex[n].1 .0;
        let size = simplex[1..]
            .iter()
            .map(|(p, _)| p.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        if size <= 1e-11 || (best.is_finite() && (best - worst).abs() <= 1e-13 * (1.0 + best.abs()) && size <= 1e-7) {
            break;
        }
        let centroid: Vec<f64> = (0..n)
            .map(|j| simplex[..n].iter().map(|(p, _)| p[j]).sum::<f64>() / n as f64)
            .collect();
        let towards = |coef: f64| -> Vec<f64> {
            (0..n)
                .map(|j| centroid[j] + coef * (simplex[n].0[j] - centroid[j]))
                .collect()
        };
        let xr = towards(-1.0);
        let fr = eval(&xr);
        if fr.0 > best {
            let xe = towards(-2.0);
            let fe = eval(&xe);
            simplex[n] = if fe.0 > fr.0 { (xe, fe) } else { (xr, fr) };
        } else if fr.0 > simplex[n - 1].1 .0 {
            simplex[n] = (xr, fr);
        } else {
            let (xc, fc) = if fr.0 > worst {
                let xc = towards(-0.5);
                let fc = eval(&xc);
                (xc, fc)
            } else {
                let xc = towards(0.5);
                let fc = eval(&xc);
                (xc, fc)
            };
            if fc.0 > worst.max(fr.0) {
                simplex[n] = (xc, fc);
            } else {
                let x0 = simplex[0].0.clone();
                for entry in simplex.iter_mut().skip(1) {
                    let p: Vec<f64> = entry.0.iter().zip(&x0).map(|(a, b)| b + 0.5 * (a - b)).collect();
                    let f = eval(&p);
                    *entry = (p, f);
                }
            }
        }
    }
    simplex.sort_by(by_value);
    let (params, (value, time)) = simplex.swap_remove(0);
    LocalResult {
        value,
        time,
        params,
        evaluations: evaluations.get(),
        failures: failures.get(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nelder_mead_finds_quadratic_peak() {
        let f = |p: &[f64]| Some((-(p[0] - 1.0).powi(2) - 2.0 * (p[1] + 0.5).powi(2) + 3.0, 0.0));
        let r = local_search(&f, &[0.0, 0.0], 0.5, 2000);
        assert!((r.value - 3.0).abs() < 1e-12);
        assert!((r.params[0] - 1.0).abs() < 1e-5 && (r.params[1] + 0.5).abs() < 1e-5);
    }

    #[test]
    fn starts_are_reproducible() {
        let p = InitialParam::Circle {
            center: [0.0, 0.0],
            radius: 1.0,
        };
        assert_eq!(initial_points(&p, 5, 7), initial_points(&p, 5, 7));
        assert_ne!(initial_points(&p, 5, 7), initial_points(&p, 5, 8));
    }
}
