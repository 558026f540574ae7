use super::{integrate_from, IntegrateOptions, Trajectory};
use crate::error::{Error, Result};
use crate::system::ProblemSpec;

#[derive(Clone, Debug)]
pub struct CycleOptions {
    /// Time integrated before looking for the orbit.
    pub transient: f64,
    /// Maximum number of section returns tried.
    pub max_returns: usize,
    /// Relative distance between successive returns accepted as periodic.
    pub return_tol: f64,
    pub integrate: IntegrateOptions,
}

impl Default for CycleOptions {
    fn default() -> Self {
        CycleOptions {
            transient: 200.0,
            max_returns: 100,
            return_tol: 1e-7,
            integrate: IntegrateOptions::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LimitCycle {
    pub max: f64,
    pub period: f64,
    /// State where the maximum is attained.
    pub argmax: Vec<f64>,
}

/// Maximum of `Φ` over the periodic orbit reached from the initial set.
///
/// Integrates past the transient, then follows returns to the section
/// through the current point normal to the flow until they repeat.
pub fn max_on_limit_cycle(spec: &ProblemSpec, opts: &CycleOptions) -> Result<LimitCycle> {
    if !spec.is_autonomous() {
        return Err(Error::InvalidProblem("limit cycles need autonomous dynamics".into()));
    }
    let param = spec
        .initial_param()
        .ok_or_else(|| Error::InvalidProblem("initial set has no known parameterization".into()))?;
    let x0 = param.point(&vec![0.0; param.dimension()]);
    let n = spec.nstate();
    let tr = integrate_from(spec, 0.0, &x0, opts.transient, &opts.integrate)?;
    if tr.blowup.is_some() {
        return Err(Error::Numerical("trajectory escaped before reaching a periodic orbit".into()));
    }
    let mut p = tr.final_state().to_vec();
    let mut prev_period = f64::NAN;
    for _ in 0..opts.max_returns {
        let mut normal = vec![0.0; n];
        spec.eval_dynamics(0.0, &p, &mut normal);
        let speed = normal.iter().map(|v| v * v).sum::<f64>().sqrt();
        if speed <= 1e-12 {
            return Err(Error::Numerical("trajectory settled on an equilibrium".into()));
        }
        let (period, q, orbit) = next_return(spec, &p, &normal, opts)?;
        let scale = 1.0 + p.iter().map(|v| v * v).sum::<f64>().sqrt();
        let dist = p.iter().zip(&q).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let settled = (period - prev_period).abs() <= opts.return_tol * period;
        if dist <= opts.return_tol * scale && settled {
            let (max, t) = orbit.max_of(0.0, period, |t, x| spec.eval_observable(t, x));
            return Ok(LimitCycle {
                max,
                period,
                argmax: orbit.state_at(t),
            });
        }
        prev_period = period;
        p = q;
    }
    Err(Error::Numerical(format!(
        "no periodic orbit detected within {} section returns",
        opts.max_returns
    )))
}

/// First upward crossing of `normal · (x − p) = 0` after leaving `p`.
fn next_return(spec: &ProblemSpec, p: &[f64], normal: &[f64], opts: &CycleOptions) -> Result<(f64, Vec<f64>, Trajectory)> {
    let g = |x: &[f64]| normal.iter().zip(x.iter().zip(p)).map(|(c, (a, b))| c * (a - b)).sum::<f64>();
    let mut window = 10.0;
    for _ in 0..8 {
        let tr = integrate_from(spec, 0.0, p, window, &opts.integrate)?;
        if tr.blowup.is_some() {
            return Err(Error::Numerical("trajectory escaped while following the orbit".into()));
        }
        let mut left_section = false;
        for k in 1..tr.times.len() {
            let (ga, gb) = (g(&tr.states[k - 1]), g(&tr.states[k]));
            if ga < 0.0 {
                left_section = true;
            }
            if left_section && ga < 0.0 && gb >= 0.0 {
                let (mut lo, mut hi) = (tr.times[k - 1], tr.times[k]);
                let mut x = vec![0.0; p.len()];
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    tr.eval(mid, &mut x);
                    if g(&x) < 0.0 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                    if hi - lo <= 4.0 * f64::EPSILON * hi {
                        break;
                    }
                }
                let t = 0.5 * (lo + hi);
                return Ok((t, tr.state_at(t), tr));
            }
        }
        window *= 2.0;
    }
    Err(Error::Numerical("trajectory did not return to the section".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polynomial::Polynomial;
    use crate::system::{builtin_problem, BuiltinParams};

    #[test]
    fn van_der_pol_cycle() {
        let spec = builtin_problem("vanDerPol", &BuiltinParams::default()).unwrap();
        let c = max_on_limit_cycle(&spec, &CycleOptions::default()).unwrap();
        assert!((c.max - 0.889856).abs() < 1e-3, "{c:?}");
        let zero = spec.clone().with_observable(Polynomial::zero(spec.vars())).unwrap();
        assert_eq!(max_on_limit_cycle(&zero, &CycleOptions::default()).unwrap().max, 0.0);
    }
}
