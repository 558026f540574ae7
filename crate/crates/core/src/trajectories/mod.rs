//! Trajectory integration, lower-bound searches over the initial set, and
//! grid checks of candidate auxiliary functions.

mod certificate;
mod cycle;
mod search;

pub use certificate::{check_certificate, check_certificate_with, AuxFunction, CertificateReport, FnAux, PolynomialAux};
pub use cycle::{max_on_limit_cycle, CycleOptions, LimitCycle};
pub use search::{lower_bound, max_along, LowerBound, LowerBoundOptions};

use std::io::Write;

use crate::error::{Error, Result};
use crate::system::ProblemSpec;

#[derive(Clone, Debug)]
pub struct IntegrateOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Integration stops with the blowup flag once `‖x‖₂` exceeds this.
    pub norm_cap: f64,
    pub max_steps: usize,
}

impl Default for IntegrateOptions {
    fn default() -> Self {
        IntegrateOptions {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            norm_cap: 1e8,
            max_steps: 2_000_000,
        }
    }
}

/// One accepted step with its continuous extension.
#[derive(Clone, Debug)]
struct DenseStep {
    t: f64,
    h: f64,
    /// Five coefficient vectors of length `n`, concatenated.
    coef: Vec<f64>,
}

/// A numerically integrated trajectory with dense output.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    steps: Vec<DenseStep>,
    /// Time at which the state norm exceeded the cap, if it did.
    pub blowup: Option<f64>,
}

impl Trajectory {
    pub fn dimension(&self) -> usize {
        self.states[0].len()
    }

    pub fn t_start(&self) -> f64 {
        self.times[0]
    }

    pub fn t_final(&self) -> f64 {
        *self.times.last().unwrap()
    }

    pub fn final_state(&self) -> &[f64] {
        self.states.last().unwrap()
    }

    pub fn num_steps(&self) -> usize {
        self.steps.len()
    }

    /// Dense-output state at `t`, clamped to the integrated interval.
    pub fn eval(&self, t: f64, out: &mut [f64]) {
        if self.steps.is_empty() || t <= self.t_start() {
            out.copy_from_slice(&self.states[0]);
            return;
        }
        if t >= self.t_final() {
            out.copy_from_slice(self.final_state());
            return;
        }
        let k = self.times.partition_point(|&s| s <= t).saturating_sub(1);
        self.eval_in_step(k.min(self.steps.len() - 1), t, out);
    }

    pub fn state_at(&self, t: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.dimension()];
        self.eval(t, &mut out);
        out
    }

    fn eval_in_step(&self, k: usize, t: f64, out: &mut [f64]) {
        let step = &self.steps[k];
        let n = out.len();
        let th = ((t - step.t) / step.h).clamp(0.0, 1.0);
        let th1 = 1.0 - th;
        let c = &step.coef;
        for i in 0..n {
            out[i] = c[i] + th * (c[n + i] + th1 * (c[2 * n + i] + th * (c[3 * n + i] + th1 * c[4 * n + i])));
        }
    }

    /// Maximum of `f(t, x(t))` over `[a, b]`, with dense-output sampling and
    /// golden-section refinement around the best sample.
    pub fn max_of(&self, a: f64, b: f64, f: impl Fn(f64, &[f64]) -> f64) -> (f64, f64) {
        let n = self.dimension();
        let a = a.max(self.t_start());
        let b = b.min(self.t_final());
        let mut x = vec![0.0; n];
        let mut eval = |t: f64| {
            self.eval(t, &mut x);
            f(t, &x)
        };
        let mut best = (eval(a), a);
        if b <= a {
            return best;
        }
        const SUB: usize = 8;
        let mut bracket = (a, a);
        let first = self.times.partition_point(|&s| s <= a).saturating_sub(1);
        for k in first..self.steps.len() {
            let (s0, s1) = (self.times[k], self.times[k + 1]);
            if s0 >= b {
                break;
            }
            let lo = s0.max(a);
            let hi = s1.min(b);
            for j in 1..=SUB {
                let t = lo + (hi - lo) * j as f64 / SUB as f64;
                let v = eval(t);
                if v > best.0 {
                    best = (v, t);
                    let dt = (hi - lo) / SUB as f64;
                    bracket = ((t - dt).max(a), (t + dt).min(b));
                }
            }
        }
        let (mut lo, mut hi) = bracket;
        if hi > lo {
            let g = 0.5 * (5f64.sqrt() - 1.0);
            let mut c = hi - g * (hi - lo);
            let mut d = lo + g * (hi - lo);
            let (mut fc, mut fd) = (eval(c), eval(d));
            for _ in 0..80 {
                if hi - lo <= 1e-13 * (1.0 + hi.abs()) {
                    break;
                }
                if fc > fd {
                    hi = d;
                    d = c;
                    fd = fc;
                    c = hi - g * (hi - lo);
                    fc = eval(c);
                } else {
                    lo = c;
                    c = d;
                    fc = fd;
                    d = lo + g * (hi - lo);
                    fd = eval(d);
                }
            }
            for (v, t) in [(fc, c), (fd, d)] {
                if v > best.0 {
                    best = (v, t);
                }
            }
        }
        best
    }

    /// Writes `t,<state names>,phi` rows at the accepted steps, or at
    /// `samples` evenly spaced times when given.
    pub fn write_csv<W: Write>(&self, spec: &ProblemSpec, samples: Option<usize>, mut w: W) -> Result<()> {
        write!(w, "t")?;
        for v in spec.state_vars() {
            write!(w, ",{v}")?;
        }
        writeln!(w, ",phi")?;
        let mut row = |t: f64, x: &[f64]| -> Result<()> {
            write!(w, "{t:.9e}")?;
            for v in x {
                write!(w, ",{v:.9e}")?;
            }
            writeln!(w, ",{:.9e}", spec.eval_observable(t, x))?;
            Ok(())
        };
        match samples {
            Some(m) if m >= 2 => {
                let mut x = vec![0.0; self.dimension()];
                for j in 0..m {
                    let t = self.t_start() + (self.t_final() - self.t_start()) * j as f64 / (m - 1) as f64;
                    self.eval(t, &mut x);
                    row(t, &x)?;
                }
            }
            _ => {
                for (t, x) in self.times.iter().zip(&self.states) {
                    row(*t, x)?;
                }
            }
        }
        Ok(())
    }
}

/// Integrates the problem's dynamics from `x0` at the horizon start to `t_end`.
pub fn integrate(spec: &ProblemSpec, x0: &[f64], t_end: f64, opts: &IntegrateOptions) -> Result<Trajectory> {
    if x0.len() != spec.nstate() {
        return Err(Error::InvalidProblem(format!(
            "initial state has {} components, expected {}",
            x0.len(),
            spec.nstate()
        )));
    }
    integrate_from(spec, spec.horizon().t0(), x0, t_end, opts)
}

/// Same as [`integrate`] with an explicit start time.
pub fn integrate_from(spec: &ProblemSpec, t0: f64, x0: &[f64], t_end: f64, opts: &IntegrateOptions) -> Result<Trajectory> {
    integrate_fn(|t, x, out| spec.eval_dynamics(t, x, out), t0, x0, t_end, opts)
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Dormand–Prince 5(4) with PI step control and 4th-order dense output.
pub fn integrate_fn(
    rhs: impl Fn(f64, &[f64], &mut [f64]),
    t0: f64,
    x0: &[f64],
    t_end: f64,
    opts: &IntegrateOptions,
) -> Result<Trajectory> {
    let n = x0.len();
    if x0.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidProblem("initial state is not finite".into()));
    }
    if !(t_end >= t0) || !t_end.is_finite() {
        return Err(Error::InvalidProblem(format!("bad integration interval [{t0}, {t_end}]")));
    }
    let mut traj = Trajectory {
        times: vec![t0],
        states: vec![x0.to_vec()],
        steps: Vec::new(),
        blowup: None,
    };
    if t_end == t0 {
        return Ok(traj);
    }
    let norm = |x: &[f64]| x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm(x0) > opts.norm_cap {
        traj.blowup = Some(t0);
        return Ok(traj);
    }
    let sk = |a: f64, b: f64| opts.abs_tol + opts.rel_tol * a.abs().max(b.abs());
    let wnorm = |v: &[f64], y0: &[f64], y1: &[f64]| {
        (v.iter()
            .enumerate()
            .map(|(i, e)| (e / sk(y0[i], y1[i])).powi(2))
            .sum::<f64>()
            / n as f64)
            .sqrt()
    };

    let mut t = t0;
    let mut y = x0.to_vec();
    let mut k1 = vec![0.0; n];
    let (mut k2, mut k3, mut k4, mut k5, mut k6, mut k7) =
        (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let mut ytmp = vec![0.0; n];
    let mut y1 = vec![0.0; n];
    let mut err = vec![0.0; n];
    rhs(t, &y, &mut k1);

    // Initial step size (Hairer, Nørsett & Wanner, II.4).
    let span = t_end - t0;
    let d0 = wnorm(&y, &y, &y);
    let d1 = wnorm(&k1, &y, &y);
    let mut h = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    h = h.min(span);
    for i in 0..n {
        ytmp[i] = y[i] + h * k1[i];
    }
    rhs(t + h, &ytmp, &mut k2);
    let diff: Vec<f64> = k2.iter().zip(&k1).map(|(a, b)| a - b).collect();
    let d2 = wnorm(&diff, &y, &y) / h;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    h = (100.0 * h).min(h1).min(span);

    const SAFE: f64 = 0.9;
    const BETA: f64 = 0.04;
    let expo1 = 0.2 - 0.75 * BETA;
    let mut facold: f64 = 1e-4;
    let mut rejected = false;
    let mut nsteps = 0usize;

    loop {
        if nsteps >= opts.max_steps {
            return Err(Error::Integration {
                t,
                state: y,
                message: format!("step budget of {} exhausted", opts.max_steps),
            });
        }
        if h.abs() <= 16.0 * f64::EPSILON * t.abs().max(1.0) {
            return Err(Error::Integration {
                t,
                state: y,
                message: "step size underflow".into(),
            });
        }
        let last = t + h >= t_end;
        if last {
            h = t_end - t;
        }
        nsteps += 1;

        for i in 0..n {
            ytmp[i] = y[i] + h * A21 * k1[i];
        }
        rhs(t + C2 * h, &ytmp, &mut k2);
        for i in 0..n {
            ytmp[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
        }
        rhs(t + C3 * h, &ytmp, &mut k3);
        for i in 0..n {
            ytmp[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
        }
        rhs(t + C4 * h, &ytmp, &mut k4);
        for i in 0..n {
            ytmp[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
        }
        rhs(t + C5 * h, &ytmp, &mut k5);
        for i in 0..n {
            ytmp[i] = y[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
        }
        rhs(t + h, &ytmp, &mut k6);
        for i in 0..n {
            y1[i] = y[i] + h * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]);
        }
        rhs(t + h, &y1, &mut k7);
        for i in 0..n {
            err[i] = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        }
        let e = wnorm(&err, &y, &y1);
        if !e.is_finite() {
            h *= 0.1;
            rejected = true;
            continue;
        }
        let fac11 = e.powf(expo1);
        if e <= 1.0 {
            let mut coef = vec![0.0; 5 * n];
            for i in 0..n {
                let ydiff = y1[i] - y[i];
                let bspl = h * k1[i] - ydiff;
                coef[i] = y[i];
                coef[n + i] = ydiff;
                coef[2 * n + i] = bspl;
                coef[3 * n + i] = ydiff - h * k7[i] - bspl;
                coef[4 * n + i] =
                    h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
            }
            traj.steps.push(DenseStep { t, h, coef });
            let fac = (fac11 / facold.powf(BETA) / SAFE).clamp(0.2, 10.0);
            facold = e.max(1e-4);
            t = if last { t_end } else { t + h };
            std::mem::swap(&mut y, &mut y1);
            std::mem::swap(&mut k1, &mut k7);
            traj.times.push(t);
            traj.states.push(y.clone());
            if norm(&y) > opts.norm_cap {
                traj.blowup = Some(t);
                return Ok(traj);
            }
            if last {
                return Ok(traj);
            }
            let mut hnew = h / fac;
            if rejected {
                hnew = hnew.min(h);
            }
            rejected = false;
            h = hnew;
        } else {
            h /= (fac11 / SAFE).min(10.0);
            rejected = true;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quadratic(t0: f64, x0: f64, t_end: f64, tol: f64) -> Trajectory {
        let opts = IntegrateOptions {
            rel_tol: tol,
            abs_tol: tol * 1e-2,
            ..Default::default()
        };
        integrate_fn(|_, x, out| out[0] = x[0] * x[0], t0, &[x0], t_end, &opts).unwrap()
    }

    #[test]
    fn quadratic_closed_form() {
        let tr = quadratic(0.0, -1.0, 1.0, 1e-10);
        assert!((tr.final_state()[0] + 0.5).abs() < 1e-8);
        for t in [0.1, 0.37, 0.5, 0.93] {
            let x = tr.state_at(t)[0];
            assert!((x + 1.0 / (1.0 + t)).abs() < 1e-8, "t={t} x={x}");
        }
        assert!(tr.blowup.is_none());
    }

    #[test]
    fn blowup_is_flagged() {
        let tr = quadratic(0.0, 1.0, 2.0, 1e-10);
        let tb = tr.blowup.expect("blowup");
        assert!((tb - 1.0).abs() < 1e-6, "{tb}");
    }

    #[test]
    fn equilibrium_stays_put() {
        let tr = quadratic(0.0, 0.0, 5.0, 1e-10);
        assert!(tr.states.iter().all(|x| x[0] == 0.0));
        assert_eq!(tr.t_final(), 5.0);
    }

    #[test]
    fn error_shrinks_with_tolerance() {
        let errs: Vec<f64> = [1e-5, 1e-7, 1e-9]
            .iter()
            .map(|&tol| (quadratic(0.0, -1.0, 1.0, tol).final_state()[0] + 0.5).abs())
            .collect();
        assert!(errs[1] < errs[0] && errs[2] < errs[1], "{errs:?}");
    }

    #[test]
    fn max_of_finds_interior_peak() {
        let opts = IntegrateOptions::default();
        let tr = integrate_fn(
            |_, x, out| {
                out[0] = x[1];
                out[1] = -x[0];
            },
            0.0,
            &[0.0, 1.0],
            3.0,
            &opts,
        )
        .unwrap();
        let (v, t) = tr.max_of(0.0, 3.0, |_, x| x[0]);
        assert!((v - 1.0).abs() < 1e-9);
        assert!((t - std::f64::consts::FRAC_PI_2).abs() < 1e-4);
    }
}
