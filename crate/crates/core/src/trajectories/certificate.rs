use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::polynomial::Polynomial;
use crate::system::{build_omega, lie_derivative, ProblemSpec};

const FD_STEP: f64 = 1e-6;

/// A candidate auxiliary function `V(t, x)`.
pub trait AuxFunction: Sync {
    fn value(&self, t: f64, x: &[f64]) -> f64;

    /// `∂t V + F · ∇x V`. The default uses central differences.
    fn lie_derivative(&self, spec: &ProblemSpec, t: f64, x: &[f64]) -> f64 {
        let n = x.len();
        let mut f = vec![0.0; n];
        spec.eval_dynamics(t, x, &mut f);
        let mut out = (self.value(t + FD_STEP, x) - self.value(t - FD_STEP, x)) / (2.0 * FD_STEP);
        let mut xp = x.to_vec();
        for i in 0..n {
            if f[i] == 0.0 {
                continue;
            }
            xp[i] = x[i] + FD_STEP;
            let up = self.value(t, &xp);
            xp[i] = x[i] - FD_STEP;
            let down = self.value(t, &xp);
            xp[i] = x[i];
            out += f[i] * (up - down) / (2.0 * FD_STEP);
        }
        out
    }
}

/// A polynomial `V` over the problem's `(t, x)` with its exact Lie derivative.
#[derive(Clone, Debug)]
pub struct PolynomialAux {
    v: Polynomial,
    lv: Polynomial,
}

impl PolynomialAux {
    pub fn new(v: &Polynomial, spec: &ProblemSpec) -> Result<Self> {
        let v = v.embed(spec.vars())?;
        let lv = lie_derivative(&v, spec)?;
        Ok(PolynomialAux { v, lv })
    }

    pub fn polynomial(&self) -> &Polynomial {
        &self.v
    }

    pub fn lie_polynomial(&self) -> &Polynomial {
        &self.lv
    }
}

fn point(t: f64, x: &[f64]) -> Vec<f64> {
    let mut p = Vec::with_capacity(x.len() + 1);
    p.push(t);
    p.extend_from_slice(x);
    p
}

impl AuxFunction for PolynomialAux {
    fn value(&self, t: f64, x: &[f64]) -> f64 {
        self.v.eval(&point(t, x))
    }

    fn lie_derivative(&self, _spec: &ProblemSpec, t: f64, x: &[f64]) -> f64 {
        self.lv.eval(&point(t, x))
    }
}

/// Wraps a closure `(t, x) -> V`; Lie derivatives use central differences.
pub struct FnAux<F>(pub F);

impl<F: Fn(f64, &[f64]) -> f64 + Sync> AuxFunction for FnAux<F> {
    fn value(&self, t: f64, x: &[f64]) -> f64 {
        (self.0)(t, x)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CertificateReport {
    pub max_lie_violation: f64,
    pub lie_argmax: Vec<f64>,
    pub max_phi_violation: f64,
    pub phi_argmax: Vec<f64>,
    /// Grid nodes inside Ω that were checked.
    pub grid_size: usize,
    pub tolerance: f64,
    pub pass: bool,
}

/// Checks `LV ≤ tol` and `Φ − V ≤ tol` at every grid node inside Ω.
///
/// The grid spans `(t, x)`, or only `x` (with `t = t0`) when its dimension
/// equals the number of states.
pub fn check_certificate(v: &dyn AuxFunction, spec: &ProblemSpec, grid: &Grid, tol: f64) -> Result<CertificateReport> {
    check_certificate_with(v, &|t, x| spec.eval_observable(t, x), spec, grid, tol)
}

/// [`check_certificate`] with a non-polynomial observable in place of the
/// problem's own.
pub fn check_certificate_with(
    v: &dyn AuxFunction,
    phi: &(dyn Fn(f64, &[f64]) -> f64 + Sync),
    spec: &ProblemSpec,
    grid: &Grid,
    tol: f64,
) -> Result<CertificateReport> {
    let n = spec.nstate();
    let with_time = match grid.dimension() {
        d if d == n + 1 => true,
        d if d == n => false,
        d => {
            return Err(Error::InvalidProblem(format!(
                "grid has {d} axes; expected {n} (state) or {} (time and state)",
                n + 1
            )))
        }
    };
    let omega = build_omega(spec);
    let t0 = spec.horizon().t0();

    // (lie violation, node, phi violation, node) per chunk, merged in order.
    type Acc = (f64, usize, f64, usize, usize);
    let fold = |acc: Acc, idx: usize| -> Acc {
        let coords = grid.node_vec(idx);
        let (t, x) = if with_time { (coords[0], &coords[1..]) } else { (t0, &coords[..]) };
        let full = point(t, x);
        if !omega.contains(&full, 1e-12) {
            return acc;
        }
        let lv = v.lie_derivative(spec, t, x);
        let gap = phi(t, x) - v.value(t, x);
        let mut acc = acc;
        acc.4 += 1;
        if !(lv <= acc.0) {
            acc.0 = lv;
            acc.1 = idx;
        }
        if !(gap <= acc.2) {
            acc.2 = gap;
            acc.3 = idx;
        }
        acc
    };
    let empty: Acc = (f64::NEG_INFINITY, usize::MAX, f64::NEG_INFINITY, usize::MAX, 0);
    let merge = |a: Acc, b: Acc| -> Acc {
        let pick = |(va, ia): (f64, usize), (vb, ib): (f64, usize)| {
            if vb > va || (vb == va && ib < ia) || (vb.is_nan() && !va.is_nan()) {
                (vb, ib)
            } else {
                (va, ia)
            }
        };
        let l = pick((a.0, a.1), (b.0, b.1));
        let p = pick((a.2, a.3), (b.2, b.3));
        (l.0, l.1, p.0, p.1, a.4 + b.4)
    };
    let acc = (0..grid.len())
        .into_par_iter()
        .fold(|| empty, fold)
        .reduce(|| empty, merge);

    let node = |idx: usize| -> Vec<f64> {
        if idx == usize::MAX {
            return vec![];
        }
        let c = grid.node_vec(idx);
        if with_time {
            c
        } else {
            point(t0, &c)
        }
    };
    let pass = acc.4 > 0 && acc.0 <= tol && acc.2 <= tol;
    Ok(CertificateReport {
        max_lie_violation: acc.0,
        lie_argmax: node(acc.1),
        max_phi_violation: acc.2,
        phi_argmax: node(acc.3),
        grid_size: acc.4,
        tolerance: tol,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polynomial::parse;
    use crate::system::{builtin_problem, BuiltinParams};

    #[test]
    fn quadratic_certificate_passes() {
        let spec = builtin_problem("nonautonomous2d", &BuiltinParams::default()).unwrap();
        let v = parse("0.5*(1 + x1^2 + x2^2)", spec.vars()).unwrap();
        let aux = PolynomialAux::new(&v, &spec).unwrap();
        let grid = Grid::parse("0:5,-3:3,-3:3", "11,25,25").unwrap();
        let r = check_certificate(&aux, &spec, &grid, 1e-9).unwrap();
        assert!(r.pass, "{r:?}");
        assert_eq!(r.grid_size, grid.len());

        let fd = FnAux(|_t: f64, x: &[f64]| 0.5 * (1.0 + x[0] * x[0] + x[1] * x[1]));
        let r2 = check_certificate(&fd, &spec, &grid, 1e-6).unwrap();
        assert!(r2.pass);
        assert!((r2.max_lie_violation - r.max_lie_violation).abs() < 1e-6);
    }

    #[test]
    fn zero_fails_where_phi_positive() {
        let spec = builtin_problem("nonautonomous2d", &BuiltinParams::default()).unwrap();
        let aux = PolynomialAux::new(&Polynomial::zero(spec.vars()), &spec).unwrap();
        let grid = Grid::parse("-1:2,-1:1", "7").unwrap();
        let r = check_certificate(&aux, &spec, &grid, 1e-9).unwrap();
        assert!(!r.pass);
        assert!((r.max_phi_violation - 2.0).abs() < 1e-12);
        assert_eq!(r.phi_argmax[1], 2.0);
    }
}
