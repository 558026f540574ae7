use auxbound::grid::Grid;
use auxbound::localization::{compute_r_eps, compute_s_delta};
use auxbound::parse;
use auxbound::system::{builtin_problem, BuiltinParams};
use auxbound::trajectories::{
    integrate, integrate_fn, lower_bound, max_along, IntegrateOptions, LowerBoundOptions, PolynomialAux,
};
use proptest::prelude::*;

fn builtin(name: &str) -> auxbound::system::ProblemSpec {
    builtin_problem(name, &BuiltinParams::default()).unwrap()
}

#[test]
fn harmonic_oscillator_error_tracks_tolerance() {
    let rhs = |_t: f64, x: &[f64], dx: &mut [f64]| {
        dx[0] = x[1];
        dx[1] = -x[0];
    };
    let mut prev = f64::INFINITY;
    for tol in [1e-6, 1e-8, 1e-10] {
        let opts = IntegrateOptions {
            rel_tol: tol,
            abs_tol: tol * 1e-2,
            ..Default::default()
        };
        let tr = integrate_fn(rhs, 0.0, &[1.0, 0.0], 20.0, &opts).unwrap();
        let mut worst: f64 = 0.0;
        for k in 0..=400 {
            let t = 20.0 * k as f64 / 400.0;
            let x = tr.state_at(t);
            worst = worst.max((x[0] - t.cos()).abs()).max((x[1] + t.sin()).abs());
        }
        assert!(worst < 1e3 * tol, "tol {tol}: error {worst}");
        assert!(worst < prev);
        prev = worst;
    }
}

#[test]
fn dense_output_matches_step_endpoints() {
    let spec = builtin("unstableFocus2d");
    let tr = integrate(&spec, &[0.3, -0.2], 4.0, &IntegrateOptions::default()).unwrap();
    for (t, x) in tr.times.iter().zip(&tr.states) {
        let y = tr.state_at(*t);
        assert!((y[0] - x[0]).abs() < 1e-12 && (y[1] - x[1]).abs() < 1e-12);
    }
}

#[test]
fn semistable_lower_bound_is_zero() {
    let spec = builtin("cubicSemistable1d");
    let lb = lower_bound(&spec, &LowerBoundOptions::default()).unwrap();
    assert!(lb.value.abs() <= 1e-6, "{}", lb.value);
    assert!(lb.x0[0] <= 0.0 && lb.x0[0] >= -1.0);
}

#[test]
fn max_along_sees_the_focus_transient() {
    let spec = builtin("unstableFocus2d");
    let (value, t) = max_along(&spec, &[-0.49155669779, 0.09149870411], Some(10.0), &IntegrateOptions::default()).unwrap();
    assert!((value - 1.903178).abs() < 1e-3, "{value}");
    assert!(t > 0.0);
}

#[test]
fn burgers_energy_decays() {
    let spec = builtin_problem(
        "burgers",
        &BuiltinParams {
            modes: Some(8),
            ..Default::default()
        },
    )
    .unwrap();
    let a0: Vec<f64> = (1..=8).map(|k| 0.2 / k as f64).collect();
    let tr = integrate(&spec, &a0, 1.0, &IntegrateOptions::default()).unwrap();
    let energy: Vec<f64> = tr.states.iter().map(|a| a.iter().map(|v| v * v).sum()).collect();
    assert!(energy.windows(2).all(|w| w[1] <= w[0] + 1e-12));
    assert!(energy.last().unwrap() < &energy[0]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn level_sets_grow_with_their_parameter(d1 in 0.0f64..0.5, d2 in 0.0f64..0.5) {
        let spec = builtin("unstableFocus2d");
        let v = parse("2 - 0.5*x1^2 - x1*x2 - x2^2 + 0.1*x1^4", spec.vars()).unwrap();
        let aux = PolynomialAux::new(&v, &spec).unwrap();
        let grid = Grid::parse("-1:1,-1:1", "25").unwrap();
        let (lo, hi) = if d1 <= d2 { (d1, d2) } else { (d2, d1) };
        let s_lo = compute_s_delta(&aux, 2.0, lo, &spec, &grid).unwrap();
        let s_hi = compute_s_delta(&aux, 2.0, hi, &spec, &grid).unwrap();
        prop_assert!(s_lo.is_subset_of(&s_hi));
        let r_lo = compute_r_eps(&aux, lo, &spec, &grid).unwrap();
        let r_hi = compute_r_eps(&aux, hi, &spec, &grid).unwrap();
        prop_assert!(r_lo.is_subset_of(&r_hi));
        let both = s_hi.intersect(&r_hi).unwrap();
        prop_assert!(both.is_subset_of(&s_hi) && both.is_subset_of(&r_hi));
    }
}
