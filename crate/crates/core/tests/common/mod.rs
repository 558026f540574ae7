//! Shared generators for solver tests.

#![allow(dead_code)]

use auxbound::sdp::{Constraint, Entry, SdpProblem};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_orthogonal(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let g = DMatrix::from_fn(n, n, |_, _| rng.random::<f64>() * 2.0 - 1.0);
    g.qr().q()
}

fn random_symmetric(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let g = DMatrix::from_fn(n, n, |_, _| rng.random::<f64>() * 2.0 - 1.0);
    (&g + g.transpose()) * 0.5
}

fn entries_of(block: usize, m: &DMatrix<f64>) -> Vec<Entry> {
    let mut out = Vec::new();
    for r in 0..m.nrows() {
        for c in r..m.ncols() {
            if m[(r, c)] != 0.0 {
                out.push(Entry::new(block, r, c, m[(r, c)]));
            }
        }
    }
    out
}

/// Builds a problem whose optimal value is known from a complementary
/// primal-dual pair `(X*, y*)`, `(z*, S*)` with `X* S* = 0`.
pub fn planted(seed: u64) -> (SdpProblem, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nblocks = rng.random_range(1..=3);
    let sizes: Vec<usize> = (0..nblocks).map(|_| rng.random_range(1..=5)).collect();
    let nfree = rng.random_range(0..=3);
    let svec: usize = sizes.iter().map(|n| n * (n + 1) / 2).sum();
    let m = rng.random_range(nfree.max(1)..=(svec + nfree).min(12));

    let mut xstar = Vec::new();
    let mut sstar = Vec::new();
    for &n in &sizes {
        let q = random_orthogonal(n, &mut rng);
        let rank = rng.random_range(0..=n);
        let mut dx = DMatrix::zeros(n, n);
        let mut ds = DMatrix::zeros(n, n);
        for k in 0..n {
            if k < rank {
                dx[(k, k)] = rng.random_range(0.5..2.0);
            } else {
                ds[(k, k)] = rng.random_range(0.5..2.0);
            }
        }
        xstar.push(&q * dx * q.transpose());
        sstar.push(&q * ds * q.transpose());
    }
    let ystar: Vec<f64> = (0..nfree).map(|_| rng.random_range(-1.0..1.0)).collect();
    let zstar: Vec<f64> = (0..m).map(|_| rng.random_range(-1.0..1.0)).collect();

    let mut problem = SdpProblem::new(sizes.clone(), nfree);
    let mut cmat: Vec<DMatrix<f64>> = sstar.clone();
    let mut cf = vec![0.0; nfree];
    for i in 0..m {
        let mut con = Constraint::default();
        let mut rhs = 0.0;
        for (b, &n) in sizes.iter().enumerate() {
            let a = random_symmetric(n, &mut rng);
            rhs += a.dot(&xstar[b]);
            cmat[b] += &a * zstar[i];
            con.matrix.extend(entries_of(b, &a));
        }
        for j in 0..nfree {
            let v: f64 = rng.random_range(-1.0..1.0);
            rhs += v * ystar[j];
            cf[j] += v * zstar[i];
            con.free.push((j, v));
        }
        con.rhs = rhs;
        problem.constraints.push(con);
    }
    for (b, c) in cmat.iter().enumerate() {
        problem.objective.extend(entries_of(b, c));
    }
    problem.objective_free = cf.iter().copied().enumerate().collect();
    let value: f64 = problem
        .constraints
        .iter()
        .zip(&zstar)
        .map(|(c, z)| c.rhs * z)
        .sum();
    (problem, value)
}

pub fn symmetric_eigenvalues_closed_form(a: &[[f64; 3]; 3], n: usize) -> Vec<f64> {
    match n {
        1 => vec![a[0][0]],
        2 => {
            let m = 0.5 * (a[0][0] + a[1][1]);
            let d = (0.25 * (a[0][0] - a[1][1]).powi(2) + a[0][1].powi(2)).sqrt();
            vec![m - d, m + d]
        }
        _ => {
            // Trigonometric solution of the characteristic cubic.
            let p1 = a[0][1].powi(2) + a[0][2].powi(2) + a[1][2].powi(2);
            let q = (a[0][0] + a[1][1] + a[2][2]) / 3.0;
            let p2 = (a[0][0] - q).powi(2) + (a[1][1] - q).powi(2) + (a[2][2] - q).powi(2) + 2.0 * p1;
            let p = (p2 / 6.0).sqrt();
            if p == 0.0 {
                return vec![q; 3];
            }
            let mut b = [[0.0; 3]; 3];
            for i in 0..3 {
                for j in 0..3 {
                    b[i][j] = (a[i][j] - if i == j { q } else { 0.0 }) / p;
                }
            }
            let det = b[0][0] * (b[1][1] * b[2][2] - b[1][2] * b[2][1])
                - b[0][1] * (b[1][0] * b[2][2] - b[1][2] * b[2][0])
                + b[0][2] * (b[1][0] * b[2][1] - b[1][1] * b[2][0]);
            let r = (det / 2.0).clamp(-1.0, 1.0);
            let phi = r.acos() / 3.0;
            let e1 = q + 2.0 * p * phi.cos();
            let e3 = q + 2.0 * p * (phi + 2.0 * std::f64::consts::PI / 3.0).cos();
            let e2 = 3.0 * q - e1 - e3;
            vec![e3, e2, e1]
        }
    }
}
