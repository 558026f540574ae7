//! Facial reduction with diagonal certificates.
//!
//! If some `z` has `B^T z = 0`, `b . z = 0` and `W = sum_i z_i A_i` diagonal
//! and nonnegative, then `<W, X> = 0` for every feasible `X`, so each index
//! with `W_pp > 0` carries a zero row and column of `X` and can be removed.
//! Finding `z` is a small linear program. Removing such indices restores
//! strict feasibility in degenerate problems, which interior-point methods
//! need to converge.

use std::collections::BTreeMap;

use log::debug;
use nalgebra::DMatrix;

use super::solver::solve_core;

const MAX_ROUNDS: usize = 100;
use super::{Constraint, Entry, SdpProblem, SolverOptions, SolverStatus};

/// A problem restricted to a face of the cone: each original block `X_b` is
/// written as `U_b Y_b U_b^T` with `Y_b` a block of the reduced problem.
#[derive(Clone, Debug)]
pub struct Reduction {
    pub problem: SdpProblem,
    /// For each original block, `U_b` (original size by reduced size), or
    /// `None` if the block was removed entirely.
    pub bases: Vec<Option<DMatrix<f64>>>,
    /// For each original block, its index in the reduced problem.
    pub block_map: Vec<Option<usize>>,
    removed: usize,
}

impl Reduction {
    fn identity(problem: &SdpProblem) -> Self {
        Reduction {
            problem: problem.clone(),
            bases: problem
                .block_sizes
                .iter()
                .map(|&n| Some(DMatrix::identity(n, n)))
                .collect(),
            block_map: (0..problem.block_sizes.len()).map(Some).collect(),
            removed: 0,
        }
    }

    /// Number of dimensions removed over all blocks.
    pub fn removed(&self) -> usize {
        self.removed
    }

    /// Maps a reduced-problem block solution back to the original blocks.
    pub fn lift(&self, y: &[DMatrix<f64>], sizes: &[usize]) -> Vec<DMatrix<f64>> {
        sizes
            .iter()
            .enumerate()
            .map(|(b, &n)| match (self.block_map[b], &self.bases[b]) {
                (Some(rb), Some(u)) => u * &y[rb] * u.transpose(),
                _ => DMatrix::zeros(n, n),
            })
            .collect()
    }

    /// Restricts each current block `b` to the column space of `v[b]`
    /// (`None` removes the block).
    fn restrict(&mut self, v: &[Option<DMatrix<f64>>]) {
        let p = &self.problem;
        let mut new_block = Vec::with_capacity(v.len());
        let mut sizes = Vec::new();
        // Sparse rows of each V for cheap congruence of sparse entries.
        let mut vrows: Vec<Vec<Vec<(usize, f64)>>> = Vec::with_capacity(v.len());
        for vb in v {
            match vb {
                Some(m) if m.ncols() > 0 => {
                    new_block.push(Some(sizes.len()));
                    sizes.push(m.ncols());
                    vrows.push(
                        (0..m.nrows())
                            .map(|r| {
                                (0..m.ncols())
                                    .filter(|&c| m[(r, c)] != 0.0)
                                    .map(|c| (c, m[(r, c)]))
                                    .collect()
                            })
                            .collect(),
                    );
                }
                _ => {
                    new_block.push(None);
                    vrows.push(Vec::new());
                }
            }
        }
        let congruence = |entries: &[Entry]| -> Vec<Entry> {
            let mut acc: BTreeMap<(usize, usize, usize), f64> = BTreeMap::new();
            for e in entries {
                let Some(b) = new_block[e.block] else { continue };
                let (ur, uc) = (&vrows[e.block][e.row], &vrows[e.block][e.col]);
                // Upper triangle of v (u_r u_c^T + u_c u_r^T), or of
                // v u_r u_r^T for a diagonal entry.
                for &(i, a) in ur {
                    for &(j, c) in uc {
                        let w = e.value * a * c;
                        if e.row == e.col {
                            if i <= j {
                                *acc.entry((b, i, j)).or_default() += w;
                            }
                        } else if i == j {
                            *acc.entry((b, i, i)).or_default() += 2.0 * w;
                        } else {
                            *acc.entry((b, i.min(j), i.max(j))).or_default() += w;
                        }
                    }
                }
            }
            let scale = entries.iter().fold(0.0f64, |m, e| m.max(e.value.abs()));
            acc.into_iter()
                .filter(|(_, val)| val.abs() > 1e-14 * scale)
                .map(|((b, i, j), val)| Entry::new(b, i, j, val))
                .collect()
        };
        let problem = SdpProblem {
            block_sizes: sizes,
            num_free: p.num_free,
            objective: congruence(&p.objective),
            objective_free: p.objective_free.clone(),
            constraints: p
                .constraints
                .iter()
                .map(|c| Constraint {
                    matrix: congruence(&c.matrix),
                    free: c.free.clone(),
                    rhs: c.rhs,
                })
                .collect(),
        };
        for orig in 0..self.block_map.len() {
            if let Some(b) = self.block_map[orig] {
                let old = self.bases[orig].take().expect("basis of live block");
                self.removed += old.ncols() - v[b].as_ref().map_or(0, |m| m.ncols());
                self.bases[orig] = match (&v[b], new_block[b]) {
                    (Some(m), Some(_)) => Some(old * m),
                    _ => None,
                };
                self.block_map[orig] = new_block[b];
            }
        }
        self.problem = problem;
    }
}

/// Orthonormal basis of the null space of `e` (as columns).
fn null_space(e: &DMatrix<f64>) -> DMatrix<f64> {
    let n = e.ncols();
    if n == 0 {
        return DMatrix::zeros(0, 0);
    }
    // Pad to at least square so the SVD returns a full right basis.
    let padded = if e.nrows() < n {
        let mut p = DMatrix::zeros(n, n);
        p.rows_mut(0, e.nrows()).copy_from(e);
        p
    } else {
        e.clone()
    };
    let svd = padded.svd(false, true);
    let vt = svd.v_t.expect("requested V^T");
    let smax = svd.singular_values.max();
    let tol = 1e-9 * smax.max(1.0);
    let cols: Vec<usize> = (0..n).filter(|&k| svd.singular_values[k] <= tol).collect();
    DMatrix::from_fn(n, cols.len(), |i, j| vt[(cols[j], i)])
}

/// One round: returns the indices to drop, or `None` when no diagonal
/// certificate exists.
fn find_certificate(p: &SdpProblem) -> Option<Vec<Vec<bool>>> {
    let m = p.constraints.len();
    // Rows whose z must vanish: an off-diagonal position touched by a single
    // live row forces that row's multiplier to zero.
    let mut alive = vec![true; m];
    let mut offdiag: BTreeMap<(usize, usize, usize), Vec<(usize, f64)>> = BTreeMap::new();
    let mut diag: BTreeMap<(usize, usize), Vec<(usize, f64)>> = BTreeMap::new();
    for (i, c) in p.constraints.iter().enumerate() {
        if c.matrix.iter().all(|e| e.value == 0.0) {
            // Rows without matrix entries cannot contribute to W; keep them
            // so that B^T z = 0 and b . z = 0 still see them.
            continue;
        }
        for e in c.matrix.iter().filter(|e| e.value != 0.0) {
            let list = if e.row == e.col {
                diag.entry((e.block, e.row)).or_default()
            } else {
                offdiag.entry((e.block, e.row, e.col)).or_default()
            };
            match list.last_mut() {
                Some((last, v)) if *last == i => *v += e.value,
                _ => list.push((i, e.value)),
            }
        }
    }
    loop {
        let mut changed = false;
        for list in offdiag.values() {
            let mut live = list.iter().filter(|(i, _)| alive[*i]);
            if let (Some(&(i, _)), None) = (live.next(), live.next()) {
                alive[i] = false;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let rows: Vec<usize> = (0..m).filter(|&i| alive[i]).collect();
    if rows.is_empty() {
        return None;
    }
    let col_of: BTreeMap<usize, usize> = rows.iter().enumerate().map(|(k, &i)| (i, k)).collect();

    // Homogeneous equations on the live z: off-diagonals of W, B^T z, b . z.
    let mut eqs: Vec<Vec<(usize, f64)>> = Vec::new();
    for list in offdiag.values() {
        let eq: Vec<(usize, f64)> = list
            .iter()
            .filter_map(|&(i, v)| col_of.get(&i).map(|&k| (k, v)))
            .collect();
        if !eq.is_empty() {
            eqs.push(eq);
        }
    }
    let mut free_eqs: BTreeMap<usize, Vec<(usize, f64)>> = BTreeMap::new();
    let mut rhs_eq = Vec::new();
    for (k, &i) in rows.iter().enumerate() {
        let c = &p.constraints[i];
        for &(j, v) in &c.free {
            if v != 0.0 {
                free_eqs.entry(j).or_default().push((k, v));
            }
        }
        if c.rhs != 0.0 {
            rhs_eq.push((k, c.rhs));
        }
    }
    eqs.extend(free_eqs.into_values());
    if !rhs_eq.is_empty() {
        eqs.push(rhs_eq);
    }
    let mut e = DMatrix::zeros(eqs.len(), rows.len());
    for (r, eq) in eqs.iter().enumerate() {
        let norm = eq.iter().map(|(_, v)| v * v).sum::<f64>().sqrt();
        for &(k, v) in eq {
            e[(r, k)] += v / norm;
        }
    }
    let basis = null_space(&e);
    if basis.ncols() == 0 {
        return None;
    }

    // Diagonal of W as a function of the null-space coordinates w.
    let mut diag_keys: Vec<(usize, usize)> = Vec::new();
    let mut g_rows: Vec<Vec<f64>> = Vec::new();
    for (&key, list) in &diag {
        let mut g = vec![0.0; basis.ncols()];
        for &(i, v) in list {
            if let Some(&k) = col_of.get(&i) {
                for (j, gj) in g.iter_mut().enumerate() {
                    *gj += v * basis[(k, j)];
                }
            }
        }
        if g.iter().map(|x| x.abs()).fold(0.0, f64::max) > 1e-10 {
            diag_keys.push(key);
            g_rows.push(g);
        }
    }
    if diag_keys.is_empty() {
        return None;
    }

    // LP over the range of G: s = U u >= 0, sum s = 1, as an SDP with 1x1
    // blocks. Parametrizing by the range keeps the free variables bounded.
    let ns = diag_keys.len();
    let g = DMatrix::from_fn(ns, basis.ncols(), |i, j| g_rows[i][j]);
    let svd = g.svd(true, false);
    let u = svd.u.expect("requested U");
    let smax = svd.singular_values.max();
    let range: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&k| svd.singular_values[k] > 1e-10 * smax)
        .collect();
    let nw = range.len();
    let mut lp = SdpProblem::new(vec![1; ns], nw);
    for j in 0..ns {
        lp.constraints.push(Constraint {
            matrix: vec![Entry::new(j, 0, 0, 1.0)],
            free: range.iter().enumerate().map(|(k, &c)| (k, -u[(j, c)])).collect(),
            rhs: 0.0,
        });
    }
    lp.constraints.push(Constraint {
        matrix: (0..ns).map(|j| Entry::new(j, 0, 0, 1.0)).collect(),
        free: vec![],
        rhs: 1.0,
    });
    let opts = SolverOptions {
        gap_tol: 1e-12,
        feas_tol: 1e-12,
        max_iterations: 100,
        facial_reduction: false,
        ..Default::default()
    };
    let sol = solve_core(&lp, &opts);
    debug!(
        "facial reduction LP: {} diagonals, {} directions, status {}, residual {:.1e}",
        ns, nw, sol.status, sol.primal_residual
    );
    if !matches!(sol.status, SolverStatus::Optimal | SolverStatus::SlowProgress) || sol.primal_residual > 1e-8 {
        return None;
    }
    let s: Vec<f64> = sol.x.iter().map(|b| b[(0, 0)]).collect();
    let smax = s.iter().copied().fold(0.0, f64::max);
    if smax <= 0.0 {
        return None;
    }
    let mut drop: Vec<Vec<bool>> = p.block_sizes.iter().map(|&n| vec![false; n]).collect();
    let mut any = false;
    for (&(b, r), &v) in diag_keys.iter().zip(&s) {
        if v > 1e-5 * smax {
            drop[b][r] = true;
            any = true;
        }
    }
    any.then_some(drop)
}

fn selection(drop: &[Vec<bool>]) -> Vec<Option<DMatrix<f64>>> {
    drop.iter()
        .map(|flags| {
            let keep: Vec<usize> = (0..flags.len()).filter(|&i| !flags[i]).collect();
            if keep.is_empty() {
                return None;
            }
            let mut v = DMatrix::zeros(flags.len(), keep.len());
            for (k, &i) in keep.iter().enumerate() {
                v[(i, k)] = 1.0;
            }
            Some(v)
        })
        .collect()
}

/// Looks for `W = sum_i z_i A_i` PSD and nonzero with `B^T z = 0` and
/// `b . z = 0` by solving an auxiliary SDP, and returns for each block an
/// orthonormal basis of the null space of its `W` block.
fn find_psd_certificate(p: &SdpProblem) -> Option<Vec<Option<DMatrix<f64>>>> {
    let nf = p.num_free;
    // Dual of the auxiliary problem: S = sum_i z_i A_i PSD, B^T z = 0,
    // b . z = 0, tr S = 1.
    let mut aux = SdpProblem::new(p.block_sizes.clone(), nf + 2);
    for c in &p.constraints {
        let mut free: Vec<(usize, f64)> = c.free.clone();
        if c.rhs != 0.0 {
            free.push((nf, c.rhs));
        }
        let trace: f64 = c.matrix.iter().filter(|e| e.row == e.col).map(|e| e.value).sum();
        if trace != 0.0 {
            free.push((nf + 1, trace));
        }
        aux.constraints.push(Constraint {
            matrix: c.matrix.iter().map(|e| Entry { value: -e.value, ..*e }).collect(),
            free,
            rhs: 0.0,
        });
    }
    aux.objective_free.push((nf + 1, 1.0));
    let opts = SolverOptions {
        gap_tol: 1e-10,
        feas_tol: 1e-10,
        max_iterations: 100,
        facial_reduction: false,
        ..Default::default()
    };
    let sol = solve_core(&aux, &opts);
    debug!(
        "facial reduction SDP: status {}, dual residual {:.1e}",
        sol.status, sol.dual_residual
    );
    if !matches!(sol.status, SolverStatus::Optimal | SolverStatus::SlowProgress) || sol.dual_residual > 1e-8 {
        return None;
    }
    let eigs: Vec<_> = sol.s.iter().map(|w| w.clone().symmetric_eigen()).collect();
    let wmax = eigs
        .iter()
        .map(|e| e.eigenvalues.amax())
        .fold(0.0, f64::max);
    if wmax <= 1e-8 {
        return None;
    }
    let tol = 1e-6 * wmax;
    let mut any = false;
    let out = eigs
        .iter()
        .map(|e| {
            let keep: Vec<usize> = (0..e.eigenvalues.len())
                .filter(|&k| e.eigenvalues[k] <= tol)
                .collect();
            if keep.len() < e.eigenvalues.len() {
                any = true;
            }
            if keep.is_empty() {
                return None;
            }
            Some(DMatrix::from_fn(e.eigenvectors.nrows(), keep.len(), |r, c| {
                e.eigenvectors[(r, keep[c])]
            }))
        })
        .collect();
    any.then_some(out)
}

/// Reduces `problem` to a face of the cone on which a strictly feasible
/// point can exist: cheap diagonal certificates first, then a full
/// semidefinite certificate, repeated until neither is found.
pub fn facial_reduce(problem: &SdpProblem) -> Reduction {
    let mut red = Reduction::identity(problem);
    for _ in 0..MAX_ROUNDS {
        if red.problem.block_sizes.is_empty() {
            break;
        }
        if let Some(drop) = find_certificate(&red.problem) {
            red.restrict(&selection(&drop));
            continue;
        }
        match find_psd_certificate(&red.problem) {
            Some(v) => red.restrict(&v),
            None => break,
        }
    }
    debug!("facial reduction removed {} dimensions", red.removed);
    red
}
