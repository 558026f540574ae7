//! Infeasible primal-dual path-following method with the HKM search
//! direction and Mehrotra predictor-corrector steps.

use log::{debug, info};
use nalgebra::{DMatrix, DVector};

use super::facial::{facial_reduce, Reduction};
use super::{Entry, SdpProblem, SdpSolution, SolverOptions, SolverStatus};
use crate::error::Result;

/// Per-iteration diagnostics.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IterationInfo {
    pub iteration: usize,
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub mu: f64,
    pub relative_gap: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub primal_step: f64,
    pub dual_step: f64,
}

const INFEASIBILITY_TOL: f64 = 1e-8;
const STALL_STEP: f64 = 1e-7;

struct Row {
    /// Index of the constraint in the input problem.
    orig: usize,
    entries: Vec<Entry>,
    free: Vec<(usize, f64)>,
    rhs: f64,
    scale: f64,
}

struct Data {
    sizes: Vec<usize>,
    rows: Vec<Row>,
    /// For each block, the rows with entries in it and those entries `(r, c, v)`.
    by_block: Vec<Vec<(usize, Vec<(usize, usize, f64)>)>>,
    c: Vec<DMatrix<f64>>,
    cf: Vec<f64>,
    nfree: usize,
    c_norm: f64,
    /// Original indices of the free variables kept in the solve.
    free_index: Option<Vec<usize>>,
}

#[derive(Clone)]
struct Iterate {
    x: Vec<DMatrix<f64>>,
    y: DVector<f64>,
    z: DVector<f64>,
    s: Vec<DMatrix<f64>>,
}

fn frob(blocks: &[DMatrix<f64>]) -> f64 {
    blocks.iter().map(|b| b.norm_squared()).sum::<f64>().sqrt()
}

fn inner(a: &[DMatrix<f64>], b: &[DMatrix<f64>]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.dot(y)).sum()
}

fn dense_from_entries(sizes: &[usize], entries: &[Entry]) -> Vec<DMatrix<f64>> {
    let mut out: Vec<DMatrix<f64>> = sizes.iter().map(|&n| DMatrix::zeros(n, n)).collect();
    for e in entries {
        out[e.block][(e.row, e.col)] += e.value;
        if e.row != e.col {
            out[e.block][(e.col, e.row)] += e.value;
        }
    }
    out
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

impl Data {
    fn new(problem: &SdpProblem, rows: Vec<Row>) -> Data {
        let nb = problem.block_sizes.len();
        let mut by_block: Vec<Vec<(usize, Vec<(usize, usize, f64)>)>> = vec![Vec::new(); nb];
        for (i, row) in rows.iter().enumerate() {
            for e in &row.entries {
                let list = &mut by_block[e.block];
                if list.last().map(|(r, _)| *r) != Some(i) {
                    list.push((i, Vec::new()));
                }
                list.last_mut().unwrap().1.push((e.row, e.col, e.value));
            }
        }
        let c = dense_from_entries(&problem.block_sizes, &problem.objective);
        let mut cf = vec![0.0; problem.num_free];
        for &(j, v) in &problem.objective_free {
            cf[j] += v;
        }
        let c_norm = (frob(&c).powi(2) + cf.iter().map(|v| v * v).sum::<f64>()).sqrt();
        Data {
            sizes: problem.block_sizes.clone(),
            rows,
            by_block,
            c,
            cf,
            nfree: problem.num_free,
            c_norm,
            free_index: None,
        }
    }

    fn m(&self) -> usize {
        self.rows.len()
    }

    /// `<A_i, W>` for a (not necessarily symmetric) block matrix `W`.
    fn apply_a(&self, w: &[DMatrix<f64>]) -> DVector<f64> {
        let mut out = DVector::zeros(self.m());
        for (b, list) in self.by_block.iter().enumerate() {
            let wb = &w[b];
            for (i, entries) in list {
                let mut acc = 0.0;
                for &(r, c, v) in entries {
                    if r == c {
                        acc += v * wb[(r, r)];
                    } else {
                        acc += v * (wb[(r, c)] + wb[(c, r)]);
                    }
                }
                out[*i] += acc;
            }
        }
        out
    }

    fn apply_a_adjoint(&self, z: &DVector<f64>) -> Vec<DMatrix<f64>> {
        let mut out: Vec<DMatrix<f64>> = self.sizes.iter().map(|&n| DMatrix::zeros(n, n)).collect();
        for (b, list) in self.by_block.iter().enumerate() {
            let ob = &mut out[b];
            for (i, entries) in list {
                let zi = z[*i];
                if zi == 0.0 {
                    continue;
                }
                for &(r, c, v) in entries {
                    ob[(r, c)] += zi * v;
                    if r != c {
                        ob[(c, r)] += zi * v;
                    }
                }
            }
        }
        out
    }

    fn apply_b(&self, y: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(
            self.m(),
            self.rows
                .iter()
                .map(|r| r.free.iter().map(|&(j, v)| v * y[j]).sum::<f64>()),
        )
    }

    fn apply_bt(&self, z: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.nfree);
        for (i, r) in self.rows.iter().enumerate() {
            for &(j, v) in &r.free {
                out[j] += v * z[i];
            }
        }
        out
    }

    fn rhs(&self) -> DVector<f64> {
        DVector::from_iterator(self.m(), self.rows.iter().map(|r| r.rhs))
    }

    /// Schur complement `M_ij = tr(A_i X A_j S^{-1})`.
    fn schur(&self, x: &[DMatrix<f64>], sinv: &[DMatrix<f64>]) -> DMatrix<f64> {
        let m = self.m();
        let mut schur = DMatrix::zeros(m, m);
        for (b, list) in self.by_block.iter().enumerate() {
            let n = self.sizes[b];
            let xb = &x[b];
            let sb = &sinv[b];
            let mut g = DMatrix::zeros(n, n);
            for (pos_j, (j, ej)) in list.iter().enumerate() {
                g.fill(0.0);
                if ej.len() > n {
                    let mut aj = DMatrix::zeros(n, n);
                    for &(r, c, v) in ej {
                        aj[(r, c)] += v;
                        if r != c {
                            aj[(c, r)] += v;
                        }
                    }
                    g = xb * aj * sb;
                } else {
                    for &(r, c, v) in ej {
                        g.ger(v, &xb.column(r), &sb.column(c), 1.0);
                        if r != c {
                            g.ger(v, &xb.column(c), &sb.column(r), 1.0);
                        }
                    }
                }
                for (i, ei) in &list[pos_j..] {
                    let mut acc = 0.0;
                    for &(r, c, v) in ei {
                        if r == c {
                            acc += v * g[(r, r)];
                        } else {
                            acc += v * (g[(r, c)] + g[(c, r)]);
                        }
                    }
                    schur[(*i, *j)] += acc;
                }
            }
        }
        // Only the lower triangle (by list position) was filled; rows appear
        // in increasing order within every block, so i >= j there.
        for j in 0..m {
            for i in (j + 1)..m {
                let v = schur[(i, j)];
                schur[(j, i)] = v;
            }
        }
        schur
    }
}

fn remap_free(mut data: Data, used: &[bool]) -> Data {
    let mut map = vec![usize::MAX; used.len()];
    let mut index = Vec::new();
    for (j, &u) in used.iter().enumerate() {
        if u {
            map[j] = index.len();
            index.push(j);
        }
    }
    for r in &mut data.rows {
        r.free = r
            .free
            .iter()
            .filter(|(j, _)| map[*j] != usize::MAX)
            .map(|&(j, v)| (map[j], v))
            .collect();
    }
    data.cf = index.iter().map(|&j| data.cf[j]).collect();
    data.nfree = index.len();
    data.free_index = Some(index);
    data
}

/// Marks free variables whose constraint columns (with the objective row
/// appended) are linear combinations of earlier ones. Dropping them leaves
/// the feasible set and objective unchanged and keeps the KKT system regular.
fn drop_dependent_free(data: &Data, used: &mut [bool]) {
    let m = data.m();
    let mut columns: Vec<Vec<f64>> = vec![vec![0.0; m + 1]; data.nfree];
    for (i, r) in data.rows.iter().enumerate() {
        for &(j, v) in &r.free {
            columns[j][i] += v;
        }
    }
    for (j, c) in data.cf.iter().enumerate() {
        columns[j][m] = *c;
    }
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for (j, col) in columns.into_iter().enumerate() {
        if !used[j] {
            continue;
        }
        let norm0 = col.iter().map(|v| v * v).sum::<f64>().sqrt();
        let mut v = col;
        for _ in 0..2 {
            for q in &basis {
                let d: f64 = q.iter().zip(&v).map(|(a, b)| a * b).sum();
                for (vi, qi) in v.iter_mut().zip(q) {
                    *vi -= d * qi;
                }
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm <= 1e-9 * norm0 {
            used[j] = false;
        } else {
            v.iter_mut().for_each(|x| *x /= norm);
            basis.push(v);
        }
    }
}

/// Removes constraints that are linear combinations of others, which would
/// make the Newton system singular. Fails if such a combination has an
/// inconsistent right-hand side.
fn drop_dependent_rows(rows: Vec<Row>, sizes: &[usize], nfree: usize) -> std::result::Result<Vec<Row>, ()> {
    let m = rows.len();
    if m <= 1 {
        return Ok(rows);
    }
    let mut offsets = Vec::with_capacity(sizes.len());
    let mut dim = 0;
    for &n in sizes {
        offsets.push(dim);
        dim += n * n;
    }
    let mut a: DMatrix<f64> = DMatrix::zeros(dim + nfree, m);
    for (i, r) in rows.iter().enumerate() {
        for e in &r.entries {
            let w = if e.row == e.col { 1.0 } else { std::f64::consts::SQRT_2 };
            a[(offsets[e.block] + e.row * sizes[e.block] + e.col, i)] += w * e.value;
        }
        for &(j, v) in &r.free {
            a[(dim + j, i)] += v;
        }
    }
    let qr = a.col_piv_qr();
    let r = qr.r();
    let mut perm = DMatrix::<f64>::identity(m, m);
    qr.p().permute_columns(&mut perm);
    let order: Vec<usize> = (0..m)
        .map(|k| (0..m).find(|&i| perm[(i, k)] == 1.0).unwrap_or(k))
        .collect();
    let r00 = r[(0, 0)].abs();
    let rank = (0..m.min(r.nrows()))
        .take_while(|&k| r[(k, k)].abs() > 1e-10 * r00)
        .count();
    if rank == m {
        return Ok(rows);
    }
    // Dependent column j: R[..rank, ..rank] c = R[..rank, j] expresses it in
    // the independent rows; the right-hand sides must satisfy the same relation.
    let r11 = r.view((0, 0), (rank, rank)).into_owned();
    let rhs_indep = DVector::from_iterator(rank, order[..rank].iter().map(|&i| rows[i].rhs));
    for k in rank..m {
        let col = r.view((0, k), (rank, 1)).into_owned();
        let c = r11.solve_upper_triangular(&col).ok_or(())?;
        let predicted = c.dot(&rhs_indep);
        let actual = rows[order[k]].rhs;
        if (predicted - actual).abs() > 1e-8 * (1.0 + actual.abs() + c.norm() * rhs_indep.amax()) {
            return Err(());
        }
    }
    let mut keep = vec![false; m];
    for &i in &order[..rank] {
        keep[i] = true;
    }
    debug!("dropping {} linearly dependent constraints", m - rank);
    Ok(rows.into_iter().zip(keep).filter(|(_, k)| *k).map(|(r, _)| r).collect())
}

fn preprocess(problem: &SdpProblem) -> std::result::Result<Vec<Row>, ()> {
    let mut rows = Vec::with_capacity(problem.constraints.len());
    for (orig, c) in problem.constraints.iter().enumerate() {
        let mut entries: Vec<Entry> = c.matrix.iter().copied().filter(|e| e.value != 0.0).collect();
        entries.sort_by_key(|e| (e.block, e.row, e.col));
        let free: Vec<(usize, f64)> = c.free.iter().copied().filter(|&(_, v)| v != 0.0).collect();
        let norm = (entries
            .iter()
            .map(|e| if e.row == e.col { e.value * e.value } else { 2.0 * e.value * e.value })
            .sum::<f64>()
            + free.iter().map(|(_, v)| v * v).sum::<f64>())
        .sqrt();
        if norm == 0.0 {
            if c.rhs != 0.0 {
                return Err(());
            }
            continue;
        }
        let scale = 1.0 / norm;
        rows.push(Row {
            orig,
            entries: entries
                .into_iter()
                .map(|e| Entry { value: e.value * scale, ..e })
                .collect(),
            free: free.into_iter().map(|(j, v)| (j, v * scale)).collect(),
            rhs: c.rhs * scale,
            scale,
        });
    }
    Ok(rows)
}

/// Largest `alpha <= 1 / fraction` keeping `m + alpha dm` PSD, given the
/// Cholesky factor `l` of `m`.
fn max_step(l: &DMatrix<f64>, dm: &DMatrix<f64>) -> Option<f64> {
    let n = l.nrows();
    let half = l.solve_lower_triangular(dm)?;
    let mut w = l.solve_lower_triangular(&half.transpose())?;
    symmetrize(&mut w);
    let min_eig = if n == 1 {
        w[(0, 0)]
    } else {
        w.symmetric_eigenvalues().min()
    };
    if !min_eig.is_finite() {
        return None;
    }
    Some(if min_eig >= 0.0 {
        f64::INFINITY
    } else {
        -1.0 / min_eig
    })
}

struct Factors {
    lx: Vec<DMatrix<f64>>,
    ls: Vec<DMatrix<f64>>,
    sinv: Vec<DMatrix<f64>>,
}

fn factor(it: &Iterate) -> Option<Factors> {
    let mut lx = Vec::with_capacity(it.x.len());
    let mut ls = Vec::with_capacity(it.x.len());
    let mut sinv = Vec::with_capacity(it.x.len());
    for (x, s) in it.x.iter().zip(&it.s) {
        let cx = x.clone().cholesky()?;
        let cs = s.clone().cholesky()?;
        lx.push(cx.l());
        let mut si = cs.inverse();
        symmetrize(&mut si);
        ls.push(cs.unpack());
        sinv.push(si);
    }
    Some(Factors { lx, ls, sinv })
}

struct Kkt {
    lu: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    k: DMatrix<f64>,
}

impl Kkt {
    fn new(data: &Data, schur: DMatrix<f64>) -> Option<Kkt> {
        let m = data.m();
        let nf = data.nfree;
        let mut k = DMatrix::zeros(m + nf, m + nf);
        k.view_mut((0, 0), (m, m)).copy_from(&schur);
        for (i, r) in data.rows.iter().enumerate() {
            for &(j, v) in &r.free {
                k[(i, m + j)] += v;
                k[(m + j, i)] += v;
            }
        }
        let max_diag = (0..m).map(|i| k[(i, i)].abs()).fold(0.0, f64::max).max(1.0);
        let mut reg = k.clone();
        for i in 0..m {
            reg[(i, i)] += 1e-14 * max_diag;
        }
        let lu = reg.lu();
        if !lu.is_invertible() {
            return None;
        }
        Some(Kkt { lu, k })
    }

    fn solve(&self, rhs: &DVector<f64>) -> Option<DVector<f64>> {
        let mut sol = self.lu.solve(rhs)?;
        let mut r = rhs - &self.k * &sol;
        let mut rnorm = r.norm();
        for _ in 0..10 {
            let corr = self.lu.solve(&r)?;
            let cand = &sol + corr;
            let rc = rhs - &self.k * &cand;
            let rcn = rc.norm();
            if !(rcn < 0.9 * rnorm) {
                if rcn < rnorm {
                    sol = cand;
                }
                break;
            }
            sol = cand;
            r = rc;
            rnorm = rcn;
        }
        if sol.iter().all(|v| v.is_finite()) {
            Some(sol)
        } else {
            None
        }
    }
}

struct Residuals {
    rp: DVector<f64>,
    rd: Vec<DMatrix<f64>>,
    rf: DVector<f64>,
    pobj: f64,
    dobj: f64,
    pinf: f64,
    dinf: f64,
    relgap: f64,
    mu: f64,
}

fn residuals(data: &Data, it: &Iterate, ntotal: f64) -> Residuals {
    let ax = data.apply_a(&it.x);
    let by = data.apply_b(&it.y);
    let rp = data.rhs() - ax - by;
    let aty = data.apply_a_adjoint(&it.z);
    let rd: Vec<DMatrix<f64>> = data
        .c
        .iter()
        .zip(&aty)
        .zip(&it.s)
        .map(|((c, a), s)| c - a - s)
        .collect();
    let rf = DVector::from_vec(data.cf.clone()) - data.apply_bt(&it.z);
    let pobj = inner(&data.c, &it.x) + data.cf.iter().zip(it.y.iter()).map(|(a, b)| a * b).sum::<f64>();
    let dobj = data.rows.iter().zip(it.z.iter()).map(|(r, z)| r.rhs * z).sum::<f64>();
    let xs = inner(&it.x, &it.s);
    let unscaled_rp = rp
        .iter()
        .zip(&data.rows)
        .map(|(v, r)| (v / r.scale).powi(2))
        .sum::<f64>()
        .sqrt();
    let unscaled_b = data
        .rows
        .iter()
        .map(|r| (r.rhs / r.scale).powi(2))
        .sum::<f64>()
        .sqrt();
    let pinf = unscaled_rp / (1.0 + unscaled_b);
    let dinf = (frob(&rd).powi(2) + rf.norm_squared()).sqrt() / (1.0 + data.c_norm);
    let relgap = (pobj - dobj).abs().max(xs.max(0.0)) / (1.0 + pobj.abs() + dobj.abs());
    Residuals {
        rp,
        rd,
        rf,
        pobj,
        dobj,
        pinf,
        dinf,
        relgap,
        mu: xs / ntotal,
    }
}

fn initial_iterate(data: &Data) -> Iterate {
    let mut x = Vec::new();
    let mut s = Vec::new();
    for (b, &n) in data.sizes.iter().enumerate() {
        let nf = n as f64;
        let mut a_max: f64 = 0.0;
        let mut xi: f64 = 10f64.max(nf.sqrt());
        for (i, entries) in &data.by_block[b] {
            let norm = entries
                .iter()
                .map(|&(r, c, v)| if r == c { v * v } else { 2.0 * v * v })
                .sum::<f64>()
                .sqrt();
            a_max = a_max.max(norm);
            xi = xi.max(nf.sqrt() * (1.0 + data.rows[*i].rhs.abs()) / (1.0 + norm));
        }
        let eta = 10f64
            .max(nf.sqrt())
            .max((1.0 + a_max.max(data.c[b].norm())) / nf.sqrt());
        x.push(DMatrix::identity(n, n) * xi);
        s.push(DMatrix::identity(n, n) * eta);
    }
    Iterate {
        x,
        y: DVector::zeros(data.nfree),
        z: DVector::zeros(data.m()),
        s,
    }
}

struct Direction {
    dx: Vec<DMatrix<f64>>,
    dy: DVector<f64>,
    dz: DVector<f64>,
    ds: Vec<DMatrix<f64>>,
}

/// Solves for the HKM direction targeting `sigma * mu`, optionally with the
/// second-order correction from a predictor direction.
fn direction(
    data: &Data,
    it: &Iterate,
    f: &Factors,
    kkt: &Kkt,
    res: &Residuals,
    sigma_mu: f64,
    predictor: Option<&Direction>,
) -> Option<Direction> {
    let m = data.m();
    let nb = data.sizes.len();
    // X Rd S^{-1}, plus dXa dSa S^{-1} in the corrector.
    let mut t: Vec<DMatrix<f64>> = (0..nb).map(|b| &it.x[b] * &res.rd[b] * &f.sinv[b]).collect();
    let mut corr: Vec<DMatrix<f64>> = Vec::new();
    if let Some(p) = predictor {
        corr = (0..nb).map(|b| &p.dx[b] * &p.ds[b] * &f.sinv[b]).collect();
        for b in 0..nb {
            t[b] += &corr[b];
        }
    }
    let mut h = data.rhs() - data.apply_b(&it.y) + data.apply_a(&t);
    if sigma_mu != 0.0 {
        h -= data.apply_a(&f.sinv) * sigma_mu;
    }
    let mut rhs = DVector::zeros(m + data.nfree);
    rhs.rows_mut(0, m).copy_from(&h);
    rhs.rows_mut(m, data.nfree).copy_from(&res.rf);
    let sol = kkt.solve(&rhs)?;
    let dz = sol.rows(0, m).into_owned();
    let dy = sol.rows(m, data.nfree).into_owned();
    let atdz = data.apply_a_adjoint(&dz);
    let ds: Vec<DMatrix<f64>> = (0..nb).map(|b| &res.rd[b] - &atdz[b]).collect();
    let mut dx = Vec::with_capacity(nb);
    for b in 0..nb {
        let mut v = &it.x[b] * &ds[b] * &f.sinv[b];
        if let Some(c) = corr.get(b) {
            v += c;
        }
        symmetrize(&mut v);
        let d = &f.sinv[b] * sigma_mu - &it.x[b] - v;
        dx.push(d);
    }
    if dx.iter().chain(&ds).any(|m| m.iter().any(|v| !v.is_finite())) {
        return None;
    }
    Some(Direction { dx, dy, dz, ds })
}

fn step_lengths(f: &Factors, d: &Direction) -> Option<(f64, f64)> {
    let mut ap = f64::INFINITY;
    let mut ad = f64::INFINITY;
    for b in 0..f.lx.len() {
        ap = ap.min(max_step(&f.lx[b], &d.dx[b])?);
        ad = ad.min(max_step(&f.ls[b], &d.ds[b])?);
    }
    Some((ap, ad))
}

fn failed(problem: &SdpProblem, status: SolverStatus) -> SdpSolution {
    SdpSolution {
        status,
        primal_objective: f64::NAN,
        dual_objective: f64::NAN,
        x: problem
            .block_sizes
            .iter()
            .map(|&n| DMatrix::zeros(n, n))
            .collect(),
        y: vec![0.0; problem.num_free],
        z: vec![0.0; problem.constraints.len()],
        s: problem
            .block_sizes
            .iter()
            .map(|&n| DMatrix::zeros(n, n))
            .collect(),
        iterations: 0,
        primal_residual: f64::INFINITY,
        dual_residual: f64::INFINITY,
        relative_gap: f64::INFINITY,
        trace: Vec::new(),
    }
}

/// Solves `problem`. Numerical failures are reported through the status,
/// never by panicking; only malformed input is an error.
pub fn solve(problem: &SdpProblem, options: &SolverOptions) -> Result<SdpSolution> {
    problem.validate()?;
    if !options.facial_reduction {
        return Ok(solve_core(problem, options));
    }
    let red = facial_reduce(problem);
    if red.removed() == 0 {
        return Ok(solve_core(problem, options));
    }
    info!(
        "facial reduction removed {} of {} matrix indices",
        red.removed(),
        problem.total_dimension()
    );
    let sol = solve_core(&red.problem, options);
    Ok(lift(problem, &red, sol))
}

/// A problem without matrix blocks is the linear program `min c_f . y`,
/// `B y = b`, solved by least squares.
fn solve_free_only(problem: &SdpProblem, options: &SolverOptions) -> SdpSolution {
    let m = problem.constraints.len();
    let nf = problem.num_free;
    let mut bmat: DMatrix<f64> = DMatrix::zeros(m, nf);
    let b = DVector::from_iterator(m, problem.constraints.iter().map(|c| c.rhs));
    for (i, c) in problem.constraints.iter().enumerate() {
        for &(j, v) in &c.free {
            bmat[(i, j)] += v;
        }
    }
    let mut cf: DVector<f64> = DVector::zeros(nf);
    for &(j, v) in &problem.objective_free {
        cf[j] += v;
    }
    let tol = 1e-12 * bmat.amax().max(1.0);
    let (y, z) = if m == 0 || nf == 0 {
        (DVector::zeros(nf), DVector::zeros(m))
    } else {
        let svd = bmat.clone().svd(true, true);
        let y = svd.solve(&b, tol).unwrap_or_else(|_| DVector::zeros(nf));
        let z = bmat.transpose().svd(true, true).solve(&cf, tol).unwrap_or_else(|_| DVector::zeros(m));
        (y, z)
    };
    let pinf = (&bmat * &y - &b).norm() / (1.0 + b.norm());
    let dinf = (bmat.transpose() * &z - &cf).norm() / (1.0 + cf.norm());
    let status = if pinf > options.feas_tol {
        SolverStatus::PrimalInfeasible
    } else if dinf > options.feas_tol {
        SolverStatus::DualInfeasible
    } else {
        SolverStatus::Optimal
    };
    let pobj = cf.dot(&y);
    let dobj = b.dot(&z);
    SdpSolution {
        status,
        primal_objective: pobj,
        dual_objective: dobj,
        x: Vec::new(),
        y: y.iter().copied().collect(),
        z: z.iter().copied().collect(),
        s: Vec::new(),
        iterations: 0,
        primal_residual: pinf,
        dual_residual: dinf,
        relative_gap: (pobj - dobj).abs() / (1.0 + pobj.abs() + dobj.abs()),
        trace: Vec::new(),
    }
}

/// Embeds a solution of the reduced problem back into the original blocks.
fn lift(problem: &SdpProblem, red: &Reduction, sol: SdpSolution) -> SdpSolution {
    let x = red.lift(&sol.x, &problem.block_sizes);
    let mut s = dense_from_entries(&problem.block_sizes, &problem.objective);
    for (c, &zi) in problem.constraints.iter().zip(&sol.z) {
        for e in &c.matrix {
            s[e.block][(e.row, e.col)] -= zi * e.value;
            if e.row != e.col {
                s[e.block][(e.col, e.row)] -= zi * e.value;
            }
        }
    }
    SdpSolution { x, s, ..sol }
}

pub(crate) fn solve_core(problem: &SdpProblem, options: &SolverOptions) -> SdpSolution {
    if problem.block_sizes.is_empty() {
        return solve_free_only(problem, options);
    }
    let rows = match preprocess(problem) {
        Ok(r) => r,
        Err(()) => return failed(problem, SolverStatus::PrimalInfeasible),
    };
    let rows = match drop_dependent_rows(rows, &problem.block_sizes, problem.num_free) {
        Ok(r) => r,
        Err(()) => return failed(problem, SolverStatus::PrimalInfeasible),
    };
    let kept: Vec<usize> = rows.iter().map(|r| r.orig).collect();
    let data = Data::new(problem, rows);

    // A free variable absent from every constraint is either irrelevant or
    // makes the objective unbounded below.
    let mut used = vec![false; data.nfree];
    for r in &data.rows {
        for &(j, _) in &r.free {
            used[j] = true;
        }
    }
    if data.cf.iter().zip(&used).any(|(&c, &u)| !u && c != 0.0) {
        return failed(problem, SolverStatus::DualInfeasible);
    }
    drop_dependent_free(&data, &mut used);
    let data = if used.iter().all(|&u| u) {
        data
    } else {
        remap_free(data, &used)
    };

    let ntotal = data.sizes.iter().sum::<usize>() as f64;
    let mut it = initial_iterate(&data);
    let mut trace = Vec::new();
    let mut best: Option<(f64, Iterate, usize)> = None;
    let mut status = SolverStatus::IterationLimit;
    let mut stalls = 0;
    let mut iterations = 0;
    let (mut last_ap, mut last_ad) = (0.0, 0.0);

    for iter in 0..=options.max_iterations {
        iterations = iter;
        let res = residuals(&data, &it, ntotal);
        let info = IterationInfo {
            iteration: iter,
            primal_objective: res.pobj,
            dual_objective: res.dobj,
            mu: res.mu,
            relative_gap: res.relgap,
            primal_residual: res.pinf,
            dual_residual: res.dinf,
            primal_step: last_ap,
            dual_step: last_ad,
        };
        trace.push(info);
        let line = format!(
            "{iter:3} pobj {:+.9e} dobj {:+.9e} gap {:.2e} pinf {:.2e} dinf {:.2e} mu {:.2e} step {:.3} {:.3}",
            res.pobj, res.dobj, res.relgap, res.pinf, res.dinf, res.mu, last_ap, last_ad
        );
        if options.verbose {
            info!("{line}");
        } else {
            debug!("{line}");
        }
        if [res.pobj, res.dobj, res.mu].iter().any(|v| !v.is_finite()) {
            status = SolverStatus::SlowProgress;
            break;
        }
        let merit = (res.relgap / options.gap_tol)
            .max(res.pinf / options.feas_tol)
            .max(res.dinf / options.feas_tol);
        if best.as_ref().map_or(true, |(m, _, _)| merit < *m) {
            best = Some((merit, it.clone(), iter));
        }
        if res.relgap <= options.gap_tol && res.pinf <= options.feas_tol && res.dinf <= options.feas_tol {
            status = SolverStatus::Optimal;
            break;
        }
        // Certificates of infeasibility: a dual ray (b.z > 0, A* z <= 0,
        // B^T z = 0) or a primal ray (A X + B y = 0, <C, X> + c_f y < 0).
        if res.dobj > 0.0 {
            let ray_res = ((frob(&data.c.iter().zip(&res.rd).map(|(c, r)| c - r).collect::<Vec<_>>())).powi(2)
                + (DVector::from_vec(data.cf.clone()) - &res.rf).norm_squared())
            .sqrt();
            if ray_res / res.dobj < INFEASIBILITY_TOL && res.dobj > 1e6 {
                status = SolverStatus::PrimalInfeasible;
                break;
            }
        }
        if res.pobj < 0.0 {
            let ray_res = (data.rhs() - &res.rp).norm();
            if ray_res / (-res.pobj) < INFEASIBILITY_TOL && -res.pobj > 1e6 {
                status = SolverStatus::DualInfeasible;
                break;
            }
        }
        if iter == options.max_iterations {
            break;
        }

        let Some(f) = factor(&it) else {
            status = SolverStatus::SlowProgress;
            break;
        };
        let schur = data.schur(&it.x, &f.sinv);
        let Some(kkt) = Kkt::new(&data, schur) else {
            status = SolverStatus::SlowProgress;
            break;
        };
        let Some(pred) = direction(&data, &it, &f, &kkt, &res, 0.0, None) else {
            status = SolverStatus::SlowProgress;
            break;
        };
        let Some((ap, ad)) = step_lengths(&f, &pred) else {
            status = SolverStatus::SlowProgress;
            break;
        };
        let (ap, ad) = (ap.min(1.0), ad.min(1.0));
        let mut xs_aff = 0.0;
        for b in 0..data.sizes.len() {
            let xa = &it.x[b] + &pred.dx[b] * ap;
            let sa = &it.s[b] + &pred.ds[b] * ad;
            xs_aff += xa.dot(&sa);
        }
        let mu_aff = xs_aff / ntotal;
        let sigma = (mu_aff / res.mu).clamp(0.0, 1.0).powi(3);
        let Some(dir) = direction(&data, &it, &f, &kkt, &res, sigma * res.mu, Some(&pred)) else {
            status = SolverStatus::SlowProgress;
            break;
        };
        let Some((ap, ad)) = step_lengths(&f, &dir) else {
            status = SolverStatus::SlowProgress;
            break;
        };
        let ap = (options.step_fraction * ap).min(1.0);
        let ad = (options.step_fraction * ad).min(1.0);
        for b in 0..data.sizes.len() {
            it.x[b] += &dir.dx[b] * ap;
            it.s[b] += &dir.ds[b] * ad;
            symmetrize(&mut it.x[b]);
            symmetrize(&mut it.s[b]);
        }
        it.y += &dir.dy * ap;
        it.z += &dir.dz * ad;
        last_ap = ap;
        last_ad = ad;
        if ap < STALL_STEP && ad < STALL_STEP {
            stalls += 1;
            if stalls >= 3 {
                status = SolverStatus::SlowProgress;
                break;
            }
        } else {
            stalls = 0;
        }
    }

    let final_it = match status {
        SolverStatus::SlowProgress | SolverStatus::IterationLimit => {
            best.map(|(_, b, _)| b).unwrap_or(it)
        }
        _ => it,
    };
    let res = residuals(&data, &final_it, ntotal);
    let mut z = vec![0.0; problem.constraints.len()];
    for (k, &orig) in kept.iter().enumerate() {
        z[orig] = final_it.z[k] * data.rows[k].scale;
    }
    let mut y = vec![0.0; problem.num_free];
    let y_src: Vec<f64> = final_it.y.iter().copied().collect();
    match &data.free_index {
        Some(map) => {
            for (k, &orig) in map.iter().enumerate() {
                y[orig] = y_src[k];
            }
        }
        None => y.copy_from_slice(&y_src),
    }
    SdpSolution {
        status,
        primal_objective: res.pobj,
        dual_objective: res.dobj,
        x: final_it.x,
        y,
        z,
        s: final_it.s,
        iterations,
        primal_residual: res.pinf,
        dual_residual: res.dinf,
        relative_gap: res.relgap,
        trace,
    }
}
