//! Weighted sum-of-squares constraints and their translation into SDP blocks.
//!
//! A constraint `target >= 0 on {h_i >= 0, l_j = 0}` at degree `mu` is
//! imposed as
//!
//! ```text
//! target - sum_i h_i sigma_i - sum_j l_j rho_j = sigma_0
//! ```
//!
//! with `sigma_0` SOS of degree `<= mu`, `sigma_i` SOS of the largest even
//! degree `<= nu - deg h_i`, and `rho_j` free of degree `<= nu - deg l_j`,
//! where the multiplier budget `nu` defaults to `mu`.

mod bound;

pub use bound::{
    assemble_bound_sdp, BoundFormulation, BoundSdp, ConstraintRole, MultiplierDegree, RecoveredCertificate,
};

use std::collections::BTreeMap;

use log::warn;

use crate::error::Result;
use crate::polynomial::{monomials_up_to, Monomial, Polynomial};
use crate::sdp::{Constraint, Entry, SdpProblem};

/// Monomials of total degree `<= degree` in `nvars` variables, optionally
/// restricted to those with the given character under a sign symmetry.
pub fn monomial_basis(nvars: usize, degree: u32, symmetry: Option<(&[i8], i8)>) -> Vec<Monomial> {
    let all = monomials_up_to(nvars, degree);
    match symmetry {
        None => all,
        Some((signs, class)) => all.into_iter().filter(|m| m.character(signs) == class).collect(),
    }
}

/// Names and indices of the free decision variables of an SDP.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Registry {
    names: Vec<String>,
}

impl Registry {
    pub fn add(&mut self, name: impl Into<String>) -> usize {
        self.names.push(name.into());
        self.names.len() - 1
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn name(&self, index: usize) -> &str {
        &self.names[index]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }
}

/// A polynomial whose coefficients are affine in the free decision variables:
/// `constant + sum_k y_k * terms[k]`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearForm {
    pub constant: Polynomial,
    pub terms: Vec<(usize, Polynomial)>,
}

impl LinearForm {
    pub fn constant(p: Polynomial) -> Self {
        LinearForm {
            constant: p,
            terms: Vec::new(),
        }
    }

    pub fn vars(&self) -> &[String] {
        self.constant.vars()
    }

    pub fn embed(&self, vars: &[String]) -> Result<LinearForm> {
        Ok(LinearForm {
            constant: self.constant.embed(vars)?,
            terms: self
                .terms
                .iter()
                .map(|(k, p)| Ok((*k, p.embed(vars)?)))
                .collect::<Result<_>>()?,
        })
    }

    pub fn map(&self, f: impl Fn(&Polynomial) -> Result<Polynomial>) -> Result<LinearForm> {
        Ok(LinearForm {
            constant: f(&self.constant)?,
            terms: self
                .terms
                .iter()
                .map(|(k, p)| Ok((*k, f(p)?)))
                .collect::<Result<_>>()?,
        })
    }

    pub fn scale(&self, s: f64) -> LinearForm {
        LinearForm {
            constant: self.constant.scale(s),
            terms: self.terms.iter().map(|(k, p)| (*k, p.scale(s))).collect(),
        }
    }

    pub fn add(&self, other: &LinearForm) -> LinearForm {
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        LinearForm {
            constant: &self.constant + &other.constant,
            terms,
        }
    }

    pub fn add_polynomial(&self, p: &Polynomial) -> LinearForm {
        LinearForm {
            constant: &self.constant + p,
            terms: self.terms.clone(),
        }
    }

    /// Substitutes values for the decision variables.
    pub fn evaluate(&self, y: &[f64]) -> Polynomial {
        let mut out = self.constant.clone();
        for (k, p) in &self.terms {
            out = &out + &p.scale(y[*k]);
        }
        out
    }

    pub fn degree(&self) -> u32 {
        self.terms
            .iter()
            .map(|(_, p)| p.degree())
            .chain(std::iter::once(self.constant.degree()))
            .max()
            .unwrap_or(0)
    }
}

/// `target >= 0` on a semialgebraic set, imposed at degree `degree`.
#[derive(Clone, Debug)]
pub struct WsosConstraint {
    pub label: String,
    pub target: LinearForm,
    pub degree: u32,
    /// Degree budget `nu` for the multipliers; `None` means `degree`.
    pub multiplier_degree: Option<u32>,
    pub inequalities: Vec<Polynomial>,
    pub equalities: Vec<Polynomial>,
    /// Sign symmetry over the constraint's variables, if all data is invariant.
    pub symmetry: Option<Vec<i8>>,
}

/// Where the pieces of an assembled constraint live in the SDP.
#[derive(Clone, Debug)]
pub struct GramBlock {
    pub block: usize,
    pub basis: Vec<Monomial>,
    /// `1` for the free SOS term, otherwise the inequality it multiplies.
    pub multiplier: Polynomial,
}

#[derive(Clone, Debug)]
pub struct FreeMultiplier {
    pub equality: Polynomial,
    pub basis: Vec<Monomial>,
    pub first_var: usize,
}

#[derive(Clone, Debug)]
pub struct SosLayout {
    pub label: String,
    pub gram: Vec<GramBlock>,
    pub free: Vec<FreeMultiplier>,
    pub target: LinearForm,
    pub first_row: usize,
    pub num_rows: usize,
}

impl SosLayout {
    /// `target - sum h sigma - sum l rho - sigma_0` at the given solution.
    pub fn identity_residual(&self, x: &[nalgebra::DMatrix<f64>], y: &[f64]) -> Polynomial {
        let mut res = self.target.evaluate(y);
        for g in &self.gram {
            let sigma = gram_polynomial(&g.basis, &x[g.block], res.vars());
            res = &res - &(&g.multiplier * &sigma);
        }
        for f in &self.free {
            let rho = Polynomial::from_terms(
                res.vars(),
                f.basis
                    .iter()
                    .enumerate()
                    .map(|(k, m)| (m.clone(), y[f.first_var + k])),
            );
            res = &res - &(&f.equality * &rho);
        }
        res
    }
}

/// `b(x)^T Q b(x)` for a Gram matrix `Q` over basis `b`.
pub fn gram_polynomial(basis: &[Monomial], q: &nalgebra::DMatrix<f64>, vars: &[String]) -> Polynomial {
    let mut p = Polynomial::zero(vars);
    for (i, bi) in basis.iter().enumerate() {
        for (j, bj) in basis.iter().enumerate().skip(i) {
            let c = if i == j { q[(i, i)] } else { q[(i, j)] + q[(j, i)] };
            p.add_term(bi.mul(bj), c);
        }
    }
    p
}

/// Leading monomial in graded lexicographic order.
fn leading_monomial(p: &Polynomial) -> Option<Monomial> {
    let top = p.degree();
    p.terms()
        .map(|(m, _)| m)
        .filter(|m| m.degree() == top)
        .min()
        .cloned()
}

/// Leading monomials of the equalities when they form a Gröbner basis that
/// can be recognized cheaply (pairwise coprime leading monomials). Gram bases
/// can then be restricted to standard monomials without loss, which keeps the
/// moment side of the SDP strictly feasible.
fn quotient_leads(equalities: &[Polynomial]) -> Vec<Monomial> {
    let leads: Vec<Monomial> = equalities.iter().filter_map(leading_monomial).collect();
    if leads.iter().any(|m| m.is_one()) {
        return Vec::new();
    }
    for (i, a) in leads.iter().enumerate() {
        for b in &leads[i + 1..] {
            if a.iter().any(|(v, _)| b.exponent(v) > 0) {
                return Vec::new();
            }
        }
    }
    leads
}

fn character_of(p: &Polynomial, signs: &[i8]) -> i8 {
    p.terms().next().map_or(1, |(m, _)| m.character(signs))
}

/// Coefficient-matching rows keyed by monomial. Matrix entries refer to
/// candidate indices rather than SDP blocks.
fn coefficient_rows(
    target: &LinearForm,
    candidates: &[(Polynomial, Vec<Monomial>)],
    free: &[FreeMultiplier],
) -> BTreeMap<Monomial, Constraint> {
    let mut rows: BTreeMap<Monomial, Constraint> = BTreeMap::new();
    for (m, v) in target.constant.terms() {
        rows.entry(m.clone()).or_default().rhs += v;
    }
    for (k, p) in &target.terms {
        for (m, v) in p.terms() {
            rows.entry(m.clone()).or_default().free.push((*k, -v));
        }
    }
    for (block, (multiplier, basis)) in candidates.iter().enumerate() {
        for p in 0..basis.len() {
            for q in p..basis.len() {
                let prod = basis[p].mul(&basis[q]);
                for (mh, ch) in multiplier.terms() {
                    rows.entry(mh.mul(&prod))
                        .or_default()
                        .matrix
                        .push(Entry::new(block, p, q, ch));
                }
            }
        }
    }
    for f in free {
        for (k, m) in f.basis.iter().enumerate() {
            for (ml, cl) in f.equality.terms() {
                rows.entry(ml.mul(m))
                    .or_default()
                    .free
                    .push((f.first_var + k, cl));
            }
        }
    }
    rows
}

/// A row with zero right-hand side, no free variables, and only diagonal
/// Gram entries of one sign forces those diagonals, hence the whole
/// rows and columns, to vanish. Removes such basis elements; returns whether
/// anything changed.
fn prune_forced_zero(
    rows: &BTreeMap<Monomial, Constraint>,
    candidates: &mut [(Polynomial, Vec<Monomial>)],
) -> bool {
    let mut drop: Vec<Vec<bool>> = candidates.iter().map(|(_, b)| vec![false; b.len()]).collect();
    let mut changed = false;
    for row in rows.values() {
        if row.rhs != 0.0 || !row.free.is_empty() || row.matrix.is_empty() {
            continue;
        }
        let diagonal = row.matrix.iter().all(|e| e.row == e.col);
        let positive = row.matrix.iter().all(|e| e.value > 0.0);
        let negative = row.matrix.iter().all(|e| e.value < 0.0);
        if diagonal && (positive || negative) {
            for e in &row.matrix {
                if !drop[e.block][e.row] {
                    drop[e.block][e.row] = true;
                    changed = true;
                }
            }
        }
    }
    if changed {
        for ((_, basis), flags) in candidates.iter_mut().zip(drop) {
            let mut k = 0;
            basis.retain(|_| {
                let keep = !flags[k];
                k += 1;
                keep
            });
        }
    }
    changed
}

/// Adds the Gram blocks, free multipliers, and coefficient-matching rows of
/// `c` to `sdp`, registering multiplier coefficients in `registry`.
pub fn assemble_sos_constraint(
    c: &WsosConstraint,
    registry: &mut Registry,
    sdp: &mut SdpProblem,
) -> Result<SosLayout> {
    let vars = c.target.vars().to_vec();
    let nvars = vars.len();
    let signs = c.symmetry.as_deref();
    let mut candidates: Vec<(Polynomial, Vec<Monomial>)> = Vec::new();
    let mut free = Vec::new();

    let embedded_eqs: Vec<Polynomial> = c
        .equalities
        .iter()
        .map(|l| l.embed(&vars))
        .collect::<Result<_>>()?;
    let leads = quotient_leads(&embedded_eqs);
    let mut add_gram = |multiplier: Polynomial, half_degree: u32| {
        let classes: Vec<Option<(&[i8], i8)>> = match signs {
            Some(s) => vec![Some((s, 1)), Some((s, -1))],
            None => vec![None],
        };
        for class in classes {
            let basis: Vec<Monomial> = monomial_basis(nvars, half_degree, class)
                .into_iter()
                .filter(|m| leads.iter().all(|l| m.div(l).is_none()))
                .collect();
            candidates.push((multiplier.clone(), basis));
        }
    };

    add_gram(Polynomial::constant(&vars, 1.0), c.degree / 2);
    let nu = c.multiplier_degree.unwrap_or(c.degree);
    for h in &c.inequalities {
        let h = h.embed(&vars)?;
        let dh = h.degree();
        if dh > nu {
            warn!(
                "{}: inequality of degree {dh} exceeds degree {nu}; multiplier omitted",
                c.label
            );
            continue;
        }
        add_gram(h, (nu - dh) / 2);
    }
    for l in embedded_eqs {
        let dl = l.degree();
        if dl > nu {
            warn!(
                "{}: equality of degree {dl} exceeds degree {nu}; multiplier omitted",
                c.label
            );
            continue;
        }
        let class = signs.map(|s| (s, character_of(&l, s)));
        let basis = monomial_basis(nvars, nu - dl, class);
        let first_var = registry.len();
        for m in &basis {
            registry.add(format!("{}:rho[{}]", c.label, Polynomial::monomial(&vars, m.clone(), 1.0)));
        }
        free.push(FreeMultiplier {
            equality: l,
            basis,
            first_var,
        });
    }

    let target = c.target.embed(&vars)?;
    let mut rows = coefficient_rows(&target, &candidates, &free);
    while prune_forced_zero(&rows, &mut candidates) {
        rows = coefficient_rows(&target, &candidates, &free);
    }

    // Renumber blocks: candidates with an empty basis get no block.
    let mut gram = Vec::new();
    let mut block_of = Vec::with_capacity(candidates.len());
    for (multiplier, basis) in candidates {
        if basis.is_empty() {
            block_of.push(usize::MAX);
            continue;
        }
        sdp.block_sizes.push(basis.len());
        block_of.push(sdp.block_sizes.len() - 1);
        gram.push(GramBlock {
            block: sdp.block_sizes.len() - 1,
            basis,
            multiplier,
        });
    }
    for row in rows.values_mut() {
        for e in &mut row.matrix {
            e.block = block_of[e.block];
        }
    }
    let first_row = sdp.constraints.len();
    for (m, row) in rows {
        if let Some(s) = signs {
            if m.character(s) != 1 {
                continue;
            }
        }
        sdp.constraints.push(row);
    }
    sdp.num_free = registry.len();
    Ok(SosLayout {
        label: c.label.clone(),
        gram,
        free,
        target,
        first_row,
        num_rows: sdp.constraints.len() - first_row,
    })
}
