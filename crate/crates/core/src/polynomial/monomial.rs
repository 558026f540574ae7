use std::cmp::Ordering;

/// A power product over variable indices.
///
/// Exponents are stored sparsely as `(variable index, exponent)` pairs sorted
/// by index; a zero exponent is never stored.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct Monomial {
    exps: Vec<(usize, u32)>,
}

impl Monomial {
    pub fn one() -> Self {
        Monomial { exps: Vec::new() }
    }

    pub fn var(index: usize) -> Self {
        Monomial {
            exps: vec![(index, 1)],
        }
    }

    /// Builds a monomial from a dense exponent vector.
    pub fn from_dense(exponents: &[u32]) -> Self {
        let exps = exponents
            .iter()
            .enumerate()
            .filter(|(_, &e)| e > 0)
            .map(|(i, &e)| (i, e))
            .collect();
        Monomial { exps }
    }

    /// Builds a monomial from arbitrary `(index, exponent)` pairs, merging repeats.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (usize, u32)>) -> Self {
        let mut exps: Vec<(usize, u32)> = Vec::new();
        for (i, e) in pairs {
            if e == 0 {
                continue;
            }
            match exps.binary_search_by_key(&i, |&(j, _)| j) {
                Ok(pos) => exps[pos].1 += e,
                Err(pos) => exps.insert(pos, (i, e)),
            }
        }
        Monomial { exps }
    }

    pub fn exponent(&self, index: usize) -> u32 {
        self.exps
            .binary_search_by_key(&index, |&(j, _)| j)
            .map(|pos| self.exps[pos].1)
            .unwrap_or(0)
    }

    pub fn degree(&self) -> u32 {
        self.exps.iter().map(|&(_, e)| e).sum()
    }

    pub fn is_one(&self) -> bool {
        self.exps.is_empty()
    }

    /// Nonzero `(index, exponent)` pairs in increasing index order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, u32)> + '_ {
        self.exps.iter().copied()
    }

    /// Largest variable index used, if any.
    pub fn max_index(&self) -> Option<usize> {
        self.exps.last().map(|&(i, _)| i)
    }

    pub fn dense(&self, nvars: usize) -> Vec<u32> {
        let mut out = vec![0; nvars];
        for &(i, e) in &self.exps {
            out[i] = e;
        }
        out
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let mut exps = Vec::with_capacity(self.exps.len() + other.exps.len());
        let (mut a, mut b) = (0, 0);
        while a < self.exps.len() && b < other.exps.len() {
            let (ia, ea) = self.exps[a];
            let (ib, eb) = other.exps[b];
            match ia.cmp(&ib) {
                Ordering::Less => {
                    exps.push((ia, ea));
                    a += 1;
                }
                Ordering::Greater => {
                    exps.push((ib, eb));
                    b += 1;
                }
                Ordering::Equal => {
                    exps.push((ia, ea + eb));
                    a += 1;
                    b += 1;
                }
            }
        }
        exps.extend_from_slice(&self.exps[a..]);
        exps.extend_from_slice(&other.exps[b..]);
        Monomial { exps }
    }

    /// Exact quotient `self / other`, or `None` when `other` does not divide `self`.
    pub fn div(&self, other: &Monomial) -> Option<Monomial> {
        let mut exps = Vec::with_capacity(self.exps.len());
        let mut b = 0;
        for &(i, e) in &self.exps {
            if b < other.exps.len() && other.exps[b].0 < i {
                return None;
            }
            if b < other.exps.len() && other.exps[b].0 == i {
                let eo = other.exps[b].1;
                b += 1;
                match e.cmp(&eo) {
                    Ordering::Less => return None,
                    Ordering::Equal => {}
                    Ordering::Greater => exps.push((i, e - eo)),
                }
            } else {
                exps.push((i, e));
            }
        }
        if b < other.exps.len() {
            return None;
        }
        Some(Monomial { exps })
    }

    /// Formal partial derivative: `(multiplier, monomial)` or `None` if it vanishes.
    pub fn derivative(&self, index: usize) -> Option<(u32, Monomial)> {
        let pos = self.exps.binary_search_by_key(&index, |&(j, _)| j).ok()?;
        let e = self.exps[pos].1;
        let mut exps = self.exps.clone();
        if e == 1 {
            exps.remove(pos);
        } else {
            exps[pos].1 = e - 1;
        }
        Some((e, Monomial { exps }))
    }

    /// Reindexes variables through `map` (old index -> new index).
    pub fn reindex(&self, map: &[usize]) -> Monomial {
        Monomial::from_pairs(self.exps.iter().map(|&(i, e)| (map[i], e)))
    }

    /// Removes variable `index` and shifts higher indices down by one.
    /// Returns `None` if the variable occurs.
    pub fn drop_var(&self, index: usize) -> Option<Monomial> {
        let mut exps = Vec::with_capacity(self.exps.len());
        for &(i, e) in &self.exps {
            match i.cmp(&index) {
                Ordering::Less => exps.push((i, e)),
                Ordering::Equal => return None,
                Ordering::Greater => exps.push((i - 1, e)),
            }
        }
        Some(Monomial { exps })
    }

    /// Sign of the monomial under the diagonal map `x_i -> signs[i] * x_i`.
    pub fn character(&self, signs: &[i8]) -> i8 {
        let mut s = 1i8;
        for &(i, e) in &self.exps {
            if signs.get(i).copied().unwrap_or(1) < 0 && e % 2 == 1 {
                s = -s;
            }
        }
        s
    }

    pub fn eval(&self, point: &[f64]) -> f64 {
        self.exps
            .iter()
            .fold(1.0, |acc, &(i, e)| acc * point[i].powi(e as i32))
    }

    /// Lexicographic comparison of the dense exponent vectors.
    fn lex_cmp(&self, other: &Monomial) -> Ordering {
        let (mut a, mut b) = (0, 0);
        loop {
            match (self.exps.get(a), other.exps.get(b)) {
                (None, None) => return Ordering::Equal,
                (Some(_), None) => return Ordering::Greater,
                (None, Some(_)) => return Ordering::Less,
                (Some(&(ia, ea)), Some(&(ib, eb))) => match ia.cmp(&ib) {
                    // `self` has a positive exponent where `other` has zero.
                    Ordering::Less => return Ordering::Greater,
                    Ordering::Greater => return Ordering::Less,
                    Ordering::Equal => {
                        if ea != eb {
                            return ea.cmp(&eb);
                        }
                        a += 1;
                        b += 1;
                    }
                },
            }
        }
    }
}

/// Graded ordering: lower total degree first; within a degree, the monomial
/// that is larger in lexicographic order (earlier variables first) comes first.
/// Sorting the monomials of degree <= 2 in `(t, x)` gives `1, t, x, t^2, t*x, x^2`.
impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| other.lex_cmp(self))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// All monomials in `nvars` variables with total degree `<= degree`, in graded order.
pub fn monomials_up_to(nvars: usize, degree: u32) -> Vec<Monomial> {
    let mut out = Vec::new();
    for d in 0..=degree {
        let mut current = vec![0u32; nvars];
        exact_degree(nvars, d, 0, &mut current, &mut out);
    }
    out
}

// Emits exponent vectors of exact total degree `remaining` in lex-descending order.
fn exact_degree(
    nvars: usize,
    remaining: u32,
    pos: usize,
    current: &mut Vec<u32>,
    out: &mut Vec<Monomial>,
) {
    if nvars == 0 {
        if remaining == 0 {
            out.push(Monomial::one());
        }
        return;
    }
    if pos == nvars - 1 {
        current[pos] = remaining;
        out.push(Monomial::from_dense(current));
        current[pos] = 0;
        return;
    }
    for e in (0..=remaining).rev() {
        current[pos] = e;
        exact_degree(nvars, remaining - e, pos + 1, current, out);
    }
    current[pos] = 0;
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn graded_order_of_small_basis() {
        let basis = monomials_up_to(2, 2);
        let dense: Vec<Vec<u32>> = basis.iter().map(|m| m.dense(2)).collect();
        assert_eq!(
            dense,
            vec![
                vec![0, 0],
                vec![1, 0],
                vec![0, 1],
                vec![2, 0],
                vec![1, 1],
                vec![0, 2]
            ]
        );
        let mut sorted = basis.clone();
        sorted.sort();
        assert_eq!(sorted, basis);
    }

    #[test]
    fn mul_div_roundtrip() {
        let a = Monomial::from_dense(&[2, 0, 1]);
        let b = Monomial::from_dense(&[1, 3, 0]);
        let p = a.mul(&b);
        assert_eq!(p.dense(3), vec![3, 3, 1]);
        assert_eq!(p.div(&b), Some(a.clone()));
        assert_eq!(a.div(&b), None);
    }

    #[test]
    fn derivative_drops_exponent() {
        let m = Monomial::from_dense(&[2, 1]);
        assert_eq!(m.derivative(0), Some((2, Monomial::from_dense(&[1, 1]))));
        assert_eq!(m.derivative(1), Some((1, Monomial::from_dense(&[2]))));
        assert!(Monomial::from_dense(&[0, 1]).derivative(0).is_none());
    }

    #[test]
    fn character_counts_odd_sign_flips() {
        let signs = [1, -1, -1];
        assert_eq!(Monomial::from_dense(&[5, 1, 1]).character(&signs), 1);
        assert_eq!(Monomial::from_dense(&[0, 2, 1]).character(&signs), -1);
    }
}
