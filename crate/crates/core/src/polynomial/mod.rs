//! Sparse multivariate polynomials over named variables.

mod monomial;
mod parse;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

pub use monomial::{monomials_up_to, Monomial};
pub use parse::parse;

use crate::error::{Error, Result};

/// Real polynomial over an ordered list of named variables.
///
/// Terms with an exactly zero coefficient are never stored. Two polynomials
/// are equal when they share the variable list and the term maps agree.
#[derive(Clone, Debug, PartialEq)]
pub struct Polynomial {
    vars: Arc<[String]>,
    terms: BTreeMap<Monomial, f64>,
}

impl Polynomial {
    pub fn zero(vars: &[String]) -> Self {
        Polynomial {
            vars: vars.into(),
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(vars: &[String], c: f64) -> Self {
        let mut p = Polynomial::zero(vars);
        p.add_term(Monomial::one(), c);
        p
    }

    /// The polynomial consisting of the single variable `name`.
    pub fn variable(vars: &[String], name: &str) -> Result<Self> {
        let idx = index_of(vars, name)?;
        Ok(Polynomial::monomial(vars, Monomial::var(idx), 1.0))
    }

    pub fn monomial(vars: &[String], m: Monomial, c: f64) -> Self {
        let mut p = Polynomial::zero(vars);
        p.add_term(m, c);
        p
    }

    pub fn from_terms(vars: &[String], terms: impl IntoIterator<Item = (Monomial, f64)>) -> Self {
        let mut p = Polynomial::zero(vars);
        for (m, c) in terms {
            p.add_term(m, c);
        }
        p
    }

    pub(crate) fn with_shared_vars(vars: Arc<[String]>) -> Self {
        Polynomial {
            vars,
            terms: BTreeMap::new(),
        }
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    pub fn shared_vars(&self) -> Arc<[String]> {
        self.vars.clone()
    }

    pub fn nvars(&self) -> usize {
        self.vars.len()
    }

    pub fn var_index(&self, name: &str) -> Result<usize> {
        index_of(&self.vars, name)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, f64)> + '_ {
        self.terms.iter().map(|(m, &c)| (m, c))
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn coefficient(&self, m: &Monomial) -> f64 {
        self.terms.get(m).copied().unwrap_or(0.0)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Total degree; the zero polynomial has degree 0.
    pub fn degree(&self) -> u32 {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    /// Largest exponent of variable `index` over all terms.
    pub fn degree_in(&self, index: usize) -> u32 {
        self.terms.keys().map(|m| m.exponent(index)).max().unwrap_or(0)
    }

    pub fn depends_on(&self, name: &str) -> bool {
        match self.var_index(name) {
            Ok(i) => self.degree_in(i) > 0,
            Err(_) => false,
        }
    }

    /// Adds `c * m` in place, dropping the term if it cancels exactly.
    pub fn add_term(&mut self, m: Monomial, c: f64) {
        if c == 0.0 {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(m) {
            Entry::Vacant(v) => {
                v.insert(c);
            }
            Entry::Occupied(mut o) => {
                let s = *o.get() + c;
                if s == 0.0 {
                    o.remove();
                } else {
                    *o.get_mut() = s;
                }
            }
        }
    }

    /// Drops every term whose coefficient magnitude is below `threshold`.
    pub fn prune(&self, threshold: f64) -> Polynomial {
        let mut out = Polynomial::with_shared_vars(self.vars.clone());
        for (m, &c) in &self.terms {
            if c.abs() >= threshold && c != 0.0 {
                out.terms.insert(m.clone(), c);
            }
        }
        out
    }

    pub fn scale(&self, s: f64) -> Polynomial {
        let mut out = Polynomial::with_shared_vars(self.vars.clone());
        for (m, &c) in &self.terms {
            out.add_term(m.clone(), c * s);
        }
        out
    }

    /// Re-expresses the polynomial over `vars`, which must contain every
    /// variable this polynomial uses.
    pub fn embed(&self, vars: &[String]) -> Result<Polynomial> {
        if *self.vars == *vars {
            return Ok(self.clone());
        }
        let mut map = Vec::with_capacity(self.vars.len());
        for (i, name) in self.vars.iter().enumerate() {
            match vars.iter().position(|v| v == name) {
                Some(j) => map.push(j),
                None => {
                    if self.degree_in(i) > 0 {
                        return Err(Error::VariableMismatch(name.clone()));
                    }
                    map.push(usize::MAX);
                }
            }
        }
        let mut out = Polynomial::zero(vars);
        for (m, &c) in &self.terms {
            out.add_term(m.reindex(&map), c);
        }
        Ok(out)
    }

    fn aligned(&self, other: &Polynomial) -> Result<(Polynomial, Polynomial)> {
        if self.vars == other.vars {
            return Ok((self.clone(), other.clone()));
        }
        if let Ok(o) = other.embed(&self.vars) {
            return Ok((self.clone(), o));
        }
        if let Ok(s) = self.embed(&other.vars) {
            return Ok((s, other.clone()));
        }
        let missing = self
            .vars
            .iter()
            .find(|v| !other.vars.contains(v))
            .or_else(|| other.vars.iter().find(|v| !self.vars.contains(v)))
            .cloned()
            .unwrap_or_default();
        Err(Error::VariableMismatch(missing))
    }

    pub fn add(&self, other: &Polynomial) -> Result<Polynomial> {
        let (mut a, b) = self.aligned(other)?;
        for (m, c) in b.terms {
            a.add_term(m, c);
        }
        Ok(a)
    }

    pub fn sub(&self, other: &Polynomial) -> Result<Polynomial> {
        self.add(&other.scale(-1.0))
    }

    pub fn mul(&self, other: &Polynomial) -> Result<Polynomial> {
        let (a, b) = self.aligned(other)?;
        let mut out = Polynomial::with_shared_vars(a.vars.clone());
        for (ma, &ca) in &a.terms {
            for (mb, &cb) in &b.terms {
                out.add_term(ma.mul(mb), ca * cb);
            }
        }
        Ok(out)
    }

    pub fn pow(&self, exponent: u32) -> Polynomial {
        let mut result = Polynomial::constant(&self.vars, 1.0);
        let mut base = self.clone();
        let mut e = exponent;
        while e > 0 {
            if e & 1 == 1 {
                result = &result * &base;
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        result
    }

    pub fn differentiate(&self, var: &str) -> Result<Polynomial> {
        let idx = self.var_index(var)?;
        Ok(self.differentiate_index(idx))
    }

    pub fn differentiate_index(&self, idx: usize) -> Polynomial {
        let mut out = Polynomial::with_shared_vars(self.vars.clone());
        for (m, &c) in &self.terms {
            if let Some((e, dm)) = m.derivative(idx) {
                out.add_term(dm, c * e as f64);
            }
        }
        out
    }

    /// Evaluates at a point given by name; every variable must be assigned.
    pub fn evaluate<S: AsRef<str>>(&self, point: &[(S, f64)]) -> Result<f64> {
        let mut values = Vec::with_capacity(self.vars.len());
        for name in self.vars.iter() {
            let v = point
                .iter()
                .find(|(n, _)| n.as_ref() == name)
                .map(|&(_, v)| v)
                .ok_or_else(|| Error::MissingAssignment(name.clone()))?;
            values.push(v);
        }
        Ok(self.eval(&values))
    }

    /// Evaluates at a point listed in variable order.
    pub fn eval(&self, values: &[f64]) -> f64 {
        debug_assert!(values.len() >= self.vars.len());
        self.terms.iter().map(|(m, &c)| c * m.eval(values)).sum()
    }

    /// Substitutes `var = value` and keeps the variable list.
    pub fn substitute_value(&self, var: &str, value: f64) -> Result<Polynomial> {
        let idx = self.var_index(var)?;
        let mut out = Polynomial::with_shared_vars(self.vars.clone());
        for (m, &c) in &self.terms {
            let e = m.exponent(idx);
            let rest = if e == 0 {
                m.clone()
            } else {
                m.div(&Monomial::from_pairs([(idx, e)])).expect("divides")
            };
            out.add_term(rest, c * value.powi(e as i32));
        }
        Ok(out)
    }

    /// `p(s_1 x_1, ..., s_n x_n)` for per-variable factors `s`.
    pub fn scale_vars(&self, factors: &[f64]) -> Polynomial {
        let mut out = Polynomial::with_shared_vars(self.vars.clone());
        for (m, &c) in &self.terms {
            let f: f64 = m.iter().map(|(i, e)| factors[i].powi(e as i32)).product();
            out.add_term(m.clone(), c * f);
        }
        out
    }

    /// Composition: substitutes polynomial `subs[i]` (over a common variable list)
    /// for variable `i`.
    pub fn compose(&self, subs: &[Polynomial]) -> Result<Polynomial> {
        if subs.len() != self.vars.len() {
            return Err(Error::InvalidProblem(format!(
                "composition needs {} substitutions, got {}",
                self.vars.len(),
                subs.len()
            )));
        }
        let target: Vec<String> = match subs.first() {
            Some(s) => s.vars.to_vec(),
            None => return Ok(self.clone()),
        };
        let subs: Vec<Polynomial> = subs
            .iter()
            .map(|s| s.embed(&target))
            .collect::<Result<_>>()?;
        let mut out = Polynomial::zero(&target);
        for (m, &c) in &self.terms {
            let mut term = Polynomial::constant(&target, c);
            for (i, e) in m.iter() {
                term = &term * &subs[i].pow(e);
            }
            out = &out + &term;
        }
        Ok(out)
    }

    /// Maximum absolute coefficient.
    pub fn max_abs_coefficient(&self) -> f64 {
        self.terms.values().fold(0.0, |a, &c| a.max(c.abs()))
    }

    /// Euclidean norm of the coefficient vector.
    pub fn coefficient_norm(&self) -> f64 {
        self.terms.values().map(|c| c * c).sum::<f64>().sqrt()
    }
}

fn index_of(vars: &[String], name: &str) -> Result<usize> {
    vars.iter()
        .position(|v| v == name)
        .ok_or_else(|| Error::UnknownVariable(name.to_string()))
}

/// Convenience: owned variable list from string slices.
pub fn var_list(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

macro_rules! binop {
    ($trait:ident, $method:ident, $inner:ident) => {
        impl std::ops::$trait<&Polynomial> for &Polynomial {
            type Output = Polynomial;
            /// Panics if the variable lists are incompatible; use the named
            /// method for a fallible version.
            fn $method(self, rhs: &Polynomial) -> Polynomial {
                Polynomial::$inner(self, rhs).expect("incompatible polynomial variables")
            }
        }
    };
}
binop!(Add, add, add);
binop!(Sub, sub, sub);
binop!(Mul, mul, mul);

impl std::ops::Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        self.scale(-1.0)
    }
}

pub(crate) fn format_coefficient(c: f64) -> String {
    let a = c.abs();
    if a == 0.0 || (1e-5..1e16).contains(&a) {
        format!("{}", c)
    } else {
        format!("{:e}", c)
    }
}

fn format_monomial(m: &Monomial, vars: &[String]) -> String {
    m.iter()
        .map(|(i, e)| {
            if e == 1 {
                vars[i].clone()
            } else {
                format!("{}^{}", vars[i], e)
            }
        })
        .collect::<Vec<_>>()
        .join("*")
}

/// Canonical text: highest degree first, lexicographically larger monomials
/// first within a degree, coefficients in shortest round-trip form.
impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut keys: Vec<&Monomial> = self.terms.keys().collect();
        keys.sort_by(|a, b| b.degree().cmp(&a.degree()).then_with(|| a.cmp(b)));
        for (k, m) in keys.into_iter().enumerate() {
            let c = self.terms[m];
            let mag = c.abs();
            if k == 0 {
                if c < 0.0 {
                    write!(f, "-")?;
                }
            } else if c < 0.0 {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            if m.is_one() {
                write!(f, "{}", format_coefficient(mag))?;
            } else if mag == 1.0 {
                write!(f, "{}", format_monomial(m, &self.vars))?;
            } else {
                write!(
                    f,
                    "{}*{}",
                    format_coefficient(mag),
                    format_monomial(m, &self.vars)
                )?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vars() -> Vec<String> {
        var_list(&["t", "x1", "x2"])
    }

    fn p(s: &str) -> Polynomial {
        parse(s, &vars()).unwrap()
    }

    #[test]
    fn additive_inverse_cancels() {
        assert!((&p("x1") + &p("-x1")).is_zero());
        assert_eq!(&p("x1^2 + 1") + &p("2*x1^2"), p("3*x1^2 + 1"));
        assert_eq!(&p("t*x2") + &p("x1*x2"), p("t*x2 + x1*x2"));
    }

    #[test]
    fn products() {
        assert_eq!(&p("x1 + x2") * &p("x1 + x2"), p("x1^2 + 2*x1*x2 + x2^2"));
        let q = p("3*t*x1 - x2^3 + 0.5");
        assert_eq!(&q * &p("1"), q);
        assert_eq!(&p("x1 - 1") * &p("x1 + 1"), p("x1^2 - 1"));
        let a = p("x1 + t");
        let b = p("x1 - 2*x2 + 1");
        assert_eq!((&a * &b).degree(), a.degree() + b.degree());
    }

    #[test]
    fn derivatives() {
        assert_eq!(p("x1^2*x2").differentiate("x1").unwrap(), p("2*x1*x2"));
        assert!(p("x1^2").differentiate("t").unwrap().is_zero());
        assert_eq!(
            p("0.5*(1 + x1^2 + x2^2)").differentiate("x2").unwrap(),
            p("x2")
        );
        assert!(matches!(
            p("x1").differentiate("y"),
            Err(Error::UnknownVariable(_))
        ));
    }

    #[test]
    fn evaluation() {
        let v = p("0.5*(1 + x1^2 + x2^2)");
        let val = v
            .evaluate(&[("t", 0.0), ("x1", 0.0), ("x2", 1.0)])
            .unwrap();
        assert_eq!(val, 1.0);
        let m = p("x1^2*x2");
        assert_eq!(m.evaluate(&[("t", 9.0), ("x1", 2.0), ("x2", 3.0)]).unwrap(), 12.0);
        let x = var_list(&["x"]);
        let num = parse("4*x", &x).unwrap();
        assert_eq!(num.evaluate(&[("x", 0.5)]).unwrap(), 2.0);
        assert!(matches!(
            m.evaluate(&[("x1", 1.0)]),
            Err(Error::MissingAssignment(_))
        ));
    }

    #[test]
    fn mismatched_variables_are_reported() {
        let a = parse("y", &var_list(&["y"])).unwrap();
        let b = parse("x", &var_list(&["x"])).unwrap();
        match a.add(&b) {
            Err(Error::VariableMismatch(v)) => assert_eq!(v, "y"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn embedding_into_larger_list() {
        let a = parse("x1^2", &var_list(&["x1", "x2"])).unwrap();
        let b = p("t");
        let s = a.add(&b).unwrap();
        assert_eq!(s.vars(), &vars()[..]);
        assert_eq!(s, p("x1^2 + t"));
    }

    #[test]
    fn canonical_text() {
        assert_eq!(p("-1.5*t + 3*x1^2*x2").to_string(), "3*x1^2*x2 - 1.5*t");
        assert_eq!(p("x2 + x1 + t + 1").to_string(), "t + x1 + x2 + 1");
        assert_eq!(p("0").to_string(), "0");
        assert_eq!(p("-x1").to_string(), "-x1");
        assert_eq!(p("1e-7*x1").to_string(), "1e-7*x1");
    }

    #[test]
    fn substitution_and_scaling() {
        let q = p("t^2*x1 + t + x2");
        assert_eq!(q.substitute_value("t", 2.0).unwrap(), p("4*x1 + 2 + x2"));
        assert_eq!(q.scale_vars(&[1.0, -1.0, 2.0]), p("-t^2*x1 + t + 2*x2"));
        let c = q
            .compose(&[p("t"), p("x1 + x2"), p("1")])
            .unwrap();
        assert_eq!(c, p("t^2*x1 + t^2*x2 + t + 1"));
    }

    #[test]
    fn pruning_drops_small_terms() {
        let q = p("1e-12*x1 + x2");
        assert_eq!(q.prune(1e-9), p("x2"));
        assert_eq!(q.prune(0.0), q);
    }
}
