//! Sparse multivariate polynomials over the rationals in jet variables and
//! parameter symbols.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use super::rational::{self, Rational};

/// A ring variable: a parameter symbol or the `order`-th time derivative of a
/// state, output or input.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Var {
    Param(usize),
    State { index: usize, order: usize },
    Output { index: usize, order: usize },
    Input { index: usize, order: usize },
}

impl Var {
    pub fn state(index: usize, order: usize) -> Self {
        Var::State { index, order }
    }
    pub fn output(index: usize, order: usize) -> Self {
        Var::Output { index, order }
    }
    pub fn input(index: usize, order: usize) -> Self {
        Var::Input { index, order }
    }

    pub fn is_param(self) -> bool {
        matches!(self, Var::Param(_))
    }

    /// Derivative order; parameters have order 0.
    pub fn order(self) -> usize {
        match self {
            Var::Param(_) => 0,
            Var::State { order, .. } | Var::Output { order, .. } | Var::Input { order, .. } => order,
        }
    }

    /// `D(v)`: the next jet, or `None` for a (constant) parameter.
    pub fn prolong(self) -> Option<Var> {
        match self {
            Var::Param(_) => None,
            Var::State { index, order } => Some(Var::State { index, order: order + 1 }),
            Var::Output { index, order } => Some(Var::Output { index, order: order + 1 }),
            Var::Input { index, order } => Some(Var::Input { index, order: order + 1 }),
        }
    }
}

/// Resolves variables to printable names.
pub trait VarNames {
    fn var_name(&self, v: Var) -> String;
}

/// Prefixes a base name with its derivative order, `d2y1` for `y1''`.
pub fn jet_name(base: &str, order: usize) -> String {
    if order == 0 {
        base.to_string()
    } else {
        format!("d{order}{base}")
    }
}

/// Power product of variables, sorted by variable with no zero exponents.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Monomial(Vec<(Var, u32)>);

impl Monomial {
    pub fn one() -> Self {
        Monomial(Vec::new())
    }

    pub fn var(v: Var) -> Self {
        Monomial(vec![(v, 1)])
    }

    pub fn from_factors(factors: impl IntoIterator<Item = (Var, u32)>) -> Self {
        let mut map: BTreeMap<Var, u32> = BTreeMap::new();
        for (v, e) in factors {
            if e > 0 {
                *map.entry(v).or_default() += e;
            }
        }
        Monomial(map.into_iter().collect())
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn factors(&self) -> &[(Var, u32)] {
        &self.0
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().map(|(_, e)| e).sum()
    }

    pub fn degree_in(&self, v: Var) -> u32 {
        self.0.iter().find(|(w, _)| *w == v).map_or(0, |(_, e)| *e)
    }

    /// Splits off the power of `v`.
    pub fn split(&self, v: Var) -> (u32, Monomial) {
        let mut rest = Vec::with_capacity(self.0.len());
        let mut e = 0;
        for &(w, k) in &self.0 {
            if w == v {
                e = k;
            } else {
                rest.push((w, k));
            }
        }
        (e, Monomial(rest))
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let mut out = Vec::with_capacity(self.0.len() + other.0.len());
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() && j < other.0.len() {
            let (a, b) = (self.0[i], other.0[j]);
            match a.0.cmp(&b.0) {
                std::cmp::Ordering::Less => {
                    out.push(a);
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    out.push(b);
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    out.push((a.0, a.1 + b.1));
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&self.0[i..]);
        out.extend_from_slice(&other.0[j..]);
        Monomial(out)
    }

    fn write(&self, f: &mut fmt::Formatter<'_>, names: &dyn VarNames) -> fmt::Result {
        for (k, (v, e)) in self.0.iter().enumerate() {
            if k > 0 {
                f.write_str("*")?;
            }
            f.write_str(&names.var_name(*v))?;
            if *e > 1 {
                write!(f, "^{e}")?;
            }
        }
        Ok(())
    }
}

/// Exact polynomial with rational coefficients; parameters are ordinary
/// variables here.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct JetPoly {
    terms: BTreeMap<Monomial, Rational>,
}

impl JetPoly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::constant(Rational::one())
    }

    pub fn constant(c: Rational) -> Self {
        let mut p = Self::zero();
        p.add_term(Monomial::one(), c);
        p
    }

    pub fn var(v: Var) -> Self {
        let mut p = Self::zero();
        p.add_term(Monomial::var(v), Rational::one());
        p
    }

    pub fn from_terms(terms: impl IntoIterator<Item = (Monomial, Rational)>) -> Self {
        let mut p = Self::zero();
        for (m, c) in terms {
            p.add_term(m, c);
        }
        p
    }

    pub fn add_term(&mut self, m: Monomial, c: Rational) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Rational)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// `Some(c)` when the polynomial is the constant `c` (including zero).
    pub fn as_constant(&self) -> Option<Rational> {
        match self.terms.len() {
            0 => Some(Rational::zero()),
            1 => {
                let (m, c) = self.terms.iter().next().unwrap();
                m.is_one().then(|| c.clone())
            }
            _ => None,
        }
    }

    /// `Some(v)` when the polynomial is exactly the variable `v`.
    pub fn as_var(&self) -> Option<Var> {
        if self.terms.len() != 1 {
            return None;
        }
        let (m, c) = self.terms.iter().next().unwrap();
        match m.factors() {
            [(v, 1)] if c.is_one() => Some(*v),
            _ => None,
        }
    }

    pub fn vars(&self) -> BTreeSet<Var> {
        self.terms.keys().flat_map(|m| m.factors().iter().map(|(v, _)| *v)).collect()
    }

    pub fn total_degree(&self) -> u32 {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    pub fn degree_in(&self, v: Var) -> u32 {
        self.terms.keys().map(|m| m.degree_in(v)).max().unwrap_or(0)
    }

    /// Coefficients `c_k` with `self = Σ c_k v^k`, indexed by `k`.
    pub fn coefficients_in(&self, v: Var) -> Vec<JetPoly> {
        let mut out = vec![JetPoly::zero(); self.degree_in(v) as usize + 1];
        for (m, c) in &self.terms {
            let (e, rest) = m.split(v);
            out[e as usize].add_term(rest, c.clone());
        }
        out
    }

    pub fn scale(&self, c: &Rational) -> JetPoly {
        if c.is_zero() {
            return JetPoly::zero();
        }
        JetPoly { terms: self.terms.iter().map(|(m, k)| (m.clone(), k * c)).collect() }
    }

    pub fn pow(&self, e: u32) -> JetPoly {
        let mut acc = JetPoly::one();
        for _ in 0..e {
            acc = &acc * self;
        }
        acc
    }

    /// Partial derivative with respect to `v`.
    pub fn partial(&self, v: Var) -> JetPoly {
        let mut out = JetPoly::zero();
        for (m, c) in &self.terms {
            let (e, rest) = m.split(v);
            if e > 0 {
                let m2 = rest.mul(&Monomial::from_factors([(v, e - 1)]));
                out.add_term(m2, c * rational::int(e as i64));
            }
        }
        out
    }

    /// Replaces every occurrence of `v` by `value`.
    pub fn substitute(&self, v: Var, value: &JetPoly) -> JetPoly {
        let mut powers: Vec<JetPoly> = vec![JetPoly::one()];
        let mut out = JetPoly::zero();
        for (m, c) in &self.terms {
            let (e, rest) = m.split(v);
            while powers.len() <= e as usize {
                let next = powers.last().unwrap() * value;
                powers.push(next);
            }
            let term = JetPoly::from_terms([(rest, c.clone())]);
            out = &out + &(&term * &powers[e as usize]);
        }
        out
    }

    /// Simultaneous substitution of several variables.
    pub fn substitute_all(&self, map: &BTreeMap<Var, JetPoly>) -> JetPoly {
        let mut out = JetPoly::zero();
        for (m, c) in &self.terms {
            let mut term = JetPoly::constant(c.clone());
            let mut kept = Vec::new();
            for &(v, e) in m.factors() {
                match map.get(&v) {
                    Some(value) => term = &term * &value.pow(e),
                    None => kept.push((v, e)),
                }
            }
            term = &term * &JetPoly::from_terms([(Monomial::from_factors(kept), Rational::one())]);
            out = &out + &term;
        }
        out
    }

    /// Renames variables through `f`; merging is handled.
    pub fn map_vars(&self, f: impl Fn(Var) -> Var) -> JetPoly {
        let mut out = JetPoly::zero();
        for (m, c) in &self.terms {
            let m2 = Monomial::from_factors(m.factors().iter().map(|&(v, e)| (f(v), e)));
            out.add_term(m2, c.clone());
        }
        out
    }

    pub fn evaluate(&self, value: impl Fn(Var) -> f64) -> f64 {
        self.terms
            .iter()
            .map(|(m, c)| {
                m.factors().iter().fold(rational::to_f64(c), |acc, &(v, e)| acc * value(v).powi(e as i32))
            })
            .sum()
    }

    /// Largest absolute coefficient.
    pub fn max_abs_coefficient(&self) -> Rational {
        self.terms.values().map(|c| c.abs()).max().unwrap_or_else(Rational::zero)
    }

    pub fn display<'a>(&'a self, names: &'a dyn VarNames) -> DisplayJet<'a> {
        DisplayJet { poly: self, names }
    }

    /// Terms in printing order: descending total degree, then descending
    /// monomial.
    fn print_order(&self) -> Vec<(&Monomial, &Rational)> {
        let mut terms: Vec<_> = self.terms.iter().collect();
        terms.sort_by(|a, b| b.0.degree().cmp(&a.0.degree()).then_with(|| b.0.cmp(a.0)));
        terms
    }
}

pub struct DisplayJet<'a> {
    poly: &'a JetPoly,
    names: &'a dyn VarNames,
}

impl fmt::Display for DisplayJet<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.poly.is_zero() {
            return f.write_str("0");
        }
        for (k, (m, c)) in self.poly.print_order().into_iter().enumerate() {
            let negative = c.is_negative();
            match (k, negative) {
                (0, true) => f.write_str("-")?,
                (0, false) => {}
                (_, true) => f.write_str(" - ")?,
                (_, false) => f.write_str(" + ")?,
            }
            let abs = c.abs();
            if m.is_one() {
                f.write_str(&rational::format_abs(&abs))?;
            } else {
                if !abs.is_one() {
                    write!(f, "{}*", rational::format_abs(&abs))?;
                }
                m.write(f, self.names)?;
            }
        }
        Ok(())
    }
}

impl Add for &JetPoly {
    type Output = JetPoly;
    fn add(self, rhs: &JetPoly) -> JetPoly {
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }
}

impl Sub for &JetPoly {
    type Output = JetPoly;
    fn sub(self, rhs: &JetPoly) -> JetPoly {
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(m.clone(), -c.clone());
        }
        out
    }
}

impl Mul for &JetPoly {
    type Output = JetPoly;
    fn mul(self, rhs: &JetPoly) -> JetPoly {
        let mut out = JetPoly::zero();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &rhs.terms {
                out.add_term(ma.mul(mb), ca * cb);
            }
        }
        out
    }
}

impl Neg for &JetPoly {
    type Output = JetPoly;
    fn neg(self) -> JetPoly {
        JetPoly { terms: self.terms.iter().map(|(m, c)| (m.clone(), -c.clone())).collect() }
    }
}

macro_rules! forward_owned {
    ($tr:ident, $method:ident) => {
        impl $tr for JetPoly {
            type Output = JetPoly;
            fn $method(self, rhs: JetPoly) -> JetPoly {
                (&self).$method(&rhs)
            }
        }
        impl $tr<&JetPoly> for JetPoly {
            type Output = JetPoly;
            fn $method(self, rhs: &JetPoly) -> JetPoly {
                (&self).$method(rhs)
            }
        }
        impl $tr<JetPoly> for &JetPoly {
            type Output = JetPoly;
            fn $method(self, rhs: JetPoly) -> JetPoly {
                self.$method(&rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl Neg for JetPoly {
    type Output = JetPoly;
    fn neg(self) -> JetPoly {
        -&self
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::rational::{int, ratio};

    struct Plain;
    impl VarNames for Plain {
        fn var_name(&self, v: Var) -> String {
            match v {
                Var::Param(k) => format!("p{k}"),
                Var::State { index, order } => jet_name(&format!("x{}", index + 1), order),
                Var::Output { index, order } => jet_name(&format!("y{}", index + 1), order),
                Var::Input { index, order } => jet_name(&format!("u{}", index + 1), order),
            }
        }
    }

    fn x(i: usize) -> JetPoly {
        JetPoly::var(Var::state(i, 0))
    }

    #[test]
    fn cancellation_removes_terms() {
        let p = &x(0) + &x(1);
        let q = &p - &x(1);
        assert_eq!(q, x(0));
        assert!((&q - &x(0)).is_zero());
    }

    #[test]
    fn coefficients_and_substitution() {
        // p = 3 x0^2 x1 - x1 + 1/2
        let p = &(&x(0).pow(2) * &x(1)).scale(&int(3)) - &x(1);
        let p = &p + &JetPoly::constant(ratio(1, 2));
        let cs = p.coefficients_in(Var::state(0, 0));
        assert_eq!(cs.len(), 3);
        assert_eq!(cs[2], x(1).scale(&int(3)));
        assert!(cs[1].is_zero());
        let q = p.substitute(Var::state(1, 0), &JetPoly::constant(int(2)));
        assert_eq!(q, &x(0).pow(2).scale(&int(6)) - &JetPoly::constant(ratio(3, 2)));
    }

    #[test]
    fn printing() {
        let p = &(&x(0) * &x(2)).scale(&ratio(-13, 50)) + &JetPoly::var(Var::output(0, 1));
        assert_eq!(p.display(&Plain).to_string(), "-0.26*x1*x3 + d1y1");
        assert_eq!(JetPoly::zero().display(&Plain).to_string(), "0");
    }
}
