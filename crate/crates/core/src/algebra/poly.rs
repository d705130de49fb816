//! Polynomials over ℚ(θ) in a fixed ring of jet variables, stored
//! fraction-free with coefficients in ℤ[θ] and terms sorted by a block
//! monomial order.

use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed};

use super::coeff::ParamPoly;
use super::jet::{JetPoly, Monomial, Var, VarNames};
use super::rational::Rational;

/// Order used inside one block of variables.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum BlockOrder {
    Lex,
    DegRevLex,
}

/// Block (elimination) order: variables are listed from largest to smallest
/// and split into consecutive blocks; a monomial with a larger exponent
/// pattern in an earlier block is always larger.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MonomialOrder {
    blocks: Vec<(usize, BlockOrder)>,
}

impl MonomialOrder {
    /// Blocks given as `(size, order)` from the largest block down.
    pub fn blocks(blocks: Vec<(usize, BlockOrder)>) -> Self {
        MonomialOrder { blocks: blocks.into_iter().filter(|b| b.0 > 0).collect() }
    }

    pub fn lex(nvars: usize) -> Self {
        Self::blocks(vec![(nvars, BlockOrder::Lex)])
    }

    pub fn degrevlex(nvars: usize) -> Self {
        Self::blocks(vec![(nvars, BlockOrder::DegRevLex)])
    }

    pub fn nvars(&self) -> usize {
        self.blocks.iter().map(|b| b.0).sum()
    }

    pub fn block_sizes(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.0).collect()
    }

    /// Index of the block containing variable `k`.
    pub fn block_of(&self, k: usize) -> usize {
        let mut start = 0;
        for (b, &(len, _)) in self.blocks.iter().enumerate() {
            if k < start + len {
                return b;
            }
            start += len;
        }
        panic!("variable index {k} outside the order")
    }

    pub fn cmp(&self, a: &[u16], b: &[u16]) -> Ordering {
        let mut start = 0;
        for &(len, kind) in &self.blocks {
            let (x, y) = (&a[start..start + len], &b[start..start + len]);
            let ord = match kind {
                BlockOrder::Lex => x.cmp(y),
                BlockOrder::DegRevLex => {
                    let dx: u32 = x.iter().map(|&e| e as u32).sum();
                    let dy: u32 = y.iter().map(|&e| e as u32).sum();
                    dx.cmp(&dy).then_with(|| {
                        for (ex, ey) in x.iter().zip(y).rev() {
                            if ex != ey {
                                return ey.cmp(ex);
                            }
                        }
                        Ordering::Equal
                    })
                }
            };
            if ord != Ordering::Equal {
                return ord;
            }
            start += len;
        }
        Ordering::Equal
    }
}

/// Polynomial ring ℚ(θ)[v₁, …, vₖ] with a monomial order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PolyRing {
    pub param_names: Vec<String>,
    pub vars: Vec<Var>,
    pub var_names: Vec<String>,
    pub order: MonomialOrder,
}

impl PolyRing {
    pub fn new(param_names: Vec<String>, vars: Vec<(Var, String)>, order: MonomialOrder) -> Arc<Self> {
        assert_eq!(vars.len(), order.nvars(), "order does not cover the ring variables");
        let (vars, var_names) = vars.into_iter().unzip();
        Arc::new(PolyRing { param_names, vars, var_names, order })
    }

    pub fn nparams(&self) -> usize {
        self.param_names.len()
    }

    pub fn nvars(&self) -> usize {
        self.vars.len()
    }

    pub fn var_index(&self, v: Var) -> Option<usize> {
        self.vars.iter().position(|&w| w == v)
    }

    /// Imports a rational polynomial, clearing denominators. Returns `None`
    /// when it uses a variable outside the ring.
    pub fn from_jet(self: &Arc<Self>, p: &JetPoly) -> Option<Poly> {
        let den = p.terms().fold(BigInt::one(), |acc, (_, c)| acc.lcm(c.denom()));
        let mut terms: Vec<(Vec<u16>, ParamPoly)> = Vec::new();
        for (m, c) in p.terms() {
            let mut exps = vec![0u16; self.nvars()];
            let mut pexps = vec![0u16; self.nparams()];
            for &(v, e) in m.factors() {
                match v {
                    Var::Param(k) if k < self.nparams() => pexps[k] += e as u16,
                    Var::Param(_) => return None,
                    _ => exps[self.var_index(v)?] += e as u16,
                }
            }
            let coeff = c.numer() * (&den / c.denom());
            match terms.iter_mut().find(|(e, _)| *e == exps) {
                Some((_, pc)) => pc.add_term(pexps, coeff),
                None => {
                    let mut pc = ParamPoly::zero(self.nparams());
                    pc.add_term(pexps, coeff);
                    terms.push((exps, pc));
                }
            }
        }
        Some(Poly::from_unsorted(self.clone(), terms))
    }
}

/// Polynomial in a [`PolyRing`], terms in strictly descending order with
/// nonzero ℤ[θ] coefficients.
#[derive(Clone)]
pub struct Poly {
    ring: Arc<PolyRing>,
    terms: Vec<(Vec<u16>, ParamPoly)>,
}

impl PartialEq for Poly {
    fn eq(&self, other: &Self) -> bool {
        self.terms == other.terms && same_ring(&self.ring, &other.ring)
    }
}

impl Eq for Poly {}

pub(crate) fn same_ring(a: &Arc<PolyRing>, b: &Arc<PolyRing>) -> bool {
    Arc::ptr_eq(a, b) || a == b
}

impl Poly {
    pub fn zero(ring: Arc<PolyRing>) -> Self {
        Poly { ring, terms: Vec::new() }
    }

    pub fn from_unsorted(ring: Arc<PolyRing>, mut terms: Vec<(Vec<u16>, ParamPoly)>) -> Self {
        terms.retain(|(_, c)| !c.is_zero());
        terms.sort_by(|a, b| ring.order.cmp(&b.0, &a.0));
        terms.dedup_by(|b, a| {
            if a.0 == b.0 {
                a.1 = a.1.add(&b.1);
                true
            } else {
                false
            }
        });
        terms.retain(|(_, c)| !c.is_zero());
        Poly { ring, terms }
    }

    pub fn ring(&self) -> &Arc<PolyRing> {
        &self.ring
    }

    pub fn terms(&self) -> &[(Vec<u16>, ParamPoly)] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn leading_monomial(&self) -> Option<&[u16]> {
        self.terms.first().map(|t| t.0.as_slice())
    }

    pub fn leading_coefficient(&self) -> Option<&ParamPoly> {
        self.terms.first().map(|t| &t.1)
    }

    /// True when the polynomial is a nonzero element of ℚ(θ).
    pub fn is_constant(&self) -> bool {
        self.terms.len() == 1 && self.terms[0].0.iter().all(|&e| e == 0)
    }

    pub fn total_degree(&self) -> u32 {
        self.terms.iter().map(|(e, _)| exp_degree(e)).max().unwrap_or(0)
    }

    pub fn degree_in(&self, k: usize) -> u16 {
        self.terms.iter().map(|(e, _)| e[k]).max().unwrap_or(0)
    }

    /// Variables (by ring index) occurring in the polynomial.
    pub fn support(&self) -> Vec<usize> {
        (0..self.ring.nvars()).filter(|&k| self.terms.iter().any(|(e, _)| e[k] > 0)).collect()
    }

    pub fn neg(&self) -> Poly {
        Poly { ring: self.ring.clone(), terms: self.terms.iter().map(|(e, c)| (e.clone(), c.neg())).collect() }
    }

    pub fn add(&self, other: &Poly) -> Poly {
        self.combine(&ParamPoly::one(self.ring.nparams()), other, &[], &ParamPoly::one(self.ring.nparams()))
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        self.combine(&ParamPoly::one(self.ring.nparams()), other, &[], &ParamPoly::one(self.ring.nparams()).neg())
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut terms = Vec::with_capacity(self.len() * other.len());
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                terms.push((exp_mul(ea, eb), ca.mul(cb)));
            }
        }
        Poly::from_unsorted(self.ring.clone(), terms)
    }

    pub fn mul_coeff(&self, c: &ParamPoly) -> Poly {
        if c.is_zero() {
            return Poly::zero(self.ring.clone());
        }
        Poly { ring: self.ring.clone(), terms: self.terms.iter().map(|(e, k)| (e.clone(), k.mul(c))).collect() }
    }

    /// `a·self + b·mono·other`, merged in order.
    pub fn combine(&self, a: &ParamPoly, other: &Poly, mono: &[u16], b: &ParamPoly) -> Poly {
        let shift = |e: &Vec<u16>| if mono.is_empty() { e.clone() } else { exp_mul(e, mono) };
        let a_one = a.is_unit() && a.as_constant().is_some_and(|c| c.is_one());
        let mut out = Vec::with_capacity(self.len() + other.len());
        let (mut i, mut j) = (0, 0);
        let mut pending: Option<(Vec<u16>, ParamPoly)> = None;
        loop {
            if pending.is_none() && j < other.terms.len() {
                let (e, c) = &other.terms[j];
                pending = Some((shift(e), c.mul(b)));
            }
            match (self.terms.get(i), &pending) {
                (None, None) => break,
                (Some((e, c)), None) => {
                    out.push((e.clone(), if a_one { c.clone() } else { c.mul(a) }));
                    i += 1;
                }
                (None, Some(_)) => {
                    out.push(pending.take().unwrap());
                    j += 1;
                }
                (Some((e, c)), Some((f, _))) => match self.ring.order.cmp(e, f) {
                    Ordering::Greater => {
                        out.push((e.clone(), if a_one { c.clone() } else { c.mul(a) }));
                        i += 1;
                    }
                    Ordering::Less => {
                        out.push(pending.take().unwrap());
                        j += 1;
                    }
                    Ordering::Equal => {
                        let (f, d) = pending.take().unwrap();
                        let s = if a_one { c.add(&d) } else { c.mul(a).add(&d) };
                        if !s.is_zero() {
                            out.push((f, s));
                        }
                        i += 1;
                        j += 1;
                    }
                },
            }
        }
        Poly { ring: self.ring.clone(), terms: out }
    }

    /// Gcd in ℤ[θ] of all coefficients (zero for the zero polynomial).
    pub fn content(&self) -> ParamPoly {
        // cheap coefficients first so the gcd collapses early
        let mut coeffs: Vec<&ParamPoly> = self.terms.iter().map(|t| &t.1).collect();
        coeffs.sort_by_key(|c| (c.len(), c.total_degree()));
        ParamPoly::gcd_all(coeffs, self.ring.nparams())
    }

    /// Divides out the content and makes the leading integer coefficient of
    /// the leading coefficient positive.
    pub fn primitive(&self) -> Poly {
        if self.is_zero() {
            return self.clone();
        }
        let c = self.content();
        let mut c = if c.is_zero() { ParamPoly::one(self.ring.nparams()) } else { c };
        let lead_negative = self.terms[0].1.leading().is_some_and(|(_, k)| k.is_negative());
        let c_negative = c.leading().is_some_and(|(_, k)| k.is_negative());
        if lead_negative != c_negative {
            c = c.neg();
        }
        if c.as_constant().is_some_and(|k| k.is_one()) {
            return self.clone();
        }
        Poly {
            ring: self.ring.clone(),
            terms: self
                .terms
                .iter()
                .map(|(e, k)| (e.clone(), k.exact_div(&c).expect("content divides every coefficient")))
                .collect(),
        }
    }

    /// Exports to a rational polynomial in jet variables and parameters.
    pub fn to_jet(&self) -> JetPoly {
        let mut out = JetPoly::zero();
        for (e, c) in &self.terms {
            let ring_part: Vec<(Var, u32)> =
                e.iter().enumerate().filter(|(_, &k)| k > 0).map(|(i, &k)| (self.ring.vars[i], k as u32)).collect();
            for (pe, k) in c.terms() {
                let factors = ring_part.iter().copied().chain(
                    pe.iter().enumerate().filter(|(_, &k)| k > 0).map(|(i, &k)| (Var::Param(i), k as u32)),
                );
                out.add_term(Monomial::from_factors(factors), Rational::from_integer(k.clone()));
            }
        }
        out
    }

    /// Coefficients of powers of ring variable `k`, each as a polynomial
    /// without that variable.
    pub fn coefficients_in(&self, k: usize) -> Vec<Poly> {
        let deg = self.degree_in(k) as usize;
        let mut parts: Vec<Vec<(Vec<u16>, ParamPoly)>> = vec![Vec::new(); deg + 1];
        for (e, c) in &self.terms {
            let mut e2 = e.clone();
            e2[k] = 0;
            parts[e[k] as usize].push((e2, c.clone()));
        }
        parts.into_iter().map(|t| Poly::from_unsorted(self.ring.clone(), t)).collect()
    }

    pub fn display(&self) -> DisplayPoly<'_> {
        DisplayPoly(self)
    }
}

impl fmt::Debug for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Poly({})", self.display())
    }
}

/// Prints in the model expression syntax, terms in ring order with
/// parenthesized parameter coefficients.
pub struct DisplayPoly<'a>(&'a Poly);

impl fmt::Display for DisplayPoly<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = self.0;
        if p.is_zero() {
            return f.write_str("0");
        }
        for (k, (e, c)) in p.terms.iter().enumerate() {
            let mono: Vec<String> = e
                .iter()
                .enumerate()
                .filter(|(_, &x)| x > 0)
                .map(|(i, &x)| {
                    let name = &p.ring.var_names[i];
                    if x == 1 { name.clone() } else { format!("{name}^{x}") }
                })
                .collect();
            let mut coeff = String::new();
            let single = c.len() == 1;
            let negative = single && c.leading().is_some_and(|(_, v)| v.is_negative());
            let shown = if negative { c.neg() } else { c.clone() };
            shown.write_named(&mut coeff, &p.ring.param_names)?;
            if k == 0 {
                if negative {
                    f.write_str("-")?;
                }
            } else {
                f.write_str(if negative { " - " } else { " + " })?;
            }
            let body = if !single && !mono.is_empty() { format!("({coeff})") } else { coeff };
            if mono.is_empty() {
                f.write_str(&body)?;
            } else if body == "1" {
                f.write_str(&mono.join("*"))?;
            } else {
                write!(f, "{body}*{}", mono.join("*"))?;
            }
        }
        Ok(())
    }
}

impl VarNames for PolyRing {
    fn var_name(&self, v: Var) -> String {
        match v {
            Var::Param(k) => self.param_names[k].clone(),
            _ => self.var_index(v).map_or_else(|| format!("{v:?}"), |i| self.var_names[i].clone()),
        }
    }
}

pub(crate) fn exp_degree(e: &[u16]) -> u32 {
    e.iter().map(|&k| k as u32).sum()
}

pub(crate) fn exp_mul(a: &[u16], b: &[u16]) -> Vec<u16> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub(crate) fn exp_divides(a: &[u16], b: &[u16]) -> bool {
    a.iter().zip(b).all(|(x, y)| x <= y)
}

pub(crate) fn exp_div(b: &[u16], a: &[u16]) -> Vec<u16> {
    b.iter().zip(a).map(|(y, x)| y - x).collect()
}

pub(crate) fn exp_lcm(a: &[u16], b: &[u16]) -> Vec<u16> {
    a.iter().zip(b).map(|(x, y)| *x.max(y)).collect()
}

pub(crate) fn exp_disjoint(a: &[u16], b: &[u16]) -> bool {
    a.iter().zip(b).all(|(x, y)| *x == 0 || *y == 0)
}
