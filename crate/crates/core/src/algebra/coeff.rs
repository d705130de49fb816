//! Integer polynomials in the parameter symbols θ.
//!
//! Gröbner computations over ℚ(θ) are carried out fraction-free: every
//! coefficient lives in ℤ[θ] and polynomials are kept primitive, so the only
//! field operation ever needed is an exact gcd in ℤ[θ].

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

/// Exponent vector over the parameters.
pub type Exps = Vec<u16>;

/// Sparse polynomial in `nvars` parameters with integer coefficients.
///
/// Terms are keyed by exponent vectors in lexicographic order, so the last
/// entry is the lex-leading term.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ParamPoly {
    nvars: usize,
    terms: BTreeMap<Exps, BigInt>,
}

impl ParamPoly {
    pub fn zero(nvars: usize) -> Self {
        ParamPoly { nvars, terms: BTreeMap::new() }
    }

    pub fn constant(nvars: usize, c: BigInt) -> Self {
        let mut p = Self::zero(nvars);
        p.add_term(vec![0; nvars], c);
        p
    }

    pub fn one(nvars: usize) -> Self {
        Self::constant(nvars, BigInt::one())
    }

    pub fn var(nvars: usize, k: usize) -> Self {
        let mut e = vec![0; nvars];
        e[k] = 1;
        let mut p = Self::zero(nvars);
        p.add_term(e, BigInt::one());
        p
    }

    pub fn from_terms(nvars: usize, terms: impl IntoIterator<Item = (Exps, BigInt)>) -> Self {
        let mut p = Self::zero(nvars);
        for (e, c) in terms {
            debug_assert_eq!(e.len(), nvars);
            p.add_term(e, c);
        }
        p
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn add_term(&mut self, e: Exps, c: BigInt) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(e) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (&Exps, &BigInt)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// The integer value when the polynomial is constant.
    pub fn as_constant(&self) -> Option<BigInt> {
        match self.terms.len() {
            0 => Some(BigInt::zero()),
            1 => {
                let (e, c) = self.terms.iter().next().unwrap();
                e.iter().all(|&k| k == 0).then(|| c.clone())
            }
            _ => None,
        }
    }

    pub fn is_unit(&self) -> bool {
        self.as_constant().is_some_and(|c| c.abs().is_one())
    }

    pub fn leading(&self) -> Option<(&Exps, &BigInt)> {
        self.terms.iter().next_back()
    }

    pub fn total_degree(&self) -> u32 {
        self.terms.keys().map(|e| e.iter().map(|&k| k as u32).sum()).max().unwrap_or(0)
    }

    pub fn neg(&self) -> ParamPoly {
        ParamPoly { nvars: self.nvars, terms: self.terms.iter().map(|(e, c)| (e.clone(), -c)).collect() }
    }

    pub fn add(&self, other: &ParamPoly) -> ParamPoly {
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(e.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &ParamPoly) -> ParamPoly {
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(e.clone(), -c);
        }
        out
    }

    pub fn mul(&self, other: &ParamPoly) -> ParamPoly {
        if let Some(c) = other.as_constant() {
            return self.mul_int(&c);
        }
        if let Some(c) = self.as_constant() {
            return other.mul_int(&c);
        }
        let mut out = ParamPoly::zero(self.nvars);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                let e: Exps = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                out.add_term(e, ca * cb);
            }
        }
        out
    }

    pub fn mul_int(&self, c: &BigInt) -> ParamPoly {
        if c.is_zero() {
            return ParamPoly::zero(self.nvars);
        }
        if c.is_one() {
            return self.clone();
        }
        ParamPoly { nvars: self.nvars, terms: self.terms.iter().map(|(e, k)| (e.clone(), k * c)).collect() }
    }

    fn mul_term(&self, e: &[u16], c: &BigInt) -> ParamPoly {
        ParamPoly {
            nvars: self.nvars,
            terms: self
                .terms
                .iter()
                .map(|(ea, ca)| (ea.iter().zip(e).map(|(a, b)| a + b).collect(), ca * c))
                .collect(),
        }
    }

    /// Exact quotient, or `None` when `other` does not divide `self`.
    pub fn exact_div(&self, other: &ParamPoly) -> Option<ParamPoly> {
        assert!(!other.is_zero(), "division by zero polynomial");
        if let Some(c) = other.as_constant() {
            let mut out = ParamPoly::zero(self.nvars);
            for (e, k) in &self.terms {
                let (q, r) = k.div_rem(&c);
                if !r.is_zero() {
                    return None;
                }
                out.terms.insert(e.clone(), q);
            }
            return Some(out);
        }
        let (le, lc) = other.leading().map(|(e, c)| (e.clone(), c.clone()))?;
        let mut rem = self.clone();
        let mut quot = ParamPoly::zero(self.nvars);
        while let Some((e, c)) = rem.leading().map(|(e, c)| (e.clone(), c.clone())) {
            if e.iter().zip(&le).any(|(a, b)| a < b) {
                return None;
            }
            let (q, r) = c.div_rem(&lc);
            if !r.is_zero() {
                return None;
            }
            let qe: Exps = e.iter().zip(&le).map(|(a, b)| a - b).collect();
            rem = rem.sub(&other.mul_term(&qe, &q));
            quot.add_term(qe, q);
        }
        Some(quot)
    }

    /// Gcd of the integer coefficients (non-negative).
    pub fn int_content(&self) -> BigInt {
        self.terms.values().fold(BigInt::zero(), |g, c| g.gcd(c))
    }

    fn degree_in(&self, v: usize) -> u16 {
        self.terms.keys().map(|e| e[v]).max().unwrap_or(0)
    }

    fn involves(&self, v: usize) -> bool {
        self.terms.keys().any(|e| e[v] > 0)
    }

    /// Coefficient of `θ_v^d`, as a polynomial not involving `θ_v`.
    fn coeff_in(&self, v: usize, d: u16) -> ParamPoly {
        let mut out = ParamPoly::zero(self.nvars);
        for (e, c) in &self.terms {
            if e[v] == d {
                let mut e2 = e.clone();
                e2[v] = 0;
                out.terms.insert(e2, c.clone());
            }
        }
        out
    }

    fn content_in(&self, v: usize) -> ParamPoly {
        let mut g = ParamPoly::zero(self.nvars);
        for d in 0..=self.degree_in(v) {
            let c = self.coeff_in(v, d);
            if !c.is_zero() {
                g = ParamPoly::gcd(&g, &c);
                if g.is_unit() {
                    break;
                }
            }
        }
        g
    }

    fn primitive_in(&self, v: usize) -> ParamPoly {
        let c = self.content_in(v);
        self.exact_div(&c).expect("content divides")
    }

    fn pseudo_rem(&self, b: &ParamPoly, v: usize) -> ParamPoly {
        let db = b.degree_in(v);
        let lcb = b.coeff_in(v, db);
        let mut r = self.clone();
        while !r.is_zero() && r.involves(v) && r.degree_in(v) >= db {
            let dr = r.degree_in(v);
            let lcr = r.coeff_in(v, dr);
            let mut shift = vec![0u16; self.nvars];
            shift[v] = dr - db;
            r = lcb.mul(&r).sub(&lcr.mul(&b.mul_term(&shift, &BigInt::one())));
        }
        r
    }

    /// Sign normalization: the lex-leading integer coefficient is positive.
    pub fn normalize_sign(self) -> ParamPoly {
        match self.leading() {
            Some((_, c)) if c.is_negative() => self.neg(),
            _ => self,
        }
    }

    /// Greatest common divisor in ℤ[θ], normalized to a positive leading
    /// coefficient. `gcd(0, 0) = 0`.
    pub fn gcd(a: &ParamPoly, b: &ParamPoly) -> ParamPoly {
        if a.is_zero() {
            return b.clone().normalize_sign();
        }
        if b.is_zero() {
            return a.clone().normalize_sign();
        }
        let n = a.nvars;
        if a.len() == 1 || b.len() == 1 {
            return monomial_gcd(a, b);
        }
        let Some(v) = (0..n).find(|&v| a.involves(v) || b.involves(v)) else {
            return monomial_gcd(a, b);
        };
        if !b.involves(v) {
            return ParamPoly::gcd(&a.content_in(v), b);
        }
        if !a.involves(v) {
            return ParamPoly::gcd(a, &b.content_in(v));
        }
        let ca = a.content_in(v);
        let cb = b.content_in(v);
        let c = ParamPoly::gcd(&ca, &cb);
        let mut p = a.exact_div(&ca).expect("content divides");
        let mut q = b.exact_div(&cb).expect("content divides");
        if p.degree_in(v) < q.degree_in(v) {
            std::mem::swap(&mut p, &mut q);
        }
        loop {
            let r = p.pseudo_rem(&q, v);
            if r.is_zero() {
                break;
            }
            if !r.involves(v) {
                q = ParamPoly::one(n);
                break;
            }
            p = q;
            q = r.primitive_in(v);
        }
        c.mul(&q.primitive_in(v)).normalize_sign()
    }

    /// Gcd of a list of polynomials.
    pub fn gcd_all<'a>(items: impl IntoIterator<Item = &'a ParamPoly>, nvars: usize) -> ParamPoly {
        let mut g = ParamPoly::zero(nvars);
        for p in items {
            g = ParamPoly::gcd(&g, p);
            if g.is_unit() {
                break;
            }
        }
        g
    }

    pub fn evaluate(&self, values: &[f64]) -> f64 {
        use num_traits::ToPrimitive;
        self.terms
            .iter()
            .map(|(e, c)| {
                e.iter().zip(values).fold(c.to_f64().unwrap_or(f64::NAN), |acc, (&k, &x)| acc * x.powi(k as i32))
            })
            .sum()
    }

    /// Writes the polynomial with parameter names, highest term first.
    pub fn write_named(&self, f: &mut impl fmt::Write, names: &[String]) -> fmt::Result {
        if self.is_zero() {
            return f.write_str("0");
        }
        for (k, (e, c)) in self.terms.iter().rev().enumerate() {
            let neg = c.is_negative();
            match (k, neg) {
                (0, true) => f.write_str("-")?,
                (0, false) => {}
                (_, true) => f.write_str(" - ")?,
                (_, false) => f.write_str(" + ")?,
            }
            let abs = c.abs();
            let factors: Vec<String> = e
                .iter()
                .enumerate()
                .filter(|(_, &p)| p > 0)
                .map(|(i, &p)| if p == 1 { names[i].clone() } else { format!("{}^{p}", names[i]) })
                .collect();
            if factors.is_empty() {
                write!(f, "{abs}")?;
            } else {
                if !abs.is_one() {
                    write!(f, "{abs}*")?;
                }
                f.write_str(&factors.join("*"))?;
            }
        }
        Ok(())
    }
}

/// Gcd when at least one side is a single term (or both are constants).
fn monomial_gcd(a: &ParamPoly, b: &ParamPoly) -> ParamPoly {
    let n = a.nvars;
    let mut e = vec![u16::MAX; n];
    for ex in a.terms.keys().chain(b.terms.keys()) {
        for (m, &k) in e.iter_mut().zip(ex) {
            *m = (*m).min(k);
        }
    }
    if a.len() > 1 && b.len() > 1 {
        unreachable!("monomial_gcd requires a single-term side or constants");
    }
    let c = a.int_content().gcd(&b.int_content());
    // a multi-term side may still share a non-monomial factor only with
    // another multi-term side, so the monomial part is exact here
    let mut out = ParamPoly::zero(n);
    out.add_term(e, c);
    out
}
