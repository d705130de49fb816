//! Buchberger's algorithm with the Gebauer–Möller criteria over ℚ(θ),
//! computed fraction-free in ℤ[θ].

use std::cmp::Ordering;
use std::fmt::Write as _;
use std::sync::Arc;

use super::coeff::ParamPoly;
use super::poly::{exp_degree, exp_disjoint, exp_div, exp_divides, exp_lcm, same_ring, Poly, PolyRing};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AlgebraError {
    #[error("polynomials belong to different rings")]
    RingMismatch,
    #[error("resource budget exceeded: {0}")]
    ResourceBudgetExceeded(String),
    #[error("empty generator list")]
    NoGenerators,
}

/// Limits that turn a runaway computation into an error.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct Budget {
    pub max_pairs: usize,
    pub max_degree: u32,
}

impl Default for Budget {
    fn default() -> Self {
        Budget { max_pairs: 1_000_000, max_degree: 40 }
    }
}

/// Reduced Gröbner basis, each element primitive in ℤ[θ] with a positive
/// leading integer, sorted by increasing leading monomial.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroebnerBasis {
    ring: Arc<PolyRing>,
    polys: Vec<Poly>,
}

impl GroebnerBasis {
    pub fn ring(&self) -> &Arc<PolyRing> {
        &self.ring
    }

    pub fn polys(&self) -> &[Poly] {
        &self.polys
    }

    pub fn len(&self) -> usize {
        self.polys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.polys.is_empty()
    }

    pub fn is_unit_ideal(&self) -> bool {
        self.polys.len() == 1 && self.polys[0].is_constant()
    }

    pub fn normal_form(&self, p: &Poly) -> Result<Poly, AlgebraError> {
        normal_form(p, &self.polys)
    }

    pub fn is_member(&self, p: &Poly) -> Result<bool, AlgebraError> {
        Ok(self.normal_form(p)?.is_zero())
    }

    /// One element per line in the model expression syntax.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (k, g) in self.polys.iter().enumerate() {
            let _ = writeln!(out, "G[{}] = {}", k + 1, g.display());
        }
        out
    }
}

/// Fully reduces `p` modulo `basis`.
///
/// The computation never divides in ℚ(θ), so the remainder `r` satisfies
/// `c·p − r ∈ ⟨basis⟩` for some nonzero `c ∈ ℚ(θ)` rather than `c = 1`; zero
/// tests and leading monomials are unaffected.
pub fn normal_form(p: &Poly, basis: &[Poly]) -> Result<Poly, AlgebraError> {
    if basis.iter().any(|g| !same_ring(g.ring(), p.ring())) {
        return Err(AlgebraError::RingMismatch);
    }
    let refs: Vec<&Poly> = basis.iter().filter(|g| !g.is_zero()).collect();
    Ok(reduce(p, &refs, true))
}

fn find_reducer<'a>(m: &[u16], basis: &[&'a Poly]) -> Option<&'a Poly> {
    basis.iter().copied().find(|g| exp_divides(g.leading_monomial().unwrap(), m))
}

/// Fraction-free reduction. With `full = false` only the leading term is
/// reduced.
fn reduce(p: &Poly, basis: &[&Poly], full: bool) -> Poly {
    let ring = p.ring().clone();
    let n = ring.nparams();
    let mut f = p.clone();
    let mut done: Vec<(Vec<u16>, ParamPoly)> = Vec::new();
    let mut steps = 0usize;
    while let Some(m) = f.leading_monomial().map(<[u16]>::to_vec) {
        match find_reducer(&m, basis) {
            Some(g) => {
                let c = f.leading_coefficient().unwrap().clone();
                let d = g.leading_coefficient().unwrap();
                let gc = ParamPoly::gcd(&c, d);
                let a = d.exact_div(&gc).expect("gcd divides");
                let b = c.exact_div(&gc).expect("gcd divides");
                let shift = exp_div(&m, g.leading_monomial().unwrap());
                f = f.combine(&a, g, &shift, &b.neg());
                if !a.is_unit() {
                    for t in &mut done {
                        t.1 = t.1.mul(&a);
                    }
                }
                steps += 1;
                if !a.is_unit() || steps % 16 == 0 {
                    let (f2, done2) = remove_common_content(f, done, n);
                    f = f2;
                    done = done2;
                }
            }
            None if full => {
                let t = f.terms()[0].clone();
                done.push(t);
                f = Poly::from_unsorted(ring.clone(), f.terms()[1..].to_vec());
            }
            None => break,
        }
    }
    done.extend(f.terms().iter().cloned());
    Poly::from_unsorted(ring, done).primitive()
}

fn remove_common_content(
    f: Poly,
    done: Vec<(Vec<u16>, ParamPoly)>,
    nparams: usize,
) -> (Poly, Vec<(Vec<u16>, ParamPoly)>) {
    let mut coeffs: Vec<&ParamPoly> = done.iter().map(|t| &t.1).chain(f.terms().iter().map(|t| &t.1)).collect();
    coeffs.sort_by_key(|c| (c.len(), c.total_degree()));
    let g = ParamPoly::gcd_all(coeffs, nparams);
    if g.is_zero() || g.is_unit() {
        return (f, done);
    }
    let div = |c: &ParamPoly| c.exact_div(&g).expect("content divides");
    let ring = f.ring().clone();
    let f2 = Poly::from_unsorted(ring, f.terms().iter().map(|(e, c)| (e.clone(), div(c))).collect());
    let done2 = done.into_iter().map(|(e, c)| (e, div(&c))).collect();
    (f2, done2)
}

/// Fraction-free S-polynomial `a·(l/lm f)·f − b·(l/lm g)·g` with
/// `l = lcm(lm f, lm g)` and `a/b = lc g / lc f` in lowest terms.
pub fn s_polynomial(f: &Poly, g: &Poly) -> Poly {
    let (mf, mg) = (f.leading_monomial().unwrap(), g.leading_monomial().unwrap());
    let l = exp_lcm(mf, mg);
    let (cf, cg) = (f.leading_coefficient().unwrap(), g.leading_coefficient().unwrap());
    let gc = ParamPoly::gcd(cf, cg);
    let a = cg.exact_div(&gc).expect("gcd divides");
    let b = cf.exact_div(&gc).expect("gcd divides");
    // a·(l/mf)·f − b·(l/mg)·g
    let zero = Poly::zero(f.ring().clone());
    let left = zero.combine(&ParamPoly::one(a.nvars()), f, &exp_div(&l, mf), &a);
    left.combine(&ParamPoly::one(a.nvars()), g, &exp_div(&l, mg), &b.neg())
}

#[derive(Clone, Debug)]
struct Pair {
    i: usize,
    j: usize,
    lcm: Vec<u16>,
    degree: u32,
}

/// Computes the reduced Gröbner basis of the ideal generated by `gens`.
pub fn buchberger(gens: &[Poly], budget: Budget) -> Result<GroebnerBasis, AlgebraError> {
    let first = gens.first().ok_or(AlgebraError::NoGenerators)?;
    let ring = first.ring().clone();
    if gens.iter().any(|g| !same_ring(g.ring(), &ring)) {
        return Err(AlgebraError::RingMismatch);
    }
    let mut polys: Vec<Poly> = Vec::new();
    let mut active: Vec<bool> = Vec::new();
    let mut pairs: Vec<Pair> = Vec::new();

    let mut inputs: Vec<Poly> = gens.iter().filter(|g| !g.is_zero()).map(Poly::primitive).collect();
    inputs.sort_by(|a, b| ring.order.cmp(a.leading_monomial().unwrap(), b.leading_monomial().unwrap()));
    for h in inputs {
        let current: Vec<&Poly> = polys.iter().zip(&active).filter(|(_, a)| **a).map(|(p, _)| p).collect();
        let h = reduce(&h, &current, false);
        if h.is_zero() {
            continue;
        }
        if h.is_constant() {
            return Ok(unit_basis(&ring));
        }
        update(&mut polys, &mut active, &mut pairs, h, &ring);
    }

    let mut reductions = 0usize;
    while !pairs.is_empty() {
        let k = select_pair(&pairs, &ring);
        let pair = pairs.swap_remove(k);
        reductions += 1;
        if reductions > budget.max_pairs {
            return Err(AlgebraError::ResourceBudgetExceeded(format!(
                "more than {} pair reductions",
                budget.max_pairs
            )));
        }
        let s = s_polynomial(&polys[pair.i], &polys[pair.j]);
        let current: Vec<&Poly> = polys.iter().zip(&active).filter(|(_, a)| **a).map(|(p, _)| p).collect();
        let h = reduce(&s, &current, false);
        if h.is_zero() {
            continue;
        }
        if h.is_constant() {
            return Ok(unit_basis(&ring));
        }
        if h.total_degree() > budget.max_degree {
            return Err(AlgebraError::ResourceBudgetExceeded(format!(
                "basis element of degree {} exceeds the cap {}",
                h.total_degree(),
                budget.max_degree
            )));
        }
        update(&mut polys, &mut active, &mut pairs, h, &ring);
    }

    let basis: Vec<Poly> = polys.into_iter().zip(active).filter(|(_, a)| *a).map(|(p, _)| p).collect();
    Ok(GroebnerBasis { ring: ring.clone(), polys: interreduce(basis, &ring) })
}

fn unit_basis(ring: &Arc<PolyRing>) -> GroebnerBasis {
    let one = Poly::from_unsorted(
        ring.clone(),
        vec![(vec![0; ring.nvars()], ParamPoly::one(ring.nparams()))],
    );
    GroebnerBasis { ring: ring.clone(), polys: vec![one] }
}

/// Normal selection strategy: smallest lcm degree, then smallest lcm, then
/// oldest indices.
fn select_pair(pairs: &[Pair], ring: &PolyRing) -> usize {
    let mut best = 0;
    for k in 1..pairs.len() {
        let (p, q) = (&pairs[k], &pairs[best]);
        let ord = p
            .degree
            .cmp(&q.degree)
            .then_with(|| ring.order.cmp(&p.lcm, &q.lcm))
            .then_with(|| (p.j, p.i).cmp(&(q.j, q.i)));
        if ord == Ordering::Less {
            best = k;
        }
    }
    best
}

/// Gebauer–Möller update when `h` joins the basis.
fn update(polys: &mut Vec<Poly>, active: &mut Vec<bool>, pairs: &mut Vec<Pair>, h: Poly, ring: &PolyRing) {
    let t = polys.len();
    let mh = h.leading_monomial().unwrap().to_vec();
    let candidates: Vec<Pair> = (0..t)
        .filter(|&i| active[i])
        .map(|i| {
            let lcm = exp_lcm(polys[i].leading_monomial().unwrap(), &mh);
            let degree = exp_degree(&lcm);
            Pair { i, j: t, lcm, degree }
        })
        .collect();

    // keep (g, h) unless another new pair has a strictly dividing lcm, or
    // an equal lcm that appears earlier
    let mut kept: Vec<&Pair> = Vec::new();
    for (a, p) in candidates.iter().enumerate() {
        let disjoint = exp_disjoint(polys[p.i].leading_monomial().unwrap(), &mh);
        let dominated = candidates.iter().enumerate().any(|(b, q)| {
            b != a && exp_divides(&q.lcm, &p.lcm) && (q.lcm != p.lcm || b < a)
        });
        if disjoint || !dominated {
            kept.push(p);
        }
    }
    // among pairs with equal lcm keep one; drop all of them when any is
    // coprime (product criterion)
    let mut fresh: Vec<Pair> = Vec::new();
    let mut seen: Vec<(Vec<u16>, bool)> = Vec::new();
    for p in &kept {
        let disjoint = exp_disjoint(polys[p.i].leading_monomial().unwrap(), &mh);
        match seen.iter_mut().find(|(l, _)| *l == p.lcm) {
            Some(entry) => entry.1 |= disjoint,
            None => seen.push((p.lcm.clone(), disjoint)),
        }
    }
    for p in kept {
        let entry = seen.iter_mut().find(|(l, _)| *l == p.lcm).unwrap();
        if entry.1 {
            continue;
        }
        // mark as consumed so only the first pair with this lcm survives
        entry.1 = true;
        fresh.push(p.clone());
    }

    // chain criterion on old pairs
    pairs.retain(|p| {
        let li = exp_lcm(polys[p.i].leading_monomial().unwrap(), &mh);
        let lj = exp_lcm(polys[p.j].leading_monomial().unwrap(), &mh);
        !(exp_divides(&mh, &p.lcm) && li != p.lcm && lj != p.lcm)
    });
    pairs.extend(fresh);

    for i in 0..t {
        if active[i] && exp_divides(&mh, polys[i].leading_monomial().unwrap()) {
            active[i] = false;
        }
    }
    let _ = ring;
    polys.push(h);
    active.push(true);
}

/// Minimal, then fully tail-reduced basis, sorted by leading monomial.
fn interreduce(mut basis: Vec<Poly>, ring: &Arc<PolyRing>) -> Vec<Poly> {
    basis.sort_by(|a, b| ring.order.cmp(a.leading_monomial().unwrap(), b.leading_monomial().unwrap()));
    let mut minimal: Vec<Poly> = Vec::new();
    for g in basis {
        let m = g.leading_monomial().unwrap();
        if !minimal.iter().any(|h| exp_divides(h.leading_monomial().unwrap(), m)) {
            minimal.push(g);
        }
    }
    let mut out = Vec::with_capacity(minimal.len());
    for k in 0..minimal.len() {
        let others: Vec<&Poly> = minimal.iter().enumerate().filter(|(j, _)| *j != k).map(|(_, p)| p).collect();
        out.push(reduce(&minimal[k], &others, true));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::jet::{JetPoly, Var};
    use crate::algebra::poly::MonomialOrder;

    fn ring() -> Arc<PolyRing> {
        PolyRing::new(
            vec![],
            vec![(Var::state(0, 0), "t".into()), (Var::state(1, 0), "x".into()), (Var::state(2, 0), "y".into())],
            MonomialOrder::lex(3),
        )
    }

    fn v(k: usize) -> JetPoly {
        JetPoly::var(Var::state(k, 0))
    }

    #[test]
    fn twisted_cubic_elimination() {
        let r = ring();
        let g1 = r.from_jet(&(&v(1) - &v(0))).unwrap();
        let g2 = r.from_jet(&(&v(2) - &v(0).pow(2))).unwrap();
        let gb = buchberger(&[g1.clone(), g2.clone()], Budget::default()).unwrap();
        let target = r.from_jet(&(&v(2) - &v(1).pow(2))).unwrap();
        let target = target.primitive();
        assert!(gb.polys().contains(&target) || gb.polys().contains(&target.neg()));
        assert!(gb.is_member(&target).unwrap());
        assert!(!normal_form(&target, &[g1, g2]).unwrap().is_zero());
    }

    #[test]
    fn unit_ideal() {
        let r = ring();
        let one = r.from_jet(&JetPoly::one()).unwrap();
        let gb = buchberger(&[one], Budget::default()).unwrap();
        assert!(gb.is_unit_ideal());
        let x = r.from_jet(&v(0)).unwrap();
        let gb = buchberger(&[x.clone()], Budget::default()).unwrap();
        assert!(!gb.is_member(&r.from_jet(&JetPoly::one()).unwrap()).unwrap());
        assert!(gb.is_member(&x.mul(&x)).unwrap());
    }

    #[test]
    fn ring_mismatch_is_reported() {
        let r1 = ring();
        let r2 = PolyRing::new(vec![], vec![(Var::state(0, 0), "t".into())], MonomialOrder::lex(1));
        let p = r1.from_jet(&v(0)).unwrap();
        let q = r2.from_jet(&v(0)).unwrap();
        assert_eq!(normal_form(&p, &[q.clone()]), Err(AlgebraError::RingMismatch));
        assert_eq!(buchberger(&[p, q], Budget::default()).unwrap_err(), AlgebraError::RingMismatch);
    }

    #[test]
    fn degree_cap_fails_loudly() {
        let r = ring();
        let g1 = r.from_jet(&(&v(1) - &v(0).pow(3))).unwrap();
        let g2 = r.from_jet(&(&v(2) - &v(0).pow(5))).unwrap();
        let err = buchberger(&[g1, g2], Budget { max_pairs: 1_000_000, max_degree: 4 }).unwrap_err();
        assert!(matches!(err, AlgebraError::ResourceBudgetExceeded(_)));
    }
}
