//! Eliminates `t` from the twisted cubic `x = t, y = t²` (plus a parametric
//! twist `z = a·t³`) with a lex Gröbner basis and prints the basis.
//!
//!     cargo run --example groebner_elimination

use obspinn::algebra::{buchberger, Budget, JetPoly, MonomialOrder, PolyRing, Var};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let names = ["t", "x", "y", "z"];
    let vars = names.iter().enumerate().map(|(k, n)| (Var::state(k, 0), n.to_string())).collect();
    let ring = PolyRing::new(vec!["a".into()], vars, MonomialOrder::lex(4));
    let v = |k| JetPoly::var(Var::state(k, 0));
    let a = JetPoly::var(Var::Param(0));
    let gens = [&v(1) - &v(0), &v(2) - &v(0).pow(2), &v(3) - &(&a * &v(0).pow(3))];
    let gens: Vec<_> = gens.iter().map(|g| ring.from_jet(g).expect("polynomial in the ring")).collect();
    let gb = buchberger(&gens, Budget::default())?;
    println!("reduced basis ({} elements):\n{}", gb.len(), gb.dump());
    let eliminant = ring.from_jet(&(&v(3) - &(&a * &(&v(1) * &v(2))))).unwrap();
    println!("z - a*x*y in the ideal: {}", gb.is_member(&eliminant)?);
    Ok(())
}
