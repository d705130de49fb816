//! Minimizes a noisy one-dimensional bowl with GP-EI and prints the trace.
//!
//!     cargo run --example bayes_opt -- [seed]

use obspinn::bayesopt::{minimize, BoConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0);
    let mut noise = ChaCha8Rng::seed_from_u64(seed + 1000);
    let st = minimize(|x| (x[0] - 0.2).powi(2) + 0.01 * noise.gen::<f64>(), 1, 30, seed, BoConfig::default());
    for (k, o) in st.history.iter().enumerate() {
        println!("{:>3}  x = {:.4}  f = {:.5}", k + 1, o.x[0], o.value);
    }
    let b = &st.history[st.best().unwrap()];
    println!("best x = {:.4} (f = {:.5})", b.x[0], b.value);
}
