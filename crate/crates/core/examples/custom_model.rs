//! Parses a model written in the text format and reports which states can
//! be recovered from the output. Pass a file path or use the built-in
//! predator-prey example.
//!
//!     cargo run --example custom_model -- [model.txt]

use obspinn::model::parse_model;
use obspinn::observability::{analyze_all, AnalysisOptions};

const LOTKA_VOLTERRA: &str = "\
states: x, z
params: a, b, c, d
dynamics:
  d/dt x = a*x - b*x*z
  d/dt z = c*x*z - d*z
measure:
  y1 = x
";

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let text = match std::env::args().nth(1) {
        Some(path) => std::fs::read_to_string(path)?,
        None => LOTKA_VOLTERRA.to_string(),
    };
    let m = parse_model(&text)?;
    let r = analyze_all(&m, &AnalysisOptions::default())?;
    print!("{}", r.to_text());
    Ok(())
}
