//! Evaluates the reconstruction formulas on exact output derivatives and
//! compares them with the simulated unmeasured states.
//!
//!     cargo run --example reconstruct_states

use obspinn::observability::AnalysisOptions;
use obspinn::scenarios::{make_dataset, DataConfig, Scenario, ScenarioId};
use obspinn::training::augment;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for s in [
        Scenario::preset(ScenarioId::Seir),
        Scenario::preset(ScenarioId::Sicrd),
        Scenario::preset(ScenarioId::Saird).with_unknown(&["beta"])?,
    ] {
        let d = make_dataset(&s, &DataConfig::default())?;
        let a = s.analyze(&AnalysisOptions::default())?;
        let aug = augment(&s, &a, &d.test, &s.true_unknown());
        for (k, &i) in aug.states.iter().enumerate() {
            let worst = aug.values[k]
                .iter()
                .zip(&d.test.truth)
                .filter_map(|(v, x)| v.map(|v| (v - x[i]).abs() / x[i].abs().max(1e-12)))
                .fold(0.0, f64::max);
            println!("{:5} {:2}: max relative error {worst:.2e} over {} test points", s.id.name(), d.state_names[i], d.test.len());
        }
    }
    Ok(())
}
