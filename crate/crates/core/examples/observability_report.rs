//! Algebraic observability of the three epidemic presets.
//!
//! ```bash
//! cargo run --release --example observability_report
//! ```

use obspinn::observability::AnalysisOptions;
use obspinn::scenarios::{Scenario, ScenarioId};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let variants = [
        Scenario::preset(ScenarioId::Seir),
        Scenario::preset(ScenarioId::Sicrd),
        Scenario::preset(ScenarioId::Saird).with_unknown(&["beta"])?,
        Scenario::preset(ScenarioId::Saird),
    ];
    for s in variants {
        let start = std::time::Instant::now();
        let result = s.analyze(&AnalysisOptions::default())?;
        println!("== {} (unknown: {}) in {:.2?}", s.id.name(), s.unknown.join(", "), start.elapsed());
        print!("{}", result.to_text());
    }
    Ok(())
}
