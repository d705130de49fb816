//! Integrates the three scenarios with their true parameters and prints a
//! few samples plus the conservation error of the compartment sum.
//!
//!     cargo run --example simulate_scenarios

use obspinn::scenarios::{Scenario, ScenarioId};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for id in [ScenarioId::Seir, ScenarioId::Sicrd, ScenarioId::Saird] {
        let s = Scenario::preset(id);
        let traj = s.simulate()?;
        let drift = traj.states.iter().map(|x| (x.iter().sum::<f64>() - 1.0).abs()).fold(0.0, f64::max);
        println!("{} ({} points, max |sum - 1| = {drift:.1e})", id.name(), traj.times.len());
        println!("  t      {}", s.model.states.join("        "));
        for t in [0.0, 50.0, 100.0, 200.0] {
            let x = traj.sample(t)?;
            let cells: Vec<String> = x.iter().map(|v| format!("{v:.6}")).collect();
            println!("  {t:<6} {}", cells.join(" "));
        }
    }
    Ok(())
}
