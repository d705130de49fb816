//! Trains one network with the unknown parameter pinned, with and without
//! the augmented states, and prints the loss trajectory.
//!
//!     cargo run --release --example train_fixed_theta -- [epochs] [epsilon]

use std::time::Instant;

use obspinn::observability::AnalysisOptions;
use obspinn::scenarios::{make_dataset, DataConfig, Scenario, ScenarioId};
use obspinn::training::{train_fixed_theta, Mode, Profile, TrainConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().collect();
    let epochs = args.get(1).map(|s| s.parse()).transpose()?.unwrap_or(2000);
    let s = Scenario::preset(ScenarioId::Seir);
    let eps = args.get(2).map(|s| s.parse()).transpose()?.unwrap_or(s.value("epsilon"));
    let d = make_dataset(&s, &DataConfig::default())?;
    let a = s.analyze(&AnalysisOptions::default())?;
    let mut cfg = TrainConfig::profile(Profile::Desk, s.id, Mode::Proposed, 0);
    cfg.epochs = epochs;
    for (label, analysis) in [("measurements only", None), ("with augmentation", Some(&a))] {
        let t = Instant::now();
        let r = train_fixed_theta(&s, analysis, &d, &[eps], &cfg)?;
        println!("{label}: E_val = {:.3e} at epoch {} ({:.1?})", r.val_loss, r.best_epoch, t.elapsed());
        for row in r.trace.iter().step_by((epochs / 5).max(1)) {
            let p = row.parts;
            println!("  {:>6}  eq {:.2e}  init {:.2e}  data {:.2e}  aug {:.2e}", row.epoch, p.eq, p.init, p.data, p.aug);
        }
    }
    Ok(())
}
