//! Draws a noisy SEIR dataset, writes it to a directory and reads it back.
//!
//!     cargo run --example noisy_dataset -- [sigma] [dir]

use obspinn::scenarios::{make_dataset, DataConfig, Dataset, Scenario, ScenarioId};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let sigma = args.next().map(|s| s.parse()).transpose()?.unwrap_or(0.05);
    let dir = std::path::PathBuf::from(args.next().unwrap_or_else(|| "data_seir".into()));
    let s = Scenario::preset(ScenarioId::Seir);
    let d = make_dataset(&s, &DataConfig { sigma, seed: 1, ..Default::default() })?;
    println!("train {} / val {} / test {} points, output jets up to order {}", d.train.len(), d.val.len(), d.test.len(), d.output_order);
    for k in 0..3 {
        println!("  t = {:7.2}  y = {:.5}  y' = {:+.5}  y'' = {:+.6}", d.train.times[k], d.train.outputs[k][0], d.train.output_jets[k][1], d.train.output_jets[k][2]);
    }
    d.save(&dir)?;
    assert_eq!(Dataset::load(&dir)?, d);
    println!("saved to {} and read back unchanged", dir.display());
    Ok(())
}
