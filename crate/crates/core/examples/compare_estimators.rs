//! Runs the baseline, reference and proposed estimators on one scenario and
//! prints parameter and state errors side by side.
//!
//!     cargo run --release --example compare_estimators -- [seir|sicrd|saird] [sigma] [epochs] [samples]

use obspinn::observability::AnalysisOptions;
use obspinn::report::{lookup, metrics, RunSummary};
use obspinn::scenarios::{make_dataset, DataConfig, Scenario};
use obspinn::training::{train, Mode, Profile, TrainConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().collect();
    let s = Scenario::from_name(args.get(1).map_or("seir", String::as_str))?;
    let sigma = args.get(2).map(|a| a.parse()).transpose()?.unwrap_or(0.0);
    let d = make_dataset(&s, &DataConfig { sigma, ..Default::default() })?;
    let a = s.analyze(&AnalysisOptions::default())?;
    for mode in [Mode::Baseline, Mode::Reference, Mode::Proposed] {
        let mut cfg = TrainConfig::profile(Profile::Desk, s.id, mode, 0);
        cfg.epochs = args.get(3).map(|a| a.parse()).transpose()?.unwrap_or(cfg.epochs);
        cfg.bo_iterations = args.get(4).map(|a| a.parse()).transpose()?.unwrap_or(cfg.bo_iterations);
        let t = std::time::Instant::now();
        let out = train(&s, Some(&a), &d, &cfg)?;
        let summary = RunSummary {
            scenario: s.id.name().into(),
            mode: format!("{mode:?}"),
            sigma,
            seed: 0,
            selection: format!("{:?}", cfg.selection).to_lowercase(),
            unknown: out.unknown.clone(),
            theta_hat: out.theta_hat.clone(),
            theta_true: s.true_unknown(),
            val_loss: out.val_loss,
            best_epoch: out.best_epoch,
            s_star: out.s_star,
        };
        let rows = metrics(&summary, &out.network, &d);
        let rae: Vec<String> = s.unknown.iter().map(|p| format!("RAE({p}) {:.3}", lookup(&rows, "RAE", p, "all").unwrap())).collect();
        let rse: Vec<String> = d.state_names.iter().map(|x| format!("{x} {:.2e}", lookup(&rows, "RSE", x, "test").unwrap())).collect();
        println!("{mode:<9?} {}  RSE: {}  ({:.1?})", rae.join(" "), rse.join(" "), t.elapsed());
    }
    Ok(())
}
