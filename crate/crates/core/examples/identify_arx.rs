//! Recover a known second-order system from chirp data, then let the order
//! search pick a model on held-out data.

use gridfit::signalgen::{generate_probing_signal, ChirpSpec, PartitionPlan};
use gridfit::sysid::{
    fit_arx, select_order, simulate_tf, Dataset, DiscreteTransferFunction, SelectOptions,
};

fn main() -> gridfit::Result<()> {
    let truth = DiscreteTransferFunction::new(vec![0.0, 0.02, 0.015], vec![-1.6, 0.65], 1e-3)?;
    let plan = PartitionPlan::new(-1.0, 1.0, 1, 6.0)?;
    let u = generate_probing_signal(&plan, &ChirpSpec::default())?.into_values();
    let y = simulate_tf(&truth, &u, None)?;
    let data = Dataset::new(u, y, 1e-3)?;

    let est = fit_arx(&data, 2, 2)?;
    println!("true a = {:?}, b = {:?}", truth.a, truth.b);
    println!("est  a = {:?}, b = {:?}", est.a, est.b);
    println!("poles {:?}, stable {}", est.poles(), est.is_stable());

    let sel = select_order(&data, &SelectOptions::default())?;
    println!(
        "selected n = {}, m = {}: held-out fit {:.6} %, AICc {:.1}",
        sel.model.tf.n(),
        sel.model.tf.m(),
        sel.report.fit_percent,
        sel.report.aicc
    );
    for c in sel.candidates.iter().take(6) {
        match (&c.report, &c.rejected) {
            (Some(r), _) => println!("  ({}, {}) fit {:.4} %", c.n, c.m, r.fit_percent),
            (None, Some(why)) => println!("  ({}, {}) rejected: {why}", c.n, c.m),
            _ => {}
        }
    }
    Ok(())
}
