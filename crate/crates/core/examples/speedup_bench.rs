//! Detailed versus partitioned inverters on the feeder: current NRMSE and
//! wall-clock ratio. Pass a shorter horizon in hours for a quick look.
//!
//!     cargo run --release --example speedup_bench -- [hours] [repeats]

use gridfit::bench::{format_summary, run_feeder_comparison};
use gridfit::feeder::{synthetic_day, DeviceModels, FeederCase, GsfMode, TimeseriesOptions};
use gridfit::partition::{binary_search_partitions, identify_active_channel, SearchConfig};
use gridfit::plant::PlantParams;

fn main() -> gridfit::Result<()> {
    let mut args = std::env::args().skip(1);
    let hours: usize = args.next().map_or(Ok(24), |s| s.parse()).expect("hours");
    let repeats: usize = args.next().map_or(Ok(1), |s| s.parse()).expect("repeats");

    let plant = PlantParams::default();
    let cfg = SearchConfig::default();
    let models = DeviceModels {
        reactive: binary_search_partitions(&cfg, &plant)?.model,
        active: identify_active_channel(&cfg, &plant)?,
    };
    let case = FeederCase::twelve_house();
    let mut day = synthetic_day(case.houses.len()).resample(1.0)?;
    let len = (hours * 3600 + 1).min(day.len());
    day.irradiance.truncate(len);
    for l in &mut day.loads {
        l.truncate(len);
    }

    let mut results = Vec::new();
    for mode in [GsfMode::NoGsf, GsfMode::VoltVar] {
        let opts = TimeseriesOptions {
            mode,
            plant,
            ..TimeseriesOptions::default()
        };
        let cmp = run_feeder_comparison(&case, &day, &models, &opts, repeats)?;
        results.push(cmp.result);
    }
    print!("{}", format_summary(&results));
    Ok(())
}
