//! One day on the feeder with and without Volt-VAr, detailed inverters.
//!
//!     cargo run --release --example feeder_24h -- [hours]

use gridfit::feeder::{
    run_timeseries, synthetic_day, Binding, FeederCase, GsfMode, TimeseriesOptions,
};

fn main() -> gridfit::Result<()> {
    let hours: usize = std::env::args()
        .nth(1)
        .map_or(Ok(24), |s| s.parse())
        .expect("hours");
    let case = FeederCase::twelve_house();
    let mut day = synthetic_day(case.houses.len()).resample(1.0)?;
    let len = (hours * 3600 + 1).min(day.len());
    day.irradiance.truncate(len);
    for l in &mut day.loads {
        l.truncate(len);
    }

    let mut peaks = Vec::new();
    for mode in [GsfMode::NoGsf, GsfMode::VoltVar] {
        let opts = TimeseriesOptions {
            mode,
            binding: Binding::Detailed,
            ..TimeseriesOptions::default()
        };
        let r = run_timeseries(&case, &day, &opts, None)?;
        let (v, t) = r.peak_voltage(11);
        let q = r.q_kvar[11].iter().cloned().fold(0.0, f64::min);
        println!(
            "{mode:>8}: H12 peak {v:.5} p.u. at {:.2} h, most absorbed {q:.3} kVAr, {:.1} s",
            t / 3600.0,
            r.wall_time_s
        );
        r.write_csv(format!("feeder_24h_{mode}"))?;
        peaks.push(v);
    }
    println!("reduction at H12: {:.5} p.u.", peaks[0] - peaks[1]);
    Ok(())
}
