//! Build the stepped square chirp used to probe the inverter and write it
//! as CSV.
//!
//!     cargo run --example probing_signal -- [partitions] [out.csv]

use gridfit::io::write_signal_csv;
use gridfit::signalgen::{chirp_frequency, generate_probing_signal, ChirpSpec, PartitionPlan};

fn main() -> gridfit::Result<()> {
    let mut args = std::env::args().skip(1);
    let n: usize = args
        .next()
        .map_or(Ok(4), |s| s.parse())
        .expect("partition count");
    let out = args.next().unwrap_or_else(|| "probing_signal.csv".into());

    let spec = ChirpSpec::default();
    let plan = PartitionPlan::new(0.88, 1.10, n, spec.duration)?;
    let signal = generate_probing_signal(&plan, &spec)?;

    for t in [0.0, spec.duration / 2.0, spec.duration] {
        println!("f({t:.1} s) = {:.4} Hz", chirp_frequency(t, &spec)?);
    }
    for k in 0..n {
        let (lo, hi) = plan.bounds_of(k);
        println!("partition {:>2}: [{lo:.4}, {hi:.4}] p.u.", k + 1);
    }
    write_signal_csv(&out, &signal, "value_pu")?;
    println!(
        "{} samples over {:.1} s -> {out}",
        signal.len(),
        signal.duration()
    );
    Ok(())
}
