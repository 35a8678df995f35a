//! Drive the reference inverter with a slow voltage ramp and compare the
//! reactive current with the static curve.

use gridfit::plant::{simulate_plant, volt_var_q, PlantParams};
use gridfit::signalgen::Signal;

fn main() -> gridfit::Result<()> {
    let params = PlantParams::default();
    let rate = 1000.0;
    let len = 60_000;
    let ramp: Vec<f64> = (0..len)
        .map(|k| 0.88 + 0.22 * k as f64 / (len - 1) as f64)
        .collect();
    let v = Signal::new(0.0, rate, ramp)?;
    let p = Signal::constant(0.0, len, rate)?;
    let run = simulate_plant(&v, &p, &params, 1e-3)?;

    println!("{:>8} {:>10} {:>10}", "v [pu]", "i_q [A]", "curve [A]");
    for k in (0..len).step_by(6000) {
        let vk = v.values()[k];
        let static_iq = volt_var_q(vk, &params.curve).q * 1000.0 / (vk * params.v_base);
        println!(
            "{vk:>8.4} {:>10.3} {static_iq:>10.3}",
            run.output.values()[k]
        );
    }
    println!("saturated samples: {}", run.ride_through_samples);
    Ok(())
}
