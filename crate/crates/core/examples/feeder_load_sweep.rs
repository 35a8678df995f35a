//! Net load sweep of the twelve-house feeder with no inverter control.

use gridfit::feeder::{load_sweep, solve_network, write_load_sweep, FeederCase};

fn main() -> gridfit::Result<()> {
    let case = FeederCase::twelve_house();
    let idle = solve_network(&case, &vec![(0.0, 0.0); case.houses.len()])?;
    println!("no injection: {:?}", idle.house_magnitudes());

    let sweep = load_sweep(&case, (-75.0, 75.0), 31)?;
    println!("{:>8} {:>8} {:>8} {:>8}", "kW", "H1", "H6", "H12");
    for (p, v) in sweep.net_load.iter().zip(&sweep.voltages).step_by(5) {
        println!("{p:>8.1} {:>8.4} {:>8.4} {:>8.4}", v[0], v[5], v[11]);
    }
    write_load_sweep("load_sweep.csv", &sweep)?;
    println!("-> load_sweep.csv");
    Ok(())
}
