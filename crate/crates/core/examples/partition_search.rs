//! Bisect over the number of voltage ranges with the plant in the loop,
//! then save the model store and the search trace.
//!
//!     cargo run --release --example partition_search -- [fit_req] [out_dir]

use gridfit::partition::{
    binary_search_partitions, max_evaluations, write_search_trace, SearchConfig,
};
use gridfit::plant::PlantParams;
use gridfit::store::ModelStore;

fn main() -> gridfit::Result<()> {
    let mut args = std::env::args().skip(1);
    let fit_req: f64 = args
        .next()
        .map_or(Ok(99.0), |s| s.parse())
        .expect("fit requirement");
    let out = std::path::PathBuf::from(args.next().unwrap_or_else(|| "partition_search".into()));

    let cfg = SearchConfig {
        fit_req,
        ..SearchConfig::default()
    };
    let search = binary_search_partitions(&cfg, &PlantParams::default())?;
    for p in &search.trace {
        println!(
            "n = {:>2}: fit {:.4} % ({:.2} s)",
            p.n, p.fit, p.wall_time_s
        );
    }
    println!(
        "n* = {} (check {}), {} of at most {} evaluations",
        search.n_star,
        search.check,
        search.trace.len(),
        max_evaluations(cfg.n_min, cfg.n_max)
    );
    for r in &search.model.ranges {
        println!(
            "  [{:.4}, {:.4}] n={} m={} fit {:.2} %",
            r.v_lo,
            r.v_hi,
            r.model.tf.n(),
            r.model.tf.m(),
            r.report.fit_percent
        );
    }
    write_search_trace(out.join("search_trace.csv"), &search.trace)?;
    ModelStore::new("example", &[("reactive", &search.model)]).save(out.join("model.json"))?;
    println!("-> {}", out.display());
    Ok(())
}
