//! A short benchmark table over the small cases of the default suite.

use std::time::Duration;

use sndp::report::{bench, default_suite, write_bench_csv, BenchOptions};

fn main() -> sndp::Result<()> {
    let cases: Vec<_> = default_suite(1)?.into_iter().take(4).collect();
    let opts = BenchOptions {
        timeout: Duration::from_secs(30),
        ..BenchOptions::default()
    };
    let rows = bench(&cases, &opts);
    write_bench_csv(&rows, std::io::stdout())
}
