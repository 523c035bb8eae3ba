//! Operation-cost model and elementwise throughput benchmarks.

pub mod bench;
pub mod cost;

pub use bench::{
    bench_suite, bench_throughput, render_table, BenchConfig, BenchInputs, Mode, Precision,
    ThroughputReport,
};
pub use cost::{count_ops, expression, CostProfile, Expr, OpCounts, Pass};
