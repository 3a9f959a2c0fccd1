//! Quick calibration of the comparison scenarios: prints total
//! maintenance wall time per structure at several Rates of Expiration.
//!
//! Run with `cargo run --release -p expire-treap-bench --example calibrate`.

use expire_treap_bench::runner::{run_scenario, ScenarioConfig, StructureKind};

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    xs[xs.len() / 2]
}

fn main() {
    let runs: usize = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(3);

    for (target, roe) in [(400_000u64, 0.05f64), (400_000, 0.01), (40_000, 1.0)] {
        println!("== target {target}, RoE {:.0}% ==", roe * 100.0);
        for kind in [
            StructureKind::Treap,
            StructureKind::Avl,
            StructureKind::AvlHeap,
            StructureKind::RedBlack,
            StructureKind::RedBlackHeap,
            StructureKind::Hash,
            StructureKind::HashHeap,
        ] {
            let mut times = Vec::new();
            let mut proxy = 0u64;
            let mut ops = 0u64;
            for run in 0..runs {
                let cfg = ScenarioConfig::for_roe(kind, target, roe, 1000 + run as u64);
                let report = run_scenario(&cfg).expect("scenario");
                times.push(report.total_wall_ms());
                proxy = proxy.max(report.peak_mem_proxy());
                ops = report
                    .rows
                    .iter()
                    .map(|r| r.inserts + r.expirations)
                    .sum();
            }
            println!(
                "  {:<16} median {:>9.1} ms  ({} ops, peak mem proxy {})",
                kind.name(),
                median(times),
                ops,
                proxy
            );
        }
    }
}
