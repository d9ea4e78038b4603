//! Measures f̄ separation between Feldman pattern types at N = 20, M = 2.
//!
//! Run with `cargo run --release --example feldman_separation -- [samples]`.

use std::time::Instant;

use kakutani::feldman::{meets_sqrt_bound, separation_report, FeldmanSpec};
use kakutani::fbar::{format_rational, Rational};

fn main() -> kakutani::Result<()> {
    let samples: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(6);
    let spec = FeldmanSpec::distinct_symbols(1, 20, 2, 1)?;
    let min_len = spec.block_multiplicity() * spec.l;
    println!("pattern length {} symbols, substrings of ≥ {} symbols", spec.pattern_length()?, min_len);
    let start = Instant::now();
    let report = separation_report(&spec, min_len, samples, 2024)?;
    println!("{} sampled pairs in {:.1?}", report.sample_count, start.elapsed());
    for p in &report.pairs_tested {
        println!("  types ({}, {}): min f̄ = {} over {} samples", p.r, p.k, format_rational(&p.min_fbar), p.samples);
    }
    let zero = Rational::from_integer(0);
    let holds = meets_sqrt_bound(report.alpha_measured, Rational::from_integer(1), 4, spec.n, zero);
    println!("measured α = {} (≥ 1 − 4/√N: {holds})", format_rational(&report.alpha_measured));
    Ok(())
}
