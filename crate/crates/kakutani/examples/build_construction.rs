//! Builds and validates a construction sequence, then saves it as a stage directory.
//!
//! Run with `cargo run --release --example build_construction -- [chain|binary] [out_dir]`.

use std::path::PathBuf;

use kakutani::construction::{build_construction_sequence, coherent_branch_isomorphism, save_stages, ConstructionParams};
use kakutani::trees::TreeApproximation;

fn main() -> kakutani::Result<()> {
    let mut args = std::env::args().skip(1);
    let (tree, n_max) = match args.next().as_deref() {
        Some("binary") => (TreeApproximation::full(2, 2), 3),
        _ => (TreeApproximation::chain(2), 3),
    };
    let params = ConstructionParams::default();
    let start = std::time::Instant::now();
    let seq = build_construction_sequence(&tree, n_max, &params)?;
    println!("built stages 0..={n_max} in {:.1?}", start.elapsed());
    for (stage, report) in seq.stages.iter().zip(seq.validate_all()) {
        let classes: Vec<usize> = stage.levels.iter().map(|l| l.class_count).collect();
        println!(
            "stage {}: σ = {:?}, s(n) = {}, {} words of length {}, classes per level {:?}, checks {}",
            stage.n,
            stage.node,
            stage.top_level,
            stage.word_count(),
            stage.h,
            classes,
            if report.passed() { "pass".to_string() } else { format!("FAIL {:?}", report.failures()) }
        );
    }
    if let Some(c) = coherent_branch_isomorphism(&seq, seq.top_level())? {
        println!("coherent sequence along {:?}, η verified at (n, s) = {:?}", c.branch, c.verified);
    }
    let out = args.next().map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("kakutani_stages"));
    let files = save_stages(&seq, &out)?;
    println!("wrote {} files to {}", files.len(), out.display());
    Ok(())
}
