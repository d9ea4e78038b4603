//! Samples shaded points of the shift space and measures return times to A.
//!
//! Run with `cargo run --release --example shift_space_sampling`.

use kakutani::construction::{build_construction_sequence, ConstructionParams};
use kakutani::shiftspace::{
    block_weight_total, check_r9, geometric_tv_distance, induced_return_times, sample_point, shading_mean,
    symbol_shading_correlation,
};
use kakutani::trees::TreeApproximation;

fn main() -> kakutani::Result<()> {
    let seq = build_construction_sequence(&TreeApproximation::chain(2), 2, &ConstructionParams::default())?;
    let point = sample_point(&seq, 1, 200_000, 1, true)?;
    let gaps = induced_return_times(&point.segment)?;
    println!(
        "segment of {} symbols from {} stage-1 words (offset {})",
        point.segment.len(),
        point.word_ids.len(),
        point.offset
    );
    println!("shading mean {:.4}, symbol/shading correlation {:.4}", shading_mean(&point.segment)?, symbol_shading_correlation(&point.segment)?);
    let mean_gap = gaps.iter().sum::<u64>() as f64 / gaps.len() as f64;
    println!("{} returns to A, mean gap {mean_gap:.3}, TV to Geometric(1/2) {:.4}", gaps.len(), geometric_tv_distance(&gaps, 20)?);
    for n in 0..=2 {
        println!("stage {n}: total cylinder weight {}", block_weight_total(&seq, n)?);
    }
    let r9 = check_r9(&seq, 0, 0, 500, 1 << 16, 7)?;
    println!("R9 on stage-1 word 0: {} of {} sampled shadings pass", r9.shadings_passing, r9.shadings_tested);
    Ok(())
}
