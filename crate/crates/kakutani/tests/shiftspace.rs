//! Shift space sampling: parsing, reversal, measures and shading statistics.

use std::sync::OnceLock;

use kakutani::construction::{build_construction_sequence, ConstructionParams, ConstructionSequence};
use kakutani::shiftspace::{
    check_r9, cylinder_measure, reverse_point, sample_point, symbol_shading_correlation, word_measure, WordParser,
};
use kakutani::trees::TreeApproximation;
use num_bigint::BigInt;
use num_rational::BigRational;
use proptest::prelude::*;

fn chain() -> &'static ConstructionSequence {
    static SEQ: OnceLock<ConstructionSequence> = OnceLock::new();
    SEQ.get_or_init(|| build_construction_sequence(&TreeApproximation::chain(2), 2, &ConstructionParams::default()).unwrap())
}

fn ratio(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

#[test]
fn stage_zero_cylinders() {
    let seq = chain();
    let a = seq.params.alphabet_size as i64;
    for sym in 0..a as usize {
        let both = cylinder_measure(seq, 0, sym, &[false]).unwrap() + cylinder_measure(seq, 0, sym, &[true]).unwrap();
        assert_eq!(cylinder_measure(seq, 0, sym, &[true]).unwrap(), ratio(1, 2 * a));
        assert_eq!(both, word_measure(seq, 0, sym).unwrap());
    }
    assert!(cylinder_measure(seq, 0, 0, &[]).is_err());
}

#[test]
fn words_of_one_stage_have_equal_measure() {
    let seq = chain();
    let stage = seq.stage(1).unwrap();
    let first = word_measure(seq, 1, 0).unwrap();
    assert!((1..stage.word_count()).all(|w| word_measure(seq, 1, w).unwrap() == first));
    assert_eq!(first, ratio(1, stage.h as i64 * stage.word_count() as i64));
    assert!(word_measure(seq, 1, stage.word_count()).is_err());
}

#[test]
fn shading_is_uncorrelated_with_symbols() {
    let point = sample_point(chain(), 1, 100_000, 31, true).unwrap();
    let rho = symbol_shading_correlation(&point.segment).unwrap();
    assert!(rho.abs() < 3.0 / (100_000f64).sqrt(), "correlation {rho}");
}

#[test]
fn r9_is_reported_on_sampled_shadings() {
    let report = check_r9(chain(), 0, 0, 200, 1 << 12, 3).unwrap();
    assert_eq!(report.shadings_tested, 200);
    assert!(!report.exhaustive);
    assert!(report.shadings_passing <= report.shadings_tested);
    assert!((0.0..=1.0).contains(&report.passing_fraction));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn sampled_segments_parse_forwards_and_backwards(seed in any::<u64>(), len in 500usize..3000) {
        let seq = chain();
        let h = seq.stage(1).unwrap().h as usize;
        let point = sample_point(seq, 1, len, seed, true).unwrap();
        prop_assert_eq!(&point, &sample_point(seq, 1, len, seed, true).unwrap());
        let first_boundary = (h - point.offset) % h;
        let forward = WordParser::new(seq, 1, false, 1 << 24).unwrap();
        let blocks = (len - first_boundary) / h;
        let aligned = &point.segment.symbols[first_boundary..first_boundary + blocks * h];
        let skip = usize::from(point.offset != 0);
        prop_assert_eq!(forward.parse_aligned(aligned).unwrap(), point.word_ids[skip..skip + blocks].to_vec());
        prop_assert!(forward.consistent_offsets(&point.segment.symbols).contains(&first_boundary));

        let rev = reverse_point(&point.segment);
        prop_assert_eq!(&reverse_point(&rev), &point.segment);
        let ones = |s: &kakutani::fbar::SymbolString| s.shading.as_ref().unwrap().iter().filter(|&&b| b).count();
        prop_assert_eq!(ones(&rev), ones(&point.segment));
        let backward = WordParser::new(seq, 1, true, 1 << 24).unwrap();
        let rev_boundary = (len - first_boundary - blocks * h) % h;
        let mut ids = backward.parse_aligned(&rev.symbols[rev_boundary..rev_boundary + blocks * h]).unwrap();
        ids.reverse();
        prop_assert_eq!(ids, point.word_ids[skip..skip + blocks].to_vec());
    }
}
