//! Stationary codes, shading reshuffles and audits.

use std::sync::OnceLock;

use kakutani::codes::{
    apply_stationary_code, audit_code, audit_coherence, reshuffle_shading, sample_audit_inputs, AuditReport, CodeFile,
    OracleCode, StationaryCode,
};
use kakutani::construction::{build_construction_sequence, ConstructionParams, ConstructionSequence};
use kakutani::fbar::{fbar, parse_rational, Rational, SymbolString};
use kakutani::involutions::{GroupElement, Parity};
use kakutani::trees::TreeApproximation;
use proptest::collection::vec;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn chain() -> &'static ConstructionSequence {
    static SEQ: OnceLock<ConstructionSequence> = OnceLock::new();
    SEQ.get_or_init(|| build_construction_sequence(&TreeApproximation::chain(2), 2, &ConstructionParams::default()).unwrap())
}

fn shaded(symbols: Vec<u32>, bits: Vec<bool>) -> SymbolString {
    SymbolString::shaded(symbols, bits).unwrap()
}

fn report(s: usize, modal: Option<GroupElement>) -> AuditReport {
    AuditReport {
        n: 2,
        s,
        epsilon: "1/20".into(),
        samples: vec![],
        modal_parity: modal.as_ref().map(|g| g.parity()),
        modal,
        agreeing_fraction: 1.0,
    }
}

#[test]
fn coherence_needs_linked_modal_elements_on_consecutive_levels() {
    let g = |v: &[u32]| Some(GroupElement::generator(v.to_vec()));
    assert!(audit_coherence(&[report(1, g(&[0])), report(2, g(&[0, 0]))]).unwrap().coherent);
    assert!(!audit_coherence(&[report(1, g(&[0])), report(2, g(&[1, 0]))]).unwrap().coherent);
    assert!(!audit_coherence(&[report(1, g(&[0])), report(2, None)]).unwrap().coherent);
    assert!(!audit_coherence(&[report(1, g(&[0]))]).unwrap().coherent);
}

#[test]
fn oracle_codes_require_odd_elements() {
    let even = GroupElement::identity();
    assert!(OracleCode::from_eta(chain(), 1, 1, &even, 1 << 24).is_err());
}

#[test]
fn random_codes_rarely_land_near_reversed_words() {
    let seq = chain();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let code = StationaryCode::random(&mut rng, seq.params.alphabet_size, 1).unwrap();
    let samples = sample_audit_inputs(seq, 1, 40, 9).unwrap();
    let report = audit_code(&code, seq, 1, 1, &samples, Rational::new(1, 10), 1 << 24).unwrap();
    let matched = report.samples.iter().filter(|r| r.best_candidate.is_some()).count();
    // Recorded expectation: a random code should not imitate reversal.
    assert!(matched * 2 < samples.len(), "{matched} of {} samples matched", samples.len());
    for r in &report.samples {
        if let Some(v) = &r.best_fbar {
            let v = parse_rational(v).unwrap();
            assert!(v >= Rational::from_integer(0) && v < Rational::new(1, 10));
        }
        assert_eq!(r.inferred.as_ref().map(|g| g.parity()), r.parity);
    }
}

#[test]
fn planted_reversal_is_recovered_at_stage_one() {
    let seq = chain();
    let g = GroupElement::generator(vec![0]);
    let code = OracleCode::from_eta(seq, 1, 1, &g, 1 << 24).unwrap();
    let samples = sample_audit_inputs(seq, 1, 30, 2).unwrap();
    let report = audit_code(&code, seq, 1, 1, &samples, Rational::new(1, 20), 1 << 24).unwrap();
    assert_eq!(report.modal, Some(g));
    assert_eq!(report.modal_parity, Some(Parity::Odd));
    assert_eq!(report.agreeing_fraction, 1.0);
}

#[test]
fn malformed_code_files_are_rejected() {
    let bad_bit = CodeFile { k: 0, entries: vec![(vec![(0, 2)], (0, 0))], ..CodeFile::default() };
    assert!(StationaryCode::from_file(&bad_bit).is_err());
    let wrong_width = CodeFile { k: 1, entries: vec![(vec![(0, 0)], (0, 0))], ..CodeFile::default() };
    assert!(StationaryCode::from_file(&wrong_width).is_err());
    let unknown = CodeFile { builtin: Some("mirror".into()), ..CodeFile::default() };
    assert!(StationaryCode::from_file(&unknown).is_err());
}

#[test]
fn reshuffle_requires_matching_instance_counts() {
    let comps = [0, 1, 0, 0];
    let bits = vec![false; 8];
    assert!(reshuffle_shading(&comps, 2, 0..2, 2..4, &bits).is_err());
    assert!(reshuffle_shading(&comps, 2, 0..2, 1..3, &bits).is_err());
    let same = reshuffle_shading(&comps, 2, 1..3, 1..3, &[true, false, true, true, false, false, true, false]).unwrap();
    assert_eq!(same, vec![true, false, true, true, false, false, true, false]);
}

proptest! {
    #[test]
    fn codes_commute_with_the_shift(
        symbols in vec(0u32..3, 8..60), bits in vec(any::<bool>(), 60), seed in any::<u64>(), shift in 1usize..4,
    ) {
        let code = StationaryCode::random(&mut ChaCha8Rng::seed_from_u64(seed), 3, 1).unwrap();
        let len = symbols.len();
        let segment = shaded(symbols.clone(), bits[..len].to_vec());
        let shifted = shaded(symbols[shift..].to_vec(), bits[shift..len].to_vec());
        let whole = apply_stationary_code(&code, &segment).unwrap();
        let later = apply_stationary_code(&code, &shifted).unwrap();
        prop_assert_eq!(&later.symbols[..], &whole.symbols[shift..]);
        prop_assert_eq!(&later.shading.unwrap()[..], &whole.shading.unwrap()[shift..]);
    }

    #[test]
    fn reshuffles_permute_bits_and_copy_source_shadings(
        instances in vec(0u32..4, 1..8), seed in any::<u64>(), bits in vec(any::<bool>(), 64),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut target = instances.clone();
        target.shuffle(&mut rng);
        let comps: Vec<u32> = instances.iter().chain(&target).copied().collect();
        let (block, half) = (2usize, instances.len());
        let shading = bits[..comps.len() * block].to_vec();
        let out = reshuffle_shading(&comps, block, 0..half, half..2 * half, &shading).unwrap();
        prop_assert_eq!(out.iter().filter(|&&b| b).count(), shading.iter().filter(|&&b| b).count());
        // The ℓ-th occurrence of each instance in the target now carries the ℓ-th source shading.
        for inst in 0..4u32 {
            let src: Vec<usize> = (0..half).filter(|&i| comps[i] == inst).collect();
            let tgt: Vec<usize> = (half..2 * half).filter(|&i| comps[i] == inst).collect();
            for (&a, &b) in src.iter().zip(&tgt) {
                prop_assert_eq!(&out[b * block..(b + 1) * block], &shading[a * block..(a + 1) * block]);
            }
        }
    }

    #[test]
    fn copied_segments_code_alike_up_to_boundary_windows(
        instances in vec(0u32..3, 2..6), bits in vec(any::<bool>(), 96), seed in any::<u64>(),
    ) {
        // Word = source segment followed by an identical target segment; after
        // reshuffling, the target carries the source's shaded blocks, so the
        // code images differ only within K of the segment ends.
        let block = 4usize;
        let k = 1usize;
        let comps: Vec<u32> = instances.iter().chain(&instances).copied().collect();
        let half = instances.len();
        let symbols: Vec<u32> = comps.iter().flat_map(|&c| (0..block as u32).map(move |j| (c + j) % 3)).collect();
        let shading = bits[..symbols.len()].to_vec();
        let new_shading = reshuffle_shading(&comps, block, 0..half, half..2 * half, &shading).unwrap();
        let code = StationaryCode::random(&mut ChaCha8Rng::seed_from_u64(seed), 3, k).unwrap();
        let seg = half * block;
        // One pass over the whole word; the middle windows straddle both segments.
        let image = apply_stationary_code(&code, &shaded(symbols.clone(), new_shading.clone())).unwrap();
        let before = apply_stationary_code(&code, &shaded(symbols.clone(), shading.clone())).unwrap();
        let source = SymbolString::shaded(before.symbols[..seg - k].to_vec(), before.shading.as_ref().unwrap()[..seg - k].to_vec()).unwrap();
        let target = SymbolString::shaded(image.symbols[seg - k..].to_vec(), image.shading.as_ref().unwrap()[seg - k..].to_vec()).unwrap();
        let d = fbar(&source, &target).unwrap();
        prop_assert!(d <= Rational::new((2 * k * half) as i64, seg as i64));
    }
}
