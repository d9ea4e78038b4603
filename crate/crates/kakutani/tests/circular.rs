//! Circularized construction sequences: lengths, reversal, lazy symbols and parsing.

use kakutani::circular::{circular_params, circular_partial, r_c, CircularSystem, Spacers, DEFAULT_BUDGET};
use kakutani::construction::{build_construction_sequence, ConstructionParams};
use kakutani::trees::TreeApproximation;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn chain_system() -> CircularSystem {
    let seq = build_construction_sequence(&TreeApproximation::chain(2), 2, &ConstructionParams::default()).unwrap();
    CircularSystem::new(seq.params.alphabet_size, seq.components(), &[2, 2]).unwrap()
}

#[test]
fn circularized_chain_has_the_expected_shape() {
    let sys = chain_system();
    assert_eq!(sys.word_count(1), 32);
    assert_eq!(sys.length(1), 144 * 2);
    let (k1, l1, q1) = (sys.k_seq[1] as u128, 2u128, sys.length(1));
    assert_eq!(sys.length(2), k1 * l1 * q1 * q1);
    let words: Vec<Vec<u32>> = (0..sys.word_count(1)).map(|w| sys.word(1, w, DEFAULT_BUDGET).unwrap()).collect();
    let distinct: std::collections::BTreeSet<&Vec<u32>> = words.iter().collect();
    assert_eq!(distinct.len(), words.len(), "c_1 must be injective");
    for (w, word) in words.iter().enumerate() {
        let rev = sys.rev_word(1, w, DEFAULT_BUDGET).unwrap();
        assert!(rev.iter().eq(word.iter().rev()));
        let spacers = word.iter().filter(|&&x| x == sys.spacers.b || x == sys.spacers.e).count();
        assert_eq!(spacers * 2, word.len());
        assert_eq!(sys.decircularize(1, word, DEFAULT_BUDGET).unwrap(), sys.components[1][w]);
    }
}

#[test]
fn stage_two_symbols_reverse_without_materializing() {
    let sys = chain_system();
    let q = sys.length(2);
    assert!(sys.word(2, 0, DEFAULT_BUDGET).is_err(), "q_2 exceeds the default budget");
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..20_000 {
        let w = rng.gen_range(0..sys.word_count(2));
        let pos = rng.gen_range(0..q);
        assert_eq!(sys.rev_formula_symbol_at(2, w, pos), sys.symbol_at(2, w, q - 1 - pos));
    }
}

#[test]
fn decircularization_rejects_damaged_words() {
    let sys = chain_system();
    let mut word = sys.word(1, 0, DEFAULT_BUDGET).unwrap();
    word[0] = 0;
    assert!(sys.decircularize(1, &word, DEFAULT_BUDGET).is_err());
    assert!(sys.decircularize(1, &word[1..], DEFAULT_BUDGET).is_err());
}

#[test]
fn schedules_are_checked() {
    assert!(circular_params(&[2], &[1], 1).is_err());
    assert!(circular_params(&[0], &[2], 1).is_err());
    assert!(circular_params(&[2], &[], 1).is_err());
    let p = circular_params(&[2, 3], &[2, 2], 2).unwrap();
    assert_eq!(r_c(&p, 1, 7).unwrap(), 7);
    // ⌊√2 · 2 · 1⌋ = 2
    assert_eq!(r_c(&p, 2, 7).unwrap(), 2);
    assert!(r_c(&p, 0, 7).is_err());
}

#[test]
fn single_block_partial_at_stage_zero() {
    let p = circular_params(&[1], &[4], 0).unwrap();
    let sp = Spacers { b: 8, e: 9 };
    assert_eq!(circular_partial(&p, 0, &[vec![5]], 0, 0, false, sp).unwrap(), vec![8, 5, 5, 5]);
}

proptest! {
    #[test]
    fn every_inner_factor_has_length_l_q(k in 1u64..4, l in 2u64..5, k0 in 1u64..4, l0 in 2u64..4, seed in any::<u64>()) {
        let params = circular_params(&[k0, k], &[l0, l], 1).unwrap();
        let q = params.q_n() as usize;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let comps: Vec<Vec<u32>> = (0..k).map(|_| (0..q).map(|_| rng.gen_range(0..3)).collect()).collect();
        let sp = Spacers::for_alphabet(3);
        for i in 0..params.q_n() {
            for reversed in [false, true] {
                for j in 0..k as usize {
                    let piece = circular_partial(&params, i, &comps, j, j, reversed, sp).unwrap();
                    prop_assert_eq!(piece.len(), l as usize * q);
                }
            }
        }
        prop_assert!((0..params.q_n()).all(|i| params.j(i) < params.q_n()));
        prop_assert_eq!(params.j(params.q_n()), params.q_n());
    }
}
