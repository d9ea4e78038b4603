//! f̄ distance: metric facts, engine agreement and the shading projection.

use kakutani::fbar::lcs::{lcs_dp, lcs_len};
use kakutani::fbar::{
    best_match, fbar, fbar_below, fbar_oracle, fbar_symbol_projection, Match, Rational, SymbolString, Thresholded,
};
use proptest::collection::vec;
use proptest::prelude::*;

fn r(n: i64, d: i64) -> Rational {
    Rational::new(n, d)
}

#[test]
fn worked_values() {
    let f = |a: &str, b: &str| fbar(&SymbolString::from_letters(a), &SymbolString::from_letters(b)).unwrap();
    assert_eq!(f("abc", "abc"), r(0, 1));
    assert_eq!(f("aa", "bb"), r(1, 1));
    assert_eq!(f("ab", "ba"), r(1, 2));
    assert_eq!(f("abc", ""), r(1, 1));
    assert!(fbar(&SymbolString::new(vec![]), &SymbolString::new(vec![])).is_err());
}

#[test]
fn best_match_uses_the_lexicographically_least_pairs() {
    let m = |a: &str, b: &str| best_match(&SymbolString::from_letters(a), &SymbolString::from_letters(b)).unwrap();
    assert_eq!(m("abc", "abc"), Match { pairs: vec![(1, 1), (2, 2), (3, 3)] });
    assert_eq!(m("aa", "bb"), Match { pairs: vec![] });
    assert_eq!(m("ab", "ba"), Match { pairs: vec![(1, 2)] });
}

#[test]
fn oracle_refuses_long_inputs() {
    let long = SymbolString::new(vec![0; 13]);
    assert!(fbar_oracle(&long, &long).is_err());
}

#[test]
fn symbol_projection_is_the_least_shaded_distance() {
    // Exhaustive over all strings with |a|, |b| ≤ 4 on two symbols, all shadings of a and of b.
    let strings: Vec<Vec<u32>> = (0..=4usize)
        .flat_map(|len| (0..1u32 << len).map(move |bits| (0..len).map(|i| (bits >> i) & 1).collect()))
        .collect();
    let shadings = |len: usize| (0..1u32 << len).map(move |bits| (0..len).map(|i| bits >> i & 1 == 1).collect::<Vec<bool>>());
    for a in strings.iter().filter(|a| !a.is_empty()) {
        for ua in shadings(a.len()) {
            let shaded = SymbolString::shaded(a.clone(), ua).unwrap();
            for b in &strings {
                let least = shadings(b.len())
                    .map(|ub| fbar(&shaded, &SymbolString::shaded(b.clone(), ub).unwrap()).unwrap())
                    .min()
                    .unwrap();
                let projected = fbar_symbol_projection(&shaded, &SymbolString::new(b.clone())).unwrap();
                assert_eq!(projected, least, "{a:?} vs {b:?}");
            }
        }
    }
    let plain = SymbolString::from_letters("ab");
    assert!(fbar_symbol_projection(&plain, &plain).is_err());
}

#[test]
fn shaded_examples() {
    let a = SymbolString::shaded(vec![0, 1], vec![false, true]).unwrap();
    assert_eq!(fbar_symbol_projection(&a, &SymbolString::new(vec![0, 1])).unwrap(), r(0, 1));
    let a = SymbolString::shaded(vec![0, 0], vec![false, false]).unwrap();
    assert_eq!(fbar_symbol_projection(&a, &SymbolString::new(vec![1, 1])).unwrap(), r(1, 1));
}

fn short() -> impl Strategy<Value = Vec<u32>> {
    vec(0u32..3, 0..9)
}

proptest! {
    #[test]
    fn symmetric_and_zero_on_the_diagonal(a in short(), b in short()) {
        prop_assume!(!a.is_empty() || !b.is_empty());
        let (sa, sb) = (SymbolString::new(a.clone()), SymbolString::new(b));
        prop_assert_eq!(fbar(&sa, &sb).unwrap(), fbar(&sb, &sa).unwrap());
        if !a.is_empty() {
            prop_assert_eq!(fbar(&sa, &sa).unwrap(), r(0, 1));
        }
    }

    #[test]
    fn values_lie_in_the_unit_interval_and_match_the_oracle(a in short(), b in short()) {
        prop_assume!(!a.is_empty() || !b.is_empty());
        let (sa, sb) = (SymbolString::new(a), SymbolString::new(b));
        let f = fbar(&sa, &sb).unwrap();
        prop_assert!(f >= r(0, 1) && f <= r(1, 1));
        prop_assert_eq!(f, fbar_oracle(&sa, &sb).unwrap());
    }

    #[test]
    fn triangle_inequality_at_a_fixed_length(len in 1usize..10, seed in vec(0u32..3, 30)) {
        let x = SymbolString::new(seed[..len].to_vec());
        let y = SymbolString::new(seed[10..10 + len].to_vec());
        let z = SymbolString::new(seed[20..20 + len].to_vec());
        let d = |p: &SymbolString, q: &SymbolString| fbar(p, q).unwrap();
        prop_assert!(d(&x, &y) <= d(&x, &z) + d(&z, &y));
    }

    #[test]
    fn bit_parallel_engine_equals_the_table(a in vec(0u32..4, 0..300), b in vec(0u32..4, 0..300)) {
        prop_assert_eq!(lcs_len(&a, &b), lcs_dp(&a, &b));
    }

    #[test]
    fn thresholded_distance_is_exact_below_and_certified_above(
        a in vec(0u32..3, 1..40), b in vec(0u32..3, 1..40), num in 1i64..20,
    ) {
        let eps = r(num, 20);
        let exact = fbar(&SymbolString::new(a.clone()), &SymbolString::new(b.clone())).unwrap();
        match fbar_below(&a, &b, eps).unwrap() {
            Thresholded::Exact(v) => prop_assert!(v == exact && v < eps),
            Thresholded::AtLeast(v) => prop_assert!(v == eps && exact >= eps),
        }
    }

    #[test]
    fn best_match_is_valid_and_maximal(a in short(), b in short()) {
        prop_assume!(!a.is_empty() || !b.is_empty());
        let (sa, sb) = (SymbolString::new(a.clone()), SymbolString::new(b.clone()));
        let m = best_match(&sa, &sb).unwrap();
        prop_assert!(m.is_valid_for(&sa, &sb));
        let total = (a.len() + b.len()) as i64;
        prop_assert_eq!(fbar(&sa, &sb).unwrap(), r(total - 2 * m.len() as i64, total));
    }
}
