//! Feldman patterns: structure against a direct expansion, lazy views and separation sampling.

use kakutani::fbar::{fbar, Rational, SymbolString};
use kakutani::feldman::{
    build_pattern, cycle_decomposition, pair_fbar, sample_pairs, separation_report, FeldmanSpec,
};
use proptest::prelude::*;

/// Type r written out from the definition: N^{2(M+1−r)} cycles, each running
/// through A_1 … A_N with every block repeated T·N^{2r} times.
fn expand(t: u64, blocks: &[Vec<u32>], m: u32, r: u32) -> Vec<u32> {
    let n = blocks.len() as u64;
    let mut out = Vec::new();
    for _ in 0..n.pow(2 * (m + 1 - r)) {
        for b in blocks {
            for _ in 0..t * n.pow(2 * r) {
                out.extend_from_slice(b);
            }
        }
    }
    out
}

fn small_spec() -> impl Strategy<Value = (u64, u64, u32, u64, u64)> {
    (1u64..=2, 2u64..=3, 1u32..=2, 1u64..=2, any::<u64>())
        .prop_filter("desk scale", |(t, n, m, l, _)| t * n.pow(2 * m + 3) * l <= 50_000)
}

fn blocks_for(n: u64, l: u64, seed: u64) -> Vec<Vec<u32>> {
    (0..n).map(|i| (0..l).map(|j| ((seed >> (i * l + j) % 60) & 1) as u32 * 10 + i as u32).collect()).collect()
}

#[test]
fn worked_example() {
    let spec = FeldmanSpec::distinct_symbols(1, 2, 1, 1).unwrap();
    assert_eq!(spec.pattern_length().unwrap(), 32);
    let p = build_pattern(&spec, 1, 1 << 20).unwrap();
    assert_eq!(p.symbols, [vec![0; 4], vec![1; 4]].concat().repeat(4));
}

#[test]
fn invalid_specs_are_rejected() {
    assert!(FeldmanSpec::distinct_symbols(0, 2, 1, 1).is_err());
    assert!(FeldmanSpec::new(1, 2, 1, 2, vec![SymbolString::new(vec![0, 0])]).is_err());
    assert!(FeldmanSpec::new(1, 2, 1, 2, vec![SymbolString::new(vec![0]), SymbolString::new(vec![1, 1])]).is_err());
    let spec = FeldmanSpec::distinct_symbols(1, 2, 2, 1).unwrap();
    assert!(spec.pattern(0).is_err() && spec.pattern(3).is_err());
    assert!(build_pattern(&spec, 1, 16).is_err());
}

#[test]
fn separation_report_is_deterministic_and_summarizes_its_pairs() {
    let spec = FeldmanSpec::distinct_symbols(1, 3, 2, 1).unwrap();
    let a = separation_report(&spec, 3u64.pow(6), 12, 5).unwrap();
    assert_eq!(a, separation_report(&spec, 3u64.pow(6), 12, 5).unwrap());
    let zero = Rational::from_integer(0);
    assert!(a.alpha_measured >= zero && a.alpha_measured <= Rational::from_integer(1));
    assert_eq!(a.alpha_measured, a.pairs_tested.iter().map(|p| p.min_fbar).min().unwrap());
    assert_eq!(a.pairs_tested.iter().map(|p| p.samples).sum::<usize>(), 12);
    assert!(a.alpha_measured > zero, "distinct types should stay apart");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn patterns_match_the_direct_expansion((t, n, m, l, seed) in small_spec()) {
        let raw = blocks_for(n, l, seed);
        let spec = FeldmanSpec::new(t, n, m, l, raw.iter().cloned().map(SymbolString::new).collect()).unwrap();
        for r in 1..=m {
            let built = build_pattern(&spec, r, 1 << 24).unwrap();
            prop_assert_eq!(&built.symbols, &expand(t, &raw, m, r));
            prop_assert_eq!(built.len() as u64, spec.pattern_length().unwrap());
            let cycles = cycle_decomposition(&spec, r, &built.symbols).unwrap();
            prop_assert_eq!(cycles.len() as u64, n.pow(2 * (m + 1 - r)));
            prop_assert!(cycles.iter().all(|c| c.len() as u64 == spec.cycle_length(r)));
        }
    }

    #[test]
    fn lazy_windows_agree_with_the_built_pattern((t, n, m, l, seed) in small_spec(), a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let raw = blocks_for(n, l, seed);
        let spec = FeldmanSpec::new(t, n, m, l, raw.into_iter().map(SymbolString::new).collect()).unwrap();
        let total = spec.pattern_length().unwrap();
        let start = (a * total as f64) as u64 % total;
        let len = 1 + (b * (total - start) as f64) as u64 % (total - start);
        for r in 1..=m {
            let built = build_pattern(&spec, r, 1 << 24).unwrap();
            let view = spec.pattern(r).unwrap();
            let window = view.window(start, len, 1 << 24).unwrap();
            prop_assert_eq!(&window[..], &built.symbols[start as usize..(start + len) as usize]);
            prop_assert_eq!(view.symbol_at(start), built.symbols[start as usize]);
            let expanded: Vec<u32> = view
                .window_runs(start, len)
                .unwrap()
                .into_iter()
                .flat_map(|(x, c)| std::iter::repeat(x).take(c as usize))
                .collect();
            prop_assert_eq!(expanded, window);
        }
    }

    #[test]
    fn sampled_pair_distances_equal_direct_fbar(n in 2u64..=3, seed in any::<u64>()) {
        let spec = FeldmanSpec::distinct_symbols(1, n, 2, 1).unwrap();
        let min_len = n.pow(4);
        for pair in sample_pairs(&spec, min_len, 4, seed).unwrap() {
            prop_assert!(pair.len_r >= min_len && pair.len_k >= min_len && pair.r != pair.k);
            let a = spec.pattern(pair.r).unwrap().window(pair.start_r, pair.len_r, 1 << 24).unwrap();
            let b = spec.pattern(pair.k).unwrap().window(pair.start_k, pair.len_k, 1 << 24).unwrap();
            let direct = fbar(&SymbolString::new(a), &SymbolString::new(b)).unwrap();
            prop_assert_eq!(pair_fbar(&spec, &pair).unwrap(), direct);
        }
    }
}
