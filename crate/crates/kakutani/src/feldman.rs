//! (T, N, M)-Feldman patterns.
//!
//! Given N building blocks A_1, …, A_N of common length L, the pattern of
//! type r ∈ 1..=M is
//!
//! ```text
//! B_r = (A_1^{T·N^{2r}} A_2^{T·N^{2r}} … A_N^{T·N^{2r}})^{N^{2(M+1−r)}}
//! ```
//!
//! so every type has length T·N^{2M+3}·L and uses each block T·N^{2M+2}
//! times. Patterns are represented lazily; only requested windows are
//! materialized.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::fbar::lcs::{lcs_runs, run_length_encode};
use crate::fbar::{fbar, fbar_from_lcs, Rational, SymbolString};

/// Default cap on materialized pattern length (symbols).
pub const DEFAULT_BUDGET: u64 = 1 << 26;

/// Parameters and building blocks of a Feldman pattern family.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeldmanSpec {
    pub t: u64,
    pub n: u64,
    pub m: u32,
    pub l: u64,
    pub blocks: Vec<SymbolString>,
}

fn pow_checked(base: u64, exp: u64) -> Option<u128> {
    let mut acc: u128 = 1;
    for _ in 0..exp {
        acc = acc.checked_mul(base as u128)?;
    }
    Some(acc)
}

impl FeldmanSpec {
    /// Validates the block count and the common block length.
    pub fn new(t: u64, n: u64, m: u32, l: u64, blocks: Vec<SymbolString>) -> Result<Self> {
        let spec = Self { t, n, m, l, blocks };
        spec.validate()?;
        Ok(spec)
    }

    /// Blocks A_i = (i−1) repeated L times: pairwise disjoint single-symbol blocks.
    pub fn distinct_symbols(t: u64, n: u64, m: u32, l: u64) -> Result<Self> {
        let blocks = (0..n).map(|i| SymbolString::new(vec![i as u32; l as usize])).collect();
        Self::new(t, n, m, l, blocks)
    }

    pub fn validate(&self) -> Result<()> {
        if self.t == 0 || self.n == 0 || self.m == 0 || self.l == 0 {
            return invalid("T, N, M and L must be positive");
        }
        if self.blocks.len() as u64 != self.n {
            return invalid(format!("{} blocks given for N = {}", self.blocks.len(), self.n));
        }
        if let Some(b) = self.blocks.iter().find(|b| b.len() as u64 != self.l) {
            return invalid(format!("block of length {} where L = {}", b.len(), self.l));
        }
        self.pattern_length()?;
        Ok(())
    }

    /// T·N^{2M+3}·L, the common length of every type.
    pub fn pattern_length(&self) -> Result<u64> {
        let len = pow_checked(self.n, 2 * self.m as u64 + 3)
            .and_then(|p| p.checked_mul(self.t as u128))
            .and_then(|p| p.checked_mul(self.l as u128));
        match len {
            Some(x) if x <= u64::MAX as u128 => Ok(x as u64),
            _ => Err(Error::Budget {
                what: "Feldman pattern length".into(),
                required: len.unwrap_or(u128::MAX),
                cap: u64::MAX as u128,
            }),
        }
    }

    /// Number of block repetitions in each run of type r: T·N^{2r}.
    pub fn run_blocks(&self, r: u32) -> u64 {
        self.t * pow_checked(self.n, 2 * r as u64).unwrap() as u64
    }

    /// Number of cycles of type r: N^{2(M+1−r)}.
    pub fn cycle_count(&self, r: u32) -> u64 {
        pow_checked(self.n, 2 * (self.m + 1 - r) as u64).unwrap() as u64
    }

    /// Length in symbols of one cycle of type r.
    pub fn cycle_length(&self, r: u32) -> u64 {
        self.run_blocks(r) * self.n * self.l
    }

    /// Occurrences of every block in a pattern: T·N^{2M+2}.
    pub fn block_multiplicity(&self) -> u64 {
        self.t * pow_checked(self.n, 2 * self.m as u64 + 2).unwrap() as u64
    }

    /// The smallest run length in symbols over all types (type 1).
    pub fn min_run_symbols(&self) -> u64 {
        self.run_blocks(1) * self.l
    }

    pub fn pattern(&self, r: u32) -> Result<FeldmanPattern<'_>> {
        if r == 0 || r > self.m {
            return invalid(format!("pattern type {r} outside 1..={}", self.m));
        }
        Ok(FeldmanPattern { spec: self, r, len: self.pattern_length()? })
    }
}

/// Lazy view of the type-r pattern of a spec.
#[derive(Clone, Copy, Debug)]
pub struct FeldmanPattern<'a> {
    spec: &'a FeldmanSpec,
    r: u32,
    len: u64,
}

impl FeldmanPattern<'_> {
    pub fn len(&self) -> u64 {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn pattern_type(&self) -> u32 {
        self.r
    }

    /// Index (0-based) of the block covering `pos` and the offset inside it.
    pub fn block_at(&self, pos: u64) -> (usize, u64) {
        let run = self.spec.run_blocks(self.r) * self.spec.l;
        let cycle = run * self.spec.n;
        (((pos % cycle) / run) as usize, pos % self.spec.l)
    }

    pub fn symbol_at(&self, pos: u64) -> u32 {
        let (b, off) = self.block_at(pos);
        self.spec.blocks[b].symbols[off as usize]
    }

    /// Run-length encoding of the window [start, start + len).
    pub fn window_runs(&self, start: u64, len: u64) -> Result<Vec<(u32, u64)>> {
        if start.checked_add(len).map_or(true, |e| e > self.len) {
            return invalid("window exceeds pattern length");
        }
        let l = self.spec.l;
        let run = self.spec.run_blocks(self.r) * l;
        let mut out: Vec<(u32, u64)> = Vec::new();
        let push = |x: u32, k: u64, out: &mut Vec<(u32, u64)>| match out.last_mut() {
            Some((y, c)) if *y == x => *c += k,
            _ => out.push((x, k)),
        };
        let block_rle: Vec<Vec<(u32, u64)>> =
            self.spec.blocks.iter().map(|b| run_length_encode(&b.symbols)).collect();
        let mut pos = start;
        let end = start + len;
        while pos < end {
            let (b, _) = self.block_at(pos);
            let run_end = ((pos / run) + 1) * run;
            let seg_end = run_end.min(end);
            let rle = &block_rle[b];
            if rle.len() == 1 {
                push(rle[0].0, seg_end - pos, &mut out);
            } else {
                let block = &self.spec.blocks[b].symbols;
                for p in pos..seg_end {
                    push(block[(p % l) as usize], 1, &mut out);
                }
            }
            pos = seg_end;
        }
        Ok(out)
    }

    /// Materializes the window [start, start + len) within `budget` symbols.
    pub fn window(&self, start: u64, len: u64, budget: u64) -> Result<Vec<u32>> {
        if len > budget {
            return Err(Error::Budget {
                what: "Feldman window".into(),
                required: len as u128,
                cap: budget as u128,
            });
        }
        let runs = self.window_runs(start, len)?;
        let mut out = Vec::with_capacity(len as usize);
        for (x, c) in runs {
            out.extend(std::iter::repeat(x).take(c as usize));
        }
        Ok(out)
    }
}

/// Materializes the type-r pattern, failing beyond `budget` symbols.
pub fn build_pattern(spec: &FeldmanSpec, r: u32, budget: u64) -> Result<SymbolString> {
    let p = spec.pattern(r)?;
    Ok(SymbolString::new(p.window(0, p.len(), budget)?))
}

/// Splits a materialized type-r pattern into its cycles, confirming they are
/// identical and that the cycle count is N^{2(M+1−r)}.
pub fn cycle_decomposition(spec: &FeldmanSpec, r: u32, pattern: &[u32]) -> Result<Vec<Vec<u32>>> {
    let cl = spec.cycle_length(r) as usize;
    if cl == 0 || pattern.len() % cl != 0 {
        return invalid("pattern length is not a multiple of the cycle length");
    }
    let cycles: Vec<Vec<u32>> = pattern.chunks(cl).map(|c| c.to_vec()).collect();
    if cycles.windows(2).any(|w| w[0] != w[1]) {
        return invalid("cycles differ");
    }
    if cycles.len() as u64 != spec.cycle_count(r) {
        return invalid(format!("{} cycles, expected {}", cycles.len(), spec.cycle_count(r)));
    }
    Ok(cycles)
}

/// Replaces every skeleton symbol a by block A_a.
pub fn substitute_blocks(
    skeleton: &[u32],
    block_map: &BTreeMap<u32, SymbolString>,
) -> Result<SymbolString> {
    let mut lens = block_map.values().map(|b| b.len());
    if let Some(first) = lens.next() {
        if lens.any(|l| l != first) {
            return invalid("blocks of a substitution must share one length");
        }
    }
    let shaded = !block_map.is_empty() && block_map.values().all(|b| b.shading.is_some());
    let mut symbols = Vec::new();
    let mut shading = Vec::new();
    for a in skeleton {
        let b = block_map
            .get(a)
            .ok_or_else(|| Error::InvalidInput(format!("skeleton symbol {a} has no block")))?;
        symbols.extend_from_slice(&b.symbols);
        if shaded {
            shading.extend_from_slice(b.shading.as_ref().unwrap());
        }
    }
    Ok(SymbolString { symbols, shading: shaded.then_some(shading) })
}

/// Least f̄ between substrings of length ≥ ⌈L/R⌉ taken from two different
/// blocks — the block-separation hypothesis of symbol-by-block replacement.
pub fn block_separation(blocks: &[SymbolString], r: u64) -> Result<Option<Rational>> {
    let l = blocks.first().map_or(0, |b| b.len());
    let min_len = (l as u64).div_ceil(r).max(1) as usize;
    let mut best: Option<Rational> = None;
    for (x, a) in blocks.iter().enumerate() {
        for b in blocks.iter().skip(x + 1) {
            for (sa, la) in substrings(a.len(), min_len) {
                for (sb, lb) in substrings(b.len(), min_len) {
                    let f = fbar(
                        &SymbolString::new(a.symbols[sa..sa + la].to_vec()),
                        &SymbolString::new(b.symbols[sb..sb + lb].to_vec()),
                    )?;
                    best = Some(best.map_or(f, |v: Rational| v.min(f)));
                }
            }
        }
    }
    Ok(best)
}

fn substrings(len: usize, min_len: usize) -> impl Iterator<Item = (usize, usize)> {
    (min_len..=len).flat_map(move |l| (0..=len - l).map(move |s| (s, l)))
}

/// Per-type-pair minimum of the sampled f̄ values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairMinimum {
    pub r: u32,
    pub k: u32,
    #[serde(with = "crate::io::rational_serde")]
    pub min_fbar: Rational,
    pub samples: usize,
}

/// Empirical separation between distinct pattern types.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeparationReport {
    #[serde(with = "crate::io::rational_serde")]
    pub alpha_measured: Rational,
    pub sample_count: usize,
    pub min_substring_length: u64,
    pub pairs_tested: Vec<PairMinimum>,
}

/// One sampled substring pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampledPair {
    pub r: u32,
    pub k: u32,
    pub start_r: u64,
    pub len_r: u64,
    pub start_k: u64,
    pub len_k: u64,
}

/// Patterns up to this length are sampled at arbitrary offsets; longer ones on
/// multiples of the smallest run length so run-length contraction applies.
pub const UNALIGNED_SAMPLING_LIMIT: u64 = 1 << 16;

fn sample_window(rng: &mut ChaCha8Rng, total: u64, min_len: u64, unit: u64) -> (u64, u64) {
    if total <= UNALIGNED_SAMPLING_LIMIT {
        let len = rng.gen_range(min_len..=total.min(2 * min_len).max(min_len));
        (rng.gen_range(0..=total - len), len)
    } else {
        let len = (min_len.div_ceil(unit) * unit).min(total);
        let slots = (total - len) / unit;
        (rng.gen_range(0..=slots) * unit, len)
    }
}

/// Draws the substring pairs used by [`separation_report`]; type pairs are visited round-robin.
pub fn sample_pairs(spec: &FeldmanSpec, min_len: u64, samples: usize, seed: u64) -> Result<Vec<SampledPair>> {
    let total = spec.pattern_length()?;
    if min_len == 0 || min_len > total {
        return invalid(format!("min_len must lie in 1..={total}"));
    }
    let type_pairs: Vec<(u32, u32)> =
        (1..=spec.m).flat_map(|r| (r + 1..=spec.m).map(move |k| (r, k))).collect();
    if type_pairs.is_empty() {
        return Ok(Vec::new());
    }
    let unit = spec.min_run_symbols();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..samples)
        .map(|i| {
            let (r, k) = type_pairs[i % type_pairs.len()];
            let (start_r, len_r) = sample_window(&mut rng, total, min_len, unit);
            let (start_k, len_k) = sample_window(&mut rng, total, min_len, unit);
            SampledPair { r, k, start_r, len_r, start_k, len_k }
        })
        .collect())
}

/// Exact f̄ of one sampled pair, through run-length contraction.
pub fn pair_fbar(spec: &FeldmanSpec, pair: &SampledPair) -> Result<Rational> {
    let a = spec.pattern(pair.r)?.window_runs(pair.start_r, pair.len_r)?;
    let b = spec.pattern(pair.k)?.window_runs(pair.start_k, pair.len_k)?;
    let l = lcs_runs(&a, &b);
    fbar_from_lcs(l as usize, pair.len_r as usize, pair.len_k as usize)
}

/// Samples substring pairs of length ≥ `min_len` from distinct types and
/// records exact f̄ minima; deterministic given the seed.
pub fn separation_report(spec: &FeldmanSpec, min_len: u64, samples: usize, seed: u64) -> Result<SeparationReport> {
    let pairs = sample_pairs(spec, min_len, samples, seed)?;
    let values: Vec<Rational> = pairs.par_iter().map(|p| pair_fbar(spec, p)).collect::<Result<_>>()?;
    let mut minima: BTreeMap<(u32, u32), (Rational, usize)> = BTreeMap::new();
    for (p, v) in pairs.iter().zip(&values) {
        let e = minima.entry((p.r, p.k)).or_insert((*v, 0));
        e.0 = e.0.min(*v);
        e.1 += 1;
    }
    let pairs_tested: Vec<PairMinimum> = minima
        .into_iter()
        .map(|((r, k), (min_fbar, samples))| PairMinimum { r, k, min_fbar, samples })
        .collect();
    let alpha_measured = pairs_tested
        .iter()
        .map(|p| p.min_fbar)
        .min()
        .unwrap_or_else(|| Rational::from_integer(1));
    Ok(SeparationReport {
        alpha_measured,
        sample_count: pairs.len(),
        min_substring_length: min_len,
        pairs_tested,
    })
}

/// Whether value ≥ α − c/√N − 1/R, decided exactly (`inv_r` is 1/R; pass 0 to drop the term).
pub fn meets_sqrt_bound(value: Rational, alpha: Rational, c: i64, n: u64, inv_r: Rational) -> bool {
    // value ≥ α − 1/R − c/√N  ⇔  x := α − 1/R − value ≤ c/√N
    let x = alpha - inv_r - value;
    if x <= Rational::from_integer(0) {
        return true;
    }
    x * x <= Rational::new(c * c, n as i64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_expanded_small_pattern() {
        let spec = FeldmanSpec::distinct_symbols(1, 2, 1, 1).unwrap();
        let p = build_pattern(&spec, 1, DEFAULT_BUDGET).unwrap();
        let cycle = [0, 0, 0, 0, 1, 1, 1, 1];
        let expected: Vec<u32> = cycle.iter().copied().cycle().take(32).collect();
        assert_eq!(p.symbols, expected);
    }

    #[test]
    fn window_runs_match_symbol_lookup_with_mixed_blocks() {
        let blocks = vec![
            SymbolString::new(vec![0, 1, 1]),
            SymbolString::new(vec![2, 2, 0]),
            SymbolString::new(vec![1, 1, 1]),
        ];
        let spec = FeldmanSpec::new(1, 3, 1, 3, blocks).unwrap();
        for r in 1..=1 {
            let p = spec.pattern(r).unwrap();
            for (start, len) in [(0, 40), (5, 100), (7, 1), (200, 300)] {
                let w = p.window(start, len, DEFAULT_BUDGET).unwrap();
                let direct: Vec<u32> = (start..start + len).map(|i| p.symbol_at(i)).collect();
                assert_eq!(w, direct);
            }
        }
    }

    #[test]
    fn oversized_patterns_are_rejected() {
        let spec = FeldmanSpec::distinct_symbols(1, 20, 2, 1).unwrap();
        assert!(build_pattern(&spec, 1, 1000).is_err());
        assert!(spec.pattern(3).is_err());
    }

    #[test]
    fn sqrt_bound_is_exact() {
        // 1 − 4/√20 ≈ 0.1056
        let one = Rational::from_integer(1);
        let zero = Rational::from_integer(0);
        assert!(!meets_sqrt_bound(Rational::new(105, 1000), one, 4, 20, zero));
        assert!(meets_sqrt_bound(Rational::new(106, 1000), one, 4, 20, zero));
        // with α = 1 and R = 2 the bound is negative, hence vacuous
        assert!(meets_sqrt_bound(zero, one, 4, 20, Rational::new(1, 2)));
    }
}
