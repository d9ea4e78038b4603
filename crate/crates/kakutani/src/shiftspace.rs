//! The shaded shift space: segments of points built from stage-n words with
//! independent fair-coin shading, cylinder measures, return times to the set
//! A = {υ_0 = 0} and the R9 shading-equidistribution statistic.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::construction::{ConstructionSequence, Materializer};
use crate::error::{invalid, Error, Result};
use crate::fbar::SymbolString;

/// Cap on symbols materialized by sampling and parsing helpers.
pub const DEFAULT_BUDGET: u64 = 1 << 26;

/// A finite window of a point of the shaded shift space.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampledSegment {
    pub n: usize,
    /// Shaded symbols of the window.
    pub segment: SymbolString,
    /// Position inside the first word at which the window starts.
    pub offset: usize,
    /// n-words covering the window, in order.
    pub word_ids: Vec<usize>,
}

/// A window of `length` symbols starting at a uniform offset inside a
/// concatenation of independently uniform n-words, with fair-coin shading
/// when `shaded`.
pub fn sample_point(seq: &ConstructionSequence, n: usize, length: usize, seed: u64, shaded: bool) -> Result<SampledSegment> {
    sample_point_with_budget(seq, n, length, seed, shaded, DEFAULT_BUDGET)
}

pub fn sample_point_with_budget(
    seq: &ConstructionSequence,
    n: usize,
    length: usize,
    seed: u64,
    shaded: bool,
    budget: u64,
) -> Result<SampledSegment> {
    let stage = seq.stage(n)?;
    if length as u64 > budget {
        return Err(Error::Budget { what: "sampled segment".into(), required: length as u128, cap: budget as u128 });
    }
    let h = stage.h as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let offset = rng.gen_range(0..h);
    let blocks = (offset + length).div_ceil(h);
    let mut cache = Materializer::new(seq, n, budget)?;
    let mut word_ids = Vec::with_capacity(blocks);
    let mut symbols = Vec::with_capacity(blocks * h);
    for _ in 0..blocks {
        let w = rng.gen_range(0..stage.word_count());
        word_ids.push(w);
        symbols.extend_from_slice(cache.get(w)?);
    }
    let symbols = symbols[offset..offset + length].to_vec();
    let segment = if shaded {
        let bits = (0..length).map(|_| rng.gen::<bool>()).collect();
        SymbolString::shaded(symbols, bits)?
    } else {
        SymbolString::new(symbols)
    };
    Ok(SampledSegment { n, segment, offset, word_ids })
}

/// ν′(⟨w⟩) for an n-word: aligned-block weight 1/|W_n| averaged over the h_n offsets.
pub fn word_measure(seq: &ConstructionSequence, n: usize, word: usize) -> Result<BigRational> {
    let stage = seq.stage(n)?;
    if word >= stage.word_count() {
        return invalid(format!("word {word} outside W_{n}"));
    }
    Ok(BigRational::new(BigInt::one(), BigInt::from(stage.h) * BigInt::from(stage.word_count())))
}

/// ν(⟨(w, υ)⟩) = ν′(⟨w⟩)/2^{h_n}.
pub fn cylinder_measure(seq: &ConstructionSequence, n: usize, word: usize, shading: &[bool]) -> Result<BigRational> {
    let stage = seq.stage(n)?;
    if shading.len() as u64 != stage.h {
        return invalid(format!("shading of length {} for words of length {}", shading.len(), stage.h));
    }
    let two_h = BigInt::one() << usize::try_from(stage.h).map_err(|_| Error::InvalidInput("h_n too large".into()))?;
    Ok(word_measure(seq, n, word)? / BigRational::from_integer(two_h))
}

/// Σ over all (w, υ) ∈ 𝒱_n of the aligned-block weight h_n·ν(⟨(w, υ)⟩),
/// grouping the 2^{h_n} shadings of each word (all of equal measure).
pub fn block_weight_total(seq: &ConstructionSequence, n: usize) -> Result<BigRational> {
    let stage = seq.stage(n)?;
    let h = usize::try_from(stage.h).map_err(|_| Error::InvalidInput("h_n too large".into()))?;
    let shadings = BigRational::from_integer(BigInt::one() << h);
    let zero_shading = vec![false; h];
    let mut total = BigRational::from_integer(BigInt::from(0));
    for w in 0..stage.word_count() {
        let nu = cylinder_measure(seq, n, w, &zero_shading)?;
        total += nu * &shadings * BigRational::from_integer(BigInt::from(stage.h));
    }
    Ok(total)
}

/// Gaps between successive positions whose shading bit is 0 (visits to A).
pub fn induced_return_times(segment: &SymbolString) -> Result<Vec<u64>> {
    let shading = segment.shading.as_ref().ok_or_else(|| Error::InvalidInput("segment is unshaded".into()))?;
    if shading.is_empty() {
        return invalid("empty segment");
    }
    let visits: Vec<usize> = shading.iter().enumerate().filter(|(_, &b)| !b).map(|(i, _)| i).collect();
    Ok(visits.windows(2).map(|w| (w[1] - w[0]) as u64).collect())
}

/// Total-variation distance between the empirical gap law and Geometric(1/2)
/// on {1, …, cap − 1} with the tail {≥ cap} lumped together.
pub fn geometric_tv_distance(gaps: &[u64], cap: u64) -> Result<f64> {
    if gaps.is_empty() || cap < 2 {
        return invalid("need gaps and a cap ≥ 2");
    }
    let mut counts = vec![0u64; cap as usize + 1];
    for &g in gaps {
        if g == 0 {
            return invalid("return times are positive");
        }
        counts[g.min(cap) as usize] += 1;
    }
    let total = gaps.len() as f64;
    let mut tv = 0.0;
    for k in 1..cap {
        tv += (counts[k as usize] as f64 / total - 0.5f64.powi(k as i32)).abs();
    }
    tv += (counts[cap as usize] as f64 / total - 0.5f64.powi(cap as i32 - 1)).abs();
    Ok(tv / 2.0)
}

/// Fraction of shaded positions.
pub fn shading_mean(segment: &SymbolString) -> Result<f64> {
    let shading = segment.shading.as_ref().ok_or_else(|| Error::InvalidInput("segment is unshaded".into()))?;
    if shading.is_empty() {
        return invalid("empty segment");
    }
    Ok(shading.iter().filter(|&&b| b).count() as f64 / shading.len() as f64)
}

/// Pearson correlation between symbol id and shading bit.
pub fn symbol_shading_correlation(segment: &SymbolString) -> Result<f64> {
    let shading = segment.shading.as_ref().ok_or_else(|| Error::InvalidInput("segment is unshaded".into()))?;
    let n = shading.len() as f64;
    if n < 2.0 {
        return invalid("need at least two positions");
    }
    let xs: Vec<f64> = segment.symbols.iter().map(|&s| s as f64).collect();
    let ys: Vec<f64> = shading.iter().map(|&b| b as u8 as f64).collect();
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let cov: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let vx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let vy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if vx == 0.0 || vy == 0.0 {
        return Ok(0.0);
    }
    Ok(cov / (vx * vy).sqrt())
}

/// rev(x)(k) = x(−k) on a finite window: index reversal, shading carried along.
pub fn reverse_point(segment: &SymbolString) -> SymbolString {
    segment.reversed()
}

/// Dictionary of materialized n-words (optionally reversed) for parsing.
pub struct WordParser {
    h: usize,
    index: HashMap<Vec<u32>, usize>,
}

impl WordParser {
    pub fn new(seq: &ConstructionSequence, n: usize, reversed: bool, budget: u64) -> Result<Self> {
        let stage = seq.stage(n)?;
        let required = stage.h as u128 * stage.word_count() as u128;
        if required > budget as u128 {
            return Err(Error::Budget { what: format!("stage-{n} dictionary"), required, cap: budget as u128 });
        }
        let mut index = HashMap::with_capacity(stage.word_count());
        for w in 0..stage.word_count() {
            let mut s = seq.word_symbols(n, w, budget)?;
            if reversed {
                s.reverse();
            }
            index.insert(s, w);
        }
        Ok(Self { h: stage.h as usize, index })
    }

    /// Word ids of an aligned concatenation, or None if some block is not a word.
    pub fn parse_aligned(&self, symbols: &[u32]) -> Option<Vec<usize>> {
        if symbols.len() % self.h != 0 {
            return None;
        }
        symbols.chunks(self.h).map(|c| self.index.get(c).copied()).collect()
    }

    /// Every offset o < h at which all complete blocks of `symbols[o..]` are words.
    pub fn consistent_offsets(&self, symbols: &[u32]) -> Vec<usize> {
        (0..self.h.min(symbols.len()))
            .filter(|&o| {
                let blocks = (symbols.len() - o) / self.h;
                blocks > 0 && (0..blocks).all(|b| self.index.contains_key(&symbols[o + b * self.h..o + (b + 1) * self.h]))
            })
            .collect()
    }
}

/// Result of the R9 count test on one (n+1)-word.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct R9Report {
    pub n: usize,
    pub word: usize,
    /// Shadings of the (n+1)-word examined.
    pub shadings_tested: u64,
    /// Of those, how many satisfied |R_{i,j}/f_n − 2^{−h_n}| < 2^{−h_n}/2 for all (i, j).
    pub shadings_passing: u64,
    pub passing_fraction: f64,
    /// Whether all 2^{h_{n+1}} shadings were enumerated.
    pub exhaustive: bool,
}

/// Whether one shading of an (n+1)-word equidistributes the shadings of every
/// n-word over its f_n occurrences within the R9 tolerance.
pub fn r9_holds(components: &[u32], prev_h: usize, prev_word_count: usize, shading: &[bool]) -> Result<bool> {
    if shading.len() != components.len() * prev_h {
        return invalid("shading length does not match the word");
    }
    if prev_h >= 32 {
        // 2^{h_n} patterns cannot all occur among f_n < 2^{h_n} occurrences; R_{i,j} = 0 violates the bound.
        return Ok(false);
    }
    let patterns = 1u64 << prev_h;
    let mut counts: HashMap<(u32, u64), u64> = HashMap::new();
    let mut occurrences = vec![0u64; prev_word_count];
    for (b, &w) in components.iter().enumerate() {
        let code = shading[b * prev_h..(b + 1) * prev_h].iter().fold(0u64, |acc, &x| acc << 1 | x as u64);
        *counts.entry((w, code)).or_insert(0) += 1;
        occurrences[w as usize] += 1;
    }
    for (w, &f) in occurrences.iter().enumerate() {
        if f == 0 {
            continue;
        }
        for code in 0..patterns {
            let r = counts.get(&(w as u32, code)).copied().unwrap_or(0);
            // |R/f − 2^{−h}| < 2^{−h}/2  ⇔  2·|R·2^h − f| < f
            if 2 * (r * patterns).abs_diff(f) >= f {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// R9 on word `word` of stage n+1: exhaustive over shadings when 2^{h_{n+1}}
/// ≤ `exhaustive_cap`, otherwise `samples` seeded random shadings.
pub fn check_r9(
    seq: &ConstructionSequence,
    n: usize,
    word: usize,
    samples: u64,
    exhaustive_cap: u64,
    seed: u64,
) -> Result<R9Report> {
    let prev = seq.stage(n)?;
    let stage = seq.stage(n + 1)?;
    let components = stage.words.get(word).ok_or_else(|| Error::InvalidInput(format!("word {word} outside W_{}", n + 1)))?;
    let h = stage.h as usize;
    let prev_h = prev.h as usize;
    let exhaustive = h < 63 && (1u64 << h) <= exhaustive_cap;
    let (mut tested, mut passing) = (0u64, 0u64);
    if exhaustive {
        for code in 0..(1u64 << h) {
            let shading: Vec<bool> = (0..h).map(|i| code >> i & 1 == 1).collect();
            tested += 1;
            passing += r9_holds(components, prev_h, prev.word_count(), &shading)? as u64;
        }
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..samples {
            let shading: Vec<bool> = (0..h).map(|_| rng.gen()).collect();
            tested += 1;
            passing += r9_holds(components, prev_h, prev.word_count(), &shading)? as u64;
        }
    }
    if tested == 0 {
        return invalid("no shadings tested");
    }
    Ok(R9Report {
        n,
        word,
        shadings_tested: tested,
        shadings_passing: passing,
        passing_fraction: passing as f64 / tested as f64,
        exhaustive,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn return_times_on_small_shadings() {
        let s = SymbolString::shaded(vec![0; 4], vec![false, true, true, false]).unwrap();
        assert_eq!(induced_return_times(&s).unwrap(), vec![3]);
        let z = SymbolString::shaded(vec![0; 5], vec![false; 5]).unwrap();
        assert_eq!(induced_return_times(&z).unwrap(), vec![1; 4]);
        assert!(induced_return_times(&SymbolString::new(vec![0])).is_err());
    }

    #[test]
    fn exact_geometric_law_has_zero_distance() {
        let mut gaps = Vec::new();
        for k in 1..=10u64 {
            gaps.extend(std::iter::repeat(k).take(1 << (10 - k)));
        }
        gaps.push(11);
        assert!(geometric_tv_distance(&gaps, 20).unwrap() < 1e-3);
    }

    #[test]
    fn r9_exact_uniformity_and_constant_failure() {
        // Two words of length 1, each occurring 4 times: shadings 0,1 twice each.
        let comps = [0, 1, 0, 1, 0, 1, 0, 1];
        let good = [false, false, true, true, false, false, true, true];
        assert!(r9_holds(&comps, 1, 2, &good).unwrap());
        assert!(!r9_holds(&comps, 1, 2, &[true; 8]).unwrap());
    }
}
