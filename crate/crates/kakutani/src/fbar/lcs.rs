//! Longest-common-subsequence engines.
//!
//! * [`lcs_dp`]: the plain O(nm) dynamic program, two rows of memory.
//! * [`BitPattern`]: Hyyrö's bit-parallel recurrence, O(nm/64), with a
//!   threshold mode that only tracks the diagonal band an LCS of a required
//!   size can use and stops as soon as that size is out of reach.
//! * [`lcs_runs`]: exact LCS of run-length encoded strings whose run lengths
//!   share a common factor, by contracting every run by the gcd.
//!
//! All engines return identical values; the tests cross-check them.

use std::collections::HashMap;

use num_integer::Integer;

/// Strings longer than this (combined length) use the bit-parallel engine.
pub const BIT_PARALLEL_THRESHOLD: usize = 10_000;

/// Plain dynamic program.
pub fn lcs_dp<T: Eq>(a: &[T], b: &[T]) -> usize {
    let (a, b) = if a.len() < b.len() { (b, a) } else { (a, b) };
    let mut prev = vec![0u32; b.len() + 1];
    let mut cur = vec![0u32; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x == y { prev[j] + 1 } else { prev[j + 1].max(cur[j]) };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()] as usize
}

/// Table S with S[i][j] = LCS(a[i..], b[j..]), row-major with stride `b.len() + 1`.
pub fn suffix_lcs_table<T: Eq>(a: &[T], b: &[T]) -> Vec<u32> {
    let (n, m) = (a.len(), b.len());
    let w = m + 1;
    let mut s = vec![0u32; (n + 1) * w];
    for i in (0..n).rev() {
        for j in (0..m).rev() {
            s[i * w + j] = if a[i] == b[j] {
                s[(i + 1) * w + j + 1] + 1
            } else {
                s[(i + 1) * w + j].max(s[i * w + j + 1])
            };
        }
    }
    s
}

/// Match masks of a pattern string, reusable against many texts.
pub struct BitPattern {
    len: usize,
    words: usize,
    masks: Vec<u64>,
    dense: Vec<u32>,
    sparse: HashMap<u32, u32>,
}

const NO_CODE: u32 = u32::MAX;
const DENSE_LIMIT: u32 = 1 << 16;

impl BitPattern {
    pub fn new(pattern: &[u32]) -> Self {
        let words = pattern.len().div_ceil(64).max(1);
        let mut dense = Vec::new();
        let mut sparse = HashMap::new();
        let mut masks: Vec<u64> = Vec::new();
        let mut next = 0u32;
        for (i, &x) in pattern.iter().enumerate() {
            let code = if x < DENSE_LIMIT {
                if dense.len() <= x as usize {
                    dense.resize(x as usize + 1, NO_CODE);
                }
                if dense[x as usize] == NO_CODE {
                    dense[x as usize] = next;
                    next += 1;
                    masks.resize(masks.len() + words, 0);
                }
                dense[x as usize]
            } else {
                *sparse.entry(x).or_insert_with(|| {
                    next += 1;
                    masks.resize(masks.len() + words, 0);
                    next - 1
                })
            };
            masks[code as usize * words + i / 64] |= 1u64 << (i % 64);
        }
        Self { len: pattern.len(), words, masks, dense, sparse }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    fn code(&self, y: u32) -> Option<usize> {
        let c = if y < DENSE_LIMIT {
            *self.dense.get(y as usize).unwrap_or(&NO_CODE)
        } else {
            *self.sparse.get(&y).unwrap_or(&NO_CODE)
        };
        (c != NO_CODE).then_some(c as usize)
    }

    #[inline]
    fn step(&self, v: &mut [u64], code: usize, active: usize) {
        let mask = &self.masks[code * self.words..code * self.words + active];
        let mut carry = 0u64;
        for (vw, &pm) in v[..active].iter_mut().zip(mask) {
            let u = *vw & pm;
            let (s1, c1) = vw.overflowing_add(u);
            let (s2, c2) = s1.overflowing_add(carry);
            carry = (c1 | c2) as u64;
            *vw = s2 | (*vw - u);
        }
    }

    fn zeros_in_word(&self, v: &[u64], w: usize) -> u32 {
        let bits_here = (self.len - 64 * w).min(64) as u32;
        let mask = if bits_here == 64 { u64::MAX } else { (1u64 << bits_here) - 1 };
        bits_here - (v[w] & mask).count_ones()
    }

    /// Exact LCS between the pattern and `text`.
    pub fn lcs(&self, text: &[u32]) -> usize {
        if self.len == 0 {
            return 0;
        }
        let mut v = vec![u64::MAX; self.words];
        for &y in text {
            if let Some(c) = self.code(y) {
                self.step(&mut v, c, self.words);
            }
        }
        (0..self.words).map(|w| self.zeros_in_word(&v, w) as usize).sum()
    }

    /// The LCS if it is at least `threshold`, otherwise `None`.
    ///
    /// Only pattern positions inside the diagonal band that an LCS of size
    /// `threshold` can visit are updated (carries flow from low to high bits,
    /// so the band prefix is computed exactly), and every 64 text symbols an
    /// upper bound on the final value is evaluated to stop early.
    pub fn lcs_at_least(&self, text: &[u32], threshold: usize) -> Option<usize> {
        let (n, m) = (self.len, text.len());
        if threshold == 0 {
            return Some(self.lcs(text));
        }
        if threshold > n.min(m) {
            return None;
        }
        let slack = n - threshold;
        let mut v = vec![u64::MAX; self.words];
        for (j, &y) in text.iter().enumerate() {
            let processed = j + 1;
            let active = ((processed + slack) / 64 + 1).min(self.words);
            if let Some(c) = self.code(y) {
                self.step(&mut v, c, active);
            }
            if processed % 64 == 0 && processed < m {
                let mut best = n.min(m - processed);
                let mut cum = 0usize;
                for w in 0..active {
                    cum += self.zeros_in_word(&v, w) as usize;
                    let start = 64 * w;
                    best = best.max(cum + (n - start).min(m - processed));
                }
                if best < threshold {
                    return None;
                }
            }
        }
        let total: usize = (0..self.words).map(|w| self.zeros_in_word(&v, w) as usize).sum();
        (total >= threshold).then_some(total)
    }
}

/// Bit-parallel LCS.
pub fn lcs_bit_parallel(a: &[u32], b: &[u32]) -> usize {
    let (a, b) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    BitPattern::new(a).lcs(b)
}

/// LCS using the plain table for short inputs and the bit-parallel engine beyond
/// [`BIT_PARALLEL_THRESHOLD`] combined symbols.
pub fn lcs_len(a: &[u32], b: &[u32]) -> usize {
    if a.len() + b.len() > BIT_PARALLEL_THRESHOLD {
        lcs_bit_parallel(a, b)
    } else {
        lcs_dp(a, b)
    }
}

/// The LCS if it is at least `threshold`, otherwise `None`.
pub fn lcs_at_least(a: &[u32], b: &[u32], threshold: usize) -> Option<usize> {
    if a == b {
        return (a.len() >= threshold).then_some(a.len());
    }
    let (a, b) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    BitPattern::new(a).lcs_at_least(b, threshold)
}

/// A run-length encoded string: (symbol, run length) pairs.
pub type Runs = [(u32, u64)];

/// Run-length encoding of a symbol sequence.
pub fn run_length_encode(s: &[u32]) -> Vec<(u32, u64)> {
    let mut out: Vec<(u32, u64)> = Vec::new();
    for &x in s {
        match out.last_mut() {
            Some((y, len)) if *y == x => *len += 1,
            _ => out.push((x, 1)),
        }
    }
    out
}

/// Greatest common divisor of all run lengths (0 for empty input).
pub fn runs_gcd(a: &Runs, b: &Runs) -> u64 {
    a.iter().chain(b).fold(0u64, |g, &(_, l)| g.gcd(&l))
}

/// Expands runs after dividing every length by `d`.
pub fn expand_contracted(runs: &Runs, d: u64) -> Vec<u32> {
    let mut out = Vec::new();
    for &(x, l) in runs {
        out.extend(std::iter::repeat(x).take((l / d) as usize));
    }
    out
}

/// Exact LCS of two run-length encoded strings.
///
/// When every run length is a multiple of d, an optimal common subsequence can
/// be taken to use each pair of equal-symbol runs in multiples of d (the
/// constraint matrix of run-pair weights along a chain is an interval matrix,
/// hence totally unimodular), so LCS = d · LCS of the contracted strings.
pub fn lcs_runs(a: &Runs, b: &Runs) -> u64 {
    let d = runs_gcd(a, b);
    if d == 0 {
        return 0;
    }
    let ca = expand_contracted(a, d);
    let cb = expand_contracted(b, d);
    d * lcs_len(&ca, &cb) as u64
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_string(rng: &mut ChaCha8Rng, len: usize, alpha: u32) -> Vec<u32> {
        (0..len).map(|_| rng.gen_range(0..alpha)).collect()
    }

    #[test]
    fn engines_agree_on_random_strings() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let n = rng.gen_range(0..300);
            let m = rng.gen_range(0..300);
            let alpha = rng.gen_range(1..6);
            let a = random_string(&mut rng, n, alpha);
            let b = random_string(&mut rng, m, alpha);
            let dp = lcs_dp(&a, &b);
            assert_eq!(lcs_bit_parallel(&a, &b), dp);
            assert_eq!(lcs_bit_parallel(&b, &a), dp);
        }
    }

    #[test]
    fn threshold_mode_is_exact_above_and_silent_below() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..300 {
            let n = rng.gen_range(1..400);
            let a = random_string(&mut rng, n, 3);
            // near copies exercise the exact branch, unrelated strings the abort branch
            let mut b = a.clone();
            let edits = rng.gen_range(0..n / 4 + 2);
            for _ in 0..edits {
                let p = rng.gen_range(0..b.len().max(1));
                match rng.gen_range(0..3) {
                    0 if !b.is_empty() => {
                        b.remove(p);
                    }
                    1 => b.insert(p.min(b.len()), rng.gen_range(0..3)),
                    _ if !b.is_empty() => b[p] = rng.gen_range(0..3),
                    _ => {}
                }
            }
            if rng.gen_bool(0.3) {
                b = random_string(&mut rng, n, 3);
            }
            let exact = lcs_dp(&a, &b);
            let t = rng.gen_range(0..=n);
            let got = BitPattern::new(&a).lcs_at_least(&b, t);
            if exact >= t {
                assert_eq!(got, Some(exact));
            } else {
                assert_eq!(got, None);
            }
        }
    }

    #[test]
    fn run_contraction_matches_direct_lcs() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let d = rng.gen_range(1..5u64);
            let mk = |rng: &mut ChaCha8Rng| -> Vec<(u32, u64)> {
                (0..rng.gen_range(0..8)).map(|_| (rng.gen_range(0..3), d * rng.gen_range(1..4))).collect()
            };
            let a = mk(&mut rng);
            let b = mk(&mut rng);
            let direct = lcs_dp(&expand_contracted(&a, 1), &expand_contracted(&b, 1)) as u64;
            assert_eq!(lcs_runs(&a, &b), direct);
        }
    }

    #[test]
    fn suffix_table_corner_is_lcs() {
        let a = [0u32, 1, 2, 1];
        let b = [1u32, 2, 1, 0];
        assert_eq!(suffix_lcs_table(&a, &b)[0] as usize, lcs_dp(&a, &b));
    }
}
