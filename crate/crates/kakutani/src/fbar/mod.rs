//! The f̄ match distance.
//!
//! A match between strings a (length n) and b (length m) is a set of index
//! pairs, strictly increasing in both coordinates, pairing equal symbols.
//! f̄(a, b) = 1 − 2·(largest match size)/(n + m), returned as an exact rational.
//! When both strings carry shadings, a match must also pair equal shading bits.

pub mod lcs;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Exact rational used for every f̄ value and inequality in the crate.
pub type Rational = Ratio<i64>;

/// A finite string of symbol ids with an optional shading bit per position.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SymbolString {
    pub symbols: Vec<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shading: Option<Vec<bool>>,
}

impl SymbolString {
    pub fn new(symbols: Vec<u32>) -> Self {
        Self { symbols, shading: None }
    }

    /// A shaded string; the shading must have one bit per symbol.
    pub fn shaded(symbols: Vec<u32>, shading: Vec<bool>) -> Result<Self> {
        if symbols.len() != shading.len() {
            return invalid(format!(
                "shading has {} bits for {} symbols",
                shading.len(),
                symbols.len()
            ));
        }
        Ok(Self { symbols, shading: Some(shading) })
    }

    /// Parses letters as consecutive ids starting at `a` (test and example convenience).
    pub fn from_letters(s: &str) -> Self {
        Self::new(s.bytes().map(|c| (c - b'a') as u32).collect())
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    /// The string with its shading removed.
    pub fn projection(&self) -> Self {
        Self::new(self.symbols.clone())
    }

    /// Index-reversed string (shading reversed with it).
    pub fn reversed(&self) -> Self {
        let mut symbols = self.symbols.clone();
        symbols.reverse();
        let shading = self.shading.as_ref().map(|s| s.iter().rev().copied().collect());
        Self { symbols, shading }
    }

    /// Checks every id against the declared alphabet size (spacers included by the caller).
    pub fn check_alphabet(&self, alphabet_size: u32) -> Result<()> {
        match self.symbols.iter().find(|&&x| x >= alphabet_size) {
            Some(x) => invalid(format!("symbol {x} outside alphabet of size {alphabet_size}")),
            None => Ok(()),
        }
    }

    /// Comparison keys: symbols alone, or symbol and shading bit combined.
    pub fn keys(&self, shaded: bool) -> Vec<u32> {
        match (&self.shading, shaded) {
            (Some(sh), true) => self
                .symbols
                .iter()
                .zip(sh)
                .map(|(&x, &bit)| x * 2 + bit as u32)
                .collect(),
            _ => self.symbols.clone(),
        }
    }
}

/// Match as 1-based index pairs.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Match {
    pub pairs: Vec<(usize, usize)>,
}

impl Match {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Checks monotonicity and symbol (and shading) agreement against the two strings.
    pub fn is_valid_for(&self, a: &SymbolString, b: &SymbolString) -> bool {
        let shaded = a.shading.is_some() && b.shading.is_some();
        let (ka, kb) = (a.keys(shaded), b.keys(shaded));
        let mut last = (0usize, 0usize);
        for &(i, j) in &self.pairs {
            if i <= last.0 || j <= last.1 || i > ka.len() || j > kb.len() || ka[i - 1] != kb[j - 1] {
                return false;
            }
            last = (i, j);
        }
        true
    }
}

fn shaded_mode(a: &SymbolString, b: &SymbolString) -> bool {
    a.shading.is_some() && b.shading.is_some()
}

/// f̄ from a match size and the two lengths.
pub fn fbar_from_lcs(lcs: usize, n: usize, m: usize) -> Result<Rational> {
    if n + m == 0 {
        return Err(Error::EmptyPair);
    }
    let total = (n + m) as i64;
    Ok(Rational::new(total - 2 * lcs as i64, total))
}

/// Exact f̄ distance.
pub fn fbar(a: &SymbolString, b: &SymbolString) -> Result<Rational> {
    let shaded = shaded_mode(a, b);
    fbar_keys(&a.keys(shaded), &b.keys(shaded))
}

/// Exact f̄ distance between raw key sequences.
pub fn fbar_keys(a: &[u32], b: &[u32]) -> Result<Rational> {
    if a.is_empty() && b.is_empty() {
        return Err(Error::EmptyPair);
    }
    fbar_from_lcs(lcs::lcs_len(a, b), a.len(), b.len())
}

/// f̄ of the symbol projections; equals the least shaded f̄ over all shadings of `b`.
pub fn fbar_symbol_projection(a: &SymbolString, b: &SymbolString) -> Result<Rational> {
    if a.shading.is_none() {
        return invalid("first argument must carry a shading");
    }
    if b.shading.is_some() {
        return invalid("second argument must be unshaded");
    }
    fbar_keys(&a.symbols, &b.symbols)
}

/// Largest match size below which f̄ stays at or above `epsilon`: returns
/// the least LCS value L with 1 − 2L/(n+m) < ε.
pub fn lcs_threshold_for(epsilon: Rational, n: usize, m: usize) -> usize {
    // 1 − 2L/T < p/q  ⇔  2Lq > (q − p)T  ⇔  L > (q − p)T/(2q)
    let (p, q) = (*epsilon.numer() as i128, *epsilon.denom() as i128);
    let t = (n + m) as i128;
    let num = (q - p) * t;
    let den = 2 * q;
    if num < 0 {
        return 0;
    }
    (num / den + 1) as usize
}

/// Outcome of a thresholded f̄ evaluation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Thresholded {
    /// f̄ is below the threshold and this is its exact value.
    Exact(Rational),
    /// f̄ is certified to be at least the threshold.
    AtLeast(Rational),
}

/// Exact f̄ when it is below `epsilon`; otherwise a certificate that it is ≥ `epsilon`.
pub fn fbar_below(a: &[u32], b: &[u32], epsilon: Rational) -> Result<Thresholded> {
    if a.is_empty() && b.is_empty() {
        return Err(Error::EmptyPair);
    }
    let t = lcs_threshold_for(epsilon, a.len(), b.len());
    Ok(match lcs::lcs_at_least(a, b, t) {
        Some(l) => Thresholded::Exact(fbar_from_lcs(l, a.len(), b.len())?),
        None => Thresholded::AtLeast(epsilon),
    })
}

/// A best possible match; among all maximum matches the lexicographically
/// least list of pairs.
pub fn best_match(a: &SymbolString, b: &SymbolString) -> Result<Match> {
    let shaded = shaded_mode(a, b);
    best_match_keys(&a.keys(shaded), &b.keys(shaded))
}

/// [`best_match`] on raw key sequences.
pub fn best_match_keys(a: &[u32], b: &[u32]) -> Result<Match> {
    if a.is_empty() && b.is_empty() {
        return Err(Error::EmptyPair);
    }
    let (n, m) = (a.len(), b.len());
    let cells = (n as u128 + 1) * (m as u128 + 1);
    const CAP: u128 = 1 << 28;
    if cells > CAP {
        return Err(Error::Budget { what: "best-match table".into(), required: cells, cap: CAP });
    }
    let s = lcs::suffix_lcs_table(a, b);
    let w = m + 1;
    let mut need = s[0] as usize;
    let mut pairs = Vec::with_capacity(need);
    let (mut pi, mut pj) = (0usize, 0usize);
    while need > 0 {
        // the least i admitting an extension to a maximum match, then the least j for it;
        // for fixed i the earliest equal symbol leaves the longest suffix, so it suffices
        let mut found = false;
        for i in pi..n {
            if let Some(j) = (pj..m).find(|&j| b[j] == a[i]) {
                if s[(i + 1) * w + j + 1] as usize + 1 >= need {
                    pairs.push((i + 1, j + 1));
                    pi = i + 1;
                    pj = j + 1;
                    need -= 1;
                    found = true;
                    break;
                }
            }
        }
        if !found {
            return Err(Error::Invariant("best match reconstruction stalled".into()));
        }
    }
    Ok(Match { pairs })
}

/// Exhaustive oracle: the largest match found by trying every subset of
/// positions of the shorter string; limited to n + m ≤ 24.
pub fn fbar_oracle(a: &SymbolString, b: &SymbolString) -> Result<Rational> {
    let (n, m) = (a.len(), b.len());
    if n + m > 24 {
        return invalid(format!("oracle domain is n + m ≤ 24, got {}", n + m));
    }
    if n + m == 0 {
        return Err(Error::EmptyPair);
    }
    let shaded = shaded_mode(a, b);
    let (ka, kb) = (a.keys(shaded), b.keys(shaded));
    let (short, long) = if ka.len() <= kb.len() { (ka, kb) } else { (kb, ka) };
    let mut best = 0u32;
    for mask in 0u32..(1u32 << short.len()) {
        let size = mask.count_ones();
        if size <= best {
            continue;
        }
        let mut pos = 0usize;
        let embeds = (0..short.len()).filter(|&i| mask >> i & 1 == 1).all(|i| {
            match long[pos..].iter().position(|&y| y == short[i]) {
                Some(off) => {
                    pos += off + 1;
                    true
                }
                None => false,
            }
        });
        if embeds {
            best = size;
        }
    }
    fbar_from_lcs(best as usize, n, m)
}

/// Splits two strings into consecutive corresponding pieces along a match:
/// piece t of each string runs from just after the (t−1)-th matched index
/// through the t-th matched index, and a final piece holds the unmatched tails.
/// Returns half-open 0-based ranges; pieces that are empty on both sides are dropped.
pub fn match_decomposition(
    n: usize,
    m: usize,
    matching: &Match,
) -> Vec<(std::ops::Range<usize>, std::ops::Range<usize>)> {
    let mut pieces = Vec::with_capacity(matching.len() + 1);
    let (mut si, mut sj) = (0usize, 0usize);
    for &(i, j) in &matching.pairs {
        pieces.push((si..i, sj..j));
        si = i;
        sj = j;
    }
    if si < n || sj < m {
        pieces.push((si..n, sj..m));
    }
    pieces
}

/// Formats a rational as `num/den`.
pub fn format_rational(r: &Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// Parses `num/den` (or a bare integer).
pub fn parse_rational(s: &str) -> Result<Rational> {
    let bad = || Error::InvalidInput(format!("not a rational: {s:?}"));
    match s.split_once('/') {
        Some((p, q)) => {
            let p: i64 = p.trim().parse().map_err(|_| bad())?;
            let q: i64 = q.trim().parse().map_err(|_| bad())?;
            if q == 0 {
                return Err(bad());
            }
            Ok(Rational::new(p, q))
        }
        None => Ok(Rational::from_integer(s.trim().parse().map_err(|_| bad())?)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(x: &str) -> SymbolString {
        SymbolString::from_letters(x)
    }

    #[test]
    fn small_values() {
        assert_eq!(fbar(&s("abc"), &s("abc")).unwrap(), Rational::from_integer(0));
        assert_eq!(fbar(&s("aa"), &s("bb")).unwrap(), Rational::from_integer(1));
        assert_eq!(fbar(&s("ab"), &s("ba")).unwrap(), Rational::new(1, 2));
        assert_eq!(fbar(&s("abc"), &s("")).unwrap(), Rational::from_integer(1));
        assert!(matches!(fbar(&s(""), &s("")), Err(Error::EmptyPair)));
    }

    #[test]
    fn best_match_tie_break() {
        assert_eq!(best_match(&s("abc"), &s("abc")).unwrap().pairs, vec![(1, 1), (2, 2), (3, 3)]);
        assert!(best_match(&s("aa"), &s("bb")).unwrap().is_empty());
        assert_eq!(best_match(&s("ab"), &s("ba")).unwrap().pairs, vec![(1, 2)]);
    }

    #[test]
    fn shading_participates_only_when_both_sides_are_shaded() {
        let a = SymbolString::shaded(vec![0, 1], vec![false, true]).unwrap();
        let b = SymbolString::shaded(vec![0, 1], vec![true, true]).unwrap();
        assert_eq!(fbar(&a, &b).unwrap(), Rational::new(1, 2));
        assert_eq!(fbar(&a, &b.projection()).unwrap(), Rational::from_integer(0));
        assert_eq!(fbar_symbol_projection(&a, &s("ab")).unwrap(), Rational::from_integer(0));
        let aa = SymbolString::shaded(vec![0, 0], vec![false, false]).unwrap();
        assert_eq!(fbar_symbol_projection(&aa, &s("bb")).unwrap(), Rational::from_integer(1));
    }

    #[test]
    fn threshold_boundary_is_strict() {
        // ε = 1/2 on lengths 2 + 2: f̄ < 1/2 needs L = 2
        assert_eq!(lcs_threshold_for(Rational::new(1, 2), 2, 2), 2);
        assert_eq!(fbar_below(&[0, 1], &[1, 0], Rational::new(1, 2)).unwrap(),
            Thresholded::AtLeast(Rational::new(1, 2)));
        assert_eq!(fbar_below(&[0, 1], &[0, 1], Rational::new(1, 2)).unwrap(),
            Thresholded::Exact(Rational::from_integer(0)));
    }

    #[test]
    fn rational_text_round_trip() {
        let r = Rational::new(6, 8);
        assert_eq!(format_rational(&r), "3/4");
        assert_eq!(parse_rational("3/4").unwrap(), r);
    }
}
