//! Stationary codes on shaded segments, the shading-reshuffling permutation,
//! and brute-force audits that read off the group element a code realizes.

use std::collections::{BTreeMap, HashMap};
use std::ops::Range;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::construction::ConstructionSequence;
use crate::error::{invalid, Error, Result};
use crate::fbar::{fbar_below, format_rational, Rational, SymbolString, Thresholded};
use crate::involutions::{rho, GroupElement, Parity};

/// Anything that turns a shaded input segment into a shaded output segment.
pub trait SegmentMap: Sync {
    /// Symbols of context consumed at each end.
    fn half_width(&self) -> usize;
    fn map_segment(&self, input: &SymbolString) -> Result<SymbolString>;
}

/// How a stationary code computes its output symbol.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CodeRule {
    /// Output the centre symbol and bit.
    Identity,
    /// Output the same shaded symbol everywhere.
    Constant { symbol: u32, shaded: bool },
    /// Lookup from window keys (symbol·2 + bit) to an output key.
    Table(HashMap<Vec<u32>, u32>),
}

/// A code of length 2K+1: (Σ×{0,1})^{2K+1} → Σ×{0,1}, applied at every position.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StationaryCode {
    pub half_width: usize,
    pub rule: CodeRule,
}

/// On-disk form: either `{"K": k, "entries": [[window, output], …]}` with
/// shaded symbols written as `[symbol, bit]`, or `{"builtin": name, …}`.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct CodeFile {
    #[serde(rename = "K", default)]
    pub k: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub builtin: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub symbol: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shaded: Option<bool>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub entries: Vec<(Vec<(u32, u8)>, (u32, u8))>,
}

fn key((s, b): (u32, u8)) -> Result<u32> {
    if b > 1 {
        return invalid(format!("shading bit {b} is not 0 or 1"));
    }
    Ok(s * 2 + b as u32)
}

fn unkey(k: u32) -> (u32, u8) {
    (k / 2, (k % 2) as u8)
}

impl StationaryCode {
    pub fn identity() -> Self {
        Self { half_width: 0, rule: CodeRule::Identity }
    }

    pub fn constant(symbol: u32, shaded: bool) -> Self {
        Self { half_width: 0, rule: CodeRule::Constant { symbol, shaded } }
    }

    /// A uniformly random total table over an alphabet of `alphabet` symbols.
    pub fn random<R: Rng>(rng: &mut R, alphabet: u32, half_width: usize) -> Result<Self> {
        let width = 2 * half_width + 1;
        let keys = 2 * alphabet as u64;
        let size = keys.checked_pow(width as u32).filter(|&s| s <= 1 << 22).ok_or_else(|| Error::Budget {
            what: "random code table".into(),
            required: (keys as u128).saturating_pow(width as u32),
            cap: 1 << 22,
        })?;
        let mut table = HashMap::with_capacity(size as usize);
        for code in 0..size {
            let window: Vec<u32> = (0..width).map(|i| (code / keys.pow(i as u32) % keys) as u32).collect();
            table.insert(window, rng.gen_range(0..keys as u32));
        }
        Ok(Self { half_width, rule: CodeRule::Table(table) })
    }

    pub fn output(&self, window: &[u32]) -> Result<u32> {
        match &self.rule {
            CodeRule::Identity => Ok(window[self.half_width]),
            CodeRule::Constant { symbol, shaded } => Ok(symbol * 2 + *shaded as u32),
            CodeRule::Table(t) => t
                .get(window)
                .copied()
                .ok_or_else(|| Error::InvalidInput(format!("code table has no entry for window {window:?}"))),
        }
    }

    pub fn to_file(&self) -> CodeFile {
        match &self.rule {
            CodeRule::Identity => CodeFile { k: self.half_width, builtin: Some("identity".into()), ..CodeFile::default() },
            CodeRule::Constant { symbol, shaded } => CodeFile {
                k: self.half_width,
                builtin: Some("constant".into()),
                symbol: Some(*symbol),
                shaded: Some(*shaded),
                ..CodeFile::default()
            },
            CodeRule::Table(t) => {
                let sorted: BTreeMap<&Vec<u32>, &u32> = t.iter().collect();
                let entries = sorted.into_iter().map(|(w, &o)| (w.iter().map(|&x| unkey(x)).collect(), unkey(o))).collect();
                CodeFile { k: self.half_width, entries, ..CodeFile::default() }
            }
        }
    }

    pub fn from_file(file: &CodeFile) -> Result<Self> {
        let bad = |detail: String| Error::Malformed { kind: "code", detail };
        match file.builtin.as_deref() {
            Some("identity") => Ok(Self { half_width: file.k, rule: CodeRule::Identity }),
            Some("constant") => Ok(Self {
                half_width: file.k,
                rule: CodeRule::Constant { symbol: file.symbol.unwrap_or(0), shaded: file.shaded.unwrap_or(false) },
            }),
            Some(other) => Err(bad(format!("unknown builtin rule {other:?}"))),
            None => {
                let mut table = HashMap::with_capacity(file.entries.len());
                for (window, out) in &file.entries {
                    if window.len() != 2 * file.k + 1 {
                        return Err(bad(format!("window of length {} for K = {}", window.len(), file.k)));
                    }
                    let w = window.iter().map(|&x| key(x)).collect::<Result<Vec<_>>>()?;
                    if table.insert(w, key(*out)?).is_some() {
                        return Err(bad("duplicate window".into()));
                    }
                }
                if table.is_empty() {
                    return Err(bad("empty table".into()));
                }
                Ok(Self { half_width: file.k, rule: CodeRule::Table(table) })
            }
        }
    }

    pub fn read(path: &Path) -> Result<Self> {
        let file: CodeFile = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        Self::from_file(&file)
    }
}

/// φ̄(s)(l) = φ(s↾[l−K, l+K]); positions without a full window are dropped,
/// so the output is 2K symbols shorter. Unshaded input reads as all-unshaded.
pub fn apply_stationary_code(code: &StationaryCode, segment: &SymbolString) -> Result<SymbolString> {
    let k = code.half_width;
    if segment.len() <= 2 * k {
        return invalid(format!("segment of length {} is too short for a code of half-width {k}", segment.len()));
    }
    let keys = match &segment.shading {
        Some(_) => segment.keys(true),
        None => segment.symbols.iter().map(|&s| s * 2).collect(),
    };
    let out = keys.windows(2 * k + 1).map(|w| code.output(w)).collect::<Result<Vec<u32>>>()?;
    SymbolString::shaded(out.iter().map(|&x| x / 2).collect(), out.iter().map(|&x| x % 2 == 1).collect())
}

impl SegmentMap for StationaryCode {
    fn half_width(&self) -> usize {
        self.half_width
    }

    fn map_segment(&self, input: &SymbolString) -> Result<SymbolString> {
        apply_stationary_code(self, input)
    }
}

/// Plants a known η_g: an n-word w is sent to rev(w″) for the first word w″ of
/// the class g·[w]_s, with the shading reversed along with the symbols.
pub struct OracleCode {
    lookup: HashMap<Vec<u32>, Vec<u32>>,
}

impl OracleCode {
    pub fn from_eta(seq: &ConstructionSequence, n: usize, s: usize, g: &GroupElement, budget: u64) -> Result<Self> {
        if g.parity() != Parity::Odd {
            return invalid("the planted element must be odd");
        }
        let stage = seq.stage(n)?;
        let level = stage
            .levels
            .get(s)
            .ok_or_else(|| Error::InvalidInput(format!("level {s} absent at stage {n}")))?;
        let mask = level.action.group.mask(g)?;
        let mut first = vec![usize::MAX; level.class_count];
        for (w, &c) in level.class_of_word.iter().enumerate() {
            if first[c as usize] == usize::MAX {
                first[c as usize] = w;
            }
        }
        let mut lookup = HashMap::with_capacity(stage.word_count());
        for w in 0..stage.word_count() {
            let target = first[level.action.apply_mask(mask, level.class_of_word[w]) as usize];
            let mut out = seq.word_symbols(n, target, budget)?;
            out.reverse();
            lookup.insert(seq.word_symbols(n, w, budget)?, out);
        }
        Ok(Self { lookup })
    }
}

impl SegmentMap for OracleCode {
    fn half_width(&self) -> usize {
        0
    }

    fn map_segment(&self, input: &SymbolString) -> Result<SymbolString> {
        let out = self
            .lookup
            .get(&input.symbols)
            .ok_or_else(|| Error::InvalidInput("oracle code is defined on whole n-words only".into()))?;
        match &input.shading {
            Some(sh) => SymbolString::shaded(out.clone(), sh.iter().rev().copied().collect()),
            None => Ok(SymbolString::new(out.clone())),
        }
    }
}

/// Swaps shading blocks between two segments of an (n+1)-word so that the ℓ-th
/// occurrence of each n-word in `target` carries the shading of its ℓ-th
/// occurrence in `source`, and vice versa. Component ranges index n-words;
/// `block` is h_n. The result is a permutation of the input bits.
pub fn reshuffle_shading(
    components: &[u32],
    block: usize,
    source: Range<usize>,
    target: Range<usize>,
    shading: &[bool],
) -> Result<Vec<bool>> {
    if shading.len() != components.len() * block {
        return invalid("shading length does not match the word");
    }
    if source.end > components.len() || target.end > components.len() || source.len() != target.len() {
        return invalid("segments must be equally long and inside the word");
    }
    if source != target && source.start < target.end && target.start < source.end {
        return invalid("segments must coincide or be disjoint");
    }
    let positions = |r: &Range<usize>| {
        let mut by: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
        for i in r.clone() {
            by.entry(components[i]).or_default().push(i);
        }
        by
    };
    let (src, tgt) = (positions(&source), positions(&target));
    let src_counts: Vec<(u32, usize)> = src.iter().map(|(k, v)| (*k, v.len())).collect();
    let tgt_counts: Vec<(u32, usize)> = tgt.iter().map(|(k, v)| (*k, v.len())).collect();
    if src_counts != tgt_counts {
        return invalid("the two segments do not contain each instance equally often");
    }
    let mut out = shading.to_vec();
    if source == target {
        return Ok(out);
    }
    for (inst, sp) in &src {
        for (&a, &b) in sp.iter().zip(&tgt[inst]) {
            out[a * block..(a + 1) * block].copy_from_slice(&shading[b * block..(b + 1) * block]);
            out[b * block..(b + 1) * block].copy_from_slice(&shading[a * block..(a + 1) * block]);
        }
    }
    Ok(out)
}

/// One (word, shading) input to an audit.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditSample {
    pub word: usize,
    pub shading: Vec<bool>,
}

/// Uniform words with independent fair-coin shadings.
pub fn sample_audit_inputs(seq: &ConstructionSequence, n: usize, count: usize, seed: u64) -> Result<Vec<AuditSample>> {
    let stage = seq.stage(n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..count)
        .map(|_| AuditSample {
            word: rng.gen_range(0..stage.word_count()),
            shading: (0..stage.h).map(|_| rng.gen()).collect(),
        })
        .collect())
}

/// Audit outcome for one input.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleResult {
    pub word: usize,
    /// Reversed words within ε of the code output, by word id.
    pub candidates: Vec<usize>,
    pub best_candidate: Option<usize>,
    /// Exact f̄ of the best candidate as "num/den".
    pub best_fbar: Option<String>,
    /// g with [w̄]_s = η_g [w]_s, when the best candidate's class lies on the orbit.
    pub inferred: Option<GroupElement>,
    pub parity: Option<Parity>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub n: usize,
    pub s: usize,
    pub epsilon: String,
    pub samples: Vec<SampleResult>,
    pub modal: Option<GroupElement>,
    pub modal_parity: Option<Parity>,
    /// Fraction of samples whose inferred element equals the modal one.
    pub agreeing_fraction: f64,
}

/// Applies `code` to each sampled shaded n-word and compares the output with
/// every reversed n-word by symbol-projection f̄, thresholded at ε.
pub fn audit_code(
    code: &dyn SegmentMap,
    seq: &ConstructionSequence,
    n: usize,
    s: usize,
    samples: &[AuditSample],
    epsilon: Rational,
    budget: u64,
) -> Result<AuditReport> {
    let stage = seq.stage(n)?;
    let level = stage
        .levels
        .get(s)
        .ok_or_else(|| Error::InvalidInput(format!("level {s} absent at stage {n}")))?;
    let required = stage.h as u128 * stage.word_count() as u128;
    if required > budget as u128 {
        return Err(Error::Budget { what: format!("reversed stage-{n} words"), required, cap: budget as u128 });
    }
    let words: Vec<Vec<u32>> = (0..stage.word_count()).map(|w| seq.word_symbols(n, w, budget)).collect::<Result<_>>()?;
    let reversed: Vec<Vec<u32>> = words.iter().map(|w| w.iter().rev().copied().collect()).collect();

    // Symbol-projection f̄ ignores shading, so each distinct output is scored once.
    let outputs: Vec<SymbolString> = samples
        .par_iter()
        .map(|sample| {
            let word = words.get(sample.word).ok_or_else(|| Error::InvalidInput("sample word outside W_n".into()))?;
            code.map_segment(&SymbolString::shaded(word.clone(), sample.shading.clone())?)
        })
        .collect::<Result<_>>()?;
    let mut distinct: HashMap<&[u32], usize> = HashMap::new();
    let mut keys: Vec<&[u32]> = Vec::new();
    for out in &outputs {
        distinct.entry(out.symbols.as_slice()).or_insert_with(|| {
            keys.push(out.symbols.as_slice());
            keys.len() - 1
        });
    }
    type Scored = (Vec<usize>, Option<(Rational, usize)>);
    let scores: Vec<Scored> = keys
        .par_iter()
        .map(|out| -> Result<Scored> {
            let mut candidates = Vec::new();
            let mut best: Option<(Rational, usize)> = None;
            for (c, rev) in reversed.iter().enumerate() {
                if let Thresholded::Exact(v) = fbar_below(out, rev, epsilon)? {
                    candidates.push(c);
                    if best.map_or(true, |(b, _)| v < b) {
                        best = Some((v, c));
                    }
                }
            }
            Ok((candidates, best))
        })
        .collect::<Result<_>>()?;

    let results: Vec<SampleResult> = samples
        .iter()
        .zip(&outputs)
        .map(|(sample, out)| {
            let (candidates, best) = scores[distinct[out.symbols.as_slice()]].clone();
            let (inferred, parity) = match best {
                Some((_, c)) => {
                    let (x, y) = (level.class_of_word[sample.word], level.class_of_word[c]);
                    match level.action.group.masks().find(|&m| level.action.apply_mask(m, x) == y) {
                        Some(m) => {
                            let g = level.action.group.element(m);
                            let p = g.parity();
                            (Some(g), Some(p))
                        }
                        None => (None, None),
                    }
                }
                None => (None, None),
            };
            SampleResult {
                word: sample.word,
                candidates,
                best_candidate: best.map(|b| b.1),
                best_fbar: best.map(|b| format_rational(&b.0)),
                inferred,
                parity,
            }
        })
        .collect();

    let mut tally: BTreeMap<&GroupElement, usize> = BTreeMap::new();
    for r in &results {
        if let Some(g) = &r.inferred {
            *tally.entry(g).or_insert(0) += 1;
        }
    }
    let modal = tally.iter().max_by_key(|(g, c)| (**c, std::cmp::Reverse(**g))).map(|(g, _)| (*g).clone());
    let agreeing = results.iter().filter(|r| r.inferred.is_some() && r.inferred == modal).count();
    Ok(AuditReport {
        n,
        s,
        epsilon: format_rational(&epsilon),
        agreeing_fraction: if results.is_empty() { 0.0 } else { agreeing as f64 / results.len() as f64 },
        modal_parity: modal.as_ref().map(|g| g.parity()),
        modal,
        samples: results,
    })
}

/// Whether audits at consecutive levels found modal elements linked by ρ.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoherenceCheck {
    pub levels: Vec<usize>,
    pub elements: Vec<Option<GroupElement>>,
    /// True iff at least two consecutive levels were audited, every level has
    /// a modal element, and ρ_{s+1,s}(g_{s+1}) = g_s throughout.
    pub coherent: bool,
}

pub fn audit_coherence(reports: &[AuditReport]) -> Result<CoherenceCheck> {
    let mut sorted: Vec<&AuditReport> = reports.iter().collect();
    sorted.sort_by_key(|r| r.s);
    let levels: Vec<usize> = sorted.iter().map(|r| r.s).collect();
    let elements: Vec<Option<GroupElement>> = sorted.iter().map(|r| r.modal.clone()).collect();
    let mut coherent = sorted.len() >= 2 && elements.iter().all(Option::is_some);
    if coherent {
        for w in sorted.windows(2) {
            let (lo, hi) = (w[0], w[1]);
            if hi.s != lo.s + 1 {
                coherent = false;
                break;
            }
            let (a, b) = (lo.modal.as_ref().expect("checked"), hi.modal.as_ref().expect("checked"));
            if rho(b, hi.s, lo.s)? != *a {
                coherent = false;
                break;
            }
        }
    }
    Ok(CoherenceCheck { levels, elements, coherent })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn shaded(sym: &[u32], bits: &[u8]) -> SymbolString {
        SymbolString::shaded(sym.to_vec(), bits.iter().map(|&b| b == 1).collect()).unwrap()
    }

    #[test]
    fn identity_code_trims_both_ends() {
        let code = StationaryCode { half_width: 2, rule: CodeRule::Identity };
        let s = shaded(&[1, 2, 3, 4, 5, 6], &[0, 1, 0, 1, 1, 0]);
        let out = apply_stationary_code(&code, &s).unwrap();
        assert_eq!(out, shaded(&[3, 4], &[0, 1]));
        assert!(apply_stationary_code(&code, &shaded(&[1, 2, 3, 4], &[0; 4])).is_err());
    }

    #[test]
    fn constant_code_is_constant() {
        let out = apply_stationary_code(&StationaryCode::constant(3, true), &shaded(&[0, 1, 2], &[0, 0, 1])).unwrap();
        assert_eq!(out, shaded(&[3, 3, 3], &[1, 1, 1]));
    }

    #[test]
    fn table_codes_round_trip_through_files() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let code = StationaryCode::random(&mut rng, 2, 1).unwrap();
        let file = code.to_file();
        assert_eq!(file.entries.len(), 64);
        assert_eq!(StationaryCode::from_file(&file).unwrap(), code);
    }

    #[test]
    fn reshuffle_swaps_blocks_of_paired_occurrences() {
        // Instances a=0, b=1 with block length 2; segments [0,2) and [2,4).
        let comps = [0, 1, 1, 0];
        let bits: Vec<bool> = [1, 1, 0, 0, 1, 0, 0, 1].iter().map(|&b| b == 1).collect();
        assert_eq!(reshuffle_shading(&comps, 2, 0..2, 0..2, &bits).unwrap(), bits);
        let out = reshuffle_shading(&comps, 2, 0..2, 2..4, &bits).unwrap();
        // Instance 0: position 0 ↔ 3; instance 1: position 1 ↔ 2.
        let expect: Vec<bool> = [0, 1, 1, 0, 0, 0, 1, 1].iter().map(|&b| b == 1).collect();
        assert_eq!(out, expect);
        assert!(reshuffle_shading(&[0, 0, 1, 1], 1, 0..2, 2..4, &[false; 4]).is_err());
    }
}
