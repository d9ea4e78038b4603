//! The circular-system functor.
//!
//! Arithmetic: q_0 = 1, p_0 = 0, q_{n+1} = k_n·l_n·q_n², p_{n+1} = p_n·k_n·l_n·q_n + 1,
//! and j_i ≡ p_n^{−1}·i (mod q_n) for 0 ≤ i < q_n with j_{q_n} = q_n.
//!
//! Given stage-n circular words w_0, …, w_{k−1} (each of length q_n), the operator
//!
//! ```text
//! 𝒞_n(w_0, …, w_{k−1}) = ∏_{i<q_n} ∏_{j<k_n} b^{q_n−j_i} w_j^{l_n−1} e^{j_i}
//! ```
//!
//! produces a word of length q_{n+1}; its reversed counterpart is
//! ∏_i ∏_j e^{q_n−j_{i+1}} w_{k_n−j−1}^{l_n−1} b^{j_{i+1}}. The spacers b and
//! e are the ids `alphabet_size` and `alphabet_size + 1`.

use num_integer::{Integer, Roots};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Default cap on materialized circular word length.
pub const DEFAULT_BUDGET: u128 = 1 << 24;

/// Spacer ids for an alphabet.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Spacers {
    pub b: u32,
    pub e: u32,
}

impl Spacers {
    pub fn for_alphabet(alphabet_size: u32) -> Self {
        Self { b: alphabet_size, e: alphabet_size + 1 }
    }
}

/// Arithmetic of stage n.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CircularParams {
    pub n: usize,
    pub k_seq: Vec<u64>,
    pub l_seq: Vec<u64>,
    /// q_0, …, q_n
    pub q: Vec<u128>,
    /// p_0, …, p_n
    pub p: Vec<u128>,
    /// p_n^{−1} mod q_n (0 when q_n = 1)
    pub p_inv: u128,
}

/// Modular inverse through the extended Euclidean algorithm.
pub fn mod_inverse(a: u128, m: u128) -> Option<u128> {
    if m == 1 {
        return Some(0);
    }
    let (a, m) = (i128::try_from(a).ok()?, i128::try_from(m).ok()?);
    let e = a.extended_gcd(&m);
    (e.gcd == 1).then(|| e.x.rem_euclid(m) as u128)
}

/// Evaluates the recursions through stage n. `k_seq` and `l_seq` must cover
/// indices 0..n; entries at n (if present) are kept for the stage-n operator.
pub fn circular_params(k_seq: &[u64], l_seq: &[u64], n: usize) -> Result<CircularParams> {
    if k_seq.len() < n || l_seq.len() < n {
        return invalid(format!("k and l schedules must cover indices below {n}"));
    }
    if let Some(l) = l_seq.iter().find(|&&l| l < 2) {
        return invalid(format!("l_n ≥ 2 required, got {l}"));
    }
    if k_seq.iter().any(|&k| k == 0) {
        return invalid("k_n ≥ 1 required");
    }
    let mut q = vec![1u128];
    let mut p = vec![0u128];
    for i in 0..n {
        let (k, l) = (k_seq[i] as u128, l_seq[i] as u128);
        let overflow = || Error::Budget {
            what: format!("q_{}", i + 1),
            required: u128::MAX,
            cap: u64::MAX as u128,
        };
        let qn = k
            .checked_mul(l)
            .and_then(|x| x.checked_mul(q[i]))
            .and_then(|x| x.checked_mul(q[i]))
            .filter(|&x| x <= u64::MAX as u128)
            .ok_or_else(overflow)?;
        let pn = p[i]
            .checked_mul(k * l)
            .and_then(|x| x.checked_mul(q[i]))
            .and_then(|x| x.checked_add(1))
            .ok_or_else(overflow)?;
        q.push(qn);
        p.push(pn);
    }
    let p_inv = mod_inverse(p[n] % q[n], q[n])
        .ok_or_else(|| Error::Invariant(format!("gcd(p_{n}, q_{n}) ≠ 1")))?;
    Ok(CircularParams { n, k_seq: k_seq.to_vec(), l_seq: l_seq.to_vec(), q, p, p_inv })
}

impl CircularParams {
    pub fn q_n(&self) -> u128 {
        self.q[self.n]
    }

    pub fn p_n(&self) -> u128 {
        self.p[self.n]
    }

    /// j_i for 0 ≤ i ≤ q_n.
    pub fn j(&self, i: u128) -> u128 {
        let q = self.q_n();
        if i == q {
            q
        } else {
            (self.p_inv * (i % q)) % q
        }
    }

    /// k_n and l_n of the stage-n operator.
    pub fn k_l(&self) -> Result<(u64, u64)> {
        match (self.k_seq.get(self.n), self.l_seq.get(self.n)) {
            (Some(&k), Some(&l)) => Ok((k, l)),
            _ => invalid(format!("k_{0} and l_{0} are needed for the stage-{0} operator", self.n)),
        }
    }

    /// q_{n+1} = k_n·l_n·q_n².
    pub fn next_length(&self) -> Result<u128> {
        let (k, l) = self.k_l()?;
        Ok(k as u128 * l as u128 * self.q_n() * self.q_n())
    }

    fn check_components(&self, components: &[Vec<u32>], expect_k: Option<u64>) -> Result<()> {
        if let Some(k) = expect_k {
            if components.len() as u64 != k {
                return invalid(format!("{} components given, k_{} = {k}", components.len(), self.n));
            }
        }
        if let Some(c) = components.iter().find(|c| c.len() as u128 != self.q_n()) {
            return invalid(format!("component of length {} where q_{} = {}", c.len(), self.n, self.q_n()));
        }
        Ok(())
    }
}

fn push_rep(out: &mut Vec<u32>, x: u32, count: u128) {
    out.extend(std::iter::repeat(x).take(count as usize));
}

fn push_word(out: &mut Vec<u32>, w: &[u32], times: u64) {
    for _ in 0..times {
        out.extend_from_slice(w);
    }
}

fn check_budget(len: u128, budget: u128) -> Result<()> {
    if len > budget {
        return Err(Error::Budget { what: "circular word".into(), required: len, cap: budget });
    }
    Ok(())
}

/// 𝒞_n applied to k_n components of length q_n.
pub fn circular_op(params: &CircularParams, components: &[Vec<u32>], spacers: Spacers, budget: u128) -> Result<Vec<u32>> {
    let (k, _) = params.k_l()?;
    params.check_components(components, Some(k))?;
    check_budget(params.next_length()?, budget)?;
    let mut out = Vec::with_capacity(params.next_length()? as usize);
    for i in 0..params.q_n() {
        out.extend(circular_partial(params, i, components, 0, k as usize - 1, false, spacers)?);
    }
    Ok(out)
}

/// 𝒞_n^r applied to the reversed components rev(w_0), …, rev(w_{k−1}) (in that order).
pub fn circular_rev_op(params: &CircularParams, components: &[Vec<u32>], spacers: Spacers, budget: u128) -> Result<Vec<u32>> {
    let (k, _) = params.k_l()?;
    params.check_components(components, Some(k))?;
    check_budget(params.next_length()?, budget)?;
    let mut out = Vec::with_capacity(params.next_length()? as usize);
    for i in 0..params.q_n() {
        out.extend(circular_partial(params, i, components, 0, k as usize - 1, true, spacers)?);
    }
    Ok(out)
}

/// Single-i factor on the components w_s, …, w_t.
///
/// Forward: ∏_{j=s..t} b^{q−j_i} w_j^{l−1} e^{j_i}.
/// Reversed: ∏_{j=0..t−s} e^{q−j_{i+1}} w_{t−j}^{l−1} b^{j_{i+1}}.
pub fn circular_partial(
    params: &CircularParams,
    i: u128,
    components: &[Vec<u32>],
    s: usize,
    t: usize,
    reversed: bool,
    spacers: Spacers,
) -> Result<Vec<u32>> {
    let (k, l) = params.k_l()?;
    let q = params.q_n();
    if i >= q {
        return invalid(format!("i = {i} outside 0..{q}"));
    }
    if s > t || t as u64 >= k || t >= components.len() {
        return invalid(format!("component range {s}..={t} invalid for k_{} = {k}", params.n));
    }
    params.check_components(&components[s..=t], None)?;
    let mut out = Vec::with_capacity(((t - s + 1) as u128 * l as u128 * q) as usize);
    if reversed {
        let ji = params.j(i + 1);
        for j in 0..=t - s {
            push_rep(&mut out, spacers.e, q - ji);
            push_word(&mut out, &components[t - j], l - 1);
            push_rep(&mut out, spacers.b, ji);
        }
    } else {
        let ji = params.j(i);
        for w in &components[s..=t] {
            push_rep(&mut out, spacers.b, q - ji);
            push_word(&mut out, w, l - 1);
            push_rep(&mut out, spacers.e, ji);
        }
    }
    Ok(out)
}

/// R_n^c = ⌊√(l_{n−2})·k_{n−2}·q_{n−2}²⌋ for n ≥ 2 and R_1^c = `r1`.
pub fn r_c(params: &CircularParams, n: usize, r1: u128) -> Result<u128> {
    if n == 0 {
        return invalid("R^c is defined for n ≥ 1");
    }
    if n == 1 {
        return Ok(r1);
    }
    let (l, k, q) = (
        *params.l_seq.get(n - 2).ok_or_else(|| Error::InvalidInput("l schedule too short".into()))? as u128,
        *params.k_seq.get(n - 2).ok_or_else(|| Error::InvalidInput("k schedule too short".into()))? as u128,
        *params.q.get(n - 2).ok_or_else(|| Error::InvalidInput("params do not reach n − 2".into()))?,
    );
    let x = k.checked_mul(q * q).ok_or_else(|| Error::InvalidInput("R^c overflows".into()))?;
    // ⌊√l · x⌋ = ⌊√(l·x²)⌋
    let sq = x.checked_mul(x).and_then(|y| y.checked_mul(l)).ok_or_else(|| Error::InvalidInput("R^c overflows".into()))?;
    Ok(sq.sqrt())
}

/// A circularized construction sequence: stage-n words are stored by their
/// component ids and expanded lazily.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CircularSystem {
    pub alphabet_size: u32,
    pub spacers: Spacers,
    /// `components[n][w]`: ids of the (n−1)-words composing n-word w (index 0 unused).
    pub components: Vec<Vec<Vec<u32>>>,
    pub k_seq: Vec<u64>,
    pub l_seq: Vec<u64>,
    /// Stage parameters, `params[n]` for n = 0..=top.
    pub params: Vec<CircularParams>,
}

impl CircularSystem {
    /// Builds the system from the composition structure of a construction
    /// sequence: `stage_components[n][w]` lists the (n−1)-word ids of n-word w
    /// for n ≥ 1 (entry 0 is ignored; W_0 is the alphabet).
    pub fn new(alphabet_size: u32, stage_components: Vec<Vec<Vec<u32>>>, l_seq: &[u64]) -> Result<Self> {
        let top = stage_components.len().saturating_sub(1);
        let mut k_seq = Vec::with_capacity(top);
        for (n, words) in stage_components.iter().enumerate().skip(1) {
            let k = words.first().map_or(0, |w| w.len()) as u64;
            if k == 0 || words.iter().any(|w| w.len() as u64 != k) {
                return invalid(format!("stage {n} words must share a positive component count"));
            }
            let prev_count = if n == 1 { alphabet_size as usize } else { stage_components[n - 1].len() };
            if words.iter().flatten().any(|&c| c as usize >= prev_count) {
                return invalid(format!("stage {n} refers to an unknown stage-{} word", n - 1));
            }
            k_seq.push(k);
        }
        if l_seq.len() < top {
            return invalid(format!("l schedule needs {top} entries"));
        }
        let l_seq = l_seq[..top].to_vec();
        let params = (0..=top)
            .map(|n| circular_params(&k_seq, &l_seq, n))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { alphabet_size, spacers: Spacers::for_alphabet(alphabet_size), components: stage_components, k_seq, l_seq, params })
    }

    pub fn top_stage(&self) -> usize {
        self.params.len() - 1
    }

    pub fn word_count(&self, n: usize) -> usize {
        if n == 0 {
            self.alphabet_size as usize
        } else {
            self.components[n].len()
        }
    }

    /// Length q_n of every stage-n circular word.
    pub fn length(&self, n: usize) -> u128 {
        self.params[n].q_n()
    }

    /// Symbol at `pos` of c_n(w), evaluated without materializing the word.
    pub fn symbol_at(&self, n: usize, word: usize, pos: u128) -> u32 {
        if n == 0 {
            return word as u32;
        }
        let pp = &self.params[n - 1];
        let (k, l) = (self.k_seq[n - 1] as u128, self.l_seq[n - 1] as u128);
        let q = pp.q_n();
        let inner = l * q;
        let i = pos / (k * inner);
        let rem = pos % (k * inner);
        let j = rem / inner;
        let off = rem % inner;
        let ji = pp.j(i);
        if off < q - ji {
            self.spacers.b
        } else if off < q - ji + (l - 1) * q {
            let comp = self.components[n][word][j as usize] as usize;
            self.symbol_at(n - 1, comp, (off - (q - ji)) % q)
        } else {
            self.spacers.e
        }
    }

    /// Symbol at `pos` of 𝒞^r_{n−1}(rev c_{n−1}(w_0), …), by the reversed formula.
    pub fn rev_formula_symbol_at(&self, n: usize, word: usize, pos: u128) -> u32 {
        if n == 0 {
            return word as u32;
        }
        let pp = &self.params[n - 1];
        let (k, l) = (self.k_seq[n - 1] as u128, self.l_seq[n - 1] as u128);
        let q = pp.q_n();
        let inner = l * q;
        let i = pos / (k * inner);
        let rem = pos % (k * inner);
        let j = rem / inner;
        let off = rem % inner;
        let ji1 = pp.j(i + 1);
        if off < q - ji1 {
            self.spacers.e
        } else if off < q - ji1 + (l - 1) * q {
            let comp = self.components[n][word][(k - 1 - j) as usize] as usize;
            let x = (off - (q - ji1)) % q;
            // rev(c_{n−1}(comp)) at x
            self.rev_formula_symbol_at(n - 1, comp, x)
        } else {
            self.spacers.b
        }
    }

    /// Materializes c_n(w) within `budget` symbols.
    pub fn word(&self, n: usize, word: usize, budget: u128) -> Result<Vec<u32>> {
        check_budget(self.length(n), budget)?;
        if n == 0 {
            return Ok(vec![word as u32]);
        }
        let comps = self.components[n][word]
            .iter()
            .map(|&c| self.word(n - 1, c as usize, budget))
            .collect::<Result<Vec<_>>>()?;
        circular_op(&self.params[n - 1], &comps, self.spacers, budget)
    }

    /// Materializes 𝒞^r_{n−1}(rev c_{n−1}(w_0), …, rev c_{n−1}(w_{k−1})).
    pub fn rev_word(&self, n: usize, word: usize, budget: u128) -> Result<Vec<u32>> {
        check_budget(self.length(n), budget)?;
        if n == 0 {
            return Ok(vec![word as u32]);
        }
        let comps = self.components[n][word]
            .iter()
            .map(|&c| self.rev_word(n - 1, c as usize, budget))
            .collect::<Result<Vec<_>>>()?;
        circular_rev_op(&self.params[n - 1], &comps, self.spacers, budget)
    }

    /// Recovers the component ids of a stage-n circular word from its symbols,
    /// checking every spacer run and every repeated copy.
    pub fn decircularize(&self, n: usize, symbols: &[u32], budget: u128) -> Result<Vec<u32>> {
        if n == 0 {
            return invalid("stage-0 words have no components");
        }
        if symbols.len() as u128 != self.length(n) {
            return invalid("word length differs from q_n");
        }
        let pp = &self.params[n - 1];
        let (k, l) = (self.k_seq[n - 1] as usize, self.l_seq[n - 1] as usize);
        let q = pp.q_n() as usize;
        let lookup: std::collections::HashMap<Vec<u32>, u32> = (0..self.word_count(n - 1))
            .map(|w| Ok((self.word(n - 1, w, budget)?, w as u32)))
            .collect::<Result<_>>()?;
        let bad = |detail: String| Error::Malformed { kind: "circular word", detail };
        let mut result: Option<Vec<u32>> = None;
        for i in 0..q {
            let ji = pp.j(i as u128) as usize;
            let mut seq = Vec::with_capacity(k);
            for j in 0..k {
                let base = (i * k + j) * l * q;
                let block = &symbols[base..base + l * q];
                if block[..q - ji].iter().any(|&x| x != self.spacers.b)
                    || block[l * q - ji..].iter().any(|&x| x != self.spacers.e)
                {
                    return Err(bad(format!("spacer layout broken in block ({i}, {j})")));
                }
                let body = &block[q - ji..l * q - ji];
                let first = &body[..q];
                if body.chunks(q).any(|c| c != first) {
                    return Err(bad(format!("unequal copies in block ({i}, {j})")));
                }
                seq.push(*lookup.get(first).ok_or_else(|| bad(format!("unknown component in block ({i}, {j})")))?);
            }
            match &result {
                None => result = Some(seq),
                Some(r) if *r != seq => return Err(bad(format!("component sequence changes at i = {i}"))),
                _ => {}
            }
        }
        result.ok_or_else(|| bad("empty word".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SP: Spacers = Spacers { b: 90, e: 91 };

    #[test]
    fn first_stage_arithmetic() {
        let p = circular_params(&[4], &[2], 1).unwrap();
        assert_eq!(p.q_n(), 8);
        assert_eq!(p.p_n(), 1);
        assert!((0..8).all(|i| p.j(i) == i));
        assert_eq!(p.j(8), 8);
    }

    #[test]
    fn stage_zero_hand_expansion() {
        let p = circular_params(&[2], &[2], 0).unwrap();
        let out = circular_op(&p, &[vec![0], vec![1]], SP, DEFAULT_BUDGET).unwrap();
        assert_eq!(out, vec![90, 0, 90, 1]);
        let partial = circular_partial(&p, 0, &[vec![0], vec![1]], 0, 0, false, SP).unwrap();
        assert_eq!(partial, vec![90, 0]);
        let rev = circular_rev_op(&p, &[vec![0], vec![1]], SP, DEFAULT_BUDGET).unwrap();
        let mut expected = out.clone();
        expected.reverse();
        assert_eq!(rev, expected);
    }

    #[test]
    fn wrong_components_are_rejected() {
        let p = circular_params(&[2], &[2], 0).unwrap();
        assert!(circular_op(&p, &[vec![0]], SP, DEFAULT_BUDGET).is_err());
        assert!(circular_op(&p, &[vec![0, 1], vec![1, 0]], SP, DEFAULT_BUDGET).is_err());
        assert!(circular_partial(&p, 1, &[vec![0], vec![1]], 0, 1, false, SP).is_err());
    }

    #[test]
    fn inverse_exists_for_coprime_pairs() {
        assert_eq!(mod_inverse(3, 7), Some(5));
        assert_eq!(mod_inverse(2, 4), None);
    }
}
