//! Finite truncations of trees on ℕ^{<ℕ}.
//!
//! Sequences are enumerated by a stage scheme: at stage k = 1, 2, 3, … every
//! sequence of length ≤ k with all entries < k that has not been listed yet is
//! appended, in length-then-lexicographic order. Every proper prefix of a
//! sequence is listed strictly earlier, so a tree truncated at horizon M is
//! fully described by the set of indices ≤ M it contains.

use std::collections::BTreeSet;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// A finite sequence of naturals; the empty sequence is the root.
pub type FiniteSequence = Vec<u32>;

/// Number of sequences listed after stages 1..=k (zero for k = 0).
fn listed_through(k: u64) -> Option<u128> {
    if k == 0 {
        return Some(0);
    }
    let k = k as u128;
    let mut total: u128 = 0;
    let mut pow: u128 = 1;
    for _ in 0..=k {
        total = total.checked_add(pow)?;
        pow = pow.checked_mul(k)?;
    }
    Some(total)
}

fn checked_pow(base: u128, exp: u64) -> Option<u128> {
    let mut acc: u128 = 1;
    for _ in 0..exp {
        acc = acc.checked_mul(base)?;
    }
    Some(acc)
}

/// Stage at which `seq` is first listed.
fn stage_of(seq: &[u32]) -> u64 {
    let max_entry = seq.iter().map(|&x| x as u64 + 1).max().unwrap_or(0);
    (seq.len() as u64).max(max_entry).max(1)
}

/// Number of sequences of length `len` listed for the first time at stage `k`.
fn new_of_length(k: u64, len: u64) -> Option<u128> {
    let all = checked_pow(k as u128, len)?;
    // sequences already listed at stages < k
    let old = if k >= 2 && len < k { checked_pow(k as u128 - 1, len)? } else { 0 };
    Some(all - old)
}

/// Number of new stage-`k` sequences with the given prefix and total length `len`.
fn new_with_prefix(k: u64, prefix: &[u32], len: u64) -> Option<u128> {
    let rem = len - prefix.len() as u64;
    let all = checked_pow(k as u128, rem)?;
    let old_possible = k >= 2 && len < k && prefix.iter().all(|&x| (x as u64) + 1 < k);
    let old = if old_possible { checked_pow(k as u128 - 1, rem)? } else { 0 };
    Some(all - old)
}

/// Enumeration index of a sequence (inverse of [`canonical_enumeration`]).
pub fn enumeration_index(seq: &[u32]) -> Result<u64> {
    let overflow = || Error::InvalidInput("sequence index exceeds 64 bits".into());
    let k = stage_of(seq);
    let mut idx = listed_through(k - 1).ok_or_else(overflow)?;
    for len in 0..seq.len() as u64 {
        idx = idx
            .checked_add(new_of_length(k, len).ok_or_else(overflow)?)
            .ok_or_else(overflow)?;
    }
    let len = seq.len() as u64;
    let mut prefix: Vec<u32> = Vec::with_capacity(seq.len());
    for &x in seq {
        for d in 0..x {
            prefix.push(d);
            idx = idx
                .checked_add(new_with_prefix(k, &prefix, len).ok_or_else(overflow)?)
                .ok_or_else(overflow)?;
            prefix.pop();
        }
        prefix.push(x);
    }
    u64::try_from(idx).map_err(|_| overflow())
}

/// The sequence σ_m listed at position `m` of the stage enumeration.
pub fn canonical_enumeration(m: u64) -> FiniteSequence {
    let m = m as u128;
    let mut k = 1u64;
    while listed_through(k).expect("stage totals fit in u128 for u64 indices") <= m {
        k += 1;
    }
    let mut rank = m - listed_through(k - 1).unwrap();
    let mut len = 0u64;
    loop {
        let count = new_of_length(k, len).unwrap();
        if rank < count {
            break;
        }
        rank -= count;
        len += 1;
    }
    let mut seq: Vec<u32> = Vec::with_capacity(len as usize);
    while (seq.len() as u64) < len {
        let mut d = 0u32;
        loop {
            seq.push(d);
            let count = new_with_prefix(k, &seq, len).unwrap();
            if rank < count {
                break;
            }
            rank -= count;
            seq.pop();
            d += 1;
        }
    }
    seq
}

/// Whether `prefix` is an initial segment of `seq`.
pub fn is_prefix(prefix: &[u32], seq: &[u32]) -> bool {
    prefix.len() <= seq.len() && seq[..prefix.len()] == *prefix
}

/// True iff the index set contains the root and is closed under prefixes.
pub fn is_tree(node_indices: &BTreeSet<u64>) -> bool {
    if !node_indices.contains(&0) {
        return false;
    }
    node_indices.iter().all(|&m| {
        let seq = canonical_enumeration(m);
        seq.is_empty()
            || enumeration_index(&seq[..seq.len() - 1])
                .map(|p| node_indices.contains(&p))
                .unwrap_or(false)
    })
}

/// A tree 𝒯 known through its intersection with {σ_m : m ≤ horizon}.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TreeApproximation {
    node_indices: BTreeSet<u64>,
    horizon: u64,
}

/// On-disk form: `{"horizon": M, "nodes": [[…], …]}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TreeFile {
    pub horizon: u64,
    pub nodes: Vec<FiniteSequence>,
}

impl TreeApproximation {
    /// Validates prefix closure, presence of the root and the horizon bound.
    pub fn new(node_indices: BTreeSet<u64>, horizon: u64) -> Result<Self> {
        if let Some(&max) = node_indices.iter().next_back() {
            if max > horizon {
                return invalid(format!("node index {max} exceeds horizon {horizon}"));
            }
        }
        if !is_tree(&node_indices) {
            return invalid("node set is not prefix-closed or lacks the root");
        }
        Ok(Self { node_indices, horizon })
    }

    /// Builds a tree from explicit sequences.
    pub fn from_nodes(nodes: &[FiniteSequence], horizon: u64) -> Result<Self> {
        let idx = nodes
            .iter()
            .map(|s| enumeration_index(s))
            .collect::<Result<BTreeSet<_>>>()?;
        Self::new(idx, horizon)
    }

    /// The tree {∅} truncated at `horizon`.
    pub fn trivial(horizon: u64) -> Self {
        Self { node_indices: BTreeSet::from([0]), horizon }
    }

    /// The chain ∅, (0), (0,0), … of the given depth; the horizon is the index of its deepest node.
    pub fn chain(depth: usize) -> Self {
        let nodes: Vec<FiniteSequence> = (0..=depth).map(|d| vec![0; d]).collect();
        let horizon = enumeration_index(&nodes[depth]).expect("small chain index");
        Self::from_nodes(&nodes, horizon).expect("chains are trees")
    }

    /// All sequences over {0, …, arity−1} of length ≤ depth; the horizon is the largest index.
    pub fn full(arity: u32, depth: usize) -> Self {
        let mut nodes: Vec<FiniteSequence> = vec![vec![]];
        let mut frontier: Vec<FiniteSequence> = vec![vec![]];
        for _ in 0..depth {
            let mut next = Vec::new();
            for s in &frontier {
                for a in 0..arity {
                    let mut t = s.clone();
                    t.push(a);
                    next.push(t);
                }
            }
            nodes.extend(next.iter().cloned());
            frontier = next;
        }
        let horizon = nodes
            .iter()
            .map(|s| enumeration_index(s).expect("small index"))
            .max()
            .unwrap();
        Self::from_nodes(&nodes, horizon).expect("full trees are trees")
    }

    /// A random tree: scanning indices 1..=horizon, σ_m joins with probability `p`
    /// whenever its parent is already present.
    pub fn random<R: Rng>(rng: &mut R, horizon: u64, p: f64) -> Self {
        let mut set = BTreeSet::from([0u64]);
        for m in 1..=horizon {
            let seq = canonical_enumeration(m);
            let parent = enumeration_index(&seq[..seq.len() - 1]).expect("parent index");
            if set.contains(&parent) && rng.gen_bool(p) {
                set.insert(m);
            }
        }
        Self { node_indices: set, horizon }
    }

    pub fn horizon(&self) -> u64 {
        self.horizon
    }

    pub fn node_indices(&self) -> &BTreeSet<u64> {
        &self.node_indices
    }

    /// Whether σ_m lies in the tree (indices beyond the horizon are unknown, reported as false).
    pub fn contains_index(&self, m: u64) -> bool {
        self.node_indices.contains(&m)
    }

    pub fn contains(&self, seq: &[u32]) -> bool {
        enumeration_index(seq).map(|m| self.contains_index(m)).unwrap_or(false)
    }

    /// Nodes in enumeration order.
    pub fn nodes(&self) -> Vec<FiniteSequence> {
        self.node_indices.iter().map(|&m| canonical_enumeration(m)).collect()
    }

    /// The same tree seen only through indices ≤ `horizon`.
    pub fn restrict(&self, horizon: u64) -> Self {
        let node_indices = self.node_indices.range(..=horizon).copied().collect();
        Self { node_indices, horizon: horizon.min(self.horizon) }
    }

    /// Least n with σ_n ∈ 𝒯 of length s, if one lies within the horizon.
    pub fn level_map_m(&self, s: usize) -> Option<u64> {
        self.node_indices
            .iter()
            .copied()
            .find(|&m| canonical_enumeration(m).len() == s)
    }

    /// Length of the longest σ_m ∈ 𝒯 with m ≤ n.
    pub fn level_map_s(&self, n: u64) -> usize {
        self.node_indices
            .range(..=n)
            .map(|&m| canonical_enumeration(m).len())
            .max()
            .unwrap_or(0)
    }

    /// A longest branch; among branches of maximal length the lexicographically least.
    pub fn longest_branch(&self) -> FiniteSequence {
        self.nodes()
            .into_iter()
            .max_by(|a, b| a.len().cmp(&b.len()).then_with(|| b.cmp(a)))
            .unwrap_or_default()
    }

    pub fn to_file(&self) -> TreeFile {
        TreeFile { horizon: self.horizon, nodes: self.nodes() }
    }

    pub fn from_file(file: &TreeFile) -> Result<Self> {
        Self::from_nodes(&file.nodes, file.horizon).map_err(|e| Error::Malformed {
            kind: "tree file",
            detail: e.to_string(),
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_file()).expect("tree serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: TreeFile = serde_json::from_str(text)?;
        Self::from_file(&file)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_indices_follow_stage_order() {
        let expected: Vec<Vec<u32>> =
            vec![vec![], vec![0], vec![1], vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1], vec![2]];
        for (m, seq) in expected.iter().enumerate() {
            assert_eq!(canonical_enumeration(m as u64), *seq);
            assert_eq!(enumeration_index(seq).unwrap(), m as u64);
        }
    }

    #[test]
    fn stage_three_starts_after_seven_sequences() {
        // stage 3 adds (2), then length-2 sequences containing a 2, then all length-3 sequences
        assert_eq!(canonical_enumeration(8), vec![0, 2]);
        assert_eq!(enumeration_index(&[0, 0, 0]).unwrap(), 7 + 1 + 5);
    }

    #[test]
    fn level_maps_on_chain() {
        let t = TreeApproximation::chain(2);
        assert_eq!(t.level_map_m(0), Some(0));
        assert_eq!(t.level_map_m(1), Some(1));
        assert_eq!(t.level_map_m(2), Some(3));
        assert_eq!((0..=3).map(|n| t.level_map_s(n)).collect::<Vec<_>>(), vec![0, 1, 1, 2]);
    }

    #[test]
    fn horizon_is_enforced() {
        assert!(TreeApproximation::new(BTreeSet::from([0, 1]), 0).is_err());
    }

    #[test]
    fn json_round_trip_preserves_tree() {
        let t = TreeApproximation::full(2, 2);
        assert_eq!(TreeApproximation::from_json(&t.to_json()).unwrap(), t);
    }
}
