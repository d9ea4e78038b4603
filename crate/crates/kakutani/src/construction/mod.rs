//! Tree-indexed construction sequences.
//!
//! Stage n holds the word set W_n (each n-word is a concatenation of k_{n−1}
//! words of stage n−1), the nested equivalence relations Q_0^n ⊇ Q_1^n ⊇ … ⊇
//! Q_{s(n)}^n as class labels per word, and the action of each group G_s^n on
//! W_n/Q_s^n as explicit permutation tables. Stage 0 is the alphabet.
//!
//! Words are stored by component ids and materialized into symbols on demand.

mod build;
mod branch;
mod store;
mod validate;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::fbar::Rational;
use crate::involutions::{ActionTable, RevClass};
use crate::trees::{FiniteSequence, TreeApproximation};

pub use branch::{all_coherent_sequences, coherent_branch_isomorphism, verify_eta, CoherentSequence, EtaReport};
pub use build::{build_construction_sequence, build_stage};
pub use store::{load_stages, save_stages, MANIFEST_NAME};
pub use validate::{validate_stage, CheckResult, ValidationReport};

/// Desk-scale parameters of a construction.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ConstructionParams {
    /// Size of W_0; a power of two.
    pub alphabet_size: u32,
    /// e(n) for n = 0, 1, …; the last entry repeats. Classes split 2^{4e(n)}-fold.
    pub e_schedule: Vec<u32>,
    /// 𝔭_n for n = 0, 1, …; empty means the odd primes 3, 5, 7, 11, ….
    pub prime_schedule: Vec<u64>,
    /// ε_n for n = 0, 1, … as "num/den" strings; empty means 2^{−n}.
    pub epsilon_schedule: Vec<String>,
    /// Words per top-level class; a power of two.
    pub members: usize,
    /// Cap on the number of component entries stored per stage.
    pub pattern_budget: u64,
    /// Seed of every random choice (arrangements, pattern-type orders).
    pub seed: u64,
    /// Rebuild attempts (with fresh arrangement choices) if unique readability fails.
    pub max_attempts: u32,
}

impl Default for ConstructionParams {
    fn default() -> Self {
        Self {
            alphabet_size: 16,
            e_schedule: vec![1],
            prime_schedule: Vec::new(),
            epsilon_schedule: Vec::new(),
            members: 2,
            pattern_budget: 1 << 26,
            seed: 0,
            max_attempts: 8,
        }
    }
}

fn is_prime(p: u64) -> bool {
    p >= 2 && (2..).take_while(|d| d * d <= p).all(|d| p % d != 0)
}

/// The n-th odd prime, counting from n = 0 (3, 5, 7, 11, …).
pub fn odd_prime(n: usize) -> u64 {
    (3u64..).filter(|&p| is_prime(p)).nth(n).expect("infinitely many primes")
}

impl ConstructionParams {
    pub fn validate(&self) -> Result<()> {
        if !self.alphabet_size.is_power_of_two() || self.alphabet_size < 2 {
            return invalid("alphabet_size must be a power of two ≥ 2");
        }
        if self.alphabet_size > (1 << 20) {
            return invalid("alphabet_size above 2^20 is not supported");
        }
        if !self.members.is_power_of_two() {
            return invalid("members must be a power of two");
        }
        if self.e_schedule.is_empty() || self.e_schedule.iter().any(|&e| e == 0 || e > 4) {
            return invalid("e_schedule entries must lie in 1..=4");
        }
        if self.prime_schedule.iter().any(|&p| p < 3 || !is_prime(p))
            || self.prime_schedule.windows(2).any(|w| w[0] >= w[1])
        {
            return invalid("prime_schedule must be increasing odd primes");
        }
        let eps = self.epsilon_schedule.iter().map(|s| crate::fbar::parse_rational(s)).collect::<Result<Vec<_>>>()?;
        if eps.iter().any(|e| *e <= Rational::from_integer(0) || *e > Rational::from_integer(1))
            || eps.windows(2).any(|w| w[1] > w[0])
        {
            return invalid("epsilon_schedule must be nonincreasing values in (0, 1]");
        }
        if self.max_attempts == 0 {
            return invalid("max_attempts must be positive");
        }
        Ok(())
    }

    pub fn e(&self, n: usize) -> u32 {
        *self.e_schedule.get(n).or(self.e_schedule.last()).unwrap_or(&1)
    }

    /// 2^{4e(n)}: the number of Q_{s+1} classes inside each Q_s class at stage n.
    pub fn split(&self, n: usize) -> usize {
        1usize << (4 * self.e(n))
    }

    pub fn prime(&self, n: usize) -> Result<u64> {
        if self.prime_schedule.is_empty() {
            Ok(odd_prime(n))
        } else {
            self.prime_schedule
                .get(n)
                .copied()
                .ok_or_else(|| Error::InvalidInput(format!("prime_schedule has no entry for n = {n}")))
        }
    }

    pub fn epsilon(&self, n: usize) -> Result<Rational> {
        if self.epsilon_schedule.is_empty() {
            if n >= 62 {
                return invalid("default ε_n underflows beyond n = 61");
            }
            Ok(Rational::new(1, 1i64 << n))
        } else {
            let s = self
                .epsilon_schedule
                .get(n)
                .ok_or_else(|| Error::InvalidInput(format!("epsilon_schedule has no entry for n = {n}")))?;
            crate::fbar::parse_rational(s)
        }
    }

    /// R_n = 2^n, the separation length divisor.
    pub fn r(&self, n: usize) -> u64 {
        1u64 << n.min(62)
    }
}

/// One Feldman-pattern occurrence inside an s-class (as used in pattern metadata).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatternOccurrence {
    /// Pattern type: the run multiplier a (a divisor of the level's P).
    pub pattern_type: u64,
    /// Building tuple in traversal order (level-s classes of (n−1)-words).
    pub tuple: Vec<u32>,
    /// First component index covered by the occurrence.
    pub start: usize,
    /// Number of components covered.
    pub len: usize,
    /// Whether the tuple is traversed in reverse (images under odd elements).
    pub reversed: bool,
}

/// Substitution parameters of one level at one stage.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelParams {
    pub s: usize,
    /// log2 |ker ρ_{s,s−1}^{(n−1)}|
    pub t: u32,
    /// Blocks per building tuple N_s = 2^{4e(n−1)−t}.
    pub n_blocks: usize,
    /// Pattern multiplicity P: every block occurs P times per pattern.
    pub p: u64,
    /// Families per orbit representative: K_s·|ker| = 2^{4e(n)}.
    pub k_families: usize,
    /// Repetitions of a (s−1)-class per pattern run unit.
    pub run_multiplier: usize,
    /// Repetition length u_s in components.
    pub unit: usize,
    /// Number of (s−1)-repetitions per orbit representative.
    pub repetitions: usize,
    /// Orbit representatives Γ_{s−1} (stage-n (s−1)-classes).
    pub gamma: Vec<u32>,
    /// Pattern types by (γ index, family j, repetition i), flattened in that order.
    pub types: Vec<u64>,
}

/// The relation Q_s^n and the G_s^n action on its classes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Level {
    pub s: usize,
    pub class_of_word: Vec<u32>,
    pub class_count: usize,
    /// Class of the enclosing (s−1)-class (empty at s = 0).
    pub parent: Vec<u32>,
    pub action: ActionTable,
    /// Pattern structure per class when this level was built by substitution at this stage.
    pub patterns: Option<Vec<Vec<PatternOccurrence>>>,
}

/// One stage of a construction sequence.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Stage {
    pub n: usize,
    /// σ_n
    pub node: FiniteSequence,
    /// Whether σ_n ∈ 𝒯.
    pub node_in_tree: bool,
    /// s(n)
    pub top_level: usize,
    /// Whether n = M(s(n)), i.e. the top level first appears here.
    pub new_level: bool,
    /// Common symbol length h_n.
    pub h: u64,
    /// Component ids (stage n−1 word ids; symbols at n = 0).
    pub words: Vec<Vec<u32>>,
    /// Q_0^n, …, Q_{s(n)}^n.
    pub levels: Vec<Level>,
    /// Number J of equal segments used by the boundary-agreement check.
    pub segments: usize,
    /// f_{n−1}: occurrences of each (n−1)-word in each n-word (0 at n = 0).
    pub f_prev: u64,
    pub level_params: Vec<LevelParams>,
    /// Build attempts used (arrangements are redrawn after a readability failure).
    pub attempts: u32,
}

impl Stage {
    /// k_{n−1}: components per word.
    pub fn k_prev(&self) -> usize {
        self.words.first().map_or(0, |w| w.len())
    }

    pub fn word_count(&self) -> usize {
        self.words.len()
    }

    /// [w]_s as a class id.
    pub fn class_of(&self, word: usize, s: usize) -> Result<ClassId> {
        let level = self
            .levels
            .get(s)
            .ok_or_else(|| Error::InvalidInput(format!("level {s} exceeds s({}) = {}", self.n, self.top_level)))?;
        let ordinal = *level
            .class_of_word
            .get(word)
            .ok_or_else(|| Error::InvalidInput(format!("word {word} outside W_{}", self.n)))?;
        Ok(ClassId { n: self.n, s, ordinal })
    }

    /// Words of a top-level class, in id order.
    pub fn members_of(&self, s: usize, class: u32) -> Vec<usize> {
        let level = &self.levels[s];
        (0..self.words.len()).filter(|&w| level.class_of_word[w] == class).collect()
    }
}

/// [u]_s: stage, level and ordinal within the partition.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ClassId {
    pub n: usize,
    pub s: usize,
    pub ordinal: u32,
}

/// A built construction sequence: stages 0..=n_max.
#[derive(Clone, Debug)]
pub struct ConstructionSequence {
    pub tree: TreeApproximation,
    pub params: ConstructionParams,
    pub stages: Vec<Stage>,
}

impl ConstructionSequence {
    pub fn stage(&self, n: usize) -> Result<&Stage> {
        self.stages.get(n).ok_or_else(|| Error::InvalidInput(format!("stage {n} was not built")))
    }

    pub fn top_stage(&self) -> usize {
        self.stages.len() - 1
    }

    pub fn class_of(&self, n: usize, word: usize, s: usize) -> Result<ClassId> {
        self.stage(n)?.class_of(word, s)
    }

    /// Symbols of n-word `word`, failing beyond `budget` symbols.
    pub fn word_symbols(&self, n: usize, word: usize, budget: u64) -> Result<Vec<u32>> {
        let stage = self.stage(n)?;
        if stage.h > budget {
            return Err(Error::Budget { what: format!("stage-{n} word"), required: stage.h as u128, cap: budget as u128 });
        }
        if n == 0 {
            return Ok(stage.words[word].clone());
        }
        let mut out = Vec::with_capacity(stage.h as usize);
        let mut cache = Materializer::new(self, n - 1, budget)?;
        for &c in &stage.words[word] {
            out.extend_from_slice(cache.get(c as usize)?);
        }
        Ok(out)
    }

    /// Composition structure for circularization: `[n][w]` lists component ids.
    pub fn components(&self) -> Vec<Vec<Vec<u32>>> {
        self.stages.iter().map(|s| if s.n == 0 { Vec::new() } else { s.words.clone() }).collect()
    }

    /// Validates every stage against its predecessor.
    pub fn validate_all(&self) -> Vec<ValidationReport> {
        (0..self.stages.len())
            .map(|n| validate_stage(&self.stages[n], n.checked_sub(1).map(|p| &self.stages[p]), &self.params))
            .collect()
    }

    /// Identifies a reversed n-word from its symbols and returns its reversed
    /// s-class, or None if the symbols are not rev(w) for any w ∈ W_n.
    pub fn class_of_reversed(&self, n: usize, symbols: &[u32], s: usize, budget: u64) -> Result<Option<RevClass>> {
        let stage = self.stage(n)?;
        if s > stage.top_level {
            return invalid(format!("level {s} exceeds s({n}) = {}", stage.top_level));
        }
        if symbols.len() as u64 != stage.h {
            return Ok(None);
        }
        for w in 0..stage.word_count() {
            let word = self.word_symbols(n, w, budget)?;
            if word.iter().rev().eq(symbols.iter()) {
                return Ok(Some(RevClass(stage.class_of(w, s)?.ordinal)));
            }
        }
        Ok(None)
    }

    /// Length of the longest branch the sequence can witness.
    pub fn top_level(&self) -> usize {
        self.stages.last().map_or(0, |s| s.top_level)
    }
}

/// Caches materialized words of one stage.
pub struct Materializer<'a> {
    seq: &'a ConstructionSequence,
    n: usize,
    budget: u64,
    cache: HashMap<usize, Vec<u32>>,
}

impl<'a> Materializer<'a> {
    pub fn new(seq: &'a ConstructionSequence, n: usize, budget: u64) -> Result<Self> {
        seq.stage(n)?;
        Ok(Self { seq, n, budget, cache: HashMap::new() })
    }

    pub fn get(&mut self, word: usize) -> Result<&[u32]> {
        if !self.cache.contains_key(&word) {
            let w = self.seq.word_symbols(self.n, word, self.budget)?;
            self.cache.insert(word, w);
        }
        Ok(&self.cache[&word])
    }
}
