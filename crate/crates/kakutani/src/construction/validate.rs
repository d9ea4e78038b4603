//! Independent re-checking of a built stage against the structural rules.
//!
//! Every check recomputes its facts from the words, class labels and action
//! tables; nothing is taken from the builder's intermediate data except the
//! recorded pattern metadata, which is itself checked against the words.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::{ConstructionParams, Stage};
use crate::involutions::{rho, skew_diagonal_apply_mask};

/// Outcome of one named check.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckResult {
    pub id: String,
    pub passed: bool,
    pub detail: String,
}

/// All checks run on one stage.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub n: usize,
    pub checks: Vec<CheckResult>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    /// Identifiers of the failed checks, in check order.
    pub fn failures(&self) -> Vec<&str> {
        self.checks.iter().filter(|c| !c.passed).map(|c| c.id.as_str()).collect()
    }
}

fn check(id: &str, outcome: std::result::Result<(), String>) -> CheckResult {
    match outcome {
        Ok(()) => CheckResult { id: id.into(), passed: true, detail: String::new() },
        Err(detail) => CheckResult { id: id.into(), passed: false, detail },
    }
}

type Outcome = std::result::Result<(), String>;

/// Checks stage `stage` given its predecessor (absent only for stage 0).
pub fn validate_stage(stage: &Stage, prev: Option<&Stage>, params: &ConstructionParams) -> ValidationReport {
    let mut checks = Vec::new();
    match prev {
        None => {
            checks.push(check("E1", alphabet_shape(stage, params)));
        }
        Some(prev) => {
            let e1 = lengths(stage, prev);
            let structural = e1.is_ok();
            checks.push(check("E1", e1));
            if !structural {
                return ValidationReport { n: stage.n, checks };
            }
            checks.push(check("E2", frequencies(stage, prev, params)));
            checks.push(check("E3", unique_readability(&stage.words).map_or(Ok(()), Err)));
            checks.push(check("Q4", boundary_agreement(stage, prev, params)));
            let labels = labels_consistent(stage, prev);
            let labels_ok = labels.is_ok();
            checks.push(check("Q5", labels.and_then(|_| determined_by_components(stage, prev))));
            checks.push(check("Q6", refinement(stage, params)));
            checks.push(check("A7", actions(stage, prev)));
            if labels_ok {
                checks.push(check("A8", skew_closure(stage, prev)));
                checks.push(check("R5.2", balanced_runs(stage, prev)));
            } else {
                checks.push(check("A8", Err("class labels unusable".into())));
                checks.push(check("R5.2", Err("class labels unusable".into())));
            }
            checks.push(check("P8", pattern_injectivity(stage, prev)));
        }
    }
    ValidationReport { n: stage.n, checks }
}

fn alphabet_shape(stage: &Stage, params: &ConstructionParams) -> Outcome {
    if stage.words.len() != params.alphabet_size as usize || !stage.words.len().is_power_of_two() {
        return Err(format!("|W_0| = {} is not the alphabet size", stage.words.len()));
    }
    if stage.words.iter().enumerate().any(|(i, w)| w != &[i as u32]) {
        return Err("W_0 must list the symbols in order".into());
    }
    Ok(())
}

fn lengths(stage: &Stage, prev: &Stage) -> Outcome {
    let k = stage.k_prev();
    if k == 0 {
        return Err("empty words".into());
    }
    if !stage.words.len().is_power_of_two() {
        return Err(format!("|W_{}| = {} is not a power of two", stage.n, stage.words.len()));
    }
    if let Some(i) = stage.words.iter().position(|w| w.len() != k) {
        return Err(format!("word {i} has {} components, expected {k}", stage.words[i].len()));
    }
    if stage.words.iter().flatten().any(|&c| c as usize >= prev.words.len()) {
        return Err("component id outside the previous word set".into());
    }
    if stage.h != k as u64 * prev.h {
        return Err(format!("h = {} but k·h_prev = {}", stage.h, k as u64 * prev.h));
    }
    Ok(())
}

fn frequencies(stage: &Stage, prev: &Stage, params: &ConstructionParams) -> Outcome {
    let f = stage.f_prev;
    let prime = params.prime(stage.n - 1).map_err(|e| e.to_string())?;
    let mut rest = f;
    if rest % (prime * prime) != 0 {
        return Err(format!("f = {f} is not a multiple of {}²", prime));
    }
    rest /= prime * prime;
    if !rest.is_power_of_two() {
        return Err(format!("f = {f} is not {prime}²·2^j"));
    }
    if stage.k_prev() as u64 != f * prev.words.len() as u64 {
        return Err(format!("k = {} differs from f·|W_prev|", stage.k_prev()));
    }
    let mut counts = vec![0u64; prev.words.len()];
    for (i, w) in stage.words.iter().enumerate() {
        counts.iter_mut().for_each(|c| *c = 0);
        for &c in w {
            counts[c as usize] += 1;
        }
        if let Some(v) = counts.iter().position(|&c| c != f) {
            return Err(format!("word {i} contains prev word {v} {} times instead of {f}", counts[v]));
        }
    }
    Ok(())
}

/// Returns a description of the first violation of unique readability, if any:
/// two equal words, or a window of at least half a word length inside some
/// word (at a nonzero shift) equal to the start of another.
pub(crate) fn unique_readability(words: &[Vec<u32>]) -> Option<String> {
    let k = words.first()?.len();
    let k0 = (k / 2).max(1);
    const BASE: u64 = 0x100_0000_01B3;
    let hash = |s: &[u32]| s.iter().fold(0u64, |h, &x| h.wrapping_mul(BASE).wrapping_add(x as u64 + 1));
    let mut prefixes: HashMap<u64, Vec<usize>> = HashMap::new();
    let mut seen: HashMap<&[u32], usize> = HashMap::new();
    for (i, w) in words.iter().enumerate() {
        if let Some(j) = seen.insert(w.as_slice(), i) {
            return Some(format!("words {j} and {i} coincide"));
        }
        prefixes.entry(hash(&w[..k0])).or_default().push(i);
    }
    let top = BASE.wrapping_pow(k0 as u32 - 1);
    for (i, w) in words.iter().enumerate() {
        let mut h = hash(&w[..k0]);
        for shift in 1..=(k - k0) {
            h = h.wrapping_sub((w[shift - 1] as u64 + 1).wrapping_mul(top));
            h = h.wrapping_mul(BASE).wrapping_add(w[shift + k0 - 1] as u64 + 1);
            if let Some(list) = prefixes.get(&h) {
                for &j in list {
                    if w[shift..shift + k0] == words[j][..k0] {
                        return Some(format!("word {j} starts inside word {i} at shift {shift}"));
                    }
                }
            }
        }
    }
    None
}

fn boundary_agreement(stage: &Stage, prev: &Stage, params: &ConstructionParams) -> Outcome {
    if !stage.new_level || stage.top_level == 0 {
        return Ok(());
    }
    let k = stage.k_prev();
    let j = stage.segments;
    if j == 0 || k % j != 0 {
        return Err(format!("{k} components do not split into {j} segments"));
    }
    let seg = (k / j) as i128;
    let eps = params.epsilon(stage.n).map_err(|e| e.to_string())?;
    let win = (*eps.numer() as i128 * stage.h as i128) / (*eps.denom() as i128 * 2 * j as i128);
    let hp = prev.h as i128;
    let top = &stage.levels[stage.top_level];
    let mut by_class: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    for (w, &c) in top.class_of_word.iter().enumerate() {
        by_class.entry(c).or_default().push(w);
    }
    for (c, members) in by_class {
        for (a, &u) in members.iter().enumerate() {
            for &v in &members[a + 1..] {
                for (p, (x, y)) in stage.words[u].iter().zip(&stage.words[v]).enumerate() {
                    if x == y {
                        continue;
                    }
                    let off = (p as i128 % seg) * hp;
                    let inside = off + hp <= win || off >= seg * hp - win;
                    if !inside {
                        return Err(format!("class {c}: words {u} and {v} differ at component {p}, outside the boundary windows"));
                    }
                }
            }
        }
    }
    Ok(())
}

fn labels_consistent(stage: &Stage, prev: &Stage) -> Outcome {
    if stage.levels.len() != stage.top_level + 1 || prev.levels.len() != prev.top_level + 1 {
        return Err("level count differs from s(n) + 1".into());
    }
    for level in &stage.levels {
        if level.class_of_word.len() != stage.words.len() {
            return Err(format!("level {} labels {} words", level.s, level.class_of_word.len()));
        }
        if level.class_of_word.iter().any(|&c| c as usize >= level.class_count) {
            return Err(format!("level {} has a label outside its classes", level.s));
        }
    }
    Ok(())
}

/// Levels s ≥ 1 with n > M(s): [w]_s is read off the s-classes of the components.
fn old_levels(stage: &Stage) -> std::ops::RangeInclusive<usize> {
    let last = if stage.new_level { stage.top_level.saturating_sub(1) } else { stage.top_level };
    1..=last
}

/// Component s-class sequence of word `w`.
fn component_classes(stage: &Stage, prev: &Stage, w: usize, s: usize) -> Vec<u32> {
    stage.words[w].iter().map(|&c| prev.levels[s].class_of_word[c as usize]).collect()
}

fn determined_by_components(stage: &Stage, prev: &Stage) -> Outcome {
    for s in old_levels(stage) {
        if s > prev.top_level {
            return Err(format!("level {s} is missing at stage {}", prev.n));
        }
        let level = &stage.levels[s];
        let mut seq_class: HashMap<Vec<u32>, u32> = HashMap::new();
        let mut class_seq: HashMap<u32, usize> = HashMap::new();
        for w in 0..stage.words.len() {
            let seq = component_classes(stage, prev, w, s);
            let c = level.class_of_word[w];
            if let Some(&other) = seq_class.get(&seq) {
                if other != c {
                    return Err(format!("level {s}: one component sequence in classes {other} and {c}"));
                }
            } else {
                seq_class.insert(seq, c);
                if let Some(prev_w) = class_seq.insert(c, w) {
                    return Err(format!("level {s}: class {c} holds words {prev_w} and {w} with different sequences"));
                }
            }
        }
    }
    Ok(())
}

fn refinement(stage: &Stage, params: &ConstructionParams) -> Outcome {
    let d = params.split(stage.n);
    if stage.levels[0].class_count != 1 {
        return Err("Q_0 must have a single class".into());
    }
    for s in 1..stage.levels.len() {
        let (upper, lower) = (&stage.levels[s], &stage.levels[s - 1]);
        if upper.parent.len() != upper.class_count {
            return Err(format!("level {s}: parent table has {} entries", upper.parent.len()));
        }
        for (w, (&c, &p)) in upper.class_of_word.iter().zip(&lower.class_of_word).enumerate() {
            if upper.parent[c as usize] != p {
                return Err(format!("level {s}: word {w} is not nested in its {}-class", s - 1));
            }
        }
        let mut children = vec![0usize; lower.class_count];
        for &p in &upper.parent {
            if p as usize >= lower.class_count {
                return Err(format!("level {s}: parent {p} outside level {}", s - 1));
            }
            children[p as usize] += 1;
        }
        if let Some(p) = children.iter().position(|&c| c != d) {
            return Err(format!("level {s}: class {p} splits into {} classes instead of {d}", children[p]));
        }
        let mut used = vec![false; upper.class_count];
        upper.class_of_word.iter().for_each(|&c| used[c as usize] = true);
        if let Some(c) = used.iter().position(|&u| !u) {
            return Err(format!("level {s}: class {c} is empty"));
        }
    }
    Ok(())
}

fn actions(stage: &Stage, prev: &Stage) -> Outcome {
    for (s, level) in stage.levels.iter().enumerate() {
        let table = &level.action;
        if table.group.level != s || table.domain_size != level.class_count {
            return Err(format!("level {s}: table shape does not match the partition"));
        }
        table.validate().map_err(|e| format!("level {s}: {e}"))?;
        if let Some((mask, c)) = table.stabilizer_violations().first() {
            return Err(format!("level {s}: element {mask:#b} fixes class {c}"));
        }
        if let Some(p) = prev.levels.get(s) {
            if !table.group.generators.starts_with(&p.action.group.generators) {
                return Err(format!("level {s}: generators do not extend the previous stage"));
            }
        }
        if s >= 2 {
            let lower = &stage.levels[s - 1];
            for (i, g) in table.group.generators.iter().enumerate() {
                let image = rho(&crate::involutions::GroupElement::generator(g.clone()), s, s - 1)
                    .and_then(|e| lower.action.group.mask(&e))
                    .map_err(|e| format!("level {s}: {e}"))?;
                for x in 0..level.class_count {
                    let gx = table.images[i][x] as usize;
                    if level.parent[gx] != lower.action.apply_mask(image, level.parent[x]) {
                        return Err(format!("level {s}: generator {g:?} is not subordinate on class {x}"));
                    }
                }
            }
        }
    }
    Ok(())
}

fn skew_closure(stage: &Stage, prev: &Stage) -> Outcome {
    for s in old_levels(stage) {
        let level = &stage.levels[s];
        let prev_table = &prev.levels[s].action;
        let mut rep = vec![usize::MAX; level.class_count];
        for (w, &c) in level.class_of_word.iter().enumerate() {
            if rep[c as usize] == usize::MAX {
                rep[c as usize] = w;
            }
        }
        let seqs: Vec<Vec<u32>> = rep.iter().map(|&w| component_classes(stage, prev, w, s)).collect();
        for i in 0..prev_table.group.rank() {
            for x in 0..level.class_count {
                let expected = skew_diagonal_apply_mask(1 << i, &seqs[x], prev_table).map_err(|e| e.to_string())?;
                let gx = level.action.images[i][x] as usize;
                if seqs[gx] != expected {
                    return Err(format!("level {s}: generator {i} maps class {x} to a class that is not its skew image"));
                }
            }
        }
    }
    Ok(())
}

fn balanced_runs(stage: &Stage, prev: &Stage) -> Outcome {
    let levels = 1..=prev.top_level.min(stage.top_level);
    for s in levels {
        let prev_level = &prev.levels[s];
        let mut size = vec![0usize; prev_level.class_count];
        prev_level.class_of_word.iter().for_each(|&c| size[c as usize] += 1);
        for w in 0..stage.words.len() {
            let seq = component_classes(stage, prev, w, s);
            let comps = &stage.words[w];
            let mut i = 0;
            while i < seq.len() {
                let c = seq[i];
                let len = seq[i..].iter().take_while(|&&x| x == c).count();
                let mut counts: HashMap<u32, usize> = HashMap::new();
                comps[i..i + len].iter().for_each(|&x| *counts.entry(x).or_insert(0) += 1);
                let members = size[c as usize];
                let first = *counts.values().next().unwrap_or(&0);
                if counts.len() != members || counts.values().any(|&v| v != first) {
                    return Err(format!("level {s}: word {w} has an unbalanced run at component {i}"));
                }
                i += len;
            }
        }
    }
    Ok(())
}

fn pattern_injectivity(stage: &Stage, prev: &Stage) -> Outcome {
    for level in &stage.levels {
        let Some(patterns) = &level.patterns else { continue };
        let s = level.s;
        let old_rank = prev.levels.get(s).map_or(0, |p| p.action.group.rank());
        let mut by_type: HashMap<u64, Vec<(usize, &[u32])>> = HashMap::new();
        for (x, occ) in patterns.iter().enumerate() {
            let mut types: Vec<u64> = occ.iter().map(|o| o.pattern_type).collect();
            types.sort_unstable();
            if types.windows(2).any(|t| t[0] == t[1]) {
                return Err(format!("level {s}: class {x} repeats a pattern type"));
            }
            for o in occ {
                by_type.entry(o.pattern_type).or_default().push((x, &o.tuple));
            }
        }
        for (ty, list) in by_type {
            let (x, tx) = list[0];
            let orbit: Vec<u32> = (0..1u64 << old_rank).map(|m| level.action.apply_mask(m, x as u32)).collect();
            for &(y, ty_tuple) in &list[1..] {
                if !orbit.contains(&(y as u32)) {
                    return Err(format!("level {s}: type {ty} occurs in classes {x} and {y} from different orbits"));
                }
                if tx.iter().any(|b| ty_tuple.contains(b)) {
                    return Err(format!("level {s}: type {ty} reuses building classes in {x} and {y}"));
                }
            }
        }
    }
    Ok(())
}
