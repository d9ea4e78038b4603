//! Coherent generator sequences along tree branches and the η_g bijections.

use serde::{Deserialize, Serialize};

use super::ConstructionSequence;
use crate::error::{invalid, Result};
use crate::involutions::{rho, skew_diagonal_apply_mask, GroupElement, RevClass};
use crate::trees::TreeApproximation;

/// A coherent sequence (g_1, …, g_S): g_s = g_{b↾s} along one branch b, so
/// ρ_{s+1,s}(g_{s+1}) = g_s, with the stages at which η was verified.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoherentSequence {
    pub branch: Vec<u32>,
    pub generators: Vec<GroupElement>,
    /// (n, s) pairs at which η_{g_s} was checked on W_n/Q_s^n.
    pub verified: Vec<(usize, usize)>,
}

/// Outcome of checking η_g on one stage and level.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EtaReport {
    pub n: usize,
    pub s: usize,
    /// η_g maps the s-classes bijectively onto the reversed classes.
    pub bijective: bool,
    /// The diagonal property holds on the component sequences (checked when n > M(s)).
    pub diagonal: Option<bool>,
    /// π_s ∘ η_{g_{s}} = η_{g_{s−1}} ∘ π_s on classes (checked for s ≥ 2).
    pub compatible: Option<bool>,
}

impl EtaReport {
    pub fn ok(&self) -> bool {
        self.bijective && self.diagonal != Some(false) && self.compatible != Some(false)
    }
}

/// Every coherent sequence of length `depth`: one per tree node of that length.
pub fn all_coherent_sequences(t: &TreeApproximation, depth: usize) -> Vec<Vec<GroupElement>> {
    t.nodes()
        .into_iter()
        .filter(|node| node.len() == depth)
        .map(|node| (1..=depth).map(|s| GroupElement::generator(node[..s].to_vec())).collect())
        .collect()
}

/// The coherent sequence along the lexicographically least longest branch, of
/// length `depth`, verified on every built stage where its generators act.
/// Absent when the tree has no branch of that length or verification fails.
pub fn coherent_branch_isomorphism(seq: &ConstructionSequence, depth: usize) -> Result<Option<CoherentSequence>> {
    let branch = seq.tree.longest_branch();
    if depth == 0 || branch.len() < depth {
        return Ok(None);
    }
    let branch = branch[..depth].to_vec();
    let generators: Vec<GroupElement> = (1..=depth).map(|s| GroupElement::generator(branch[..s].to_vec())).collect();
    for s in 1..depth {
        if rho(&generators[s], s + 1, s)? != generators[s - 1] {
            return Ok(None);
        }
    }
    let mut verified = Vec::new();
    for stage in &seq.stages {
        for s in 1..=depth.min(stage.top_level) {
            let g = &generators[s - 1];
            if stage.levels[s].action.group.mask(g).is_err() {
                continue;
            }
            let lower = if s >= 2 { Some(&generators[s - 2]) } else { None };
            let report = verify_eta_with(seq, stage.n, s, g, lower)?;
            if !report.ok() {
                return Ok(None);
            }
            verified.push((stage.n, s));
        }
    }
    Ok(Some(CoherentSequence { branch, generators, verified }))
}

/// Checks η_g on W_n/Q_s^n for an odd g ∈ G_s^n.
pub fn verify_eta(seq: &ConstructionSequence, n: usize, s: usize, g: &GroupElement) -> Result<EtaReport> {
    let lower = if s >= 2 { Some(rho(g, s, s - 1)?) } else { None };
    verify_eta_with(seq, n, s, g, lower.as_ref())
}

fn verify_eta_with(
    seq: &ConstructionSequence,
    n: usize,
    s: usize,
    g: &GroupElement,
    lower: Option<&GroupElement>,
) -> Result<EtaReport> {
    let stage = seq.stage(n)?;
    if s == 0 || s > stage.top_level {
        return invalid(format!("level {s} is not present at stage {n}"));
    }
    if g.generators().len() % 2 == 0 {
        return invalid("eta is defined for odd elements only");
    }
    let level = &stage.levels[s];
    let mask = level.action.group.mask(g)?;
    let images: Vec<RevClass> = (0..level.class_count as u32).map(|c| RevClass(level.action.apply_mask(mask, c))).collect();
    let mut hit = vec![false; level.class_count];
    images.iter().for_each(|r| hit[r.0 as usize] = true);
    let bijective = hit.iter().all(|&h| h);

    // Diagonal property: the reversal of any word in g·[w]_s reads, component by
    // component from the end, the g-images of the components of w.
    let diagonal = if n >= 1 && (s < stage.top_level || !stage.new_level) {
        let prev = seq.stage(n - 1)?;
        match prev.levels[s].action.group.mask(g) {
            Ok(prev_mask) => {
                let mut ok = true;
                let mut rep = vec![usize::MAX; level.class_count];
                for (w, &c) in level.class_of_word.iter().enumerate() {
                    if rep[c as usize] == usize::MAX {
                        rep[c as usize] = w;
                    }
                }
                for w in 0..stage.words.len() {
                    let c = level.class_of_word[w];
                    let image = rep[images[c as usize].0 as usize];
                    let mine: Vec<u32> = stage.words[w].iter().map(|&x| prev.levels[s].class_of_word[x as usize]).collect();
                    let theirs: Vec<u32> =
                        stage.words[image].iter().rev().map(|&x| prev.levels[s].class_of_word[x as usize]).collect();
                    let expected: Vec<u32> = skew_diagonal_apply_mask(prev_mask, &mine, &prev.levels[s].action)?
                        .into_iter()
                        .rev()
                        .collect();
                    if theirs != expected {
                        ok = false;
                        break;
                    }
                }
                Some(ok)
            }
            Err(_) => None,
        }
    } else {
        None
    };

    let compatible = match lower {
        Some(h) if s >= 2 => {
            let below = &stage.levels[s - 1];
            let hmask = below.action.group.mask(h)?;
            Some((0..level.class_count).all(|c| {
                level.parent[images[c].0 as usize] == below.action.apply_mask(hmask, level.parent[c])
            }))
        }
        _ => None,
    };
    Ok(EtaReport { n, s, bijective, diagonal, compatible })
}
