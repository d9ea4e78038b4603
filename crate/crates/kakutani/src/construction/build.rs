//! Stage-by-stage construction of W_n, Q_s^n and the G_s^n actions.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::validate::unique_readability;
use super::{ConstructionParams, ConstructionSequence, Level, LevelParams, PatternOccurrence, Stage};
use crate::error::{invalid, Error, Result};
use crate::involutions::{build_group, rho, skew_diagonal_apply_mask, ActionTable, InvolutionGroup};
use crate::trees::{canonical_enumeration, TreeApproximation};

/// Largest pattern multiplicity P considered before giving up.
const MAX_PATTERN_MULTIPLICITY: u64 = 1 << 40;

/// Builds stages 0..=n_max for the tree `t`.
pub fn build_construction_sequence(
    t: &TreeApproximation,
    n_max: usize,
    params: &ConstructionParams,
) -> Result<ConstructionSequence> {
    params.validate()?;
    if n_max as u64 > t.horizon() {
        return invalid(format!("n_max = {n_max} exceeds the tree horizon {}", t.horizon()));
    }
    let mut stages = vec![stage_zero(params)];
    for n in 1..=n_max {
        let stage = build_stage(t, params, &stages[n - 1], n)?;
        stages.push(stage);
    }
    Ok(ConstructionSequence { tree: t.clone(), params: params.clone(), stages })
}

fn stage_zero(params: &ConstructionParams) -> Stage {
    let a = params.alphabet_size as usize;
    Stage {
        n: 0,
        node: Vec::new(),
        node_in_tree: true,
        top_level: 0,
        new_level: true,
        h: 1,
        words: (0..a as u32).map(|c| vec![c]).collect(),
        levels: vec![Level {
            s: 0,
            class_of_word: vec![0; a],
            class_count: 1,
            parent: Vec::new(),
            action: ActionTable::trivial(0, 1),
            patterns: None,
        }],
        segments: 1,
        f_prev: 0,
        level_params: Vec::new(),
        attempts: 1,
    }
}

fn stage_rng(seed: u64, n: usize, attempt: u32) -> ChaCha8Rng {
    let mix = seed
        ^ (n as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ (attempt as u64).wrapping_mul(0xD1B5_4A32_D192_ED03);
    ChaCha8Rng::seed_from_u64(mix)
}

fn divisors(p: u64) -> Vec<u64> {
    let mut out: Vec<u64> = (1..).take_while(|d| d * d <= p).filter(|d| p % d == 0).flat_map(|d| [d, p / d]).collect();
    out.sort_unstable();
    out.dedup();
    out
}

/// Least P = 𝔭²·2^j (or 2^j without a prime) with at least `needed` divisors.
fn pattern_multiplicity(prime: Option<u64>, needed: usize) -> Result<u64> {
    let base = prime.map_or(1, |p| p * p);
    let mut p = base;
    while divisors(p).len() < needed {
        p *= 2;
        if p > MAX_PATTERN_MULTIPLICITY {
            return Err(Error::Budget {
                what: format!("pattern multiplicity with {needed} distinct pattern types"),
                required: needed as u128,
                cap: divisors(MAX_PATTERN_MULTIPLICITY / 2 * base.min(2)).len() as u128,
            });
        }
    }
    Ok(p)
}

/// Masks of G_s^{n−1} grouped by their image under ρ_{s,s−1}, as masks of `lower`.
fn rho_masks(upper: &InvolutionGroup, lower: &InvolutionGroup) -> Result<Vec<u64>> {
    upper
        .masks()
        .map(|m| {
            let e = rho(&upper.element(m), upper.level, upper.level - 1)?;
            if upper.level == 1 {
                Ok(0)
            } else {
                lower.mask(&e)
            }
        })
        .collect()
}

/// Builds stage n from stage n−1.
pub fn build_stage(t: &TreeApproximation, params: &ConstructionParams, prev: &Stage, n: usize) -> Result<Stage> {
    if n == 0 || prev.n + 1 != n {
        return invalid(format!("stage {n} cannot follow stage {}", prev.n));
    }
    let mut last_err = None;
    for attempt in 0..params.max_attempts {
        let mut rng = stage_rng(params.seed, n, attempt);
        let mut stage = build_attempt(t, params, prev, n, &mut rng)?;
        match unique_readability(&stage.words) {
            None => {
                stage.attempts = attempt + 1;
                return Ok(stage);
            }
            Some(detail) => last_err = Some(detail),
        }
    }
    Err(Error::Invariant(format!(
        "stage {n}: unique readability failed after {} attempts ({})",
        params.max_attempts,
        last_err.unwrap_or_default()
    )))
}

/// A stage-n class at level s: its sequence of (n−1)-word s-classes, each entry
/// standing for `unit` consecutive components.
struct Draft {
    reps: Vec<u32>,
    patterns: Vec<PatternOccurrence>,
}

fn build_attempt(
    t: &TreeApproximation,
    params: &ConstructionParams,
    prev: &Stage,
    n: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Stage> {
    let node = canonical_enumeration(n as u64);
    let in_tree = t.contains_index(n as u64);
    let sp = prev.top_level;
    let new_level = in_tree && node.len() == sp + 1;
    let new_generator_level = (in_tree && !node.is_empty() && node.len() <= sp).then(|| node.len());
    let top = if new_level { sp + 1 } else { sp };
    let d = params.split(n);
    let d_prev = params.split(n - 1);
    let prime = params.prime(n - 1)?;
    let prev_top = &prev.levels[sp];
    let mu = prev.word_count() / prev_top.class_count;
    if mu * prev_top.class_count != prev.word_count() {
        return Err(Error::Invariant(format!("stage {}: top classes have unequal sizes", prev.n)));
    }

    // Kernel sizes, block counts and family counts per substitution level.
    let mut kernels: Vec<Vec<u64>> = vec![Vec::new()];
    for s in 1..=sp {
        let upper = &prev.levels[s].action.group;
        let lower = &prev.levels[s - 1].action.group;
        let images = rho_masks(upper, lower)?;
        kernels.push(upper.masks().filter(|&m| images[m as usize] == 0).collect());
    }
    let t_of = |s: usize| kernels[s].len().trailing_zeros();
    let c0 = if sp >= 1 { kernels[1].len() } else { 1 };

    // Stage-n groups and level-(s−1) tables are built top-down.
    let mut tables: Vec<ActionTable> = vec![ActionTable { group: build_group(t, 0, n as u64), domain_size: 1, images: Vec::new() }];
    let drafts: Vec<Draft> = vec![Draft { reps: vec![0; c0], patterns: Vec::new() }];
    let mut parents: Vec<Vec<u32>> = vec![Vec::new()];
    let mut patterns: Vec<Option<Vec<Vec<PatternOccurrence>>>> = vec![None];
    let mut level_params: Vec<LevelParams> = Vec::new();
    let mut level_drafts: Vec<Vec<Draft>> = vec![drafts];

    // Multiplicities are chosen top-down because the type demand grows with depth.
    let mut repetitions = c0;
    let mut plan: Vec<(usize, usize, u64, usize)> = Vec::new(); // (n_blocks, k_families, P, ρ)
    for s in 1..=sp {
        let ker = kernels[s].len();
        if d_prev % ker != 0 || d % ker != 0 {
            return Err(Error::Budget {
                what: format!("level {s}: kernel of order {ker} against splits {d_prev}/{d}"),
                required: ker as u128,
                cap: d.min(d_prev) as u128,
            });
        }
        let n_blocks = d_prev / ker;
        let k_families = d / ker;
        if new_generator_level == Some(s) && k_families % 2 == 1 {
            return invalid(format!("level {s}: the family swap needs an even number of families"));
        }
        let image_order = 1usize << (prev.levels[s].action.group.rank() - t_of(s) as usize);
        let gamma_len = d.pow(s as u32 - 1) / image_order;
        let needed = gamma_len * k_families * repetitions;
        let p = pattern_multiplicity((s == 1).then_some(prime), needed)?;
        let rho_s = if s < sp { 1usize << t_of(s + 1) } else { mu };
        plan.push((n_blocks, k_families, p, rho_s));
        repetitions = repetitions
            .checked_mul(n_blocks * p as usize * rho_s)
            .ok_or_else(|| Error::Budget { what: "repetition count".into(), required: u128::MAX, cap: usize::MAX as u128 })?;
    }
    // Units u_s, from the deepest level up.
    let mut units = vec![1usize; sp + 1];
    for s in (1..=sp).rev() {
        let (n_blocks, _, p, rho_s) = plan[s - 1];
        units[s - 1] = n_blocks * p as usize * rho_s * units[s];
    }
    let f: u64 = if sp == 0 { prime * prime } else { plan.iter().map(|x| x.2).product() };
    let k = if sp == 0 { f as usize * prev.word_count() } else { c0 * units[0] };
    let word_count = d.pow(top as u32) * params.members;
    let required = word_count as u128 * k as u128;
    if required > params.pattern_budget as u128 {
        return Err(Error::Budget { what: format!("stage {n} component table"), required, cap: params.pattern_budget as u128 });
    }
    if k as u64 != f * prev.word_count() as u64 {
        return Err(Error::Invariant(format!("stage {n}: k = {k} but f·|W| = {}", f * prev.word_count() as u64)));
    }

    for s in 1..=sp {
        let (n_blocks, k_families, p, rho_s) = plan[s - 1];
        let prev_table = &prev.levels[s].action;
        let prev_parent = &prev.levels[s].parent;
        let ker = &kernels[s];
        let cur = &tables[s - 1];
        let above = &level_drafts[s - 1];

        // Building tuples per (n−1)-word (s−1)-class: kernel-orbit minima and their translates.
        let parent_count = prev.levels[s - 1].class_count;
        let mut tuples: Vec<Vec<Vec<u32>>> = vec![Vec::new(); parent_count];
        for (a, slot) in tuples.iter_mut().enumerate() {
            let mut base: Vec<u32> = (0..prev_table.domain_size as u32)
                .filter(|&x| prev_parent[x as usize] as usize == a)
                .map(|x| ker.iter().map(|&m| prev_table.apply_mask(m, x)).min().unwrap_or(x))
                .collect();
            base.sort_unstable();
            base.dedup();
            if base.len() != n_blocks {
                return Err(Error::Invariant(format!("level {s}: {} kernel orbits, expected {n_blocks}", base.len())));
            }
            *slot = ker.iter().map(|&m| base.iter().map(|&x| prev_table.apply_mask(m, x)).collect()).collect();
        }

        // Orbit representatives of ρ(G_s^{n−1}) on stage-n (s−1)-classes.
        let upper = &prev_table.group;
        let image_masks: Vec<u64> = if s == 1 {
            vec![0]
        } else {
            let mut v = rho_masks(upper, &cur.group)?;
            v.sort_unstable();
            v.dedup();
            v
        };
        let mut lift: HashMap<u64, u64> = HashMap::new();
        if s > 1 {
            for (m, img) in rho_masks(upper, &cur.group)?.into_iter().enumerate() {
                lift.entry(img).or_insert(m as u64);
            }
        } else {
            lift.insert(0, 0);
        }
        let rep_of: Vec<(u32, u64)> = (0..cur.domain_size as u32)
            .map(|c| image_masks.iter().map(|&m| (cur.apply_mask(m, c), m)).min().expect("nonempty image"))
            .collect();
        let mut gamma: Vec<u32> = rep_of.iter().map(|r| r.0).collect();
        gamma.sort_unstable();
        gamma.dedup();
        let gamma_index: HashMap<u32, usize> = gamma.iter().enumerate().map(|(i, &g)| (g, i)).collect();

        // Pattern types: a seeded order of the divisors of P, one per (γ, j, i).
        let reps_per_gamma = above[gamma[0] as usize].reps.len();
        let needed = gamma.len() * k_families * reps_per_gamma;
        let mut types = divisors(p);
        types.shuffle(rng);
        types.truncate(needed);
        if types.len() < needed {
            return Err(Error::Invariant(format!("level {s}: {} types for {needed} positions", types.len())));
        }

        let unit_above = units[s - 1];
        let mut omegas: Vec<Draft> = Vec::with_capacity(gamma.len() * k_families);
        for (gi, &g) in gamma.iter().enumerate() {
            for j in 0..k_families {
                let mut counter: HashMap<u32, usize> = HashMap::new();
                let mut reps = Vec::with_capacity(above[g as usize].reps.len() * n_blocks * p as usize * rho_s);
                let mut occ = Vec::new();
                for (i, &a) in above[g as usize].reps.iter().enumerate() {
                    let c = counter.entry(a).or_insert(0);
                    let tuple = &tuples[a as usize][*c % ker.len()];
                    *c += 1;
                    let ty = types[(gi * k_families + j) * reps_per_gamma + i];
                    for _ in 0..p / ty {
                        for &b in tuple {
                            reps.extend(std::iter::repeat(b).take(ty as usize * rho_s));
                        }
                    }
                    occ.push(PatternOccurrence {
                        pattern_type: ty,
                        tuple: tuple.clone(),
                        start: i * unit_above,
                        len: unit_above,
                        reversed: false,
                    });
                }
                omegas.push(Draft { reps, patterns: occ });
            }
        }

        // Classes (ω, g) for g ∈ G_s^{n−1}, with the skew-diagonal action.
        let rank = upper.rank();
        let rho_of: Vec<u64> = if s == 1 { vec![0; 1 << rank] } else { rho_masks(upper, &cur.group)? };
        let mut classes = Vec::with_capacity(omegas.len() << rank);
        let mut parent = Vec::with_capacity(omegas.len() << rank);
        for (oi, omega) in omegas.iter().enumerate() {
            let g_gamma = gamma[oi / k_families];
            for mask in upper.masks() {
                let reps = skew_diagonal_apply_mask(mask, &omega.reps, prev_table)?;
                let odd = mask.count_ones() % 2 == 1;
                let mut occ: Vec<PatternOccurrence> = omega
                    .patterns
                    .iter()
                    .map(|o| {
                        let mut tuple: Vec<u32> = o.tuple.iter().map(|&x| prev_table.apply_mask(mask, x)).collect();
                        if odd {
                            tuple.reverse();
                        }
                        PatternOccurrence {
                            pattern_type: o.pattern_type,
                            tuple,
                            start: if odd { k - o.start - o.len } else { o.start },
                            len: o.len,
                            reversed: odd,
                        }
                    })
                    .collect();
                if odd {
                    occ.reverse();
                }
                classes.push(Draft { reps, patterns: occ });
                parent.push(cur.apply_mask(rho_of[mask as usize], g_gamma));
            }
        }

        // G_s^n acts on (ω, g): old generators flip a bit of g; a new generator swaps families.
        let group = build_group(t, s, n as u64);
        let domain = classes.len();
        let mut images: Vec<Vec<u32>> = (0..rank).map(|i| (0..domain as u32).map(|x| x ^ (1 << i)).collect()).collect();
        if group.rank() == rank + 1 {
            let tau = &node[..s - 1];
            let m_tau = if s == 1 { 0 } else { cur.group.mask(&crate::involutions::GroupElement::generator(tau.to_vec()))? };
            let img: Vec<u32> = (0..domain as u32)
                .map(|x| {
                    let (oi, g) = (x as usize >> rank, x as u64 & ((1 << rank) - 1));
                    let (gi, j) = (oi / k_families, oi % k_families);
                    let moved = cur.apply_mask(m_tau, gamma[gi]);
                    let (rep, conn) = rep_of[moved as usize];
                    let g2 = lift[&conn];
                    let target = if rep != gamma[gi] { gamma_index[&rep] * k_families + j } else { gi * k_families + (j ^ 1) };
                    ((target << rank) as u64 | (g ^ g2)) as u32
                })
                .collect();
            images.push(img);
        } else if group.rank() != rank {
            return Err(Error::Invariant(format!("level {s}: group rank {} after {rank}", group.rank())));
        }
        let table = ActionTable { group, domain_size: domain, images };

        level_params.push(LevelParams {
            s,
            t: t_of(s),
            n_blocks,
            p,
            k_families,
            run_multiplier: rho_s,
            unit: units[s],
            repetitions: reps_per_gamma,
            gamma: gamma.clone(),
            types,
        });
        patterns.push(Some(classes.iter().map(|c| c.patterns.clone()).collect()));
        parents.push(parent);
        tables.push(table);
        level_drafts.push(classes);
    }

    // Members of each top (n−1)-class, and component class sequences of the deepest stage-n classes.
    let mut members_of: Vec<Vec<u32>> = vec![Vec::new(); prev_top.class_count];
    for (w, &c) in prev_top.class_of_word.iter().enumerate() {
        members_of[c as usize].push(w as u32);
    }
    let deepest: Vec<Vec<u32>> = if sp == 0 {
        vec![vec![0; k]]
    } else {
        level_drafts[sp].iter().map(|c| c.reps.clone()).collect()
    };
    for seq in &deepest {
        if seq.len() != k {
            return Err(Error::Invariant(format!("stage {n}: class sequence of length {} for k = {k}", seq.len())));
        }
    }

    let mut words: Vec<Vec<u32>> = Vec::with_capacity(word_count);
    let mut top_class: Vec<u32> = Vec::with_capacity(word_count);
    let segments;
    if new_level {
        segments = c0;
        for (c, seq) in deepest.iter().enumerate() {
            for f_idx in 0..d {
                let base = arrange(seq, &members_of, rng)?;
                let first_run = seq.iter().take_while(|&&x| x == seq[0]).count();
                let pairs = disjoint_swaps(&base[..first_run], params.members - 1);
                if pairs.len() + 1 < params.members {
                    return Err(Error::Invariant(format!("stage {n}: first run too uniform for {} members", params.members)));
                }
                let class = (c * d + f_idx) as u32;
                words.push(base.clone());
                top_class.push(class);
                for &p in &pairs {
                    let mut w = base.clone();
                    w.swap(p, p + 1);
                    words.push(w);
                    top_class.push(class);
                }
            }
        }
        // The single new generator g_{σ_n} moves (c, f) to (g_{τ'}·c, f ⊕ 1).
        let group = build_group(t, top, n as u64);
        let cur = &tables[sp];
        let m_tau = if sp == 0 {
            0
        } else {
            cur.group.mask(&crate::involutions::GroupElement::generator(node[..sp].to_vec()))?
        };
        let domain = deepest.len() * d;
        let img: Vec<u32> = (0..domain)
            .map(|x| (cur.apply_mask(m_tau, (x / d) as u32) as usize * d + ((x % d) ^ 1)) as u32)
            .collect();
        tables.push(ActionTable { group, domain_size: domain, images: vec![img] });
        parents.push((0..domain).map(|x| (x / d) as u32).collect());
        patterns.push(None);
    } else {
        segments = 1;
        for (c, seq) in deepest.iter().enumerate() {
            for _ in 0..params.members {
                words.push(arrange(seq, &members_of, rng)?);
                top_class.push(c as u32);
            }
        }
    }

    // Class labels for every level, following parents down from the top.
    let mut levels: Vec<Level> = Vec::with_capacity(top + 1);
    let mut labels = top_class;
    let mut per_level: Vec<Vec<u32>> = vec![Vec::new(); top + 1];
    for s in (0..=top).rev() {
        per_level[s] = labels.clone();
        if s > 0 {
            labels = labels.iter().map(|&c| parents[s][c as usize]).collect();
        }
    }
    for (s, (table, class_of_word)) in tables.into_iter().zip(per_level).enumerate() {
        levels.push(Level {
            s,
            class_count: table.domain_size,
            class_of_word,
            parent: std::mem::take(&mut parents[s]),
            action: table,
            patterns: patterns[s].take(),
        });
    }

    Ok(Stage {
        n,
        node,
        node_in_tree: in_tree,
        top_level: top,
        new_level,
        h: k as u64 * prev.h,
        words,
        levels,
        segments,
        f_prev: f,
        level_params,
        attempts: 1,
    })
}

/// Fills every maximal run of a class sequence with a shuffled balanced
/// multiset of that class's member words.
fn arrange(seq: &[u32], members_of: &[Vec<u32>], rng: &mut ChaCha8Rng) -> Result<Vec<u32>> {
    let mut out = Vec::with_capacity(seq.len());
    let mut i = 0;
    while i < seq.len() {
        let c = seq[i];
        let len = seq[i..].iter().take_while(|&&x| x == c).count();
        let members = &members_of[c as usize];
        if members.is_empty() || len % members.len() != 0 {
            return Err(Error::Invariant(format!("run of {len} cannot hold {} members evenly", members.len())));
        }
        let start = out.len();
        for &m in members {
            out.extend(std::iter::repeat(m).take(len / members.len()));
        }
        out[start..].shuffle(rng);
        i += len;
    }
    Ok(out)
}

/// Up to `count` disjoint adjacent positions p with run[p] ≠ run[p+1], earliest first.
fn disjoint_swaps(run: &[u32], count: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut p = 0;
    while out.len() < count && p + 1 < run.len() {
        if run[p] != run[p + 1] {
            out.push(p);
            p += 2;
        } else {
            p += 1;
        }
    }
    out
}
