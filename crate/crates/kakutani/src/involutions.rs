//! Groups of involutions attached to tree levels.
//!
//! G_s^n is the direct sum of copies of ℤ/2 indexed by the tree nodes of
//! length s among σ_0, …, σ_n. Elements are stored as sorted sets of generator
//! nodes (mod-2 sums); parity is the size of that set modulo 2. The canonical
//! homomorphism ρ_{t,s} sends the generator of a node to the generator of its
//! length-s prefix.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::trees::{FiniteSequence, TreeApproximation};

/// A generator is named by its tree node.
pub type Node = FiniteSequence;

/// Parity of a group element.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Even,
    Odd,
}

/// A finite sum of distinct generators.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GroupElement {
    generators: Vec<Node>,
}

impl GroupElement {
    pub fn identity() -> Self {
        Self::default()
    }

    pub fn generator(node: Node) -> Self {
        Self { generators: vec![node] }
    }

    /// Mod-2 sum of the given generators (repeated nodes cancel in pairs).
    pub fn sum<I: IntoIterator<Item = Node>>(nodes: I) -> Self {
        let mut v: Vec<Node> = nodes.into_iter().collect();
        v.sort();
        let mut out: Vec<Node> = Vec::with_capacity(v.len());
        for x in v {
            if out.last() == Some(&x) {
                out.pop();
            } else {
                out.push(x);
            }
        }
        Self { generators: out }
    }

    /// Group operation (symmetric difference of generator sets).
    pub fn add(&self, other: &Self) -> Self {
        Self::sum(self.generators.iter().chain(&other.generators).cloned())
    }

    pub fn generators(&self) -> &[Node] {
        &self.generators
    }

    pub fn is_identity(&self) -> bool {
        self.generators.is_empty()
    }

    pub fn parity(&self) -> Parity {
        parity(self)
    }
}

/// |generator set| mod 2.
pub fn parity(element: &GroupElement) -> Parity {
    if element.generators.len() % 2 == 0 {
        Parity::Even
    } else {
        Parity::Odd
    }
}

/// The group G_s^n: its generators listed in enumeration order.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct InvolutionGroup {
    pub level: usize,
    pub generators: Vec<Node>,
}

impl InvolutionGroup {
    /// Number of generators d; the order is 2^d.
    pub fn rank(&self) -> usize {
        self.generators.len()
    }

    pub fn order(&self) -> u128 {
        1u128 << self.rank()
    }

    /// Element with the generators selected by the bits of `mask`.
    pub fn element(&self, mask: u64) -> GroupElement {
        GroupElement::sum(
            self.generators
                .iter()
                .enumerate()
                .filter(|(i, _)| mask >> i & 1 == 1)
                .map(|(_, g)| g.clone()),
        )
    }

    /// Bit mask of an element; fails if it uses a foreign generator.
    pub fn mask(&self, element: &GroupElement) -> Result<u64> {
        let mut mask = 0u64;
        for g in &element.generators {
            let i = self
                .generators
                .iter()
                .position(|x| x == g)
                .ok_or_else(|| Error::InvalidInput(format!("{g:?} is not a generator at level {}", self.level)))?;
            mask |= 1 << i;
        }
        Ok(mask)
    }

    /// All element masks 0..2^d.
    pub fn masks(&self) -> impl Iterator<Item = u64> {
        0..(1u64 << self.rank())
    }
}

/// G_s^n(𝒯): generators are the nodes of length s among σ_m ∈ 𝒯, m ≤ n.
pub fn build_group(t: &TreeApproximation, s: usize, n: u64) -> InvolutionGroup {
    let generators = if s == 0 {
        Vec::new()
    } else {
        t.node_indices()
            .range(..=n)
            .map(|&m| crate::trees::canonical_enumeration(m))
            .filter(|seq| seq.len() == s)
            .collect()
    };
    InvolutionGroup { level: s, generators }
}

/// ρ_{t,s}: every generator g_τ goes to g_{τ↾s}, summed mod 2; level 0 is trivial.
pub fn rho(element: &GroupElement, from_level: usize, to_level: usize) -> Result<GroupElement> {
    if to_level >= from_level {
        return invalid(format!("rho needs target level {to_level} < source level {from_level}"));
    }
    if let Some(g) = element.generators.iter().find(|g| g.len() != from_level) {
        return invalid(format!("{g:?} is not a level-{from_level} generator"));
    }
    if to_level == 0 {
        return Ok(GroupElement::identity());
    }
    Ok(GroupElement::sum(element.generators.iter().map(|g| g[..to_level].to_vec())))
}

/// Action of G_s^n on a finite set of classes, one permutation per generator.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ActionTable {
    pub group: InvolutionGroup,
    pub domain_size: usize,
    /// `images[i][c]` is the image of class c under generator i.
    pub images: Vec<Vec<u32>>,
}

/// On-disk form `{group, level, entries: [[g, class, image], …]}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ActionTableFile {
    pub group: InvolutionGroup,
    pub level: usize,
    pub domain_size: usize,
    pub entries: Vec<(Node, u32, u32)>,
}

impl ActionTable {
    /// The trivial group acting on `domain_size` classes.
    pub fn trivial(level: usize, domain_size: usize) -> Self {
        Self { group: InvolutionGroup { level, generators: Vec::new() }, domain_size, images: Vec::new() }
    }

    pub fn level(&self) -> usize {
        self.group.level
    }

    /// Image of a class under the element encoded by `mask`.
    pub fn apply_mask(&self, mask: u64, class: u32) -> u32 {
        let mut c = class;
        for (i, img) in self.images.iter().enumerate() {
            if mask >> i & 1 == 1 {
                c = img[c as usize];
            }
        }
        c
    }

    pub fn apply(&self, element: &GroupElement, class: u32) -> Result<u32> {
        if class as usize >= self.domain_size {
            return invalid(format!("class {class} outside domain of size {}", self.domain_size));
        }
        Ok(self.apply_mask(self.group.mask(element)?, class))
    }

    /// Every generator must be a permutation of order ≤ 2 and generators must commute.
    pub fn validate(&self) -> Result<()> {
        let bad = |detail: String| Error::Malformed { kind: "action table", detail };
        if self.images.len() != self.group.rank() {
            return Err(bad("one permutation per generator required".into()));
        }
        for (i, img) in self.images.iter().enumerate() {
            if img.len() != self.domain_size {
                return Err(bad(format!("generator {i} maps {} classes", img.len())));
            }
            let mut seen = vec![false; self.domain_size];
            for &x in img {
                if x as usize >= self.domain_size || std::mem::replace(&mut seen[x as usize], true) {
                    return Err(bad(format!("generator {i} is not a bijection")));
                }
            }
            if (0..self.domain_size).any(|c| img[img[c] as usize] as usize != c) {
                return Err(bad(format!("generator {i} is not an involution")));
            }
        }
        for (i, a) in self.images.iter().enumerate() {
            for b in &self.images[i + 1..] {
                if (0..self.domain_size).any(|c| a[b[c] as usize] != b[a[c] as usize]) {
                    return Err(bad("generators do not commute".into()));
                }
            }
        }
        Ok(())
    }

    /// Nontrivial elements (as masks) fixing at least one class; empty iff the action is free.
    pub fn stabilizer_violations(&self) -> Vec<(u64, u32)> {
        let mut out = Vec::new();
        for mask in self.group.masks().skip(1) {
            for c in 0..self.domain_size as u32 {
                if self.apply_mask(mask, c) == c {
                    out.push((mask, c));
                    break;
                }
            }
        }
        out
    }

    pub fn is_free(&self) -> bool {
        self.stabilizer_violations().is_empty()
    }

    pub fn to_file(&self) -> ActionTableFile {
        let mut entries = Vec::new();
        for (g, img) in self.group.generators.iter().zip(&self.images) {
            for (c, &x) in img.iter().enumerate() {
                entries.push((g.clone(), c as u32, x));
            }
        }
        ActionTableFile { group: self.group.clone(), level: self.group.level, domain_size: self.domain_size, entries }
    }

    /// Loads and validates a serialized table.
    pub fn from_file(file: &ActionTableFile) -> Result<Self> {
        let bad = |detail: String| Error::Malformed { kind: "action table", detail };
        if file.level != file.group.level {
            return Err(bad("level does not match group level".into()));
        }
        let d = file.group.rank();
        let mut images = vec![vec![u32::MAX; file.domain_size]; d];
        for (g, c, x) in &file.entries {
            let i = file.group.generators.iter().position(|y| y == g).ok_or_else(|| bad(format!("unknown generator {g:?}")))?;
            let slot = images[i]
                .get_mut(*c as usize)
                .ok_or_else(|| bad(format!("class {c} outside domain")))?;
            *slot = *x;
        }
        if images.iter().flatten().any(|&x| x == u32::MAX) {
            return Err(bad("missing entries".into()));
        }
        let table = Self { group: file.group.clone(), domain_size: file.domain_size, images };
        table.validate()?;
        Ok(table)
    }
}

/// Skew-diagonal action on a tuple of classes: componentwise for even
/// elements, componentwise followed by reversal for odd ones.
pub fn skew_diagonal_apply(g: &GroupElement, tuple: &[u32], action: &ActionTable) -> Result<Vec<u32>> {
    let mask = action.group.mask(g)?;
    skew_diagonal_apply_mask(mask, tuple, action)
}

/// [`skew_diagonal_apply`] with the element given as a mask over the table's generators.
pub fn skew_diagonal_apply_mask(mask: u64, tuple: &[u32], action: &ActionTable) -> Result<Vec<u32>> {
    if let Some(&c) = tuple.iter().find(|&&c| c as usize >= action.domain_size) {
        return invalid(format!("class {c} outside domain of size {}", action.domain_size));
    }
    let mut out: Vec<u32> = tuple.iter().map(|&c| action.apply_mask(mask, c)).collect();
    if mask.count_ones() % 2 == 1 {
        out.reverse();
    }
    Ok(out)
}

/// A class of reversed words: `RevClass(c)` is {rev(w) : w ∈ class c}.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RevClass(pub u32);

/// η_g for odd g: class c ↦ the reversed class of g·c.
pub fn eta_apply(g: &GroupElement, class: u32, action: &ActionTable) -> Result<RevClass> {
    if g.parity() == Parity::Even {
        return invalid("eta is defined for odd elements only");
    }
    Ok(RevClass(action.apply(g, class)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rho_on_small_elements() {
        let g00 = GroupElement::generator(vec![0, 0]);
        let g01 = GroupElement::generator(vec![0, 1]);
        assert_eq!(rho(&g00, 2, 1).unwrap(), GroupElement::generator(vec![0]));
        assert!(rho(&g00.add(&g01), 2, 1).unwrap().is_identity());
        assert!(rho(&g00, 2, 0).unwrap().is_identity());
        assert!(rho(&g00, 1, 1).is_err());
    }

    #[test]
    fn parities() {
        assert_eq!(GroupElement::identity().parity(), Parity::Even);
        assert_eq!(GroupElement::generator(vec![0]).parity(), Parity::Odd);
        assert_eq!(GroupElement::sum([vec![0], vec![1]]).parity(), Parity::Even);
        assert!(GroupElement::sum([vec![0], vec![0]]).is_identity());
    }

    #[test]
    fn groups_from_trees() {
        let t = TreeApproximation::full(2, 2);
        assert_eq!(build_group(&t, 0, 6).order(), 1);
        assert_eq!(build_group(&t, 1, 6).order(), 4);
        assert_eq!(build_group(&t, 1, 1).order(), 2);
        assert_eq!(build_group(&TreeApproximation::trivial(5), 1, 5).order(), 1);
    }

    fn swap_table() -> ActionTable {
        ActionTable {
            group: InvolutionGroup { level: 1, generators: vec![vec![0]] },
            domain_size: 4,
            images: vec![vec![1, 0, 3, 2]],
        }
    }

    #[test]
    fn skew_action_reverses_for_odd_elements() {
        let trivial = ActionTable {
            group: InvolutionGroup { level: 1, generators: vec![vec![0]] },
            domain_size: 3,
            images: vec![vec![0, 1, 2]],
        };
        let g = GroupElement::generator(vec![0]);
        assert_eq!(skew_diagonal_apply(&g, &[0, 1, 2], &trivial).unwrap(), vec![2, 1, 0]);
        let t = swap_table();
        let once = skew_diagonal_apply(&g, &[0, 2, 3], &t).unwrap();
        assert_eq!(once, vec![2, 3, 1]);
        assert_eq!(skew_diagonal_apply(&g, &once, &t).unwrap(), vec![0, 2, 3]);
        assert!(skew_diagonal_apply(&g, &[7], &t).is_err());
    }

    #[test]
    fn table_file_round_trip_and_validation() {
        let t = swap_table();
        assert!(t.is_free());
        assert_eq!(ActionTable::from_file(&t.to_file()).unwrap(), t);
        let mut broken = t.to_file();
        broken.entries[0].2 = 0;
        assert!(ActionTable::from_file(&broken).is_err());
    }

    #[test]
    fn eta_rejects_even_elements() {
        let t = swap_table();
        assert!(eta_apply(&GroupElement::identity(), 0, &t).is_err());
        assert_eq!(eta_apply(&GroupElement::generator(vec![0]), 0, &t).unwrap(), RevClass(1));
    }
}
