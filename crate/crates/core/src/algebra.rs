//! Finite Boolean algebras presented by their atoms, and subalgebras as
//! partitions of those atoms.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Atom label. Dots separate lineage segments: splitting `3.a` yields
/// `3.a.a`, `3.a.b`, and so on.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AtomId(String);

/// A set of atoms; elements of an algebra are such sets.
pub type Block = BTreeSet<AtomId>;

impl AtomId {
    pub fn new(label: impl Into<String>) -> Self {
        AtomId(label.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Child `index` (0-based) of this atom: `x.a`, `x.b`, ..., `x.z`, `x.aa`, ...
    pub fn child(&self, index: usize) -> AtomId {
        AtomId(format!("{}.{}", self.0, letters(index)))
    }

    /// Appends an arbitrary segment.
    pub fn extend(&self, segment: impl fmt::Display) -> AtomId {
        AtomId(format!("{}.{}", self.0, segment))
    }

    /// True when `self` equals `ancestor` or was produced from it by splitting.
    pub fn descends_from(&self, ancestor: &AtomId) -> bool {
        self.0 == ancestor.0
            || (self.0.len() > ancestor.0.len()
                && self.0.starts_with(&ancestor.0)
                && self.0.as_bytes()[ancestor.0.len()] == b'.')
    }
}

/// Bijective base-26 letters: 0 → a, 25 → z, 26 → aa.
pub fn letters(mut index: usize) -> String {
    let mut out = Vec::new();
    loop {
        out.push(b'a' + (index % 26) as u8);
        if index < 26 {
            break;
        }
        index = index / 26 - 1;
    }
    out.reverse();
    String::from_utf8(out).expect("ascii")
}

#[derive(PartialEq, Eq, PartialOrd, Ord)]
enum Segment<'a> {
    Num(u64),
    Word(usize, &'a str),
}

fn segments(s: &str) -> impl Iterator<Item = Segment<'_>> {
    s.split('.').map(|seg| match seg.parse::<u64>() {
        Ok(n) if !seg.starts_with('+') => Segment::Num(n),
        _ => Segment::Word(seg.len(), seg),
    })
}

impl Ord for AtomId {
    /// Segment-wise: numeric segments compare as numbers and sort before
    /// words; words compare by length, then text.
    fn cmp(&self, other: &Self) -> Ordering {
        segments(&self.0)
            .cmp(segments(&other.0))
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for AtomId {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for AtomId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for AtomId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

impl From<&str> for AtomId {
    fn from(s: &str) -> Self {
        AtomId(s.to_string())
    }
}

impl From<usize> for AtomId {
    fn from(n: usize) -> Self {
        AtomId(n.to_string())
    }
}

/// Builds a block from anything label-like.
pub fn block<I, T>(items: I) -> Block
where
    I: IntoIterator<Item = T>,
    T: Into<AtomId>,
{
    items.into_iter().map(Into::into).collect()
}

/// A finite Boolean algebra, given by its atoms in canonical order.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<AtomId>", into = "Vec<AtomId>")]
pub struct AmbientAlgebra {
    atoms: Vec<AtomId>,
}

impl AmbientAlgebra {
    /// Sorts the labels; rejects empty input, duplicates, and labels where one
    /// is a lineage ancestor of another.
    pub fn new(atoms: impl IntoIterator<Item = AtomId>) -> Result<Self> {
        let mut atoms: Vec<AtomId> = atoms.into_iter().collect();
        if atoms.is_empty() {
            return Err(Error::invalid("ambient algebra has no atoms"));
        }
        atoms.sort();
        for w in atoms.windows(2) {
            if w[0] == w[1] {
                return Err(Error::invalid(format!("duplicate atom {}", w[0])));
            }
        }
        let labels: std::collections::HashSet<&str> = atoms.iter().map(AtomId::as_str).collect();
        for a in &atoms {
            let s = a.as_str();
            for (i, _) in s.match_indices('.') {
                if labels.contains(&s[..i]) {
                    return Err(Error::invalid(format!("atom {} is a descendant of atom {}", s, &s[..i])));
                }
            }
        }
        Ok(AmbientAlgebra { atoms })
    }

    /// Atoms `0, 1, ..., n-1`.
    pub fn numbered(n: usize) -> Self {
        AmbientAlgebra::new((0..n).map(AtomId::from)).expect("n > 0")
    }

    pub fn atoms(&self) -> &[AtomId] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn contains(&self, a: &AtomId) -> bool {
        self.atoms.binary_search(a).is_ok()
    }

    pub fn index_of(&self, a: &AtomId) -> Option<usize> {
        self.atoms.binary_search(a).ok()
    }

    pub fn top(&self) -> Block {
        self.atoms.iter().cloned().collect()
    }

    /// The partition into singletons.
    pub fn discrete(&self) -> Subalgebra {
        Subalgebra::from_blocks_unchecked(self.atoms.iter().map(|a| Block::from([a.clone()])).collect())
    }

    /// The two-element subalgebra {0, 1}.
    pub fn trivial(&self) -> Subalgebra {
        Subalgebra::from_blocks_unchecked(vec![self.top()])
    }
}

impl TryFrom<Vec<AtomId>> for AmbientAlgebra {
    type Error = Error;
    fn try_from(v: Vec<AtomId>) -> Result<Self> {
        AmbientAlgebra::new(v)
    }
}

impl From<AmbientAlgebra> for Vec<AtomId> {
    fn from(a: AmbientAlgebra) -> Self {
        a.atoms
    }
}

impl fmt::Debug for AmbientAlgebra {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(&self.atoms).finish()
    }
}

/// A subalgebra, stored as the partition of the ambient atoms into its atoms.
/// Blocks are kept sorted by their least atom.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Subalgebra {
    blocks: Vec<Block>,
}

fn sort_blocks(blocks: &mut [Block]) {
    blocks.sort_by(|x, y| x.iter().next().cmp(&y.iter().next()));
}

impl Subalgebra {
    /// Validates that `blocks` partition the atoms of `ambient`.
    pub fn new(ambient: &AmbientAlgebra, blocks: Vec<Block>) -> Result<Self> {
        let s = Subalgebra::from_blocks_unchecked(blocks);
        s.check(ambient)?;
        Ok(s)
    }

    pub(crate) fn from_blocks_unchecked(mut blocks: Vec<Block>) -> Self {
        sort_blocks(&mut blocks);
        Subalgebra { blocks }
    }

    pub fn check(&self, ambient: &AmbientAlgebra) -> Result<()> {
        let mut seen = BTreeSet::new();
        for b in &self.blocks {
            if b.is_empty() {
                return Err(Error::invalid("empty block in subalgebra"));
            }
            for a in b {
                if !ambient.contains(a) {
                    return Err(Error::UnknownAtom(a.clone()));
                }
                if !seen.insert(a) {
                    return Err(Error::invalid(format!("atom {a} lies in two blocks")));
                }
            }
        }
        if seen.len() != ambient.len() {
            return Err(Error::MismatchedAmbient);
        }
        Ok(())
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn atoms(&self) -> impl Iterator<Item = &AtomId> {
        self.blocks.iter().flatten()
    }

    pub fn contains_block(&self, b: &Block) -> bool {
        self.blocks.binary_search_by(|x| x.iter().next().cmp(&b.iter().next())).is_ok_and(|i| &self.blocks[i] == b)
    }

    /// The block containing atom `a`.
    pub fn block_of(&self, a: &AtomId) -> Option<&Block> {
        self.blocks.iter().find(|b| b.contains(a))
    }

    /// Map from each atom to the index of its block.
    pub fn block_index(&self) -> BTreeMap<&AtomId, usize> {
        let mut m = BTreeMap::new();
        for (i, b) in self.blocks.iter().enumerate() {
            for a in b {
                m.insert(a, i);
            }
        }
        m
    }

    /// Every block of `self` is a union of blocks of `finer`.
    pub fn is_coarsening_of(&self, finer: &Subalgebra) -> bool {
        let idx = self.block_index();
        finer.blocks.iter().all(|fb| {
            let mut it = fb.iter().map(|a| idx.get(a));
            let first = it.next().flatten();
            first.is_some() && it.all(|x| x == first)
        })
    }
}

impl fmt::Debug for Subalgebra {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(&self.blocks).finish()
    }
}

/// The subalgebra generated by `b` and `c`: the coarsest common refinement.
pub fn join_subalgebras(b: &Subalgebra, c: &Subalgebra) -> Result<Subalgebra> {
    let bi = b.block_index();
    let ci = c.block_index();
    if bi.len() != ci.len() || bi.keys().zip(ci.keys()).any(|(x, y)| x != y) {
        return Err(Error::MismatchedAmbient);
    }
    let mut cells: BTreeMap<(usize, usize), Block> = BTreeMap::new();
    for (a, &i) in &bi {
        cells.entry((i, ci[a])).or_default().insert((*a).clone());
    }
    Ok(Subalgebra::from_blocks_unchecked(cells.into_values().collect()))
}

/// Replaces atom `a` by `k` children labelled with its lineage. The returned
/// map sends every old atom to its set of descendants.
pub fn split_atom(
    ambient: &AmbientAlgebra,
    a: &AtomId,
    k: usize,
) -> Result<(AmbientAlgebra, BTreeMap<AtomId, Block>)> {
    if !ambient.contains(a) {
        return Err(Error::UnknownAtom(a.clone()));
    }
    if k < 2 {
        return Err(Error::invalid(format!("cannot split into {k} parts")));
    }
    let mut lineage = BTreeMap::new();
    let mut atoms = Vec::with_capacity(ambient.len() + k - 1);
    for x in ambient.atoms() {
        if x == a {
            let kids: Block = (0..k).map(|i| x.child(i)).collect();
            atoms.extend(kids.iter().cloned());
            lineage.insert(x.clone(), kids);
        } else {
            atoms.push(x.clone());
            lineage.insert(x.clone(), Block::from([x.clone()]));
        }
    }
    Ok((AmbientAlgebra::new(atoms)?, lineage))
}

/// Image of a block under an atom map.
pub fn image_of(map: &BTreeMap<AtomId, Block>, b: &Block) -> Block {
    b.iter().flat_map(|a| map[a].iter().cloned()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sub(blocks: &[&[usize]]) -> Subalgebra {
        Subalgebra::from_blocks_unchecked(blocks.iter().map(|b| block(b.iter().copied())).collect())
    }

    #[test]
    fn atom_order_is_segmentwise() {
        let mut v: Vec<AtomId> = ["10", "2", "2.b", "2.a", "2.aa", "2.z", "2.10", "2.9"].iter().map(|s| AtomId::from(*s)).collect();
        v.sort();
        let s: Vec<&str> = v.iter().map(AtomId::as_str).collect();
        assert_eq!(s, ["2", "2.9", "2.10", "2.a", "2.b", "2.z", "2.aa", "10"]);
    }

    #[test]
    fn letters_are_bijective_base_26() {
        assert_eq!(letters(0), "a");
        assert_eq!(letters(25), "z");
        assert_eq!(letters(26), "aa");
        assert_eq!(letters(27), "ab");
        assert_eq!(letters(26 + 26 * 26), "aaa");
    }

    #[test]
    fn join_examples() {
        let j = join_subalgebras(&sub(&[&[0, 1], &[2, 3]]), &sub(&[&[0], &[1, 2, 3]])).unwrap();
        assert_eq!(j, sub(&[&[0], &[1], &[2, 3]]));
        let b = sub(&[&[0, 2], &[1, 3]]);
        assert_eq!(join_subalgebras(&b, &b).unwrap(), b);
        let j = join_subalgebras(&b, &sub(&[&[0, 1], &[2, 3]])).unwrap();
        assert_eq!(j, sub(&[&[0], &[1], &[2], &[3]]));
        assert!(matches!(join_subalgebras(&b, &sub(&[&[0, 1, 2]])), Err(Error::MismatchedAmbient)));
    }

    #[test]
    fn split_examples() {
        let (a, lin) = split_atom(&AmbientAlgebra::numbered(2), &"0".into(), 2).unwrap();
        let labels: Vec<&str> = a.atoms().iter().map(AtomId::as_str).collect();
        assert_eq!(labels, ["0.a", "0.b", "1"]);
        assert_eq!(lin[&AtomId::from("0")], block(["0.a", "0.b"]));
        let (a, _) = split_atom(&AmbientAlgebra::new([AtomId::from("2")]).unwrap(), &"2".into(), 3).unwrap();
        let labels: Vec<&str> = a.atoms().iter().map(AtomId::as_str).collect();
        assert_eq!(labels, ["2.a", "2.b", "2.c"]);
        assert!(split_atom(&AmbientAlgebra::numbered(2), &"7".into(), 2).is_err());
        assert!(split_atom(&AmbientAlgebra::numbered(2), &"0".into(), 1).is_err());
    }

    #[test]
    fn split_then_coarsen_recovers_partition() {
        let amb = AmbientAlgebra::numbered(3);
        let b = sub(&[&[0, 1], &[2]]);
        let (_, lin) = split_atom(&amb, &"1".into(), 3).unwrap();
        let lifted: Vec<Block> = b.blocks().iter().map(|x| image_of(&lin, x)).collect();
        let back: Vec<Block> = lifted
            .iter()
            .map(|x| amb.atoms().iter().filter(|a| lin[*a].is_subset(x)).cloned().collect())
            .collect();
        assert_eq!(Subalgebra::from_blocks_unchecked(back), b);
    }

    #[test]
    fn ambient_rejects_lineage_overlap() {
        assert!(AmbientAlgebra::new([AtomId::from("3"), AtomId::from("3.a")]).is_err());
        assert!(AmbientAlgebra::new([AtomId::from("3"), AtomId::from("30")]).is_ok());
        assert!(AmbientAlgebra::new(Vec::<AtomId>::new()).is_err());
    }
}
