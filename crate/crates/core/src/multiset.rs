//! Finite multisets of ranked points and pointed multisets.
//!
//! A point is the rank of an m-tuple over the domain; `arity` records m so
//! that multisets over different tuple spaces are never mixed. Entries are
//! kept as ascending `(point, multiplicity)` runs, which makes equality and
//! hashing structural.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use crate::domain::Matrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Multiset {
    arity: usize,
    entries: Vec<(u64, u32)>,
}

impl Multiset {
    pub fn empty(arity: usize) -> Self {
        Multiset {
            arity,
            entries: Vec::new(),
        }
    }

    pub fn from_points(arity: usize, points: impl IntoIterator<Item = u64>) -> Self {
        let mut counts: BTreeMap<u64, u32> = BTreeMap::new();
        for p in points {
            *counts.entry(p).or_default() += 1;
        }
        Multiset {
            arity,
            entries: counts.into_iter().collect(),
        }
    }

    /// Builds a multiset from `(point, multiplicity)` pairs in any order.
    pub fn from_counts(arity: usize, counts: impl IntoIterator<Item = (u64, u32)>) -> Self {
        let mut merged: BTreeMap<u64, u32> = BTreeMap::new();
        for (p, c) in counts {
            if c > 0 {
                *merged.entry(p).or_default() += c;
            }
        }
        Multiset {
            arity,
            entries: merged.into_iter().collect(),
        }
    }

    pub fn singleton(arity: usize, point: u64) -> Self {
        Multiset {
            arity,
            entries: vec![(point, 1)],
        }
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn entries(&self) -> &[(u64, u32)] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn cardinality(&self) -> usize {
        self.entries.iter().map(|&(_, c)| c as usize).sum()
    }

    pub fn multiplicity(&self, point: u64) -> u32 {
        self.entries
            .binary_search_by_key(&point, |&(p, _)| p)
            .map(|i| self.entries[i].1)
            .unwrap_or(0)
    }

    pub fn support(&self) -> impl Iterator<Item = u64> + '_ {
        self.entries.iter().map(|&(p, _)| p)
    }

    /// Points in ascending order, each repeated by its multiplicity.
    pub fn points(&self) -> impl Iterator<Item = u64> + '_ {
        self.entries
            .iter()
            .flat_map(|&(p, c)| std::iter::repeat_n(p, c as usize))
    }

    fn same_universe(&self, other: &Multiset) -> Result<()> {
        if self.arity != other.arity {
            return Err(Error::input(format!(
                "multisets over {}-tuples and {}-tuples cannot be combined",
                self.arity, other.arity
            )));
        }
        Ok(())
    }

    /// `S ⊎ T`.
    pub fn join(&self, other: &Multiset) -> Result<Multiset> {
        self.same_universe(other)?;
        Ok(self.join_unchecked(other))
    }

    pub(crate) fn join_unchecked(&self, other: &Multiset) -> Multiset {
        let mut entries = Vec::with_capacity(self.entries.len() + other.entries.len());
        let (mut i, mut j) = (0, 0);
        while i < self.entries.len() && j < other.entries.len() {
            let (a, b) = (self.entries[i], other.entries[j]);
            match a.0.cmp(&b.0) {
                Ordering::Less => {
                    entries.push(a);
                    i += 1;
                }
                Ordering::Greater => {
                    entries.push(b);
                    j += 1;
                }
                Ordering::Equal => {
                    entries.push((a.0, a.1 + b.1));
                    i += 1;
                    j += 1;
                }
            }
        }
        entries.extend_from_slice(&self.entries[i..]);
        entries.extend_from_slice(&other.entries[j..]);
        Multiset {
            arity: self.arity,
            entries,
        }
    }

    /// Truncated difference `S ∖ T`.
    pub fn difference(&self, other: &Multiset) -> Result<Multiset> {
        self.same_universe(other)?;
        Ok(self.difference_unchecked(other))
    }

    pub(crate) fn difference_unchecked(&self, other: &Multiset) -> Multiset {
        let entries = self
            .entries
            .iter()
            .filter_map(|&(p, c)| {
                let left = c.saturating_sub(other.multiplicity(p));
                (left > 0).then_some((p, left))
            })
            .collect();
        Multiset {
            arity: self.arity,
            entries,
        }
    }

    /// True iff `self ⊆ other`.
    pub fn is_submultiset(&self, other: &Multiset) -> Result<bool> {
        self.same_universe(other)?;
        Ok(self.is_submultiset_unchecked(other))
    }

    pub(crate) fn is_submultiset_unchecked(&self, other: &Multiset) -> bool {
        self.entries
            .iter()
            .all(|&(p, c)| c <= other.multiplicity(p))
    }

    pub fn with_point(&self, point: u64) -> Multiset {
        self.join_unchecked(&Multiset::singleton(self.arity, point))
    }

    /// Removes one copy of `point`; `None` if it is absent.
    pub fn without_point(&self, point: u64) -> Option<Multiset> {
        let i = self.entries.binary_search_by_key(&point, |&(p, _)| p).ok()?;
        let mut entries = self.entries.clone();
        if entries[i].1 == 1 {
            entries.remove(i);
        } else {
            entries[i].1 -= 1;
        }
        Some(Multiset {
            arity: self.arity,
            entries,
        })
    }
}

/// Canonical order: universe arity, then cardinality, then the ascending
/// point sequences compared lexicographically.
impl Ord for Multiset {
    fn cmp(&self, other: &Self) -> Ordering {
        self.arity
            .cmp(&other.arity)
            .then_with(|| self.cardinality().cmp(&other.cardinality()))
            .then_with(|| self.points().cmp(other.points()))
    }
}

impl PartialOrd for Multiset {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// A pair `(x, S)`; its underlying multiset is `{x} ⊎ S`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PointedMultiset {
    pub point: u64,
    pub rest: Multiset,
}

impl PointedMultiset {
    pub fn new(point: u64, rest: Multiset) -> Self {
        PointedMultiset { point, rest }
    }

    pub fn arity(&self) -> usize {
        self.rest.arity
    }

    pub fn cardinality(&self) -> usize {
        self.rest.cardinality() + 1
    }

    pub fn underlying(&self) -> Multiset {
        self.rest.with_point(self.point)
    }
}

impl Ord for PointedMultiset {
    fn cmp(&self, other: &Self) -> Ordering {
        self.arity()
            .cmp(&other.arity())
            .then_with(|| self.cardinality().cmp(&other.cardinality()))
            .then(self.point.cmp(&other.point))
            .then_with(|| self.rest.cmp(&other.rest))
    }
}

impl PartialOrd for PointedMultiset {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// `M*`, the multiset of columns of a matrix.
pub fn columns_multiset(m: &Matrix) -> Multiset {
    let domain = m.domain();
    Multiset::from_points(
        m.rows(),
        m.columns()
            .iter()
            .map(|c| domain.rank(c).expect("matrix columns are validated")),
    )
}

/// Every `T ⊆ S` exactly once, in canonical order.
pub fn enumerate_submultisets(s: &Multiset) -> Vec<Multiset> {
    let mut out = Vec::new();
    let mut counts = vec![0u32; s.entries.len()];
    loop {
        out.push(Multiset {
            arity: s.arity,
            entries: s
                .entries
                .iter()
                .zip(&counts)
                .filter(|(_, &c)| c > 0)
                .map(|(&(p, _), &c)| (p, c))
                .collect(),
        });
        // odometer step
        let mut i = 0;
        loop {
            if i == counts.len() {
                out.sort();
                return out;
            }
            if counts[i] < s.entries[i].1 {
                counts[i] += 1;
                break;
            }
            counts[i] = 0;
            i += 1;
        }
    }
}

/// All partitions of `s` into nonempty blocks of cardinality at least
/// `min_block`, each produced once up to block order. Blocks within a
/// partition are in canonical order, and partitions are sorted. The empty
/// multiset has exactly the empty partition.
pub fn enumerate_partitions(s: &Multiset, min_block: usize) -> Vec<Vec<Multiset>> {
    let support: Vec<u64> = s.support().collect();
    let mut rem: Vec<u32> = s.entries.iter().map(|&(_, c)| c).collect();
    let mut blocks: Vec<Vec<u32>> = Vec::new();
    let mut out = Vec::new();
    partitions_rec(&mut rem, &mut blocks, min_block.max(1), &mut |blocks| {
        let mut part: Vec<Multiset> = blocks
            .iter()
            .map(|b| Multiset::from_counts(s.arity, support.iter().copied().zip(b.iter().copied())))
            .collect();
        part.sort();
        out.push(part);
    });
    out.sort();
    out
}

// Blocks are generated as multiplicity vectors in lexicographically
// non-increasing order. The largest remaining block must use the first
// nonzero coordinate of what remains, which pins the recursion.
fn partitions_rec(
    rem: &mut Vec<u32>,
    blocks: &mut Vec<Vec<u32>>,
    min_block: usize,
    emit: &mut dyn FnMut(&[Vec<u32>]),
) {
    let Some(lead) = rem.iter().position(|&c| c > 0) else {
        emit(blocks);
        return;
    };
    let total: usize = rem.iter().map(|&c| c as usize).sum();
    if total < min_block {
        return;
    }
    let mut b = vec![0u32; rem.len()];
    b[lead] = 1;
    loop {
        let size: usize = b.iter().map(|&c| c as usize).sum();
        let fits_order = blocks.last().is_none_or(|prev| b <= *prev);
        if size >= min_block && fits_order {
            for (r, x) in rem.iter_mut().zip(&b) {
                *r -= x;
            }
            blocks.push(b.clone());
            partitions_rec(rem, blocks, min_block, emit);
            blocks.pop();
            for (r, x) in rem.iter_mut().zip(&b) {
                *r += x;
            }
        }
        // odometer over coordinates lead.., with b[lead] >= 1
        let mut i = rem.len() - 1;
        loop {
            if b[i] < rem[i] {
                b[i] += 1;
                break;
            }
            b[i] = if i == lead { 1 } else { 0 };
            if i == lead {
                return;
            }
            i -= 1;
        }
    }
}

/// Visits every ordered selection of `n` points from `s` (distinct ordered
/// point tuples only) together with the remaining multiset. Stops early when
/// `visit` returns `false`; the return value says whether the walk completed.
pub fn for_each_arrangement(
    s: &Multiset,
    n: usize,
    visit: &mut dyn FnMut(&[u64], &Multiset) -> bool,
) -> bool {
    if n > s.cardinality() {
        return true;
    }
    let mut rem: Vec<(u64, u32)> = s.entries.clone();
    let mut chosen = Vec::with_capacity(n);
    arrangements_rec(s.arity, &mut rem, &mut chosen, n, visit)
}

fn arrangements_rec(
    arity: usize,
    rem: &mut Vec<(u64, u32)>,
    chosen: &mut Vec<u64>,
    n: usize,
    visit: &mut dyn FnMut(&[u64], &Multiset) -> bool,
) -> bool {
    if chosen.len() == n {
        let remainder = Multiset {
            arity,
            entries: rem.iter().copied().filter(|&(_, c)| c > 0).collect(),
        };
        return visit(chosen, &remainder);
    }
    for i in 0..rem.len() {
        if rem[i].1 == 0 {
            continue;
        }
        rem[i].1 -= 1;
        chosen.push(rem[i].0);
        let go_on = arrangements_rec(arity, rem, chosen, n, visit);
        chosen.pop();
        rem[i].1 += 1;
        if !go_on {
            return false;
        }
    }
    true
}

pub fn enumerate_arrangements(s: &Multiset, n: usize) -> Vec<(Vec<u64>, Multiset)> {
    let mut out = Vec::new();
    for_each_arrangement(s, n, &mut |t, r| {
        out.push((t.to_vec(), r.clone()));
        true
    });
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::FiniteDomain;
    use proptest::prelude::*;
    use std::collections::BTreeSet;

    fn ms(points: &[u64]) -> Multiset {
        Multiset::from_points(1, points.iter().copied())
    }

    #[test]
    fn join_examples() {
        let e = Multiset::empty(1);
        assert_eq!(ms(&[0]).join(&e).unwrap(), ms(&[0]));
        assert_eq!(ms(&[0]).join(&ms(&[0])).unwrap(), ms(&[0, 0]));
        let j = ms(&[0, 1]).join(&ms(&[1, 2])).unwrap();
        assert_eq!(j, ms(&[0, 1, 1, 2]));
        assert_eq!(j.cardinality(), 4);
        assert!(ms(&[0]).join(&Multiset::empty(2)).is_err());
    }

    #[test]
    fn difference_examples() {
        assert_eq!(ms(&[0, 0, 1]).difference(&ms(&[0])).unwrap(), ms(&[0, 1]));
        assert_eq!(ms(&[0]).difference(&ms(&[0, 0])).unwrap(), Multiset::empty(1));
        let s = ms(&[3, 3, 5]);
        assert_eq!(s.difference(&Multiset::empty(1)).unwrap(), s);
    }

    #[test]
    fn submultiset_examples() {
        assert!(Multiset::empty(1).is_submultiset(&ms(&[1, 2])).unwrap());
        assert!(!ms(&[0, 0]).is_submultiset(&ms(&[0])).unwrap());
        assert!(ms(&[0, 1]).is_submultiset(&ms(&[0, 1, 1])).unwrap());
    }

    #[test]
    fn columns_multiset_examples() {
        let d = FiniteDomain::boolean();
        assert_eq!(columns_multiset(&Matrix::empty(d, 2).unwrap()), Multiset::empty(2));
        let m = Matrix::new(d, 2, vec![vec![0, 1], vec![0, 1]]).unwrap();
        assert_eq!(columns_multiset(&m).entries(), &[(1, 2)]);
        let m = Matrix::new(d, 2, vec![vec![0, 0], vec![1, 1], vec![0, 0]]).unwrap();
        assert_eq!(columns_multiset(&m).entries(), &[(0, 2), (3, 1)]);
    }

    #[test]
    fn submultiset_enumeration_examples() {
        assert_eq!(enumerate_submultisets(&Multiset::empty(1)), vec![Multiset::empty(1)]);
        assert_eq!(
            enumerate_submultisets(&ms(&[0, 0])),
            vec![Multiset::empty(1), ms(&[0]), ms(&[0, 0])]
        );
        assert_eq!(enumerate_submultisets(&ms(&[0, 1])).len(), 4);
        assert_eq!(enumerate_submultisets(&ms(&[0, 0, 1, 2, 2, 2])).len(), 3 * 2 * 4);
    }

    #[test]
    fn partition_examples() {
        assert_eq!(enumerate_partitions(&Multiset::empty(1), 1), vec![Vec::<Multiset>::new()]);
        let p = enumerate_partitions(&ms(&[0, 1]), 1);
        assert_eq!(p, vec![vec![ms(&[0]), ms(&[1])], vec![ms(&[0, 1])]]);
        assert_eq!(enumerate_partitions(&ms(&[0, 1, 2, 3]), 1).len(), 15);
        // blocks of size >= 2 of a 4-set: one 4-block or three 2+2 splits
        assert_eq!(enumerate_partitions(&ms(&[0, 1, 2, 3]), 2).len(), 4);
        assert!(enumerate_partitions(&ms(&[0]), 2).is_empty());
    }

    /// Brute force: label every copy, run all set partitions (restricted growth
    /// strings), forget labels, deduplicate.
    fn partition_oracle(s: &Multiset, min_block: usize) -> BTreeSet<Vec<Multiset>> {
        let items: Vec<u64> = s.points().collect();
        let n = items.len();
        let mut out = BTreeSet::new();
        let mut rgs = vec![0usize; n];
        fn rec(
            i: usize,
            max: usize,
            rgs: &mut Vec<usize>,
            items: &[u64],
            arity: usize,
            min_block: usize,
            out: &mut BTreeSet<Vec<Multiset>>,
        ) {
            if i == items.len() {
                let blocks = if items.is_empty() { 0 } else { max + 1 };
                let mut part: Vec<Multiset> = (0..blocks)
                    .map(|b| {
                        Multiset::from_points(
                            arity,
                            (0..items.len()).filter(|&j| rgs[j] == b).map(|j| items[j]),
                        )
                    })
                    .collect();
                if part.iter().all(|b| b.cardinality() >= min_block) {
                    part.sort();
                    out.insert(part);
                }
                return;
            }
            let top = if i == 0 { 0 } else { max + 1 };
            for b in 0..=top {
                rgs[i] = b;
                rec(i + 1, max.max(b), rgs, items, arity, min_block, out);
            }
        }
        rec(0, 0, &mut rgs, &items, s.arity(), min_block, &mut out);
        out
    }

    #[test]
    fn partitions_agree_with_set_partition_oracle() {
        // every multiset on 5 points with multiplicities <= 2 and cardinality <= 6
        for code in 0..3u32.pow(5) {
            let mut c = code;
            let counts: Vec<(u64, u32)> = (0..5)
                .map(|p| {
                    let m = c % 3;
                    c /= 3;
                    (p, m)
                })
                .collect();
            let s = Multiset::from_counts(1, counts);
            if s.cardinality() > 6 {
                continue;
            }
            for min_block in 1..=3 {
                let ours = enumerate_partitions(&s, min_block);
                let set: BTreeSet<_> = ours.iter().cloned().collect();
                assert_eq!(set.len(), ours.len(), "duplicate partition for {s:?}");
                assert_eq!(set, partition_oracle(&s, min_block), "{s:?} mu={min_block}");
            }
        }
    }

    #[test]
    fn arrangement_examples() {
        let (a, b) = (4u64, 9u64);
        let got = enumerate_arrangements(&ms(&[a, b]), 1);
        assert_eq!(got, vec![(vec![a], ms(&[b])), (vec![b], ms(&[a]))]);
        let got = enumerate_arrangements(&ms(&[a, a]), 2);
        assert_eq!(got, vec![(vec![a, a], Multiset::empty(1))]);
        let got = enumerate_arrangements(&ms(&[a, b]), 2);
        assert_eq!(
            got,
            vec![(vec![a, b], Multiset::empty(1)), (vec![b, a], Multiset::empty(1))]
        );
        assert!(enumerate_arrangements(&ms(&[a]), 2).is_empty());
        assert_eq!(enumerate_arrangements(&ms(&[a]), 0), vec![(vec![], ms(&[a]))]);
    }

    #[test]
    fn pointed_underlying() {
        let pm = PointedMultiset::new(2, ms(&[1, 2]));
        assert_eq!(pm.cardinality(), 3);
        assert_eq!(pm.underlying(), ms(&[1, 2, 2]));
    }

    fn arb_multiset() -> impl Strategy<Value = Multiset> {
        proptest::collection::vec((0u64..6, 1u32..3), 0..5)
            .prop_map(|v| Multiset::from_counts(2, v))
    }

    proptest! {
        #[test]
        fn join_is_commutative_monoid(s in arb_multiset(), t in arb_multiset(), u in arb_multiset()) {
            let e = Multiset::empty(2);
            prop_assert_eq!(s.join(&t).unwrap(), t.join(&s).unwrap());
            prop_assert_eq!(
                s.join(&t).unwrap().join(&u).unwrap(),
                s.join(&t.join(&u).unwrap()).unwrap()
            );
            prop_assert_eq!(s.join(&e).unwrap(), s.clone());
            prop_assert_eq!(s.join(&t).unwrap().difference(&t).unwrap(), s);
        }

        #[test]
        fn submultiset_is_partial_order(s in arb_multiset(), t in arb_multiset(), u in arb_multiset()) {
            prop_assert!(s.is_submultiset(&s).unwrap());
            if s.is_submultiset(&t).unwrap() && t.is_submultiset(&s).unwrap() {
                prop_assert_eq!(&s, &t);
            }
            if s.is_submultiset(&t).unwrap() && t.is_submultiset(&u).unwrap() {
                prop_assert!(s.is_submultiset(&u).unwrap());
            }
        }

        #[test]
        fn partitions_cover_their_multiset(s in arb_multiset(), min_block in 1usize..3) {
            for part in enumerate_partitions(&s, min_block) {
                let mut total = Multiset::empty(2);
                for b in &part {
                    prop_assert!(b.cardinality() >= min_block);
                    total = total.join(b).unwrap();
                }
                prop_assert_eq!(&total, &s);
            }
        }

        #[test]
        fn arrangements_cover_their_multiset(s in arb_multiset(), n in 0usize..4) {
            let all = enumerate_arrangements(&s, n);
            let distinct: BTreeSet<_> = all.iter().map(|(t, _)| t.clone()).collect();
            prop_assert_eq!(distinct.len(), all.len());
            for (t, r) in all {
                let back = Multiset::from_points(2, t.iter().copied()).join(&r).unwrap();
                prop_assert_eq!(&back, &s);
            }
        }
    }
}
