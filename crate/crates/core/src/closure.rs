//! Arity-bounded closure of a set of operations under ζ, τ, ∇ and ∗ (and
//! optionally Δ), and separating systems for non-members.
//!
//! ζ and τ keep the arity, ∇ raises it by one and `f ∗ g` has arity
//! `m + n − 1`, which is at least both input arities. So every member of
//! arity at most N has a derivation whose intermediates all have arity at most
//! N, and the bounded fixpoint is exactly the arity-≤N slice of the generated
//! algebra. Δ lowers the arity, so with Δ enabled that argument fails and the
//! fragment may miss members.

use std::collections::{BTreeMap, BTreeSet, HashSet, VecDeque};

use crate::caps::Caps;
use crate::domain::{FiniteDomain, Matrix, Operation};
use crate::error::{Error, Result};
use crate::multiset::{columns_multiset, enumerate_partitions, enumerate_submultisets, Multiset, PointedMultiset};
use crate::preserve::preservation_witness;
use crate::system::System;

#[derive(Debug, Clone)]
pub struct ClosedSetFragment {
    domain: FiniteDomain,
    max_arity: usize,
    generators: Vec<(String, Operation)>,
    with_projections: bool,
    with_delta: bool,
    /// `members[n - 1]` holds the members of arity `n`.
    members: Vec<BTreeSet<Operation>>,
}

/// The least set containing `generators` (and all projections when asked)
/// that is closed under the enabled operations, restricted to arity `max_arity`.
pub fn generate(
    domain: FiniteDomain,
    generators: &[(String, Operation)],
    max_arity: usize,
    with_projections: bool,
    with_delta: bool,
    caps: &Caps,
) -> Result<ClosedSetFragment> {
    if max_arity == 0 {
        return Err(Error::input("closure needs a maximum arity of at least 1"));
    }
    let limit = caps.max_arity(domain.size());
    if max_arity > limit {
        return Err(Error::Resource {
            cap: "max_table_len",
            needed: domain.power(max_arity).map(u128::from).unwrap_or(u128::MAX),
            limit: caps.max_table_len as u128,
        });
    }
    for (name, g) in generators {
        if g.domain() != domain {
            return Err(Error::input(format!("generator {name} is over a different domain")));
        }
        if g.arity() > max_arity {
            return Err(Error::input(format!(
                "generator {name} has arity {} above the bound {max_arity}",
                g.arity()
            )));
        }
    }

    let mut members: Vec<BTreeSet<Operation>> = vec![BTreeSet::new(); max_arity];
    let mut seen: HashSet<Operation> = HashSet::new();
    let mut queue: VecDeque<Operation> = VecDeque::new();
    let mut total = 0u128;
    let mut add = |f: Operation,
                   members: &mut Vec<BTreeSet<Operation>>,
                   queue: &mut VecDeque<Operation>|
     -> Result<()> {
        if f.arity() <= max_arity && seen.insert(f.clone()) {
            total += 1;
            Caps::check("closure_members", total, caps.closure_members)?;
            members[f.arity() - 1].insert(f.clone());
            queue.push_back(f);
        }
        Ok(())
    };

    let mut start: Vec<Operation> = generators.iter().map(|(_, g)| g.clone()).collect();
    if with_projections {
        for n in 1..=max_arity {
            for i in 1..=n {
                start.push(Operation::projection(domain, n, i)?);
            }
        }
    }
    start.sort();
    for f in start {
        add(f, &mut members, &mut queue)?;
    }

    while let Some(f) = queue.pop_front() {
        let mut new = vec![f.zeta(), f.tau()];
        if with_delta {
            new.push(f.delta());
        }
        if f.arity() < max_arity {
            new.push(f.nabla());
        }
        // pair f with every member seen so far, in both orders; pairs with
        // later members are formed when those are dequeued
        for n in 1..=max_arity + 1 - f.arity() {
            for g in &members[n - 1] {
                new.push(f.star(g)?);
                new.push(g.star(&f)?);
            }
        }
        for h in new {
            add(h, &mut members, &mut queue)?;
        }
    }

    Ok(ClosedSetFragment {
        domain,
        max_arity,
        generators: generators.to_vec(),
        with_projections,
        with_delta,
        members,
    })
}

impl ClosedSetFragment {
    pub fn domain(&self) -> FiniteDomain {
        self.domain
    }

    pub fn max_arity(&self) -> usize {
        self.max_arity
    }

    pub fn generators(&self) -> &[(String, Operation)] {
        &self.generators
    }

    pub fn with_projections(&self) -> bool {
        self.with_projections
    }

    pub fn with_delta(&self) -> bool {
        self.with_delta
    }

    /// Members of arity `n`; empty above the bound.
    pub fn members(&self, n: usize) -> impl Iterator<Item = &Operation> {
        self.members.get(n.wrapping_sub(1)).into_iter().flatten()
    }

    /// All members in canonical order.
    pub fn all_members(&self) -> impl Iterator<Item = &Operation> {
        self.members.iter().flatten()
    }

    pub fn len(&self) -> usize {
        self.members.iter().map(BTreeSet::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, g: &Operation) -> Result<bool> {
        if g.domain() != self.domain {
            return Err(Error::input("operation over a different domain"));
        }
        if g.arity() > self.max_arity {
            return Err(Error::input(format!(
                "arity {} is above the fragment bound {}",
                g.arity(),
                self.max_arity
            )));
        }
        Ok(self.members[g.arity() - 1].contains(g))
    }

    /// The least arity with a member.
    pub fn min_arity(&self) -> Result<usize> {
        self.members
            .iter()
            .position(|s| !s.is_empty())
            .map(|i| i + 1)
            .ok_or_else(|| Error::input("the fragment is empty"))
    }

    /// `{hM : h a member of arity c}` as tuple ranks, for `M` with `c` columns.
    pub fn image_set(&self, m: &Matrix) -> Result<BTreeSet<u64>> {
        let c = m.columns().len();
        if c == 0 || c > self.max_arity {
            return Err(Error::input(format!(
                "images of a {c}-column matrix need members of arity {c}"
            )));
        }
        self.members[c - 1]
            .iter()
            .map(|h| self.domain.rank(&h.apply_rows(m)?))
            .collect()
    }
}

/// Builds a system preserved by every member of `fragment` and not by `g`.
///
/// With `M` the matrix whose rows are all n-tuples (`n = arity(g)`), the
/// consequent collects `(d¹, {d², .., d^q} ⊎ X)` over every proper
/// submultiset `X` of `M*`, every partition of `M* ∖ X` into blocks of at least
/// `min_arity` columns, and every choice of images `dⁱ ∈ F Mᵢ` of the blocks;
/// the antecedent holds the underlying multisets together with `M*`. Both
/// separation properties are checked before returning.
pub fn separating_system(fragment: &ClosedSetFragment, g: &Operation, caps: &Caps) -> Result<System> {
    if fragment.with_delta {
        return Err(Error::input(
            "separating systems need a fragment generated without Δ, whose bounded closure is exact",
        ));
    }
    if fragment.contains(g)? {
        return Err(Error::logic("the target operation is a member of the fragment"));
    }
    let domain = fragment.domain;
    let n = g.arity();
    let rows = domain.power(n)?;
    Caps::check("witness_rows", rows as u128, caps.witness_rows)?;
    let m = rows as usize;
    domain.power(m)?;
    let mu = fragment.min_arity()?;
    let big_m = Matrix::all_rows(domain, n)?;
    let m_star = columns_multiset(&big_m);

    let mut images: BTreeMap<Multiset, Vec<u64>> = BTreeMap::new();
    let mut image_of = |block: &Multiset| -> Result<Vec<u64>> {
        if let Some(v) = images.get(block) {
            return Ok(v.clone());
        }
        let points: Vec<u64> = block.points().collect();
        let v: Vec<u64> = fragment
            .image_set(&Matrix::from_points(domain, m, &points)?)?
            .into_iter()
            .collect();
        images.insert(block.clone(), v.clone());
        Ok(v)
    };

    let mut ante: BTreeSet<Multiset> = BTreeSet::new();
    let mut cons: BTreeSet<PointedMultiset> = BTreeSet::new();
    let mut candidates = 0u128;
    ante.insert(m_star.clone());
    for x in enumerate_submultisets(&m_star) {
        if x == m_star {
            continue;
        }
        let rest = m_star.difference_unchecked(&x);
        for partition in enumerate_partitions(&rest, mu) {
            let choices: Vec<Vec<u64>> = partition.iter().map(&mut image_of).collect::<Result<_>>()?;
            let product = choices.iter().fold(1u128, |acc, c| acc.saturating_mul(c.len() as u128));
            candidates = candidates.saturating_add(product);
            Caps::check("separating_candidates", candidates, caps.separating_candidates)?;
            let mut pick = vec![0usize; choices.len()];
            if choices.iter().any(Vec::is_empty) {
                continue;
            }
            loop {
                let d = Multiset::from_points(m, pick.iter().zip(&choices).map(|(&i, c)| c[i]));
                let whole = d.join_unchecked(&x);
                for point in d.support() {
                    cons.insert(PointedMultiset::new(point, whole.without_point(point).unwrap()));
                }
                ante.insert(whole);
                let mut i = 0;
                loop {
                    if i == pick.len() {
                        break;
                    }
                    pick[i] += 1;
                    if pick[i] < choices[i].len() {
                        break;
                    }
                    pick[i] = 0;
                    i += 1;
                }
                if i == pick.len() {
                    break;
                }
            }
        }
    }

    let sys = System::new(domain, m, n, ante, cons)?;
    for f in fragment.all_members() {
        if let Some(w) = preservation_witness(f, &sys)? {
            return Err(Error::logic(format!(
                "member {:?} fails to preserve the separating system: {w:?}",
                f
            )));
        }
    }
    if preservation_witness(g, &sys)?.is_none() {
        return Err(Error::logic("the target operation preserves the separating system"));
    }
    Ok(sys)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn d() -> FiniteDomain {
        FiniteDomain::boolean()
    }

    fn caps() -> Caps {
        Caps::default()
    }

    fn popcount_op(n: usize, weights: &[usize]) -> Operation {
        Operation::from_fn(d(), n, |x| {
            let w = x.iter().filter(|&&v| v == 1).count();
            weights.contains(&w) as u8
        })
        .unwrap()
    }

    fn mu(n: usize) -> Operation {
        popcount_op(n, &[1, n - 1])
    }

    fn named(ops: &[Operation]) -> Vec<(String, Operation)> {
        ops.iter().enumerate().map(|(i, f)| (format!("g{i}"), f.clone())).collect()
    }

    fn projections(n: usize) -> Vec<Operation> {
        (1..=n).map(|i| Operation::projection(d(), n, i).unwrap()).collect()
    }

    #[test]
    fn projections_only() {
        for n in 1..=4 {
            let f = generate(d(), &[], n, true, false, &caps()).unwrap();
            for a in 1..=n {
                let got: Vec<_> = f.members(a).cloned().collect();
                let mut want = projections(a);
                want.sort();
                assert_eq!(got, want);
            }
        }
        assert!(generate(d(), &[], 3, false, false, &caps()).unwrap().is_empty());
    }

    #[test]
    fn mu3_binary_slice() {
        // the binary slice at bound 3 equals the whole bound-2 fragment
        let f = generate(d(), &named(&[mu(3)]), 3, true, false, &caps()).unwrap();
        let binary: Vec<_> = f.members(2).map(Operation::table_string).collect();
        assert_eq!(binary.len(), 2);
        assert!(!binary.contains(&"0110".to_string()));
        let with_delta = generate(d(), &named(&[mu(3)]), 3, true, true, &caps()).unwrap();
        assert!(with_delta.members(2).any(|f| f.table_string() == "0110"));
    }

    #[test]
    fn mu3_fragment_up_to_four() {
        let f = generate(d(), &named(&[mu(3)]), 4, true, false, &caps()).unwrap();
        assert_eq!(f.members(1).count(), 1);
        assert_eq!(f.members(2).count(), 2);
        assert_eq!(f.members(3).count(), 4);
        // four projections and μ3 on each 3-element subset of the 4 variables
        let mut want: BTreeSet<Operation> = projections(4).into_iter().collect();
        for skip in 0..4 {
            want.insert(
                Operation::from_fn(d(), 4, |x| {
                    let args: Vec<u8> = (0..4).filter(|&i| i != skip).map(|i| x[i]).collect();
                    mu(3).eval(&args).unwrap()
                })
                .unwrap(),
            );
        }
        assert_eq!(f.members(4).cloned().collect::<BTreeSet<_>>(), want);
        assert!(!f.contains(&mu(4)).unwrap());
        let both = generate(d(), &named(&[mu(3), mu(4)]), 4, true, false, &caps()).unwrap();
        assert!(both.contains(&mu(4)).unwrap());
        assert!(both.contains(&mu(3)).unwrap());
    }

    #[test]
    fn contains_rejects_high_arity() {
        let f = generate(d(), &[], 2, true, false, &caps()).unwrap();
        assert!(f.contains(&mu(3)).is_err());
    }

    #[test]
    fn min_arity_examples() {
        let f = generate(d(), &named(&[mu(3)]), 4, true, false, &caps()).unwrap();
        assert_eq!(f.min_arity().unwrap(), 1);
        let f = generate(d(), &named(&[mu(3)]), 4, false, false, &caps()).unwrap();
        assert_eq!(f.min_arity().unwrap(), 3);
        let and = popcount_op(2, &[2]);
        let f = generate(d(), &named(&[and]), 3, false, false, &caps()).unwrap();
        assert_eq!(f.min_arity().unwrap(), 2);
        assert!(generate(d(), &[], 3, false, false, &caps()).unwrap().min_arity().is_err());
    }

    #[test]
    fn image_set_examples() {
        let proj = generate(d(), &[], 3, true, false, &caps()).unwrap();
        let m = Matrix::new(d(), 3, vec![vec![0, 1, 1], vec![1, 1, 0]]).unwrap();
        let want: BTreeSet<u64> = m.columns().iter().map(|c| d().rank(c).unwrap()).collect();
        assert_eq!(proj.image_set(&m).unwrap(), want);
        let single = Matrix::new(d(), 3, vec![vec![0, 1, 1]]).unwrap();
        assert_eq!(proj.image_set(&single).unwrap(), [3].into());

        let f = generate(d(), &named(&[mu(3)]), 3, true, false, &caps()).unwrap();
        let all = Matrix::all_rows(d(), 3).unwrap();
        let images = f.image_set(&all).unwrap();
        let mu_col = d().rank(&[0, 1, 1, 1, 1, 1, 1, 0]).unwrap();
        assert!(images.contains(&mu_col));
        for c in all.columns() {
            assert!(images.contains(&d().rank(c).unwrap()));
        }
        assert_eq!(images.len(), 4);
    }

    #[test]
    fn separates_and_from_projections() {
        let proj = generate(d(), &[], 3, true, false, &caps()).unwrap();
        let and = popcount_op(2, &[2]);
        let sys = separating_system(&proj, &and, &caps()).unwrap();
        assert_eq!(sys.arity(), 4);
        assert_eq!(sys.breadth(), 2);
        assert!(sys.is_valid());
        assert!(matches!(
            separating_system(&proj, &Operation::projection(d(), 2, 1).unwrap(), &caps()),
            Err(Error::Logic(_))
        ));
    }

    #[test]
    fn separation_refuses_delta_fragments() {
        let f = generate(d(), &[], 3, true, true, &caps()).unwrap();
        assert!(separating_system(&f, &popcount_op(2, &[2]), &caps()).is_err());
    }

    #[test]
    fn images_grow_with_blocks() {
        // F M_i ⊆ F M_j whenever M_i's columns are a submultiset of M_j's
        let f = generate(d(), &named(&[mu(3)]), 4, true, false, &caps()).unwrap();
        let all = Matrix::all_rows(d(), 2).unwrap();
        let cols = columns_multiset(&all);
        let whole = cols.join_unchecked(&cols);
        let subs = enumerate_submultisets(&whole);
        let image = |s: &Multiset| {
            let pts: Vec<u64> = s.points().collect();
            f.image_set(&Matrix::from_points(d(), 4, &pts).unwrap()).unwrap()
        };
        for a in subs.iter().filter(|s| !s.is_empty()) {
            for b in subs.iter().filter(|b| a.is_submultiset_unchecked(b)) {
                assert!(image(a).is_subset(&image(b)));
            }
        }
    }

    fn arb_generators() -> impl Strategy<Value = Vec<Operation>> {
        proptest::collection::vec(
            (1usize..=2).prop_flat_map(|n| (0u64..1 << (1 << n)).prop_map(move |i| Operation::from_table_index(d(), n, i))),
            0..3,
        )
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn bounded_generation_is_a_slice(gens in arb_generators(), proj in any::<bool>(), n in 2usize..=3) {
            let small = generate(d(), &named(&gens), n, proj, false, &caps()).unwrap();
            let big = generate(d(), &named(&gens), n + 1, proj, false, &caps()).unwrap();
            for a in 1..=n {
                prop_assert_eq!(small.members(a).collect::<Vec<_>>(), big.members(a).collect::<Vec<_>>());
            }
        }

        #[test]
        fn generation_is_monotone(gens in arb_generators(), extra in arb_generators()) {
            let small = generate(d(), &named(&gens), 3, true, false, &caps()).unwrap();
            let all: Vec<Operation> = gens.iter().chain(&extra).cloned().collect();
            let big = generate(d(), &named(&all), 3, true, false, &caps()).unwrap();
            for f in small.all_members() {
                prop_assert!(big.contains(f).unwrap());
            }
        }

        #[test]
        fn generated_fragment_is_a_fixpoint(gens in arb_generators(), proj in any::<bool>()) {
            let f = generate(d(), &named(&gens), 3, proj, false, &caps()).unwrap();
            for a in f.all_members() {
                prop_assert!(f.contains(&a.zeta()).unwrap());
                prop_assert!(f.contains(&a.tau()).unwrap());
                if a.arity() < 3 {
                    prop_assert!(f.contains(&a.nabla()).unwrap());
                }
                for b in f.all_members() {
                    if a.arity() + b.arity() - 1 <= 3 {
                        prop_assert!(f.contains(&a.star(b).unwrap()).unwrap());
                    }
                }
            }
        }

        #[test]
        fn separating_systems_separate(gens in arb_generators(), target in 0u64..16) {
            let f = generate(d(), &named(&gens), 3, true, false, &caps()).unwrap();
            let g = Operation::from_table_index(d(), 2, target);
            if !f.contains(&g).unwrap() {
                // separating_system checks both properties itself
                let sys = separating_system(&f, &g, &caps()).unwrap();
                prop_assert!(!crate::preserve::preserves_system(&g, &sys).unwrap());
            }
        }
    }
}
