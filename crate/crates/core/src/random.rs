//! Seeded generators and exhaustive enumerators for small systems, used by
//! the property tests and the acceptance checks.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::caps::Caps;
use crate::domain::FiniteDomain;
use crate::error::Result;
use crate::multiset::{Multiset, PointedMultiset};
use crate::system::{multisets_up_to, System};

pub type TestRng = ChaCha8Rng;

pub fn rng(seed: u64) -> TestRng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn universe(domain: FiniteDomain, arity: usize, breadth: usize) -> (Vec<Multiset>, Vec<PointedMultiset>) {
    let n = domain.power(arity).expect("small universe");
    let points: Vec<u64> = (0..n).collect();
    let ante = multisets_up_to(arity, &points, breadth);
    let cons = if breadth == 0 {
        Vec::new()
    } else {
        let rests = multisets_up_to(arity, &points, breadth - 1);
        points
            .iter()
            .flat_map(|&x| rests.iter().map(move |s| PointedMultiset::new(x, s.clone())))
            .collect()
    };
    (ante, cons)
}

fn down_close(cons: &mut BTreeSet<PointedMultiset>) {
    let mut stack: Vec<PointedMultiset> = cons.iter().cloned().collect();
    while let Some(pm) = stack.pop() {
        for p in pm.rest.support().collect::<Vec<_>>() {
            let smaller = PointedMultiset::new(pm.point, pm.rest.without_point(p).unwrap());
            if cons.insert(smaller.clone()) {
                stack.push(smaller);
            }
        }
    }
}

/// A random valid system: random consequent seeds are closed downward, then
/// the antecedent is a random subset enlarged by every grounding member.
pub fn random_system(rng: &mut TestRng, domain: FiniteDomain, arity: usize, breadth: usize) -> System {
    let (ante_all, cons_all) = universe(domain, arity, breadth);
    let cons_density = rng.gen_range(0.0..0.5);
    let ante_density = rng.gen_range(0.0..1.0);
    let mut cons: BTreeSet<PointedMultiset> = cons_all
        .into_iter()
        .filter(|_| rng.gen_bool(cons_density))
        .collect();
    down_close(&mut cons);
    let mut ante: BTreeSet<Multiset> = ante_all
        .into_iter()
        .filter(|_| rng.gen_bool(ante_density))
        .collect();
    ante.extend(cons.iter().map(PointedMultiset::underlying));
    System::new(domain, arity, breadth, ante, cons).expect("generator builds valid systems")
}

/// Every valid system over the given universe at the given bound.
pub fn all_systems(domain: FiniteDomain, arity: usize, breadth: usize, caps: &Caps) -> Result<Vec<System>> {
    let (ante_all, cons_all) = universe(domain, arity, breadth);
    Caps::check("system_members", 1u128 << cons_all.len().min(127), caps.system_members)?;
    Caps::check("system_members", 1u128 << ante_all.len().min(127), caps.system_members)?;
    let mut out = Vec::new();
    for mask in 0u64..1 << cons_all.len() {
        let cons: BTreeSet<PointedMultiset> = cons_all
            .iter()
            .enumerate()
            .filter(|(i, _)| mask >> i & 1 == 1)
            .map(|(_, pm)| pm.clone())
            .collect();
        let mut closed = cons.clone();
        down_close(&mut closed);
        if closed != cons {
            continue;
        }
        let grounding: BTreeSet<Multiset> = cons.iter().map(PointedMultiset::underlying).collect();
        let free: Vec<&Multiset> = ante_all.iter().filter(|s| !grounding.contains(s)).collect();
        for amask in 0u64..1 << free.len() {
            let mut ante = grounding.clone();
            ante.extend(
                free.iter()
                    .enumerate()
                    .filter(|(i, _)| amask >> i & 1 == 1)
                    .map(|(_, s)| (*s).clone()),
            );
            out.push(System::from_parts_unchecked(domain, arity, breadth, ante, cons.clone()));
        }
    }
    Ok(out)
}
