//! Breadth-bounded systems of pointed multisets.
//!
//! A `System` stores the fragment of a (possibly infinite) system consisting of
//! all antecedent members of cardinality at most `breadth` and all consequent
//! members `(x, S)` with `|S| + 1` at most `breadth`. Every operator documents
//! the bound of its output.

use std::collections::BTreeSet;

use crate::caps::Caps;
use crate::domain::FiniteDomain;
use crate::error::{Error, Result};
use crate::multiset::{Multiset, PointedMultiset};
use crate::preserve::Relation;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct System {
    domain: FiniteDomain,
    arity: usize,
    breadth: usize,
    ante: BTreeSet<Multiset>,
    cons: BTreeSet<PointedMultiset>,
}

impl System {
    /// Builds a system and runs [`System::validate`] on it.
    pub fn new(
        domain: FiniteDomain,
        arity: usize,
        breadth: usize,
        ante: BTreeSet<Multiset>,
        cons: BTreeSet<PointedMultiset>,
    ) -> Result<Self> {
        let sys = System::from_parts(domain, arity, breadth, ante, cons)?;
        sys.validate()?;
        Ok(sys)
    }

    /// Builds a system without checking the closure conditions. Shape errors
    /// (wrong tuple arity, out-of-range points, members over the bound) are
    /// still rejected.
    pub fn from_parts(
        domain: FiniteDomain,
        arity: usize,
        breadth: usize,
        ante: BTreeSet<Multiset>,
        cons: BTreeSet<PointedMultiset>,
    ) -> Result<Self> {
        if arity == 0 {
            return Err(Error::input("systems need arity at least 1"));
        }
        let points = domain.power(arity)?;
        let in_range = |s: &Multiset| s.arity() == arity && s.support().all(|p| p < points);
        for s in &ante {
            if !in_range(s) {
                return Err(Error::input("antecedent member over the wrong tuple space"));
            }
            if s.cardinality() > breadth {
                return Err(Error::InvalidSystem(format!(
                    "antecedent member of cardinality {} exceeds breadth {breadth}",
                    s.cardinality()
                )));
            }
        }
        for pm in &cons {
            if !in_range(&pm.rest) || pm.point >= points {
                return Err(Error::input("consequent member over the wrong tuple space"));
            }
            if pm.cardinality() > breadth {
                return Err(Error::InvalidSystem(format!(
                    "consequent member of cardinality {} exceeds breadth {breadth}",
                    pm.cardinality()
                )));
            }
        }
        Ok(System {
            domain,
            arity,
            breadth,
            ante,
            cons,
        })
    }

    pub(crate) fn from_parts_unchecked(
        domain: FiniteDomain,
        arity: usize,
        breadth: usize,
        ante: BTreeSet<Multiset>,
        cons: BTreeSet<PointedMultiset>,
    ) -> Self {
        System {
            domain,
            arity,
            breadth,
            ante,
            cons,
        }
    }

    pub fn domain(&self) -> FiniteDomain {
        self.domain
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn breadth(&self) -> usize {
        self.breadth
    }

    pub fn ante(&self) -> &BTreeSet<Multiset> {
        &self.ante
    }

    pub fn cons(&self) -> &BTreeSet<PointedMultiset> {
        &self.cons
    }

    /// Checks downward closure of the consequent and grounding of every
    /// consequent member in the antecedent, reporting the first violation.
    pub fn validate(&self) -> Result<()> {
        for pm in &self.cons {
            // one-point removals suffice: closure under them gives closure
            // under all submultisets by induction
            for p in pm.rest.support() {
                let smaller = PointedMultiset::new(pm.point, pm.rest.without_point(p).unwrap());
                if !self.cons.contains(&smaller) {
                    return Err(Error::InvalidSystem(format!(
                        "consequent not downward closed: {:?} present but {:?} missing",
                        pm, smaller
                    )));
                }
            }
            if !self.ante.contains(&pm.underlying()) {
                return Err(Error::InvalidSystem(format!(
                    "consequent member {:?} has no grounding antecedent member",
                    pm
                )));
            }
        }
        Ok(())
    }

    pub fn is_valid(&self) -> bool {
        self.validate().is_ok()
    }

    fn same_shape(&self, other: &System) -> Result<()> {
        if self.arity != other.arity || self.domain != other.domain {
            return Err(Error::input(format!(
                "systems of arity {} and {} cannot be combined",
                self.arity, other.arity
            )));
        }
        Ok(())
    }
}

/// All multisets supported on `points` with cardinality at most `max_card`.
pub(crate) fn multisets_up_to(arity: usize, points: &[u64], max_card: usize) -> Vec<Multiset> {
    let mut out = Vec::new();
    let mut counts = Vec::with_capacity(points.len());
    fn rec(
        arity: usize,
        points: &[u64],
        left: usize,
        counts: &mut Vec<u32>,
        out: &mut Vec<Multiset>,
    ) {
        if counts.len() == points.len() {
            out.push(Multiset::from_counts(
                arity,
                points.iter().copied().zip(counts.iter().copied()),
            ));
            return;
        }
        for c in 0..=left {
            counts.push(c as u32);
            rec(arity, points, left - c, counts, out);
            counts.pop();
        }
    }
    rec(arity, points, max_card, &mut counts, &mut out);
    out
}

pub(crate) fn binomial(n: u128, r: u128) -> u128 {
    let r = r.min(n.saturating_sub(r));
    (0..r).fold(1u128, |acc, i| acc.saturating_mul(n - i) / (i + 1))
}

/// Number of multisets over `n` points with cardinality at most `p`.
fn multiset_count(n: u64, p: usize) -> u128 {
    binomial(n as u128 + p as u128, p as u128)
}

/// The fragment of the system `(ante, R × ante)` where `ante` is every
/// multiset supported on `points`, at breadth `breadth`.
fn supported_on(
    domain: FiniteDomain,
    arity: usize,
    points: &[u64],
    breadth: usize,
    caps: &Caps,
) -> Result<System> {
    let n = points.len() as u64;
    let needed = multiset_count(n, breadth)
        .saturating_add((n as u128).saturating_mul(multiset_count(n, breadth.saturating_sub(1))));
    Caps::check("system_members", needed, caps.system_members)?;
    let ante: BTreeSet<Multiset> = multisets_up_to(arity, points, breadth).into_iter().collect();
    let cons = if breadth == 0 {
        BTreeSet::new()
    } else {
        let rests = multisets_up_to(arity, points, breadth - 1);
        points
            .iter()
            .flat_map(|&x| rests.iter().map(move |s| PointedMultiset::new(x, s.clone())))
            .collect()
    };
    Ok(System::from_parts_unchecked(domain, arity, breadth, ante, cons))
}

/// The trivial system at breadth `breadth`: every multiset and every pointed
/// multiset of cardinality at most `breadth`. At breadth 0 this is `({ε}, ∅)`.
pub fn trivial(domain: FiniteDomain, arity: usize, breadth: usize, caps: &Caps) -> Result<System> {
    if arity == 0 {
        return Err(Error::input("systems need arity at least 1"));
    }
    let n = domain.power(arity)?;
    Caps::check("system_members", n as u128, caps.system_members)?;
    let points: Vec<u64> = (0..n).collect();
    supported_on(domain, arity, &points, breadth, caps)
}

/// `(∅, ∅)`, stored with the given bound.
pub fn empty_system(domain: FiniteDomain, arity: usize, breadth: usize) -> Result<System> {
    System::from_parts(domain, arity, breadth, BTreeSet::new(), BTreeSet::new())
}

/// Multisets of constant tuples `(a, .., a)`.
pub fn equality_system(
    domain: FiniteDomain,
    arity: usize,
    breadth: usize,
    caps: &Caps,
) -> Result<System> {
    if arity == 0 {
        return Err(Error::input("systems need arity at least 1"));
    }
    domain.power(arity)?;
    let points: Vec<u64> = (0..domain.size())
        .map(|a| domain.rank(&vec![a as u8; arity]).unwrap())
        .collect();
    supported_on(domain, arity, &points, breadth, caps)
}

/// `(Φ_R, R × Φ_R)` where `Φ_R` is every multiset supported on `R`. An
/// operation of arity n preserves `R` iff it preserves this system at any
/// breadth of at least n + 1.
pub fn from_relation(rel: &Relation, breadth: usize, caps: &Caps) -> Result<System> {
    let points: Vec<u64> = rel.tuples().iter().copied().collect();
    supported_on(rel.domain(), rel.arity(), &points, breadth, caps)
}

/// `(Φ/S, Φ′/S)` with bound `breadth − |S|`, or the empty fragment with bound
/// 0 when `|S|` exceeds the bound.
pub fn quotient(sys: &System, s: &Multiset) -> Result<System> {
    if s.arity() != sys.arity {
        return Err(Error::input("quotient by a multiset over the wrong tuple space"));
    }
    let breadth = sys.breadth.saturating_sub(s.cardinality());
    let ante = sys
        .ante
        .iter()
        .filter(|u| s.is_submultiset_unchecked(u))
        .map(|u| u.difference_unchecked(s))
        .collect();
    let cons = sys
        .cons
        .iter()
        .filter(|pm| s.is_submultiset_unchecked(&pm.rest))
        .map(|pm| PointedMultiset::new(pm.point, pm.rest.difference_unchecked(s)))
        .collect();
    Ok(System::from_parts_unchecked(sys.domain, sys.arity, breadth, ante, cons))
}

/// Members of cardinality at most `p`; bound `min(breadth, p)`.
pub fn breadth_restrict(sys: &System, p: usize) -> System {
    System::from_parts_unchecked(
        sys.domain,
        sys.arity,
        sys.breadth.min(p),
        sys.ante.iter().filter(|s| s.cardinality() <= p).cloned().collect(),
        sys.cons.iter().filter(|pm| pm.cardinality() <= p).cloned().collect(),
    )
}

/// Componentwise union; the bound is the largest input bound.
pub fn union(systems: &[System]) -> Result<System> {
    let first = systems
        .first()
        .ok_or_else(|| Error::input("union of zero systems"))?;
    let mut out = first.clone();
    for s in &systems[1..] {
        first.same_shape(s)?;
        out.breadth = out.breadth.max(s.breadth);
        out.ante.extend(s.ante.iter().cloned());
        out.cons.extend(s.cons.iter().cloned());
    }
    Ok(out)
}

/// Replaces the antecedent by a subset of it, keeping the consequent.
pub fn restrict_antecedent(sys: &System, ante: BTreeSet<Multiset>) -> Result<System> {
    if !ante.is_subset(&sys.ante) {
        return Err(Error::input("new antecedent is not a subset of the old one"));
    }
    System::new(sys.domain, sys.arity, sys.breadth, ante, sys.cons.clone())
}

/// Replaces the consequent by a superset of it, keeping the antecedent.
pub fn extend_consequent(sys: &System, cons: BTreeSet<PointedMultiset>) -> Result<System> {
    if !sys.cons.is_subset(&cons) {
        return Err(Error::input("new consequent does not contain the old one"));
    }
    System::new(sys.domain, sys.arity, sys.breadth, sys.ante.clone(), cons)
}

/// True iff the trivial system of breadth `p` is contained in `sys`.
pub fn contains_trivial_breadth(sys: &System, p: usize) -> Result<bool> {
    if p > sys.breadth {
        return Err(Error::input(format!(
            "breadth {p} exceeds the stored bound {}",
            sys.breadth
        )));
    }
    // members are distinct and drawn from the right universe, so counting
    // those of small cardinality decides inclusion
    let n = sys.domain.power(sys.arity)?;
    let ante = sys.ante.iter().filter(|s| s.cardinality() <= p).count() as u128;
    let cons = sys.cons.iter().filter(|pm| pm.cardinality() <= p).count() as u128;
    let want_cons = if p == 0 {
        0
    } else {
        n as u128 * multiset_count(n, p - 1)
    };
    Ok(ante == multiset_count(n, p) && cons == want_cons)
}
