//! Preservation of relations and of systems of pointed multisets, and the
//! bounded "which operations preserve these systems" query.

use std::collections::BTreeSet;

use rayon::prelude::*;

use crate::caps::Caps;
use crate::domain::{Elem, FiniteDomain, Operation};
use crate::error::{Error, Result};
use crate::multiset::{for_each_arrangement, Multiset, PointedMultiset};
use crate::system::System;

/// A relation `R ⊆ A^m`, stored as tuple ranks.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Relation {
    domain: FiniteDomain,
    arity: usize,
    tuples: BTreeSet<u64>,
}

impl Relation {
    pub fn new(domain: FiniteDomain, arity: usize, tuples: impl IntoIterator<Item = u64>) -> Result<Self> {
        if arity == 0 {
            return Err(Error::input("relations need arity at least 1"));
        }
        let bound = domain.power(arity)?;
        let tuples: BTreeSet<u64> = tuples.into_iter().collect();
        if let Some(&bad) = tuples.iter().find(|&&t| t >= bound) {
            return Err(Error::input(format!("tuple rank {bad} is out of range for arity {arity}")));
        }
        Ok(Relation {
            domain,
            arity,
            tuples,
        })
    }

    pub fn domain(&self) -> FiniteDomain {
        self.domain
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn tuples(&self) -> &BTreeSet<u64> {
        &self.tuples
    }
}

fn same_domain(f: &Operation, d: FiniteDomain) -> Result<()> {
    if f.domain() != d {
        return Err(Error::input(format!(
            "operation over k={} checked against a structure over k={}",
            f.domain().size(),
            d.size()
        )));
    }
    Ok(())
}

/// True iff `fM ∈ R` for every matrix whose columns all lie in `R`.
pub fn preserves_relation(f: &Operation, rel: &Relation, caps: &Caps) -> Result<bool> {
    same_domain(f, rel.domain)?;
    let n = f.arity();
    let members: Vec<Vec<Elem>> = rel
        .tuples
        .iter()
        .map(|&t| rel.domain.unrank(t, rel.arity))
        .collect::<Result<_>>()?;
    if members.is_empty() {
        return Ok(true);
    }
    let count = (members.len() as u128).saturating_pow(n as u32);
    Caps::check("relation_matrices", count, caps.relation_matrices)?;
    let mut choice = vec![0usize; n];
    loop {
        let columns: Vec<&[Elem]> = choice.iter().map(|&i| members[i].as_slice()).collect();
        let image = f.apply_columns(&columns, rel.arity);
        if !rel.tuples.contains(&rel.domain.rank(&image)?) {
            return Ok(false);
        }
        let mut i = 0;
        loop {
            if i == n {
                return Ok(true);
            }
            choice[i] += 1;
            if choice[i] < members.len() {
                break;
            }
            choice[i] = 0;
            i += 1;
        }
    }
}

/// A matrix `[M1 | M2] ≺ Φ` with `[fM1 | M2]` not in the consequent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Witness {
    /// The antecedent member the matrix was drawn from.
    pub member: Multiset,
    /// Columns of `M1`, in order.
    pub chosen: Vec<u64>,
    /// `M2*`.
    pub rest: Multiset,
    /// `fM1`.
    pub image: u64,
}

/// Finds a matrix violating preservation, if any. Antecedent members with
/// fewer than `arity(f)` points impose nothing.
pub fn preservation_witness(f: &Operation, sys: &System) -> Result<Option<Witness>> {
    same_domain(f, sys.domain())?;
    let d = sys.domain();
    let m = sys.arity();
    let n = f.arity();
    let mut columns = vec![vec![0 as Elem; m]; n];
    let mut found = None;
    for s in sys.ante() {
        if s.cardinality() < n {
            continue;
        }
        for_each_arrangement(s, n, &mut |chosen, rest| {
            for (col, &p) in columns.iter_mut().zip(chosen) {
                d.unrank_into(p, col);
            }
            let image = d.rank(&f.apply_columns(&columns, m)).expect("image is in range");
            if sys.cons().contains(&PointedMultiset::new(image, rest.clone())) {
                true
            } else {
                found = Some(Witness {
                    member: s.clone(),
                    chosen: chosen.to_vec(),
                    rest: rest.clone(),
                    image,
                });
                false
            }
        });
        if found.is_some() {
            break;
        }
    }
    Ok(found)
}

/// `f ▷ (Φ, Φ′)` over the stored fragment. By restricting to fragments this is
/// exact for matrices of at most `breadth` columns.
pub fn preserves_system(f: &Operation, sys: &System) -> Result<bool> {
    Ok(preservation_witness(f, sys)?.is_none())
}

pub fn all_preserve<'a>(ops: impl IntoIterator<Item = &'a Operation>, sys: &System) -> Result<bool> {
    for f in ops {
        if !preserves_system(f, sys)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Every operation of arity `1..=max_arity` preserving all of `systems`, in
/// order of arity and then table index.
pub fn characterized_ops(
    domain: FiniteDomain,
    systems: &[System],
    max_arity: usize,
    caps: &Caps,
) -> Result<Vec<Operation>> {
    for s in systems {
        if s.domain() != domain {
            return Err(Error::input("systems over different domains"));
        }
    }
    let mut out = Vec::new();
    for n in 1..=max_arity {
        let len = domain.power(n)?;
        Caps::check("max_table_len", len as u128, caps.max_table_len)?;
        let space = (domain.size() as u128).checked_pow(len as u32).unwrap_or(u128::MAX);
        Caps::check("max_table_space", space, caps.max_table_space)?;
        let found: Vec<Operation> = (0..space as u64)
            .into_par_iter()
            .map(|idx| Operation::from_table_index(domain, n, idx))
            .filter(|f| systems.iter().all(|s| preserves_system(f, s).unwrap_or(false)))
            .collect();
        out.extend(found);
    }
    Ok(out)
}
