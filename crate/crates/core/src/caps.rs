//! Resource caps shared by every enumeration in the crate.
//!
//! All searches here are exhaustive. The caps turn a runaway enumeration into
//! an `Error::Resource` before any work is done.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Caps {
    /// Largest operation table (k^n entries) that closure and enumeration
    /// commands accept. 81 gives arity 6 at k = 2 and arity 4 at k = 3.
    pub max_table_len: u64,
    /// Largest number of tables k^(k^n) that `characterized_ops` will scan per arity.
    pub max_table_space: u64,
    /// Largest |A|^|V| Skolem search per column.
    pub skolem_budget: u64,
    /// Largest number of (X, partition, image choice) triples in a separating system.
    pub separating_candidates: u64,
    /// Largest k^n row count of the witness matrix of a separating system.
    pub witness_rows: u64,
    /// Largest number of members a constructed system component may have.
    pub system_members: u64,
    /// Largest number of matrices |R|^n checked by relation preservation.
    pub relation_matrices: u64,
    /// Largest number of members of a closure fragment.
    pub closure_members: u64,
    /// Largest number of linear terms enumerated.
    pub term_count: u64,
}

impl Default for Caps {
    fn default() -> Self {
        Caps {
            max_table_len: 81,
            max_table_space: 1 << 20,
            skolem_budget: 256,
            separating_candidates: 10_000_000,
            witness_rows: 32,
            system_members: 1 << 20,
            relation_matrices: 1 << 24,
            closure_members: 1 << 20,
            term_count: 1 << 22,
        }
    }
}

impl Caps {
    /// Largest arity n with k^n within `max_table_len`.
    pub fn max_arity(&self, k: usize) -> usize {
        if k <= 1 {
            return 64;
        }
        let mut n = 0usize;
        let mut len = 1u64;
        while let Some(next) = len.checked_mul(k as u64) {
            if next > self.max_table_len {
                break;
            }
            len = next;
            n += 1;
        }
        n
    }

    /// Overrides a single cap from a `key=value` pair.
    pub fn set(&mut self, assignment: &str) -> Result<()> {
        let (key, value) = assignment
            .split_once('=')
            .ok_or_else(|| Error::input(format!("cap override `{assignment}` is not key=value")))?;
        let value: u64 = value
            .trim()
            .parse()
            .map_err(|_| Error::input(format!("cap `{key}` needs a non-negative integer")))?;
        let slot = match key.trim() {
            "max_table_len" => &mut self.max_table_len,
            "max_table_space" => &mut self.max_table_space,
            "skolem_budget" => &mut self.skolem_budget,
            "separating_candidates" => &mut self.separating_candidates,
            "witness_rows" => &mut self.witness_rows,
            "system_members" => &mut self.system_members,
            "relation_matrices" => &mut self.relation_matrices,
            "closure_members" => &mut self.closure_members,
            "term_count" => &mut self.term_count,
            other => return Err(Error::input(format!("unknown cap `{other}`"))),
        };
        *slot = value;
        Ok(())
    }

    pub(crate) fn check(cap: &'static str, needed: u128, limit: u64) -> Result<()> {
        if needed > limit as u128 {
            Err(Error::Resource {
                cap,
                needed,
                limit: limit as u128,
            })
        } else {
            Ok(())
        }
    }
}
