//! Finite domains, ranked tuples, dense operation tables and the Mal'cev
//! operations ζ, τ, Δ, ∇ and ∗.
//!
//! Tuples over `A = {0, .., k-1}` are ranked with the first coordinate most
//! significant, so the table of an operation reads in lexicographic input
//! order: entry `r` is `f(unrank(r, n))`.

use std::cmp::Ordering;
use std::fmt;

use crate::error::{Error, Result};

/// An element of a finite domain.
pub type Elem = u8;

/// The domain `{0, .., size - 1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FiniteDomain {
    size: usize,
}

impl FiniteDomain {
    pub fn new(size: usize) -> Result<Self> {
        if size == 0 || size > Elem::MAX as usize + 1 {
            return Err(Error::input(format!("domain size {size} must be in 1..=256")));
        }
        Ok(FiniteDomain { size })
    }

    pub fn boolean() -> Self {
        FiniteDomain { size: 2 }
    }

    pub fn size(self) -> usize {
        self.size
    }

    /// `k^n`, or a resource error when it does not fit in 64 bits.
    pub fn power(self, n: usize) -> Result<u64> {
        (self.size as u64)
            .checked_pow(n.try_into().unwrap_or(u32::MAX))
            .ok_or(Error::Resource {
                cap: "u64_rank",
                needed: u128::MAX,
                limit: u64::MAX as u128,
            })
    }

    pub fn rank(self, tuple: &[Elem]) -> Result<u64> {
        let k = self.size as u64;
        let mut r: u64 = 0;
        for &x in tuple {
            if x as usize >= self.size {
                return Err(Error::input(format!(
                    "tuple entry {x} is outside the domain of size {}",
                    self.size
                )));
            }
            r = r
                .checked_mul(k)
                .and_then(|r| r.checked_add(x as u64))
                .ok_or_else(|| Error::input("tuple rank overflows 64 bits"))?;
        }
        Ok(r)
    }

    pub fn unrank(self, rank: u64, m: usize) -> Result<Vec<Elem>> {
        let bound = self.power(m)?;
        if rank >= bound {
            return Err(Error::input(format!(
                "rank {rank} is out of range for {m}-tuples over a domain of size {}",
                self.size
            )));
        }
        let mut out = vec![0; m];
        self.unrank_into(rank, &mut out);
        Ok(out)
    }

    /// Unchecked inverse of `rank` into a caller-provided buffer.
    pub(crate) fn unrank_into(self, mut rank: u64, out: &mut [Elem]) {
        let k = self.size as u64;
        for slot in out.iter_mut().rev() {
            *slot = (rank % k) as Elem;
            rank /= k;
        }
    }

    /// Iterates over all n-tuples in rank order.
    pub fn tuples(self, n: usize) -> impl Iterator<Item = Vec<Elem>> {
        let count = self.power(n).expect("tuple space fits in u64");
        (0..count).map(move |r| {
            let mut t = vec![0; n];
            self.unrank_into(r, &mut t);
            t
        })
    }
}

fn table_len(domain: FiniteDomain, arity: usize) -> usize {
    let len = domain.power(arity).expect("operation table size overflows u64");
    usize::try_from(len).expect("operation table does not fit in memory")
}

/// A finitary operation `A^n -> A`, `n >= 1`, stored as a dense value table.
///
/// Equality is table equality over the same domain and arity. An operation
/// and its cylindrification are never equal.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Operation {
    domain: FiniteDomain,
    arity: usize,
    table: Vec<Elem>,
}

impl Ord for Operation {
    fn cmp(&self, other: &Self) -> Ordering {
        self.domain
            .cmp(&other.domain)
            .then(self.arity.cmp(&other.arity))
            .then_with(|| self.table.cmp(&other.table))
    }
}

impl PartialOrd for Operation {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for Operation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Operation(k={}, n={}, {})", self.domain.size, self.arity, self.table_string())
    }
}

impl Operation {
    pub fn new(domain: FiniteDomain, arity: usize, table: Vec<Elem>) -> Result<Self> {
        if arity == 0 {
            return Err(Error::input("nullary operations are not supported"));
        }
        let expected = domain.power(arity)?;
        if table.len() as u64 != expected {
            return Err(Error::input(format!(
                "table for an {arity}-ary operation over k={} needs {expected} entries, got {}",
                domain.size,
                table.len()
            )));
        }
        if let Some(bad) = table.iter().find(|&&v| v as usize >= domain.size) {
            return Err(Error::input(format!("table value {bad} is outside the domain")));
        }
        Ok(Operation {
            domain,
            arity,
            table,
        })
    }

    /// Builds the table by evaluating `f` on every n-tuple in rank order.
    pub fn from_fn(
        domain: FiniteDomain,
        arity: usize,
        mut f: impl FnMut(&[Elem]) -> Elem,
    ) -> Result<Self> {
        if arity == 0 {
            return Err(Error::input("nullary operations are not supported"));
        }
        let table = domain.tuples(arity).map(|t| f(&t)).collect();
        Operation::new(domain, arity, table)
    }

    /// Operation whose table is the base-k expansion of `index` (first entry most significant).
    pub fn from_table_index(domain: FiniteDomain, arity: usize, mut index: u64) -> Self {
        let k = domain.size as u64;
        let mut table = vec![0; table_len(domain, arity)];
        for slot in table.iter_mut().rev() {
            *slot = (index % k) as Elem;
            index /= k;
        }
        Operation {
            domain,
            arity,
            table,
        }
    }

    /// The projection `e_i^n` with `i` in `1..=n`.
    pub fn projection(domain: FiniteDomain, n: usize, i: usize) -> Result<Self> {
        if n == 0 || i == 0 || i > n {
            return Err(Error::input(format!("projection index {i} is not in 1..={n}")));
        }
        let k = domain.size as u64;
        let shift = domain.power(n - i)?;
        let table = (0..domain.power(n)?)
            .map(|r| ((r / shift) % k) as Elem)
            .collect();
        Ok(Operation {
            domain,
            arity: n,
            table,
        })
    }

    pub fn domain(&self) -> FiniteDomain {
        self.domain
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn table(&self) -> &[Elem] {
        &self.table
    }

    pub fn value_at(&self, rank: usize) -> Elem {
        self.table[rank]
    }

    pub fn eval(&self, args: &[Elem]) -> Result<Elem> {
        if args.len() != self.arity {
            return Err(Error::input(format!(
                "operation of arity {} applied to {} arguments",
                self.arity,
                args.len()
            )));
        }
        Ok(self.table[self.domain.rank(args)? as usize])
    }

    /// The table as a digit string. Only meaningful for k <= 10.
    pub fn table_string(&self) -> String {
        self.table
            .iter()
            .map(|&v| char::from_digit(v as u32, 36).unwrap_or('?'))
            .collect()
    }

    pub fn is_projection(&self) -> bool {
        (1..=self.arity).any(|i| {
            Operation::projection(self.domain, self.arity, i)
                .map(|p| p == *self)
                .unwrap_or(false)
        })
    }

    fn stride(&self, pos: usize) -> usize {
        table_len(self.domain, self.arity - 1 - pos)
    }

    /// Cyclic shift of variables: `(ζf)(x1, .., xn) = f(x2, .., xn, x1)`.
    pub fn zeta(&self) -> Operation {
        if self.arity == 1 {
            return self.clone();
        }
        let k = self.domain.size;
        let high = self.stride(0);
        let table = (0..self.table.len())
            .map(|r| self.table[(r % high) * k + r / high])
            .collect();
        Operation {
            table,
            ..self.clone()
        }
    }

    /// Transposition of the first two variables.
    pub fn tau(&self) -> Operation {
        if self.arity == 1 {
            return self.clone();
        }
        let k = self.domain.size;
        let s1 = self.stride(0);
        let s2 = self.stride(1);
        let table = (0..self.table.len())
            .map(|r| {
                let x1 = r / s1;
                let x2 = (r / s2) % k;
                let rest = r % s2;
                self.table[x2 * s1 + x1 * s2 + rest]
            })
            .collect();
        Operation {
            table,
            ..self.clone()
        }
    }

    /// Identification of the first two variables: `(Δf)(x1, .., x_{n-1}) = f(x1, x1, x2, ..)`.
    pub fn delta(&self) -> Operation {
        if self.arity == 1 {
            return self.clone();
        }
        let s1 = self.stride(0);
        let s2 = self.stride(1);
        let table = (0..s1).map(|r| self.table[(r / s2) * s1 + r]).collect();
        Operation {
            domain: self.domain,
            arity: self.arity - 1,
            table,
        }
    }

    /// Addition of a dummy first variable.
    ///
    /// Panics if the resulting table does not fit in memory.
    pub fn nabla(&self) -> Operation {
        let len = self.table.len();
        let table = (0..len * self.domain.size)
            .map(|r| self.table[r % len])
            .collect();
        Operation {
            domain: self.domain,
            arity: self.arity + 1,
            table,
        }
    }

    /// Composition into the first argument:
    /// `(f ∗ g)(x1, .., x_{m+n-1}) = f(g(x1, .., xm), x_{m+1}, .., x_{m+n-1})`.
    pub fn star(&self, g: &Operation) -> Result<Operation> {
        if self.domain != g.domain {
            return Err(Error::input("composition of operations over different domains"));
        }
        let low = self.stride(0);
        let mut table = Vec::with_capacity(g.table.len() * low);
        for &gv in &g.table {
            let base = gv as usize * low;
            table.extend_from_slice(&self.table[base..base + low]);
        }
        Ok(Operation {
            domain: self.domain,
            arity: self.arity + g.arity - 1,
            table,
        })
    }

    /// Applies the operation to every row of `m`, giving the tuple `fM`.
    pub fn apply_rows(&self, m: &Matrix) -> Result<Vec<Elem>> {
        if m.domain != self.domain {
            return Err(Error::input("matrix and operation live over different domains"));
        }
        if m.columns.len() != self.arity {
            return Err(Error::input(format!(
                "operation of arity {} applied to a matrix with {} columns",
                self.arity,
                m.columns.len()
            )));
        }
        Ok(self.apply_columns(&m.columns, m.rows))
    }

    /// Row-wise application to already validated columns.
    pub(crate) fn apply_columns<C: AsRef<[Elem]>>(&self, columns: &[C], rows: usize) -> Vec<Elem> {
        let k = self.domain.size;
        (0..rows)
            .map(|i| {
                let idx = columns
                    .iter()
                    .fold(0usize, |acc, c| acc * k + c.as_ref()[i] as usize);
                self.table[idx]
            })
            .collect()
    }
}

/// An m × n matrix stored as its n columns.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Matrix {
    domain: FiniteDomain,
    rows: usize,
    columns: Vec<Vec<Elem>>,
}

impl Matrix {
    pub fn new(domain: FiniteDomain, rows: usize, columns: Vec<Vec<Elem>>) -> Result<Self> {
        if rows == 0 {
            return Err(Error::input("matrices need at least one row"));
        }
        for c in &columns {
            if c.len() != rows {
                return Err(Error::input(format!(
                    "column of length {} in a matrix with {rows} rows",
                    c.len()
                )));
            }
            if c.iter().any(|&x| x as usize >= domain.size) {
                return Err(Error::input("matrix entry outside the domain"));
            }
        }
        Ok(Matrix {
            domain,
            rows,
            columns,
        })
    }

    pub fn empty(domain: FiniteDomain, rows: usize) -> Result<Self> {
        Matrix::new(domain, rows, Vec::new())
    }

    /// Matrix whose columns are the unranked points.
    pub fn from_points(domain: FiniteDomain, rows: usize, points: &[u64]) -> Result<Self> {
        let columns = points
            .iter()
            .map(|&p| domain.unrank(p, rows))
            .collect::<Result<Vec<_>>>()?;
        Matrix::new(domain, rows, columns)
    }

    /// The k^n × n matrix whose rows are all n-tuples in rank order.
    pub fn all_rows(domain: FiniteDomain, n: usize) -> Result<Self> {
        let rows = domain.tuples(n).collect::<Vec<_>>();
        let columns = (0..n).map(|j| rows.iter().map(|r| r[j]).collect()).collect();
        Matrix::new(domain, rows.len(), columns)
    }

    pub fn domain(&self) -> FiniteDomain {
        self.domain
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn columns(&self) -> &[Vec<Elem>] {
        &self.columns
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn row(&self, i: usize) -> Vec<Elem> {
        self.columns.iter().map(|c| c[i]).collect()
    }

    /// `[M1 | M2 | .. | Mp]`.
    pub fn hconcat(parts: &[Matrix]) -> Result<Matrix> {
        let first = parts
            .first()
            .ok_or_else(|| Error::input("cannot concatenate zero matrices"))?;
        let mut columns = Vec::new();
        for p in parts {
            if p.rows != first.rows || p.domain != first.domain {
                return Err(Error::input(format!(
                    "cannot concatenate a matrix with {} rows onto one with {} rows",
                    p.rows, first.rows
                )));
            }
            columns.extend(p.columns.iter().cloned());
        }
        Ok(Matrix {
            domain: first.domain,
            rows: first.rows,
            columns,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b() -> FiniteDomain {
        FiniteDomain::boolean()
    }

    fn op(k: usize, n: usize, s: &str) -> Operation {
        let table = s.chars().map(|c| c.to_digit(10).unwrap() as Elem).collect();
        Operation::new(FiniteDomain::new(k).unwrap(), n, table).unwrap()
    }

    fn all_ops(domain: FiniteDomain, n: usize) -> Vec<Operation> {
        let count = (domain.size() as u64).pow(domain.power(n).unwrap() as u32);
        (0..count)
            .map(|i| Operation::from_table_index(domain, n, i))
            .collect()
    }

    // Pointwise oracles straight from the defining formulas.
    fn zeta_oracle(f: &Operation) -> Operation {
        Operation::from_fn(f.domain(), f.arity(), |x| {
            let mut y = x[1..].to_vec();
            y.push(x[0]);
            f.eval(&y).unwrap()
        })
        .unwrap()
    }

    fn tau_oracle(f: &Operation) -> Operation {
        Operation::from_fn(f.domain(), f.arity(), |x| {
            let mut y = x.to_vec();
            if y.len() > 1 {
                y.swap(0, 1);
            }
            f.eval(&y).unwrap()
        })
        .unwrap()
    }

    fn mu3() -> Operation {
        // popcount in {1, 2} over {0,1}^3
        Operation::from_fn(b(), 3, |x| {
            let w = x.iter().filter(|&&v| v == 1).count();
            (w == 1 || w == 2) as Elem
        })
        .unwrap()
    }

    #[test]
    fn rank_examples() {
        let k2 = b();
        let k3 = FiniteDomain::new(3).unwrap();
        assert_eq!(k2.rank(&[0, 0, 0]).unwrap(), 0);
        assert_eq!(k2.rank(&[1, 0]).unwrap(), 2);
        assert_eq!(k3.rank(&[1, 2]).unwrap(), 5);
        assert!(k2.rank(&[2]).is_err());
    }

    #[test]
    fn unrank_examples() {
        let k2 = b();
        let k3 = FiniteDomain::new(3).unwrap();
        assert_eq!(k2.unrank(0, 2).unwrap(), vec![0, 0]);
        assert_eq!(k2.unrank(3, 2).unwrap(), vec![1, 1]);
        assert_eq!(k3.unrank(5, 2).unwrap(), vec![1, 2]);
        assert!(k2.unrank(4, 2).is_err());
    }

    #[test]
    fn rank_unrank_bijective_small() {
        for k in 1..=3 {
            let d = FiniteDomain::new(k).unwrap();
            for m in 0..=4 {
                for r in 0..d.power(m).unwrap() {
                    assert_eq!(d.rank(&d.unrank(r, m).unwrap()).unwrap(), r);
                }
            }
        }
    }

    #[test]
    fn projection_examples() {
        assert_eq!(Operation::projection(b(), 1, 1).unwrap().table_string(), "01");
        assert_eq!(Operation::projection(b(), 2, 1).unwrap().table_string(), "0011");
        assert_eq!(Operation::projection(b(), 2, 2).unwrap().table_string(), "0101");
        assert!(Operation::projection(b(), 2, 3).is_err());
        assert!(Operation::projection(b(), 2, 0).is_err());
    }

    #[test]
    fn table_validation() {
        assert!(Operation::new(b(), 2, vec![0, 1, 1]).is_err());
        assert!(Operation::new(b(), 1, vec![0, 2]).is_err());
        assert!(Operation::new(b(), 0, vec![0]).is_err());
    }

    #[test]
    fn zeta_examples() {
        let id = Operation::projection(b(), 1, 1).unwrap();
        assert_eq!(id.zeta(), id);
        let e1 = Operation::projection(b(), 2, 1).unwrap();
        assert_eq!(e1.zeta().table_string(), "0101");
        let mu = mu3();
        assert_eq!(mu.zeta(), mu);
        assert_eq!(mu.tau(), mu);
    }

    #[test]
    fn tau_examples() {
        let id = Operation::projection(b(), 1, 1).unwrap();
        assert_eq!(id.tau(), id);
        let e1 = Operation::projection(b(), 2, 1).unwrap();
        assert_eq!(e1.tau(), Operation::projection(b(), 2, 2).unwrap());
        let maj = op(2, 3, "00010111");
        assert_eq!(maj.tau(), tau_oracle(&maj));
        let skew = op(2, 3, "00000111");
        assert_eq!(skew.tau(), tau_oracle(&skew));
    }

    #[test]
    fn delta_examples() {
        let id = Operation::projection(b(), 1, 1).unwrap();
        assert_eq!(id.delta(), id);
        let e1 = Operation::projection(b(), 2, 1).unwrap();
        assert_eq!(e1.delta(), id);
        assert_eq!(mu3().delta().table_string(), "0110");
    }

    #[test]
    fn nabla_examples() {
        let id = Operation::projection(b(), 1, 1).unwrap();
        assert_eq!(id.nabla().table_string(), "0101");
        let e1 = Operation::projection(b(), 2, 1).unwrap();
        assert_eq!(e1.nabla(), Operation::projection(b(), 3, 2).unwrap());
        let mu = mu3();
        let lifted = mu.nabla();
        let oracle = Operation::from_fn(b(), 4, |x| mu.eval(&x[1..]).unwrap()).unwrap();
        assert_eq!(lifted, oracle);
        assert_eq!(lifted.table_string(), "0111111001111110");
    }

    #[test]
    fn star_examples() {
        let id = Operation::projection(b(), 1, 1).unwrap();
        let and = op(2, 2, "0001");
        assert_eq!(id.star(&and).unwrap(), and);
        let e1 = Operation::projection(b(), 2, 1).unwrap();
        assert_eq!(e1.star(&id).unwrap(), e1);
        let mu = mu3();
        let h = mu.star(&e1).unwrap();
        let oracle = Operation::from_fn(b(), 4, |x| mu.eval(&[x[0], x[2], x[3]]).unwrap()).unwrap();
        assert_eq!(h, oracle);
        let k3 = FiniteDomain::new(3).unwrap();
        assert!(id.star(&Operation::projection(k3, 1, 1).unwrap()).is_err());
    }

    #[test]
    fn apply_rows_examples() {
        let e1 = Operation::projection(b(), 2, 1).unwrap();
        let m = Matrix::new(b(), 2, vec![vec![0, 1], vec![1, 1]]).unwrap();
        assert_eq!(e1.apply_rows(&m).unwrap(), vec![0, 1]);
        let all = Matrix::all_rows(b(), 3).unwrap();
        assert_eq!(mu3().apply_rows(&all).unwrap(), vec![0, 1, 1, 1, 1, 1, 1, 0]);
        let id = Operation::projection(b(), 1, 1).unwrap();
        let c = Matrix::new(b(), 3, vec![vec![1, 0, 1]]).unwrap();
        assert_eq!(id.apply_rows(&c).unwrap(), vec![1, 0, 1]);
        assert!(e1.apply_rows(&c).is_err());
    }

    #[test]
    fn hconcat_examples() {
        let c1 = Matrix::new(b(), 2, vec![vec![0, 1]]).unwrap();
        let c2 = Matrix::new(b(), 2, vec![vec![1, 1]]).unwrap();
        let both = Matrix::hconcat(&[c1.clone(), c2.clone()]).unwrap();
        assert_eq!(both.columns(), &[vec![0, 1], vec![1, 1]]);
        let e = Matrix::empty(b(), 2).unwrap();
        assert_eq!(Matrix::hconcat(&[both.clone(), e.clone()]).unwrap(), both);
        assert!(Matrix::hconcat(&[e.clone(), e.clone()]).unwrap().is_empty());
        let tall = Matrix::new(b(), 3, vec![vec![0, 0, 0]]).unwrap();
        assert!(Matrix::hconcat(&[c1, tall]).is_err());
    }

    #[test]
    fn malcev_ops_match_pointwise_oracles() {
        for n in 1..=3 {
            for f in all_ops(b(), n) {
                assert_eq!(f.zeta(), zeta_oracle(&f));
                assert_eq!(f.tau(), tau_oracle(&f));
                if n > 1 {
                    let d = Operation::from_fn(b(), n - 1, |x| {
                        let mut y = vec![x[0]];
                        y.extend_from_slice(x);
                        f.eval(&y).unwrap()
                    })
                    .unwrap();
                    assert_eq!(f.delta(), d);
                }
            }
        }
        let k3 = FiniteDomain::new(3).unwrap();
        let f = Operation::from_fn(k3, 3, |x| (x[0] + 2 * x[1] + x[2] * x[0]) % 3).unwrap();
        assert_eq!(f.zeta(), zeta_oracle(&f));
        assert_eq!(f.tau(), tau_oracle(&f));
    }

    #[test]
    fn zeta_has_order_n_and_tau_is_involution() {
        for n in 1..=3 {
            for f in all_ops(b(), n) {
                let mut g = f.clone();
                for _ in 0..n {
                    g = g.zeta();
                }
                assert_eq!(g, f);
                assert_eq!(f.tau().tau(), f);
            }
        }
    }

    #[test]
    fn delta_undoes_nabla() {
        for n in 1..=3 {
            for f in all_ops(b(), n) {
                assert_eq!(f.nabla().delta(), f);
            }
        }
    }

    #[test]
    fn star_arity_and_row_application_agree() {
        let fs = all_ops(b(), 2);
        let gs = all_ops(b(), 2);
        let m1 = Matrix::new(b(), 3, vec![vec![0, 1, 1], vec![1, 0, 1]]).unwrap();
        let m2 = Matrix::new(b(), 3, vec![vec![0, 0, 1]]).unwrap();
        let both = Matrix::hconcat(&[m1.clone(), m2.clone()]).unwrap();
        for f in &fs {
            for g in &gs {
                let fg = f.star(g).unwrap();
                assert_eq!(fg.arity(), f.arity() + g.arity() - 1);
                let inner = Matrix::new(b(), 3, vec![g.apply_rows(&m1).unwrap()]).unwrap();
                let lhs = fg.apply_rows(&both).unwrap();
                let rhs = f.apply_rows(&Matrix::hconcat(&[inner, m2.clone()]).unwrap()).unwrap();
                assert_eq!(lhs, rhs);
            }
        }
    }
}
