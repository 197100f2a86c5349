//! Terms over a finite signature, linear terms and the operations they induce,
//! and the μ_n family.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use crate::caps::Caps;
use crate::domain::{Elem, FiniteDomain, Operation};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Signature {
    symbols: Vec<(String, usize)>,
}

impl Signature {
    pub fn new(symbols: Vec<(String, usize)>) -> Result<Self> {
        if let Some((name, _)) = symbols.iter().find(|(_, a)| *a == 0) {
            return Err(Error::input(format!("symbol {name} has arity 0")));
        }
        Ok(Signature { symbols })
    }

    /// The signature of a list of named operations.
    pub fn of(ops: &[(String, Operation)]) -> Self {
        Signature {
            symbols: ops.iter().map(|(n, f)| (n.clone(), f.arity())).collect(),
        }
    }

    pub fn symbols(&self) -> &[(String, usize)] {
        &self.symbols
    }
}

/// A term: a variable `x_i` (`i ≥ 1`) or a symbol applied to subterms.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Var(usize),
    App(usize, Vec<Term>),
}

impl Term {
    pub fn complexity(&self) -> usize {
        match self {
            Term::Var(_) => 0,
            Term::App(_, args) => 1 + args.iter().map(Term::complexity).sum::<usize>(),
        }
    }

    fn collect_vars(&self, out: &mut Vec<usize>) {
        match self {
            Term::Var(i) => out.push(*i),
            Term::App(_, args) => args.iter().for_each(|a| a.collect_vars(out)),
        }
    }

    /// Variable occurrences, left to right.
    pub fn variables(&self) -> Vec<usize> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out
    }

    pub fn is_linear(&self) -> bool {
        let vars = self.variables();
        vars.iter().collect::<BTreeSet<_>>().len() == vars.len()
    }

    pub fn render(&self, sig: &Signature) -> String {
        let mut s = String::new();
        self.render_into(sig, &mut s);
        s
    }

    fn render_into(&self, sig: &Signature, out: &mut String) {
        match self {
            Term::Var(i) => {
                let _ = write!(out, "x{i}");
            }
            Term::App(f, args) => {
                out.push_str(&sig.symbols[*f].0);
                out.push('(');
                for (j, a) in args.iter().enumerate() {
                    if j > 0 {
                        out.push(',');
                    }
                    a.render_into(sig, out);
                }
                out.push(')');
            }
        }
    }

    fn check(&self, sig: &Signature, assignment: &[Operation], n: usize) -> Result<()> {
        match self {
            Term::Var(i) if *i == 0 || *i > n => {
                Err(Error::input(format!("variable x{i} in a term of arity {n}")))
            }
            Term::Var(_) => Ok(()),
            Term::App(f, args) => {
                let (name, arity) = sig
                    .symbols
                    .get(*f)
                    .ok_or_else(|| Error::input(format!("unknown symbol #{f}")))?;
                if args.len() != *arity || assignment[*f].arity() != *arity {
                    return Err(Error::input(format!("symbol {name} used with the wrong arity")));
                }
                args.iter().try_for_each(|a| a.check(sig, assignment, n))
            }
        }
    }
}

/// The n-ary operation induced by `t` when symbol `i` is read as
/// `assignment[i]`.
pub fn eval(
    t: &Term,
    sig: &Signature,
    assignment: &[Operation],
    n: usize,
    domain: FiniteDomain,
) -> Result<Operation> {
    if assignment.len() != sig.symbols.len() {
        return Err(Error::input("assignment does not cover the signature"));
    }
    if assignment.iter().any(|f| f.domain() != domain) {
        return Err(Error::input("assigned operation over a different domain"));
    }
    if n == 0 {
        return Err(Error::input("terms need arity at least 1"));
    }
    t.check(sig, assignment, n)?;
    let table = eval_table(t, assignment, n, domain)?;
    Operation::new(domain, n, table)
}

fn eval_table(t: &Term, assignment: &[Operation], n: usize, domain: FiniteDomain) -> Result<Vec<Elem>> {
    match t {
        Term::Var(i) => Ok(Operation::projection(domain, n, *i)?.table().to_vec()),
        Term::App(f, args) => {
            let cols = args
                .iter()
                .map(|a| eval_table(a, assignment, n, domain))
                .collect::<Result<Vec<_>>>()?;
            let len = domain.power(n)? as usize;
            Ok(assignment[*f].apply_columns(&cols, len))
        }
    }
}

/// A term with unlabelled leaves.
#[derive(Debug, Clone)]
enum Shape {
    Hole,
    Node(usize, Vec<Shape>),
}

impl Shape {
    fn leaves(&self) -> usize {
        match self {
            Shape::Hole => 1,
            Shape::Node(_, c) => c.iter().map(Shape::leaves).sum(),
        }
    }

    fn label(&self, labels: &mut impl Iterator<Item = usize>) -> Term {
        match self {
            Shape::Hole => Term::Var(labels.next().expect("one label per leaf")),
            Shape::Node(f, c) => Term::App(*f, c.iter().map(|s| s.label(labels)).collect()),
        }
    }
}

/// `by_complexity[c]` holds every shape with exactly `c` symbols and at most
/// `max_leaves` leaves.
fn shapes(sig: &Signature, max_complexity: usize, max_leaves: usize, caps: &Caps) -> Result<Vec<Vec<Shape>>> {
    let mut by_complexity: Vec<Vec<Shape>> = vec![vec![Shape::Hole]];
    let mut total = 1u128;
    for c in 1..=max_complexity {
        let mut level = Vec::new();
        for (f, (_, arity)) in sig.symbols.iter().enumerate() {
            let mut children = Vec::with_capacity(*arity);
            fill_children(&by_complexity, *arity, c - 1, max_leaves, &mut children, &mut |kids| {
                level.push(Shape::Node(f, kids.to_vec()));
            });
        }
        total += level.len() as u128;
        Caps::check("term_count", total, caps.term_count)?;
        by_complexity.push(level);
    }
    Ok(by_complexity)
}

fn fill_children(
    table: &[Vec<Shape>],
    arity: usize,
    complexity_left: usize,
    leaves_left: usize,
    chosen: &mut Vec<Shape>,
    emit: &mut dyn FnMut(&[Shape]),
) {
    let slots_left = arity - chosen.len();
    if slots_left == 0 {
        if complexity_left == 0 {
            emit(chosen);
        }
        return;
    }
    // every remaining slot needs at least one leaf
    if leaves_left < slots_left {
        return;
    }
    let min_c = if slots_left == 1 { complexity_left } else { 0 };
    for c in min_c..=complexity_left {
        let Some(options) = table.get(c) else { continue };
        for s in options {
            let l = s.leaves();
            if l + (slots_left - 1) > leaves_left {
                continue;
            }
            chosen.push(s.clone());
            fill_children(table, arity, complexity_left - c, leaves_left - l, chosen, emit);
            chosen.pop();
        }
    }
}

/// Every linear n-ary term of complexity at most `max_complexity`, ordered by
/// complexity, then shape, then variable labelling.
pub fn linear_terms(sig: &Signature, n: usize, max_complexity: usize, caps: &Caps) -> Result<Vec<Term>> {
    let mut out = Vec::new();
    for level in shapes(sig, max_complexity, n, caps)? {
        for shape in level {
            let leaves = shape.leaves();
            // injective labellings of the leaves by 1..=n
            let mut labels = Vec::with_capacity(leaves);
            let mut used = vec![false; n + 1];
            injections(leaves, n, &mut labels, &mut used, &mut |l| {
                out.push(shape.label(&mut l.iter().copied()));
            });
            Caps::check("term_count", out.len() as u128, caps.term_count)?;
        }
    }
    Ok(out)
}

fn injections(len: usize, n: usize, labels: &mut Vec<usize>, used: &mut [bool], emit: &mut dyn FnMut(&[usize])) {
    if labels.len() == len {
        emit(labels);
        return;
    }
    for v in 1..=n {
        if !used[v] {
            used[v] = true;
            labels.push(v);
            injections(len, n, labels, used, emit);
            labels.pop();
            used[v] = false;
        }
    }
}

/// The operations induced by linear n-ary terms of complexity at most
/// `max_complexity`.
pub fn linear_term_ops(
    sig: &Signature,
    assignment: &[Operation],
    domain: FiniteDomain,
    n: usize,
    max_complexity: usize,
    caps: &Caps,
) -> Result<BTreeSet<Operation>> {
    linear_terms(sig, n, max_complexity, caps)?
        .iter()
        .map(|t| eval(t, sig, assignment, n, domain))
        .collect()
}

/// `μ_n`: 1 exactly on 0/1-tuples with one 1 or with one 0, otherwise 0.
pub fn mu(n: usize, domain: FiniteDomain) -> Result<Operation> {
    if n < 3 {
        return Err(Error::input(format!("μ_n needs n ≥ 3, got {n}")));
    }
    if domain.size() < 2 {
        return Err(Error::input("μ_n needs a domain with at least two elements"));
    }
    Operation::from_fn(domain, n, |x| {
        if x.iter().any(|&v| v > 1) {
            return 0;
        }
        let ones = x.iter().filter(|&&v| v == 1).count();
        (ones == 1 || ones == n - 1) as Elem
    })
}
