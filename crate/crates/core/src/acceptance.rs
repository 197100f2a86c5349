//! The acceptance checks, shared by the test suite and the `selftest`
//! command. Each check is exact: it reports a pass only with zero mismatches.

use std::collections::{BTreeSet, HashMap};
use std::time::Instant;

use rand::Rng;

use crate::caps::Caps;
use crate::closure::{generate, separating_system};
use crate::domain::{FiniteDomain, Operation};
use crate::error::Result;
use crate::format;
use crate::linear::{linear_term_ops, mu, Signature};
use crate::minor::{identify_args, tight_minor, Image, Scheme};
use crate::multiset::Multiset;
use crate::preserve::{characterized_ops, preserves_relation, preserves_system, Relation};
use crate::random::{all_systems, random_system, rng};
use crate::system::{
    breadth_restrict, contains_trivial_breadth, empty_system, equality_system, from_relation, multisets_up_to,
    quotient, trivial, union, System,
};

pub const CORPUS_OPS: &str = include_str!("../corpus/ops.txt");
pub const CORPUS_EX1: &str = include_str!("../corpus/ex1.sys");
pub const CORPUS_RELATIONS: &str = include_str!("../corpus/relations.rel");
pub const CORPUS_SYSTEMS: &str = include_str!("../corpus/systems.sys");
pub const CORPUS_SCHEMES: &str = include_str!("../corpus/schemes.sch");

/// Seed for the randomized minor-preservation instances.
pub const MINOR_SEED: u64 = 0x5eed_0006;
pub const MINOR_INSTANCES: usize = 100;

#[derive(Debug, Clone)]
pub struct Report {
    pub id: u32,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

impl Report {
    pub fn line(&self) -> String {
        format!(
            "{} [{}] {}: {} ({:.2}s)",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.detail,
            self.seconds
        )
    }
}

fn timed(id: u32, name: &'static str, f: impl FnOnce() -> Result<(bool, String)>) -> Report {
    let start = Instant::now();
    let (passed, detail) = match f() {
        Ok(r) => r,
        Err(e) => (false, format!("error: {e}")),
    };
    Report {
        id,
        name,
        passed,
        detail,
        seconds: start.elapsed().as_secs_f64(),
    }
}

fn boolean() -> FiniteDomain {
    FiniteDomain::boolean()
}

fn all_ops(domain: FiniteDomain, max_arity: usize) -> Vec<Operation> {
    (1..=max_arity)
        .flat_map(|n| {
            let len = domain.power(n).unwrap() as u32;
            (0..(domain.size() as u64).pow(len)).map(move |i| Operation::from_table_index(domain, n, i))
        })
        .collect()
}

fn named(ops: Vec<Operation>) -> Vec<(String, Operation)> {
    ops.into_iter().enumerate().map(|(i, f)| (format!("g{i}"), f)).collect()
}

/// The unary system whose only member is a one-point multiset; exactly the
/// operations of arity at least 2 preserve it.
pub fn singleton_system() -> System {
    System::new(
        boolean(),
        1,
        1,
        [Multiset::singleton(1, 0)].into(),
        BTreeSet::new(),
    )
    .expect("valid system")
}

pub fn mu_separation(caps: &Caps) -> Report {
    timed(1, "mu separation", || {
        let d = boolean();
        let (m3, m4) = (mu(3, d)?, mu(4, d)?);
        let only3 = generate(d, &named(vec![m3.clone()]), 4, true, false, caps)?;
        let both = generate(d, &named(vec![m3.clone(), m4.clone()]), 4, true, false, caps)?;
        let a = !only3.contains(&m4)?;
        let b = both.contains(&m3)? && both.contains(&m4)?;
        Ok((
            a && b,
            format!(
                "<mu3> has {} members up to arity 4, mu4 excluded: {a}; <mu3,mu4> contains both: {b}",
                only3.len()
            ),
        ))
    })
}

pub fn arity_threshold(caps: &Caps) -> Report {
    timed(2, "arity threshold characterization", || {
        let d = boolean();
        let got = characterized_ops(d, &[singleton_system()], 3, caps)?;
        let want: Vec<Operation> = all_ops(d, 3).into_iter().filter(|f| f.arity() >= 2).collect();
        let counts: Vec<usize> = (1..=3).map(|n| got.iter().filter(|f| f.arity() == n).count()).collect();
        Ok((
            got == want,
            format!("unary/binary/ternary counts {counts:?}, expected [0, 16, 256]"),
        ))
    })
}

pub fn relation_systems(caps: &Caps) -> Report {
    timed(3, "relations as systems", || {
        let d = boolean();
        let mut mismatches = 0;
        let mut checked = 0;
        for tuples in [vec![0, 1, 3], vec![1, 2], vec![3]] {
            let r = Relation::new(d, 2, tuples)?;
            let sys = from_relation(&r, 3, caps)?;
            for f in all_ops(d, 2) {
                checked += 1;
                if preserves_relation(&f, &r, caps)? != preserves_system(&f, &sys)? {
                    mismatches += 1;
                }
            }
        }
        Ok((mismatches == 0, format!("{checked} comparisons, {mismatches} mismatches")))
    })
}

pub fn linear_terms_vs_closure(caps: &Caps) -> Report {
    timed(4, "linear term operations", || {
        let d = boolean();
        let m3 = mu(3, d)?;
        let sig = Signature::new(vec![("f".into(), 3)])?;
        let fragment = generate(d, &[("f".into(), m3.clone())], 3, true, false, caps)?;
        let mut ok = true;
        let mut sizes = Vec::new();
        for n in 1..=3 {
            let c4 = linear_term_ops(&sig, std::slice::from_ref(&m3), d, n, 4, caps)?;
            let c5 = linear_term_ops(&sig, std::slice::from_ref(&m3), d, n, 5, caps)?;
            let closed: BTreeSet<Operation> = fragment.members(n).cloned().collect();
            ok &= c4 == closed && c5 == c4;
            sizes.push(c4.len());
        }
        Ok((ok, format!("term operation counts for n=1..3: {sizes:?}, equal to the closure and saturated")))
    })
}

pub fn separating_systems(caps: &Caps) -> Report {
    timed(5, "separating systems", || {
        let d = boolean();
        let mut notes = Vec::new();
        let mut ok = true;

        let proj = generate(d, &[], 3, true, false, caps)?;
        let and = Operation::new(d, 2, vec![0, 0, 0, 1])?;
        let sys = separating_system(&proj, &and, caps)?;
        let members_ok = proj.all_members().all(|f| preserves_system(f, &sys).unwrap_or(false));
        let g_fails = !preserves_system(&and, &sys)?;
        ok &= sys.is_valid() && members_ok && g_fails;
        notes.push(format!(
            "projections vs and: m={}, {} ante, {} cons",
            sys.arity(),
            sys.ante().len(),
            sys.cons().len()
        ));

        let m3 = mu(3, d)?;
        let m4 = mu(4, d)?;
        let fragment = generate(d, &[("mu3".into(), m3)], 4, true, false, caps)?;
        let sys = separating_system(&fragment, &m4, caps)?;
        let members_ok = fragment.all_members().all(|f| preserves_system(f, &sys).unwrap_or(false));
        let g_fails = !preserves_system(&m4, &sys)?;
        ok &= sys.is_valid() && members_ok && g_fails;
        notes.push(format!(
            "<mu3> vs mu4: m={}, {} ante, {} cons",
            sys.arity(),
            sys.ante().len(),
            sys.cons().len()
        ));
        Ok((ok, notes.join("; ")))
    })
}

/// One random instance for the minor check: a family, a scheme and a bound.
fn random_minor_instance(r: &mut crate::random::TestRng) -> (Vec<System>, Scheme, usize) {
    let d = boolean();
    let m = r.gen_range(1..=2);
    let breadth = r.gen_range(0..=3);
    let vars = r.gen_range(0..=1);
    let arities: Vec<usize> = (0..r.gen_range(1..=2)).map(|_| r.gen_range(1..=2)).collect();
    let family = arities.iter().map(|&n| random_system(r, d, n, breadth)).collect();
    let maps = arities
        .iter()
        .map(|&n| {
            (0..n)
                .map(|_| {
                    if vars > 0 && r.gen_bool(0.3) {
                        Image::Var(0)
                    } else {
                        Image::Coord(r.gen_range(0..m))
                    }
                })
                .collect()
        })
        .collect();
    let names = (0..vars).map(|i| format!("v{i}")).collect();
    (family, Scheme::new(m, names, maps).expect("valid scheme"), breadth)
}

pub fn minor_preservation(caps: &Caps) -> Report {
    timed(6, "minors inherit preservation", || {
        let d = boolean();
        let ops = all_ops(d, 2);
        let mut r = rng(MINOR_SEED);
        let mut violations = 0;
        let mut premises = 0;
        for _ in 0..MINOR_INSTANCES {
            let (family, scheme, breadth) = random_minor_instance(&mut r);
            let minor = tight_minor(&family, &scheme, breadth, caps)?;
            for f in &ops {
                let mut all = true;
                for s in &family {
                    all &= preserves_system(f, s)?;
                }
                if all {
                    premises += 1;
                    if !preserves_system(f, &minor)? {
                        violations += 1;
                    }
                }
            }
        }
        Ok((
            violations == 0,
            format!(
                "{MINOR_INSTANCES} instances, {premises} operation/instance pairs with preserved families, {violations} violations"
            ),
        ))
    })
}

pub fn structural_properties(caps: &Caps) -> Report {
    timed(7, "union, quotient, dividend and breadth properties", || {
        let d = boolean();
        let ops = all_ops(d, 2);
        let mut systems = Vec::new();
        for b in 0..=2 {
            systems.extend(all_systems(d, 1, b, caps)?);
        }
        let index: HashMap<&System, usize> = systems.iter().enumerate().map(|(i, s)| (s, i)).collect();
        let masks: Vec<u32> = systems
            .iter()
            .map(|s| {
                ops.iter()
                    .enumerate()
                    .filter(|(_, f)| preserves_system(f, s).unwrap())
                    .fold(0u32, |m, (i, _)| m | 1 << i)
            })
            .collect();
        let divisors = multisets_up_to(1, &[0, 1], 3);
        let mut bad = [0usize; 5];
        let mut dividend_cases = 0usize;

        for (i, x) in systems.iter().enumerate() {
            for (j, y) in systems.iter().enumerate().skip(i) {
                let u = union(&[x.clone(), y.clone()])?;
                let ui = index[&u];
                if masks[i] & masks[j] & !masks[ui] != 0 {
                    bad[0] += 1;
                }
                for s in &divisors {
                    let lhs = quotient(&u, s)?;
                    let rhs = union(&[quotient(x, s)?, quotient(y, s)?])?;
                    if lhs.ante() != rhs.ante() || lhs.cons() != rhs.cons() {
                        bad[2] += 1;
                    }
                }
            }

            for s in &divisors {
                let q = quotient(x, s)?;
                let qi = index[&q];
                if masks[i] & !masks[qi] != 0 {
                    bad[1] += 1;
                }
            }

            for p in 0..=x.breadth() {
                if !contains_trivial_breadth(x, p)? {
                    continue;
                }
                let big: Vec<usize> = divisors
                    .iter()
                    .filter(|s| s.cardinality() >= p && s.cardinality() <= x.breadth())
                    .map(|s| index[&quotient(x, s).unwrap()])
                    .collect();
                let premise = big.iter().fold(u32::MAX, |m, &q| m & masks[q]) & ((1 << ops.len()) - 1);
                dividend_cases += premise.count_ones() as usize;
                if premise & !masks[i] != 0 {
                    bad[3] += 1;
                }
            }

            let parts = (0..=x.breadth()).fold(u32::MAX, |m, p| m & masks[index[&breadth_restrict(x, p)]]);
            if parts & ((1 << ops.len()) - 1) != masks[i] {
                bad[4] += 1;
            }
        }
        Ok((
            bad.iter().all(|&b| b == 0),
            format!(
                "{} systems x {} operations, {} dividend premises met; violations union={} quotient={} distributivity={} dividend={} breadth={}",
                systems.len(),
                ops.len(),
                dividend_cases,
                bad[0],
                bad[1],
                bad[2],
                bad[3],
                bad[4]
            ),
        ))
    })
}

pub fn equality_minors(caps: &Caps) -> Report {
    timed(8, "trivial, equality and empty systems as minors", || {
        let d = boolean();
        let mut ok = true;
        let mut checked = 0;
        for b in 0..=3 {
            let eq2 = equality_system(d, 2, b, caps)?;
            ok &= identify_args(&eq2, 0, 1, caps)? == trivial(d, 1, b, caps)?;
            checked += 1;
            for m in 2..=3 {
                let maps = (0..m - 1).map(|i| vec![Image::Coord(i), Image::Coord(i + 1)]).collect();
                let scheme = Scheme::new(m, Vec::new(), maps)?;
                let family = vec![eq2.clone(); m - 1];
                ok &= tight_minor(&family, &scheme, b, caps)? == equality_system(d, m, b, caps)?;
                checked += 1;
            }
            let e1 = empty_system(d, 1, b)?;
            for m in 1..=3 {
                let scheme = Scheme::single(m, vec![0])?;
                ok &= tight_minor(std::slice::from_ref(&e1), &scheme, b, caps)? == empty_system(d, m, b)?;
                checked += 1;
            }
        }
        Ok((ok, format!("{checked} constructions compared")))
    })
}

fn concat<T>(items: &[(String, T)], emit: impl Fn(&str, &T) -> String) -> String {
    items.iter().map(|(n, x)| emit(n, x)).collect()
}

pub fn round_trips(caps: &Caps) -> Report {
    timed(9, "format round trips", || {
        let d = boolean();
        let mut failures = Vec::new();

        let ops = format::parse_ops(CORPUS_OPS)?;
        if format::emit_ops(&ops) != CORPUS_OPS {
            failures.push("ops corpus");
        }
        for (text, label) in [(CORPUS_EX1, "ex1 corpus"), (CORPUS_SYSTEMS, "systems corpus")] {
            let systems = format::parse_systems(text, d)?;
            if concat(&systems, format::emit_system) != text {
                failures.push(label);
            }
        }
        let rels = format::parse_relations(CORPUS_RELATIONS, d)?;
        if concat(&rels, format::emit_relation) != CORPUS_RELATIONS {
            failures.push("relations corpus");
        }
        let schemes = format::parse_schemes(CORPUS_SCHEMES)?;
        if concat(&schemes, format::emit_scheme) != CORPUS_SCHEMES {
            failures.push("schemes corpus");
        }

        let mut objects: Vec<System> = vec![
            trivial(d, 2, 2, caps)?,
            equality_system(d, 3, 2, caps)?,
            empty_system(d, 2, 3)?,
            singleton_system(),
        ];
        let mut r = rng(9);
        for b in 0..=3 {
            objects.push(random_system(&mut r, d, 2, b));
        }
        for (i, s) in objects.iter().enumerate() {
            let back = format::parse_systems(&format::emit_system(&format!("s{i}"), s), d)?;
            if back.len() != 1 || &back[0].1 != s {
                failures.push("system object");
            }
        }
        let ops_file = format::OpsFile {
            domain: d,
            ops: named(vec![mu(3, d)?, mu(4, d)?, mu(5, d)?]),
        };
        if format::parse_ops(&format::emit_ops(&ops_file))? != ops_file {
            failures.push("ops object");
        }
        let t3 = FiniteDomain::new(3)?;
        let ternary = format::OpsFile {
            domain: t3,
            ops: named(vec![Operation::from_fn(t3, 2, |x| (x[0] + x[1]) % 3)?]),
        };
        if format::parse_ops(&format::emit_ops(&ternary))? != ternary {
            failures.push("ternary ops object");
        }
        Ok((
            failures.is_empty(),
            if failures.is_empty() {
                "corpus byte-identical, objects equal after emit and parse".to_string()
            } else {
                format!("failed: {}", failures.join(", "))
            },
        ))
    })
}

/// Runs every check in order.
pub fn run_all(caps: &Caps) -> Vec<Report> {
    vec![
        mu_separation(caps),
        arity_threshold(caps),
        relation_systems(caps),
        linear_terms_vs_closure(caps),
        separating_systems(caps),
        minor_preservation(caps),
        structural_properties(caps),
        equality_minors(caps),
        round_trips(caps),
    ]
}
