//! Minor formation schemes and conjunctive minors of families of systems.
//!
//! A scheme with target `m` carries maps `h_j: {0..n_j} -> {0..m} ∪ V`. For an
//! m-tuple `a` and a Skolem assignment `σ: V -> A`, `(a + σ)h_j` is the
//! `n_j`-tuple reading coordinates of `a` or values of `σ`. A matrix is in the
//! tight minor iff one `σ` per column makes every column image land in the
//! corresponding family member.

use std::collections::BTreeSet;

use crate::caps::Caps;
use crate::domain::{Elem, FiniteDomain};
use crate::error::{Error, Result};
use crate::multiset::{Multiset, PointedMultiset};
use crate::system::{multisets_up_to, System};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Image {
    Coord(usize),
    /// Index into [`Scheme::vars`].
    Var(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Scheme {
    target: usize,
    vars: Vec<String>,
    maps: Vec<Vec<Image>>,
}

impl Scheme {
    pub fn new(target: usize, vars: Vec<String>, maps: Vec<Vec<Image>>) -> Result<Self> {
        if target == 0 {
            return Err(Error::input("scheme target must be at least 1"));
        }
        if maps.is_empty() {
            return Err(Error::input("scheme needs at least one map"));
        }
        let distinct: BTreeSet<&String> = vars.iter().collect();
        if distinct.len() != vars.len() {
            return Err(Error::input("duplicate indeterminate name"));
        }
        for h in &maps {
            if h.is_empty() {
                return Err(Error::input("scheme maps need source arity at least 1"));
            }
            for img in h {
                match *img {
                    Image::Coord(c) if c >= target => {
                        return Err(Error::input(format!("coordinate {c} outside target {target}")))
                    }
                    Image::Var(v) if v >= vars.len() => {
                        return Err(Error::input(format!("undeclared indeterminate #{v}")))
                    }
                    _ => {}
                }
            }
        }
        Ok(Scheme { target, vars, maps })
    }

    /// A scheme with one map and no indeterminates.
    pub fn single(target: usize, map: Vec<usize>) -> Result<Self> {
        Scheme::new(target, Vec::new(), vec![map.into_iter().map(Image::Coord).collect()])
    }

    pub fn target(&self) -> usize {
        self.target
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    pub fn maps(&self) -> &[Vec<Image>] {
        &self.maps
    }
}

/// `(a + σ)h`.
pub fn scheme_apply(h: &[Image], a: &[Elem], sigma: &[Elem]) -> Vec<Elem> {
    h.iter()
        .map(|img| match *img {
            Image::Coord(c) => a[c],
            Image::Var(v) => sigma[v],
        })
        .collect()
}

/// Precomputed column images: `images[point][sigma][j]` is the rank of
/// `(a + σ)h_j` where `a` is the unranked point.
struct Search<'a> {
    family: &'a [System],
    images: Vec<Vec<Vec<u64>>>,
    sigmas: usize,
}

impl<'a> Search<'a> {
    fn new(family: &'a [System], scheme: &Scheme, caps: &Caps) -> Result<Self> {
        if family.len() != scheme.maps.len() {
            return Err(Error::input(format!(
                "scheme has {} maps but the family has {} systems",
                scheme.maps.len(),
                family.len()
            )));
        }
        let domain = family[0].domain();
        for (sys, h) in family.iter().zip(&scheme.maps) {
            if sys.arity() != h.len() {
                return Err(Error::input(format!(
                    "map of source arity {} paired with a system of arity {}",
                    h.len(),
                    sys.arity()
                )));
            }
            if sys.domain() != domain {
                return Err(Error::input("family members over different domains"));
            }
        }
        let k = domain.size() as u128;
        let sigmas = k.checked_pow(scheme.vars.len() as u32).unwrap_or(u128::MAX);
        Caps::check("skolem_budget", sigmas, caps.skolem_budget)?;
        let sigmas = sigmas as usize;
        let points = domain.power(scheme.target)?;
        Caps::check("system_members", points as u128, caps.system_members)?;
        let sigma_values: Vec<Vec<Elem>> = domain.tuples(scheme.vars.len()).collect();
        let images = (0..points)
            .map(|p| {
                let a = domain.unrank(p, scheme.target).unwrap();
                sigma_values
                    .iter()
                    .map(|sigma| {
                        scheme
                            .maps
                            .iter()
                            .map(|h| domain.rank(&scheme_apply(h, &a, sigma)).unwrap())
                            .collect()
                    })
                    .collect()
            })
            .collect();
        Ok(Search {
            family,
            images,
            sigmas,
        })
    }

    /// Tries every Skolem choice for `columns` (sorted; the first one is the
    /// distinguished point when `pointed`) and reports whether one works.
    fn holds(&self, columns: &[u64], pointed: bool) -> bool {
        let mut choice = vec![0usize; columns.len()];
        self.search(columns, pointed, 0, &mut choice)
    }

    fn search(&self, columns: &[u64], pointed: bool, i: usize, choice: &mut Vec<usize>) -> bool {
        if i == columns.len() {
            return self.check(columns, pointed, choice);
        }
        // equal columns are interchangeable, so their choices can be taken
        // nondecreasing; the distinguished column is never part of a run
        let same_as_prev = i > 0 && columns[i] == columns[i - 1] && !(pointed && i == 1);
        let lo = if same_as_prev { choice[i - 1] } else { 0 };
        for s in lo..self.sigmas {
            choice[i] = s;
            if self.search(columns, pointed, i + 1, choice) {
                return true;
            }
        }
        false
    }

    fn check(&self, columns: &[u64], pointed: bool, choice: &[usize]) -> bool {
        self.family.iter().enumerate().all(|(j, sys)| {
            let mut pts = columns
                .iter()
                .zip(choice)
                .map(|(&c, &s)| self.images[c as usize][s][j]);
            if pointed {
                let x = pts.next().expect("pointed candidates have a column");
                let rest = Multiset::from_points(sys.arity(), pts);
                sys.cons().contains(&PointedMultiset::new(x, rest))
            } else {
                sys.ante().contains(&Multiset::from_points(sys.arity(), pts))
            }
        })
    }

    fn ante_holds(&self, s: &Multiset) -> bool {
        let cols: Vec<u64> = s.points().collect();
        self.holds(&cols, false)
    }

    fn cons_holds(&self, pm: &PointedMultiset) -> bool {
        let cols: Vec<u64> = std::iter::once(pm.point).chain(pm.rest.points()).collect();
        self.holds(&cols, true)
    }
}

fn family_domain(family: &[System]) -> Result<FiniteDomain> {
    family
        .first()
        .map(System::domain)
        .ok_or_else(|| Error::input("minor of an empty family"))
}

/// The tight conjunctive minor of `family` under `scheme`, at breadth
/// `breadth`. Membership of multisets of size up to `breadth` is only
/// faithful when every family member is stored at least at that breadth.
pub fn tight_minor(family: &[System], scheme: &Scheme, breadth: usize, caps: &Caps) -> Result<System> {
    let domain = family_domain(family)?;
    let search = Search::new(family, scheme, caps)?;
    let m = scheme.target;
    let points: Vec<u64> = (0..domain.power(m)?).collect();
    let n = points.len() as u128;
    let candidates = crate::system::binomial(n + breadth as u128, breadth as u128);
    Caps::check("system_members", candidates.saturating_mul(n + 1), caps.system_members)?;
    let universe = multisets_up_to(m, &points, breadth);
    let ante: BTreeSet<Multiset> = universe.iter().filter(|s| search.ante_holds(s)).cloned().collect();
    let cons: BTreeSet<PointedMultiset> = universe
        .iter()
        .filter(|s| s.cardinality() < breadth)
        .flat_map(|s| points.iter().map(move |&x| PointedMultiset::new(x, s.clone())))
        .filter(|pm| search.cons_holds(pm))
        .collect();
    Ok(System::from_parts_unchecked(domain, m, breadth, ante, cons))
}

fn check_target(sys: &System, scheme: &Scheme) -> Result<()> {
    if sys.arity() != scheme.target {
        return Err(Error::input(format!(
            "system of arity {} against a scheme with target {}",
            sys.arity(),
            scheme.target
        )));
    }
    Ok(())
}

/// Every antecedent member of `sys` satisfies the minor condition.
pub fn is_restrictive_minor(sys: &System, family: &[System], scheme: &Scheme, caps: &Caps) -> Result<bool> {
    check_target(sys, scheme)?;
    let search = Search::new(family, scheme, caps)?;
    Ok(sys.ante().iter().all(|s| search.ante_holds(s)))
}

/// Every pointed multiset within `sys`'s bound that satisfies the minor
/// condition is in `sys`'s consequent.
pub fn is_extensive_minor(sys: &System, family: &[System], scheme: &Scheme, caps: &Caps) -> Result<bool> {
    check_target(sys, scheme)?;
    let tight = tight_minor(family, scheme, sys.breadth(), caps)?;
    Ok(tight.cons().is_subset(sys.cons()))
}

pub fn is_conjunctive_minor(sys: &System, family: &[System], scheme: &Scheme, caps: &Caps) -> Result<bool> {
    Ok(is_restrictive_minor(sys, family, scheme, caps)? && is_extensive_minor(sys, family, scheme, caps)?)
}

/// Minor under `h = perm`; the identity permutation returns `sys`.
pub fn permute_args(sys: &System, perm: &[usize], caps: &Caps) -> Result<System> {
    let m = sys.arity();
    let mut seen = perm.to_vec();
    seen.sort_unstable();
    if seen != (0..m).collect::<Vec<_>>() {
        return Err(Error::input(format!("{perm:?} is not a permutation of 0..{m}")));
    }
    let scheme = Scheme::single(m, perm.to_vec())?;
    tight_minor(std::slice::from_ref(sys), &scheme, sys.breadth(), caps)
}

/// Identifies coordinate `j` with coordinate `i`, giving arity `m - 1`.
pub fn identify_args(sys: &System, i: usize, j: usize, caps: &Caps) -> Result<System> {
    let m = sys.arity();
    if i >= m || j >= m || i == j || m < 2 {
        return Err(Error::input(format!("cannot identify coordinates {i} and {j} of arity {m}")));
    }
    let reduced = |l: usize| if l > j { l - 1 } else { l };
    let map = (0..m).map(|l| reduced(if l == j { i } else { l })).collect();
    let scheme = Scheme::single(m - 1, map)?;
    tight_minor(std::slice::from_ref(sys), &scheme, sys.breadth(), caps)
}

/// Appends a coordinate the result does not depend on.
pub fn add_dummy_arg(sys: &System, caps: &Caps) -> Result<System> {
    let m = sys.arity();
    let scheme = Scheme::single(m + 1, (0..m).collect())?;
    tight_minor(std::slice::from_ref(sys), &scheme, sys.breadth(), caps)
}

/// Keeps the listed coordinates, in the given order; dropped coordinates
/// become indeterminates.
pub fn project_args(sys: &System, kept: &[usize], caps: &Caps) -> Result<System> {
    let m = sys.arity();
    if kept.is_empty() || kept.iter().any(|&c| c >= m) || kept.iter().collect::<BTreeSet<_>>().len() != kept.len() {
        return Err(Error::input(format!("bad coordinate list {kept:?} for arity {m}")));
    }
    let mut vars = Vec::new();
    let map = (0..m)
        .map(|l| match kept.iter().position(|&c| c == l) {
            Some(p) => Image::Coord(p),
            None => {
                vars.push(format!("v{l}"));
                Image::Var(vars.len() - 1)
            }
        })
        .collect();
    let scheme = Scheme::new(kept.len(), vars, vec![map])?;
    tight_minor(std::slice::from_ref(sys), &scheme, sys.breadth(), caps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::preserve::Relation;
    use crate::random::{random_system, rng};
    use crate::system::{
        empty_system, equality_system, extend_consequent, from_relation, restrict_antecedent, trivial,
    };
    use proptest::prelude::*;
    use rand::Rng;

    fn d() -> FiniteDomain {
        FiniteDomain::boolean()
    }

    fn caps() -> Caps {
        Caps::default()
    }

    #[test]
    fn scheme_apply_examples() {
        let id = [Image::Coord(0), Image::Coord(1)];
        assert_eq!(scheme_apply(&id, &[1, 0], &[]), vec![1, 0]);
        assert_eq!(scheme_apply(&[Image::Coord(0), Image::Coord(0)], &[1, 0], &[]), vec![1, 1]);
        assert_eq!(scheme_apply(&[Image::Var(0)], &[0], &[1]), vec![1]);
    }

    #[test]
    fn scheme_validation() {
        assert!(Scheme::new(1, vec![], vec![]).is_err());
        assert!(Scheme::new(1, vec![], vec![vec![]]).is_err());
        assert!(Scheme::new(1, vec![], vec![vec![Image::Coord(1)]]).is_err());
        assert!(Scheme::new(1, vec![], vec![vec![Image::Var(0)]]).is_err());
        assert!(Scheme::new(1, vec!["v".into(), "v".into()], vec![vec![Image::Coord(0)]]).is_err());
    }

    #[test]
    fn identity_minor_is_the_system() {
        let mut r = rng(11);
        for _ in 0..20 {
            let sys = random_system(&mut r, d(), 2, 3);
            let s = Scheme::single(2, vec![0, 1]).unwrap();
            assert_eq!(tight_minor(std::slice::from_ref(&sys), &s, 3, &caps()).unwrap(), sys);
            assert_eq!(permute_args(&sys, &[0, 1], &caps()).unwrap(), sys);
        }
    }

    #[test]
    fn simple_minor_examples() {
        for b in 0..=3 {
            let eq2 = equality_system(d(), 2, b, &caps()).unwrap();
            assert_eq!(identify_args(&eq2, 0, 1, &caps()).unwrap(), trivial(d(), 1, b, &caps()).unwrap());
        }
        let e1 = empty_system(d(), 1, 2).unwrap();
        for m in 1..=3 {
            let s = Scheme::single(m, vec![0]).unwrap();
            let got = tight_minor(std::slice::from_ref(&e1), &s, 2, &caps()).unwrap();
            assert_eq!(got, empty_system(d(), m, 2).unwrap());
        }
        assert_eq!(add_dummy_arg(&e1, &caps()).unwrap(), empty_system(d(), 2, 2).unwrap());
    }

    #[test]
    fn chained_equality_minor() {
        for m in 2..=3 {
            for b in 0..=3 {
                let eq2 = equality_system(d(), 2, b, &caps()).unwrap();
                let maps = (0..m - 1).map(|i| vec![Image::Coord(i), Image::Coord(i + 1)]).collect();
                let s = Scheme::new(m, vec![], maps).unwrap();
                let family = vec![eq2; m - 1];
                assert_eq!(tight_minor(&family, &s, b, &caps()).unwrap(), equality_system(d(), m, b, &caps()).unwrap());
            }
        }
    }

    #[test]
    fn projection_of_relation_system() {
        // projecting {00, 01, 11} onto either coordinate gives the full unary relation
        let le = Relation::new(d(), 2, [0, 1, 3]).unwrap();
        let sys = from_relation(&le, 3, &caps()).unwrap();
        for c in 0..2 {
            assert_eq!(project_args(&sys, &[c], &caps()).unwrap(), trivial(d(), 1, 3, &caps()).unwrap());
        }
        // {01} projects to {0} and {1}
        let one = Relation::new(d(), 2, [1]).unwrap();
        let sys = from_relation(&one, 2, &caps()).unwrap();
        let first = Relation::new(d(), 1, [0]).unwrap();
        assert_eq!(project_args(&sys, &[0], &caps()).unwrap(), from_relation(&first, 2, &caps()).unwrap());
    }

    #[test]
    fn minor_predicates() {
        let mut r = rng(5);
        for _ in 0..20 {
            let fam = vec![random_system(&mut r, d(), 2, 3)];
            let s = Scheme::new(1, vec!["v".into()], vec![vec![Image::Coord(0), Image::Var(0)]]).unwrap();
            let tight = tight_minor(&fam, &s, 3, &caps()).unwrap();
            assert!(tight.is_valid());
            assert!(is_conjunctive_minor(&tight, &fam, &s, &caps()).unwrap());
            let ante: BTreeSet<Multiset> = tight.cons().iter().map(PointedMultiset::underlying).collect();
            let smaller = restrict_antecedent(&tight, ante).unwrap();
            assert!(is_conjunctive_minor(&smaller, &fam, &s, &caps()).unwrap());
            let mut cons = tight.cons().clone();
            // add every pointed multiset grounded in the antecedent and closed downward
            for s_ in tight.ante() {
                for x in s_.support() {
                    let pm = PointedMultiset::new(x, s_.without_point(x).unwrap());
                    cons.insert(pm);
                }
            }
            if let Ok(bigger) = extend_consequent(&tight, cons) {
                assert!(is_conjunctive_minor(&bigger, &fam, &s, &caps()).unwrap());
            }
        }
    }

    #[test]
    fn minor_predicate_counterexamples() {
        let s = Scheme::single(1, vec![0]).unwrap();
        let empty = vec![empty_system(d(), 1, 2).unwrap()];
        let t = trivial(d(), 1, 2, &caps()).unwrap();
        assert!(!is_restrictive_minor(&t, &empty, &s, &caps()).unwrap());
        let full = vec![trivial(d(), 1, 2, &caps()).unwrap()];
        let no_cons = System::new(d(), 1, 2, t.ante().clone(), BTreeSet::new()).unwrap();
        assert!(!is_extensive_minor(&no_cons, &full, &s, &caps()).unwrap());
    }

    #[test]
    fn skolem_budget_is_enforced() {
        let mut c = caps();
        c.skolem_budget = 2;
        let fam = vec![trivial(d(), 2, 1, &caps()).unwrap()];
        let s = Scheme::new(1, vec!["a".into(), "b".into()], vec![vec![Image::Var(0), Image::Var(1)]]).unwrap();
        assert!(tight_minor(&fam, &s, 1, &c).unwrap_err().is_resource());
    }

    /// The minor condition with every Skolem combination tried, on columns in
    /// the given order.
    fn condition_oracle(family: &[System], scheme: &Scheme, columns: &[u64], pointed: bool) -> bool {
        let dom = family[0].domain();
        let v = scheme.vars().len();
        let sigmas: Vec<Vec<u8>> = dom.tuples(v).collect();
        let total = sigmas.len().pow(columns.len() as u32);
        (0..total).any(|mut code| {
            let choice: Vec<&Vec<u8>> = columns
                .iter()
                .map(|_| {
                    let s = &sigmas[code % sigmas.len()];
                    code /= sigmas.len();
                    s
                })
                .collect();
            family.iter().zip(scheme.maps()).all(|(sys, h)| {
                let pts: Vec<u64> = columns
                    .iter()
                    .zip(&choice)
                    .map(|(&c, sigma)| dom.rank(&scheme_apply(h, &dom.unrank(c, scheme.target()).unwrap(), sigma)).unwrap())
                    .collect();
                if pointed {
                    let rest = Multiset::from_points(sys.arity(), pts[1..].iter().copied());
                    sys.cons().contains(&PointedMultiset::new(pts[0], rest))
                } else {
                    sys.ante().contains(&Multiset::from_points(sys.arity(), pts))
                }
            })
        })
    }

    fn random_scheme(r: &mut crate::random::TestRng, m: usize, arities: &[usize], vars: usize) -> Scheme {
        let maps = arities
            .iter()
            .map(|&n| {
                (0..n)
                    .map(|_| {
                        if vars > 0 && r.gen_bool(0.3) {
                            Image::Var(r.gen_range(0..vars))
                        } else {
                            Image::Coord(r.gen_range(0..m))
                        }
                    })
                    .collect()
            })
            .collect();
        Scheme::new(m, (0..vars).map(|i| format!("v{i}")).collect(), maps).unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn tight_minor_matches_unpruned_search(seed in any::<u64>()) {
            let mut r = rng(seed);
            let m = r.gen_range(1..=2);
            let arities: Vec<usize> = (0..r.gen_range(1..=2)).map(|_| r.gen_range(1..=2)).collect();
            let vars = r.gen_range(0..=1);
            let family: Vec<System> = arities.iter().map(|&n| random_system(&mut r, d(), n, 3)).collect();
            let scheme = random_scheme(&mut r, m, &arities, vars);
            let tight = tight_minor(&family, &scheme, 3, &caps()).unwrap();
            prop_assert!(tight.is_valid());
            let points: Vec<u64> = (0..1u64 << m).collect();
            for s in multisets_up_to(m, &points, 3) {
                // reversed order exercises a different arrangement of the same columns
                let mut cols: Vec<u64> = s.points().collect();
                cols.reverse();
                prop_assert_eq!(tight.ante().contains(&s), condition_oracle(&family, &scheme, &cols, false));
                if s.cardinality() >= 1 {
                    for x in s.support() {
                        let rest = s.without_point(x).unwrap();
                        let mut cols: Vec<u64> = rest.points().collect();
                        cols.reverse();
                        cols.insert(0, x);
                        let pm = PointedMultiset::new(x, rest);
                        prop_assert_eq!(tight.cons().contains(&pm), condition_oracle(&family, &scheme, &cols, true));
                    }
                }
            }
        }

        #[test]
        fn composed_simple_minors_agree(seed in any::<u64>()) {
            let mut r = rng(seed);
            let sys = random_system(&mut r, d(), 3, 2);
            let perm = [[0, 1, 2], [1, 2, 0], [2, 0, 1], [1, 0, 2], [0, 2, 1], [2, 1, 0]][r.gen_range(0..6)];
            let two_step = identify_args(&permute_args(&sys, &perm, &caps()).unwrap(), 0, 1, &caps()).unwrap();
            // identify maps 0,1 -> 0 and 2 -> 1; composing with the permutation
            let ident = [0usize, 0, 1];
            let composed: Vec<usize> = (0..3).map(|i| ident[perm[i]]).collect();
            let direct = tight_minor(std::slice::from_ref(&sys), &Scheme::single(2, composed).unwrap(), 2, &caps()).unwrap();
            prop_assert_eq!(two_step, direct);
        }
    }
}
