//! Line-oriented text formats for operations, relations, systems and schemes.
//!
//! ```text
//! domain 2
//! op and 2 0001
//! rel le 2 00 01 11
//! system ex m=1 breadth=2
//! ante {0}
//! cons 0 {}
//! scheme dup target=1 vars=v
//! map 2 0 v
//! ```
//!
//! Tuples are written as digit strings, first coordinate first. Blank lines
//! and lines starting with `#` are ignored. Only ops files require a `domain`
//! line; the others take the domain from context and accept a matching
//! `domain` line.

use std::collections::{BTreeSet, HashSet};
use std::fmt::Write as _;

use crate::domain::{Elem, FiniteDomain, Operation};
use crate::error::{Error, Result};
use crate::minor::{Image, Scheme};
use crate::multiset::{Multiset, PointedMultiset};
use crate::preserve::Relation;
use crate::system::System;

fn perr(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}

/// Relabels any error as a parse error at `line`.
fn at<T>(line: usize, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        Error::Parse { .. } | Error::Resource { .. } => e,
        other => perr(line, other.to_string()),
    })
}

/// Non-blank, non-comment lines with 1-based line numbers.
fn lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn parse_domain_line(line: usize, rest: &[&str]) -> Result<FiniteDomain> {
    let [k] = rest else {
        return Err(perr(line, "expected `domain <k>`"));
    };
    let k: usize = k.parse().map_err(|_| perr(line, format!("bad domain size `{k}`")))?;
    at(line, FiniteDomain::new(k))
}

fn check_domain(line: usize, rest: &[&str], domain: FiniteDomain) -> Result<()> {
    let found = parse_domain_line(line, rest)?;
    if found != domain {
        return Err(perr(
            line,
            format!("file is over k={} but the context is k={}", found.size(), domain.size()),
        ));
    }
    Ok(())
}

fn digit(c: char, domain: FiniteDomain) -> Option<Elem> {
    c.to_digit(36)
        .filter(|&v| (v as usize) < domain.size())
        .map(|v| v as Elem)
}

pub fn parse_tuple(s: &str, arity: usize, domain: FiniteDomain) -> Result<u64> {
    if s.chars().count() != arity {
        return Err(Error::input(format!("tuple `{s}` should have {arity} entries")));
    }
    let t: Vec<Elem> = s
        .chars()
        .map(|c| digit(c, domain).ok_or_else(|| Error::input(format!("bad entry `{c}` in tuple `{s}`"))))
        .collect::<Result<_>>()?;
    domain.rank(&t)
}

pub fn format_tuple(point: u64, arity: usize, domain: FiniteDomain) -> String {
    domain
        .unrank(point, arity)
        .expect("points are in range")
        .into_iter()
        .map(|v| char::from_digit(v as u32, 36).unwrap())
        .collect()
}

/// `{t1,t2,...}`, with `{}` for the empty multiset.
pub fn parse_multiset(s: &str, arity: usize, domain: FiniteDomain) -> Result<Multiset> {
    let inner = s
        .strip_prefix('{')
        .and_then(|s| s.strip_suffix('}'))
        .ok_or_else(|| Error::input(format!("expected a `{{...}}` multiset, got `{s}`")))?;
    let inner = inner.trim();
    if inner.is_empty() {
        return Ok(Multiset::empty(arity));
    }
    let points = inner
        .split(',')
        .map(|t| parse_tuple(t.trim(), arity, domain))
        .collect::<Result<Vec<_>>>()?;
    Ok(Multiset::from_points(arity, points))
}

pub fn format_multiset(s: &Multiset, domain: FiniteDomain) -> String {
    let parts: Vec<String> = s.points().map(|p| format_tuple(p, s.arity(), domain)).collect();
    format!("{{{}}}", parts.join(","))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OpsFile {
    pub domain: FiniteDomain,
    pub ops: Vec<(String, Operation)>,
}

impl OpsFile {
    pub fn get(&self, name: &str) -> Option<&Operation> {
        self.ops.iter().find(|(n, _)| n == name).map(|(_, f)| f)
    }
}

pub fn parse_ops(text: &str) -> Result<OpsFile> {
    let mut domain = None;
    let mut ops = Vec::new();
    let mut names = HashSet::new();
    for (line, l) in lines(text) {
        let words: Vec<&str> = l.split_whitespace().collect();
        match words[0] {
            "domain" => {
                if domain.is_some() {
                    return Err(perr(line, "duplicate `domain` line"));
                }
                domain = Some(parse_domain_line(line, &words[1..])?);
            }
            "op" => {
                let d = domain.ok_or_else(|| perr(line, "`op` before the `domain` line"))?;
                let [name, arity, table] = words[1..] else {
                    return Err(perr(line, "expected `op <name> <arity> <table>`"));
                };
                let arity: usize = arity.parse().map_err(|_| perr(line, format!("bad arity `{arity}`")))?;
                let values = table
                    .chars()
                    .map(|c| digit(c, d).ok_or_else(|| perr(line, format!("bad table entry `{c}`"))))
                    .collect::<Result<Vec<_>>>()?;
                let f = at(line, Operation::new(d, arity, values))?;
                if !names.insert(name.to_string()) {
                    return Err(perr(line, format!("duplicate operation name `{name}`")));
                }
                ops.push((name.to_string(), f));
            }
            other => return Err(perr(line, format!("unexpected `{other}` in an ops file"))),
        }
    }
    let domain = domain.ok_or_else(|| perr(0, "missing `domain` line"))?;
    Ok(OpsFile { domain, ops })
}

pub fn emit_op(name: &str, f: &Operation) -> String {
    format!("op {name} {} {}\n", f.arity(), f.table_string())
}

pub fn emit_ops(file: &OpsFile) -> String {
    let mut out = format!("domain {}\n", file.domain.size());
    for (name, f) in &file.ops {
        out.push_str(&emit_op(name, f));
    }
    out
}

pub fn parse_relations(text: &str, domain: FiniteDomain) -> Result<Vec<(String, Relation)>> {
    let mut out: Vec<(String, Relation)> = Vec::new();
    for (line, l) in lines(text) {
        let words: Vec<&str> = l.split_whitespace().collect();
        match words[0] {
            "domain" => check_domain(line, &words[1..], domain)?,
            "rel" => {
                let [_, name, arity, tuples @ ..] = &words[..] else {
                    return Err(perr(line, "expected `rel <name> <m> t1 t2 ...`"));
                };
                let arity: usize = arity.parse().map_err(|_| perr(line, format!("bad arity `{arity}`")))?;
                let points = tuples
                    .iter()
                    .map(|t| at(line, parse_tuple(t, arity, domain)))
                    .collect::<Result<Vec<_>>>()?;
                if out.iter().any(|(n, _)| n == name) {
                    return Err(perr(line, format!("duplicate relation name `{name}`")));
                }
                out.push((name.to_string(), at(line, Relation::new(domain, arity, points))?));
            }
            other => return Err(perr(line, format!("unexpected `{other}` in a relation file"))),
        }
    }
    Ok(out)
}

pub fn emit_relation(name: &str, r: &Relation) -> String {
    let mut out = format!("rel {name} {}", r.arity());
    for &t in r.tuples() {
        let _ = write!(out, " {}", format_tuple(t, r.arity(), r.domain()));
    }
    out.push('\n');
    out
}

struct SystemDraft {
    line: usize,
    name: String,
    arity: usize,
    breadth: usize,
    ante: BTreeSet<Multiset>,
    cons: BTreeSet<PointedMultiset>,
}

impl SystemDraft {
    fn finish(self, domain: FiniteDomain) -> Result<(String, System)> {
        let sys = at(self.line, System::new(domain, self.arity, self.breadth, self.ante, self.cons))?;
        Ok((self.name, sys))
    }
}

fn key_value<'a>(line: usize, word: &'a str, key: &str) -> Result<&'a str> {
    word.strip_prefix(key)
        .and_then(|w| w.strip_prefix('='))
        .ok_or_else(|| perr(line, format!("expected `{key}=...`, got `{word}`")))
}

fn key_number(line: usize, word: &str, key: &str) -> Result<usize> {
    let v = key_value(line, word, key)?;
    v.parse().map_err(|_| perr(line, format!("bad number `{v}` for `{key}`")))
}

/// Rejoins the words after the keyword so literals like `{00, 01}` survive
/// whitespace splitting.
fn tail<'a>(l: &'a str, keyword: &str) -> &'a str {
    l[keyword.len()..].trim()
}

pub fn parse_systems(text: &str, domain: FiniteDomain) -> Result<Vec<(String, System)>> {
    let mut out: Vec<(String, System)> = Vec::new();
    let mut draft: Option<SystemDraft> = None;
    for (line, l) in lines(text) {
        let keyword = l.split_whitespace().next().unwrap();
        match keyword {
            "domain" => {
                let words: Vec<&str> = l.split_whitespace().collect();
                check_domain(line, &words[1..], domain)?;
            }
            "system" => {
                if let Some(d) = draft.take() {
                    out.push(d.finish(domain)?);
                }
                let words: Vec<&str> = l.split_whitespace().collect();
                let [_, name, m, b] = words[..] else {
                    return Err(perr(line, "expected `system <name> m=<m> breadth=<B>`"));
                };
                if out.iter().any(|(n, _)| n == name) {
                    return Err(perr(line, format!("duplicate system name `{name}`")));
                }
                draft = Some(SystemDraft {
                    line,
                    name: name.to_string(),
                    arity: key_number(line, m, "m")?,
                    breadth: key_number(line, b, "breadth")?,
                    ante: BTreeSet::new(),
                    cons: BTreeSet::new(),
                });
            }
            "ante" => {
                let d = draft.as_mut().ok_or_else(|| perr(line, "`ante` before any `system` line"))?;
                let s = at(line, parse_multiset(tail(l, "ante"), d.arity, domain))?;
                if s.cardinality() > d.breadth {
                    return Err(perr(line, format!("member of cardinality {} exceeds breadth {}", s.cardinality(), d.breadth)));
                }
                d.ante.insert(s);
            }
            "cons" => {
                let d = draft.as_mut().ok_or_else(|| perr(line, "`cons` before any `system` line"))?;
                let rest = tail(l, "cons");
                let (point, set) = rest
                    .split_once(char::is_whitespace)
                    .ok_or_else(|| perr(line, "expected `cons <t0> {t1,...}`"))?;
                let point = at(line, parse_tuple(point, d.arity, domain))?;
                let set = at(line, parse_multiset(set.trim(), d.arity, domain))?;
                let pm = PointedMultiset::new(point, set);
                if pm.cardinality() > d.breadth {
                    return Err(perr(line, format!("member of cardinality {} exceeds breadth {}", pm.cardinality(), d.breadth)));
                }
                d.cons.insert(pm);
            }
            other => return Err(perr(line, format!("unexpected `{other}` in a system file"))),
        }
    }
    if let Some(d) = draft {
        out.push(d.finish(domain)?);
    }
    Ok(out)
}

pub fn emit_system(name: &str, sys: &System) -> String {
    let d = sys.domain();
    let mut out = format!("system {name} m={} breadth={}\n", sys.arity(), sys.breadth());
    for s in sys.ante() {
        let _ = writeln!(out, "ante {}", format_multiset(s, d));
    }
    for pm in sys.cons() {
        let _ = writeln!(
            out,
            "cons {} {}",
            format_tuple(pm.point, sys.arity(), d),
            format_multiset(&pm.rest, d)
        );
    }
    out
}

pub fn parse_schemes(text: &str) -> Result<Vec<(String, Scheme)>> {
    struct Draft {
        line: usize,
        name: String,
        target: usize,
        vars: Vec<String>,
        maps: Vec<Vec<Image>>,
    }
    let finish = |d: Draft| -> Result<(String, Scheme)> { Ok((d.name, at(d.line, Scheme::new(d.target, d.vars, d.maps))?)) };
    let mut out: Vec<(String, Scheme)> = Vec::new();
    let mut draft: Option<Draft> = None;
    for (line, l) in lines(text) {
        let words: Vec<&str> = l.split_whitespace().collect();
        match words[0] {
            "domain" => {
                parse_domain_line(line, &words[1..])?;
            }
            "scheme" => {
                if let Some(d) = draft.take() {
                    out.push(finish(d)?);
                }
                let [_, name, target, vars] = words[..] else {
                    return Err(perr(line, "expected `scheme <name> target=<m> vars=<v1,...>`"));
                };
                if out.iter().any(|(n, _)| n == name) {
                    return Err(perr(line, format!("duplicate scheme name `{name}`")));
                }
                let vars = key_value(line, vars, "vars")?;
                let vars: Vec<String> = if vars.is_empty() {
                    Vec::new()
                } else {
                    vars.split(',').map(str::to_string).collect()
                };
                if let Some(v) = vars.iter().find(|v| v.is_empty() || v.parse::<usize>().is_ok()) {
                    return Err(perr(line, format!("indeterminate name `{v}` must be a non-numeric word")));
                }
                draft = Some(Draft {
                    line,
                    name: name.to_string(),
                    target: key_number(line, target, "target")?,
                    vars,
                    maps: Vec::new(),
                });
            }
            "map" => {
                let d = draft.as_mut().ok_or_else(|| perr(line, "`map` before any `scheme` line"))?;
                let [_, n, imgs @ ..] = &words[..] else {
                    return Err(perr(line, "expected `map <n> <img...>`"));
                };
                let n: usize = n.parse().map_err(|_| perr(line, format!("bad source arity `{n}`")))?;
                if imgs.len() != n {
                    return Err(perr(line, format!("map declares {n} images but lists {}", imgs.len())));
                }
                let map = imgs
                    .iter()
                    .map(|w| match w.parse::<usize>() {
                        Ok(c) => Ok(Image::Coord(c)),
                        Err(_) => d
                            .vars
                            .iter()
                            .position(|v| v == w)
                            .map(Image::Var)
                            .ok_or_else(|| perr(line, format!("undeclared indeterminate `{w}`"))),
                    })
                    .collect::<Result<Vec<_>>>()?;
                d.maps.push(map);
            }
            other => return Err(perr(line, format!("unexpected `{other}` in a scheme file"))),
        }
    }
    if let Some(d) = draft {
        out.push(finish(d)?);
    }
    Ok(out)
}

pub fn emit_scheme(name: &str, s: &Scheme) -> String {
    let mut out = format!("scheme {name} target={} vars={}\n", s.target(), s.vars().join(","));
    for h in s.maps() {
        let _ = write!(out, "map {}", h.len());
        for img in h {
            match *img {
                Image::Coord(c) => {
                    let _ = write!(out, " {c}");
                }
                Image::Var(v) => {
                    let _ = write!(out, " {}", s.vars()[v]);
                }
            }
        }
        out.push('\n');
    }
    out
}
