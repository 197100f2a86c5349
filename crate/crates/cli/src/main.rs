use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{ArgGroup, Args, Parser, Subcommand};

use malcev::acceptance::run_all;
use malcev::format::{self, OpsFile};
use malcev::minor::{is_extensive_minor, is_restrictive_minor, tight_minor};
use malcev::preserve::preservation_witness;
use malcev::system::{
    breadth_restrict, contains_trivial_breadth, empty_system, equality_system, from_relation, quotient, trivial,
    union,
};
use malcev::{
    characterized_ops, generate, mu, preserves_relation, separating_system, Caps, Error, FiniteDomain, Operation,
    Relation, Result, Scheme, Signature, System,
};

#[derive(Parser)]
#[command(name = "malcev", version, about = "Closed sets of operations and systems of pointed multisets")]
struct Cli {
    /// Override a resource cap, e.g. `--caps skolem_budget=1024`. Repeatable.
    #[arg(long, global = true, value_name = "KEY=VALUE")]
    caps: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the closure of a set of operations up to an arity bound.
    Closure(ClosureArgs),
    /// Build a system preserved by a closure fragment but not by a target.
    Separate(SeparateArgs),
    /// Check whether an operation preserves a system or relation.
    Preserve(PreserveArgs),
    /// List all operations up to an arity that preserve the given systems.
    Characterize(CharacterizeArgs),
    /// Build or check a tight conjunctive minor.
    Minor(MinorArgs),
    /// Construct and transform systems.
    #[command(subcommand)]
    Sys(SysCommand),
    /// Relation utilities.
    #[command(subcommand)]
    Rel(RelCommand),
    /// Emit the operation μ_n.
    Mu(MuArgs),
    /// Enumerate linear terms over named operations.
    LinearTerms(LinearArgs),
    /// Run the acceptance checks.
    Selftest,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    ops: PathBuf,
    /// Comma-separated generator names from the ops file.
    #[arg(long, value_delimiter = ',')]
    gens: Vec<String>,
    #[arg(long)]
    max_arity: usize,
    #[arg(long)]
    with_delta: bool,
    #[arg(long)]
    no_projections: bool,
}

#[derive(Args)]
#[command(group(ArgGroup::new("mode").required(true).args(["list", "contains"])))]
struct ClosureArgs {
    #[command(flatten)]
    gen: GenArgs,
    #[arg(long)]
    list: bool,
    /// Name of an operation in the ops file; exits 0 if it is a member.
    #[arg(long)]
    contains: Option<String>,
}

#[derive(Args)]
struct SeparateArgs {
    #[command(flatten)]
    gen: GenArgs,
    #[arg(long)]
    target: String,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Name written on the `system` line.
    #[arg(long, default_value = "separating")]
    name: String,
}

#[derive(Args)]
#[command(group(ArgGroup::new("against").required(true).args(["system", "rel"])))]
struct PreserveArgs {
    #[arg(long)]
    ops: PathBuf,
    #[arg(long)]
    op: String,
    #[arg(long)]
    system: Option<PathBuf>,
    #[arg(long)]
    rel: Option<PathBuf>,
    /// Object name in the system or relation file; optional when it holds one object.
    #[arg(long)]
    name: Option<String>,
}

#[derive(Args)]
struct CharacterizeArgs {
    #[arg(long)]
    systems: PathBuf,
    /// Comma-separated system names; all systems in the file by default.
    #[arg(long, value_delimiter = ',')]
    names: Vec<String>,
    #[arg(long)]
    max_arity: usize,
    #[arg(long)]
    domain: Option<usize>,
}

#[derive(Args)]
struct MinorArgs {
    #[arg(long)]
    schemes: PathBuf,
    #[arg(long)]
    scheme: String,
    #[arg(long)]
    systems: PathBuf,
    /// Comma-separated system names, one per scheme map.
    #[arg(long, value_delimiter = ',')]
    family: Vec<String>,
    #[arg(long)]
    breadth: Option<usize>,
    #[arg(long)]
    domain: Option<usize>,
    /// Check that this system in the systems file is a minor instead of building one.
    #[arg(long)]
    check: Option<String>,
    /// Which relationship `--check` tests.
    #[arg(long, default_value = "tight", value_parser = ["tight", "restrictive", "extensive"])]
    kind: String,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "minor")]
    name: String,
}

#[derive(Args)]
struct ShapeArgs {
    #[arg(long, default_value_t = 2)]
    domain: usize,
    #[arg(long)]
    arity: usize,
    #[arg(long)]
    breadth: usize,
    #[arg(long)]
    name: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SysInput {
    #[arg(long)]
    systems: PathBuf,
    #[arg(long)]
    domain: Option<usize>,
}

#[derive(Subcommand)]
enum SysCommand {
    /// The trivial system: every multiset and pointed multiset.
    Trivial(ShapeArgs),
    /// The equality system.
    Equality(ShapeArgs),
    /// The empty system.
    Empty(ShapeArgs),
    /// Quotient of a system by a multiset such as `{01,11}`.
    Quotient {
        #[command(flatten)]
        input: SysInput,
        #[arg(long)]
        name: String,
        #[arg(long)]
        by: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Restrict a system to a smaller breadth.
    Restrict {
        #[command(flatten)]
        input: SysInput,
        #[arg(long)]
        name: String,
        #[arg(long)]
        breadth: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Union of several systems of equal arity.
    Union {
        #[command(flatten)]
        input: SysInput,
        #[arg(long, value_delimiter = ',')]
        names: Vec<String>,
        #[arg(long)]
        name: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Parse and validate a systems file, then print it canonically.
    Validate {
        #[command(flatten)]
        input: SysInput,
    },
    /// Exit 0 if the system contains the trivial system of the given breadth.
    ContainsTrivial {
        #[command(flatten)]
        input: SysInput,
        #[arg(long)]
        name: String,
        #[arg(long)]
        breadth: usize,
    },
}

#[derive(Subcommand)]
enum RelCommand {
    /// The system whose preservers are the polymorphisms of a relation.
    ToSystem {
        #[arg(long)]
        rels: PathBuf,
        #[arg(long)]
        name: String,
        #[arg(long)]
        breadth: usize,
        #[arg(long)]
        domain: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// All operations up to an arity that preserve a relation.
    Polymorphisms {
        #[arg(long)]
        rels: PathBuf,
        #[arg(long)]
        name: String,
        #[arg(long)]
        max_arity: usize,
        #[arg(long)]
        domain: Option<usize>,
    },
}

#[derive(Args)]
struct MuArgs {
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 2)]
    domain: usize,
    #[arg(long, default_value = "mu")]
    name: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct LinearArgs {
    #[arg(long)]
    ops: PathBuf,
    /// Comma-separated operation names forming the signature.
    #[arg(long, value_delimiter = ',')]
    sig: Vec<String>,
    #[arg(long)]
    arity: usize,
    #[arg(long)]
    max_complexity: usize,
    /// Print every term with its table instead of the distinct operations.
    #[arg(long)]
    list: bool,
}

/// Result of a command: a verdict for predicates, or plain success.
enum Outcome {
    Done,
    Verdict(bool),
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Input(format!("{}: {e}", path.display())))
}

fn write_out(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| Error::Input(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// The flag wins; otherwise the file's own `domain` line; otherwise Boolean.
fn domain_for(text: &str, flag: Option<usize>) -> Result<FiniteDomain> {
    if let Some(k) = flag {
        return FiniteDomain::new(k);
    }
    let declared = text
        .lines()
        .map(str::trim)
        .find_map(|l| l.strip_prefix("domain "))
        .and_then(|k| k.trim().parse().ok());
    FiniteDomain::new(declared.unwrap_or(2))
}

fn load_ops(path: &Path) -> Result<OpsFile> {
    format::parse_ops(&read(path)?)
}

fn op<'a>(file: &'a OpsFile, name: &str) -> Result<&'a Operation> {
    file.get(name)
        .ok_or_else(|| Error::Input(format!("no operation named `{name}`")))
}

fn pick<'a, T>(items: &'a [(String, T)], name: Option<&str>, kind: &str) -> Result<&'a T> {
    match name {
        Some(n) => items
            .iter()
            .find(|(m, _)| m == n)
            .map(|(_, x)| x)
            .ok_or_else(|| Error::Input(format!("no {kind} named `{n}`"))),
        None => match items {
            [(_, x)] => Ok(x),
            _ => Err(Error::Input(format!(
                "the file holds {} objects; pass --name to choose a {kind}",
                items.len()
            ))),
        },
    }
}

fn load_systems(path: &Path, domain: Option<usize>) -> Result<Vec<(String, System)>> {
    let text = read(path)?;
    format::parse_systems(&text, domain_for(&text, domain)?)
}

fn listing(domain: FiniteDomain, prefix: &str, ops: impl IntoIterator<Item = Operation>) -> String {
    let mut per_arity = std::collections::BTreeMap::<usize, usize>::new();
    let named = ops
        .into_iter()
        .map(|f| {
            let idx = per_arity.entry(f.arity()).or_default();
            let name = format!("{prefix}{}_{idx}", f.arity());
            *idx += 1;
            (name, f)
        })
        .collect();
    format::emit_ops(&OpsFile { domain, ops: named })
}

fn fragment(args: &GenArgs, caps: &Caps) -> Result<(OpsFile, malcev::ClosedSetFragment)> {
    let file = load_ops(&args.ops)?;
    let gens = args
        .gens
        .iter()
        .map(|n| Ok((n.clone(), op(&file, n)?.clone())))
        .collect::<Result<Vec<_>>>()?;
    let frag = generate(
        file.domain,
        &gens,
        args.max_arity,
        !args.no_projections,
        args.with_delta,
        caps,
    )?;
    Ok((file, frag))
}

fn run(cli: Cli) -> Result<Outcome> {
    let mut caps = Caps::default();
    for c in &cli.caps {
        caps.set(c)?;
    }
    match cli.command {
        Command::Closure(a) => {
            let (file, frag) = fragment(&a.gen, &caps)?;
            if let Some(name) = &a.contains {
                let verdict = frag.contains(op(&file, name)?)?;
                println!("{verdict}");
                return Ok(Outcome::Verdict(verdict));
            }
            print!("{}", listing(file.domain, "m", frag.all_members().cloned()));
            Ok(Outcome::Done)
        }
        Command::Separate(a) => {
            let (file, frag) = fragment(&a.gen, &caps)?;
            let sys = separating_system(&frag, op(&file, &a.target)?, &caps)?;
            write_out(a.out.as_deref(), &format::emit_system(&a.name, &sys))?;
            Ok(Outcome::Done)
        }
        Command::Preserve(a) => {
            let file = load_ops(&a.ops)?;
            let f = op(&file, &a.op)?;
            let verdict = if let Some(path) = &a.system {
                let systems = format::parse_systems(&read(path)?, file.domain)?;
                let sys = pick(&systems, a.name.as_deref(), "system")?;
                match preservation_witness(f, sys)? {
                    None => true,
                    Some(w) => {
                        let d = sys.domain();
                        let m = sys.arity();
                        let cols: Vec<String> = w.chosen.iter().map(|&p| format::format_tuple(p, m, d)).collect();
                        println!(
                            "witness member {} columns {} rest {} image {}",
                            format::format_multiset(&w.member, d),
                            cols.join(","),
                            format::format_multiset(&w.rest, d),
                            format::format_tuple(w.image, m, d)
                        );
                        false
                    }
                }
            } else {
                let path = a.rel.as_ref().expect("clap requires --system or --rel");
                let rels = format::parse_relations(&read(path)?, file.domain)?;
                preserves_relation(f, pick(&rels, a.name.as_deref(), "relation")?, &caps)?
            };
            println!("{verdict}");
            Ok(Outcome::Verdict(verdict))
        }
        Command::Characterize(a) => {
            let all = load_systems(&a.systems, a.domain)?;
            let chosen: Vec<System> = if a.names.is_empty() {
                all.iter().map(|(_, s)| s.clone()).collect()
            } else {
                a.names
                    .iter()
                    .map(|n| pick(&all, Some(n), "system").cloned())
                    .collect::<Result<_>>()?
            };
            let domain = match chosen.first() {
                Some(s) => s.domain(),
                None => FiniteDomain::new(a.domain.unwrap_or(2))?,
            };
            let ops = characterized_ops(domain, &chosen, a.max_arity, &caps)?;
            print!("{}", listing(domain, "c", ops));
            Ok(Outcome::Done)
        }
        Command::Minor(a) => {
            let schemes = format::parse_schemes(&read(&a.schemes)?)?;
            let scheme: &Scheme = pick(&schemes, Some(&a.scheme), "scheme")?;
            let systems = load_systems(&a.systems, a.domain)?;
            let family = a
                .family
                .iter()
                .map(|n| pick(&systems, Some(n), "system").cloned())
                .collect::<Result<Vec<_>>>()?;
            if let Some(target) = &a.check {
                let sys = pick(&systems, Some(target), "system")?;
                let verdict = match a.kind.as_str() {
                    "restrictive" => is_restrictive_minor(sys, &family, scheme, &caps)?,
                    "extensive" => is_extensive_minor(sys, &family, scheme, &caps)?,
                    _ => malcev::minor::is_conjunctive_minor(sys, &family, scheme, &caps)?,
                };
                println!("{verdict}");
                return Ok(Outcome::Verdict(verdict));
            }
            let breadth = match a.breadth {
                Some(b) => b,
                None => family.iter().map(System::breadth).min().unwrap_or(0),
            };
            let sys = tight_minor(&family, scheme, breadth, &caps)?;
            write_out(a.out.as_deref(), &format::emit_system(&a.name, &sys))?;
            Ok(Outcome::Done)
        }
        Command::Sys(cmd) => run_sys(cmd, &caps),
        Command::Rel(cmd) => run_rel(cmd, &caps),
        Command::Mu(a) => {
            let domain = FiniteDomain::new(a.domain)?;
            let file = OpsFile {
                domain,
                ops: vec![(a.name, mu(a.n, domain)?)],
            };
            write_out(a.out.as_deref(), &format::emit_ops(&file))?;
            Ok(Outcome::Done)
        }
        Command::LinearTerms(a) => {
            let file = load_ops(&a.ops)?;
            let named = a
                .sig
                .iter()
                .map(|n| Ok((n.clone(), op(&file, n)?.clone())))
                .collect::<Result<Vec<_>>>()?;
            let sig = Signature::of(&named);
            let assignment: Vec<Operation> = named.into_iter().map(|(_, f)| f).collect();
            if a.list {
                let mut text = String::new();
                for t in malcev::linear::linear_terms(&sig, a.arity, a.max_complexity, &caps)? {
                    let f = malcev::linear::eval(&t, &sig, &assignment, a.arity, file.domain)?;
                    let _ = writeln!(text, "{} {}", t.render(&sig), f.table_string());
                }
                print!("{text}");
            } else {
                let ops: BTreeSet<Operation> = malcev::linear::linear_term_ops(
                    &sig,
                    &assignment,
                    file.domain,
                    a.arity,
                    a.max_complexity,
                    &caps,
                )?;
                print!("{}", listing(file.domain, "t", ops));
            }
            Ok(Outcome::Done)
        }
        Command::Selftest => {
            let reports = run_all(&caps);
            for r in &reports {
                println!("{}", r.line());
            }
            Ok(Outcome::Verdict(reports.iter().all(|r| r.passed)))
        }
    }
}

fn run_sys(cmd: SysCommand, caps: &Caps) -> Result<Outcome> {
    let shape = |a: &ShapeArgs, build: &dyn Fn(FiniteDomain) -> Result<System>| -> Result<Outcome> {
        let sys = build(FiniteDomain::new(a.domain)?)?;
        write_out(a.out.as_deref(), &format::emit_system(&a.name, &sys))?;
        Ok(Outcome::Done)
    };
    match cmd {
        SysCommand::Trivial(a) => shape(&a, &|d| trivial(d, a.arity, a.breadth, caps)),
        SysCommand::Equality(a) => shape(&a, &|d| equality_system(d, a.arity, a.breadth, caps)),
        SysCommand::Empty(a) => shape(&a, &|d| empty_system(d, a.arity, a.breadth)),
        SysCommand::Quotient { input, name, by, out } => {
            let systems = load_systems(&input.systems, input.domain)?;
            let sys = pick(&systems, Some(&name), "system")?;
            let s = format::parse_multiset(&by, sys.arity(), sys.domain())?;
            write_out(out.as_deref(), &format::emit_system(&name, &quotient(sys, &s)?))?;
            Ok(Outcome::Done)
        }
        SysCommand::Restrict {
            input,
            name,
            breadth,
            out,
        } => {
            let systems = load_systems(&input.systems, input.domain)?;
            let sys = pick(&systems, Some(&name), "system")?;
            write_out(out.as_deref(), &format::emit_system(&name, &breadth_restrict(sys, breadth)))?;
            Ok(Outcome::Done)
        }
        SysCommand::Union {
            input,
            names,
            name,
            out,
        } => {
            let systems = load_systems(&input.systems, input.domain)?;
            let parts = names
                .iter()
                .map(|n| pick(&systems, Some(n), "system").cloned())
                .collect::<Result<Vec<_>>>()?;
            write_out(out.as_deref(), &format::emit_system(&name, &union(&parts)?))?;
            Ok(Outcome::Done)
        }
        SysCommand::Validate { input } => {
            let systems = load_systems(&input.systems, input.domain)?;
            let text: String = systems.iter().map(|(n, s)| format::emit_system(n, s)).collect();
            print!("{text}");
            Ok(Outcome::Done)
        }
        SysCommand::ContainsTrivial { input, name, breadth } => {
            let systems = load_systems(&input.systems, input.domain)?;
            let verdict = contains_trivial_breadth(pick(&systems, Some(&name), "system")?, breadth)?;
            println!("{verdict}");
            Ok(Outcome::Verdict(verdict))
        }
    }
}

fn load_relation(path: &Path, name: &str, domain: Option<usize>) -> Result<Relation> {
    let text = read(path)?;
    let rels = format::parse_relations(&text, domain_for(&text, domain)?)?;
    pick(&rels, Some(name), "relation").cloned()
}

fn run_rel(cmd: RelCommand, caps: &Caps) -> Result<Outcome> {
    match cmd {
        RelCommand::ToSystem {
            rels,
            name,
            breadth,
            domain,
            out,
        } => {
            let r = load_relation(&rels, &name, domain)?;
            write_out(out.as_deref(), &format::emit_system(&name, &from_relation(&r, breadth, caps)?))?;
            Ok(Outcome::Done)
        }
        RelCommand::Polymorphisms {
            rels,
            name,
            max_arity,
            domain,
        } => {
            let r = load_relation(&rels, &name, domain)?;
            let d = r.domain();
            let mut found = Vec::new();
            for n in 1..=max_arity {
                let len = d.power(n)?;
                let space = (d.size() as u128).checked_pow(len as u32).unwrap_or(u128::MAX);
                if space > caps.max_table_space as u128 {
                    return Err(Error::Resource {
                        cap: "max_table_space",
                        needed: space,
                        limit: caps.max_table_space as u128,
                    });
                }
                for i in 0..space as u64 {
                    let f = Operation::from_table_index(d, n, i);
                    if preserves_relation(&f, &r, caps)? {
                        found.push(f);
                    }
                }
            }
            print!("{}", listing(d, "p", found));
            Ok(Outcome::Done)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(Outcome::Done) | Ok(Outcome::Verdict(true)) => ExitCode::SUCCESS,
        Ok(Outcome::Verdict(false)) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_resource() { 3 } else { 2 })
        }
    }
}
