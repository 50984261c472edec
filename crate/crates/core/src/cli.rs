//! The `omegacat` command line. Exit codes: 0 pass or true, 1 fail or
//! false, 2 inconclusive, 3 usage or input error.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::fraisse::{
    build_limit, check_ap, check_extension_property, check_hp, check_jep, check_star, check_ultrahomogeneous, replay,
    Budget, ClassDescriptor, KStarClass, Member, Replay, ToyClass, ToyRule,
};
use crate::interpret::{
    decode, encode, induced_structure, parse_te1s, print_te1s, sort_formula_pool, EncodeOptions, InducedBudget,
    InducedStatus,
};
use crate::logic::{decide_sentence, eliminate_quantifiers, parse_formula, parse_formula_sorted, print_formula, Dialect};
use crate::report::{CheckReport, Counterexample, Verdict};
use crate::structure::{parse_structure, print_structure};
use crate::te::{amalgamate_independence, free_amalgam, parse_te, print_te, IndependenceInput, KeClass};
use crate::trees::{
    build_tp2_witness, check_indiscernible_tree, check_sop2_witness, parse_family, print_family, random_sop2_config,
    refute_sop2_config, ParamFormula,
};

#[derive(Parser, Debug)]
#[command(name = "omegacat", version, about = "Finite-scale Fraisse classes, T_E and tree-property witnesses")]
struct Cli {
    /// Print the report as JSON.
    #[arg(long, global = true)]
    json: bool,
    /// Write the produced structure, or the counterexample on failure, here.
    #[arg(short = 'o', long = "output", global = true)]
    output: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Re-verify a counterexample file instead of reporting.
    #[arg(long, global = true)]
    replay: Option<PathBuf>,
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ClassName {
    #[value(name = "KE")]
    Ke,
    #[value(name = "KSTAR")]
    Kstar,
    #[value(name = "TOY-EVEN")]
    ToyEven,
    #[value(name = "TOY-SINGLETON")]
    ToySingleton,
}

#[derive(Args, Debug)]
struct ClassOpt {
    #[arg(long, value_enum, ignore_case = true)]
    class: ClassName,
    #[arg(long, default_value_t = 2)]
    maxarity: usize,
}

#[derive(Args, Debug)]
struct FormulaOpt {
    /// A quantifier-free LE formula φ(x; y).
    #[arg(long)]
    formula: String,
    /// Object variables, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "x")]
    object: Vec<String>,
    /// Parameter variables; the remaining free variables when absent.
    #[arg(long, value_delimiter = ',')]
    params: Option<Vec<String>>,
}

#[derive(Subcommand, Debug)]
enum Verb {
    /// Parse and validate a .te, .te1s, .tree, .fms or .cex file.
    Validate { file: PathBuf },
    /// HP, JEP, AP and type-count stability of a class.
    CheckClass {
        #[command(flatten)]
        class: ClassOpt,
        #[arg(long, default_value_t = 3)]
        size_bound: usize,
        #[arg(long)]
        budget: Option<u64>,
    },
    /// Grow a finite approximation of the limit of a class.
    Limit {
        #[command(flatten)]
        class: ClassOpt,
        #[arg(long, default_value_t = 200)]
        steps: usize,
        #[arg(long, default_value_t = 1)]
        level: usize,
    },
    /// Independence amalgam over a host, or a free amalgam of a span.
    Amalgamate(AmalgamateArgs),
    /// Quantifier elimination modulo T_E.
    Qe {
        formula: String,
        #[arg(long, default_value_t = 2)]
        maxarity: usize,
    },
    /// Decide a sentence modulo T_E.
    Decide {
        formula: String,
        #[arg(long, default_value_t = 2)]
        maxarity: usize,
    },
    /// Interpret a many-sorted structure in a T_E base.
    Encode {
        file: PathBuf,
        #[arg(long, value_delimiter = ',')]
        arities: Option<Vec<usize>>,
        #[arg(long, default_value_t = 8)]
        cap: usize,
    },
    /// Recover the many-sorted structure from a .te1s file.
    Decode { file: PathBuf },
    /// Look for equality-form equivalents of sort-language formulas.
    Induced {
        file: PathBuf,
        /// An LSTAR formula with sorted variables such as `a:S1`.
        #[arg(long = "formula")]
        formulas: Vec<String>,
        /// Add this many random formulas.
        #[arg(long)]
        random: Option<usize>,
        #[arg(long, default_value_t = 2)]
        max_quantifiers: usize,
        #[arg(long, default_value_t = 64)]
        max_patterns: usize,
    },
    /// Extension property and ultrahomogeneity of a structure or a built limit.
    Homog {
        file: Option<PathBuf>,
        #[arg(long, value_enum, ignore_case = true)]
        class: Option<ClassName>,
        #[arg(long, default_value_t = 2)]
        maxarity: usize,
        #[arg(long, default_value_t = 200)]
        steps: usize,
        #[arg(long, default_value_t = 1)]
        level: usize,
    },
    /// Build and check a TP2 array for E2(x,y;u,v).
    Tp2 {
        #[arg(long)]
        rows: usize,
        #[arg(long)]
        cols: usize,
    },
    /// Check a tree family as an SOP2 witness.
    Sop2Check {
        file: PathBuf,
        #[command(flatten)]
        phi: FormulaOpt,
        /// Defaults to the depth of the family.
        #[arg(long)]
        depth: Option<usize>,
        /// Also check indiscernibility for these formulas.
        #[arg(long = "indiscernible")]
        indiscernible: Vec<String>,
        #[arg(long, default_value_t = 3)]
        tuple_budget: usize,
    },
    /// Refute an SOP2 configuration by independence amalgamation.
    Sop2Refute {
        file: Option<PathBuf>,
        #[arg(long)]
        formula: Option<String>,
        #[arg(long, value_delimiter = ',', default_value = "x")]
        object: Vec<String>,
        #[arg(long, value_delimiter = ',')]
        params: Option<Vec<String>>,
        /// Generate a configuration from the seed instead of reading one.
        #[arg(long)]
        generate: bool,
        #[arg(long, default_value_t = 1)]
        tuple_length: usize,
        #[arg(long, default_value_t = 2)]
        maxarity: usize,
        #[arg(long, default_value_t = 3)]
        depth: usize,
    },
}

#[derive(Args, Debug)]
struct AmalgamateArgs {
    /// Host .te file for independence mode.
    host: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    f: Vec<usize>,
    #[arg(long, value_delimiter = ',')]
    a: Vec<usize>,
    #[arg(long, value_delimiter = ',')]
    b: Vec<usize>,
    #[arg(long, value_delimiter = ',')]
    c: Vec<usize>,
    #[arg(long, value_delimiter = ',')]
    d1: Vec<usize>,
    #[arg(long, value_delimiter = ',')]
    d2: Vec<usize>,
    /// Span mode: base, left and right .te files.
    #[arg(long)]
    base: Option<PathBuf>,
    #[arg(long)]
    left: Option<PathBuf>,
    #[arg(long)]
    right: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    to_left: Vec<usize>,
    #[arg(long, value_delimiter = ',')]
    to_right: Vec<usize>,
    /// Place cross tuples at random (seeded) instead of in fresh classes.
    #[arg(long)]
    random: bool,
}

#[derive(Debug)]
struct InputError(String);

impl From<crate::Error> for InputError {
    fn from(e: crate::Error) -> Self {
        InputError(e.to_string())
    }
}

type R<T> = std::result::Result<T, InputError>;

fn read(path: &Path) -> R<String> {
    std::fs::read_to_string(path).map_err(|e| InputError(format!("{}: {e}", path.display())))
}

struct Outcome {
    report: CheckReport,
    /// Printed before the report.
    lines: Vec<String>,
    artifact: Option<String>,
    /// Print only `lines`, no report block.
    plain: bool,
}

impl Outcome {
    fn new(report: CheckReport) -> Self {
        Outcome { report, lines: vec![], artifact: None, plain: false }
    }
}

macro_rules! with_class {
    ($name:expr, $k:expr, |$c:ident| $body:expr) => {
        match $name {
            ClassName::Ke => {
                let $c = KeClass::new($k);
                $body
            }
            ClassName::Kstar => {
                let $c = KStarClass::new($k);
                $body
            }
            ClassName::ToyEven => {
                let $c = ToyClass::new(ToyRule::EvenSize);
                $body
            }
            ClassName::ToySingleton => {
                let $c = ToyClass::new(ToyRule::Singleton);
                $body
            }
        }
    };
}

fn rank(v: Verdict) -> u8 {
    match v {
        Verdict::Pass => 0,
        Verdict::Inconclusive => 1,
        Verdict::Fail => 2,
    }
}

/// Worst verdict, summed budgets, the first counterexample.
fn combine(parts: Vec<(&str, CheckReport)>) -> (CheckReport, Vec<String>) {
    let mut out = CheckReport::pass(0);
    let mut lines = vec![];
    for (name, r) in parts {
        lines.push(format!("{name} {} (budget {})", r.verdict, r.budget_used));
        out.budget_used += r.budget_used;
        if rank(r.verdict) > rank(out.verdict) {
            out.verdict = r.verdict;
        }
        if out.counterexample.is_none() {
            out.counterexample = r.counterexample;
        }
        out.details.extend(r.details.into_iter().map(|d| format!("{name}: {d}")));
    }
    (out, lines)
}

fn exit_code(v: Verdict) -> i32 {
    match v {
        Verdict::Pass => 0,
        Verdict::Fail => 1,
        Verdict::Inconclusive => 2,
    }
}

fn validate_file(path: &Path) -> R<Outcome> {
    let text = read(path)?;
    let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("");
    let parsed: crate::Result<String> = match ext {
        "te" => {
            let l = crate::te::format::parse_te_listing(&text)?;
            let r = crate::te::validate(&l);
            let mut o = Outcome::new(r);
            o.lines.push("format te".into());
            return Ok(o);
        }
        "te1s" => parse_te1s(&text).map(|n| format!("{} sort(s) over a base of size {}", n.sort_arities.len(), n.base.size())),
        "tree" => parse_family(&text).map(|f| format!("depth {}, alphabet {}, tuple length {}", f.depth, f.alphabet, f.tuple_length)),
        "fms" => parse_structure(&text).map(|s| format!("{} sort(s)", s.carriers().len())),
        "cex" => Counterexample::parse(&text).map(|c| format!("counterexample {}", c.kind())),
        _ => return Err(InputError(format!("unknown file type `.{ext}`"))),
    };
    let mut o = Outcome::new(match parsed {
        Ok(d) => CheckReport::pass(1).with_detail(d),
        Err(e) => {
            let msg = e.to_string();
            CheckReport::fail(Counterexample::Witness(msg.clone()), 1).with_detail(msg)
        }
    });
    o.lines.push(format!("format {ext}"));
    Ok(o)
}

fn check_class<C: ClassDescriptor>(class: &C, size_bound: usize, budget: Budget) -> R<Outcome> {
    let parts = vec![
        ("HP", check_hp(class, size_bound, budget)?),
        ("JEP", check_jep(class, size_bound, budget)?),
        ("AP", check_ap(class, size_bound, budget)?),
        ("(*) 1 variable", check_star(class, &[0], size_bound, budget)?),
        ("(*) 2 variables", check_star(class, &[0, 0], size_bound, budget)?),
    ];
    let (report, mut lines) = combine(parts);
    lines.insert(0, format!("class {} size-bound {size_bound}", class.name()));
    Ok(Outcome { report, lines, artifact: None, plain: false })
}

fn limit<C: ClassDescriptor>(class: &C, steps: usize, seed: u64, level: usize) -> R<Outcome> {
    let run = build_limit(class, steps, seed, level)?;
    let report = if run.drained() {
        CheckReport::pass(run.steps as u64).with_detail("all extension tasks done")
    } else {
        CheckReport::inconclusive(run.steps as u64, format!("{} extension task(s) pending", run.pending))
    };
    let mut o = Outcome::new(report);
    o.lines.push(format!("limit of {} size {} after {} step(s)", class.name(), class.size_of(&run.structure), run.steps));
    o.artifact = Some(run.structure.to_text());
    Ok(o)
}

fn homog<C: ClassDescriptor>(class: &C, m: &C::Member, level: usize) -> R<Outcome> {
    let (report, lines) = combine(vec![
        ("extension", check_extension_property(m, class, level)?),
        ("ultrahomogeneity", check_ultrahomogeneous(m, level)?),
    ]);
    Ok(Outcome { report, lines, artifact: None, plain: false })
}

fn tuple_text(t: &[usize]) -> String {
    let parts: Vec<String> = t.iter().map(ToString::to_string).collect();
    format!("({})", parts.join(","))
}

fn amalgamate(a: &AmalgamateArgs, seed: u64) -> R<Outcome> {
    if let Some(host) = &a.host {
        let inp = IndependenceInput {
            host: parse_te(&read(host)?)?,
            f: a.f.clone(),
            a: a.a.clone(),
            b: a.b.clone(),
            c: a.c.clone(),
            d1: a.d1.clone(),
            d2: a.d2.clone(),
        };
        let out = amalgamate_independence(&inp)?;
        let mut o = Outcome::new(CheckReport::pass(1).with_detail("hypotheses hold; amalgam built"));
        o.lines = vec![
            format!("host elements {}", tuple_text(&out.from_host)),
            format!("F {} a {} c {}", tuple_text(&out.f), tuple_text(&out.a), tuple_text(&out.c)),
            format!("d {}", tuple_text(&out.d)),
        ];
        o.artifact = Some(print_te(&out.structure));
        return Ok(o);
    }
    let (Some(base), Some(left), Some(right)) = (&a.base, &a.left, &a.right) else {
        return Err(InputError("give a host file, or --base, --left and --right".into()));
    };
    let (sa, sb, sc) = (parse_te(&read(base)?)?, parse_te(&read(left)?)?, parse_te(&read(right)?)?);
    if !sa.is_embedding(&sb, &a.to_left) || !sa.is_embedding(&sc, &a.to_right) {
        return Err(InputError("the span maps are not embeddings".into()));
    }
    let mut rng = crate::rng(seed);
    match free_amalgam(&sa, &sb, &sc, &a.to_left, &a.to_right, a.random.then_some(&mut rng)) {
        Ok((d, bm, cm)) => {
            let mut o = Outcome::new(CheckReport::pass(1).with_detail(format!("amalgam of size {}", d.size())));
            o.lines = vec![format!("left -> {}", tuple_text(&bm)), format!("right -> {}", tuple_text(&cm))];
            o.artifact = Some(print_te(&d));
            Ok(o)
        }
        Err(crate::Error::Amalgamation(m)) => {
            Ok(Outcome::new(CheckReport::fail(Counterexample::Witness(m.clone()), 1).with_detail(m)))
        }
        Err(e) => Err(e.into()),
    }
}

fn plain(verdict: Verdict, line: String) -> Outcome {
    let report = CheckReport { verdict, counterexample: None, budget_used: 0, details: vec![] };
    Outcome { report, lines: vec![line], artifact: None, plain: true }
}

fn induced(file: &Path, formulas: &[String], random: Option<usize>, budget: InducedBudget, seed: u64) -> R<Outcome> {
    let n = parse_te1s(&read(file)?)?;
    let mut pool = formulas
        .iter()
        .map(|f| parse_formula_sorted(f, Dialect::LStar))
        .collect::<crate::Result<Vec<_>>>()?;
    if let Some(count) = random {
        pool.extend(sort_formula_pool(n.sort_arities.len(), budget.max_quantifiers, count, seed));
    }
    let rep = induced_structure(&n, &pool, &budget)?;
    if let Some(why) = rep.declined {
        return Ok(Outcome::new(CheckReport::inconclusive(0, format!("declined: {why}"))));
    }
    let mut lines = vec![];
    let mut counts = [0usize; 3];
    let mut first_bad = None;
    for (i, e) in rep.entries.iter().enumerate() {
        let status = match &e.status {
            InducedStatus::EqualityForm(g) => {
                counts[0] += 1;
                format!("equality form {}", print_formula(g))
            }
            InducedStatus::NotEqualityForm(p) => {
                counts[1] += 1;
                first_bad.get_or_insert_with(|| format!("{}\nopen at {p}", print_formula(&e.formula)));
                format!("not equality form at {p}")
            }
            InducedStatus::Inconclusive(w) => {
                counts[2] += 1;
                format!("inconclusive: {w}")
            }
        };
        lines.push(format!("{i}: {} => {status}", print_formula(&e.formula)));
    }
    let used = rep.entries.len() as u64;
    let summary = format!("{} equality form, {} not, {} inconclusive", counts[0], counts[1], counts[2]);
    let report = match first_bad {
        Some(w) => CheckReport::fail(Counterexample::Witness(w), used).with_detail(summary),
        None if counts[2] > 0 => CheckReport::inconclusive(used, summary),
        None => CheckReport::pass(used).with_detail(summary),
    };
    Ok(Outcome { report, lines, artifact: None, plain: false })
}

fn param_formula(formula: &str, object: &[String], params: &Option<Vec<String>>) -> R<ParamFormula> {
    let f = parse_formula(formula, Dialect::Le)?;
    Ok(ParamFormula::new(f, object.to_vec(), params.clone())?)
}

fn execute(cli: &Cli) -> R<Outcome> {
    let seed = cli.seed;
    match &cli.verb {
        Verb::Validate { file } => validate_file(file),
        Verb::CheckClass { class, size_bound, budget } => {
            let b = budget.map_or_else(Budget::default, |steps| Budget { steps });
            with_class!(class.class, class.maxarity, |c| check_class(&c, *size_bound, b))
        }
        Verb::Limit { class, steps, level } => {
            with_class!(class.class, class.maxarity, |c| limit(&c, *steps, seed, *level))
        }
        Verb::Amalgamate(a) => amalgamate(a, seed),
        Verb::Qe { formula, maxarity } => {
            let f = parse_formula(formula, Dialect::Le)?;
            Ok(plain(Verdict::Pass, print_formula(&eliminate_quantifiers(&f, *maxarity)?)))
        }
        Verb::Decide { formula, maxarity } => {
            let f = parse_formula(formula, Dialect::Le)?;
            Ok(match decide_sentence(&f, *maxarity)? {
                true => plain(Verdict::Pass, "true".into()),
                false => plain(Verdict::Fail, "false".into()),
            })
        }
        Verb::Encode { file, arities, cap } => {
            let x = parse_structure(&read(file)?)?;
            let n = encode(&x, seed, &EncodeOptions { arities: arities.clone(), cap: *cap })?;
            n.validate()?;
            let mut o = Outcome::new(
                CheckReport::pass(1)
                    .with_detail(format!("base size {}", n.base.size()))
                    .with_detail(format!("sort arities {:?}", n.sort_arities)),
            );
            o.artifact = Some(print_te1s(&n));
            Ok(o)
        }
        Verb::Decode { file } => {
            let x = decode(&parse_te1s(&read(file)?)?)?;
            let mut o = Outcome::new(CheckReport::pass(1));
            o.artifact = Some(print_structure(&x));
            Ok(o)
        }
        Verb::Induced { file, formulas, random, max_quantifiers, max_patterns } => {
            let budget = InducedBudget { max_quantifiers: *max_quantifiers, max_patterns: *max_patterns };
            induced(file, formulas, *random, budget, seed)
        }
        Verb::Homog { file, class, maxarity, steps, level } => match (file, class) {
            (Some(path), cls) => {
                let text = read(path)?;
                let name = cls.unwrap_or(ClassName::Ke);
                if name == ClassName::Ke && cls.is_none() {
                    let m = parse_te(&text)?;
                    return homog(&KeClass::new(m.maxarity()), &m, *level);
                }
                with_class!(name, *maxarity, |c| homog(&c, &c.parse_member(&text)?, *level))
            }
            (None, Some(name)) => with_class!(*name, *maxarity, |c| {
                let run = build_limit(&c, *steps, seed, *level)?;
                let mut o = homog(&c, &run.structure, *level)?;
                o.lines.insert(0, format!("limit of {} size {} after {} step(s)", c.name(), c.size_of(&run.structure), run.steps));
                Ok(o)
            }),
            (None, None) => Err(InputError("give a structure file or --class".into())),
        },
        Verb::Tp2 { rows, cols } => {
            let w = build_tp2_witness(*rows, *cols)?;
            let mut o = Outcome::new(w.report);
            o.lines.push(format!("formula {} with object {:?}", w.phi.formula, w.phi.object));
            for (i, row) in w.array.iter().enumerate() {
                let cells: Vec<String> = row.iter().map(|t| tuple_text(t)).collect();
                o.lines.push(format!("row {i}: {}", cells.join(" ")));
            }
            o.artifact = Some(print_te(&w.structure));
            Ok(o)
        }
        Verb::Sop2Check { file, phi, depth, indiscernible, tuple_budget } => {
            let fam = parse_family(&read(file)?)?;
            let pf = param_formula(&phi.formula, &phi.object, &phi.params)?;
            let mut parts = vec![("witness", check_sop2_witness(&fam, &pf, depth.unwrap_or(fam.depth))?)];
            if !indiscernible.is_empty() {
                let fs = indiscernible.iter().map(|f| parse_formula(f, Dialect::Le)).collect::<crate::Result<Vec<_>>>()?;
                parts.push(("indiscernibility", check_indiscernible_tree(&fam, &fs, *tuple_budget)?));
            }
            let (report, lines) = combine(parts);
            Ok(Outcome { report, lines, artifact: None, plain: false })
        }
        Verb::Sop2Refute { file, formula, object, params, generate, tuple_length, maxarity, depth } => {
            let (fam, pf, generated) = if *generate {
                let (fam, pf) = random_sop2_config(seed, *tuple_length, *maxarity, *depth)?;
                (fam, pf, true)
            } else {
                let (Some(path), Some(f)) = (file, formula) else {
                    return Err(InputError("give a family file and --formula, or --generate".into()));
                };
                (parse_family(&read(path)?)?, param_formula(f, object, params)?, false)
            };
            let mut o = Outcome::new(refute_sop2_config(&fam, &pf)?);
            o.lines.push(format!("formula {} object {} params {}", pf.formula, pf.object.join(","), pf.params.join(",")));
            if generated {
                o.artifact = Some(print_family(&fam));
            }
            Ok(o)
        }
    }
}

/// The class a structural counterexample is replayed against.
fn replay_class(cli: &Cli, cex: &Counterexample) -> R<(ClassName, usize)> {
    match &cli.verb {
        Verb::CheckClass { class, .. } | Verb::Limit { class, .. } => return Ok((class.class, class.maxarity)),
        Verb::Homog { class: Some(c), maxarity, .. } => return Ok((*c, *maxarity)),
        _ => {}
    }
    let text = cex.to_text();
    let first = text.lines().skip(1).find(|l| l.starts_with("te ") || l.starts_with("structure"));
    match first {
        Some(l) if l.starts_with("te ") => {
            let block: String = text.lines().skip_while(|x| *x != l).take_while(|x| *x != "end").chain(["end"]).collect::<Vec<_>>().join("\n");
            Ok((ClassName::Ke, parse_te(&block)?.maxarity()))
        }
        _ => Err(InputError("cannot infer the class of this counterexample; use a verb with --class".into())),
    }
}

fn run_replay(cli: &Cli, path: &Path, out: &mut dyn Write) -> R<i32> {
    let cex = Counterexample::parse(&read(path)?)?;
    let verdict = if let Counterexample::Witness(_) = cex {
        let again = execute(cli)?;
        match again.report.counterexample {
            Some(c) if c.to_text() == cex.to_text() => Replay::Confirmed("re-running the check gives the same witness".into()),
            Some(_) => Replay::Refuted("re-running the check gives a different witness".into()),
            None => Replay::Refuted(format!("re-running the check gives {}", again.report.verdict)),
        }
    } else {
        let (name, k) = replay_class(cli, &cex)?;
        with_class!(name, k, |c| replay(&c, &cex)?)
    };
    let (code, word, why) = match verdict {
        Replay::Confirmed(w) => (1, "confirmed", w),
        Replay::Refuted(w) => (0, "not reproduced", w),
        Replay::Unsupported => (3, "unsupported", String::new()),
    };
    if cli.json {
        let v = serde_json::json!({ "replay": word, "kind": cex.kind(), "reason": why });
        let _ = writeln!(out, "{v}");
    } else {
        let _ = writeln!(out, "replay {} {word}\n{why}", cex.kind());
    }
    Ok(code)
}

fn emit(cli: &Cli, o: Outcome, out: &mut dyn Write) -> R<i32> {
    let code = exit_code(o.report.verdict);
    let cex_text = o.report.counterexample.as_ref().map(Counterexample::to_text);
    if let Some(path) = &cli.output {
        let body = match (&cex_text, &o.artifact) {
            (Some(c), _) => c.clone(),
            (None, Some(a)) => a.clone(),
            (None, None) => o.report.to_text(),
        };
        std::fs::write(path, body).map_err(|e| InputError(format!("{}: {e}", path.display())))?;
    }
    if cli.json {
        let mut v = o.report.to_json();
        v["lines"] = serde_json::json!(o.lines);
        v["output"] = serde_json::json!(o.artifact);
        let _ = writeln!(out, "{v}");
        return Ok(code);
    }
    for l in &o.lines {
        let _ = writeln!(out, "{l}");
    }
    if o.plain {
        return Ok(code);
    }
    let _ = write!(out, "{}", o.report.to_text());
    if cli.output.is_none() {
        if let Some(c) = &cex_text {
            let _ = write!(out, "{c}");
        }
        if let Some(a) = &o.artifact {
            let _ = write!(out, "{a}");
        }
    }
    Ok(code)
}

/// Runs one invocation; `argv[0]` is the program name.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let help = matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion);
            let text = e.render().to_string();
            if help {
                let _ = write!(out, "{text}");
                return 0;
            }
            let _ = write!(err, "{text}");
            return 3;
        }
    };
    let result = match &cli.replay {
        Some(path) => run_replay(&cli, path, out),
        None => execute(&cli).and_then(|o| emit(&cli, o, out)),
    };
    match result {
        Ok(code) => code,
        Err(InputError(m)) => {
            let _ = writeln!(err, "error: {m}");
            3
        }
    }
}
