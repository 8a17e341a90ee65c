//! Command-line front end for the LFP workbench.
//!
//! Exit codes: 0 success, 1 property-not-found where a find was required,
//! 2 usage/parse errors, 3 search budget exhausted.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use lfp_core::constructions::define_arith_macros;
use lfp_core::dividing::{
    build_property_sentence, detect, verify_witness, Budget, PropertyCertificate, PropertyKind,
    SearchError,
};
use lfp_core::eval::Valuation;
use lfp_core::family::{generate_family, FamilySpec};
use lfp_core::formula::render;
use lfp_core::parser::parse_formula_with;
use lfp_core::report::{bundled_config, run_experiment, ExperimentConfig};
use lfp_core::stages::{lfp_stages, LfpSpec, Strategy};
use lfp_core::structure::load_structure;
use lfp_core::unfold::unfold_lfp;
use lfp_core::{FiniteStructure, Formula, MacroSet, PartitionedFormula, Signature};

/// Workbench for least fixed-point logic over finite structures.
#[derive(Parser)]
#[command(name = "lfp", version, about)]
struct Cli {
    /// Node budget for searches.
    #[arg(long, global = true)]
    budget_nodes: Option<u64>,
    /// Wall-clock budget for searches, in milliseconds.
    #[arg(long, global = true)]
    budget_ms: Option<u64>,
    /// Seed for random-graph families without an explicit seed.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Output file or directory (command-specific).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a formula on a structure.
    Eval(EvalArgs),
    /// Print the fixpoint stages of an lfp formula.
    Stages(FormulaOnStructure),
    /// Print the closure ordinal of an lfp formula.
    Closure(FormulaOnStructure),
    /// Unfold an lfp formula k times into an lfp-free formula.
    Unfold(UnfoldArgs),
    /// Search for a dividing-line witness.
    Detect(DetectArgs),
    /// Re-verify a certificate against a structure and formula.
    Verify(VerifyArgs),
    /// Print the defining sentence of a property instance.
    Sentence(SentenceArgs),
    /// Generate a structure family as JSON files.
    Generate(GenerateArgs),
    /// Run an experiment config and emit CSV + JSON reports.
    Profile(ProfileArgs),
}

#[derive(Args)]
struct EvalArgs {
    /// Family spec for a single structure (e.g. `succ:4`) or a JSON file.
    #[arg(long)]
    structure: String,
    /// Formula text, or a path to a `.lfp` file with macro definitions.
    #[arg(long)]
    formula: String,
    /// Variable bindings, e.g. `--bind u=3` (repeatable).
    #[arg(long)]
    bind: Vec<String>,
}

#[derive(Args)]
struct FormulaOnStructure {
    #[arg(long)]
    structure: String,
    /// An lfp application `[lfp S(x..). body](u..)`.
    #[arg(long)]
    formula: String,
    /// Iteration strategy: `naive` or `semi-naive` (identical results).
    #[arg(long, default_value = "naive")]
    strategy: String,
}

#[derive(Args)]
struct UnfoldArgs {
    /// An lfp application to unfold.
    #[arg(long)]
    formula: String,
    /// Number of unfolding steps.
    #[arg(short = 'k', long)]
    k: usize,
    /// Signature context, e.g. `S:2,<:2`; alternatively give --structure.
    #[arg(long)]
    signature: Option<String>,
    #[arg(long)]
    structure: Option<String>,
}

#[derive(Args)]
struct DetectArgs {
    /// OP, sOP, IP, or TP2.
    #[arg(long)]
    kind: String,
    #[arg(long)]
    structure: String,
    #[arg(long)]
    formula: String,
    /// Object variables (comma-separated); default: first free variable.
    #[arg(long)]
    x: Option<String>,
    /// Parameter variables (comma-separated); default: remaining variables.
    #[arg(long)]
    y: Option<String>,
    #[arg(short = 'n', long)]
    n: usize,
}

#[derive(Args)]
struct VerifyArgs {
    /// Certificate JSON file.
    #[arg(long)]
    certificate: PathBuf,
    #[arg(long)]
    structure: String,
    #[arg(long)]
    formula: String,
    #[arg(long)]
    x: Option<String>,
    #[arg(long)]
    y: Option<String>,
}

#[derive(Args)]
struct SentenceArgs {
    #[arg(long)]
    kind: String,
    #[arg(long)]
    formula: String,
    #[arg(short = 'n', long)]
    n: usize,
    /// Signature context, e.g. `S:2,<:2`; alternatively give --structure.
    #[arg(long)]
    signature: Option<String>,
    #[arg(long)]
    structure: Option<String>,
    #[arg(long)]
    x: Option<String>,
    #[arg(long)]
    y: Option<String>,
}

#[derive(Args)]
struct GenerateArgs {
    /// Family spec, e.g. `paley:5,13,17` or `union(succ:2..4, linord:2..4)`.
    #[arg(long)]
    family: String,
}

#[derive(Args)]
struct ProfileArgs {
    /// Config JSON file or a bundled config name (`figure1-desk`).
    #[arg(long)]
    config: String,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Failure {
        Failure {
            code: 2,
            message: message.into(),
        }
    }

    fn not_found(message: impl Into<String>) -> Failure {
        Failure {
            code: 1,
            message: message.into(),
        }
    }

    fn budget(message: impl Into<String>) -> Failure {
        Failure {
            code: 3,
            message: message.into(),
        }
    }
}

impl From<SearchError> for Failure {
    fn from(e: SearchError) -> Failure {
        match e {
            SearchError::BudgetExhausted { .. } => Failure::budget(e.to_string()),
            other => Failure::usage(other.to_string()),
        }
    }
}

macro_rules! usage_from {
    ($($ty:ty),*) => {$(
        impl From<$ty> for Failure {
            fn from(e: $ty) -> Failure {
                Failure::usage(e.to_string())
            }
        }
    )*};
}
usage_from!(
    lfp_core::ParseError,
    lfp_core::eval::EvalError,
    lfp_core::family::FamilyError,
    lfp_core::structure::StructureError,
    lfp_core::signature::SignatureError,
    lfp_core::dividing::VerifyError,
    lfp_core::dividing::SentenceError,
    lfp_core::report::ConfigError,
    lfp_core::formula::PartitionError,
    serde_json::Error,
    std::io::Error
);

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let budget = Budget {
        max_nodes: cli.budget_nodes,
        max_millis: cli.budget_ms,
    };
    match &cli.command {
        Command::Eval(args) => cmd_eval(args, cli.seed),
        Command::Stages(args) => cmd_stages(args, cli.seed, true),
        Command::Closure(args) => cmd_stages(args, cli.seed, false),
        Command::Unfold(args) => cmd_unfold(args, cli.seed),
        Command::Detect(args) => cmd_detect(args, cli.seed, &budget, cli.out.as_deref()),
        Command::Verify(args) => cmd_verify(args, cli.seed),
        Command::Sentence(args) => cmd_sentence(args, cli.seed),
        Command::Generate(args) => cmd_generate(args, cli.seed, cli.out.as_deref()),
        Command::Profile(args) => cmd_profile(args, &cli, cli.out.as_deref()),
    }
}

/// Load a structure from a family spec naming exactly one member, or from a
/// JSON file path.
fn resolve_structure(text: &str, seed: u64) -> Result<FiniteStructure, Failure> {
    if Path::new(text).exists() {
        return Ok(load_structure(text)?);
    }
    let spec = FamilySpec::parse(text, seed).map_err(|e| {
        Failure::usage(format!("`{text}` is neither a file nor a family spec: {e}"))
    })?;
    let mut family = generate_family(&spec)?;
    match family.len() {
        1 => Ok(family.pop().unwrap()),
        n => Err(Failure::usage(format!(
            "`{text}` describes {n} structures; name exactly one (e.g. `succ:4`)"
        ))),
    }
}

/// Built-in macros: the arithmetic library over `<`, plus `reach` over a
/// successor relation.
fn builtin_macros(sig: &Signature) -> MacroSet {
    let mut macros = MacroSet::new();
    define_arith_macros(&mut macros, sig);
    if sig.arity("S") == Some(2) {
        macros
            .define(
                "reach",
                &["u"],
                "[lfp T(x). (A y. !S(y,x)) | E y. (S(y,x) & T(y))](u)",
                sig,
            )
            .expect("builtin reach parses");
    }
    macros
}

/// Read a formula from inline text or a `.lfp` file. Files may define
/// additional macros with lines `def name(params) := body`; the remaining
/// text is the formula. `#` starts a comment line.
fn resolve_formula(text: &str, sig: &Signature) -> Result<Formula, Failure> {
    let mut macros = builtin_macros(sig);
    let source = if Path::new(text).exists() {
        std::fs::read_to_string(text)?
    } else {
        text.to_string()
    };
    let mut formula_lines: Vec<&str> = Vec::new();
    for line in source.lines() {
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        if let Some(rest) = trimmed.strip_prefix("def ") {
            let (head, body) = rest
                .split_once(":=")
                .ok_or_else(|| Failure::usage(format!("macro line without `:=`: {trimmed}")))?;
            let head = head.trim();
            let open = head
                .find('(')
                .ok_or_else(|| Failure::usage(format!("macro head without parameters: {head}")))?;
            let name = head[..open].trim();
            let params_text = head[open + 1..]
                .strip_suffix(')')
                .ok_or_else(|| Failure::usage(format!("unclosed parameter list: {head}")))?;
            let params: Vec<&str> = params_text.split(',').map(str::trim).collect();
            macros.define(name, &params, body.trim(), sig)?;
        } else {
            formula_lines.push(trimmed);
        }
    }
    if formula_lines.is_empty() {
        return Err(Failure::usage("no formula found in input"));
    }
    let formula_text = formula_lines.join(" ");
    Ok(parse_formula_with(&formula_text, sig, &[], &macros)?)
}

fn parse_bindings(binds: &[String]) -> Result<Valuation, Failure> {
    let mut val = Valuation::new();
    for b in binds {
        let (var, value) = b
            .split_once('=')
            .ok_or_else(|| Failure::usage(format!("binding `{b}` is not of the form var=value")))?;
        let value: usize = value
            .trim()
            .parse()
            .map_err(|_| Failure::usage(format!("binding `{b}` has a non-numeric value")))?;
        val.set(var.trim().to_string(), value);
    }
    Ok(val)
}

fn parse_signature_arg(text: &str) -> Result<Signature, Failure> {
    let mut pairs = Vec::new();
    for part in text.split(',') {
        let (name, arity) = part
            .split_once(':')
            .ok_or_else(|| Failure::usage(format!("signature entry `{part}` is not name:arity")))?;
        let arity: usize = arity
            .trim()
            .parse()
            .map_err(|_| Failure::usage(format!("bad arity in `{part}`")))?;
        pairs.push((name.trim().to_string(), arity));
    }
    Ok(Signature::new(pairs)?)
}

fn signature_from(
    signature: &Option<String>,
    structure: &Option<String>,
    seed: u64,
) -> Result<Signature, Failure> {
    match (signature, structure) {
        (Some(s), _) => parse_signature_arg(s),
        (None, Some(st)) => Ok(resolve_structure(st, seed)?.signature()),
        (None, None) => Err(Failure::usage("give --signature or --structure")),
    }
}

fn partition_from(
    f: Formula,
    x: &Option<String>,
    y: &Option<String>,
) -> Result<PartitionedFormula, Failure> {
    let split = |s: &String| -> Vec<String> {
        s.split(',')
            .map(|v| v.trim().to_string())
            .filter(|v| !v.is_empty())
            .collect()
    };
    match (x, y) {
        (Some(x), Some(y)) => Ok(PartitionedFormula::new(f, split(x), split(y))?),
        (None, None) => Ok(PartitionedFormula::default_split(f)?),
        _ => Err(Failure::usage("give both --x and --y, or neither")),
    }
}

fn lfp_application(f: &Formula) -> Result<(LfpSpec, Vec<String>), Failure> {
    LfpSpec::from_formula(f).ok_or_else(|| {
        Failure::usage("the formula must be an lfp application `[lfp S(x..). body](u..)`")
    })
}

fn write_or_print(out: Option<&Path>, name: &str, content: &str) -> Result<(), Failure> {
    match out {
        None => {
            print!("{content}");
            Ok(())
        }
        Some(dir_or_file) => {
            let path = if dir_or_file.extension().is_some() {
                dir_or_file.to_path_buf()
            } else {
                std::fs::create_dir_all(dir_or_file)?;
                dir_or_file.join(name)
            };
            std::fs::write(path, content)?;
            Ok(())
        }
    }
}

fn cmd_eval(args: &EvalArgs, seed: u64) -> Result<(), Failure> {
    let m = resolve_structure(&args.structure, seed)?;
    let f = resolve_formula(&args.formula, &m.signature())?;
    let val = parse_bindings(&args.bind)?;
    let result = lfp_core::eval::eval(&f, &m, &val)?;
    println!("{result}");
    Ok(())
}

fn format_tuple_set(set: &lfp_core::structure::TupleSet) -> String {
    let inner: Vec<String> = set
        .iter()
        .map(|t| {
            if t.len() == 1 {
                t[0].to_string()
            } else {
                format!(
                    "({})",
                    t.iter()
                        .map(|e| e.to_string())
                        .collect::<Vec<_>>()
                        .join(",")
                )
            }
        })
        .collect();
    format!("{{{}}}", inner.join(", "))
}

fn cmd_stages(args: &FormulaOnStructure, seed: u64, list_stages: bool) -> Result<(), Failure> {
    let strategy = match args.strategy.as_str() {
        "naive" => Strategy::Naive,
        "semi-naive" => Strategy::SemiNaive,
        other => return Err(Failure::usage(format!("unknown strategy `{other}`"))),
    };
    let m = resolve_structure(&args.structure, seed)?;
    let f = resolve_formula(&args.formula, &m.signature())?;
    let (spec, _args) = lfp_application(&f)?;
    let table = lfp_stages(&spec, &m, &Valuation::new(), strategy)?;
    if list_stages {
        for k in 1..=table.closure() {
            println!("stage {k}: {}", format_tuple_set(&table.level(k)));
        }
        println!("closure: {}", table.closure());
    } else {
        println!("{}", table.closure());
    }
    Ok(())
}

fn cmd_unfold(args: &UnfoldArgs, seed: u64) -> Result<(), Failure> {
    let sig = signature_from(&args.signature, &args.structure, seed)?;
    let f = resolve_formula(&args.formula, &sig)?;
    let (spec, app_args) = lfp_application(&f)?;
    let theta = unfold_lfp(&spec, args.k);
    // Present the unfolding at the application tuple.
    let map: BTreeMap<String, String> = spec
        .vars
        .iter()
        .cloned()
        .zip(app_args.iter().cloned())
        .filter(|(a, b)| a != b)
        .collect();
    let at_args = lfp_core::formula::substitute_variables(&theta, &map);
    println!("{}", render(&at_args));
    Ok(())
}

fn cmd_detect(
    args: &DetectArgs,
    seed: u64,
    budget: &Budget,
    out: Option<&Path>,
) -> Result<(), Failure> {
    let kind = PropertyKind::parse(&args.kind)
        .ok_or_else(|| Failure::usage(format!("unknown property kind `{}`", args.kind)))?;
    let m = resolve_structure(&args.structure, seed)?;
    let f = resolve_formula(&args.formula, &m.signature())?;
    let probe = partition_from(f, &args.x, &args.y)?;
    match detect(kind, &probe, &m, args.n, budget)? {
        Some(cert) => {
            write_or_print(out, "certificate.json", &cert.to_json())?;
            Ok(())
        }
        None => Err(Failure::not_found(format!(
            "no {kind}({}) witness in {}",
            args.n,
            m.name()
        ))),
    }
}

fn cmd_verify(args: &VerifyArgs, seed: u64) -> Result<(), Failure> {
    let m = resolve_structure(&args.structure, seed)?;
    let f = resolve_formula(&args.formula, &m.signature())?;
    let probe = partition_from(f, &args.x, &args.y)?;
    let cert_text = std::fs::read_to_string(&args.certificate)?;
    let cert = PropertyCertificate::from_json(&cert_text)?;
    if verify_witness(&cert, &probe, &m)? {
        println!("verified");
        Ok(())
    } else {
        Err(Failure::not_found(
            "certificate does not verify".to_string(),
        ))
    }
}

fn cmd_sentence(args: &SentenceArgs, seed: u64) -> Result<(), Failure> {
    let kind = PropertyKind::parse(&args.kind)
        .ok_or_else(|| Failure::usage(format!("unknown property kind `{}`", args.kind)))?;
    let sig = signature_from(&args.signature, &args.structure, seed)?;
    let f = resolve_formula(&args.formula, &sig)?;
    let probe = partition_from(f, &args.x, &args.y)?;
    let sentence = build_property_sentence(kind, &probe, args.n)?;
    println!("{}", render(&sentence));
    Ok(())
}

fn cmd_generate(args: &GenerateArgs, seed: u64, out: Option<&Path>) -> Result<(), Failure> {
    let spec = FamilySpec::parse(&args.family, seed)?;
    let family = generate_family(&spec)?;
    match out {
        None => {
            for m in &family {
                print!("{}", m.to_json());
            }
        }
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            for m in &family {
                let stem: String = m
                    .name()
                    .chars()
                    .map(|c| {
                        if c.is_ascii_alphanumeric() || c == '-' {
                            c
                        } else {
                            '_'
                        }
                    })
                    .collect();
                let file = dir.join(format!("{}.json", stem.trim_matches('_')));
                std::fs::write(file, m.to_json())?;
            }
        }
    }
    Ok(())
}

fn cmd_profile(args: &ProfileArgs, cli: &Cli, out: Option<&Path>) -> Result<(), Failure> {
    let mut config = match bundled_config(&args.config) {
        Some(c) => c,
        None => {
            let text = std::fs::read_to_string(&args.config)?;
            ExperimentConfig::from_json(&text)?
        }
    };
    if cli.budget_nodes.is_some() {
        config.budget_nodes = cli.budget_nodes;
    }
    if cli.budget_ms.is_some() {
        config.budget_ms = cli.budget_ms;
    }
    let report = run_experiment(&config)?;
    let csv = report.to_csv(&config);
    match out {
        None => print!("{csv}"),
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            std::fs::write(dir.join("profile.csv"), &csv)?;
            std::fs::write(dir.join("report.json"), report.to_json())?;
            println!(
                "wrote {}/profile.csv and {}/report.json",
                dir.display(),
                dir.display()
            );
        }
    }
    Ok(())
}
