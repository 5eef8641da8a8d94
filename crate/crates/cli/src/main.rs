use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use cdd_chc::config::{BackendKind, BackendSettings, ExternalSection, FileConfig, EXTERNAL_CMD_ENV};
use cdd_chc::external::{Dialect, External};
use cdd_chc::trace::Tracing;
use cdd_chc::{parse_horn, parse_native, parse_solution, print_horn, print_native, print_solution};
use cdd_chc_core::expand::{expand, Expansion};
use cdd_chc_core::fixtures::nested_diamond;
use cdd_chc_core::interpolate::{Builtin, Checked, Fallback, Interpolator};
use cdd_chc_core::oracle::{expansion_sizes, find_counterexample, gen_system, DerivationTree, OracleLimits, Profile, Verdict};
use cdd_chc_core::sat::Limits;
use cdd_chc_core::solver::{solve_recursion_free, solve_recursive, unwind, validate, RecursiveOutcome, Solution, SolveError};
use cdd_chc_core::System;
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

const SAT: u8 = 0;
const UNSAT: u8 = 1;
const UNKNOWN: u8 = 2;
const ERROR: u8 = 3;

/// Solver for recursion-free constrained Horn clauses through
/// clause-dependence-disjoint expansion.
#[derive(Parser)]
#[command(name = "cdd-chc", version)]
struct Cli {
    #[command(flatten)]
    backend: BackendArgs,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct BackendArgs {
    /// Interpolation backend: builtin or external.
    #[arg(long, global = true)]
    backend: Option<BackendKind>,
    /// External solver command line; falls back to $CDD_CHC_EXTERNAL_CMD.
    #[arg(long, global = true)]
    external_cmd: Option<String>,
    /// Interpolation syntax of the external solver: smtinterpol or mathsat.
    #[arg(long, global = true)]
    dialect: Option<Dialect>,
    /// Per-query timeout of the external solver.
    #[arg(long, global = true)]
    timeout_ms: Option<u64>,
    /// TOML file with backend settings.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve a system: prints sat and a solution, unsat, or unknown.
    Solve {
        file: PathBuf,
        /// Maximal unwinding depth for recursive systems.
        #[arg(long, default_value_t = 16)]
        kmax: usize,
        /// Write the CDD expansion and its correspondence to this file.
        #[arg(long)]
        dump_expansion: Option<PathBuf>,
        /// Write a JSON trace of interpolation queries to this file.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Print the classes of a system.
    Classify { file: PathBuf },
    /// Print the CDD expansion of a recursion-free system.
    Expand {
        file: PathBuf,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Check a solution file against a system.
    Validate { file: PathBuf, solution: PathBuf },
    /// Decide a small recursion-free system by enumerating derivations.
    Oracle { file: PathBuf },
    /// Print expansion size comparisons as JSON lines.
    BenchSizes {
        files: Vec<PathBuf>,
        /// Nested-diamond systems of depth 1 to N.
        #[arg(long)]
        diamond: Option<usize>,
        /// First seed of generated systems.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "dag")]
        profile: Profile,
        #[arg(long, default_value_t = 1)]
        count: u64,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { ERROR } else { SAT });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {:#}", e);
            ExitCode::from(ERROR)
        }
    }
}

fn settings(args: &BackendArgs) -> Result<BackendSettings> {
    let file = match &args.config {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            FileConfig::from_toml(&text).with_context(|| format!("in {}", p.display()))?
        }
        None => FileConfig::default(),
    };
    let flags = FileConfig {
        backend: args.backend,
        external: ExternalSection { cmd: args.external_cmd.clone(), dialect: args.dialect, timeout_ms: args.timeout_ms },
    };
    Ok(file.resolve(&flags, std::env::var(EXTERNAL_CMD_ENV).ok())?)
}

fn interpolator(settings: &BackendSettings) -> Box<dyn Interpolator> {
    let builtin = Checked::new(Builtin::default());
    match (settings.kind, &settings.external) {
        (BackendKind::External, Some(ext)) => Box::new(Checked::new(External::new(ext.clone()))),
        (_, Some(ext)) => Box::new(Fallback { primary: builtin, fallback: Checked::new(External::new(ext.clone())) }),
        (_, None) => Box::new(builtin),
    }
}

fn is_native(path: &Path) -> bool {
    path.extension().is_some_and(|e| e == "chc")
}

fn load(path: &Path) -> Result<System> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let parsed = if is_native(path) { parse_native(&text) } else { parse_horn(&text) };
    parsed.with_context(|| format!("in {}", path.display()))
}

fn render_expansion(e: &Expansion, native: bool) -> String {
    let (mut out, comment) = if native { (print_native(&e.system), "#") } else { (print_horn(&e.system), ";") };
    for (copy, orig) in e.corr.iter() {
        out.push_str(&format!("{} {} -> {}\n", comment, copy, orig));
    }
    out
}

fn sexp_tree(t: &DerivationTree) -> String {
    let mut s = format!("({}", t.clause);
    for c in &t.children {
        s.push(' ');
        s.push_str(&sexp_tree(c));
    }
    s.push(')');
    s
}

fn print_sat(s: &System, sigma: &Solution) -> Result<u8> {
    match validate(s, sigma, &Limits::default()) {
        Ok(None) => {
            println!("sat");
            print!("{}", print_solution(s, sigma));
            Ok(SAT)
        }
        Ok(Some(f)) => {
            eprintln!("candidate solution fails clause {}", f.clause);
            println!("unknown");
            Ok(UNKNOWN)
        }
        Err(e) => {
            eprintln!("could not validate the solution: {}", e);
            println!("unknown");
            Ok(UNKNOWN)
        }
    }
}

fn print_derivation(s: &System, map: &dyn Fn(usize) -> usize) {
    match find_counterexample(s, OracleLimits::relaxed()) {
        Ok(Verdict::Refuted { tree, .. }) => println!("(derivation {})", sexp_tree(&tree.map_clauses(map))),
        Ok(_) => eprintln!("no derivation found for the refutation"),
        Err(e) => eprintln!("derivation not reconstructed: {}", e),
    }
}

fn solve(s: &System, kmax: usize, itp: &mut dyn Interpolator) -> Result<u8> {
    let unknown = |reason: String| {
        println!("unknown");
        eprintln!("{}", reason);
        Ok(UNKNOWN)
    };
    if s.is_recursion_free() {
        return match solve_recursion_free(s, itp) {
            Ok(Some(sigma)) => print_sat(s, &sigma),
            Ok(None) => {
                println!("unsat");
                print_derivation(s, &|id| id);
                Ok(UNSAT)
            }
            Err(e @ (SolveError::SolverUnknown { .. } | SolveError::ValidationUnknown { .. })) => unknown(e.to_string()),
            Err(e) => Err(e.into()),
        };
    }
    match solve_recursive(s, kmax, itp) {
        Ok(RecursiveOutcome::Solved(sigma)) => print_sat(s, &sigma),
        Ok(RecursiveOutcome::Refuted(k)) => {
            println!("unsat");
            println!("(depth {})", k);
            let u = unwind(s, k);
            print_derivation(&u.system, &|id| u.clause_origin.get(&id).copied().unwrap_or(id));
            Ok(UNSAT)
        }
        Ok(RecursiveOutcome::Unknown(reason)) => unknown(reason),
        Err(e @ (SolveError::SolverUnknown { .. } | SolveError::ValidationUnknown { .. })) => unknown(e.to_string()),
        Err(e) => Err(e.into()),
    }
}

#[derive(Serialize)]
struct CountsRow {
    preds: u128,
    clauses: u128,
}

#[derive(Serialize)]
struct SizeRow {
    name: String,
    preds: usize,
    clauses: usize,
    cdd: CountsRow,
    tree: CountsRow,
    derivations: u128,
    linear_inline: CountsRow,
}

fn size_row(name: String, s: &System) -> Result<SizeRow> {
    let z = expansion_sizes(s).with_context(|| format!("sizes of {}", name))?;
    let row = |c: cdd_chc_core::oracle::Counts| CountsRow { preds: c.preds, clauses: c.clauses };
    Ok(SizeRow {
        name,
        preds: s.num_preds(),
        clauses: s.clauses().len(),
        cdd: row(z.cdd),
        tree: row(z.tree),
        derivations: z.derivations,
        linear_inline: row(z.linear_inline),
    })
}

fn run(cli: Cli) -> Result<u8> {
    let settings = settings(&cli.backend)?;
    match cli.cmd {
        Cmd::Solve { file, kmax, dump_expansion, trace } => {
            let s = load(&file)?;
            if let Some(path) = dump_expansion {
                if !s.is_recursion_free() {
                    bail!("--dump-expansion needs a recursion-free system");
                }
                let e = expand(&s)?;
                fs::write(&path, render_expansion(&e, is_native(&path)))
                    .with_context(|| format!("writing {}", path.display()))?;
            }
            let mut itp = Tracing::new(interpolator(&settings));
            let res = solve(&s, kmax, &mut itp);
            if let Some(path) = trace {
                fs::write(&path, itp.to_json()).with_context(|| format!("writing {}", path.display()))?;
            }
            res
        }
        Cmd::Classify { file } => {
            println!("{}", load(&file)?.classify());
            Ok(SAT)
        }
        Cmd::Expand { file, output } => {
            let s = load(&file)?;
            if !s.is_recursion_free() {
                bail!("expansion needs a recursion-free system");
            }
            let text = render_expansion(&expand(&s)?, is_native(output.as_deref().unwrap_or(&file)));
            match output {
                Some(p) => fs::write(&p, text).with_context(|| format!("writing {}", p.display()))?,
                None => print!("{}", text),
            }
            Ok(SAT)
        }
        Cmd::Validate { file, solution } => {
            let s = load(&file)?;
            let text = fs::read_to_string(&solution).with_context(|| format!("reading {}", solution.display()))?;
            let sigma = parse_solution(&s, &text).with_context(|| format!("in {}", solution.display()))?;
            match validate(&s, &sigma, &Limits::default()) {
                Ok(None) => {
                    println!("valid");
                    Ok(SAT)
                }
                Ok(Some(f)) => {
                    println!("invalid {}", f.clause);
                    Ok(UNSAT)
                }
                Err(e @ SolveError::ValidationUnknown { .. }) => {
                    println!("unknown");
                    eprintln!("{}", e);
                    Ok(UNKNOWN)
                }
                Err(e) => Err(e.into()),
            }
        }
        Cmd::Oracle { file } => match find_counterexample(&load(&file)?, OracleLimits::default())? {
            Verdict::Solvable => {
                println!("solvable");
                Ok(SAT)
            }
            Verdict::Refuted { tree, .. } => {
                println!("unsolvable");
                print!("{}", tree);
                Ok(UNSAT)
            }
            Verdict::Unknown(r) => {
                println!("unknown");
                eprintln!("{}", r);
                Ok(UNKNOWN)
            }
        },
        Cmd::BenchSizes { files, diamond, seed, profile, count } => {
            let mut rows = Vec::new();
            for f in &files {
                rows.push(size_row(f.display().to_string(), &load(f)?)?);
            }
            for k in 1..=diamond.unwrap_or(0) {
                rows.push(size_row(format!("diamond-{}", k), &nested_diamond(k))?);
            }
            if let Some(seed) = seed {
                for i in 0..count {
                    let s = gen_system(seed + i, profile);
                    rows.push(size_row(format!("{}-{}", profile.name(), seed + i), &s)?);
                }
            }
            if rows.is_empty() {
                bail!("nothing to measure: give files, --diamond or --seed");
            }
            for r in rows {
                println!("{}", serde_json::to_string(&r)?);
            }
            Ok(SAT)
        }
    }
}
