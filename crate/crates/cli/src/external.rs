//! Interpolation through an external SMT solver process.
//!
//! Each query spawns one child, writes a complete script to its standard
//! input and reads the answer from standard output. Variables of `pre`
//! outside the shared vocabulary are renamed apart first, so any
//! interpolant over the common symbols of the script is over `shared`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::io::{Read, Write};
use std::process::{Command, Stdio};
use std::str::FromStr;
use std::thread;
use std::time::{Duration, Instant};

use cdd_chc_core::interpolate::{Interpolator, ItpError, ItpQuery, ItpResult};
use cdd_chc_core::sat::{check_sat, Limits, SatResult};
use cdd_chc_core::{Formula, Model, Rational, Sort, Value, Var};
use serde::Deserialize;

use crate::sexp::{parse_all, Sexp};
use crate::term::{parse_rational, Elab, Unbound};

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(30);

/// Interpolation command syntax of the child solver.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dialect {
    /// Named assertions and `(get-interpolants A B)`.
    #[default]
    Smtinterpol,
    /// Interpolation groups and `(get-interpolant (g1))`.
    Mathsat,
}

impl FromStr for Dialect {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "smtinterpol" => Ok(Dialect::Smtinterpol),
            "mathsat" => Ok(Dialect::Mathsat),
            other => Err(format!("unknown dialect `{}` (expected smtinterpol or mathsat)", other)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExternalConfig {
    /// Program followed by its arguments.
    pub cmd: Vec<String>,
    pub dialect: Dialect,
    pub timeout: Duration,
}

#[derive(Clone, Debug)]
pub struct External {
    pub config: ExternalConfig,
    pub spawned: usize,
}

/// Renamed copy of the query as sent to the child.
struct Wire {
    pre: Formula,
    post: Formula,
    vars: BTreeMap<String, Var>,
}

fn prepare(q: &ItpQuery) -> Wire {
    let post_vocab = q.post.vocab();
    let mut taken: BTreeSet<String> = post_vocab.iter().map(|v| v.name.clone()).collect();
    taken.extend(q.pre.vocab().into_iter().map(|v| v.name));
    let mut rename = BTreeMap::new();
    for v in q.pre.vocab() {
        if q.shared.contains(&v) {
            continue;
        }
        let mut name = format!("pre!{}", v.name);
        while taken.contains(&name) {
            name.insert(0, '_');
        }
        taken.insert(name.clone());
        rename.insert(v.clone(), Var::new(name, v.sort));
    }
    let pre = q.pre.substitute(&rename).expect("renaming preserves sorts");
    let mut vars = BTreeMap::new();
    for v in pre.vocab().into_iter().chain(post_vocab) {
        vars.insert(v.name.clone(), v);
    }
    Wire { pre, post: q.post.clone(), vars }
}

fn logic(vars: &BTreeMap<String, Var>) -> &'static str {
    let ints = vars.values().any(|v| v.sort == Sort::Int);
    let reals = vars.values().any(|v| v.sort == Sort::Real);
    match (ints, reals) {
        (true, true) => "QF_LIRA",
        (true, false) => "QF_LIA",
        _ => "QF_LRA",
    }
}

impl External {
    pub fn new(config: ExternalConfig) -> Self {
        External { config, spawned: 0 }
    }

    /// The script sent for `q`; identical queries give identical bytes.
    pub fn script(&self, q: &ItpQuery) -> String {
        self.script_for(&prepare(q))
    }

    fn script_for(&self, w: &Wire) -> String {
        let mut s = String::new();
        s.push_str("(set-option :produce-models true)\n(set-option :produce-interpolants true)\n");
        writeln!(s, "(set-logic {})", logic(&w.vars)).unwrap();
        for v in w.vars.values() {
            writeln!(s, "(declare-fun {} () {})", v, v.sort).unwrap();
        }
        match self.config.dialect {
            Dialect::Smtinterpol => {
                writeln!(s, "(assert (! {} :named A))", w.pre).unwrap();
                writeln!(s, "(assert (! {} :named B))", w.post).unwrap();
                s.push_str("(check-sat)\n(get-interpolants A B)\n(get-model)\n");
            }
            Dialect::Mathsat => {
                writeln!(s, "(assert (! {} :interpolation-group g1))", w.pre).unwrap();
                writeln!(s, "(assert (! {} :interpolation-group g2))", w.post).unwrap();
                s.push_str("(check-sat)\n(get-interpolant (g1))\n(get-model)\n");
            }
        }
        s.push_str("(exit)\n");
        s
    }

    /// Runs the child on `script`: `Ok(None)` on timeout.
    fn run(&mut self, script: &str) -> Result<Option<(String, String)>, ItpError> {
        let (prog, args) = self.config.cmd.split_first().ok_or_else(|| ItpError::Backend("empty command".into()))?;
        let mut child = Command::new(prog)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(|e| ItpError::Backend(format!("cannot start `{}`: {}", prog, e)))?;
        self.spawned += 1;
        let mut stdin = child.stdin.take().unwrap();
        let input = script.to_string();
        // a child that exits early closes the pipe; the answer decides
        let writer = thread::spawn(move || {
            let _ = stdin.write_all(input.as_bytes());
        });
        let mut stdout = child.stdout.take().unwrap();
        let mut stderr = child.stderr.take().unwrap();
        let out_reader = thread::spawn(move || {
            let mut buf = String::new();
            let _ = stdout.read_to_string(&mut buf);
            buf
        });
        let err_reader = thread::spawn(move || {
            let mut buf = String::new();
            let _ = stderr.read_to_string(&mut buf);
            buf
        });
        let deadline = Instant::now() + self.config.timeout;
        let status = loop {
            match child.try_wait().map_err(|e| ItpError::Backend(e.to_string()))? {
                Some(status) => break status,
                None if Instant::now() >= deadline => {
                    let _ = child.kill();
                    let _ = child.wait();
                    return Ok(None);
                }
                None => thread::sleep(Duration::from_millis(2)),
            }
        };
        let _ = writer.join();
        let out = out_reader.join().unwrap_or_default();
        let err = err_reader.join().unwrap_or_default();
        if !status.success() && out.trim().is_empty() {
            return Err(ItpError::Backend(format!("`{}` exited with {}: {}", prog, status, err.trim())));
        }
        Ok(Some((out, err)))
    }

    fn read_answer(&self, q: &ItpQuery, w: &Wire, out: &str, err: &str) -> Result<ItpResult, ItpError> {
        let exprs = parse_all(out).map_err(|e| ItpError::Backend(format!("unreadable solver output: {}", e)))?;
        let mut rest = exprs.iter().filter(|e| !matches!(e.symbol(), Some("success")) && e.head() != Some("error"));
        let verdict = rest.next().and_then(Sexp::symbol);
        match verdict {
            Some("unsat") => {
                let Some(answer) = rest.next() else {
                    return Ok(ItpResult::Unknown("solver gave no interpolant".into()));
                };
                let term = match (self.config.dialect, answer.list()) {
                    (Dialect::Smtinterpol, Some([t])) => t,
                    (Dialect::Smtinterpol, _) => return Ok(ItpResult::Unknown("expected one interpolant".into())),
                    (Dialect::Mathsat, _) => answer,
                };
                let sigs = BTreeMap::new();
                let mut elab = Elab::new(&sigs, Unbound::Reject);
                for v in w.vars.values() {
                    elab.bind_var(v.clone());
                }
                let itp = match elab.formula(term) {
                    Ok(f) => f,
                    Err(e) => return Ok(ItpResult::Unknown(format!("unreadable interpolant: {}", e))),
                };
                if !itp.vocab().is_subset(&q.shared) {
                    return Ok(ItpResult::Unknown("interpolant outside the shared vocabulary".into()));
                }
                Ok(ItpResult::Interpolant(itp))
            }
            Some("sat") => {
                let model = rest.find_map(|e| read_model(e, &w.vars));
                match model {
                    Some(m) if q.pre.eval(&m) && q.post.eval(&m) => Ok(ItpResult::MutuallySat(m)),
                    // replay locally rather than trust a partial model
                    _ => match check_sat(&Formula::and([q.pre.clone(), q.post.clone()]), &Limits::default())? {
                        SatResult::Sat(m) => Ok(ItpResult::MutuallySat(m)),
                        SatResult::Unsat => Err(ItpError::Backend("solver reported sat for an unsatisfiable pair".into())),
                        SatResult::Unknown(r) => Ok(ItpResult::Unknown(format!("solver reported sat without a usable model; {}", r))),
                    },
                }
            }
            Some("unknown") => Ok(ItpResult::Unknown("solver answered unknown".into())),
            _ => Err(ItpError::Backend(format!("unexpected solver output: {} {}", out.trim(), err.trim()))),
        }
    }
}

fn value(e: &Sexp) -> Option<Value> {
    match e {
        Sexp::Symbol(s, _) if s == "true" => Some(Value::Bool(true)),
        Sexp::Symbol(s, _) if s == "false" => Some(Value::Bool(false)),
        Sexp::List(items, _) => match (e.head(), &items[1..]) {
            (Some("-"), [x]) => match value(x)? {
                Value::Num(n) => Some(Value::Num(-n)),
                Value::Bool(_) => None,
            },
            (Some("/"), [a, b]) => match (value(a)?, value(b)?) {
                (Value::Num(a), Value::Num(b)) if b != Rational::from_integer(0.into()) => Some(Value::Num(a / b)),
                _ => None,
            },
            _ => None,
        },
        _ => parse_rational(e).map(Value::Num),
    }
}

fn read_model(e: &Sexp, vars: &BTreeMap<String, Var>) -> Option<Model> {
    let items = e.list()?;
    let defs = if e.head() == Some("model") { &items[1..] } else { items };
    let mut m = Model::new();
    for d in defs {
        let [_, name, _, _, body] = d.list()? else { return None };
        if d.head() != Some("define-fun") {
            return None;
        }
        if let Some(v) = vars.get(name.symbol()?) {
            m.set(v.clone(), value(body)?);
        }
    }
    Some(m)
}

impl Interpolator for External {
    fn interpolate(&mut self, q: &ItpQuery) -> Result<ItpResult, ItpError> {
        let w = prepare(q);
        let script = self.script_for(&w);
        match self.run(&script)? {
            None => Ok(ItpResult::Unknown(format!("timeout after {} ms", self.config.timeout.as_millis()))),
            Some((out, err)) => self.read_answer(q, &w, &out, &err),
        }
    }
}
