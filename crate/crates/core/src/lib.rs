#![no_std]
extern crate alloc;

pub mod arith;
pub mod chc;
pub mod expand;
pub mod fixtures;
pub mod formula;
pub mod interpolate;
pub mod oracle;
pub mod rational;
pub mod sat;
pub mod solver;

pub use chc::{ChcError, Classes, Clause, ClauseId, Head, PredApp, Predicate, System, SystemBuilder};
pub use formula::{Atom, Cube, Formula, LinExpr, Model, Rel, Sort, SortError, Value, Var};
pub use rational::Rational;
