//! Function-free prenex first-order formulas and weighted knowledge bases.
//!
//! Surface syntax, one formula per line in a `.dfl` file:
//!
//! ```text
//! # weight is optional and defaults to 1
//! 10 forall x, y: chair(x) & partOf(y, x) -> cushion(y) | armRest(y)
//! ```
//!
//! Connectives bind `~` tighter than `&`, `&` tighter than `|`, and `|`
//! tighter than `->`, which groups to the right. A formula without a
//! quantifier prefix is closed only if all its atoms are nullary (`p` or
//! `p()`).

mod kb;
mod parser;

use std::fmt;

use thiserror::Error;

pub use kb::{parse_kb, KnowledgeBase, WeightedFormula};
pub use parser::parse_formula;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Atom {
    pub predicate: String,
    pub args: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Formula {
    ForAll(Vec<String>, Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Not(Box<Formula>),
    Atom(Atom),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LogicErrorKind {
    Syntax,
    Reserved,
    NonPrenex,
    Unbound,
    DuplicateVariable,
    Arity,
    Weight,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{line}:{col}: {message}")]
pub struct LogicError {
    pub kind: LogicErrorKind,
    pub line: usize,
    pub col: usize,
    pub message: String,
}

impl LogicError {
    pub(crate) fn new(kind: LogicErrorKind, line: usize, col: usize, message: impl Into<String>) -> Self {
        LogicError { kind, line, col, message: message.into() }
    }
}

impl Formula {
    pub fn atom(predicate: &str, args: &[&str]) -> Formula {
        Formula::Atom(Atom {
            predicate: predicate.to_string(),
            args: args.iter().map(|s| s.to_string()).collect(),
        })
    }

    pub fn not(f: Formula) -> Formula {
        Formula::Not(Box::new(f))
    }

    pub fn and(l: Formula, r: Formula) -> Formula {
        Formula::And(Box::new(l), Box::new(r))
    }

    pub fn or(l: Formula, r: Formula) -> Formula {
        Formula::Or(Box::new(l), Box::new(r))
    }

    pub fn implies(l: Formula, r: Formula) -> Formula {
        Formula::Implies(Box::new(l), Box::new(r))
    }

    pub fn forall(vars: &[&str], body: Formula) -> Formula {
        Formula::ForAll(vars.iter().map(|s| s.to_string()).collect(), Box::new(body))
    }

    /// The quantifier prefix as a list of blocks, and the body under it.
    pub fn prefix(&self) -> (Vec<&[String]>, &Formula) {
        let mut blocks = Vec::new();
        let mut f = self;
        while let Formula::ForAll(vars, body) = f {
            blocks.push(vars.as_slice());
            f = body;
        }
        (blocks, f)
    }

    /// The quantifier-free body under the prefix.
    pub fn matrix(&self) -> &Formula {
        self.prefix().1
    }

    fn precedence(&self) -> u8 {
        match self {
            Formula::ForAll(..) => 0,
            Formula::Implies(..) => 1,
            Formula::Or(..) => 2,
            Formula::And(..) => 3,
            Formula::Not(..) => 4,
            Formula::Atom(..) => 5,
        }
    }

    /// Atoms in left-to-right order, including repeats.
    pub fn atoms(&self) -> Vec<&Atom> {
        let mut out = Vec::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms<'a>(&'a self, out: &mut Vec<&'a Atom>) {
        match self {
            Formula::Atom(a) => out.push(a),
            Formula::Not(x) | Formula::ForAll(_, x) => x.collect_atoms(out),
            Formula::Implies(l, r) | Formula::And(l, r) | Formula::Or(l, r) => {
                l.collect_atoms(out);
                r.collect_atoms(out);
            }
        }
    }
}

/// Quantified variables in declaration order, and all atoms left to right.
pub fn free_and_bound(f: &Formula) -> (Vec<String>, Vec<Atom>) {
    let (blocks, _) = f.prefix();
    let vars = blocks.iter().flat_map(|b| b.iter().cloned()).collect();
    let atoms = f.atoms().into_iter().cloned().collect();
    (vars, atoms)
}

/// Number of quantified variables.
pub fn quantifier_rank(f: &Formula) -> usize {
    f.prefix().0.iter().map(|b| b.len()).sum()
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.predicate)?;
        if !self.args.is_empty() {
            write!(f, "({})", self.args.join(", "))?;
        }
        Ok(())
    }
}

/// Canonical form: minimal parentheses, `, ` between arguments and single
/// spaces around binary connectives.
impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let child = |f: &mut fmt::Formatter<'_>, x: &Formula, paren: bool| {
            if paren {
                write!(f, "({})", x)
            } else {
                write!(f, "{}", x)
            }
        };
        let p = self.precedence();
        match self {
            Formula::ForAll(vars, body) => write!(f, "forall {}: {}", vars.join(", "), body),
            Formula::Atom(a) => write!(f, "{}", a),
            Formula::Not(x) => {
                f.write_str("~")?;
                child(f, x, x.precedence() < p)
            }
            Formula::Implies(l, r) => {
                child(f, l, l.precedence() <= p)?;
                f.write_str(" -> ")?;
                child(f, r, r.precedence() < p)
            }
            Formula::And(l, r) | Formula::Or(l, r) => {
                child(f, l, l.precedence() < p)?;
                f.write_str(if matches!(self, Formula::And(..)) { " & " } else { " | " })?;
                child(f, r, r.precedence() <= p)
            }
        }
    }
}
