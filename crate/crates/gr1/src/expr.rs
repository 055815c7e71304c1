//! Boolean formula AST with a `next` operator on atoms.
//!
//! Formulas are built from constants, atoms `var = value` (optionally under
//! `next(...)`), negation, conjunction, disjunction, and implication.
//! Disjunction and implication are derivable connectives but are kept as
//! first-class nodes for readability; negation normal form is computed
//! internally where needed.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::vars::{Valuation, VarTable};

/// Formula AST node.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoolExpr {
    True,
    False,
    /// `var = value`, read from the next valuation when `primed` is set.
    Atom {
        var: String,
        value: String,
        primed: bool,
    },
    Not(Box<BoolExpr>),
    And(Box<BoolExpr>, Box<BoolExpr>),
    Or(Box<BoolExpr>, Box<BoolExpr>),
    Implies(Box<BoolExpr>, Box<BoolExpr>),
}

impl BoolExpr {
    /// Unprimed atom `var = true`.
    pub fn var(name: impl Into<String>) -> Self {
        BoolExpr::Atom {
            var: name.into(),
            value: "true".to_string(),
            primed: false,
        }
    }

    /// Unprimed atom `var = value`.
    pub fn eq(name: impl Into<String>, value: impl Into<String>) -> Self {
        BoolExpr::Atom {
            var: name.into(),
            value: value.into(),
            primed: false,
        }
    }

    /// Primed atom `next(var = value)`.
    pub fn next_eq(name: impl Into<String>, value: impl Into<String>) -> Self {
        BoolExpr::Atom {
            var: name.into(),
            value: value.into(),
            primed: true,
        }
    }

    /// Primed atom `next(var)`, shorthand for `next(var = true)`.
    pub fn next_var(name: impl Into<String>) -> Self {
        BoolExpr::next_eq(name, "true")
    }

    #[allow(clippy::should_implement_trait)] // builder-style negation, not an operator
    pub fn not(self) -> Self {
        BoolExpr::Not(Box::new(self))
    }

    pub fn and(self, rhs: BoolExpr) -> Self {
        BoolExpr::And(Box::new(self), Box::new(rhs))
    }

    pub fn or(self, rhs: BoolExpr) -> Self {
        BoolExpr::Or(Box::new(self), Box::new(rhs))
    }

    pub fn implies(self, rhs: BoolExpr) -> Self {
        BoolExpr::Implies(Box::new(self), Box::new(rhs))
    }

    /// Left-fold conjunction of the given formulas; `true` when empty.
    pub fn and_all(exprs: impl IntoIterator<Item = BoolExpr>) -> Self {
        let mut it = exprs.into_iter();
        match it.next() {
            None => BoolExpr::True,
            Some(first) => it.fold(first, BoolExpr::and),
        }
    }

    /// Left-fold disjunction of the given formulas; `false` when empty.
    pub fn or_all(exprs: impl IntoIterator<Item = BoolExpr>) -> Self {
        let mut it = exprs.into_iter();
        match it.next() {
            None => BoolExpr::False,
            Some(first) => it.fold(first, BoolExpr::or),
        }
    }

    /// Visit every atom in the formula.
    pub fn for_each_atom<'a>(&'a self, f: &mut impl FnMut(&'a str, &'a str, bool)) {
        match self {
            BoolExpr::True | BoolExpr::False => {}
            BoolExpr::Atom { var, value, primed } => f(var, value, *primed),
            BoolExpr::Not(e) => e.for_each_atom(f),
            BoolExpr::And(a, b) | BoolExpr::Or(a, b) | BoolExpr::Implies(a, b) => {
                a.for_each_atom(f);
                b.for_each_atom(f);
            }
        }
    }

    /// True iff the formula contains a primed atom.
    pub fn has_primed(&self) -> bool {
        let mut found = false;
        self.for_each_atom(&mut |_, _, primed| found |= primed);
        found
    }
}

const PREC_IMPLIES: u8 = 0;
const PREC_OR: u8 = 1;
const PREC_AND: u8 = 2;
const PREC_NOT: u8 = 3;

fn fmt_prec(e: &BoolExpr, parent: u8, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    let prec = match e {
        BoolExpr::Implies(..) => PREC_IMPLIES,
        BoolExpr::Or(..) => PREC_OR,
        BoolExpr::And(..) => PREC_AND,
        // A bare `var = value` under `!` would read as negating the
        // variable; parenthesize it there (conjunctions already bind the
        // `=` into the atom unambiguously).
        BoolExpr::Atom { value, primed, .. } if !primed && value != "true" => PREC_AND,
        _ => PREC_NOT,
    };
    let parens = prec < parent;
    if parens {
        write!(f, "(")?;
    }
    match e {
        BoolExpr::True => write!(f, "true")?,
        BoolExpr::False => write!(f, "false")?,
        BoolExpr::Atom { var, value, primed } => {
            let body = if value == "true" {
                var.clone()
            } else {
                format!("{var} = {value}")
            };
            if *primed {
                write!(f, "next({body})")?;
            } else {
                write!(f, "{body}")?;
            }
        }
        BoolExpr::Not(inner) => {
            write!(f, "!")?;
            fmt_prec(inner, PREC_NOT, f)?;
        }
        BoolExpr::And(a, b) => {
            // The grammar parses `&` left-associatively, so a right-leaning
            // conjunction needs explicit parentheses to reparse unchanged.
            fmt_prec(a, PREC_AND, f)?;
            write!(f, " & ")?;
            if matches!(**b, BoolExpr::And(..)) {
                write!(f, "(")?;
                fmt_prec(b, PREC_IMPLIES, f)?;
                write!(f, ")")?;
            } else {
                fmt_prec(b, PREC_AND, f)?;
            }
        }
        BoolExpr::Or(a, b) => {
            fmt_prec(a, PREC_OR, f)?;
            write!(f, " | ")?;
            if matches!(**b, BoolExpr::Or(..)) {
                write!(f, "(")?;
                fmt_prec(b, PREC_IMPLIES, f)?;
                write!(f, ")")?;
            } else {
                fmt_prec(b, PREC_OR, f)?;
            }
        }
        BoolExpr::Implies(a, b) => {
            // Right-associative; the left operand needs strictly higher
            // precedence to round-trip.
            fmt_prec(a, PREC_OR, f)?;
            write!(f, " -> ")?;
            fmt_prec(b, PREC_IMPLIES, f)?;
        }
    }
    if parens {
        write!(f, ")")?;
    }
    Ok(())
}

impl fmt::Display for BoolExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_prec(self, PREC_IMPLIES, f)
    }
}

/// Evaluation failure.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("formula contains next(...) atoms but no next valuation was supplied")]
    MissingNext,
    #[error("variable `{0}` absent from valuation")]
    MissingVar(String),
}

/// Classical Boolean evaluation over a current valuation and, for primed
/// atoms, a next valuation.
///
/// `next` must be supplied iff the formula contains primed atoms; primed
/// atoms read from `next`, unprimed atoms from `now`.
pub fn eval_expr(
    expr: &BoolExpr,
    now: &Valuation,
    next: Option<&Valuation>,
) -> Result<bool, EvalError> {
    match expr {
        BoolExpr::True => Ok(true),
        BoolExpr::False => Ok(false),
        BoolExpr::Atom { var, value, primed } => {
            let source = if *primed {
                next.ok_or(EvalError::MissingNext)?
            } else {
                now
            };
            let actual = source
                .get(var)
                .ok_or_else(|| EvalError::MissingVar(var.clone()))?;
            Ok(actual == value)
        }
        BoolExpr::Not(e) => Ok(!eval_expr(e, now, next)?),
        BoolExpr::And(a, b) => Ok(eval_expr(a, now, next)? && eval_expr(b, now, next)?),
        BoolExpr::Or(a, b) => Ok(eval_expr(a, now, next)? || eval_expr(b, now, next)?),
        BoolExpr::Implies(a, b) => Ok(!eval_expr(a, now, next)? || eval_expr(b, now, next)?),
    }
}

/// Formula with atoms resolved to variable slots and value indices, for
/// evaluation over packed valuations without string lookups.
#[derive(Debug, Clone)]
pub enum CompiledExpr {
    True,
    False,
    /// Slot index into the packed joint valuation; reads the next-state
    /// buffer when `primed` is set.
    Atom {
        slot: usize,
        value: u8,
        primed: bool,
    },
    Not(Box<CompiledExpr>),
    And(Box<CompiledExpr>, Box<CompiledExpr>),
    Or(Box<CompiledExpr>, Box<CompiledExpr>),
    Implies(Box<CompiledExpr>, Box<CompiledExpr>),
}

impl CompiledExpr {
    /// Resolve atoms against a variable table. The packed layout must list
    /// variables in the table's declaration order.
    pub fn compile(expr: &BoolExpr, table: &VarTable) -> Result<CompiledExpr, String> {
        Ok(match expr {
            BoolExpr::True => CompiledExpr::True,
            BoolExpr::False => CompiledExpr::False,
            BoolExpr::Atom { var, value, primed } => {
                let slot = table
                    .slot(var)
                    .ok_or_else(|| format!("undeclared variable `{var}`"))?;
                let vi = table
                    .decl(slot)
                    .value_index(value)
                    .ok_or_else(|| format!("value `{value}` outside domain of `{var}`"))?;
                CompiledExpr::Atom {
                    slot,
                    value: vi as u8,
                    primed: *primed,
                }
            }
            BoolExpr::Not(e) => CompiledExpr::Not(Box::new(Self::compile(e, table)?)),
            BoolExpr::And(a, b) => CompiledExpr::And(
                Box::new(Self::compile(a, table)?),
                Box::new(Self::compile(b, table)?),
            ),
            BoolExpr::Or(a, b) => CompiledExpr::Or(
                Box::new(Self::compile(a, table)?),
                Box::new(Self::compile(b, table)?),
            ),
            BoolExpr::Implies(a, b) => CompiledExpr::Implies(
                Box::new(Self::compile(a, table)?),
                Box::new(Self::compile(b, table)?),
            ),
        })
    }

    /// Evaluate over packed per-slot value indices. `next` may be empty only
    /// if the formula has no primed atoms.
    pub fn eval(&self, now: &[u8], next: &[u8]) -> bool {
        match self {
            CompiledExpr::True => true,
            CompiledExpr::False => false,
            CompiledExpr::Atom { slot, value, primed } => {
                let source = if *primed { next } else { now };
                source[*slot] == *value
            }
            CompiledExpr::Not(e) => !e.eval(now, next),
            CompiledExpr::And(a, b) => a.eval(now, next) && b.eval(now, next),
            CompiledExpr::Or(a, b) => a.eval(now, next) || b.eval(now, next),
            CompiledExpr::Implies(a, b) => !a.eval(now, next) || b.eval(now, next),
        }
    }
}
