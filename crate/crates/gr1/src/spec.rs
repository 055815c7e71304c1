//! GR(1) specification container and shape validation.
//!
//! A specification has six parts on each side of the assume-guarantee
//! implication: initial conditions, safety formulas evaluated over
//! (current, next) valuation pairs, and non-empty lists of progress goals.
//! The shape rules restrict where primed atoms may appear:
//!
//! - environment init: unprimed, environment variables only
//! - system init: unprimed, any declared variable
//! - environment safety: primed atoms may mention environment variables only
//! - system safety: primed atoms may mention any declared variable
//! - progress: unprimed only

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::expr::BoolExpr;
use crate::vars::{Owner, Valuation, VarDecl, VarTable};

/// Specification section, used to attribute diagnostics and parse errors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Section {
    Vars,
    EnvInit,
    SysInit,
    EnvSafety,
    SysSafety,
    EnvProgress,
    SysProgress,
}

impl fmt::Display for Section {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Section::Vars => "variable declarations",
            Section::EnvInit => "env_init",
            Section::SysInit => "sys_init",
            Section::EnvSafety => "env_safety",
            Section::SysSafety => "sys_safety",
            Section::EnvProgress => "env_progress",
            Section::SysProgress => "sys_progress",
        };
        write!(f, "{name}")
    }
}

/// One validation finding: the section, the formula index within it (where
/// applicable), and the violated rule.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub section: Section,
    pub index: Option<usize>,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.index {
            Some(i) => write!(f, "{} formula {}: {}", self.section, i, self.message),
            None => write!(f, "{}: {}", self.section, self.message),
        }
    }
}

/// A GR(1) specification: typed variables plus the six formula components.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GR1Spec {
    pub vars: Vec<VarDecl>,
    pub theta_env: BoolExpr,
    pub theta_sys: BoolExpr,
    pub env_safety: Vec<BoolExpr>,
    pub sys_safety: Vec<BoolExpr>,
    pub env_progress: Vec<BoolExpr>,
    pub sys_progress: Vec<BoolExpr>,
}

impl GR1Spec {
    /// Specification with no variables and vacuous parts. Useful as a
    /// starting point for programmatic construction.
    pub fn empty() -> Self {
        GR1Spec {
            vars: Vec::new(),
            theta_env: BoolExpr::True,
            theta_sys: BoolExpr::True,
            env_safety: Vec::new(),
            sys_safety: Vec::new(),
            env_progress: vec![BoolExpr::True],
            sys_progress: vec![BoolExpr::True],
        }
    }

    pub fn var_decl(&self, name: &str) -> Option<&VarDecl> {
        self.vars.iter().find(|d| d.name == name)
    }

    pub fn env_vars(&self) -> impl Iterator<Item = &VarDecl> {
        self.vars.iter().filter(|d| d.owner == Owner::Environment)
    }

    pub fn sys_vars(&self) -> impl Iterator<Item = &VarDecl> {
        self.vars.iter().filter(|d| d.owner == Owner::System)
    }

    /// Resolved variable table in declaration order.
    pub fn table(&self) -> VarTable {
        VarTable::new(&self.vars)
    }

    /// Serialize the parsed AST as pretty JSON, for external tooling.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// The all-false / first-value valuation over the environment variables.
    pub fn default_env_valuation(&self) -> Valuation {
        let mut v = Valuation::new();
        for d in self.env_vars() {
            v.set(d.name.clone(), d.domain[0].clone());
        }
        v
    }
}

/// Atom-level shape errors for a formula placed in `section`.
///
/// `owners` maps declared names to owners; unknown names and out-of-domain
/// values are reported here as well so that programmatic construction gets
/// the same coverage as the parser.
pub(crate) fn shape_errors(
    section: Section,
    expr: &BoolExpr,
    decls: &BTreeMap<String, VarDecl>,
) -> Vec<String> {
    let mut errors = Vec::new();
    expr.for_each_atom(&mut |var, value, primed| {
        let decl = match decls.get(var) {
            Some(d) => d,
            None => {
                errors.push(format!("undeclared variable `{var}`"));
                return;
            }
        };
        if decl.value_index(value).is_none() {
            errors.push(format!(
                "value `{value}` outside domain of `{var}`"
            ));
        }
        let owner = decl.owner;
        match section {
            Section::EnvInit => {
                if primed {
                    errors.push(format!(
                        "env_init must be unprimed, found next({var})"
                    ));
                }
                if owner != Owner::Environment {
                    errors.push(format!(
                        "env_init may mention environment variables only, found `{var}`"
                    ));
                }
            }
            Section::SysInit | Section::EnvProgress | Section::SysProgress => {
                if primed {
                    errors.push(format!(
                        "{section} must be unprimed, found next({var})"
                    ));
                }
            }
            Section::EnvSafety => {
                if primed && owner != Owner::Environment {
                    errors.push(format!(
                        "env_safety may prime environment variables only, found next({var})"
                    ));
                }
            }
            Section::SysSafety | Section::Vars => {}
        }
    });
    errors
}

fn check_section(
    section: Section,
    formulas: &[BoolExpr],
    decls: &BTreeMap<String, VarDecl>,
    out: &mut Vec<Diagnostic>,
) {
    for (i, f) in formulas.iter().enumerate() {
        for message in shape_errors(section, f, decls) {
            out.push(Diagnostic {
                section,
                index: Some(i),
                message,
            });
        }
    }
}

/// Check every GR1Spec invariant and return one diagnostic per violation.
/// An empty list means the specification is well shaped.
pub fn validate_spec(spec: &GR1Spec) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let mut decls: BTreeMap<String, VarDecl> = BTreeMap::new();
    for d in &spec.vars {
        if decls.insert(d.name.clone(), d.clone()).is_some() {
            out.push(Diagnostic {
                section: Section::Vars,
                index: None,
                message: format!("duplicate variable name `{}`", d.name),
            });
        }
        if d.domain.len() < 2 {
            out.push(Diagnostic {
                section: Section::Vars,
                index: None,
                message: format!(
                    "domain of `{}` must have at least 2 values",
                    d.name
                ),
            });
        }
        let mut seen = std::collections::BTreeSet::new();
        for v in &d.domain {
            if !seen.insert(v) {
                out.push(Diagnostic {
                    section: Section::Vars,
                    index: None,
                    message: format!("duplicate value `{}` in domain of `{}`", v, d.name),
                });
            }
        }
    }

    check_section(
        Section::EnvInit,
        std::slice::from_ref(&spec.theta_env),
        &decls,
        &mut out,
    );
    check_section(
        Section::SysInit,
        std::slice::from_ref(&spec.theta_sys),
        &decls,
        &mut out,
    );
    check_section(Section::EnvSafety, &spec.env_safety, &decls, &mut out);
    check_section(Section::SysSafety, &spec.sys_safety, &decls, &mut out);
    check_section(Section::EnvProgress, &spec.env_progress, &decls, &mut out);
    check_section(Section::SysProgress, &spec.sys_progress, &decls, &mut out);

    for (section, list) in [
        (Section::EnvProgress, &spec.env_progress),
        (Section::SysProgress, &spec.sys_progress),
    ] {
        if list.is_empty() {
            out.push(Diagnostic {
                section,
                index: None,
                message: "progress lists must be non-empty (insert `true` to express no goal)"
                    .to_string(),
            });
        }
    }
    out
}
