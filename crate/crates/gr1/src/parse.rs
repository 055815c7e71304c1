//! Concrete syntax for GR(1) specifications.
//!
//! The format is line oriented and sectioned:
//!
//! ```text
//! # comment
//! [env_vars]
//! work_zone : bool
//! color : { unknown, red, green }
//!
//! [sys_vars]
//! move_slow : bool
//!
//! [env_init]
//! !work_zone
//!
//! [sys_init]
//! !move_slow
//!
//! [env_safety]
//! [sys_safety]
//! next(work_zone) -> next(move_slow)
//!
//! [env_progress]
//! !work_zone
//!
//! [sys_progress]
//! !move_slow
//! ```
//!
//! One formula per line. Operators in decreasing precedence: `!`, `&`, `|`,
//! `->` (right associative). `next(x)` and `next(x = value)` prime an atom;
//! bare `x` abbreviates `x = true`. Missing sections are treated as empty,
//! and empty progress sections are normalized to the single goal `true`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::expr::BoolExpr;
use crate::spec::{shape_errors, GR1Spec, Section};
use crate::vars::{Owner, VarDecl};

/// Parse failure with a 1-based source position.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}, column {col}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

impl ParseError {
    fn new(line: usize, col: usize, message: impl Into<String>) -> Self {
        ParseError {
            line,
            col,
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum TokKind {
    Ident(String),
    LBrace,
    RBrace,
    LParen,
    RParen,
    Colon,
    Comma,
    Eq,
    Not,
    And,
    Or,
    Arrow,
}

impl TokKind {
    fn describe(&self) -> String {
        match self {
            TokKind::Ident(s) => format!("`{s}`"),
            TokKind::LBrace => "`{`".to_string(),
            TokKind::RBrace => "`}`".to_string(),
            TokKind::LParen => "`(`".to_string(),
            TokKind::RParen => "`)`".to_string(),
            TokKind::Colon => "`:`".to_string(),
            TokKind::Comma => "`,`".to_string(),
            TokKind::Eq => "`=`".to_string(),
            TokKind::Not => "`!`".to_string(),
            TokKind::And => "`&`".to_string(),
            TokKind::Or => "`|`".to_string(),
            TokKind::Arrow => "`->`".to_string(),
        }
    }
}

#[derive(Debug, Clone)]
struct Tok {
    kind: TokKind,
    col: usize,
}

fn tokenize(line: &str, line_no: usize) -> Result<Vec<Tok>, ParseError> {
    let mut toks = Vec::new();
    let chars: Vec<char> = line.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let col = i + 1;
        let c = chars[i];
        match c {
            ' ' | '\t' => i += 1,
            '{' => {
                toks.push(Tok { kind: TokKind::LBrace, col });
                i += 1;
            }
            '}' => {
                toks.push(Tok { kind: TokKind::RBrace, col });
                i += 1;
            }
            '(' => {
                toks.push(Tok { kind: TokKind::LParen, col });
                i += 1;
            }
            ')' => {
                toks.push(Tok { kind: TokKind::RParen, col });
                i += 1;
            }
            ':' => {
                toks.push(Tok { kind: TokKind::Colon, col });
                i += 1;
            }
            ',' => {
                toks.push(Tok { kind: TokKind::Comma, col });
                i += 1;
            }
            '=' => {
                toks.push(Tok { kind: TokKind::Eq, col });
                i += 1;
            }
            '!' => {
                toks.push(Tok { kind: TokKind::Not, col });
                i += 1;
            }
            '&' => {
                toks.push(Tok { kind: TokKind::And, col });
                i += 1;
            }
            '|' => {
                toks.push(Tok { kind: TokKind::Or, col });
                i += 1;
            }
            '-' => {
                if chars.get(i + 1) == Some(&'>') {
                    toks.push(Tok { kind: TokKind::Arrow, col });
                    i += 2;
                } else {
                    return Err(ParseError::new(line_no, col, "expected `->` after `-`"));
                }
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < chars.len()
                    && (chars[i].is_ascii_alphanumeric() || chars[i] == '_')
                {
                    i += 1;
                }
                let ident: String = chars[start..i].iter().collect();
                toks.push(Tok {
                    kind: TokKind::Ident(ident),
                    col,
                });
            }
            other => {
                return Err(ParseError::new(
                    line_no,
                    col,
                    format!("unexpected character `{other}`"),
                ));
            }
        }
    }
    Ok(toks)
}

struct FormulaParser<'a> {
    toks: &'a [Tok],
    pos: usize,
    line: usize,
}

impl<'a> FormulaParser<'a> {
    fn peek(&self) -> Option<&TokKind> {
        self.toks.get(self.pos).map(|t| &t.kind)
    }

    fn col(&self) -> usize {
        self.toks
            .get(self.pos)
            .map(|t| t.col)
            .unwrap_or_else(|| self.toks.last().map(|t| t.col + 1).unwrap_or(1))
    }

    fn bump(&mut self) -> Option<&'a Tok> {
        let t = self.toks.get(self.pos);
        self.pos += 1;
        t
    }

    fn expect(&mut self, kind: &TokKind) -> Result<(), ParseError> {
        match self.toks.get(self.pos) {
            Some(t) if &t.kind == kind => {
                self.pos += 1;
                Ok(())
            }
            Some(t) => Err(ParseError::new(
                self.line,
                t.col,
                format!("expected {}, found {}", kind.describe(), t.kind.describe()),
            )),
            None => Err(ParseError::new(
                self.line,
                self.col(),
                format!("expected {}, found end of line", kind.describe()),
            )),
        }
    }

    fn parse_implication(&mut self) -> Result<BoolExpr, ParseError> {
        let lhs = self.parse_disjunction()?;
        if self.peek() == Some(&TokKind::Arrow) {
            self.bump();
            let rhs = self.parse_implication()?;
            Ok(lhs.implies(rhs))
        } else {
            Ok(lhs)
        }
    }

    fn parse_disjunction(&mut self) -> Result<BoolExpr, ParseError> {
        let mut e = self.parse_conjunction()?;
        while self.peek() == Some(&TokKind::Or) {
            self.bump();
            e = e.or(self.parse_conjunction()?);
        }
        Ok(e)
    }

    fn parse_conjunction(&mut self) -> Result<BoolExpr, ParseError> {
        let mut e = self.parse_negation()?;
        while self.peek() == Some(&TokKind::And) {
            self.bump();
            e = e.and(self.parse_negation()?);
        }
        Ok(e)
    }

    fn parse_negation(&mut self) -> Result<BoolExpr, ParseError> {
        if self.peek() == Some(&TokKind::Not) {
            self.bump();
            Ok(self.parse_negation()?.not())
        } else {
            self.parse_primary()
        }
    }

    /// Atom body inside or outside `next(...)`: `var` or `var = value`.
    fn parse_atom_body(&mut self, primed: bool) -> Result<BoolExpr, ParseError> {
        let (var, col) = match self.bump() {
            Some(Tok {
                kind: TokKind::Ident(name),
                col,
            }) => (name.clone(), *col),
            Some(t) => {
                return Err(ParseError::new(
                    self.line,
                    t.col,
                    format!("expected a variable name, found {}", t.kind.describe()),
                ))
            }
            None => {
                return Err(ParseError::new(
                    self.line,
                    self.col(),
                    "expected a variable name, found end of line",
                ))
            }
        };
        if var == "true" || var == "false" {
            return Err(ParseError::new(
                self.line,
                col,
                format!("`{var}` is a constant, not a variable"),
            ));
        }
        let value = if self.peek() == Some(&TokKind::Eq) {
            self.bump();
            match self.bump() {
                Some(Tok {
                    kind: TokKind::Ident(v),
                    ..
                }) => v.clone(),
                Some(t) => {
                    return Err(ParseError::new(
                        self.line,
                        t.col,
                        format!("expected a value symbol, found {}", t.kind.describe()),
                    ))
                }
                None => {
                    return Err(ParseError::new(
                        self.line,
                        self.col(),
                        "expected a value symbol, found end of line",
                    ))
                }
            }
        } else {
            "true".to_string()
        };
        Ok(BoolExpr::Atom { var, value, primed })
    }

    fn parse_primary(&mut self) -> Result<BoolExpr, ParseError> {
        match self.peek() {
            Some(TokKind::LParen) => {
                self.bump();
                let e = self.parse_implication()?;
                self.expect(&TokKind::RParen)?;
                Ok(e)
            }
            Some(TokKind::Ident(name)) if name == "true" => {
                self.bump();
                Ok(BoolExpr::True)
            }
            Some(TokKind::Ident(name)) if name == "false" => {
                self.bump();
                Ok(BoolExpr::False)
            }
            Some(TokKind::Ident(name)) if name == "next" => {
                self.bump();
                self.expect(&TokKind::LParen)?;
                let atom = self.parse_atom_body(true)?;
                self.expect(&TokKind::RParen)?;
                Ok(atom)
            }
            Some(TokKind::Ident(_)) => self.parse_atom_body(false),
            Some(other) => Err(ParseError::new(
                self.line,
                self.col(),
                format!("expected a formula, found {}", other.describe()),
            )),
            None => Err(ParseError::new(
                self.line,
                self.col(),
                "expected a formula, found end of line",
            )),
        }
    }
}

fn parse_formula_line(line: &str, line_no: usize) -> Result<BoolExpr, ParseError> {
    let toks = tokenize(line, line_no)?;
    let mut p = FormulaParser {
        toks: &toks,
        pos: 0,
        line: line_no,
    };
    let e = p.parse_implication()?;
    if let Some(t) = p.toks.get(p.pos) {
        return Err(ParseError::new(
            line_no,
            t.col,
            format!("unexpected trailing {}", t.kind.describe()),
        ));
    }
    Ok(e)
}

fn parse_var_line(
    line: &str,
    line_no: usize,
    owner: Owner,
) -> Result<VarDecl, ParseError> {
    let toks = tokenize(line, line_no)?;
    let mut p = FormulaParser {
        toks: &toks,
        pos: 0,
        line: line_no,
    };
    let name = match p.bump() {
        Some(Tok {
            kind: TokKind::Ident(n),
            ..
        }) => n.clone(),
        _ => {
            return Err(ParseError::new(
                line_no,
                1,
                "expected a variable declaration `name : bool` or `name : { v1, v2 }`",
            ))
        }
    };
    p.expect(&TokKind::Colon)?;
    let decl = match p.peek() {
        Some(TokKind::Ident(kw)) if kw == "bool" => {
            p.bump();
            VarDecl::boolean(name, owner)
        }
        Some(TokKind::LBrace) => {
            p.bump();
            let mut values = Vec::new();
            loop {
                match p.bump() {
                    Some(Tok {
                        kind: TokKind::Ident(v),
                        ..
                    }) => values.push(v.clone()),
                    Some(t) => {
                        return Err(ParseError::new(
                            line_no,
                            t.col,
                            format!("expected a value symbol, found {}", t.kind.describe()),
                        ))
                    }
                    None => {
                        return Err(ParseError::new(
                            line_no,
                            p.col(),
                            "expected a value symbol, found end of line",
                        ))
                    }
                }
                match p.peek() {
                    Some(TokKind::Comma) => {
                        p.bump();
                    }
                    Some(TokKind::RBrace) => {
                        p.bump();
                        break;
                    }
                    _ => {
                        return Err(ParseError::new(
                            line_no,
                            p.col(),
                            "expected `,` or `}` in domain list",
                        ))
                    }
                }
            }
            VarDecl::enumerated(name, owner, values)
        }
        _ => {
            return Err(ParseError::new(
                line_no,
                p.col(),
                "expected `bool` or a `{ v1, v2 }` domain",
            ))
        }
    };
    if let Some(t) = p.toks.get(p.pos) {
        return Err(ParseError::new(
            line_no,
            t.col,
            format!("unexpected trailing {}", t.kind.describe()),
        ));
    }
    if decl.domain.len() < 2 {
        return Err(ParseError::new(
            line_no,
            1,
            format!("domain of `{}` must have at least 2 values", decl.name),
        ));
    }
    let mut seen = std::collections::BTreeSet::new();
    for v in &decl.domain {
        if !seen.insert(v.clone()) {
            return Err(ParseError::new(
                line_no,
                1,
                format!("duplicate value `{}` in domain of `{}`", v, decl.name),
            ));
        }
    }
    Ok(decl)
}

const SECTION_NAMES: [(&str, usize); 8] = [
    ("env_vars", 0),
    ("sys_vars", 1),
    ("env_init", 2),
    ("sys_init", 3),
    ("env_safety", 4),
    ("sys_safety", 5),
    ("env_progress", 6),
    ("sys_progress", 7),
];

/// Parse a specification document. Section order is free, missing sections
/// are empty, and every formula is shape-checked against its section.
pub fn parse_spec(text: &str) -> Result<GR1Spec, ParseError> {
    let mut sections: [Vec<(usize, String)>; 8] = Default::default();
    let mut seen = [false; 8];
    let mut current: Option<usize> = None;

    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if content.starts_with('[') {
            if !content.ends_with(']') {
                return Err(ParseError::new(line_no, 1, "unterminated section header"));
            }
            let name = &content[1..content.len() - 1];
            let idx = SECTION_NAMES
                .iter()
                .find(|(n, _)| *n == name)
                .map(|(_, i)| *i)
                .ok_or_else(|| {
                    ParseError::new(line_no, 1, format!("unknown section `[{name}]`"))
                })?;
            if seen[idx] {
                return Err(ParseError::new(
                    line_no,
                    1,
                    format!("duplicate section `[{name}]`"),
                ));
            }
            seen[idx] = true;
            current = Some(idx);
            continue;
        }
        match current {
            Some(idx) => sections[idx].push((line_no, content.to_string())),
            None => {
                return Err(ParseError::new(
                    line_no,
                    1,
                    "content before the first section header",
                ))
            }
        }
    }

    let mut vars = Vec::new();
    let mut decls: BTreeMap<String, VarDecl> = BTreeMap::new();
    for (section_idx, owner) in [(0usize, Owner::Environment), (1, Owner::System)] {
        for (line_no, line) in &sections[section_idx] {
            let decl = parse_var_line(line, *line_no, owner)?;
            if decls.contains_key(&decl.name) {
                return Err(ParseError::new(
                    *line_no,
                    1,
                    format!("duplicate variable name `{}`", decl.name),
                ));
            }
            decls.insert(decl.name.clone(), decl.clone());
            vars.push(decl);
        }
    }

    let parse_section = |section_idx: usize,
                             section: Section|
     -> Result<Vec<BoolExpr>, ParseError> {
        let mut out = Vec::new();
        for (line_no, line) in &sections[section_idx] {
            let formula = parse_formula_line(line, *line_no)?;
            if let Some(message) = shape_errors(section, &formula, &decls).into_iter().next() {
                return Err(ParseError::new(*line_no, 1, message));
            }
            out.push(formula);
        }
        Ok(out)
    };

    let env_init = parse_section(2, Section::EnvInit)?;
    let sys_init = parse_section(3, Section::SysInit)?;
    let env_safety = parse_section(4, Section::EnvSafety)?;
    let sys_safety = parse_section(5, Section::SysSafety)?;
    let mut env_progress = parse_section(6, Section::EnvProgress)?;
    let mut sys_progress = parse_section(7, Section::SysProgress)?;

    // K >= 1 goals on each side keeps the recurrence conjunction well defined.
    if env_progress.is_empty() {
        env_progress.push(BoolExpr::True);
    }
    if sys_progress.is_empty() {
        sys_progress.push(BoolExpr::True);
    }

    Ok(GR1Spec {
        vars,
        theta_env: BoolExpr::and_all(env_init),
        theta_sys: BoolExpr::and_all(sys_init),
        env_safety,
        sys_safety,
        env_progress,
        sys_progress,
    })
}

fn print_var(out: &mut String, d: &VarDecl) {
    if d.is_boolean() {
        let _ = writeln!(out, "{} : bool", d.name);
    } else {
        let _ = writeln!(out, "{} : {{ {} }}", d.name, d.domain.join(", "));
    }
}

/// Deterministic pretty-printer. `parse_spec(print_spec(s))` reproduces `s`
/// up to the normalization already applied by parsing (init conjunction
/// folding and progress defaulting), so parse-print-parse is stable.
pub fn print_spec(spec: &GR1Spec) -> String {
    let mut out = String::new();
    out.push_str("[env_vars]\n");
    for d in spec.env_vars() {
        print_var(&mut out, d);
    }
    out.push_str("\n[sys_vars]\n");
    for d in spec.sys_vars() {
        print_var(&mut out, d);
    }
    out.push_str("\n[env_init]\n");
    if spec.theta_env != BoolExpr::True {
        let _ = writeln!(out, "{}", spec.theta_env);
    }
    out.push_str("\n[sys_init]\n");
    if spec.theta_sys != BoolExpr::True {
        let _ = writeln!(out, "{}", spec.theta_sys);
    }
    out.push_str("\n[env_safety]\n");
    for f in &spec.env_safety {
        let _ = writeln!(out, "{f}");
    }
    out.push_str("\n[sys_safety]\n");
    for f in &spec.sys_safety {
        let _ = writeln!(out, "{f}");
    }
    out.push_str("\n[env_progress]\n");
    for f in &spec.env_progress {
        let _ = writeln!(out, "{f}");
    }
    out.push_str("\n[sys_progress]\n");
    for f in &spec.sys_progress {
        let _ = writeln!(out, "{f}");
    }
    out
}
