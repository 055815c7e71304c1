//! Typed variables and valuations.
//!
//! Every variable is owned by either the environment or the system and ranges
//! over a finite ordered domain of value symbols. Boolean variables are the
//! two-value special case with the domain `[false, true]`.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

/// Which player controls a variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Owner {
    Environment,
    System,
}

impl fmt::Display for Owner {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Owner::Environment => write!(f, "environment"),
            Owner::System => write!(f, "system"),
        }
    }
}

/// Declaration of one variable: name, owner, and its ordered finite domain.
///
/// Domain order is significant. It fixes the enumeration order of valuations
/// and therefore every deterministic tie-break downstream.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VarDecl {
    pub name: String,
    pub owner: Owner,
    pub domain: Vec<String>,
}

impl VarDecl {
    /// Boolean variable with domain `[false, true]`.
    pub fn boolean(name: impl Into<String>, owner: Owner) -> Self {
        VarDecl {
            name: name.into(),
            owner,
            domain: vec!["false".to_string(), "true".to_string()],
        }
    }

    /// Enumerated variable over the given value symbols, in the given order.
    pub fn enumerated<S: Into<String>>(
        name: impl Into<String>,
        owner: Owner,
        values: impl IntoIterator<Item = S>,
    ) -> Self {
        VarDecl {
            name: name.into(),
            owner,
            domain: values.into_iter().map(Into::into).collect(),
        }
    }

    pub fn is_boolean(&self) -> bool {
        self.domain.len() == 2 && self.domain[0] == "false" && self.domain[1] == "true"
    }

    /// Index of a value symbol in the domain, if declared.
    pub fn value_index(&self, value: &str) -> Option<usize> {
        self.domain.iter().position(|v| v == value)
    }
}

/// Total assignment of value symbols to variable names.
///
/// A valuation is typed against whichever variable set it is used with
/// (environment only, system only, or joint); totality over that set is
/// checked at the point of use.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Default, Serialize, Deserialize)]
pub struct Valuation {
    assignment: BTreeMap<String, String>,
}

impl Valuation {
    pub fn new() -> Self {
        Valuation::default()
    }

    pub fn from_pairs<K: Into<String>, V: Into<String>>(
        pairs: impl IntoIterator<Item = (K, V)>,
    ) -> Self {
        Valuation {
            assignment: pairs
                .into_iter()
                .map(|(k, v)| (k.into(), v.into()))
                .collect(),
        }
    }

    pub fn set(&mut self, var: impl Into<String>, value: impl Into<String>) {
        self.assignment.insert(var.into(), value.into());
    }

    pub fn get(&self, var: &str) -> Option<&str> {
        self.assignment.get(var).map(String::as_str)
    }

    /// True iff the Boolean-valued variable is assigned `true`.
    pub fn is_true(&self, var: &str) -> bool {
        self.get(var) == Some("true")
    }

    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.assignment
            .iter()
            .map(|(k, v)| (k.as_str(), v.as_str()))
    }

    /// Merge of two valuations over disjoint variable sets; later entries win
    /// on overlap.
    pub fn union(&self, other: &Valuation) -> Valuation {
        let mut merged = self.clone();
        for (k, v) in other.iter() {
            merged.set(k, v);
        }
        merged
    }

    /// Canonical one-line rendering, `a=x b=y`, sorted by variable name.
    pub fn render(&self) -> String {
        self.assignment
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect::<Vec<_>>()
            .join(" ")
    }
}

impl fmt::Display for Valuation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.render())
    }
}

/// Resolved view of a declaration list: slot and value indices for fast
/// evaluation, plus owner-filtered enumeration.
///
/// Slot order is declaration order; the first declared variable is the most
/// significant digit of the mixed-radix valuation index.
#[derive(Debug, Clone)]
pub struct VarTable {
    decls: Vec<VarDecl>,
    by_name: BTreeMap<String, usize>,
}

impl VarTable {
    pub fn new(decls: &[VarDecl]) -> Self {
        let mut by_name = BTreeMap::new();
        for (i, d) in decls.iter().enumerate() {
            by_name.insert(d.name.clone(), i);
        }
        VarTable {
            decls: decls.to_vec(),
            by_name,
        }
    }

    pub fn decls(&self) -> &[VarDecl] {
        &self.decls
    }

    pub fn len(&self) -> usize {
        self.decls.len()
    }

    pub fn is_empty(&self) -> bool {
        self.decls.is_empty()
    }

    pub fn slot(&self, name: &str) -> Option<usize> {
        self.by_name.get(name).copied()
    }

    pub fn decl(&self, slot: usize) -> &VarDecl {
        &self.decls[slot]
    }

    /// Indices of the variables owned by `owner`, in declaration order.
    pub fn owned_slots(&self, owner: Owner) -> Vec<usize> {
        (0..self.decls.len())
            .filter(|&i| self.decls[i].owner == owner)
            .collect()
    }

    /// Number of distinct valuations over the given slots.
    pub fn space_size(&self, slots: &[usize]) -> usize {
        slots
            .iter()
            .map(|&s| self.decls[s].domain.len())
            .product()
    }

    /// Decode a mixed-radix index over `slots` into per-slot value indices.
    /// The first slot is the most significant digit.
    pub fn decode(&self, slots: &[usize], mut index: usize, out: &mut Vec<u8>) {
        out.clear();
        out.resize(slots.len(), 0);
        for pos in (0..slots.len()).rev() {
            let radix = self.decls[slots[pos]].domain.len();
            out[pos] = (index % radix) as u8;
            index /= radix;
        }
    }

    /// Inverse of [`VarTable::decode`].
    pub fn encode(&self, slots: &[usize], digits: &[u8]) -> usize {
        let mut index = 0usize;
        for (pos, &slot) in slots.iter().enumerate() {
            index = index * self.decls[slot].domain.len() + digits[pos] as usize;
        }
        index
    }

    /// Build a map-based valuation from packed value indices over `slots`.
    pub fn to_valuation(&self, slots: &[usize], digits: &[u8]) -> Valuation {
        let mut v = Valuation::new();
        for (pos, &slot) in slots.iter().enumerate() {
            let d = &self.decls[slot];
            v.set(d.name.clone(), d.domain[digits[pos] as usize].clone());
        }
        v
    }

    /// Pack a map-based valuation into per-slot value indices over `slots`.
    /// Fails if a variable is missing or a value is outside its domain.
    pub fn pack(&self, slots: &[usize], val: &Valuation) -> Result<Vec<u8>, String> {
        let mut digits = Vec::with_capacity(slots.len());
        for &slot in slots {
            let d = &self.decls[slot];
            let value = val
                .get(&d.name)
                .ok_or_else(|| format!("variable `{}` missing from valuation", d.name))?;
            let vi = d
                .value_index(value)
                .ok_or_else(|| format!("value `{}` outside domain of `{}`", value, d.name))?;
            digits.push(vi as u8);
        }
        Ok(digits)
    }
}
