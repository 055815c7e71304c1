//! Refinement trees over environment detection variables.
//!
//! A refinement tree orders perception variables from coarse to fine: the
//! root states that some object is present, children refine their parent
//! with more detail, and leaves name fully identified objects. The module
//! validates tree shape, splits nodes into ground (leaf) and derived
//! (internal) variables, and compiles two families of environment safety
//! constraints:
//!
//! * [`compile_persistence`]: a detection never disappears, it either stays
//!   or refines to a child, and a refinement keeps its ancestors asserted.
//! * [`compile_pipeline`]: objects seen in a corridor of perception cells
//!   advance one cell per step toward the ego while refining down the tree.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::BoolExpr;

/// Tree construction or compilation failure.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TreeError {
    #[error("tree has no nodes")]
    Empty,
    #[error("duplicate node `{0}`")]
    DuplicateNode(String),
    #[error("edge endpoint `{0}` is not a declared node")]
    UnknownNode(String),
    #[error("node `{0}` has multiple parents")]
    MultipleParents(String),
    #[error("multiple roots: `{first}` and `{second}`")]
    MultipleRoots { first: String, second: String },
    #[error("node `{0}` is disconnected from the rest of the tree")]
    Disconnected(String),
    #[error("cycle through node `{0}`")]
    Cycle(String),
    #[error("declared root `{declared}` but edges give root `{computed}`")]
    RootMismatch { declared: String, computed: String },
    #[error("tree document: {0}")]
    Json(String),
    #[error("cell {index}: {message}")]
    CellDomain { index: usize, message: String },
    #[error("cell layout: {0}")]
    CellLayout(String),
}

/// Directed tree over detection variable names.
///
/// Node and child order follow declaration order, which makes every
/// compiled formula list deterministic.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RefinementTree {
    names: Vec<String>,
    index: BTreeMap<String, usize>,
    parent: Vec<Option<usize>>,
    children: Vec<Vec<usize>>,
    root: usize,
}

/// Ground (leaf) and derived (internal) variables of a tree, in node
/// declaration order. The two sets are disjoint and cover every node.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariablePartition {
    pub ground: Vec<String>,
    pub derived: Vec<String>,
}

/// One cell of the ego-frame perception corridor. Cell 1 is nearest, and
/// the cell variable is named `o<index>`. `domain` lists the values the
/// cell may report; it must contain `empty` plus tree nodes of one depth.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PerceptionCell {
    pub index: usize,
    pub domain: Vec<String>,
}

/// The domain value meaning "nothing detected in this cell".
pub const EMPTY_CELL: &str = "empty";

impl PerceptionCell {
    pub fn new(index: usize, domain: Vec<String>) -> Self {
        PerceptionCell { index, domain }
    }

    /// Name of the environment variable carrying this cell's content.
    pub fn var_name(&self) -> String {
        format!("o{}", self.index)
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct TreeDoc {
    nodes: Vec<String>,
    edges: Vec<(String, String)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    root: Option<String>,
}

/// Validate nodes and parent-child edges into a tree.
pub fn build_tree<S: AsRef<str>>(
    nodes: &[S],
    edges: &[(S, S)],
) -> Result<RefinementTree, TreeError> {
    if nodes.is_empty() {
        return Err(TreeError::Empty);
    }
    let names: Vec<String> = nodes.iter().map(|s| s.as_ref().to_string()).collect();
    let mut index = BTreeMap::new();
    for (i, name) in names.iter().enumerate() {
        if index.insert(name.clone(), i).is_some() {
            return Err(TreeError::DuplicateNode(name.clone()));
        }
    }
    let mut parent: Vec<Option<usize>> = vec![None; names.len()];
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); names.len()];
    for (p, c) in edges {
        let p = *index
            .get(p.as_ref())
            .ok_or_else(|| TreeError::UnknownNode(p.as_ref().to_string()))?;
        let c = *index
            .get(c.as_ref())
            .ok_or_else(|| TreeError::UnknownNode(c.as_ref().to_string()))?;
        if parent[c].is_some() {
            return Err(TreeError::MultipleParents(names[c].clone()));
        }
        parent[c] = Some(p);
        children[p].push(c);
    }

    let roots: Vec<usize> = (0..names.len()).filter(|&i| parent[i].is_none()).collect();
    match roots.as_slice() {
        [] => {
            // Every node has a parent, so some edge closes a cycle.
            return Err(TreeError::Cycle(names[0].clone()));
        }
        [_] => {}
        [first, rest @ ..] => {
            // An isolated extra root reads better as a disconnection.
            let second = rest[0];
            if children[second].is_empty() {
                return Err(TreeError::Disconnected(names[second].clone()));
            }
            return Err(TreeError::MultipleRoots {
                first: names[*first].clone(),
                second: names[second].clone(),
            });
        }
    }
    let root = roots[0];

    // Reachability from the root; unreachable nodes all have parents, so
    // they sit on or below a cycle.
    let mut seen = vec![false; names.len()];
    let mut stack = vec![root];
    while let Some(v) = stack.pop() {
        if seen[v] {
            continue;
        }
        seen[v] = true;
        stack.extend(children[v].iter().copied());
    }
    if let Some(v) = (0..names.len()).find(|&i| !seen[i]) {
        return Err(TreeError::Cycle(names[v].clone()));
    }

    Ok(RefinementTree {
        names,
        index,
        parent,
        children,
        root,
    })
}

impl RefinementTree {
    pub fn node_count(&self) -> usize {
        self.names.len()
    }

    pub fn root_name(&self) -> &str {
        &self.names[self.root]
    }

    pub fn contains(&self, name: &str) -> bool {
        self.index.contains_key(name)
    }

    /// Node names in declaration order.
    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.names.iter().map(|s| s.as_str())
    }

    pub fn parent_of(&self, name: &str) -> Option<&str> {
        let i = *self.index.get(name)?;
        self.parent[i].map(|p| self.names[p].as_str())
    }

    pub fn children_of(&self, name: &str) -> Vec<&str> {
        match self.index.get(name) {
            Some(&i) => self.children[i]
                .iter()
                .map(|&c| self.names[c].as_str())
                .collect(),
            None => Vec::new(),
        }
    }

    pub fn is_leaf(&self, name: &str) -> bool {
        self.index
            .get(name)
            .map(|&i| self.children[i].is_empty())
            .unwrap_or(false)
    }

    /// Edge distance from the root; the root has depth 0.
    pub fn depth(&self, name: &str) -> Option<usize> {
        let mut i = *self.index.get(name)?;
        let mut d = 0;
        while let Some(p) = self.parent[i] {
            i = p;
            d += 1;
        }
        Some(d)
    }

    /// The node plus its full subtree, in declaration-order DFS.
    pub fn descendants_or_self(&self, name: &str) -> Vec<&str> {
        let mut out = Vec::new();
        let Some(&start) = self.index.get(name) else {
            return out;
        };
        let mut stack = vec![start];
        while let Some(v) = stack.pop() {
            out.push(self.names[v].as_str());
            for &c in self.children[v].iter().rev() {
                stack.push(c);
            }
        }
        out
    }

    pub fn to_json(&self) -> String {
        let doc = TreeDoc {
            nodes: self.names.clone(),
            edges: self
                .names
                .iter()
                .enumerate()
                .flat_map(|(i, _)| {
                    self.children[i]
                        .iter()
                        .map(move |&c| (self.names[i].clone(), self.names[c].clone()))
                })
                .collect(),
            root: Some(self.root_name().to_string()),
        };
        serde_json::to_string_pretty(&doc).expect("tree doc serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, TreeError> {
        let doc: TreeDoc =
            serde_json::from_str(text).map_err(|e| TreeError::Json(e.to_string()))?;
        let tree = build_tree(&doc.nodes, &doc.edges)?;
        if let Some(declared) = doc.root {
            if declared != tree.root_name() {
                return Err(TreeError::RootMismatch {
                    declared,
                    computed: tree.root_name().to_string(),
                });
            }
        }
        Ok(tree)
    }

    /// Graphviz rendering of the tree, edges parent to child.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph refinement_tree {\n  rankdir=TB;\n");
        for name in &self.names {
            let _ = writeln!(out, "  \"{name}\";");
        }
        for (i, kids) in self.children.iter().enumerate() {
            for &c in kids {
                let _ = writeln!(out, "  \"{}\" -> \"{}\";", self.names[i], self.names[c]);
            }
        }
        out.push_str("}\n");
        out
    }
}

/// Split nodes into ground (leaf) and derived (internal) variables.
pub fn partition(tree: &RefinementTree) -> VariablePartition {
    let mut ground = Vec::new();
    let mut derived = Vec::new();
    for name in tree.names() {
        if tree.is_leaf(name) {
            ground.push(name.to_string());
        } else {
            derived.push(name.to_string());
        }
    }
    VariablePartition { ground, derived }
}

/// Compile the persistence assumption over one tracked object.
///
/// Each node is a Boolean environment atom. For every node `v`, once true
/// it stays true or a child becomes true (`v -> next(v) | next(c1) | ...`,
/// ground nodes just `v -> next(v)`); and every node true in the next step
/// keeps its parent true (`next(c) -> next(parent)`), so refinements keep
/// their ancestors asserted. A k-node tree yields 2k-1 formulas.
pub fn compile_persistence(tree: &RefinementTree) -> Vec<BoolExpr> {
    let mut out = Vec::new();
    for v in tree.names() {
        let mut succ = vec![BoolExpr::next_var(v)];
        succ.extend(tree.children_of(v).iter().map(|c| BoolExpr::next_var(*c)));
        out.push(BoolExpr::var(v).implies(BoolExpr::or_all(succ)));
    }
    for v in tree.names() {
        if let Some(p) = tree.parent_of(v) {
            out.push(BoolExpr::next_var(v).implies(BoolExpr::next_var(p)));
        }
    }
    out
}

/// Compile the corridor advance-and-refine constraints.
///
/// Cells must form a contiguous index range; each domain holds
/// [`EMPTY_CELL`] plus tree nodes of a single depth, and the next-nearer
/// cell's depth may stay or grow by one. For each cell `i` with a nearer
/// neighbour and each value `v` of its domain, the compiled constraint is
/// `(o_i = v) -> next(o_{i-1} = w1 | o_{i-1} = w2 | ...)` where the `w`
/// are `v` or its descendants present in the nearer domain (`empty` maps
/// to `empty`). The nearest cell's content leaves the corridor unconstrained.
pub fn compile_pipeline(
    cells: &[PerceptionCell],
    tree: &RefinementTree,
) -> Result<Vec<BoolExpr>, TreeError> {
    if cells.is_empty() {
        return Err(TreeError::CellLayout("no cells given".to_string()));
    }
    let mut ordered: Vec<&PerceptionCell> = cells.iter().collect();
    ordered.sort_by_key(|c| c.index);
    for w in ordered.windows(2) {
        if w[0].index == w[1].index {
            return Err(TreeError::CellLayout(format!(
                "duplicate cell index {}",
                w[0].index
            )));
        }
        if w[0].index + 1 != w[1].index {
            return Err(TreeError::CellLayout(format!(
                "cell indices must be contiguous, {} jumps to {}",
                w[0].index, w[1].index
            )));
        }
    }

    // Per-cell checks: empty present, values are tree nodes of one depth.
    let mut depth_of_cell: BTreeMap<usize, usize> = BTreeMap::new();
    for cell in &ordered {
        let mut seen = BTreeSet::new();
        for v in &cell.domain {
            if !seen.insert(v.as_str()) {
                return Err(TreeError::CellDomain {
                    index: cell.index,
                    message: format!("duplicate value `{v}`"),
                });
            }
        }
        if !seen.contains(EMPTY_CELL) {
            return Err(TreeError::CellDomain {
                index: cell.index,
                message: format!("domain must contain `{EMPTY_CELL}`"),
            });
        }
        let mut depth = None;
        for v in &cell.domain {
            if v == EMPTY_CELL {
                continue;
            }
            let d = tree.depth(v).ok_or_else(|| TreeError::CellDomain {
                index: cell.index,
                message: format!("value `{v}` is not a tree node"),
            })?;
            match depth {
                None => depth = Some(d),
                Some(prev) if prev != d => {
                    return Err(TreeError::CellDomain {
                        index: cell.index,
                        message: format!(
                            "values at mixed tree depths ({prev} and {d})"
                        ),
                    })
                }
                Some(_) => {}
            }
        }
        let depth = depth.ok_or_else(|| TreeError::CellDomain {
            index: cell.index,
            message: "domain holds no tree value".to_string(),
        })?;
        depth_of_cell.insert(cell.index, depth);
    }
    for w in ordered.windows(2) {
        let near = depth_of_cell[&w[0].index];
        let far = depth_of_cell[&w[1].index];
        if near != far && near != far + 1 {
            return Err(TreeError::CellLayout(format!(
                "cell {} at depth {} cannot feed cell {} at depth {}",
                w[1].index, far, w[0].index, near
            )));
        }
    }

    let mut out = Vec::new();
    for pair in ordered.windows(2).rev() {
        let (near, far) = (pair[0], pair[1]);
        let far_var = far.var_name();
        let near_var = near.var_name();
        for v in &far.domain {
            let targets: Vec<&str> = if v == EMPTY_CELL {
                vec![EMPTY_CELL]
            } else {
                let allowed: BTreeSet<&str> =
                    tree.descendants_or_self(v).into_iter().collect();
                near.domain
                    .iter()
                    .map(|w| w.as_str())
                    .filter(|w| *w != EMPTY_CELL && allowed.contains(w))
                    .collect()
            };
            if targets.is_empty() {
                return Err(TreeError::CellDomain {
                    index: far.index,
                    message: format!(
                        "value `{v}` has no refinement in cell {}",
                        near.index
                    ),
                });
            }
            let next = BoolExpr::or_all(
                targets
                    .iter()
                    .map(|w| BoolExpr::next_eq(&near_var, *w))
                    .collect::<Vec<_>>(),
            );
            out.push(BoolExpr::eq(&far_var, v).implies(next));
        }
    }
    Ok(out)
}
