//! Weighted transition systems and the corridor motion abstraction.
//!
//! A [`TransitionSystem`] is a finite weighted graph with an initial state
//! and a propositional labeling. A [`CellCorridor`] is the 1-D ego-frame
//! cell decomposition the scenarios run on: cells `c0..c{n-1}` with
//! adjacency moves and stationary self-loops, a designated target cell,
//! and positive transition weights (unit by default). The corridor induces
//! [`performance`], the minimum weight needed to travel from a detection
//! cell to the target, and [`movement_abstraction`], the pair-state system
//! whose states are corridor transitions labeled moving or stationary.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Motion model construction or query failure.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum MotionError {
    #[error("duplicate state `{0}`")]
    DuplicateState(String),
    #[error("unknown state `{0}`")]
    UnknownState(String),
    #[error("initial state `{0}` is not a declared state")]
    UnknownInitial(String),
    #[error("transition `{from}` -> `{to}` declared twice")]
    DuplicateTransition { from: String, to: String },
    #[error("transition `{from}` -> `{to}` has non-positive weight {weight}")]
    NonPositiveWeight { from: String, to: String, weight: f64 },
    #[error("state `{state}` is labeled with undeclared proposition `{prop}`")]
    UnknownProposition { state: String, prop: String },
    #[error("trajectory is empty")]
    EmptyTrajectory,
    #[error("trajectory step {index}: `{from}` -> `{to}` is not a transition")]
    NotATransition { index: usize, from: String, to: String },
    #[error("`{to}` is unreachable from `{from}`")]
    Unreachable { from: String, to: String },
    #[error("corridor: {0}")]
    Corridor(String),
    #[error("corridor description: {0}")]
    Json(String),
}

#[derive(Debug, Serialize, Deserialize)]
struct TsDoc {
    states: Vec<String>,
    initial: String,
    #[serde(default)]
    props: Vec<String>,
    #[serde(default)]
    labels: Vec<(String, Vec<String>)>,
    #[serde(default)]
    transitions: Vec<(String, String, f64)>,
}

/// Finite weighted deterministic transition system with labeled states.
#[derive(Debug, Clone)]
pub struct TransitionSystem {
    states: Vec<String>,
    index: BTreeMap<String, usize>,
    initial: usize,
    props: Vec<String>,
    labels: Vec<BTreeSet<String>>,
    succ: Vec<Vec<(usize, f64)>>,
}

impl TransitionSystem {
    /// Validate and build. Transition weights must be finite and positive;
    /// states left out of `labels` carry the empty label.
    pub fn new(
        states: Vec<String>,
        initial: &str,
        transitions: Vec<(String, String, f64)>,
        props: Vec<String>,
        labels: Vec<(String, Vec<String>)>,
    ) -> Result<Self, MotionError> {
        let mut index = BTreeMap::new();
        for (i, s) in states.iter().enumerate() {
            if index.insert(s.clone(), i).is_some() {
                return Err(MotionError::DuplicateState(s.clone()));
            }
        }
        let initial = *index
            .get(initial)
            .ok_or_else(|| MotionError::UnknownInitial(initial.to_string()))?;
        let prop_set: BTreeSet<&str> = props.iter().map(String::as_str).collect();
        let mut label_sets = vec![BTreeSet::new(); states.len()];
        for (state, ps) in labels {
            let i = *index
                .get(&state)
                .ok_or_else(|| MotionError::UnknownState(state.clone()))?;
            for p in ps {
                if !prop_set.contains(p.as_str()) {
                    return Err(MotionError::UnknownProposition { state, prop: p });
                }
                label_sets[i].insert(p);
            }
        }
        let mut succ: Vec<Vec<(usize, f64)>> = vec![Vec::new(); states.len()];
        for (from, to, w) in transitions {
            let a = *index
                .get(&from)
                .ok_or_else(|| MotionError::UnknownState(from.clone()))?;
            let b = *index
                .get(&to)
                .ok_or_else(|| MotionError::UnknownState(to.clone()))?;
            if !(w.is_finite() && w > 0.0) {
                return Err(MotionError::NonPositiveWeight {
                    from,
                    to,
                    weight: w,
                });
            }
            if succ[a].iter().any(|&(t, _)| t == b) {
                return Err(MotionError::DuplicateTransition { from, to });
            }
            succ[a].push((b, w));
        }
        for list in &mut succ {
            list.sort_by_key(|&(t, _)| t);
        }
        Ok(TransitionSystem {
            states,
            index,
            initial,
            props,
            labels: label_sets,
            succ,
        })
    }

    pub fn state_count(&self) -> usize {
        self.states.len()
    }

    pub fn state_name(&self, i: usize) -> &str {
        &self.states[i]
    }

    pub fn state_index(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn initial_state(&self) -> &str {
        &self.states[self.initial]
    }

    pub fn propositions(&self) -> &[String] {
        &self.props
    }

    /// Successors of a state, sorted by state index.
    pub fn successors(&self, i: usize) -> &[(usize, f64)] {
        &self.succ[i]
    }

    pub fn weight(&self, from: usize, to: usize) -> Option<f64> {
        self.succ[from]
            .iter()
            .find(|&&(t, _)| t == to)
            .map(|&(_, w)| w)
    }

    pub fn label(&self, i: usize) -> &BTreeSet<String> {
        &self.labels[i]
    }

    /// Labels of a state trajectory; same length, `o_k = h(x_k)`.
    pub fn output_trajectory<S: AsRef<str>>(
        &self,
        xs: &[S],
    ) -> Result<Vec<BTreeSet<String>>, MotionError> {
        xs.iter()
            .map(|s| {
                let i = self
                    .state_index(s.as_ref())
                    .ok_or_else(|| MotionError::UnknownState(s.as_ref().to_string()))?;
                Ok(self.labels[i].clone())
            })
            .collect()
    }

    pub fn to_json(&self) -> String {
        let doc = TsDoc {
            states: self.states.clone(),
            initial: self.initial_state().to_string(),
            props: self.props.clone(),
            labels: self
                .states
                .iter()
                .enumerate()
                .filter(|(i, _)| !self.labels[*i].is_empty())
                .map(|(i, s)| (s.clone(), self.labels[i].iter().cloned().collect()))
                .collect(),
            transitions: self
                .states
                .iter()
                .enumerate()
                .flat_map(|(a, s)| {
                    self.succ[a]
                        .iter()
                        .map(move |&(b, w)| (s.clone(), self.states[b].clone(), w))
                })
                .collect(),
        };
        serde_json::to_string_pretty(&doc).expect("transition system serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, MotionError> {
        let doc: TsDoc =
            serde_json::from_str(text).map_err(|e| MotionError::Json(e.to_string()))?;
        TransitionSystem::new(
            doc.states,
            &doc.initial,
            doc.transitions,
            doc.props,
            doc.labels,
        )
    }

    /// Graphviz rendering with weights as edge labels.
    pub fn to_dot(&self, name: &str) -> String {
        let mut out = format!("digraph {name} {{\n  rankdir=LR;\n");
        for (i, s) in self.states.iter().enumerate() {
            let label = if self.labels[i].is_empty() {
                s.clone()
            } else {
                format!(
                    "{s}\\n{}",
                    self.labels[i].iter().cloned().collect::<Vec<_>>().join(",")
                )
            };
            let _ = writeln!(out, "  \"{s}\" [label=\"{label}\"];");
        }
        for (a, list) in self.succ.iter().enumerate() {
            for &(b, w) in list {
                let _ = writeln!(
                    out,
                    "  \"{}\" -> \"{}\" [label=\"{w}\"];",
                    self.states[a], self.states[b]
                );
            }
        }
        out.push_str("}\n");
        out
    }
}

/// Total weight of a finite run; 0 for a single state.
pub fn trajectory_weight<S: AsRef<str>>(
    ts: &TransitionSystem,
    xs: &[S],
) -> Result<f64, MotionError> {
    if xs.is_empty() {
        return Err(MotionError::EmptyTrajectory);
    }
    let mut total = 0.0;
    for (k, pair) in xs.windows(2).enumerate() {
        let from = ts
            .state_index(pair[0].as_ref())
            .ok_or_else(|| MotionError::UnknownState(pair[0].as_ref().to_string()))?;
        let to = ts
            .state_index(pair[1].as_ref())
            .ok_or_else(|| MotionError::UnknownState(pair[1].as_ref().to_string()))?;
        match ts.weight(from, to) {
            Some(w) => total += w,
            None => {
                return Err(MotionError::NotATransition {
                    index: k,
                    from: pair[0].as_ref().to_string(),
                    to: pair[1].as_ref().to_string(),
                })
            }
        }
    }
    Ok(total)
}

/// Minimum-weight path from `a` to `b` with its weight.
///
/// Ties break to the path whose state-index sequence is lexicographically
/// smallest in declaration order. Runs a backward pass computing each
/// state's distance to `b`, then walks tight edges forward picking the
/// smallest successor index.
pub fn min_weight_path(
    ts: &TransitionSystem,
    a: &str,
    b: &str,
) -> Result<(Vec<String>, f64), MotionError> {
    let start = ts
        .state_index(a)
        .ok_or_else(|| MotionError::UnknownState(a.to_string()))?;
    let goal = ts
        .state_index(b)
        .ok_or_else(|| MotionError::UnknownState(b.to_string()))?;
    if start == goal {
        return Ok((vec![a.to_string()], 0.0));
    }

    let n = ts.state_count();
    let mut pred: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for u in 0..n {
        for &(v, w) in ts.successors(u) {
            pred[v].push((u, w));
        }
    }
    // Dijkstra over predecessors: dist[v] = min weight of v -> goal.
    let mut dist = vec![f64::INFINITY; n];
    let mut done = vec![false; n];
    dist[goal] = 0.0;
    loop {
        let mut cur = None;
        for v in 0..n {
            if !done[v] && dist[v].is_finite() {
                match cur {
                    Some(c) if dist[c] <= dist[v] => {}
                    _ => cur = Some(v),
                }
            }
        }
        let Some(cur) = cur else { break };
        done[cur] = true;
        for &(u, w) in &pred[cur] {
            let cand = dist[cur] + w;
            if cand < dist[u] {
                dist[u] = cand;
            }
        }
    }
    if !dist[start].is_finite() {
        return Err(MotionError::Unreachable {
            from: a.to_string(),
            to: b.to_string(),
        });
    }

    // Tight edges (u, v) satisfy dist[u] = dist[v] + w exactly, because the
    // same float sum produced dist[u] during relaxation. Positive weights
    // make dist strictly decrease along the walk, so it terminates at goal.
    let mut path = vec![start];
    let mut cur = start;
    while cur != goal {
        let next = ts
            .successors(cur)
            .iter()
            .find(|&&(v, w)| dist[v] + w == dist[cur])
            .map(|&(v, _)| v)
            .expect("finite distance implies a tight edge");
        path.push(next);
        cur = next;
        debug_assert!(path.len() <= n, "tight walk revisited a state");
    }
    Ok((
        path.into_iter().map(|i| ts.state_name(i).to_string()).collect(),
        dist[start],
    ))
}

fn default_unit_weight() -> f64 {
    1.0
}

/// 1-D ego-frame corridor of cells `c0..c{cells-1}` with a target cell.
///
/// Transitions are the adjacency moves `c_i <-> c_{i+1}` and stationary
/// self-loops, all at `default_weight` unless overridden. The ego starts
/// at the far end `c{cells-1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellCorridor {
    pub cells: usize,
    pub target: usize,
    #[serde(default = "default_unit_weight")]
    pub default_weight: f64,
    #[serde(default)]
    pub weights: Vec<(usize, usize, f64)>,
}

impl CellCorridor {
    /// Unit-weight corridor.
    pub fn new(cells: usize, target: usize) -> Self {
        CellCorridor {
            cells,
            target,
            default_weight: 1.0,
            weights: Vec::new(),
        }
    }

    pub fn cell_name(i: usize) -> String {
        format!("c{i}")
    }

    pub fn validate(&self) -> Result<(), MotionError> {
        if self.cells == 0 {
            return Err(MotionError::Corridor("corridor has no cells".to_string()));
        }
        if self.target >= self.cells {
            return Err(MotionError::Corridor(format!(
                "target cell {} outside 0..{}",
                self.target, self.cells
            )));
        }
        if !(self.default_weight.is_finite() && self.default_weight > 0.0) {
            return Err(MotionError::Corridor(format!(
                "default weight {} must be positive",
                self.default_weight
            )));
        }
        let mut seen = BTreeSet::new();
        for &(a, b, w) in &self.weights {
            if a >= self.cells || b >= self.cells {
                return Err(MotionError::Corridor(format!(
                    "weight override ({a}, {b}) outside the corridor"
                )));
            }
            if a.abs_diff(b) > 1 {
                return Err(MotionError::Corridor(format!(
                    "weight override ({a}, {b}) is not an adjacency or self-loop"
                )));
            }
            if !(w.is_finite() && w > 0.0) {
                return Err(MotionError::Corridor(format!(
                    "weight override ({a}, {b}) must be positive, got {w}"
                )));
            }
            if !seen.insert((a, b)) {
                return Err(MotionError::Corridor(format!(
                    "duplicate weight override ({a}, {b})"
                )));
            }
        }
        Ok(())
    }

    fn weight(&self, a: usize, b: usize) -> f64 {
        self.weights
            .iter()
            .find(|&&(x, y, _)| x == a && y == b)
            .map(|&(_, _, w)| w)
            .unwrap_or(self.default_weight)
    }

    /// The corridor as a transition system. Each cell is labeled with its
    /// own name; the target cell additionally carries `target`.
    pub fn to_ts(&self) -> Result<TransitionSystem, MotionError> {
        self.validate()?;
        let states: Vec<String> = (0..self.cells).map(Self::cell_name).collect();
        let mut props = states.clone();
        props.push("target".to_string());
        let labels: Vec<(String, Vec<String>)> = (0..self.cells)
            .map(|i| {
                let mut ps = vec![Self::cell_name(i)];
                if i == self.target {
                    ps.push("target".to_string());
                }
                (Self::cell_name(i), ps)
            })
            .collect();
        let mut transitions = Vec::new();
        for i in 0..self.cells {
            transitions.push((Self::cell_name(i), Self::cell_name(i), self.weight(i, i)));
            if i + 1 < self.cells {
                transitions.push((
                    Self::cell_name(i),
                    Self::cell_name(i + 1),
                    self.weight(i, i + 1),
                ));
                transitions.push((
                    Self::cell_name(i + 1),
                    Self::cell_name(i),
                    self.weight(i + 1, i),
                ));
            }
        }
        TransitionSystem::new(
            states,
            &Self::cell_name(self.cells - 1),
            transitions,
            props,
            labels,
        )
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("corridor serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, MotionError> {
        let c: CellCorridor =
            serde_json::from_str(text).map_err(|e| MotionError::Json(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }
}

/// Reaction margin of a detection at cell `c_d`: the minimum weight the
/// ego needs to travel from `c_d` to the target cell. Higher is better;
/// a detection at the target itself scores 0.
pub fn performance(corridor: &CellCorridor, c_d: usize) -> Result<f64, MotionError> {
    if c_d >= corridor.cells {
        return Err(MotionError::UnknownState(CellCorridor::cell_name(c_d)));
    }
    let ts = corridor.to_ts()?;
    let (_, w) = min_weight_path(
        &ts,
        &CellCorridor::cell_name(c_d),
        &CellCorridor::cell_name(corridor.target),
    )?;
    Ok(w)
}

/// Pair-state movement system over a corridor.
///
/// States are the corridor transitions `(from, to)`; moving from pair
/// `(a, b)` to `(b, c)` is allowed when `b -> c` is a corridor transition
/// and costs that transition's weight. A pair is `stationary` when both
/// components match, `moving` otherwise, and is located at its arrival
/// cell. The initial state idles at the ego's entry cell.
#[derive(Debug, Clone)]
pub struct MovementTS {
    pub pairs: Vec<(usize, usize)>,
    pub ts: TransitionSystem,
}

fn pair_name(a: usize, b: usize) -> String {
    format!("c{a}_c{b}")
}

pub fn movement_abstraction(corridor: &CellCorridor) -> Result<MovementTS, MotionError> {
    corridor.validate()?;
    let cell_ts = corridor.to_ts()?;
    let mut pairs = Vec::new();
    for a in 0..corridor.cells {
        for &(b, _) in cell_ts.successors(a) {
            pairs.push((a, b));
        }
    }
    pairs.sort();
    let states: Vec<String> = pairs.iter().map(|&(a, b)| pair_name(a, b)).collect();
    let mut props: Vec<String> = vec!["moving".to_string(), "stationary".to_string()];
    props.extend((0..corridor.cells).map(CellCorridor::cell_name));
    let labels: Vec<(String, Vec<String>)> = pairs
        .iter()
        .map(|&(a, b)| {
            let kind = if a == b { "stationary" } else { "moving" };
            (
                pair_name(a, b),
                vec![kind.to_string(), CellCorridor::cell_name(b)],
            )
        })
        .collect();
    let mut transitions = Vec::new();
    for &(a, b) in &pairs {
        for &(c, w) in cell_ts.successors(b) {
            transitions.push((pair_name(a, b), pair_name(b, c), w));
        }
    }
    let initial = pair_name(corridor.cells - 1, corridor.cells - 1);
    let ts = TransitionSystem::new(states, &initial, transitions, props, labels)?;
    Ok(MovementTS { pairs, ts })
}
