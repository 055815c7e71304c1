//! Mealy-machine strategy extraction from fixpoint certificates.
//!
//! A strategy state is a pair (joint valuation, active system goal). The
//! machine is extracted only over states reachable from the chosen initial
//! responses, in breadth-first discovery order, which makes node numbering
//! a pure function of the specification.
//!
//! Output choice at a node (s, k), per admissible environment move:
//!
//! - goal hit: when s satisfies system goal k, advance to k+1 (mod K) and
//!   answer with the winning successor of least rank for the new goal,
//!   ties to the smallest system valuation index;
//! - descend: otherwise answer with a successor of strictly smaller rank
//!   for goal k when one exists, same tie-break;
//! - starve: otherwise s lies in some layer-r X set; answer inside the X
//!   set of the least environment goal index j containing s. Such moves
//!   keep the environment goal j false, so a play that stops descending
//!   starves an environment goal and wins by falsified assumptions.

use std::collections::{BTreeMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::game::GameStructure;
use crate::parse::print_spec;
use crate::solve::Tables;
use crate::vars::{Owner, Valuation, VarDecl, VarTable};

/// One labeled transition: on environment move `env`, output system
/// valuation `sys` and continue at node `next`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StrategyMove {
    pub env: u32,
    pub sys: u32,
    pub next: u32,
}

/// One Mealy node: a joint valuation index plus the active goal index.
/// `moves` is sorted by environment move and lists exactly the admissible
/// environment moves from `state`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StrategyNode {
    pub state: u32,
    pub goal: u32,
    pub moves: Vec<StrategyMove>,
}

/// Enumerated winning controller.
///
/// The pre-initial dispatch maps each environment valuation satisfying the
/// environment initial condition to the node entered after the system's
/// opening response. The full variable declarations and the printed
/// specification text are embedded so the machine is interpretable on its
/// own.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Strategy {
    spec_text: String,
    vars: Vec<VarDecl>,
    env_states: u32,
    sys_states: u32,
    initial: Vec<(u32, u32)>,
    nodes: Vec<StrategyNode>,
}

impl Strategy {
    pub fn spec_text(&self) -> &str {
        &self.spec_text
    }

    pub fn vars(&self) -> &[VarDecl] {
        &self.vars
    }

    pub fn env_state_count(&self) -> u32 {
        self.env_states
    }

    pub fn sys_state_count(&self) -> u32 {
        self.sys_states
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[StrategyNode] {
        &self.nodes
    }

    pub fn node(&self, id: u32) -> &StrategyNode {
        &self.nodes[id as usize]
    }

    /// Pre-initial dispatch, sorted by environment valuation index.
    pub fn initial_dispatch(&self) -> &[(u32, u32)] {
        &self.initial
    }

    /// Node entered when the environment opens with valuation `x0`.
    pub fn initial_node(&self, x0: u32) -> Option<u32> {
        self.initial
            .binary_search_by_key(&x0, |&(x, _)| x)
            .ok()
            .map(|i| self.initial[i].1)
    }

    /// Response to environment move `xp` at `node`: the system output and
    /// the successor node. `None` means the move violates the environment
    /// safety assumptions at this node.
    pub fn step(&self, node: u32, xp: u32) -> Option<(u32, u32)> {
        let moves = &self.nodes[node as usize].moves;
        moves
            .binary_search_by_key(&xp, |m| m.env)
            .ok()
            .map(|i| (moves[i].sys, moves[i].next))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("strategy serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    fn table(&self) -> VarTable {
        VarTable::new(&self.vars)
    }

    /// Joint valuation named by a joint state index.
    pub fn joint_valuation(&self, s: u32) -> Valuation {
        let table = self.table();
        let env = decode_side(&table, Owner::Environment, s / self.sys_states);
        let sys = decode_side(&table, Owner::System, s % self.sys_states);
        env.union(&sys)
    }

    /// Environment valuation named by an environment state index.
    pub fn env_valuation(&self, x: u32) -> Valuation {
        decode_side(&self.table(), Owner::Environment, x)
    }

    /// System valuation named by a system state index.
    pub fn sys_valuation(&self, y: u32) -> Valuation {
        decode_side(&self.table(), Owner::System, y)
    }

    /// Graphviz rendering: one box per node labeled with its valuation and
    /// active goal, edges labeled `env / sys`.
    pub fn to_dot(&self) -> String {
        let table = self.table();
        let mut out = String::from("digraph strategy {\n  rankdir=LR;\n  node [shape=box, fontname=\"monospace\"];\n");
        out.push_str("  init [shape=point];\n");
        for (i, node) in self.nodes.iter().enumerate() {
            let label = format!(
                "{}\\ngoal {}",
                self.joint_valuation(node.state).render(),
                node.goal
            );
            out.push_str(&format!("  n{i} [label=\"{label}\"];\n"));
        }
        for &(x0, node) in &self.initial {
            let env = decode_side(&table, Owner::Environment, x0);
            let sys = self.sys_valuation(self.nodes[node as usize].state % self.sys_states);
            out.push_str(&format!(
                "  init -> n{} [label=\"{} / {}\"];\n",
                node,
                env.render(),
                sys.render()
            ));
        }
        for (i, node) in self.nodes.iter().enumerate() {
            for m in &node.moves {
                let env = decode_side(&table, Owner::Environment, m.env);
                let sys = self.sys_valuation(m.sys);
                out.push_str(&format!(
                    "  n{i} -> n{} [label=\"{} / {}\"];\n",
                    m.next,
                    env.render(),
                    sys.render()
                ));
            }
        }
        out.push_str("}\n");
        out
    }
}

fn decode_side(table: &VarTable, owner: Owner, index: u32) -> Valuation {
    let slots = table.owned_slots(owner);
    let mut digits = Vec::new();
    table.decode(&slots, index as usize, &mut digits);
    table.to_valuation(&slots, &digits)
}

fn intern(
    ids: &mut BTreeMap<(u32, u32), u32>,
    queue: &mut VecDeque<(u32, u32)>,
    key: (u32, u32),
) -> u32 {
    if let Some(&id) = ids.get(&key) {
        return id;
    }
    let id = ids.len() as u32;
    ids.insert(key, id);
    queue.push_back(key);
    id
}

/// Extraction worker shared by [`crate::solve::solve_with_semantics`].
/// Preconditions: `tables` certify a realizable strict-semantics region.
pub(crate) fn build_strategy(game: &GameStructure, tables: &Tables) -> Strategy {
    let ks = game.sys_goal_sets().len() as u32;
    let n_sys = game.sys_state_count() as u32;

    let mut ids: BTreeMap<(u32, u32), u32> = BTreeMap::new();
    let mut queue: VecDeque<(u32, u32)> = VecDeque::new();

    let mut initial = Vec::new();
    for &x0 in game.initial_env_states() {
        let best = game.initial_pairs()[&x0]
            .iter()
            .copied()
            .filter(|&y0| tables.winning.contains(game.joint(x0, y0)))
            .min_by_key(|&y0| (tables.rank[0][game.joint(x0, y0)], y0))
            .expect("realizable spec has a winning opening response");
        let id = intern(&mut ids, &mut queue, (game.joint(x0, best) as u32, 0));
        initial.push((x0, id));
    }

    let mut nodes: Vec<Option<StrategyNode>> = Vec::new();
    while let Some((s, k)) = queue.pop_front() {
        let id = ids[&(s, k)] as usize;
        let s_us = s as usize;
        let k_us = k as usize;
        let goal_hit = game.sys_goal_sets()[k_us].contains(s_us);
        let next_goal = if goal_hit { (k + 1) % ks } else { k };
        let rank_now = &tables.rank[k_us];

        let mut moves = Vec::with_capacity(game.env_moves(s_us).len());
        for (i, &xp) in game.env_moves(s_us).iter().enumerate() {
            let cands: Vec<u32> = game
                .sys_responses(s_us, i)
                .iter()
                .map(|&yp| game.joint(xp, yp) as u32)
                .collect();
            let chosen = if goal_hit {
                let rank_next = &tables.rank[next_goal as usize];
                cands
                    .iter()
                    .copied()
                    .filter(|&t| tables.winning.contains(t as usize))
                    .min_by_key(|&t| (rank_next[t as usize], t))
                    .expect("goal-hit state keeps a winning response")
            } else {
                let r = rank_now[s_us];
                debug_assert!(r >= 1, "strategy reached a non-winning state");
                let descend = cands
                    .iter()
                    .copied()
                    .filter(|&t| {
                        let rt = rank_now[t as usize];
                        rt != 0 && rt < r
                    })
                    .min_by_key(|&t| (rank_now[t as usize], t));
                match descend {
                    Some(t) => t,
                    None => {
                        let layer = &tables.x_sets[k_us][(r - 1) as usize];
                        let jmin = (0..layer.len())
                            .find(|&j| layer[j].contains(s_us))
                            .expect("ranked state lies in some X set of its layer");
                        cands
                            .iter()
                            .copied()
                            .find(|&t| layer[jmin].contains(t as usize))
                            .expect("X membership certifies a response")
                    }
                }
            };
            let next = intern(&mut ids, &mut queue, (chosen, next_goal));
            moves.push(StrategyMove {
                env: xp,
                sys: chosen % n_sys,
                next,
            });
        }

        if nodes.len() <= id {
            nodes.resize(id + 1, None);
        }
        nodes[id] = Some(StrategyNode {
            state: s,
            goal: k,
            moves,
        });
    }

    Strategy {
        spec_text: print_spec(game.spec()),
        vars: game.spec().vars.clone(),
        env_states: game.env_state_count() as u32,
        sys_states: n_sys,
        initial,
        nodes: nodes
            .into_iter()
            .map(|n| n.expect("every interned node is filled"))
            .collect(),
    }
}
