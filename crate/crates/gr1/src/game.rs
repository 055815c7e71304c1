//! Explicit two-player game arena built from a specification.
//!
//! Environment and system valuations are enumerated into dense indices
//! (mixed radix over the declared domains, first declaration most
//! significant). A joint state packs one environment index `x` and one
//! system index `y` as `s = x * |Y| + y`. Transition relations come from
//! evaluating the compiled safety formulas over (now, next) state pairs:
//! the environment moves first under its safety assumptions, the system
//! answers under its safety guarantees. Progress formulas become goal
//! sets over joint states.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::bitset::BitSet;
use crate::expr::{BoolExpr, CompiledExpr};
use crate::spec::{validate_spec, GR1Spec};
use crate::vars::{Owner, Valuation, VarTable};

/// Default joint-state cap; override with the `GR1_STATE_CAP` variable.
pub const DEFAULT_STATE_CAP: usize = 1 << 22;

/// Game construction failure.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GameError {
    #[error("joint state space needs {states} states, over the cap of {cap} (set GR1_STATE_CAP to raise it)")]
    StateCapExceeded { states: u128, cap: usize },
    #[error("no environment valuation satisfies the initial assumption")]
    NoInitialPair,
    #[error("specification is not well formed: {0}")]
    InvalidSpec(String),
}

/// Enumerated game arena. Immutable once built; all successor lists are
/// sorted ascending, which fixes every later tie-break.
#[derive(Debug, Clone)]
pub struct GameStructure {
    spec: GR1Spec,
    table: VarTable,
    env_slots: Vec<usize>,
    sys_slots: Vec<usize>,
    n_env: usize,
    n_sys: usize,
    stride: usize,
    /// Packed full-width valuation per joint state, `stride` bytes each.
    packs: Vec<u8>,
    /// Permitted next environment indices per joint state.
    env_moves: Vec<Vec<u32>>,
    /// Permitted system answers per joint state and environment move,
    /// aligned with `env_moves`.
    sys_resp: Vec<Vec<Vec<u32>>>,
    env_goals: Vec<BitSet>,
    sys_goals: Vec<BitSet>,
    /// Initial environment indices satisfying the env initial condition.
    initial_env: Vec<u32>,
    /// Initial pairs satisfying both initial conditions, grouped by `x0`.
    initial: BTreeMap<u32, Vec<u32>>,
    sys_safety: Vec<CompiledExpr>,
    env_safety: Vec<CompiledExpr>,
    theta_sys: CompiledExpr,
}

/// Build the arena with the cap taken from `GR1_STATE_CAP` (default 2^22).
pub fn build_game(spec: &GR1Spec) -> Result<GameStructure, GameError> {
    let cap = std::env::var("GR1_STATE_CAP")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .unwrap_or(DEFAULT_STATE_CAP);
    build_game_with_cap(spec, cap)
}

/// Build the arena with an explicit joint-state cap.
pub fn build_game_with_cap(spec: &GR1Spec, cap: usize) -> Result<GameStructure, GameError> {
    let diags = validate_spec(spec);
    if let Some(d) = diags.first() {
        return Err(GameError::InvalidSpec(d.to_string()));
    }

    let table = spec.table();
    let env_slots = table.owned_slots(Owner::Environment);
    let sys_slots = table.owned_slots(Owner::System);
    let stride = table.len();

    let mut joint: u128 = 1;
    for slot in env_slots.iter().chain(&sys_slots) {
        joint = joint.saturating_mul(table.decl(*slot).domain.len() as u128);
    }
    if joint > cap as u128 {
        return Err(GameError::StateCapExceeded { states: joint, cap });
    }
    let n_env = table.space_size(&env_slots);
    let n_sys = table.space_size(&sys_slots);
    let n_joint = n_env * n_sys;

    // Packed full-width valuations, indexed by joint state.
    let mut packs = vec![0u8; n_joint * stride];
    let mut digits = Vec::new();
    for x in 0..n_env {
        let mut x_pack = vec![0u8; stride];
        table.decode(&env_slots, x, &mut digits);
        for (pos, &slot) in env_slots.iter().enumerate() {
            x_pack[slot] = digits[pos];
        }
        for y in 0..n_sys {
            let s = x * n_sys + y;
            let pack = &mut packs[s * stride..(s + 1) * stride];
            pack.copy_from_slice(&x_pack);
            table.decode(&sys_slots, y, &mut digits);
            for (pos, &slot) in sys_slots.iter().enumerate() {
                pack[slot] = digits[pos];
            }
        }
    }
    let pack_of = |s: usize| &packs[s * stride..(s + 1) * stride];

    let compile_all = |exprs: &[BoolExpr]| -> Result<Vec<CompiledExpr>, GameError> {
        exprs
            .iter()
            .map(|e| CompiledExpr::compile(e, &table).map_err(GameError::InvalidSpec))
            .collect()
    };
    let env_safety = compile_all(&spec.env_safety)?;
    let sys_safety = compile_all(&spec.sys_safety)?;
    let env_progress = compile_all(&spec.env_progress)?;
    let sys_progress = compile_all(&spec.sys_progress)?;
    let theta_env =
        CompiledExpr::compile(&spec.theta_env, &table).map_err(GameError::InvalidSpec)?;
    let theta_sys =
        CompiledExpr::compile(&spec.theta_sys, &table).map_err(GameError::InvalidSpec)?;

    // Environment moves: env safety formulas never prime system variables,
    // so evaluating against next = (x', y = 0) is exact.
    let mut env_moves: Vec<Vec<u32>> = Vec::with_capacity(n_joint);
    for s in 0..n_joint {
        let now = pack_of(s);
        let mut moves = Vec::new();
        for xp in 0..n_env {
            let next = pack_of(xp * n_sys);
            if env_safety.iter().all(|f| f.eval(now, next)) {
                moves.push(xp as u32);
            }
        }
        env_moves.push(moves);
    }

    let mut sys_resp: Vec<Vec<Vec<u32>>> = Vec::with_capacity(n_joint);
    for (s, moves) in env_moves.iter().enumerate() {
        let now = pack_of(s);
        let mut per_move = Vec::with_capacity(moves.len());
        for &xp in moves {
            let mut answers = Vec::new();
            for yp in 0..n_sys {
                let next = pack_of(xp as usize * n_sys + yp);
                if sys_safety.iter().all(|f| f.eval(now, next)) {
                    answers.push(yp as u32);
                }
            }
            per_move.push(answers);
        }
        sys_resp.push(per_move);
    }

    let goal_sets = |formulas: &[CompiledExpr]| -> Vec<BitSet> {
        formulas
            .iter()
            .map(|f| {
                let mut set = BitSet::empty(n_joint);
                for s in 0..n_joint {
                    let now = pack_of(s);
                    if f.eval(now, now) {
                        set.insert(s);
                    }
                }
                set
            })
            .collect()
    };
    let env_goals = goal_sets(&env_progress);
    let sys_goals = goal_sets(&sys_progress);

    let mut initial_env = Vec::new();
    let mut initial: BTreeMap<u32, Vec<u32>> = BTreeMap::new();
    for x in 0..n_env {
        let now = pack_of(x * n_sys);
        if !theta_env.eval(now, now) {
            continue;
        }
        initial_env.push(x as u32);
        for y in 0..n_sys {
            let s = x * n_sys + y;
            let now = pack_of(s);
            if theta_sys.eval(now, now) {
                initial.entry(x as u32).or_default().push(y as u32);
            }
        }
    }
    if initial_env.is_empty() {
        return Err(GameError::NoInitialPair);
    }

    Ok(GameStructure {
        spec: spec.clone(),
        table,
        env_slots,
        sys_slots,
        n_env,
        n_sys,
        stride,
        packs,
        env_moves,
        sys_resp,
        env_goals,
        sys_goals,
        initial_env,
        initial,
        sys_safety,
        env_safety,
        theta_sys,
    })
}

impl GameStructure {
    pub fn spec(&self) -> &GR1Spec {
        &self.spec
    }

    pub fn table(&self) -> &VarTable {
        &self.table
    }

    pub fn env_state_count(&self) -> usize {
        self.n_env
    }

    pub fn sys_state_count(&self) -> usize {
        self.n_sys
    }

    pub fn joint_state_count(&self) -> usize {
        self.n_env * self.n_sys
    }

    /// Total number of (env move, sys answer) edges in the arena.
    pub fn edge_count(&self) -> usize {
        self.sys_resp
            .iter()
            .map(|per| per.iter().map(Vec::len).sum::<usize>())
            .sum()
    }

    pub fn joint(&self, x: u32, y: u32) -> usize {
        x as usize * self.n_sys + y as usize
    }

    pub fn split(&self, s: usize) -> (u32, u32) {
        ((s / self.n_sys) as u32, (s % self.n_sys) as u32)
    }

    fn pack_of(&self, s: usize) -> &[u8] {
        &self.packs[s * self.stride..(s + 1) * self.stride]
    }

    /// Permitted next environment indices from a joint state, ascending.
    pub fn env_moves(&self, s: usize) -> &[u32] {
        &self.env_moves[s]
    }

    /// Permitted system answers to the `move_idx`-th environment move of
    /// `s`, ascending.
    pub fn sys_responses(&self, s: usize, move_idx: usize) -> &[u32] {
        &self.sys_resp[s][move_idx]
    }

    /// Position of environment move `xp` in `env_moves(s)`, if permitted.
    pub fn env_move_index(&self, s: usize, xp: u32) -> Option<usize> {
        self.env_moves[s].binary_search(&xp).ok()
    }

    /// Whether answering `yp` to environment move `xp` from `s` satisfies
    /// every system safety formula. Defined for all `xp`, including moves
    /// the environment is not permitted to make.
    pub fn sys_move_legal(&self, s: usize, xp: u32, yp: u32) -> bool {
        let now = self.pack_of(s);
        let next = self.pack_of(self.joint(xp, yp));
        self.sys_safety.iter().all(|f| f.eval(now, next))
    }

    /// Whether the environment move `xp` from `s` satisfies every env
    /// safety assumption.
    pub fn env_move_legal(&self, s: usize, xp: u32) -> bool {
        let now = self.pack_of(s);
        let next = self.pack_of(self.joint(xp, 0));
        self.env_safety.iter().all(|f| f.eval(now, next))
    }

    pub fn env_goal_sets(&self) -> &[BitSet] {
        &self.env_goals
    }

    pub fn sys_goal_sets(&self) -> &[BitSet] {
        &self.sys_goals
    }

    /// Initial environment indices satisfying the env initial condition.
    pub fn initial_env_states(&self) -> &[u32] {
        &self.initial_env
    }

    /// Initial pairs satisfying both initial conditions, grouped by `x0`
    /// with each answer list ascending.
    pub fn initial_pairs(&self) -> &BTreeMap<u32, Vec<u32>> {
        &self.initial
    }

    /// Whether the system initial condition holds at a joint state.
    pub fn initial_sys_ok(&self, s: usize) -> bool {
        let now = self.pack_of(s);
        self.theta_sys.eval(now, now)
    }

    /// Map-based valuation of a joint state over all variables.
    pub fn valuation_of(&self, s: usize) -> Valuation {
        let pack = self.pack_of(s);
        let mut v = Valuation::new();
        for (slot, &digit) in pack.iter().enumerate() {
            let d = self.table.decl(slot);
            v.set(d.name.clone(), d.domain[digit as usize].clone());
        }
        v
    }

    /// Map-based valuation of an environment index.
    pub fn env_valuation_of(&self, x: u32) -> Valuation {
        let pack = self.pack_of(self.joint(x, 0));
        let mut v = Valuation::new();
        for &slot in &self.env_slots {
            let d = self.table.decl(slot);
            v.set(d.name.clone(), d.domain[pack[slot] as usize].clone());
        }
        v
    }

    /// Map-based valuation of a system index.
    pub fn sys_valuation_of(&self, y: u32) -> Valuation {
        let pack = self.pack_of(y as usize);
        let mut v = Valuation::new();
        for &slot in &self.sys_slots {
            let d = self.table.decl(slot);
            v.set(d.name.clone(), d.domain[pack[slot] as usize].clone());
        }
        v
    }

    /// Dense index of an environment valuation, if total and in-domain.
    pub fn env_index_of(&self, v: &Valuation) -> Option<u32> {
        let digits = self.table.pack(&self.env_slots, v).ok()?;
        Some(self.table.encode(&self.env_slots, &digits) as u32)
    }

    /// Dense index of a system valuation, if total and in-domain.
    pub fn sys_index_of(&self, v: &Valuation) -> Option<u32> {
        let digits = self.table.pack(&self.sys_slots, v).ok()?;
        Some(self.table.encode(&self.sys_slots, &digits) as u32)
    }
}
