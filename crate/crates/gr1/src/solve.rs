//! GR(1) realizability via the three-nested fixpoint.
//!
//! The winning region is the greatest fixpoint over Z of, for each system
//! goal k, a least fixpoint over Y of, for each environment goal j, a
//! greatest fixpoint over X:
//!
//! ```text
//! Z = gfp Z. AND_k lfp Y. OR_j gfp X.
//!       (goal_k AND CPre(Z)) OR CPre(Y) OR (NOT envgoal_j AND CPre(X))
//! ```
//!
//! `CPre(S)` holds at a state when every admissible environment move has a
//! system response landing in `S`; a state where the environment has no
//! admissible move at all is in `CPre` of every set, which is exactly the
//! strict-semantics rule that an assumption violation hands the win to the
//! system. The outer loop intersects Z with each goal's least fixpoint in
//! turn until a full pass leaves Z unchanged; a final recording pass then
//! stores the rank of every winning state and the X sets of each rank
//! layer, the certificates strategy extraction consumes.
//!
//! Non-strict semantics is handled on an augmented arena that doubles the
//! state space with a latched guarantee-violation flag: system responses
//! ignore the safety guarantees but record the violation, system goals
//! count only on the clean half, and environment goals count on both.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bitset::BitSet;
use crate::game::GameStructure;
use crate::strategy::{build_strategy, Strategy};

/// Which realizability semantics to solve under.
///
/// Strict is the default: the system may not violate its safety
/// guarantees before the environment violates its assumptions, even when
/// doing so would force an assumption violation later.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Semantics {
    Strict,
    NonStrict,
}

/// Strategy extraction failures.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SolveError {
    #[error("strategy extraction requires a realizable result")]
    Unrealizable,
    #[error("strategy extraction is only available under strict semantics")]
    NonStrictUnsupported,
}

/// Size and effort counters for one synthesis run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolveStats {
    /// Arena states the fixpoint ran over (twice the joint count under
    /// non-strict semantics).
    pub states: usize,
    /// Controllable-predecessor evaluations across all fixpoint levels.
    pub iterations: usize,
    /// Outer Z passes until stabilization, recording passes excluded.
    pub outer_passes: usize,
}

/// Outcome of a synthesis run.
///
/// `strategy` is present exactly when the specification is realizable and
/// the run used strict semantics; `winning_region` lists the winning joint
/// states (for non-strict runs, the violation-free half of the augmented
/// arena, projected).
#[derive(Debug, Clone)]
pub struct SynthesisResult {
    pub realizable: bool,
    pub strategy: Option<Strategy>,
    pub winning_region: Vec<u32>,
    pub stats: SolveStats,
    semantics: Semantics,
}

impl SynthesisResult {
    pub fn semantics(&self) -> Semantics {
        self.semantics
    }
}

/// Fixpoint certificates recorded on the final pass, consumed by strategy
/// extraction. Universe is the arena, which for strict semantics is the
/// joint state space.
#[derive(Debug, Clone)]
pub(crate) struct Tables {
    /// `rank[k][s]`: least r >= 1 such that s enters the k-th goal's least
    /// fixpoint at layer r; 0 for states outside the winning region.
    pub rank: Vec<Vec<u32>>,
    /// `x_sets[k][r-1][j]`: the inner greatest fixpoint for environment
    /// goal j in layer r of system goal k.
    pub x_sets: Vec<Vec<Vec<BitSet>>>,
    pub winning: BitSet,
}

/// Game arena seen by the fixpoints: per state, the admissible environment
/// moves, each with its list of successor states (one per legal system
/// response). Strict semantics plays on the joint states directly;
/// non-strict doubles them with the violation latch.
pub(crate) struct Arena {
    pub n_joint: usize,
    pub n: usize,
    pub moves: Vec<Vec<Vec<u32>>>,
    pub env_goals: Vec<BitSet>,
    pub sys_goals: Vec<BitSet>,
}

impl Arena {
    pub(crate) fn build(game: &GameStructure, semantics: Semantics) -> Arena {
        let n_joint = game.joint_state_count();
        match semantics {
            Semantics::Strict => {
                let moves = (0..n_joint)
                    .map(|s| {
                        game.env_moves(s)
                            .iter()
                            .enumerate()
                            .map(|(i, &xp)| {
                                game.sys_responses(s, i)
                                    .iter()
                                    .map(|&yp| game.joint(xp, yp) as u32)
                                    .collect()
                            })
                            .collect()
                    })
                    .collect();
                Arena {
                    n_joint,
                    n: n_joint,
                    moves,
                    env_goals: game.env_goal_sets().to_vec(),
                    sys_goals: game.sys_goal_sets().to_vec(),
                }
            }
            Semantics::NonStrict => {
                let n = 2 * n_joint;
                let n_sys = game.sys_state_count() as u32;
                let mut moves = Vec::with_capacity(n);
                for v in 0..2u32 {
                    for s in 0..n_joint {
                        let state_moves: Vec<Vec<u32>> = game
                            .env_moves(s)
                            .iter()
                            .map(|&xp| {
                                (0..n_sys)
                                    .map(|yp| {
                                        let sp = game.joint(xp, yp) as u32;
                                        let vp = if v == 1 || !game.sys_move_legal(s, xp, yp)
                                        {
                                            1
                                        } else {
                                            0
                                        };
                                        vp * n_joint as u32 + sp
                                    })
                                    .collect()
                            })
                            .collect();
                        moves.push(state_moves);
                    }
                }
                let widen = |src: &BitSet, clean_only: bool| -> BitSet {
                    let mut out = BitSet::empty(n);
                    for s in src.iter() {
                        out.insert(s);
                        if !clean_only {
                            out.insert(n_joint + s);
                        }
                    }
                    out
                };
                Arena {
                    n_joint,
                    n,
                    moves,
                    env_goals: game
                        .env_goal_sets()
                        .iter()
                        .map(|g| widen(g, false))
                        .collect(),
                    sys_goals: game
                        .sys_goal_sets()
                        .iter()
                        .map(|g| widen(g, true))
                        .collect(),
                }
            }
        }
    }
}

/// States from which every admissible environment move has a system
/// response into `target`. Environment-deadlocked states qualify for any
/// target.
fn cpre(arena: &Arena, target: &BitSet, stats: &mut SolveStats) -> BitSet {
    stats.iterations += 1;
    let mut out = BitSet::empty(arena.n);
    for s in 0..arena.n {
        let ok = arena.moves[s]
            .iter()
            .all(|succs| succs.iter().any(|&t| target.contains(t as usize)));
        if ok {
            out.insert(s);
        }
    }
    out
}

struct GoalPass {
    y_final: BitSet,
    rank: Vec<u32>,
    x_sets: Vec<Vec<BitSet>>,
}

/// Least fixpoint over Y for system goal `k` against the current Z,
/// layering ranks and (when `record` is set) the per-layer X sets.
fn mu_y(
    arena: &Arena,
    k: usize,
    z: &BitSet,
    not_env_goals: &[BitSet],
    stats: &mut SolveStats,
    record: bool,
) -> GoalPass {
    let n = arena.n;
    let cpre_z = cpre(arena, z, stats);
    let mut base = arena.sys_goals[k].clone();
    base.intersect_with(&cpre_z);

    let mut y = BitSet::empty(n);
    let mut rank = vec![0u32; n];
    let mut x_sets: Vec<Vec<BitSet>> = Vec::new();
    loop {
        let cpre_y = cpre(arena, &y, stats);
        let mut b = base.clone();
        b.union_with(&cpre_y);

        let mut next = y.clone();
        let mut layer = Vec::with_capacity(not_env_goals.len());
        for not_j in not_env_goals {
            // gfp X. b OR (NOT envgoal_j AND CPre(X)), from the full space.
            let mut x = BitSet::full(n);
            loop {
                let cpre_x = cpre(arena, &x, stats);
                let mut xn = not_j.clone();
                xn.intersect_with(&cpre_x);
                xn.union_with(&b);
                if xn == x {
                    break;
                }
                x = xn;
            }
            next.union_with(&x);
            layer.push(x);
        }
        if next == y {
            break;
        }
        let r = x_sets.len() as u32 + 1;
        for s in next.iter() {
            if rank[s] == 0 {
                rank[s] = r;
            }
        }
        if record {
            x_sets.push(layer);
        } else {
            x_sets.push(Vec::new());
        }
        y = next;
    }
    GoalPass {
        y_final: y,
        rank,
        x_sets,
    }
}

/// Solve under strict semantics. Unrealizable is a result, not an error.
pub fn solve(game: &GameStructure) -> SynthesisResult {
    solve_with_semantics(game, Semantics::Strict)
}

/// Solve under the chosen semantics.
pub fn solve_with_semantics(game: &GameStructure, semantics: Semantics) -> SynthesisResult {
    let arena = Arena::build(game, semantics);
    let mut stats = SolveStats {
        states: arena.n,
        iterations: 0,
        outer_passes: 0,
    };
    let ks = arena.sys_goals.len();
    let not_env_goals: Vec<BitSet> = arena
        .env_goals
        .iter()
        .map(|g| {
            let mut c = BitSet::full(arena.n);
            c.subtract(g);
            c
        })
        .collect();

    let mut z = BitSet::full(arena.n);
    loop {
        stats.outer_passes += 1;
        let before = z.clone();
        for k in 0..ks {
            let pass = mu_y(&arena, k, &z, &not_env_goals, &mut stats, false);
            z.intersect_with(&pass.y_final);
        }
        if z == before {
            break;
        }
    }

    // Recording pass at the stable Z. Each goal's least fixpoint now
    // returns Z itself, so ranks and X sets certify the whole region.
    let mut tables = Tables {
        rank: Vec::with_capacity(ks),
        x_sets: Vec::with_capacity(ks),
        winning: z.clone(),
    };
    for k in 0..ks {
        let pass = mu_y(&arena, k, &z, &not_env_goals, &mut stats, true);
        debug_assert_eq!(
            pass.y_final, z,
            "stable Z must be a fixpoint of every goal's recurrence"
        );
        tables.rank.push(pass.rank);
        tables.x_sets.push(pass.x_sets);
    }

    let n_joint = arena.n_joint;
    let realizable = match semantics {
        Semantics::Strict => game.initial_env_states().iter().all(|x0| {
            game.initial_pairs()
                .get(x0)
                .map(|ys| {
                    ys.iter()
                        .any(|&y0| z.contains(game.joint(*x0, y0)))
                })
                .unwrap_or(false)
        }),
        Semantics::NonStrict => game.initial_env_states().iter().all(|&x0| {
            (0..game.sys_state_count() as u32).any(|y0| {
                let s = game.joint(x0, y0);
                let v = if game.initial_sys_ok(s) { 0 } else { 1 };
                z.contains(v * n_joint + s)
            })
        }),
    };

    let winning_region: Vec<u32> = (0..n_joint)
        .filter(|&s| z.contains(s))
        .map(|s| s as u32)
        .collect();

    let strategy = if realizable && semantics == Semantics::Strict {
        Some(build_strategy(game, &tables))
    } else {
        None
    };

    SynthesisResult {
        realizable,
        strategy,
        winning_region,
        stats,
        semantics,
    }
}

/// The strategy certified by a realizable strict-semantics result.
///
/// The machine is built during [`solve`]; this accessor re-checks the
/// preconditions and hands out a copy.
pub fn extract_strategy(
    game: &GameStructure,
    result: &SynthesisResult,
) -> Result<Strategy, SolveError> {
    debug_assert!(result
        .winning_region
        .iter()
        .all(|&s| (s as usize) < game.joint_state_count()));
    if !result.realizable {
        return Err(SolveError::Unrealizable);
    }
    if result.semantics == Semantics::NonStrict {
        return Err(SolveError::NonStrictUnsupported);
    }
    Ok(result
        .strategy
        .clone()
        .expect("realizable strict result carries a strategy"))
}
