//! Reduction from GR(1) realizability to a three-color parity game.
//!
//! The arena interleaves environment-choice nodes (player Odd) and
//! system-answer nodes (player Even) over explicitly enumerated
//! valuations, with round-robin goal pointers in the node state. A node's
//! color marks what the last arrival completed: 2 when the system pointer
//! finished a round over all system goals, 1 when the environment pointer
//! finished a round without the system doing so, 0 otherwise. Even then
//! wins exactly when the play satisfies the GR(1) implication. Strictness
//! is built in: a move-less environment node yields to an even sink (the
//! assumptions broke first), a response-less system node to an odd sink
//! (the guarantees broke first).
//!
//! Everything here evaluates formulas over map-based valuations; none of
//! the solver's packed-state machinery is involved.

use std::collections::BTreeMap;

use gr1::vars::{Valuation, VarDecl};
use gr1::{eval_expr, BoolExpr, GR1Spec};

use crate::parity::{solve_parity, ParityGame, Player};

fn enumerate_valuations(decls: &[&VarDecl]) -> Vec<Valuation> {
    let mut out = vec![Valuation::new()];
    for d in decls {
        let mut next = Vec::with_capacity(out.len() * d.domain.len());
        for v in &out {
            for val in &d.domain {
                let mut w = v.clone();
                w.set(d.name.clone(), val.clone());
                next.push(w);
            }
        }
        out = next;
    }
    out
}

fn all_hold(
    formulas: &[BoolExpr],
    now: &Valuation,
    next: Option<&Valuation>,
) -> bool {
    formulas
        .iter()
        .all(|f| eval_expr(f, now, next).expect("typed formula evaluates"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum NodeKey {
    /// Environment to move at joint state `s`, pointers `(pe, ps)`,
    /// arrival color `c`.
    Env { s: usize, pe: usize, ps: usize, c: u8 },
    /// System to answer environment move `xp` taken from `s`.
    Sys { s: usize, xp: usize, pe: usize, ps: usize },
}

struct Reduction {
    game: ParityGame,
    /// Node id of each initial-pair start node, by (x0, y0).
    starts: BTreeMap<(usize, usize), usize>,
}

/// Arena under construction: node attributes plus the id map and worklist.
struct ArenaBuild {
    owner: Vec<Player>,
    color: Vec<u8>,
    succ: Vec<Vec<usize>>,
    ids: BTreeMap<NodeKey, usize>,
    worklist: Vec<NodeKey>,
}

fn intern(b: &mut ArenaBuild, key: NodeKey) -> usize {
    if let Some(&id) = b.ids.get(&key) {
        return id;
    }
    let id = b.owner.len();
    b.ids.insert(key, id);
    match key {
        NodeKey::Env { c, .. } => {
            b.owner.push(Player::Odd);
            b.color.push(c);
        }
        NodeKey::Sys { .. } => {
            b.owner.push(Player::Even);
            b.color.push(0);
        }
    }
    b.succ.push(Vec::new());
    b.worklist.push(key);
    id
}

fn build_reduction(spec: &GR1Spec) -> Reduction {
    let env_decls: Vec<&VarDecl> = spec.env_vars().collect();
    let sys_decls: Vec<&VarDecl> = spec.sys_vars().collect();
    let xs = enumerate_valuations(&env_decls);
    let ys = enumerate_valuations(&sys_decls);
    let n_sys = ys.len();
    let joint = |x: usize, y: usize| -> Valuation { xs[x].union(&ys[y]) };
    let n_joint = xs.len() * ys.len();
    let joints: Vec<Valuation> = (0..n_joint)
        .map(|s| joint(s / n_sys, s % n_sys))
        .collect();

    // Cached relations and goal membership over enumerated states.
    let env_ok: Vec<Vec<bool>> = (0..n_joint)
        .map(|s| {
            (0..xs.len())
                .map(|xp| all_hold(&spec.env_safety, &joints[s], Some(&xs[xp])))
                .collect()
        })
        .collect();
    let sys_ok: Vec<Vec<bool>> = (0..n_joint)
        .map(|s| {
            (0..n_joint)
                .map(|sp| all_hold(&spec.sys_safety, &joints[s], Some(&joints[sp])))
                .collect()
        })
        .collect();
    let je: Vec<Vec<bool>> = spec
        .env_progress
        .iter()
        .map(|f| {
            (0..n_joint)
                .map(|s| eval_expr(f, &joints[s], None).expect("unprimed goal"))
                .collect()
        })
        .collect();
    let js: Vec<Vec<bool>> = spec
        .sys_progress
        .iter()
        .map(|f| {
            (0..n_joint)
                .map(|s| eval_expr(f, &joints[s], None).expect("unprimed goal"))
                .collect()
        })
        .collect();
    let ke = je.len();
    let ks = js.len();

    // Sinks: strictness endpoints. Even sink for environment deadlock,
    // odd sink for system deadlock.
    let mut b = ArenaBuild {
        owner: vec![Player::Odd, Player::Even],
        color: vec![2, 1],
        succ: vec![vec![0], vec![1]],
        ids: BTreeMap::new(),
        worklist: Vec::new(),
    };
    let sink_even = 0;
    let sink_odd = 1;

    let mut starts = BTreeMap::new();
    for (x0, x_val) in xs.iter().enumerate() {
        if !eval_expr(&spec.theta_env, x_val, None).expect("env-only start") {
            continue;
        }
        for y0 in 0..ys.len() {
            let s0 = x0 * n_sys + y0;
            if !eval_expr(&spec.theta_sys, &joints[s0], None).expect("unprimed start") {
                continue;
            }
            let key = NodeKey::Env {
                s: s0,
                pe: 0,
                ps: 0,
                c: 0,
            };
            let id = intern(&mut b, key);
            starts.insert((x0, y0), id);
        }
    }

    while let Some(key) = b.worklist.pop() {
        let id = b.ids[&key];
        let mut edges = Vec::new();
        match key {
            NodeKey::Env { s, pe, ps, .. } => {
                for (xp, &ok) in env_ok[s].iter().enumerate() {
                    if ok {
                        edges.push(intern(&mut b, NodeKey::Sys { s, xp, pe, ps }));
                    }
                }
                if edges.is_empty() {
                    edges.push(sink_even);
                }
            }
            NodeKey::Sys { s, xp, pe, ps } => {
                for yp in 0..ys.len() {
                    let sp = xp * n_sys + yp;
                    if sys_ok[s][sp] {
                        let sys_hit = js[ps][sp];
                        let env_hit = je[pe][sp];
                        let sys_wrap = sys_hit && ps + 1 == ks;
                        let env_wrap = env_hit && pe + 1 == ke;
                        let c = if sys_wrap {
                            2
                        } else if env_wrap {
                            1
                        } else {
                            0
                        };
                        let next = NodeKey::Env {
                            s: sp,
                            pe: if env_hit { (pe + 1) % ke } else { pe },
                            ps: if sys_hit { (ps + 1) % ks } else { ps },
                            c,
                        };
                        edges.push(intern(&mut b, next));
                    }
                }
                if edges.is_empty() {
                    edges.push(sink_odd);
                }
            }
        }
        b.succ[id] = edges;
    }

    Reduction {
        game: ParityGame::new(b.owner, b.color, b.succ),
        starts,
    }
}

/// Strict-semantics realizability verdict via the parity reduction.
///
/// Realizable means: for every environment valuation satisfying the env
/// initial condition there is a system valuation satisfying the sys
/// initial condition whose start node Even wins. A spec whose env initial
/// condition is unsatisfiable is vacuously realizable.
pub fn oracle_realizable(spec: &GR1Spec) -> bool {
    let env_decls: Vec<&VarDecl> = spec.env_vars().collect();
    let xs = enumerate_valuations(&env_decls);
    let red = build_reduction(spec);
    let (even_wins, _) = solve_parity(&red.game);
    for (x0, x_val) in xs.iter().enumerate() {
        if !eval_expr(&spec.theta_env, x_val, None).expect("env-only start") {
            continue;
        }
        let won = red
            .starts
            .iter()
            .any(|(&(sx, _), &node)| sx == x0 && even_wins[node]);
        if !won {
            return false;
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use gr1::parse_spec;

    #[test]
    fn work_zone_rule_is_realizable() {
        let spec = parse_spec(
            "
[env_vars]
work_zone : bool
[sys_vars]
move_slow : bool
[env_init]
!work_zone
[sys_init]
!move_slow
[sys_safety]
next(work_zone) -> next(move_slow)
[env_progress]
!work_zone
[sys_progress]
!move_slow
",
        )
        .unwrap();
        assert!(oracle_realizable(&spec));
    }

    #[test]
    fn unsatisfiable_sys_start_is_unrealizable() {
        let spec = parse_spec(
            "
[env_vars]
x : bool
[sys_vars]
y : bool
[sys_init]
y & !y
",
        )
        .unwrap();
        assert!(!oracle_realizable(&spec));
    }

    #[test]
    fn uncontrollable_progress_goal_is_unrealizable() {
        let spec = parse_spec(
            "
[env_vars]
x : bool
[sys_vars]
y : bool
[sys_progress]
x
",
        )
        .unwrap();
        assert!(!oracle_realizable(&spec));
    }

    #[test]
    fn mirroring_progress_goal_is_realizable() {
        // The system must visit y infinitely often and nothing stops it.
        let spec = parse_spec(
            "
[env_vars]
x : bool
[sys_vars]
y : bool
[sys_progress]
y
",
        )
        .unwrap();
        assert!(oracle_realizable(&spec));
    }

    #[test]
    fn strictness_forbids_punishing_before_the_violation() {
        // The environment may only keep x low; the system promises to keep
        // y low but owes the env goal x. Under strict semantics the system
        // cannot claim the win from the env's future violation.
        let spec = parse_spec(
            "
[env_vars]
x : bool
[sys_vars]
y : bool
[env_init]
!x
[sys_init]
!y
[env_safety]
!next(x)
!y
[sys_safety]
!next(y)
[env_progress]
true
[sys_progress]
x
",
        )
        .unwrap();
        assert!(!oracle_realizable(&spec));
    }

    #[test]
    fn env_deadlock_hands_the_win_to_the_system() {
        // After the first step no env move satisfies the assumptions, so
        // the impossible sys goal is excused.
        let spec = parse_spec(
            "
[env_vars]
x : bool
[sys_vars]
y : bool
[env_init]
!x
[env_safety]
next(x) & !next(x)
[sys_progress]
y & !y
",
        )
        .unwrap();
        assert!(oracle_realizable(&spec));
    }
}
