//! Closed-loop rollouts of a synthesized strategy and replay checking of
//! finite traces against a specification.
//!
//! A [`Trace`] is a finite sequence of joint valuations, optionally
//! annotated with the strategy node that produced each entry.
//! [`closed_loop`] drives a [`Strategy`] against an arbitrary environment
//! policy; [`verify_trace`] replays a trace against a specification and
//! reports every violated conjunct.
//!
//! Progress conjuncts are checked only when the trace ends in a lasso: the
//! final entry repeats an earlier (state, node) pair, so the segment
//! between the two occurrences would repeat forever under the same
//! policies. A progress conjunct is violated when it holds nowhere on that
//! segment.

use crate::expr::eval_expr;
use crate::spec::GR1Spec;
use crate::strategy::Strategy;
use crate::vars::{Owner, Valuation, VarTable};

/// Finite run of joint valuations.
///
/// `nodes[t]` is the strategy node that chose the system half of
/// `states[t]`, or `None` when the entry did not come from a strategy
/// (hand-built traces, or every entry from the first inadmissible
/// environment move onward). `first_env_violation` is the index of the
/// first entry whose environment move the strategy refused; from that
/// entry on the rollout freezes the system half.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trace {
    pub states: Vec<Valuation>,
    pub nodes: Vec<Option<u32>>,
    pub first_env_violation: Option<usize>,
}

impl Trace {
    /// Wrap a bare state sequence with no strategy annotations.
    pub fn from_states(states: Vec<Valuation>) -> Self {
        let nodes = vec![None; states.len()];
        Trace {
            states,
            nodes,
            first_env_violation: None,
        }
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }
}

/// Run `strategy` against an environment policy for `steps` entries.
///
/// The policy receives the entry index and the previous joint valuation
/// (`None` at the first entry) and must return a full valuation of the
/// environment variables. Entry 0 is resolved through the strategy's
/// initial dispatch, later entries through [`Strategy::step`].
///
/// An environment move the strategy has no edge for (an initial state
/// outside the assumption, or a move violating environment safety) marks
/// `first_env_violation` and freezes the system half at its previous
/// value (index 0 of every owned slot at entry 0); the rollout continues
/// so the caller can still inspect the tail.
///
/// Panics if the policy assigns unknown variables or values.
pub fn closed_loop(
    strategy: &Strategy,
    mut env_policy: impl FnMut(usize, Option<&Valuation>) -> Valuation,
    steps: usize,
) -> Trace {
    let table = VarTable::new(strategy.vars());
    let env_slots = table.owned_slots(Owner::Environment);

    let mut states: Vec<Valuation> = Vec::with_capacity(steps);
    let mut nodes: Vec<Option<u32>> = Vec::with_capacity(steps);
    let mut first_env_violation = None;
    let mut node: Option<u32> = None;
    let mut sys_half = Valuation::new();

    for t in 0..steps {
        let env_val = env_policy(t, states.last());
        let digits = table
            .pack(&env_slots, &env_val)
            .expect("environment policy must assign every environment variable");
        let x = table.encode(&env_slots, &digits) as u32;

        let next = if t == 0 {
            strategy.initial_node(x)
        } else {
            node.and_then(|n| strategy.step(n, x).map(|(_, next)| next))
        };
        match next {
            Some(n) => {
                node = Some(n);
                let joint = strategy.joint_valuation(strategy.node(n).state);
                sys_half = sys_part(strategy, &joint);
                states.push(joint);
                nodes.push(Some(n));
            }
            None => {
                if first_env_violation.is_none() {
                    first_env_violation = Some(t);
                }
                node = None;
                if t == 0 {
                    sys_half = strategy.sys_valuation(0);
                }
                states.push(env_val.union(&sys_half));
                nodes.push(None);
            }
        }
    }

    Trace {
        states,
        nodes,
        first_env_violation,
    }
}

fn sys_part(strategy: &Strategy, joint: &Valuation) -> Valuation {
    let mut out = Valuation::new();
    for decl in strategy.vars() {
        if decl.owner == Owner::System {
            if let Some(v) = joint.get(&decl.name) {
                out.set(decl.name.clone(), v.to_string());
            }
        }
    }
    out
}

/// A specification conjunct falsified by a trace.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    /// The first entry falsifies the side's initial condition.
    Initial { side: Owner },
    /// The transition from entry `step` to `step + 1` falsifies a safety
    /// conjunct.
    Safety {
        side: Owner,
        step: usize,
        formula: String,
    },
    /// A progress conjunct holds nowhere on the repeating segment that
    /// starts at entry `loop_start`.
    Progress {
        side: Owner,
        formula: String,
        loop_start: usize,
    },
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let side = |o: &Owner| match o {
            Owner::Environment => "environment",
            Owner::System => "system",
        };
        match self {
            Violation::Initial { side: s } => {
                write!(f, "{} initial condition fails at entry 0", side(s))
            }
            Violation::Safety {
                side: s,
                step,
                formula,
            } => write!(
                f,
                "{} safety `{formula}` fails on the move from entry {step} to {}",
                side(s),
                step + 1
            ),
            Violation::Progress {
                side: s,
                formula,
                loop_start,
            } => write!(
                f,
                "{} progress `{formula}` never holds on the loop from entry {loop_start}",
                side(s)
            ),
        }
    }
}

/// Replay a trace against a specification and collect every violated
/// conjunct: initial conditions first, then safety conjuncts in step
/// order (environment before system at each step), then progress
/// conjuncts when the trace ends in a lasso.
///
/// Expects a shape-clean specification and trace valuations that assign
/// every declared variable; panics otherwise.
pub fn verify_trace(trace: &Trace, spec: &GR1Spec) -> Vec<Violation> {
    let mut out = Vec::new();
    if trace.is_empty() {
        return out;
    }
    let first = &trace.states[0];
    let holds = |formula: &crate::expr::BoolExpr, now: &Valuation, next: Option<&Valuation>| {
        eval_expr(formula, now, next).expect("trace valuations must assign every declared variable")
    };

    if !holds(&spec.theta_env, first, None) {
        out.push(Violation::Initial {
            side: Owner::Environment,
        });
    }
    if !holds(&spec.theta_sys, first, None) {
        out.push(Violation::Initial {
            side: Owner::System,
        });
    }

    for t in 0..trace.len().saturating_sub(1) {
        let now = &trace.states[t];
        let next = &trace.states[t + 1];
        for (side, formulas) in [
            (Owner::Environment, &spec.env_safety),
            (Owner::System, &spec.sys_safety),
        ] {
            for formula in formulas {
                if !holds(formula, now, Some(next)) {
                    out.push(Violation::Safety {
                        side,
                        step: t,
                        formula: formula.to_string(),
                    });
                }
            }
        }
    }

    let last = trace.len() - 1;
    let lasso = (0..last).find(|&i| {
        trace.states[i] == trace.states[last] && trace.nodes[i] == trace.nodes[last]
    });
    if let Some(loop_start) = lasso {
        for (side, formulas) in [
            (Owner::Environment, &spec.env_progress),
            (Owner::System, &spec.sys_progress),
        ] {
            for formula in formulas {
                let satisfied =
                    (loop_start..last).any(|t| holds(formula, &trace.states[t], None));
                if !satisfied {
                    out.push(Violation::Progress {
                        side,
                        formula: formula.to_string(),
                        loop_start,
                    });
                }
            }
        }
    }

    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::build_game;
    use crate::parse::parse_spec;
    use crate::solve::solve;

    const MIRROR: &str = "
[env_vars]
hazard : bool
[sys_vars]
slow : bool
[env_init]
!hazard
[sys_init]
!slow
[sys_safety]
(next(slow) -> next(hazard)) & (next(hazard) -> next(slow))
[env_progress]
!hazard
[sys_progress]
(slow -> hazard) & (hazard -> slow)
";

    fn mirror_strategy() -> (GR1Spec, Strategy) {
        let spec = parse_spec(MIRROR).unwrap();
        let game = build_game(&spec).unwrap();
        let result = solve(&game);
        (spec, result.strategy.expect("mirror spec is realizable"))
    }

    fn env(hazard: bool) -> Valuation {
        Valuation::from_pairs([("hazard", if hazard { "true" } else { "false" })])
    }

    #[test]
    fn hostile_environment_breaks_its_own_progress_but_not_system_safety() {
        let (spec, strategy) = mirror_strategy();
        // Hazard forever after the mandated clean start.
        let trace = closed_loop(&strategy, |t, _| env(t > 0), 12);
        assert_eq!(trace.len(), 12);
        assert_eq!(trace.first_env_violation, None);
        for t in 1..trace.len() {
            assert!(trace.states[t].is_true("slow"), "mirror broken at {t}");
        }
        let violations = verify_trace(&trace, &spec);
        assert_eq!(violations.len(), 1);
        match &violations[0] {
            Violation::Progress {
                side: Owner::Environment,
                formula,
                ..
            } => assert_eq!(formula, "!hazard"),
            other => panic!("expected an environment progress violation, got {other}"),
        }
    }

    #[test]
    fn zero_entries_make_an_empty_clean_trace() {
        let (spec, strategy) = mirror_strategy();
        let trace = closed_loop(&strategy, |_, _| env(false), 0);
        assert!(trace.is_empty());
        assert!(verify_trace(&trace, &spec).is_empty());
    }

    #[test]
    fn ignoring_the_hazard_is_flagged_as_a_system_safety_violation() {
        let spec = parse_spec(MIRROR).unwrap();
        let mk = |hazard: &str, slow: &str| {
            Valuation::from_pairs([("hazard", hazard), ("slow", slow)])
        };
        let trace = Trace::from_states(vec![
            mk("false", "false"),
            mk("true", "false"),
            mk("true", "true"),
        ]);
        let violations = verify_trace(&trace, &spec);
        assert_eq!(
            violations,
            vec![Violation::Safety {
                side: Owner::System,
                step: 0,
                formula: "(next(slow) -> next(hazard)) & (next(hazard) -> next(slow))"
                    .to_string(),
            }]
        );
    }

    #[test]
    fn a_repeating_tail_without_the_goal_is_a_progress_violation() {
        let spec = parse_spec(MIRROR).unwrap();
        let mk = |hazard: &str, slow: &str| {
            Valuation::from_pairs([("hazard", hazard), ("slow", slow)])
        };
        // Clean prefix, then the pair (hazard, slow) repeats: entries 1 and 3
        // close a loop on which !hazard never holds while slow <-> hazard
        // always does.
        let trace = Trace::from_states(vec![
            mk("false", "false"),
            mk("true", "true"),
            mk("true", "true"),
            mk("true", "true"),
        ]);
        let violations = verify_trace(&trace, &spec);
        assert_eq!(
            violations,
            vec![Violation::Progress {
                side: Owner::Environment,
                formula: "!hazard".to_string(),
                loop_start: 1,
            }]
        );
    }

    #[test]
    fn an_off_script_environment_move_freezes_the_system_half() {
        let src = "
[env_vars]
hazard : bool
[sys_vars]
ack : bool
[env_init]
!hazard
[sys_init]
!ack
[env_safety]
!next(hazard)
[sys_safety]
!next(ack)
";
        let spec = parse_spec(src).unwrap();
        let game = build_game(&spec).unwrap();
        let strategy = solve(&game).strategy.expect("spec is realizable");
        // The assumption forbids the hazard ever turning on; raise it at
        // entry 2 anyway.
        let trace = closed_loop(&strategy, |t, _| env(t == 2), 5);
        assert_eq!(trace.first_env_violation, Some(2));
        assert!(trace.nodes[1].is_some());
        assert!(trace.nodes[2..].iter().all(|n| n.is_none()));
        // The system half froze at its last on-script value.
        assert!(!trace.states[2].is_true("ack"));
        let violations = verify_trace(&trace, &spec);
        assert_eq!(
            violations,
            vec![Violation::Safety {
                side: Owner::Environment,
                step: 1,
                formula: "!next(hazard)".to_string(),
            }]
        );
    }
}
