//! Reactive synthesis for GR(1) road-rule specifications with
//! incremental-resolution perception.
//!
//! The crate is organized as a pipeline:
//!
//! - [`vars`], [`expr`], [`parse`], [`spec`]: typed variable model, Boolean
//!   formula AST with a `next` operator, a line-oriented concrete syntax, and
//!   GR(1) shape validation.
//! - [`tree`]: symbolic refinement trees over environment variables and their
//!   compilation into persistence and perception-pipeline safety formulas.
//! - [`motion`]: weighted transition systems, the 1-D cell corridor
//!   abstraction, movement abstraction, shortest paths, and the reaction
//!   performance metric.
//! - [`game`], [`solve`], [`strategy`], [`trace`]: explicit-state two-player
//!   game construction, the three-nested fixpoint realizability check,
//!   Mealy-machine strategy extraction, closed-loop execution, and trace
//!   checking.
//! - [`sim`]: seeded Monte Carlo harness that reveals perception atoms level
//!   by level and compares a baseline controller against an incremental one.
//!
//! All operations are deterministic: identical inputs and seeds produce
//! byte-identical artifacts.

pub mod bitset;
pub mod expr;
pub mod game;
pub mod motion;
pub mod parse;
pub mod rng;
pub mod sim;
pub mod solve;
pub mod spec;
pub mod strategy;
pub mod trace;
pub mod tree;
pub mod vars;

pub use expr::{eval_expr, BoolExpr, EvalError};
pub use game::{build_game, GameStructure};
pub use motion::{
    min_weight_path, movement_abstraction, performance, trajectory_weight, CellCorridor,
    MovementTS, TransitionSystem,
};
pub use parse::{parse_spec, print_spec, ParseError};
pub use sim::{
    compare, reveal, run_experiment, run_trial, run_trials, sample_ground_truth, summarize,
    ComparisonReport, Histogram, Mode, ScenarioConfig, SimError, TrialResult, WorldState,
};
pub use solve::{
    extract_strategy, solve, solve_with_semantics, Semantics, SolveError, SynthesisResult,
};
pub use spec::{validate_spec, Diagnostic, GR1Spec};
pub use strategy::Strategy;
pub use trace::{closed_loop, verify_trace, Trace, Violation};
pub use tree::{
    build_tree, compile_persistence, compile_pipeline, partition, PerceptionCell, RefinementTree,
    VariablePartition,
};
pub use vars::{Owner, Valuation, VarDecl};
