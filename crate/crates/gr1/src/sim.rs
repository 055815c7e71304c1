//! Monte-Carlo harness driving a synthesized strategy down a cell corridor
//! against randomized perception.
//!
//! Each trial drops the ego at the far end of the corridor and advances it
//! one cell per entry toward the target. A ground-truth event (or none) is
//! sampled per trial; while the event is inside the perception horizon, at
//! most one refinement level flips from unknown to detected per entry:
//! the shallowest undetected level in incremental mode, only the ground
//! level in baseline mode. Detected levels stay detected, so deeper levels
//! can only flip after their ancestors.
//!
//! Every random draw is a pure function of a (seed, trial, entry, slot)
//! coordinate: ground truth at (trial, 0, 0), trial-constant extras at
//! (trial, 0, 1 + i), and the single detection attempt of entry t at
//! (trial, t, 0). The detection coordinate does not depend on which level
//! is attempting, so runs that differ only in mode consume identical
//! randomness: whenever the ground level would flip in a baseline trial,
//! the level attempting at that entry of the matched incremental trial
//! flips too, provided its probability is at least the ground one.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::motion::{performance, CellCorridor, MotionError};
use crate::rng::unit;
use crate::strategy::Strategy;
use crate::vars::{Owner, Valuation, VarTable};

/// Which refinement levels the perception pipeline may report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Only the ground (deepest) level can be detected.
    Baseline,
    /// Levels are detected shallowest-first.
    Incremental,
}

/// One ground-truth outcome and its probability. The reserved event name
/// `none` stands for "no event in the corridor".
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventProb {
    pub event: String,
    pub probability: f64,
}

/// One refinement level: the environment variable it drives and its
/// detection probability by cell distance to the target. Entry `d` is the
/// probability at distance `d`; the last entry extends to all larger
/// distances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelSpec {
    pub var: String,
    pub probabilities: Vec<f64>,
}

/// Trial-constant Boolean environment variable sampled once per trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtraVar {
    pub var: String,
    pub probability: f64,
}

/// Full description of a simulation experiment.
///
/// The distance variable `dist_var` carries the ego's cell distance to
/// the target rendered as a cell name (`c3` at three cells out), or
/// `no_event_value` for the whole trial when no event was sampled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub name: String,
    pub corridor: CellCorridor,
    /// Detection attempts happen only at cell distances within this bound.
    pub horizon: usize,
    pub dist_var: String,
    pub no_event_value: String,
    pub action_var: String,
    /// Action value meaning "not committed yet".
    pub idle_action: String,
    /// Action value the specification forces on an undetected arrival.
    pub infeasible_action: String,
    pub events: Vec<EventProb>,
    /// Refinement levels, shallowest first; the last one is the ground level.
    pub levels: Vec<LevelSpec>,
    #[serde(default)]
    pub extras: Vec<ExtraVar>,
    pub mode: Mode,
    pub trials: u64,
    pub seed: u64,
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        self.corridor.validate()?;
        let bad = |msg: String| Err(SimError::Config(msg));
        if self.trials == 0 {
            return bad("trial count must be positive".to_string());
        }
        if self.levels.is_empty() {
            return bad("at least one refinement level is required".to_string());
        }
        for level in &self.levels {
            if level.probabilities.is_empty() {
                return bad(format!("level `{}` has an empty schedule", level.var));
            }
            if let Some(p) = level
                .probabilities
                .iter()
                .find(|p| !(0.0..=1.0).contains(*p))
            {
                return bad(format!("level `{}` probability {p} outside [0, 1]", level.var));
            }
        }
        if self.events.is_empty() {
            return bad("the ground-truth distribution is empty".to_string());
        }
        let mut total = 0.0;
        for e in &self.events {
            if !(0.0..=1.0).contains(&e.probability) {
                return bad(format!(
                    "event `{}` probability {} outside [0, 1]",
                    e.event, e.probability
                ));
            }
            total += e.probability;
        }
        if (total - 1.0).abs() > 1e-9 {
            return bad(format!("ground-truth probabilities sum to {total}, not 1"));
        }
        for i in 1..self.events.len() {
            if self.events[..i].iter().any(|e| e.event == self.events[i].event) {
                return bad(format!("event `{}` listed twice", self.events[i].event));
            }
        }
        for extra in &self.extras {
            if !(0.0..=1.0).contains(&extra.probability) {
                return bad(format!(
                    "extra `{}` probability {} outside [0, 1]",
                    extra.var, extra.probability
                ));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario configs serialize")
    }

    pub fn from_json(text: &str) -> Result<Self, SimError> {
        let config: ScenarioConfig =
            serde_json::from_str(text).map_err(|e| SimError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    /// Cell distance from the ego's start to the target.
    pub fn start_distance(&self) -> usize {
        self.corridor.cells - 1 - self.corridor.target
    }

    fn cell_at(&self, distance: usize) -> usize {
        self.corridor.target + distance
    }

    fn level_probability(&self, level: usize, distance: usize) -> f64 {
        let probs = &self.levels[level].probabilities;
        probs[distance.min(probs.len() - 1)]
    }
}

/// Simulation failure.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("scenario config: {0}")]
    Config(String),
    #[error("strategy does not model the scenario: {0}")]
    VariableMismatch(String),
    #[error("strategy rejected the environment move at entry {step} of trial {trial}")]
    RejectedMove { trial: u64, step: usize },
    #[error("histograms cover different action sets: {0}")]
    LabelMismatch(String),
    #[error(transparent)]
    Motion(#[from] MotionError),
}

/// Per-trial world the revelation model evolves.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WorldState {
    /// Sampled ground truth; `None` when the trial has no event.
    pub event: Option<String>,
    /// Which refinement levels have been detected so far.
    pub revealed: Vec<bool>,
    /// Sampled values of the trial-constant extras.
    pub extras: Vec<bool>,
}

/// Sample the trial's ground truth from the configured distribution.
/// Returns `None` for the reserved event `none`.
pub fn sample_ground_truth(config: &ScenarioConfig, trial: u64) -> Option<String> {
    let u = unit(config.seed, trial, 0, 0);
    let mut acc = 0.0;
    let mut chosen = config.events.last().map(|e| e.event.as_str());
    for e in &config.events {
        acc += e.probability;
        if u < acc {
            chosen = Some(e.event.as_str());
            break;
        }
    }
    chosen.filter(|&e| e != "none").map(str::to_string)
}

fn sample_world(config: &ScenarioConfig, trial: u64) -> WorldState {
    let extras = config
        .extras
        .iter()
        .enumerate()
        .map(|(i, extra)| unit(config.seed, trial, 0, 1 + i as u64) < extra.probability)
        .collect();
    WorldState {
        event: sample_ground_truth(config, trial),
        revealed: vec![false; config.levels.len()],
        extras,
    }
}

/// Attempt the entry's single detection and return the index of the level
/// that flipped, if any.
///
/// Nothing flips without an event, outside the horizon, or once every
/// level this mode may report is detected. The draw sits at coordinate
/// (trial, step, 0) regardless of which level attempts.
pub fn reveal(
    config: &ScenarioConfig,
    world: &mut WorldState,
    cell: usize,
    trial: u64,
    step: u64,
) -> Option<usize> {
    world.event.as_ref()?;
    let distance = cell.abs_diff(config.corridor.target);
    if distance > config.horizon {
        return None;
    }
    let attempt = match config.mode {
        Mode::Incremental => (0..world.revealed.len()).find(|&i| !world.revealed[i]),
        Mode::Baseline => {
            let ground = world.revealed.len() - 1;
            (!world.revealed[ground]).then_some(ground)
        }
    }?;
    let p = config.level_probability(attempt, distance);
    if unit(config.seed, trial, step, 0) < p {
        world.revealed[attempt] = true;
        Some(attempt)
    } else {
        None
    }
}

/// Outcome of one corridor rollout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub trial: u64,
    pub ground_truth: Option<String>,
    /// Per level, the cell distance at which it was detected.
    pub detection_cells: Vec<Option<usize>>,
    /// Final committed action, if the strategy left the idle value.
    pub action: Option<String>,
    /// Corridor weight from the decisive detection to the target: the
    /// root level's detection in incremental mode, the ground level's in
    /// baseline mode. `None` when the decisive level was never detected.
    pub performance: Option<f64>,
    /// The trial had an event and the decisive level was still
    /// undetected when the ego reached the target.
    pub infeasible: bool,
    /// Joint valuation per entry, for replay checking.
    pub states: Vec<Valuation>,
    /// Strategy node per entry.
    pub nodes: Vec<Option<u32>>,
}

enum Role {
    Dist,
    Level(usize),
    Extra(usize),
}

fn classify_env_vars(strategy: &Strategy, config: &ScenarioConfig) -> Result<Vec<Role>, SimError> {
    strategy
        .vars()
        .iter()
        .filter(|d| d.owner == Owner::Environment)
        .map(|decl| {
            if decl.name == config.dist_var {
                Ok(Role::Dist)
            } else if let Some(i) = config.levels.iter().position(|l| l.var == decl.name) {
                Ok(Role::Level(i))
            } else if let Some(i) = config.extras.iter().position(|e| e.var == decl.name) {
                Ok(Role::Extra(i))
            } else {
                Err(SimError::VariableMismatch(format!(
                    "environment variable `{}` has no scenario counterpart",
                    decl.name
                )))
            }
        })
        .collect()
}

fn bool_label(b: bool) -> &'static str {
    if b {
        "true"
    } else {
        "false"
    }
}

/// Roll one trial of the configured scenario under the given strategy.
///
/// The rollout has `start_distance() + 1` entries; entry `t` has the ego
/// `start_distance() - t` cells from the target. Entry 0 carries the
/// all-undetected initial state; each later entry first runs the
/// revelation attempt at the ego's new distance, then steps the strategy
/// with the resulting environment move.
pub fn run_trial(
    strategy: &Strategy,
    config: &ScenarioConfig,
    trial: u64,
) -> Result<TrialResult, SimError> {
    let roles = classify_env_vars(strategy, config)?;
    let table = VarTable::new(strategy.vars());
    let env_slots = table.owned_slots(Owner::Environment);
    let env_decls: Vec<_> = strategy
        .vars()
        .iter()
        .filter(|d| d.owner == Owner::Environment)
        .cloned()
        .collect();

    let mut world = sample_world(config, trial);
    let start = config.start_distance();
    let mut detection_cells: Vec<Option<usize>> = vec![None; config.levels.len()];
    let mut states = Vec::with_capacity(start + 1);
    let mut nodes = Vec::with_capacity(start + 1);
    let mut node = None;

    for t in 0..=start {
        let distance = start - t;
        if t > 0 {
            if let Some(level) = reveal(config, &mut world, config.cell_at(distance), trial, t as u64)
            {
                detection_cells[level] = Some(distance);
            }
        }
        let mut env_val = Valuation::new();
        for (decl, role) in env_decls.iter().zip(&roles) {
            let value = match role {
                Role::Dist => match &world.event {
                    Some(_) => CellCorridor::cell_name(distance),
                    None => config.no_event_value.clone(),
                },
                Role::Level(i) => bool_label(world.revealed[*i]).to_string(),
                Role::Extra(i) => bool_label(world.extras[*i]).to_string(),
            };
            env_val.set(decl.name.clone(), value);
        }
        let digits = table
            .pack(&env_slots, &env_val)
            .map_err(SimError::VariableMismatch)?;
        let x = table.encode(&env_slots, &digits) as u32;
        let next = if t == 0 {
            strategy.initial_node(x)
        } else {
            node.and_then(|n| strategy.step(n, x).map(|(_, id)| id))
        };
        let n = next.ok_or(SimError::RejectedMove { trial, step: t })?;
        node = Some(n);
        states.push(strategy.joint_valuation(strategy.node(n).state));
        nodes.push(Some(n));
    }

    let final_state = states.last().expect("rollouts have at least one entry");
    let action = final_state
        .get(&config.action_var)
        .ok_or_else(|| {
            SimError::VariableMismatch(format!(
                "system variable `{}` has no scenario counterpart",
                config.action_var
            ))
        })?
        .to_string();
    let action = (action != config.idle_action).then_some(action);

    let decisive = match config.mode {
        Mode::Incremental => 0,
        Mode::Baseline => config.levels.len() - 1,
    };
    let performance = detection_cells[decisive]
        .map(|d| performance(&config.corridor, config.cell_at(d)))
        .transpose()?;
    let infeasible = world.event.is_some() && detection_cells[decisive].is_none();

    Ok(TrialResult {
        trial,
        ground_truth: world.event,
        detection_cells,
        action,
        performance,
        infeasible,
        states,
        nodes,
    })
}

/// Roll every configured trial in parallel, in trial order.
pub fn run_trials(
    strategy: &Strategy,
    config: &ScenarioConfig,
) -> Result<Vec<TrialResult>, SimError> {
    config.validate()?;
    (0..config.trials)
        .into_par_iter()
        .map(|trial| run_trial(strategy, config, trial))
        .collect()
}

/// Count and mean corridor weight for one action label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionCount {
    pub action: String,
    pub count: usize,
    pub mean_performance: Option<f64>,
}

/// Aggregate of the event-carrying trials of one experiment arm.
///
/// Trials without an event say nothing about reaction quality and are
/// excluded from every aggregate; `no_event_trials` reports how many were
/// set aside. Action counts sum to `trials`. `mean_performance` averages
/// the trials whose decisive level was detected (0 when there are none).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub scenario: String,
    pub mode: Mode,
    pub actions: Vec<ActionCount>,
    pub trials: usize,
    pub no_event_trials: usize,
    pub mean_performance: f64,
    pub infeasible_rate: f64,
}

impl Histogram {
    /// Rows `action,count,mean_s`, one per action label.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("action,count,mean_s\n");
        for row in &self.actions {
            let mean = row
                .mean_performance
                .map(|m| format!("{m:.6}"))
                .unwrap_or_default();
            out.push_str(&format!("{},{},{}\n", row.action, row.count, mean));
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("histograms serialize")
    }
}

/// Aggregate finished trials into a histogram over the strategy's action
/// labels (the action variable's domain minus the idle value, in domain
/// order).
pub fn summarize(
    strategy: &Strategy,
    config: &ScenarioConfig,
    trials: &[TrialResult],
) -> Result<Histogram, SimError> {
    let action_decl = strategy
        .vars()
        .iter()
        .find(|d| d.owner == Owner::System && d.name == config.action_var)
        .ok_or_else(|| {
            SimError::VariableMismatch(format!(
                "system variable `{}` has no scenario counterpart",
                config.action_var
            ))
        })?;
    let mut labels: Vec<String> = action_decl
        .domain
        .iter()
        .filter(|v| **v != config.idle_action)
        .cloned()
        .collect();

    let included: Vec<&TrialResult> = trials.iter().filter(|t| t.ground_truth.is_some()).collect();
    for t in &included {
        if let Some(action) = &t.action {
            if !labels.contains(action) {
                labels.push(action.clone());
            }
        }
    }

    let mut actions = Vec::with_capacity(labels.len());
    for label in &labels {
        let hits: Vec<&&TrialResult> = included
            .iter()
            .filter(|t| t.action.as_deref() == Some(label))
            .collect();
        let spans: Vec<f64> = hits.iter().filter_map(|t| t.performance).collect();
        actions.push(ActionCount {
            action: label.clone(),
            count: hits.len(),
            mean_performance: (!spans.is_empty())
                .then(|| spans.iter().sum::<f64>() / spans.len() as f64),
        });
    }
    // Idle-action trials with an event would escape every label; the
    // scenario specifications force a commitment, so surface the gap
    // instead of skewing counts.
    let committed: usize = actions.iter().map(|a| a.count).sum();
    if committed != included.len() {
        return Err(SimError::Config(format!(
            "{} event trial(s) ended uncommitted",
            included.len() - committed
        )));
    }

    let spans: Vec<f64> = included.iter().filter_map(|t| t.performance).collect();
    let mean_performance = if spans.is_empty() {
        0.0
    } else {
        spans.iter().sum::<f64>() / spans.len() as f64
    };
    let infeasible = included.iter().filter(|t| t.infeasible).count();
    let infeasible_rate = if included.is_empty() {
        0.0
    } else {
        infeasible as f64 / included.len() as f64
    };

    Ok(Histogram {
        scenario: config.name.clone(),
        mode: config.mode,
        actions,
        trials: included.len(),
        no_event_trials: trials.len() - included.len(),
        mean_performance,
        infeasible_rate,
    })
}

/// Roll every trial and aggregate the outcome.
pub fn run_experiment(
    strategy: &Strategy,
    config: &ScenarioConfig,
) -> Result<Histogram, SimError> {
    let trials = run_trials(strategy, config)?;
    summarize(strategy, config, &trials)
}

/// Count shift for one action label between the two arms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionDelta {
    pub action: String,
    pub baseline: usize,
    pub incremental: usize,
    pub delta: i64,
}

/// Side-by-side aggregate of a baseline and an incremental arm. Deltas
/// are incremental minus baseline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub scenario: String,
    pub baseline_trials: usize,
    pub incremental_trials: usize,
    pub mean_performance_baseline: f64,
    pub mean_performance_incremental: f64,
    pub mean_performance_delta: f64,
    pub infeasible_rate_baseline: f64,
    pub infeasible_rate_incremental: f64,
    pub infeasible_rate_delta: f64,
    pub actions: Vec<ActionDelta>,
}

impl ComparisonReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("comparison reports serialize")
    }
}

/// Compare two arms of the same scenario. The histograms must cover the
/// same action labels.
pub fn compare(baseline: &Histogram, incremental: &Histogram) -> Result<ComparisonReport, SimError> {
    let labels = |h: &Histogram| -> Vec<String> {
        let mut v: Vec<String> = h.actions.iter().map(|a| a.action.clone()).collect();
        v.sort();
        v
    };
    if labels(baseline) != labels(incremental) {
        return Err(SimError::LabelMismatch(format!(
            "baseline covers {:?}, incremental covers {:?}",
            labels(baseline),
            labels(incremental)
        )));
    }
    let actions = incremental
        .actions
        .iter()
        .map(|inc| {
            let base = baseline
                .actions
                .iter()
                .find(|b| b.action == inc.action)
                .expect("label sets match");
            ActionDelta {
                action: inc.action.clone(),
                baseline: base.count,
                incremental: inc.count,
                delta: inc.count as i64 - base.count as i64,
            }
        })
        .collect();
    Ok(ComparisonReport {
        scenario: incremental.scenario.clone(),
        baseline_trials: baseline.trials,
        incremental_trials: incremental.trials,
        mean_performance_baseline: baseline.mean_performance,
        mean_performance_incremental: incremental.mean_performance,
        mean_performance_delta: incremental.mean_performance - baseline.mean_performance,
        infeasible_rate_baseline: baseline.infeasible_rate,
        infeasible_rate_incremental: incremental.infeasible_rate,
        infeasible_rate_delta: incremental.infeasible_rate - baseline.infeasible_rate,
        actions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::build_game;
    use crate::parse::parse_spec;
    use crate::solve::solve;
    use crate::trace::{verify_trace, Trace};

    /// Two-level chain over a three-cell corridor: commit to the action
    /// matching the distance at the first (root) detection, `late` on an
    /// undetected arrival.
    const CHAIN: &str = "
[env_vars]
root : bool
leaf : bool
dist : { none, c0, c1, c2 }
[sys_vars]
act : { idle, go2, go1, stop, late }
[env_init]
!root & !leaf & (dist = c2 | dist = none)
[sys_init]
act = idle
[env_safety]
dist = none -> next(dist = none)
dist = c2 -> next(dist = c1)
dist = c1 -> next(dist = c0)
dist = c0 -> next(dist = c0)
root -> next(root)
leaf -> next(leaf)
next(leaf) -> next(root)
next(root) -> !next(dist = none)
[sys_safety]
act = idle & !next(root) & !next(dist = c0) -> next(act = idle)
act = idle & next(root) & next(dist = c2) -> next(act = go2)
act = idle & next(root) & next(dist = c1) -> next(act = go1)
act = idle & next(root) & next(dist = c0) -> next(act = stop)
act = idle & !next(root) & next(dist = c0) -> next(act = late)
act = go2 -> next(act = go2)
act = go1 -> next(act = go1)
act = stop -> next(act = stop)
act = late -> next(act = late)
";

    /// Ground-level-only variant of the same contract.
    const CHAIN_BASE: &str = "
[env_vars]
leaf : bool
dist : { none, c0, c1, c2 }
[sys_vars]
act : { idle, go2, go1, stop, late }
[env_init]
!leaf & (dist = c2 | dist = none)
[sys_init]
act = idle
[env_safety]
dist = none -> next(dist = none)
dist = c2 -> next(dist = c1)
dist = c1 -> next(dist = c0)
dist = c0 -> next(dist = c0)
leaf -> next(leaf)
next(leaf) -> !next(dist = none)
[sys_safety]
act = idle & !next(leaf) & !next(dist = c0) -> next(act = idle)
act = idle & next(leaf) & next(dist = c2) -> next(act = go2)
act = idle & next(leaf) & next(dist = c1) -> next(act = go1)
act = idle & next(leaf) & next(dist = c0) -> next(act = stop)
act = idle & !next(leaf) & next(dist = c0) -> next(act = late)
act = go2 -> next(act = go2)
act = go1 -> next(act = go1)
act = stop -> next(act = stop)
act = late -> next(act = late)
";

    fn chain_strategy(src: &str) -> Strategy {
        let spec = parse_spec(src).unwrap();
        let game = build_game(&spec).unwrap();
        solve(&game).strategy.expect("chain specs are realizable")
    }

    fn chain_config(mode: Mode) -> ScenarioConfig {
        ScenarioConfig {
            name: "chain".to_string(),
            corridor: CellCorridor::new(3, 0),
            horizon: 2,
            dist_var: "dist".to_string(),
            no_event_value: "none".to_string(),
            action_var: "act".to_string(),
            idle_action: "idle".to_string(),
            infeasible_action: "late".to_string(),
            events: vec![
                EventProb {
                    event: "obstacle".to_string(),
                    probability: 1.0,
                },
            ],
            levels: vec![
                LevelSpec {
                    var: "root".to_string(),
                    probabilities: vec![1.0],
                },
                LevelSpec {
                    var: "leaf".to_string(),
                    probabilities: vec![1.0],
                },
            ],
            extras: Vec::new(),
            mode: Mode::Incremental,
            trials: 1,
            seed: 7,
        }
        .with_mode(mode)
    }

    impl ScenarioConfig {
        fn with_mode(mut self, mode: Mode) -> Self {
            self.mode = mode;
            self
        }
    }

    #[test]
    fn certain_detection_commits_at_the_first_reachable_distance() {
        let strategy = chain_strategy(CHAIN);
        let config = chain_config(Mode::Incremental);
        let result = run_trial(&strategy, &config, 0).unwrap();
        assert_eq!(result.ground_truth.as_deref(), Some("obstacle"));
        // Root flips at the first post-start entry (distance 1), leaf one
        // entry later.
        assert_eq!(result.detection_cells, vec![Some(1), Some(0)]);
        assert_eq!(result.action.as_deref(), Some("go1"));
        assert_eq!(result.performance, Some(1.0));
        assert!(!result.infeasible);
        assert_eq!(result.states.len(), 3);
    }

    #[test]
    fn blind_sensors_force_the_late_action_and_the_infeasible_flag() {
        let strategy = chain_strategy(CHAIN);
        let mut config = chain_config(Mode::Incremental);
        for level in &mut config.levels {
            level.probabilities = vec![0.0];
        }
        let result = run_trial(&strategy, &config, 0).unwrap();
        assert_eq!(result.detection_cells, vec![None, None]);
        assert_eq!(result.action.as_deref(), Some("late"));
        assert_eq!(result.performance, None);
        assert!(result.infeasible);
    }

    #[test]
    fn event_free_trials_are_counted_but_not_aggregated() {
        let strategy = chain_strategy(CHAIN);
        let mut config = chain_config(Mode::Incremental);
        config.events = vec![EventProb {
            event: "none".to_string(),
            probability: 1.0,
        }];
        config.trials = 10;
        let trials = run_trials(&strategy, &config).unwrap();
        assert!(trials.iter().all(|t| t.ground_truth.is_none()
            && t.action.is_none()
            && !t.infeasible
            && t.performance.is_none()));
        let hist = summarize(&strategy, &config, &trials).unwrap();
        assert_eq!(hist.trials, 0);
        assert_eq!(hist.no_event_trials, 10);
        assert!(hist.actions.iter().all(|a| a.count == 0));
    }

    #[test]
    fn baseline_mode_reveals_only_the_ground_level() {
        let mut config = chain_config(Mode::Baseline);
        config.levels[0].probabilities = vec![1.0];
        config.levels[1].probabilities = vec![1.0];
        let mut world = sample_world(&config, 0);
        assert!(world.event.is_some());
        let mut flipped = Vec::new();
        for step in 1..=2u64 {
            if let Some(level) = reveal(&config, &mut world, (2 - step) as usize, 0, step) {
                flipped.push(level);
            }
        }
        assert_eq!(flipped, vec![1]);
        assert!(!world.revealed[0]);
        assert!(world.revealed[1]);
    }

    #[test]
    fn revelation_is_monotone_and_ancestor_first() {
        let mut config = chain_config(Mode::Incremental);
        config.levels[0].probabilities = vec![0.6];
        config.levels[1].probabilities = vec![0.6];
        config.corridor = CellCorridor::new(8, 0);
        config.horizon = 7;
        for trial in 0..200u64 {
            let mut world = sample_world(&config, trial);
            let mut seen = vec![false; config.levels.len()];
            for step in 1..=7u64 {
                let cell = 7 - step as usize;
                let flipped = reveal(&config, &mut world, cell, trial, step);
                if let Some(level) = flipped {
                    // Exactly the shallowest unrevealed level flips.
                    assert!(seen[..level].iter().all(|&s| s));
                    assert!(!seen[level]);
                    seen[level] = true;
                }
                // Revealed levels never flip back.
                for (i, &s) in seen.iter().enumerate() {
                    assert_eq!(world.revealed[i], s);
                }
            }
        }
    }

    #[test]
    fn detection_attempts_respect_the_horizon() {
        let mut config = chain_config(Mode::Incremental);
        config.corridor = CellCorridor::new(8, 0);
        config.horizon = 2;
        config.levels[0].probabilities = vec![1.0];
        let mut world = sample_world(&config, 0);
        assert_eq!(reveal(&config, &mut world, 7, 0, 1), None);
        assert_eq!(reveal(&config, &mut world, 3, 0, 2), None);
        assert_eq!(reveal(&config, &mut world, 2, 0, 3), Some(0));
    }

    #[test]
    fn ground_truth_sampling_honors_a_point_mass() {
        let mut config = chain_config(Mode::Incremental);
        config.events = vec![
            EventProb {
                event: "obstacle".to_string(),
                probability: 0.0,
            },
            EventProb {
                event: "none".to_string(),
                probability: 1.0,
            },
        ];
        for trial in 0..500 {
            assert_eq!(sample_ground_truth(&config, trial), None);
        }
    }

    #[test]
    fn ground_truth_sampling_tracks_the_distribution() {
        let mut config = chain_config(Mode::Incremental);
        config.events = vec![
            EventProb {
                event: "obstacle".to_string(),
                probability: 0.7,
            },
            EventProb {
                event: "none".to_string(),
                probability: 0.3,
            },
        ];
        let n = 20_000u64;
        let hits = (0..n)
            .filter(|&t| sample_ground_truth(&config, t).is_some())
            .count();
        let freq = hits as f64 / n as f64;
        // Four standard deviations of a Bernoulli(0.7) mean over n draws.
        assert!((freq - 0.7).abs() < 4.0 * (0.7f64 * 0.3 / n as f64).sqrt());
    }

    #[test]
    fn first_detection_distances_follow_the_geometric_law() {
        let mut config = chain_config(Mode::Incremental);
        config.corridor = CellCorridor::new(8, 0);
        config.horizon = 7;
        config.levels = vec![LevelSpec {
            var: "root".to_string(),
            probabilities: vec![0.5],
        }];
        let n = 20_000u64;
        let mut at_distance = [0usize; 7];
        let mut missed = 0usize;
        for trial in 0..n {
            let mut world = sample_world(&config, trial);
            let mut hit = None;
            for step in 1..=7u64 {
                let cell = 7 - step as usize;
                if reveal(&config, &mut world, cell, trial, step).is_some() {
                    hit = Some(cell);
                    break;
                }
            }
            match hit {
                Some(d) => at_distance[d] += 1,
                None => missed += 1,
            }
        }
        // k-th attempt happens at distance 7 - k and succeeds with 0.5^k.
        for k in 1..=7usize {
            let expect = 0.5f64.powi(k as i32);
            let freq = at_distance[7 - k] as f64 / n as f64;
            let sigma = (expect * (1.0 - expect) / n as f64).sqrt();
            assert!(
                (freq - expect).abs() < 4.0 * sigma + 1e-3,
                "distance {} frequency {freq} vs {expect}",
                7 - k
            );
        }
        let expect_miss = 0.5f64.powi(7);
        assert!((missed as f64 / n as f64 - expect_miss).abs() < 4e-3);
    }

    #[test]
    fn earlier_coarse_detection_never_loses_to_the_ground_only_arm() {
        let inc_strategy = chain_strategy(CHAIN);
        let base_strategy = chain_strategy(CHAIN_BASE);
        // Coarse detection at least as likely as ground detection at every
        // distance; matched trials then share detection draws, so the
        // ordering below holds per trial, not just in the mean.
        let mut config = chain_config(Mode::Incremental);
        config.levels[0].probabilities = vec![0.9];
        config.levels[1].probabilities = vec![0.9, 0.3];
        config.trials = 300;
        let inc_trials = run_trials(&inc_strategy, &config).unwrap();
        let base_trials =
            run_trials(&base_strategy, &config.clone().with_mode(Mode::Baseline)).unwrap();
        for (inc, base) in inc_trials.iter().zip(&base_trials) {
            assert_eq!(inc.ground_truth, base.ground_truth);
            if let Some(sb) = base.performance {
                let si = inc
                    .performance
                    .expect("coarse detection cannot trail ground detection");
                assert!(si >= sb, "trial {}: {si} < {sb}", inc.trial);
            }
            if inc.infeasible {
                assert!(base.infeasible, "trial {}", inc.trial);
            }
        }
    }

    #[test]
    fn experiments_are_reproducible_and_their_counts_add_up() {
        let strategy = chain_strategy(CHAIN);
        let mut config = chain_config(Mode::Incremental);
        config.events = vec![
            EventProb {
                event: "obstacle".to_string(),
                probability: 0.8,
            },
            EventProb {
                event: "none".to_string(),
                probability: 0.2,
            },
        ];
        for level in &mut config.levels {
            level.probabilities = vec![0.9, 0.4];
        }
        config.trials = 400;
        let a = run_experiment(&strategy, &config).unwrap();
        let b = run_experiment(&strategy, &config).unwrap();
        assert_eq!(a.to_json(), b.to_json());
        assert_eq!(
            a.actions.iter().map(|r| r.count).sum::<usize>(),
            a.trials
        );
        assert_eq!(a.trials + a.no_event_trials, 400);
        assert!(a.trials > 0);
    }

    #[test]
    fn every_rollout_honors_the_system_safety_contract() {
        let spec = parse_spec(CHAIN).unwrap();
        let strategy = chain_strategy(CHAIN);
        let mut config = chain_config(Mode::Incremental);
        config.events = vec![
            EventProb {
                event: "obstacle".to_string(),
                probability: 0.7,
            },
            EventProb {
                event: "none".to_string(),
                probability: 0.3,
            },
        ];
        for level in &mut config.levels {
            level.probabilities = vec![0.8, 0.5];
        }
        config.trials = 200;
        for result in run_trials(&strategy, &config).unwrap() {
            let trace = Trace {
                states: result.states.clone(),
                nodes: result.nodes.clone(),
                first_env_violation: None,
            };
            let violations = verify_trace(&trace, &spec);
            assert!(
                violations
                    .iter()
                    .all(|v| !matches!(v, crate::trace::Violation::Safety { side: Owner::System, .. }
                        | crate::trace::Violation::Initial { side: Owner::System })),
                "trial {}: {violations:?}",
                result.trial
            );
        }
    }

    #[test]
    fn comparing_mismatched_action_sets_is_refused() {
        let strategy = chain_strategy(CHAIN);
        let config = chain_config(Mode::Incremental);
        let trials = run_trials(&strategy, &config).unwrap();
        let a = summarize(&strategy, &config, &trials).unwrap();
        let mut b = a.clone();
        b.actions.pop();
        assert!(matches!(compare(&a, &b), Err(SimError::LabelMismatch(_))));
        let same = compare(&a, &a).unwrap();
        assert_eq!(same.mean_performance_delta, 0.0);
        assert_eq!(same.infeasible_rate_delta, 0.0);
        assert!(same.actions.iter().all(|d| d.delta == 0));
    }

    #[test]
    fn foreign_strategies_are_rejected_up_front() {
        let src = "
[env_vars]
hazard : bool
[sys_vars]
slow : bool
[sys_safety]
(next(slow) -> next(hazard)) & (next(hazard) -> next(slow))
";
        let strategy = chain_strategy(src);
        let config = chain_config(Mode::Incremental);
        match run_trial(&strategy, &config, 0) {
            Err(SimError::VariableMismatch(msg)) => assert!(msg.contains("hazard")),
            other => panic!("expected a variable mismatch, got {other:?}"),
        }
    }

    #[test]
    fn malformed_configs_are_rejected() {
        let mut config = chain_config(Mode::Incremental);
        config.events[0].probability = 0.5;
        assert!(matches!(config.validate(), Err(SimError::Config(_))));

        let mut config = chain_config(Mode::Incremental);
        config.levels[0].probabilities = vec![1.2];
        assert!(matches!(config.validate(), Err(SimError::Config(_))));

        let mut config = chain_config(Mode::Incremental);
        config.trials = 0;
        assert!(matches!(config.validate(), Err(SimError::Config(_))));

        let mut config = chain_config(Mode::Incremental);
        config.levels.clear();
        assert!(matches!(config.validate(), Err(SimError::Config(_))));
    }
}
