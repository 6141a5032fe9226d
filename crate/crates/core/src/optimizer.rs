//! JT-MinMax: grow a JT pattern one link at a time, accepting a link only
//! when a sufficient condition certifies that the new fixed point is
//! componentwise no larger than the current one.
//!
//! For a candidate link `(c, j)` with new pattern `k'`, the test iterates
//! `x(t) = f^k(h^k'(x(t-1)))` from the current fixed point and accepts at the
//! first `t` where `f^k'_c(h^k'(x(t))) <= x_c(t)`.

use crate::error::{Error, Result};
use crate::model::{mixed_map_into, JTPattern, LoadVector, NetworkScenario};
use crate::solver::{self, FixedPointResult, SolverConfig};

/// What the next candidate test starts from after a link is accepted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Continuation {
    /// Re-solve the fixed point of the grown pattern.
    #[default]
    Reconverge,
    /// Keep the iterate at which the condition fired.
    FromIterate,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerConfig {
    /// Full passes over all (cell, UE) candidates.
    pub sweeps: usize,
    /// Iteration budget of each sufficient-condition test.
    pub condition_iters: usize,
    /// Per-UE cap on serving cells.
    pub max_serving: usize,
    pub solver: SolverConfig,
    pub continuation: Continuation,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            sweeps: 5,
            condition_iters: 20,
            max_serving: 2,
            solver: SolverConfig::default(),
            continuation: Continuation::Reconverge,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self, cells: usize) -> Result<()> {
        if self.sweeps == 0 {
            return Err(Error::param("sweeps", "must be at least 1"));
        }
        if self.condition_iters == 0 {
            return Err(Error::param("condition_iters", "must be at least 1"));
        }
        if self.max_serving == 0 || self.max_serving > cells {
            return Err(Error::param(
                "max_serving",
                format!("{} outside 1..={cells}", self.max_serving),
            ));
        }
        self.solver.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConditionOutcome {
    /// Condition held at this iteration (1-based).
    AcceptedAt(usize),
    NotDetected,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AcceptedMove {
    pub cell: usize,
    pub ue: usize,
    pub sweep: usize,
    pub condition_iteration: usize,
    pub max_load_before: f64,
    pub max_load_after: f64,
    /// `max_i (x_new_i - x_old_i)` between the fixed points before and after
    /// the move; nonpositive up to solver tolerance.
    pub max_increase: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizeResult {
    pub pattern: JTPattern,
    pub load: FixedPointResult,
    pub initial: FixedPointResult,
    pub accepted_moves: Vec<AcceptedMove>,
    /// Max load of the initial fixed point, then after each sweep.
    pub trace: Vec<f64>,
}

impl OptimizeResult {
    pub fn max_load(&self) -> f64 {
        self.load.max_load()
    }
}

/// Each UE served by the single cell with the strongest received power;
/// ties go to the lowest cell index.
pub fn best_signal_association(scenario: &NetworkScenario) -> JTPattern {
    let n = scenario.num_cells();
    let sets: Vec<Vec<usize>> = (0..scenario.num_ues())
        .map(|j| {
            let mut best = 0;
            for i in 1..n {
                if scenario.received_at(j)[i] > scenario.received_at(j)[best] {
                    best = i;
                }
            }
            vec![best]
        })
        .collect();
    JTPattern::from_serving_sets(n, &sets, n).expect("every UE gets one serving cell")
}

fn single_flip(base: &JTPattern, expanded: &JTPattern) -> Result<(usize, usize)> {
    let diff = base.differences(expanded)?;
    match diff.as_slice() {
        [(i, j)] if !base.serves(*i, *j) => Ok((*i, *j)),
        _ => Err(Error::Precondition(format!(
            "expected exactly one 0 -> 1 flip, found {} differing entries",
            diff.len()
        ))),
    }
}

/// Checks `f(h^k'(x)) <= min(f(h(x)), f^k'(h^k'(x)))` componentwise, where
/// `k'` adds one link to `k`.
pub fn lemma3_check(
    scenario: &NetworkScenario,
    base_pattern: &JTPattern,
    expanded_pattern: &JTPattern,
    x: &LoadVector,
) -> Result<bool> {
    base_pattern.check_against(scenario)?;
    expanded_pattern.check_against(scenario)?;
    single_flip(base_pattern, expanded_pattern)?;
    let mixed = crate::model::mixed_coupled_map(scenario, base_pattern, expanded_pattern, x)?;
    let old = crate::model::coupled_map(scenario, base_pattern, x)?;
    let new = crate::model::coupled_map(scenario, expanded_pattern, x)?;
    Ok((0..scenario.num_cells()).all(|i| mixed[i] <= old[i].min(new[i])))
}

fn map_residual(scenario: &NetworkScenario, pattern: &JTPattern, x: &[f64]) -> f64 {
    let mut out = vec![0.0; x.len()];
    mixed_map_into(scenario, pattern, pattern, x, &mut out);
    out.iter().zip(x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
}

/// Runs the condition test; returns the outcome and the iterate it stopped at.
fn run_condition(
    scenario: &NetworkScenario,
    pattern: &JTPattern,
    candidate: &JTPattern,
    fixed_point: &[f64],
    cell: usize,
    budget: usize,
) -> (ConditionOutcome, Vec<f64>) {
    let ue_count = scenario.num_ues();
    let mut x = fixed_point.to_vec();
    let mut next = vec![0.0; x.len()];
    for k in 1..=budget {
        mixed_map_into(scenario, pattern, candidate, &x, &mut next);
        std::mem::swap(&mut x, &mut next);
        // Only the probed cell's row of f^k'(h^k'(x)) is needed.
        let mut load_c = 0.0;
        for j in 0..ue_count {
            if candidate.serves(cell, j) {
                let gamma = crate::model::sinr_of(scenario, candidate.column(j), j, &x);
                load_c += crate::model::ue_share(scenario, j, gamma);
            }
        }
        if load_c <= x[cell] {
            return (ConditionOutcome::AcceptedAt(k), x);
        }
    }
    (ConditionOutcome::NotDetected, x)
}

/// Tests whether adding the link `(cell, ue)` provably does not increase any
/// cell's load.
pub fn sufficient_condition(
    scenario: &NetworkScenario,
    current_pattern: &JTPattern,
    current_fixed_point: &LoadVector,
    cell: usize,
    ue: usize,
    config: &OptimizerConfig,
) -> Result<ConditionOutcome> {
    current_pattern.check_against(scenario)?;
    config.validate(scenario.num_cells())?;
    if current_fixed_point.len() != scenario.num_cells() {
        return Err(Error::Dimension("fixed point length differs from cell count".into()));
    }
    let candidate = current_pattern.with_link(cell, ue)?;
    let residual = map_residual(scenario, current_pattern, current_fixed_point.as_slice());
    if residual > 10.0 * config.solver.tolerance {
        return Err(Error::Precondition(format!(
            "supplied load is not a fixed point of the current pattern (residual {residual:.3e})"
        )));
    }
    Ok(run_condition(
        scenario,
        current_pattern,
        &candidate,
        current_fixed_point.as_slice(),
        cell,
        config.condition_iters,
    )
    .0)
}

/// JT-MinMax from `initial_pattern`.
pub fn jt_minmax(
    scenario: &NetworkScenario,
    initial_pattern: &JTPattern,
    config: &OptimizerConfig,
) -> Result<OptimizeResult> {
    initial_pattern.check_against(scenario)?;
    config.validate(scenario.num_cells())?;
    let mut pattern = initial_pattern.with_max_serving(config.max_serving)?;
    let initial = solver::solve(scenario, &pattern, &config.solver)?.require_converged("initial pattern")?;

    let n = scenario.num_cells();
    let m = scenario.num_ues();
    let mut fixed_point = initial.load.as_slice().to_vec();
    let mut trace = vec![initial.max_load()];
    let mut moves = Vec::new();

    for sweep in 0..config.sweeps {
        let accepted_before = moves.len();
        for cell in 0..n {
            for ue in 0..m {
                if pattern.serves(cell, ue) || pattern.serving_count(ue) + 1 > config.max_serving {
                    continue;
                }
                let candidate = pattern.with_link(cell, ue)?;
                let (outcome, stopped_at) = run_condition(
                    scenario,
                    &pattern,
                    &candidate,
                    &fixed_point,
                    cell,
                    config.condition_iters,
                );
                let ConditionOutcome::AcceptedAt(k) = outcome else {
                    continue;
                };
                let after = solver::solve(scenario, &candidate, &config.solver)?;
                if !after.converged() {
                    return Err(Error::Consistency(format!(
                        "accepted link ({cell}, {ue}) left a pattern whose fixed point {}",
                        after.status.as_str()
                    )));
                }
                let before_max = fixed_point.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let max_increase = after
                    .load
                    .as_slice()
                    .iter()
                    .zip(&fixed_point)
                    .map(|(a, b)| a - b)
                    .fold(f64::NEG_INFINITY, f64::max);
                log::debug!(
                    "sweep {sweep}: link ({cell}, {ue}) accepted at iteration {k}, max load {before_max:.6} -> {:.6}",
                    after.max_load()
                );
                moves.push(AcceptedMove {
                    cell,
                    ue,
                    sweep,
                    condition_iteration: k,
                    max_load_before: before_max,
                    max_load_after: after.max_load(),
                    max_increase,
                });
                pattern = candidate;
                fixed_point = match config.continuation {
                    Continuation::Reconverge => after.load.into_inner(),
                    Continuation::FromIterate => stopped_at,
                };
            }
        }
        let current = solver::solve(scenario, &pattern, &config.solver)?;
        trace.push(current.max_load());
        // A pass without acceptances leaves every later pass identical.
        if moves.len() == accepted_before && config.continuation == Continuation::Reconverge {
            break;
        }
    }

    let load = solver::solve(scenario, &pattern, &config.solver)?;
    if !load.converged() {
        return Err(Error::Consistency(format!(
            "final pattern has no converged fixed point ({})",
            load.status.as_str()
        )));
    }
    Ok(OptimizeResult {
        pattern,
        load,
        initial,
        accepted_moves: moves,
        trace,
    })
}
