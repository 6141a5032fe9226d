//! Plain fixed-point iteration of the coupled load map.
//!
//! The coupled map is a standard interference function whenever every UE
//! keeps at least one non-serving cell, so iterating it from any start
//! converges to its unique fixed point when one exists and grows without
//! bound otherwise. Divergence is reported as a status so sweeps can record
//! infeasible demand points.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{mixed_map_into, JTPattern, LoadVector, NetworkScenario};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Max-norm step size below which iteration stops.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Any load component above this declares divergence.
    pub divergence_ceiling: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tolerance: 1e-9,
            max_iterations: 10_000,
            divergence_ceiling: 1e6,
        }
    }
}

impl SolverConfig {
    pub fn new(tolerance: f64, max_iterations: usize, divergence_ceiling: f64) -> Result<Self> {
        let cfg = SolverConfig {
            tolerance,
            max_iterations,
            divergence_ceiling,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance.is_finite() && self.tolerance > 0.0) {
            return Err(Error::param("tolerance", format!("{}", self.tolerance)));
        }
        if self.max_iterations == 0 {
            return Err(Error::param("max_iterations", "must be positive"));
        }
        if !(self.divergence_ceiling > 1.0) {
            return Err(Error::param(
                "divergence_ceiling",
                format!("{} must exceed 1", self.divergence_ceiling),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Converged,
    Diverged,
    IterationCapReached,
}

impl SolveStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SolveStatus::Converged => "converged",
            SolveStatus::Diverged => "diverged",
            SolveStatus::IterationCapReached => "iteration-cap",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FixedPointResult {
    pub load: LoadVector,
    pub status: SolveStatus,
    pub iterations: usize,
    /// Max-norm of the last step.
    pub residual: f64,
    /// Some cell needs more than all of its resource blocks.
    pub capacity_violated: bool,
}

impl FixedPointResult {
    pub fn converged(&self) -> bool {
        self.status == SolveStatus::Converged
    }

    /// Converged with every load within capacity.
    pub fn feasible(&self) -> bool {
        self.converged() && !self.capacity_violated
    }

    pub fn max_load(&self) -> f64 {
        self.load.max()
    }

    pub(crate) fn require_converged(self, what: &str) -> Result<Self> {
        if self.converged() {
            Ok(self)
        } else {
            Err(Error::NotConverged(format!(
                "{what}: status {} after {} iterations (max load {:.6e})",
                self.status.as_str(),
                self.iterations,
                self.max_load()
            )))
        }
    }
}

/// Iterates `step` from `start` until the estimated distance to the fixed
/// point is within tolerance, a component exceeds the ceiling, or the
/// iteration cap is hit.
///
/// With contraction rate `r`, estimated from successive steps, the distance
/// is at most `step * r / (1 - r)`. A small step alone is not enough: slowly
/// contracting instances take steps far shorter than their remaining error.
pub(crate) fn iterate_to_fixed_point<F>(
    start: Vec<f64>,
    config: &SolverConfig,
    mut step: F,
) -> FixedPointResult
where
    F: FnMut(&[f64], &mut [f64]),
{
    let mut current = start;
    let mut next = vec![0.0; current.len()];
    let mut residual = f64::INFINITY;
    let mut previous = f64::INFINITY;
    let mut status = SolveStatus::IterationCapReached;
    let mut iterations = 0;

    while iterations < config.max_iterations {
        step(&current, &mut next);
        iterations += 1;
        residual = current
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        std::mem::swap(&mut current, &mut next);
        if current
            .iter()
            .any(|v| !v.is_finite() || *v > config.divergence_ceiling)
        {
            status = SolveStatus::Diverged;
            break;
        }
        let rate = residual / previous;
        let bound = if residual == 0.0 {
            0.0
        } else if rate < 1.0 {
            residual * rate / (1.0 - rate)
        } else {
            f64::INFINITY
        };
        // Steps at rounding level carry no rate information.
        let negligible = residual <= config.tolerance * 1e-3;
        if residual <= config.tolerance && (bound <= config.tolerance || negligible) {
            status = SolveStatus::Converged;
            break;
        }
        previous = residual;
    }

    let capacity_violated = current.iter().any(|v| *v > 1.0);
    FixedPointResult {
        load: LoadVector::from_raw(current),
        status,
        iterations,
        residual,
        capacity_violated,
    }
}

fn check_inputs(scenario: &NetworkScenario, pattern: &JTPattern, initial: &LoadVector) -> Result<()> {
    pattern.check_against(scenario)?;
    if initial.len() != scenario.num_cells() {
        return Err(Error::Dimension(format!(
            "initial load has {} components, scenario has {} cells",
            initial.len(),
            scenario.num_cells()
        )));
    }
    if let Some(j) = scenario.ues().iter().position(|u| u.demand <= 0.0) {
        return Err(Error::Domain(format!("UE {j} has zero demand")));
    }
    Ok(())
}

/// Solves `x = f(h(x))` by plain iteration from `initial`.
pub fn fixed_point_solve(
    scenario: &NetworkScenario,
    pattern: &JTPattern,
    initial: &LoadVector,
    config: &SolverConfig,
) -> Result<FixedPointResult> {
    config.validate()?;
    check_inputs(scenario, pattern, initial)?;
    Ok(iterate_to_fixed_point(
        initial.as_slice().to_vec(),
        config,
        |x, out| mixed_map_into(scenario, pattern, pattern, x, out),
    ))
}

/// [`fixed_point_solve`] from the all-zeros load.
pub fn solve(
    scenario: &NetworkScenario,
    pattern: &JTPattern,
    config: &SolverConfig,
) -> Result<FixedPointResult> {
    fixed_point_solve(scenario, pattern, &LoadVector::zeros(scenario.num_cells()), config)
}

/// The raw iterate sequence `x, f(h(x)), f(h(f(h(x)))), ...`, without any
/// stopping rule.
pub struct Iterates<'a> {
    scenario: &'a NetworkScenario,
    pattern: &'a JTPattern,
    current: Vec<f64>,
}

impl Iterator for Iterates<'_> {
    type Item = LoadVector;

    fn next(&mut self) -> Option<LoadVector> {
        let mut out = vec![0.0; self.current.len()];
        mixed_map_into(self.scenario, self.pattern, self.pattern, &self.current, &mut out);
        self.current = out;
        Some(LoadVector::from_raw(self.current.clone()))
    }
}

pub fn iterates<'a>(
    scenario: &'a NetworkScenario,
    pattern: &'a JTPattern,
    initial: &LoadVector,
) -> Result<Iterates<'a>> {
    check_inputs(scenario, pattern, initial)?;
    Ok(Iterates {
        scenario,
        pattern,
        current: initial.as_slice().to_vec(),
    })
}

/// True iff `f(h(candidate)) <= candidate` componentwise, which certifies
/// that a fixed point exists.
pub fn feasibility_probe(
    scenario: &NetworkScenario,
    pattern: &JTPattern,
    candidate: &LoadVector,
) -> Result<bool> {
    check_inputs(scenario, pattern, candidate)?;
    let mut out = vec![0.0; candidate.len()];
    mixed_map_into(scenario, pattern, pattern, candidate.as_slice(), &mut out);
    Ok(out.iter().zip(candidate.as_slice()).all(|(f, x)| f <= x))
}

/// One sampled point where a standard-interference-function axiom failed.
#[derive(Debug, Clone, PartialEq)]
pub struct PropertyViolation {
    pub sample: usize,
    pub cell: usize,
    pub x: Vec<f64>,
    /// Second load vector for monotonicity, empty for scalability.
    pub x_lower: Vec<f64>,
    pub alpha: f64,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PropertyReport {
    pub samples: usize,
    pub violations: Vec<PropertyViolation>,
}

impl PropertyReport {
    pub fn holds(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Upper end of the uniform range sampled load components are drawn from.
const SAMPLE_LOAD_MAX: f64 = 2.0;
const SAMPLE_ALPHA_MAX: f64 = 10.0;

/// The map is an SIF only if every cell serves some UE and every UE has some
/// non-serving cell.
fn require_sif_hypotheses(scenario: &NetworkScenario, pattern: &JTPattern) -> Result<()> {
    pattern.check_against(scenario)?;
    if let Some(i) = (0..pattern.num_cells()).find(|&i| pattern.served_count(i) == 0) {
        return Err(Error::Precondition(format!("cell {i} serves no UE")));
    }
    if let Some(j) = (0..pattern.num_ues()).find(|&j| pattern.serving_count(j) == pattern.num_cells()) {
        return Err(Error::Precondition(format!(
            "UE {j} is served by every cell, its SINR does not depend on load"
        )));
    }
    if let Some(j) = scenario.ues().iter().position(|u| u.demand <= 0.0) {
        return Err(Error::Domain(format!("UE {j} has zero demand")));
    }
    Ok(())
}

fn eval(scenario: &NetworkScenario, pattern: &JTPattern, x: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; x.len()];
    mixed_map_into(scenario, pattern, pattern, x, &mut out);
    out
}

/// Samples `(x, alpha)` and checks `alpha f(h(x)) > f(h(alpha x))`.
pub fn check_scalability(
    scenario: &NetworkScenario,
    pattern: &JTPattern,
    samples: usize,
    rng_seed: u64,
) -> Result<PropertyReport> {
    require_sif_hypotheses(scenario, pattern)?;
    let n = scenario.num_cells();
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut report = PropertyReport {
        samples,
        violations: Vec::new(),
    };
    for sample in 0..samples {
        // The first sample pins the zero vector.
        let x: Vec<f64> = if sample == 0 {
            vec![0.0; n]
        } else {
            (0..n).map(|_| rng.random_range(0.0..SAMPLE_LOAD_MAX)).collect()
        };
        let alpha = rng.random_range(1.0..SAMPLE_ALPHA_MAX).max(1.0 + 1e-3);
        let fx = eval(scenario, pattern, &x);
        let scaled: Vec<f64> = x.iter().map(|v| v * alpha).collect();
        let f_scaled = eval(scenario, pattern, &scaled);
        for cell in 0..n {
            let lhs = alpha * fx[cell];
            if !(lhs > f_scaled[cell]) {
                report.violations.push(PropertyViolation {
                    sample,
                    cell,
                    x: x.clone(),
                    x_lower: Vec::new(),
                    alpha,
                    lhs,
                    rhs: f_scaled[cell],
                });
            }
        }
    }
    Ok(report)
}

/// Samples ordered pairs `x >= x'` and checks `f(h(x)) >= f(h(x'))`.
pub fn check_monotonicity(
    scenario: &NetworkScenario,
    pattern: &JTPattern,
    samples: usize,
    rng_seed: u64,
) -> Result<PropertyReport> {
    require_sif_hypotheses(scenario, pattern)?;
    let n = scenario.num_cells();
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut report = PropertyReport {
        samples,
        violations: Vec::new(),
    };
    for sample in 0..samples {
        let lower: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..SAMPLE_LOAD_MAX)).collect();
        // Leave some components tied so equality cases are exercised.
        let upper: Vec<f64> = lower
            .iter()
            .map(|&v| {
                if rng.random_bool(0.25) {
                    v
                } else {
                    v + rng.random_range(0.0..SAMPLE_LOAD_MAX)
                }
            })
            .collect();
        let f_upper = eval(scenario, pattern, &upper);
        let f_lower = eval(scenario, pattern, &lower);
        for cell in 0..n {
            if !(f_upper[cell] >= f_lower[cell]) {
                report.violations.push(PropertyViolation {
                    sample,
                    cell,
                    x: upper.clone(),
                    x_lower: lower.clone(),
                    alpha: 1.0,
                    lhs: f_upper[cell],
                    rhs: f_lower[cell],
                });
            }
        }
    }
    Ok(report)
}
