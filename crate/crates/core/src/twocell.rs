//! Symmetric two-cell case.
//!
//! Two cells with equal power each own `m` UEs; UE `j` of cell 1 and UE
//! `m + j` of cell 2 are mirror images (own gain, cross gain, demand). The
//! instance is stored in this half form, so the mirror equalities hold
//! exactly by construction. Demands are normalized, i.e. `M B = 1`.
//!
//! A symmetric pattern picks pairs `j` for which both mirror UEs are served
//! by both cells. Such a UE has a load-independent share
//! `c_j = d_j / log2(1 + p (g_own + g_cross) / sigma^2)`, and each cell then
//! carries `2 c_j` for the pair (one share per mirror UE).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Cell, CellKind, GainMatrix, JTPattern, LoadVector, NetworkScenario, Ue, UeLoadVector};
use crate::solver::{self, iterate_to_fixed_point, FixedPointResult, SolverConfig};

/// Largest `m` the exhaustive search accepts.
pub const BRUTE_FORCE_MAX_PAIRS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UePair {
    /// Gain from a UE to its own cell.
    pub own_gain: f64,
    /// Gain from a UE to the opposite cell.
    pub cross_gain: f64,
    /// Normalized demand, shared by both mirror UEs.
    pub demand: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TwoCellInstance {
    power: f64,
    noise_power: f64,
    pairs: Vec<UePair>,
}

impl TwoCellInstance {
    pub fn new(power: f64, noise_power: f64, pairs: Vec<UePair>) -> Result<Self> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(power) {
            return Err(Error::param("power", format!("{power}")));
        }
        if !positive(noise_power) {
            return Err(Error::param("noise_power", format!("{noise_power}")));
        }
        if pairs.is_empty() {
            return Err(Error::Dimension("two-cell instance needs at least one UE pair".into()));
        }
        for (j, p) in pairs.iter().enumerate() {
            if !(positive(p.own_gain) && positive(p.cross_gain) && positive(p.demand)) {
                return Err(Error::param(
                    "pairs",
                    format!("pair {j} has a non-positive entry: {p:?}"),
                ));
            }
        }
        Ok(TwoCellInstance {
            power,
            noise_power,
            pairs,
        })
    }

    pub fn power(&self) -> f64 {
        self.power
    }

    pub fn noise_power(&self) -> f64 {
        self.noise_power
    }

    pub fn pairs(&self) -> &[UePair] {
        &self.pairs
    }

    /// Number of UEs per cell.
    pub fn num_pairs(&self) -> usize {
        self.pairs.len()
    }

    /// The full 2-cell, `2m`-UE scenario. UEs `0..m` belong to cell 0 and
    /// `m..2m` to cell 1.
    pub fn expand(&self) -> NetworkScenario {
        let m = self.pairs.len();
        let mut row0 = Vec::with_capacity(2 * m);
        let mut row1 = Vec::with_capacity(2 * m);
        for p in &self.pairs {
            row0.push(p.own_gain);
            row1.push(p.cross_gain);
        }
        for p in &self.pairs {
            row0.push(p.cross_gain);
            row1.push(p.own_gain);
        }
        let ues = self
            .pairs
            .iter()
            .chain(&self.pairs)
            .map(|p| Ue::new(p.demand))
            .collect();
        NetworkScenario::new(
            vec![Cell::new(self.power, CellKind::Macro), Cell::new(self.power, CellKind::Macro)],
            ues,
            GainMatrix::from_rows(&[row0, row1]).expect("rows have equal length"),
            self.noise_power,
            1.0,
            1,
        )
        .expect("validated instance expands to a valid scenario")
    }

    fn share(&self, pair: &UePair, interferer_load: f64) -> f64 {
        let p = self.power;
        let gamma = p * pair.own_gain / (p * pair.cross_gain * interferer_load + self.noise_power);
        pair.demand / gamma.log2_1p()
    }
}

trait Log2OnePlus {
    fn log2_1p(self) -> f64;
}

impl Log2OnePlus for f64 {
    fn log2_1p(self) -> f64 {
        self.ln_1p() / std::f64::consts::LN_2
    }
}

/// `kappa_j = true` means UE `j` and its mirror `m + j` are both served by
/// both cells.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SymmetricPattern(Vec<bool>);

impl SymmetricPattern {
    pub fn new(kappa: Vec<bool>) -> Self {
        SymmetricPattern(kappa)
    }

    pub fn none(m: usize) -> Self {
        SymmetricPattern(vec![false; m])
    }

    pub fn all(m: usize) -> Self {
        SymmetricPattern(vec![true; m])
    }

    /// Bit `j` of `index` is `kappa_j`.
    pub fn from_index(m: usize, index: u64) -> Self {
        SymmetricPattern((0..m).map(|j| index >> j & 1 == 1).collect())
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn count(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }

    /// The pattern on the expanded scenario, with `K = 2`.
    pub fn expand(&self) -> JTPattern {
        let m = self.0.len();
        let sets: Vec<Vec<usize>> = (0..2 * m)
            .map(|j| {
                let own = usize::from(j >= m);
                if self.0[j % m] {
                    vec![0, 1]
                } else {
                    vec![own]
                }
            })
            .collect();
        JTPattern::from_serving_sets(2, &sets, 2).expect("symmetric pattern is always valid")
    }

    fn check(&self, instance: &TwoCellInstance) -> Result<()> {
        if self.0.len() != instance.num_pairs() {
            return Err(Error::Dimension(format!(
                "pattern has {} entries, instance has {} pairs",
                self.0.len(),
                instance.num_pairs()
            )));
        }
        Ok(())
    }
}

impl std::fmt::Display for SymmetricPattern {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for &b in &self.0 {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// Load-independent share of a jointly served UE in pair `ue_index`.
pub fn constant_load(instance: &TwoCellInstance, ue_index: usize) -> Result<f64> {
    let pair = instance.pairs.get(ue_index).ok_or_else(|| {
        Error::Dimension(format!(
            "pair index {ue_index} out of range for {} pairs",
            instance.num_pairs()
        ))
    })?;
    let snr = instance.power * (pair.own_gain + pair.cross_gain) / instance.noise_power;
    Ok(pair.demand / snr.log2_1p())
}

fn constant_loads(instance: &TwoCellInstance) -> Vec<f64> {
    (0..instance.num_pairs())
        .map(|j| constant_load(instance, j).expect("index in range"))
        .collect()
}

fn reduced_map(instance: &TwoCellInstance, kappa: &[bool], c: &[f64], x1: f64, x2: f64) -> (f64, f64) {
    let mut n1 = 0.0;
    let mut n2 = 0.0;
    for ((pair, &jt), &cj) in instance.pairs.iter().zip(kappa).zip(c) {
        if jt {
            n1 += 2.0 * cj;
            n2 += 2.0 * cj;
        } else {
            // Cell 1's UEs see cell 2's load and vice versa.
            n1 += instance.share(pair, x2);
            n2 += instance.share(pair, x1);
        }
    }
    (n1, n2)
}

/// One application of the reduced coupling map, `(x1, x2) -> (x1', x2')`.
pub fn two_cell_coupled_map(
    instance: &TwoCellInstance,
    pattern: &SymmetricPattern,
    x1: f64,
    x2: f64,
) -> Result<(f64, f64)> {
    pattern.check(instance)?;
    if !(x1.is_finite() && x1 >= 0.0 && x2.is_finite() && x2 >= 0.0) {
        return Err(Error::Domain(format!("loads ({x1}, {x2}) must be nonnegative")));
    }
    Ok(reduced_map(instance, &pattern.0, &constant_loads(instance), x1, x2))
}

/// Fixed point of the reduced map from `(0, 0)`.
pub fn solve_two_cell(
    instance: &TwoCellInstance,
    pattern: &SymmetricPattern,
    config: &SolverConfig,
) -> Result<FixedPointResult> {
    pattern.check(instance)?;
    config.validate()?;
    let c = constant_loads(instance);
    Ok(iterate_to_fixed_point(vec![0.0, 0.0], config, |x, out| {
        let (a, b) = reduced_map(instance, &pattern.0, &c, x[0], x[1]);
        out[0] = a;
        out[1] = b;
    }))
}

/// Converged loads with no joint transmission, the reference point for the
/// gain of load.
#[derive(Debug, Clone, PartialEq)]
pub struct Baseline {
    pub result: FixedPointResult,
    /// Per-UE shares over all `2m` UEs.
    pub ue_loads: UeLoadVector,
}

pub fn baseline(instance: &TwoCellInstance, config: &SolverConfig) -> Result<Baseline> {
    let m = instance.num_pairs();
    let result = solve_two_cell(instance, &SymmetricPattern::none(m), config)?
        .require_converged("two-cell baseline")?;
    let (x1, x2) = (result.load[0], result.load[1]);
    let y = instance
        .pairs
        .iter()
        .map(|p| instance.share(p, x2))
        .chain(instance.pairs.iter().map(|p| instance.share(p, x1)))
        .collect();
    Ok(Baseline {
        result,
        ue_loads: UeLoadVector::new(y)?,
    })
}

/// `G_j = ybar_j - 2 c_j` for all `2m` UEs, where `c_j` is the constant share
/// of the pair UE `j` belongs to.
pub fn gain_of_load(instance: &TwoCellInstance, baseline: &Baseline) -> Result<Vec<f64>> {
    let m = instance.num_pairs();
    if !baseline.result.converged() {
        return Err(Error::Precondition("baseline loads are not converged".into()));
    }
    if baseline.ue_loads.len() != 2 * m {
        return Err(Error::Dimension(format!(
            "baseline has {} UE loads, expected {}",
            baseline.ue_loads.len(),
            2 * m
        )));
    }
    let c = constant_loads(instance);
    Ok((0..2 * m)
        .map(|j| gain(baseline.ue_loads[j], c[j % m]))
        .collect())
}

/// Gain of load for one UE.
pub fn gain(baseline_share: f64, constant_share: f64) -> f64 {
    baseline_share - 2.0 * constant_share
}

/// Jointly serve exactly the pairs with positive gain of load, then solve.
pub fn greedy_optimal(
    instance: &TwoCellInstance,
    config: &SolverConfig,
) -> Result<(SymmetricPattern, FixedPointResult)> {
    let base = baseline(instance, config)?;
    let g = gain_of_load(instance, &base)?;
    let m = instance.num_pairs();
    // Ties stay without JT.
    let pattern = SymmetricPattern((0..m).map(|j| g[j] > 0.0).collect());
    let result = solve_two_cell(instance, &pattern, config)?;
    Ok((pattern, result))
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinMaxSolution {
    pub pattern: SymmetricPattern,
    /// Minimum over patterns of the max cell load at convergence.
    pub objective: f64,
    /// Patterns whose fixed point converged.
    pub converged_patterns: usize,
}

/// Exhaustive min-max over all `2^m` symmetric patterns, each solved with the
/// general fixed-point solver on the expanded scenario.
pub fn brute_force_minmax(instance: &TwoCellInstance, config: &SolverConfig) -> Result<MinMaxSolution> {
    let m = instance.num_pairs();
    if m > BRUTE_FORCE_MAX_PAIRS {
        return Err(Error::Precondition(format!(
            "{m} pairs exceeds the exhaustive-search limit of {BRUTE_FORCE_MAX_PAIRS}"
        )));
    }
    config.validate()?;
    let scenario = instance.expand();
    let evaluated: Vec<(u64, Option<f64>)> = (0..1u64 << m)
        .into_par_iter()
        .map(|idx| {
            let pattern = SymmetricPattern::from_index(m, idx).expand();
            let r = solver::solve(&scenario, &pattern, config).expect("expanded inputs are consistent");
            (idx, r.converged().then(|| r.max_load()))
        })
        .collect();

    let converged_patterns = evaluated.iter().filter(|(_, e)| e.is_some()).count();
    let (idx, objective) = evaluated
        .into_iter()
        .filter_map(|(idx, e)| e.map(|v| (idx, v)))
        .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
        .ok_or_else(|| Error::NotConverged("no symmetric pattern has a fixed point".into()))?;
    Ok(MinMaxSolution {
        pattern: SymmetricPattern::from_index(m, idx),
        objective,
        converged_patterns,
    })
}

/// Loads of the expanded scenario under `pattern`, solved generically.
pub fn solve_expanded(
    instance: &TwoCellInstance,
    pattern: &JTPattern,
    config: &SolverConfig,
) -> Result<FixedPointResult> {
    solver::fixed_point_solve(
        &instance.expand(),
        pattern,
        &LoadVector::zeros(2),
        config,
    )
}
