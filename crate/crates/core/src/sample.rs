//! Random abstract instances for property checks and benchmarks.
//!
//! Unlike [`crate::scenario::generate`] these have no geometry: gains are
//! drawn log-uniformly and demands are normalized (`M B = 1`, unit power).

use rand::Rng;

use crate::model::{Cell, CellKind, GainMatrix, JTPattern, NetworkScenario, Ue};
use crate::twocell::{SymmetricPattern, TwoCellInstance, UePair};

/// Ranges for [`random_scenario`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScenarioShape {
    pub max_cells: usize,
    pub max_ues: usize,
    /// Per-UE demand is drawn from `[demand_min, demand_max)` and scaled by
    /// `n / m`, so these bound the offered load per cell.
    pub demand_min: f64,
    pub demand_max: f64,
    /// Gains span this many decades below 1.
    pub gain_decades: f64,
}

impl Default for ScenarioShape {
    fn default() -> Self {
        ScenarioShape {
            max_cells: 10,
            max_ues: 50,
            demand_min: 0.04,
            demand_max: 0.2,
            gain_decades: 1.5,
        }
    }
}

fn log_uniform<R: Rng>(rng: &mut R, decades: f64) -> f64 {
    10f64.powf(-rng.random_range(0.0..decades))
}

/// Between 2 and `max_cells` cells and at least as many UEs as cells, so
/// that every cell can be given a UE.
pub fn random_scenario<R: Rng>(rng: &mut R, shape: &ScenarioShape) -> NetworkScenario {
    let n = rng.random_range(2..=shape.max_cells.max(2));
    let m = rng.random_range(n..=shape.max_ues.max(n));
    let cells = (0..n).map(|_| Cell::new(1.0, CellKind::Macro)).collect();
    let ues = (0..m)
        .map(|_| Ue::new(rng.random_range(shape.demand_min..shape.demand_max) * n as f64 / m as f64))
        .collect();
    let gains = (0..n * m).map(|_| log_uniform(rng, shape.gain_decades)).collect();
    let gain = GainMatrix::from_row_major(n, m, gains).expect("dimensions match");
    let noise = log_uniform(rng, 2.0) * 0.1;
    NetworkScenario::new(cells, ues, gain, noise, 1.0, 1).expect("sampled values are valid")
}

/// A pattern where every cell serves some UE and every UE has between 1 and
/// `min(max_serving, n - 1)` serving cells.
pub fn random_pattern<R: Rng>(rng: &mut R, scenario: &NetworkScenario, max_serving: usize) -> JTPattern {
    let n = scenario.num_cells();
    let m = scenario.num_ues();
    let cap = max_serving.min(n - 1).max(1);
    // A random cell-to-UE matching first, so no cell is left idle.
    let mut order: Vec<usize> = (0..m).collect();
    for i in (1..m).rev() {
        order.swap(i, rng.random_range(0..=i));
    }
    let mut sets: Vec<Vec<usize>> = vec![Vec::new(); m];
    for (cell, &ue) in order.iter().take(n).enumerate() {
        sets[ue].push(cell);
    }
    for set in &mut sets {
        let want = rng.random_range(1..=cap);
        while set.len() < want {
            let cell = rng.random_range(0..n);
            if !set.contains(&cell) {
                set.push(cell);
            }
        }
    }
    JTPattern::from_serving_sets(n, &sets, max_serving.clamp(1, n)).expect("sets respect the cap")
}

/// Two-cell instance with `m` pairs; cross gains never exceed own gains.
pub fn random_two_cell<R: Rng>(rng: &mut R, m: usize) -> TwoCellInstance {
    let pairs = (0..m)
        .map(|_| {
            let own_gain = rng.random_range(0.05..1.0);
            UePair {
                own_gain,
                cross_gain: own_gain * rng.random_range(0.02..1.0),
                demand: rng.random_range(0.01..0.15),
            }
        })
        .collect();
    let noise = rng.random_range(0.01..0.2);
    TwoCellInstance::new(1.0, noise, pairs).expect("sampled values are valid")
}

pub fn random_symmetric_pattern<R: Rng>(rng: &mut R, m: usize) -> SymmetricPattern {
    SymmetricPattern::new((0..m).map(|_| rng.random_bool(0.5)).collect())
}
