//! Demand sweeps: best-signal baseline against JT-MinMax at each point of a
//! uniform-demand grid.

use jtload::{
    best_signal_association, jt_minmax, solve, CellKind, Error, FixedPointResult, NetworkScenario,
    OptimizerConfig, Result,
};
use rayon::prelude::*;

use crate::format::{opt9, sig9, Table};

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    /// Per-UE demand at the first point, bits per second.
    pub demand_min: f64,
    pub demand_max: f64,
    pub steps: usize,
    pub optimizer: OptimizerConfig,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.demand_min.is_finite() && self.demand_min > 0.0) {
            return Err(Error::InvalidParameter {
                field: "demand_min",
                reason: "must be positive".into(),
            });
        }
        if !(self.demand_max.is_finite() && self.demand_max >= self.demand_min) {
            return Err(Error::InvalidParameter {
                field: "demand_max",
                reason: "must be at least demand_min".into(),
            });
        }
        if self.steps == 0 {
            return Err(Error::InvalidParameter {
                field: "demand_steps",
                reason: "must be at least 1".into(),
            });
        }
        Ok(())
    }

    /// Evenly spaced demands from `demand_min` to `demand_max` inclusive.
    pub fn demands(&self) -> Vec<f64> {
        if self.steps == 1 {
            return vec![self.demand_min];
        }
        let span = self.demand_max - self.demand_min;
        (0..self.steps)
            .map(|k| {
                if k + 1 == self.steps {
                    self.demand_max
                } else {
                    self.demand_min + span * k as f64 / (self.steps - 1) as f64
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointOutcome {
    pub baseline: FixedPointResult,
    /// Absent when the baseline has no fixed point to start from.
    pub jt: Option<jtload::OptimizeResult>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub demand: f64,
    pub nonjt_status: &'static str,
    pub jt_status: &'static str,
    pub nonjt_max_load: Option<f64>,
    pub jtminmax_max_load: Option<f64>,
    pub reduction_percent: Option<f64>,
    pub nonjt_spread: Option<f64>,
    pub jt_spread: Option<f64>,
    pub spread_reduction_percent: Option<f64>,
    pub nonjt_feasible: bool,
    pub jt_feasible: bool,
    pub accepted_moves: usize,
}

pub const SWEEP_COLUMNS: [&str; 12] = [
    "demand_bps",
    "nonjt_status",
    "jt_status",
    "nonjt_max_load",
    "jtminmax_max_load",
    "reduction_percent",
    "nonjt_spread",
    "jt_spread",
    "spread_reduction_percent",
    "nonjt_feasible",
    "jt_feasible",
    "accepted_moves",
];

pub const CELL_COLUMNS: [&str; 5] = ["cell", "kind", "nonjt_load", "jtminmax_load", "reduction_percent"];

fn percent_drop(before: f64, after: f64) -> Option<f64> {
    (before > 0.0).then(|| 100.0 * (before - after) / before)
}

impl SweepRow {
    fn new(demand: f64, outcome: &PointOutcome) -> Self {
        let base = &outcome.baseline;
        let base_ok = base.converged();
        let jt_load = outcome.jt.as_ref().map(|r| &r.load);
        let nonjt_max_load = base_ok.then(|| base.max_load());
        let nonjt_spread = base_ok.then(|| base.load.spread());
        let jtminmax_max_load = jt_load.map(|l| l.max_load());
        let jt_spread = jt_load.map(|l| l.load.spread());
        let both = |a: Option<f64>, b: Option<f64>| match (a, b) {
            (Some(a), Some(b)) => percent_drop(a, b),
            _ => None,
        };
        SweepRow {
            demand,
            nonjt_status: base.status.as_str(),
            jt_status: jt_load.map_or("skipped", |l| l.status.as_str()),
            nonjt_max_load,
            jtminmax_max_load,
            reduction_percent: both(nonjt_max_load, jtminmax_max_load),
            nonjt_spread,
            jt_spread,
            spread_reduction_percent: both(nonjt_spread, jt_spread),
            nonjt_feasible: base.feasible(),
            jt_feasible: jt_load.is_some_and(|l| l.feasible()),
            accepted_moves: outcome.jt.as_ref().map_or(0, |r| r.accepted_moves.len()),
        }
    }

    fn cells(&self) -> Vec<String> {
        vec![
            sig9(self.demand),
            self.nonjt_status.into(),
            self.jt_status.into(),
            opt9(self.nonjt_max_load),
            opt9(self.jtminmax_max_load),
            opt9(self.reduction_percent),
            opt9(self.nonjt_spread),
            opt9(self.jt_spread),
            opt9(self.spread_reduction_percent),
            self.nonjt_feasible.to_string(),
            self.jt_feasible.to_string(),
            self.accepted_moves.to_string(),
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellComparison {
    pub cell: usize,
    pub kind: CellKind,
    pub nonjt_load: f64,
    pub jt_load: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    /// Index of the largest demand whose baseline converges with every load
    /// at most 1.
    pub max_achievable: Option<usize>,
    /// Per-cell loads at the max achievable demand.
    pub cells: Vec<CellComparison>,
    /// Raw results behind each row.
    pub points: Vec<PointOutcome>,
}

impl SweepReport {
    pub fn max_achievable_row(&self) -> Option<&SweepRow> {
        self.max_achievable.map(|i| &self.rows[i])
    }

    /// Mean max-load reduction over the grid points where both runs are
    /// feasible.
    pub fn mean_reduction_percent(&self) -> Option<f64> {
        let v: Vec<f64> = self
            .rows
            .iter()
            .filter(|r| r.nonjt_feasible && r.jt_feasible)
            .filter_map(|r| r.reduction_percent)
            .collect();
        (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
    }

    pub fn table(&self) -> Table {
        let mut t = Table::new(&SWEEP_COLUMNS);
        for r in &self.rows {
            t.push(r.cells());
        }
        t
    }

    pub fn cell_table(&self) -> Table {
        let mut t = Table::new(&CELL_COLUMNS);
        for c in &self.cells {
            t.push(vec![
                (c.cell + 1).to_string(),
                c.kind.as_str().into(),
                sig9(c.nonjt_load),
                sig9(c.jt_load),
                opt9(percent_drop(c.nonjt_load, c.jt_load)),
            ]);
        }
        t
    }
}

/// Baseline and JT-MinMax at one demand.
pub fn run_point(scenario: &NetworkScenario, demand: f64, config: &OptimizerConfig) -> Result<PointOutcome> {
    let scenario = scenario.with_uniform_demand(demand)?;
    let start = best_signal_association(&scenario);
    let baseline = solve(&scenario, &start, &config.solver)?;
    let jt = if baseline.converged() {
        Some(jt_minmax(&scenario, &start, config)?)
    } else {
        None
    };
    Ok(PointOutcome { baseline, jt })
}

/// Runs every grid point, in parallel, and reports rows in demand order.
pub fn run_sweep(scenario: &NetworkScenario, spec: &SweepSpec) -> Result<SweepReport> {
    spec.validate()?;
    spec.optimizer.validate(scenario.num_cells())?;
    let demands = spec.demands();
    let outcomes = demands
        .par_iter()
        .map(|&d| run_point(scenario, d, &spec.optimizer))
        .collect::<Result<Vec<_>>>()?;
    let rows: Vec<SweepRow> = demands
        .iter()
        .zip(&outcomes)
        .map(|(&d, o)| SweepRow::new(d, o))
        .collect();
    let max_achievable = rows.iter().rposition(|r| r.nonjt_feasible);
    let cells = match max_achievable.map(|i| &outcomes[i]) {
        Some(PointOutcome {
            baseline,
            jt: Some(jt),
        }) => scenario
            .cells()
            .iter()
            .enumerate()
            .map(|(i, c)| CellComparison {
                cell: i,
                kind: c.kind,
                nonjt_load: baseline.load[i],
                jt_load: jt.load.load[i],
            })
            .collect(),
        _ => Vec::new(),
    };
    if max_achievable.is_none() {
        log::warn!("no sweep point has a feasible baseline");
    }
    Ok(SweepReport {
        rows,
        max_achievable,
        cells,
        points: outcomes,
    })
}

/// A gnuplot script drawing max load against demand from the sweep CSV.
pub fn gnuplot_script(csv_path: &str) -> String {
    format!(
        "set datafile separator ','\n\
         set key autotitle columnhead\n\
         set xlabel 'user demand (bit/s)'\n\
         set ylabel 'maximum cell load'\n\
         plot '{csv_path}' using 1:4 with linespoints title 'non-JT', \\\n\
         \x20    '{csv_path}' using 1:5 with linespoints title 'JT-MinMax'\n"
    )
}
