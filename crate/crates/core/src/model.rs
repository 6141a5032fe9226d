//! Network data model and the load-coupling maps.
//!
//! A UE `j` served by the cell set `I_j` sees the SINR
//!
//! ```text
//!            sum_{i in I_j} p_i g_ij
//! gamma_j = ---------------------------------------
//!           sum_{k not in I_j} p_k g_kj x_k + sigma^2
//! ```
//!
//! and consumes `y_j = d_j / (M B log2(1 + gamma_j))` of the resource blocks
//! on *every* serving cell. A cell's load is the sum of `y_j` over the UEs it
//! serves. Composing the two gives the coupled map `x -> f(h(x))` whose fixed
//! point is the network load.

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scenario::GeneratorParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CellKind {
    Macro,
    Small,
}

impl CellKind {
    pub fn as_str(self) -> &'static str {
        match self {
            CellKind::Macro => "macro",
            CellKind::Small => "small",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Position {
    pub x_m: f64,
    pub y_m: f64,
}

impl Position {
    pub fn new(x_m: f64, y_m: f64) -> Self {
        Position { x_m, y_m }
    }

    pub fn distance(&self, other: &Position) -> f64 {
        (self.x_m - other.x_m).hypot(self.y_m - other.y_m)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    /// Transmit power per resource block, watts.
    pub power_per_rb: f64,
    pub kind: CellKind,
    pub position: Option<Position>,
}

impl Cell {
    pub fn new(power_per_rb: f64, kind: CellKind) -> Self {
        Cell {
            power_per_rb,
            kind,
            position: None,
        }
    }

    pub fn at(mut self, position: Position) -> Self {
        self.position = Some(position);
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ue {
    /// Bitrate demand, bits per second.
    pub demand: f64,
    pub position: Option<Position>,
}

impl Ue {
    pub fn new(demand: f64) -> Self {
        Ue {
            demand,
            position: None,
        }
    }

    pub fn at(mut self, position: Position) -> Self {
        self.position = Some(position);
        self
    }
}

/// Where a scenario came from, carried through serialization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioMeta {
    pub seed: u64,
    pub generator_params: GeneratorParams,
}

/// Linear channel gains, `n` rows (cells) by `m` columns (UEs).
#[derive(Debug, Clone, PartialEq)]
pub struct GainMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl GainMatrix {
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let m = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != m) {
            return Err(Error::Dimension("gain rows have unequal lengths".into()));
        }
        Ok(GainMatrix {
            rows: n,
            cols: m,
            data: rows.concat(),
        })
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "gain data has {} entries, expected {rows}x{cols}",
                data.len()
            )));
        }
        Ok(GainMatrix { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, cell: usize, ue: usize) -> f64 {
        self.data[cell * self.cols + ue]
    }

    pub fn row(&self, cell: usize) -> &[f64] {
        &self.data[cell * self.cols..(cell + 1) * self.cols]
    }
}

/// Immutable physical instance.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkScenario {
    cells: Vec<Cell>,
    ues: Vec<Ue>,
    gain: GainMatrix,
    noise_power: f64,
    rb_bandwidth: f64,
    rb_count: u32,
    meta: Option<ScenarioMeta>,
    // p_i * g_ij stored UE-major, the access order of the SINR kernel.
    received: Vec<f64>,
}

impl NetworkScenario {
    pub fn new(
        cells: Vec<Cell>,
        ues: Vec<Ue>,
        gain: GainMatrix,
        noise_power: f64,
        rb_bandwidth: f64,
        rb_count: u32,
    ) -> Result<Self> {
        let n = cells.len();
        let m = ues.len();
        if n == 0 || m == 0 {
            return Err(Error::Dimension(format!(
                "need at least one cell and one UE, got {n} cells and {m} UEs"
            )));
        }
        if gain.rows != n || gain.cols != m {
            return Err(Error::Dimension(format!(
                "gain matrix is {}x{}, scenario has {n} cells and {m} UEs",
                gain.rows, gain.cols
            )));
        }
        if let Some(idx) = gain.data.iter().position(|g| !(g.is_finite() && *g > 0.0)) {
            return Err(Error::param(
                "gain",
                format!(
                    "entry ({}, {}) is {}, must be positive and finite",
                    idx / m,
                    idx % m,
                    gain.data[idx]
                ),
            ));
        }
        if let Some(i) = cells
            .iter()
            .position(|c| !(c.power_per_rb.is_finite() && c.power_per_rb > 0.0))
        {
            return Err(Error::param(
                "power_per_rb",
                format!("cell {i} has power {}", cells[i].power_per_rb),
            ));
        }
        if let Some(j) = ues
            .iter()
            .position(|u| !(u.demand.is_finite() && u.demand >= 0.0))
        {
            return Err(Error::param(
                "demand",
                format!("UE {j} has demand {}", ues[j].demand),
            ));
        }
        if !(noise_power.is_finite() && noise_power > 0.0) {
            return Err(Error::param("noise_power", format!("{noise_power}")));
        }
        if !(rb_bandwidth.is_finite() && rb_bandwidth > 0.0) {
            return Err(Error::param("rb_bandwidth", format!("{rb_bandwidth}")));
        }
        if rb_count == 0 {
            return Err(Error::param("rb_count", "must be positive"));
        }

        let mut received = vec![0.0; n * m];
        for j in 0..m {
            for (i, cell) in cells.iter().enumerate() {
                received[j * n + i] = cell.power_per_rb * gain.get(i, j);
            }
        }
        Ok(NetworkScenario {
            cells,
            ues,
            gain,
            noise_power,
            rb_bandwidth,
            rb_count,
            meta: None,
            received,
        })
    }

    pub fn with_meta(mut self, meta: ScenarioMeta) -> Self {
        self.meta = Some(meta);
        self
    }

    /// Same scenario with every UE demanding `demand` bits per second.
    pub fn with_uniform_demand(&self, demand: f64) -> Result<Self> {
        if !(demand.is_finite() && demand >= 0.0) {
            return Err(Error::param("demand", format!("{demand}")));
        }
        let mut out = self.clone();
        for ue in &mut out.ues {
            ue.demand = demand;
        }
        Ok(out)
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn num_ues(&self) -> usize {
        self.ues.len()
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn ues(&self) -> &[Ue] {
        &self.ues
    }

    pub fn gain(&self) -> &GainMatrix {
        &self.gain
    }

    pub fn noise_power(&self) -> f64 {
        self.noise_power
    }

    pub fn rb_bandwidth(&self) -> f64 {
        self.rb_bandwidth
    }

    pub fn rb_count(&self) -> u32 {
        self.rb_count
    }

    pub fn meta(&self) -> Option<&ScenarioMeta> {
        self.meta.as_ref()
    }

    /// `M * B`, the total bandwidth one cell can hand out, in hertz.
    pub fn total_bandwidth(&self) -> f64 {
        f64::from(self.rb_count) * self.rb_bandwidth
    }

    /// Received power `p_i g_ij` of every cell at UE `ue`.
    #[inline]
    pub(crate) fn received_at(&self, ue: usize) -> &[f64] {
        let n = self.cells.len();
        &self.received[ue * n..(ue + 1) * n]
    }
}

/// Binary serving matrix: `serves(i, j)` means cell `i` transmits to UE `j`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct JTPattern {
    cells: usize,
    ues: usize,
    // UE-major: kappa[j * cells + i].
    kappa: Vec<bool>,
    max_serving: usize,
}

impl JTPattern {
    /// Builds a pattern from `n` rows of `m` flags.
    pub fn from_rows(rows: &[Vec<bool>], max_serving: usize) -> Result<Self> {
        let n = rows.len();
        let m = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != m) {
            return Err(Error::Dimension("pattern rows have unequal lengths".into()));
        }
        let mut kappa = vec![false; n * m];
        for (i, row) in rows.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                kappa[j * n + i] = v;
            }
        }
        Self::from_parts(n, m, kappa, max_serving)
    }

    /// Builds a pattern from the serving-cell list of every UE.
    pub fn from_serving_sets(cells: usize, serving: &[Vec<usize>], max_serving: usize) -> Result<Self> {
        let m = serving.len();
        let mut kappa = vec![false; cells * m];
        for (j, set) in serving.iter().enumerate() {
            for &i in set {
                if i >= cells {
                    return Err(Error::Dimension(format!(
                        "UE {j} lists serving cell {i}, only {cells} cells exist"
                    )));
                }
                kappa[j * cells + i] = true;
            }
        }
        Self::from_parts(cells, m, kappa, max_serving)
    }

    fn from_parts(cells: usize, ues: usize, kappa: Vec<bool>, max_serving: usize) -> Result<Self> {
        if cells == 0 || ues == 0 {
            return Err(Error::Dimension("pattern must be at least 1x1".into()));
        }
        if max_serving == 0 || max_serving > cells {
            return Err(Error::InvalidPattern(format!(
                "max_serving must be in 1..={cells}, got {max_serving}"
            )));
        }
        let p = JTPattern {
            cells,
            ues,
            kappa,
            max_serving,
        };
        for j in 0..ues {
            let count = p.serving_count(j);
            if count == 0 {
                return Err(Error::InvalidPattern(format!("UE {j} has no serving cell")));
            }
            if count > max_serving {
                return Err(Error::InvalidPattern(format!(
                    "UE {j} has {count} serving cells, limit is {max_serving}"
                )));
            }
        }
        Ok(p)
    }

    pub fn num_cells(&self) -> usize {
        self.cells
    }

    pub fn num_ues(&self) -> usize {
        self.ues
    }

    pub fn max_serving(&self) -> usize {
        self.max_serving
    }

    #[inline]
    pub fn serves(&self, cell: usize, ue: usize) -> bool {
        self.kappa[ue * self.cells + cell]
    }

    #[inline]
    pub(crate) fn column(&self, ue: usize) -> &[bool] {
        &self.kappa[ue * self.cells..(ue + 1) * self.cells]
    }

    pub fn serving_count(&self, ue: usize) -> usize {
        self.column(ue).iter().filter(|&&b| b).count()
    }

    pub fn served_count(&self, cell: usize) -> usize {
        (0..self.ues).filter(|&j| self.serves(cell, j)).count()
    }

    pub fn serving_cells(&self, ue: usize) -> Vec<usize> {
        (0..self.cells).filter(|&i| self.serves(i, ue)).collect()
    }

    pub fn rows(&self) -> Vec<Vec<bool>> {
        (0..self.cells)
            .map(|i| (0..self.ues).map(|j| self.serves(i, j)).collect())
            .collect()
    }

    /// Number of JT links, i.e. serving relations beyond the first per UE.
    pub fn extra_links(&self) -> usize {
        (0..self.ues).map(|j| self.serving_count(j) - 1).sum()
    }

    /// The pattern with cell `cell` additionally serving UE `ue`.
    pub fn with_link(&self, cell: usize, ue: usize) -> Result<Self> {
        if cell >= self.cells || ue >= self.ues {
            return Err(Error::Dimension(format!(
                "link ({cell}, {ue}) outside a {}x{} pattern",
                self.cells, self.ues
            )));
        }
        if self.serves(cell, ue) {
            return Err(Error::Precondition(format!(
                "cell {cell} already serves UE {ue}"
            )));
        }
        let mut out = self.clone();
        out.kappa[ue * self.cells + cell] = true;
        Ok(out)
    }

    /// Same serving sets under a different per-UE cap.
    pub fn with_max_serving(&self, max_serving: usize) -> Result<Self> {
        Self::from_parts(self.cells, self.ues, self.kappa.clone(), max_serving)
    }

    /// Positions `(cell, ue)` where the two patterns differ.
    pub fn differences(&self, other: &JTPattern) -> Result<Vec<(usize, usize)>> {
        if self.cells != other.cells || self.ues != other.ues {
            return Err(Error::Dimension("patterns have different shapes".into()));
        }
        let mut out = Vec::new();
        for i in 0..self.cells {
            for j in 0..self.ues {
                if self.serves(i, j) != other.serves(i, j) {
                    out.push((i, j));
                }
            }
        }
        Ok(out)
    }

    pub(crate) fn check_against(&self, scenario: &NetworkScenario) -> Result<()> {
        if self.cells != scenario.num_cells() || self.ues != scenario.num_ues() {
            return Err(Error::Dimension(format!(
                "pattern is {}x{}, scenario has {} cells and {} UEs",
                self.cells,
                self.ues,
                scenario.num_cells(),
                scenario.num_ues()
            )));
        }
        Ok(())
    }
}

macro_rules! vector_newtype {
    ($(#[$doc:meta])* $name:ident) => {
        $(#[$doc])*
        #[derive(Debug, Clone, PartialEq)]
        pub struct $name(Vec<f64>);

        impl $name {
            pub fn as_slice(&self) -> &[f64] {
                &self.0
            }

            pub fn into_inner(self) -> Vec<f64> {
                self.0
            }

            pub fn len(&self) -> usize {
                self.0.len()
            }

            pub fn is_empty(&self) -> bool {
                self.0.is_empty()
            }
        }

        impl std::ops::Index<usize> for $name {
            type Output = f64;
            fn index(&self, i: usize) -> &f64 {
                &self.0[i]
            }
        }
    };
}

vector_newtype!(
    /// Per-cell load, the fraction of resource blocks in use.
    LoadVector
);
vector_newtype!(
    /// Per-UE linear SINR.
    SinrVector
);
vector_newtype!(
    /// Per-UE resource share, consumed on each serving cell.
    UeLoadVector
);

impl LoadVector {
    pub fn new(x: Vec<f64>) -> Result<Self> {
        if let Some(i) = x.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::Domain(format!("load component {i} is {}", x[i])));
        }
        Ok(LoadVector(x))
    }

    pub fn zeros(n: usize) -> Self {
        LoadVector(vec![0.0; n])
    }

    pub fn filled(n: usize, value: f64) -> Result<Self> {
        Self::new(vec![value; n])
    }

    pub(crate) fn from_raw(x: Vec<f64>) -> Self {
        LoadVector(x)
    }

    pub fn max(&self) -> f64 {
        self.0.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.0.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// `max - min`, the load imbalance across cells.
    pub fn spread(&self) -> f64 {
        self.max() - self.min()
    }

    pub fn scaled(&self, alpha: f64) -> Result<Self> {
        Self::new(self.0.iter().map(|v| v * alpha).collect())
    }

    /// Componentwise `self <= other + slack`.
    pub fn dominated_by(&self, other: &LoadVector, slack: f64) -> bool {
        self.0.len() == other.0.len() && self.0.iter().zip(&other.0).all(|(a, b)| *a <= *b + slack)
    }

    pub fn max_abs_diff(&self, other: &LoadVector) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl SinrVector {
    pub fn new(gamma: Vec<f64>) -> Result<Self> {
        if let Some(j) = gamma.iter().position(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::Domain(format!("SINR of UE {j} is {}", gamma[j])));
        }
        Ok(SinrVector(gamma))
    }
}

impl UeLoadVector {
    pub fn new(y: Vec<f64>) -> Result<Self> {
        if let Some(j) = y.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::Domain(format!("UE load {j} is {}", y[j])));
        }
        Ok(UeLoadVector(y))
    }
}

#[inline]
fn log2_1p(gamma: f64) -> f64 {
    gamma.ln_1p() / LN_2
}

/// SINR of one UE with `sinr_col` as its serving flags.
#[inline]
pub(crate) fn sinr_of(
    scenario: &NetworkScenario,
    sinr_col: &[bool],
    ue: usize,
    load: &[f64],
) -> f64 {
    let mut signal = 0.0;
    let mut interference = scenario.noise_power;
    for ((&pg, &serving), &x) in scenario.received_at(ue).iter().zip(sinr_col).zip(load) {
        if serving {
            signal += pg;
        } else {
            interference += pg * x;
        }
    }
    signal / interference
}

#[inline]
pub(crate) fn ue_share(scenario: &NetworkScenario, ue: usize, gamma: f64) -> f64 {
    scenario.ues[ue].demand / (scenario.total_bandwidth() * log2_1p(gamma))
}

/// `f^{load_pattern}(h^{sinr_pattern}(load))` written into `out`.
///
/// Callers guarantee matching dimensions. The two patterns coincide for the
/// ordinary coupled map; they differ when probing a candidate link.
pub(crate) fn mixed_map_into(
    scenario: &NetworkScenario,
    load_pattern: &JTPattern,
    sinr_pattern: &JTPattern,
    load: &[f64],
    out: &mut [f64],
) {
    out.iter_mut().for_each(|v| *v = 0.0);
    for j in 0..scenario.num_ues() {
        let gamma = sinr_of(scenario, sinr_pattern.column(j), j, load);
        let y = ue_share(scenario, j, gamma);
        for (o, &serving) in out.iter_mut().zip(load_pattern.column(j)) {
            if serving {
                *o += y;
            }
        }
    }
}

fn check_load(scenario: &NetworkScenario, load: &LoadVector) -> Result<()> {
    if load.len() != scenario.num_cells() {
        return Err(Error::Dimension(format!(
            "load has {} components, scenario has {} cells",
            load.len(),
            scenario.num_cells()
        )));
    }
    Ok(())
}

fn check_demands(scenario: &NetworkScenario) -> Result<()> {
    if let Some(j) = scenario.ues.iter().position(|u| u.demand <= 0.0) {
        return Err(Error::Domain(format!("UE {j} has zero demand")));
    }
    Ok(())
}

/// Per-UE SINR `h^kappa(x)`.
pub fn sinr_function(
    scenario: &NetworkScenario,
    pattern: &JTPattern,
    load: &LoadVector,
) -> Result<SinrVector> {
    pattern.check_against(scenario)?;
    check_load(scenario, load)?;
    let gamma = (0..scenario.num_ues())
        .map(|j| sinr_of(scenario, pattern.column(j), j, load.as_slice()))
        .collect();
    SinrVector::new(gamma)
}

/// Per-UE resource share `y_j = d_j / (M B log2(1 + gamma_j))`.
pub fn ue_load(scenario: &NetworkScenario, sinr: &SinrVector) -> Result<UeLoadVector> {
    if sinr.len() != scenario.num_ues() {
        return Err(Error::Dimension(format!(
            "SINR has {} components, scenario has {} UEs",
            sinr.len(),
            scenario.num_ues()
        )));
    }
    if let Some(j) = sinr.0.iter().position(|g| !(g.is_finite() && *g > 0.0)) {
        return Err(Error::Domain(format!("SINR of UE {j} is {}", sinr[j])));
    }
    check_demands(scenario)?;
    Ok(UeLoadVector(
        sinr.0
            .iter()
            .enumerate()
            .map(|(j, &g)| ue_share(scenario, j, g))
            .collect(),
    ))
}

/// Cell loads `f^kappa(gamma)`: each cell sums the shares of the UEs it serves.
pub fn cell_load_function(
    scenario: &NetworkScenario,
    pattern: &JTPattern,
    sinr: &SinrVector,
) -> Result<LoadVector> {
    pattern.check_against(scenario)?;
    let y = ue_load(scenario, sinr)?;
    Ok(cell_loads_from_ue_loads(pattern, &y))
}

/// Sums per-UE shares into cell loads. A JT UE contributes its full share to
/// every serving cell.
pub fn cell_loads_from_ue_loads(pattern: &JTPattern, y: &UeLoadVector) -> LoadVector {
    let mut x = vec![0.0; pattern.num_cells()];
    for (j, &yj) in y.0.iter().enumerate() {
        for (xi, &serving) in x.iter_mut().zip(pattern.column(j)) {
            if serving {
                *xi += yj;
            }
        }
    }
    LoadVector(x)
}

/// One application of the load-coupling map `f^kappa(h^kappa(x))`.
pub fn coupled_map(
    scenario: &NetworkScenario,
    pattern: &JTPattern,
    load: &LoadVector,
) -> Result<LoadVector> {
    mixed_coupled_map(scenario, pattern, pattern, load)
}

/// `f^{load_pattern}(h^{sinr_pattern}(x))` with independent patterns for the
/// two stages.
pub fn mixed_coupled_map(
    scenario: &NetworkScenario,
    load_pattern: &JTPattern,
    sinr_pattern: &JTPattern,
    load: &LoadVector,
) -> Result<LoadVector> {
    load_pattern.check_against(scenario)?;
    sinr_pattern.check_against(scenario)?;
    check_load(scenario, load)?;
    check_demands(scenario)?;
    let mut out = vec![0.0; scenario.num_cells()];
    mixed_map_into(scenario, load_pattern, sinr_pattern, load.as_slice(), &mut out);
    Ok(LoadVector(out))
}

/// Per-UE shares at load `x` under `pattern`.
pub fn ue_loads_at(
    scenario: &NetworkScenario,
    pattern: &JTPattern,
    load: &LoadVector,
) -> Result<UeLoadVector> {
    let sinr = sinr_function(scenario, pattern, load)?;
    ue_load(scenario, &sinr)
}
