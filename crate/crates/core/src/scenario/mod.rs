//! HetNet instance generation: seven hexagonal regions with a macro cell at
//! each center, small cells and UEs dropped uniformly inside each hexagon,
//! COST-231-Hata path loss and i.i.d. log-normal shadowing per link.

mod document;

pub use document::{
    parse_generator_params, parse_pattern, parse_scenario, parse_two_cell, serialize_pattern, serialize_scenario,
    serialize_two_cell, PatternDocument, ScenarioDocument, TwoCellDocument,
};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Cell, CellKind, GainMatrix, NetworkScenario, Position, ScenarioMeta, Ue};

/// Hexagon centers are packed as a center plus one ring, so at most seven.
pub const MAX_HEX_COUNT: usize = 7;

/// Upper bound on cells times UEs, which sizes the gain matrix.
pub const MAX_LINKS: usize = 50_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorParams {
    pub hex_count: usize,
    pub sc_per_hex: usize,
    pub ue_per_hex: usize,
    pub hex_circumradius_m: f64,
    pub carrier_freq_mhz: f64,
    pub rb_bandwidth_hz: f64,
    pub rb_count: u32,
    pub mc_power_per_rb_w: f64,
    pub sc_power_per_rb_w: f64,
    pub noise_psd_dbm_hz: f64,
    pub shadowing_sigma_db: f64,
    pub mc_antenna_height_m: f64,
    pub sc_antenna_height_m: f64,
    pub ue_height_m: f64,
    pub city_correction_db: f64,
    pub min_distance_m: f64,
    /// Demand assigned to every UE, bits per second.
    pub ue_demand_bps: f64,
    pub seed: u64,
}

impl Default for GeneratorParams {
    fn default() -> Self {
        GeneratorParams {
            hex_count: 7,
            sc_per_hex: 2,
            ue_per_hex: 30,
            hex_circumradius_m: 500.0,
            carrier_freq_mhz: 2000.0,
            rb_bandwidth_hz: 180_000.0,
            rb_count: 25,
            mc_power_per_rb_w: 0.200,
            sc_power_per_rb_w: 0.050,
            noise_psd_dbm_hz: -174.0,
            shadowing_sigma_db: 8.0,
            mc_antenna_height_m: 30.0,
            sc_antenna_height_m: 10.0,
            ue_height_m: 1.5,
            city_correction_db: 0.0,
            min_distance_m: 10.0,
            ue_demand_bps: 100_000.0,
            seed: 0,
        }
    }
}

impl GeneratorParams {
    pub fn validate(&self) -> Result<()> {
        if self.hex_count == 0 || self.hex_count > MAX_HEX_COUNT {
            return Err(Error::param(
                "hex_count",
                format!("{} outside 1..={MAX_HEX_COUNT}", self.hex_count),
            ));
        }
        if self.ue_per_hex == 0 {
            return Err(Error::param("ue_per_hex", "must be at least 1"));
        }
        if self.rb_count == 0 {
            return Err(Error::param("rb_count", "must be at least 1"));
        }
        let cells = self.hex_count.saturating_mul(self.sc_per_hex.saturating_add(1));
        let ues = self.hex_count.saturating_mul(self.ue_per_hex);
        if cells.saturating_mul(ues) > MAX_LINKS {
            return Err(Error::param(
                "ue_per_hex",
                format!("{cells} cells x {ues} UEs exceeds {MAX_LINKS} links"),
            ));
        }
        let positive: [(&'static str, f64); 11] = [
            ("hex_circumradius_m", self.hex_circumradius_m),
            ("carrier_freq_mhz", self.carrier_freq_mhz),
            ("rb_bandwidth_hz", self.rb_bandwidth_hz),
            ("mc_power_per_rb_w", self.mc_power_per_rb_w),
            ("sc_power_per_rb_w", self.sc_power_per_rb_w),
            ("shadowing_sigma_db", self.shadowing_sigma_db),
            ("mc_antenna_height_m", self.mc_antenna_height_m),
            ("sc_antenna_height_m", self.sc_antenna_height_m),
            ("ue_height_m", self.ue_height_m),
            ("min_distance_m", self.min_distance_m),
            ("ue_demand_bps", self.ue_demand_bps),
        ];
        for (field, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::param(field, format!("{v} must be positive")));
            }
        }
        if !self.noise_psd_dbm_hz.is_finite() {
            return Err(Error::param("noise_psd_dbm_hz", "must be finite"));
        }
        if !self.city_correction_db.is_finite() {
            return Err(Error::param("city_correction_db", "must be finite"));
        }
        Ok(())
    }

    /// Thermal noise over one resource block, watts.
    pub fn noise_power_w(&self) -> f64 {
        dbm_to_watts(self.noise_psd_dbm_hz + 10.0 * self.rb_bandwidth_hz.log10())
    }

    fn path_loss(&self, kind: CellKind) -> PathLossParams {
        PathLossParams {
            carrier_freq_mhz: self.carrier_freq_mhz,
            base_height_m: match kind {
                CellKind::Macro => self.mc_antenna_height_m,
                CellKind::Small => self.sc_antenna_height_m,
            },
            mobile_height_m: self.ue_height_m,
            city_correction_db: self.city_correction_db,
            min_distance_m: self.min_distance_m,
        }
    }
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathLossParams {
    pub carrier_freq_mhz: f64,
    pub base_height_m: f64,
    pub mobile_height_m: f64,
    /// `C_m`: 0 dB for medium cities and suburbs, 3 dB for metropolitan centers.
    pub city_correction_db: f64,
    pub min_distance_m: f64,
}

impl PathLossParams {
    /// Whether the inputs lie in the model's nominal range
    /// (1500-2000 MHz, 30-200 m base, 1-10 m mobile).
    pub fn in_validity_range(&self) -> bool {
        (1500.0..=2000.0).contains(&self.carrier_freq_mhz)
            && (30.0..=200.0).contains(&self.base_height_m)
            && (1.0..=10.0).contains(&self.mobile_height_m)
    }
}

/// COST-231-Hata path loss in dB, medium-city mobile-antenna correction.
/// Distances below the minimum (including nonpositive ones) are clamped.
pub fn path_loss_db(params: &PathLossParams, distance_m: f64) -> f64 {
    let d_km = distance_m.max(params.min_distance_m) / 1000.0;
    let log_f = params.carrier_freq_mhz.log10();
    let log_hb = params.base_height_m.log10();
    let a_hm = (1.1 * log_f - 0.7) * params.mobile_height_m - (1.56 * log_f - 0.8);
    46.3 + 33.9 * log_f - 13.82 * log_hb - a_hm
        + (44.9 - 6.55 * log_hb) * d_km.log10()
        + params.city_correction_db
}

/// Flat-topped regular hexagon of circumradius `r` centered at `center`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hexagon {
    pub center: Position,
    pub circumradius: f64,
}

impl Hexagon {
    pub fn contains(&self, p: &Position) -> bool {
        let dx = (p.x_m - self.center.x_m).abs();
        let dy = (p.y_m - self.center.y_m).abs();
        let s3 = 3f64.sqrt();
        dy <= s3 / 2.0 * self.circumradius && s3 * dx + dy <= s3 * self.circumradius
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> Position {
        let r = self.circumradius;
        let half_h = 3f64.sqrt() / 2.0 * r;
        loop {
            let p = Position::new(
                self.center.x_m + rng.random_range(-r..r),
                self.center.y_m + rng.random_range(-half_h..half_h),
            );
            if self.contains(&p) {
                return p;
            }
        }
    }
}

/// Center hexagon followed by its neighbors, counter-clockwise from 30 degrees.
pub fn hexagon_layout(count: usize, circumradius: f64) -> Vec<Hexagon> {
    let spacing = 3f64.sqrt() * circumradius;
    (0..count)
        .map(|k| {
            let center = if k == 0 {
                Position::new(0.0, 0.0)
            } else {
                let angle = std::f64::consts::PI / 6.0 + (k - 1) as f64 * std::f64::consts::PI / 3.0;
                Position::new(spacing * angle.cos(), spacing * angle.sin())
            };
            Hexagon {
                center,
                circumradius,
            }
        })
        .collect()
}

/// Draws a scenario. Macro cells come first (one per hexagon), then the
/// small cells hexagon by hexagon; UEs are likewise grouped by hexagon.
pub fn generate(params: &GeneratorParams) -> Result<NetworkScenario> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let hexes = hexagon_layout(params.hex_count, params.hex_circumradius_m);

    let mut cells: Vec<Cell> = hexes
        .iter()
        .map(|h| Cell::new(params.mc_power_per_rb_w, CellKind::Macro).at(h.center))
        .collect();
    for h in &hexes {
        for _ in 0..params.sc_per_hex {
            cells.push(Cell::new(params.sc_power_per_rb_w, CellKind::Small).at(h.sample(&mut rng)));
        }
    }
    let ues: Vec<Ue> = hexes
        .iter()
        .flat_map(|h| (0..params.ue_per_hex).map(move |_| *h))
        .map(|h| Ue::new(params.ue_demand_bps).at(h.sample(&mut rng)))
        .collect();

    let macro_pl = params.path_loss(CellKind::Macro);
    let small_pl = params.path_loss(CellKind::Small);
    for pl in [&macro_pl, &small_pl] {
        if !pl.in_validity_range() {
            log::warn!(
                "COST-231-Hata used outside its nominal range (f = {} MHz, h_b = {} m, h_m = {} m)",
                pl.carrier_freq_mhz,
                pl.base_height_m,
                pl.mobile_height_m
            );
        }
    }

    let sigma = params.shadowing_sigma_db;
    let shadowing = Normal::new(0.0, sigma).map_err(|e| Error::param("shadowing_sigma_db", e.to_string()))?;
    let mut gains = Vec::with_capacity(cells.len() * ues.len());
    for cell in &cells {
        let pl = match cell.kind {
            CellKind::Macro => &macro_pl,
            CellKind::Small => &small_pl,
        };
        let at = cell.position.expect("generated cells are placed");
        for ue in &ues {
            let d = at.distance(&ue.position.expect("generated UEs are placed"));
            let s = shadowing.sample(&mut rng).clamp(-6.0 * sigma, 6.0 * sigma);
            gains.push(10f64.powf(-(path_loss_db(pl, d) + s) / 10.0));
        }
    }
    let gain = GainMatrix::from_row_major(cells.len(), ues.len(), gains)?;
    Ok(NetworkScenario::new(
        cells,
        ues,
        gain,
        params.noise_power_w(),
        params.rb_bandwidth_hz,
        params.rb_count,
    )?
    .with_meta(ScenarioMeta {
        seed: params.seed,
        generator_params: params.clone(),
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn urban(base_height_m: f64) -> PathLossParams {
        PathLossParams {
            carrier_freq_mhz: 2000.0,
            base_height_m,
            mobile_height_m: 1.5,
            city_correction_db: 0.0,
            min_distance_m: 10.0,
        }
    }

    #[test]
    fn path_loss_at_one_km() {
        // 30-digit evaluation: 137.744008413173...
        assert!((path_loss_db(&urban(30.0), 1000.0) - 137.7440).abs() < 5e-5);
    }

    #[test]
    fn distance_term_vanishes_at_one_km() {
        for hb in [10.0, 30.0, 60.0] {
            let p = urban(hb);
            let log_f = 2000f64.log10();
            let a_hm = (1.1 * log_f - 0.7) * 1.5 - (1.56 * log_f - 0.8);
            let intercept = 46.3 + 33.9 * log_f - 13.82 * hb.log10() - a_hm;
            assert_eq!(path_loss_db(&p, 1000.0), intercept);
        }
    }

    #[test]
    fn taller_base_station_loses_less() {
        for d in [50.0, 300.0, 1000.0, 5000.0] {
            assert!(path_loss_db(&urban(60.0), d) < path_loss_db(&urban(30.0), d));
        }
    }

    #[test]
    fn short_and_nonpositive_distances_clamp() {
        let p = urban(30.0);
        let at_min = path_loss_db(&p, 10.0);
        assert_eq!(path_loss_db(&p, 0.0), at_min);
        assert_eq!(path_loss_db(&p, -5.0), at_min);
        assert_eq!(path_loss_db(&p, 3.0), at_min);
        assert!(path_loss_db(&p, 20.0) > at_min);
    }

    #[test]
    fn noise_per_resource_block() {
        let p = GeneratorParams::default();
        let w = p.noise_power_w();
        assert!((w - 7.165_929_069_962_95e-16).abs() < 1e-27, "{w}");
    }

    #[test]
    fn validity_range() {
        assert!(urban(30.0).in_validity_range());
        assert!(!urban(10.0).in_validity_range());
    }

    #[test]
    fn default_counts_and_kinds() {
        let s = generate(&GeneratorParams::default()).unwrap();
        assert_eq!(s.num_cells(), 21);
        assert_eq!(s.num_ues(), 210);
        assert!(s.cells()[..7].iter().all(|c| c.kind == CellKind::Macro));
        assert!(s.cells()[7..].iter().all(|c| c.kind == CellKind::Small));
        assert_eq!(s.rb_count(), 25);
        assert!((s.total_bandwidth() - 4.5e6).abs() < 1e-6);
    }

    #[test]
    fn seed_determinism() {
        let p = GeneratorParams {
            seed: 42,
            ..GeneratorParams::default()
        };
        assert_eq!(generate(&p).unwrap(), generate(&p).unwrap());
        let q = GeneratorParams {
            seed: 43,
            ..p.clone()
        };
        assert_ne!(generate(&q).unwrap().gain(), generate(&p).unwrap().gain());
    }

    #[test]
    fn placements_stay_in_their_hexagon() {
        let p = GeneratorParams {
            seed: 9,
            ..GeneratorParams::default()
        };
        let s = generate(&p).unwrap();
        let hexes = hexagon_layout(7, 500.0);
        for (k, cell) in s.cells()[7..].iter().enumerate() {
            assert!(hexes[k / 2].contains(cell.position.as_ref().unwrap()));
        }
        for (j, ue) in s.ues().iter().enumerate() {
            assert!(hexes[j / 30].contains(ue.position.as_ref().unwrap()));
        }
        for (cell, hex) in s.cells().iter().zip(&hexes) {
            assert_eq!(cell.position.unwrap(), hex.center);
        }
    }

    #[test]
    fn gains_positive_and_finite() {
        let s = generate(&GeneratorParams::default()).unwrap();
        for i in 0..s.num_cells() {
            assert!(s.gain().row(i).iter().all(|g| g.is_finite() && *g > 0.0));
        }
    }

    #[test]
    fn neighbouring_hexagons_touch_without_overlap() {
        let hexes = hexagon_layout(7, 500.0);
        for h in &hexes[1..] {
            let mid = Position::new(h.center.x_m / 2.0, h.center.y_m / 2.0);
            assert!(hexes[0].contains(&mid));
            let inside = Position::new(h.center.x_m * 0.49, h.center.y_m * 0.49);
            assert!(!h.contains(&inside));
        }
    }

    #[test]
    fn invalid_params_name_the_field() {
        let p = GeneratorParams {
            hex_count: 0,
            ..GeneratorParams::default()
        };
        let err = generate(&p).unwrap_err().to_string();
        assert!(err.contains("hex_count"), "{err}");
        let p = GeneratorParams {
            shadowing_sigma_db: -1.0,
            ..GeneratorParams::default()
        };
        assert!(generate(&p).unwrap_err().to_string().contains("shadowing_sigma_db"));
    }
}
