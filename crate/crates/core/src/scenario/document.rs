//! JSON documents for scenarios, two-cell instances and JT patterns.
//!
//! Floats are written in shortest round-trip form, so parsing a serialized
//! document reproduces every value bit for bit.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    Cell, CellKind, GainMatrix, JTPattern, NetworkScenario, Position, ScenarioMeta, Ue,
};
use crate::twocell::{TwoCellInstance, UePair};

use super::GeneratorParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellEntry {
    pub id: usize,
    pub kind: CellKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y_m: Option<f64>,
    pub power_per_rb_w: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UeEntry {
    pub id: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y_m: Option<f64>,
    pub demand_bps: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioDocument {
    pub cells: Vec<CellEntry>,
    pub ues: Vec<UeEntry>,
    /// Row `i` holds the gains from cell `i` to every UE.
    pub gain: Vec<Vec<f64>>,
    pub noise_power_w: f64,
    pub rb_bandwidth_hz: f64,
    pub rb_count: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meta: Option<ScenarioMeta>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwoCellDocument {
    pub power_w: f64,
    pub noise_power_w: f64,
    pub pairs: Vec<UePair>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PatternDocument {
    pub max_serving: usize,
    /// `n` rows of `m` entries, 1 where the cell serves the UE.
    pub kappa: Vec<Vec<u8>>,
}

fn parse_json<T: DeserializeOwned>(text: &str) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let message = e.inner().to_string();
        // Serde reports a missing field at its parent; name the field itself.
        let missing = message
            .strip_prefix("missing field `")
            .and_then(|rest| rest.split('`').next());
        let field = match missing {
            Some(name) if path == "." => name.to_string(),
            Some(name) => format!("{path}.{name}"),
            None => path,
        };
        Error::Parse { field, message }
    })
}

fn parse_err(field: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Parse {
        field: field.into(),
        message: message.into(),
    }
}

fn position(field: &str, x: Option<f64>, y: Option<f64>) -> Result<Option<Position>> {
    match (x, y) {
        (Some(x), Some(y)) if x.is_finite() && y.is_finite() => Ok(Some(Position::new(x, y))),
        (None, None) => Ok(None),
        _ => Err(parse_err(field, "x_m and y_m must both be finite or both absent")),
    }
}

impl ScenarioDocument {
    pub fn from_scenario(s: &NetworkScenario) -> Self {
        ScenarioDocument {
            cells: s
                .cells()
                .iter()
                .enumerate()
                .map(|(i, c)| CellEntry {
                    id: i + 1,
                    kind: c.kind,
                    x_m: c.position.map(|p| p.x_m),
                    y_m: c.position.map(|p| p.y_m),
                    power_per_rb_w: c.power_per_rb,
                })
                .collect(),
            ues: s
                .ues()
                .iter()
                .enumerate()
                .map(|(j, u)| UeEntry {
                    id: j + 1,
                    x_m: u.position.map(|p| p.x_m),
                    y_m: u.position.map(|p| p.y_m),
                    demand_bps: u.demand,
                })
                .collect(),
            gain: (0..s.num_cells()).map(|i| s.gain().row(i).to_vec()).collect(),
            noise_power_w: s.noise_power(),
            rb_bandwidth_hz: s.rb_bandwidth(),
            rb_count: s.rb_count(),
            meta: s.meta().cloned(),
        }
    }

    pub fn into_scenario(self) -> Result<NetworkScenario> {
        let n = self.cells.len();
        let m = self.ues.len();
        if n == 0 {
            return Err(parse_err("cells", "at least one cell is required"));
        }
        if m == 0 {
            return Err(parse_err("ues", "at least one UE is required"));
        }
        let mut cells = Vec::with_capacity(n);
        for (i, c) in self.cells.into_iter().enumerate() {
            if c.id != i + 1 {
                return Err(parse_err(format!("cells[{i}].id"), format!("expected {}, found {}", i + 1, c.id)));
            }
            if !(c.power_per_rb_w.is_finite() && c.power_per_rb_w > 0.0) {
                return Err(parse_err(format!("cells[{i}].power_per_rb_w"), "must be positive"));
            }
            let mut cell = Cell::new(c.power_per_rb_w, c.kind);
            cell.position = position(&format!("cells[{i}]"), c.x_m, c.y_m)?;
            cells.push(cell);
        }
        let mut ues = Vec::with_capacity(m);
        for (j, u) in self.ues.into_iter().enumerate() {
            if u.id != j + 1 {
                return Err(parse_err(format!("ues[{j}].id"), format!("expected {}, found {}", j + 1, u.id)));
            }
            if !(u.demand_bps.is_finite() && u.demand_bps >= 0.0) {
                return Err(parse_err(format!("ues[{j}].demand_bps"), "must be nonnegative"));
            }
            let mut ue = Ue::new(u.demand_bps);
            ue.position = position(&format!("ues[{j}]"), u.x_m, u.y_m)?;
            ues.push(ue);
        }
        if self.gain.len() != n {
            return Err(parse_err("gain", format!("{} rows for {n} cells", self.gain.len())));
        }
        for (i, row) in self.gain.iter().enumerate() {
            if row.len() != m {
                return Err(parse_err(format!("gain[{i}]"), format!("{} entries for {m} UEs", row.len())));
            }
            if let Some(j) = row.iter().position(|g| !(g.is_finite() && *g > 0.0)) {
                return Err(parse_err(format!("gain[{i}][{j}]"), "must be positive and finite"));
            }
        }
        if !(self.noise_power_w.is_finite() && self.noise_power_w > 0.0) {
            return Err(parse_err("noise_power_w", "must be positive"));
        }
        if !(self.rb_bandwidth_hz.is_finite() && self.rb_bandwidth_hz > 0.0) {
            return Err(parse_err("rb_bandwidth_hz", "must be positive"));
        }
        if self.rb_count == 0 {
            return Err(parse_err("rb_count", "must be positive"));
        }
        let gain = GainMatrix::from_rows(&self.gain)?;
        let scenario = NetworkScenario::new(cells, ues, gain, self.noise_power_w, self.rb_bandwidth_hz, self.rb_count)?;
        Ok(match self.meta {
            Some(meta) => scenario.with_meta(meta),
            None => scenario,
        })
    }
}

pub fn serialize_scenario(scenario: &NetworkScenario) -> String {
    let mut out = serde_json::to_string_pretty(&ScenarioDocument::from_scenario(scenario))
        .expect("scenario documents always serialize");
    out.push('\n');
    out
}

pub fn parse_scenario(text: &str) -> Result<NetworkScenario> {
    parse_json::<ScenarioDocument>(text)?.into_scenario()
}

impl TwoCellDocument {
    pub fn from_instance(instance: &TwoCellInstance) -> Self {
        TwoCellDocument {
            power_w: instance.power(),
            noise_power_w: instance.noise_power(),
            pairs: instance.pairs().to_vec(),
        }
    }

    pub fn into_instance(self) -> Result<TwoCellInstance> {
        TwoCellInstance::new(self.power_w, self.noise_power_w, self.pairs).map_err(|e| match e {
            Error::InvalidParameter { field, reason } => parse_err(field, reason),
            Error::Dimension(msg) => parse_err("pairs", msg),
            other => other,
        })
    }
}

pub fn serialize_two_cell(instance: &TwoCellInstance) -> String {
    let mut out = serde_json::to_string_pretty(&TwoCellDocument::from_instance(instance))
        .expect("two-cell documents always serialize");
    out.push('\n');
    out
}

pub fn parse_two_cell(text: &str) -> Result<TwoCellInstance> {
    parse_json::<TwoCellDocument>(text)?.into_instance()
}

impl PatternDocument {
    pub fn from_pattern(pattern: &JTPattern) -> Self {
        PatternDocument {
            max_serving: pattern.max_serving(),
            kappa: pattern
                .rows()
                .into_iter()
                .map(|row| row.into_iter().map(u8::from).collect())
                .collect(),
        }
    }

    pub fn into_pattern(self) -> Result<JTPattern> {
        let mut rows = Vec::with_capacity(self.kappa.len());
        for (i, row) in self.kappa.iter().enumerate() {
            let mut flags = Vec::with_capacity(row.len());
            for (j, &v) in row.iter().enumerate() {
                match v {
                    0 => flags.push(false),
                    1 => flags.push(true),
                    _ => return Err(parse_err(format!("kappa[{i}][{j}]"), format!("{v} is not 0 or 1"))),
                }
            }
            rows.push(flags);
        }
        JTPattern::from_rows(&rows, self.max_serving).map_err(|e| parse_err("kappa", e.to_string()))
    }
}

pub fn serialize_pattern(pattern: &JTPattern) -> String {
    let mut out = serde_json::to_string(&PatternDocument::from_pattern(pattern))
        .expect("pattern documents always serialize");
    out.push('\n');
    out
}

pub fn parse_pattern(text: &str) -> Result<JTPattern> {
    parse_json::<PatternDocument>(text)?.into_pattern()
}

/// Generator parameters; absent fields take their defaults.
pub fn parse_generator_params(text: &str) -> Result<GeneratorParams> {
    let params: GeneratorParams = parse_json(text)?;
    params.validate().map_err(|e| match e {
        Error::InvalidParameter { field, reason } => parse_err(field, reason),
        other => other,
    })?;
    Ok(params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{generate, GeneratorParams};

    const HAND_WRITTEN: &str = r#"{
        "cells": [
            {"id": 1, "kind": "macro", "power_per_rb_w": 1.0},
            {"id": 2, "kind": "macro", "power_per_rb_w": 1.0}
        ],
        "ues": [
            {"id": 1, "demand_bps": 0.5},
            {"id": 2, "demand_bps": 0.5}
        ],
        "gain": [[1.0, 0.1], [0.1, 1.0]],
        "noise_power_w": 0.1,
        "rb_bandwidth_hz": 1.0,
        "rb_count": 1
    }"#;

    fn field_of(err: Error) -> String {
        match err {
            Error::Parse { field, .. } => field,
            other => panic!("expected a parse error, got {other}"),
        }
    }

    #[test]
    fn generated_scenario_round_trips() {
        let s = generate(&GeneratorParams {
            seed: 3,
            ..GeneratorParams::default()
        })
        .unwrap();
        let back = parse_scenario(&serialize_scenario(&s)).unwrap();
        assert_eq!(back, s);
        for i in 0..s.num_cells() {
            for (a, b) in s.gain().row(i).iter().zip(back.gain().row(i)) {
                assert_eq!(a.to_bits(), b.to_bits());
            }
        }
    }

    #[test]
    fn missing_noise_power_is_named() {
        let text = HAND_WRITTEN.replace("\"noise_power_w\": 0.1,", "");
        let field = field_of(parse_scenario(&text).unwrap_err());
        assert!(field.contains("noise_power"), "{field}");
    }

    #[test]
    fn hand_written_document_solves() {
        let s = parse_scenario(HAND_WRITTEN).unwrap();
        let k = crate::optimizer::best_signal_association(&s);
        let r = crate::solver::solve(&s, &k, &crate::solver::SolverConfig::default()).unwrap();
        // Scalar bisection of x = 0.5 / log2(1 + 1/(0.1 x + 0.1)).
        assert!((r.load[0] - 0.152_704_439_4).abs() < 1e-9);
        assert!((r.load[1] - 0.152_704_439_4).abs() < 1e-9);
    }

    #[test]
    fn structural_errors_name_the_field() {
        let cases = [
            (HAND_WRITTEN.replace("[[1.0, 0.1], [0.1, 1.0]]", "[[1.0, 0.1]]"), "gain"),
            (HAND_WRITTEN.replace("[[1.0, 0.1], [0.1, 1.0]]", "[[1.0, 0.1], [0.1]]"), "gain[1]"),
            (HAND_WRITTEN.replace("[[1.0, 0.1], [0.1, 1.0]]", "[[1.0, 0.1], [0.0, 1.0]]"), "gain[1][0]"),
            (HAND_WRITTEN.replacen("\"id\": 2", "\"id\": 5", 1), "cells[1].id"),
            (HAND_WRITTEN.replacen("\"kind\": \"macro\"", "\"kind\": \"pico\"", 1), "cells[0].kind"),
            (HAND_WRITTEN.replace("\"rb_count\": 1", "\"rb_count\": 0"), "rb_count"),
            (HAND_WRITTEN.replacen("\"demand_bps\": 0.5", "\"demand_bps\": -1", 1), "ues[0].demand_bps"),
        ];
        for (text, expected) in cases {
            assert_eq!(field_of(parse_scenario(&text).unwrap_err()), expected);
        }
        assert!(parse_scenario("{").is_err());
        assert!(parse_scenario("").is_err());
    }

    #[test]
    fn half_positions_are_rejected() {
        let text = HAND_WRITTEN.replacen("\"power_per_rb_w\": 1.0}", "\"power_per_rb_w\": 1.0, \"x_m\": 3.0}", 1);
        assert_eq!(field_of(parse_scenario(&text).unwrap_err()), "cells[0]");
    }

    #[test]
    fn two_cell_document() {
        let text = r#"{"power_w": 1.0, "noise_power_w": 0.1,
            "pairs": [{"own_gain": 1.0, "cross_gain": 0.2, "demand": 0.1}]}"#;
        let inst = parse_two_cell(text).unwrap();
        assert_eq!(inst.num_pairs(), 1);
        assert_eq!(parse_two_cell(&serialize_two_cell(&inst)).unwrap(), inst);
        let bad = text.replace("\"power_w\": 1.0", "\"power_w\": 0.0");
        assert_eq!(field_of(parse_two_cell(&bad).unwrap_err()), "power");
        let empty = r#"{"power_w": 1.0, "noise_power_w": 0.1, "pairs": []}"#;
        assert_eq!(field_of(parse_two_cell(empty).unwrap_err()), "pairs");
    }

    #[test]
    fn generator_params_document() {
        let p = parse_generator_params(r#"{"seed": 9, "ue_per_hex": 4}"#).unwrap();
        assert_eq!(p.seed, 9);
        assert_eq!(p.ue_per_hex, 4);
        assert_eq!(p.hex_count, GeneratorParams::default().hex_count);
        assert_eq!(field_of(parse_generator_params(r#"{"hex_count": 0}"#).unwrap_err()), "hex_count");
        assert_eq!(field_of(parse_generator_params(r#"{"colour": 1}"#).unwrap_err()), "colour");
    }

    #[test]
    fn pattern_document() {
        let k = JTPattern::from_serving_sets(3, &[vec![0, 2], vec![1]], 2).unwrap();
        assert_eq!(parse_pattern(&serialize_pattern(&k)).unwrap(), k);
        assert_eq!(
            field_of(parse_pattern(r#"{"max_serving": 1, "kappa": [[1, 2]]}"#).unwrap_err()),
            "kappa[0][1]"
        );
        assert!(parse_pattern(r#"{"max_serving": 1, "kappa": [[0], [0]]}"#).is_err());
    }
}
