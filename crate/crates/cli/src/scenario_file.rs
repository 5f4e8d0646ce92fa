//! Scenario files.
//!
//! A scenario is a small TOML document. The optional `[phy]` table overrides
//! the 802.11b defaults and each `[[station]]` table adds one station; ids
//! follow file order.
//!
//! ```toml
//! label = "A"
//!
//! [phy]
//! sigma_us = 20.0
//!
//! [[station]]
//! lambda_pps = 500.0
//! bit_rate_bps = 11e6
//! payload_bytes = 1028
//! w0 = 32.0
//! pe = 0.0
//! ```

use std::ops::Range;
use std::path::Path;

use dcf_core::params::{validate_scenario, DEFAULT_W0};
use dcf_core::{ParamError, PhyTimingParams, Scenario, StationConfig};
use serde::{Deserialize, Serialize};
use thiserror::Error;
use toml::Spanned;

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{source_name}{}: {message}", line.map(|l| format!(":{l}")).unwrap_or_default())]
pub struct ScenarioFileError {
    pub source_name: String,
    /// 1-based line of the offending entry, when known.
    pub line: Option<usize>,
    pub message: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileScenario {
    label: Option<String>,
    phy: Option<Spanned<FilePhy>>,
    #[serde(default)]
    station: Vec<Spanned<FileStation>>,
}

#[derive(Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct FilePhy {
    #[serde(skip_serializing_if = "Option::is_none")]
    sigma_us: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    sifs_us: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    difs_us: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    phy_hdr_us: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    mac_hdr_bytes: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    ack_bytes: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    ack_rate_bps: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    max_stage: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    queue_size: Option<u32>,
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct FileStation {
    lambda_pps: f64,
    bit_rate_bps: f64,
    payload_bytes: u32,
    #[serde(default = "default_w0")]
    w0: f64,
    #[serde(default)]
    pe: f64,
}

fn default_w0() -> f64 {
    DEFAULT_W0
}

#[derive(Serialize)]
struct OutScenario {
    label: String,
    phy: FilePhy,
    station: Vec<FileStation>,
}

fn line_of(text: &str, span: &Range<usize>) -> usize {
    text[..span.start.min(text.len())].matches('\n').count() + 1
}

/// Parses scenario text. `source_name` only labels error messages.
pub fn parse_scenario(text: &str, source_name: &str) -> Result<Scenario, ScenarioFileError> {
    let err = |line, message: String| ScenarioFileError {
        source_name: source_name.to_string(),
        line,
        message,
    };
    let file: FileScenario = toml::from_str(text).map_err(|e| {
        err(
            e.span().map(|s| line_of(text, &s)),
            e.message().trim().to_string(),
        )
    })?;

    let defaults = PhyTimingParams::default();
    let (phy_line, p) = match &file.phy {
        Some(p) => (Some(line_of(text, &p.span())), p.get_ref()),
        None => (None, &FilePhy::default()),
    };
    let phy = PhyTimingParams {
        sigma: p.sigma_us.map_or(defaults.sigma, |v| v * 1e-6),
        sifs: p.sifs_us.map_or(defaults.sifs, |v| v * 1e-6),
        difs: p.difs_us.map_or(defaults.difs, |v| v * 1e-6),
        phy_hdr: p.phy_hdr_us.map_or(defaults.phy_hdr, |v| v * 1e-6),
        mac_hdr: p.mac_hdr_bytes.unwrap_or(defaults.mac_hdr),
        ack_size: p.ack_bytes.unwrap_or(defaults.ack_size),
        ack_rate: p.ack_rate_bps.unwrap_or(defaults.ack_rate),
        m: p.max_stage.unwrap_or(defaults.m),
        queue_size: p.queue_size.unwrap_or(defaults.queue_size),
    };
    let stations = file
        .station
        .iter()
        .enumerate()
        .map(|(i, st)| {
            let st = st.get_ref();
            StationConfig::new(i + 1, st.lambda_pps, st.bit_rate_bps, st.payload_bytes)
                .with_w0(st.w0)
                .with_pe(st.pe)
        })
        .collect();
    let scenario = Scenario {
        stations,
        phy,
        label: file
            .label
            .clone()
            .unwrap_or_else(|| source_name.to_string()),
    };
    validate_scenario(scenario).map_err(|e| {
        let line = match &e {
            ParamError::Station { station, .. } => file
                .station
                .get(station - 1)
                .map(|s| line_of(text, &s.span())),
            ParamError::Phy { .. } => phy_line,
            ParamError::NoStations => None,
            ParamError::StationIds { .. } => None,
        };
        let message = match e {
            ParamError::NoStations => {
                "no stations (add at least one [[station]] table)".to_string()
            }
            other => other.to_string(),
        };
        err(line, message)
    })
}

pub fn read_scenario(path: &Path) -> Result<Scenario, ScenarioFileError> {
    let name = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|e| ScenarioFileError {
        source_name: name.clone(),
        line: None,
        message: e.to_string(),
    })?;
    parse_scenario(&text, &name)
}

/// Seconds to microseconds, rounded to the picosecond so that written
/// files read back to the same text.
fn micros(seconds: f64) -> f64 {
    (seconds * 1e12).round() / 1e6
}

/// Canonical text of a scenario; every field is written explicitly so the
/// output also serves as a hashable fingerprint.
pub fn write_scenario(sc: &Scenario) -> String {
    let phy = &sc.phy;
    let out = OutScenario {
        label: sc.label.clone(),
        phy: FilePhy {
            sigma_us: Some(micros(phy.sigma)),
            sifs_us: Some(micros(phy.sifs)),
            difs_us: Some(micros(phy.difs)),
            phy_hdr_us: Some(micros(phy.phy_hdr)),
            mac_hdr_bytes: Some(phy.mac_hdr),
            ack_bytes: Some(phy.ack_size),
            ack_rate_bps: Some(phy.ack_rate),
            max_stage: Some(phy.m),
            queue_size: Some(phy.queue_size),
        },
        station: sc
            .stations
            .iter()
            .map(|st| FileStation {
                lambda_pps: st.lambda,
                bit_rate_bps: st.bit_rate,
                payload_bytes: st.payload,
                w0: st.w0,
                pe: st.pe,
            })
            .collect(),
    };
    toml::to_string(&out).expect("scenario fields are plain numbers and strings")
}
