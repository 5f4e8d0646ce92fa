//! Built-in scenarios.

use dcf_core::{Scenario, StationConfig};

pub const PAYLOAD: u32 = 1028;
pub const FAST_RATE: f64 = 11e6;
pub const SLOW_RATE: f64 = 1e6;

pub const SCENARIO_B_NOTE: &str =
    "scenario B is a calibrated assumption: fast stations 1000 pkt/s, slow station 500 pkt/s";

fn three_stations(label: &str, fast_lambda: f64, slow_lambda: f64) -> Scenario {
    Scenario::new(
        label,
        vec![
            StationConfig::new(1, fast_lambda, FAST_RATE, PAYLOAD),
            StationConfig::new(2, fast_lambda, FAST_RATE, PAYLOAD),
            StationConfig::new(3, slow_lambda, SLOW_RATE, PAYLOAD),
        ],
    )
}

/// Two 11 Mbps stations at 500 pkt/s and one 1 Mbps station at 1000 pkt/s.
pub fn scenario_a() -> Scenario {
    three_stations("A", 500.0, 1000.0)
}

/// The faster stations carry more traffic than the slow one.
pub fn scenario_b() -> Scenario {
    three_stations("B", 1000.0, 500.0)
}

/// Scenario A's layout with the slow station's rate as a parameter.
pub fn slow_rate_sweep(slow_lambda: f64) -> Scenario {
    three_stations("slow-rate-sweep", 500.0, slow_lambda)
}

/// Looks up `A`, `B` or `fig2` (case-insensitive).
pub fn by_name(name: &str) -> Option<Scenario> {
    match name.to_ascii_lowercase().as_str() {
        "a" => Some(scenario_a()),
        "b" => Some(scenario_b()),
        "fig2" => Some(slow_rate_sweep(500.0)),
        _ => None,
    }
}

/// `points` log-spaced values from `start` to `stop` inclusive.
pub fn log_space(start: f64, stop: f64, points: usize) -> Vec<f64> {
    if points == 1 {
        return vec![start];
    }
    let (a, b) = (start.ln(), stop.ln());
    (0..points)
        .map(|k| match k {
            0 => start,
            k if k == points - 1 => stop,
            k => (a + (b - a) * k as f64 / (points - 1) as f64).exp(),
        })
        .collect()
}
