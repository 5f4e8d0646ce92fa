//! Scenario and protocol constants, validation, and duration classes.
//!
//! A [`Scenario`] is the user-facing description of a contention domain. Once
//! validated it is turned into a [`Network`], which caches every per-station
//! airtime and the duration-class partition used by the slot model.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParamError {
    #[error("no stations")]
    NoStations,
    #[error("station {station}: {field} out of range ({value})")]
    Station {
        station: usize,
        field: &'static str,
        value: f64,
    },
    #[error("station ids must be 1..=N in order, found id {found} at position {position}")]
    StationIds { position: usize, found: usize },
    #[error("phy: {field} out of range ({value})")]
    Phy { field: &'static str, value: f64 },
}

/// One contending station.
#[derive(Debug, Clone, PartialEq)]
pub struct StationConfig {
    /// 1-based station index.
    pub id: usize,
    /// Poisson packet arrival rate, packets per second.
    pub lambda: f64,
    /// PHY data rate, bits per second.
    pub bit_rate: f64,
    /// MSDU payload, bytes.
    pub payload: u32,
    /// Minimum contention window, slots. Real-valued in the model; the
    /// simulator requires an integer.
    pub w0: f64,
    /// Channel packet-error probability.
    pub pe: f64,
}

impl StationConfig {
    pub fn new(id: usize, lambda: f64, bit_rate: f64, payload: u32) -> Self {
        Self {
            id,
            lambda,
            bit_rate,
            payload,
            w0: DEFAULT_W0,
            pe: 0.0,
        }
    }

    pub fn with_w0(mut self, w0: f64) -> Self {
        self.w0 = w0;
        self
    }

    pub fn with_pe(mut self, pe: f64) -> Self {
        self.pe = pe;
        self
    }

    /// Offered load, bits per second.
    pub fn offered_load(&self) -> f64 {
        self.lambda * 8.0 * self.payload as f64
    }

    fn validate(&self) -> Result<(), ParamError> {
        let bad = |field, value| ParamError::Station {
            station: self.id,
            field,
            value,
        };
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(bad("lambda", self.lambda));
        }
        if !(self.bit_rate > 0.0 && self.bit_rate.is_finite()) {
            return Err(bad("bit_rate", self.bit_rate));
        }
        if self.payload < 1 {
            return Err(bad("payload", self.payload as f64));
        }
        if !(self.w0 >= 1.0 && self.w0.is_finite()) {
            return Err(bad("w0", self.w0));
        }
        if !(0.0..1.0).contains(&self.pe) {
            return Err(bad("pe", self.pe));
        }
        Ok(())
    }
}

pub const DEFAULT_W0: f64 = 32.0;

/// MAC/PHY timing shared by every station. Durations in seconds, sizes in
/// bytes, rates in bits per second.
#[derive(Debug, Clone, PartialEq)]
pub struct PhyTimingParams {
    pub sigma: f64,
    pub sifs: f64,
    pub difs: f64,
    /// PLCP preamble + header airtime.
    pub phy_hdr: f64,
    /// MAC header + FCS.
    pub mac_hdr: u32,
    pub ack_size: u32,
    pub ack_rate: f64,
    /// Maximum backoff stage.
    pub m: u32,
    pub queue_size: u32,
}

impl Default for PhyTimingParams {
    /// 802.11b DSSS, long preamble.
    fn default() -> Self {
        Self {
            sigma: 20e-6,
            sifs: 10e-6,
            difs: 50e-6,
            phy_hdr: 192e-6,
            mac_hdr: 28,
            ack_size: 14,
            ack_rate: 1e6,
            m: 5,
            queue_size: 1,
        }
    }
}

impl PhyTimingParams {
    fn validate(&self) -> Result<(), ParamError> {
        let positive = [
            ("sigma", self.sigma),
            ("sifs", self.sifs),
            ("difs", self.difs),
            ("phy_hdr", self.phy_hdr),
            ("ack_rate", self.ack_rate),
        ];
        for (field, value) in positive {
            if !(value > 0.0 && value.is_finite()) {
                return Err(ParamError::Phy { field, value });
            }
        }
        if self.ack_size == 0 {
            return Err(ParamError::Phy {
                field: "ack_size",
                value: 0.0,
            });
        }
        if self.m < 1 || self.m > 30 {
            return Err(ParamError::Phy {
                field: "m",
                value: self.m as f64,
            });
        }
        if self.queue_size != 1 {
            return Err(ParamError::Phy {
                field: "queue_size",
                value: self.queue_size as f64,
            });
        }
        Ok(())
    }

    /// ACK frame airtime including its PLCP header.
    pub fn ack_airtime(&self) -> f64 {
        self.phy_hdr + 8.0 * self.ack_size as f64 / self.ack_rate
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub stations: Vec<StationConfig>,
    pub phy: PhyTimingParams,
    pub label: String,
}

impl Scenario {
    pub fn new(label: impl Into<String>, stations: Vec<StationConfig>) -> Self {
        Self {
            stations,
            phy: PhyTimingParams::default(),
            label: label.into(),
        }
    }

    pub fn len(&self) -> usize {
        self.stations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stations.is_empty()
    }

    /// Copy with the minimum contention windows replaced.
    pub fn with_windows(&self, w0: &[f64]) -> Scenario {
        let mut out = self.clone();
        for (st, &w) in out.stations.iter_mut().zip(w0) {
            st.w0 = w;
        }
        out
    }
}

/// Checks every invariant and returns the scenario unchanged.
pub fn validate_scenario(sc: Scenario) -> Result<Scenario, ParamError> {
    if sc.stations.is_empty() {
        return Err(ParamError::NoStations);
    }
    sc.phy.validate()?;
    for (position, st) in sc.stations.iter().enumerate() {
        if st.id != position + 1 {
            return Err(ParamError::StationIds {
                position: position + 1,
                found: st.id,
            });
        }
        st.validate()?;
    }
    Ok(sc)
}

/// Channel occupancy of one station's frames.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameDurations {
    /// DATA airtime (PLCP + MAC header + payload).
    pub data: f64,
    pub ack: f64,
    /// Successful exchange: DATA + SIFS + ACK + DIFS.
    pub success: f64,
    /// Failed exchange: DATA + ACK timeout (SIFS + ACK) + DIFS.
    pub error: f64,
}

impl FrameDurations {
    /// A collision led by this frame lasts as long as a failed exchange.
    pub fn collision(&self) -> f64 {
        self.error
    }
}

pub fn frame_durations(st: &StationConfig, phy: &PhyTimingParams) -> FrameDurations {
    let data = phy.phy_hdr + 8.0 * (phy.mac_hdr as f64 + st.payload as f64) / st.bit_rate;
    let ack = phy.ack_airtime();
    let tail = phy.sifs + ack + phy.difs;
    FrameDurations {
        data,
        ack,
        success: data + tail,
        error: data + tail,
    }
}

/// A group of stations with identical channel occupancy.
#[derive(Debug, Clone, PartialEq)]
pub struct DurationClass {
    /// 0-based station indices, ascending.
    pub members: Vec<usize>,
    pub t_success: f64,
    pub t_error: f64,
    pub t_collision: f64,
}

impl DurationClass {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// Duration classes ordered slowest first (class 0 has the longest frames).
#[derive(Debug, Clone, PartialEq)]
pub struct ClassPartition {
    pub classes: Vec<DurationClass>,
    /// class index of each station.
    pub class_of: Vec<usize>,
}

impl ClassPartition {
    pub fn n_classes(&self) -> usize {
        self.classes.len()
    }
}

fn nanos(t: f64) -> i64 {
    (t * 1e9).round() as i64
}

/// Groups stations by successful-exchange airtime, compared at nanosecond
/// resolution.
pub fn derive_classes(sc: &Scenario) -> ClassPartition {
    let durations: Vec<FrameDurations> = sc
        .stations
        .iter()
        .map(|st| frame_durations(st, &sc.phy))
        .collect();
    let mut keys: Vec<i64> = durations.iter().map(|d| nanos(d.success)).collect();
    keys.sort_unstable_by(|a, b| b.cmp(a));
    keys.dedup();

    let mut classes: Vec<DurationClass> = keys
        .iter()
        .map(|&key| {
            let members: Vec<usize> = (0..durations.len())
                .filter(|&s| nanos(durations[s].success) == key)
                .collect();
            let rep = durations[members[0]];
            DurationClass {
                members,
                t_success: rep.success,
                t_error: rep.error,
                t_collision: rep.collision(),
            }
        })
        .collect();
    classes.shrink_to_fit();

    let mut class_of = vec![0; durations.len()];
    for (d, class) in classes.iter().enumerate() {
        for &s in &class.members {
            class_of[s] = d;
        }
    }
    ClassPartition { classes, class_of }
}

/// A validated scenario with cached airtimes and class partition.
#[derive(Debug, Clone)]
pub struct Network {
    scenario: Scenario,
    frames: Vec<FrameDurations>,
    partition: ClassPartition,
}

impl Network {
    pub fn new(scenario: Scenario) -> Result<Self, ParamError> {
        let scenario = validate_scenario(scenario)?;
        let frames = scenario
            .stations
            .iter()
            .map(|st| frame_durations(st, &scenario.phy))
            .collect();
        let partition = derive_classes(&scenario);
        Ok(Self {
            scenario,
            frames,
            partition,
        })
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn stations(&self) -> &[StationConfig] {
        &self.scenario.stations
    }

    pub fn phy(&self) -> &PhyTimingParams {
        &self.scenario.phy
    }

    pub fn frames(&self) -> &[FrameDurations] {
        &self.frames
    }

    pub fn partition(&self) -> &ClassPartition {
        &self.partition
    }

    pub fn len(&self) -> usize {
        self.scenario.stations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scenario.stations.is_empty()
    }

    /// Same network with new minimum contention windows. Windows do not
    /// affect airtimes, so the partition is reused.
    pub fn with_windows(&self, w0: &[f64]) -> Result<Self, ParamError> {
        let scenario = validate_scenario(self.scenario.with_windows(w0))?;
        Ok(Self {
            scenario,
            frames: self.frames.clone(),
            partition: self.partition.clone(),
        })
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({} stations)", self.label, self.stations.len())
    }
}
