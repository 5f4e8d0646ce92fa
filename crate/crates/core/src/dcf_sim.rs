//! Slot-level simulator of basic-access DCF with binary exponential
//! backoff, Poisson arrivals, one-packet queues, multirate airtimes and
//! channel errors.
//!
//! Time advances in virtual slots. When no station with a frame has a zero
//! backoff counter an idle slot of `sigma` elapses and every pending station
//! decrements its counter. Otherwise the channel is busy: a lone transmitter
//! succeeds (or fails on a channel error with probability `pe`), several
//! transmitters collide and occupy the channel for the longest of their
//! collision durations. Counters are frozen during busy slots.
//!
//! Each station holds one frame in contention plus a one-packet queue. An
//! arrival to an empty station starts a fresh stage-0 backoff. By default
//! only arrivals during the station's own transmission are queued and
//! served after the exchange; any other arrival is dropped. See
//! [`QueueDiscipline`] for the alternatives.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use rayon::prelude::*;
use thiserror::Error;

use crate::params::{Network, ParamError, Scenario};

/// Identifier of the generator and seed-splitting rule, stored in reports.
pub const RNG_ALGORITHM: &str =
    "chacha8 (rand_chacha 0.10), per-replication seed = splitmix64(seed + r)";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error(transparent)]
    Params(#[from] ParamError),
    #[error("station {station}: simulator needs an integer contention window, got {w0}")]
    NonIntegerWindow { station: usize, w0: f64 },
    #[error("duration {duration} s must exceed warmup {warmup} s >= 0")]
    Horizon { duration: f64, warmup: f64 },
    #[error("at least one replication is required")]
    NoReplications,
}

/// Where arrivals that find the station busy may wait.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum QueueDiscipline {
    /// Arrivals during the station's own transmission are kept and served
    /// after the exchange.
    #[default]
    LatchDuringTx,
    /// Every arrival to a station that already holds a frame is dropped.
    HeadOnly,
    /// Any arrival that finds the extra slot empty is kept.
    Buffered,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub scenario: Scenario,
    /// Simulated seconds, warmup included.
    pub duration: f64,
    pub warmup: f64,
    pub seed: u64,
    pub replications: usize,
    pub discipline: QueueDiscipline,
}

impl SimConfig {
    pub fn new(scenario: Scenario, duration: f64, seed: u64, replications: usize) -> Self {
        Self {
            scenario,
            duration,
            warmup: (duration * 0.05).min(2.0),
            seed,
            replications,
            discipline: QueueDiscipline::default(),
        }
    }

    fn network(&self) -> Result<Network, SimError> {
        if !(self.duration > self.warmup && self.warmup >= 0.0 && self.duration.is_finite()) {
            return Err(SimError::Horizon {
                duration: self.duration,
                warmup: self.warmup,
            });
        }
        if self.replications < 1 {
            return Err(SimError::NoReplications);
        }
        let net = Network::new(self.scenario.clone())?;
        for st in net.stations() {
            if st.w0.fract() != 0.0 || st.w0 > u32::MAX as f64 {
                return Err(SimError::NonIntegerWindow {
                    station: st.id,
                    w0: st.w0,
                });
            }
        }
        Ok(net)
    }
}

/// 64-bit finaliser used to derive replication seeds.
pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

pub fn replication_seed(seed: u64, replication: usize) -> u64 {
    splitmix64(seed.wrapping_add(replication as u64))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SlotCounts {
    pub idle: u64,
    pub success: u64,
    pub error: u64,
    pub collision: u64,
}

impl SlotCounts {
    pub fn total(&self) -> u64 {
        self.idle + self.success + self.error + self.collision
    }

    fn add(&mut self, other: &SlotCounts) {
        self.idle += other.idle;
        self.success += other.success;
        self.error += other.error;
        self.collision += other.collision;
    }
}

/// Backoff draws observed at one stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct StageDraws {
    pub count: u64,
    pub min_window: u64,
    pub max_window: u64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct StationCounters {
    pub generated: u64,
    pub delivered: u64,
    pub dropped: u64,
    pub attempts: u64,
    pub collisions: u64,
    pub errors: u64,
    /// Seconds spent without a frame.
    pub idle_time: f64,
    /// Packets held (frame in contention + queue) when measuring started
    /// and when it ended.
    pub held_at_start: u64,
    pub held_at_end: u64,
    pub stage_draws: Vec<StageDraws>,
}

impl StationCounters {
    fn held(rt: &StationRt) -> u64 {
        rt.hol as u64 + rt.queued as u64
    }
}

/// Raw results of one replication.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicationMetrics {
    pub seed: u64,
    pub measured_time: f64,
    pub slots: SlotCounts,
    pub stations: Vec<StationCounters>,
    /// bits per second
    pub throughput: Vec<f64>,
}

impl ReplicationMetrics {
    pub fn aggregate(&self) -> f64 {
        self.throughput.iter().sum()
    }
}

#[derive(Debug, Clone)]
struct StationRt {
    hol: bool,
    queued: bool,
    stage: u32,
    backoff: u64,
    next_arrival: f64,
}

struct Engine<'a> {
    net: &'a Network,
    discipline: QueueDiscipline,
    rng: ChaCha8Rng,
    arrivals: Vec<Exp<f64>>,
    windows: Vec<u64>,
    rt: Vec<StationRt>,
    counters: Vec<StationCounters>,
    slots: SlotCounts,
}

impl<'a> Engine<'a> {
    fn new(net: &'a Network, discipline: QueueDiscipline, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let arrivals: Vec<Exp<f64>> = net
            .stations()
            .iter()
            .map(|st| Exp::new(st.lambda).expect("validated positive rate"))
            .collect();
        let rt = arrivals
            .iter()
            .map(|exp| StationRt {
                hol: false,
                queued: false,
                stage: 0,
                backoff: 0,
                next_arrival: exp.sample(&mut rng),
            })
            .collect();
        let stages = net.phy().m as usize + 1;
        Self {
            net,
            discipline,
            rng,
            windows: net.stations().iter().map(|st| st.w0 as u64).collect(),
            arrivals,
            rt,
            counters: vec![
                StationCounters {
                    stage_draws: vec![StageDraws::default(); stages],
                    ..StationCounters::default()
                };
                net.len()
            ],
            slots: SlotCounts::default(),
        }
    }

    fn reset_counters(&mut self) {
        let stages = self.net.phy().m as usize + 1;
        for (c, rt) in self.counters.iter_mut().zip(&self.rt) {
            *c = StationCounters {
                held_at_start: StationCounters::held(rt),
                stage_draws: vec![StageDraws::default(); stages],
                ..StationCounters::default()
            };
        }
        self.slots = SlotCounts::default();
    }

    fn draw_backoff(&mut self, s: usize) {
        let stage = self.rt[s].stage.min(self.net.phy().m);
        let window = self.windows[s] << stage;
        self.rt[s].backoff = self.rng.random_range(0..window);
        let d = &mut self.counters[s].stage_draws[stage as usize];
        d.min_window = if d.count == 0 {
            window
        } else {
            d.min_window.min(window)
        };
        d.max_window = d.max_window.max(window);
        d.count += 1;
    }

    /// Delivers arrivals up to `until`. `on_air[s]` is true when station
    /// `s` is transmitting in the current slot.
    #[allow(clippy::needless_range_loop)]
    fn arrivals_until(&mut self, start: f64, until: f64, on_air: &[bool]) {
        for s in 0..self.rt.len() {
            if !self.rt[s].hol {
                let first = self.rt[s].next_arrival.min(until).max(start);
                self.counters[s].idle_time += first - start;
            }
            while self.rt[s].next_arrival <= until {
                self.counters[s].generated += 1;
                let rt = &mut self.rt[s];
                if !rt.hol {
                    rt.hol = true;
                    rt.stage = 0;
                    self.draw_backoff(s);
                } else if !rt.queued
                    && match self.discipline {
                        QueueDiscipline::LatchDuringTx => on_air[s],
                        QueueDiscipline::Buffered => true,
                        QueueDiscipline::HeadOnly => false,
                    }
                {
                    rt.queued = true;
                } else {
                    self.counters[s].dropped += 1;
                }
                let gap = self.arrivals[s].sample(&mut self.rng);
                self.rt[s].next_arrival += gap;
            }
        }
    }

    fn retry(&mut self, s: usize) {
        self.rt[s].stage = (self.rt[s].stage + 1).min(self.net.phy().m);
        self.draw_backoff(s);
    }

    #[allow(clippy::needless_range_loop)]
    fn run(mut self, duration: f64, warmup: f64, seed: u64) -> ReplicationMetrics {
        let sigma = self.net.phy().sigma;
        let frames = self.net.frames().to_vec();
        let pe: Vec<f64> = self.net.stations().iter().map(|st| st.pe).collect();
        let n = self.rt.len();
        let mut t = 0.0;
        let mut measuring_from = None;
        let mut on_air = vec![false; n];
        let mut pending = vec![false; n];
        if warmup <= 0.0 {
            measuring_from = Some(0.0);
        }

        while t < duration {
            if measuring_from.is_none() && t >= warmup {
                self.reset_counters();
                measuring_from = Some(t);
            }
            let mut transmitters = 0;
            let mut lead = 0;
            for s in 0..n {
                pending[s] = self.rt[s].hol;
                on_air[s] = self.rt[s].hol && self.rt[s].backoff == 0;
                if on_air[s] {
                    transmitters += 1;
                    lead = s;
                }
            }
            match transmitters {
                0 => {
                    let end = t + sigma;
                    self.arrivals_until(t, end, &on_air);
                    for s in 0..n {
                        if pending[s] {
                            self.rt[s].backoff -= 1;
                        }
                    }
                    self.slots.idle += 1;
                    t = end;
                }
                1 => {
                    let s = lead;
                    self.counters[s].attempts += 1;
                    let failed = pe[s] > 0.0 && self.rng.random_bool(pe[s]);
                    let end = t + if failed {
                        frames[s].error
                    } else {
                        frames[s].success
                    };
                    self.arrivals_until(t, end, &on_air);
                    if failed {
                        self.counters[s].errors += 1;
                        self.slots.error += 1;
                        self.retry(s);
                    } else {
                        self.counters[s].delivered += 1;
                        self.slots.success += 1;
                        if self.rt[s].queued {
                            self.rt[s].queued = false;
                            self.rt[s].stage = 0;
                            self.draw_backoff(s);
                        } else {
                            self.rt[s].hol = false;
                        }
                    }
                    t = end;
                }
                _ => {
                    let busy = (0..n)
                        .filter(|&s| on_air[s])
                        .map(|s| frames[s].collision())
                        .fold(0.0, f64::max);
                    let end = t + busy;
                    self.arrivals_until(t, end, &on_air);
                    for s in 0..n {
                        if on_air[s] {
                            self.counters[s].attempts += 1;
                            self.counters[s].collisions += 1;
                            self.retry(s);
                        }
                    }
                    self.slots.collision += 1;
                    t = end;
                }
            }
        }

        let start = measuring_from.unwrap_or(t);
        let measured_time = t - start;
        for (c, rt) in self.counters.iter_mut().zip(&self.rt) {
            c.held_at_end = StationCounters::held(rt);
        }
        let throughput = self
            .counters
            .iter()
            .zip(self.net.stations())
            .map(|(c, st)| c.delivered as f64 * 8.0 * st.payload as f64 / measured_time)
            .collect();
        ReplicationMetrics {
            seed,
            measured_time,
            slots: self.slots,
            stations: self.counters,
            throughput,
        }
    }
}

/// Runs a single replication with the configuration's base seed.
pub fn run_sim(cfg: &SimConfig) -> Result<ReplicationMetrics, SimError> {
    let net = cfg.network()?;
    Ok(run_one(&net, cfg, 0))
}

fn run_one(net: &Network, cfg: &SimConfig, replication: usize) -> ReplicationMetrics {
    let seed = replication_seed(cfg.seed, replication);
    Engine::new(net, cfg.discipline, seed).run(cfg.duration, cfg.warmup, seed)
}

/// Mean and standard error across replications. `std_err` is absent for a
/// single replication.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub std_err: Option<f64>,
}

impl Estimate {
    pub fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let std_err = (xs.len() > 1).then(|| {
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
            (var / n).sqrt()
        });
        Self { mean, std_err }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StationSimStats {
    /// bits per second
    pub throughput: Estimate,
    /// collided attempts / attempts
    pub collision_fraction: Estimate,
    /// channel-error attempts / attempts
    pub error_fraction: Estimate,
    /// share of time without a frame
    pub idle_fraction: Estimate,
    pub delivered: u64,
    pub dropped: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimReport {
    pub stations: Vec<StationSimStats>,
    pub aggregate: Estimate,
    /// Summed over replications.
    pub slots: SlotCounts,
    pub rng_algorithm: &'static str,
    pub seed: u64,
    pub replications: Vec<ReplicationMetrics>,
}

impl SimReport {
    pub fn throughput_means(&self) -> Vec<f64> {
        self.stations.iter().map(|s| s.throughput.mean).collect()
    }

    /// `(replication, station, metric, value)` rows; stations are 1-based.
    pub fn raw_rows(&self) -> Vec<(usize, usize, &'static str, f64)> {
        let mut rows = Vec::new();
        for (r, rep) in self.replications.iter().enumerate() {
            for (s, c) in rep.stations.iter().enumerate() {
                let id = s + 1;
                rows.push((r, id, "throughput_bps", rep.throughput[s]));
                rows.push((r, id, "generated", c.generated as f64));
                rows.push((r, id, "delivered", c.delivered as f64));
                rows.push((r, id, "dropped", c.dropped as f64));
                rows.push((r, id, "attempts", c.attempts as f64));
                rows.push((r, id, "collisions", c.collisions as f64));
                rows.push((r, id, "errors", c.errors as f64));
                rows.push((r, id, "idle_fraction", c.idle_time / rep.measured_time));
            }
        }
        rows
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Runs `cfg.replications` independent replications and aggregates them in
/// replication order.
pub fn replicate(cfg: &SimConfig) -> Result<SimReport, SimError> {
    let net = cfg.network()?;
    let reps: Vec<ReplicationMetrics> = (0..cfg.replications)
        .into_par_iter()
        .map(|r| run_one(&net, cfg, r))
        .collect();

    let stat = |f: &dyn Fn(&ReplicationMetrics) -> f64| {
        Estimate::from_samples(&reps.iter().map(f).collect::<Vec<_>>())
    };
    let stations = (0..net.len())
        .map(|s| StationSimStats {
            throughput: stat(&|r| r.throughput[s]),
            collision_fraction: stat(&|r| ratio(r.stations[s].collisions, r.stations[s].attempts)),
            error_fraction: stat(&|r| ratio(r.stations[s].errors, r.stations[s].attempts)),
            idle_fraction: stat(&|r| r.stations[s].idle_time / r.measured_time),
            delivered: reps.iter().map(|r| r.stations[s].delivered).sum(),
            dropped: reps.iter().map(|r| r.stations[s].dropped).sum(),
        })
        .collect();
    let mut slots = SlotCounts::default();
    reps.iter().for_each(|r| slots.add(&r.slots));
    Ok(SimReport {
        stations,
        aggregate: stat(&|r| r.aggregate()),
        slots,
        rng_algorithm: RNG_ALGORITHM,
        seed: cfg.seed,
        replications: reps,
    })
}
