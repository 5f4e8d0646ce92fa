//! Model, optimizer, simulator and figure runs rendered as [`Table`]s.

use std::str::FromStr;

use dcf_core::dcf_sim::{replicate, QueueDiscipline, SimConfig, SimReport};
use dcf_core::fairness_opt::{deployable_windows, jain_index, maximize, weights};
use dcf_core::{
    optimize, solve_equilibrium, AllocationResult, Criterion, Equilibrium, Network, OptError,
    OptimizerOptions, Scenario, SolverOptions,
};
use rayon::prelude::*;

use crate::builtin;
use crate::error::CliError;
use crate::report::{num, Table};

#[derive(Debug, Clone, PartialEq)]
pub struct SimSettings {
    pub seed: u64,
    /// Simulated seconds per replication.
    pub duration: f64,
    pub reps: usize,
    pub queue: QueueDiscipline,
}

impl Default for SimSettings {
    fn default() -> Self {
        Self {
            seed: 1,
            duration: 60.0,
            reps: 10,
            queue: QueueDiscipline::default(),
        }
    }
}

impl SimSettings {
    pub fn config(&self, sc: Scenario) -> SimConfig {
        let mut cfg = SimConfig::new(sc, self.duration, self.seed, self.reps);
        cfg.discipline = self.queue;
        cfg
    }

    pub fn describe(&self) -> String {
        format!(
            "simulation: {} replication(s) x {} s, queue {:?}",
            self.reps, self.duration, self.queue
        )
    }
}

pub fn parse_queue(s: &str) -> Result<QueueDiscipline, String> {
    match s {
        "latch" => Ok(QueueDiscipline::LatchDuringTx),
        "head-only" => Ok(QueueDiscipline::HeadOnly),
        "buffered" => Ok(QueueDiscipline::Buffered),
        other => Err(format!(
            "unknown queue discipline {other:?} (latch, head-only, buffered)"
        )),
    }
}

fn sim_jain(report: &SimReport, sc: &Scenario) -> f64 {
    let normalized: Vec<f64> = report
        .throughput_means()
        .iter()
        .zip(&sc.stations)
        .map(|(s, st)| s / st.bit_rate)
        .collect();
    jain_index(&normalized).unwrap_or(f64::NAN)
}

fn jain_of(eq: &Equilibrium, net: &Network) -> f64 {
    jain_index(&eq.normalized_throughput(net)).unwrap_or(f64::NAN)
}

pub fn model_tables(sc: &Scenario) -> Result<Vec<Table>, CliError> {
    let net = Network::new(sc.clone())?;
    let eq = solve_equilibrium(&net, &SolverOptions::default())?;
    let mut stations = Table::new(
        "model_stations",
        &[
            "station",
            "lambda_pps",
            "bit_rate_bps",
            "payload_bytes",
            "w0",
            "class",
            "tau",
            "p_col",
            "p_eq",
            "b_idle",
            "q",
            "p_i0",
            "throughput_bps",
            "normalized",
        ],
    );
    let normalized = eq.normalized_throughput(&net);
    for (s, st) in net.stations().iter().enumerate() {
        let state = &eq.per_station[s];
        stations.push(vec![
            st.id.to_string(),
            num(st.lambda),
            num(st.bit_rate),
            st.payload.to_string(),
            num(st.w0),
            (net.partition().class_of[s] + 1).to_string(),
            num(state.tau),
            num(state.p_col),
            num(state.p_eq),
            num(state.b_i),
            num(state.q),
            num(state.p_i0),
            num(eq.throughput[s]),
            num(normalized[s]),
        ]);
    }
    let mut summary = Table::new(
        "model_summary",
        &[
            "aggregate_bps",
            "jain_normalized",
            "jain_absolute",
            "t_av_s",
            "p_tr",
            "iterations",
            "residual",
        ],
    );
    summary.push(vec![
        num(eq.aggregate),
        num(jain_of(&eq, &net)),
        num(jain_index(&eq.throughput).unwrap_or(f64::NAN)),
        num(eq.slot.t_av),
        num(eq.slot.p_tr),
        eq.iterations.to_string(),
        num(eq.residual),
    ]);
    Ok(vec![stations, summary])
}

pub fn optimize_tables(
    sc: &Scenario,
    criterion: Criterion,
    sim: Option<&SimSettings>,
) -> Result<Vec<Table>, CliError> {
    let net = Network::new(sc.clone())?;
    let alloc = optimize(&net, criterion, &OptimizerOptions::default())?;
    let windows: Vec<f64> = alloc.w0_star.iter().map(|w| w.rounded as f64).collect();
    let simulated = sim
        .map(|s| replicate(&s.config(sc.with_windows(&windows))))
        .transpose()?;

    let mut header = vec![
        "station",
        "weight",
        "tau_star",
        "w0_real",
        "w0",
        "upper_clipped",
        "predicted_bps",
        "predicted_normalized",
        "realized_bps",
        "stationarity",
    ];
    if simulated.is_some() {
        header.extend(["sim_bps", "sim_std_err_bps"]);
    }
    let mut stations = Table::new("allocation_stations", &header);
    let predicted_norm = alloc.predicted.normalized_throughput(&net);
    for (s, st) in net.stations().iter().enumerate() {
        let mut row = vec![
            st.id.to_string(),
            num(alloc.weights[s]),
            num(alloc.tau_star[s]),
            num(alloc.w0_star[s].real),
            alloc.w0_star[s].rounded.to_string(),
            alloc.at_upper_bound[s].to_string(),
            num(alloc.predicted.throughput[s]),
            num(predicted_norm[s]),
            num(alloc.realized.throughput[s]),
            num(alloc.stationarity[s]),
        ];
        if let Some(rep) = &simulated {
            let t = rep.stations[s].throughput;
            row.extend([num(t.mean), t.std_err.map_or_else(String::new, num)]);
        }
        stations.push(row);
    }

    let mut header = vec![
        "criterion",
        "utility",
        "predicted_bps",
        "jain_normalized",
        "jain_absolute",
        "realized_bps",
        "realized_jain",
        "iterations",
    ];
    if simulated.is_some() {
        header.extend(["sim_bps", "sim_std_err_bps", "sim_jain"]);
    }
    let mut summary = Table::new("allocation_summary", &header);
    let mut row = vec![
        criterion.label().to_string(),
        num(alloc.utility),
        num(alloc.predicted.aggregate),
        num(alloc.jain),
        num(alloc.jain_absolute),
        num(alloc.realized.aggregate),
        num(jain_of(&alloc.realized, &net)),
        alloc.iterations.to_string(),
    ];
    if let Some(rep) = &simulated {
        row.extend([
            num(rep.aggregate.mean),
            rep.aggregate.std_err.map_or_else(String::new, num),
            num(sim_jain(rep, sc)),
        ]);
    }
    summary.push(row);
    Ok(vec![stations, summary])
}

pub fn simulate_tables(sc: &Scenario, settings: &SimSettings) -> Result<Vec<Table>, CliError> {
    let rep = replicate(&settings.config(sc.clone()))?;
    let mut stations = Table::new(
        "sim_stations",
        &[
            "station",
            "throughput_bps",
            "std_err_bps",
            "normalized",
            "collision_fraction",
            "error_fraction",
            "idle_fraction",
            "delivered",
            "dropped",
        ],
    );
    let se = |e: dcf_core::dcf_sim::Estimate| e.std_err.map_or_else(String::new, num);
    for (s, st) in rep.stations.iter().enumerate() {
        stations.push(vec![
            (s + 1).to_string(),
            num(st.throughput.mean),
            se(st.throughput),
            num(st.throughput.mean / sc.stations[s].bit_rate),
            num(st.collision_fraction.mean),
            num(st.error_fraction.mean),
            num(st.idle_fraction.mean),
            st.delivered.to_string(),
            st.dropped.to_string(),
        ]);
    }
    let mut summary = Table::new(
        "sim_summary",
        &[
            "aggregate_bps",
            "std_err_bps",
            "jain_normalized",
            "idle_slots",
            "success_slots",
            "error_slots",
            "collision_slots",
            "rng",
        ],
    );
    summary.push(vec![
        num(rep.aggregate.mean),
        se(rep.aggregate),
        num(sim_jain(&rep, sc)),
        rep.slots.idle.to_string(),
        rep.slots.success.to_string(),
        rep.slots.error.to_string(),
        rep.slots.collision.to_string(),
        rep.rng_algorithm.to_string(),
    ]);
    let mut raw = Table::new("sim_raw", &["replication", "station", "metric", "value"]);
    for (r, s, metric, value) in rep.raw_rows() {
        raw.push(vec![
            r.to_string(),
            s.to_string(),
            metric.to_string(),
            num(value),
        ]);
    }
    Ok(vec![stations, summary, raw])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepField {
    Lambda,
    BitRate,
    Payload,
    W0,
    Pe,
}

/// `station:field:start:stop:points[:log]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub station: usize,
    pub field: SweepField,
    pub start: f64,
    pub stop: f64,
    pub points: usize,
    pub log: bool,
}

impl FromStr for Sweep {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        let usage = || format!("sweep {s:?}: expected station:field:start:stop:points[:log]");
        if !(parts.len() == 5 || parts.len() == 6 && parts[5] == "log") {
            return Err(usage());
        }
        let station: usize = parts[0].parse().map_err(|_| usage())?;
        let field = match parts[1] {
            "lambda" => SweepField::Lambda,
            "bit_rate" => SweepField::BitRate,
            "payload" => SweepField::Payload,
            "w0" => SweepField::W0,
            "pe" => SweepField::Pe,
            other => {
                return Err(format!(
                    "sweep field {other:?}: expected lambda, bit_rate, payload, w0 or pe"
                ))
            }
        };
        let start: f64 = parts[2].parse().map_err(|_| usage())?;
        let stop: f64 = parts[3].parse().map_err(|_| usage())?;
        let points: usize = parts[4].parse().map_err(|_| usage())?;
        let log = parts.len() == 6;
        if station == 0 || points == 0 || !start.is_finite() || !stop.is_finite() {
            return Err(format!(
                "sweep {s:?}: station >= 1, points >= 1 and finite bounds required"
            ));
        }
        if log && !(start > 0.0 && stop > 0.0) {
            return Err(format!("sweep {s:?}: log spacing needs positive bounds"));
        }
        Ok(Self {
            station,
            field,
            start,
            stop,
            points,
            log,
        })
    }
}

impl std::fmt::Display for Sweep {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let field = match self.field {
            SweepField::Lambda => "lambda",
            SweepField::BitRate => "bit_rate",
            SweepField::Payload => "payload",
            SweepField::W0 => "w0",
            SweepField::Pe => "pe",
        };
        write!(
            f,
            "{}:{field}:{}:{}:{}",
            self.station, self.start, self.stop, self.points
        )?;
        if self.log {
            f.write_str(":log")?;
        }
        Ok(())
    }
}

impl Sweep {
    pub fn values(&self) -> Vec<f64> {
        if self.log {
            return builtin::log_space(self.start, self.stop, self.points);
        }
        if self.points == 1 {
            return vec![self.start];
        }
        (0..self.points)
            .map(|k| self.start + (self.stop - self.start) * k as f64 / (self.points - 1) as f64)
            .collect()
    }

    pub fn apply(&self, sc: &Scenario, value: f64) -> Result<Scenario, CliError> {
        let mut out = sc.clone();
        let st = out.stations.get_mut(self.station - 1).ok_or_else(|| {
            CliError::Usage(format!(
                "sweep station {} does not exist ({} stations)",
                self.station,
                sc.len()
            ))
        })?;
        match self.field {
            SweepField::Lambda => st.lambda = value,
            SweepField::BitRate => st.bit_rate = value,
            SweepField::Payload => st.payload = value.round() as u32,
            SweepField::W0 => st.w0 = value,
            SweepField::Pe => st.pe = value,
        }
        Ok(out)
    }
}

/// Runs `run` at every sweep point (in parallel) and stacks the resulting
/// tables, prefixing each row with the swept value.
pub fn sweep_tables<F>(sc: &Scenario, sweep: &Sweep, run: F) -> Result<Vec<Table>, CliError>
where
    F: Fn(&Scenario) -> Result<Vec<Table>, CliError> + Sync,
{
    let values = sweep.values();
    let per_point: Vec<Vec<Table>> = values
        .par_iter()
        .map(|&v| {
            let point = sweep.apply(sc, v)?;
            run(&point).map_err(|e| e.context(format!("sweep value {v}")))
        })
        .collect::<Result<_, _>>()?;
    let mut merged: Vec<Table> = per_point[0]
        .iter()
        .map(|t| {
            let mut header: Vec<&str> = vec!["sweep_value"];
            header.extend(t.header.iter().map(String::as_str));
            Table::new(format!("{}_sweep", t.name), &header)
        })
        .collect();
    for (v, tables) in values.iter().zip(per_point) {
        for (m, t) in merged.iter_mut().zip(tables) {
            for row in t.rows {
                let mut full = vec![num(*v)];
                full.extend(row);
                m.push(full);
            }
        }
    }
    Ok(merged)
}

/// The four bar groups of the allocation figures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Setup {
    Dcf,
    Optimized(Criterion),
}

impl Setup {
    pub const ALL: [Setup; 4] = [
        Setup::Dcf,
        Setup::Optimized(Criterion::Pf),
        Setup::Optimized(Criterion::Lpf),
        Setup::Optimized(Criterion::Mlpf),
    ];

    pub fn label(self) -> &'static str {
        match self {
            Setup::Dcf => "1-DCF",
            Setup::Optimized(c) => c.label(),
        }
    }
}

/// One setup evaluated by the model and (optionally) the simulator, both at
/// the integer windows the setup would deploy.
#[derive(Debug, Clone)]
pub struct SetupOutcome {
    pub setup: Setup,
    pub scenario: Scenario,
    /// `None` when the optimum was out of reach and the windows came from
    /// the fallback.
    pub allocation: Option<AllocationResult>,
    /// Stations given the smallest window because the optimal attempt rate
    /// was out of their reach.
    pub out_of_reach: Vec<bool>,
    pub model: Equilibrium,
    pub sim: Option<SimReport>,
}

impl SetupOutcome {
    pub fn windows(&self) -> Vec<f64> {
        self.scenario.stations.iter().map(|s| s.w0).collect()
    }

    pub fn model_jain(&self) -> f64 {
        let net = Network::new(self.scenario.clone()).expect("validated");
        jain_of(&self.model, &net)
    }

    pub fn sim_jain(&self) -> Option<f64> {
        self.sim.as_ref().map(|r| sim_jain(r, &self.scenario))
    }

    pub fn sim_aggregate(&self) -> Option<f64> {
        self.sim.as_ref().map(|r| r.aggregate.mean)
    }
}

pub fn evaluate_setup(
    sc: &Scenario,
    setup: Setup,
    sim: Option<&SimSettings>,
) -> Result<SetupOutcome, CliError> {
    let net = Network::new(sc.clone())?;
    let mut out_of_reach = vec![false; sc.len()];
    let (scenario, allocation, model) = match setup {
        Setup::Dcf => (
            sc.clone(),
            None,
            solve_equilibrium(&net, &SolverOptions::default())?,
        ),
        Setup::Optimized(c) => match optimize(&net, c, &OptimizerOptions::default()) {
            Ok(alloc) => {
                let windows: Vec<f64> = alloc.w0_star.iter().map(|w| w.rounded as f64).collect();
                let model = alloc.realized.clone();
                (sc.with_windows(&windows), Some(alloc), model)
            }
            Err(OptError::Infeasible { .. }) => {
                // Some station cannot reach its target; deploy the closest
                // windows instead of giving up on the point.
                let opts = OptimizerOptions::default();
                let best = maximize(&net, &weights(&net, c), &opts)?;
                let deployed = deployable_windows(&best.tau, &net)?;
                let windows: Vec<f64> = deployed.iter().map(|&(w, _)| w as f64).collect();
                out_of_reach = deployed.iter().map(|&(_, l)| l).collect();
                let windowed = sc.with_windows(&windows);
                let model =
                    solve_equilibrium(&Network::new(windowed.clone())?, &SolverOptions::default())?;
                (windowed, None, model)
            }
            Err(e) => return Err(e.into()),
        },
    };
    let sim = sim
        .map(|s| replicate(&s.config(scenario.clone())))
        .transpose()?;
    Ok(SetupOutcome {
        setup,
        scenario,
        allocation,
        out_of_reach,
        model,
        sim,
    })
}

/// All four setups of one scenario.
pub fn evaluate_all(
    sc: &Scenario,
    sim: Option<&SimSettings>,
) -> Result<Vec<SetupOutcome>, CliError> {
    Setup::ALL
        .par_iter()
        .map(|&setup| {
            evaluate_setup(sc, setup, sim)
                .map_err(|e| e.context(format!("{} {}", sc.label, setup.label())))
        })
        .collect()
}

/// Grouped-bar data: normalized throughput per station and setup.
pub fn fig1_table(name: &str, outcomes: &[SetupOutcome]) -> Table {
    let mut t = Table::new(
        name,
        &[
            "setup",
            "station",
            "w0",
            "normalized_sim",
            "normalized_std_err",
            "normalized_model",
        ],
    );
    for o in outcomes {
        for (s, st) in o.scenario.stations.iter().enumerate() {
            let (sim, se) = match &o.sim {
                Some(r) => {
                    let e = r.stations[s].throughput;
                    (
                        num(e.mean / st.bit_rate),
                        e.std_err.map_or_else(String::new, |v| num(v / st.bit_rate)),
                    )
                }
                None => (String::new(), String::new()),
            };
            t.push(vec![
                o.setup.label().to_string(),
                st.id.to_string(),
                num(st.w0),
                sim,
                se,
                num(o.model.throughput[s] / st.bit_rate),
            ]);
        }
    }
    t
}

/// Jain's index and aggregate throughput per scenario and setup.
pub fn table1_table(rows: &[(&str, &[SetupOutcome])]) -> Table {
    let mut t = Table::new(
        "table1",
        &[
            "scenario",
            "setup",
            "jain_sim",
            "aggregate_sim_mbps",
            "jain_model",
            "aggregate_model_mbps",
        ],
    );
    for (label, outcomes) in rows {
        for o in outcomes.iter() {
            t.push(vec![
                label.to_string(),
                o.setup.label().to_string(),
                o.sim_jain().map_or_else(String::new, num),
                o.sim_aggregate().map_or_else(String::new, |v| num(v / 1e6)),
                num(o.model_jain()),
                num(o.model.aggregate / 1e6),
            ]);
        }
    }
    t
}

pub const FIG2_MODES: [Setup; 3] = [
    Setup::Dcf,
    Setup::Optimized(Criterion::Lpf),
    Setup::Optimized(Criterion::Mlpf),
];

/// Per-station throughput curves against the slow station's packet rate.
pub fn fig2_tables(lambdas: &[f64], sim: Option<&SimSettings>) -> Result<Vec<Table>, CliError> {
    let jobs: Vec<(Setup, f64)> = FIG2_MODES
        .iter()
        .flat_map(|&m| lambdas.iter().map(move |&l| (m, l)))
        .collect();
    let outcomes: Vec<SetupOutcome> = jobs
        .par_iter()
        .map(|&(mode, l)| {
            evaluate_setup(&builtin::slow_rate_sweep(l), mode, sim)
                .map_err(|e| e.context(format!("{} at slow-station rate {l}", mode.label())))
        })
        .collect::<Result<_, _>>()?;

    let mut curves = Table::new(
        "fig2",
        &[
            "mode",
            "lambda_slow",
            "station",
            "w0",
            "out_of_reach",
            "throughput_sim_bps",
            "std_err_bps",
            "throughput_model_bps",
        ],
    );
    let mut totals = Table::new(
        "fig2_aggregate",
        &[
            "mode",
            "lambda_slow",
            "aggregate_sim_bps",
            "aggregate_model_bps",
        ],
    );
    for ((mode, l), o) in jobs.iter().zip(&outcomes) {
        for (s, st) in o.scenario.stations.iter().enumerate() {
            let (sim, se) = match &o.sim {
                Some(r) => {
                    let e = r.stations[s].throughput;
                    (num(e.mean), e.std_err.map_or_else(String::new, num))
                }
                None => (String::new(), String::new()),
            };
            curves.push(vec![
                mode.label().to_string(),
                num(*l),
                st.id.to_string(),
                num(st.w0),
                o.out_of_reach[s].to_string(),
                sim,
                se,
                num(o.model.throughput[s]),
            ]);
        }
        totals.push(vec![
            mode.label().to_string(),
            num(*l),
            o.sim_aggregate().map_or_else(String::new, num),
            num(o.model.aggregate),
        ]);
    }
    Ok(vec![curves, totals])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_parsing() {
        let s: Sweep = "3:lambda:10:3300:20:log".parse().unwrap();
        assert_eq!(
            (s.station, s.field, s.points, s.log),
            (3, SweepField::Lambda, 20, true)
        );
        assert_eq!(s.values().len(), 20);
        let lin: Sweep = "1:w0:16:64:4".parse().unwrap();
        assert_eq!(lin.values(), vec![16.0, 32.0, 48.0, 64.0]);
        assert_eq!(s.to_string(), "3:lambda:10:3300:20:log");
        assert!("1:speed:1:2:3".parse::<Sweep>().is_err());
        assert!("1:pe:0:0.5".parse::<Sweep>().is_err());
        assert!("0:pe:0:0.5:3".parse::<Sweep>().is_err());
        assert!("1:pe:0:0.5:3:log".parse::<Sweep>().is_err());
    }

    #[test]
    fn sweep_rejects_missing_station() {
        let s: Sweep = "4:lambda:10:20:2".parse().unwrap();
        let e = s.apply(&builtin::scenario_a(), 10.0).unwrap_err();
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn model_sweep_stacks_points() {
        let s: Sweep = "3:lambda:100:1000:3".parse().unwrap();
        let tables = sweep_tables(&builtin::scenario_a(), &s, model_tables).unwrap();
        assert_eq!(tables[0].name, "model_stations_sweep");
        assert_eq!(tables[0].rows.len(), 9);
        assert_eq!(tables[1].rows.len(), 3);
        assert_eq!(tables[1].rows[2][0], "1000");
    }

    #[test]
    fn model_on_scenario_a() {
        let tables = model_tables(&builtin::scenario_a()).unwrap();
        let agg = tables[1].numbers("aggregate_bps")[0];
        assert!((agg / 1e6 - 1.89).abs() < 0.15 * 1.89);
        let norm = tables[0].numbers("normalized");
        assert!(norm.iter().all(|&v| (0.0..=1.0).contains(&v)));
    }

    #[test]
    fn queue_names() {
        assert_eq!(parse_queue("head-only"), Ok(QueueDiscipline::HeadOnly));
        assert!(parse_queue("fifo").is_err());
    }
}
