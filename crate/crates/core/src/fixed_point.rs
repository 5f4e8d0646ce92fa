//! Network equilibrium: the per-station chains coupled through the shared
//! slot statistics, and the resulting throughputs.

use thiserror::Error;

use crate::params::Network;
use crate::slot_model::{expected_slot, expected_slot_excluding, SlotBreakdown, TauVector};
use crate::station_chain::{
    p_eq, solve_chain, tau_from_chain, traffic_probs, ChainError, ChainParams, StationState,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("station {station}: {source}")]
    Chain {
        station: usize,
        #[source]
        source: ChainError,
    },
    #[error("invalid solver option {0}")]
    Options(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Weight of the new iterate in the damped update, in (0, 1].
    pub damping: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 10_000,
            damping: 0.5,
        }
    }
}

/// Slot statistics and per-station chain quantities at a fixed `tau`.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatingPoint {
    pub slot: SlotBreakdown,
    pub stations: Vec<StationState>,
}

impl OperatingPoint {
    /// Attempt probabilities the chains would produce at this point.
    pub fn mapped_tau(&self, net: &Network) -> Vec<f64> {
        self.stations
            .iter()
            .zip(net.stations())
            .map(|(st, cfg)| tau_from_chain(st.b_i, st.p_eq, cfg.w0, net.phy().m))
            .collect()
    }
}

/// Collision probability seen by each station: someone else transmits.
pub fn collision_probs(tau: &[f64]) -> Vec<f64> {
    (0..tau.len())
        .map(|s| {
            1.0 - (0..tau.len())
                .filter(|&j| j != s)
                .map(|j| 1.0 - tau[j])
                .product::<f64>()
        })
        .collect()
}

/// Traffic-side probabilities `(p_col, p_eq, q, p_i0)` per station at `tau`.
pub fn traffic_state(
    tau: &[f64],
    net: &Network,
    slot: &SlotBreakdown,
) -> Vec<(f64, f64, f64, f64)> {
    collision_probs(tau)
        .into_iter()
        .zip(net.stations())
        .enumerate()
        .map(|(s, (p_col, cfg))| {
            let excl = expected_slot_excluding(tau, net, s);
            let (q, p_i0) = traffic_probs(cfg.lambda, slot.t_av, excl);
            (p_col, p_eq(p_col, cfg.pe), q, p_i0)
        })
        .collect()
}

pub fn operating_point(tau: &[f64], net: &Network) -> Result<OperatingPoint, SolveError> {
    let slot = expected_slot(tau, net);
    let stations = traffic_state(tau, net, &slot)
        .into_iter()
        .zip(net.stations())
        .enumerate()
        .map(|(s, ((p_col, p_eq, q, p_i0), cfg))| {
            let chain = solve_chain(&ChainParams {
                w0: cfg.w0,
                m: net.phy().m,
                p_eq,
                q,
                p_i0,
            })
            .map_err(|source| SolveError::Chain {
                station: s + 1,
                source,
            })?;
            Ok(StationState {
                tau: tau[s],
                p_col,
                p_eq,
                b_i: chain.idle,
                q,
                p_i0,
            })
        })
        .collect::<Result<Vec<_>, SolveError>>()?;
    Ok(OperatingPoint { slot, stations })
}

/// Per-station delivered throughput in bits per second, and their sum.
pub fn throughput(slot: &SlotBreakdown, net: &Network) -> (Vec<f64>, f64) {
    let per: Vec<f64> = slot
        .p_succ
        .iter()
        .zip(net.stations())
        .map(|(p, st)| p * (1.0 - st.pe) * 8.0 * st.payload as f64 / slot.t_av)
        .collect();
    let total = per.iter().sum();
    (per, total)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Equilibrium {
    pub tau: TauVector,
    pub per_station: Vec<StationState>,
    pub slot: SlotBreakdown,
    /// bits per second
    pub throughput: Vec<f64>,
    pub aggregate: f64,
    pub iterations: usize,
    /// `max_s |tau_s - F_s(tau)|` at the returned point.
    pub residual: f64,
}

impl Equilibrium {
    /// Builds the report at a given `tau` without iterating.
    pub fn at_tau(net: &Network, tau: &[f64]) -> Result<Self, SolveError> {
        let point = operating_point(tau, net)?;
        let residual = max_gap(tau, &point.mapped_tau(net));
        Ok(Self::assemble(net, tau, point, 0, residual))
    }

    fn assemble(
        net: &Network,
        tau: &[f64],
        point: OperatingPoint,
        iterations: usize,
        residual: f64,
    ) -> Self {
        let (throughput, aggregate) = throughput(&point.slot, net);
        Self {
            tau: TauVector::new(tau.to_vec()).expect("iterates stay in [0, 1)"),
            per_station: point.stations,
            slot: point.slot,
            throughput,
            aggregate,
            iterations,
            residual,
        }
    }

    /// `S_s / R_d`.
    pub fn normalized_throughput(&self, net: &Network) -> Vec<f64> {
        self.throughput
            .iter()
            .zip(net.stations())
            .map(|(s, st)| s / st.bit_rate)
            .collect()
    }
}

fn max_gap(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Damped successive substitution from the saturated, collision-free guess
/// `tau_s = 2 / (W0 + 1)`, capped at 1/2 so that `W0 = 1` does not start on
/// the degenerate point `tau = 1`.
pub fn solve_equilibrium(net: &Network, opts: &SolverOptions) -> Result<Equilibrium, SolveError> {
    if opts.tol.is_nan() || opts.tol <= 0.0 {
        return Err(SolveError::Options("tol"));
    }
    if !(opts.damping > 0.0 && opts.damping <= 1.0) {
        return Err(SolveError::Options("damping"));
    }
    let mut tau: Vec<f64> = net
        .stations()
        .iter()
        .map(|st| (2.0 / (st.w0 + 1.0)).min(0.5))
        .collect();
    let mut residual = f64::INFINITY;
    for iteration in 1..=opts.max_iter {
        let point = operating_point(&tau, net)?;
        let mapped = point.mapped_tau(net);
        residual = max_gap(&tau, &mapped);
        if residual <= opts.tol {
            return Ok(Equilibrium::assemble(net, &tau, point, iteration, residual));
        }
        for (t, f) in tau.iter_mut().zip(&mapped) {
            *t += opts.damping * (f - *t);
        }
    }
    Err(SolveError::NoConvergence {
        iterations: opts.max_iter,
        residual,
    })
}
