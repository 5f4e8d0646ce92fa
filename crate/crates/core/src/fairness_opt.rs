//! Rate-weighted proportional-fair allocation over transmission
//! probabilities, and the mapping back to minimum contention windows.
//!
//! The objective is `U(tau) = sum_s w_s log S_s(tau)` where `S_s` is the
//! model throughput at `tau`. Three weightings are supported:
//!
//! * [`Criterion::Pf`]: unit weights (classical proportional fairness);
//! * [`Criterion::Lpf`]: `w_s = lambda_s / lambda_max`;
//! * [`Criterion::Mlpf`]: like LPF but each arrival rate is first capped at
//!   the packet rate its PHY rate can carry (see [`truncate_rates`]).
//!
//! The maximisation runs in `x = ln tau` with a projected BFGS ascent and a
//! few deterministic starting points. Once `tau*` is known, [`invert_w0`]
//! finds the windows that make each station's chain produce it.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use thiserror::Error;

use crate::fixed_point::{
    collision_probs, solve_equilibrium, throughput, Equilibrium, SolveError, SolverOptions,
};
use crate::params::{Network, ParamError};
use crate::slot_model::{expected_slot, expected_slot_excluding, t_av, t_av_gradient, TauVector};
use crate::station_chain::{backoff_series, p_eq, traffic_probs};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OptError {
    #[error("log-domain violation: station {station} has throughput {value}")]
    LogDomain { station: usize, value: f64 },
    #[error("fairness index of an all-zero or empty vector")]
    ZeroVector,
    #[error("station {station}: tau* = {tau} cannot be realised ({reason})")]
    Infeasible {
        station: usize,
        tau: f64,
        reason: &'static str,
    },
    #[error("invalid bounds [{lower}, {upper}]")]
    Bounds { lower: f64, upper: f64 },
    #[error("optimizer found no interior improvement from any start")]
    NoImprovement,
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Params(#[from] ParamError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Criterion {
    Pf,
    Lpf,
    Mlpf,
}

impl Criterion {
    pub const ALL: [Criterion; 3] = [Criterion::Pf, Criterion::Lpf, Criterion::Mlpf];

    /// Label used in tables, numbered after the unoptimised `1-DCF` column.
    pub fn label(self) -> &'static str {
        match self {
            Criterion::Pf => "2-PF",
            Criterion::Lpf => "3-LPF",
            Criterion::Mlpf => "4-MLPF",
        }
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Criterion::Pf => "pf",
            Criterion::Lpf => "lpf",
            Criterion::Mlpf => "mlpf",
        })
    }
}

impl FromStr for Criterion {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "pf" => Ok(Criterion::Pf),
            "lpf" => Ok(Criterion::Lpf),
            "mlpf" => Ok(Criterion::Mlpf),
            other => Err(format!(
                "unknown criterion `{other}` (expected pf, lpf or mlpf)"
            )),
        }
    }
}

/// Arrival rates capped at what each station's PHY rate can carry.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedRates {
    pub lambda_star: Vec<f64>,
    pub lambda_star_max: f64,
}

pub fn truncate_rates(net: &Network) -> TruncatedRates {
    let lambda_star: Vec<f64> = net
        .stations()
        .iter()
        .map(|st| {
            if st.offered_load() <= st.bit_rate {
                st.lambda
            } else {
                st.bit_rate / (8.0 * st.payload as f64)
            }
        })
        .collect();
    let lambda_star_max = lambda_star.iter().cloned().fold(0.0, f64::max);
    TruncatedRates {
        lambda_star,
        lambda_star_max,
    }
}

pub fn weights(net: &Network, criterion: Criterion) -> Vec<f64> {
    let rates: Vec<f64> = match criterion {
        Criterion::Pf => return vec![1.0; net.len()],
        Criterion::Lpf => net.stations().iter().map(|st| st.lambda).collect(),
        Criterion::Mlpf => truncate_rates(net).lambda_star,
    };
    let max = rates.iter().cloned().fold(0.0, f64::max);
    rates.iter().map(|r| r / max).collect()
}

/// `sum_s w_s ln S_s`.
pub fn utility(throughput: &[f64], weights: &[f64]) -> Result<f64, OptError> {
    throughput
        .iter()
        .zip(weights)
        .enumerate()
        .map(|(s, (&x, &w))| {
            if x > 0.0 {
                Ok(w * x.ln())
            } else {
                Err(OptError::LogDomain {
                    station: s + 1,
                    value: x,
                })
            }
        })
        .sum()
}

/// Jain's fairness index `(sum x)^2 / (N sum x^2)`.
pub fn jain_index(x: &[f64]) -> Result<f64, OptError> {
    let sum: f64 = x.iter().sum();
    let sq: f64 = x.iter().map(|v| v * v).sum();
    if x.is_empty() || sq == 0.0 {
        return Err(OptError::ZeroVector);
    }
    Ok(sum * sum / (x.len() as f64 * sq))
}

/// Model utility at `tau`.
pub fn utility_at(tau: &[f64], net: &Network, weights: &[f64]) -> Result<f64, OptError> {
    let (per, _) = throughput(&expected_slot(tau, net), net);
    utility(&per, weights)
}

/// Exact gradient of [`utility_at`] with respect to `tau`.
pub fn utility_gradient(tau: &[f64], net: &Network, weights: &[f64]) -> Vec<f64> {
    let total: f64 = weights.iter().sum();
    let t = t_av(tau, net);
    let dt = t_av_gradient(tau, net);
    (0..tau.len())
        .map(|j| weights[j] / tau[j] - (total - weights[j]) / (1.0 - tau[j]) - total * dt[j] / t)
        .collect()
}

/// Stationarity residual of the weighted objective, with `dT_av/dtau_j`
/// taken by Richardson-extrapolated central differences (h = 1e-6).
pub fn stationarity_residual(tau: &[f64], net: &Network, weights: &[f64]) -> Vec<f64> {
    let c: f64 = weights.iter().sum();
    let t = t_av(tau, net);
    let central = |j: usize, h: f64| {
        let mut up = tau.to_vec();
        let mut dn = tau.to_vec();
        up[j] += h;
        dn[j] -= h;
        (t_av(&up, net) - t_av(&dn, net)) / (2.0 * h)
    };
    (0..tau.len())
        .map(|j| {
            let h = 1e-6;
            let coarse = central(j, h);
            let fine = central(j, h / 2.0);
            let dt = fine + (fine - coarse) / 3.0;
            let others: f64 = c - weights[j];
            weights[j] / tau[j] - others / (1.0 - tau[j]) - c / t * dt
        })
        .collect()
}

/// A minimum contention window realising a target attempt probability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowAssignment {
    pub real: f64,
    pub rounded: u32,
}

/// Windows that make every station's chain produce `tau_star`.
///
/// At fixed `tau*` the slot statistics, and therefore `p_eq`, `q` and
/// `p_i0`, do not depend on the windows. The idle mass then satisfies
/// `b_I = c B / (p_i0 + c B)` with `c = (1 - q)(1 - p_eq)` and `B` the
/// saturated attempt probability, so `tau* = (1 - b_I) B` is solved for `B`
/// and then for `W0` in closed form.
pub fn invert_w0(tau_star: &[f64], net: &Network) -> Result<Vec<WindowAssignment>, OptError> {
    let t_av = expected_slot(tau_star, net).t_av;
    let p_col = collision_probs(tau_star);
    (0..net.len())
        .map(|s| invert_one(s, tau_star, net, t_av, p_col[s]))
        .collect()
}

/// Windows to deploy for `tau_star` when some targets may be out of reach.
///
/// A station that cannot reach its target, either because its traffic is
/// too light or because the target needs a window below one slot, gets the
/// smallest window. The flag marks those stations.
pub fn deployable_windows(tau_star: &[f64], net: &Network) -> Result<Vec<(u32, bool)>, OptError> {
    let t_av = expected_slot(tau_star, net).t_av;
    let p_col = collision_probs(tau_star);
    (0..net.len())
        .map(|s| match invert_one(s, tau_star, net, t_av, p_col[s]) {
            Ok(a) => Ok((a.rounded, false)),
            Err(OptError::Infeasible {
                reason: TRAFFIC_LIMITED | NEGATIVE_WINDOW,
                ..
            }) => Ok((1, true)),
            Err(e) => Err(e),
        })
        .collect()
}

const TRAFFIC_LIMITED: &str = "arrival rate too low";
const NEGATIVE_WINDOW: &str = "negative window";

fn invert_one(
    s: usize,
    tau_star: &[f64],
    net: &Network,
    t_av: f64,
    p_col: f64,
) -> Result<WindowAssignment, OptError> {
    let st = &net.stations()[s];
    let tau = tau_star[s];
    let infeasible = |reason| OptError::Infeasible {
        station: s + 1,
        tau,
        reason,
    };
    if !(tau > 0.0 && tau < 1.0) {
        return Err(infeasible("outside (0, 1)"));
    }
    let p = p_eq(p_col, st.pe);
    let (q, p_i0) = traffic_probs(st.lambda, t_av, expected_slot_excluding(tau_star, net, s));
    let c = (1.0 - q) * (1.0 - p);
    let slack = p_i0 - c * tau;
    if slack.is_nan() || slack <= 0.0 {
        return Err(infeasible(TRAFFIC_LIMITED));
    }
    let saturated = tau * p_i0 / slack;
    let w0 = (2.0 / saturated - 1.0) / (1.0 + p * backoff_series(p, net.phy().m));
    if !(w0 > 0.0 && w0.is_finite()) {
        return Err(infeasible(NEGATIVE_WINDOW));
    }
    Ok(WindowAssignment {
        real: w0,
        rounded: w0.round().max(1.0) as u32,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerOptions {
    pub lower: f64,
    pub upper: f64,
    /// Stop when every free component of `dU/d ln tau` is below this.
    pub grad_tol: f64,
    pub max_iter: usize,
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        Self {
            lower: 1e-5,
            upper: 0.5,
            grad_tol: 1e-10,
            max_iter: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AllocationResult {
    pub criterion: Criterion,
    pub weights: Vec<f64>,
    pub tau_star: TauVector,
    pub w0_star: Vec<WindowAssignment>,
    /// Model state at `tau*` with the real-valued windows.
    pub predicted: Equilibrium,
    /// Equilibrium re-solved with the integer windows.
    pub realized: Equilibrium,
    pub utility: f64,
    /// Jain's index of `S_s / R_d` at `tau*`.
    pub jain: f64,
    /// Jain's index of the absolute throughputs at `tau*`.
    pub jain_absolute: f64,
    /// Stations whose `tau*` sits on the upper clip.
    pub at_upper_bound: Vec<bool>,
    pub iterations: usize,
    pub stationarity: Vec<f64>,
}

/// Best point found by the multi-start ascent.
#[derive(Debug, Clone, PartialEq)]
pub struct Ascent {
    pub tau: Vec<f64>,
    pub utility: f64,
    pub iterations: usize,
}

/// Projected BFGS ascent of the utility in log coordinates.
fn ascend(
    start: &[f64],
    net: &Network,
    weights: &[f64],
    opts: &OptimizerOptions,
) -> Option<Ascent> {
    let n = start.len();
    let (lo, hi) = (opts.lower.ln(), opts.upper.ln());
    let project = |x: &mut [f64]| x.iter_mut().for_each(|v| *v = v.clamp(lo, hi));
    let eval = |x: &[f64]| -> Option<(f64, Vec<f64>)> {
        let tau: Vec<f64> = x.iter().map(|v| v.exp()).collect();
        let u = utility_at(&tau, net, weights).ok()?;
        let g = utility_gradient(&tau, net, weights)
            .into_iter()
            .zip(&tau)
            .map(|(g, t)| g * t)
            .collect();
        Some((u, g))
    };
    let identity = |n: usize| {
        let mut h = vec![vec![0.0; n]; n];
        (0..n).for_each(|i| h[i][i] = 1.0);
        h
    };

    let mut x: Vec<f64> = start.iter().map(|t| t.ln()).collect();
    project(&mut x);
    let (mut u, mut g) = eval(&x)?;
    let mut h = identity(n);
    let mut fresh = true;
    let mut iterations = 0;
    let mut prev_free: Vec<bool> = vec![true; n];

    while iterations < opts.max_iter {
        iterations += 1;
        let free: Vec<bool> = (0..n)
            .map(|i| !((x[i] <= lo && g[i] < 0.0) || (x[i] >= hi && g[i] > 0.0)))
            .collect();
        let pg = (0..n)
            .filter(|&i| free[i])
            .map(|i| g[i].abs())
            .fold(0.0, f64::max);
        if pg <= opts.grad_tol {
            break;
        }
        if free != prev_free {
            h = identity(n);
            fresh = true;
            prev_free = free.clone();
        }
        let mut d: Vec<f64> = (0..n)
            .map(|i| {
                if !free[i] {
                    return 0.0;
                }
                (0..n).filter(|&k| free[k]).map(|k| h[i][k] * g[k]).sum()
            })
            .collect();
        let slope: f64 = d.iter().zip(&g).map(|(a, b)| a * b).sum();
        if slope.is_nan() || slope <= 0.0 {
            h = identity(n);
            fresh = true;
            d = (0..n).map(|i| if free[i] { g[i] } else { 0.0 }).collect();
        }
        let longest = d.iter().map(|v| v.abs()).fold(0.0, f64::max);
        let mut alpha = if longest > 1.0 { 1.0 / longest } else { 1.0 };

        let mut accepted = None;
        while alpha > 1e-14 {
            let mut trial: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + alpha * b).collect();
            project(&mut trial);
            let gain: f64 = trial
                .iter()
                .zip(&x)
                .zip(&g)
                .map(|((t, a), gi)| (t - a) * gi)
                .sum();
            if let Some((ut, gt)) = eval(&trial) {
                if ut >= u + 1e-4 * gain && ut >= u {
                    accepted = Some((trial, ut, gt));
                    break;
                }
            }
            alpha *= 0.5;
        }
        let Some((xn, un, gn)) = accepted else {
            if fresh {
                break;
            }
            h = identity(n);
            fresh = true;
            continue;
        };

        // BFGS on f = -U: s = dx, y = -(dg)
        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| b - a).collect();
        let sy: f64 = s.iter().zip(&y).map(|(a, b)| a * b).sum();
        if sy > 1e-14 {
            let hy: Vec<f64> = (0..n)
                .map(|i| (0..n).map(|k| h[i][k] * y[k]).sum())
                .collect();
            let yhy: f64 = y.iter().zip(&hy).map(|(a, b)| a * b).sum();
            let rho = 1.0 / sy;
            for i in 0..n {
                for k in 0..n {
                    h[i][k] +=
                        (1.0 + rho * yhy) * rho * s[i] * s[k] - rho * (hy[i] * s[k] + s[i] * hy[k]);
                }
            }
            fresh = false;
        }
        let stalled =
            (un - u).abs() <= 1e-15 * u.abs().max(1.0) && s.iter().all(|v| v.abs() < 1e-13);
        x = xn;
        u = un;
        g = gn;
        if stalled {
            break;
        }
    }
    Some(Ascent {
        tau: x.iter().map(|v| v.exp()).collect(),
        utility: u,
        iterations,
    })
}

fn starting_points(net: &Network, weights: &[f64], opts: &OptimizerOptions) -> Vec<Vec<f64>> {
    let n = net.len();
    let clamp = |v: f64| v.clamp(opts.lower, opts.upper);
    vec![
        net.stations()
            .iter()
            .map(|st| clamp(2.0 / (st.w0 + 1.0)))
            .collect(),
        vec![clamp(0.01); n],
        vec![clamp(0.05); n],
        weights.iter().map(|w| clamp(0.1 * w)).collect(),
        vec![clamp(0.2); n],
    ]
}

fn check_bounds(opts: &OptimizerOptions) -> Result<(), OptError> {
    if opts.lower > 0.0 && opts.lower < opts.upper && opts.upper < 1.0 {
        Ok(())
    } else {
        Err(OptError::Bounds {
            lower: opts.lower,
            upper: opts.upper,
        })
    }
}

/// Maximises `sum w_s log S_s` over the box, ignoring whether the optimum
/// can be realised by contention windows.
pub fn maximize(
    net: &Network,
    weights: &[f64],
    opts: &OptimizerOptions,
) -> Result<Ascent, OptError> {
    check_bounds(opts)?;
    starting_points(net, weights, opts)
        .par_iter()
        .map(|start| ascend(start, net, weights, opts))
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .reduce(|a, b| match b.utility.total_cmp(&a.utility) {
            std::cmp::Ordering::Greater => b,
            std::cmp::Ordering::Less => a,
            std::cmp::Ordering::Equal => {
                if b.tau
                    .iter()
                    .zip(&a.tau)
                    .map(|(x, y)| x.total_cmp(y))
                    .find(|o| o.is_ne())
                    == Some(std::cmp::Ordering::Less)
                {
                    b
                } else {
                    a
                }
            }
        })
        .ok_or(OptError::NoImprovement)
}

/// Maximises the weighted utility for `criterion` and maps the optimum back
/// to contention windows.
pub fn optimize(
    net: &Network,
    criterion: Criterion,
    opts: &OptimizerOptions,
) -> Result<AllocationResult, OptError> {
    let best = maximize(net, &weights(net, criterion), opts)?;
    allocation_at(net, criterion, &best.tau, best.iterations, opts)
}

/// Builds the full allocation report at a chosen `tau*`.
pub fn allocation_at(
    net: &Network,
    criterion: Criterion,
    tau_star: &[f64],
    iterations: usize,
    opts: &OptimizerOptions,
) -> Result<AllocationResult, OptError> {
    let w = weights(net, criterion);
    let w0_star = invert_w0(tau_star, net)?;
    let real: Vec<f64> = w0_star.iter().map(|a| a.real.max(1.0)).collect();
    let predicted = Equilibrium::at_tau(&net.with_windows(&real)?, tau_star)?;
    let rounded: Vec<f64> = w0_star.iter().map(|a| a.rounded as f64).collect();
    let realized = solve_equilibrium(&net.with_windows(&rounded)?, &SolverOptions::default())?;
    let normalized = predicted.normalized_throughput(net);
    let upper = opts.upper;
    Ok(AllocationResult {
        criterion,
        utility: utility(&predicted.throughput, &w)?,
        jain: jain_index(&normalized)?,
        jain_absolute: jain_index(&predicted.throughput)?,
        at_upper_bound: tau_star
            .iter()
            .map(|&t| t >= upper * (1.0 - 1e-12))
            .collect(),
        stationarity: stationarity_residual(tau_star, net, &w),
        tau_star: TauVector::new(tau_star.to_vec()).expect("optimizer stays inside the box"),
        weights: w,
        w0_star,
        predicted,
        realized,
        iterations,
    })
}
