//! Per-station backoff chain with an idle state for non-saturated traffic.
//!
//! The chain has backoff stages `0..=m` with window `W_i = 2^i * W0` (stage
//! `m` repeats on further failures) and a single idle state `I`. A
//! transmission fails with probability `p_eq` and moves one stage up. A
//! success re-enters stage 0 when a packet is already waiting (probability
//! `q`) and otherwise parks in `I`, which is left towards a fresh stage-0
//! backoff with probability `p_i0` per slot.
//!
//! Within a stage the counter masses are `b(i,k) = b(i,0) (W_i - k) / W_i`,
//! so the stationary distribution is determined by the stage heads `b(i,0)`
//! and `b_I`. [`solve_chain`] solves that lumped linear system directly.

use thiserror::Error;

use crate::params::{PhyTimingParams, StationConfig};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChainError {
    #[error("singular chain system (p_i0 = {p_i0}, q = {q})")]
    Singular { p_i0: f64, q: f64 },
    #[error("{field} = {value} outside its domain")]
    Domain { field: &'static str, value: f64 },
}

/// Collision-or-channel-error probability of an attempt.
pub fn p_eq(p_col: f64, pe: f64) -> f64 {
    p_col + pe - pe * p_col
}

/// Probability of at least one Poisson arrival within a slot, with and
/// without the tagged station in the slot average: `(q, p_i0)`.
pub fn traffic_probs(lambda: f64, t_av: f64, t_av_excl: f64) -> (f64, f64) {
    (-(-lambda * t_av).exp_m1(), -(-lambda * t_av_excl).exp_m1())
}

/// `sum_{i<m} (2p)^i`, the regular form of `(1 - (2p)^m) / (1 - 2p)`.
pub fn backoff_series(p_eq: f64, m: u32) -> f64 {
    let r = 2.0 * p_eq;
    let mut term = 1.0;
    let mut sum = 0.0;
    for _ in 0..m {
        sum += term;
        term *= r;
    }
    sum
}

/// Attempt probability of a station that is never idle.
pub fn saturated_tau(p_eq: f64, w0: f64, m: u32) -> f64 {
    2.0 / ((w0 + 1.0) + w0 * p_eq * backoff_series(p_eq, m))
}

/// Closed-form attempt probability given the idle-state mass.
pub fn tau_from_chain(b_i: f64, p_eq: f64, w0: f64, m: u32) -> f64 {
    (1.0 - b_i) * saturated_tau(p_eq, w0, m)
}

/// Inputs of one station's chain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainParams {
    pub w0: f64,
    pub m: u32,
    pub p_eq: f64,
    pub q: f64,
    pub p_i0: f64,
}

impl ChainParams {
    fn check(&self) -> Result<(), ChainError> {
        let fields = [
            ("p_eq", self.p_eq, 0.0, 1.0),
            ("q", self.q, 0.0, 1.0 + f64::EPSILON),
            ("p_i0", self.p_i0, 0.0, 1.0 + f64::EPSILON),
        ];
        for (field, value, lo, hi) in fields {
            if !(value >= lo && value < hi) {
                return Err(ChainError::Domain { field, value });
            }
        }
        if !(self.w0 >= 1.0 && self.w0.is_finite()) {
            return Err(ChainError::Domain {
                field: "w0",
                value: self.w0,
            });
        }
        if self.m < 1 {
            return Err(ChainError::Domain {
                field: "m",
                value: self.m as f64,
            });
        }
        Ok(())
    }

    pub fn window(&self, stage: u32) -> f64 {
        self.w0 * f64::powi(2.0, stage.min(self.m) as i32)
    }
}

/// Stationary distribution of the chain.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainStationary {
    /// `b(i,0)` for stages `0..=m`: mass of the transmission states.
    pub stage_heads: Vec<f64>,
    pub idle: f64,
    pub windows: Vec<f64>,
}

impl ChainStationary {
    /// Per-slot attempt probability.
    pub fn tau(&self) -> f64 {
        self.stage_heads.iter().sum()
    }

    /// Mass of backoff stage `i`, all counters included.
    pub fn stage_mass(&self, i: usize) -> f64 {
        self.stage_heads[i] * (self.windows[i] + 1.0) / 2.0
    }

    /// Mass of state `(i, k)`. Meaningful for integer windows.
    pub fn counter_mass(&self, i: usize, k: usize) -> f64 {
        let w = self.windows[i];
        if (k as f64) >= w {
            return 0.0;
        }
        self.stage_heads[i] * (w - k as f64) / w
    }

    pub fn total(&self) -> f64 {
        self.idle
            + (0..self.stage_heads.len())
                .map(|i| self.stage_mass(i))
                .sum::<f64>()
    }
}

/// Dense Gaussian elimination with partial pivoting. `a` is row-major n x n.
#[allow(clippy::needless_range_loop)]
fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))?;
        if a[pivot][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            if f == 0.0 {
                continue;
            }
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let tail: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - tail) / a[row][row];
    }
    Some(x)
}

/// Solves the stationary distribution of the station chain.
///
/// Unknowns are the stage heads `b(0,0)..b(m,0)` followed by `b_I`. The
/// balance equations of stages `1..=m` and of the idle state plus the
/// normalisation form a square system; the stage-0 balance is implied.
pub fn solve_chain(params: &ChainParams) -> Result<ChainStationary, ChainError> {
    params.check()?;
    let m = params.m as usize;
    let n = m + 2;
    let idle = m + 1;
    let p = params.p_eq;
    let windows: Vec<f64> = (0..=params.m).map(|i| params.window(i)).collect();

    let mut a = vec![vec![0.0; n]; n];
    let mut b = vec![0.0; n];
    for i in 1..=m {
        // b(i,0) = p b(i-1,0) [+ p b(m,0) at the top stage]
        a[i - 1][i] = 1.0;
        a[i - 1][i - 1] = -p;
        if i == m {
            a[i - 1][i] -= p;
        }
    }
    // p_i0 b_I = (1 - p)(1 - q) sum_i b(i,0)
    let row = m;
    for head in a[row].iter_mut().take(m + 1) {
        *head = -(1.0 - p) * (1.0 - params.q);
    }
    a[row][idle] = params.p_i0;
    // normalisation
    let row = m + 1;
    for (i, w) in windows.iter().enumerate() {
        a[row][i] = (w + 1.0) / 2.0;
    }
    a[row][idle] = 1.0;
    b[row] = 1.0;

    let x = solve_dense(a, b).ok_or(ChainError::Singular {
        p_i0: params.p_i0,
        q: params.q,
    })?;
    Ok(ChainStationary {
        stage_heads: x[..=m].iter().map(|v| v.max(0.0)).collect(),
        idle: x[idle].clamp(0.0, 1.0),
        windows,
    })
}

/// Stationary idle-state probability of station `st`.
pub fn idle_probability(
    st: &StationConfig,
    phy: &PhyTimingParams,
    p_eq: f64,
    q: f64,
    p_i0: f64,
) -> Result<f64, ChainError> {
    solve_chain(&ChainParams {
        w0: st.w0,
        m: phy.m,
        p_eq,
        q,
        p_i0,
    })
    .map(|chain| chain.idle)
}

/// Chain-level state of one station at a network operating point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StationState {
    pub tau: f64,
    pub p_col: f64,
    pub p_eq: f64,
    pub b_i: f64,
    pub q: f64,
    pub p_i0: f64,
}
