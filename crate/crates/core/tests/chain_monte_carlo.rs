//! The lumped linear solve of the station chain against a long random walk
//! on the full (stage, counter) chain plus the idle state.

use dcf_core::station_chain::{saturated_tau, solve_chain, tau_from_chain, ChainParams};
use proptest::prelude::*;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Occupancy {
    idle: f64,
    tau: f64,
    stages: Vec<f64>,
}

/// Walks the full chain for `steps` slots and returns state frequencies.
fn walk(params: &ChainParams, steps: u64, seed: u64) -> Occupancy {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = params.m as usize;
    let window = |i: usize| params.window(i as u32) as u64;
    let mut stage_visits = vec![0u64; m + 1];
    let (mut idle_visits, mut heads) = (0u64, 0u64);
    // None is the idle state
    let mut state: Option<(usize, u64)> = Some((0, rng.random_range(0..window(0))));
    for _ in 0..steps {
        state = match state {
            None => {
                idle_visits += 1;
                if rng.random_bool(params.p_i0) {
                    Some((0, rng.random_range(0..window(0))))
                } else {
                    None
                }
            }
            Some((i, k)) => {
                stage_visits[i] += 1;
                if k > 0 {
                    Some((i, k - 1))
                } else {
                    heads += 1;
                    if rng.random_bool(params.p_eq) {
                        let next = (i + 1).min(m);
                        Some((next, rng.random_range(0..window(next))))
                    } else if rng.random_bool(params.q) {
                        Some((0, rng.random_range(0..window(0))))
                    } else {
                        None
                    }
                }
            }
        };
    }
    let n = steps as f64;
    Occupancy {
        idle: idle_visits as f64 / n,
        tau: heads as f64 / n,
        stages: stage_visits.iter().map(|&v| v as f64 / n).collect(),
    }
}

/// Fast-mixing parameter sets: long geometric idle runs would push the
/// walk's standard error towards the tolerance.
const CASES: [ChainParams; 5] = [
    ChainParams {
        w0: 8.0,
        m: 3,
        p_eq: 0.1,
        q: 0.3,
        p_i0: 0.6,
    },
    ChainParams {
        w0: 16.0,
        m: 5,
        p_eq: 0.25,
        q: 0.6,
        p_i0: 0.5,
    },
    ChainParams {
        w0: 4.0,
        m: 2,
        p_eq: 0.4,
        q: 0.1,
        p_i0: 0.8,
    },
    ChainParams {
        w0: 32.0,
        m: 5,
        p_eq: 0.05,
        q: 0.9,
        p_i0: 0.7,
    },
    ChainParams {
        w0: 2.0,
        m: 4,
        p_eq: 0.5,
        q: 0.5,
        p_i0: 0.6,
    },
];

#[test]
fn linear_solve_matches_ten_million_step_walk() {
    for (c, params) in CASES.iter().enumerate() {
        let chain = solve_chain(params).unwrap();
        let mc = walk(params, 10_000_000, 0xC4A1 + c as u64);
        assert!(
            (chain.idle - mc.idle).abs() < 1e-3,
            "case {c}: idle {} vs {}",
            chain.idle,
            mc.idle
        );
        assert!(
            (chain.tau() - mc.tau).abs() < 1e-3,
            "case {c}: tau {} vs {}",
            chain.tau(),
            mc.tau
        );
        for (i, &freq) in mc.stages.iter().enumerate() {
            assert!(
                (chain.stage_mass(i) - freq).abs() < 1e-3,
                "case {c}: stage {i}"
            );
        }
    }
}

#[test]
fn solved_chain_reproduces_closed_form_tau() {
    for params in &CASES {
        let chain = solve_chain(params).unwrap();
        let closed = tau_from_chain(chain.idle, params.p_eq, params.w0, params.m);
        assert!((chain.tau() - closed).abs() < 1e-9);
        assert!((chain.total() - 1.0).abs() < 1e-12);
    }
}

proptest! {
    #[test]
    fn closed_form_holds_across_parameters(
        w0 in 1.0f64..1024.0,
        m in 1u32..8,
        p_eq in 0.0f64..0.95,
        q in 0.0f64..1.0,
        p_i0 in 1e-4f64..1.0,
    ) {
        let params = ChainParams { w0, m, p_eq, q, p_i0 };
        let chain = solve_chain(&params).unwrap();
        prop_assert!((chain.total() - 1.0).abs() < 1e-9);
        prop_assert!((0.0..=1.0).contains(&chain.idle));
        let closed = tau_from_chain(chain.idle, p_eq, w0, m);
        prop_assert!((chain.tau() - closed).abs() <= 1e-9 * closed.max(1e-3));
        prop_assert!(chain.tau() <= saturated_tau(p_eq, w0, m) * (1.0 + 1e-12));
    }
}
