//! Per-slot event probabilities and expected slot durations for a given
//! vector of per-station transmission probabilities.
//!
//! Every quantity here is a polynomial in the transmission probabilities and
//! is affine in each coordinate separately. [`t_av_gradient`] relies on that.

use std::ops::Deref;

use thiserror::Error;

use crate::params::{ClassPartition, Network};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TauError {
    #[error("transmission probability {value} of station {station} outside [0, 1)")]
    OutOfRange { station: usize, value: f64 },
    #[error("expected {expected} transmission probabilities, got {got}")]
    Length { expected: usize, got: usize },
}

/// Per-station probability of transmitting in a random virtual slot.
#[derive(Debug, Clone, PartialEq)]
pub struct TauVector(Vec<f64>);

impl TauVector {
    pub fn new(tau: Vec<f64>) -> Result<Self, TauError> {
        for (s, &t) in tau.iter().enumerate() {
            if !(0.0..1.0).contains(&t) {
                return Err(TauError::OutOfRange {
                    station: s + 1,
                    value: t,
                });
            }
        }
        Ok(Self(tau))
    }

    pub fn for_network(tau: Vec<f64>, net: &Network) -> Result<Self, TauError> {
        if tau.len() != net.len() {
            return Err(TauError::Length {
                expected: net.len(),
                got: tau.len(),
            });
        }
        Self::new(tau)
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for TauVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

fn idle_product<I: IntoIterator<Item = usize>>(tau: &[f64], members: I) -> f64 {
    members.into_iter().map(|s| 1.0 - tau[s]).product()
}

/// Probability that at least one station transmits.
pub fn p_transmit(tau: &[f64]) -> f64 {
    1.0 - idle_product(tau, 0..tau.len())
}

/// Probability that station `s` (0-based) transmits alone.
pub fn p_success(tau: &[f64], s: usize) -> f64 {
    tau[s] * idle_product(tau, (0..tau.len()).filter(|&j| j != s))
}

/// Transmission probabilities seen from class `d` (0-based, slowest first):
/// at least one transmitter in a slower class, in a faster class, and in
/// class `d` itself.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassTransmit {
    pub lower: f64,
    pub higher: f64,
    pub same: f64,
}

pub fn class_transmit_probs(tau: &[f64], part: &ClassPartition, d: usize) -> ClassTransmit {
    let classes = &part.classes;
    let over = |range: std::ops::Range<usize>| {
        1.0 - classes[range]
            .iter()
            .map(|c| idle_product(tau, c.members.iter().copied()))
            .product::<f64>()
    };
    ClassTransmit {
        lower: over(0..d),
        higher: over(d + 1..classes.len()),
        same: 1.0 - idle_product(tau, classes[d].members.iter().copied()),
    }
}

/// Collision probability attributed to class `d`: no slower class transmits,
/// and either two or more class-`d` stations collide among themselves
/// (internal) or class `d` collides with a faster class (external).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassCollision {
    pub internal: f64,
    pub external: f64,
}

impl ClassCollision {
    pub fn total(&self) -> f64 {
        self.internal + self.external
    }
}

pub fn p_collision_class(tau: &[f64], part: &ClassPartition, d: usize) -> ClassCollision {
    let tr = class_transmit_probs(tau, part, d);
    let members = &part.classes[d].members;
    let single: f64 = members
        .iter()
        .map(|&s| tau[s] * idle_product(tau, members.iter().copied().filter(|&j| j != s)))
        .sum();
    // the bracket can dip below zero by rounding when every member is near-silent
    let multi = (tr.same - single).max(0.0);
    ClassCollision {
        internal: (1.0 - tr.higher) * (1.0 - tr.lower) * multi,
        external: tr.same * tr.higher * (1.0 - tr.lower),
    }
}

/// Slot-event probabilities and expected slot-duration components.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotBreakdown {
    pub p_tr: f64,
    pub p_succ: Vec<f64>,
    pub p_coll_class: Vec<ClassCollision>,
    pub t_i: f64,
    pub t_s: f64,
    pub t_e: f64,
    pub t_c: f64,
    pub t_av: f64,
}

impl SlotBreakdown {
    /// Mass of idle + success + collision events; 1 up to rounding.
    pub fn event_mass(&self) -> f64 {
        (1.0 - self.p_tr)
            + self.p_succ.iter().sum::<f64>()
            + self
                .p_coll_class
                .iter()
                .map(ClassCollision::total)
                .sum::<f64>()
    }
}

pub fn expected_slot(tau: &[f64], net: &Network) -> SlotBreakdown {
    debug_assert_eq!(tau.len(), net.len());
    let part = net.partition();
    let p_tr = p_transmit(tau);
    let p_succ: Vec<f64> = (0..tau.len()).map(|s| p_success(tau, s)).collect();
    let p_coll_class: Vec<ClassCollision> = (0..part.n_classes())
        .map(|d| p_collision_class(tau, part, d))
        .collect();

    let t_i = (1.0 - p_tr) * net.phy().sigma;
    let mut t_s = 0.0;
    let mut t_e = 0.0;
    for ((p, st), fr) in p_succ.iter().zip(net.stations()).zip(net.frames()) {
        t_s += p * (1.0 - st.pe) * fr.success;
        t_e += p * st.pe * fr.error;
    }
    let t_c = p_coll_class
        .iter()
        .zip(&part.classes)
        .map(|(pc, class)| pc.total() * class.t_collision)
        .sum::<f64>();

    SlotBreakdown {
        p_tr,
        p_succ,
        p_coll_class,
        t_i,
        t_s,
        t_e,
        t_c,
        t_av: t_i + t_s + t_e + t_c,
    }
}

pub fn t_av(tau: &[f64], net: &Network) -> f64 {
    expected_slot(tau, net).t_av
}

/// Expected slot duration with station `t` (0-based) removed from the
/// network. A silent station contributes no factor other than 1 to any
/// product and nothing to any sum, so this is `t_av` with `tau[t] = 0`.
pub fn expected_slot_excluding(tau: &[f64], net: &Network, t: usize) -> f64 {
    let mut reduced = tau.to_vec();
    reduced[t] = 0.0;
    t_av(&reduced, net)
}

/// Exact gradient of the expected slot duration. `T_av` is affine in each
/// coordinate, so each partial is the difference of the endpoint values.
pub fn t_av_gradient(tau: &[f64], net: &Network) -> Vec<f64> {
    let mut probe = tau.to_vec();
    (0..tau.len())
        .map(|j| {
            let keep = probe[j];
            probe[j] = 1.0;
            let hi = t_av(&probe, net);
            probe[j] = 0.0;
            let lo = t_av(&probe, net);
            probe[j] = keep;
            hi - lo
        })
        .collect()
}
