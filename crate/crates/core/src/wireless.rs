//! Block-fading uplink model: channel draws, digital transmit energy and
//! over-the-air analog aggregation with truncated channel inversion.

use rand::Rng;
use rand_distr::{Exp1, StandardNormal};
use thiserror::Error;

use crate::learner::ParamVector;
use crate::rng::{stream_rng, Stream};
use crate::scalar::Real;

pub const DEFAULT_TRUNCATION_GAIN: f64 = 0.2;

#[derive(Debug, Error, PartialEq)]
pub enum WirelessError {
    #[error("update {index} has length {found}, expected {expected}")]
    LengthMismatch {
        index: usize,
        expected: usize,
        found: usize,
    },
    #[error("{updates} updates but {gains} channel gains")]
    GainCount { updates: usize, gains: usize },
    #[error("power scale must be positive, got {0}")]
    BadPower(f64),
}

/// Squared channel magnitudes of all clients for one round.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelState<S> {
    pub round: usize,
    pub gains: Vec<S>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkBudget<S> {
    /// Uplink bandwidth W in Hz.
    pub bandwidth_hz: S,
    /// Noise power spectral density N0 in W/Hz.
    pub noise_psd: S,
    /// Per-round upload deadline τ in seconds.
    pub deadline_s: S,
}

impl<S: Real> LinkBudget<S> {
    pub fn is_valid(&self) -> bool {
        self.bandwidth_hz > S::zero() && self.noise_psd > S::zero() && self.deadline_s > S::zero()
    }
}

/// Rayleigh block fading: `g ~ Exp(1)`, one stream per `(seed, t, k)`.
pub fn draw_channels<S: Real>(num_clients: usize, round: usize, seed: u64) -> ChannelState<S> {
    let gains = (0..num_clients)
        .map(|k| {
            let mut rng = stream_rng(seed, Stream::Channel, &[round as u64, k as u64]);
            let g: f64 = rng.sample(Exp1);
            S::of(g.max(f64::MIN_POSITIVE))
        })
        .collect();
    ChannelState { round, gains }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UplinkCost<S> {
    pub power_w: S,
    pub energy_j: S,
}

/// Minimum AWGN power to push `bits` within the deadline over `bandwidth_hz`.
pub fn uplink_energy<S: Real>(
    bits: u64,
    gain: S,
    bandwidth_hz: S,
    link: &LinkBudget<S>,
) -> UplinkCost<S> {
    if bits == 0 {
        return UplinkCost {
            power_w: S::zero(),
            energy_j: S::zero(),
        };
    }
    let rate = S::of(bits as f64) / link.deadline_s;
    let spectral = rate / bandwidth_hz;
    let power_w = (S::of(2.0).powf(spectral) - S::one()) * link.noise_psd * bandwidth_hz / gain;
    UplinkCost {
        power_w,
        energy_j: power_w * link.deadline_s,
    }
}

/// [`uplink_energy`] over the full link bandwidth.
pub fn digital_uplink_energy<S: Real>(bits: u64, gain: S, link: &LinkBudget<S>) -> UplinkCost<S> {
    uplink_energy(bits, gain, link.bandwidth_hz, link)
}

/// Power scale for one analog round.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AnalogPower<S> {
    Rho(S),
    NoiseFree,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalogOutcome<S> {
    /// `None` when every client was truncated.
    pub aggregate: Option<ParamVector<S>>,
    /// Positions (into the update list) that transmitted.
    pub included: Vec<usize>,
    /// Positions cut off by the gain threshold.
    pub truncated: Vec<usize>,
}

/// Splits positions by the truncation threshold; depends on gains only.
pub fn truncation_split<S: Real>(gains: &[S], g_min: S) -> (Vec<usize>, Vec<usize>) {
    (0..gains.len()).partition(|&k| gains[k] >= g_min)
}

/// Over-the-air mean of the updates.
///
/// Survivors pre-scale by `sqrt(rho/g_k)`, the channel applies `sqrt(g_k)`,
/// the waveforms superpose with receiver noise `N(0, noise_sigma²)`, and the
/// server rescales by `1/(|S|·sqrt(rho))`. The noise-free benchmark skips
/// truncation and returns the exact mean.
pub fn analog_aggregate<S: Real>(
    updates: &[ParamVector<S>],
    gains: &[S],
    power: AnalogPower<S>,
    g_min: S,
    noise_sigma: S,
    seed: u64,
) -> Result<AnalogOutcome<S>, WirelessError> {
    if updates.len() != gains.len() {
        return Err(WirelessError::GainCount {
            updates: updates.len(),
            gains: gains.len(),
        });
    }
    let len = updates.first().map_or(0, |u| u.len());
    for (index, u) in updates.iter().enumerate() {
        if u.len() != len {
            return Err(WirelessError::LengthMismatch {
                index,
                expected: len,
                found: u.len(),
            });
        }
    }
    let rho = match power {
        AnalogPower::NoiseFree => {
            let included: Vec<usize> = (0..updates.len()).collect();
            return Ok(AnalogOutcome {
                aggregate: exact_mean(updates, &included),
                included,
                truncated: Vec::new(),
            });
        }
        AnalogPower::Rho(rho) => {
            if !(rho > S::zero()) {
                return Err(WirelessError::BadPower(rho.as_f64()));
            }
            rho
        }
    };
    let (included, truncated) = truncation_split(gains, g_min);
    if included.is_empty() {
        return Ok(AnalogOutcome {
            aggregate: None,
            included,
            truncated,
        });
    }
    let mut received = vec![S::zero(); len];
    for &k in &included {
        let amplitude = gains[k].sqrt();
        let precode = (rho / gains[k]).sqrt();
        for (r, &x) in received.iter_mut().zip(&updates[k].values) {
            *r += amplitude * (precode * x);
        }
    }
    let mut rng = stream_rng(seed, Stream::AnalogNoise, &[]);
    let scale = S::one() / (S::of(included.len() as f64) * rho.sqrt());
    for r in received.iter_mut() {
        let z = S::of(rng.sample::<f64, _>(StandardNormal)) * noise_sigma;
        *r = (*r + z) * scale;
    }
    Ok(AnalogOutcome {
        aggregate: Some(ParamVector::new(received)),
        included,
        truncated,
    })
}

fn exact_mean<S: Real>(updates: &[ParamVector<S>], which: &[usize]) -> Option<ParamVector<S>> {
    let first = updates.get(*which.first()?)?;
    let mut acc = vec![S::zero(); first.len()];
    for &k in which {
        for (a, &x) in acc.iter_mut().zip(&updates[k].values) {
            *a += x;
        }
    }
    let n = S::of(which.len() as f64);
    Some(ParamVector::new(acc.into_iter().map(|a| a / n).collect()))
}
