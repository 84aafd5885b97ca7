//! Per-round resource schedules with exact total-budget conservation.
//!
//! Integer schedules (bits, clients) conserve their totals exactly.
//! Real-valued schedules (energy, power) are generic over
//! [`BudgetScalar`]; with [`crate::Exact`] they conserve exactly, and with
//! floats the last round absorbs the rounding residue so that the running
//! sum lands on the declared total.

use std::fmt;
use std::io::{self, Write};

use num_traits::ToPrimitive;
use thiserror::Error;

use crate::scalar::{rel_close, BudgetScalar};

/// Relative tolerance for real-valued budget checks.
pub const REAL_BUDGET_REL_TOL: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum ScheduleError {
    #[error("staircase needs at least one level")]
    NoLevels,
    #[error("staircase fractions sum to {0}, expected 1")]
    FractionSum(f64),
    #[error("bit-width {0} outside [1, 32]")]
    BadBits(u8),
    #[error("{rounds} rounds cannot hold {levels} staircase levels")]
    TooFewRounds { rounds: usize, levels: usize },
    #[error("schedule needs at least one round")]
    NoRounds,
    #[error("total budget must be positive")]
    NonPositiveTotal,
    #[error(transparent)]
    Budget(#[from] BudgetViolation),
}

/// First point at which a schedule departs from its declared budget.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("budget violated at round {round}: prefix sum {actual}, declared {declared}")]
pub struct BudgetViolation {
    /// 1-indexed round.
    pub round: usize,
    pub actual: String,
    pub declared: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitSchedule {
    pub bits_per_round: Vec<u8>,
    pub total_budget: u64,
}

impl BitSchedule {
    pub fn from_rounds(bits_per_round: Vec<u8>) -> Result<Self, ScheduleError> {
        if bits_per_round.is_empty() {
            return Err(ScheduleError::NoRounds);
        }
        if let Some(&b) = bits_per_round.iter().find(|b| !(1..=32).contains(*b)) {
            return Err(ScheduleError::BadBits(b));
        }
        let total_budget = bits_per_round.iter().map(|&b| b as u64).sum();
        Ok(Self {
            bits_per_round,
            total_budget,
        })
    }

    pub fn constant(bits: u8, rounds: usize) -> Result<Self, ScheduleError> {
        Self::from_rounds(vec![bits; rounds])
    }

    pub fn rounds(&self) -> usize {
        self.bits_per_round.len()
    }

    /// Bits at 1-indexed round `t`.
    pub fn at(&self, t: usize) -> u8 {
        self.bits_per_round[t - 1]
    }

    pub fn reversed(&self) -> Self {
        let mut bits = self.bits_per_round.clone();
        bits.reverse();
        Self {
            bits_per_round: bits,
            total_budget: self.total_budget,
        }
    }
}

/// Contiguous segments of `(bits, fraction)`. Rounds lost to flooring go to
/// the last segments, one each, so later stages are never shortened.
pub fn staircase_bits(levels: &[(u8, f64)], rounds: usize) -> Result<BitSchedule, ScheduleError> {
    if levels.is_empty() {
        return Err(ScheduleError::NoLevels);
    }
    if rounds < levels.len() {
        return Err(ScheduleError::TooFewRounds {
            rounds,
            levels: levels.len(),
        });
    }
    let sum: f64 = levels.iter().map(|l| l.1).sum();
    if (sum - 1.0).abs() > 1e-9 || levels.iter().any(|l| l.1 < 0.0) {
        return Err(ScheduleError::FractionSum(sum));
    }
    let mut lengths: Vec<usize> = levels
        .iter()
        .map(|&(_, f)| (f * rounds as f64 + 1e-9).floor() as usize)
        .collect();
    let mut assigned: usize = lengths.iter().sum();
    let mut i = lengths.len();
    while assigned < rounds {
        i = if i == 0 { lengths.len() - 1 } else { i - 1 };
        lengths[i] += 1;
        assigned += 1;
    }
    let bits = levels
        .iter()
        .zip(&lengths)
        .flat_map(|(&(b, _), &len)| std::iter::repeat_n(b, len))
        .collect();
    BitSchedule::from_rounds(bits)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClientRamp {
    /// `m` clients every round.
    Uniform(usize),
    /// Linear ramp from 0 to `2m`, same total as `Uniform(m)`.
    Ascend(usize),
    /// Mirror image of `Ascend(m)`.
    Descend(usize),
}

impl fmt::Display for ClientRamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Uniform(m) => write!(f, "uniform:{m}"),
            Self::Ascend(m) => write!(f, "ascend:{m}"),
            Self::Descend(m) => write!(f, "descend:{m}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClientSchedule {
    pub clients_per_round: Vec<usize>,
    pub total: u64,
}

impl ClientSchedule {
    pub fn from_rounds(clients_per_round: Vec<usize>) -> Self {
        let total = clients_per_round.iter().map(|&m| m as u64).sum();
        Self {
            clients_per_round,
            total,
        }
    }

    pub fn rounds(&self) -> usize {
        self.clients_per_round.len()
    }

    pub fn at(&self, t: usize) -> usize {
        self.clients_per_round[t - 1]
    }

    pub fn max(&self) -> usize {
        self.clients_per_round.iter().copied().max().unwrap_or(0)
    }
}

/// Half-up rounding of the cumulative ascend curve `C_t = m·t(t−1)/(T−1)`.
fn ascend_cumulative_rounded(m: u128, t: u128, rounds: u128) -> u128 {
    if t == 0 {
        return 0;
    }
    let den = rounds - 1;
    (2 * m * t * (t - 1) + den) / (2 * den)
}

/// Integer client counts per round.
///
/// Ramps are integerized by cumulative rounding, which keeps the total at
/// exactly `m·T`. A single-round ramp degenerates to `[m]`.
pub fn ramp_clients(kind: ClientRamp, rounds: usize) -> Result<ClientSchedule, ScheduleError> {
    if rounds == 0 {
        return Err(ScheduleError::NoRounds);
    }
    let counts = match kind {
        ClientRamp::Uniform(m) => vec![m; rounds],
        ClientRamp::Ascend(m) | ClientRamp::Descend(m) if rounds == 1 => vec![m],
        ClientRamp::Ascend(m) => ascend_counts(m, rounds),
        ClientRamp::Descend(m) => {
            let mut v = ascend_counts(m, rounds);
            v.reverse();
            v
        }
    };
    Ok(ClientSchedule::from_rounds(counts))
}

fn ascend_counts(m: usize, rounds: usize) -> Vec<usize> {
    let (m, big_t) = (m as u128, rounds as u128);
    (1..=big_t)
        .map(|t| {
            let prev = ascend_cumulative_rounded(m, t - 1, big_t);
            let cur = ascend_cumulative_rounded(m, t, big_t);
            (cur - prev) as usize
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnergyShape {
    Myopic,
    RationedLinear,
    RationedQuadratic,
}

impl EnergyShape {
    fn degree(self) -> u32 {
        match self {
            Self::Myopic => 0,
            Self::RationedLinear => 1,
            Self::RationedQuadratic => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnergySchedule<S> {
    pub budget_per_round: Vec<S>,
    pub total: S,
}

impl<S: BudgetScalar> EnergySchedule<S> {
    pub fn at(&self, t: usize) -> S {
        self.budget_per_round[t - 1]
    }

    pub fn rounds(&self) -> usize {
        self.budget_per_round.len()
    }
}

fn power_weight<S: BudgetScalar>(t: usize, degree: u32) -> S {
    S::of_u64((t as u64).pow(degree))
}

fn weight_sum<S: BudgetScalar>(rounds: usize, degree: u32) -> S {
    (1..=rounds).fold(S::zero(), |acc, t| acc + power_weight::<S>(t, degree))
}

/// `total · t^degree / Σ s^degree`, with the last entry set to the residue.
fn normalized_ramp<S: BudgetScalar>(total: S, rounds: usize, degree: u32) -> Vec<S> {
    let denom = weight_sum::<S>(rounds, degree);
    let mut out: Vec<S> = (1..=rounds)
        .map(|t| total * power_weight::<S>(t, degree) / denom)
        .collect();
    let head = out[..rounds - 1].iter().fold(S::zero(), |acc, &x| acc + x);
    out[rounds - 1] = total - head;
    out
}

pub fn energy_schedule<S: BudgetScalar>(
    kind: EnergyShape,
    total: S,
    rounds: usize,
) -> Result<EnergySchedule<S>, ScheduleError> {
    if rounds == 0 {
        return Err(ScheduleError::NoRounds);
    }
    if !(total > S::zero()) {
        return Err(ScheduleError::NonPositiveTotal);
    }
    Ok(EnergySchedule {
        budget_per_round: normalized_ramp(total, rounds, kind.degree()),
        total,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PowerKind {
    Equal,
    Poly(u32),
    NoiseFree,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerPolicy<S> {
    pub kind: PowerKind,
    pub total_power_budget: S,
}

/// Closed-form power scale at round `t`; `None` for the noise-free benchmark.
pub fn power_rho<S: BudgetScalar>(policy: &PowerPolicy<S>, t: usize, rounds: usize) -> Option<S> {
    assert!((1..=rounds).contains(&t), "round {t} outside [1, {rounds}]");
    let total = policy.total_power_budget;
    match policy.kind {
        PowerKind::Equal => Some(total / S::of_u64(rounds as u64)),
        PowerKind::Poly(deg) => {
            Some(total * power_weight::<S>(t, deg) / weight_sum::<S>(rounds, deg))
        }
        PowerKind::NoiseFree => None,
    }
}

/// Materialized per-round power scales for a run.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerSchedule<S> {
    pub policy: PowerPolicy<S>,
    pub rho_per_round: Option<Vec<S>>,
}

impl<S: BudgetScalar> PowerSchedule<S> {
    pub fn new(policy: PowerPolicy<S>, rounds: usize) -> Result<Self, ScheduleError> {
        if rounds == 0 {
            return Err(ScheduleError::NoRounds);
        }
        let rho_per_round = match policy.kind {
            PowerKind::NoiseFree => None,
            kind => {
                if !(policy.total_power_budget > S::zero()) {
                    return Err(ScheduleError::NonPositiveTotal);
                }
                let degree = match kind {
                    PowerKind::Poly(d) => d,
                    _ => 0,
                };
                Some(normalized_ramp(policy.total_power_budget, rounds, degree))
            }
        };
        Ok(Self {
            policy,
            rho_per_round,
        })
    }

    pub fn at(&self, t: usize) -> Option<S> {
        self.rho_per_round.as_ref().map(|r| r[t - 1])
    }
}

/// Comparison discipline for [`validate_budget`].
pub trait BudgetEntry: Copy {
    fn add(self, other: Self) -> Self;
    fn zero() -> Self;
    fn matches(self, declared: Self) -> bool;
    fn exceeds(self, declared: Self) -> bool;
    fn render(self) -> String;
}

impl BudgetEntry for u64 {
    fn add(self, other: Self) -> Self {
        self + other
    }
    fn zero() -> Self {
        0
    }
    fn matches(self, declared: Self) -> bool {
        self == declared
    }
    fn exceeds(self, declared: Self) -> bool {
        self > declared
    }
    fn render(self) -> String {
        self.to_string()
    }
}

macro_rules! real_budget_entry {
    ($($t:ty),*) => {$(
        impl BudgetEntry for $t {
            fn add(self, other: Self) -> Self {
                self + other
            }
            fn zero() -> Self {
                num_traits::Zero::zero()
            }
            fn matches(self, declared: Self) -> bool {
                rel_close(self, declared, REAL_BUDGET_REL_TOL)
            }
            fn exceeds(self, declared: Self) -> bool {
                self > declared && !self.matches(declared)
            }
            fn render(self) -> String {
                format!("{}", self)
            }
        }
    )*};
}
real_budget_entry!(f32, f64);

impl BudgetEntry for crate::Exact {
    fn add(self, other: Self) -> Self {
        self + other
    }
    fn zero() -> Self {
        num_traits::Zero::zero()
    }
    fn matches(self, declared: Self) -> bool {
        self == declared
    }
    fn exceeds(self, declared: Self) -> bool {
        self > declared
    }
    fn render(self) -> String {
        self.to_string()
    }
}

/// Checks that the entries sum to `declared`.
///
/// Reports the first round whose prefix sum overshoots the declared total,
/// or the final round when the schedule falls short.
pub fn validate_budget<E: BudgetEntry>(entries: &[E], declared: E) -> Result<(), BudgetViolation> {
    let mut prefix = E::zero();
    for (i, &e) in entries.iter().enumerate() {
        prefix = prefix.add(e);
        if prefix.exceeds(declared) {
            return Err(BudgetViolation {
                round: i + 1,
                actual: prefix.render(),
                declared: declared.render(),
            });
        }
    }
    if prefix.matches(declared) {
        Ok(())
    } else {
        Err(BudgetViolation {
            round: entries.len(),
            actual: prefix.render(),
            declared: declared.render(),
        })
    }
}

/// Checks prefix sums against a reference schedule and names the first
/// round where they diverge.
pub fn validate_against<E: BudgetEntry>(
    entries: &[E],
    reference: &[E],
) -> Result<(), BudgetViolation> {
    let (mut a, mut b) = (E::zero(), E::zero());
    let n = entries.len().max(reference.len());
    for i in 0..n {
        a = a.add(entries.get(i).copied().unwrap_or_else(E::zero));
        b = b.add(reference.get(i).copied().unwrap_or_else(E::zero));
        if !a.matches(b) {
            return Err(BudgetViolation {
                round: i + 1,
                actual: a.render(),
                declared: b.render(),
            });
        }
    }
    Ok(())
}

impl BitSchedule {
    pub fn entries(&self) -> Vec<u64> {
        self.bits_per_round.iter().map(|&b| b as u64).collect()
    }

    pub fn validate(&self) -> Result<(), BudgetViolation> {
        validate_budget(&self.entries(), self.total_budget)
    }
}

impl ClientSchedule {
    pub fn entries(&self) -> Vec<u64> {
        self.clients_per_round.iter().map(|&m| m as u64).collect()
    }

    pub fn validate(&self) -> Result<(), BudgetViolation> {
        validate_budget(&self.entries(), self.total)
    }
}

/// Writes `round,value` rows, 1-indexed.
pub fn write_csv<W: Write, V: fmt::Display>(
    mut out: W,
    column: &str,
    values: impl IntoIterator<Item = V>,
) -> io::Result<()> {
    writeln!(out, "round,{column}")?;
    for (i, v) in values.into_iter().enumerate() {
        writeln!(out, "{},{v}", i + 1)?;
    }
    Ok(())
}

/// Schedule values as `f64`, for reporting.
pub fn to_f64_vec<S: BudgetScalar + ToPrimitive>(v: &[S]) -> Vec<f64> {
    v.iter().map(|x| x.to_f64().unwrap_or(f64::NAN)).collect()
}
