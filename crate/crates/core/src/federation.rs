//! FedAvg orchestration: one round is broadcast, local training, uplink and
//! aggregation, repeated for `T` rounds under per-round resource schedules.

use rand::seq::index;
use rayon::prelude::*;
use thiserror::Error;

use crate::data::{ClientDataset, Dataset};
use crate::learner::{
    evaluate, init_model, local_train, LearnError, ModelArch, ParamVector, TrainConfig,
};
use crate::quant::{dequantize, quantize_stochastic, uplink_bits, QuantError};
use crate::rng::{derive_seed, stream_rng, Stream};
use crate::scalar::Real;
use crate::schedule::{BitSchedule, ClientSchedule, EnergySchedule, PowerSchedule};
use crate::wireless::{
    analog_aggregate, draw_channels, uplink_energy, AnalogPower, LinkBudget, WirelessError,
};

#[derive(Debug, Error, PartialEq)]
pub enum FederationError {
    #[error("cannot select {wanted} of {pool} clients")]
    PoolTooSmall { wanted: usize, pool: usize },
    #[error("total aggregation weight is zero")]
    ZeroWeight,
    #[error("update {index} has length {found}, expected {expected}")]
    LengthMismatch {
        index: usize,
        expected: usize,
        found: usize,
    },
    #[error("invalid federation config: {0}")]
    Config(String),
    #[error(transparent)]
    Learn(#[from] LearnError),
    #[error(transparent)]
    Quant(#[from] QuantError),
    #[error(transparent)]
    Wireless(#[from] WirelessError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SelectionMode {
    /// Uniformly sample the scheduled number of clients.
    Uniform,
    /// Greedy energy-constrained admission under a flat per-round budget.
    MyopicEnergy,
    /// Greedy energy-constrained admission under a rationed budget.
    RationedEnergy,
    /// Every available client, energy ignored but still metered.
    SelectAll,
}

impl SelectionMode {
    pub fn uses_energy_budget(self) -> bool {
        matches!(self, Self::MyopicEnergy | Self::RationedEnergy)
    }

    pub fn meters_energy(self) -> bool {
        !matches!(self, Self::Uniform)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum AggregationMode<S> {
    /// Quantized digital uplink, sample-weighted average at the server.
    Digital,
    /// Over-the-air mean with truncated channel inversion.
    Analog {
        power: PowerSchedule<S>,
        g_min: S,
        noise_sigma: S,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct FederationConfig<S> {
    pub arch: ModelArch,
    pub rounds: usize,
    pub num_clients: usize,
    /// Hyperparameters of local SGD; the seed is replaced per client and round.
    pub train: TrainConfig,
    pub bits: BitSchedule,
    /// Clients sampled per round. In the energy-aware modes these are the
    /// clients available for admission.
    pub clients: ClientSchedule,
    pub energy: Option<EnergySchedule<S>>,
    pub selection: SelectionMode,
    pub aggregation: AggregationMode<S>,
    pub link: LinkBudget<S>,
    pub eval_every: usize,
    /// Send `local − global` instead of the full local model.
    pub transmit_delta: bool,
}

impl<S: Real> FederationConfig<S> {
    pub fn validate(&self) -> Result<(), FederationError> {
        let bad = |m: String| Err(FederationError::Config(m));
        self.arch.validate()?;
        self.train.validate()?;
        if self.rounds == 0 {
            return bad("rounds must be >= 1".into());
        }
        if self.bits.rounds() != self.rounds || self.clients.rounds() != self.rounds {
            return bad(format!("schedule lengths must equal T = {}", self.rounds));
        }
        if self.clients.max() > self.num_clients {
            return bad(format!(
                "schedule asks for {} clients but only {} exist",
                self.clients.max(),
                self.num_clients
            ));
        }
        if self.selection.uses_energy_budget() {
            match &self.energy {
                Some(e) if e.rounds() == self.rounds => {}
                Some(_) => return bad("energy schedule length must equal T".into()),
                None => return bad("energy-aware selection needs an energy schedule".into()),
            }
        }
        if (self.selection.meters_energy()
            || matches!(self.aggregation, AggregationMode::Analog { .. }))
            && !self.link.is_valid()
        {
            return bad("link budget entries must be positive".into());
        }
        if let AggregationMode::Analog { power, .. } = &self.aggregation {
            if power
                .rho_per_round
                .as_ref()
                .is_some_and(|r| r.len() != self.rounds)
            {
                return bad("power schedule length must equal T".into());
            }
        }
        if self.eval_every == 0 {
            return bad("eval_every must be >= 1".into());
        }
        Ok(())
    }
}

/// Per-round ledger entry.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundRecord {
    pub round: usize,
    pub bits_used: u64,
    pub clients_selected: Vec<usize>,
    pub energy_j: f64,
    pub energy_budget_j: Option<f64>,
    pub rho: Option<f64>,
    pub truncated: Vec<usize>,
    pub train_loss: Option<f64>,
    pub test_accuracy: Option<f64>,
}

/// Client ids drawn uniformly without replacement, sorted ascending.
pub fn select_uniform(
    pool: usize,
    m: usize,
    seed: u64,
    round: usize,
) -> Result<Vec<usize>, FederationError> {
    if m > pool {
        return Err(FederationError::PoolTooSmall { wanted: m, pool });
    }
    let mut rng = stream_rng(seed, Stream::Selection, &[round as u64]);
    let mut ids = index::sample(&mut rng, pool, m).into_vec();
    ids.sort_unstable();
    Ok(ids)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnergySelection<S> {
    /// Positions into the candidate gain list, ascending.
    pub chosen: Vec<usize>,
    /// Energy of each chosen client, aligned with `chosen`.
    pub energies: Vec<S>,
}

impl<S: Real> EnergySelection<S> {
    pub fn total(&self) -> S {
        self.energies.iter().copied().sum()
    }
}

/// Energy of each listed client when the band is split equally among them.
pub fn split_band_energies<S: Real>(
    gains: &[S],
    members: &[usize],
    bits: u64,
    link: &LinkBudget<S>,
) -> Vec<S> {
    if members.is_empty() {
        return Vec::new();
    }
    let share = link.bandwidth_hz / S::of(members.len() as f64);
    members
        .iter()
        .map(|&k| uplink_energy(bits, gains[k], share, link).energy_j)
        .collect()
}

/// Greedy admission: best channels first while the cumulative full-band
/// energy fits, then drop the weakest until the equal-band-split energies fit.
pub fn select_energy_constrained<S: Real>(
    gains: &[S],
    budget: S,
    bits: u64,
    link: &LinkBudget<S>,
) -> EnergySelection<S> {
    let mut order: Vec<usize> = (0..gains.len()).collect();
    order.sort_by(|&a, &b| gains[b].partial_cmp(&gains[a]).unwrap().then(a.cmp(&b)));

    let mut admitted = 0;
    let mut spent = S::zero();
    for &k in &order {
        let cost = uplink_energy(bits, gains[k], link.bandwidth_hz, link).energy_j;
        if spent + cost > budget {
            break;
        }
        spent += cost;
        admitted += 1;
    }
    loop {
        let members = &order[..admitted];
        let energies = split_band_energies(gains, members, bits, link);
        if energies.iter().copied().sum::<S>() <= budget {
            let mut pairs: Vec<(usize, S)> = members.iter().copied().zip(energies).collect();
            pairs.sort_by_key(|p| p.0);
            let (chosen, energies) = pairs.into_iter().unzip();
            return EnergySelection { chosen, energies };
        }
        admitted -= 1;
    }
}

/// `Σ_k (n_k / Σn) · x_k`, summed in the given order.
pub fn aggregate_weighted<S: Real>(
    updates: &[ParamVector<S>],
    counts: &[usize],
) -> Result<ParamVector<S>, FederationError> {
    let total: usize = counts.iter().sum();
    if total == 0 || updates.is_empty() {
        return Err(FederationError::ZeroWeight);
    }
    let len = updates[0].len();
    let mut acc = vec![S::zero(); len];
    let total = S::of(total as f64);
    for (index, (u, &n)) in updates.iter().zip(counts).enumerate() {
        if u.len() != len {
            return Err(FederationError::LengthMismatch {
                index,
                expected: len,
                found: u.len(),
            });
        }
        let w = S::of(n as f64) / total;
        for (a, &x) in acc.iter_mut().zip(&u.values) {
            *a += w * x;
        }
    }
    Ok(ParamVector::new(acc))
}

/// Client shards plus evaluation sets for one run.
#[derive(Debug, Clone)]
pub struct FederationData<S> {
    pub clients: Vec<ClientDataset<S>>,
    pub test: Dataset<S>,
    /// Training-distribution sample on which the global loss is reported.
    pub train_probe: Dataset<S>,
}

/// One seeded federated run.
pub struct Federation<'a, S> {
    pub cfg: &'a FederationConfig<S>,
    pub data: &'a FederationData<S>,
    pub seed: u64,
}

impl<'a, S: Real> Federation<'a, S> {
    pub fn new(
        cfg: &'a FederationConfig<S>,
        data: &'a FederationData<S>,
        seed: u64,
    ) -> Result<Self, FederationError> {
        cfg.validate()?;
        if data.clients.len() != cfg.num_clients {
            return Err(FederationError::Config(format!(
                "{} client datasets for K = {}",
                data.clients.len(),
                cfg.num_clients
            )));
        }
        Ok(Self { cfg, data, seed })
    }

    pub fn initial_model(&self) -> ParamVector<S> {
        init_model(&self.cfg.arch, self.seed)
    }

    /// Clients selected this round and their metered energies.
    fn select(
        &self,
        round: usize,
    ) -> Result<(Vec<usize>, Vec<S>, Option<S>, Option<Vec<S>>), FederationError> {
        let cfg = self.cfg;
        let m = cfg.clients.at(round);
        let pool = select_uniform(cfg.num_clients, m, self.seed, round)?;
        let needs_channels = cfg.selection.meters_energy()
            || matches!(cfg.aggregation, AggregationMode::Analog { .. });
        let channels =
            needs_channels.then(|| draw_channels::<S>(cfg.num_clients, round, self.seed).gains);
        let bits = uplink_bits(cfg.bits.at(round), cfg.arch.num_params());
        match cfg.selection {
            SelectionMode::Uniform => Ok((pool, Vec::new(), None, channels)),
            SelectionMode::SelectAll => {
                let gains = channels.as_ref().expect("channels drawn");
                let local: Vec<S> = pool.iter().map(|&k| gains[k]).collect();
                let positions: Vec<usize> = (0..pool.len()).collect();
                let energies = split_band_energies(&local, &positions, bits, &cfg.link);
                Ok((pool, energies, None, channels))
            }
            SelectionMode::MyopicEnergy | SelectionMode::RationedEnergy => {
                let gains = channels.as_ref().expect("channels drawn");
                let budget = cfg.energy.as_ref().expect("validated").at(round);
                let local: Vec<S> = pool.iter().map(|&k| gains[k]).collect();
                let sel = select_energy_constrained(&local, budget, bits, &cfg.link);
                let chosen = sel.chosen.iter().map(|&p| pool[p]).collect();
                Ok((chosen, sel.energies, Some(budget), channels))
            }
        }
    }

    /// Broadcast, local training, uplink and aggregation for round `t`.
    pub fn run_round(
        &self,
        global: &ParamVector<S>,
        round: usize,
    ) -> Result<(ParamVector<S>, RoundRecord), FederationError> {
        let cfg = self.cfg;
        let (selected, energies, budget, channels) = self.select(round)?;
        let mut record = RoundRecord {
            round,
            bits_used: 0,
            clients_selected: selected.clone(),
            energy_j: energies.iter().map(|e| e.as_f64()).sum(),
            energy_budget_j: budget.map(Real::as_f64),
            rho: None,
            truncated: Vec::new(),
            train_loss: None,
            test_accuracy: None,
        };
        if let AggregationMode::Analog { power, .. } = &cfg.aggregation {
            record.rho = power.at(round).map(Real::as_f64);
        }

        let locals: Vec<ParamVector<S>> = selected
            .par_iter()
            .map(|&k| {
                let train = TrainConfig {
                    seed: derive_seed(self.seed, Stream::LocalTrain, &[round as u64, k as u64]),
                    ..cfg.train
                };
                local_train(&cfg.arch, global, &self.data.clients[k], &train)
            })
            .collect::<Result<_, _>>()?;
        let payloads: Vec<ParamVector<S>> = if cfg.transmit_delta {
            locals
                .iter()
                .map(|l| {
                    ParamVector::new(
                        l.values
                            .iter()
                            .zip(&global.values)
                            .map(|(&a, &g)| a - g)
                            .collect(),
                    )
                })
                .collect()
        } else {
            locals
        };

        let aggregate = match &cfg.aggregation {
            AggregationMode::Digital => {
                let b = cfg.bits.at(round);
                let received: Vec<ParamVector<S>> = selected
                    .par_iter()
                    .zip(&payloads)
                    .map(|(&k, p)| {
                        let seed =
                            derive_seed(self.seed, Stream::Quantize, &[round as u64, k as u64]);
                        let q = quantize_stochastic(p, b, seed)?;
                        dequantize(&q)
                    })
                    .collect::<Result<_, _>>()?;
                record.bits_used = received.len() as u64 * uplink_bits(b, cfg.arch.num_params());
                if received.is_empty() {
                    None
                } else {
                    let counts: Vec<usize> = selected
                        .iter()
                        .map(|&k| self.data.clients[k].len())
                        .collect();
                    Some(aggregate_weighted(&received, &counts)?)
                }
            }
            AggregationMode::Analog {
                power,
                g_min,
                noise_sigma,
            } => {
                let gains = channels.as_ref().expect("analog draws channels");
                let local_gains: Vec<S> = selected.iter().map(|&k| gains[k]).collect();
                let rho = match power.at(round) {
                    Some(r) => AnalogPower::Rho(r),
                    None => AnalogPower::NoiseFree,
                };
                let noise_seed = derive_seed(self.seed, Stream::AnalogNoise, &[round as u64]);
                if payloads.is_empty() {
                    None
                } else {
                    let out = analog_aggregate(
                        &payloads,
                        &local_gains,
                        rho,
                        *g_min,
                        *noise_sigma,
                        noise_seed,
                    )?;
                    record.truncated = out.truncated.iter().map(|&p| selected[p]).collect();
                    if out.aggregate.is_some() {
                        record.energy_j = record.rho.unwrap_or(0.0);
                    }
                    out.aggregate
                }
            }
        };

        let next = match aggregate {
            None => global.clone(),
            Some(agg) if cfg.transmit_delta => ParamVector::new(
                global
                    .values
                    .iter()
                    .zip(&agg.values)
                    .map(|(&g, &d)| g + d)
                    .collect(),
            ),
            Some(agg) => agg,
        };

        if round.is_multiple_of(cfg.eval_every) || round == cfg.rounds {
            record.test_accuracy = Some(evaluate(&cfg.arch, &next, &self.data.test)?.accuracy);
            record.train_loss = Some(evaluate(&cfg.arch, &next, &self.data.train_probe)?.loss);
        }
        Ok((next, record))
    }

    pub fn run(&self) -> Result<Vec<RoundRecord>, FederationError> {
        let mut global = self.initial_model();
        let mut records = Vec::with_capacity(self.cfg.rounds);
        for t in 1..=self.cfg.rounds {
            let (next, record) = self.run_round(&global, t)?;
            global = next;
            records.push(record);
        }
        Ok(records)
    }
}

/// Runs all `T` rounds for one seed.
pub fn run_federation<S: Real>(
    cfg: &FederationConfig<S>,
    data: &FederationData<S>,
    seed: u64,
) -> Result<Vec<RoundRecord>, FederationError> {
    Federation::new(cfg, data, seed)?.run()
}
