//! Experiment configuration: a flat `key = value` text format.
//!
//! Lines are `key = value`; `#` starts a comment and blank lines are
//! ignored. `preset` is the only required key, everything else falls back
//! to the preset's defaults. [`ExperimentConfig::to_text`] emits every
//! resolved value in the same format, so a written `meta.txt` parses back to
//! an identical config.
//!
//! Arm-defining keys (`bit_schedule`, `client_ramp`, `selection`,
//! `energy_shape`, `aggregation`, `power_policy`) are accepted only with
//! `preset = custom`; the named presets fix their own arms.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use thiserror::Error;

use crate::federation::SelectionMode;
use crate::schedule::{ClientRamp, EnergyShape, PowerKind};

/// Environment variable overriding `base_seed`.
pub const SEED_ENV: &str = "RATIONFL_SEED";

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("line {line}: expected `key = value`, found `{text}`")]
    Syntax { line: usize, text: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: duplicate key `{key}` (first set on line {first})")]
    DuplicateKey {
        line: usize,
        key: String,
        first: usize,
    },
    #[error("missing required key `{key}`")]
    MissingKey { key: String },
    #[error("line {line}: `{key}` expects {expected}, found `{found}`")]
    TypeMismatch {
        line: usize,
        key: String,
        expected: &'static str,
        found: String,
    },
    #[error("{}`{key}`: {reason}", line.map(|l| format!("line {l}: ")).unwrap_or_default())]
    Invalid {
        line: Option<usize>,
        key: String,
        reason: String,
    },
    #[error("line {line}: `{key}` is only allowed with preset = custom (preset is {preset})")]
    NotApplicable {
        line: usize,
        key: String,
        preset: PresetName,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PresetName {
    Fig2Bits,
    Fig4Clients,
    Fig5Energy,
    Fig6Power,
    Custom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DatasetKind {
    Mnist,
    Synthetic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PartitionKind {
    Iid,
    NonIid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Logistic,
    Mlp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AggregationKind {
    Digital,
    Analog,
}

/// Bit-width schedule as written in a config file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BitSpec {
    /// `constant:b`
    Constant(u8),
    /// `increasing:b1,b2,...`, equal-length segments in the given order.
    Increasing(Vec<u8>),
    /// `decreasing:b1,b2,...`, the reversal of the matching increasing staircase.
    Decreasing(Vec<u8>),
}

macro_rules! keyword_enum {
    ($ty:ty, $what:literal, { $($var:path => $text:literal),+ $(,)? }) => {
        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(match self { $($var => $text),+ })
            }
        }

        impl Keyword for $ty {
            const EXPECTED: &'static str = $what;
            fn from_keyword(s: &str) -> Option<Self> {
                match s { $($text => Some($var),)+ _ => None }
            }
        }
    };
}

trait Keyword: Sized {
    const EXPECTED: &'static str;
    fn from_keyword(s: &str) -> Option<Self>;
}

keyword_enum!(PresetName, "one of fig2_bits, fig4_clients, fig5_energy, fig6_power, custom", {
    PresetName::Fig2Bits => "fig2_bits",
    PresetName::Fig4Clients => "fig4_clients",
    PresetName::Fig5Energy => "fig5_energy",
    PresetName::Fig6Power => "fig6_power",
    PresetName::Custom => "custom",
});
keyword_enum!(DatasetKind, "mnist or synthetic", {
    DatasetKind::Mnist => "mnist",
    DatasetKind::Synthetic => "synthetic",
});
keyword_enum!(PartitionKind, "iid or noniid", {
    PartitionKind::Iid => "iid",
    PartitionKind::NonIid => "noniid",
});
keyword_enum!(ModelKind, "logistic or mlp", {
    ModelKind::Logistic => "logistic",
    ModelKind::Mlp => "mlp",
});
keyword_enum!(AggregationKind, "digital or analog", {
    AggregationKind::Digital => "digital",
    AggregationKind::Analog => "analog",
});
keyword_enum!(SelectionMode, "one of uniform, myopic_energy, rationed_energy, select_all", {
    SelectionMode::Uniform => "uniform",
    SelectionMode::MyopicEnergy => "myopic_energy",
    SelectionMode::RationedEnergy => "rationed_energy",
    SelectionMode::SelectAll => "select_all",
});
keyword_enum!(EnergyShape, "one of myopic, rationed_linear, rationed_quadratic", {
    EnergyShape::Myopic => "myopic",
    EnergyShape::RationedLinear => "rationed_linear",
    EnergyShape::RationedQuadratic => "rationed_quadratic",
});

impl PresetName {
    pub fn parse(s: &str) -> Option<Self> {
        Self::from_keyword(s)
    }
}

impl fmt::Display for BitSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |v: &[u8]| v.iter().map(u8::to_string).collect::<Vec<_>>().join(",");
        match self {
            Self::Constant(b) => write!(f, "constant:{b}"),
            Self::Increasing(v) => write!(f, "increasing:{}", join(v)),
            Self::Decreasing(v) => write!(f, "decreasing:{}", join(v)),
        }
    }
}

impl BitSpec {
    fn parse(s: &str) -> Option<Self> {
        let (kind, rest) = s.split_once(':')?;
        let levels: Option<Vec<u8>> = rest.split(',').map(|x| x.trim().parse().ok()).collect();
        let levels = levels?;
        match kind.trim() {
            "constant" if levels.len() == 1 => Some(Self::Constant(levels[0])),
            "increasing" => Some(Self::Increasing(levels)),
            "decreasing" => Some(Self::Decreasing(levels)),
            _ => None,
        }
    }

    fn levels(&self) -> &[u8] {
        match self {
            Self::Constant(b) => std::slice::from_ref(b),
            Self::Increasing(v) | Self::Decreasing(v) => v,
        }
    }
}

/// Shape of the client ramp; the per-round scale comes from `clients_per_round`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RampKind {
    Uniform,
    Ascend,
    Descend,
}

keyword_enum!(RampKind, "one of uniform, ascend, descend", {
    RampKind::Uniform => "uniform",
    RampKind::Ascend => "ascend",
    RampKind::Descend => "descend",
});

impl RampKind {
    pub fn with(self, m: usize) -> ClientRamp {
        match self {
            Self::Uniform => ClientRamp::Uniform(m),
            Self::Ascend => ClientRamp::Ascend(m),
            Self::Descend => ClientRamp::Descend(m),
        }
    }
}

/// Written as `equal`, `poly:<degree>` or `noise_free`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PowerSpec(pub PowerKind);

impl fmt::Display for PowerSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            PowerKind::Equal => f.write_str("equal"),
            PowerKind::Poly(d) => write!(f, "poly:{d}"),
            PowerKind::NoiseFree => f.write_str("noise_free"),
        }
    }
}

impl Keyword for PowerSpec {
    const EXPECTED: &'static str = "equal, poly:<degree> or noise_free";
    fn from_keyword(s: &str) -> Option<Self> {
        match s {
            "equal" => Some(Self(PowerKind::Equal)),
            "noise_free" => Some(Self(PowerKind::NoiseFree)),
            _ => s
                .strip_prefix("poly:")?
                .parse()
                .ok()
                .map(|d| Self(PowerKind::Poly(d))),
        }
    }
}

/// Arm settings used by `preset = custom`.
#[derive(Debug, Clone, PartialEq)]
pub struct CustomArm {
    pub bit_schedule: BitSpec,
    pub client_ramp: RampKind,
    pub selection: SelectionMode,
    pub energy_shape: EnergyShape,
    pub aggregation: AggregationKind,
    pub power_policy: PowerSpec,
}

/// Fully resolved experiment description.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub preset: PresetName,
    pub seeds: usize,
    pub base_seed: u64,
    pub last_window: usize,
    pub out_dir: PathBuf,
    /// Worker threads for seed-level parallelism; `0` uses all cores.
    pub workers: usize,

    pub dataset: DatasetKind,
    pub mnist_dir: PathBuf,
    pub synth_samples: usize,
    pub synth_dim: usize,
    pub synth_classes: usize,
    pub synth_separation: f64,
    pub data_seed: u64,
    pub test_fraction: f64,
    pub probe_size: usize,
    pub partition: PartitionKind,
    pub shards_per_client: usize,

    pub model: ModelKind,
    pub hidden_dim: usize,
    pub num_clients: usize,
    pub rounds: usize,
    pub clients_per_round: usize,
    pub local_epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub eval_every: usize,
    pub transmit_delta: bool,

    pub bandwidth_hz: f64,
    pub noise_psd: f64,
    pub deadline_s: f64,
    pub energy_total: f64,
    pub power_total: f64,
    pub g_min: f64,
    pub noise_sigma: f64,

    pub custom: CustomArm,
}

const ARM_KEYS: [&str; 6] = [
    "bit_schedule",
    "client_ramp",
    "selection",
    "energy_shape",
    "aggregation",
    "power_policy",
];

const COMMON_KEYS: [&str; 35] = [
    "preset",
    "seeds",
    "base_seed",
    "last_window",
    "out_dir",
    "workers",
    "dataset",
    "mnist_dir",
    "synth_samples",
    "synth_dim",
    "synth_classes",
    "synth_separation",
    "data_seed",
    "test_fraction",
    "probe_size",
    "partition",
    "shards_per_client",
    "model",
    "hidden_dim",
    "K",
    "T",
    "clients_per_round",
    "local_epochs",
    "batch_size",
    "lr",
    "weight_decay",
    "eval_every",
    "transmit_delta",
    "bandwidth_hz",
    "noise_psd",
    "deadline_s",
    "energy_total",
    "power_total",
    "g_min",
    "noise_sigma",
];

impl ExperimentConfig {
    /// Defaults for a preset before any file overrides.
    pub fn defaults(preset: PresetName) -> Self {
        let mut cfg = Self {
            preset,
            seeds: 10,
            base_seed: 1,
            last_window: 50,
            out_dir: PathBuf::from(format!("runs/{preset}")),
            workers: 0,
            dataset: DatasetKind::Mnist,
            mnist_dir: PathBuf::from("data/mnist"),
            synth_samples: 11000,
            synth_dim: 50,
            synth_classes: 10,
            synth_separation: 9.0,
            data_seed: 1,
            test_fraction: 0.1,
            probe_size: 1000,
            partition: PartitionKind::Iid,
            shards_per_client: 2,
            model: ModelKind::Mlp,
            hidden_dim: 32,
            num_clients: 100,
            rounds: 200,
            clients_per_round: 10,
            local_epochs: 1,
            batch_size: 10,
            learning_rate: 0.05,
            weight_decay: 0.01,
            eval_every: 1,
            transmit_delta: false,
            bandwidth_hz: 1e6,
            noise_psd: 1e-9,
            deadline_s: 1.0,
            energy_total: 0.04,
            power_total: 200.0,
            g_min: crate::wireless::DEFAULT_TRUNCATION_GAIN,
            noise_sigma: 0.4,
            custom: CustomArm {
                bit_schedule: BitSpec::Constant(32),
                client_ramp: RampKind::Uniform,
                selection: SelectionMode::Uniform,
                energy_shape: EnergyShape::Myopic,
                aggregation: AggregationKind::Digital,
                power_policy: PowerSpec(PowerKind::Equal),
            },
        };
        match preset {
            PresetName::Fig4Clients => {
                cfg.partition = PartitionKind::NonIid;
                cfg.clients_per_round = 5;
            }
            PresetName::Fig5Energy => cfg.partition = PartitionKind::NonIid,
            _ => {}
        }
        cfg
    }

    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        Self::parse_with_preset(text, None)
    }

    /// Like [`parse`](Self::parse), with `preset` forced to `forced` when given.
    pub fn parse_with_preset(text: &str, forced: Option<PresetName>) -> Result<Self, ConfigError> {
        let mut entries: BTreeMap<String, (usize, String)> = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let Some((key, value)) = body.split_once('=') else {
                return Err(ConfigError::Syntax {
                    line,
                    text: body.to_string(),
                });
            };
            let (key, value) = (key.trim(), value.trim());
            if key.is_empty() || value.is_empty() || key.contains(char::is_whitespace) {
                return Err(ConfigError::Syntax {
                    line,
                    text: body.to_string(),
                });
            }
            if !COMMON_KEYS.contains(&key) && !ARM_KEYS.contains(&key) {
                return Err(ConfigError::UnknownKey {
                    line,
                    key: key.to_string(),
                });
            }
            if let Some((first, _)) = entries.get(key) {
                return Err(ConfigError::DuplicateKey {
                    line,
                    key: key.to_string(),
                    first: *first,
                });
            }
            entries.insert(key.to_string(), (line, value.to_string()));
        }

        let named = entries.remove("preset");
        let preset = match (forced, named) {
            (Some(p), _) => p,
            (None, Some((line, value))) => keyword(line, "preset", &value)?,
            (None, None) => {
                return Err(ConfigError::MissingKey {
                    key: "preset".into(),
                })
            }
        };
        let mut cfg = Self::defaults(preset);

        for (key, (line, value)) in &entries {
            let line = *line;
            if ARM_KEYS.contains(&key.as_str()) && preset != PresetName::Custom {
                return Err(ConfigError::NotApplicable {
                    line,
                    key: key.clone(),
                    preset,
                });
            }
            let v = value.as_str();
            let k = key.as_str();
            match k {
                "seeds" => cfg.seeds = count(line, k, v)?,
                "base_seed" => cfg.base_seed = number(line, k, v, "an unsigned integer")?,
                "last_window" => cfg.last_window = count(line, k, v)?,
                "out_dir" => cfg.out_dir = PathBuf::from(v),
                "workers" => cfg.workers = number(line, k, v, "a non-negative integer")?,
                "dataset" => cfg.dataset = keyword(line, k, v)?,
                "mnist_dir" => cfg.mnist_dir = PathBuf::from(v),
                "synth_samples" => cfg.synth_samples = count(line, k, v)?,
                "synth_dim" => cfg.synth_dim = count(line, k, v)?,
                "synth_classes" => cfg.synth_classes = count(line, k, v)?,
                "synth_separation" => cfg.synth_separation = real(line, k, v)?,
                "data_seed" => cfg.data_seed = number(line, k, v, "an unsigned integer")?,
                "test_fraction" => cfg.test_fraction = real(line, k, v)?,
                "probe_size" => cfg.probe_size = count(line, k, v)?,
                "partition" => cfg.partition = keyword(line, k, v)?,
                "shards_per_client" => cfg.shards_per_client = count(line, k, v)?,
                "model" => cfg.model = keyword(line, k, v)?,
                "hidden_dim" => cfg.hidden_dim = count(line, k, v)?,
                "K" => cfg.num_clients = count(line, k, v)?,
                "T" => cfg.rounds = count(line, k, v)?,
                "clients_per_round" => {
                    cfg.clients_per_round = number(line, k, v, "a non-negative integer")?
                }
                "local_epochs" => cfg.local_epochs = count(line, k, v)?,
                "batch_size" => cfg.batch_size = count(line, k, v)?,
                "lr" => cfg.learning_rate = real(line, k, v)?,
                "weight_decay" => cfg.weight_decay = real(line, k, v)?,
                "eval_every" => cfg.eval_every = count(line, k, v)?,
                "transmit_delta" => cfg.transmit_delta = boolean(line, k, v)?,
                "bandwidth_hz" => cfg.bandwidth_hz = real(line, k, v)?,
                "noise_psd" => cfg.noise_psd = real(line, k, v)?,
                "deadline_s" => cfg.deadline_s = real(line, k, v)?,
                "energy_total" => cfg.energy_total = real(line, k, v)?,
                "power_total" => cfg.power_total = real(line, k, v)?,
                "g_min" => cfg.g_min = real(line, k, v)?,
                "noise_sigma" => cfg.noise_sigma = real(line, k, v)?,
                "bit_schedule" => {
                    cfg.custom.bit_schedule =
                        BitSpec::parse(v).ok_or_else(|| ConfigError::TypeMismatch {
                            line,
                            key: k.into(),
                            expected: "constant:<b>, increasing:<b,..> or decreasing:<b,..>",
                            found: v.into(),
                        })?
                }
                "client_ramp" => cfg.custom.client_ramp = keyword(line, k, v)?,
                "selection" => cfg.custom.selection = keyword(line, k, v)?,
                "energy_shape" => cfg.custom.energy_shape = keyword(line, k, v)?,
                "aggregation" => cfg.custom.aggregation = keyword(line, k, v)?,
                "power_policy" => cfg.custom.power_policy = keyword(line, k, v)?,
                _ => unreachable!("key list checked above"),
            }
        }

        cfg.validate()
            .map_err(|(key, reason)| ConfigError::Invalid {
                line: entries.get(key).map(|e| e.0),
                key: key.to_string(),
                reason,
            })?;
        Ok(cfg)
    }

    /// Range checks that do not need the dataset.
    fn validate(&self) -> Result<(), (&'static str, String)> {
        let positive = |key: &'static str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err((key, format!("must be positive and finite, got {v}")))
            }
        };
        positive("lr", self.learning_rate)?;
        positive("bandwidth_hz", self.bandwidth_hz)?;
        positive("noise_psd", self.noise_psd)?;
        positive("deadline_s", self.deadline_s)?;
        positive("energy_total", self.energy_total)?;
        positive("power_total", self.power_total)?;
        if !(self.weight_decay >= 0.0 && self.weight_decay * self.learning_rate < 1.0) {
            return Err(("weight_decay", "needs 0 <= weight_decay < 1/lr".into()));
        }
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return Err(("test_fraction", "must lie strictly between 0 and 1".into()));
        }
        if !(self.g_min >= 0.0 && self.g_min.is_finite()) {
            return Err(("g_min", "must be non-negative".into()));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(("noise_sigma", "must be non-negative".into()));
        }
        if !(self.synth_separation >= 0.0 && self.synth_separation.is_finite()) {
            return Err(("synth_separation", "must be non-negative".into()));
        }
        if self.synth_classes < 2 {
            return Err(("synth_classes", "needs at least 2 classes".into()));
        }
        let peak = match (self.preset, self.custom.client_ramp) {
            (PresetName::Fig4Clients, _)
            | (PresetName::Custom, RampKind::Ascend | RampKind::Descend) => {
                2 * self.clients_per_round
            }
            _ => self.clients_per_round,
        };
        if peak > self.num_clients {
            return Err((
                "clients_per_round",
                format!(
                    "schedule peaks at {peak} clients but K = {}",
                    self.num_clients
                ),
            ));
        }
        if self.preset == PresetName::Custom {
            let levels = self.custom.bit_schedule.levels();
            if levels.is_empty() || levels.iter().any(|&b| !(1..=32).contains(&b)) {
                return Err(("bit_schedule", "bit-widths must lie in [1, 32]".into()));
            }
            if levels.len() > self.rounds {
                return Err((
                    "bit_schedule",
                    format!("{} levels need at least as many rounds", levels.len()),
                ));
            }
        }
        Ok(())
    }

    /// Every resolved value, one `key = value` per line.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut put = |k: &str, v: &dyn fmt::Display| out.push_str(&format!("{k} = {v}\n"));
        put("preset", &self.preset);
        put("seeds", &self.seeds);
        put("base_seed", &self.base_seed);
        put("last_window", &self.last_window);
        put("out_dir", &self.out_dir.display());
        put("workers", &self.workers);
        put("dataset", &self.dataset);
        put("mnist_dir", &self.mnist_dir.display());
        put("synth_samples", &self.synth_samples);
        put("synth_dim", &self.synth_dim);
        put("synth_classes", &self.synth_classes);
        put("synth_separation", &self.synth_separation);
        put("data_seed", &self.data_seed);
        put("test_fraction", &self.test_fraction);
        put("probe_size", &self.probe_size);
        put("partition", &self.partition);
        put("shards_per_client", &self.shards_per_client);
        put("model", &self.model);
        put("hidden_dim", &self.hidden_dim);
        put("K", &self.num_clients);
        put("T", &self.rounds);
        put("clients_per_round", &self.clients_per_round);
        put("local_epochs", &self.local_epochs);
        put("batch_size", &self.batch_size);
        put("lr", &self.learning_rate);
        put("weight_decay", &self.weight_decay);
        put("eval_every", &self.eval_every);
        put("transmit_delta", &self.transmit_delta);
        put("bandwidth_hz", &self.bandwidth_hz);
        put("noise_psd", &self.noise_psd);
        put("deadline_s", &self.deadline_s);
        put("energy_total", &self.energy_total);
        put("power_total", &self.power_total);
        put("g_min", &self.g_min);
        put("noise_sigma", &self.noise_sigma);
        if self.preset == PresetName::Custom {
            let c = &self.custom;
            put("bit_schedule", &c.bit_schedule);
            put("client_ramp", &c.client_ramp);
            put("selection", &c.selection);
            put("energy_shape", &c.energy_shape);
            put("aggregation", &c.aggregation);
            put("power_policy", &c.power_policy);
        }
        out
    }

    /// Applies [`SEED_ENV`] if set; returns the overriding value.
    pub fn apply_env_seed(&mut self) -> Result<Option<u64>, ConfigError> {
        match std::env::var(SEED_ENV) {
            Ok(v) => {
                let seed = v.trim().parse().map_err(|_| ConfigError::Invalid {
                    line: None,
                    key: SEED_ENV.into(),
                    reason: format!("expected an unsigned integer, found `{v}`"),
                })?;
                self.base_seed = seed;
                Ok(Some(seed))
            }
            Err(_) => Ok(None),
        }
    }
}

fn keyword<T: Keyword>(line: usize, key: &str, v: &str) -> Result<T, ConfigError> {
    T::from_keyword(v).ok_or_else(|| ConfigError::TypeMismatch {
        line,
        key: key.into(),
        expected: T::EXPECTED,
        found: v.into(),
    })
}

fn number<T: FromStr>(
    line: usize,
    key: &str,
    v: &str,
    expected: &'static str,
) -> Result<T, ConfigError> {
    if let Ok(signed) = v.parse::<i64>() {
        if signed < 0 {
            return Err(ConfigError::Invalid {
                line: Some(line),
                key: key.into(),
                reason: format!("must be non-negative, got {signed}"),
            });
        }
    }
    v.parse().map_err(|_| ConfigError::TypeMismatch {
        line,
        key: key.into(),
        expected,
        found: v.into(),
    })
}

/// Integer that must be at least 1.
fn count(line: usize, key: &str, v: &str) -> Result<usize, ConfigError> {
    let n: usize = number(line, key, v, "a positive integer")?;
    if n == 0 {
        return Err(ConfigError::Invalid {
            line: Some(line),
            key: key.into(),
            reason: "must be at least 1".into(),
        });
    }
    Ok(n)
}

fn real(line: usize, key: &str, v: &str) -> Result<f64, ConfigError> {
    v.parse().map_err(|_| ConfigError::TypeMismatch {
        line,
        key: key.into(),
        expected: "a number",
        found: v.into(),
    })
}

fn boolean(line: usize, key: &str, v: &str) -> Result<bool, ConfigError> {
    v.parse().map_err(|_| ConfigError::TypeMismatch {
        line,
        key: key.into(),
        expected: "true or false",
        found: v.into(),
    })
}
