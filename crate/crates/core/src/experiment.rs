//! Preset arms, the multi-seed runner and CSV trace/summary output.
//!
//! Layout of an output directory:
//!
//! ```text
//! meta.txt                 resolved config, re-parseable
//! summary.csv              one row per arm
//! <arm>/trace_<seed>.csv   per-round ledger of one seed
//! <arm>/curve.csv          per-round mean and std across seeds
//! ```

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;
use thiserror::Error;

use crate::config::{
    AggregationKind, BitSpec, ConfigError, DatasetKind, ExperimentConfig, ModelKind, PartitionKind,
    PresetName,
};
use crate::data::{
    load_mnist_idx, partition_iid, partition_noniid_shards, synth_classification, train_test_split,
    DataError, Dataset,
};
use crate::federation::{
    run_federation, AggregationMode, FederationConfig, FederationData, FederationError,
    RoundRecord, SelectionMode,
};
use crate::learner::{ModelArch, TrainConfig};
use crate::schedule::{
    energy_schedule, ramp_clients, staircase_bits, BitSchedule, ClientRamp, EnergyShape, PowerKind,
    PowerPolicy, PowerSchedule, ScheduleError,
};
use crate::wireless::LinkBudget;

pub const TRACE_HEADER: [&str; 7] = [
    "round",
    "bits_used",
    "num_clients",
    "energy_J",
    "rho",
    "train_loss",
    "test_acc",
];

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
    #[error("arm {arm}, seed {seed}: {source}")]
    Run {
        arm: String,
        seed: u64,
        source: FederationError,
    },
    #[error(transparent)]
    Federation(#[from] FederationError),
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("{path}: {message}")]
    Trace { path: PathBuf, message: String },
    #[error("thread pool: {0}")]
    Pool(String),
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> ExperimentError + '_ {
    move |e| ExperimentError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

/// One curve of a preset.
#[derive(Debug, Clone)]
pub struct Arm {
    pub name: String,
    pub cfg: FederationConfig<f64>,
}

pub fn model_arch(cfg: &ExperimentConfig) -> ModelArch {
    let (input_dim, num_classes) = match cfg.dataset {
        DatasetKind::Mnist => (784, 10),
        DatasetKind::Synthetic => (cfg.synth_dim, cfg.synth_classes),
    };
    match cfg.model {
        ModelKind::Logistic => ModelArch::Logistic {
            input_dim,
            num_classes,
        },
        ModelKind::Mlp => ModelArch::Mlp {
            input_dim,
            hidden_dim: cfg.hidden_dim,
            num_classes,
        },
    }
}

fn bit_schedule(spec: &BitSpec, rounds: usize) -> Result<BitSchedule, ScheduleError> {
    let staircase = |levels: &[u8]| {
        let frac = 1.0 / levels.len() as f64;
        let pairs: Vec<(u8, f64)> = levels.iter().map(|&b| (b, frac)).collect();
        staircase_bits(&pairs, rounds)
    };
    match spec {
        BitSpec::Constant(b) => BitSchedule::constant(*b, rounds),
        BitSpec::Increasing(levels) => staircase(levels),
        BitSpec::Decreasing(levels) => Ok(staircase(levels)?.reversed()),
    }
}

/// Expands a config into its arms, in output order.
pub fn build_arms(cfg: &ExperimentConfig) -> Result<Vec<Arm>, ExperimentError> {
    let t = cfg.rounds;
    let m = cfg.clients_per_round;
    let base = FederationConfig {
        arch: model_arch(cfg),
        rounds: t,
        num_clients: cfg.num_clients,
        train: TrainConfig {
            local_epochs: cfg.local_epochs,
            batch_size: cfg.batch_size,
            learning_rate: cfg.learning_rate,
            weight_decay: cfg.weight_decay,
            seed: 0,
        },
        bits: BitSchedule::constant(32, t)?,
        clients: ramp_clients(ClientRamp::Uniform(m), t)?,
        energy: None,
        selection: SelectionMode::Uniform,
        aggregation: AggregationMode::Digital,
        link: LinkBudget {
            bandwidth_hz: cfg.bandwidth_hz,
            noise_psd: cfg.noise_psd,
            deadline_s: cfg.deadline_s,
        },
        eval_every: cfg.eval_every,
        transmit_delta: cfg.transmit_delta,
    };
    let analog = |kind: PowerKind| -> Result<AggregationMode<f64>, ScheduleError> {
        Ok(AggregationMode::Analog {
            power: PowerSchedule::new(
                PowerPolicy {
                    kind,
                    total_power_budget: cfg.power_total,
                },
                t,
            )?,
            g_min: cfg.g_min,
            noise_sigma: cfg.noise_sigma,
        })
    };
    let arm =
        |name: &str, f: &dyn Fn(&mut FederationConfig<f64>) -> Result<(), ExperimentError>| {
            let mut c = base.clone();
            f(&mut c)?;
            Ok::<_, ExperimentError>(Arm {
                name: name.to_string(),
                cfg: c,
            })
        };
    let staircase = [1u8, 2, 3].to_vec();

    let arms = match cfg.preset {
        PresetName::Fig2Bits => {
            let mut arms = Vec::new();
            for b in [32u8, 3, 2, 1] {
                arms.push(arm(&format!("{b}bit"), &|c| {
                    c.bits = BitSchedule::constant(b, t)?;
                    Ok(())
                })?);
            }
            arms.push(arm("increasing", &|c| {
                c.bits = bit_schedule(&BitSpec::Increasing(staircase.clone()), t)?;
                Ok(())
            })?);
            arms.push(arm("decreasing", &|c| {
                c.bits = bit_schedule(&BitSpec::Decreasing(staircase.clone()), t)?;
                Ok(())
            })?);
            arms
        }
        PresetName::Fig4Clients => [
            ("uniform", ClientRamp::Uniform(m)),
            ("ascend", ClientRamp::Ascend(m)),
            ("descend", ClientRamp::Descend(m)),
        ]
        .into_iter()
        .map(|(name, ramp)| {
            arm(name, &|c| {
                c.clients = ramp_clients(ramp, t)?;
                Ok(())
            })
        })
        .collect::<Result<_, _>>()?,
        PresetName::Fig5Energy => vec![
            arm("select_all", &|c| {
                c.selection = SelectionMode::SelectAll;
                Ok(())
            })?,
            arm("myopic", &|c| {
                c.selection = SelectionMode::MyopicEnergy;
                c.energy = Some(energy_schedule(EnergyShape::Myopic, cfg.energy_total, t)?);
                Ok(())
            })?,
            arm("rationed", &|c| {
                c.selection = SelectionMode::RationedEnergy;
                c.energy = Some(energy_schedule(
                    EnergyShape::RationedQuadratic,
                    cfg.energy_total,
                    t,
                )?);
                Ok(())
            })?,
        ],
        PresetName::Fig6Power => [
            ("equal", PowerKind::Equal),
            ("poly2", PowerKind::Poly(2)),
            ("noise_free", PowerKind::NoiseFree),
        ]
        .into_iter()
        .map(|(name, kind)| {
            arm(name, &|c| {
                c.aggregation = analog(kind)?;
                Ok(())
            })
        })
        .collect::<Result<_, _>>()?,
        PresetName::Custom => {
            let a = &cfg.custom;
            vec![arm("custom", &|c| {
                c.bits = bit_schedule(&a.bit_schedule, t)?;
                c.clients = ramp_clients(a.client_ramp.with(m), t)?;
                c.selection = a.selection;
                if a.selection.uses_energy_budget() {
                    c.energy = Some(energy_schedule(a.energy_shape, cfg.energy_total, t)?);
                }
                if a.aggregation == AggregationKind::Analog {
                    c.aggregation = analog(a.power_policy.0)?;
                }
                Ok(())
            })?]
        }
    };
    for a in &arms {
        a.cfg.validate().map_err(|source| ExperimentError::Run {
            arm: a.name.clone(),
            seed: cfg.base_seed,
            source,
        })?;
    }
    Ok(arms)
}

/// Train/test/probe sets shared by every seed.
#[derive(Debug, Clone)]
pub struct PreparedData {
    pub train: Arc<Dataset<f64>>,
    pub test: Dataset<f64>,
    pub probe: Dataset<f64>,
}

pub const MNIST_IMAGES: &str = "train-images-idx3-ubyte";
pub const MNIST_LABELS: &str = "train-labels-idx1-ubyte";

pub fn prepare_data(cfg: &ExperimentConfig) -> Result<PreparedData, ExperimentError> {
    let corpus: Dataset<f64> = match cfg.dataset {
        DatasetKind::Mnist => load_mnist_idx(
            cfg.mnist_dir.join(MNIST_IMAGES),
            cfg.mnist_dir.join(MNIST_LABELS),
        )?,
        DatasetKind::Synthetic => synth_classification(
            cfg.synth_samples,
            cfg.synth_dim,
            cfg.synth_classes,
            cfg.synth_separation,
            cfg.data_seed,
        )?,
    };
    let (train, test) = train_test_split(&corpus, cfg.test_fraction, cfg.data_seed)?;
    let probe_idx: Vec<usize> = (0..cfg.probe_size.min(train.len())).collect();
    let probe = train.subset(&probe_idx)?;
    Ok(PreparedData {
        train: Arc::new(train),
        test,
        probe,
    })
}

/// Seeds of a run: `base_seed, base_seed + 1, ...`.
pub fn seed_list(cfg: &ExperimentConfig) -> Vec<u64> {
    (0..cfg.seeds as u64)
        .map(|i| cfg.base_seed.wrapping_add(i))
        .collect()
}

/// Client partition for one seed.
pub fn client_data(
    cfg: &ExperimentConfig,
    data: &PreparedData,
    seed: u64,
) -> Result<FederationData<f64>, ExperimentError> {
    let clients = match cfg.partition {
        PartitionKind::Iid => partition_iid(&data.train, cfg.num_clients, seed)?,
        PartitionKind::NonIid => {
            partition_noniid_shards(&data.train, cfg.num_clients, cfg.shards_per_client, seed)?
        }
    };
    Ok(FederationData {
        clients,
        test: data.test.clone(),
        train_probe: data.probe.clone(),
    })
}

/// All traces of one arm, in seed order.
#[derive(Debug, Clone)]
pub struct ArmRun {
    pub name: String,
    pub seeds: Vec<u64>,
    pub traces: Vec<Vec<TraceRow>>,
}

/// Runs every (arm, seed) pair on a pool of `cfg.workers` threads.
pub fn run_arms(
    cfg: &ExperimentConfig,
    arms: &[Arm],
    data: &PreparedData,
) -> Result<Vec<ArmRun>, ExperimentError> {
    let seeds = seed_list(cfg);
    let partitions: Vec<FederationData<f64>> = seeds
        .iter()
        .map(|&s| client_data(cfg, data, s))
        .collect::<Result<_, _>>()?;
    let jobs: Vec<(usize, usize)> = (0..arms.len())
        .flat_map(|a| (0..seeds.len()).map(move |s| (a, s)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| ExperimentError::Pool(e.to_string()))?;
    let results: Vec<Result<Vec<TraceRow>, ExperimentError>> = pool.install(|| {
        jobs.par_iter()
            .map(|&(a, s)| {
                run_federation(&arms[a].cfg, &partitions[s], seeds[s])
                    .map(|recs| recs.iter().map(TraceRow::from).collect())
                    .map_err(|source| ExperimentError::Run {
                        arm: arms[a].name.clone(),
                        seed: seeds[s],
                        source,
                    })
            })
            .collect()
    });
    let mut results = results.into_iter();
    arms.iter()
        .map(|arm| {
            let traces = (0..seeds.len())
                .map(|_| results.next().expect("one result per job"))
                .collect::<Result<_, _>>()?;
            Ok(ArmRun {
                name: arm.name.clone(),
                seeds: seeds.clone(),
                traces,
            })
        })
        .collect()
}

/// One CSV row of a trace.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub round: usize,
    pub bits_used: u64,
    pub num_clients: usize,
    pub energy_j: f64,
    pub rho: Option<f64>,
    pub train_loss: Option<f64>,
    pub test_acc: Option<f64>,
}

impl From<&RoundRecord> for TraceRow {
    fn from(r: &RoundRecord) -> Self {
        Self {
            round: r.round,
            bits_used: r.bits_used,
            num_clients: r.clients_selected.len(),
            energy_j: r.energy_j,
            rho: r.rho,
            train_loss: r.train_loss,
            test_acc: r.test_accuracy,
        }
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_trace<W: Write>(out: W, rows: &[TraceRow]) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRACE_HEADER)?;
    for r in rows {
        w.write_record([
            r.round.to_string(),
            r.bits_used.to_string(),
            r.num_clients.to_string(),
            r.energy_j.to_string(),
            opt(r.rho),
            opt(r.train_loss),
            opt(r.test_acc),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_trace(path: &Path) -> Result<Vec<TraceRow>, ExperimentError> {
    let bad = |message: String| ExperimentError::Trace {
        path: path.to_path_buf(),
        message,
    };
    let mut rdr = csv::Reader::from_path(path).map_err(|e| bad(e.to_string()))?;
    let header = rdr.headers().map_err(|e| bad(e.to_string()))?;
    if header.iter().ne(TRACE_HEADER) {
        return Err(bad(format!(
            "unexpected header `{}`",
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let line = i + 2;
        let field = |j: usize| rec.get(j).unwrap_or("");
        let num = |j: usize| -> Result<f64, ExperimentError> {
            field(j).parse().map_err(|_| {
                bad(format!(
                    "line {line}: bad {} `{}`",
                    TRACE_HEADER[j],
                    field(j)
                ))
            })
        };
        let maybe = |j: usize| -> Result<Option<f64>, ExperimentError> {
            if field(j).is_empty() {
                Ok(None)
            } else {
                num(j).map(Some)
            }
        };
        let int = |j: usize| -> Result<u64, ExperimentError> {
            field(j).parse().map_err(|_| {
                bad(format!(
                    "line {line}: bad {} `{}`",
                    TRACE_HEADER[j],
                    field(j)
                ))
            })
        };
        rows.push(TraceRow {
            round: int(0)? as usize,
            bits_used: int(1)?,
            num_clients: int(2)? as usize,
            energy_j: num(3)?,
            rho: maybe(4)?,
            train_loss: maybe(5)?,
            test_acc: maybe(6)?,
        });
    }
    Ok(rows)
}

/// Sample mean and (n−1) standard deviation; std is 0 for a single value.
pub fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Mean test accuracy over the last `min(last, T)` rounds; unevaluated rounds are skipped.
pub fn final_accuracy(trace: &[TraceRow], last: usize) -> f64 {
    let rounds = trace.len();
    let window = &trace[rounds - last.min(rounds)..];
    let accs: Vec<f64> = window.iter().filter_map(|r| r.test_acc).collect();
    accs.iter().sum::<f64>() / accs.len() as f64
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurvePoint {
    pub round: usize,
    pub acc_mean: f64,
    pub acc_std: f64,
    pub loss_mean: f64,
    pub loss_std: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArmSummary {
    pub name: String,
    pub window: usize,
    /// Final accuracy of each seed, in seed order.
    pub finals: Vec<f64>,
    pub final_mean: f64,
    pub final_std: f64,
    pub total_bits_mean: f64,
    pub total_energy_mean: f64,
    pub curve: Vec<CurvePoint>,
}

impl ArmSummary {
    /// Cross-seed accuracy mean at a 1-indexed round.
    pub fn acc_at(&self, round: usize) -> Option<f64> {
        self.curve
            .iter()
            .find(|p| p.round == round)
            .map(|p| p.acc_mean)
    }
}

pub fn summarize(name: &str, traces: &[Vec<TraceRow>], last: usize) -> ArmSummary {
    assert!(!traces.is_empty(), "summarize needs at least one trace");
    let rounds = traces.iter().map(Vec::len).min().unwrap_or(0);
    let window = last.min(rounds);
    let finals: Vec<f64> = traces
        .iter()
        .map(|t| final_accuracy(&t[..rounds], last))
        .collect();
    let (final_mean, final_std) = mean_std(&finals);
    let totals = |f: &dyn Fn(&TraceRow) -> f64| {
        mean_std(
            &traces
                .iter()
                .map(|t| t.iter().map(f).sum())
                .collect::<Vec<f64>>(),
        )
        .0
    };
    let curve = (0..rounds)
        .filter_map(|i| {
            let accs: Option<Vec<f64>> = traces.iter().map(|t| t[i].test_acc).collect();
            let losses: Option<Vec<f64>> = traces.iter().map(|t| t[i].train_loss).collect();
            let (acc_mean, acc_std) = mean_std(&accs?);
            let (loss_mean, loss_std) = losses.map_or((f64::NAN, f64::NAN), |l| mean_std(&l));
            Some(CurvePoint {
                round: traces[0][i].round,
                acc_mean,
                acc_std,
                loss_mean,
                loss_std,
            })
        })
        .collect();
    ArmSummary {
        name: name.to_string(),
        window,
        final_mean,
        final_std,
        finals,
        total_bits_mean: totals(&|r| r.bits_used as f64),
        total_energy_mean: totals(&|r| r.energy_j),
        curve,
    }
}

pub fn write_summary<W: Write>(out: W, arms: &[ArmSummary]) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "arm",
        "seeds",
        "window",
        "final_acc_mean",
        "final_acc_std",
        "total_bits_mean",
        "total_energy_J_mean",
    ])?;
    for a in arms {
        w.write_record([
            a.name.clone(),
            a.finals.len().to_string(),
            a.window.to_string(),
            a.final_mean.to_string(),
            a.final_std.to_string(),
            a.total_bits_mean.to_string(),
            a.total_energy_mean.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_curve<W: Write>(out: W, curve: &[CurvePoint]) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["round", "acc_mean", "acc_std", "loss_mean", "loss_std"])?;
    for p in curve {
        w.write_record([
            p.round.to_string(),
            p.acc_mean.to_string(),
            p.acc_std.to_string(),
            p.loss_mean.to_string(),
            p.loss_std.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn write_file(
    path: &Path,
    write: impl FnOnce(&mut Vec<u8>) -> Result<(), csv::Error>,
) -> Result<(), ExperimentError> {
    let mut buf = Vec::new();
    write(&mut buf).map_err(|e| ExperimentError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    fs::write(path, buf).map_err(io_err(path))
}

/// Header lines of `meta.txt` followed by the resolved config.
pub fn meta_text(cfg: &ExperimentConfig, arms: &[Arm], seed_override: Option<u64>) -> String {
    let mut s = format!("# rationfl {}\n", env!("CARGO_PKG_VERSION"));
    s.push_str(&format!(
        "# arms: {}\n",
        arms.iter()
            .map(|a| a.name.as_str())
            .collect::<Vec<_>>()
            .join(", ")
    ));
    s.push_str(&format!(
        "# seeds: {}\n",
        seed_list(cfg)
            .iter()
            .map(u64::to_string)
            .collect::<Vec<_>>()
            .join(", ")
    ));
    if let Some(seed) = seed_override {
        s.push_str(&format!(
            "# base_seed = {seed} taken from {}\n",
            crate::config::SEED_ENV
        ));
    }
    s.push_str(&cfg.to_text());
    s
}

/// Result of [`run_experiment`].
#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub runs: Vec<ArmRun>,
    pub summaries: Vec<ArmSummary>,
}

/// Runs every arm and seed and writes the output directory `cfg.out_dir`.
pub fn run_experiment(
    cfg: &ExperimentConfig,
    seed_override: Option<u64>,
) -> Result<ExperimentOutput, ExperimentError> {
    let arms = build_arms(cfg)?;
    let data = prepare_data(cfg)?;
    let runs = run_arms(cfg, &arms, &data)?;
    let out = &cfg.out_dir;
    fs::create_dir_all(out).map_err(io_err(out))?;
    fs::write(out.join("meta.txt"), meta_text(cfg, &arms, seed_override)).map_err(io_err(out))?;
    let mut summaries = Vec::with_capacity(runs.len());
    for run in &runs {
        let dir = out.join(&run.name);
        fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        for (seed, trace) in run.seeds.iter().zip(&run.traces) {
            write_file(&dir.join(format!("trace_{seed}.csv")), |b| {
                write_trace(b, trace)
            })?;
        }
        let summary = summarize(&run.name, &run.traces, cfg.last_window);
        write_file(&dir.join("curve.csv"), |b| write_curve(b, &summary.curve))?;
        summaries.push(summary);
    }
    write_file(&out.join("summary.csv"), |b| write_summary(b, &summaries))?;
    Ok(ExperimentOutput { runs, summaries })
}

/// Recomputes summaries from the traces under `dir`.
///
/// Arms are the subdirectories holding `trace_*.csv` files (sorted by name),
/// or `dir` itself if it holds traces directly. Each arm's `curve.csv` and
/// the top-level `summary.csv` are rewritten.
pub fn summarize_dir(dir: &Path, last: usize) -> Result<Vec<ArmSummary>, ExperimentError> {
    let traces_in = |d: &Path| -> Result<Vec<PathBuf>, ExperimentError> {
        let mut v: Vec<(u64, PathBuf)> = Vec::new();
        for entry in fs::read_dir(d).map_err(io_err(d))? {
            let path = entry.map_err(io_err(d))?.path();
            let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("");
            if let Some(seed) = name
                .strip_prefix("trace_")
                .and_then(|n| n.strip_suffix(".csv"))
            {
                if let Ok(seed) = seed.parse() {
                    v.push((seed, path));
                }
            }
        }
        v.sort();
        Ok(v.into_iter().map(|x| x.1).collect())
    };

    let mut arm_dirs: Vec<(String, PathBuf)> = Vec::new();
    let own = traces_in(dir)?;
    if own.is_empty() {
        let mut subdirs: Vec<PathBuf> = fs::read_dir(dir)
            .map_err(io_err(dir))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_dir())
            .collect();
        subdirs.sort();
        for d in subdirs {
            let name = d
                .file_name()
                .and_then(|n| n.to_str())
                .unwrap_or("")
                .to_string();
            arm_dirs.push((name, d));
        }
        if let Some(order) = arm_order(dir) {
            arm_dirs.sort_by_key(|(name, _)| {
                order.iter().position(|o| o == name).unwrap_or(usize::MAX)
            });
        }
    } else {
        let name = dir
            .file_name()
            .and_then(|n| n.to_str())
            .unwrap_or("arm")
            .to_string();
        arm_dirs.push((name, dir.to_path_buf()));
    }

    let mut summaries = Vec::new();
    for (name, d) in arm_dirs {
        let files = traces_in(&d)?;
        if files.is_empty() {
            continue;
        }
        let traces: Vec<Vec<TraceRow>> = files
            .iter()
            .map(|f| read_trace(f))
            .collect::<Result<_, _>>()?;
        let summary = summarize(&name, &traces, last);
        write_file(&d.join("curve.csv"), |b| write_curve(b, &summary.curve))?;
        summaries.push(summary);
    }
    if summaries.is_empty() {
        return Err(ExperimentError::Trace {
            path: dir.to_path_buf(),
            message: "no trace_<seed>.csv files found".into(),
        });
    }
    write_file(&dir.join("summary.csv"), |b| write_summary(b, &summaries))?;
    Ok(summaries)
}

/// Arm order recorded in `meta.txt`, if present.
fn arm_order(dir: &Path) -> Option<Vec<String>> {
    let meta = fs::read_to_string(dir.join("meta.txt")).ok()?;
    let line = meta.lines().find_map(|l| l.strip_prefix("# arms: "))?;
    Some(line.split(", ").map(str::to_string).collect())
}
