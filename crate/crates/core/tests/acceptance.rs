//! Acceptance gate: the four preset studies on the synthetic workload plus
//! the property suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use num_traits::{ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, Normal};

use rationfl::config::ExperimentConfig;
use rationfl::data::{synth_classification, ClientDataset};
use rationfl::experiment::{read_trace, run_experiment, ArmSummary, TraceRow};
use rationfl::federation::{
    select_energy_constrained, split_band_energies, AggregationMode, FederationConfig,
    FederationData, SelectionMode,
};
use rationfl::learner::{
    descent_probability, init_model, local_train, ModelArch, ParamVector, TrainConfig,
};
use rationfl::quant::{
    dequantize, pack_codes, packed_len, quantize_stochastic, step, unpack_codes,
    RANGE_METADATA_BITS,
};
use rationfl::rng::{derive_seed, Stream};
use rationfl::schedule::{
    energy_schedule, ramp_clients, staircase_bits, BitSchedule, ClientRamp, EnergyShape, PowerKind,
    PowerPolicy, PowerSchedule,
};
use rationfl::wireless::{analog_aggregate, AnalogPower, LinkBudget};
use rationfl::Exact;

struct Gate {
    results: Vec<(String, bool)>,
}

impl Gate {
    fn record(&mut self, id: &str, ok: bool, detail: String) {
        println!("{} {id}: {detail}", if ok { "PASS" } else { "FAIL" });
        self.results.push((id.to_string(), ok));
    }
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

struct Study {
    summaries: BTreeMap<String, ArmSummary>,
    /// Traces re-read from the written CSVs, per arm, in seed order.
    ledgers: BTreeMap<String, Vec<Vec<TraceRow>>>,
    cfg: ExperimentConfig,
    secs: f64,
    _dir: tempfile::TempDir,
}

fn run_study(file: &str) -> Study {
    let mut cfg = ExperimentConfig::from_path(&fixture(file)).expect("fixture parses");
    let dir = tempfile::tempdir().unwrap();
    cfg.out_dir = dir.path().to_path_buf();
    let t0 = Instant::now();
    let out = run_experiment(&cfg, None).expect("study runs");
    let secs = t0.elapsed().as_secs_f64();
    let mut ledgers = BTreeMap::new();
    for run in &out.runs {
        let traces = run
            .seeds
            .iter()
            .map(|s| {
                read_trace(&dir.path().join(&run.name).join(format!("trace_{s}.csv"))).unwrap()
            })
            .collect();
        ledgers.insert(run.name.clone(), traces);
    }
    let summaries = out
        .summaries
        .into_iter()
        .map(|s| (s.name.clone(), s))
        .collect();
    Study {
        summaries,
        ledgers,
        cfg,
        secs,
        _dir: dir,
    }
}

fn pooled(a: &ArmSummary, b: &ArmSummary) -> f64 {
    ((a.final_std * a.final_std + b.final_std * b.final_std) / 2.0).sqrt()
}

fn fmt_arm(a: &ArmSummary) -> String {
    format!("{} {:.4}±{:.4}", a.name, a.final_mean, a.final_std)
}

fn bits_study(gate: &mut Gate) {
    let s = run_study("fig2_bits.cfg");
    let arm = |n: &str| &s.summaries[n];
    let (base, b3, b2, b1, inc, dec) = (
        arm("32bit"),
        arm("3bit"),
        arm("2bit"),
        arm("1bit"),
        arm("increasing"),
        arm("decreasing"),
    );

    // Payload bits exclude the per-upload range header.
    let num_params = rationfl::experiment::model_arch(&s.cfg).num_params() as u64;
    let payload = |name: &str, bits: u64| -> (u64, u64) {
        let mut sum = (0u64, 0u64);
        for trace in &s.ledgers[name] {
            for r in trace {
                let header = if bits < 32 {
                    r.num_clients as u64 * RANGE_METADATA_BITS
                } else {
                    0
                };
                sum.0 += r.bits_used - header;
                sum.1 += r.num_clients as u64 * num_params;
            }
        }
        sum
    };
    let (p3, n3) = payload("3bit", 3);
    let (p32, n32) = payload("32bit", 32);
    let ratio = Exact::new(p3 as i128, p32 as i128);
    let ratio_ok = ratio == Exact::new(3, 32) && n3 == n32;
    let fidelity = b3.final_mean / base.final_mean;
    gate.record(
        "A1",
        fidelity >= 0.985 && ratio_ok && s.secs <= 900.0,
        format!(
            "3-bit/32-bit accuracy {:.4} (need >= 0.985), payload ratio {ratio} (need 3/32), {} vs {}, {:.1}s",
            fidelity,
            fmt_arm(b3),
            fmt_arm(base),
            s.secs
        ),
    );

    let above_2 = inc.final_mean - b2.final_mean;
    let gap_3 = (inc.final_mean - b3.final_mean).abs();
    let dec_gap_1 = (dec.final_mean - b1.final_mean).abs();
    let a2 = above_2 >= pooled(inc, b2)
        && gap_3 <= pooled(inc, b3)
        && dec.final_mean <= b2.final_mean
        && dec_gap_1 <= 2.0 * pooled(dec, b1);
    gate.record(
        "A2",
        a2,
        format!(
            "increasing-2bit {:.4} (std {:.4}), |increasing-3bit| {:.4} (std {:.4}), decreasing<=2bit {}, |decreasing-1bit| {:.4} (2 std {:.4}); {}, {}",
            above_2,
            pooled(inc, b2),
            gap_3,
            pooled(inc, b3),
            dec.final_mean <= b2.final_mean,
            dec_gap_1,
            2.0 * pooled(dec, b1),
            fmt_arm(inc),
            fmt_arm(dec)
        ),
    );

    let q = s.cfg.rounds / 4;
    let (qi, q2) = (inc.acc_at(q).unwrap(), b2.acc_at(q).unwrap());
    gate.record(
        "A3",
        qi < q2,
        format!("round {q}: increasing {qi:.4} < 2-bit {q2:.4}"),
    );
}

fn clients_study(gate: &mut Gate) {
    let s = run_study("fig4_clients.cfg");
    let (u, a, d) = (
        &s.summaries["uniform"],
        &s.summaries["ascend"],
        &s.summaries["descend"],
    );
    let gap = a.final_mean - d.final_mean;
    let ok = gap >= pooled(a, d)
        && a.final_mean >= u.final_mean - u.final_std
        && a.final_std < d.final_std;
    gate.record(
        "A4",
        ok,
        format!(
            "ascend-descend {gap:.4} (pooled std {:.4}), ascend >= uniform-std {}, std ascend {:.4} < descend {:.4}; {}, {}, {}",
            pooled(a, d),
            a.final_mean >= u.final_mean - u.final_std,
            a.final_std,
            d.final_std,
            fmt_arm(u),
            fmt_arm(a),
            fmt_arm(d)
        ),
    );
}

fn energy_study(gate: &mut Gate) {
    let s = run_study("fig5_energy.cfg");
    let (all, my, ra) = (
        &s.summaries["select_all"],
        &s.summaries["myopic"],
        &s.summaries["rationed"],
    );
    let total = s.cfg.energy_total;
    let t = s.cfg.rounds;
    let schedule = |shape| energy_schedule(shape, total, t).unwrap().budget_per_round;
    let (flat, rationed) = (
        schedule(EnergyShape::Myopic),
        schedule(EnergyShape::RationedQuadratic),
    );
    let spent = |name: &str| -> Vec<f64> {
        s.ledgers[name]
            .iter()
            .map(|tr| tr.iter().map(|r| r.energy_j).sum())
            .collect()
    };
    let eps = 1e-12;
    let within = |name: &str, budget: &[f64]| {
        s.ledgers[name].iter().all(|tr| {
            tr.iter()
                .all(|r| r.energy_j <= budget[r.round - 1] * (1.0 + eps))
        })
    };
    let (e_all, e_ra) = (spent("select_all"), spent("rationed"));
    let half = e_ra.iter().zip(&e_all).all(|(r, a)| *r <= 0.5 * a);
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let ledgers_ok = within("myopic", &flat)
        && within("rationed", &rationed)
        && spent("myopic")
            .iter()
            .chain(&e_ra)
            .all(|&e| e <= total * (1.0 + eps));
    let gap = ra.final_mean - my.final_mean;
    let ok = gap >= pooled(ra, my) && all.final_mean - ra.final_mean <= 0.03 && half && ledgers_ok;
    gate.record(
        "A5",
        ok,
        format!(
            "rationed-myopic {gap:.4} (pooled std {:.4}), select_all-rationed {:.4} (<= 0.03), energy rationed {:.3e} J vs select_all {:.3e} J (every seed <= 50%: {half}), per-round budgets respected {ledgers_ok}; {}, {}, {}",
            pooled(ra, my),
            all.final_mean - ra.final_mean,
            mean(&e_ra),
            mean(&e_all),
            fmt_arm(all),
            fmt_arm(my),
            fmt_arm(ra)
        ),
    );
}

fn power_study(gate: &mut Gate) {
    let s = run_study("fig6_power.cfg");
    let (eq, p2, nf) = (
        &s.summaries["equal"],
        &s.summaries["poly2"],
        &s.summaries["noise_free"],
    );
    let total = s.cfg.power_total;
    let t = s.cfg.rounds;
    // Ledger sums, accumulated in round order as written.
    let rho_sums = |name: &str| -> Vec<f64> {
        s.ledgers[name]
            .iter()
            .map(|tr| {
                tr.iter()
                    .fold(0.0, |acc, r| acc + r.rho.expect("rho logged"))
            })
            .collect()
    };
    let sums_ok = rho_sums("equal")
        .iter()
        .chain(&rho_sums("poly2"))
        .all(|&x| x == total);
    let exact_total = Exact::from_integer(total as i128);
    let exact_ok = [PowerKind::Equal, PowerKind::Poly(2)]
        .into_iter()
        .all(|kind| {
            let sched = PowerSchedule::new(
                PowerPolicy {
                    kind,
                    total_power_budget: exact_total,
                },
                t,
            )
            .unwrap();
            sched
                .rho_per_round
                .unwrap()
                .into_iter()
                .fold(Exact::zero(), |a, b| a + b)
                == exact_total
        });
    let gap = p2.final_mean - eq.final_mean;
    let ok = sums_ok && exact_ok && gap >= pooled(p2, eq) && nf.final_mean - p2.final_mean <= 0.02;
    gate.record(
        "A6",
        ok,
        format!(
            "sum rho == {total} on every seed {sums_ok} (rational schedule exact {exact_ok}), poly2-equal {gap:.4} (pooled std {:.4}), noise_free-poly2 {:.4} (<= 0.02); {}, {}, {}",
            pooled(p2, eq),
            nf.final_mean - p2.final_mean,
            fmt_arm(eq),
            fmt_arm(p2),
            fmt_arm(nf)
        ),
    );
}

fn quantizer_properties(gate: &mut Gate) {
    let mut rng = ChaCha8Rng::seed_from_u64(11);

    // Unbiasedness: per-coordinate Monte Carlo mean within 3 standard errors.
    let v = ParamVector::new(
        (0..12)
            .map(|_| rng.random_range(-2.0..3.0))
            .collect::<Vec<f64>>(),
    );
    let draws = 100_000usize;
    let bits = 2u8;
    let mut sums = vec![0.0; v.len()];
    let mut first_step = 0.0;
    for s in 0..draws {
        let q = quantize_stochastic(&v, bits, s as u64).unwrap();
        first_step = step(&q);
        for (acc, x) in sums.iter_mut().zip(dequantize(&q).unwrap().values) {
            *acc += x;
        }
    }
    let (lo, _) = rationfl::quant::compute_range(&v.values);
    let mut worst_z: f64 = 0.0;
    for (i, &x) in v.values.iter().enumerate() {
        let frac = ((x - lo) / first_step).fract();
        let sd = first_step * (frac * (1.0 - frac)).sqrt();
        let err = (sums[i] / draws as f64 - x).abs();
        // Range endpoints are deterministic; only summation roundoff remains.
        let z = if sd > 0.0 {
            err / (sd / (draws as f64).sqrt())
        } else if err < 1e-9 {
            0.0
        } else {
            f64::INFINITY
        };
        worst_z = worst_z.max(z);
    }
    let unbiased = worst_z <= 3.0;

    // Error never exceeds one quantization step.
    let mut max_ratio: f64 = 0.0;
    for i in 0..1000u64 {
        let len = rng.random_range(1..64);
        let scale = 10f64.powi(rng.random_range(-3..3));
        let v = ParamVector::new(
            (0..len)
                .map(|_| scale * rng.random_range(-1.0..1.0))
                .collect::<Vec<f64>>(),
        );
        let b = rng.random_range(1..=8u8);
        let q = quantize_stochastic(&v, b, i).unwrap();
        let d = dequantize(&q).unwrap();
        let st = step(&q);
        for (a, x) in d.values.iter().zip(&v.values) {
            let r = if st > 0.0 {
                (a - x).abs() / st
            } else {
                (a - x).abs()
            };
            max_ratio = max_ratio.max(r);
        }
    }
    let bounded = max_ratio <= 1.0 + 1e-9;

    let mut roundtrip = true;
    for b in 1..=8u8 {
        for len in [0usize, 1, 7, 8, 9, 63, 1000] {
            let codes: Vec<u32> = (0..len).map(|_| rng.random_range(0..(1u32 << b))).collect();
            let packed = pack_codes(&codes, b).unwrap();
            roundtrip &= packed.len() == packed_len(b, len)
                && unpack_codes(&packed, b, len).unwrap() == codes;
        }
    }
    gate.record(
        "P1",
        unbiased && bounded && roundtrip,
        format!("worst bias z {worst_z:.2} (<= 3), max |error|/step {max_ratio:.4} (<= 1), pack roundtrip b=1..8 {roundtrip}"),
    );
}

fn schedule_properties(gate: &mut Gate) {
    let mut failures: Vec<String> = Vec::new();
    let mut fail = |msg: String| {
        if failures.len() < 5 {
            failures.push(msg);
        }
    };
    let exact_sum = |v: &[Exact]| v.iter().fold(Exact::zero(), |a, b| a + *b);
    let f64_sum = |v: &[f64]| v.iter().fold(0.0, |a, b| a + b);
    for t in 1..=1000usize {
        for b in [1u8, 3, 32] {
            let s = BitSchedule::constant(b, t).unwrap();
            if s.entries().iter().sum::<u64>() != b as u64 * t as u64 || s.validate().is_err() {
                fail(format!("constant {b} bits, T={t}"));
            }
        }
        if t >= 3 {
            let inc = staircase_bits(&[(1, 1.0 / 3.0), (2, 1.0 / 3.0), (3, 1.0 / 3.0)], t).unwrap();
            let dec = inc.reversed();
            let sum: u64 = inc.entries().iter().sum();
            if inc.validate().is_err()
                || dec.entries().iter().sum::<u64>() != sum
                || inc.total_budget != sum
            {
                fail(format!("staircase conservation T={t}"));
            }
            if inc.bits_per_round.windows(2).any(|w| w[0] > w[1]) || dec.reversed() != inc {
                fail(format!("staircase monotone/reverse T={t}"));
            }
        }
        for m in [0usize, 1, 5, 10] {
            let asc = ramp_clients(ClientRamp::Ascend(m), t).unwrap();
            let desc = ramp_clients(ClientRamp::Descend(m), t).unwrap();
            let uni = ramp_clients(ClientRamp::Uniform(m), t).unwrap();
            for (name, s) in [("ascend", &asc), ("descend", &desc), ("uniform", &uni)] {
                if s.entries().iter().sum::<u64>() != (m * t) as u64 || s.validate().is_err() {
                    fail(format!("{name}:{m} sum T={t}"));
                }
            }
            let mut rev = asc.clients_per_round.clone();
            rev.reverse();
            if rev != desc.clients_per_round {
                fail(format!("descend != reverse(ascend) m={m} T={t}"));
            }
            if t >= 2 {
                let mut prefix = 0.0;
                for (i, &c) in asc.clients_per_round.iter().enumerate() {
                    prefix += c as f64;
                    let k = (i + 1) as f64;
                    let ideal = m as f64 * k * (k - 1.0) / (t as f64 - 1.0);
                    if (prefix - ideal).abs() > 0.5 + 1e-9 {
                        fail(format!(
                            "ascend:{m} prefix deviation {} at t={} T={t}",
                            prefix - ideal,
                            i + 1
                        ));
                    }
                }
            }
        }
        for shape in [
            EnergyShape::Myopic,
            EnergyShape::RationedLinear,
            EnergyShape::RationedQuadratic,
        ] {
            let total = Exact::new(7, 3);
            let e = energy_schedule(shape, total, t).unwrap().budget_per_round;
            if exact_sum(&e) != total {
                fail(format!("exact energy {shape:?} T={t}"));
            }
            if shape != EnergyShape::Myopic && e.windows(2).any(|w| w[0] > w[1]) {
                fail(format!("exact energy {shape:?} not nondecreasing T={t}"));
            }
            let ef = energy_schedule(shape, 0.37, t).unwrap().budget_per_round;
            if f64_sum(&ef) != 0.37 {
                fail(format!("f64 energy {shape:?} T={t}: {}", f64_sum(&ef)));
            }
        }
        for kind in [PowerKind::Equal, PowerKind::Poly(1), PowerKind::Poly(2)] {
            let total = Exact::from_integer(t as i128);
            let r = PowerSchedule::new(
                PowerPolicy {
                    kind,
                    total_power_budget: total,
                },
                t,
            )
            .unwrap();
            if exact_sum(r.rho_per_round.as_ref().unwrap()) != total {
                fail(format!("exact power {kind:?} T={t}"));
            }
            let rf = PowerSchedule::new(
                PowerPolicy {
                    kind,
                    total_power_budget: t as f64,
                },
                t,
            )
            .unwrap();
            let rf = rf.rho_per_round.unwrap();
            if f64_sum(&rf) != t as f64 {
                fail(format!("f64 power {kind:?} T={t}"));
            }
            let approx: Vec<f64> = r
                .rho_per_round
                .unwrap()
                .iter()
                .map(|x| x.to_f64().unwrap())
                .collect();
            if approx
                .iter()
                .zip(&rf)
                .any(|(a, b)| (a - b).abs() > 1e-9 * t as f64)
            {
                fail(format!("f64 power {kind:?} departs from rational T={t}"));
            }
        }
    }
    gate.record(
        "P2",
        failures.is_empty(),
        if failures.is_empty() {
            "conservation, reversal, staircase and energy monotonicity, ramp prefix deviation hold for T = 1..1000".into()
        } else {
            failures.join("; ")
        },
    );
}

fn oracle_properties(gate: &mut Gate) {
    // Federation of one against direct local training.
    let ds = Arc::new(synth_classification::<f64>(120, 6, 3, 4.0, 5).unwrap());
    let arch = ModelArch::Mlp {
        input_dim: 6,
        hidden_dim: 5,
        num_classes: 3,
    };
    let train = TrainConfig {
        local_epochs: 2,
        batch_size: 7,
        learning_rate: 0.1,
        weight_decay: 0.0,
        seed: 0,
    };
    let rounds = 3;
    let cfg = FederationConfig {
        arch,
        rounds,
        num_clients: 1,
        train,
        bits: BitSchedule::constant(32, rounds).unwrap(),
        clients: ramp_clients(ClientRamp::Uniform(1), rounds).unwrap(),
        energy: None,
        selection: SelectionMode::Uniform,
        aggregation: AggregationMode::Digital,
        link: LinkBudget {
            bandwidth_hz: 1.0,
            noise_psd: 1.0,
            deadline_s: 1.0,
        },
        eval_every: 1,
        transmit_delta: false,
    };
    let data = FederationData {
        clients: vec![ClientDataset::whole(0, Arc::clone(&ds))],
        test: (*ds).clone(),
        train_probe: (*ds).clone(),
    };
    let seed = 77;
    let fed = rationfl::federation::Federation::new(&cfg, &data, seed).unwrap();
    let mut global = fed.initial_model();
    let mut direct = init_model::<f64>(&arch, seed);
    let mut worst_seq: f64 = 0.0;
    for t in 1..=rounds {
        global = fed.run_round(&global, t).unwrap().0;
        let tc = TrainConfig {
            seed: derive_seed(seed, Stream::LocalTrain, &[t as u64, 0]),
            ..train
        };
        direct = local_train(&arch, &direct, &data.clients[0], &tc).unwrap();
        for (a, b) in global.values.iter().zip(&direct.values) {
            worst_seq = worst_seq.max((a - b).abs());
        }
    }
    let seq_ok = worst_seq <= 1e-9;

    // Noiseless analog aggregation against the plain mean.
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst_mean: f64 = 0.0;
    for trial in 0..50u64 {
        let n = rng.random_range(1..8);
        let len = rng.random_range(1..40);
        let updates: Vec<ParamVector<f64>> = (0..n)
            .map(|_| ParamVector::new((0..len).map(|_| rng.random_range(-5.0..5.0)).collect()))
            .collect();
        let gains: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..4.0)).collect();
        let mean: Vec<f64> = (0..len)
            .map(|j| updates.iter().map(|u| u.values[j]).sum::<f64>() / n as f64)
            .collect();
        let free =
            analog_aggregate(&updates, &gains, AnalogPower::NoiseFree, 0.2, 1.0, trial).unwrap();
        let quiet =
            analog_aggregate(&updates, &gains, AnalogPower::Rho(0.3), 0.0, 0.0, trial).unwrap();
        for out in [free, quiet] {
            for (a, b) in out.aggregate.unwrap().values.iter().zip(&mean) {
                worst_mean = worst_mean.max((a - b).abs());
            }
        }
    }
    let mean_ok = worst_mean <= 1e-12;

    // Greedy selection against exhaustive search.
    let mut mismatches = 0;
    for _ in 0..100 {
        let k = rng.random_range(1..=8);
        let gains: Vec<f64> = (0..k).map(|_| -rng.random::<f64>().ln()).collect();
        let link = LinkBudget {
            bandwidth_hz: 1e5,
            noise_psd: 1e-9,
            deadline_s: rng.random_range(0.05..2.0),
        };
        let bits = 10_000;
        let budget = rng.random_range(0.0..2.0)
            * split_band_energies(&gains, &(0..k).collect::<Vec<_>>(), bits, &link)
                .iter()
                .sum::<f64>();
        let sel = select_energy_constrained(&gains, budget, bits, &link);
        let mut best = 0;
        for mask in 0u32..(1 << k) {
            let members: Vec<usize> = (0..k).filter(|i| mask >> i & 1 == 1).collect();
            if split_band_energies(&gains, &members, bits, &link)
                .iter()
                .sum::<f64>()
                <= budget
            {
                best = best.max(members.len());
            }
        }
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by(|&a, &b| gains[b].partial_cmp(&gains[a]).unwrap());
        let mut top: Vec<usize> = order[..sel.chosen.len()].to_vec();
        top.sort_unstable();
        let mut chosen = sel.chosen.clone();
        chosen.sort_unstable();
        let feasible = sel.total() <= budget;
        if sel.chosen.len() != best || chosen != top || !feasible {
            mismatches += 1;
        }
    }
    gate.record(
        "P3",
        seq_ok && mean_ok && mismatches == 0,
        format!("federation of one max diff {worst_seq:.2e} (<= 1e-9), noiseless analog max diff {worst_mean:.2e} (<= 1e-12), selection mismatches {mismatches}/100"),
    );
}

fn descent_properties(gate: &mut Gate) {
    let normal = Normal::new(0.0, 1.0).unwrap();
    let trials = 100_000;
    let sigma = 1.5;
    let grid = [0.0, 0.5, 1.0, 2.0, 3.0];
    let mut worst_z: f64 = 0.0;
    let mut prev = -1.0;
    let mut monotone = true;
    for (i, &d) in grid.iter().enumerate() {
        let p = descent_probability(d, sigma, trials, 100 + i as u64);
        let expect = normal.cdf(d / sigma);
        let se = (expect * (1.0 - expect) / trials as f64).sqrt();
        worst_z = worst_z.max((p - expect).abs() / se);
        monotone &= p >= prev;
        prev = p;
    }
    gate.record(
        "P4",
        worst_z <= 3.0 && monotone,
        format!("worst |z| {worst_z:.2} (<= 3) over 5 grid points, monotone {monotone}"),
    );
}

fn csv_files(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else if p.extension().is_some_and(|x| x == "csv") {
                out.insert(
                    p.strip_prefix(dir).unwrap().to_path_buf(),
                    std::fs::read(&p).unwrap(),
                );
            }
        }
    }
    out
}

fn determinism(gate: &mut Gate) {
    let mut identical = true;
    let mut files = 0;
    for preset in ["fig2_bits", "fig5_energy", "fig6_power"] {
        let text = format!(
            "preset = {preset}\ndataset = synthetic\nsynth_samples = 600\nsynth_dim = 8\nsynth_classes = 4\nmodel = mlp\nhidden_dim = 6\nK = 12\nT = 12\nclients_per_round = 4\nseeds = 3\nlr = 0.2\n"
        );
        let mut outputs = Vec::new();
        let dirs: Vec<tempfile::TempDir> = (0..3).map(|_| tempfile::tempdir().unwrap()).collect();
        for (dir, workers) in dirs.iter().zip([1usize, 1, 4]) {
            let mut cfg = ExperimentConfig::parse(&text).unwrap();
            cfg.out_dir = dir.path().to_path_buf();
            cfg.workers = workers;
            run_experiment(&cfg, None).unwrap();
            outputs.push(csv_files(dir.path()));
        }
        files += outputs[0].len();
        identical &= !outputs[0].is_empty() && outputs.iter().all(|o| *o == outputs[0]);
    }
    gate.record(
        "P5",
        identical,
        format!("{files} CSV files byte-identical across repeat and 1- vs 4-worker runs"),
    );
}

fn main() {
    let mut gate = Gate {
        results: Vec::new(),
    };
    bits_study(&mut gate);
    clients_study(&mut gate);
    energy_study(&mut gate);
    power_study(&mut gate);
    quantizer_properties(&mut gate);
    schedule_properties(&mut gate);
    oracle_properties(&mut gate);
    descent_properties(&mut gate);
    determinism(&mut gate);
    let failed: Vec<&str> = gate
        .results
        .iter()
        .filter(|r| !r.1)
        .map(|r| r.0.as_str())
        .collect();
    println!(
        "acceptance: {}/{} criteria passed",
        gate.results.len() - failed.len(),
        gate.results.len()
    );
    if !failed.is_empty() {
        println!("failed: {}", failed.join(", "));
        std::process::exit(1);
    }
}
