use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const SMALL: &str = "\
# tiny synthetic study
preset = fig2_bits
dataset = synthetic
synth_samples = 600
synth_dim = 5
synth_classes = 3
probe_size = 100
model = logistic
K = 10
T = 8
clients_per_round = 3
lr = 0.3
seeds = 3
last_window = 4
";

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_rationfl"));
    c.env_remove("RATIONFL_SEED");
    c
}

fn ok(out: Output) -> String {
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn write_cfg(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("study.cfg");
    fs::write(&p, text).unwrap();
    p
}

fn run(cfg: &Path, out: &Path, extra: &[&str]) -> Output {
    bin()
        .args(["run", "--config"])
        .arg(cfg)
        .arg("--out")
        .arg(out)
        .args(extra)
        .output()
        .unwrap()
}

fn traces(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut v = Vec::new();
    for arm in fs::read_dir(dir).unwrap() {
        let arm = arm.unwrap().path();
        if arm.is_dir() {
            for f in fs::read_dir(&arm).unwrap() {
                let f = f.unwrap().path();
                if f.file_name()
                    .unwrap()
                    .to_str()
                    .unwrap()
                    .starts_with("trace_")
                {
                    v.push((
                        f.strip_prefix(dir).unwrap().to_path_buf(),
                        fs::read(&f).unwrap(),
                    ));
                }
            }
        }
    }
    v.sort();
    v
}

fn summary_rows(dir: &Path) -> Vec<csv::StringRecord> {
    let mut r = csv::Reader::from_path(dir.join("summary.csv")).unwrap();
    assert_eq!(
        r.headers().unwrap(),
        vec![
            "arm",
            "seeds",
            "window",
            "final_acc_mean",
            "final_acc_std",
            "total_bits_mean",
            "total_energy_J_mean"
        ]
    );
    r.records().map(Result::unwrap).collect()
}

#[test]
fn validate_minimal_config() {
    let dir = tempfile::tempdir().unwrap();
    let stdout = ok(bin()
        .args(["validate", "--config"])
        .arg(write_cfg(dir.path(), "preset = fig2_bits\n"))
        .output()
        .unwrap());
    assert!(stdout.contains("T = 200"), "{stdout}");
    assert!(
        stdout.contains("# arms: 32bit, 3bit, 2bit, 1bit, increasing, decreasing"),
        "{stdout}"
    );
}

#[test]
fn validate_reports_line_of_bad_value() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path(), "preset = fig2_bits\n\nT = -1\n");
    let out = bin()
        .args(["validate", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 3"), "{err}");
    let out = bin()
        .args(["validate", "--config"])
        .arg(write_cfg(dir.path(), "preset = fig2_bits\nbogus = 1\n"))
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("bogus"));
}

#[test]
fn run_writes_outputs_and_meta_reproduces() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path(), SMALL);
    let first = dir.path().join("first");
    ok(run(&cfg, &first, &[]));

    let rows = summary_rows(&first);
    assert_eq!(rows.len(), 6);
    assert_eq!(&rows[0][0], "32bit");
    let tr = traces(&first);
    assert_eq!(tr.len(), 6 * 3);
    let text = String::from_utf8(tr[0].1.clone()).unwrap();
    assert!(text.starts_with("round,bits_used,num_clients,energy_J,rho,train_loss,test_acc\n"));
    assert_eq!(text.lines().count(), 1 + 8);

    let second = dir.path().join("second");
    ok(run(&first.join("meta.txt"), &second, &[]));
    assert_eq!(traces(&second), tr);
    assert_eq!(
        fs::read(first.join("summary.csv")).unwrap(),
        fs::read(second.join("summary.csv")).unwrap()
    );
}

#[test]
fn env_seed_is_recorded() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path(), SMALL);
    let out = dir.path().join("out");
    let status = bin()
        .env("RATIONFL_SEED", "77")
        .args(["run", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .args(["--seeds", "1"])
        .output()
        .unwrap();
    ok(status);
    let meta = fs::read_to_string(out.join("meta.txt")).unwrap();
    assert!(meta.contains("RATIONFL_SEED"), "{meta}");
    assert!(meta.contains("base_seed = 77"), "{meta}");
    assert!(out.join("32bit").join("trace_77.csv").exists());
}

#[test]
fn single_seed_has_zero_std() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    ok(run(&write_cfg(dir.path(), SMALL), &out, &["--seeds", "1"]));
    for row in summary_rows(&out) {
        assert_eq!(&row[1], "1");
        assert_eq!(row[4].parse::<f64>().unwrap(), 0.0);
    }
}

/// Mean over the last `last` rounds of each trace, then mean and sample std over seeds.
fn recompute(arm: &Path, last: usize) -> (f64, f64) {
    let mut finals = Vec::new();
    for f in fs::read_dir(arm).unwrap() {
        let f = f.unwrap().path();
        if !f
            .file_name()
            .unwrap()
            .to_str()
            .unwrap()
            .starts_with("trace_")
        {
            continue;
        }
        let mut r = csv::Reader::from_path(&f).unwrap();
        let acc: Vec<f64> = r
            .records()
            .map(|x| x.unwrap()[6].parse().unwrap())
            .collect();
        let tail = &acc[acc.len() - last.min(acc.len())..];
        finals.push(tail.iter().sum::<f64>() / tail.len() as f64);
    }
    let n = finals.len() as f64;
    let mean = finals.iter().sum::<f64>() / n;
    let var = finals.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

#[test]
fn summarize_recomputes_from_traces() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    ok(run(
        &write_cfg(dir.path(), SMALL),
        &out,
        &["--preset", "fig6_power"],
    ));
    let stdout = ok(bin()
        .args(["summarize", "--in"])
        .arg(&out)
        .args(["--last", "3"])
        .output()
        .unwrap());
    assert!(stdout.contains("noise_free"), "{stdout}");
    let rows = summary_rows(&out);
    assert_eq!(
        rows.iter().map(|r| r[0].to_string()).collect::<Vec<_>>(),
        ["equal", "poly2", "noise_free"]
    );
    for row in rows {
        assert_eq!(&row[2], "3");
        let (mean, std) = recompute(&out.join(&row[0]), 3);
        assert!(
            (row[3].parse::<f64>().unwrap() - mean).abs() < 1e-12,
            "{}",
            &row[0]
        );
        assert!(
            (row[4].parse::<f64>().unwrap() - std).abs() < 1e-12,
            "{}",
            &row[0]
        );
    }
}
