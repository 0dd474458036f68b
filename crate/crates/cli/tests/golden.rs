//! Pins the externally visible surface of the experiment runner: the
//! CSV column sets, the float cell format, the emitted file names, the
//! subcommand list, and the exit-code contract. Downstream consumers
//! parse these artifacts, so any change here must be deliberate.

use std::fs;
use std::process::Command;

use reslab_cli::commands::{cmd_counterexample, cmd_oracle, cmd_sweep, cmd_train_verify, Artifacts};
use reslab_cli::config::{load_config, Overrides};
use reslab_cli::records::{COUNTEREXAMPLE_HEADER, ORACLE_HEADER, RUNS_HEADER, TRACE_HEADER};

const BASE: &str = "\
seed = 11
dataset.m = 10
dataset.d_x = 3
dataset.d_y = 1
model.depth = 1
model.width = 3
train.restarts = 2
train.grad_tol = 1e-6
train.max_iter = 20000
";

fn artifacts_of(text: &str, run: impl Fn(&reslab_cli::config::ExperimentConfig) -> anyhow::Result<Artifacts>) -> Vec<(String, String)> {
    let cfg = load_config(text, &Overrides::default()).expect("config");
    run(&cfg).expect("command").files
}

fn file_named<'a>(files: &'a [(String, String)], name: &str) -> &'a str {
    &files.iter().find(|(n, _)| n == name).unwrap_or_else(|| panic!("missing {name}")).1
}

/// `-d.dddddddddddddddde±e`: sign, one leading digit, 16 fractional
/// digits, decimal exponent. This is the only float shape the tables
/// may contain; it round-trips every f64 exactly.
fn is_pinned_float(cell: &str) -> bool {
    let s = cell.strip_prefix('-').unwrap_or(cell);
    let Some((mantissa, exp)) = s.split_once('e') else { return false };
    let Some((lead, frac)) = mantissa.split_once('.') else { return false };
    lead.len() == 1
        && lead.chars().all(|c| c.is_ascii_digit())
        && frac.len() == 16
        && frac.chars().all(|c| c.is_ascii_digit())
        && !exp.is_empty()
        && exp.strip_prefix('-').unwrap_or(exp).chars().all(|c| c.is_ascii_digit())
}

#[test]
fn runs_table_columns_are_pinned() {
    let files = artifacts_of(BASE, cmd_train_verify);
    let runs = file_named(&files, "runs.csv");
    let mut lines = runs.lines();
    assert_eq!(
        lines.next().unwrap(),
        "config_hash,restart,seed,status,final_loss,grad_norm,iterations,certification,\
         stationarity_z_residual,stationarity_x_residual,oracle_gap,l_star_x,l_star_xz,improvement"
    );
    let verdicts = ["certified_local_min", "saddle_or_uncertified", "budget_exhausted"];
    for line in lines {
        let cols: Vec<&str> = line.split(',').collect();
        assert_eq!(cols.len(), RUNS_HEADER.len(), "{line}");
        assert_eq!(cols[3], "ok", "{line}");
        assert!(verdicts.contains(&cols[7]), "unknown verdict in {line}");
    }
}

#[test]
fn trace_table_columns_are_pinned() {
    let files = artifacts_of(BASE, cmd_train_verify);
    for restart in 0..2 {
        let trace = file_named(&files, &format!("trace_{restart}.csv"));
        let mut lines = trace.lines();
        assert_eq!(lines.next().unwrap(), TRACE_HEADER.join(","));
        let mut last_iter = None;
        for line in lines {
            let cols: Vec<&str> = line.split(',').collect();
            assert_eq!(cols.len(), TRACE_HEADER.len(), "{line}");
            let it: u64 = cols[0].parse().unwrap();
            assert!(last_iter.map_or(true, |p| it > p), "iterations not increasing: {line}");
            last_iter = Some(it);
        }
    }
}

#[test]
fn oracle_table_columns_are_pinned() {
    let files = artifacts_of(BASE, cmd_oracle);
    let csv = file_named(&files, "oracle.csv");
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), ORACLE_HEADER.join(","));
    let cols: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(cols.len(), ORACLE_HEADER.len());
    // The row must be internally consistent: improvement is the gap
    // between the two optima, and its alternate form agrees.
    let get = |i: usize| cols[i].parse::<f64>().unwrap();
    let (l_x, l_xz, imp, alt) = (get(2), get(3), get(4), get(5));
    assert!((imp - (l_x - l_xz)).abs() <= 1e-12 * (1.0 + l_x.abs()), "{cols:?}");
    assert!((imp - alt).abs() <= 1e-9, "{cols:?}");
}

#[test]
fn counterexample_table_columns_are_pinned() {
    let text = "\
seed = 3
dataset.m = 6
dataset.d_x = 2
dataset.d_y = 1
dataset.x_mean = 2.0
model.depth = 1
model.width = 2
";
    let files = artifacts_of(text, cmd_counterexample);
    let csv = file_named(&files, "counterexample.csv");
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), COUNTEREXAMPLE_HEADER.join(","));
    let cols: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(cols.len(), COUNTEREXAMPLE_HEADER.len());
    assert_eq!(cols[2], "ok");
    assert!(cols[5].parse::<f64>().unwrap() > 0.0, "separation: {cols:?}");
}

#[test]
fn sweep_table_columns_are_pinned() {
    let text = format!("{BASE}sweep.model.activation = identity,relu\n");
    let cfg_text = text.as_str();
    let artifacts = cmd_sweep(cfg_text, &Overrides::default()).expect("sweep");
    let csv = file_named(&artifacts.files, "sweep.csv");
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "cell,model.activation,runs,certified_fraction,max_abs_gap,mean_improvement,status"
    );
    assert_eq!(lines.count(), 2);
}

#[test]
fn float_cells_use_full_precision_scientific_form() {
    let files = artifacts_of(BASE, cmd_train_verify);
    let runs = file_named(&files, "runs.csv");
    for line in runs.lines().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        // final_loss .. oracle_gap block plus the three oracle columns.
        for &i in &[4, 5, 8, 9, 10, 11, 12, 13] {
            assert!(is_pinned_float(cols[i]), "column {i} not pinned-float: {:?}", cols[i]);
            let v: f64 = cols[i].parse().unwrap();
            assert_eq!(reslab_cli::records::fmt_float(v), cols[i], "round-trip drift");
        }
    }
}

// ---------------------------------------------------------------------------
// Binary-level interface.
// ---------------------------------------------------------------------------

fn binary() -> Command {
    Command::new(env!("CARGO_BIN_EXE_reslab"))
}

#[test]
fn binary_lists_its_subcommands() {
    let out = binary().arg("--help").output().expect("run binary");
    assert!(out.status.success());
    let help = String::from_utf8_lossy(&out.stdout);
    for sub in ["oracle", "train-verify", "counterexample", "sweep", "check"] {
        assert!(help.contains(sub), "--help missing {sub}:\n{help}");
    }
}

#[test]
fn binary_exit_code_distinguishes_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.cfg");
    fs::write(&bad, "seed = 1\ndataset.m = 0\n").unwrap();
    let out = binary().args(["oracle", "--config"]).arg(&bad).output().unwrap();
    assert_eq!(out.status.code(), Some(2), "invalid config must exit 2");
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));

    let out = binary()
        .args(["oracle", "--config"])
        .arg(dir.path().join("missing.cfg"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1), "unreadable config path must exit 1");
}

#[test]
fn binary_writes_artifacts_into_out_dir() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, BASE).unwrap();
    let out_dir = dir.path().join("artifacts");
    let out = binary()
        .args(["train-verify", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for name in ["runs.csv", "trace_0.csv", "trace_1.csv", "timing.txt"] {
        assert!(out_dir.join(name).is_file(), "missing artifact {name}");
    }
}

#[test]
fn binary_streams_to_stdout_without_out_dir() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, BASE).unwrap();
    let out = binary().args(["oracle", "--config"]).arg(&cfg).output().unwrap();
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.starts_with("# file: oracle.csv"), "{stdout}");
}
