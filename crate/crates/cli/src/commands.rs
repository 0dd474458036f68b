//! Subcommand implementations. Each returns an [`Artifacts`] bundle of
//! (file name, contents) pairs; the binary writes them out. Keeping the
//! rendering pure — no clock, no filesystem except dataset input —
//! makes byte-identical reruns a structural property rather than a
//! hope, and wall-clock timings go to a separate sidecar that
//! determinism checks ignore.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::time::Instant;

use anyhow::{anyhow, Result};
use rayon::prelude::*;
use reslab::landscape::{
    build_dead_relu_counterexample, null_space_perturb_check, train_with, Verdict, INIT_TAG,
};
use reslab::loss::LossKind;
use reslab::model::{
    empirical_objective, grad_loss_params, stack_outputs, Activation, DataSet, ResNetParams,
    StackConfig,
};
use reslab::oracle::{convex_oracle_xz, improvement_alt_form, sq_oracle_xz};
use reslab::projection::block_projection_identity_check;
use reslab::rng::SplitMix64;
use reslab::{Error as CoreError, Mat};

use crate::config::{config_from_map, effective_map, ExperimentConfig, Overrides};
use crate::dataset::build_dataset;
use crate::records::{self, RunRecord};
use crate::ConfigInvalid;

/// Stream tag separating restart initializations from every other
/// consumer of the experiment seed.
const RESTART_TAG: u64 = 0x7265_7374;

/// Output bundle of a subcommand. `files` are deterministic; `timing`
/// holds wall-clock measurements and is written as `timing.txt`.
#[derive(Debug)]
pub struct Artifacts {
    pub files: Vec<(String, String)>,
    pub timing: Option<String>,
}

/// Seed for restart `k` of an experiment, derived so that different
/// restarts of the same experiment draw unrelated streams.
pub fn restart_seed(experiment_seed: u64, k: usize) -> u64 {
    SplitMix64::derive(experiment_seed, RESTART_TAG.wrapping_add(k as u64)).next_u64()
}

fn run_one_restart(cfg: &ExperimentConfig, data: &DataSet<f64>, k: usize) -> RunRecord {
    let seed = restart_seed(cfg.seed, k);
    let start = Instant::now();
    let outcome = train_with(
        data,
        &cfg.stack,
        cfg.loss,
        seed,
        cfg.grad_tol,
        cfg.max_iter,
        &cfg.cert,
        cfg.solver_tol,
    );
    let wall_time_s = start.elapsed().as_secs_f64();
    match outcome {
        Ok((_params, report, gaps)) => RunRecord {
            config_hash: cfg.hash().to_string(),
            restart: k,
            seed,
            status: "ok".into(),
            report: Some(report),
            gaps: Some(gaps),
            wall_time_s,
        },
        Err(e) => RunRecord {
            config_hash: cfg.hash().to_string(),
            restart: k,
            seed,
            status: format!("error: {e}"),
            report: None,
            gaps: None,
            wall_time_s,
        },
    }
}

/// Runs every restart of the experiment, in parallel, in stable order.
pub fn run_restarts(cfg: &ExperimentConfig, data: &DataSet<f64>) -> Vec<RunRecord> {
    (0..cfg.restarts).into_par_iter().map(|k| run_one_restart(cfg, data, k)).collect()
}

/// Trains all restarts, certifies each endpoint, and emits the run
/// table plus one loss-trace series per restart.
pub fn cmd_train_verify(cfg: &ExperimentConfig) -> Result<Artifacts> {
    let data = build_dataset(cfg)?;
    let total = Instant::now();
    let recs = run_restarts(cfg, &data);
    let mut files = vec![("runs.csv".to_string(), records::runs_csv(&recs)?)];
    for rec in &recs {
        if let Some(report) = &rec.report {
            files.push((format!("trace_{}.csv", rec.restart), records::trace_csv(&report.trace)?));
        }
    }
    let mut timing = String::new();
    for rec in &recs {
        let _ = writeln!(timing, "restart {}: {:.3} s", rec.restart, rec.wall_time_s);
    }
    let _ = writeln!(timing, "total: {:.3} s", total.elapsed().as_secs_f64());
    Ok(Artifacts { files, timing: Some(timing) })
}

/// Computes the fixed-basis and augmented-basis global minima for the
/// configured dataset, with the stack features taken at the seeded
/// initialization, and emits both forms of the improvement term.
pub fn cmd_oracle(cfg: &ExperimentConfig) -> Result<Artifacts> {
    let data = build_dataset(cfg)?;
    let mut rng = SplitMix64::derive(cfg.seed, INIT_TAG);
    let params = ResNetParams::he_init(&cfg.stack, cfg.d_x, cfg.d_y, &mut rng);
    let z = stack_outputs(&data.x, &params.theta, &cfg.stack)?;
    let res = sq_oracle_xz(&data.x, &z, &data.y)?;
    let alt = improvement_alt_form(&data.x, &z, &data.y)?;
    let csv = records::oracle_csv(
        cfg.hash(),
        cfg.seed,
        res.l_star_x,
        res.l_star_xz,
        res.improvement,
        alt,
    )?;
    Ok(Artifacts { files: vec![("oracle.csv".to_string(), csv)], timing: None })
}

/// Builds the dead-unit two-layer network whose loss exceeds the best
/// linear fit yet certifies as a local minimum. Infeasibility (for
/// example targets reachable by a linear map) is reported in the status
/// column, not as a failure.
pub fn cmd_counterexample(cfg: &ExperimentConfig) -> Result<Artifacts> {
    if cfg.loss != LossKind::Squared {
        return Err(anyhow::Error::new(ConfigInvalid(
            "the dead-unit construction is defined for the squared loss only".into(),
        )));
    }
    let data = build_dataset(cfg)?;
    let csv = match build_dead_relu_counterexample(&data, cfg.counterexample_margin, cfg.seed) {
        Ok(out) => records::counterexample_csv(
            cfg.hash(),
            cfg.seed,
            "ok",
            Some((
                out.local_value,
                out.oracle_value,
                out.separation,
                out.certification.verdict.name(),
                out.certification_radius,
            )),
        )?,
        Err(CoreError::Infeasible(_)) => {
            records::counterexample_csv(cfg.hash(), cfg.seed, "construction-infeasible", None)?
        }
        Err(e) => return Err(e.into()),
    };
    Ok(Artifacts { files: vec![("counterexample.csv".to_string(), csv)], timing: None })
}

struct CellOutcome {
    assignment: Vec<(String, String)>,
    status: String,
    runs: usize,
    certified_fraction: Option<f64>,
    max_abs_gap: Option<f64>,
    mean_improvement: Option<f64>,
    wall_time_s: f64,
}

fn run_cell(base: &BTreeMap<String, String>, assignment: &[(String, String)]) -> CellOutcome {
    let start = Instant::now();
    let mut cell_map = base.clone();
    cell_map.retain(|k, _| !k.starts_with("sweep."));
    for (k, v) in assignment {
        cell_map.insert(k.clone(), v.clone());
    }
    let fail = |status: String, wall: f64| CellOutcome {
        assignment: assignment.to_vec(),
        status,
        runs: 0,
        certified_fraction: None,
        max_abs_gap: None,
        mean_improvement: None,
        wall_time_s: wall,
    };
    let cfg = match config_from_map(&cell_map) {
        Ok(cfg) => cfg,
        Err(e) => return fail(format!("error: {e:#}"), start.elapsed().as_secs_f64()),
    };
    let data = match build_dataset(&cfg) {
        Ok(data) => data,
        Err(e) => return fail(format!("error: {e:#}"), start.elapsed().as_secs_f64()),
    };
    let recs = run_restarts(&cfg, &data);
    let failed = recs.iter().filter(|r| r.report.is_none()).count();
    let certified = recs
        .iter()
        .filter(|r| {
            r.report.as_ref().map_or(false, |rep| rep.certification == Verdict::CertifiedLocalMin)
        })
        .count();
    let mut max_abs_gap: Option<f64> = None;
    let mut improvement_sum = 0.0;
    let mut improvement_count = 0usize;
    for rec in &recs {
        if let (Some(rep), Some(g)) = (&rec.report, &rec.gaps) {
            let gap = rep.oracle_gap.abs();
            max_abs_gap = Some(max_abs_gap.map_or(gap, |m: f64| m.max(gap)));
            improvement_sum += g.improvement;
            improvement_count += 1;
        }
    }
    CellOutcome {
        assignment: assignment.to_vec(),
        status: if failed == 0 { "ok".into() } else { format!("restart-errors:{failed}") },
        runs: recs.len(),
        certified_fraction: Some(certified as f64 / recs.len() as f64),
        max_abs_gap,
        mean_improvement: (improvement_count > 0)
            .then(|| improvement_sum / improvement_count as f64),
        wall_time_s: start.elapsed().as_secs_f64(),
    }
}

/// Expands `sweep.*` lists into their cartesian product and runs the
/// full train-and-verify pipeline per cell, in parallel, aggregating
/// one row per cell. With no swept keys this is a single-cell sweep of
/// the base configuration.
pub fn cmd_sweep(text: &str, over: &Overrides) -> Result<Artifacts> {
    let map = effective_map(text, over)
        .and_then(|m| {
            config_from_map(&m)?; // validate the base configuration
            Ok(m)
        })
        .map_err(|e| anyhow::Error::new(ConfigInvalid(format!("{e:#}"))))?;

    // Swept keys in sorted order (the map is sorted), values in file order.
    let mut lists: Vec<(String, Vec<String>)> = Vec::new();
    for (k, v) in &map {
        if let Some(suffix) = k.strip_prefix("sweep.") {
            let values: Vec<String> =
                v.split(',').map(|p| p.trim().to_string()).filter(|p| !p.is_empty()).collect();
            lists.push((suffix.to_string(), values));
        }
    }
    let mut combos: Vec<Vec<(String, String)>> = vec![Vec::new()];
    for (key, values) in &lists {
        let mut next = Vec::with_capacity(combos.len() * values.len());
        for combo in &combos {
            for v in values {
                let mut c = combo.clone();
                c.push((key.clone(), v.clone()));
                next.push(c);
            }
        }
        combos = next;
    }

    let total = Instant::now();
    let outcomes: Vec<CellOutcome> =
        combos.par_iter().map(|assignment| run_cell(&map, assignment)).collect();

    let mut header: Vec<String> = vec!["cell".into()];
    header.extend(lists.iter().map(|(k, _)| k.clone()));
    header.extend(
        ["runs", "certified_fraction", "max_abs_gap", "mean_improvement", "status"]
            .map(String::from),
    );
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&header)?;
    for (idx, cell) in outcomes.iter().enumerate() {
        let mut row: Vec<String> = vec![idx.to_string()];
        row.extend(cell.assignment.iter().map(|(_, v)| v.clone()));
        row.push(cell.runs.to_string());
        let opt = |v: Option<f64>| v.map(records::fmt_float).unwrap_or_default();
        row.push(opt(cell.certified_fraction));
        row.push(opt(cell.max_abs_gap));
        row.push(opt(cell.mean_improvement));
        row.push(cell.status.clone());
        w.write_record(&row)?;
    }
    let bytes = w.into_inner().map_err(|e| anyhow!("csv flush: {e}"))?;
    let csv_text = String::from_utf8(bytes).map_err(|e| anyhow!("csv text: {e}"))?;

    let mut timing = String::new();
    for (idx, cell) in outcomes.iter().enumerate() {
        let _ = writeln!(timing, "cell {idx}: {:.3} s", cell.wall_time_s);
    }
    let _ = writeln!(timing, "total: {:.3} s", total.elapsed().as_secs_f64());
    Ok(Artifacts {
        files: vec![("sweep.csv".to_string(), csv_text)],
        timing: Some(timing),
    })
}

// ---------------------------------------------------------------------------
// `check`: a self-contained smoke suite over the library's invariants.
// ---------------------------------------------------------------------------

type Check = (&'static str, fn() -> std::result::Result<(), String>);

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

fn fd_gradient(
    data: &DataSet<f64>,
    params: &ResNetParams<f64>,
    config: &StackConfig,
    kind: LossKind,
) -> std::result::Result<Vec<f64>, String> {
    let flat = params.to_flat();
    let step = 1e-6;
    let mut grad = vec![0.0; flat.len()];
    for i in 0..flat.len() {
        let mut probe = flat.clone();
        probe[i] = flat[i] + step;
        let fp = empirical_objective(data, &params.from_flat(&probe).map_err(|e| e.to_string())?, config, kind)
            .map_err(|e| e.to_string())?;
        probe[i] = flat[i] - step;
        let fm = empirical_objective(data, &params.from_flat(&probe).map_err(|e| e.to_string())?, config, kind)
            .map_err(|e| e.to_string())?;
        grad[i] = (fp - fm) / (2.0 * step);
    }
    Ok(grad)
}

fn check_projection_algebra() -> std::result::Result<(), String> {
    for seed in 0..50u64 {
        let mut rng = SplitMix64::derive(seed, 0x6368_6563);
        let m = 4 + (seed as usize % 12);
        let d_x = 1 + (seed as usize % 5);
        let d_z = 1 + (seed as usize / 7 % 5);
        let x: Mat<f64> = rng.gaussian_mat(m, d_x, 1.0);
        let z = rng.gaussian_mat(m, d_z, 1.0);
        let y = rng.gaussian_mat(m, 2, 1.0);
        let defect = block_projection_identity_check(&x, &z).map_err(|e| e.to_string())?;
        if defect >= 1e-9 {
            return Err(format!("block identity defect {defect:.3e} at seed {seed}"));
        }
        let res = sq_oracle_xz(&x, &z, &y).map_err(|e| e.to_string())?;
        let alt = improvement_alt_form(&x, &z, &y).map_err(|e| e.to_string())?;
        if (res.improvement - alt).abs() >= 1e-9 {
            return Err(format!(
                "improvement forms disagree by {:.3e} at seed {seed}",
                (res.improvement - alt).abs()
            ));
        }
        if res.improvement < -1e-12 || res.l_star_xz > res.l_star_x + 1e-12 {
            return Err(format!("improvement sign violated at seed {seed}"));
        }
    }
    Ok(())
}

fn check_convex_solver_matches_closed_form() -> std::result::Result<(), String> {
    for seed in [3u64, 11, 23] {
        let data = reslab::synth::gaussian_dataset::<f64>(10, 3, 2, 0.0, seed)
            .map_err(|e| e.to_string())?;
        let mut rng = SplitMix64::derive(seed, 0x6368_6563);
        let z = rng.gaussian_mat(10, 2, 1.0);
        let closed = sq_oracle_xz(&data.x, &z, &data.y).map_err(|e| e.to_string())?;
        let fit = convex_oracle_xz(&data, Some(&z), LossKind::Squared, 1e-10)
            .map_err(|e| e.to_string())?;
        if rel_err(fit.objective, closed.l_star_xz) >= 1e-6 {
            return Err(format!(
                "solver {:.12e} vs closed form {:.12e} at seed {seed}",
                fit.objective, closed.l_star_xz
            ));
        }
    }
    Ok(())
}

fn check_gradients_match_finite_differences() -> std::result::Result<(), String> {
    for (kind, seed) in
        [(LossKind::Squared, 5u64), (LossKind::SoftmaxCrossEntropy, 9u64)]
    {
        let (m, d_x, d_y) = (8, 3, 2);
        let mut rng = SplitMix64::derive(seed, 0x6368_6563);
        let x = rng.gaussian_mat(m, d_x, 1.0);
        let rows: Vec<f64> = (0..m)
            .flat_map(|_| reslab::loss::random_valid_target::<f64>(kind, d_y, &mut rng))
            .collect();
        let y = Mat::new(m, d_y, rows).map_err(|e| e.to_string())?;
        let data = DataSet::new(x, y).map_err(|e| e.to_string())?;
        let config = StackConfig::uniform(2, 3, Activation::Tanh, true, false)
            .map_err(|e| e.to_string())?;
        let params = ResNetParams::he_init(&config, d_x, d_y, &mut rng);
        let (_, analytic) =
            grad_loss_params(&data, &params, &config, kind).map_err(|e| e.to_string())?;
        let numeric = fd_gradient(&data, &params, &config, kind)?;
        let flat = analytic.to_flat();
        for (i, (&a, &n)) in flat.iter().zip(numeric.iter()).enumerate() {
            let denom = a.abs().max(n.abs()).max(1e-3);
            if (a - n).abs() / denom >= 1e-5 {
                return Err(format!(
                    "{} gradient entry {i}: analytic {a:.6e} vs numeric {n:.6e}",
                    kind.name()
                ));
            }
        }
    }
    Ok(())
}

fn check_loss_never_beats_augmented_oracle() -> std::result::Result<(), String> {
    for seed in 0..50u64 {
        let data = reslab::synth::gaussian_dataset::<f64>(12, 3, 2, 0.0, seed)
            .map_err(|e| e.to_string())?;
        let config = StackConfig::uniform(2, 4, Activation::Relu, true, false)
            .map_err(|e| e.to_string())?;
        let mut rng = SplitMix64::derive(seed, 0x6368_6563);
        let params = ResNetParams::he_init(&config, 3, 2, &mut rng);
        let loss = empirical_objective(&data, &params, &config, LossKind::Squared)
            .map_err(|e| e.to_string())?;
        let z = stack_outputs(&data.x, &params.theta, &config).map_err(|e| e.to_string())?;
        let oracle = sq_oracle_xz(&data.x, &z, &data.y).map_err(|e| e.to_string())?;
        if loss < oracle.l_star_xz - 1e-9 {
            return Err(format!(
                "loss {loss:.12e} beats oracle {:.12e} at seed {seed}",
                oracle.l_star_xz
            ));
        }
    }
    Ok(())
}

fn check_zero_depth_training_is_exact() -> std::result::Result<(), String> {
    let data =
        reslab::synth::gaussian_dataset::<f64>(10, 3, 2, 0.0, 77).map_err(|e| e.to_string())?;
    let config = StackConfig::zero_stack(3).map_err(|e| e.to_string())?;
    let cert = reslab::landscape::CertificationConfig::default();
    let (_, report, gaps) =
        train_with(&data, &config, LossKind::Squared, 77, 1e-10, 200_000, &cert, 1e-8)
            .map_err(|e| e.to_string())?;
    if (report.final_loss - gaps.l_star_x).abs() > 1e-6 {
        return Err(format!(
            "trained loss {:.12e} vs closed form {:.12e}",
            report.final_loss, gaps.l_star_x
        ));
    }
    Ok(())
}

fn check_hand_counterexample_separation() -> std::result::Result<(), String> {
    let x = Mat::from_rows(&[[1.0_f64]]);
    let y = Mat::from_rows(&[[1.0_f64]]);
    let data = DataSet::new(x, y).map_err(|e| e.to_string())?;
    let out = build_dead_relu_counterexample(&data, 0.5, 1).map_err(|e| e.to_string())?;
    if (out.separation - 1.0).abs() > 1e-12 {
        return Err(format!("separation {:.16e}, expected 1", out.separation));
    }
    if out.certification.verdict != Verdict::CertifiedLocalMin {
        return Err(format!("verdict {}", out.certification.verdict.name()));
    }
    Ok(())
}

fn check_null_space_shift_is_invisible() -> std::result::Result<(), String> {
    let config = StackConfig::uniform(1, 4, Activation::Relu, true, false)
        .map_err(|e| e.to_string())?;
    for seed in 0..10u64 {
        let data = reslab::synth::gaussian_dataset::<f64>(9, 4, 2, 0.0, seed)
            .map_err(|e| e.to_string())?;
        let mut rng = SplitMix64::derive(seed, 0x6368_6563);
        let mut params = ResNetParams::he_init(&config, 4, 2, &mut rng);
        // Make W rank one so a null direction exists.
        let row: Vec<f64> = (0..4).map(|j| params.w[(0, j)]).collect();
        for j in 0..4 {
            params.w[(1, j)] = 2.0 * row[j];
        }
        let loss = empirical_objective(&data, &params, &config, LossKind::Squared)
            .map_err(|e| e.to_string())?;
        let dev = null_space_perturb_check(&data, &params, &config, LossKind::Squared, 20, seed)
            .map_err(|e| e.to_string())?;
        if dev > 1e-12 * (1.0 + loss.abs()) {
            return Err(format!("loss moved by {dev:.3e} at seed {seed}"));
        }
    }
    Ok(())
}

fn check_reruns_are_byte_identical() -> std::result::Result<(), String> {
    let text = "\
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
    let render = || -> std::result::Result<String, String> {
        let cfg = crate::config::load_config(text, &Overrides::default())
            .map_err(|e| format!("{e:#}"))?;
        let artifacts = cmd_train_verify(&cfg).map_err(|e| format!("{e:#}"))?;
        let mut all = String::new();
        for (name, contents) in &artifacts.files {
            all.push_str(name);
            all.push('\n');
            all.push_str(contents);
        }
        Ok(all)
    };
    let first = render()?;
    let second = render()?;
    if first != second {
        return Err("two identical runs rendered different bytes".into());
    }
    if !first.contains("certified_local_min") {
        return Err("smoke run did not certify any restart".into());
    }
    Ok(())
}

/// Runs the built-in invariant suite; returns the printable report and
/// whether every check passed.
pub fn cmd_check() -> (String, bool) {
    let checks: &[Check] = &[
        ("projection-algebra", check_projection_algebra),
        ("convex-solver-vs-closed-form", check_convex_solver_matches_closed_form),
        ("gradients-vs-finite-differences", check_gradients_match_finite_differences),
        ("loss-never-beats-augmented-oracle", check_loss_never_beats_augmented_oracle),
        ("zero-depth-training-exact", check_zero_depth_training_is_exact),
        ("hand-counterexample-separation", check_hand_counterexample_separation),
        ("null-space-shift-invisible", check_null_space_shift_is_invisible),
        ("reruns-byte-identical", check_reruns_are_byte_identical),
    ];
    let mut report = String::new();
    let mut all_pass = true;
    for (name, run) in checks {
        match run() {
            Ok(()) => {
                let _ = writeln!(report, "check {name}: pass");
            }
            Err(detail) => {
                all_pass = false;
                let _ = writeln!(report, "check {name}: FAIL — {detail}");
            }
        }
    }
    let _ = writeln!(report, "{}", if all_pass { "all checks passed" } else { "CHECKS FAILED" });
    (report, all_pass)
}
