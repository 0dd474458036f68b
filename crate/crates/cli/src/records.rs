//! CSV emission. All numeric cells use 17 significant digits so the
//! printed text round-trips to the exact binary value; identical runs
//! therefore produce byte-identical files. Wall-clock timings are kept
//! out of these tables and written to a separate sidecar.

use anyhow::{anyhow, Result};
use reslab::landscape::{GapReport, TraceEntry, TrainReport};

/// 17 significant digits: enough to reconstruct any f64 exactly.
pub fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

/// Column set for the per-restart run table. Pinned by schema tests.
pub const RUNS_HEADER: [&str; 14] = [
    "config_hash",
    "restart",
    "seed",
    "status",
    "final_loss",
    "grad_norm",
    "iterations",
    "certification",
    "stationarity_z_residual",
    "stationarity_x_residual",
    "oracle_gap",
    "l_star_x",
    "l_star_xz",
    "improvement",
];

/// Column set for per-restart loss traces. Pinned by schema tests.
pub const TRACE_HEADER: [&str; 3] = ["iteration", "loss", "grad_norm"];

/// Column set for the oracle table. Pinned by schema tests.
pub const ORACLE_HEADER: [&str; 6] =
    ["config_hash", "seed", "l_star_x", "l_star_xz", "improvement", "improvement_alt"];

/// Column set for the counterexample table. Pinned by schema tests.
pub const COUNTEREXAMPLE_HEADER: [&str; 8] = [
    "config_hash",
    "seed",
    "status",
    "local_value",
    "oracle_value",
    "separation",
    "certification",
    "certification_radius",
];

/// One restart of one experiment. `report`/`gaps` are absent when the
/// restart failed; `status` then carries the error text.
#[derive(Debug, Clone)]
pub struct RunRecord {
    pub config_hash: String,
    pub restart: usize,
    pub seed: u64,
    pub status: String,
    pub report: Option<TrainReport<f64>>,
    pub gaps: Option<GapReport<f64>>,
    pub wall_time_s: f64,
}

fn finish(writer: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = writer.into_inner().map_err(|e| anyhow!("csv flush: {e}"))?;
    String::from_utf8(bytes).map_err(|e| anyhow!("csv text: {e}"))
}

/// Renders the run table. Failed restarts leave numeric cells empty.
pub fn runs_csv(records: &[RunRecord]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(RUNS_HEADER)?;
    for r in records {
        let mut row: Vec<String> = vec![
            r.config_hash.clone(),
            r.restart.to_string(),
            r.seed.to_string(),
            r.status.clone(),
        ];
        match (&r.report, &r.gaps) {
            (Some(rep), Some(g)) => {
                row.extend([
                    fmt_float(rep.final_loss),
                    fmt_float(rep.grad_norm),
                    rep.iterations.to_string(),
                    rep.certification.name().to_string(),
                    fmt_float(rep.stationarity_z_residual),
                    fmt_float(rep.stationarity_x_residual),
                    fmt_float(rep.oracle_gap),
                    fmt_float(g.l_star_x),
                    fmt_float(g.l_star_xz),
                    fmt_float(g.improvement),
                ]);
            }
            _ => row.extend(std::iter::repeat(String::new()).take(RUNS_HEADER.len() - 4)),
        }
        w.write_record(&row)?;
    }
    finish(w)
}

/// Renders one descent trace.
pub fn trace_csv(trace: &[TraceEntry<f64>]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(TRACE_HEADER)?;
    for &(it, loss, gnorm) in trace {
        w.write_record([it.to_string(), fmt_float(loss), fmt_float(gnorm)])?;
    }
    finish(w)
}

/// Renders the oracle row.
pub fn oracle_csv(
    config_hash: &str,
    seed: u64,
    l_star_x: f64,
    l_star_xz: f64,
    improvement: f64,
    improvement_alt: f64,
) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(ORACLE_HEADER)?;
    w.write_record([
        config_hash.to_string(),
        seed.to_string(),
        fmt_float(l_star_x),
        fmt_float(l_star_xz),
        fmt_float(improvement),
        fmt_float(improvement_alt),
    ])?;
    finish(w)
}

/// Renders the counterexample row; `values` is None when construction
/// was rejected.
pub fn counterexample_csv(
    config_hash: &str,
    seed: u64,
    status: &str,
    values: Option<(f64, f64, f64, &str, f64)>,
) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(COUNTEREXAMPLE_HEADER)?;
    let mut row = vec![config_hash.to_string(), seed.to_string(), status.to_string()];
    match values {
        Some((local, oracle, sep, verdict, radius)) => row.extend([
            fmt_float(local),
            fmt_float(oracle),
            fmt_float(sep),
            verdict.to_string(),
            fmt_float(radius),
        ]),
        None => row.extend(std::iter::repeat(String::new()).take(5)),
    }
    w.write_record(&row)?;
    finish(w)
}
