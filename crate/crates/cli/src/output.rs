//! Result tree: config.json, trials.csv, summary.json, manifest.json, trajectories/.

use crate::config::RunConfig;
use crate::CliError;
use neuron_lab::experiments::{
    AggregateCheck, ExperimentId, ExperimentResult, TrialRecord, Verdict, VerdictRule,
};
use neuron_lab::optimizer::TrajectoryRecord;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

pub const ENV_OUT: &str = "NEURON_LAB_OUT";

/// Aggregate part of a result, as stored in summary.json.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub id: ExperimentId,
    pub n_trials: usize,
    pub successes: usize,
    pub fraction: f64,
    pub interval: [f64; 2],
    pub reference: Option<f64>,
    pub rule: VerdictRule,
    pub invariant_violations: usize,
    pub checks: Vec<AggregateCheck>,
    pub verdict: Verdict,
    pub metrics: BTreeMap<String, f64>,
    pub notes: Vec<String>,
}

impl From<&ExperimentResult> for Summary {
    fn from(r: &ExperimentResult) -> Self {
        Self {
            id: r.id,
            n_trials: r.n_trials,
            successes: r.successes,
            fraction: r.fraction,
            interval: r.interval,
            reference: r.reference,
            rule: r.rule,
            invariant_violations: r.invariant_violations,
            checks: r.checks.clone(),
            verdict: r.verdict,
            metrics: r.metrics.clone(),
            notes: r.notes.clone(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub artifact: String,
    pub version: String,
    pub created: String,
    pub command: Vec<String>,
    pub workers: usize,
    pub base_seed: u64,
    pub seed_derivation: String,
    pub config: RunConfig,
}

pub fn out_root(flag: Option<&Path>, cfg: Option<&str>) -> PathBuf {
    if let Some(p) = flag {
        return p.to_path_buf();
    }
    if let Some(p) = cfg {
        return PathBuf::from(p);
    }
    match std::env::var_os(ENV_OUT) {
        Some(p) if !p.is_empty() => PathBuf::from(p),
        _ => PathBuf::from("results"),
    }
}

fn io(e: impl std::fmt::Display, path: &Path) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

/// Creates `<root>/<id>/<timestamp>/`, adding a suffix if that directory already exists.
pub fn fresh_dir(root: &Path, id: ExperimentId) -> Result<PathBuf, CliError> {
    let stamp = chrono::Utc::now().format("%Y%m%dT%H%M%S%.3fZ").to_string();
    let base = root.join(id.as_str());
    let mut dir = base.join(&stamp);
    let mut k = 1;
    while dir.exists() {
        dir = base.join(format!("{stamp}-{k}"));
        k += 1;
    }
    std::fs::create_dir_all(&dir).map_err(|e| io(e, &dir))?;
    Ok(dir)
}

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| io(e, path))?;
    std::fs::write(path, text + "\n").map_err(|e| io(e, path))
}

pub fn write_trials(path: &Path, trials: &[TrialRecord]) -> Result<(), CliError> {
    let keys: BTreeSet<&str> = trials.iter().flat_map(|t| t.values.keys().map(String::as_str)).collect();
    let mut w = csv::Writer::from_path(path).map_err(|e| io(e, path))?;
    let mut header = vec!["index", "success", "invariant_ok"];
    header.extend(keys.iter().copied());
    w.write_record(&header).map_err(|e| io(e, path))?;
    for t in trials {
        let mut row = vec![t.index.to_string(), (t.success as u8).to_string(), (t.invariant_ok as u8).to_string()];
        row.extend(keys.iter().map(|k| t.values.get(*k).map(|&x| fmt_f64(x)).unwrap_or_default()));
        w.write_record(&row).map_err(|e| io(e, path))?;
    }
    w.flush().map_err(|e| io(e, path))
}

pub fn read_trials(path: &Path) -> Result<Vec<TrialRecord>, CliError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| io(e, path))?;
    let header: Vec<String> = r.headers().map_err(|e| io(e, path))?.iter().map(String::from).collect();
    if header.len() < 3 || header[..3] != ["index", "success", "invariant_ok"] {
        return Err(CliError::Config(format!("{}: unexpected header", path.display())));
    }
    let bad = |what: &str| CliError::Config(format!("{}: bad {what}", path.display()));
    let mut out = Vec::new();
    for row in r.records() {
        let row = row.map_err(|e| io(e, path))?;
        let index: u64 = row[0].parse().map_err(|_| bad("index"))?;
        let success = &row[1] == "1";
        let inv = &row[2] == "1";
        let mut t = TrialRecord::new(index, success, inv);
        for (k, cell) in header[3..].iter().zip(row.iter().skip(3)) {
            if !cell.is_empty() {
                t.values.insert(k.clone(), cell.parse().map_err(|_| bad(k))?);
            }
        }
        out.push(t);
    }
    Ok(out)
}

pub fn write_trajectory(path: &Path, rec: &TrajectoryRecord<f64>) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io(e, path))?;
    let d = rec.final_w.dim();
    let mut header: Vec<String> =
        ["iter", "time", "loss", "dist_sq", "grad_norm", "joint_positive_prob"].iter().map(|s| s.to_string()).collect();
    header.extend((0..d).map(|i| format!("w{i}")));
    header.push("bias".into());
    w.write_record(&header).map_err(|e| io(e, path))?;
    for s in &rec.steps {
        let mut row = vec![s.iter.to_string()];
        row.extend([s.time, s.loss, s.dist_sq, s.grad_norm, s.flags.joint_positive_prob].map(fmt_f64));
        row.extend(s.w.weights.iter().map(|&x| fmt_f64(x)));
        row.push(fmt_f64(s.w.bias));
        w.write_record(&row).map_err(|e| io(e, path))?;
    }
    w.flush().map_err(|e| io(e, path))
}

/// Writes the full result tree and returns its directory.
pub fn write_result(root: &Path, cfg: &RunConfig, res: &ExperimentResult, workers: usize) -> Result<PathBuf, CliError> {
    let dir = fresh_dir(root, res.id)?;
    let spec = cfg.spec();
    write_json(&dir.join("config.json"), cfg)?;
    write_trials(&dir.join("trials.csv"), &res.trials)?;
    write_json(&dir.join("summary.json"), &Summary::from(res))?;
    let manifest = Manifest {
        artifact: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        created: chrono::Utc::now().to_rfc3339(),
        command: std::env::args().collect(),
        workers,
        base_seed: spec.base_seed,
        seed_derivation: "trial i draws from ChaCha12 seeded with base_seed ^ splitmix64(3) on stream i; \
                          initializations shared across a sweep use domain 6; results do not depend on workers"
            .to_string(),
        config: cfg.clone(),
    };
    write_json(&dir.join("manifest.json"), &manifest)?;
    if !res.trajectories.is_empty() {
        let tdir = dir.join("trajectories");
        std::fs::create_dir_all(&tdir).map_err(|e| io(e, &tdir))?;
        for (i, rec) in &res.trajectories {
            write_trajectory(&tdir.join(format!("trial_{i}.csv")), rec)?;
        }
    }
    Ok(dir)
}

pub fn read_summary(path: &Path) -> Result<Summary, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| io(e, path))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip_through_text() {
        for x in [0.1, 1.0 / 3.0, 6.855756186102133e-99, -2.5e300, f64::MIN_POSITIVE] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        }
    }
}
