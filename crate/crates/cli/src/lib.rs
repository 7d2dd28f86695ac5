//! Command-line front end: config parsing, experiment dispatch, checker suites and result files.

pub mod config;
pub mod output;

use config::RunConfig;
use neuron_lab::experiments::{self, ExperimentResult, Verdict};
use neuron_lab::theory::{self, battery::{BatteryGrid, Suite}};
use neuron_lab::LabError;
use output::{out_root, read_summary, read_trials, write_result, Summary};
use std::collections::BTreeSet;
use std::io::Write;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numerical abort: {0}")]
    Numerical(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<LabError> for CliError {
    fn from(e: LabError) -> Self {
        match e {
            LabError::NonFinite(_) => CliError::Numerical(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

/// Process exit codes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Exit {
    Pass = 0,
    Fail = 1,
    Config = 2,
    Numerical = 3,
}

impl Exit {
    pub fn from_error(e: &CliError) -> Self {
        match e {
            CliError::Config(_) => Exit::Config,
            CliError::Numerical(_) | CliError::Io(_) => Exit::Numerical,
        }
    }

    fn from_verdict(v: Verdict) -> Self {
        if v == Verdict::Pass {
            Exit::Pass
        } else {
            Exit::Fail
        }
    }
}

/// Overrides shared by every subcommand.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub tolerance_scale: Option<f64>,
    pub workers: usize,
}

fn apply(mut cfg: RunConfig, o: &Overrides) -> Result<RunConfig, CliError> {
    if o.seed.is_some() {
        cfg.seed = o.seed;
    }
    if o.tolerance_scale.is_some() {
        cfg.tolerance_scale = o.tolerance_scale;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn summary_line(r: &ExperimentResult) -> String {
    let reference = r.reference.map(|x| format!("{x:.4}")).unwrap_or_else(|| "-".into());
    format!(
        "{}: {}/{} = {:.4} [{:.4}, {:.4}] reference {} invariant violations {} verdict {:?}",
        r.id, r.successes, r.n_trials, r.fraction, r.interval[0], r.interval[1], reference, r.invariant_violations, r.verdict
    )
}

/// `run`: executes one experiment and writes its result tree.
pub fn cmd_run(config: &Path, o: &Overrides, log: &mut dyn Write) -> Result<(Exit, PathBuf), CliError> {
    let cfg = apply(RunConfig::load(config)?, o)?;
    let res = experiments::run(&cfg.spec())?;
    let root = out_root(o.out.as_deref(), cfg.out.as_deref());
    let dir = write_result(&root, &cfg, &res, o.workers)?;
    let _ = writeln!(log, "{}", summary_line(&res));
    for c in &res.checks {
        let _ = writeln!(log, "  check {}: {} ({})", c.name, if c.passed { "pass" } else { "fail" }, c.detail);
    }
    let _ = writeln!(log, "results written to {}", dir.display());
    Ok((Exit::from_verdict(res.verdict), dir))
}

/// `verify`: the checker battery over the built-in grids.
pub fn cmd_verify(suite: Suite, o: &Overrides, inject_fault: bool, log: &mut dyn Write) -> Result<Exit, CliError> {
    theory::set_gamma_fault(inject_fault);
    let report = theory::battery::verify(
        suite,
        o.seed.unwrap_or(config::DEFAULT_SEED),
        &BatteryGrid::default(),
        o.tolerance_scale.unwrap_or(1.0),
    );
    theory::set_gamma_fault(false);
    let report = report?;
    let _ = write!(log, "{}", report.table());
    if report.total_fails() == 0 {
        let _ = writeln!(log, "all checks passed");
        Ok(Exit::Pass)
    } else {
        let _ = writeln!(log, "failing: {}", report.failing_ids().join(", "));
        Ok(Exit::Fail)
    }
}

/// `sweep`: cross product over one or two parameter grids, one long-format CSV.
pub fn cmd_sweep(config: &Path, o: &Overrides, log: &mut dyn Write) -> Result<(Exit, PathBuf), CliError> {
    let cfg = apply(RunConfig::load(config)?, o)?;
    let Some(sw) = cfg.sweep.clone() else {
        return Err(CliError::Config("sweep: missing [sweep] table".into()));
    };
    let second: Vec<Option<&toml::Value>> = match &sw.values2 {
        Some(v) => v.iter().map(Some).collect(),
        None => vec![None],
    };
    let mut rows = Vec::new();
    for a in &sw.values {
        for b in &second {
            let mut c = cfg.with_param(&sw.param, a)?;
            if let (Some(name), Some(b)) = (&sw.param2, b) {
                c = c.with_param(name, b)?;
            }
            let res = experiments::run(&c.spec())?;
            let _ = writeln!(log, "{} = {a}{}: {}", sw.param, b.map(|b| format!(", {b}")).unwrap_or_default(), summary_line(&res));
            rows.push((a.clone(), b.cloned(), res));
        }
    }
    let root = out_root(o.out.as_deref(), cfg.out.as_deref());
    let dir = output::fresh_dir(&root, cfg.params.id())?;
    let path = dir.join("sweep.csv");
    let metric_keys: BTreeSet<String> = rows.iter().flat_map(|r| r.2.metrics.keys().cloned()).collect();
    let mut w = csv::Writer::from_path(&path).map_err(|e| CliError::Io(e.to_string()))?;
    let mut header = vec!["id".to_string(), sw.param.clone()];
    if let Some(p2) = &sw.param2 {
        header.push(p2.clone());
    }
    header.extend(
        ["n_trials", "successes", "fraction", "ci_lo", "ci_hi", "reference", "invariant_violations", "verdict"]
            .map(String::from),
    );
    header.extend(metric_keys.iter().cloned());
    w.write_record(&header).map_err(|e| CliError::Io(e.to_string()))?;
    let mut all_pass = true;
    for (a, b, r) in &rows {
        all_pass &= r.verdict == Verdict::Pass;
        let mut row = vec![r.id.to_string(), a.to_string()];
        if sw.param2.is_some() {
            row.push(b.as_ref().map(|b| b.to_string()).unwrap_or_default());
        }
        row.push(r.n_trials.to_string());
        row.push(r.successes.to_string());
        row.extend([r.fraction, r.interval[0], r.interval[1]].map(output::fmt_f64));
        row.push(r.reference.map(output::fmt_f64).unwrap_or_default());
        row.push(r.invariant_violations.to_string());
        row.push(format!("{:?}", r.verdict).to_lowercase());
        row.extend(metric_keys.iter().map(|k| r.metrics.get(k).map(|&x| output::fmt_f64(x)).unwrap_or_default()));
        w.write_record(&row).map_err(|e| CliError::Io(e.to_string()))?;
    }
    w.flush().map_err(|e| CliError::Io(e.to_string()))?;
    std::fs::write(dir.join("config.json"), serde_json::to_string_pretty(&cfg).unwrap_or_default() + "\n")
        .map_err(|e| CliError::Io(e.to_string()))?;
    let _ = writeln!(log, "sweep written to {}", path.display());
    Ok((if all_pass { Exit::Pass } else { Exit::Fail }, path))
}

/// Verdict recomputed from trials.csv and the stored rule.
pub fn recompute(summary: &Summary, trials: Vec<neuron_lab::experiments::TrialRecord>) -> ExperimentResult {
    ExperimentResult::from_trials(summary.id, summary.rule, trials)
}

/// `report`: pretty-prints a stored summary and re-derives its verdict from trials.csv.
pub fn cmd_report(path: &Path, log: &mut dyn Write) -> Result<Exit, CliError> {
    let dir = if path.is_dir() { path.to_path_buf() } else { path.parent().unwrap_or(Path::new(".")).to_path_buf() };
    let summary = read_summary(&dir.join("summary.json"))?;
    let trials = read_trials(&dir.join("trials.csv"))?;
    let again = recompute(&summary, trials);
    let _ = writeln!(log, "experiment   {}", summary.id);
    let _ = writeln!(log, "trials       {}", summary.n_trials);
    let _ = writeln!(log, "successes    {} ({:.4})", summary.successes, summary.fraction);
    let _ = writeln!(log, "95% interval [{:.4}, {:.4}]", summary.interval[0], summary.interval[1]);
    if let Some(r) = summary.reference {
        let _ = writeln!(log, "reference    {r:.6}");
    }
    let _ = writeln!(log, "rule         {:?}", summary.rule);
    let _ = writeln!(log, "violations   {}", summary.invariant_violations);
    for c in &summary.checks {
        let _ = writeln!(log, "check        {}: {} ({})", c.name, if c.passed { "pass" } else { "fail" }, c.detail);
    }
    for (k, v) in &summary.metrics {
        let _ = writeln!(log, "metric       {k} = {v:.6e}");
    }
    for n in &summary.notes {
        let _ = writeln!(log, "note         {n}");
    }
    let _ = writeln!(log, "verdict      {:?} (recomputed {:?})", summary.verdict, again.verdict);
    if again.verdict != summary.verdict || again.successes != summary.successes {
        let _ = writeln!(log, "stored verdict does not match trials.csv");
        return Ok(Exit::Fail);
    }
    Ok(Exit::from_verdict(again.verdict))
}
