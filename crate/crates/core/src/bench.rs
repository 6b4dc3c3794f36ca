//! Simulation-study harness: parameter-recovery error tables, forward
//! predictive bias / 95% envelope coverage, and wall-clock timings for both
//! calibrators, with deterministic CSV/JSON reporting.
//!
//! Per-method timing follows the amortized-training framing: the BiLSTM
//! column times scaler application plus one forward pass, while the ABC
//! column times the full chain including its simulations.

use std::io::Write as IoWrite;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::abc::{point_estimate, run_lfmcmc, AbcTheta};
use crate::abm::{simulate_ensemble, EpiCurve, EpiParams};
use crate::error::{Error, Result};
use crate::ml::{Observation, TrainedModel};
use crate::rng::{child_rng, child_seed};
use crate::scenario::{sample_params, PriorConfig};

/// Calibration methods under comparison, in canonical report order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Abc,
    Ml,
}

impl Method {
    /// Column label used in report files.
    pub fn label(&self) -> &'static str {
        match self {
            Method::Abc => "ABC",
            Method::Ml => "BiLSTM",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "abc" => Ok(Method::Abc),
            "ml" | "bilstm" => Ok(Method::Ml),
            other => Err(Error::InvalidParam(format!(
                "unknown method '{other}' (expected 'ml' or 'abc')"
            ))),
        }
    }
}

/// Estimator for the predictive center curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CenterStat {
    Mean,
    Median,
}

/// Error statistics for one parameter and method.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamStats {
    pub mae: f64,
    pub rmse: f64,
    pub mean_bias: f64,
    pub median_bias: f64,
}

/// Per-scenario bias = estimate - truth; MAE, RMSE, mean and median bias
/// per coordinate of (p_tran, c_rate, r0).
pub fn parameter_metrics(estimates: &[[f64; 3]], truths: &[[f64; 3]]) -> Result<[ParamStats; 3]> {
    if estimates.len() != truths.len() {
        return Err(Error::ShapeMismatch(format!(
            "estimates ({}) and truths ({}) must be index-aligned",
            estimates.len(),
            truths.len()
        )));
    }
    if estimates.is_empty() {
        return Err(Error::InvalidParam("need at least one estimate".into()));
    }
    let n = estimates.len() as f64;
    let mut out = [ParamStats {
        mae: 0.0,
        rmse: 0.0,
        mean_bias: 0.0,
        median_bias: 0.0,
    }; 3];
    for j in 0..3 {
        let mut biases: Vec<f64> = estimates
            .iter()
            .zip(truths)
            .map(|(e, t)| e[j] - t[j])
            .collect();
        let mae = biases.iter().map(|b| b.abs()).sum::<f64>() / n;
        let rmse = (biases.iter().map(|b| b * b).sum::<f64>() / n).sqrt();
        let mean_bias = biases.iter().sum::<f64>() / n;
        biases.sort_by(|a, b| a.partial_cmp(b).expect("finite biases"));
        let m = biases.len();
        let median_bias = if m % 2 == 1 {
            biases[m / 2]
        } else {
            (biases[m / 2 - 1] + biases[m / 2]) / 2.0
        };
        out[j] = ParamStats {
            mae,
            rmse,
            mean_bias,
            median_bias,
        };
    }
    Ok(out)
}

/// Linear-interpolation empirical quantile (the common "type 7" rule) on a
/// sorted slice.
fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    let h = (n as f64 - 1.0) * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
    }
}

/// Per-day predictive evaluation of one calibrated parameter set against
/// the observed curve.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioEval {
    /// Center (mean or median) of the forward ensemble per day.
    pub center: Vec<f64>,
    /// `delta_t = I_t - center_t` against the observed curve.
    pub delta: Vec<f64>,
    /// `delta_t / I_t`; `None` on days with `I_t == 0`.
    pub rel: Vec<Option<f64>>,
    /// Observed value inside the 95% envelope, per day.
    pub covered: Vec<bool>,
    pub q_lo: Vec<f64>,
    pub q_hi: Vec<f64>,
}

/// Forward-simulates `reps` curves from calibrated parameters (the truth
/// scenario's `n` and `i0` are already baked into `calibrated`) and scores
/// them against the observed series.
pub fn predictive_eval(
    calibrated: &EpiParams,
    observed: &EpiCurve,
    reps: usize,
    seed: u64,
    center_stat: CenterStat,
) -> Result<ScenarioEval> {
    if reps < 2 {
        return Err(Error::InvalidParam(
            "predictive evaluation needs reps >= 2 for quantiles".into(),
        ));
    }
    let horizon = observed.horizon();
    let ensemble = simulate_ensemble(calibrated, horizon, reps, seed)?;
    let mut center = Vec::with_capacity(horizon);
    let mut delta = Vec::with_capacity(horizon);
    let mut rel = Vec::with_capacity(horizon);
    let mut covered = Vec::with_capacity(horizon);
    let mut q_lo = Vec::with_capacity(horizon);
    let mut q_hi = Vec::with_capacity(horizon);
    let mut day_values = vec![0.0f64; reps];
    for t in 0..horizon {
        for (r, curve) in ensemble.iter().enumerate() {
            day_values[r] = f64::from(curve.incidence()[t]);
        }
        day_values.sort_by(|a, b| a.partial_cmp(b).expect("counts are finite"));
        let c = match center_stat {
            CenterStat::Mean => day_values.iter().sum::<f64>() / reps as f64,
            CenterStat::Median => quantile_sorted(&day_values, 0.5),
        };
        let lo = quantile_sorted(&day_values, 0.025);
        let hi = quantile_sorted(&day_values, 0.975);
        let obs = f64::from(observed.incidence()[t]);
        center.push(c);
        delta.push(obs - c);
        rel.push(if obs > 0.0 { Some((obs - c) / obs) } else { None });
        covered.push(obs >= lo && obs <= hi);
        q_lo.push(lo);
        q_hi.push(hi);
    }
    Ok(ScenarioEval {
        center,
        delta,
        rel,
        covered,
        q_lo,
        q_hi,
    })
}

/// ABC chain settings shared by all benchmark scenarios (`n`, `i0`, and the
/// seed are filled per scenario).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AbcSettings {
    pub iterations: usize,
    pub burn_in: usize,
    pub proposal_sigma: f64,
    pub kernel_scale: f64,
    pub init: AbcTheta,
}

impl Default for AbcSettings {
    fn default() -> Self {
        AbcSettings {
            iterations: 2000,
            burn_in: 1000,
            proposal_sigma: 0.1,
            kernel_scale: 0.05,
            init: AbcTheta::default(),
        }
    }
}

/// Benchmark configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub scenarios: usize,
    pub methods: Vec<Method>,
    /// Forward simulations per calibrated scenario.
    pub reps: usize,
    pub horizon: usize,
    pub prior: PriorConfig,
    pub abc: AbcSettings,
    pub center: CenterStat,
    pub seed: u64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            scenarios: 100,
            methods: vec![Method::Abc, Method::Ml],
            reps: 100,
            horizon: 60,
            prior: PriorConfig::default(),
            abc: AbcSettings::default(),
            center: CenterStat::Mean,
            seed: 0,
        }
    }
}

/// Aggregated per-day predictive row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictiveDayRow {
    pub day: usize,
    /// Mean over scenarios of `I_t - center_t`.
    pub mean_bias: f64,
    /// Mean over scenarios of `delta_t / I_t`, days with `I_t = 0` excluded.
    pub mean_rel_bias: Option<f64>,
    /// Share of scenarios whose observation fell inside the envelope.
    pub coverage: f64,
    /// Mean across scenarios of the per-scenario 2.5% envelope bound.
    pub q_lo: f64,
    /// Mean across scenarios of the per-scenario 97.5% envelope bound.
    pub q_hi: f64,
}

/// Aggregated predictive report for one method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodPredictive {
    pub method: Method,
    pub days: Vec<PredictiveDayRow>,
    pub overall_coverage: f64,
    /// Count of (scenario, day) pairs excluded from relative bias.
    pub rel_excluded: usize,
}

/// Wall-clock summary for one method.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MethodTiming {
    pub method: Method,
    pub runs: usize,
    pub mean_seconds: f64,
    pub median_seconds: f64,
    pub total_seconds: f64,
}

/// Parameter-recovery table for one method.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MethodErrors {
    pub method: Method,
    /// Stats in target order (p_tran, c_rate, r0).
    pub stats: [ParamStats; 3],
}

/// Full benchmark output.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub config: BenchConfig,
    pub param_errors: Vec<MethodErrors>,
    pub predictive: Vec<MethodPredictive>,
    pub timings: Vec<MethodTiming>,
    /// Scenario index plus reason, for every failed scenario.
    pub failures: Vec<(usize, String)>,
}

struct MethodOutcome {
    estimate: [f64; 3],
    seconds: f64,
    eval: ScenarioEval,
}

struct ScenarioOutcome {
    truth: [f64; 3],
    per_method: Vec<MethodOutcome>,
}

fn calibrate_one(
    method: Method,
    obs: &EpiCurve,
    truth: &EpiParams,
    cfg: &BenchConfig,
    model: Option<&TrainedModel>,
    base_seed: u64,
) -> Result<(EpiParams, f64)> {
    match method {
        Method::Abc => {
            let chain_cfg = crate::abc::AbcConfig {
                iterations: cfg.abc.iterations,
                burn_in: cfg.abc.burn_in,
                proposal_sigma: cfg.abc.proposal_sigma,
                kernel_scale: cfg.abc.kernel_scale,
                n: truth.n,
                i0: truth.i0,
                init: cfg.abc.init,
                seed: child_seed(base_seed, 2),
            };
            let started = Instant::now();
            let trace = run_lfmcmc(obs, &chain_cfg)?;
            let est = point_estimate(&trace, chain_cfg.burn_in)?;
            let seconds = started.elapsed().as_secs_f64();
            let params = EpiParams {
                n: truth.n,
                i0: truth.i0,
                c_rate: est.c_rate,
                p_tran: est.p_tran,
                p_recov: est.p_recov,
                r0: est.r0,
            };
            Ok((params, seconds))
        }
        Method::Ml => {
            let model = model.ok_or_else(|| {
                Error::InvalidParam("ml method requested without a trained model".into())
            })?;
            let observation = Observation {
                curve: obs,
                n: truth.n,
                p_recov: truth.p_recov,
            };
            let (theta, seconds) = model.predict_timed(&observation)?;
            let params = EpiParams {
                n: truth.n,
                i0: truth.i0,
                c_rate: theta.c_rate,
                p_tran: theta.p_tran,
                // The network treats p_recov as a known covariate.
                p_recov: truth.p_recov,
                r0: theta.r0,
            };
            Ok((params, seconds))
        }
    }
}

/// Runs the full study: draws fresh test scenarios from the prior,
/// calibrates each observed curve with every requested method under
/// per-run timing, forward-simulates the calibrated parameters, and
/// aggregates. Scenario-level work fans out across threads; failures are
/// collected, never silently dropped.
pub fn run_benchmark(cfg: &BenchConfig, model: Option<&TrainedModel>) -> Result<BenchReport> {
    if cfg.scenarios < 1 {
        return Err(Error::InvalidParam("benchmark needs >= 1 scenario".into()));
    }
    cfg.prior.validate()?;
    if cfg.methods.contains(&Method::Ml) {
        let m = model.ok_or_else(|| {
            Error::InvalidParam("ml method requested without a trained model".into())
        })?;
        if m.horizon != cfg.horizon {
            return Err(Error::ShapeMismatch(format!(
                "model horizon {} != benchmark horizon {}",
                m.horizon, cfg.horizon
            )));
        }
    }

    let outcomes: Vec<(usize, std::result::Result<ScenarioOutcome, String>)> = (0..cfg.scenarios)
        .into_par_iter()
        .map(|i| {
            let run = || -> Result<ScenarioOutcome> {
                let base = child_seed(cfg.seed, i as u64);
                let truth = sample_params(&cfg.prior, &mut child_rng(base, 0));
                let obs = crate::abm::simulate(&truth, cfg.horizon, child_seed(base, 1))?;
                let mut per_method = Vec::with_capacity(cfg.methods.len());
                for (m_idx, &method) in cfg.methods.iter().enumerate() {
                    let (params, seconds) =
                        calibrate_one(method, &obs, &truth, cfg, model, base)?;
                    let eval = predictive_eval(
                        &params,
                        &obs,
                        cfg.reps,
                        child_seed(base, 3 + m_idx as u64),
                        cfg.center,
                    )?;
                    per_method.push(MethodOutcome {
                        estimate: [params.p_tran, params.c_rate, params.r0],
                        seconds,
                        eval,
                    });
                }
                Ok(ScenarioOutcome {
                    truth: [truth.p_tran, truth.c_rate, truth.r0],
                    per_method,
                })
            };
            (i, run().map_err(|e| e.to_string()))
        })
        .collect();

    let mut failures = Vec::new();
    let mut successes = Vec::new();
    for (i, outcome) in outcomes {
        match outcome {
            Ok(o) => successes.push(o),
            Err(e) => failures.push((i, e)),
        }
    }
    if successes.is_empty() && !cfg.methods.is_empty() {
        return Err(Error::Numeric(format!(
            "all {} benchmark scenarios failed; first: {}",
            cfg.scenarios,
            failures
                .first()
                .map(|(_, e)| e.as_str())
                .unwrap_or("unknown")
        )));
    }

    let mut param_errors = Vec::new();
    let mut predictive = Vec::new();
    let mut timings = Vec::new();
    for (m_idx, &method) in cfg.methods.iter().enumerate() {
        let estimates: Vec<[f64; 3]> = successes.iter().map(|s| s.per_method[m_idx].estimate).collect();
        let truths: Vec<[f64; 3]> = successes.iter().map(|s| s.truth).collect();
        param_errors.push(MethodErrors {
            method,
            stats: parameter_metrics(&estimates, &truths)?,
        });

        let n_sc = successes.len() as f64;
        let mut days = Vec::with_capacity(cfg.horizon);
        let mut covered_total = 0usize;
        let mut rel_excluded = 0usize;
        for t in 0..cfg.horizon {
            let mut bias = 0.0;
            let mut rel_sum = 0.0;
            let mut rel_n = 0usize;
            let mut cov = 0usize;
            let mut lo = 0.0;
            let mut hi = 0.0;
            for s in &successes {
                let e = &s.per_method[m_idx].eval;
                bias += e.delta[t];
                match e.rel[t] {
                    Some(r) => {
                        rel_sum += r;
                        rel_n += 1;
                    }
                    None => rel_excluded += 1,
                }
                if e.covered[t] {
                    cov += 1;
                }
                lo += e.q_lo[t];
                hi += e.q_hi[t];
            }
            covered_total += cov;
            days.push(PredictiveDayRow {
                day: t,
                mean_bias: bias / n_sc,
                mean_rel_bias: if rel_n > 0 { Some(rel_sum / rel_n as f64) } else { None },
                coverage: cov as f64 / n_sc,
                q_lo: lo / n_sc,
                q_hi: hi / n_sc,
            });
        }
        predictive.push(MethodPredictive {
            method,
            days,
            overall_coverage: covered_total as f64 / (n_sc * cfg.horizon as f64),
            rel_excluded,
        });

        let mut secs: Vec<f64> = successes.iter().map(|s| s.per_method[m_idx].seconds).collect();
        secs.sort_by(|a, b| a.partial_cmp(b).expect("finite timings"));
        let total: f64 = secs.iter().sum();
        let median = if secs.len() % 2 == 1 {
            secs[secs.len() / 2]
        } else {
            (secs[secs.len() / 2 - 1] + secs[secs.len() / 2]) / 2.0
        };
        timings.push(MethodTiming {
            method,
            runs: secs.len(),
            mean_seconds: total / secs.len() as f64,
            median_seconds: median,
            total_seconds: total,
        });
    }

    Ok(BenchReport {
        config: cfg.clone(),
        param_errors,
        predictive,
        timings,
        failures,
    })
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn write_file(path: &Path, content: &str) -> Result<()> {
    std::fs::write(path, content).map_err(|e| Error::io(path, e))
}

/// Manifest body: seeds, configuration, and component versions, no timing
/// values, so reruns regenerate it byte-identically.
#[derive(Serialize, Deserialize)]
struct Manifest {
    tool_version: String,
    config: BenchConfig,
    scenarios_failed: Vec<(usize, String)>,
    overall_coverage: Vec<(Method, f64)>,
    rel_excluded: Vec<(Method, usize)>,
}

/// Writes `param_errors.csv`, `daily_bounds.csv`, `bias_coverage.csv`,
/// `timings.csv`, gnuplot-ready `.dat` twins, and `manifest.json` into
/// `out_dir`. Content is deterministic for fixed inputs except the wall
/// clock columns in `timings.csv`.
pub fn emit_report(report: &BenchReport, out_dir: &Path) -> Result<()> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;

    // Canonical method order for columns: ABC first, then BiLSTM.
    let mut methods: Vec<Method> = report.config.methods.clone();
    methods.sort_by_key(|m| match m {
        Method::Abc => 0,
        Method::Ml => 1,
    });
    methods.dedup();

    // param_errors.csv: one row per (parameter, method), Table-2 order.
    let mut s = String::from("parameter,method,mae,rmse,mean_bias,median_bias\n");
    for (label, idx) in [("R0", 2usize), ("c_rate", 1), ("p_tran", 0)] {
        for &m in &methods {
            if let Some(err) = report.param_errors.iter().find(|e| e.method == m) {
                let st = err.stats[idx];
                s.push_str(&format!(
                    "{label},{},{},{},{},{}\n",
                    m.label(),
                    st.mae,
                    st.rmse,
                    st.mean_bias,
                    st.median_bias
                ));
            }
        }
    }
    write_file(&out_dir.join("param_errors.csv"), &s)?;

    // daily_bounds.csv: Day plus per-method envelope columns.
    let mut header = String::from("Day");
    for &m in &methods {
        header.push_str(&format!(",{}_Q2.5,{}_Q97.5", m.label(), m.label()));
    }
    let mut s = header.clone() + "\n";
    let mut dat = format!("# {}\n", header.replace(',', " "));
    for t in 0..report.config.horizon {
        let mut row = t.to_string();
        let mut drow = t.to_string();
        let mut have_row = false;
        for &m in &methods {
            if let Some(p) = report.predictive.iter().find(|p| p.method == m) {
                let d = &p.days[t];
                row.push_str(&format!(",{},{}", d.q_lo, d.q_hi));
                drow.push_str(&format!(" {} {}", d.q_lo, d.q_hi));
                have_row = true;
            }
        }
        if have_row {
            s.push_str(&row);
            s.push('\n');
            dat.push_str(&drow);
            dat.push('\n');
        }
    }
    write_file(&out_dir.join("daily_bounds.csv"), &s)?;
    write_file(&out_dir.join("daily_bounds.dat"), &dat)?;

    // bias_coverage.csv: per-day bias, relative bias, coverage per method,
    // plus a final overall-coverage row.
    let mut header = String::from("day");
    for &m in &methods {
        let l = m.label();
        header.push_str(&format!(",{l}_bias,{l}_rel_bias,{l}_coverage"));
    }
    let mut s = header.clone() + "\n";
    let mut dat = format!("# {}\n", header.replace(',', " "));
    for t in 0..report.config.horizon {
        let mut row = t.to_string();
        let mut drow = t.to_string();
        let mut have_row = false;
        for &m in &methods {
            if let Some(p) = report.predictive.iter().find(|p| p.method == m) {
                let d = &p.days[t];
                row.push_str(&format!(
                    ",{},{},{}",
                    d.mean_bias,
                    fmt_opt(d.mean_rel_bias),
                    d.coverage
                ));
                drow.push_str(&format!(
                    " {} {} {}",
                    d.mean_bias,
                    d.mean_rel_bias.map(|x| x.to_string()).unwrap_or_else(|| "nan".into()),
                    d.coverage
                ));
                have_row = true;
            }
        }
        if have_row {
            s.push_str(&row);
            s.push('\n');
            dat.push_str(&drow);
            dat.push('\n');
        }
    }
    if !methods.is_empty() && !report.predictive.is_empty() {
        let mut row = String::from("overall");
        for &m in &methods {
            if let Some(p) = report.predictive.iter().find(|p| p.method == m) {
                row.push_str(&format!(",,,{}", p.overall_coverage));
            }
        }
        s.push_str(&row);
        s.push('\n');
    }
    write_file(&out_dir.join("bias_coverage.csv"), &s)?;
    write_file(&out_dir.join("bias_coverage.dat"), &dat)?;

    // timings.csv: the only file with wall-clock content.
    let mut s = String::from("method,runs,mean_seconds,median_seconds,total_seconds\n");
    for &m in &methods {
        if let Some(t) = report.timings.iter().find(|t| t.method == m) {
            s.push_str(&format!(
                "{},{},{},{},{}\n",
                m.label(),
                t.runs,
                t.mean_seconds,
                t.median_seconds,
                t.total_seconds
            ));
        }
    }
    write_file(&out_dir.join("timings.csv"), &s)?;

    let manifest = Manifest {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        config: report.config.clone(),
        scenarios_failed: report.failures.clone(),
        overall_coverage: report
            .predictive
            .iter()
            .map(|p| (p.method, p.overall_coverage))
            .collect(),
        rel_excluded: report
            .predictive
            .iter()
            .map(|p| (p.method, p.rel_excluded))
            .collect(),
    };
    let path = out_dir.join("manifest.json");
    let json = serde_json::to_string_pretty(&manifest)
        .map_err(|e| Error::schema(&path, e.to_string()))?;
    write_file(&path, &(json + "\n"))?;
    Ok(())
}

/// Convenience: writes a `key = value` gnuplot-style summary to a writer.
/// Used by the CLI for terse stderr reporting.
pub fn summarize<W: IoWrite>(report: &BenchReport, mut w: W) -> std::io::Result<()> {
    for e in &report.param_errors {
        writeln!(
            w,
            "{}: MAE p_tran {:.4} c_rate {:.4} R0 {:.4}",
            e.method.label(),
            e.stats[0].mae,
            e.stats[1].mae,
            e.stats[2].mae
        )?;
    }
    for t in &report.timings {
        writeln!(
            w,
            "{}: mean {:.3}s median {:.3}s total {:.1}s over {} runs",
            t.method.label(),
            t.mean_seconds,
            t.median_seconds,
            t.total_seconds,
            t.runs
        )?;
    }
    for p in &report.predictive {
        writeln!(
            w,
            "{}: overall 95% envelope coverage {:.3}",
            p.method.label(),
            p.overall_coverage
        )?;
    }
    if !report.failures.is_empty() {
        writeln!(w, "failed scenarios: {:?}", report.failures)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::abm::simulate;
    use crate::ml::{train, LossConfig, TrainConfig};
    use crate::nn::ArchConfig;
    use crate::scenario::{fit_scalers, generate_dataset};

    #[test]
    fn parameter_metrics_trivial_cases() {
        let a = [[0.1, 5.0, 2.0], [0.2, 7.0, 3.0]];
        let m = parameter_metrics(&a, &a).unwrap();
        for j in 0..3 {
            assert_eq!(m[j].mae, 0.0);
            assert_eq!(m[j].rmse, 0.0);
            assert_eq!(m[j].mean_bias, 0.0);
            assert_eq!(m[j].median_bias, 0.0);
        }

        let est = [[2.0, 2.0, 2.0]];
        let tru = [[1.0, 1.0, 1.0]];
        let m = parameter_metrics(&est, &tru).unwrap();
        for j in 0..3 {
            assert_eq!(m[j].mae, 1.0);
            assert_eq!(m[j].rmse, 1.0);
            assert_eq!(m[j].mean_bias, 1.0);
            assert_eq!(m[j].median_bias, 1.0);
        }

        assert!(parameter_metrics(&est, &[]).is_err());
    }

    #[test]
    fn parameter_metrics_matches_naive_recomputation() {
        use rand::RngExt;
        let mut rng = crate::rng::rng_from_seed(7);
        let n = 100;
        let estimates: Vec<[f64; 3]> = (0..n)
            .map(|_| [rng.random_range(0.0..1.0), rng.random_range(0.0..20.0), rng.random_range(0.0..6.0)])
            .collect();
        let truths: Vec<[f64; 3]> = (0..n)
            .map(|_| [rng.random_range(0.0..1.0), rng.random_range(0.0..20.0), rng.random_range(0.0..6.0)])
            .collect();
        let m = parameter_metrics(&estimates, &truths).unwrap();

        // Naive spreadsheet-style recomputation.
        for j in 0..3 {
            let biases: Vec<f64> = (0..n).map(|i| estimates[i][j] - truths[i][j]).collect();
            let mae = biases.iter().map(|b| b.abs()).sum::<f64>() / n as f64;
            let rmse = (biases.iter().map(|b| b * b).sum::<f64>() / n as f64).sqrt();
            let mean = biases.iter().sum::<f64>() / n as f64;
            let mut sorted = biases.clone();
            sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let median = (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0;
            assert!((m[j].mae - mae).abs() < 1e-12);
            assert!((m[j].rmse - rmse).abs() < 1e-12);
            assert!((m[j].mean_bias - mean).abs() < 1e-12);
            assert!((m[j].median_bias - median).abs() < 1e-12);
            assert!(m[j].mae <= m[j].rmse + 1e-12, "MAE must not exceed RMSE");
        }
    }

    #[test]
    fn predictive_eval_degenerate_deterministic_dynamics() {
        // p_tran = 0: every forward curve equals [i0, 0, ...], so bias is
        // zero and coverage is total when the observation matches.
        let p = EpiParams::new(500, 20, 8.0, 0.0, 0.2, 1.0).unwrap();
        let obs = simulate(&p, 10, 3).unwrap();
        let eval = predictive_eval(&p, &obs, 20, 44, CenterStat::Mean).unwrap();
        for t in 0..10 {
            assert_eq!(eval.delta[t], 0.0);
            assert!(eval.covered[t]);
        }
        // Day 0 envelope is the seed count exactly.
        assert_eq!(eval.q_lo[0], 20.0);
        assert_eq!(eval.q_hi[0], 20.0);
        assert!(predictive_eval(&p, &obs, 1, 44, CenterStat::Mean).is_err());
    }

    #[test]
    fn predictive_envelopes_are_monotone() {
        let p = EpiParams::new(2000, 50, 9.0, 0.03, 0.15, 9.0 * 0.03 / 0.15).unwrap();
        let obs = simulate(&p, 30, 5).unwrap();
        let eval = predictive_eval(&p, &obs, 60, 46, CenterStat::Mean).unwrap();
        for t in 0..30 {
            assert!(eval.q_lo[t] <= eval.center[t] + 1e-12);
            assert!(eval.center[t] <= eval.q_hi[t] + 1e-12);
        }
    }

    fn tiny_model(seed: u64, horizon: usize) -> TrainedModel {
        let data = generate_dataset(30, horizon, &PriorConfig::default(), seed).unwrap();
        let scalers = fit_scalers(&data).unwrap();
        let cfg = TrainConfig {
            batch_size: 10,
            max_epochs: 2,
            patience: None,
            learning_rate: 0.01,
            dropout: 0.0,
            seed,
            ..TrainConfig::default()
        };
        let (model, _) = train(
            &data[..25],
            &data[25..],
            &scalers,
            ArchConfig::with_dims(1, 4, 4),
            &cfg,
            &LossConfig::default(),
        )
        .unwrap();
        model
    }

    fn tiny_bench_config(seed: u64) -> BenchConfig {
        BenchConfig {
            scenarios: 3,
            methods: vec![Method::Ml, Method::Abc],
            reps: 10,
            horizon: 15,
            abc: AbcSettings {
                iterations: 40,
                burn_in: 20,
                ..AbcSettings::default()
            },
            seed,
            ..BenchConfig::default()
        }
    }

    #[test]
    fn benchmark_runs_and_is_deterministic_modulo_timing() {
        let model = tiny_model(5, 15);
        let cfg = tiny_bench_config(31);
        let r1 = run_benchmark(&cfg, Some(&model)).unwrap();
        let r2 = run_benchmark(&cfg, Some(&model)).unwrap();
        assert!(r1.failures.is_empty());
        assert_eq!(r1.param_errors, r2.param_errors);
        assert_eq!(r1.predictive, r2.predictive);
        assert_eq!(r1.timings.len(), 2);
        for p in &r1.predictive {
            assert!(p.overall_coverage >= 0.0 && p.overall_coverage <= 1.0);
            for d in &p.days {
                assert!(d.q_lo <= d.q_hi);
            }
        }
    }

    #[test]
    fn benchmark_requires_model_for_ml() {
        let cfg = tiny_bench_config(1);
        assert!(run_benchmark(&cfg, None).is_err());
    }

    #[test]
    fn emit_report_writes_expected_files_deterministically() {
        let model = tiny_model(6, 15);
        let cfg = tiny_bench_config(32);
        let report = run_benchmark(&cfg, Some(&model)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let out1 = dir.path().join("a");
        let out2 = dir.path().join("b");
        emit_report(&report, &out1).unwrap();
        emit_report(&report, &out2).unwrap();

        for name in [
            "param_errors.csv",
            "daily_bounds.csv",
            "daily_bounds.dat",
            "bias_coverage.csv",
            "bias_coverage.dat",
            "timings.csv",
            "manifest.json",
        ] {
            let a = std::fs::read(out1.join(name)).unwrap();
            let b = std::fs::read(out2.join(name)).unwrap();
            assert!(!a.is_empty());
            assert_eq!(a, b, "{name} must be deterministic for one report");
        }

        // Table-1 column layout with both methods present.
        let bounds = std::fs::read_to_string(out1.join("daily_bounds.csv")).unwrap();
        assert!(bounds.starts_with("Day,ABC_Q2.5,ABC_Q97.5,BiLSTM_Q2.5,BiLSTM_Q97.5\n"));
        assert_eq!(bounds.lines().count(), 1 + 15);
    }

    #[test]
    fn emit_report_empty_methods_yields_headers_only() {
        let report = BenchReport {
            config: BenchConfig {
                methods: vec![],
                scenarios: 1,
                ..BenchConfig::default()
            },
            param_errors: vec![],
            predictive: vec![],
            timings: vec![],
            failures: vec![],
        };
        let dir = tempfile::tempdir().unwrap();
        emit_report(&report, dir.path()).unwrap();
        let s = std::fs::read_to_string(dir.path().join("param_errors.csv")).unwrap();
        assert_eq!(s, "parameter,method,mae,rmse,mean_bias,median_bias\n");
        let s = std::fs::read_to_string(dir.path().join("daily_bounds.csv")).unwrap();
        assert_eq!(s, "Day\n");
        let s = std::fs::read_to_string(dir.path().join("timings.csv")).unwrap();
        assert_eq!(s, "method,runs,mean_seconds,median_seconds,total_seconds\n");
    }

    #[test]
    fn method_parsing() {
        assert_eq!(Method::parse("ml").unwrap(), Method::Ml);
        assert_eq!(Method::parse("ABC").unwrap(), Method::Abc);
        assert!(Method::parse("gibbs").is_err());
    }
}
