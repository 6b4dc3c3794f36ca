//! Command-line front door wiring all components into reproducible runs.
//!
//! Configuration precedence is flag > config file > documented default;
//! the config file is a flat JSON object keyed by long flag names. Primary
//! results go to stdout, logs to stderr. Exit codes: 0 success, 2 usage
//! (unknown flags), 3 invalid parameter values, 4 I/O failures, 5 file
//! schema errors.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::Value;

use epicalib::abc::{point_estimate, run_lfmcmc, AbcConfig, AbcTheta};
use epicalib::abm::{simulate_detailed, EpiCurve, EpiParams};
use epicalib::bench::{emit_report, run_benchmark, AbcSettings, BenchConfig, CenterStat, Method};
use epicalib::error::{Error, Result};
use epicalib::ml::{
    save_history_csv, split_train_val, train_observed, LossConfig, Observation, TrainConfig,
    TrainedModel,
};
use epicalib::nn::ArchConfig;
use epicalib::scenario::{fit_scalers, generate_dataset, save_dataset_csv, PriorConfig};

#[derive(Parser)]
#[command(
    name = "epicalib",
    version,
    about = "Agent-based SIR calibration toolkit: forward simulation, BiLSTM inverse-mapping calibration, likelihood-free MCMC, and benchmarking",
    after_help = "Config precedence: CLI flag > --config JSON entry (keyed by long flag name) > default."
)]
struct Cli {
    /// Global seed controlling all randomness [default: 0]
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker thread cap; 1 forces the strictly sequential deterministic
    /// mode [default: available cores]
    #[arg(long, global = true)]
    jobs: Option<usize>,

    /// Flat JSON config file; flags take precedence over its entries
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Simulate one epidemic curve and write it as day,incidence CSV
    Simulate(SimulateArgs),
    /// Sample scenarios from the prior and write a labeled dataset CSV plus
    /// fitted scalers JSON
    GenData(GenDataArgs),
    /// Train the BiLSTM calibrator on a dataset CSV
    Train(TrainArgs),
    /// Calibrate an observed curve
    #[command(subcommand)]
    Calibrate(CalibrateCmd),
    /// Run the benchmark study and write its report directory
    Bench(BenchArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// Population size
    #[arg(long)]
    n: Option<u32>,
    /// Initially infected count
    #[arg(long)]
    i0: Option<u32>,
    /// Daily contact rate
    #[arg(long = "crate")]
    c_rate: Option<f64>,
    /// Per-contact transmission probability
    #[arg(long)]
    ptran: Option<f64>,
    /// Per-day recovery probability
    #[arg(long)]
    precov: Option<f64>,
    /// Basic reproduction number [default: ptran*crate/precov]
    #[arg(long)]
    r0: Option<f64>,
    /// Horizon in days [default: 60]
    #[arg(long)]
    days: Option<usize>,
    /// Output CSV path [default: stdout]
    #[arg(long)]
    out: Option<PathBuf>,
    /// Optional debug output: daily infectious counts as day,infectious CSV
    #[arg(long)]
    prevalence: Option<PathBuf>,
}

#[derive(Args)]
struct PriorArgs {
    /// Prior lower bound for N [default: 5000]
    #[arg(long)]
    n_min: Option<f64>,
    /// Prior upper bound for N [default: 10000]
    #[arg(long)]
    n_max: Option<f64>,
    /// Prior lower bound for p_recov [default: 0.071]
    #[arg(long)]
    precov_min: Option<f64>,
    /// Prior upper bound for p_recov [default: 0.25]
    #[arg(long)]
    precov_max: Option<f64>,
    /// Prior lower bound for the initial infected count [default: 100]
    #[arg(long)]
    i0_min: Option<f64>,
    /// Prior upper bound for the initial infected count [default: 2000]
    #[arg(long)]
    i0_max: Option<f64>,
    /// Prior lower bound for R0 [default: 1]
    #[arg(long)]
    r0_min: Option<f64>,
    /// Prior upper bound for R0 [default: 5]
    #[arg(long)]
    r0_max: Option<f64>,
    /// Prior lower bound for the contact rate [default: 5]
    #[arg(long)]
    crate_min: Option<f64>,
    /// Prior upper bound for the contact rate [default: 15]
    #[arg(long)]
    crate_max: Option<f64>,
}

impl PriorArgs {
    fn resolve(&self, cfg: &FileCfg) -> Result<PriorConfig> {
        let d = PriorConfig::default();
        let prior = PriorConfig {
            n: (
                pick(self.n_min, cfg.f64("n-min")?, d.n.0),
                pick(self.n_max, cfg.f64("n-max")?, d.n.1),
            ),
            p_recov: (
                pick(self.precov_min, cfg.f64("precov-min")?, d.p_recov.0),
                pick(self.precov_max, cfg.f64("precov-max")?, d.p_recov.1),
            ),
            i0: (
                pick(self.i0_min, cfg.f64("i0-min")?, d.i0.0),
                pick(self.i0_max, cfg.f64("i0-max")?, d.i0.1),
            ),
            r0: (
                pick(self.r0_min, cfg.f64("r0-min")?, d.r0.0),
                pick(self.r0_max, cfg.f64("r0-max")?, d.r0.1),
            ),
            c_rate: (
                pick(self.crate_min, cfg.f64("crate-min")?, d.c_rate.0),
                pick(self.crate_max, cfg.f64("crate-max")?, d.c_rate.1),
            ),
        };
        prior.validate()?;
        Ok(prior)
    }
}

#[derive(Args)]
struct GenDataArgs {
    /// Number of scenarios [default: 20000]
    #[arg(long)]
    count: Option<usize>,
    /// Horizon in days [default: 60]
    #[arg(long)]
    days: Option<usize>,
    /// Output dataset CSV path
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output scalers JSON path [default: <out stem>.scalers.json]
    #[arg(long)]
    scalers: Option<PathBuf>,
    #[command(flatten)]
    prior: PriorArgs,
}

#[derive(Args)]
struct TrainArgs {
    /// Input dataset CSV (from gen-data)
    #[arg(long)]
    data: Option<PathBuf>,
    /// Output model JSON path
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output training-log CSV path (epoch,train_loss,val_loss,seconds)
    #[arg(long)]
    log: Option<PathBuf>,
    /// Mini-batch size [default: 64]
    #[arg(long)]
    batch: Option<usize>,
    /// Maximum training epochs [default: 100]
    #[arg(long)]
    epochs: Option<usize>,
    /// Early-stopping patience in epochs [default: 10]
    #[arg(long)]
    patience: Option<usize>,
    /// Disable early stopping
    #[arg(long, default_value_t = false)]
    no_early_stop: bool,
    /// Adam learning rate [default: 0.000277]
    #[arg(long)]
    lr: Option<f64>,
    /// Inter-layer dropout rate [default: 0.5]
    #[arg(long)]
    dropout: Option<f64>,
    /// Validation fraction of the dataset [default: 0.1]
    #[arg(long)]
    val_frac: Option<f64>,
    /// Consistency-penalty weight [default: 1]
    #[arg(long)]
    lambda: Option<f64>,
    /// Per-target MSE weights as w_ptran,w_crate,w_r0 [default: 1,1,1]
    #[arg(long)]
    weights: Option<String>,
    /// Stacked bidirectional LSTM layers [default: 3]
    #[arg(long)]
    layers: Option<usize>,
    /// Hidden units per direction [default: 160]
    #[arg(long)]
    hidden: Option<usize>,
    /// Dense head units [default: 64]
    #[arg(long)]
    dense: Option<usize>,
}

#[derive(Subcommand)]
enum CalibrateCmd {
    /// Single forward pass of a trained model; prints theta-hat JSON
    Ml(CalibrateMlArgs),
    /// Likelihood-free MCMC chain; prints the point estimate JSON
    Abc(CalibrateAbcArgs),
}

#[derive(Args)]
struct CalibrateMlArgs {
    /// Trained model JSON path
    #[arg(long)]
    model: Option<PathBuf>,
    /// Observed curve CSV (day,incidence)
    #[arg(long)]
    curve: Option<PathBuf>,
    /// Known population size
    #[arg(long)]
    n: Option<u32>,
    /// Known recovery probability
    #[arg(long)]
    precov: Option<f64>,
}

#[derive(Args)]
struct CalibrateAbcArgs {
    /// Observed curve CSV (day,incidence)
    #[arg(long)]
    curve: Option<PathBuf>,
    /// Population size held fixed during calibration
    #[arg(long)]
    n: Option<u32>,
    /// Initial infected count held fixed during calibration
    #[arg(long)]
    i0: Option<u32>,
    /// Chain length [default: 2000]
    #[arg(long)]
    iterations: Option<usize>,
    /// Iterations discarded before the point estimate [default: 1000]
    #[arg(long)]
    burn_in: Option<usize>,
    /// Proposal perturbation scale [default: 0.1]
    #[arg(long)]
    sigma: Option<f64>,
    /// Kernel bandwidth factor of ||S_obs|| [default: 0.05]
    #[arg(long)]
    kernel_scale: Option<f64>,
    /// Chain start for the contact rate [default: 10]
    #[arg(long)]
    init_crate: Option<f64>,
    /// Chain start for the recovery probability [default: 0.1605]
    #[arg(long)]
    init_precov: Option<f64>,
    /// Chain start for the transmission probability [default: 0.05]
    #[arg(long)]
    init_ptran: Option<f64>,
    /// Optional trace CSV output path
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// Test scenarios to draw [default: 100]
    #[arg(long)]
    scenarios: Option<usize>,
    /// Comma-separated methods: ml,abc [default: ml,abc]
    #[arg(long)]
    methods: Option<String>,
    /// Trained model JSON (required when methods include ml)
    #[arg(long)]
    model: Option<PathBuf>,
    /// Forward simulations per calibration [default: 100]
    #[arg(long)]
    reps: Option<usize>,
    /// Horizon in days [default: 60]
    #[arg(long)]
    days: Option<usize>,
    /// ABC chain length [default: 2000]
    #[arg(long)]
    abc_iterations: Option<usize>,
    /// ABC burn-in [default: 1000]
    #[arg(long)]
    abc_burn_in: Option<usize>,
    /// ABC proposal scale [default: 0.1]
    #[arg(long)]
    abc_sigma: Option<f64>,
    /// ABC kernel bandwidth factor [default: 0.05]
    #[arg(long)]
    abc_kernel_scale: Option<f64>,
    /// Predictive center statistic: mean or median [default: mean]
    #[arg(long)]
    center: Option<String>,
    /// Report output directory
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    prior: PriorArgs,
}

/// Flat JSON config file, keyed by long flag names.
struct FileCfg(serde_json::Map<String, Value>);

impl FileCfg {
    fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(FileCfg(serde_json::Map::new()));
        };
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let value: Value =
            serde_json::from_str(&text).map_err(|e| Error::schema(path, e.to_string()))?;
        match value {
            Value::Object(map) => Ok(FileCfg(map)),
            _ => Err(Error::schema(path, "config must be a flat JSON object")),
        }
    }

    fn f64(&self, key: &str) -> Result<Option<f64>> {
        match self.0.get(key) {
            None => Ok(None),
            Some(v) => v.as_f64().map(Some).ok_or_else(|| bad_key(key, "number")),
        }
    }

    fn u64(&self, key: &str) -> Result<Option<u64>> {
        match self.0.get(key) {
            None => Ok(None),
            Some(v) => v.as_u64().map(Some).ok_or_else(|| bad_key(key, "integer")),
        }
    }

    fn usize(&self, key: &str) -> Result<Option<usize>> {
        Ok(self.u64(key)?.map(|v| v as usize))
    }

    fn u32(&self, key: &str) -> Result<Option<u32>> {
        match self.u64(key)? {
            None => Ok(None),
            Some(v) => u32::try_from(v).map(Some).map_err(|_| bad_key(key, "u32")),
        }
    }

    fn string(&self, key: &str) -> Result<Option<String>> {
        match self.0.get(key) {
            None => Ok(None),
            Some(v) => v
                .as_str()
                .map(|s| Some(s.to_string()))
                .ok_or_else(|| bad_key(key, "string")),
        }
    }

    fn bool(&self, key: &str) -> Result<Option<bool>> {
        match self.0.get(key) {
            None => Ok(None),
            Some(v) => v.as_bool().map(Some).ok_or_else(|| bad_key(key, "bool")),
        }
    }
}

fn bad_key(key: &str, expected: &str) -> Error {
    Error::InvalidParam(format!("config key '{key}' must be a {expected}"))
}

fn pick<T>(cli: Option<T>, file: Option<T>, default: T) -> T {
    cli.or(file).unwrap_or(default)
}

fn require<T>(cli: Option<T>, file: Option<T>, flag: &str) -> Result<T> {
    cli.or(file)
        .ok_or_else(|| Error::InvalidParam(format!("--{flag} is required")))
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {}: {e}", e.tag());
        std::process::exit(e.exit_code());
    }
}

fn run(cli: Cli) -> Result<()> {
    let cfg = FileCfg::load(cli.config.as_deref())?;
    let seed = pick(cli.seed, cfg.u64("seed")?, 0);
    let jobs = pick(cli.jobs, cfg.usize("jobs")?, 0);
    if jobs > 0 {
        // Ignore failure: the global pool can only be set once per process.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global();
    }

    match cli.cmd {
        Cmd::Simulate(a) => cmd_simulate(a, &cfg, seed),
        Cmd::GenData(a) => cmd_gen_data(a, &cfg, seed),
        Cmd::Train(a) => cmd_train(a, &cfg, seed),
        Cmd::Calibrate(CalibrateCmd::Ml(a)) => cmd_calibrate_ml(a, &cfg),
        Cmd::Calibrate(CalibrateCmd::Abc(a)) => cmd_calibrate_abc(a, &cfg, seed),
        Cmd::Bench(a) => cmd_bench(a, &cfg, seed),
    }
}

fn cmd_simulate(a: SimulateArgs, cfg: &FileCfg, seed: u64) -> Result<()> {
    let n = require(a.n, cfg.u32("n")?, "n")?;
    let i0 = require(a.i0, cfg.u32("i0")?, "i0")?;
    let c_rate = require(a.c_rate, cfg.f64("crate")?, "crate")?;
    let p_tran = require(a.ptran, cfg.f64("ptran")?, "ptran")?;
    let p_recov = require(a.precov, cfg.f64("precov")?, "precov")?;
    let r0 = pick(a.r0, cfg.f64("r0")?, p_tran * c_rate / p_recov);
    let days = pick(a.days, cfg.usize("days")?, 60);
    let params = EpiParams::new(n, i0, c_rate, p_tran, p_recov, r0)?;
    let detail = simulate_detailed(&params, days, seed)?;

    match &a.out {
        Some(path) => detail.curve.save_csv(path)?,
        None => {
            let mut out = std::io::stdout().lock();
            detail
                .curve
                .write_csv(&mut out)
                .map_err(|e| Error::io("<stdout>", e))?;
        }
    }
    if let Some(path) = &a.prevalence {
        let mut s = String::from("day,infectious\n");
        for (day, count) in detail.infectious.iter().enumerate() {
            s.push_str(&format!("{day},{count}\n"));
        }
        std::fs::write(path, s).map_err(|e| Error::io(path, e))?;
    }
    Ok(())
}

fn cmd_gen_data(a: GenDataArgs, cfg: &FileCfg, seed: u64) -> Result<()> {
    let count = pick(a.count, cfg.usize("count")?, 20000);
    let days = pick(a.days, cfg.usize("days")?, 60);
    let out = require(a.out, cfg.string("out")?.map(PathBuf::from), "out")?;
    let scalers_path = pick(
        a.scalers,
        cfg.string("scalers")?.map(PathBuf::from),
        default_scalers_path(&out),
    );
    let prior = a.prior.resolve(cfg)?;

    let data = generate_dataset(count, days, &prior, seed)?;
    save_dataset_csv(&data, &out)?;
    let scalers = fit_scalers(&data)?;
    scalers.save_json(&scalers_path)?;
    eprintln!(
        "wrote {count} scenarios x {days} days to {} (scalers: {})",
        out.display(),
        scalers_path.display()
    );
    Ok(())
}

fn default_scalers_path(out: &Path) -> PathBuf {
    let mut name = out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".into());
    name.push_str(".scalers.json");
    out.with_file_name(name)
}

fn parse_weights(s: &str) -> Result<[f64; 3]> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 3 {
        return Err(Error::InvalidParam(format!(
            "--weights needs three comma-separated values, got '{s}'"
        )));
    }
    let mut w = [0.0; 3];
    for (i, p) in parts.iter().enumerate() {
        w[i] = p
            .trim()
            .parse()
            .map_err(|_| Error::InvalidParam(format!("bad weight '{p}'")))?;
    }
    Ok(w)
}

fn opt_path(cli: Option<PathBuf>, file: Option<String>) -> Option<PathBuf> {
    cli.or(file.map(PathBuf::from))
}

fn cmd_train(a: TrainArgs, cfg: &FileCfg, seed: u64) -> Result<()> {
    let data_path = require(a.data, cfg.string("data")?.map(PathBuf::from), "data")?;
    let out = require(a.out, cfg.string("out")?.map(PathBuf::from), "out")?;
    let no_early_stop = a.no_early_stop || cfg.bool("no-early-stop")?.unwrap_or(false);
    let train_cfg = TrainConfig {
        batch_size: pick(a.batch, cfg.usize("batch")?, 64),
        max_epochs: pick(a.epochs, cfg.usize("epochs")?, 100),
        patience: if no_early_stop {
            None
        } else {
            Some(pick(a.patience, cfg.usize("patience")?, 10))
        },
        learning_rate: pick(a.lr, cfg.f64("lr")?, 2.77e-4),
        dropout: pick(a.dropout, cfg.f64("dropout")?, 0.5),
        val_fraction: pick(a.val_frac, cfg.f64("val-frac")?, 0.1),
        seed,
    };
    let loss_cfg = LossConfig {
        lambda: pick(a.lambda, cfg.f64("lambda")?, 1.0),
        target_weights: match pick(a.weights, cfg.string("weights")?, String::new()) {
            s if s.is_empty() => [1.0, 1.0, 1.0],
            s => parse_weights(&s)?,
        },
    };
    let arch = ArchConfig::with_dims(
        pick(a.layers, cfg.usize("layers")?, 3),
        pick(a.hidden, cfg.usize("hidden")?, 160),
        pick(a.dense, cfg.usize("dense")?, 64),
    );

    let data = epicalib::scenario::load_dataset_csv(&data_path)?;
    let (train_set, val_set) = split_train_val(data, train_cfg.val_fraction, seed)?;
    let scalers = fit_scalers(&train_set)?;
    eprintln!(
        "training on {} scenarios ({} validation), arch {} layers x {} hidden / {} dense",
        train_set.len(),
        val_set.len(),
        arch.bilstm_layers,
        arch.hidden_size,
        arch.dense_size
    );
    let (model, history) = train_observed(
        &train_set,
        &val_set,
        &scalers,
        arch,
        &train_cfg,
        &loss_cfg,
        |r| {
            eprintln!(
                "epoch {:>3}: train {:.6} val {:.6} ({:.1}s)",
                r.epoch, r.train_loss, r.val_loss, r.seconds
            );
        },
    )?;
    model.save_json(&out)?;
    if let Some(log) = opt_path(a.log, cfg.string("log")?) {
        save_history_csv(&history, &log)?;
    }
    eprintln!(
        "model saved to {} (best epoch {}, best val loss {:?})",
        out.display(),
        model.meta.best_epoch,
        model.meta.best_val_loss
    );
    Ok(())
}

fn cmd_calibrate_ml(a: CalibrateMlArgs, cfg: &FileCfg) -> Result<()> {
    let model_path = require(a.model, cfg.string("model")?.map(PathBuf::from), "model")?;
    let curve_path = require(a.curve, cfg.string("curve")?.map(PathBuf::from), "curve")?;
    let n = require(a.n, cfg.u32("n")?, "n")?;
    let p_recov = require(a.precov, cfg.f64("precov")?, "precov")?;

    let model = TrainedModel::load_json(&model_path)?;
    let curve = EpiCurve::load_csv(&curve_path)?;
    let theta = model.predict(&Observation {
        curve: &curve,
        n,
        p_recov,
    })?;
    println!("{}", serde_json::to_string(&theta).expect("theta serializes"));
    Ok(())
}

fn cmd_calibrate_abc(a: CalibrateAbcArgs, cfg: &FileCfg, seed: u64) -> Result<()> {
    let curve_path = require(a.curve, cfg.string("curve")?.map(PathBuf::from), "curve")?;
    let n = require(a.n, cfg.u32("n")?, "n")?;
    let i0 = require(a.i0, cfg.u32("i0")?, "i0")?;
    let chain_cfg = AbcConfig {
        iterations: pick(a.iterations, cfg.usize("iterations")?, 2000),
        burn_in: pick(a.burn_in, cfg.usize("burn-in")?, 1000),
        proposal_sigma: pick(a.sigma, cfg.f64("sigma")?, 0.1),
        kernel_scale: pick(a.kernel_scale, cfg.f64("kernel-scale")?, 0.05),
        n,
        i0,
        init: AbcTheta {
            c_rate: pick(a.init_crate, cfg.f64("init-crate")?, 10.0),
            p_recov: pick(a.init_precov, cfg.f64("init-precov")?, 0.1605),
            p_tran: pick(a.init_ptran, cfg.f64("init-ptran")?, 0.05),
        },
        seed,
    };
    let curve = EpiCurve::load_csv(&curve_path)?;
    let trace = run_lfmcmc(&curve, &chain_cfg)?;
    let estimate = point_estimate(&trace, chain_cfg.burn_in)?;
    if let Some(path) = opt_path(a.trace, cfg.string("trace")?) {
        trace.save_csv(&path)?;
    }
    eprintln!(
        "chain of {} iterations, acceptance rate {:.3}",
        trace.len(),
        trace.acceptance_rate()
    );
    println!(
        "{}",
        serde_json::to_string(&estimate).expect("estimate serializes")
    );
    Ok(())
}

fn cmd_bench(a: BenchArgs, cfg: &FileCfg, seed: u64) -> Result<()> {
    let out = require(a.out, cfg.string("out")?.map(PathBuf::from), "out")?;
    let methods_str = pick(a.methods, cfg.string("methods")?, "ml,abc".to_string());
    let mut methods = Vec::new();
    for part in methods_str.split(',').filter(|s| !s.trim().is_empty()) {
        let m = Method::parse(part)?;
        if !methods.contains(&m) {
            methods.push(m);
        }
    }
    let center = match pick(a.center, cfg.string("center")?, "mean".into()).as_str() {
        "mean" => CenterStat::Mean,
        "median" => CenterStat::Median,
        other => {
            return Err(Error::InvalidParam(format!(
                "--center must be 'mean' or 'median', got '{other}'"
            )))
        }
    };
    let bench_cfg = BenchConfig {
        scenarios: pick(a.scenarios, cfg.usize("scenarios")?, 100),
        methods: methods.clone(),
        reps: pick(a.reps, cfg.usize("reps")?, 100),
        horizon: pick(a.days, cfg.usize("days")?, 60),
        prior: a.prior.resolve(cfg)?,
        abc: AbcSettings {
            iterations: pick(a.abc_iterations, cfg.usize("abc-iterations")?, 2000),
            burn_in: pick(a.abc_burn_in, cfg.usize("abc-burn-in")?, 1000),
            proposal_sigma: pick(a.abc_sigma, cfg.f64("abc-sigma")?, 0.1),
            kernel_scale: pick(a.abc_kernel_scale, cfg.f64("abc-kernel-scale")?, 0.05),
            init: AbcTheta::default(),
        },
        center,
        seed,
    };

    let model = if methods.contains(&Method::Ml) {
        let path = require(a.model, cfg.string("model")?.map(PathBuf::from), "model")?;
        Some(TrainedModel::load_json(&path)?)
    } else {
        None
    };

    eprintln!(
        "benchmarking {} scenarios with methods [{methods_str}]",
        bench_cfg.scenarios
    );
    let report = run_benchmark(&bench_cfg, model.as_ref())?;
    emit_report(&report, &out)?;
    epicalib::bench::summarize(&report, std::io::stderr().lock())
        .map_err(|e| Error::io("<stderr>", e))?;
    eprintln!("report written to {}", out.display());
    Ok(())
}
