//! BiLSTM inverse-mapping calibrator: composite loss, training loop with
//! early stopping, fast inference, and model persistence.
//!
//! The loss is a raw-scale MSE over the three targets plus an
//! epidemiological consistency penalty
//! `lambda * (r0_hat * gamma - p_tran_hat * c_rate_hat)^2`, where `gamma` is
//! each sample's known recovery rate. Optional per-target MSE weights are
//! available because raw-scale MSE is dominated by the contact rate; the
//! default (all ones) reproduces the plain composite loss.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use ndarray::{Array1, Array2, Array3};
use serde::{Deserialize, Serialize};

use crate::abm::EpiCurve;
use crate::error::{Error, Result};
use crate::nn::{
    backward, forward, AdamParams, AdamState, ArchConfig, Batch, NetworkWeights,
};
use crate::rng::{child_rng, child_seed};
use crate::scenario::{encode_input, ModelInput, Scalers, Scenario};

/// Serialized model format version.
pub const MODEL_FORMAT_VERSION: u32 = 1;

/// Composite-loss configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossConfig {
    /// Weight of the consistency penalty; 0 disables it.
    pub lambda: f64,
    /// Per-target MSE weights for (p_tran, c_rate, r0).
    pub target_weights: [f64; 3],
}

impl Default for LossConfig {
    fn default() -> Self {
        LossConfig {
            lambda: 1.0,
            target_weights: [1.0, 1.0, 1.0],
        }
    }
}

impl LossConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.lambda.is_finite() || self.lambda < 0.0 {
            return Err(Error::InvalidParam(format!(
                "lambda must be finite and >= 0, got {}",
                self.lambda
            )));
        }
        for (j, w) in self.target_weights.iter().enumerate() {
            if !w.is_finite() || *w < 0.0 {
                return Err(Error::InvalidParam(format!(
                    "target weight {j} must be finite and >= 0, got {w}"
                )));
            }
        }
        Ok(())
    }
}

/// Training-loop configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub max_epochs: usize,
    /// Early-stopping patience in epochs; `None` disables early stopping.
    pub patience: Option<usize>,
    pub learning_rate: f64,
    /// Inter-layer dropout rate.
    pub dropout: f64,
    /// Fraction of scenarios reserved for validation by [`split_train_val`].
    pub val_fraction: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch_size: 64,
            max_epochs: 100,
            patience: Some(10),
            learning_rate: 2.77e-4,
            dropout: 0.5,
            val_fraction: 0.1,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size < 1 {
            return Err(Error::InvalidParam("batch size must be >= 1".into()));
        }
        if let Some(p) = self.patience {
            if p < 1 {
                return Err(Error::InvalidParam("patience must be >= 1 when set".into()));
            }
        }
        if !self.learning_rate.is_finite() || self.learning_rate <= 0.0 {
            return Err(Error::InvalidParam(format!(
                "learning rate must be > 0, got {}",
                self.learning_rate
            )));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::InvalidParam(format!(
                "dropout must be in [0,1), got {}",
                self.dropout
            )));
        }
        if !(self.val_fraction > 0.0 && self.val_fraction < 1.0) {
            return Err(Error::InvalidParam(format!(
                "validation fraction must be in (0,1), got {}",
                self.val_fraction
            )));
        }
        Ok(())
    }
}

/// Point estimate of the calibration targets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThetaHat {
    pub p_tran: f64,
    pub c_rate: f64,
    pub r0: f64,
}

/// Target triple in output order.
pub fn target_of(params: &crate::abm::EpiParams) -> [f64; 3] {
    [params.p_tran, params.c_rate, params.r0]
}

fn check_finite_inputs(
    theta_hat: &Array2<f64>,
    targets: &Array2<f64>,
    gamma: &Array1<f64>,
) -> Result<()> {
    if theta_hat
        .iter()
        .chain(targets.iter())
        .chain(gamma.iter())
        .all(|v| v.is_finite())
    {
        Ok(())
    } else {
        Err(Error::Numeric("non-finite input to loss".into()))
    }
}

/// Composite loss: per-target-weighted MSE summed over targets (mean over
/// the batch) plus `lambda` times the mean squared consistency residual.
pub fn loss(
    theta_hat: &Array2<f64>,
    targets: &Array2<f64>,
    gamma: &Array1<f64>,
    cfg: &LossConfig,
) -> Result<f64> {
    loss_and_grad(theta_hat, targets, gamma, cfg).map(|(l, _)| l)
}

/// Loss value plus its gradient with respect to the activated outputs.
pub fn loss_and_grad(
    theta_hat: &Array2<f64>,
    targets: &Array2<f64>,
    gamma: &Array1<f64>,
    cfg: &LossConfig,
) -> Result<(f64, Array2<f64>)> {
    cfg.validate()?;
    check_finite_inputs(theta_hat, targets, gamma)?;
    let b_len = theta_hat.shape()[0];
    if targets.shape() != theta_hat.shape() || gamma.len() != b_len {
        return Err(Error::ShapeMismatch(format!(
            "loss shapes: theta_hat {:?}, targets {:?}, gamma {}",
            theta_hat.shape(),
            targets.shape(),
            gamma.len()
        )));
    }
    let inv_b = 1.0 / b_len as f64;
    let mut total = 0.0;
    let mut d_theta = Array2::<f64>::zeros(theta_hat.raw_dim());
    for b in 0..b_len {
        for j in 0..3 {
            let diff = theta_hat[[b, j]] - targets[[b, j]];
            total += cfg.target_weights[j] * diff * diff * inv_b;
            d_theta[[b, j]] = 2.0 * cfg.target_weights[j] * diff * inv_b;
        }
        let p = theta_hat[[b, 0]];
        let c = theta_hat[[b, 1]];
        let r = theta_hat[[b, 2]];
        let res = r * gamma[b] - p * c;
        total += cfg.lambda * res * res * inv_b;
        let dres = 2.0 * cfg.lambda * res * inv_b;
        d_theta[[b, 0]] -= dres * c;
        d_theta[[b, 1]] -= dres * p;
        d_theta[[b, 2]] += dres * gamma[b];
    }
    Ok((total, d_theta))
}

/// One scenario encoded for the network.
#[derive(Debug, Clone)]
pub struct Encoded {
    pub input: ModelInput,
    pub target: [f64; 3],
    pub gamma: f64,
}

/// Applies the scalers to a full scenario set.
pub fn encode_scenarios(
    set: &[Scenario],
    scalers: &Scalers,
    horizon: usize,
) -> Result<Vec<Encoded>> {
    set.iter()
        .map(|s| {
            let input =
                encode_input(&s.curve, s.params.n, s.params.p_recov, scalers, horizon, true)?;
            Ok(Encoded {
                input,
                target: target_of(&s.params),
                gamma: s.params.p_recov,
            })
        })
        .collect()
}

/// Assembles a batch from encoded scenarios in index order.
pub fn make_batch(encoded: &[Encoded], idxs: &[usize]) -> Batch {
    let b_len = idxs.len();
    let t_len = encoded[idxs[0]].input.incidence.len();
    let mut steps = Array3::<f64>::zeros((t_len, b_len, 1));
    let mut statics = Array2::<f64>::zeros((b_len, 2));
    let mut mask = Array2::<f64>::zeros((t_len, b_len));
    let mut targets = Array2::<f64>::zeros((b_len, 3));
    let mut gamma = Array1::<f64>::zeros(b_len);
    for (col, &i) in idxs.iter().enumerate() {
        let e = &encoded[i];
        for t in 0..t_len {
            steps[[t, col, 0]] = e.input.incidence[t];
            mask[[t, col]] = if e.input.mask[t] { 1.0 } else { 0.0 };
        }
        statics[[col, 0]] = e.input.statics[0];
        statics[[col, 1]] = e.input.statics[1];
        for j in 0..3 {
            targets[[col, j]] = e.target[j];
        }
        gamma[col] = e.gamma;
    }
    Batch {
        steps,
        statics,
        mask,
        targets,
        gamma,
    }
}

/// Training metadata kept with the model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainMeta {
    pub epochs_run: usize,
    pub best_epoch: usize,
    pub best_val_loss: Option<f64>,
    pub seed: u64,
}

/// One row of the training log.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub seconds: f64,
}

/// Weights plus everything needed to apply them: the training-time scalers,
/// the loss configuration, and the model horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub weights: NetworkWeights,
    pub scalers: Scalers,
    pub loss: LossConfig,
    pub horizon: usize,
    pub meta: TrainMeta,
}

/// Seeded shuffle split into (train, validation).
pub fn split_train_val(
    mut scenarios: Vec<Scenario>,
    val_fraction: f64,
    seed: u64,
) -> Result<(Vec<Scenario>, Vec<Scenario>)> {
    if !(val_fraction > 0.0 && val_fraction < 1.0) {
        return Err(Error::InvalidParam(format!(
            "validation fraction must be in (0,1), got {val_fraction}"
        )));
    }
    if scenarios.len() < 2 {
        return Err(Error::InvalidParam(
            "need at least 2 scenarios to split".into(),
        ));
    }
    let mut rng = child_rng(seed, u64::MAX);
    shuffle(&mut scenarios, &mut rng);
    let val_len = ((scenarios.len() as f64) * val_fraction).round().max(1.0) as usize;
    let val_len = val_len.min(scenarios.len() - 1);
    let val = scenarios.split_off(scenarios.len() - val_len);
    Ok((scenarios, val))
}

/// Fisher-Yates with our own stream, so splits reproduce across platforms.
fn shuffle<T>(items: &mut [T], rng: &mut crate::rng::SimRng) {
    use rand::RngExt;
    for i in (1..items.len()).rev() {
        let j = rng.random_range(0..=i as u64) as usize;
        items.swap(i, j);
    }
}

fn mean_loss_over(
    weights: &NetworkWeights,
    encoded: &[Encoded],
    batch_size: usize,
    loss_cfg: &LossConfig,
) -> Result<f64> {
    let idxs: Vec<usize> = (0..encoded.len()).collect();
    let mut acc = 0.0;
    for chunk in idxs.chunks(batch_size) {
        let batch = make_batch(encoded, chunk);
        let pass = forward(weights, &batch, 0.0, false, None)?;
        let (l, _) = loss_and_grad(&pass.theta, &batch.targets, &batch.gamma, loss_cfg)?;
        acc += l * chunk.len() as f64;
    }
    Ok(acc / encoded.len() as f64)
}

/// Mini-batch Adam training with validation-based early stopping.
///
/// After every epoch the validation loss is evaluated with dropout off;
/// training stops once it has not improved for `patience` epochs and the
/// weights from the best epoch are restored. Fully deterministic for a
/// fixed config.
pub fn train(
    train_set: &[Scenario],
    val_set: &[Scenario],
    scalers: &Scalers,
    arch: ArchConfig,
    cfg: &TrainConfig,
    loss_cfg: &LossConfig,
) -> Result<(TrainedModel, Vec<EpochRecord>)> {
    train_observed(train_set, val_set, scalers, arch, cfg, loss_cfg, |_| {})
}

/// [`train`] with a per-epoch observer, for progress reporting.
#[allow(clippy::too_many_arguments)]
pub fn train_observed(
    train_set: &[Scenario],
    val_set: &[Scenario],
    scalers: &Scalers,
    arch: ArchConfig,
    cfg: &TrainConfig,
    loss_cfg: &LossConfig,
    mut on_epoch: impl FnMut(&EpochRecord),
) -> Result<(TrainedModel, Vec<EpochRecord>)> {
    cfg.validate()?;
    loss_cfg.validate()?;
    arch.validate()?;
    if train_set.is_empty() || val_set.is_empty() {
        return Err(Error::InvalidParam(
            "training and validation sets must be non-empty".into(),
        ));
    }
    let horizon = train_set[0].curve.horizon();
    let train_enc = encode_scenarios(train_set, scalers, horizon)?;
    let val_enc = encode_scenarios(val_set, scalers, horizon)?;

    let mut weights = NetworkWeights::init(arch, child_seed(cfg.seed, 0))?;
    let mut adam = AdamState::new(weights.len(), AdamParams::with_lr(cfg.learning_rate));

    let mut history: Vec<EpochRecord> = Vec::new();
    let mut best_weights = weights.clone();
    let mut best_val = f64::INFINITY;
    let mut best_epoch = 0usize;
    let mut stale = 0usize;

    for epoch in 1..=cfg.max_epochs {
        let started = Instant::now();
        let mut rng = child_rng(cfg.seed, epoch as u64);
        let mut order: Vec<usize> = (0..train_enc.len()).collect();
        shuffle(&mut order, &mut rng);

        let mut acc = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            let batch = make_batch(&train_enc, chunk);
            let pass = forward(&weights, &batch, cfg.dropout, true, Some(&mut rng))?;
            let (l, d_theta) = loss_and_grad(&pass.theta, &batch.targets, &batch.gamma, loss_cfg)?;
            if !l.is_finite() {
                return Err(Error::Numeric(format!(
                    "training loss diverged at epoch {epoch}"
                )));
            }
            let grads = backward(&weights, &batch, &pass, &d_theta)?;
            adam.step(weights.data_mut(), &grads)?;
            acc += l * chunk.len() as f64;
        }
        let train_loss = acc / train_enc.len() as f64;
        let val_loss = mean_loss_over(&weights, &val_enc, cfg.batch_size, loss_cfg)?;
        if !val_loss.is_finite() {
            return Err(Error::Numeric(format!(
                "validation loss diverged at epoch {epoch}"
            )));
        }
        let record = EpochRecord {
            epoch,
            train_loss,
            val_loss,
            seconds: started.elapsed().as_secs_f64(),
        };
        on_epoch(&record);
        history.push(record);

        if val_loss < best_val {
            best_val = val_loss;
            best_weights = weights.clone();
            best_epoch = epoch;
            stale = 0;
        } else {
            stale += 1;
            if let Some(patience) = cfg.patience {
                if stale >= patience {
                    break;
                }
            }
        }
    }

    let meta = TrainMeta {
        epochs_run: history.len(),
        best_epoch,
        best_val_loss: if best_epoch == 0 { None } else { Some(best_val) },
        seed: cfg.seed,
    };
    let weights = if best_epoch == 0 { weights } else { best_weights };
    Ok((
        TrainedModel {
            weights,
            scalers: *scalers,
            loss: *loss_cfg,
            horizon,
            meta,
        },
        history,
    ))
}

/// An observed epidemic to calibrate: the curve plus known covariates.
#[derive(Debug, Clone)]
pub struct Observation<'a> {
    pub curve: &'a EpiCurve,
    pub n: u32,
    pub p_recov: f64,
}

impl TrainedModel {
    /// Single deterministic forward pass with dropout disabled. No
    /// simulation is involved; curves shorter than the model horizon are
    /// padded and masked.
    pub fn predict(&self, obs: &Observation) -> Result<ThetaHat> {
        let input = encode_input(
            obs.curve,
            obs.n,
            obs.p_recov,
            &self.scalers,
            self.horizon,
            true,
        )?;
        let t_len = input.incidence.len();
        let mut steps = Array3::<f64>::zeros((t_len, 1, 1));
        let mut mask = Array2::<f64>::zeros((t_len, 1));
        for t in 0..t_len {
            steps[[t, 0, 0]] = input.incidence[t];
            mask[[t, 0]] = if input.mask[t] { 1.0 } else { 0.0 };
        }
        let batch = Batch {
            steps,
            statics: Array2::from_shape_vec((1, 2), input.statics.to_vec()).unwrap(),
            mask,
            targets: Array2::zeros((1, 3)),
            gamma: Array1::zeros(1),
        };
        let pass = forward(&self.weights, &batch, 0.0, false, None)?;
        Ok(ThetaHat {
            p_tran: pass.theta[[0, 0]],
            c_rate: pass.theta[[0, 1]],
            r0: pass.theta[[0, 2]],
        })
    }

    /// [`predict`](Self::predict) plus the wall-clock seconds it took.
    pub fn predict_timed(&self, obs: &Observation) -> Result<(ThetaHat, f64)> {
        let started = Instant::now();
        let theta = self.predict(obs)?;
        Ok((theta, started.elapsed().as_secs_f64()))
    }

    pub fn save_json(&self, path: &Path) -> Result<()> {
        let doc = ModelDoc::from_model(self);
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = std::io::BufWriter::new(file);
        serde_json::to_writer(&mut w, &doc).map_err(|e| Error::schema(path, e.to_string()))?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
        Ok(())
    }

    pub fn load_json(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let doc: ModelDoc =
            serde_json::from_str(&text).map_err(|e| Error::schema(path, e.to_string()))?;
        doc.into_model(path)
    }
}

#[derive(Serialize, Deserialize)]
struct TensorDoc {
    shape: Vec<usize>,
    values: Vec<f64>,
}

/// On-disk model document. Tensor values are serialized as decimals with
/// full 64-bit round-trip precision.
#[derive(Serialize, Deserialize)]
struct ModelDoc {
    format_version: u32,
    architecture: ArchConfig,
    horizon: usize,
    tensors: BTreeMap<String, TensorDoc>,
    scalers: Scalers,
    loss_config: LossConfig,
    metadata: TrainMeta,
}

impl ModelDoc {
    fn from_model(m: &TrainedModel) -> Self {
        let mut tensors = BTreeMap::new();
        for spec in m.weights.layout().specs() {
            let (_, values) = m
                .weights
                .tensor(&spec.name)
                .expect("layout names its tensors");
            tensors.insert(
                spec.name.clone(),
                TensorDoc {
                    shape: spec.shape.clone(),
                    values: values.to_vec(),
                },
            );
        }
        ModelDoc {
            format_version: MODEL_FORMAT_VERSION,
            architecture: m.weights.arch,
            horizon: m.horizon,
            tensors,
            scalers: m.scalers,
            loss_config: m.loss,
            metadata: m.meta,
        }
    }

    fn into_model(self, path: &Path) -> Result<TrainedModel> {
        if self.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::schema(
                path,
                format!(
                    "unsupported format_version {} (expected {MODEL_FORMAT_VERSION})",
                    self.format_version
                ),
            ));
        }
        let mut weights = NetworkWeights::zeros(self.architecture)?;
        let specs: Vec<_> = weights.layout().specs().to_vec();
        if self.tensors.len() != specs.len() {
            return Err(Error::schema(
                path,
                format!(
                    "model has {} tensors, architecture needs {}",
                    self.tensors.len(),
                    specs.len()
                ),
            ));
        }
        for spec in &specs {
            let doc = self
                .tensors
                .get(&spec.name)
                .ok_or_else(|| Error::schema(path, format!("missing tensor '{}'", spec.name)))?;
            if doc.shape != spec.shape || doc.values.len() != spec.len() {
                return Err(Error::schema(
                    path,
                    format!(
                        "tensor '{}' has shape {:?}/{} values, expected {:?}/{}",
                        spec.name,
                        doc.shape,
                        doc.values.len(),
                        spec.shape,
                        spec.len()
                    ),
                ));
            }
            if !doc.values.iter().all(|v| v.is_finite()) {
                return Err(Error::schema(
                    path,
                    format!("tensor '{}' contains non-finite values", spec.name),
                ));
            }
            weights.data_mut()[spec.offset..spec.offset + spec.len()].copy_from_slice(&doc.values);
        }
        Ok(TrainedModel {
            weights,
            scalers: self.scalers,
            loss: self.loss_config,
            horizon: self.horizon,
            meta: self.metadata,
        })
    }
}

/// Writes the training log as `epoch,train_loss,val_loss,seconds`.
pub fn save_history_csv(history: &[EpochRecord], path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    writeln!(w, "epoch,train_loss,val_loss,seconds").map_err(|e| Error::io(path, e))?;
    for r in history {
        writeln!(
            w,
            "{},{},{},{}",
            r.epoch, r.train_loss, r.val_loss, r.seconds
        )
        .map_err(|e| Error::io(path, e))?;
    }
    Ok(())
}
