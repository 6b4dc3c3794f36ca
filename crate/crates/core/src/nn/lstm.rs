//! Batched forward and backward passes for the stacked bidirectional LSTM
//! with a ReLU dense head and range-constrained outputs.
//!
//! Masking: a timestep with mask 0 neither updates the recurrent state nor
//! contributes to the next layer (its per-step output is zero), and the
//! final hidden state per direction is the state after the last valid step.
//! A right-padded sequence therefore produces the same features as its
//! unpadded counterpart.
//!
//! Gate layout on the `4H` axis is `[input | forget | cell | output]`.

use ndarray::{s, Array1, Array2, Array3, ArrayView1, ArrayView2, Axis};
use ndarray::linalg::general_mat_mul;

use crate::error::{Error, Result};
use crate::nn::ops::{relu, sigmoid, softplus};
use crate::nn::{dropout_mask_value, NetworkWeights, T_BIAS, T_W_HH, T_W_IH};
use crate::rng::SimRng;

/// One training or inference batch.
///
/// `targets` and `gamma` carry raw-scale regression targets and the
/// per-sample recovery rate for the consistency penalty; inference batches
/// leave them zero.
#[derive(Debug, Clone)]
pub struct Batch {
    /// Per-step inputs, `[T, B, F]`.
    pub steps: Array3<f64>,
    /// Static covariates, `[B, S]`.
    pub statics: Array2<f64>,
    /// Validity mask, `[T, B]`, entries 0.0 or 1.0.
    pub mask: Array2<f64>,
    /// Raw-scale targets, `[B, O]`.
    pub targets: Array2<f64>,
    /// Raw per-sample recovery rate, `[B]`.
    pub gamma: Array1<f64>,
}

impl Batch {
    pub fn len(&self) -> usize {
        self.steps.shape()[1]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn horizon(&self) -> usize {
        self.steps.shape()[0]
    }

    fn validate(&self, w: &NetworkWeights) -> Result<()> {
        let (t, b, f) = {
            let s = self.steps.shape();
            (s[0], s[1], s[2])
        };
        if t == 0 || b == 0 {
            return Err(Error::ShapeMismatch("batch must have T >= 1 and B >= 1".into()));
        }
        if f != w.arch.input_features {
            return Err(Error::ShapeMismatch(format!(
                "batch has {f} input features, network expects {}",
                w.arch.input_features
            )));
        }
        if self.statics.shape() != [b, w.arch.static_features] {
            return Err(Error::ShapeMismatch(format!(
                "statics shape {:?}, expected [{b}, {}]",
                self.statics.shape(),
                w.arch.static_features
            )));
        }
        if self.mask.shape() != [t, b] {
            return Err(Error::ShapeMismatch(format!(
                "mask shape {:?}, expected [{t}, {b}]",
                self.mask.shape()
            )));
        }
        if self.targets.shape() != [b, w.arch.outputs] {
            return Err(Error::ShapeMismatch(format!(
                "targets shape {:?}, expected [{b}, {}]",
                self.targets.shape(),
                w.arch.outputs
            )));
        }
        if self.gamma.len() != b {
            return Err(Error::ShapeMismatch(format!(
                "gamma length {}, expected {b}",
                self.gamma.len()
            )));
        }
        Ok(())
    }
}

/// Cached per-direction activations for one LSTM layer, indexed by
/// processing step (forward direction: step = time; backward: step =
/// T-1-time).
#[derive(Debug, Clone)]
struct DirCache {
    /// Post-activation gates `[T, B, 4H]`.
    gates: Array3<f64>,
    /// Blended cell states `[T, B, H]`.
    cells: Array3<f64>,
    /// `tanh` of the unblended new cell `[T, B, H]`.
    hc: Array3<f64>,
    /// Blended hidden states `[T, B, H]`.
    hidden: Array3<f64>,
}

/// Everything the backward pass needs from a forward pass.
#[derive(Debug, Clone)]
pub struct ForwardPass {
    /// Range-constrained outputs `[B, O]`: sigmoid(p_tran), softplus(c_rate),
    /// softplus(r0).
    pub theta: Array2<f64>,
    dirs: Vec<[DirCache; 2]>,
    /// Post-dropout input consumed by each layer, `[T, B, in_l]`.
    layer_inputs: Vec<Array3<f64>>,
    /// Inverted-dropout masks applied after each non-final layer.
    drop_masks: Vec<Option<Array3<f64>>>,
    /// Head input `[B, 2H + S]`.
    pub features: Array2<f64>,
    /// ReLU activations `[B, D]`.
    relu_out: Array2<f64>,
    /// Output-layer pre-activations `[B, O]`.
    z_out: Array2<f64>,
}

fn assert_finite(name: &str, values: &[f64]) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::Numeric(format!("non-finite activation in {name}")))
    }
}

/// Runs one bidirectional layer in one direction, filling `cache` and the
/// direction's columns of `output`.
#[allow(clippy::too_many_arguments)]
fn run_direction(
    w: &NetworkWeights,
    layer: usize,
    dir: usize,
    input: &Array3<f64>,
    mask: &Array2<f64>,
    output: &mut Array3<f64>,
) -> DirCache {
    let layout = w.layout();
    let w_ih = layout.mat(w.data(), layout.lstm_idx(layer, dir, T_W_IH));
    let w_hh = layout.mat(w.data(), layout.lstm_idx(layer, dir, T_W_HH));
    let bias = layout.vec(w.data(), layout.lstm_idx(layer, dir, T_BIAS));

    let t_len = input.shape()[0];
    let b_len = input.shape()[1];
    let h = w.arch.hidden_size;

    let mut cache = DirCache {
        gates: Array3::zeros((t_len, b_len, 4 * h)),
        cells: Array3::zeros((t_len, b_len, h)),
        hc: Array3::zeros((t_len, b_len, h)),
        hidden: Array3::zeros((t_len, b_len, h)),
    };

    let mut h_prev = Array2::<f64>::zeros((b_len, h));
    let mut c_prev = Array2::<f64>::zeros((b_len, h));
    let mut z = Array2::<f64>::zeros((b_len, 4 * h));

    for s_idx in 0..t_len {
        let t = if dir == 0 { s_idx } else { t_len - 1 - s_idx };
        let x = input.index_axis(Axis(0), t);

        // z = bias + x W_ih + h_prev W_hh
        for mut row in z.rows_mut() {
            row.assign(&bias);
        }
        general_mat_mul(1.0, &x, &w_ih, 1.0, &mut z);
        if s_idx > 0 {
            general_mat_mul(1.0, &h_prev.view(), &w_hh, 1.0, &mut z);
        }

        let z_slice = z.as_slice().expect("z is contiguous");
        let mut gates_t = cache.gates.index_axis_mut(Axis(0), s_idx);
        let gates_slice = gates_t.as_slice_mut().expect("gates are contiguous");
        let mut cells_t = cache.cells.index_axis_mut(Axis(0), s_idx);
        let cells_slice = cells_t.as_slice_mut().expect("cells are contiguous");
        let mut hc_t = cache.hc.index_axis_mut(Axis(0), s_idx);
        let hc_slice = hc_t.as_slice_mut().expect("hc is contiguous");
        let mut hidden_t = cache.hidden.index_axis_mut(Axis(0), s_idx);
        let hidden_slice = hidden_t.as_slice_mut().expect("hidden is contiguous");
        let mut out_t = output.index_axis_mut(Axis(0), t);
        let h_prev_slice = h_prev.as_slice().expect("h_prev is contiguous");
        let c_prev_slice = c_prev.as_slice().expect("c_prev is contiguous");

        for b in 0..b_len {
            let zb = &z_slice[b * 4 * h..(b + 1) * 4 * h];
            let gb = &mut gates_slice[b * 4 * h..(b + 1) * 4 * h];
            let valid = mask[[t, b]] != 0.0;
            for u in 0..h {
                let gi = sigmoid(zb[u]);
                let gf = sigmoid(zb[h + u]);
                let gg = zb[2 * h + u].tanh();
                let go = sigmoid(zb[3 * h + u]);
                gb[u] = gi;
                gb[h + u] = gf;
                gb[2 * h + u] = gg;
                gb[3 * h + u] = go;

                let cp = c_prev_slice[b * h + u];
                let hp = h_prev_slice[b * h + u];
                let c_new = gf * cp + gi * gg;
                let hc_v = c_new.tanh();
                let h_new = go * hc_v;
                hc_slice[b * h + u] = hc_v;
                if valid {
                    cells_slice[b * h + u] = c_new;
                    hidden_slice[b * h + u] = h_new;
                    out_t[[b, dir * h + u]] = h_new;
                } else {
                    cells_slice[b * h + u] = cp;
                    hidden_slice[b * h + u] = hp;
                    out_t[[b, dir * h + u]] = 0.0;
                }
            }
        }
        h_prev.assign(&cache.hidden.index_axis(Axis(0), s_idx));
        c_prev.assign(&cache.cells.index_axis(Axis(0), s_idx));
    }

    cache
}

/// Full forward pass. Dropout is applied between LSTM layers only, and only
/// when `training` is set with a positive rate (`rng` must then be
/// provided). With `dropout_rate == 0` the training pass is bit-identical
/// to inference.
pub fn forward(
    w: &NetworkWeights,
    batch: &Batch,
    dropout_rate: f64,
    training: bool,
    mut rng: Option<&mut SimRng>,
) -> Result<ForwardPass> {
    batch.validate(w)?;
    if !(0.0..1.0).contains(&dropout_rate) {
        return Err(Error::InvalidParam(format!(
            "dropout rate must be in [0,1), got {dropout_rate}"
        )));
    }
    let use_dropout = training && dropout_rate > 0.0;
    if use_dropout && rng.is_none() {
        return Err(Error::InvalidParam(
            "training with dropout requires a generator".into(),
        ));
    }

    let layout = w.layout();
    let arch = &w.arch;
    let (t_len, b_len) = (batch.horizon(), batch.len());
    let h = arch.hidden_size;

    let mut layer_inputs: Vec<Array3<f64>> = vec![batch.steps.clone()];
    let mut drop_masks: Vec<Option<Array3<f64>>> = Vec::new();
    let mut dirs: Vec<[DirCache; 2]> = Vec::new();

    for l in 0..arch.bilstm_layers {
        let mut output = Array3::<f64>::zeros((t_len, b_len, 2 * h));
        let fwd = run_direction(w, l, 0, &layer_inputs[l], &batch.mask, &mut output);
        let bwd = run_direction(w, l, 1, &layer_inputs[l], &batch.mask, &mut output);
        assert_finite(
            &format!("lstm{l}.fwd.hidden"),
            fwd.hidden.index_axis(Axis(0), t_len - 1).as_slice().unwrap(),
        )?;
        assert_finite(
            &format!("lstm{l}.bwd.hidden"),
            bwd.hidden.index_axis(Axis(0), t_len - 1).as_slice().unwrap(),
        )?;
        dirs.push([fwd, bwd]);

        if l + 1 < arch.bilstm_layers {
            if use_dropout {
                let rng = rng.as_deref_mut().expect("checked above");
                let mut mask_arr = Array3::<f64>::zeros((t_len, b_len, 2 * h));
                for v in mask_arr.as_slice_mut().unwrap() {
                    *v = dropout_mask_value(dropout_rate, rng);
                }
                let dropped = &output * &mask_arr;
                drop_masks.push(Some(mask_arr));
                layer_inputs.push(dropped);
            } else {
                drop_masks.push(None);
                layer_inputs.push(output);
            }
        }
    }

    // Head input: [h_fwd_final | h_bwd_final | statics].
    let last = dirs.last().expect("at least one layer");
    let mut features = Array2::<f64>::zeros((b_len, arch.head_input()));
    features
        .slice_mut(s![.., 0..h])
        .assign(&last[0].hidden.index_axis(Axis(0), t_len - 1));
    features
        .slice_mut(s![.., h..2 * h])
        .assign(&last[1].hidden.index_axis(Axis(0), t_len - 1));
    features
        .slice_mut(s![.., 2 * h..])
        .assign(&batch.statics);

    let dense_w = layout.mat(w.data(), layout.dense_w_idx());
    let dense_b = layout.vec(w.data(), layout.dense_b_idx());
    let mut relu_out = Array2::<f64>::zeros((b_len, arch.dense_size));
    for mut row in relu_out.rows_mut() {
        row.assign(&dense_b);
    }
    general_mat_mul(1.0, &features.view(), &dense_w, 1.0, &mut relu_out);
    relu_out.mapv_inplace(relu);

    let out_w = layout.mat(w.data(), layout.out_w_idx());
    let out_b = layout.vec(w.data(), layout.out_b_idx());
    let mut z_out = Array2::<f64>::zeros((b_len, arch.outputs));
    for mut row in z_out.rows_mut() {
        row.assign(&out_b);
    }
    general_mat_mul(1.0, &relu_out.view(), &out_w, 1.0, &mut z_out);

    let mut theta = z_out.clone();
    for mut row in theta.rows_mut() {
        row[0] = sigmoid(row[0]);
        for j in 1..arch.outputs {
            row[j] = softplus(row[j]);
        }
    }
    assert_finite("out", theta.as_slice().unwrap())?;

    Ok(ForwardPass {
        theta,
        dirs,
        layer_inputs,
        drop_masks,
        features,
        relu_out,
        z_out,
    })
}

/// Exact gradient of a scalar loss with respect to every weight, given the
/// loss gradient `d_theta` at the activated outputs. Returns a flat buffer
/// matching the weight layout.
pub fn backward(
    w: &NetworkWeights,
    batch: &Batch,
    pass: &ForwardPass,
    d_theta: &Array2<f64>,
) -> Result<Vec<f64>> {
    let layout = w.layout();
    let arch = &w.arch;
    let (t_len, b_len) = (batch.horizon(), batch.len());
    let h = arch.hidden_size;
    if d_theta.shape() != [b_len, arch.outputs] {
        return Err(Error::ShapeMismatch(format!(
            "d_theta shape {:?}, expected [{b_len}, {}]",
            d_theta.shape(),
            arch.outputs
        )));
    }

    let mut grads = vec![0.0; layout.total()];

    // Output activations: sigmoid for p_tran, softplus for the rest.
    let mut dz_out = Array2::<f64>::zeros((b_len, arch.outputs));
    for b in 0..b_len {
        let p = pass.theta[[b, 0]];
        dz_out[[b, 0]] = d_theta[[b, 0]] * p * (1.0 - p);
        for j in 1..arch.outputs {
            dz_out[[b, j]] = d_theta[[b, j]] * sigmoid(pass.z_out[[b, j]]);
        }
    }

    {
        let mut g_out_w = layout.mat_mut(&mut grads, layout.out_w_idx());
        general_mat_mul(1.0, &pass.relu_out.t(), &dz_out.view(), 1.0, &mut g_out_w);
    }
    {
        let mut g_out_b = layout.vec_mut(&mut grads, layout.out_b_idx());
        for b in 0..b_len {
            for j in 0..arch.outputs {
                g_out_b[j] += dz_out[[b, j]];
            }
        }
    }

    let out_w = layout.mat(w.data(), layout.out_w_idx());
    let mut da1 = dz_out.dot(&out_w.t());
    // ReLU mask: active where the forward activation was positive.
    for (dv, &r) in da1.iter_mut().zip(pass.relu_out.iter()) {
        if r <= 0.0 {
            *dv = 0.0;
        }
    }

    {
        let mut g_dense_w = layout.mat_mut(&mut grads, layout.dense_w_idx());
        general_mat_mul(1.0, &pass.features.t(), &da1.view(), 1.0, &mut g_dense_w);
    }
    {
        let mut g_dense_b = layout.vec_mut(&mut grads, layout.dense_b_idx());
        for b in 0..b_len {
            for j in 0..arch.dense_size {
                g_dense_b[j] += da1[[b, j]];
            }
        }
    }

    let dense_w = layout.mat(w.data(), layout.dense_w_idx());
    let dfeat = da1.dot(&dense_w.t());

    // Gradients flowing into the final hidden states of the last layer.
    let dh_final = [
        dfeat.slice(s![.., 0..h]).to_owned(),
        dfeat.slice(s![.., h..2 * h]).to_owned(),
    ];

    // Backpropagation through time, top layer down.
    let mut d_layer_out: Option<Array3<f64>> = None;
    for l in (0..arch.bilstm_layers).rev() {
        if let Some(d_out) = d_layer_out.as_mut() {
            if let Some(mask) = &pass.drop_masks[l] {
                *d_out *= mask;
            }
        }

        let input = &pass.layer_inputs[l];
        let in_l = arch.layer_input(l);
        let mut dx = Array3::<f64>::zeros((t_len, b_len, in_l));

        for dir in 0..2 {
            let cache = &pass.dirs[l][dir];
            let w_ih = layout.mat(w.data(), layout.lstm_idx(l, dir, T_W_IH));
            let w_hh = layout.mat(w.data(), layout.lstm_idx(l, dir, T_W_HH));

            let mut dh_carry = if l == arch.bilstm_layers - 1 {
                dh_final[dir].clone()
            } else {
                Array2::<f64>::zeros((b_len, h))
            };
            let mut dc_carry = Array2::<f64>::zeros((b_len, h));
            let mut dz = Array2::<f64>::zeros((b_len, 4 * h));
            let mut dh_pass = Array2::<f64>::zeros((b_len, h));

            for s_idx in (0..t_len).rev() {
                let t = if dir == 0 { s_idx } else { t_len - 1 - s_idx };
                let gates_t = cache.gates.index_axis(Axis(0), s_idx);
                let gates_slice = gates_t.as_slice().unwrap();
                let hc_t = cache.hc.index_axis(Axis(0), s_idx);
                let hc_slice = hc_t.as_slice().unwrap();
                let (c_prev_row, h_prev_row) = if s_idx > 0 {
                    (
                        Some(cache.cells.index_axis(Axis(0), s_idx - 1)),
                        Some(cache.hidden.index_axis(Axis(0), s_idx - 1)),
                    )
                } else {
                    (None, None)
                };
                let d_out_t = d_layer_out
                    .as_ref()
                    .map(|d| d.index_axis(Axis(0), t));

                let dz_slice = dz.as_slice_mut().unwrap();
                for b in 0..b_len {
                    let m = batch.mask[[t, b]];
                    let gb = &gates_slice[b * 4 * h..(b + 1) * 4 * h];
                    for u in 0..h {
                        let dout = d_out_t.as_ref().map_or(0.0, |d| d[[b, dir * h + u]]);
                        let dh_in = dh_carry[[b, u]] + dout;
                        let dhn = m * dh_in;
                        let dhp = (1.0 - m) * dh_carry[[b, u]];
                        let dcn = m * dc_carry[[b, u]];
                        let dcp = (1.0 - m) * dc_carry[[b, u]];

                        let gi = gb[u];
                        let gf = gb[h + u];
                        let gg = gb[2 * h + u];
                        let go = gb[3 * h + u];
                        let hc_v = hc_slice[b * h + u];
                        let cp = c_prev_row.as_ref().map_or(0.0, |c| c[[b, u]]);

                        let d_o = dhn * hc_v;
                        let dct = dcn + dhn * go * (1.0 - hc_v * hc_v);
                        let d_i = dct * gg;
                        let d_g = dct * gi;
                        let d_f = dct * cp;

                        dz_slice[b * 4 * h + u] = d_i * gi * (1.0 - gi);
                        dz_slice[b * 4 * h + h + u] = d_f * gf * (1.0 - gf);
                        dz_slice[b * 4 * h + 2 * h + u] = d_g * (1.0 - gg * gg);
                        dz_slice[b * 4 * h + 3 * h + u] = d_o * go * (1.0 - go);

                        dc_carry[[b, u]] = dct * gf + dcp;
                        dh_pass[[b, u]] = dhp;
                    }
                }

                let x_t = input.index_axis(Axis(0), t);
                {
                    let mut g_w_ih = layout.mat_mut(&mut grads, layout.lstm_idx(l, dir, T_W_IH));
                    general_mat_mul(1.0, &x_t.t(), &dz.view(), 1.0, &mut g_w_ih);
                }
                if let Some(h_prev) = h_prev_row.as_ref() {
                    let mut g_w_hh = layout.mat_mut(&mut grads, layout.lstm_idx(l, dir, T_W_HH));
                    general_mat_mul(1.0, &h_prev.t(), &dz.view(), 1.0, &mut g_w_hh);
                }
                {
                    let mut g_bias = layout.vec_mut(&mut grads, layout.lstm_idx(l, dir, T_BIAS));
                    for b in 0..b_len {
                        for j in 0..4 * h {
                            g_bias[j] += dz[[b, j]];
                        }
                    }
                }
                {
                    let mut dx_t = dx.index_axis_mut(Axis(0), t);
                    general_mat_mul(1.0, &dz.view(), &w_ih.t(), 1.0, &mut dx_t);
                }
                // dh_carry' = dz W_hh^T + pass-through.
                let mut next_dh = dz.dot(&w_hh.t());
                next_dh += &dh_pass;
                dh_carry = next_dh;
            }
        }

        d_layer_out = Some(dx);
    }

    for spec in layout.specs() {
        assert_finite(&spec.name, &grads[spec.offset..spec.offset + spec.len()])?;
    }
    Ok(grads)
}

/// One LSTM cell step for a single example:
/// `i,f,o = sigmoid(affine)`, `g = tanh(affine)`, `c' = f.c + i.g`,
/// `h' = o.tanh(c')`.
pub fn lstm_cell_step(
    x: ArrayView1<f64>,
    h_prev: ArrayView1<f64>,
    c_prev: ArrayView1<f64>,
    w_ih: ArrayView2<f64>,
    w_hh: ArrayView2<f64>,
    bias: ArrayView1<f64>,
) -> Result<(Array1<f64>, Array1<f64>)> {
    let h = h_prev.len();
    if c_prev.len() != h
        || w_ih.shape() != [x.len(), 4 * h]
        || w_hh.shape() != [h, 4 * h]
        || bias.len() != 4 * h
    {
        return Err(Error::ShapeMismatch(format!(
            "cell step shapes inconsistent: x={}, h={}, c={}, w_ih={:?}, w_hh={:?}, bias={}",
            x.len(),
            h,
            c_prev.len(),
            w_ih.shape(),
            w_hh.shape(),
            bias.len()
        )));
    }
    let z = x.dot(&w_ih) + h_prev.dot(&w_hh) + bias;
    let mut h_out = Array1::<f64>::zeros(h);
    let mut c_out = Array1::<f64>::zeros(h);
    for u in 0..h {
        let gi = sigmoid(z[u]);
        let gf = sigmoid(z[h + u]);
        let gg = z[2 * h + u].tanh();
        let go = sigmoid(z[3 * h + u]);
        let c_new = gf * c_prev[u] + gi * gg;
        c_out[u] = c_new;
        h_out[u] = go * c_new.tanh();
    }
    Ok((h_out, c_out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::ArchConfig;
    use crate::rng::rng_from_seed;
    use ndarray::Array;
    use rand::RngExt;

    fn random_batch(arch: &ArchConfig, t_len: usize, b_len: usize, seed: u64) -> Batch {
        let mut rng = rng_from_seed(seed);
        let steps = Array::from_shape_fn((t_len, b_len, arch.input_features), |_| {
            rng.random_range(-1.0..1.0)
        });
        let statics = Array::from_shape_fn((b_len, arch.static_features), |_| {
            rng.random_range(-1.0..1.0)
        });
        let mask = Array2::<f64>::ones((t_len, b_len));
        let targets = Array::from_shape_fn((b_len, arch.outputs), |_| rng.random_range(0.0..2.0));
        let gamma = Array::from_shape_fn(b_len, |_| rng.random_range(0.1..0.3));
        Batch {
            steps,
            statics,
            mask,
            targets,
            gamma,
        }
    }

    fn random_weights(arch: ArchConfig, seed: u64) -> NetworkWeights {
        NetworkWeights::init(arch, seed).unwrap()
    }

    #[test]
    fn zero_weights_give_zero_states() {
        let h = 4;
        let w_ih = Array2::<f64>::zeros((3, 4 * h));
        let w_hh = Array2::<f64>::zeros((h, 4 * h));
        let bias = Array1::<f64>::zeros(4 * h);
        let x = Array1::from_vec(vec![0.7, -1.3, 2.0]);
        let h_prev = Array1::<f64>::zeros(h);
        let c_prev = Array1::<f64>::zeros(h);
        let (h_out, c_out) =
            lstm_cell_step(x.view(), h_prev.view(), c_prev.view(), w_ih.view(), w_hh.view(), bias.view())
                .unwrap();
        // sigmoid(0) = 0.5, tanh(0) = 0 => c = 0 => h = 0.
        assert!(h_out.iter().all(|&v| v == 0.0));
        assert!(c_out.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn saturated_forget_gate_preserves_cell() {
        let h = 3;
        let w_ih = Array2::<f64>::zeros((2, 4 * h));
        let w_hh = Array2::<f64>::zeros((h, 4 * h));
        let mut bias = Array1::<f64>::zeros(4 * h);
        for u in 0..h {
            bias[h + u] = 50.0; // forget gate saturated at 1
            bias[3 * h + u] = -50.0; // output gate shut
        }
        let x = Array1::from_vec(vec![0.3, -0.4]);
        let h_prev = Array1::<f64>::zeros(h);
        let c_prev = Array1::from_vec(vec![0.9, -0.2, 0.5]);
        let (_, c_out) =
            lstm_cell_step(x.view(), h_prev.view(), c_prev.view(), w_ih.view(), w_hh.view(), bias.view())
                .unwrap();
        for u in 0..h {
            assert!((c_out[u] - c_prev[u]).abs() < 1e-9);
        }
    }

    #[test]
    fn cell_step_matches_scalar_reimplementation() {
        // Straight-line scalar oracle for a 2-unit cell, no ndarray math.
        let h = 2;
        let mut rng = rng_from_seed(17);
        let w_ih: Vec<f64> = (0..3 * 4 * h).map(|_| rng.random_range(-0.9..0.9)).collect();
        let w_hh: Vec<f64> = (0..h * 4 * h).map(|_| rng.random_range(-0.9..0.9)).collect();
        let bias: Vec<f64> = (0..4 * h).map(|_| rng.random_range(-0.5..0.5)).collect();
        let x: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
        let hp: Vec<f64> = (0..h).map(|_| rng.random_range(-1.0..1.0)).collect();
        let cp: Vec<f64> = (0..h).map(|_| rng.random_range(-1.0..1.0)).collect();

        let sig = |z: f64| 1.0 / (1.0 + (-z).exp());
        let mut expected_h = vec![0.0; h];
        let mut expected_c = vec![0.0; h];
        for u in 0..h {
            let mut zi = bias[u];
            let mut zf = bias[h + u];
            let mut zg = bias[2 * h + u];
            let mut zo = bias[3 * h + u];
            for (k, &xv) in x.iter().enumerate() {
                zi += xv * w_ih[k * 4 * h + u];
                zf += xv * w_ih[k * 4 * h + h + u];
                zg += xv * w_ih[k * 4 * h + 2 * h + u];
                zo += xv * w_ih[k * 4 * h + 3 * h + u];
            }
            for (k, &hv) in hp.iter().enumerate() {
                zi += hv * w_hh[k * 4 * h + u];
                zf += hv * w_hh[k * 4 * h + h + u];
                zg += hv * w_hh[k * 4 * h + 2 * h + u];
                zo += hv * w_hh[k * 4 * h + 3 * h + u];
            }
            let c_new = sig(zf) * cp[u] + sig(zi) * zg.tanh();
            expected_c[u] = c_new;
            expected_h[u] = sig(zo) * c_new.tanh();
        }

        let (h_out, c_out) = lstm_cell_step(
            ArrayView1::from(&x),
            ArrayView1::from(&hp),
            ArrayView1::from(&cp),
            ArrayView2::from_shape((3, 4 * h), &w_ih).unwrap(),
            ArrayView2::from_shape((h, 4 * h), &w_hh).unwrap(),
            ArrayView1::from(&bias),
        )
        .unwrap();
        for u in 0..h {
            assert!((h_out[u] - expected_h[u]).abs() < 1e-12);
            assert!((c_out[u] - expected_c[u]).abs() < 1e-12);
        }
    }

    #[test]
    fn batched_forward_matches_cell_steps() {
        // One layer, full mask: the batched path must agree with composing
        // lstm_cell_step over time for each direction.
        let arch = ArchConfig::with_dims(1, 5, 4);
        let w = random_weights(arch, 21);
        let batch = random_batch(&arch, 7, 3, 22);
        let pass = forward(&w, &batch, 0.0, false, None).unwrap();

        let layout = w.layout();
        for dir in 0..2 {
            let w_ih = layout.mat(w.data(), layout.lstm_idx(0, dir, T_W_IH));
            let w_hh = layout.mat(w.data(), layout.lstm_idx(0, dir, T_W_HH));
            let bias = layout.vec(w.data(), layout.lstm_idx(0, dir, T_BIAS));
            for b in 0..3 {
                let mut hb = Array1::<f64>::zeros(5);
                let mut cb = Array1::<f64>::zeros(5);
                for s_idx in 0..7 {
                    let t = if dir == 0 { s_idx } else { 6 - s_idx };
                    let x = batch.steps.slice(s![t, b, ..]).to_owned();
                    let (hn, cn) =
                        lstm_cell_step(x.view(), hb.view(), cb.view(), w_ih, w_hh, bias).unwrap();
                    hb = hn;
                    cb = cn;
                }
                let cached = pass.dirs[0][dir].hidden.slice(s![6, b, ..]);
                for u in 0..5 {
                    assert!((hb[u] - cached[u]).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn dropout_zero_training_equals_inference() {
        let arch = ArchConfig::with_dims(2, 6, 4);
        let w = random_weights(arch, 31);
        let batch = random_batch(&arch, 9, 4, 32);
        let mut rng = rng_from_seed(1);
        let train_pass = forward(&w, &batch, 0.0, true, Some(&mut rng)).unwrap();
        let infer_pass = forward(&w, &batch, 0.0, false, None).unwrap();
        assert_eq!(train_pass.theta, infer_pass.theta);
    }

    #[test]
    fn right_padding_with_mask_matches_unpadded() {
        let arch = ArchConfig::with_dims(2, 6, 4);
        let w = random_weights(arch, 41);
        let t_len = 12;
        let pad = 10;
        let b_len = 3;
        let base = random_batch(&arch, t_len, b_len, 42);

        let mut steps = Array3::<f64>::zeros((t_len + pad, b_len, 1));
        steps.slice_mut(s![0..t_len, .., ..]).assign(&base.steps);
        let mut mask = Array2::<f64>::zeros((t_len + pad, b_len));
        mask.slice_mut(s![0..t_len, ..]).fill(1.0);
        let padded = Batch {
            steps,
            statics: base.statics.clone(),
            mask,
            targets: base.targets.clone(),
            gamma: base.gamma.clone(),
        };

        let p1 = forward(&w, &base, 0.0, false, None).unwrap();
        let p2 = forward(&w, &padded, 0.0, false, None).unwrap();
        for (a, b) in p1.features.iter().zip(p2.features.iter()) {
            assert!((a - b).abs() < 1e-12, "features differ: {a} vs {b}");
        }
        for (a, b) in p1.theta.iter().zip(p2.theta.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn output_ranges_hold_for_random_weights() {
        let arch = ArchConfig::with_dims(1, 4, 4);
        for seed in 0..50 {
            let w = random_weights(arch, seed);
            let batch = random_batch(&arch, 6, 2, seed + 1000);
            let pass = forward(&w, &batch, 0.0, false, None).unwrap();
            for b in 0..2 {
                assert!(pass.theta[[b, 0]] > 0.0 && pass.theta[[b, 0]] < 1.0);
                assert!(pass.theta[[b, 1]] > 0.0);
                assert!(pass.theta[[b, 2]] > 0.0);
            }
        }
    }

    #[test]
    fn head_zero_preactivations_give_known_outputs() {
        // All-zero weights: z_out = 0 so outputs are (0.5, ln 2, ln 2).
        let arch = ArchConfig::with_dims(1, 4, 4);
        let w = NetworkWeights::zeros(arch).unwrap();
        let batch = random_batch(&arch, 5, 2, 7);
        let pass = forward(&w, &batch, 0.0, false, None).unwrap();
        for b in 0..2 {
            assert!((pass.theta[[b, 0]] - 0.5).abs() < 1e-15);
            assert!((pass.theta[[b, 1]] - std::f64::consts::LN_2).abs() < 1e-15);
            assert!((pass.theta[[b, 2]] - std::f64::consts::LN_2).abs() < 1e-15);
        }
    }

    /// Central finite differences on a simple linear functional of theta;
    /// exercises the entire BPTT path including masking and both
    /// directions. The full composite-loss check lives in the training
    /// module and the acceptance suite.
    #[test]
    fn gradient_matches_finite_differences_linear_loss() {
        let arch = ArchConfig::with_dims(2, 4, 3);
        let mut w = random_weights(arch, 51);
        let mut batch = random_batch(&arch, 5, 3, 52);
        // Exercise masking too: last two steps of sample 1 are padding.
        batch.mask[[4, 1]] = 0.0;
        batch.mask[[3, 1]] = 0.0;

        let alphas = [0.7, -0.4, 0.9];
        let loss_of = |w: &NetworkWeights| -> f64 {
            let pass = forward(w, &batch, 0.0, false, None).unwrap();
            let mut acc = 0.0;
            for b in 0..3 {
                for (j, a) in alphas.iter().enumerate() {
                    acc += a * pass.theta[[b, j]];
                }
            }
            acc
        };

        let pass = forward(&w, &batch, 0.0, false, None).unwrap();
        let mut d_theta = Array2::<f64>::zeros((3, 3));
        for b in 0..3 {
            for (j, a) in alphas.iter().enumerate() {
                d_theta[[b, j]] = *a;
            }
        }
        let grads = backward(&w, &batch, &pass, &d_theta).unwrap();

        let step = 1e-5;
        let total = w.len();
        // Spot-check a deterministic spread of coordinates.
        for idx in (0..total).step_by(7) {
            let orig = w.data()[idx];
            w.data_mut()[idx] = orig + step;
            let up = loss_of(&w);
            w.data_mut()[idx] = orig - step;
            let down = loss_of(&w);
            w.data_mut()[idx] = orig;
            let fd = (up - down) / (2.0 * step);
            let a = grads[idx];
            let denom = a.abs().max(fd.abs()).max(1e-6);
            assert!(
                (a - fd).abs() / denom < 1e-4,
                "coordinate {idx}: analytic {a} vs fd {fd}"
            );
        }
    }
}
