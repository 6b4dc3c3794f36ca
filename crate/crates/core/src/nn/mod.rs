//! Minimal dense/recurrent neural-network kernel: stacked bidirectional LSTM
//! layers, a ReLU dense head with range-constrained outputs, exact analytic
//! gradients (backpropagation through time), and the Adam optimizer.
//!
//! All trainable tensors live in one flat `f64` buffer addressed through a
//! [`ParamLayout`], which gives every tensor a stable name, makes gradient
//! buffers trivially shape-compatible, and keeps serialization canonical.
//! Forward and backward passes are pure functions of their inputs, so they
//! are safe to call from many threads; within one call batches are processed
//! in a fixed order, which makes training trajectories bitwise reproducible.

pub mod adam;
pub mod lstm;
pub mod ops;

use ndarray::{ArrayView1, ArrayView2, ArrayViewMut1, ArrayViewMut2};
use rand::RngExt;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::SimRng;

pub use adam::{AdamParams, AdamState};
pub use lstm::{backward, forward, lstm_cell_step, Batch, ForwardPass};

/// Network architecture description. Parameter shapes and the serialized
/// layout are pure functions of this config.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArchConfig {
    /// Features per timestep (the scaled incidence value).
    pub input_features: usize,
    /// Time-invariant covariates concatenated ahead of the dense head.
    pub static_features: usize,
    /// Number of stacked bidirectional LSTM layers.
    pub bilstm_layers: usize,
    /// Hidden units per direction in each LSTM layer.
    pub hidden_size: usize,
    /// Units in the ReLU dense layer.
    pub dense_size: usize,
    /// Output dimension (p_tran, c_rate, r0).
    pub outputs: usize,
}

impl Default for ArchConfig {
    fn default() -> Self {
        ArchConfig {
            input_features: 1,
            static_features: 2,
            bilstm_layers: 3,
            hidden_size: 160,
            dense_size: 64,
            outputs: 3,
        }
    }
}

impl ArchConfig {
    /// Architecture with custom recurrent dimensions, keeping the fixed
    /// input/output contract.
    pub fn with_dims(bilstm_layers: usize, hidden_size: usize, dense_size: usize) -> Self {
        ArchConfig {
            bilstm_layers,
            hidden_size,
            dense_size,
            ..ArchConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("input_features", self.input_features),
            ("static_features", self.static_features),
            ("bilstm_layers", self.bilstm_layers),
            ("hidden_size", self.hidden_size),
            ("dense_size", self.dense_size),
            ("outputs", self.outputs),
        ] {
            if v == 0 {
                return Err(Error::InvalidParam(format!("arch {name} must be >= 1")));
            }
        }
        Ok(())
    }

    /// Per-timestep input width of LSTM layer `l`.
    pub fn layer_input(&self, l: usize) -> usize {
        if l == 0 {
            self.input_features
        } else {
            2 * self.hidden_size
        }
    }

    /// Width of the dense head input: both final hidden states plus statics.
    pub fn head_input(&self) -> usize {
        2 * self.hidden_size + self.static_features
    }
}

/// Shape and flat-buffer location of one named tensor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TensorSpec {
    pub name: String,
    /// Row-major shape; one entry for vectors, two for matrices.
    pub shape: Vec<usize>,
    pub offset: usize,
}

impl TensorSpec {
    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Index constants for the three tensors of one LSTM direction.
pub const T_W_IH: usize = 0;
pub const T_W_HH: usize = 1;
pub const T_BIAS: usize = 2;

/// Canonical flat layout of all trainable tensors for an architecture.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamLayout {
    specs: Vec<TensorSpec>,
    total: usize,
    layers: usize,
}

impl ParamLayout {
    pub fn new(arch: &ArchConfig) -> Self {
        let h = arch.hidden_size;
        let mut specs = Vec::new();
        let mut offset = 0;
        let mut push = |name: String, shape: Vec<usize>, offset: &mut usize| {
            let len: usize = shape.iter().product();
            specs.push(TensorSpec {
                name,
                shape,
                offset: *offset,
            });
            *offset += len;
        };
        for l in 0..arch.bilstm_layers {
            let input = arch.layer_input(l);
            for dir in ["fwd", "bwd"] {
                push(format!("lstm{l}.{dir}.w_ih"), vec![input, 4 * h], &mut offset);
                push(format!("lstm{l}.{dir}.w_hh"), vec![h, 4 * h], &mut offset);
                push(format!("lstm{l}.{dir}.bias"), vec![4 * h], &mut offset);
            }
        }
        push("dense.w".into(), vec![arch.head_input(), arch.dense_size], &mut offset);
        push("dense.b".into(), vec![arch.dense_size], &mut offset);
        push("out.w".into(), vec![arch.dense_size, arch.outputs], &mut offset);
        push("out.b".into(), vec![arch.outputs], &mut offset);
        ParamLayout {
            specs,
            total: offset,
            layers: arch.bilstm_layers,
        }
    }

    pub fn total(&self) -> usize {
        self.total
    }

    pub fn specs(&self) -> &[TensorSpec] {
        &self.specs
    }

    /// Spec index of an LSTM tensor: `which` is one of [`T_W_IH`],
    /// [`T_W_HH`], [`T_BIAS`]; `dir` is 0 = forward, 1 = backward.
    pub fn lstm_idx(&self, layer: usize, dir: usize, which: usize) -> usize {
        layer * 6 + dir * 3 + which
    }

    pub fn dense_w_idx(&self) -> usize {
        self.layers * 6
    }

    pub fn dense_b_idx(&self) -> usize {
        self.layers * 6 + 1
    }

    pub fn out_w_idx(&self) -> usize {
        self.layers * 6 + 2
    }

    pub fn out_b_idx(&self) -> usize {
        self.layers * 6 + 3
    }

    pub fn mat<'a>(&self, data: &'a [f64], idx: usize) -> ArrayView2<'a, f64> {
        let s = &self.specs[idx];
        debug_assert_eq!(s.shape.len(), 2, "{} is not a matrix", s.name);
        ArrayView2::from_shape((s.shape[0], s.shape[1]), &data[s.offset..s.offset + s.len()])
            .expect("layout shapes are consistent")
    }

    pub fn mat_mut<'a>(&self, data: &'a mut [f64], idx: usize) -> ArrayViewMut2<'a, f64> {
        let s = &self.specs[idx];
        debug_assert_eq!(s.shape.len(), 2, "{} is not a matrix", s.name);
        ArrayViewMut2::from_shape((s.shape[0], s.shape[1]), &mut data[s.offset..s.offset + s.len()])
            .expect("layout shapes are consistent")
    }

    pub fn vec<'a>(&self, data: &'a [f64], idx: usize) -> ArrayView1<'a, f64> {
        let s = &self.specs[idx];
        debug_assert_eq!(s.shape.len(), 1, "{} is not a vector", s.name);
        ArrayView1::from(&data[s.offset..s.offset + s.len()])
    }

    pub fn vec_mut<'a>(&self, data: &'a mut [f64], idx: usize) -> ArrayViewMut1<'a, f64> {
        let s = &self.specs[idx];
        debug_assert_eq!(s.shape.len(), 1, "{} is not a vector", s.name);
        ArrayViewMut1::from(&mut data[s.offset..s.offset + s.len()])
    }
}

/// Total trainable parameter count for an architecture.
pub fn param_count(arch: &ArchConfig) -> usize {
    ParamLayout::new(arch).total()
}

/// The full trainable weight set plus its layout.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkWeights {
    pub arch: ArchConfig,
    layout: ParamLayout,
    data: Vec<f64>,
}

impl NetworkWeights {
    /// Zero-initialized weights (useful for tests and gradient buffers).
    pub fn zeros(arch: ArchConfig) -> Result<Self> {
        arch.validate()?;
        let layout = ParamLayout::new(&arch);
        let data = vec![0.0; layout.total()];
        Ok(NetworkWeights { arch, layout, data })
    }

    /// Seeded initialization: every weight matrix is uniform in
    /// `±1/sqrt(fan_in)`; biases are zero except the forget-gate chunk,
    /// which starts at 1.0 to favor memory retention early in training.
    /// Draw order follows the layout, row-major within each tensor.
    pub fn init(arch: ArchConfig, seed: u64) -> Result<Self> {
        let mut w = NetworkWeights::zeros(arch)?;
        let mut rng = crate::rng::rng_from_seed(seed);
        let h = arch.hidden_size;
        for i in 0..w.layout.specs().len() {
            let spec = w.layout.specs()[i].clone();
            if spec.shape.len() == 2 {
                let bound = 1.0 / (spec.shape[0] as f64).sqrt();
                let slice = &mut w.data[spec.offset..spec.offset + spec.len()];
                for v in slice.iter_mut() {
                    *v = rng.random_range(-bound..bound);
                }
            } else if spec.name.ends_with(".bias") {
                // Forget gate occupies the second chunk of [i|f|g|o].
                let slice = &mut w.data[spec.offset..spec.offset + spec.len()];
                for v in slice[h..2 * h].iter_mut() {
                    *v = 1.0;
                }
            }
        }
        Ok(w)
    }

    pub fn from_data(arch: ArchConfig, data: Vec<f64>) -> Result<Self> {
        arch.validate()?;
        let layout = ParamLayout::new(&arch);
        if data.len() != layout.total() {
            return Err(Error::ShapeMismatch(format!(
                "weight buffer has {} values, layout needs {}",
                data.len(),
                layout.total()
            )));
        }
        Ok(NetworkWeights { arch, layout, data })
    }

    pub fn layout(&self) -> &ParamLayout {
        &self.layout
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Named tensor slice, for serialization and diagnostics.
    pub fn tensor(&self, name: &str) -> Option<(&TensorSpec, &[f64])> {
        let spec = self.layout.specs().iter().find(|s| s.name == name)?;
        Some((spec, &self.data[spec.offset..spec.offset + spec.len()]))
    }
}

/// Samples an inverted-dropout mask value: 0 with probability `rate`,
/// `1/(1-rate)` otherwise, so the expectation of a dropped activation equals
/// the undropped one.
pub fn dropout_mask_value(rate: f64, rng: &mut SimRng) -> f64 {
    if rng.random_bool(rate) {
        0.0
    } else {
        1.0 / (1.0 - rate)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_is_pure_function_of_config() {
        let a = ArchConfig::with_dims(2, 8, 4);
        let l1 = ParamLayout::new(&a);
        let l2 = ParamLayout::new(&a);
        assert_eq!(l1, l2);
        // Hand-counted parameter total for 2 layers, H=8, D=4:
        // layer0: 2 * (1*32 + 8*32 + 32) = 640
        // layer1: 2 * (16*32 + 8*32 + 32) = 1600
        // dense: 18*4 + 4 = 76; out: 4*3 + 3 = 15
        assert_eq!(param_count(&a), 640 + 1600 + 76 + 15);
    }

    #[test]
    fn default_arch_matches_published_dimensions() {
        let a = ArchConfig::default();
        assert_eq!(a.bilstm_layers, 3);
        assert_eq!(a.hidden_size, 160);
        assert_eq!(a.dense_size, 64);
        assert_eq!(a.outputs, 3);
    }

    #[test]
    fn init_respects_fan_in_bounds_and_forget_bias() {
        let arch = ArchConfig::with_dims(1, 8, 4);
        let w = NetworkWeights::init(arch, 3).unwrap();
        let layout = w.layout().clone();
        let w_hh = layout.mat(w.data(), layout.lstm_idx(0, 0, T_W_HH));
        let bound = 1.0 / (8f64).sqrt();
        for &v in w_hh.iter() {
            assert!(v.abs() <= bound);
        }
        let bias = layout.vec(w.data(), layout.lstm_idx(0, 0, T_BIAS));
        for u in 0..8 {
            assert_eq!(bias[u], 0.0); // input gate
            assert_eq!(bias[8 + u], 1.0); // forget gate
            assert_eq!(bias[16 + u], 0.0); // cell
            assert_eq!(bias[24 + u], 0.0); // output gate
        }
        // Seeded init is reproducible.
        let w2 = NetworkWeights::init(arch, 3).unwrap();
        assert_eq!(w.data(), w2.data());
        let w3 = NetworkWeights::init(arch, 4).unwrap();
        assert_ne!(w.data(), w3.data());
    }

    #[test]
    fn dropout_mask_expectation() {
        // Inverted scaling: E[mask] = 1 within Monte Carlo error.
        let mut rng = crate::rng::rng_from_seed(5);
        let rate = 0.5;
        let n = 20_000;
        let mut sum = 0.0;
        for _ in 0..n {
            sum += dropout_mask_value(rate, &mut rng);
        }
        let mean = sum / f64::from(n);
        // Bernoulli(1-rate) scaled by 1/(1-rate): sd = sqrt(rate/(1-rate)).
        let se = (rate / (1.0 - rate) / f64::from(n)).sqrt();
        assert!((mean - 1.0).abs() < 3.0 * se, "mean {mean}, 3se {}", 3.0 * se);
    }
}
