//! Fully connected tanh network with a scalar linear output.

use ndarray::{Array1, Array2, ArrayView2, Axis, Zip};
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ode_lab::{Dataset, Interval};
use crate::seeding::rng_for;

/// `tanh` through one `exp`; within 2.3e-16 of `f64::tanh` and about twice
/// as fast, which matters because activations dominate small-layer epochs.
#[inline]
pub fn tanh(x: f64) -> f64 {
    let e = (-2.0 * x.abs()).exp();
    ((1.0 - e) / (1.0 + e)).copysign(x)
}

/// One affine layer; `weight` is `fan_in x fan_out` so a batch is `x.dot(w) + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

/// `f_nn(λ; Θ)`: inputs are min–max normalized by `input_box` before the
/// first layer; hidden layers use tanh, the output layer is identity.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpSurrogate {
    pub layer_sizes: Vec<usize>,
    pub layers: Vec<Dense>,
    pub input_box: Vec<Interval>,
    pub seed: u64,
}

/// Parameter gradients, shaped like [`MlpSurrogate::layers`].
#[derive(Debug, Clone)]
pub struct Gradients {
    pub layers: Vec<Dense>,
}

/// Output of one forward/backward sweep.
#[derive(Debug, Clone)]
pub struct LossEval {
    pub loss: f64,
    pub predictions: Vec<f64>,
    pub gradients: Gradients,
}

impl MlpSurrogate {
    /// Uniform fan-in initialization: every weight and bias of a layer with
    /// fan-in `k` is drawn from `U(-1/sqrt(k), 1/sqrt(k))`.
    pub fn new(input_box: Vec<Interval>, hidden: &[usize], seed: u64) -> Self {
        let mut layer_sizes = vec![input_box.len()];
        layer_sizes.extend_from_slice(hidden);
        layer_sizes.push(1);
        let mut rng = rng_for(seed, "mlp-init", 0);
        let layers = layer_sizes
            .windows(2)
            .map(|w| {
                let bound = 1.0 / (w[0] as f64).sqrt();
                let weight =
                    Array2::from_shape_simple_fn((w[0], w[1]), || rng.random_range(-bound..bound));
                let bias = Array1::from_shape_simple_fn(w[1], || rng.random_range(-bound..bound));
                Dense { weight, bias }
            })
            .collect();
        MlpSurrogate {
            layer_sizes,
            layers,
            input_box,
            seed,
        }
    }

    /// Network with every weight and bias set to zero.
    pub fn zeros(input_box: Vec<Interval>, hidden: &[usize]) -> Self {
        let mut m = MlpSurrogate::new(input_box, hidden, 0);
        for l in &mut m.layers {
            l.weight.fill(0.0);
            l.bias.fill(0.0);
        }
        m
    }

    pub fn input_dim(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn num_params(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weight.len() + l.bias.len())
            .sum()
    }

    /// Min–max normalized design matrix.
    pub fn normalize_rows(&self, rows: &[Vec<f64>]) -> Result<Array2<f64>> {
        let d = self.input_dim();
        let mut x = Array2::zeros((rows.len(), d));
        for (i, r) in rows.iter().enumerate() {
            if r.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: r.len(),
                });
            }
            for (j, (&v, iv)) in r.iter().zip(&self.input_box).enumerate() {
                x[[i, j]] = (v - iv.lo) / iv.width();
            }
        }
        Ok(x)
    }

    pub fn design_matrix(&self, ds: &Dataset) -> Result<Array2<f64>> {
        let rows: Vec<Vec<f64>> = ds.samples.iter().map(|s| s.coeffs.clone()).collect();
        self.normalize_rows(&rows)
    }

    /// Batched forward pass on already-normalized inputs.
    pub fn forward_normalized(&self, x: ArrayView2<f64>) -> Vec<f64> {
        let mut a = x.to_owned();
        let last = self.layers.len() - 1;
        for (k, layer) in self.layers.iter().enumerate() {
            let mut z = a.dot(&layer.weight);
            z += &layer.bias;
            if k < last {
                z.mapv_inplace(tanh);
            }
            a = z;
        }
        a.column(0).to_vec()
    }

    /// Prediction for one coefficient vector in model units.
    pub fn forward(&self, coeffs: &[f64]) -> Result<f64> {
        let x = self.normalize_rows(std::slice::from_ref(&coeffs.to_vec()))?;
        Ok(self.forward_normalized(x.view())[0])
    }

    pub fn predict_rows(&self, rows: &[Vec<f64>]) -> Result<Vec<f64>> {
        let x = self.normalize_rows(rows)?;
        Ok(self.forward_normalized(x.view()))
    }

    pub fn predict(&self, ds: &Dataset) -> Result<Vec<f64>> {
        let x = self.design_matrix(ds)?;
        Ok(self.forward_normalized(x.view()))
    }

    /// Weighted squared-error loss `Σ w_i (ŷ_i - y_i)² / Σ w_i` and its
    /// gradient by backpropagation. `weights = None` is the plain mean.
    pub fn loss_and_gradients(
        &self,
        x: ArrayView2<f64>,
        y: &[f64],
        weights: Option<&[f64]>,
    ) -> LossEval {
        let n = x.nrows();
        let last = self.layers.len() - 1;
        let mut acts: Vec<Array2<f64>> = Vec::with_capacity(self.layers.len() + 1);
        acts.push(x.to_owned());
        for (k, layer) in self.layers.iter().enumerate() {
            let mut z = acts[k].dot(&layer.weight);
            z += &layer.bias;
            if k < last {
                z.mapv_inplace(tanh);
            }
            acts.push(z);
        }
        let out = &acts[last + 1];
        let predictions: Vec<f64> = out.column(0).to_vec();

        let total_w = weights.map_or(n as f64, |w| w.iter().sum());
        let mut loss = 0.0;
        let mut delta = Array2::zeros((n, 1));
        for i in 0..n {
            let w = weights.map_or(1.0, |w| w[i]);
            let e = predictions[i] - y[i];
            loss += w * e * e;
            delta[[i, 0]] = 2.0 * w * e / total_w;
        }
        loss /= total_w;

        let mut grads: Vec<Dense> = Vec::with_capacity(self.layers.len());
        for k in (0..self.layers.len()).rev() {
            let a_prev = &acts[k];
            let gw = a_prev.t().dot(&delta);
            let gb = delta.sum_axis(Axis(0));
            grads.push(Dense {
                weight: gw,
                bias: gb,
            });
            if k > 0 {
                let mut next = delta.dot(&self.layers[k].weight.t());
                Zip::from(&mut next)
                    .and(a_prev)
                    .for_each(|d, &a| *d *= 1.0 - a * a);
                delta = next;
            }
        }
        grads.reverse();
        LossEval {
            loss,
            predictions,
            gradients: Gradients { layers: grads },
        }
    }

    /// All parameters, layer by layer, weights (row-major) before biases.
    pub fn params_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_params());
        for l in &self.layers {
            out.extend(l.weight.iter());
            out.extend(l.bias.iter());
        }
        out
    }

    pub fn set_params_flat(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.num_params() {
            return Err(Error::DimensionMismatch {
                expected: self.num_params(),
                got: flat.len(),
            });
        }
        let mut it = flat.iter();
        for l in &mut self.layers {
            l.weight
                .iter_mut()
                .chain(l.bias.iter_mut())
                .for_each(|p| *p = *it.next().unwrap());
        }
        Ok(())
    }
}

impl Gradients {
    pub fn flat(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for l in &self.layers {
            out.extend(l.weight.iter());
            out.extend(l.bias.iter());
        }
        out
    }
}

/// Mean squared error of the model over a dataset.
pub fn loss_mse(model: &MlpSurrogate, ds: &Dataset) -> Result<f64> {
    if ds.is_empty() {
        return Err(Error::EmptyInput("loss over an empty dataset"));
    }
    let pred = model.predict(ds)?;
    Ok(pred
        .iter()
        .zip(&ds.samples)
        .map(|(p, s)| (p - s.frequency).powi(2))
        .sum::<f64>()
        / ds.len() as f64)
}

/// Absolute residuals `|f_nn(λ_i) - y_i|` in dataset order.
pub fn residuals(model: &MlpSurrogate, ds: &Dataset) -> Result<Vec<f64>> {
    let pred = model.predict(ds)?;
    Ok(pred
        .iter()
        .zip(&ds.samples)
        .map(|(p, s)| (p - s.frequency).abs())
        .collect())
}

#[derive(Serialize, Deserialize)]
struct Checkpoint {
    format: String,
    layer_sizes: Vec<usize>,
    input_box: Vec<Interval>,
    seed: u64,
    params: Vec<f64>,
}

pub const CHECKPOINT_FORMAT: &str = "hggs-mlp/1";

impl MlpSurrogate {
    pub fn to_checkpoint_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&Checkpoint {
            format: CHECKPOINT_FORMAT.into(),
            layer_sizes: self.layer_sizes.clone(),
            input_box: self.input_box.clone(),
            seed: self.seed,
            params: self.params_flat(),
        })?)
    }

    pub fn from_checkpoint_json(text: &str) -> Result<Self> {
        let ck: Checkpoint = serde_json::from_str(text)?;
        if ck.format != CHECKPOINT_FORMAT {
            return Err(Error::InvalidInput(format!(
                "unsupported checkpoint format `{}`",
                ck.format
            )));
        }
        let n = ck.layer_sizes.len();
        if n < 2 || ck.layer_sizes[0] != ck.input_box.len() || ck.layer_sizes[n - 1] != 1 {
            return Err(Error::InvalidInput(
                "inconsistent checkpoint layer sizes".into(),
            ));
        }
        let mut m = MlpSurrogate::zeros(ck.input_box, &ck.layer_sizes[1..n - 1]);
        m.seed = ck.seed;
        m.set_params_flat(&ck.params)?;
        Ok(m)
    }
}
