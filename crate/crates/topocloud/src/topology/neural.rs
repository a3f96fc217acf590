//! Fully connected implicit surface: positions in, signed distance out.
//!
//! Hidden layers use the rectifier; the output layer is linear. Parameters
//! are stored flat, layer by layer, as `[W row-major, b]`, or
//! `[V row-major, g, b]` when weight normalization re-parameterizes each
//! output row as `w = g * v / |v|`.

use super::{deterministic_param_accumulate, IndicatorField, TopologyError};
use crate::geometry::{GeometryError, ParticleCloud};
use crate::math::{sigmoid, Pt3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

#[derive(Debug, Clone, PartialEq)]
pub struct NeuralSdf {
    layer_sizes: Vec<usize>,
    pub params: Vec<f64>,
    pub beta: f64,
    /// Probability of dropping a hidden unit during training passes.
    pub dropout_rate: f64,
    weight_norm: bool,
}

impl NeuralSdf {
    /// Network with `hidden_layers` weight layers of width `hidden_width`
    /// between the 3-wide input and the scalar output, all parameters zero.
    ///
    /// `hidden_layers = 4, hidden_width = 64` is the desk-scale default;
    /// 8 x 512 is the full-scale configuration.
    pub fn new(hidden_layers: usize, hidden_width: usize, beta: f64) -> NeuralSdf {
        assert!(hidden_layers >= 1, "need at least one weight layer");
        let mut sizes = Vec::with_capacity(hidden_layers + 1);
        sizes.push(3);
        for _ in 0..hidden_layers.saturating_sub(1) {
            sizes.push(hidden_width);
        }
        sizes.push(1);
        NeuralSdf::from_layer_sizes(sizes, beta).expect("valid layer sizes")
    }

    pub fn from_layer_sizes(sizes: Vec<usize>, beta: f64) -> Result<NeuralSdf, GeometryError> {
        if sizes.len() < 2 || sizes[0] != 3 || *sizes.last().unwrap() != 1 {
            return Err(GeometryError::Snapshot(format!(
                "bad layer sizes {sizes:?}: need input width 3 and output width 1"
            )));
        }
        if sizes.iter().any(|&s| s == 0) {
            return Err(GeometryError::Snapshot("zero-width layer".into()));
        }
        let mut net = NeuralSdf {
            layer_sizes: sizes,
            params: Vec::new(),
            beta,
            dropout_rate: 0.0,
            weight_norm: false,
        };
        net.params = vec![0.0; net.param_count()];
        Ok(net)
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.layer_sizes
    }

    pub fn weight_norm(&self) -> bool {
        self.weight_norm
    }

    pub fn num_layers(&self) -> usize {
        self.layer_sizes.len() - 1
    }

    fn layer_dims(&self, layer: usize) -> (usize, usize) {
        (self.layer_sizes[layer], self.layer_sizes[layer + 1])
    }

    fn layer_param_len(&self, layer: usize) -> usize {
        let (w_in, w_out) = self.layer_dims(layer);
        if self.weight_norm {
            (w_in + 2) * w_out
        } else {
            (w_in + 1) * w_out
        }
    }

    fn layer_offset(&self, layer: usize) -> usize {
        (0..layer).map(|l| self.layer_param_len(l)).sum()
    }

    pub fn param_count(&self) -> usize {
        (0..self.num_layers()).map(|l| self.layer_param_len(l)).sum()
    }

    /// Seeded uniform init, `U(-s, s)` with `s = scale * sqrt(6/(in+out))`
    /// per layer; biases zero.
    pub fn with_random_init(mut self, seed: u64, scale: f64) -> NeuralSdf {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let was_norm = self.weight_norm;
        self.set_weight_norm(false);
        for layer in 0..self.num_layers() {
            let (w_in, w_out) = self.layer_dims(layer);
            let lim = scale * (6.0 / (w_in + w_out) as f64).sqrt();
            let off = self.layer_offset(layer);
            for k in 0..w_in * w_out {
                self.params[off + k] = rng.gen_range(-lim..lim);
            }
        }
        self.set_weight_norm(was_norm);
        self
    }

    /// Overrides the output bias; with small random weights this shifts the
    /// whole field, e.g. negative for a solid start.
    pub fn with_output_bias(mut self, bias: f64) -> NeuralSdf {
        let layer = self.num_layers() - 1;
        let (w_in, w_out) = self.layer_dims(layer);
        debug_assert_eq!(w_out, 1);
        let off = self.layer_offset(layer)
            + if self.weight_norm { (w_in + 1) * w_out } else { w_in * w_out };
        self.params[off] = bias;
        self
    }

    /// Switches the weight-normalization re-parameterization, converting the
    /// stored parameters so the represented function is unchanged.
    pub fn set_weight_norm(&mut self, on: bool) {
        if on == self.weight_norm {
            return;
        }
        let layers: Vec<(Vec<f64>, Vec<f64>)> =
            (0..self.num_layers()).map(|l| self.effective_layer(l)).collect();
        self.weight_norm = on;
        self.params = vec![0.0; self.param_count()];
        for (layer, (w, b)) in layers.iter().enumerate() {
            let (w_in, w_out) = self.layer_dims(layer);
            let off = self.layer_offset(layer);
            if on {
                for r in 0..w_out {
                    let row = &w[r * w_in..(r + 1) * w_in];
                    let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
                    for c in 0..w_in {
                        self.params[off + r * w_in + c] = row[c];
                    }
                    self.params[off + w_in * w_out + r] = norm;
                }
                for r in 0..w_out {
                    self.params[off + (w_in + 1) * w_out + r] = b[r];
                }
            } else {
                for k in 0..w_in * w_out {
                    self.params[off + k] = w[k];
                }
                for r in 0..w_out {
                    self.params[off + w_in * w_out + r] = b[r];
                }
            }
        }
    }

    /// Effective `(W, b)` for one layer, resolving weight normalization.
    /// Rows with a vanishing direction vector produce a zero row.
    fn effective_layer(&self, layer: usize) -> (Vec<f64>, Vec<f64>) {
        let (w_in, w_out) = self.layer_dims(layer);
        let off = self.layer_offset(layer);
        if !self.weight_norm {
            let w = self.params[off..off + w_in * w_out].to_vec();
            let b = self.params[off + w_in * w_out..off + (w_in + 1) * w_out].to_vec();
            (w, b)
        } else {
            let v = &self.params[off..off + w_in * w_out];
            let g = &self.params[off + w_in * w_out..off + (w_in + 1) * w_out];
            let b = self.params[off + (w_in + 1) * w_out..off + (w_in + 2) * w_out].to_vec();
            let mut w = vec![0.0; w_in * w_out];
            for r in 0..w_out {
                let row = &v[r * w_in..(r + 1) * w_in];
                let norm = row.iter().map(|x| x * x).sum::<f64>().sqrt();
                if norm > 1e-300 {
                    let s = g[r] / norm;
                    for c in 0..w_in {
                        w[r * w_in + c] = s * row[c];
                    }
                }
            }
            (w, b)
        }
    }

    fn effective_layers(&self) -> Vec<(Vec<f64>, Vec<f64>)> {
        (0..self.num_layers()).map(|l| self.effective_layer(l)).collect()
    }

    pub fn forward(&self, p: &Pt3) -> f64 {
        let layers = self.effective_layers();
        forward_with(&self.layer_sizes, &layers, [p.x, p.y, p.z], None).0
    }

    /// Forward pass with per-hidden-layer dropout masks (training only).
    /// Kept units are scaled by `1/(1-rate)` so the expectation matches the
    /// plain forward pass.
    pub fn forward_dropout(&self, p: &Pt3, masks: &DropoutMasks) -> f64 {
        let layers = self.effective_layers();
        forward_with(&self.layer_sizes, &layers, [p.x, p.y, p.z], Some(masks)).0
    }

    pub fn eval(&self, cloud: &ParticleCloud) -> Result<IndicatorField, TopologyError> {
        let layers = self.effective_layers();
        let sdf: Vec<f64> = cloud
            .rest_positions
            .par_iter()
            .map(|p| forward_with(&self.layer_sizes, &layers, [p.x, p.y, p.z], None).0)
            .collect();
        if let Some(i) = sdf.iter().position(|s| !s.is_finite()) {
            return Err(TopologyError::NonFinite { particle: i });
        }
        let values = sdf
            .iter()
            .map(|&s| super::clamp_indicator(sigmoid(-self.beta * s)))
            .collect();
        Ok(IndicatorField { values, sdf_values: Some(sdf), pinned: vec![false; cloud.len()] })
    }

    /// Reverse pass through every layer: chains `upstream · dr/ds` into
    /// gradients with respect to the flat parameter vector.
    pub fn vjp(&self, cloud: &ParticleCloud, upstream: &[f64]) -> Result<Vec<f64>, TopologyError> {
        let layers = self.effective_layers();
        let beta = self.beta;
        let eff_grad = deterministic_param_accumulate(
            cloud.len(),
            self.plain_param_count(),
            |i, acc| {
                let p = cloud.rest_positions[i];
                let (s, trace) = forward_with(&self.layer_sizes, &layers, [p.x, p.y, p.z], None);
                let r = sigmoid(-beta * s);
                let ds = upstream[i] * (-beta) * r * (1.0 - r);
                backward_params(&self.layer_sizes, &layers, &trace, ds, acc);
            },
        );
        Ok(self.effective_grad_to_params(&eff_grad))
    }

    /// Gradient of an arbitrary scalar per-sample loss `sum_i w_i * s(x_i)`.
    /// Used by the training harness; `ds_weights` are dLoss/ds per sample.
    pub fn sdf_vjp(&self, points: &[Pt3], ds_weights: &[f64], masks: Option<&DropoutMasks>) -> Vec<f64> {
        let layers = self.effective_layers();
        let eff_grad = deterministic_param_accumulate(
            points.len(),
            self.plain_param_count(),
            |i, acc| {
                let p = points[i];
                let (_, trace) = forward_with(&self.layer_sizes, &layers, [p.x, p.y, p.z], masks);
                backward_params(&self.layer_sizes, &layers, &trace, ds_weights[i], acc);
            },
        );
        self.effective_grad_to_params(&eff_grad)
    }

    fn plain_param_count(&self) -> usize {
        self.layer_sizes.windows(2).map(|w| (w[0] + 1) * w[1]).sum()
    }

    /// Converts a gradient in the effective `[W, b]` layout into the stored
    /// parameter layout, chaining through weight normalization when active.
    fn effective_grad_to_params(&self, eff: &[f64]) -> Vec<f64> {
        if !self.weight_norm {
            return eff.to_vec();
        }
        let mut out = vec![0.0; self.param_count()];
        let mut eff_off = 0;
        for layer in 0..self.num_layers() {
            let (w_in, w_out) = self.layer_dims(layer);
            let off = self.layer_offset(layer);
            let v_all = &self.params[off..off + w_in * w_out];
            let g_all = &self.params[off + w_in * w_out..off + (w_in + 1) * w_out];
            for r in 0..w_out {
                let dw = &eff[eff_off + r * w_in..eff_off + (r + 1) * w_in];
                let v = &v_all[r * w_in..(r + 1) * w_in];
                let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                if norm > 1e-300 {
                    let vhat: Vec<f64> = v.iter().map(|x| x / norm).collect();
                    let dot: f64 = dw.iter().zip(&vhat).map(|(a, b)| a * b).sum();
                    // dg = dW·v̂ ; dv = (g/|v|)(dW − (dW·v̂) v̂)
                    out[off + w_in * w_out + r] = dot;
                    let s = g_all[r] / norm;
                    for c in 0..w_in {
                        out[off + r * w_in + c] = s * (dw[c] - dot * vhat[c]);
                    }
                }
            }
            let db = &eff[eff_off + w_in * w_out..eff_off + (w_in + 1) * w_out];
            for r in 0..w_out {
                out[off + (w_in + 1) * w_out + r] = db[r];
            }
            eff_off += (w_in + 1) * w_out;
        }
        out
    }

    /// Draws one dropout mask per hidden layer from a seeded stream.
    pub fn sample_dropout_masks(&self, rng: &mut ChaCha8Rng) -> DropoutMasks {
        let mut masks = Vec::new();
        for layer in 0..self.num_layers().saturating_sub(1) {
            let width = self.layer_sizes[layer + 1];
            masks.push((0..width).map(|_| rng.gen::<f64>() >= self.dropout_rate).collect());
        }
        DropoutMasks { masks, keep_scale: 1.0 / (1.0 - self.dropout_rate) }
    }
}

#[derive(Debug, Clone)]
pub struct DropoutMasks {
    /// One keep/drop vector per hidden layer.
    pub masks: Vec<Vec<bool>>,
    pub keep_scale: f64,
}

struct Trace {
    /// Input to each layer (activations after rectifier and dropout).
    inputs: Vec<Vec<f64>>,
    /// Pre-activation of each layer.
    pre: Vec<Vec<f64>>,
    /// Dropout scale applied to each hidden unit (0 when dropped).
    scales: Vec<Vec<f64>>,
}

fn forward_with(
    sizes: &[usize],
    layers: &[(Vec<f64>, Vec<f64>)],
    input: [f64; 3],
    masks: Option<&DropoutMasks>,
) -> (f64, Trace) {
    let n_layers = layers.len();
    let mut trace = Trace {
        inputs: Vec::with_capacity(n_layers),
        pre: Vec::with_capacity(n_layers),
        scales: Vec::with_capacity(n_layers.saturating_sub(1)),
    };
    let mut a: Vec<f64> = input.to_vec();
    for (layer, (w, b)) in layers.iter().enumerate() {
        let (w_in, w_out) = (sizes[layer], sizes[layer + 1]);
        let mut z = vec![0.0; w_out];
        for r in 0..w_out {
            let mut acc = b[r];
            let row = &w[r * w_in..(r + 1) * w_in];
            for c in 0..w_in {
                acc += row[c] * a[c];
            }
            z[r] = acc;
        }
        trace.inputs.push(a);
        trace.pre.push(z.clone());
        if layer + 1 < n_layers {
            // Hidden layer: rectifier, then optional dropout.
            let mut scales = vec![1.0; w_out];
            if let Some(m) = masks {
                for (r, keep) in m.masks[layer].iter().enumerate() {
                    scales[r] = if *keep { m.keep_scale } else { 0.0 };
                }
            }
            a = z
                .iter()
                .zip(&scales)
                .map(|(&v, &s)| if v > 0.0 { v * s } else { 0.0 })
                .collect();
            trace.scales.push(scales);
        } else {
            a = z;
        }
    }
    (a[0], trace)
}

fn backward_params(
    sizes: &[usize],
    layers: &[(Vec<f64>, Vec<f64>)],
    trace: &Trace,
    upstream: f64,
    acc: &mut [f64],
) {
    let n_layers = layers.len();
    let mut delta = vec![upstream];
    let mut acc_off: usize = sizes.windows(2).map(|w| (w[0] + 1) * w[1]).sum();
    for layer in (0..n_layers).rev() {
        let (w_in, w_out) = (sizes[layer], sizes[layer + 1]);
        acc_off -= (w_in + 1) * w_out;
        let a_in = &trace.inputs[layer];
        for r in 0..w_out {
            let d = delta[r];
            if d != 0.0 {
                for c in 0..w_in {
                    acc[acc_off + r * w_in + c] += d * a_in[c];
                }
                acc[acc_off + w_in * w_out + r] += d;
            }
        }
        if layer > 0 {
            let (w, _) = &layers[layer];
            let mut prev = vec![0.0; w_in];
            for r in 0..w_out {
                let d = delta[r];
                if d != 0.0 {
                    for c in 0..w_in {
                        prev[c] += w[r * w_in + c] * d;
                    }
                }
            }
            // Through the previous hidden layer's rectifier and dropout.
            let pre = &trace.pre[layer - 1];
            let scales = &trace.scales[layer - 1];
            for c in 0..w_in {
                prev[c] = if pre[c] > 0.0 { prev[c] * scales[c] } else { 0.0 };
            }
            delta = prev;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ParticleCloud;
    use approx::assert_relative_eq;

    fn random_cloud(n: usize, seed: u64) -> ParticleCloud {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let positions: Vec<Pt3> = (0..n)
            .map(|_| {
                Pt3::new(
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                )
            })
            .collect();
        ParticleCloud::from_points(positions, 1e-3, 0.2)
    }

    #[test]
    fn zero_network_is_half_everywhere() {
        let cloud = random_cloud(20, 1);
        let net = NeuralSdf::new(3, 8, 10.0);
        let ind = net.eval(&cloud).unwrap();
        assert!(ind.values.iter().all(|&r| r == 0.5));
        assert!(ind.sdf_values.unwrap().iter().all(|&s| s == 0.0));
    }

    #[test]
    fn param_count_matches_layer_arithmetic() {
        let net = NeuralSdf::new(4, 64, 10.0);
        assert_eq!(net.layer_sizes(), &[3, 64, 64, 64, 1]);
        let expected: usize = [(3, 64), (64, 64), (64, 64), (64, 1)]
            .iter()
            .map(|(i, o)| (i + 1) * o)
            .sum();
        assert_eq!(net.param_count(), expected);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        // 2 weight layers, width 4, random weights; FD over every parameter.
        let cloud = random_cloud(15, 2);
        let net = NeuralSdf::new(2, 4, 3.0).with_random_init(7, 1.0);
        let upstream: Vec<f64> = (0..cloud.len()).map(|i| 0.5 - 0.02 * i as f64).collect();
        let analytic = net.vjp(&cloud, &upstream).unwrap();
        let loss = |params: &[f64]| {
            let mut probe = net.clone();
            probe.params.copy_from_slice(params);
            let ind = probe.eval(&cloud).unwrap();
            ind.values.iter().zip(&upstream).map(|(r, u)| r * u).sum::<f64>()
        };
        let mut params = net.params.clone();
        let step = 1e-6;
        let mut worst = 0.0f64;
        for k in 0..params.len() {
            let fd = crate::math::central_diff(&mut |p: &[f64]| loss(p), &mut params, k, step);
            worst = worst.max(crate::math::rel_err(analytic[k], fd, 1e-8));
        }
        assert!(worst <= 1e-4, "max rel err {worst}");
    }

    #[test]
    fn weight_norm_preserves_function_and_gradients_check_out() {
        let cloud = random_cloud(10, 3);
        let plain = NeuralSdf::new(2, 4, 5.0).with_random_init(9, 1.0);
        let mut wn = plain.clone();
        wn.set_weight_norm(true);
        for p in &cloud.rest_positions {
            assert_relative_eq!(plain.forward(p), wn.forward(p), epsilon = 1e-12);
        }
        let upstream = vec![1.0; cloud.len()];
        let analytic = wn.vjp(&cloud, &upstream).unwrap();
        let loss = |params: &[f64]| {
            let mut probe = wn.clone();
            probe.params.copy_from_slice(params);
            let ind = probe.eval(&cloud).unwrap();
            ind.values.iter().sum::<f64>()
        };
        let mut params = wn.params.clone();
        for k in 0..params.len() {
            let fd = crate::math::central_diff(&mut |p: &[f64]| loss(p), &mut params, k, 1e-6);
            assert!(
                crate::math::rel_err(analytic[k], fd, 1e-8) <= 1e-4,
                "param {k}: {} vs {fd}",
                analytic[k]
            );
        }
    }

    #[test]
    fn dropout_zeroes_dropped_units() {
        let mut net = NeuralSdf::new(3, 6, 1.0).with_random_init(4, 1.0);
        net.dropout_rate = 0.5;
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let masks = net.sample_dropout_masks(&mut rng);
        assert_eq!(masks.masks.len(), 2);
        let p = Pt3::new(0.3, -0.2, 0.4);
        // Dropping every hidden unit leaves only the final bias.
        let all_dropped = DropoutMasks {
            masks: masks.masks.iter().map(|m| vec![false; m.len()]).collect(),
            keep_scale: 2.0,
        };
        let out = net.forward_dropout(&p, &all_dropped);
        let final_bias = net.params[net.param_count() - 1];
        assert_relative_eq!(out, final_bias, epsilon = 1e-12);
    }
}
