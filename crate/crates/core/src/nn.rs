//! Minimal fully-connected network with reverse-mode gradients, a
//! bias-corrected adaptive-moment optimizer, target-network utilities, and a
//! finite-difference gradient check. Everything an offline RL agent needs,
//! nothing more: f64 weights, relu/tanh/identity activations, seeded init.

use std::fs;
use std::path::Path;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::parse_field;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Tanh,
    Identity,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Tanh => z.tanh(),
            Activation::Identity => z,
        }
    }

    /// Derivative given the pre-activation `z` and the output `a`.
    fn derivative(self, z: f64, a: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - a * a,
            Activation::Identity => 1.0,
        }
    }

    fn as_str(self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::Tanh => "tanh",
            Activation::Identity => "identity",
        }
    }

    fn from_str(s: &str) -> Option<Self> {
        match s {
            "relu" => Some(Activation::Relu),
            "tanh" => Some(Activation::Tanh),
            "identity" => Some(Activation::Identity),
            _ => None,
        }
    }
}

/// A feed-forward network: per layer a dense weight matrix (row-major,
/// `out x in`), a bias vector, and an activation.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    layer_sizes: Vec<usize>,
    activations: Vec<Activation>,
    weights: Vec<Vec<f64>>,
    biases: Vec<Vec<f64>>,
}

/// Cached forward pass: pre-activations and outputs per layer.
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    pre: Vec<Vec<f64>>,
    post: Vec<Vec<f64>>,
}

impl ForwardTrace {
    pub fn output(&self) -> &[f64] {
        self.post.last().expect("trace has at least one layer")
    }
}

/// Parameter gradients plus the gradient with respect to the input.
#[derive(Debug, Clone)]
pub struct Gradients {
    d_weights: Vec<Vec<f64>>,
    d_biases: Vec<Vec<f64>>,
    pub d_input: Vec<f64>,
}

impl Gradients {
    /// Read one gradient entry by the same flat order as [`Mlp::param`].
    pub fn param(&self, index: usize) -> f64 {
        let mut rest = index;
        for l in 0..self.d_weights.len() {
            if rest < self.d_weights[l].len() {
                return self.d_weights[l][rest];
            }
            rest -= self.d_weights[l].len();
            if rest < self.d_biases[l].len() {
                return self.d_biases[l][rest];
            }
            rest -= self.d_biases[l].len();
        }
        panic!("gradient index {index} out of range");
    }

    pub fn zeros_like(net: &Mlp) -> Self {
        Gradients {
            d_weights: net.weights.iter().map(|w| vec![0.0; w.len()]).collect(),
            d_biases: net.biases.iter().map(|b| vec![0.0; b.len()]).collect(),
            d_input: vec![0.0; net.layer_sizes[0]],
        }
    }

    /// Accumulate another gradient (input gradient included).
    pub fn accumulate(&mut self, other: &Gradients) {
        for (acc, g) in self.d_weights.iter_mut().zip(&other.d_weights) {
            for (a, b) in acc.iter_mut().zip(g) {
                *a += b;
            }
        }
        for (acc, g) in self.d_biases.iter_mut().zip(&other.d_biases) {
            for (a, b) in acc.iter_mut().zip(g) {
                *a += b;
            }
        }
        for (a, b) in self.d_input.iter_mut().zip(&other.d_input) {
            *a += b;
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for w in &mut self.d_weights {
            for v in w.iter_mut() {
                *v *= factor;
            }
        }
        for b in &mut self.d_biases {
            for v in b.iter_mut() {
                *v *= factor;
            }
        }
        for v in &mut self.d_input {
            *v *= factor;
        }
    }

    /// Clip the parameter-gradient global L2 norm to `max_norm`; returns the
    /// pre-clip norm.
    pub fn clip_norm(&mut self, max_norm: f64) -> f64 {
        let mut sum_sq = 0.0;
        for w in &self.d_weights {
            for v in w {
                sum_sq += v * v;
            }
        }
        for b in &self.d_biases {
            for v in b {
                sum_sq += v * v;
            }
        }
        let norm = sum_sq.sqrt();
        if norm > max_norm && norm > 0.0 {
            let factor = max_norm / norm;
            for w in &mut self.d_weights {
                for v in w.iter_mut() {
                    *v *= factor;
                }
            }
            for b in &mut self.d_biases {
                for v in b.iter_mut() {
                    *v *= factor;
                }
            }
        }
        norm
    }
}

impl Mlp {
    /// Seeded construction; weights and biases drawn uniformly from
    /// `(-1/sqrt(fan_in), +1/sqrt(fan_in))` per layer.
    pub fn new(layer_sizes: &[usize], activations: &[Activation], seed: u64) -> Result<Self> {
        Self::validate_shape(layer_sizes, activations)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut weights = Vec::new();
        let mut biases = Vec::new();
        for l in 0..activations.len() {
            let fan_in = layer_sizes[l];
            let fan_out = layer_sizes[l + 1];
            let bound = 1.0 / (fan_in as f64).sqrt();
            weights.push(
                (0..fan_in * fan_out)
                    .map(|_| (rng.random::<f64>() * 2.0 - 1.0) * bound)
                    .collect(),
            );
            biases.push(
                (0..fan_out)
                    .map(|_| (rng.random::<f64>() * 2.0 - 1.0) * bound)
                    .collect(),
            );
        }
        Ok(Mlp {
            layer_sizes: layer_sizes.to_vec(),
            activations: activations.to_vec(),
            weights,
            biases,
        })
    }

    /// All-zero parameters; useful for contract tests.
    pub fn zeros(layer_sizes: &[usize], activations: &[Activation]) -> Result<Self> {
        Self::validate_shape(layer_sizes, activations)?;
        let weights = (0..activations.len())
            .map(|l| vec![0.0; layer_sizes[l] * layer_sizes[l + 1]])
            .collect();
        let biases = (0..activations.len())
            .map(|l| vec![0.0; layer_sizes[l + 1]])
            .collect();
        Ok(Mlp {
            layer_sizes: layer_sizes.to_vec(),
            activations: activations.to_vec(),
            weights,
            biases,
        })
    }

    fn validate_shape(layer_sizes: &[usize], activations: &[Activation]) -> Result<()> {
        if layer_sizes.len() < 2 {
            return Err(Error::ShapeMismatch(
                "network needs at least input and output layers".into(),
            ));
        }
        if layer_sizes.contains(&0) {
            return Err(Error::ShapeMismatch("zero-width layer".into()));
        }
        if activations.len() != layer_sizes.len() - 1 {
            return Err(Error::ShapeMismatch(format!(
                "{} layers need {} activations, got {}",
                layer_sizes.len(),
                layer_sizes.len() - 1,
                activations.len()
            )));
        }
        Ok(())
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.layer_sizes
    }

    pub fn input_dim(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.layer_sizes.last().unwrap()
    }

    pub fn param_count(&self) -> usize {
        self.weights.iter().map(Vec::len).sum::<usize>()
            + self.biases.iter().map(Vec::len).sum::<usize>()
    }

    /// Locate a parameter by its position in the canonical flat order
    /// (per layer: weights row-major, then biases).
    fn locate(&self, index: usize) -> (usize, bool, usize) {
        let mut rest = index;
        for l in 0..self.weights.len() {
            if rest < self.weights[l].len() {
                return (l, true, rest);
            }
            rest -= self.weights[l].len();
            if rest < self.biases[l].len() {
                return (l, false, rest);
            }
            rest -= self.biases[l].len();
        }
        panic!("parameter index {index} out of range");
    }

    /// Read one parameter by flat index.
    pub fn param(&self, index: usize) -> f64 {
        let (l, is_weight, i) = self.locate(index);
        if is_weight {
            self.weights[l][i]
        } else {
            self.biases[l][i]
        }
    }

    /// Overwrite one parameter by flat index.
    pub fn set_param(&mut self, index: usize, value: f64) {
        let (l, is_weight, i) = self.locate(index);
        if is_weight {
            self.weights[l][i] = value;
        } else {
            self.biases[l][i] = value;
        }
    }

    /// Scale the final layer's parameters; a small factor starts a policy
    /// head near its activation's linear region.
    pub fn scale_final_layer(&mut self, factor: f64) {
        let last = self.weights.len() - 1;
        for v in &mut self.weights[last] {
            *v *= factor;
        }
        for v in &mut self.biases[last] {
            *v *= factor;
        }
    }

    /// Plain forward pass.
    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        let mut trace = self.forward_trace(input)?;
        Ok(trace.post.pop().expect("at least one layer"))
    }

    /// Forward pass retaining per-layer values for [`Mlp::backward`].
    pub fn forward_trace(&self, input: &[f64]) -> Result<ForwardTrace> {
        if input.len() != self.input_dim() {
            return Err(Error::ShapeMismatch(format!(
                "input length {} does not match input dim {}",
                input.len(),
                self.input_dim()
            )));
        }
        let mut pre = Vec::with_capacity(self.activations.len());
        let mut post = Vec::with_capacity(self.activations.len());
        let mut current: &[f64] = input;
        for l in 0..self.activations.len() {
            let in_dim = self.layer_sizes[l];
            let out_dim = self.layer_sizes[l + 1];
            let w = &self.weights[l];
            let mut z = self.biases[l].clone();
            for o in 0..out_dim {
                let row = &w[o * in_dim..(o + 1) * in_dim];
                let mut acc = 0.0;
                for (wi, xi) in row.iter().zip(current) {
                    acc += wi * xi;
                }
                z[o] += acc;
            }
            let a: Vec<f64> = z.iter().map(|&v| self.activations[l].apply(v)).collect();
            pre.push(z);
            post.push(a);
            current = post.last().unwrap();
        }
        Ok(ForwardTrace { pre, post })
    }

    /// Exact reverse-mode gradients of the scalar loss whose gradient with
    /// respect to the network output is `upstream`.
    pub fn backward(
        &self,
        input: &[f64],
        trace: &ForwardTrace,
        upstream: &[f64],
    ) -> Result<Gradients> {
        if upstream.len() != self.output_dim() {
            return Err(Error::ShapeMismatch(format!(
                "upstream length {} does not match output dim {}",
                upstream.len(),
                self.output_dim()
            )));
        }
        if input.len() != self.input_dim() {
            return Err(Error::ShapeMismatch(format!(
                "input length {} does not match input dim {}",
                input.len(),
                self.input_dim()
            )));
        }
        let mut grads = Gradients::zeros_like(self);
        let n_layers = self.activations.len();
        let mut delta: Vec<f64> = upstream.to_vec();
        for l in (0..n_layers).rev() {
            let in_dim = self.layer_sizes[l];
            let out_dim = self.layer_sizes[l + 1];
            // delta currently holds dL/da for this layer; fold in activation
            for o in 0..out_dim {
                delta[o] *= self.activations[l].derivative(trace.pre[l][o], trace.post[l][o]);
            }
            let layer_input: &[f64] = if l == 0 { input } else { &trace.post[l - 1] };
            let dw = &mut grads.d_weights[l];
            for o in 0..out_dim {
                let row = &mut dw[o * in_dim..(o + 1) * in_dim];
                for (di, xi) in row.iter_mut().zip(layer_input) {
                    *di += delta[o] * xi;
                }
                grads.d_biases[l][o] += delta[o];
            }
            // propagate dL/d(input of this layer)
            let w = &self.weights[l];
            let mut next_delta = vec![0.0; in_dim];
            for o in 0..out_dim {
                let row = &w[o * in_dim..(o + 1) * in_dim];
                for (nd, wi) in next_delta.iter_mut().zip(row) {
                    *nd += delta[o] * wi;
                }
            }
            delta = next_delta;
        }
        grads.d_input = delta;
        Ok(grads)
    }

    /// Serialize: `layer_sizes` row, `activations` row, then parameters
    /// (per layer: weights row-major, then biases), one value per line in
    /// 17-significant-digit scientific notation.
    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub(crate) fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str("layer_sizes");
        for s in &self.layer_sizes {
            out.push_str(&format!(",{s}"));
        }
        out.push('\n');
        out.push_str("activations");
        for a in &self.activations {
            out.push_str(&format!(",{}", a.as_str()));
        }
        out.push('\n');
        for l in 0..self.activations.len() {
            for w in &self.weights[l] {
                out.push_str(&format!("{w:.16e}\n"));
            }
            for b in &self.biases[l] {
                out.push_str(&format!("{b:.16e}\n"));
            }
        }
        out
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut lines = text.lines().enumerate();
        Self::from_lines(path, &mut lines)
    }

    pub(crate) fn from_lines<'a>(
        path: &Path,
        lines: &mut impl Iterator<Item = (usize, &'a str)>,
    ) -> Result<Self> {
        let (idx, sizes_line) = lines.next().ok_or_else(|| Error::Format {
            path: path.into(),
            reason: "missing layer_sizes row".into(),
        })?;
        let mut parts = sizes_line.split(',');
        if parts.next() != Some("layer_sizes") {
            return Err(Error::Format {
                path: path.into(),
                reason: "expected `layer_sizes` row".into(),
            });
        }
        let layer_sizes: Vec<usize> = parts
            .map(|p| parse_field(path, idx + 1, "layer_sizes", p))
            .collect::<Result<_>>()?;

        let (idx, act_line) = lines.next().ok_or_else(|| Error::Format {
            path: path.into(),
            reason: "missing activations row".into(),
        })?;
        let mut parts = act_line.split(',');
        if parts.next() != Some("activations") {
            return Err(Error::Format {
                path: path.into(),
                reason: "expected `activations` row".into(),
            });
        }
        let activations: Vec<Activation> = parts
            .map(|p| {
                Activation::from_str(p).ok_or_else(|| Error::Parse {
                    path: path.into(),
                    line: idx + 1,
                    reason: format!("unknown activation `{p}`"),
                })
            })
            .collect::<Result<_>>()?;

        let mut net = Mlp::zeros(&layer_sizes, &activations)?;
        for l in 0..activations.len() {
            let in_dim = layer_sizes[l];
            let out_dim = layer_sizes[l + 1];
            for slot in 0..(in_dim * out_dim + out_dim) {
                let (idx, line) = lines.next().ok_or_else(|| Error::Format {
                    path: path.into(),
                    reason: "truncated parameter block".into(),
                })?;
                let value: f64 = parse_field(path, idx + 1, "parameter", line)?;
                if slot < in_dim * out_dim {
                    net.weights[l][slot] = value;
                } else {
                    net.biases[l][slot - in_dim * out_dim] = value;
                }
            }
        }
        Ok(net)
    }
}

/// Bias-corrected adaptive-moment optimizer over an [`Mlp`]'s parameters,
/// with optional decoupled weight decay.
#[derive(Debug, Clone)]
pub struct Adam {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// Decoupled decay: parameters shrink by `learning_rate * weight_decay`
    /// per step before the moment update.
    pub weight_decay: f64,
    step: u64,
    m_weights: Vec<Vec<f64>>,
    v_weights: Vec<Vec<f64>>,
    m_biases: Vec<Vec<f64>>,
    v_biases: Vec<Vec<f64>>,
}

impl Adam {
    pub fn new(net: &Mlp, learning_rate: f64) -> Self {
        Adam {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 0.0,
            step: 0,
            m_weights: net.weights.iter().map(|w| vec![0.0; w.len()]).collect(),
            v_weights: net.weights.iter().map(|w| vec![0.0; w.len()]).collect(),
            m_biases: net.biases.iter().map(|b| vec![0.0; b.len()]).collect(),
            v_biases: net.biases.iter().map(|b| vec![0.0; b.len()]).collect(),
        }
    }

    pub fn with_weight_decay(net: &Mlp, learning_rate: f64, weight_decay: f64) -> Self {
        let mut adam = Adam::new(net, learning_rate);
        adam.weight_decay = weight_decay;
        adam
    }

    /// One update of `net` in place using `grads`.
    pub fn step(&mut self, net: &mut Mlp, grads: &Gradients) -> Result<()> {
        if self.m_weights.len() != net.weights.len() || grads.d_weights.len() != net.weights.len() {
            return Err(Error::ShapeMismatch(
                "optimizer state does not match network".into(),
            ));
        }
        self.step += 1;
        if self.weight_decay > 0.0 {
            let shrink = 1.0 - self.learning_rate * self.weight_decay;
            for w in &mut net.weights {
                for v in w.iter_mut() {
                    *v *= shrink;
                }
            }
            for b in &mut net.biases {
                for v in b.iter_mut() {
                    *v *= shrink;
                }
            }
        }
        let bc1 = 1.0 - self.beta1.powi(self.step as i32);
        let bc2 = 1.0 - self.beta2.powi(self.step as i32);
        for l in 0..net.weights.len() {
            update_block(
                &mut net.weights[l],
                &grads.d_weights[l],
                &mut self.m_weights[l],
                &mut self.v_weights[l],
                self.learning_rate,
                self.beta1,
                self.beta2,
                self.eps,
                bc1,
                bc2,
            )?;
            update_block(
                &mut net.biases[l],
                &grads.d_biases[l],
                &mut self.m_biases[l],
                &mut self.v_biases[l],
                self.learning_rate,
                self.beta1,
                self.beta2,
                self.eps,
                bc1,
                bc2,
            )?;
        }
        Ok(())
    }
}

#[allow(clippy::too_many_arguments)]
fn update_block(
    params: &mut [f64],
    grads: &[f64],
    m: &mut [f64],
    v: &mut [f64],
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    bc1: f64,
    bc2: f64,
) -> Result<()> {
    if params.len() != grads.len() {
        return Err(Error::ShapeMismatch(
            "gradient block does not match parameter block".into(),
        ));
    }
    for i in 0..params.len() {
        m[i] = beta1 * m[i] + (1.0 - beta1) * grads[i];
        v[i] = beta2 * v[i] + (1.0 - beta2) * grads[i] * grads[i];
        let m_hat = m[i] / bc1;
        let v_hat = v[i] / bc2;
        params[i] -= lr * m_hat / (v_hat.sqrt() + eps);
    }
    Ok(())
}

/// Polyak update `target <- (1 - tau) * target + tau * source`, elementwise.
pub fn soft_update(target: &mut Mlp, source: &Mlp, tau: f64) -> Result<()> {
    if tau.is_nan() || tau <= 0.0 || tau > 1.0 {
        return Err(Error::invalid_param(
            "tau",
            format!("must lie in (0, 1], got {tau}"),
        ));
    }
    if target.layer_sizes != source.layer_sizes || target.activations != source.activations {
        return Err(Error::ShapeMismatch(
            "target and source networks differ in shape".into(),
        ));
    }
    for (tw, sw) in target.weights.iter_mut().zip(&source.weights) {
        for (t, s) in tw.iter_mut().zip(sw) {
            *t += tau * (s - *t);
        }
    }
    for (tb, sb) in target.biases.iter_mut().zip(&source.biases) {
        for (t, s) in tb.iter_mut().zip(sb) {
            *t += tau * (s - *t);
        }
    }
    Ok(())
}

/// Central finite differences over every parameter against [`Mlp::backward`],
/// for the scalar loss `upstream . forward(input)`. Returns the max
/// per-parameter relative error (relative to `max(|analytic|, |numeric|, 1)`,
/// so near-zero gradients are compared absolutely).
pub fn gradient_check(net: &Mlp, input: &[f64], upstream: &[f64], eps: f64) -> Result<f64> {
    if eps.is_nan() || eps <= 0.0 || eps >= 1e-2 {
        return Err(Error::invalid_param(
            "eps",
            format!("finite-difference step must lie in (0, 1e-2), got {eps}"),
        ));
    }
    let trace = net.forward_trace(input)?;
    let analytic = net.backward(input, &trace, upstream)?;

    let mut probe = net.clone();
    let loss = |net: &Mlp| -> Result<f64> {
        let out = net.forward(input)?;
        Ok(out.iter().zip(upstream).map(|(o, u)| o * u).sum())
    };

    let mut max_rel: f64 = 0.0;
    for idx in 0..net.param_count() {
        let orig = probe.param(idx);
        probe.set_param(idx, orig + eps);
        let plus = loss(&probe)?;
        probe.set_param(idx, orig - eps);
        let minus = loss(&probe)?;
        probe.set_param(idx, orig);
        let numeric = (plus - minus) / (2.0 * eps);
        let a = analytic.param(idx);
        max_rel = max_rel.max((a - numeric).abs() / a.abs().max(numeric.abs()).max(1.0));
    }
    Ok(max_rel)
}
