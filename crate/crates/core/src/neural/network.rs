use serde::{Deserialize, Serialize};

use crate::error::{param_err, shape_err, Error, Result};
use crate::numerics::{dot, Matrix, RngState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Sigmoid,
    Tanh,
    Linear,
}

impl Activation {
    #[inline]
    pub fn apply(self, a: f64) -> f64 {
        match self {
            Activation::Relu => a.max(0.0),
            Activation::Sigmoid => sigmoid(a),
            Activation::Tanh => a.tanh(),
            Activation::Linear => a,
        }
    }

    /// Derivative expressed through the pre-activation `a` and output `z`.
    #[inline]
    fn derivative(self, a: f64, z: f64) -> f64 {
        match self {
            Activation::Relu => (a > 0.0) as u8 as f64,
            Activation::Sigmoid => z * (1.0 - z),
            Activation::Tanh => 1.0 - z * z,
            Activation::Linear => 1.0,
        }
    }

    pub(crate) fn tag(self) -> u8 {
        match self {
            Activation::Relu => 0,
            Activation::Sigmoid => 1,
            Activation::Tanh => 2,
            Activation::Linear => 3,
        }
    }

    pub(crate) fn from_tag(tag: u8) -> Option<Self> {
        Some(match tag {
            0 => Activation::Relu,
            1 => Activation::Sigmoid,
            2 => Activation::Tanh,
            3 => Activation::Linear,
            _ => return None,
        })
    }
}

#[inline]
pub fn sigmoid(a: f64) -> f64 {
    if a >= 0.0 {
        1.0 / (1.0 + (-a).exp())
    } else {
        let e = a.exp();
        e / (1.0 + e)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerSpec {
    pub width: usize,
    pub activation: Activation,
}

impl LayerSpec {
    pub fn new(width: usize, activation: Activation) -> Self {
        Self { width, activation }
    }

    pub fn relu_stack(widths: &[usize]) -> Vec<LayerSpec> {
        widths.iter().map(|&w| LayerSpec::new(w, Activation::Relu)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Loss {
    /// Mean over samples of the squared reconstruction error summed over outputs.
    Mse,
    /// Mean over samples of the cross-entropy summed over outputs; sigmoid outputs only.
    BinaryCrossEntropy,
}

/// Fully connected layer. Weights are stored fan_in × fan_out so that
/// `a = z·W + b` streams contiguous rows and skips zero inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    pub weights: Matrix,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

impl Dense {
    pub fn fan_in(&self) -> usize {
        self.weights.rows()
    }

    pub fn fan_out(&self) -> usize {
        self.weights.cols()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Network {
    pub input_width: usize,
    pub layers: Vec<Dense>,
}

/// Pre-activations and activations of every layer for one batch.
#[derive(Debug, Clone)]
pub struct Forward {
    pub pre: Vec<Matrix>,
    pub post: Vec<Matrix>,
}

impl Forward {
    pub fn output(&self) -> &Matrix {
        self.post.last().expect("network has layers")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Matrix>,
    pub bias: Vec<Vec<f64>>,
}

impl Gradients {
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for (w, b) in self.weights.iter().zip(&self.bias) {
            out.extend_from_slice(w.as_slice());
            out.extend_from_slice(b);
        }
        out
    }
}

impl Network {
    /// Seeded initialization: He-uniform for ReLU layers, Xavier-uniform otherwise; zero biases.
    pub fn init(input_width: usize, specs: &[LayerSpec], rng: &mut RngState) -> Result<Self> {
        if input_width == 0 {
            return param_err("network input width must be at least 1");
        }
        if specs.is_empty() {
            return param_err("network needs at least one layer");
        }
        let mut fan_in = input_width;
        let mut layers = Vec::with_capacity(specs.len());
        for spec in specs {
            if spec.width == 0 {
                return param_err("layer width must be at least 1");
            }
            let limit = match spec.activation {
                Activation::Relu => (6.0 / fan_in as f64).sqrt(),
                _ => (6.0 / (fan_in + spec.width) as f64).sqrt(),
            };
            let w = (0..fan_in * spec.width).map(|_| rng.uniform_range(-limit, limit)).collect();
            layers.push(Dense {
                weights: Matrix::from_raw(fan_in, spec.width, w),
                bias: vec![0.0; spec.width],
                activation: spec.activation,
            });
            fan_in = spec.width;
        }
        Ok(Self { input_width, layers })
    }

    /// Builds a network from explicit layers, checking that dimensions chain.
    pub fn from_layers(input_width: usize, layers: Vec<Dense>) -> Result<Self> {
        let mut fan_in = input_width;
        for (l, layer) in layers.iter().enumerate() {
            if layer.fan_in() != fan_in || layer.bias.len() != layer.fan_out() {
                return shape_err(format!("layer {l} does not chain onto width {fan_in}"));
            }
            if layer.bias.iter().any(|b| !b.is_finite()) {
                return Err(Error::NonFinite(format!("bias of layer {l}")));
            }
            fan_in = layer.fan_out();
        }
        Ok(Self { input_width, layers })
    }

    pub fn output_width(&self) -> usize {
        self.layers.last().map_or(self.input_width, Dense::fan_out)
    }

    pub fn specs(&self) -> Vec<LayerSpec> {
        self.layers.iter().map(|l| LayerSpec::new(l.fan_out(), l.activation)).collect()
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.as_slice().len() + l.bias.len()).sum()
    }

    pub fn params_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for l in &self.layers {
            out.extend_from_slice(l.weights.as_slice());
            out.extend_from_slice(&l.bias);
        }
        out
    }

    pub fn set_params_flat(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.param_count() {
            return shape_err(format!("{} parameters for a network with {}", params.len(), self.param_count()));
        }
        let mut at = 0;
        for l in &mut self.layers {
            let n = l.weights.as_slice().len();
            l.weights.as_mut_slice().copy_from_slice(&params[at..at + n]);
            at += n;
            let m = l.bias.len();
            l.bias.copy_from_slice(&params[at..at + m]);
            at += m;
        }
        Ok(())
    }

    pub fn forward(&self, x: &Matrix) -> Result<Forward> {
        if x.cols() != self.input_width {
            return shape_err(format!("network expects {} inputs, got {}", self.input_width, x.cols()));
        }
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut post: Vec<Matrix> = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            let input = post.last().unwrap_or(x);
            let mut a = input.matmul(&layer.weights)?;
            for r in 0..a.rows() {
                for (v, b) in a.row_mut(r).iter_mut().zip(&layer.bias) {
                    *v += b;
                }
            }
            let mut z = a.clone();
            z.as_mut_slice().iter_mut().for_each(|v| *v = layer.activation.apply(*v));
            pre.push(a);
            post.push(z);
        }
        Ok(Forward { pre, post })
    }

    pub fn predict(&self, x: &Matrix) -> Result<Matrix> {
        let mut f = self.forward(x)?;
        Ok(f.post.pop().expect("network has layers"))
    }

    fn check_loss(&self, loss: Loss) -> Result<()> {
        if loss == Loss::BinaryCrossEntropy
            && self.layers.last().map(|l| l.activation) != Some(Activation::Sigmoid)
        {
            return param_err("binary cross-entropy requires a sigmoid output layer");
        }
        Ok(())
    }

    pub fn loss(&self, x: &Matrix, targets: &Matrix, loss: Loss) -> Result<f64> {
        self.check_loss(loss)?;
        let f = self.forward(x)?;
        check_targets(f.output(), targets)?;
        Ok(loss_value(f.pre.last().unwrap(), f.output(), targets, loss))
    }

    /// Loss and exact gradients for one batch.
    pub fn backprop(&self, x: &Matrix, targets: &Matrix, loss: Loss) -> Result<(f64, Gradients)> {
        self.check_loss(loss)?;
        let f = self.forward(x)?;
        check_targets(f.output(), targets)?;
        let n = x.rows().max(1) as f64;
        let last = self.layers.len() - 1;
        let value = loss_value(&f.pre[last], &f.post[last], targets, loss);

        // delta = dL/da for the output layer
        let out = &f.post[last];
        let mut delta = Matrix::zeros(out.rows(), out.cols());
        {
            let act = self.layers[last].activation;
            let pre = f.pre[last].as_slice();
            let z = out.as_slice();
            let t = targets.as_slice();
            for (i, d) in delta.as_mut_slice().iter_mut().enumerate() {
                *d = match loss {
                    Loss::Mse => 2.0 * (z[i] - t[i]) / n * act.derivative(pre[i], z[i]),
                    Loss::BinaryCrossEntropy => (z[i] - t[i]) / n,
                };
            }
        }

        let mut grad_w = vec![Matrix::zeros(0, 0); self.layers.len()];
        let mut grad_b = vec![Vec::new(); self.layers.len()];
        for l in (0..self.layers.len()).rev() {
            let layer = &self.layers[l];
            let input = if l == 0 { x } else { &f.post[l - 1] };
            let mut gw = Matrix::zeros(layer.fan_in(), layer.fan_out());
            let mut gb = vec![0.0; layer.fan_out()];
            for i in 0..input.rows() {
                let d = delta.row(i);
                for (b, dv) in gb.iter_mut().zip(d) {
                    *b += dv;
                }
                for (k, &zk) in input.row(i).iter().enumerate() {
                    if zk == 0.0 {
                        continue;
                    }
                    for (g, dv) in gw.row_mut(k).iter_mut().zip(d) {
                        *g += zk * dv;
                    }
                }
            }
            grad_w[l] = gw;
            grad_b[l] = gb;

            if l > 0 {
                let below = &self.layers[l - 1];
                let mut next = Matrix::zeros(input.rows(), layer.fan_in());
                for i in 0..input.rows() {
                    let d = delta.row(i);
                    let pre = f.pre[l - 1].row(i);
                    let z = input.row(i);
                    let row = next.row_mut(i);
                    for k in 0..layer.fan_in() {
                        let deriv = below.activation.derivative(pre[k], z[k]);
                        if deriv != 0.0 {
                            row[k] = dot(layer.weights.row(k), d) * deriv;
                        }
                    }
                }
                delta = next;
            }
        }
        Ok((value, Gradients { weights: grad_w, bias: grad_b }))
    }
}

fn check_targets(output: &Matrix, targets: &Matrix) -> Result<()> {
    if output.shape() != targets.shape() {
        return shape_err(format!("targets {:?} do not match outputs {:?}", targets.shape(), output.shape()));
    }
    Ok(())
}

fn loss_value(pre: &Matrix, out: &Matrix, targets: &Matrix, loss: Loss) -> f64 {
    let n = out.rows().max(1) as f64;
    let t = targets.as_slice();
    let total: f64 = match loss {
        Loss::Mse => out.as_slice().iter().zip(t).map(|(z, y)| (z - y) * (z - y)).sum(),
        Loss::BinaryCrossEntropy => pre
            .as_slice()
            .iter()
            .zip(t)
            .map(|(&a, &y)| a.max(0.0) - a * y + (-a.abs()).exp().ln_1p())
            .sum(),
    };
    total / n
}
