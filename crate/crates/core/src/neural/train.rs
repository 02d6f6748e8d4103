use serde::{Deserialize, Serialize};

use crate::error::{param_err, shape_err, Error, Result};
use crate::neural::network::{Activation, LayerSpec, Loss, Network};
use crate::numerics::{AdamState, Matrix, RngState};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self { learning_rate: 1e-4, epochs: 100, batch_size: 32, seed: 0 }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return param_err(format!("learning rate must be positive, got {}", self.learning_rate));
        }
        if self.epochs == 0 || self.batch_size == 0 {
            return param_err("epochs and batch_size must be at least 1");
        }
        Ok(())
    }
}

/// Mini-batch Adam on `net`. Returns the mean loss of every epoch.
///
/// Rows are reshuffled each epoch from a stream derived from `cfg.seed`.
pub fn train_network(
    net: &mut Network,
    x: &Matrix,
    targets: &Matrix,
    loss: Loss,
    cfg: &TrainConfig,
) -> Result<Vec<f64>> {
    cfg.validate()?;
    if x.rows() != targets.rows() {
        return shape_err(format!("{} inputs but {} targets", x.rows(), targets.rows()));
    }
    if x.rows() == 0 {
        return Err(Error::EmptyInput("no training rows".into()));
    }
    let mut adam: Vec<(AdamState, AdamState)> = net
        .layers
        .iter()
        .map(|l| {
            (
                AdamState::new(l.weights.as_slice().len(), cfg.learning_rate),
                AdamState::new(l.bias.len(), cfg.learning_rate),
            )
        })
        .collect();
    let shuffle_rng = RngState::new(cfg.seed).fork_named("minibatch-order");
    let mut order: Vec<usize> = (0..x.rows()).collect();
    let mut history = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        let mut rng = shuffle_rng.fork(epoch as u64);
        rng.shuffle(&mut order);
        let mut total = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let bx = x.select_rows(batch);
            let bt = targets.select_rows(batch);
            let (value, grads) = net.backprop(&bx, &bt, loss)?;
            if !value.is_finite() {
                return Err(Error::Diverged { epoch, detail: format!("batch loss {value}") });
            }
            total += value * batch.len() as f64;
            for (l, layer) in net.layers.iter_mut().enumerate() {
                let (aw, ab) = &mut adam[l];
                aw.step(layer.weights.as_mut_slice(), grads.weights[l].as_slice())?;
                ab.step(&mut layer.bias, &grads.bias[l])?;
            }
        }
        let mean = total / x.rows() as f64;
        if !mean.is_finite() || net.params_flat().iter().any(|p| !p.is_finite()) {
            return Err(Error::Diverged { epoch, detail: format!("epoch loss {mean}") });
        }
        history.push(mean);
    }
    Ok(history)
}

/// Feed-forward binary classifier ending in one sigmoid unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpClassifier {
    pub network: Network,
    #[serde(skip)]
    pub loss_history: Vec<f64>,
}

impl MlpClassifier {
    /// Probability-like score in (0, 1) per row.
    pub fn scores(&self, x: &Matrix) -> Result<Vec<f64>> {
        Ok(self.network.predict(x)?.into_vec())
    }
}

/// Trains `hidden` layers plus a sigmoid head with binary cross-entropy on
/// soft labels in [0, 1].
pub fn train_mlp(hidden: &[LayerSpec], x: &Matrix, y: &[f64], cfg: &TrainConfig) -> Result<MlpClassifier> {
    if y.len() != x.rows() {
        return shape_err(format!("{} labels for {} rows", y.len(), x.rows()));
    }
    if let Some(bad) = y.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return param_err(format!("soft labels must lie in [0, 1], found {bad}"));
    }
    let mut specs = hidden.to_vec();
    specs.push(LayerSpec::new(1, Activation::Sigmoid));
    let mut rng = RngState::new(cfg.seed).fork_named("mlp-init");
    let mut network = Network::init(x.cols(), &specs, &mut rng)?;
    let targets = Matrix::new(y.len(), 1, y.to_vec())?;
    let loss_history = train_network(&mut network, x, &targets, Loss::BinaryCrossEntropy, cfg)?;
    Ok(MlpClassifier { network, loss_history })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AutoencoderModel {
    pub encoder: Network,
    pub decoder: Network,
    #[serde(skip)]
    pub loss_history: Vec<f64>,
}

impl AutoencoderModel {
    pub fn latent_width(&self) -> usize {
        self.encoder.output_width()
    }

    pub fn encode_latent(&self, x: &Matrix) -> Result<Matrix> {
        self.encoder.predict(x)
    }

    pub fn reconstruct(&self, x: &Matrix) -> Result<Matrix> {
        self.decoder.predict(&self.encoder.predict(x)?)
    }

    pub fn reconstruction_mse(&self, x: &Matrix) -> Result<f64> {
        let r = self.reconstruct(x)?;
        let n = x.rows().max(1) as f64;
        Ok(x.as_slice().iter().zip(r.as_slice()).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / n)
    }

}

/// Mirror of an encoder stack: hidden widths reversed, sigmoid reconstruction head.
pub fn decoder_specs(encoder: &[LayerSpec], input_width: usize) -> Vec<LayerSpec> {
    let mut specs: Vec<LayerSpec> = encoder.iter().rev().skip(1).copied().collect();
    specs.push(LayerSpec::new(input_width, Activation::Sigmoid));
    specs
}

/// Trains encoder + mirrored decoder end to end on reconstruction MSE.
pub fn train_autoencoder(encoder: &[LayerSpec], x: &Matrix, cfg: &TrainConfig) -> Result<AutoencoderModel> {
    if encoder.is_empty() {
        return param_err("encoder needs at least one layer");
    }
    let mut specs = encoder.to_vec();
    specs.extend(decoder_specs(encoder, x.cols()));
    let mut rng = RngState::new(cfg.seed).fork_named("autoencoder-init");
    let mut net = Network::init(x.cols(), &specs, &mut rng)?;
    let loss_history = train_network(&mut net, x, x, Loss::Mse, cfg)?;
    let decoder_layers = net.layers.split_off(encoder.len());
    let latent = net.output_width();
    Ok(AutoencoderModel {
        encoder: net,
        decoder: Network { input_width: latent, layers: decoder_layers },
        loss_history,
    })
}

pub fn encode_latent(ae: &AutoencoderModel, x: &Matrix) -> Result<Matrix> {
    ae.encode_latent(x)
}
