//! The proposed method: one-hot encode, compress with an autoencoder, MixUp in
//! latent space, then classify with a small MLP head. Plus artifact files.
//!
//! An artifact file is a container (see [`crate::container`]) with payload tag
//! `Pipeline` whose body holds, in order: the config as length-prefixed JSON,
//! the encoding plan as length-prefixed JSON, the training fingerprint as a
//! length-prefixed hex string, then the encoder, decoder and head networks in
//! the container's network layout.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::augment::{augment_training, MixupConfig};
use crate::container::{self, PayloadTag, Reader, Writer};
use crate::dataset::Dataset;
use crate::encoding::{fit_encoding, EncodingMode, EncodingPlan};
use crate::error::{param_err, ArtifactError, Error, Result};
use crate::neural::{train_autoencoder, train_mlp, AutoencoderModel, LayerSpec, MlpClassifier, Network, TrainConfig};
use crate::numerics::{Matrix, RngState};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StageTraining {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
}

impl Default for StageTraining {
    fn default() -> Self {
        Self { learning_rate: 1e-4, epochs: 100, batch_size: 32 }
    }
}

impl StageTraining {
    fn with_seed(self, seed: u64) -> TrainConfig {
        TrainConfig { learning_rate: self.learning_rate, epochs: self.epochs, batch_size: self.batch_size, seed }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProposedConfig {
    /// Encoder widths, ReLU; the last one is the latent width.
    pub encoder: Vec<usize>,
    /// Hidden widths of the classifier head, ReLU, before its sigmoid unit.
    pub head: Vec<usize>,
    pub autoencoder_training: StageTraining,
    pub head_training: StageTraining,
    pub mixup: MixupConfig,
    pub seed: u64,
}

impl Default for ProposedConfig {
    fn default() -> Self {
        Self {
            encoder: vec![256, 64, 32],
            head: vec![32, 24, 6],
            autoencoder_training: StageTraining::default(),
            head_training: StageTraining::default(),
            mixup: MixupConfig::default(),
            seed: 0,
        }
    }
}

impl ProposedConfig {
    pub fn latent_width(&self) -> usize {
        self.encoder.last().copied().unwrap_or(0)
    }

    fn validate(&self) -> Result<()> {
        if self.encoder.is_empty() || self.encoder.contains(&0) || self.head.contains(&0) {
            return param_err("encoder needs at least one layer and every width must be positive");
        }
        Ok(())
    }
}

/// A fitted proposed-method model.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineArtifact {
    pub config: ProposedConfig,
    pub plan: EncodingPlan,
    pub autoencoder: AutoencoderModel,
    pub head: MlpClassifier,
    /// SHA-256 of the encoded training matrix and labels.
    pub fingerprint: String,
}

/// Sizes seen while fitting, for reporting.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitStats {
    pub training_rows: usize,
    pub input_width: usize,
    pub head_rows: usize,
    pub head_width: usize,
    pub autoencoder_loss: Vec<f64>,
    pub head_loss: Vec<f64>,
}

fn fingerprint(x: &Matrix, y: &[bool]) -> String {
    let mut h = Sha256::new();
    h.update((x.rows() as u64).to_le_bytes());
    h.update((x.cols() as u64).to_le_bytes());
    for v in x.as_slice() {
        h.update(v.to_le_bytes());
    }
    for &l in y {
        h.update([l as u8]);
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

/// Fits every stage on `rows` of `ds` only.
pub fn fit_proposed(ds: &Dataset, rows: &[usize], cfg: &ProposedConfig) -> Result<PipelineArtifact> {
    fit_proposed_with_stats(ds, rows, cfg).map(|(a, _)| a)
}

pub fn fit_proposed_with_stats(ds: &Dataset, rows: &[usize], cfg: &ProposedConfig) -> Result<(PipelineArtifact, FitStats)> {
    cfg.validate()?;
    let labels: Vec<bool> = rows.iter().map(|&r| ds.labels()[r]).collect();
    let pos = labels.iter().filter(|&&l| l).count();
    if pos < 2 || labels.len() - pos < 2 {
        return param_err(format!(
            "the proposed method needs at least 2 samples per class, got {pos} positive and {} negative",
            labels.len() - pos
        ));
    }
    let root = RngState::new(cfg.seed);

    let plan = fit_encoding(ds, rows).map_err(|e| e.at_stage("encode"))?;
    let records: Vec<_> = rows.iter().map(|&r| ds.records()[r].clone()).collect();
    let x = plan.transform_records(&records, EncodingMode::Onehot).map_err(|e| e.at_stage("encode"))?.matrix;

    let ae_cfg = cfg.autoencoder_training.with_seed(root.fork_named("autoencoder").next_u64());
    let autoencoder = train_autoencoder(&LayerSpec::relu_stack(&cfg.encoder), &x, &ae_cfg)
        .map_err(|e| e.at_stage("autoencoder"))?;
    let latent = autoencoder.encode_latent(&x).map_err(|e| e.at_stage("latent"))?;

    let y: Vec<f64> = labels.iter().map(|&l| l as u8 as f64).collect();
    let (z, soft) =
        augment_training(&latent, &y, &cfg.mixup, &root.fork_named("mixup")).map_err(|e| e.at_stage("mixup"))?;

    let head_cfg = cfg.head_training.with_seed(root.fork_named("head").next_u64());
    let head = train_mlp(&LayerSpec::relu_stack(&cfg.head), &z, &soft, &head_cfg).map_err(|e| e.at_stage("head"))?;

    let stats = FitStats {
        training_rows: rows.len(),
        input_width: x.cols(),
        head_rows: z.rows(),
        head_width: z.cols(),
        autoencoder_loss: autoencoder.loss_history.clone(),
        head_loss: head.loss_history.clone(),
    };
    let artifact = PipelineArtifact { config: cfg.clone(), plan, autoencoder, head, fingerprint: fingerprint(&x, &labels) };
    Ok((artifact, stats))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub scores: Vec<f64>,
    pub labels: Vec<bool>,
}

impl PipelineArtifact {
    pub const THRESHOLD: f64 = 0.5;

    /// Scores rows that are already one-hot encoded by this artifact's plan.
    pub fn score_encoded(&self, x: &Matrix) -> Result<Vec<f64>> {
        let z = self.autoencoder.encode_latent(x)?;
        self.head.scores(&z)
    }

    /// Canonical bytes of everything fitted, for equality checks.
    pub fn state_bytes(&self) -> Vec<u8> {
        self.to_bytes()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::new();
        w.bytes(&serde_json::to_vec(&self.config).expect("config serializes"));
        w.bytes(&self.plan.state_bytes());
        w.bytes(self.fingerprint.as_bytes());
        w.u64(self.autoencoder.encoder.input_width as u64);
        w.network(&self.autoencoder.encoder);
        w.network(&self.autoencoder.decoder);
        w.network(&self.head.network);
        container::seal(PayloadTag::Pipeline, &w.finish())
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let body = container::open_expecting(bytes, PayloadTag::Pipeline)?;
        let mut r = Reader::new(body);
        let corrupt = |what: &str, e: serde_json::Error| ArtifactError::Corrupt(format!("{what}: {e}"));
        let config: ProposedConfig = serde_json::from_slice(r.bytes()?).map_err(|e| corrupt("config", e))?;
        let plan: EncodingPlan = serde_json::from_slice(r.bytes()?).map_err(|e| corrupt("encoding plan", e))?;
        let fingerprint = String::from_utf8(r.bytes()?.to_vec())
            .map_err(|_| ArtifactError::Corrupt("fingerprint is not UTF-8".into()))?;
        let input = r.count()?;
        let encoder = r.network(Some(input))?;
        let decoder = r.network(Some(encoder.output_width()))?;
        let head_net: Network = r.network(Some(encoder.output_width()))?;
        r.finish()?;
        if input != plan.onehot_width() || decoder.output_width() != input || head_net.output_width() != 1 {
            return Err(ArtifactError::Corrupt(format!(
                "stages do not chain: plan width {}, encoder {input} -> {}, decoder -> {}, head -> {}",
                plan.onehot_width(),
                encoder.output_width(),
                decoder.output_width(),
                head_net.output_width()
            ))
            .into());
        }
        Ok(PipelineArtifact {
            config,
            plan,
            autoencoder: AutoencoderModel { encoder, decoder, loss_history: Vec::new() },
            head: MlpClassifier { network: head_net, loss_history: Vec::new() },
            fingerprint,
        })
    }
}

/// Scores and labels (`score ≥ 0.5`) for every row of `ds`.
pub fn predict_proposed(artifact: &PipelineArtifact, ds: &Dataset) -> Result<Prediction> {
    let x = artifact.plan.transform(ds, EncodingMode::Onehot)?.matrix;
    let scores = artifact.score_encoded(&x)?;
    let labels = scores.iter().map(|&s| s >= PipelineArtifact::THRESHOLD).collect();
    Ok(Prediction { scores, labels })
}

/// Writes through a temporary sibling and renames, so readers never see a
/// half-written file.
pub fn save_artifact(artifact: &PipelineArtifact, path: impl AsRef<Path>) -> Result<()> {
    write_atomically(path.as_ref(), &artifact.to_bytes())
}

pub fn load_artifact(path: impl AsRef<Path>) -> Result<PipelineArtifact> {
    PipelineArtifact::from_bytes(&fs::read(path)?)
}

pub(crate) fn write_atomically(path: &Path, bytes: &[u8]) -> Result<()> {
    let name = path.file_name().ok_or_else(|| Error::Config(format!("not a file path: {}", path.display())))?;
    let tmp = path.with_file_name(format!(".{}.tmp", name.to_string_lossy()));
    let mut f = fs::File::create(&tmp)?;
    f.write_all(bytes)?;
    f.sync_all()?;
    drop(f);
    fs::rename(&tmp, path)?;
    Ok(())
}
