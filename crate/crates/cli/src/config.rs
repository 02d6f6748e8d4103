//! Command-line flags merged over an optional TOML config file.
//!
//! ```toml
//! dataset = "data/bsng.csv"
//! seed = [1, 2, 3]          # or a single integer
//! variants = ["onehot"]
//! families = ["random_forest", "mlp"]
//! workers = 8
//! cap = 4000
//! out = "results"
//!
//! [eval]                    # folds, pca_components, mixup
//! folds = 5
//!
//! [params.random_forest]    # per-family hyperparameter overrides
//! n_trees = 50
//!
//! [params.proposed]
//! "head_training.epochs" = 200
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use bsng_core::baselines::{Family, ModelSpec};
use bsng_core::dataset::{bsng_schema, load_csv, Dataset, Schema};
use bsng_core::evaluation::{EvalConfig, Method, Variant};
use bsng_core::pipeline::ProposedConfig;
use clap::Args;
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// Input CSV.
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// Schema TOML; the bundled BSNG schema when omitted.
    #[arg(long)]
    pub schema: Option<PathBuf>,
    /// TOML config file; flags given here take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Master seed, or a comma-separated list to average over.
    #[arg(long, value_delimiter = ',')]
    pub seed: Vec<u64>,
    /// original, onehot, augmented or proposed (comma-separated where several are allowed).
    #[arg(long, alias = "variants", value_delimiter = ',')]
    pub variant: Vec<String>,
    /// Comma-separated model families, `proposed` included.
    #[arg(long, value_delimiter = ',')]
    pub families: Vec<String>,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    pub workers: Option<usize>,
    /// Row cap of the kernel families.
    #[arg(long)]
    pub cap: Option<usize>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum Seeds {
    One(u64),
    Many(Vec<u64>),
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    dataset: Option<PathBuf>,
    schema: Option<PathBuf>,
    seed: Option<Seeds>,
    #[serde(alias = "variant")]
    variants: Option<Vec<String>>,
    families: Option<Vec<String>>,
    workers: Option<usize>,
    cap: Option<usize>,
    out: Option<PathBuf>,
    #[serde(default)]
    eval: Option<EvalConfig>,
    #[serde(default)]
    params: BTreeMap<String, BTreeMap<String, serde_json::Value>>,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub dataset: Option<PathBuf>,
    pub schema: Option<PathBuf>,
    pub seeds: Vec<u64>,
    pub variants: Vec<Variant>,
    pub families: Vec<String>,
    pub out: PathBuf,
    /// Whether an output directory was asked for explicitly.
    pub out_given: bool,
    pub eval: EvalConfig,
    pub params: BTreeMap<String, BTreeMap<String, serde_json::Value>>,
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::usage(msg)
}

impl RunConfig {
    pub fn resolve(args: &RunArgs) -> Result<Self, CliError> {
        let file = match &args.config {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| usage(format!("cannot read config {}: {e}", p.display())))?;
                toml::from_str::<FileConfig>(&text).map_err(|e| usage(format!("config {}: {e}", p.display())))?
            }
            None => FileConfig::default(),
        };
        let seeds = if !args.seed.is_empty() {
            args.seed.clone()
        } else {
            match file.seed {
                Some(Seeds::One(s)) => vec![s],
                Some(Seeds::Many(v)) => v,
                None => Vec::new(),
            }
        };
        let variant_names =
            if args.variant.is_empty() { file.variants.unwrap_or_default() } else { args.variant.clone() };
        let variants = variant_names
            .iter()
            .map(|v| v.parse::<Variant>().map_err(|e| usage(e.to_string())))
            .collect::<Result<Vec<_>, _>>()?;
        let families = if args.families.is_empty() { file.families.unwrap_or_default() } else { args.families.clone() };
        let families: Vec<String> = families.iter().map(|f| f.trim().to_ascii_lowercase().replace('-', "_")).collect();
        for f in &families {
            if f != "proposed" {
                f.parse::<Family>().map_err(|e| usage(e.to_string()))?;
            }
        }
        for key in file.params.keys() {
            if key != "proposed" {
                key.parse::<Family>().map_err(|e| usage(format!("[params.{key}]: {e}")))?;
            }
        }
        let mut eval = file.eval.unwrap_or_default();
        eval.cap = args.cap.or(file.cap).or(eval.cap);
        eval.workers = args
            .workers
            .or(file.workers)
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
        if eval.workers == 0 {
            return Err(usage("--workers must be at least 1"));
        }
        Ok(RunConfig {
            dataset: args.dataset.clone().or(file.dataset),
            schema: args.schema.clone().or(file.schema),
            seeds,
            variants,
            families,
            out_given: args.out.is_some() || file.out.is_some(),
            out: args.out.clone().or(file.out).unwrap_or_else(|| PathBuf::from("bsng-out")),
            eval,
            params: file.params,
        })
    }

    /// Seeds for a stochastic command; there is no default.
    pub fn require_seeds(&self, command: &str) -> Result<&[u64], CliError> {
        if self.seeds.is_empty() {
            return Err(usage(format!("`{command}` needs --seed (or `seed` in the config file)")));
        }
        Ok(&self.seeds)
    }

    pub fn single_seed(&self, command: &str) -> Result<u64, CliError> {
        match self.require_seeds(command)? {
            [s] => Ok(*s),
            _ => Err(usage(format!("`{command}` takes exactly one seed"))),
        }
    }

    pub fn single_variant(&self, command: &str) -> Result<Variant, CliError> {
        match self.variants.as_slice() {
            [v] => Ok(*v),
            [] => Err(usage(format!("`{command}` needs --variant"))),
            _ => Err(usage(format!("`{command}` takes exactly one variant"))),
        }
    }

    pub fn schema(&self) -> Result<Schema, CliError> {
        match &self.schema {
            None => Ok(bsng_schema()),
            Some(p) => {
                require_file(p)?;
                Schema::from_path(p).map_err(|e| usage(e.to_string()))
            }
        }
    }

    pub fn dataset_path(&self) -> Result<&Path, CliError> {
        let p = self.dataset.as_deref().ok_or_else(|| usage("--dataset is required"))?;
        require_file(p)?;
        Ok(p)
    }

    pub fn load(&self) -> Result<Dataset, CliError> {
        let schema = self.schema()?;
        let path = self.dataset_path()?;
        load_csv(path, &schema).map_err(CliError::from)
    }

    pub fn overrides(&self, name: &str) -> BTreeMap<String, serde_json::Value> {
        self.params.get(name).cloned().unwrap_or_default()
    }

    /// Default hyperparameters of `name` with the config's overrides applied.
    pub fn method(&self, name: &str) -> Result<Method, CliError> {
        let base = if name == "proposed" {
            Method::Proposed(ProposedConfig::default())
        } else {
            Method::Baseline(ModelSpec::defaults(name.parse::<Family>().map_err(|e| usage(e.to_string()))?))
        };
        base.with_overrides(&self.overrides(name)).map_err(|e| usage(e.to_string()))
    }

    pub fn create_out(&self) -> Result<&Path, CliError> {
        std::fs::create_dir_all(&self.out)
            .map_err(|e| CliError::data(format!("cannot create {}: {e}", self.out.display())))?;
        Ok(&self.out)
    }
}

pub fn require_file(p: &Path) -> Result<(), CliError> {
    if p.is_file() {
        Ok(())
    } else {
        Err(usage(format!("file not found: {}", p.display())))
    }
}
