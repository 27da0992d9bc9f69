use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use reglgcn::lowrank::EigOptions;
use reglgcn::network::TrainConfig;
use reglgcn::propagation::{RegularizerSpec, Variant, DEFAULT_K_ORDER};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

/// Environment variable naming the dataset root when a path is not found
/// relative to the configuration file.
pub const DATA_DIR_ENV: &str = "REGLGCN_DATA_DIR";

/// A rank given as an absolute count or as `d/<m>` / `d/2^<k>` of the feature
/// dimension `d`, rounded down.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RankExpr {
    Absolute(usize),
    FeatureFraction(usize),
}

impl RankExpr {
    pub fn resolve(self, n_features: usize) -> usize {
        match self {
            RankExpr::Absolute(r) => r,
            RankExpr::FeatureFraction(m) => n_features / m,
        }
    }
}

impl fmt::Display for RankExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RankExpr::Absolute(r) => write!(f, "{r}"),
            RankExpr::FeatureFraction(m) => write!(f, "d/{m}"),
        }
    }
}

impl FromStr for RankExpr {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let s = s.trim();
        let bad = || format!("rank `{s}` is neither a count nor of the form d/<m> or d/2^<k>");
        if let Ok(r) = s.parse::<usize>() {
            return Ok(RankExpr::Absolute(r));
        }
        let divisor = s.strip_prefix("d/").ok_or_else(bad)?.trim();
        let m = match divisor.strip_prefix("2^") {
            Some(k) => {
                let k: u32 = k.trim().parse().map_err(|_| bad())?;
                2usize.checked_pow(k).ok_or_else(bad)?
            }
            None => divisor.parse().map_err(|_| bad())?,
        };
        if m == 0 {
            return Err(format!("rank `{s}` divides by zero"));
        }
        Ok(RankExpr::FeatureFraction(m))
    }
}

impl Serialize for RankExpr {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            RankExpr::Absolute(r) => s.serialize_u64(*r as u64),
            RankExpr::FeatureFraction(_) => s.serialize_str(&self.to_string()),
        }
    }
}

impl<'de> Deserialize<'de> for RankExpr {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Int(u64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Int(r) => Ok(RankExpr::Absolute(r as usize)),
            Raw::Text(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// Parses a variant name; `tsgcn(inv)` and `tsgcn-inv` select the dense-inverse
/// tsGCN ablation.
pub fn parse_variant(s: &str) -> Result<(Variant, bool)> {
    let norm: String = s.chars().filter(char::is_ascii_alphanumeric).collect::<String>().to_ascii_lowercase();
    if norm == "tsgcninv" {
        return Ok((Variant::Tsgcn, true));
    }
    Ok((s.parse::<Variant>()?, false))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    pub name: String,
    /// Defaults to `<name>/<name>.content.gz` (or without `.gz`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub content: Option<PathBuf>,
    /// Defaults to `<name>/<name>.cites.gz` (or without `.gz`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edges: Option<PathBuf>,
    /// Directory that relative dataset paths are resolved against.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub root: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitConfig {
    pub per_class: usize,
    pub n_val: usize,
    pub n_test: usize,
    pub seed: u64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self {
            per_class: 20,
            n_val: 500,
            n_test: 1000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SemanticConfig {
    pub k: usize,
}

impl Default for SemanticConfig {
    fn default() -> Self {
        Self {
            k: reglgcn::graph::DEFAULT_K_SEM,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureConfig {
    pub row_normalize: bool,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self { row_normalize: true }
    }
}

/// Variant choice and the hyperparameters of the non-tsGCN variants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub variant: String,
    /// Falls back to the variant's default when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    pub k_order: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            variant: "tsgcn".into(),
            alpha: None,
            beta: None,
            k_order: DEFAULT_K_ORDER,
        }
    }
}

/// Hyperparameters of tsGCN and its ablations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TsgcnConfig {
    pub alpha: f64,
    pub beta: f64,
    pub rank: RankExpr,
    pub exact_inverse: bool,
}

impl Default for TsgcnConfig {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            beta: 0.2,
            rank: RankExpr::FeatureFraction(16),
            exact_inverse: false,
        }
    }
}

/// Axes of a grid search; an empty axis uses the single configured value.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub rank: Vec<RankExpr>,
}

/// One experiment: dataset, regularizer, training protocol and seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default = "default_seeds")]
    pub repeat_seeds: Vec<u64>,
    #[serde(default)]
    pub save_checkpoints: bool,
    pub dataset: DatasetConfig,
    #[serde(default)]
    pub split: SplitConfig,
    #[serde(default)]
    pub semantic: SemanticConfig,
    #[serde(default)]
    pub features: FeatureConfig,
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub tsgcn: TsgcnConfig,
    #[serde(default)]
    pub eig: EigOptions,
    /// `train.seed` is replaced by each entry of `repeat_seeds`.
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub grid: GridConfig,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("runs")
}

fn default_seeds() -> Vec<u64> {
    (0..10).collect()
}

/// Command-line overrides applied on top of a configuration file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub variant: Option<String>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub rank: Option<RankExpr>,
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> std::result::Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("configuration serializes")
    }

    /// Reads, overrides, resolves paths against the file's directory and
    /// validates.
    pub fn load(path: &Path, overrides: &Overrides) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(CliError::io(path))?;
        let mut cfg = Self::from_toml(&text).map_err(|message| CliError::Format {
            path: path.to_path_buf(),
            message,
        })?;
        cfg.apply(overrides);
        let base = path.parent().unwrap_or(Path::new("."));
        let problems = cfg.resolve_paths(base);
        cfg.validate_with(problems)?;
        Ok(cfg)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(v) = &o.variant {
            self.model.variant = v.clone();
        }
        let tsgcn = parse_variant(&self.model.variant).map(|(v, _)| v.is_tsgcn()).unwrap_or(false);
        if let Some(a) = o.alpha {
            if tsgcn {
                self.tsgcn.alpha = a;
            } else {
                self.model.alpha = Some(a);
            }
        }
        if let Some(b) = o.beta {
            if tsgcn {
                self.tsgcn.beta = b;
            } else {
                self.model.beta = Some(b);
            }
        }
        if let Some(r) = o.rank {
            self.tsgcn.rank = r;
        }
        if let Some(s) = o.seed {
            self.repeat_seeds = vec![s];
        }
        if let Some(dir) = &o.output_dir {
            self.output_dir = dir.clone();
        }
    }

    /// Makes the dataset paths and the output directory absolute. Dataset
    /// files are looked up under `dataset.root` (or `base`), then under
    /// `$REGLGCN_DATA_DIR`. Returns a problem per file that was not found.
    pub fn resolve_paths(&mut self, base: &Path) -> Vec<String> {
        let root = match &self.dataset.root {
            Some(r) if r.is_absolute() => r.clone(),
            Some(r) => base.join(r),
            None => base.to_path_buf(),
        };
        let env_root = std::env::var_os(DATA_DIR_ENV).map(PathBuf::from);
        let name = self.dataset.name.clone();
        let mut problems = Vec::new();
        let mut locate = |given: &Option<PathBuf>, stem: &str| -> Option<PathBuf> {
            let candidates: Vec<PathBuf> = match given {
                Some(p) => vec![p.clone()],
                None => vec![
                    PathBuf::from(&name).join(format!("{name}.{stem}.gz")),
                    PathBuf::from(&name).join(format!("{name}.{stem}")),
                ],
            };
            for c in &candidates {
                if c.is_absolute() {
                    if c.exists() {
                        return Some(c.clone());
                    }
                    continue;
                }
                for dir in std::iter::once(&root).chain(env_root.as_ref()) {
                    let p = dir.join(c);
                    if p.exists() {
                        return Some(p);
                    }
                }
            }
            problems.push(format!(
                "dataset {stem} file {} not found under {}{}",
                candidates[0].display(),
                root.display(),
                env_root.as_ref().map(|e| format!(" or ${DATA_DIR_ENV}={}", e.display())).unwrap_or_default()
            ));
            None
        };
        let content = locate(&self.dataset.content, "content");
        let edges = locate(&self.dataset.edges, "cites");
        if let Some(c) = content {
            self.dataset.content = Some(absolute(c));
        }
        if let Some(e) = edges {
            self.dataset.edges = Some(absolute(e));
        }
        self.dataset.root = None;
        if self.output_dir.is_relative() {
            self.output_dir = absolute(base.join(&self.output_dir));
        }
        problems
    }

    /// Checks everything that can be checked before the dataset is loaded and
    /// reports all problems together.
    pub fn validate_with(&self, mut problems: Vec<String>) -> Result<()> {
        match parse_variant(&self.model.variant) {
            Ok((variant, _)) => {
                if variant.is_tsgcn() && (self.model.alpha.is_some() || self.model.beta.is_some()) {
                    problems.push(format!(
                        "model.alpha/model.beta do not apply to {variant}; set tsgcn.alpha/tsgcn.beta"
                    ));
                }
                if let Err(e) = self.spec_for(variant, false, 1 << 20).validate() {
                    problems.push(e.to_string());
                }
            }
            Err(e) => problems.push(e.to_string()),
        }
        for (name, v) in [("tsgcn.alpha", self.tsgcn.alpha), ("tsgcn.beta", self.tsgcn.beta)] {
            if !(v >= 0.0 && v.is_finite()) {
                problems.push(format!("{name} must be a nonnegative number, got {v}"));
            }
        }
        if let RankExpr::Absolute(0) = self.tsgcn.rank {
            problems.push("tsgcn.rank must be at least 1".into());
        }
        if self.repeat_seeds.is_empty() {
            problems.push("repeat_seeds must not be empty".into());
        }
        if self.semantic.k == 0 {
            problems.push("semantic.k must be at least 1".into());
        }
        if !(self.eig.tol > 0.0) {
            problems.push(format!("eig.tol must be positive, got {}", self.eig.tol));
        }
        if self.eig.max_iter == 0 {
            problems.push("eig.max_iter must be at least 1".into());
        }
        if self.split.n_test == 0 {
            problems.push("split.n_test must be at least 1".into());
        }
        if self.split.per_class == 0 {
            problems.push("split.per_class must be at least 1".into());
        }
        if let Err(reglgcn::Error::InvalidInput(msg)) = self.train.validate() {
            problems.extend(msg.split("; ").map(|m| format!("train: {m}")));
        }
        for a in self.grid.alpha.iter().chain(&self.grid.beta) {
            if !(*a >= 0.0 && a.is_finite()) {
                problems.push(format!("grid values must be nonnegative numbers, got {a}"));
            }
        }
        if self.grid.rank.contains(&RankExpr::Absolute(0)) {
            problems.push("grid.rank entries must be at least 1".into());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(CliError::Config(problems))
        }
    }

    pub fn variant(&self) -> Result<(Variant, bool)> {
        parse_variant(&self.model.variant)
    }

    /// The regularizer for `variant` under this configuration, with the rank
    /// resolved against `n_features`.
    pub fn spec_for(&self, variant: Variant, exact_inverse: bool, n_features: usize) -> RegularizerSpec {
        let spec = RegularizerSpec::new(variant).with_k_order(self.model.k_order);
        if variant.is_tsgcn() {
            spec.with_alpha(self.tsgcn.alpha)
                .with_beta(self.tsgcn.beta)
                .with_rank(self.tsgcn.rank.resolve(n_features))
                .with_exact_inverse(exact_inverse || self.tsgcn.exact_inverse)
        } else {
            let spec = match self.model.alpha {
                Some(a) => spec.with_alpha(a),
                None => spec,
            };
            match self.model.beta {
                Some(b) => spec.with_beta(b),
                None => spec,
            }
        }
    }

    /// Rank check that needs the feature dimension.
    pub fn check_rank(&self, rank: RankExpr, n_features: usize, n_nodes: usize) -> Result<usize> {
        let r = rank.resolve(n_features);
        if r == 0 || r > n_nodes {
            return Err(CliError::Config(vec![format!(
                "rank {rank} resolves to {r} for d = {n_features}; it must lie in 1..={n_nodes}"
            )]));
        }
        Ok(r)
    }
}

fn absolute(p: PathBuf) -> PathBuf {
    std::path::absolute(&p).unwrap_or(p)
}
