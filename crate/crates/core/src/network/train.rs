use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Dataset, Split};
use crate::linalg::{DenseMatrix, SparseMatrix};
use crate::propagation::{ProjectiveSet, PropagationOperator, RegularizerSpec};
use crate::random::seeded;
use crate::scalar::Scalar;

use super::forward::{forward, loss_and_grads, Dropout, ForwardTrace, InputMatrix};
use super::model::{AdamConfig, ModelParams};
use super::projection::log_softmax_row;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub lr: f64,
    pub weight_decay: f64,
    pub hidden_units: usize,
    /// Number of weight layers; 2 gives input → hidden → classes.
    pub n_layers: usize,
    pub max_epochs: usize,
    /// Epochs without validation improvement before stopping.
    pub patience: usize,
    pub seed: u64,
    /// Dropout rate on hidden-layer inputs; 0 disables it.
    pub dropout: f64,
    pub adam: AdamConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lr: 1e-2,
            weight_decay: 5e-4,
            hidden_units: 32,
            n_layers: 2,
            max_epochs: 500,
            patience: 100,
            seed: 0,
            dropout: 0.0,
            adam: AdamConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            problems.push(format!("lr must be positive, got {}", self.lr));
        }
        if !(self.weight_decay >= 0.0) {
            problems.push(format!("weight_decay must be nonnegative, got {}", self.weight_decay));
        }
        if self.hidden_units == 0 {
            problems.push("hidden_units must be at least 1".into());
        }
        if self.n_layers == 0 {
            problems.push("n_layers must be at least 1".into());
        }
        if !(0.0..1.0).contains(&self.dropout) {
            problems.push(format!("dropout must lie in [0, 1), got {}", self.dropout));
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidInput(problems.join("; ")))
        }
    }

    /// `[d_0, hidden, …, hidden, n_classes]`.
    pub fn dims(&self, n_features: usize, n_classes: usize) -> Vec<usize> {
        let mut d = vec![n_features];
        d.extend(std::iter::repeat_n(self.hidden_units, self.n_layers - 1));
        d.push(n_classes);
        d
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Training objective before this epoch's update.
    pub loss: f64,
    pub train_accuracy: f64,
    pub val_accuracy: f64,
    pub val_loss: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome<T: Scalar> {
    /// Weights from the epoch with the best validation accuracy.
    pub params: ModelParams<T>,
    pub best_epoch: usize,
    pub history: Vec<EpochRecord>,
    /// Optimizer steps taken.
    pub updates: u64,
}

/// Accuracy and macro-averaged F1 on an index set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub macro_f1: f64,
}

/// Scores predictions on `idx`. Macro-F1 averages over all `n_classes`; a
/// class that is neither predicted nor present counts as F1 = 0.
pub fn classification_metrics(predictions: &[usize], labels: &[usize], idx: &[usize], n_classes: usize) -> Result<Metrics> {
    if idx.is_empty() {
        return Err(Error::EmptyIndexSet("evaluation"));
    }
    let mut tp = vec![0usize; n_classes];
    let mut fp = vec![0usize; n_classes];
    let mut fn_ = vec![0usize; n_classes];
    let mut correct = 0;
    for &i in idx {
        let (p, y) = (predictions[i], labels[i]);
        if p == y {
            correct += 1;
            tp[y] += 1;
        } else {
            fp[p] += 1;
            fn_[y] += 1;
        }
    }
    let f1_sum: f64 = (0..n_classes)
        .map(|c| {
            let denom = 2 * tp[c] + fp[c] + fn_[c];
            if denom == 0 {
                0.0
            } else {
                2.0 * tp[c] as f64 / denom as f64
            }
        })
        .sum();
    Ok(Metrics {
        accuracy: correct as f64 / idx.len() as f64,
        macro_f1: f1_sum / n_classes as f64,
    })
}

fn mean_cross_entropy<T: Scalar>(trace: &ForwardTrace<T>, labels: &[usize], idx: &[usize]) -> f64 {
    if idx.is_empty() {
        return f64::NAN;
    }
    let logits = trace.logits();
    let total: f64 = idx.iter().map(|&i| -log_softmax_row(logits.row(i))[labels[i]].as_f64()).sum();
    total / idx.len() as f64
}

/// Projective sets of a `n_layers`-deep network built on `prop`.
pub fn projective_sets<T: Scalar>(prop: &PropagationOperator<T>, n_layers: usize) -> Vec<ProjectiveSet> {
    RegularizerSpec::new(prop.variant()).projective_sets(n_layers)
}

/// Predictions and metrics of `params` on `idx`.
pub fn evaluate<T: Scalar>(
    params: &ModelParams<T>,
    prop: &PropagationOperator<T>,
    ds: &Dataset<T>,
    idx: &[usize],
) -> Result<Metrics> {
    let x = SparseMatrix::from_dense(&ds.features);
    let sets = projective_sets(prop, params.n_layers());
    let trace = forward(params, prop, &x, &sets, None)?;
    classification_metrics(&trace.predictions(), &ds.labels, idx, ds.n_classes())
}

/// Adam training with early stopping on validation accuracy.
///
/// Each epoch evaluates the current weights, keeps them if validation accuracy
/// improved (ties broken by validation loss), then takes one gradient step.
/// Deterministic in `cfg.seed`.
pub fn train<T: Scalar>(ds: &Dataset<T>, prop: &PropagationOperator<T>, cfg: &TrainConfig) -> Result<TrainOutcome<T>> {
    let x = SparseMatrix::from_dense(&ds.features);
    train_on(&x, &ds.labels, &ds.split, ds.n_classes(), prop, cfg)
}

pub fn train_on<T: Scalar, X: InputMatrix<T> + ?Sized>(
    x: &X,
    labels: &[usize],
    split: &Split,
    n_classes: usize,
    prop: &PropagationOperator<T>,
    cfg: &TrainConfig,
) -> Result<TrainOutcome<T>> {
    cfg.validate()?;
    if split.train.is_empty() {
        return Err(Error::EmptyIndexSet("training"));
    }
    let sets = projective_sets(prop, cfg.n_layers);
    let mut params = ModelParams::glorot(&cfg.dims(x.n_cols(), n_classes), cfg.seed)?;
    let mut rng = seeded(cfg.seed.wrapping_add(1));
    let val_idx: &[usize] = if split.val.is_empty() { &split.train } else { &split.val };

    let mut best: Option<(f64, f64, usize, ModelParams<T>)> = None;
    let mut history = Vec::new();
    let mut since_best = 0;
    let wrap = |epoch: usize| move |e: Error| Error::Training { epoch, source: Box::new(e) };

    for epoch in 1..=cfg.max_epochs {
        let eval = forward(&params, prop, x, &sets, None).map_err(wrap(epoch))?;
        let preds = eval.predictions();
        let val = classification_metrics(&preds, labels, val_idx, n_classes)?;
        let train_m = classification_metrics(&preds, labels, &split.train, n_classes)?;
        let val_loss = mean_cross_entropy(&eval, labels, val_idx);

        let improved = match &best {
            None => true,
            Some((acc, loss, _, _)) => val.accuracy > *acc || (val.accuracy == *acc && val_loss < *loss),
        };
        if improved {
            best = Some((val.accuracy, val_loss, epoch, params.clone()));
            since_best = 0;
        } else {
            since_best += 1;
        }

        let trace = if cfg.dropout > 0.0 {
            let d = Dropout {
                rate: cfg.dropout,
                rng: &mut rng,
            };
            forward(&params, prop, x, &sets, Some(d)).map_err(wrap(epoch))?
        } else {
            eval
        };
        let (loss, grads) =
            loss_and_grads(&trace, &params, prop, x, labels, &split.train, cfg.weight_decay).map_err(wrap(epoch))?;
        history.push(EpochRecord {
            epoch,
            loss: loss.as_f64(),
            train_accuracy: train_m.accuracy,
            val_accuracy: val.accuracy,
            val_loss,
        });
        params.adam_step(&grads, cfg.lr, &cfg.adam).map_err(wrap(epoch))?;
        if since_best > cfg.patience {
            log::debug!("early stop at epoch {epoch}");
            break;
        }
    }
    let updates = params.adam.step;
    let (_, _, best_epoch, params) = best.unwrap_or((0.0, 0.0, 0, params));
    Ok(TrainOutcome {
        params,
        best_epoch,
        history,
        updates,
    })
}

/// Class-probability rows of the final layer, for quick inspection.
pub fn predict_proba<T: Scalar>(
    params: &ModelParams<T>,
    prop: &PropagationOperator<T>,
    x: &DenseMatrix<T>,
) -> Result<DenseMatrix<T>> {
    let sets = projective_sets(prop, params.n_layers());
    Ok(forward(params, prop, x, &sets, None)?.output().clone())
}
