//! Minibatch training with early stopping on validation loss.

use std::io::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand_chacha::ChaCha12Rng;
use thiserror::Error;

use cdrkit_core::config::{ClipMode, ModelConfig};

use crate::adam::{clip_grads, Adam};
use crate::dataset::{make_batch, ModelKind, SeqDataset};
use crate::lstm::{accumulate_scores, backward, forward, LstmParams};

#[derive(Debug, Clone)]
pub struct TrainCfg {
    pub hidden: usize,
    pub layers: usize,
    pub batch: usize,
    pub lr: f64,
    pub dropout: f64,
    pub clip: f64,
    pub clip_mode: ClipMode,
    pub epochs: usize,
    /// Stop after this many epochs without a validation improvement;
    /// zero disables early stopping.
    pub patience: usize,
}

pub fn cfg_for(kind: ModelKind, mc: &ModelConfig) -> TrainCfg {
    let hidden = match kind {
        ModelKind::EventType => mc.hidden_evt,
        ModelKind::IetBin => mc.hidden_iet,
        ModelKind::Correspondent => mc.hidden_corr,
    };
    TrainCfg {
        hidden,
        layers: mc.layers,
        batch: mc.batch,
        lr: mc.lr,
        dropout: mc.dropout,
        clip: mc.clip,
        clip_mode: mc.clip_mode,
        epochs: mc.epochs,
        patience: mc.patience,
    }
}

#[derive(Debug, Clone, Copy)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub train_loss: f64,
    pub valid_loss: f64,
    /// Accuracy for classifying models, mean absolute error otherwise; NaN
    /// when there is no validation data.
    pub valid_score: f64,
}

pub struct TrainResult {
    pub params: LstmParams,
    pub metrics: Vec<EpochMetrics>,
    pub best_epoch: usize,
}

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("training set is empty")]
    EmptyDataset,
    #[error("loss became non-finite at epoch {epoch}")]
    Diverged { epoch: usize },
}

/// Mean loss and mean score of `params` over a dataset, batched in order.
pub fn eval_dataset(params: &LstmParams, ds: &SeqDataset, batch_size: usize, rng: &mut ChaCha12Rng) -> (f64, f64, usize) {
    let mut loss_sum = 0.0;
    let mut score_sum = 0.0;
    let mut n = 0usize;
    let refs: Vec<&crate::dataset::SeqExample> = ds.examples.iter().collect();
    for chunk in refs.chunks(batch_size.max(1)) {
        let batch = make_batch(ds.input_dim, chunk);
        if batch.n_valid == 0 {
            continue;
        }
        let cache = match forward(params, &batch, false, rng) {
            Ok(c) => c,
            Err(_) => return (f64::NAN, f64::NAN, 0),
        };
        let (l, s, k) = accumulate_scores(params, &batch, &cache);
        loss_sum += l;
        score_sum += s;
        n += k;
    }
    if n == 0 {
        (f64::NAN, f64::NAN, 0)
    } else {
        (loss_sum / n as f64, score_sum / n as f64, n)
    }
}

pub fn train(
    train_ds: &SeqDataset,
    valid_ds: &SeqDataset,
    cfg: &TrainCfg,
    rng: &mut ChaCha12Rng,
) -> Result<TrainResult, TrainError> {
    if train_ds.is_empty() {
        return Err(TrainError::EmptyDataset);
    }
    let mut params = LstmParams::init(
        train_ds.input_dim,
        cfg.hidden,
        cfg.layers,
        train_ds.output_dim,
        train_ds.loss,
        cfg.dropout,
        rng,
    );
    let mut adam = Adam::new(params.n_params(), cfg.lr);
    let mut order: Vec<usize> = (0..train_ds.len()).collect();
    let mut metrics = Vec::with_capacity(cfg.epochs);
    let mut best: Option<(f64, LstmParams, usize)> = None;
    let mut since_best = 0usize;

    for epoch in 1..=cfg.epochs {
        order.shuffle(rng);
        let mut loss_sum = 0.0;
        let mut n_seen = 0usize;
        for chunk in order.chunks(cfg.batch.max(1)) {
            let refs: Vec<&crate::dataset::SeqExample> =
                chunk.iter().map(|&i| &train_ds.examples[i]).collect();
            let batch = make_batch(train_ds.input_dim, &refs);
            if batch.n_valid == 0 {
                continue;
            }
            let cache =
                forward(&params, &batch, true, rng).map_err(|_| TrainError::Diverged { epoch })?;
            let (l, _, k) = accumulate_scores(&params, &batch, &cache);
            loss_sum += l;
            n_seen += k;
            let mut grads = backward(&params, &batch, &cache);
            clip_grads(&mut grads, cfg.clip_mode, cfg.clip);
            adam.step(&mut params, &grads);
        }
        let train_loss = loss_sum / n_seen.max(1) as f64;
        if !train_loss.is_finite() {
            return Err(TrainError::Diverged { epoch });
        }
        let (valid_loss, valid_score) = if valid_ds.is_empty() {
            (train_loss, f64::NAN)
        } else {
            let (l, s, n) = eval_dataset(&params, valid_ds, cfg.batch, rng);
            if n == 0 { (train_loss, f64::NAN) } else { (l, s) }
        };
        if !valid_loss.is_finite() {
            return Err(TrainError::Diverged { epoch });
        }
        metrics.push(EpochMetrics { epoch, train_loss, valid_loss, valid_score });

        let improved = best.as_ref().map_or(true, |(b, _, _)| valid_loss < *b);
        if improved {
            best = Some((valid_loss, params.clone(), epoch));
            since_best = 0;
        } else {
            since_best += 1;
            if cfg.patience > 0 && since_best >= cfg.patience {
                break;
            }
        }
    }

    let (_, best_params, best_epoch) = best.expect("at least one epoch ran");
    Ok(TrainResult { params: best_params, metrics, best_epoch })
}

pub fn write_metrics(path: &Path, metrics: &[EpochMetrics]) -> std::io::Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "epoch,train_loss,valid_loss,valid_score")?;
    for m in metrics {
        let score = if m.valid_score.is_finite() { format!("{:.6}", m.valid_score) } else { "nan".to_string() };
        writeln!(f, "{},{:.6},{:.6},{}", m.epoch, m.train_loss, m.valid_loss, score)?;
    }
    f.flush()
}
