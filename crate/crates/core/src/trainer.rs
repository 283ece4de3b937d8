//! End-to-end training: alternating encoder/decoder updates over a noisy
//! channel, epoch-end validation, information estimates, trade-off weight
//! adaptation, and best-checkpoint tracking.
//!
//! Each step runs two sub-updates on the same minibatch: encoder first,
//! then decoder, each scored on freshly drawn codes. Both evaluations use
//! the parameters as they stood at step entry, which keeps the decoder's
//! update free of any influence from the trade-off weight: beta reaches
//! the encoder surrogate only, so decoder parameters after any number of
//! steps are bit-identical across beta settings under equal seeds.

use crate::autodiff::Tensor;
use crate::channel::{transmit, ChannelSpec};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::info::{mi_report, MiReport};
use crate::model::{sample_code, Model};
use crate::objective::{total_loss, GradTarget, LossBreakdown, MIN_SAMPLES};
use crate::optim::{Optimizer, OptimizerKind};
use crate::pid::{PidGains, PidState};
use crate::rng::{stream, StreamRole};
use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

/// How the trade-off weight evolves over training.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TrainMode {
    /// Controller-driven beta, updated each epoch from validation MSE.
    Adaptive,
    /// Constant beta for the whole run.
    FixedBeta(f64),
    /// Beta pinned to zero: reconstruction only.
    Reconstruction,
}

/// Full specification of one training run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epsilon: f64,
    pub code_bits: usize,
    pub enc_hidden: Vec<usize>,
    pub dec_hidden: Vec<usize>,
    /// Codes drawn per input per objective evaluation.
    pub samples_per_input: usize,
    pub mode: TrainMode,
    pub beta_min: f64,
    pub gains: PidGains,
    pub epochs: usize,
    pub batch_size: usize,
    pub optimizer: OptimizerKind,
    /// Epochs without validation improvement before stopping.
    pub patience: usize,
    pub seed: u64,
}

impl TrainConfig {
    /// Defaults for everything except the channel and code width.
    pub fn new(epsilon: f64, code_bits: usize) -> Self {
        TrainConfig {
            epsilon,
            code_bits,
            enc_hidden: vec![512],
            dec_hidden: vec![512],
            samples_per_input: 5,
            mode: TrainMode::Adaptive,
            beta_min: 0.01,
            gains: PidGains::default(),
            epochs: 100,
            batch_size: 64,
            optimizer: OptimizerKind::adam(1e-3),
            patience: 50,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        ChannelSpec::new(self.epsilon)?;
        if self.code_bits == 0 {
            return Err(Error::InvalidArgument {
                name: "code_bits",
                detail: "must be at least 1".into(),
            });
        }
        if self.samples_per_input < MIN_SAMPLES {
            return Err(Error::InvalidArgument {
                name: "samples_per_input",
                detail: format!("must be at least {MIN_SAMPLES}"),
            });
        }
        if self.epochs == 0 {
            return Err(Error::InvalidArgument {
                name: "epochs",
                detail: "must be at least 1".into(),
            });
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidArgument {
                name: "batch_size",
                detail: "must be at least 1".into(),
            });
        }
        if self.patience == 0 {
            return Err(Error::InvalidArgument {
                name: "patience",
                detail: "must be at least 1".into(),
            });
        }
        if let TrainMode::FixedBeta(b) = self.mode {
            if !b.is_finite() || b < 0.0 {
                return Err(Error::InvalidArgument {
                    name: "beta",
                    detail: format!("must be finite and non-negative, got {b}"),
                });
            }
        }
        PidState::new(self.beta_min, self.gains)?;
        Ok(())
    }
}

/// One epoch of logged quantities. `seconds` is wall-clock and is never
/// serialized; everything else is deterministic per (config, seed).
#[derive(Debug, Clone, Copy)]
pub struct EpochRecord {
    /// 1-based epoch index.
    pub epoch: usize,
    pub l_rec: f64,
    pub l_com: f64,
    /// Trade-off weight in force while this epoch trained.
    pub beta: f64,
    pub beta_max: f64,
    pub i_xy: f64,
    pub i_xyhat: f64,
    pub valid_mse: f64,
    pub seconds: f64,
}

/// Result of a full training run.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub final_model: Model,
    pub best_model: Model,
    /// 1-based epoch of the best validation MSE.
    pub best_epoch: usize,
    pub best_valid_mse: f64,
    pub history: Vec<EpochRecord>,
    pub stopped_early: bool,
}

/// One optimization step on a minibatch: evaluate both halves at the
/// entry parameters with independent fresh samples, then apply the encoder
/// update followed by the decoder update. Returns the encoder-phase loss
/// breakdown.
#[allow(clippy::too_many_arguments)]
pub fn train_step(
    model: &mut Model,
    x: &Tensor,
    spec: &ChannelSpec,
    beta: f64,
    k: usize,
    enc_opt: &mut Optimizer,
    dec_opt: &mut Optimizer,
    code_rng: &mut ChaCha8Rng,
    noise_rng: &mut ChaCha8Rng,
) -> Result<LossBreakdown> {
    let enc_eval = total_loss(
        x,
        model,
        spec,
        beta,
        k,
        code_rng,
        noise_rng,
        GradTarget::Encoder,
    )?;
    let dec_eval = total_loss(
        x,
        model,
        spec,
        beta,
        k,
        code_rng,
        noise_rng,
        GradTarget::Decoder,
    )?;
    let enc_grads = enc_eval.encoder_grads.expect("encoder gradients requested");
    let grad_refs: Vec<&Tensor> = enc_grads.iter().collect();
    enc_opt.step(&mut model.encoder.params_mut(), &grad_refs)?;
    let dec_grads = dec_eval.decoder_grads.expect("decoder gradients requested");
    let grad_refs: Vec<&Tensor> = dec_grads.iter().collect();
    dec_opt.step(&mut model.decoder.params_mut(), &grad_refs)?;
    Ok(enc_eval.breakdown)
}

/// Mean per-image sum of squared pixel error after one stochastic pass
/// through encoder, channel, and decoder.
pub fn validation_mse(
    model: &Model,
    data: &Dataset,
    spec: &ChannelSpec,
    rng: &mut ChaCha8Rng,
) -> Result<f64> {
    let f = model.encode(&data.x)?;
    let y = sample_code(&f, rng)?;
    let yhat = transmit(&y, spec, rng)?;
    let xhat = model.decode(&yhat)?;
    let n = data.len();
    let mut total = 0.0;
    for i in 0..n {
        let mut err = 0.0;
        for (a, b) in data.x.row(i).iter().zip(xhat.row(i)) {
            let d = a - b;
            err += d * d;
        }
        total += err;
    }
    Ok(total / n as f64)
}

/// Mean per-image MSE over `n_draws` independent stochastic passes.
pub fn evaluate(
    model: &Model,
    data: &Dataset,
    spec: &ChannelSpec,
    n_draws: usize,
    rng: &mut ChaCha8Rng,
) -> Result<f64> {
    if n_draws == 0 {
        return Err(Error::InvalidArgument {
            name: "n_draws",
            detail: "must be at least 1".into(),
        });
    }
    if data.is_empty() {
        return Err(Error::InvalidArgument {
            name: "evaluation dataset",
            detail: "no examples".into(),
        });
    }
    let mut total = 0.0;
    for _ in 0..n_draws {
        total += validation_mse(model, data, spec, rng)?;
    }
    Ok(total / n_draws as f64)
}

fn beta_for_epoch(mode: TrainMode, pid: &PidState) -> f64 {
    match mode {
        TrainMode::Adaptive => pid.beta,
        TrainMode::FixedBeta(b) => b,
        TrainMode::Reconstruction => 0.0,
    }
}

/// Trains a fresh model on `train`, validating on `valid` each epoch.
///
/// Per epoch: shuffle, step over minibatches, compute validation MSE with a
/// single stochastic draw, estimate the information quantities on the
/// validation codes, log the record, then advance beta for the next epoch
/// (adaptive mode only). Training stops at `epochs` or after `patience`
/// epochs without a new best validation MSE.
pub fn fit(cfg: &TrainConfig, train: &Dataset, valid: &Dataset) -> Result<TrainOutcome> {
    cfg.validate()?;
    if train.is_empty() {
        return Err(Error::InvalidArgument {
            name: "dataset",
            detail: "training split is empty".into(),
        });
    }
    let mut param_rng = stream(cfg.seed, StreamRole::ParamInit);
    let model = Model::init(
        train.dim(),
        &cfg.enc_hidden,
        cfg.code_bits,
        &cfg.dec_hidden,
        &mut param_rng,
    )?;
    fit_from(cfg, model, train, valid)
}

/// Like [`fit`] but continues from an existing model (a warm start from a
/// checkpoint, for instance). The parameter-init random stream is untouched;
/// optimizer and controller state start fresh.
pub fn fit_from(
    cfg: &TrainConfig,
    mut model: Model,
    train: &Dataset,
    valid: &Dataset,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    if train.is_empty() || valid.is_empty() {
        return Err(Error::InvalidArgument {
            name: "dataset",
            detail: "training and validation splits must both be non-empty".into(),
        });
    }
    if train.dim() != valid.dim() {
        return Err(Error::InvalidArgument {
            name: "dataset",
            detail: format!(
                "train has {} pixels per image, valid has {}",
                train.dim(),
                valid.dim()
            ),
        });
    }
    let spec = ChannelSpec::new(cfg.epsilon)?;
    let mut code_rng = stream(cfg.seed, StreamRole::CodeSampling);
    let mut noise_rng = stream(cfg.seed, StreamRole::ChannelNoise);
    let mut shuffle_rng = stream(cfg.seed, StreamRole::DataShuffle);
    let mut valid_rng = stream(cfg.seed, StreamRole::Validation);

    let enc_shapes: Vec<(usize, usize)> = model
        .encoder
        .params()
        .iter()
        .map(|p| (p.rows, p.cols))
        .collect();
    let dec_shapes: Vec<(usize, usize)> = model
        .decoder
        .params()
        .iter()
        .map(|p| (p.rows, p.cols))
        .collect();
    let mut enc_opt = Optimizer::new(cfg.optimizer, &enc_shapes)?;
    let mut dec_opt = Optimizer::new(cfg.optimizer, &dec_shapes)?;
    let mut pid = PidState::new(cfg.beta_min, cfg.gains)?;

    let mut history = Vec::with_capacity(cfg.epochs);
    let mut best_model = model.clone();
    let mut best_valid_mse = f64::INFINITY;
    let mut best_epoch = 0;
    let mut since_best = 0;
    let mut stopped_early = false;
    let mut indices: Vec<usize> = (0..train.len()).collect();

    for epoch in 1..=cfg.epochs {
        let started = Instant::now();
        let beta = beta_for_epoch(cfg.mode, &pid);
        indices.shuffle(&mut shuffle_rng);
        let mut rec_sum = 0.0;
        let mut com_sum = 0.0;
        for batch in indices.chunks(cfg.batch_size) {
            let x = train.gather(batch)?;
            let breakdown = train_step(
                &mut model,
                &x,
                &spec,
                beta,
                cfg.samples_per_input,
                &mut enc_opt,
                &mut dec_opt,
                &mut code_rng,
                &mut noise_rng,
            )
            .map_err(|e| Error::Diverged {
                epoch,
                detail: format!("{e}"),
            })?;
            rec_sum += breakdown.l_rec * batch.len() as f64;
            com_sum += breakdown.l_com * batch.len() as f64;
        }
        let l_rec = rec_sum / train.len() as f64;
        let l_com = com_sum / train.len() as f64;

        let mse = validation_mse(&model, valid, &spec, &mut valid_rng)?;
        if !mse.is_finite() {
            return Err(Error::Diverged {
                epoch,
                detail: format!("validation MSE is {mse}"),
            });
        }
        let f_valid = model.encode(&valid.x)?;
        let MiReport {
            i_xy,
            i_xyhat,
            beta_max,
        } = mi_report(&f_valid, &spec);

        history.push(EpochRecord {
            epoch,
            l_rec,
            l_com,
            beta,
            beta_max,
            i_xy,
            i_xyhat,
            valid_mse: mse,
            seconds: started.elapsed().as_secs_f64(),
        });

        if mse < best_valid_mse {
            best_valid_mse = mse;
            best_model = model.clone();
            best_epoch = epoch;
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= cfg.patience {
                stopped_early = true;
                break;
            }
        }

        if cfg.mode == TrainMode::Adaptive {
            pid = pid.update(mse, beta_max)?;
        }
    }

    Ok(TrainOutcome {
        final_model: model,
        best_model,
        best_epoch,
        best_valid_mse,
        history,
        stopped_early,
    })
}
