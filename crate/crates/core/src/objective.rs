//! Training objective: multi-sample reconstruction bound, pairwise
//! compression penalty, and the combined surrogate whose gradients drive
//! both halves of the model.
//!
//! The reconstruction term scores K independent noisy codes per input and
//! aggregates their decoder likelihoods through a log-mean-exp, which
//! tightens monotonically in K. Decoder gradients flow through that value
//! directly. Encoder gradients cannot (sampling is discrete), so the encoder
//! side uses a score-function surrogate: each sample's log-probability under
//! the composite code distribution is weighted by a leave-one-out learning
//! signal treated as a constant. The compression term is a pairwise
//! upper-bound estimate computed on clean codes and enters the encoder
//! surrogate scaled by -beta; the decoder never sees it.

use crate::autodiff::{log_sum_exp, Graph, NodeId, Tensor};
use crate::channel::{composite_params_graph, transmit, ChannelSpec};
use crate::error::{Error, Result};
use crate::model::{
    bernoulli_log_prob_graph, gaussian_log_density, gaussian_log_density_graph, sample_code, Model,
};
use rand_chacha::ChaCha8Rng;

/// Smallest number of samples for which the leave-one-out signals exist.
pub const MIN_SAMPLES: usize = 2;

/// Per-example multi-sample bound values and the per-sample learning
/// signals derived from them.
#[derive(Debug, Clone)]
pub struct MultiSample {
    /// One bound value per example: log-mean-exp of its K log-likelihoods.
    pub per_example: Vec<f64>,
    /// Mean of `per_example`.
    pub value: f64,
    /// N x K matrix of leave-one-out signals.
    pub signals: Tensor,
}

/// Computes the multi-sample bound and its learning signals from an N x K
/// matrix of per-sample decoder log-likelihoods.
///
/// Row signal k is the bound minus the bound recomputed with entry k
/// replaced by the arithmetic mean of the other K-1 entries, so a sample
/// scoring above its peers gets a positive signal. A sample's own baseline
/// never depends on that sample, which keeps the surrogate's expected
/// gradient equal to the true gradient of the expected bound.
pub fn multisample_bound(ell: &Tensor) -> Result<MultiSample> {
    let n = ell.rows;
    let k = ell.cols;
    if k < MIN_SAMPLES {
        return Err(Error::InvalidArgument {
            name: "sample count",
            detail: format!("need at least {MIN_SAMPLES} samples per example, got {k}"),
        });
    }
    if n == 0 {
        return Err(Error::InvalidArgument {
            name: "log-likelihood matrix",
            detail: "no rows".into(),
        });
    }
    let ln_k = (k as f64).ln();
    let mut per_example = Vec::with_capacity(n);
    let mut signals = Tensor::zeros(n, k);
    let mut modified = vec![0.0; k];
    for i in 0..n {
        let row = ell.row(i);
        let lse = log_sum_exp(row);
        per_example.push(lse - ln_k);
        let total: f64 = row.iter().sum();
        for j in 0..k {
            modified.copy_from_slice(row);
            modified[j] = (total - row[j]) / (k - 1) as f64;
            let lse_holdout = log_sum_exp(&modified);
            // Equals (lse - ln K) - (lse_holdout - ln K); the ln K terms
            // cancel exactly so they are never introduced.
            *signals.at_mut(i, j) = lse - lse_holdout;
        }
    }
    let value = per_example.iter().sum::<f64>() / n as f64;
    if !value.is_finite() {
        return Err(Error::InvalidArgument {
            name: "log-likelihood matrix",
            detail: "bound is not finite".into(),
        });
    }
    Ok(MultiSample {
        per_example,
        value,
        signals,
    })
}

/// K clean codes and their channel-corrupted counterparts, all N x M.
#[derive(Debug, Clone)]
pub struct SampleSet {
    pub clean: Vec<Tensor>,
    pub noisy: Vec<Tensor>,
}

/// Draws K code samples from the encoder distribution `f` and passes each
/// through the channel. Sample k consumes the code stream before the noise
/// stream, so identical streams reproduce identical sets.
pub fn draw_samples(
    f: &Tensor,
    spec: &ChannelSpec,
    k: usize,
    code_rng: &mut ChaCha8Rng,
    noise_rng: &mut ChaCha8Rng,
) -> Result<SampleSet> {
    let mut clean = Vec::with_capacity(k);
    let mut noisy = Vec::with_capacity(k);
    for _ in 0..k {
        let y = sample_code(f, code_rng)?;
        let yhat = transmit(&y, spec, noise_rng)?;
        clean.push(y);
        noisy.push(yhat);
    }
    Ok(SampleSet { clean, noisy })
}

/// Multi-sample reconstruction estimate for one batch, with everything a
/// score-function update needs.
#[derive(Debug, Clone)]
pub struct VimcoOutcome {
    pub bound: MultiSample,
    pub samples: SampleSet,
}

/// Samples K noisy codes per input, scores each with the decoder, and
/// returns the multi-sample bound plus learning signals and the drawn codes.
pub fn reconstruction_bound(
    x: &Tensor,
    model: &Model,
    spec: &ChannelSpec,
    k: usize,
    code_rng: &mut ChaCha8Rng,
    noise_rng: &mut ChaCha8Rng,
) -> Result<VimcoOutcome> {
    if k < MIN_SAMPLES {
        return Err(Error::InvalidArgument {
            name: "sample count",
            detail: format!("need at least {MIN_SAMPLES} samples per example, got {k}"),
        });
    }
    let f = model.encode(x)?;
    let samples = draw_samples(&f, spec, k, code_rng, noise_rng)?;
    let ell = log_likelihood_matrix(x, model, &samples.noisy)?;
    let bound = multisample_bound(&ell)?;
    Ok(VimcoOutcome { bound, samples })
}

/// Decoder log-likelihood of `x` under each sampled code, as an N x K matrix.
fn log_likelihood_matrix(x: &Tensor, model: &Model, noisy: &[Tensor]) -> Result<Tensor> {
    let n = x.rows;
    let mut ell = Tensor::zeros(n, noisy.len());
    for (j, yhat) in noisy.iter().enumerate() {
        let mean = model.decode(yhat)?;
        let lp = gaussian_log_density(x, &mean)?;
        for i in 0..n {
            *ell.at_mut(i, j) = lp.at(i, 0);
        }
    }
    Ok(ell)
}

fn require_binary(y: &Tensor, name: &'static str) -> Result<()> {
    if y.data.iter().any(|&v| v != 0.0 && v != 1.0) {
        return Err(Error::InvalidArgument {
            name,
            detail: "entries must be exactly 0.0 or 1.0".into(),
        });
    }
    Ok(())
}

/// Pairwise compression estimate on one batch of clean codes.
///
/// With per-bit code probabilities `f` (N x M) and codes `y` sampled from
/// them, the estimate is the mean matched-pair log-probability minus the
/// mean over all N^2 ordered pairs. The cross term factorizes per bit into
/// products of column sums, so cost is O(NM) rather than O(N^2 M). A batch
/// of one has matched and cross terms identical, giving exactly zero.
pub fn club_estimate(f: &Tensor, y: &Tensor) -> Result<f64> {
    club_check_shapes(f, y)?;
    let n = f.rows;
    let m = f.cols;
    let inv_n2 = 1.0 / (n as f64 * n as f64);
    // Matched pairs: same element products and reduction order as the graph
    // form, so the two stay bit-identical.
    let mut per_example_sum = 0.0;
    for i in 0..n {
        let mut row = 0.0;
        for j in 0..m {
            let p = crate::autodiff::clamp_prob(f.at(i, j));
            let on = y.at(i, j) * p.ln();
            let off = (1.0 - y.at(i, j)) * (1.0 - p).ln();
            row += on + off;
        }
        per_example_sum += row;
    }
    let diag = per_example_sum / n as f64;
    let mut pair_total = 0.0;
    for j in 0..m {
        let mut yc = 0.0;
        let mut ycc = 0.0;
        let mut lc = 0.0;
        let mut lcc = 0.0;
        for i in 0..n {
            let p = crate::autodiff::clamp_prob(f.at(i, j));
            yc += y.at(i, j);
            ycc += 1.0 - y.at(i, j);
            lc += p.ln();
            lcc += (1.0 - p).ln();
        }
        pair_total += yc * lc + ycc * lcc;
    }
    Ok(diag - pair_total * inv_n2)
}

fn club_check_shapes(f: &Tensor, y: &Tensor) -> Result<()> {
    if f.rows != y.rows || f.cols != y.cols {
        return Err(Error::InvalidArgument {
            name: "code batch",
            detail: format!(
                "probabilities are {}x{} but codes are {}x{}",
                f.rows, f.cols, y.rows, y.cols
            ),
        });
    }
    if f.rows == 0 {
        return Err(Error::InvalidArgument {
            name: "code batch",
            detail: "no rows".into(),
        });
    }
    if f.data.iter().any(|&v| !(0.0..=1.0).contains(&v)) {
        return Err(Error::InvalidArgument {
            name: "code probabilities",
            detail: "entries must lie in [0, 1]".into(),
        });
    }
    require_binary(y, "code batch")
}

/// Graph form of [`club_estimate`] with `f` as a live node, so encoder
/// gradients flow through both the matched and cross terms.
pub fn club_graph(g: &mut Graph, f: NodeId, y: &Tensor) -> Result<NodeId> {
    club_check_shapes(g.value(f), y)?;
    let n = y.rows as f64;
    let mut y_comp = y.clone();
    for v in &mut y_comp.data {
        *v = 1.0 - *v;
    }
    let y_node = g.input(y.clone());
    let y_comp_node = g.input(y_comp);
    let fc = g.clamp_prob(f)?;
    let logf = g.log(fc)?;
    let neg = g.scale(fc, -1.0)?;
    let omf = g.offset(neg, 1.0)?;
    let logomf = g.log(omf)?;
    let on = g.mul(y_node, logf)?;
    let off = g.mul(y_comp_node, logomf)?;
    let per_bit = g.add(on, off)?;
    let per_example = g.row_sum(per_bit)?;
    let diag = g.mean(per_example)?;
    let yc = g.col_sum(y_node)?;
    let ycc = g.col_sum(y_comp_node)?;
    let lc = g.col_sum(logf)?;
    let lcc = g.col_sum(logomf)?;
    let p_on = g.mul(yc, lc)?;
    let p_off = g.mul(ycc, lcc)?;
    let per_bit_pair = g.add(p_on, p_off)?;
    let pair_total = g.sum(per_bit_pair)?;
    let pair_mean = g.scale(pair_total, 1.0 / (n * n))?;
    g.sub(diag, pair_mean)
}

/// Which parameter gradients one objective evaluation should produce.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GradTarget {
    /// Values only; no graph is built.
    None,
    /// Encoder gradients via the score-function surrogate.
    Encoder,
    /// Decoder gradients via the log-mean-exp path.
    Decoder,
    /// Both at once from a single combined surrogate.
    Both,
}

impl GradTarget {
    fn encoder(self) -> bool {
        matches!(self, GradTarget::Encoder | GradTarget::Both)
    }
    fn decoder(self) -> bool {
        matches!(self, GradTarget::Decoder | GradTarget::Both)
    }
}

/// Loss components of one batch evaluation.
#[derive(Debug, Clone, Copy)]
pub struct LossBreakdown {
    /// Multi-sample reconstruction bound (higher is better).
    pub l_rec: f64,
    /// Pairwise compression estimate (an upper bound on code information).
    pub l_com: f64,
    /// Trade-off weight applied to `l_com`.
    pub beta: f64,
    /// `l_rec - beta * l_com`; training maximizes this.
    pub total: f64,
}

/// One objective evaluation: the loss breakdown plus whichever parameter
/// gradients were requested, in [`crate::model::Mlp::params`] order. The
/// gradients are of the negated objective, ready for a minimizing optimizer.
#[derive(Debug, Clone)]
pub struct StepEval {
    pub breakdown: LossBreakdown,
    pub encoder_grads: Option<Vec<Tensor>>,
    pub decoder_grads: Option<Vec<Tensor>>,
    pub samples: SampleSet,
}

/// Evaluates the full objective on one batch and differentiates the parts
/// requested by `target`.
///
/// The drawn samples, the loss values, and each requested gradient are all
/// independent of which other gradients were requested: plain and graph
/// forward passes share arithmetic exactly. Decoder gradients come only
/// from the reconstruction path, so they never depend on `beta`. When
/// `beta` is exactly zero the compression term is left out of the surrogate
/// entirely (its value is still reported), making a zero-beta adaptive run
/// identical to a reconstruction-only one.
#[allow(clippy::too_many_arguments)]
pub fn total_loss(
    x: &Tensor,
    model: &Model,
    spec: &ChannelSpec,
    beta: f64,
    k: usize,
    code_rng: &mut ChaCha8Rng,
    noise_rng: &mut ChaCha8Rng,
    target: GradTarget,
) -> Result<StepEval> {
    if k < MIN_SAMPLES {
        return Err(Error::InvalidArgument {
            name: "sample count",
            detail: format!("need at least {MIN_SAMPLES} samples per example, got {k}"),
        });
    }
    if !beta.is_finite() || beta < 0.0 {
        return Err(Error::InvalidArgument {
            name: "beta",
            detail: format!("must be finite and non-negative, got {beta}"),
        });
    }
    let mut g = Graph::new();

    let (f_vals, enc_ids, f_node) = if target.encoder() {
        let nodes = model.encode_graph(&mut g, x)?;
        (
            g.value(nodes.output).clone(),
            Some(nodes.param_ids),
            Some(nodes.output),
        )
    } else {
        (model.encode(x)?, None, None)
    };
    let samples = draw_samples(&f_vals, spec, k, code_rng, noise_rng)?;

    // Reconstruction path. Values are identical through either route; the
    // graph route additionally carries decoder gradients.
    let (ell, lrec_node) = if target.decoder() {
        let dec_ids = model.decoder.register_params(&mut g);
        let x_node = g.input(x.clone());
        let mut cols = Vec::with_capacity(k);
        for yhat in &samples.noisy {
            let y_node = g.input(yhat.clone());
            let mean = model.decoder.forward_with(&mut g, &dec_ids, y_node)?;
            cols.push(gaussian_log_density_graph(&mut g, x_node, mean)?);
        }
        let ell_node = g.concat_cols(&cols)?;
        let lse = g.log_sum_exp_rows(ell_node)?;
        let shifted = g.offset(lse, -(k as f64).ln())?;
        let lrec = g.mean(shifted)?;
        (g.value(ell_node).clone(), Some((lrec, dec_ids)))
    } else {
        (log_likelihood_matrix(x, model, &samples.noisy)?, None)
    };
    let bound = multisample_bound(&ell)?;
    let l_rec = match &lrec_node {
        Some((id, _)) => g.value(*id).at(0, 0),
        None => bound.value,
    };

    // Encoder path: score surrogate plus the weighted compression term.
    let mut enc_obj = None;
    let mut club_node = None;
    if let Some(f_id) = f_node {
        let q_node = composite_params_graph(&mut g, f_id, spec)?;
        let n = x.rows;
        let mut acc: Option<NodeId> = None;
        for (j, yhat) in samples.noisy.iter().enumerate() {
            let y_node = g.input(yhat.clone());
            let lp = bernoulli_log_prob_graph(&mut g, y_node, q_node)?;
            let mut sig = Tensor::zeros(n, 1);
            for i in 0..n {
                *sig.at_mut(i, 0) = bound.signals.at(i, j);
            }
            let sig_node = g.input(sig);
            let term = g.mul(sig_node, lp)?;
            acc = Some(match acc {
                Some(a) => g.add(a, term)?,
                None => term,
            });
        }
        let score = g.mean(acc.expect("k >= 2"))?;
        let club = club_graph(&mut g, f_id, &samples.clean[0])?;
        club_node = Some(club);
        enc_obj = Some(if beta == 0.0 {
            score
        } else {
            let weighted = g.scale(club, -beta)?;
            g.add(score, weighted)?
        });
    }
    let l_com = match club_node {
        Some(id) => g.value(id).at(0, 0),
        None => club_estimate(&f_vals, &samples.clean[0])?,
    };

    let mut parts = Vec::new();
    if let Some((id, _)) = &lrec_node {
        parts.push(*id);
    }
    if let Some(id) = enc_obj {
        parts.push(id);
    }
    let (encoder_grads, decoder_grads) = if parts.is_empty() {
        (None, None)
    } else {
        let mut obj = parts[0];
        for &p in &parts[1..] {
            obj = g.add(obj, p)?;
        }
        let loss = g.scale(obj, -1.0)?;
        g.backward(loss)?;
        let enc = enc_ids.map(|ids| {
            ids.iter()
                .map(|&id| g.grad(id).expect("leaf gradient").clone())
                .collect()
        });
        let dec = lrec_node.map(|(_, ids)| {
            ids.iter()
                .map(|&id| g.grad(id).expect("leaf gradient").clone())
                .collect()
        });
        (enc, dec)
    };

    Ok(StepEval {
        breakdown: LossBreakdown {
            l_rec,
            l_com,
            beta,
            total: l_rec - beta * l_com,
        },
        encoder_grads,
        decoder_grads,
        samples,
    })
}
