//! Memoryless binary symmetric channel.
//!
//! Each transmitted bit flips independently with probability epsilon. The
//! composite of Bernoulli(f) code sampling followed by this channel is again
//! Bernoulli with parameter q = f - 2*f*eps + eps; that identity is what lets
//! the encoder's score-function gradient see the channel.

use crate::autodiff::{Graph, NodeId, Tensor};
use crate::error::{Error, Result};
use rand::Rng;

/// Validated channel description.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelSpec {
    epsilon: f64,
}

impl ChannelSpec {
    /// Flip probability must lie in [0, 0.5]; beyond 0.5 the channel would be
    /// better used inverted.
    pub fn new(epsilon: f64) -> Result<Self> {
        if !(0.0..=0.5).contains(&epsilon) || !epsilon.is_finite() {
            return Err(Error::InvalidEpsilon(epsilon));
        }
        Ok(ChannelSpec { epsilon })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }
}

fn require_binary(name: &'static str, y: &Tensor) -> Result<()> {
    if y.data.iter().any(|&v| v != 0.0 && v != 1.0) {
        return Err(Error::InvalidArgument {
            name,
            detail: "entries must be exactly 0 or 1".into(),
        });
    }
    Ok(())
}

/// Sends a batch of codewords through the channel, flipping each bit with
/// probability epsilon. The input is left untouched.
pub fn transmit(y: &Tensor, spec: &ChannelSpec, rng: &mut impl Rng) -> Result<Tensor> {
    require_binary("transmit input", y)?;
    let eps = spec.epsilon;
    let mut out = y.clone();
    for v in out.data.iter_mut() {
        if rng.gen::<f64>() < eps {
            *v = 1.0 - *v;
        }
    }
    Ok(out)
}

/// log p(y_received | y_sent) for a single codeword pair:
/// flips * ln(eps) + (len - flips) * ln(1 - eps).
///
/// At eps = 0 a transition with any flipped bit has probability zero, which
/// would be -inf; that case is a structured error instead.
pub fn bsc_log_prob(sent: &[f64], received: &[f64], spec: &ChannelSpec) -> Result<f64> {
    if sent.len() != received.len() {
        return Err(Error::InvalidArgument {
            name: "bsc_log_prob",
            detail: format!("codeword lengths {} vs {}", sent.len(), received.len()),
        });
    }
    let mut flips = 0usize;
    for (a, b) in sent.iter().zip(received) {
        if (a != &0.0 && a != &1.0) || (b != &0.0 && b != &1.0) {
            return Err(Error::InvalidArgument {
                name: "bsc_log_prob",
                detail: "entries must be exactly 0 or 1".into(),
            });
        }
        if a != b {
            flips += 1;
        }
    }
    let eps = spec.epsilon;
    if eps == 0.0 {
        if flips > 0 {
            return Err(Error::ImpossibleTransition { flips });
        }
        return Ok(0.0);
    }
    let same = (sent.len() - flips) as f64;
    Ok(flips as f64 * eps.ln() + same * (1.0 - eps).ln())
}

/// Bernoulli parameter of code sampling composed with the channel:
/// q = f * (1 - 2*eps) + eps, elementwise.
pub fn composite_params(f: &Tensor, spec: &ChannelSpec) -> Tensor {
    let eps = spec.epsilon;
    let scale = 1.0 - 2.0 * eps;
    Tensor {
        rows: f.rows,
        cols: f.cols,
        data: f.data.iter().map(|v| v * scale + eps).collect(),
    }
}

/// Graph version of [`composite_params`], so encoder gradients flow through q.
pub fn composite_params_graph(g: &mut Graph, f: NodeId, spec: &ChannelSpec) -> Result<NodeId> {
    let eps = spec.epsilon();
    let scaled = g.scale(f, 1.0 - 2.0 * eps)?;
    g.offset(scaled, eps)
}
