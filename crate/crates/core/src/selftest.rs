//! Built-in diagnostic suite behind the CLI `selftest` verb.
//!
//! Each check exercises one load-bearing piece of the numerical stack
//! against an independent reference — finite differences, closed-form
//! identities, enumeration, or a hand-rolled recurrence — and reports a
//! one-line outcome. The suite is deterministic for a given seed and takes
//! a few seconds.

use crate::autodiff::{grad_check, Tensor};
use crate::channel::{composite_params, transmit, ChannelSpec};
use crate::data::{synth_dataset, SynthKind};
use crate::info::{beta_max, mi_estimate, mi_estimate_noisy};
use crate::metrics::render_metrics_csv;
use crate::objective::multisample_bound;
use crate::oracle::{exact_club_enumerated, exact_mi_enumerated};
use crate::pid::{PidGains, PidState};
use crate::sscc::{binary_entropy, sscc_bits};
use crate::trainer::{fit, TrainConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Outcome of one named check.
#[derive(Debug, Clone)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

type Check = Result<String, String>;

fn lib<T>(r: crate::error::Result<T>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

type CheckFn = fn(u64) -> Check;

/// Runs every check; order and outcomes are deterministic for a seed.
pub fn run_selftest(seed: u64) -> Vec<CheckOutcome> {
    let checks: [(&'static str, CheckFn); 8] = [
        ("autodiff-gradients", check_autodiff),
        ("channel-composite", check_channel),
        ("compression-bound", check_compression_bound),
        ("multisample-bound", check_multisample),
        ("information-chain", check_information_chain),
        ("controller-recurrence", check_controller),
        ("channel-uses-baseline", check_channel_uses),
        ("training-determinism", check_determinism),
    ];
    checks
        .iter()
        .map(|(name, f)| match f(seed) {
            Ok(detail) => CheckOutcome {
                name,
                passed: true,
                detail,
            },
            Err(detail) => CheckOutcome {
                name,
                passed: false,
                detail,
            },
        })
        .collect()
}

pub fn all_passed(outcomes: &[CheckOutcome]) -> bool {
    outcomes.iter().all(|o| o.passed)
}

/// Reverse-mode gradients against central finite differences on composite
/// graphs mixing every nonlinear op.
fn check_autodiff(seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x01);
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let rows = rng.gen_range(1..4);
        let cols = rng.gen_range(1..4);
        let data: Vec<f64> = (0..rows * cols).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let x = lib(Tensor::from_vec(rows, cols, data))?;
        let err = lib(grad_check(
            |g, xid| {
                let s = g.sigmoid(xid)?;
                let c = g.clamp_prob(s)?;
                let l = g.log(c)?;
                let e = g.exp(xid)?;
                let m = g.mul(l, e)?;
                let lse = g.log_sum_exp_rows(m)?;
                let shifted = g.offset(lse, 0.25)?;
                g.mean(shifted)
            },
            &x,
            1e-5,
        ))?;
        worst = worst.max(err);
    }
    if worst < 1e-4 {
        Ok(format!("max relative error {worst:.2e} over 10 graphs"))
    } else {
        Err(format!("relative error {worst:.2e} exceeds 1e-4"))
    }
}

/// The code-then-noise Bernoulli parameter equals f(1-2e)+e, and observed
/// flip rates match e.
fn check_channel(seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x02);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let eps = rng.gen_range(0.0..=0.5);
        let spec = lib(ChannelSpec::new(eps))?;
        let f = lib(Tensor::from_vec(1, 1, vec![rng.gen_range(0.0..1.0)]))?;
        let q = composite_params(&f, &spec);
        let direct = f.at(0, 0) * (1.0 - 2.0 * eps) + eps;
        worst = worst.max((q.at(0, 0) - direct).abs());
    }
    if worst > 1e-12 {
        return Err(format!("composite parameter off by {worst:.2e}"));
    }
    let eps = 0.17;
    let spec = lib(ChannelSpec::new(eps))?;
    let n = 50_000usize;
    let bits: Vec<f64> = (0..n).map(|_| f64::from(rng.gen_range(0..2))).collect();
    let y = lib(Tensor::from_vec(1, n, bits))?;
    let yhat = lib(transmit(&y, &spec, &mut rng))?;
    let flips = y
        .row(0)
        .iter()
        .zip(yhat.row(0))
        .filter(|(a, b)| a != b)
        .count() as f64;
    let rate = flips / n as f64;
    let sigma = (eps * (1.0 - eps) / n as f64).sqrt();
    let gap = (rate - eps).abs();
    if gap <= 3.0 * sigma {
        Ok(format!(
            "identity exact to {worst:.1e}; flip rate {rate:.4} vs {eps} ({:.1} sigma)",
            gap / sigma
        ))
    } else {
        Err(format!(
            "flip rate {rate:.4} is {:.1} sigma from {eps}",
            gap / sigma
        ))
    }
}

/// On enumerable instances the pairwise upper bound never dips below the
/// exact mutual information.
fn check_compression_bound(seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x03);
    let mut min_gap = f64::INFINITY;
    for _ in 0..20 {
        let n = rng.gen_range(2..5);
        let m = rng.gen_range(1..4);
        let data: Vec<f64> = (0..n * m).map(|_| rng.gen_range(0.05..0.95)).collect();
        let f = lib(Tensor::from_vec(n, m, data))?;
        let gap = exact_club_enumerated(&f) - exact_mi_enumerated(&f);
        min_gap = min_gap.min(gap);
        if gap < -1e-12 {
            return Err(format!("bound below exact value by {:.2e}", -gap));
        }
    }
    Ok(format!("bound holds; smallest margin {min_gap:.3e}"))
}

/// The multi-sample bound equals log-mean-exp of the per-sample values,
/// recomputed naively.
fn check_multisample(seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x04);
    let mut worst: f64 = 0.0;
    for _ in 0..30 {
        let n = rng.gen_range(1..5);
        let k = rng.gen_range(2..6);
        let data: Vec<f64> = (0..n * k).map(|_| rng.gen_range(-3.0..1.0)).collect();
        let ell = lib(Tensor::from_vec(n, k, data))?;
        let ms = lib(multisample_bound(&ell))?;
        for i in 0..n {
            let naive = (ell.row(i).iter().map(|v| v.exp()).sum::<f64>() / k as f64).ln();
            worst = worst.max((ms.per_example[i] - naive).abs());
        }
    }
    if worst < 1e-12 {
        Ok(format!("log-mean-exp identity holds to {worst:.1e}"))
    } else {
        Err(format!("log-mean-exp identity off by {worst:.2e}"))
    }
}

/// Data processing along the code-noise chain: noisy information never
/// exceeds clean information, clean never exceeds the code budget, and the
/// derived weight ceiling stays in [0, 1].
fn check_information_chain(seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x05);
    for trial in 0..50 {
        let n = rng.gen_range(2..8);
        let m = rng.gen_range(1..5);
        let eps = rng.gen_range(0.0..=0.5);
        let spec = lib(ChannelSpec::new(eps))?;
        let data: Vec<f64> = (0..n * m).map(|_| rng.gen_range(0.01..0.99)).collect();
        let f = lib(Tensor::from_vec(n, m, data))?;
        let clean = mi_estimate(&f);
        let noisy = mi_estimate_noisy(&f, &spec);
        let bmax = beta_max(&f, &spec);
        if noisy > clean + 1e-12 {
            return Err(format!(
                "trial {trial}: noisy information {noisy} exceeds clean {clean}"
            ));
        }
        if clean > m as f64 * std::f64::consts::LN_2 + 1e-9 {
            return Err(format!(
                "trial {trial}: clean information {clean} exceeds the {m}-bit budget"
            ));
        }
        if !(0.0..=1.0).contains(&bmax) {
            return Err(format!("trial {trial}: weight ceiling {bmax} outside [0, 1]"));
        }
    }
    Ok("ordering and ceilings hold on 50 random batches".into())
}

/// The controller state matches a hand-rolled recurrence, and zero gains pin
/// the weight to its ceiling.
fn check_controller(seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x06);
    for trial in 0..50 {
        let gains = PidGains {
            k_p: rng.gen_range(0.0..0.01),
            k_i: rng.gen_range(0.0..0.01),
            k_d: rng.gen_range(0.0..0.01),
        };
        let beta_min = rng.gen_range(0.001..0.1);
        let mut state = lib(PidState::new(beta_min, gains))?;
        let mut integral = 0.0;
        let mut prev: Option<f64> = None;
        let mut beta = beta_min;
        for _ in 0..20 {
            let mse = rng.gen_range(0.0..2.0);
            let bmax = rng.gen_range(0.0..=1.0);
            state = lib(state.update(mse, bmax))?;
            integral += gains.k_i * mse;
            let differential = prev.map_or(0.0, |p| gains.k_d * (mse - p));
            let candidate = if beta > bmax {
                bmax
            } else if beta < beta_min {
                beta_min
            } else {
                bmax + gains.k_p * mse - integral - differential
            };
            beta = candidate.min(bmax).max(beta_min);
            prev = Some(mse);
            if (state.beta - beta).abs() > 1e-12 {
                return Err(format!(
                    "trial {trial}: controller {} vs recurrence {beta}",
                    state.beta
                ));
            }
        }
    }
    let zero = lib(PidState::new(0.01, PidGains { k_p: 0.0, k_i: 0.0, k_d: 0.0 }))?;
    let after = lib(zero.update(0.5, 0.8))?;
    if after.beta != 0.8 {
        return Err(format!("zero gains gave {} instead of the ceiling 0.8", after.beta));
    }
    Ok("recurrence matches to 1e-12; zero gains pin to the ceiling".into())
}

/// Known entropy values and monotone channel-use growth with noise.
fn check_channel_uses(_seed: u64) -> Check {
    if lib(binary_entropy(0.5))? != 1.0 {
        return Err("H(0.5) is not exactly 1".into());
    }
    let h = lib(binary_entropy(0.1))?;
    if (h - 0.4690).abs() >= 1e-4 {
        return Err(format!("H(0.1) = {h}, expected 0.4690"));
    }
    let uses = lib(sscc_bits(100.0, 0.1))?;
    if (uses - 188.3).abs() >= 0.1 {
        return Err(format!("100 bits at noise 0.1 cost {uses}, expected ~188.3"));
    }
    let mut prev = lib(sscc_bits(100.0, 0.0))?;
    for i in 1..100 {
        let eps = 0.4999 * i as f64 / 99.0;
        let b = lib(sscc_bits(100.0, eps))?;
        if b <= prev {
            return Err(format!("channel uses not increasing at noise {eps}"));
        }
        prev = b;
    }
    Ok(format!("H(0.5)=1, H(0.1)={h:.4}, 100 bits@0.1 -> {uses:.1} uses, monotone"))
}

/// Two identically-configured trainings produce identical metrics.
fn check_determinism(seed: u64) -> Check {
    let ds = lib(synth_dataset(SynthKind::RandomBinary, 12, 5, seed))?;
    let mut cfg = TrainConfig::new(0.1, 3);
    cfg.enc_hidden = vec![6];
    cfg.dec_hidden = vec![6];
    cfg.samples_per_input = 2;
    cfg.epochs = 2;
    cfg.batch_size = 6;
    cfg.seed = seed;
    let a = lib(fit(&cfg, &ds, &ds))?;
    let b = lib(fit(&cfg, &ds, &ds))?;
    if render_metrics_csv(&a.history) != render_metrics_csv(&b.history) {
        return Err("identical configurations produced different metrics".into());
    }
    if a.final_model != b.final_model {
        return Err("identical configurations produced different parameters".into());
    }
    Ok("two identical trainings agree byte-for-byte".into())
}
