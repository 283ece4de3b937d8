//! Plug-in information estimates over factorized binary codes.
//!
//! With bits conditionally independent given the input, code entropy
//! decomposes per bit, so I(x; y) is estimated as
//! sum_m [H_b(mean_i f_im) - mean_i H_b(f_im)] in nats. Each term is a
//! genuine per-bit mutual information, which gives the data-processing chain
//! 0 <= I(x; yhat) <= I(x; y) <= M ln 2 for free.

use crate::autodiff::Tensor;
use crate::channel::{composite_params, ChannelSpec};

/// Guard below which the adaptive-weight ceiling falls back to 1.0 instead
/// of dividing by a vanishing code information.
pub const BETA_MAX_DENOMINATOR_GUARD: f64 = 1e-8;

/// Binary entropy in nats; 0 at both endpoints.
pub fn binary_entropy_nats(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        return 0.0;
    }
    -p * p.ln() - (1.0 - p) * (1.0 - p).ln()
}

/// Column means of the Bernoulli parameter matrix: the marginal probability
/// that each code bit is 1 under a uniform pick of the batch rows.
pub fn marginal_bit_probs(f: &Tensor) -> Vec<f64> {
    let n = f.rows as f64;
    let mut out = vec![0.0; f.cols];
    for r in 0..f.rows {
        for (c, slot) in out.iter_mut().enumerate() {
            *slot += f.at(r, c);
        }
    }
    for slot in out.iter_mut() {
        *slot /= n;
    }
    out
}

/// Entropy of the factorized marginal: sum of per-bit binary entropies.
pub fn entropy_marginal(probs: &[f64]) -> f64 {
    probs.iter().map(|&p| binary_entropy_nats(p)).sum()
}

/// Mean over rows of the per-row code entropy sum_m H_b(f_im).
pub fn entropy_conditional(f: &Tensor) -> f64 {
    let total: f64 = f.data.iter().map(|&p| binary_entropy_nats(p)).sum();
    total / f.rows as f64
}

/// Plug-in estimate of I(x; y) in nats, clamped below at zero.
pub fn mi_estimate(f: &Tensor) -> f64 {
    let mi = entropy_marginal(&marginal_bit_probs(f)) - entropy_conditional(f);
    mi.max(0.0)
}

/// Same estimate after the code passes through the channel: the composite
/// bit distribution is Bernoulli(q) with q = f - 2*f*eps + eps.
pub fn mi_estimate_noisy(f: &Tensor, spec: &ChannelSpec) -> f64 {
    mi_estimate(&composite_params(f, spec))
}

/// Ceiling for the compression weight: I(x; yhat) / I(x; y), clamped into
/// [0, 1]. A vanishing denominator means the code carries nothing either
/// way, so the ceiling opens fully to 1.
pub fn beta_max(f: &Tensor, spec: &ChannelSpec) -> f64 {
    let denominator = mi_estimate(f);
    if denominator < BETA_MAX_DENOMINATOR_GUARD {
        return 1.0;
    }
    (mi_estimate_noisy(f, spec) / denominator).clamp(0.0, 1.0)
}

/// Epoch-end information summary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MiReport {
    pub i_xy: f64,
    pub i_xyhat: f64,
    pub beta_max: f64,
}

pub fn mi_report(f: &Tensor, spec: &ChannelSpec) -> MiReport {
    MiReport {
        i_xy: mi_estimate(f),
        i_xyhat: mi_estimate_noisy(f, spec),
        beta_max: beta_max(f, spec),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::PROB_FLOOR;
    use crate::oracle::exact_mi_enumerated;
    use crate::rng::{stream, StreamRole};
    use rand::Rng;
    use std::f64::consts::LN_2;

    #[test]
    fn binary_entropy_known_values() {
        assert_eq!(binary_entropy_nats(0.0), 0.0);
        assert_eq!(binary_entropy_nats(1.0), 0.0);
        assert!((binary_entropy_nats(0.5) - LN_2).abs() < 1e-15);
        assert!((binary_entropy_nats(0.1) - 0.325083).abs() < 1e-4);
    }

    #[test]
    fn marginals_of_constant_batch_equal_the_row() {
        let f = Tensor::from_vec(3, 2, vec![0.2, 0.7, 0.2, 0.7, 0.2, 0.7]).unwrap();
        let p = marginal_bit_probs(&f);
        assert!((p[0] - 0.2).abs() < 1e-15);
        assert!((p[1] - 0.7).abs() < 1e-15);
    }

    #[test]
    fn half_and_half_bits_marginal_to_half() {
        let f = Tensor::from_vec(4, 1, vec![0.0, 1.0, 0.0, 1.0]).unwrap();
        assert_eq!(marginal_bit_probs(&f), vec![0.5]);
    }

    #[test]
    fn marginal_entropy_cases() {
        assert!((entropy_marginal(&[0.5, 0.5, 0.5]) - 3.0 * LN_2).abs() < 1e-12);
        assert!((entropy_marginal(&[0.0, 1.0, 0.5]) - LN_2).abs() < 1e-12);
    }

    #[test]
    fn conditional_entropy_cases() {
        let det = Tensor::from_vec(2, 3, vec![0.0, 1.0, 0.0, 1.0, 1.0, 0.0]).unwrap();
        assert_eq!(entropy_conditional(&det), 0.0);
        let fair = Tensor::filled(5, 4, 0.5);
        assert!((entropy_conditional(&fair) - 4.0 * LN_2).abs() < 1e-12);
    }

    #[test]
    fn constant_encoder_carries_no_information() {
        let f = Tensor::from_vec(3, 2, vec![0.3, 0.8, 0.3, 0.8, 0.3, 0.8]).unwrap();
        let mi = mi_estimate(&f);
        assert!((0.0..=1e-12).contains(&mi), "mi {mi}");
    }

    #[test]
    fn two_point_clamped_code_is_one_bit() {
        let f = Tensor::from_vec(2, 1, vec![PROB_FLOOR, 1.0 - PROB_FLOOR]).unwrap();
        assert!((mi_estimate(&f) - LN_2).abs() < 1e-4);
    }

    #[test]
    fn deterministic_two_bit_code_hits_two_bits() {
        let f =
            Tensor::from_vec(4, 2, vec![0.0, 0.0, 0.0, 1.0, 1.0, 0.0, 1.0, 1.0]).unwrap();
        let mi = mi_estimate(&f);
        assert!((mi - 2.0 * LN_2).abs() < 1e-12);
        assert!((mi - exact_mi_enumerated(&f)).abs() < 1e-10);
    }

    #[test]
    fn plug_in_matches_exact_mi_on_product_marginal_instances() {
        // Deterministic codes whose used codewords form a product set keep
        // the bits marginally independent, the regime where the factorized
        // plug-in is exact. Active bits carry a permutation of all patterns,
        // inactive bits are constant.
        let mut r = stream(41, StreamRole::Synthesis);
        for _ in 0..50 {
            let m = r.gen_range(1..=3usize);
            let active = r.gen_range(1..=m);
            let n = 1usize << active;
            let mut patterns: Vec<usize> = (0..n).collect();
            for i in (1..n).rev() {
                patterns.swap(i, r.gen_range(0..=i));
            }
            let fixed: Vec<f64> = (0..m - active)
                .map(|_| if r.gen::<bool>() { 1.0 } else { 0.0 })
                .collect();
            let mut data = Vec::new();
            for &pat in &patterns {
                for bit in 0..active {
                    data.push(((pat >> bit) & 1) as f64);
                }
                data.extend_from_slice(&fixed);
            }
            let f = Tensor::from_vec(n, m, data).unwrap();
            let plug_in = mi_estimate(&f);
            let exact = exact_mi_enumerated(&f);
            assert!(
                (plug_in - exact).abs() < 1e-10,
                "plug-in {plug_in} vs exact {exact}"
            );
        }
    }

    #[test]
    fn noiseless_channel_changes_nothing() {
        let mut r = stream(43, StreamRole::Synthesis);
        let f = Tensor {
            rows: 6,
            cols: 3,
            data: (0..18).map(|_| r.gen_range(0.0..=1.0)).collect(),
        };
        let spec = ChannelSpec::new(0.0).unwrap();
        assert_eq!(mi_estimate_noisy(&f, &spec), mi_estimate(&f));
    }

    #[test]
    fn saturated_channel_erases_everything() {
        let mut r = stream(47, StreamRole::Synthesis);
        let f = Tensor {
            rows: 6,
            cols: 3,
            data: (0..18).map(|_| r.gen_range(0.0..=1.0)).collect(),
        };
        let spec = ChannelSpec::new(0.5).unwrap();
        assert_eq!(mi_estimate_noisy(&f, &spec), 0.0);
    }

    #[test]
    fn deterministic_one_bit_code_through_bsc() {
        let f = Tensor::from_vec(2, 1, vec![0.0, 1.0]).unwrap();
        let spec = ChannelSpec::new(0.1).unwrap();
        let expect = LN_2 - binary_entropy_nats(0.1);
        let got = mi_estimate_noisy(&f, &spec);
        assert!((got - expect).abs() < 1e-6, "got {got}, expect {expect}");
        assert!((got - 0.3680).abs() < 1e-3);
    }

    #[test]
    fn processing_chain_holds_on_random_batches() {
        let mut r = stream(53, StreamRole::Synthesis);
        for _ in 0..200 {
            let n = r.gen_range(2..10);
            let m = r.gen_range(1..6);
            let f = Tensor {
                rows: n,
                cols: m,
                data: (0..n * m).map(|_| r.gen_range(0.0..=1.0)).collect(),
            };
            let spec = ChannelSpec::new(r.gen_range(0.0..=0.5)).unwrap();
            let clean = mi_estimate(&f);
            let noisy = mi_estimate_noisy(&f, &spec);
            assert!(noisy >= 0.0);
            assert!(noisy <= clean, "noisy {noisy} > clean {clean}");
            assert!(clean <= m as f64 * LN_2 + 1e-12);
        }
    }

    #[test]
    fn beta_max_cases() {
        let f = Tensor::from_vec(2, 1, vec![0.0, 1.0]).unwrap();
        let noiseless = ChannelSpec::new(0.0).unwrap();
        assert_eq!(beta_max(&f, &noiseless), 1.0);

        let bsc = ChannelSpec::new(0.1).unwrap();
        let expect = (LN_2 - binary_entropy_nats(0.1)) / LN_2;
        assert!((beta_max(&f, &bsc) - expect).abs() < 1e-6);
        assert!((beta_max(&f, &bsc) - 0.5310).abs() < 1e-3);

        // Constant code trips the denominator guard.
        let flat = Tensor::filled(4, 2, 0.37);
        assert_eq!(beta_max(&flat, &bsc), 1.0);
    }

    #[test]
    fn beta_max_stays_in_unit_interval() {
        let mut r = stream(59, StreamRole::Synthesis);
        for _ in 0..300 {
            let n = r.gen_range(2..8);
            let m = r.gen_range(1..5);
            let f = Tensor {
                rows: n,
                cols: m,
                data: (0..n * m).map(|_| r.gen_range(0.0..=1.0)).collect(),
            };
            let spec = ChannelSpec::new(r.gen_range(0.0..=0.5)).unwrap();
            let b = beta_max(&f, &spec);
            assert!((0.0..=1.0).contains(&b), "beta_max {b}");
        }
    }

    #[test]
    fn report_is_consistent_with_parts() {
        let f = Tensor::from_vec(2, 2, vec![0.1, 0.9, 0.8, 0.3]).unwrap();
        let spec = ChannelSpec::new(0.2).unwrap();
        let rep = mi_report(&f, &spec);
        assert_eq!(rep.i_xy, mi_estimate(&f));
        assert_eq!(rep.i_xyhat, mi_estimate_noisy(&f, &spec));
        assert_eq!(rep.beta_max, beta_max(&f, &spec));
    }
}
