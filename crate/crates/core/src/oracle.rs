//! Brute-force reference values by exhaustive enumeration.
//!
//! Everything here is a direct transliteration of a defining sum over the
//! full codeword space, kept independent of the estimator code paths it is
//! used to check (no calls into `info` or `objective`). Exponential in the
//! code width, so desk-scale instances only. Used by the test suites and the
//! `selftest` command.

use crate::autodiff::{log_sum_exp, Tensor};

/// All 2^m codewords as bit vectors, in binary counting order with bit 0
/// first.
pub fn enumerate_codewords(m: usize) -> Vec<Vec<f64>> {
    (0..1usize << m)
        .map(|pat| (0..m).map(|bit| ((pat >> bit) & 1) as f64).collect())
        .collect()
}

/// Probability of codeword `y` under independent per-bit parameters `f_row`.
pub fn codeword_prob(f_row: &[f64], y: &[f64]) -> f64 {
    f_row
        .iter()
        .zip(y)
        .map(|(&p, &b)| if b == 1.0 { p } else { 1.0 - p })
        .product()
}

/// Exact I(x; y) in nats with x uniform over the rows of `f`, from the full
/// joint table over codewords. Unlike the factorized estimator this sees
/// dependence between bits.
pub fn exact_mi_enumerated(f: &Tensor) -> f64 {
    let n = f.rows;
    let codewords = enumerate_codewords(f.cols);
    let cond: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            codewords
                .iter()
                .map(|y| codeword_prob(f.row(i), y))
                .collect()
        })
        .collect();
    let marginal: Vec<f64> = (0..codewords.len())
        .map(|j| cond.iter().map(|row| row[j]).sum::<f64>() / n as f64)
        .collect();
    let mut mi = 0.0;
    for row in &cond {
        for (j, &p) in row.iter().enumerate() {
            if p > 0.0 {
                mi += p * (p / marginal[j]).ln();
            }
        }
    }
    mi / n as f64
}

/// Exact-expectation contrastive upper bound on I(x; y):
/// E_{p(x,y)}[ln p(y|x)] - E_{p(x)}E_{p(y)}[ln p(y|x)], both expectations
/// enumerated. Requires every f entry strictly inside (0, 1) so the cross
/// term stays finite.
pub fn exact_club_enumerated(f: &Tensor) -> f64 {
    let n = f.rows;
    let codewords = enumerate_codewords(f.cols);
    let cond: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            codewords
                .iter()
                .map(|y| codeword_prob(f.row(i), y))
                .collect()
        })
        .collect();
    let marginal: Vec<f64> = (0..codewords.len())
        .map(|j| cond.iter().map(|row| row[j]).sum::<f64>() / n as f64)
        .collect();

    let mut joint_term = 0.0;
    for row in &cond {
        for &p in row {
            if p > 0.0 {
                joint_term += p * p.ln();
            }
        }
    }
    joint_term /= n as f64;

    let mut cross_term = 0.0;
    for row in &cond {
        for (j, &p) in row.iter().enumerate() {
            cross_term += marginal[j] * p.ln();
        }
    }
    cross_term /= n as f64;

    joint_term - cross_term
}

/// Exact expectation of the K-sample reconstruction bound over all K-tuples
/// of noisy codewords: sum over tuples of prod_k q(t_k) times
/// [ln sum_k exp(ell_{t_k}) - ln K]. `q` holds the per-bit probabilities of
/// the noisy code and `ell` one decoder log-likelihood per codeword, indexed
/// like [`enumerate_codewords`].
pub fn exact_multisample_bound(q: &[f64], ell: &[f64], k: usize) -> f64 {
    let codewords = enumerate_codewords(q.len());
    assert_eq!(codewords.len(), ell.len());
    let probs: Vec<f64> = codewords.iter().map(|y| codeword_prob(q, y)).collect();
    let outcomes = probs.len();
    let ln_k = (k as f64).ln();

    let mut total = 0.0;
    let mut tuple = vec![0usize; k];
    loop {
        let mut p = 1.0;
        for &t in &tuple {
            p *= probs[t];
        }
        if p > 0.0 {
            let ells: Vec<f64> = tuple.iter().map(|&t| ell[t]).collect();
            total += p * (log_sum_exp(&ells) - ln_k);
        }
        // Odometer increment over [0, outcomes)^k.
        let mut pos = 0;
        loop {
            if pos == k {
                return total;
            }
            tuple[pos] += 1;
            if tuple[pos] < outcomes {
                break;
            }
            tuple[pos] = 0;
            pos += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::LN_2;

    #[test]
    fn codeword_enumeration_is_complete_and_distinct() {
        let words = enumerate_codewords(3);
        assert_eq!(words.len(), 8);
        let mut seen: Vec<Vec<u8>> = words
            .iter()
            .map(|w| w.iter().map(|&b| b as u8).collect())
            .collect();
        seen.sort();
        seen.dedup();
        assert_eq!(seen.len(), 8);
    }

    #[test]
    fn codeword_probs_sum_to_one() {
        let f = [0.3, 0.8, 0.55];
        let total: f64 = enumerate_codewords(3)
            .iter()
            .map(|y| codeword_prob(&f, y))
            .sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn exact_mi_of_identity_code_is_ln_n() {
        let f = Tensor::from_vec(4, 2, vec![0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 1.0, 1.0])
            .unwrap();
        assert!((exact_mi_enumerated(&f) - 2.0 * LN_2).abs() < 1e-12);
    }

    #[test]
    fn exact_mi_of_constant_rows_is_zero() {
        let f = Tensor::from_vec(3, 2, vec![0.4, 0.7, 0.4, 0.7, 0.4, 0.7]).unwrap();
        assert!(exact_mi_enumerated(&f).abs() < 1e-12);
    }

    #[test]
    fn club_equals_mi_for_independent_code() {
        // With identical rows the bound is tight at zero.
        let f = Tensor::from_vec(3, 2, vec![0.4, 0.7, 0.4, 0.7, 0.4, 0.7]).unwrap();
        assert!(exact_club_enumerated(&f).abs() < 1e-12);
    }

    #[test]
    fn one_sample_bound_is_plain_expectation() {
        // K = 1 reduces to E[ell].
        let q = [0.25, 0.6];
        let ell = [-1.0, -2.0, 0.5, -0.25];
        let direct: f64 = enumerate_codewords(2)
            .iter()
            .zip(&ell)
            .map(|(y, &l)| codeword_prob(&q, y) * l)
            .sum();
        let bound = exact_multisample_bound(&q, &ell, 1);
        assert!((bound - direct).abs() < 1e-12);
    }

    #[test]
    fn constant_ell_makes_every_k_equal() {
        let q = [0.3];
        let ell = [-1.5, -1.5];
        for k in 1..=4 {
            let b = exact_multisample_bound(&q, &ell, k);
            assert!((b + 1.5).abs() < 1e-12, "k {k}: {b}");
        }
    }

    #[test]
    fn multisample_bound_is_monotone_in_k() {
        // Standard property of importance-weighted bounds.
        let q = [0.3, 0.65];
        let ell = [-3.0, -0.5, -1.25, -2.0];
        let mut prev = f64::NEG_INFINITY;
        for k in 1..=4 {
            let b = exact_multisample_bound(&q, &ell, k);
            assert!(b >= prev - 1e-12, "k {k}: {b} < {prev}");
            prev = b;
        }
    }
}
