//! Separate source-channel coding baseline.
//!
//! A classical pipeline compresses an image to `source_bits` bits and then
//! protects them with a capacity-achieving channel code. Over a binary
//! symmetric channel with flip probability `epsilon` the channel capacity is
//! `1 - H_b(epsilon)` bits per use, so delivering the payload reliably costs
//! `source_bits / (1 - H_b(epsilon))` channel uses. The comparator looks up,
//! for each image's achieved distortion, the bit budget a reference
//! rate-distortion table assigns to that distortion, converts it to channel
//! uses, and reports the ratio against the fixed code length the learned
//! system spends per image.

use crate::channel::{transmit, ChannelSpec};
use crate::error::{Error, Result};
use crate::model::{sample_code, Model};
use crate::Dataset;
use rand_chacha::ChaCha8Rng;
use std::path::Path;

/// Binary entropy in bits; 0 at both endpoints, 1 at 1/2.
pub fn binary_entropy(p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidArgument {
            name: "probability",
            detail: format!("{p} is outside [0, 1]"),
        });
    }
    if p == 0.0 || p == 1.0 {
        return Ok(0.0);
    }
    Ok(-p * p.log2() - (1.0 - p) * (1.0 - p).log2())
}

/// Channel uses needed to deliver `source_bits` reliably across a binary
/// symmetric channel with flip probability `epsilon`.
///
/// `epsilon` must lie in `[0, 0.5)`: at 1/2 the channel has zero capacity and
/// no finite blocklength suffices.
pub fn sscc_bits(source_bits: f64, epsilon: f64) -> Result<f64> {
    if !source_bits.is_finite() || source_bits <= 0.0 {
        return Err(Error::InvalidArgument {
            name: "source_bits",
            detail: format!("{source_bits} is not a positive bit count"),
        });
    }
    if !(0.0..0.5).contains(&epsilon) {
        return Err(Error::InvalidArgument {
            name: "epsilon",
            detail: format!("{epsilon} is outside [0, 0.5); the channel capacity vanishes at 0.5"),
        });
    }
    let capacity = 1.0 - binary_entropy(epsilon)?;
    Ok(source_bits / capacity)
}

/// A reference rate-distortion table: rows of (distortion, source bits).
#[derive(Debug, Clone)]
pub struct SsccTable {
    rows: Vec<(f64, f64)>,
}

impl SsccTable {
    pub fn new(rows: Vec<(f64, f64)>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InvalidArgument {
                name: "rate-distortion table",
                detail: "no rows".into(),
            });
        }
        for &(d, bits) in &rows {
            if !d.is_finite() || d < 0.0 {
                return Err(Error::InvalidArgument {
                    name: "rate-distortion table",
                    detail: format!("distortion {d} is not a finite non-negative value"),
                });
            }
            if !bits.is_finite() || bits <= 0.0 {
                return Err(Error::InvalidArgument {
                    name: "rate-distortion table",
                    detail: format!("source bits {bits} is not a finite positive value"),
                });
            }
        }
        Ok(Self { rows })
    }

    /// Parses a plain-text table: one `distortion,source_bits` pair per line,
    /// `#` comments and blank lines ignored.
    pub fn from_str_named(text: &str, path: &str) -> Result<Self> {
        let mut rows = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |detail: String| Error::Config {
                path: path.to_string(),
                line: idx + 1,
                detail,
            };
            let mut parts = line.split(',');
            let d = parts
                .next()
                .unwrap_or_default()
                .trim()
                .parse::<f64>()
                .map_err(|e| bad(format!("bad distortion value: {e}")))?;
            let bits = parts
                .next()
                .ok_or_else(|| bad("expected `distortion,source_bits`".into()))?
                .trim()
                .parse::<f64>()
                .map_err(|e| bad(format!("bad source-bits value: {e}")))?;
            if parts.next().is_some() {
                return Err(bad("expected exactly two comma-separated values".into()));
            }
            rows.push((d, bits));
        }
        Self::new(rows)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_str_named(&text, &path.display().to_string())
    }

    /// The row whose distortion is nearest to `d` (first such row on ties).
    pub fn nearest(&self, d: f64) -> (f64, f64) {
        let mut best = self.rows[0];
        let mut best_gap = (best.0 - d).abs();
        for &row in &self.rows[1..] {
            let gap = (row.0 - d).abs();
            if gap < best_gap {
                best = row;
                best_gap = gap;
            }
        }
        best
    }

    pub fn rows(&self) -> &[(f64, f64)] {
        &self.rows
    }
}

/// Per-image comparison row.
#[derive(Debug, Clone)]
pub struct SsccRow {
    /// Mean squared reconstruction error the learned system achieved.
    pub distortion: f64,
    /// Source bits the reference table assigns to that distortion.
    pub source_bits: f64,
    /// Channel uses the separate design needs for those bits.
    pub channel_uses: f64,
    /// `channel_uses` divided by the learned system's fixed code length.
    pub ratio: f64,
}

#[derive(Debug, Clone)]
pub struct SsccComparison {
    pub per_image: Vec<SsccRow>,
    pub code_bits: usize,
    pub mean_distortion: f64,
    pub mean_channel_uses: f64,
    pub mean_ratio: f64,
}

/// Mean squared reconstruction error per image, averaged over `n_draws`
/// independent code/noise draws.
pub fn per_image_distortion(
    model: &Model,
    data: &Dataset,
    spec: &ChannelSpec,
    n_draws: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<f64>> {
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
    let n = data.len();
    let mut totals = vec![0.0; n];
    let f = model.encode(&data.x)?;
    for _ in 0..n_draws {
        let y = sample_code(&f, rng)?;
        let yhat = transmit(&y, spec, rng)?;
        let xhat = model.decode(&yhat)?;
        for (i, total) in totals.iter_mut().enumerate() {
            let mut err = 0.0;
            for (a, b) in data.x.row(i).iter().zip(xhat.row(i)) {
                let d = a - b;
                err += d * d;
            }
            *total += err;
        }
    }
    for total in &mut totals {
        *total /= n_draws as f64;
    }
    Ok(totals)
}

/// Compares the learned system's fixed per-image channel budget against the
/// channel uses a separate source/channel design would need to match each
/// image's achieved distortion.
pub fn compare_sscc(
    model: &Model,
    data: &Dataset,
    spec: &ChannelSpec,
    table: &SsccTable,
    n_draws: usize,
    rng: &mut ChaCha8Rng,
) -> Result<SsccComparison> {
    let code_bits = model.code_bits();
    let distortions = per_image_distortion(model, data, spec, n_draws, rng)?;
    let mut per_image = Vec::with_capacity(distortions.len());
    let mut sum_d = 0.0;
    let mut sum_uses = 0.0;
    let mut sum_ratio = 0.0;
    for d in distortions {
        let (_, source_bits) = table.nearest(d);
        let channel_uses = sscc_bits(source_bits, spec.epsilon())?;
        let ratio = channel_uses / code_bits as f64;
        sum_d += d;
        sum_uses += channel_uses;
        sum_ratio += ratio;
        per_image.push(SsccRow {
            distortion: d,
            source_bits,
            channel_uses,
            ratio,
        });
    }
    let n = per_image.len() as f64;
    Ok(SsccComparison {
        code_bits,
        mean_distortion: sum_d / n,
        mean_channel_uses: sum_uses / n,
        mean_ratio: sum_ratio / n,
        per_image,
    })
}

/// Renders the comparison as plain text: headline means, then one line per
/// image.
pub fn render_comparison(cmp: &SsccComparison) -> String {
    let mut out = String::new();
    out.push_str(&format!("code_bits_per_image: {}\n", cmp.code_bits));
    out.push_str(&format!("mean_distortion: {}\n", cmp.mean_distortion));
    out.push_str(&format!("mean_sscc_channel_uses: {}\n", cmp.mean_channel_uses));
    out.push_str(&format!("mean_ratio: {}\n", cmp.mean_ratio));
    out.push_str("image,distortion,source_bits,sscc_channel_uses,ratio\n");
    for (i, row) in cmp.per_image.iter().enumerate() {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            i, row.distortion, row.source_bits, row.channel_uses, row.ratio
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{synth_dataset, SynthKind};
    use crate::rng::{stream, StreamRole};

    #[test]
    fn binary_entropy_known_values() {
        assert_eq!(binary_entropy(0.5).unwrap(), 1.0);
        assert_eq!(binary_entropy(0.0).unwrap(), 0.0);
        assert_eq!(binary_entropy(1.0).unwrap(), 0.0);
        assert!((binary_entropy(0.1).unwrap() - 0.4690).abs() < 1e-4);
        assert!((binary_entropy(0.25).unwrap() - binary_entropy(0.75).unwrap()).abs() < 1e-15);
        assert!(binary_entropy(-0.1).is_err());
        assert!(binary_entropy(1.1).is_err());
    }

    #[test]
    fn sscc_bits_known_value_and_bounds() {
        let b = sscc_bits(100.0, 0.1).unwrap();
        assert!((b - 188.3).abs() < 0.1, "got {b}");
        assert_eq!(sscc_bits(100.0, 0.0).unwrap(), 100.0);
        // Redundancy is never free on a noisy channel.
        assert!(sscc_bits(42.0, 0.2).unwrap() > 42.0);
    }

    #[test]
    fn sscc_bits_is_monotone_in_epsilon() {
        let mut prev = sscc_bits(100.0, 0.0).unwrap();
        for i in 1..100 {
            let eps = 0.4999 * i as f64 / 99.0;
            let b = sscc_bits(100.0, eps).unwrap();
            assert!(b > prev, "not increasing at eps {eps}: {b} vs {prev}");
            prev = b;
        }
    }

    #[test]
    fn sscc_bits_rejects_zero_capacity_and_bad_inputs() {
        assert!(sscc_bits(100.0, 0.5).is_err());
        assert!(sscc_bits(100.0, 0.6).is_err());
        assert!(sscc_bits(100.0, -0.01).is_err());
        assert!(sscc_bits(0.0, 0.1).is_err());
        assert!(sscc_bits(-5.0, 0.1).is_err());
        assert!(sscc_bits(f64::NAN, 0.1).is_err());
    }

    #[test]
    fn table_nearest_row_lookup() {
        let t = SsccTable::new(vec![(0.1, 100.0), (0.2, 80.0), (0.4, 50.0)]).unwrap();
        assert_eq!(t.nearest(0.2), (0.2, 80.0));
        assert_eq!(t.nearest(0.0), (0.1, 100.0));
        assert_eq!(t.nearest(0.31), (0.4, 50.0));
        assert_eq!(t.nearest(10.0), (0.4, 50.0));
        // Tie goes to the first row.
        assert_eq!(t.nearest(0.15), (0.1, 100.0));
    }

    #[test]
    fn table_rejects_empty_and_bad_rows() {
        assert!(SsccTable::new(vec![]).is_err());
        assert!(SsccTable::new(vec![(-0.1, 10.0)]).is_err());
        assert!(SsccTable::new(vec![(0.1, 0.0)]).is_err());
        assert!(SsccTable::new(vec![(0.1, f64::NAN)]).is_err());
    }

    #[test]
    fn table_parses_text_with_comments_and_reports_bad_lines() {
        let t = SsccTable::from_str_named("# d,bits\n0.1, 100\n\n0.2,80\n", "inline").unwrap();
        assert_eq!(t.rows(), &[(0.1, 100.0), (0.2, 80.0)]);
        let err = SsccTable::from_str_named("0.1,100\nnope\n", "inline").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line 2"), "{msg}");
        assert!(SsccTable::from_str_named("0.1,100,7\n", "inline").is_err());
    }

    #[test]
    fn synthetic_table_ratio_matches_hand_arithmetic() {
        // A table that charges 20 bits per code bit of the learned system: at
        // flip probability 0.4 the capacity is 1 - H_b(0.4) ~ 0.0290, so the
        // separate design needs ~20/0.0290 ~ 689 channel uses per code bit.
        let m = 4usize;
        let spec = ChannelSpec::new(0.4).unwrap();
        let table = SsccTable::new(vec![(0.0, 20.0 * m as f64)]).unwrap();
        let (_, bits) = table.nearest(0.37);
        let ratio = sscc_bits(bits, spec.epsilon()).unwrap() / m as f64;
        let expected = 20.0 / (1.0 - binary_entropy(0.4).unwrap());
        assert!((ratio - expected).abs() < 1e-9);
        assert!((ratio - 689.0).abs() < 1.0, "got {ratio}");
    }

    #[test]
    fn compare_reports_per_image_rows_and_consistent_means() {
        let ds = synth_dataset(SynthKind::OneHot, 4, 8, 0).unwrap();
        let spec = ChannelSpec::new(0.1).unwrap();
        let mut init = stream(7, StreamRole::ParamInit);
        let model = Model::init(8, &[6], 3, &[6], &mut init).unwrap();
        let table = SsccTable::new(vec![(0.5, 40.0), (1.5, 20.0)]).unwrap();
        let mut rng = stream(7, StreamRole::Evaluation);
        let cmp = compare_sscc(&model, &ds, &spec, &table, 8, &mut rng).unwrap();
        assert_eq!(cmp.per_image.len(), 4);
        assert_eq!(cmp.code_bits, 3);
        for row in &cmp.per_image {
            let (_, bits) = table.nearest(row.distortion);
            assert_eq!(row.source_bits, bits);
            let uses = sscc_bits(bits, 0.1).unwrap();
            assert_eq!(row.channel_uses.to_bits(), uses.to_bits());
            assert_eq!(row.ratio.to_bits(), (uses / 3.0).to_bits());
        }
        let mean_r: f64 =
            cmp.per_image.iter().map(|r| r.ratio).sum::<f64>() / cmp.per_image.len() as f64;
        assert!((cmp.mean_ratio - mean_r).abs() < 1e-15);
        let text = render_comparison(&cmp);
        assert!(text.contains("code_bits_per_image: 3\n"));
        assert_eq!(text.lines().count(), 4 + 1 + 4);
    }

    #[test]
    fn per_image_distortion_is_deterministic_per_stream() {
        let ds = synth_dataset(SynthKind::RandomBinary, 5, 6, 1).unwrap();
        let spec = ChannelSpec::new(0.2).unwrap();
        let mut init = stream(3, StreamRole::ParamInit);
        let model = Model::init(6, &[], 2, &[], &mut init).unwrap();
        let a =
            per_image_distortion(&model, &ds, &spec, 4, &mut stream(9, StreamRole::Evaluation))
                .unwrap();
        let b =
            per_image_distortion(&model, &ds, &spec, 4, &mut stream(9, StreamRole::Evaluation))
                .unwrap();
        assert_eq!(a.len(), 5);
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
        assert!(per_image_distortion(&model, &ds, &spec, 0, &mut stream(9, StreamRole::Evaluation))
            .is_err());
    }
}
