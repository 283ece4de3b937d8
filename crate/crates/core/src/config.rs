//! Experiment configuration: a sectioned `key = value` text format, CLI
//! overrides, and a canonical rendering that names run directories.
//!
//! The format is deliberately small: `[section]` headers, one `key = value`
//! per line, `#` comments, blank lines ignored. Every key is strict — unknown
//! sections or keys, duplicates, and type errors are reported with the file
//! path and line number. Overrides (from CLI flags) use the same qualified
//! `section.key` names and flow through the same typed extraction, so
//! precedence is uniform: override beats file beats default. Errors that
//! refer to a missing key or an override rather than a file line report
//! line 0.
//!
//! `canonical()` renders the fully resolved configuration in a fixed key
//! order, so two files that differ only in formatting, comments, or key
//! order produce identical canonical text. `digest()` hashes that text
//! (minus the trainer seed line) with FNV-1a; run directories are named
//! `<digest>-s<seed>` so seed sweeps of one configuration sit side by side.

use crate::data::{load_idx, synth_dataset, Dataset, SynthKind};
use crate::error::{Error, Result};
use crate::optim::OptimizerKind;
use crate::trainer::{TrainConfig, TrainMode};
use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

/// Where the training and evaluation images come from.
#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    OneHot { n: usize, d: usize, seed: u64 },
    RandomBinary { n: usize, d: usize, seed: u64 },
    Blob { n: usize, d: usize, seed: u64 },
    Idx { images: PathBuf, labels: Option<PathBuf> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DataConfig {
    pub source: DataSource,
    /// Fraction of examples held out for validation, in (0, 1).
    pub valid_fraction: f64,
}

impl DataConfig {
    /// Loads or synthesizes the full dataset (before any split).
    pub fn load(&self) -> Result<Dataset> {
        match &self.source {
            DataSource::OneHot { n, d, seed } => synth_dataset(SynthKind::OneHot, *n, *d, *seed),
            DataSource::RandomBinary { n, d, seed } => {
                synth_dataset(SynthKind::RandomBinary, *n, *d, *seed)
            }
            DataSource::Blob { n, d, seed } => synth_dataset(SynthKind::Blob, *n, *d, *seed),
            DataSource::Idx { images, labels } => load_idx(images, labels.as_deref()),
        }
    }

    /// Seed for the one-off train/validation split shuffle. Synthetic sources
    /// reuse their generation seed so the split is a property of the dataset,
    /// not of the training seed; IDX files use 0.
    pub fn split_seed(&self) -> u64 {
        match &self.source {
            DataSource::OneHot { seed, .. }
            | DataSource::RandomBinary { seed, .. }
            | DataSource::Blob { seed, .. } => *seed,
            DataSource::Idx { .. } => 0,
        }
    }
}

/// Everything a single run needs.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub train: TrainConfig,
    pub data: DataConfig,
    /// Parent directory for run outputs.
    pub output_dir: PathBuf,
    /// Independent channel draws averaged for the final test error.
    pub eval_draws: usize,
}

const DEFAULT_VALID_FRACTION: f64 = 0.1;
const DEFAULT_EVAL_DRAWS: usize = 10;

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        Self::from_file_with(path, &[])
    }

    /// Parses `path` and then applies `overrides` — (`section.key`, value)
    /// pairs that replace whatever the file said.
    pub fn from_file_with(path: &Path, overrides: &[(String, String)]) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_str_with(&text, &path.display().to_string(), overrides)
    }

    pub fn from_str_named(text: &str, path: &str) -> Result<Self> {
        Self::from_str_with(text, path, &[])
    }

    pub fn from_str_with(text: &str, path: &str, overrides: &[(String, String)]) -> Result<Self> {
        let mut map = KeyMap::parse(text, path)?;
        for (key, value) in overrides {
            map.apply_override(key, value)?;
        }
        let cfg = extract(&mut map)?;
        map.finish()?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.train.validate()?;
        if !(self.data.valid_fraction > 0.0 && self.data.valid_fraction < 1.0) {
            return Err(Error::InvalidArgument {
                name: "data.valid_fraction",
                detail: format!("{} is outside (0, 1)", self.data.valid_fraction),
            });
        }
        if self.eval_draws == 0 {
            return Err(Error::InvalidArgument {
                name: "output.eval_draws",
                detail: "must be at least 1".into(),
            });
        }
        Ok(())
    }

    /// Fully resolved configuration in a fixed key order. Formatting-only
    /// differences between input files disappear here.
    pub fn canonical(&self) -> String {
        let t = &self.train;
        let mut out = String::new();
        let mut line = |k: &str, v: String| {
            let _ = writeln!(out, "{k}={v}");
        };
        line("channel.epsilon", t.epsilon.to_string());
        line("model.code_bits", t.code_bits.to_string());
        line("model.enc_hidden", render_dims(&t.enc_hidden));
        line("model.dec_hidden", render_dims(&t.dec_hidden));
        line("objective.samples", t.samples_per_input.to_string());
        line("controller.beta_min", t.beta_min.to_string());
        line("controller.k_p", t.gains.k_p.to_string());
        line("controller.k_i", t.gains.k_i.to_string());
        line("controller.k_d", t.gains.k_d.to_string());
        match t.mode {
            TrainMode::Adaptive => line("trainer.mode", "adaptive".into()),
            TrainMode::FixedBeta(b) => {
                line("trainer.mode", "fixed".into());
                line("trainer.beta", b.to_string());
            }
            TrainMode::Reconstruction => line("trainer.mode", "reconstruction".into()),
        }
        line("trainer.epochs", t.epochs.to_string());
        line("trainer.batch_size", t.batch_size.to_string());
        let (opt, lr) = match t.optimizer {
            OptimizerKind::Adam { lr, .. } => ("adam", lr),
            OptimizerKind::Sgd { lr } => ("sgd", lr),
        };
        line("trainer.optimizer", opt.into());
        line("trainer.learning_rate", lr.to_string());
        line("trainer.patience", t.patience.to_string());
        line("trainer.seed", t.seed.to_string());
        match &self.data.source {
            DataSource::OneHot { n, d, seed } => {
                line("data.source", "one-hot".into());
                line("data.n", n.to_string());
                line("data.d", d.to_string());
                line("data.seed", seed.to_string());
            }
            DataSource::RandomBinary { n, d, seed } => {
                line("data.source", "random-binary".into());
                line("data.n", n.to_string());
                line("data.d", d.to_string());
                line("data.seed", seed.to_string());
            }
            DataSource::Blob { n, d, seed } => {
                line("data.source", "blob".into());
                line("data.n", n.to_string());
                line("data.d", d.to_string());
                line("data.seed", seed.to_string());
            }
            DataSource::Idx { images, labels } => {
                line("data.source", "idx".into());
                line("data.images", images.display().to_string());
                if let Some(l) = labels {
                    line("data.labels", l.display().to_string());
                }
            }
        }
        line(
            "data.valid_fraction",
            self.data.valid_fraction.to_string(),
        );
        line("output.dir", self.output_dir.display().to_string());
        line("output.eval_draws", self.eval_draws.to_string());
        out
    }

    /// FNV-1a hash of the canonical text minus the trainer seed line, so all
    /// seeds of one configuration share a digest.
    pub fn digest(&self) -> u64 {
        let seedless: String = self
            .canonical()
            .lines()
            .filter(|l| !l.starts_with("trainer.seed="))
            .fold(String::new(), |mut acc, l| {
                acc.push_str(l);
                acc.push('\n');
                acc
            });
        fnv1a64(seedless.as_bytes())
    }

    /// Directory name for this run: `<16-hex digest>-s<seed>`.
    pub fn run_dir_name(&self) -> String {
        format!("{:016x}-s{}", self.digest(), self.train.seed)
    }
}

fn render_dims(dims: &[usize]) -> String {
    if dims.is_empty() {
        "none".into()
    } else {
        dims.iter()
            .map(|d| d.to_string())
            .collect::<Vec<_>>()
            .join(",")
    }
}

/// 64-bit FNV-1a.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Parsed `section.key -> (value, line)` with strict consumption tracking.
struct KeyMap {
    path: String,
    entries: HashMap<String, (String, usize)>,
}

impl KeyMap {
    fn parse(text: &str, path: &str) -> Result<Self> {
        let mut entries = HashMap::new();
        let mut section: Option<String> = None;
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let bad = |detail: String| Error::Config {
                path: path.to_string(),
                line: line_no,
                detail,
            };
            let line = match raw.find('#') {
                Some(pos) => &raw[..pos],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| bad(format!("malformed section header `{line}`")))?
                    .trim();
                if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
                {
                    return Err(bad(format!("invalid section name `{name}`")));
                }
                section = Some(name.to_string());
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| bad(format!("expected `key = value`, got `{line}`")))?;
            let key = key.trim();
            let value = value.trim();
            if key.is_empty() {
                return Err(bad("empty key".into()));
            }
            if value.is_empty() {
                return Err(bad(format!("key `{key}` has an empty value")));
            }
            let section = section
                .as_ref()
                .ok_or_else(|| bad(format!("key `{key}` appears before any [section]")))?;
            let qualified = format!("{section}.{key}");
            if entries
                .insert(qualified.clone(), (value.to_string(), line_no))
                .is_some()
            {
                return Err(bad(format!("duplicate key `{qualified}`")));
            }
        }
        Ok(KeyMap {
            path: path.to_string(),
            entries,
        })
    }

    fn apply_override(&mut self, key: &str, value: &str) -> Result<()> {
        if !key.contains('.') {
            return Err(self.err(0, format!("override `{key}` is not a section.key name")));
        }
        if value.trim().is_empty() {
            return Err(self.err(0, format!("override `{key}` has an empty value")));
        }
        self.entries
            .insert(key.to_string(), (value.trim().to_string(), 0));
        Ok(())
    }

    fn err(&self, line: usize, detail: String) -> Error {
        Error::Config {
            path: self.path.clone(),
            line,
            detail,
        }
    }

    fn take(&mut self, key: &str) -> Option<(String, usize)> {
        self.entries.remove(key)
    }

    fn missing(&self, key: &str) -> Error {
        self.err(0, format!("missing required key {key}"))
    }

    /// Errors if anything was set but never consumed (unknown keys).
    fn finish(self) -> Result<()> {
        if let Some((key, (_, line))) = self
            .entries
            .iter()
            .min_by_key(|(k, (_, line))| (*line, (*k).clone()))
        {
            return Err(self.err(*line, format!("unknown key `{key}`")));
        }
        Ok(())
    }
}

fn parse_with<T, F>(map: &KeyMap, key: &str, entry: (String, usize), f: F) -> Result<T>
where
    F: FnOnce(&str) -> std::result::Result<T, String>,
{
    let (value, line) = entry;
    f(&value).map_err(|detail| map.err(line, format!("{key}: {detail}")))
}

fn take_f64(map: &mut KeyMap, key: &str) -> Result<Option<f64>> {
    match map.take(key) {
        None => Ok(None),
        Some(e) => parse_with(map, key, e, |v| {
            v.parse::<f64>().map_err(|e| format!("`{v}` is not a number ({e})"))
        })
        .map(Some),
    }
}

fn take_usize(map: &mut KeyMap, key: &str) -> Result<Option<usize>> {
    match map.take(key) {
        None => Ok(None),
        Some(e) => parse_with(map, key, e, |v| {
            v.parse::<usize>()
                .map_err(|e| format!("`{v}` is not a non-negative integer ({e})"))
        })
        .map(Some),
    }
}

fn take_u64(map: &mut KeyMap, key: &str) -> Result<Option<u64>> {
    match map.take(key) {
        None => Ok(None),
        Some(e) => parse_with(map, key, e, |v| {
            v.parse::<u64>()
                .map_err(|e| format!("`{v}` is not a non-negative integer ({e})"))
        })
        .map(Some),
    }
}

fn take_dims(map: &mut KeyMap, key: &str) -> Result<Option<Vec<usize>>> {
    match map.take(key) {
        None => Ok(None),
        Some(e) => parse_with(map, key, e, |v| {
            if v == "none" {
                return Ok(Vec::new());
            }
            v.split(',')
                .map(|p| {
                    let p = p.trim();
                    p.parse::<usize>()
                        .map_err(|_| format!("`{p}` is not a layer width"))
                        .and_then(|w| {
                            if w == 0 {
                                Err("layer width 0".into())
                            } else {
                                Ok(w)
                            }
                        })
                })
                .collect()
        })
        .map(Some),
    }
}

fn extract(map: &mut KeyMap) -> Result<RunConfig> {
    let epsilon = take_f64(map, "channel.epsilon")?
        .ok_or_else(|| map.missing("channel.epsilon"))?;
    let code_bits =
        take_usize(map, "model.code_bits")?.ok_or_else(|| map.missing("model.code_bits"))?;

    let mut train = TrainConfig::new(epsilon, code_bits);
    if let Some(dims) = take_dims(map, "model.enc_hidden")? {
        train.enc_hidden = dims;
    }
    if let Some(dims) = take_dims(map, "model.dec_hidden")? {
        train.dec_hidden = dims;
    }
    if let Some(k) = take_usize(map, "objective.samples")? {
        train.samples_per_input = k;
    }
    if let Some(b) = take_f64(map, "controller.beta_min")? {
        train.beta_min = b;
    }
    if let Some(g) = take_f64(map, "controller.k_p")? {
        train.gains.k_p = g;
    }
    if let Some(g) = take_f64(map, "controller.k_i")? {
        train.gains.k_i = g;
    }
    if let Some(g) = take_f64(map, "controller.k_d")? {
        train.gains.k_d = g;
    }

    let mode = map.take("trainer.mode");
    let beta = take_f64(map, "trainer.beta")?;
    train.mode = match mode {
        None => {
            if beta.is_some() {
                return Err(map.err(
                    0,
                    "trainer.beta is only meaningful when trainer.mode = fixed".into(),
                ));
            }
            TrainMode::Adaptive
        }
        Some(e) => {
            let (value, line) = e;
            match value.as_str() {
                "adaptive" | "reconstruction" if beta.is_some() => {
                    return Err(map.err(
                        line,
                        "trainer.beta is only meaningful when trainer.mode = fixed".into(),
                    ));
                }
                "adaptive" => TrainMode::Adaptive,
                "reconstruction" => TrainMode::Reconstruction,
                "fixed" => TrainMode::FixedBeta(
                    beta.ok_or_else(|| map.missing("trainer.beta"))?,
                ),
                other => {
                    return Err(map.err(
                        line,
                        format!(
                            "trainer.mode `{other}` is not one of adaptive, fixed, reconstruction"
                        ),
                    ));
                }
            }
        }
    };

    if let Some(n) = take_usize(map, "trainer.epochs")? {
        train.epochs = n;
    }
    if let Some(n) = take_usize(map, "trainer.batch_size")? {
        train.batch_size = n;
    }
    let lr = take_f64(map, "trainer.learning_rate")?.unwrap_or(1e-3);
    train.optimizer = match map.take("trainer.optimizer") {
        None => OptimizerKind::adam(lr),
        Some((value, line)) => match value.as_str() {
            "adam" => OptimizerKind::adam(lr),
            "sgd" => OptimizerKind::Sgd { lr },
            other => {
                return Err(map.err(
                    line,
                    format!("trainer.optimizer `{other}` is not one of adam, sgd"),
                ));
            }
        },
    };
    if let Some(n) = take_usize(map, "trainer.patience")? {
        train.patience = n;
    }
    if let Some(s) = take_u64(map, "trainer.seed")? {
        train.seed = s;
    }

    let source = match map.take("data.source") {
        None => return Err(map.missing("data.source")),
        Some((value, line)) => match value.as_str() {
            "one-hot" | "random-binary" | "blob" => {
                let n =
                    take_usize(map, "data.n")?.ok_or_else(|| map.missing("data.n"))?;
                let d =
                    take_usize(map, "data.d")?.ok_or_else(|| map.missing("data.d"))?;
                let seed = take_u64(map, "data.seed")?.unwrap_or(0);
                match value.as_str() {
                    "one-hot" => DataSource::OneHot { n, d, seed },
                    "random-binary" => DataSource::RandomBinary { n, d, seed },
                    _ => DataSource::Blob { n, d, seed },
                }
            }
            "idx" => {
                let images = map
                    .take("data.images")
                    .ok_or_else(|| map.missing("data.images"))?
                    .0;
                let labels = map.take("data.labels").map(|(v, _)| PathBuf::from(v));
                DataSource::Idx {
                    images: PathBuf::from(images),
                    labels,
                }
            }
            other => {
                return Err(map.err(
                    line,
                    format!(
                        "data.source `{other}` is not one of one-hot, random-binary, blob, idx"
                    ),
                ));
            }
        },
    };
    let valid_fraction =
        take_f64(map, "data.valid_fraction")?.unwrap_or(DEFAULT_VALID_FRACTION);

    let output_dir = map
        .take("output.dir")
        .map(|(v, _)| PathBuf::from(v))
        .unwrap_or_else(|| PathBuf::from("runs"));
    let eval_draws = take_usize(map, "output.eval_draws")?.unwrap_or(DEFAULT_EVAL_DRAWS);

    Ok(RunConfig {
        train,
        data: DataConfig {
            source,
            valid_fraction,
        },
        output_dir,
        eval_draws,
    })
}
