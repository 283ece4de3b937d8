//! Parameter checkpoint container.
//!
//! Binary layout, all integers little-endian:
//!
//! ```text
//! magic    8 bytes  "JSCCCKPT"
//! version  u32      currently 1
//! count    u32      number of named arrays
//! entry*   u32 name_len, name bytes (UTF-8), u32 rows, u32 cols,
//!          rows*cols f64 values (IEEE-754 bits, little-endian)
//! ```
//!
//! Values round-trip bit-exactly because they are written as raw f64 bits.
//! Model arrays are named `enc.<layer>.w`, `enc.<layer>.b`, `dec.<layer>.w`,
//! `dec.<layer>.b` and written in that order.

use crate::autodiff::Tensor;
use crate::error::{Error, Result};
use crate::model::{Layer, Mlp, Model};
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

const MAGIC: &[u8; 8] = b"JSCCCKPT";
const VERSION: u32 = 1;

fn err(path: &Path, detail: impl Into<String>) -> Error {
    Error::Checkpoint {
        path: path.display().to_string(),
        detail: detail.into(),
    }
}

/// Named arrays of a model in serialization order.
pub fn named_arrays(model: &Model) -> Vec<(String, &Tensor)> {
    let mut out = Vec::new();
    for (prefix, mlp) in [("enc", &model.encoder), ("dec", &model.decoder)] {
        for (i, layer) in mlp.layers.iter().enumerate() {
            out.push((format!("{prefix}.{i}.w"), &layer.w));
            out.push((format!("{prefix}.{i}.b"), &layer.b));
        }
    }
    out
}

pub fn save_model(path: &Path, model: &Model) -> Result<()> {
    let arrays = named_arrays(model);
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(arrays.len() as u32).to_le_bytes())?;
    for (name, tensor) in arrays {
        let bytes = name.as_bytes();
        w.write_all(&(bytes.len() as u32).to_le_bytes())?;
        w.write_all(bytes)?;
        w.write_all(&(tensor.rows as u32).to_le_bytes())?;
        w.write_all(&(tensor.cols as u32).to_le_bytes())?;
        for v in &tensor.data {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<Model> {
    let mut r = BufReader::new(File::open(path)?);

    let mut magic = [0u8; 8];
    read_exact(&mut r, &mut magic, path, "magic")?;
    if &magic != MAGIC {
        return Err(err(path, "not a checkpoint file (bad magic)"));
    }
    let version = read_u32(&mut r, path, "version")?;
    if version != VERSION {
        return Err(err(path, format!("unsupported version {version}")));
    }
    let count = read_u32(&mut r, path, "array count")? as usize;

    let mut arrays: Vec<(String, Tensor)> = Vec::with_capacity(count);
    for idx in 0..count {
        let name_len = read_u32(&mut r, path, "name length")? as usize;
        if name_len > 1024 {
            return Err(err(path, format!("array {idx}: name length {name_len}")));
        }
        let mut name_bytes = vec![0u8; name_len];
        read_exact(&mut r, &mut name_bytes, path, "array name")?;
        let name = String::from_utf8(name_bytes)
            .map_err(|_| err(path, format!("array {idx}: name is not UTF-8")))?;
        let rows = read_u32(&mut r, path, "rows")? as usize;
        let cols = read_u32(&mut r, path, "cols")? as usize;
        let mut data = vec![0.0f64; rows * cols];
        let mut buf = [0u8; 8];
        for slot in data.iter_mut() {
            read_exact(&mut r, &mut buf, path, "array data")?;
            *slot = f64::from_le_bytes(buf);
        }
        arrays.push((name, Tensor { rows, cols, data }));
    }
    let mut trailing = [0u8; 1];
    if r.read(&mut trailing)? != 0 {
        return Err(err(path, "trailing bytes after last array"));
    }

    let encoder = assemble_mlp(path, &arrays, "enc")?;
    let decoder = assemble_mlp(path, &arrays, "dec")?;
    if encoder.output_dim() != decoder.input_dim() {
        return Err(err(
            path,
            format!(
                "encoder emits {} bits but decoder expects {}",
                encoder.output_dim(),
                decoder.input_dim()
            ),
        ));
    }
    if encoder.input_dim() != decoder.output_dim() {
        return Err(err(
            path,
            format!(
                "encoder reads {} pixels but decoder emits {}",
                encoder.input_dim(),
                decoder.output_dim()
            ),
        ));
    }
    Ok(Model { encoder, decoder })
}

fn assemble_mlp(path: &Path, arrays: &[(String, Tensor)], prefix: &str) -> Result<Mlp> {
    let mut ws: Vec<Option<&Tensor>> = Vec::new();
    let mut bs: Vec<Option<&Tensor>> = Vec::new();
    for (name, tensor) in arrays {
        let Some(rest) = name.strip_prefix(prefix).and_then(|s| s.strip_prefix('.')) else {
            continue;
        };
        let Some((idx_str, kind)) = rest.split_once('.') else {
            return Err(err(path, format!("unrecognized array name {name}")));
        };
        let idx: usize = idx_str
            .parse()
            .map_err(|_| err(path, format!("unrecognized array name {name}")))?;
        let slot = match kind {
            "w" => &mut ws,
            "b" => &mut bs,
            _ => return Err(err(path, format!("unrecognized array name {name}"))),
        };
        if slot.len() <= idx {
            slot.resize(idx + 1, None);
        }
        if slot[idx].replace(tensor).is_some() {
            return Err(err(path, format!("duplicate array {name}")));
        }
    }
    if ws.is_empty() || ws.len() != bs.len() {
        return Err(err(
            path,
            format!("{prefix}: {} weight and {} bias arrays", ws.len(), bs.len()),
        ));
    }
    let mut layers = Vec::new();
    for (i, (w, b)) in ws.into_iter().zip(bs).enumerate() {
        let (Some(w), Some(b)) = (w, b) else {
            return Err(err(path, format!("{prefix}.{i}: missing w or b")));
        };
        if b.rows != 1 || b.cols != w.cols {
            return Err(err(
                path,
                format!(
                    "{prefix}.{i}: bias {}x{} does not match weight {}x{}",
                    b.rows, b.cols, w.rows, w.cols
                ),
            ));
        }
        if let Some(prev) = layers.last() {
            let prev: &Layer = prev;
            if prev.w.cols != w.rows {
                return Err(err(
                    path,
                    format!(
                        "{prefix}.{i}: input {} does not match previous output {}",
                        w.rows, prev.w.cols
                    ),
                ));
            }
        }
        layers.push(Layer {
            w: w.clone(),
            b: b.clone(),
        });
    }
    Ok(Mlp { layers })
}

fn read_u32(r: &mut impl Read, path: &Path, what: &str) -> Result<u32> {
    let mut buf = [0u8; 4];
    read_exact(r, &mut buf, path, what)?;
    Ok(u32::from_le_bytes(buf))
}

fn read_exact(r: &mut impl Read, buf: &mut [u8], path: &Path, what: &str) -> Result<()> {
    r.read_exact(buf)
        .map_err(|_| err(path, format!("truncated while reading {what}")))
}
