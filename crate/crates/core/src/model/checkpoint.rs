use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use sha2::{Digest, Sha256};

use super::config::ModelConfig;
use super::params::Parameters;
use super::tensor::Tensor;
use super::ModelError;

pub const CHECKPOINT_MAGIC: &str = "ASPECTFORGE-CHECKPOINT v1";

/// Parameters plus free-form metadata (vocabulary fingerprint, epoch, ...).
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub params: Parameters,
    pub meta: BTreeMap<String, String>,
}

fn bad(msg: impl Into<String>) -> ModelError {
    ModelError::Checkpoint(msg.into())
}

/// Layout: magic line, `header-bytes N` line, `N` bytes of text header with
/// `[config]`, `[meta]` and `[tensors]` sections, then little-endian `f64` data.
pub fn write_checkpoint<W: Write>(
    mut out: W,
    params: &Parameters,
    meta: &BTreeMap<String, String>,
) -> Result<(), ModelError> {
    for (k, v) in meta {
        if k.contains(['=', '\n']) || v.contains('\n') || k == "data-sha256" {
            return Err(bad(format!("unusable meta key {k:?}")));
        }
    }
    let mut data = Vec::with_capacity(params.scalar_count() as usize * 8);
    let mut manifest = String::new();
    let mut offset = 0usize;
    for (name, tensor) in params.named() {
        let shape: Vec<String> = tensor.shape().iter().map(ToString::to_string).collect();
        manifest.push_str(&format!("{name}\t{}\t{offset}\t{}\n", shape.join("x"), tensor.numel()));
        offset += tensor.numel();
        for v in tensor.data() {
            data.extend_from_slice(&v.to_le_bytes());
        }
    }
    let mut header = String::from("[config]\n");
    header.push_str(&params.config().to_kv());
    header.push_str("[meta]\n");
    for (k, v) in meta {
        header.push_str(&format!("{k}={v}\n"));
    }
    header.push_str(&format!("data-sha256={}\n", hex::encode(Sha256::digest(&data))));
    header.push_str("[tensors]\n");
    header.push_str(&manifest);

    let io = |e: std::io::Error| bad(e.to_string());
    writeln!(out, "{CHECKPOINT_MAGIC}").map_err(io)?;
    writeln!(out, "header-bytes {}", header.len()).map_err(io)?;
    out.write_all(header.as_bytes()).map_err(io)?;
    out.write_all(&data).map_err(io)?;
    out.flush().map_err(io)
}

fn take_line<'a>(bytes: &'a [u8], pos: &mut usize) -> Result<&'a str, ModelError> {
    let rest = &bytes[*pos..];
    let end = rest
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| bad("truncated preamble"))?;
    *pos += end + 1;
    std::str::from_utf8(&rest[..end]).map_err(|_| bad("preamble is not UTF-8"))
}

pub fn read_checkpoint(bytes: &[u8]) -> Result<Checkpoint, ModelError> {
    let mut pos = 0;
    if take_line(bytes, &mut pos)? != CHECKPOINT_MAGIC {
        return Err(bad("not a checkpoint file (bad magic line)"));
    }
    let header_len: usize = take_line(bytes, &mut pos)?
        .strip_prefix("header-bytes ")
        .and_then(|n| n.parse().ok())
        .ok_or_else(|| bad("missing header-bytes line"))?;
    let header_end = pos
        .checked_add(header_len)
        .filter(|&e| e <= bytes.len())
        .ok_or_else(|| bad("truncated header"))?;
    let header = std::str::from_utf8(&bytes[pos..header_end]).map_err(|_| bad("header is not UTF-8"))?;
    let data = &bytes[header_end..];
    if !data.len().is_multiple_of(8) {
        return Err(bad(format!(
            "data section of {} bytes is not a whole number of f64",
            data.len()
        )));
    }

    let mut section = "";
    let mut config_kv = BTreeMap::new();
    let mut meta = BTreeMap::new();
    let mut manifest = Vec::new();
    for line in header.lines() {
        if line.starts_with('[') {
            section = line;
            continue;
        }
        match section {
            "[config]" | "[meta]" => {
                let (k, v) = line
                    .split_once('=')
                    .ok_or_else(|| bad(format!("malformed line {line:?}")))?;
                let map = if section == "[config]" {
                    &mut config_kv
                } else {
                    &mut meta
                };
                map.insert(k.to_string(), v.to_string());
            }
            "[tensors]" => manifest.push(line),
            _ => return Err(bad(format!("line {line:?} outside any section"))),
        }
    }
    let expected_hash = meta.remove("data-sha256").ok_or_else(|| bad("missing data-sha256"))?;
    let actual_hash = hex::encode(Sha256::digest(data));
    if expected_hash != actual_hash {
        return Err(bad(format!(
            "data hash mismatch: header {expected_hash}, data {actual_hash}"
        )));
    }
    let config = ModelConfig::from_kv(&config_kv)?;

    let values: Vec<f64> = data
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    let mut named = Vec::with_capacity(manifest.len());
    for line in manifest {
        let fields: Vec<&str> = line.split('\t').collect();
        let [name, shape, offset, count] = fields[..] else {
            return Err(bad(format!("malformed tensor line {line:?}")));
        };
        let parse = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| bad(format!("bad number {s:?} in {line:?}")))
        };
        let shape = shape.split('x').map(parse).collect::<Result<Vec<_>, _>>()?;
        let (offset, count) = (parse(offset)?, parse(count)?);
        let slice = offset
            .checked_add(count)
            .and_then(|end| values.get(offset..end))
            .ok_or_else(|| bad(format!("tensor {name} extends past the data section")))?;
        named.push((name.to_string(), Tensor::new(shape, slice.to_vec())?));
    }
    let params = Parameters::from_named(&config, named)?;
    if params.scalar_count() as usize != values.len() {
        return Err(bad("data section has unreferenced values"));
    }
    Ok(Checkpoint { params, meta })
}

/// Writes atomically through a sibling temporary file.
pub fn save_checkpoint(path: &Path, params: &Parameters, meta: &BTreeMap<String, String>) -> Result<(), ModelError> {
    let tmp = path.with_extension("ckpt.tmp");
    let file = std::fs::File::create(&tmp).map_err(|e| bad(format!("{}: {e}", tmp.display())))?;
    write_checkpoint(std::io::BufWriter::new(file), params, meta)?;
    std::fs::rename(&tmp, path).map_err(|e| bad(format!("{}: {e}", path.display())))
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint, ModelError> {
    let bytes = std::fs::read(path).map_err(|e| bad(format!("{}: {e}", path.display())))?;
    read_checkpoint(&bytes)
}
