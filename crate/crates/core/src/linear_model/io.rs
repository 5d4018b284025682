use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use super::{Labels, LossKind, ModelWeights, Provenance};
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"UMDL";

fn provenance_lines(p: &Provenance) -> String {
    let mut map: BTreeMap<String, String> = p.extra.clone();
    map.insert("lambda".into(), format!("{:?}", p.lambda));
    map.insert("eta".into(), format!("{:?}", p.eta));
    map.insert("epochs".into(), p.epochs.to_string());
    map.insert(
        "batch_size".into(),
        p.batch_size.map_or_else(|| "full".to_string(), |b| b.to_string()),
    );
    map.insert("seed".into(), p.seed.to_string());
    map.insert("init_kind".into(), p.init_kind.clone());
    let mut out = String::new();
    for (k, v) in map {
        let _ = writeln!(out, "{k}={v}");
    }
    out
}

/// Header (`UMDL`, u32 C, u32 d, u32 loss code), row-major f64 weights, then
/// a u32-length-prefixed block of sorted `key=value` provenance lines.
pub fn write_model(model: &ModelWeights, path: &Path) -> Result<()> {
    let text = provenance_lines(&model.provenance);
    let mut out = Vec::with_capacity(16 + 8 * model.data().len() + 4 + text.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(model.rows() as u32).to_le_bytes());
    out.extend_from_slice(&(model.dim() as u32).to_le_bytes());
    out.extend_from_slice(&model.loss.code().to_le_bytes());
    for v in model.data() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out.extend_from_slice(&(text.len() as u32).to_le_bytes());
    out.extend_from_slice(text.as_bytes());
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn read_model(path: &Path) -> Result<ModelWeights> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let bad = |m: &str| Error::parse(path, m.to_string());
    if bytes.len() < 16 || &bytes[..4] != MAGIC {
        return Err(bad("not a model file (bad magic)"));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
    let rows = u32_at(4) as usize;
    let dim = u32_at(8) as usize;
    let loss = LossKind::from_code(u32_at(12)).ok_or_else(|| bad("unknown loss code"))?;
    let end = 16 + 8 * rows * dim;
    if bytes.len() < end + 4 {
        return Err(bad("truncated weights"));
    }
    let data = bytes[16..end]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let len = u32_at(end) as usize;
    if bytes.len() != end + 4 + len {
        return Err(bad("provenance length does not match file size"));
    }
    let text = std::str::from_utf8(&bytes[end + 4..]).map_err(|_| bad("provenance is not UTF-8"))?;
    let mut extra = BTreeMap::new();
    for line in text.lines() {
        let (k, v) = line.split_once('=').ok_or_else(|| bad("provenance line without `=`"))?;
        extra.insert(k.to_string(), v.to_string());
    }
    let mut take = |k: &str| extra.remove(k).ok_or_else(|| bad(&format!("provenance misses `{k}`")));
    let num = |s: String| s.parse::<f64>().map_err(|_| bad("bad number in provenance"));
    let int = |s: String| s.parse::<u64>().map_err(|_| bad("bad integer in provenance"));
    let lambda = num(take("lambda")?)?;
    let eta = num(take("eta")?)?;
    let epochs = int(take("epochs")?)? as usize;
    let batch_size = match take("batch_size")?.as_str() {
        "full" => None,
        s => Some(int(s.to_string())? as usize),
    };
    let seed = int(take("seed")?)?;
    let init_kind = take("init_kind")?;
    let provenance = Provenance {
        lambda,
        eta,
        epochs,
        batch_size,
        seed,
        init_kind,
        extra,
    };
    ModelWeights::new(rows, dim, data, loss, provenance).map_err(|e| Error::parse(path, e.to_string()))
}

/// One integer per line. Any `-1` makes the file binary (values must then be
/// ±1); otherwise classes are `0..=max`.
pub fn read_labels(path: &Path) -> Result<Labels> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut values = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let v: i64 = line
            .parse()
            .map_err(|_| Error::parse(path, format!("line {}: bad label `{line}`", lineno + 1)))?;
        values.push(v);
    }
    let parsed = if values.contains(&-1) {
        Labels::binary(values.iter().map(|&v| v as f64).collect())
    } else {
        if values.iter().any(|&v| v < 0) {
            return Err(Error::parse(path, "negative class index"));
        }
        let classes = values.iter().max().map_or(0, |&m| m as usize + 1);
        Labels::multi(values.iter().map(|&v| v as usize).collect(), classes)
    };
    parsed.map_err(|e| Error::parse(path, e.to_string()))
}

pub fn write_labels(labels: &Labels, path: &Path) -> Result<()> {
    let mut out = String::new();
    match labels {
        Labels::Binary(y) => y.iter().for_each(|&v| {
            let _ = writeln!(out, "{}", v as i64);
        }),
        Labels::Multi { y, .. } => y.iter().for_each(|&v| {
            let _ = writeln!(out, "{v}");
        }),
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}
