//! Text checkpoints.
//!
//! ```text
//! appraise-params v1
//! <parameter count>
//! <name> <trainable 0|1> <rank> <dim>...
//! <values separated by single spaces>
//! ...
//! ```
//!
//! One header line and one value line per parameter, in store order.
//! Values use Rust's shortest round-trip formatting, so a save/load cycle
//! is exact.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{NnError, ParamStore, Tensor};

const MAGIC: &str = "appraise-params v1";

pub fn params_to_text(store: &ParamStore) -> String {
    let mut out = format!("{MAGIC}\n{}\n", store.len());
    for (_, p) in store.iter() {
        let shape = p.value().shape();
        let _ = write!(out, "{} {} {}", p.name, u8::from(p.trainable), shape.len());
        for d in shape {
            let _ = write!(out, " {d}");
        }
        out.push('\n');
        let values: Vec<String> = p.value().data().iter().map(|v| v.to_string()).collect();
        out.push_str(&values.join(" "));
        out.push('\n');
    }
    out
}

pub fn params_from_text(text: &str) -> Result<ParamStore, NnError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let err = |line: usize, detail: String| NnError::Parse { line, detail };
    match lines.next() {
        Some((_, l)) if l == MAGIC => {}
        _ => return Err(err(1, format!("expected {MAGIC:?}"))),
    }
    let (ln, count) = lines.next().ok_or_else(|| err(2, "missing parameter count".into()))?;
    let count: usize = count
        .trim()
        .parse()
        .map_err(|_| err(ln, format!("bad parameter count {count:?}")))?;
    let mut store = ParamStore::new();
    for _ in 0..count {
        let (hl, header) = lines.next().ok_or_else(|| err(0, "truncated checkpoint".into()))?;
        let fields: Vec<&str> = header.split(' ').collect();
        if fields.len() < 3 {
            return Err(err(hl, format!("bad header {header:?}")));
        }
        let name = fields[0];
        let trainable = match fields[1] {
            "0" => false,
            "1" => true,
            other => return Err(err(hl, format!("bad trainable flag {other:?}"))),
        };
        let rank: usize = fields[2].parse().map_err(|_| err(hl, "bad rank".into()))?;
        if fields.len() != 3 + rank {
            return Err(err(hl, format!("rank {rank} but {} dims", fields.len() - 3)));
        }
        let shape = fields[3..]
            .iter()
            .map(|d| d.parse::<usize>().map_err(|_| err(hl, format!("bad dim {d:?}"))))
            .collect::<Result<Vec<_>, _>>()?;
        let (vl, values) = lines.next().ok_or_else(|| err(hl + 1, "missing values".into()))?;
        let data = if values.is_empty() {
            Vec::new()
        } else {
            values
                .split(' ')
                .map(|v| v.parse::<f64>().map_err(|_| err(vl, format!("bad value {v:?}"))))
                .collect::<Result<Vec<_>, _>>()?
        };
        let tensor = Tensor::new(shape, data).map_err(|e| err(vl, e.to_string()))?;
        if store.id(name).is_some() || name.is_empty() {
            return Err(err(hl, format!("invalid or duplicate name {name:?}")));
        }
        store.add(name, tensor, trainable);
    }
    Ok(store)
}

pub fn save_params(store: &ParamStore, path: impl AsRef<Path>) -> Result<(), NnError> {
    let path = path.as_ref();
    fs::write(path, params_to_text(store)).map_err(|source| NnError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn load_params(path: impl AsRef<Path>) -> Result<ParamStore, NnError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| NnError::Io {
        path: path.display().to_string(),
        source,
    })?;
    params_from_text(&text)
}
