//! Single-file weight format.
//!
//! Layout: the magic bytes `HYPW`, a little-endian `u32` format version, a
//! `u32` header length, a JSON header listing every parameter (name, shape,
//! kind, curvature), then one little-endian `f64` buffer per parameter in
//! header order. Manifold parameters store only their spatial columns; the
//! time column is recomputed on load.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::autodiff::{ParamKind, ParamStore};
use crate::error::{Error, Result};
use crate::lorentz::{Curvature, LorentzPoint};
use crate::matrix::Matrix;

pub const WEIGHTS_MAGIC: &[u8; 4] = b"HYPW";
pub const WEIGHTS_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    params: Vec<Entry>,
}

#[derive(Debug, Serialize, Deserialize)]
struct Entry {
    name: String,
    rows: usize,
    cols: usize,
    kind: String,
    curvature: Option<f64>,
}

pub fn save_weights(store: &ParamStore, path: &Path) -> Result<()> {
    let mut buf = Vec::new();
    write_weights(store, &mut buf)?;
    std::fs::write(path, buf)?;
    Ok(())
}

pub fn write_weights<W: Write>(store: &ParamStore, mut w: W) -> Result<()> {
    let header = Header {
        params: store
            .iter()
            .map(|p| Entry {
                name: p.name.clone(),
                rows: p.value.rows(),
                cols: p.value.cols(),
                kind: match p.kind {
                    ParamKind::Euclidean => "euclidean".into(),
                    ParamKind::Manifold(_) => "manifold".into(),
                },
                curvature: match p.kind {
                    ParamKind::Euclidean => None,
                    ParamKind::Manifold(k) => Some(k.value()),
                },
            })
            .collect(),
    };
    let json = serde_json::to_vec(&header).map_err(|e| Error::Format(e.to_string()))?;
    w.write_all(WEIGHTS_MAGIC)?;
    w.write_all(&WEIGHTS_VERSION.to_le_bytes())?;
    w.write_all(&(json.len() as u32).to_le_bytes())?;
    w.write_all(&json)?;
    for p in store.iter() {
        let skip = usize::from(matches!(p.kind, ParamKind::Manifold(_)));
        for r in 0..p.value.rows() {
            for &x in &p.value.row(r)[skip..] {
                w.write_all(&x.to_le_bytes())?;
            }
        }
    }
    Ok(())
}

/// Reads a weight file into a fresh store (gradients zeroed).
pub fn load_weights(path: &Path) -> Result<ParamStore> {
    let bytes = std::fs::read(path)?;
    read_weights(&mut bytes.as_slice())
}

pub fn read_weights<R: Read>(mut r: R) -> Result<ParamStore> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != WEIGHTS_MAGIC {
        return Err(Error::Format("not a weight file".into()));
    }
    let mut word = [0u8; 4];
    r.read_exact(&mut word)?;
    let version = u32::from_le_bytes(word);
    if version != WEIGHTS_VERSION {
        return Err(Error::Format(format!("unsupported weight format version {version}")));
    }
    r.read_exact(&mut word)?;
    let mut json = vec![0u8; u32::from_le_bytes(word) as usize];
    r.read_exact(&mut json)?;
    let header: Header = serde_json::from_slice(&json).map_err(|e| Error::Format(e.to_string()))?;
    let mut store = ParamStore::new();
    let mut word8 = [0u8; 8];
    for e in header.params {
        let kind = match (e.kind.as_str(), e.curvature) {
            ("euclidean", None) => ParamKind::Euclidean,
            ("manifold", Some(k)) => ParamKind::Manifold(Curvature::new(k)?),
            _ => return Err(Error::Format(format!("bad kind for parameter `{}`", e.name))),
        };
        let manifold = matches!(kind, ParamKind::Manifold(_));
        if manifold && e.cols < 2 {
            return Err(Error::Format(format!("manifold parameter `{}` needs at least 2 columns", e.name)));
        }
        let stored = if manifold { e.cols - 1 } else { e.cols };
        let mut value = Matrix::zeros(e.rows, e.cols);
        for row in 0..e.rows {
            let mut vals = Vec::with_capacity(stored);
            for _ in 0..stored {
                r.read_exact(&mut word8)?;
                let x = f64::from_le_bytes(word8);
                if !x.is_finite() {
                    return Err(Error::Format(format!("non-finite value in `{}`", e.name)));
                }
                vals.push(x);
            }
            match kind {
                ParamKind::Manifold(k) => {
                    let p = LorentzPoint::from_spatial(&vals, k);
                    value.row_mut(row).copy_from_slice(p.coords());
                }
                ParamKind::Euclidean => value.row_mut(row).copy_from_slice(&vals),
            }
        }
        store.add(e.name, value, kind);
    }
    let mut rest = Vec::new();
    r.read_to_end(&mut rest)?;
    if !rest.is_empty() {
        return Err(Error::Format(format!("{} trailing bytes after weights", rest.len())));
    }
    Ok(store)
}

/// Loads a weight file into an existing store, checking that names, shapes
/// and kinds match parameter by parameter.
pub fn load_weights_into(store: &mut ParamStore, path: &Path) -> Result<()> {
    let loaded = load_weights(path)?;
    if loaded.len() != store.len() {
        return Err(Error::Format(format!("expected {} parameters, file has {}", store.len(), loaded.len())));
    }
    for (dst, src) in store.iter_mut().zip(loaded.iter()) {
        if dst.name != src.name || dst.value.shape() != src.value.shape() || dst.kind != src.kind {
            return Err(Error::Format(format!(
                "parameter mismatch: `{}` {:?} vs `{}` {:?}",
                dst.name,
                dst.value.shape(),
                src.name,
                src.value.shape()
            )));
        }
        dst.value = src.value.clone();
    }
    Ok(())
}
