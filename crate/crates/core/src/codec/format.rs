//! `.gfm` model files.
//!
//! Layout: the magic `GFM1`, a little-endian `u32` header length, a UTF-8
//! JSON header, then the payload of little-endian `f64`s in column-major
//! order: mean (D), λ (n), U (n×n), B₀…B_L (D×k each), G (k×n), Y (k×n).
//! The header's `checksum` is the CRC-32 of the payload.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{Domain, ReducedData, StorageBudget};
use crate::error::{ensure_dims, Error, Result};
use crate::graph::GraphSpectrum;
use crate::optimizer::{FilterBank, FilterModel};

pub const MAGIC: &[u8; 4] = b"GFM1";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    version: u32,
    n: usize,
    #[serde(rename = "D")]
    dim: usize,
    k: usize,
    #[serde(rename = "L")]
    order: usize,
    checksum: u32,
    stored_scalars: u64,
    raw_scalars: u64,
    pca_scalars: u64,
}

impl Header {
    fn payload_len(&self) -> Option<usize> {
        let (n, d, k, l) = (self.n, self.dim, self.k, self.order);
        let scalars = d
            .checked_add(n)?
            .checked_add(n.checked_mul(n)?)?
            .checked_add(l.checked_add(1)?.checked_mul(d)?.checked_mul(k)?)?
            .checked_add(2usize.checked_mul(k)?.checked_mul(n)?)?;
        scalars.checked_mul(8)
    }
}

/// Everything needed to rebuild the data without the original inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct SavedModel {
    pub model: FilterModel,
    pub spectrum: GraphSpectrum,
    pub reduced: ReducedData,
    pub budget: StorageBudget,
}

fn push_all<'a>(out: &mut Vec<u8>, values: impl IntoIterator<Item = &'a f64>) {
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

pub fn save_model(
    path: impl AsRef<Path>,
    model: &FilterModel,
    spectrum: &GraphSpectrum,
    reduced: &ReducedData,
) -> Result<()> {
    model.check_spectrum(spectrum)?;
    let reduced = reduced.to_vertex(spectrum)?;
    let (n, d, k, l) = (model.n(), model.dim(), model.k(), model.order());
    ensure_dims(reduced.codes.shape() == (k, n), || {
        format!(
            "reduced data is {:?}, expected {k}x{n}",
            reduced.codes.shape()
        )
    })?;

    let mut payload = Vec::new();
    push_all(&mut payload, model.mean().iter());
    push_all(&mut payload, spectrum.eigenvalues().iter());
    push_all(&mut payload, spectrum.eigenvectors().iter());
    for tap in model.taps() {
        push_all(&mut payload, tap.iter());
    }
    push_all(&mut payload, model.coefficients().iter());
    push_all(&mut payload, reduced.codes.iter());

    let budget = StorageBudget::new(n, d, k, l);
    let header = Header {
        version: FORMAT_VERSION,
        n,
        dim: d,
        k,
        order: l,
        checksum: crc32fast::hash(&payload),
        stored_scalars: budget.stored_scalars,
        raw_scalars: budget.raw_scalars,
        pca_scalars: budget.pca_scalars,
    };
    let header = serde_json::to_vec(&header).expect("header serializes");

    let mut out = BufWriter::new(fs::File::create(path)?);
    out.write_all(MAGIC)?;
    out.write_all(&(header.len() as u32).to_le_bytes())?;
    out.write_all(&header)?;
    out.write_all(&payload)?;
    out.flush()?;
    Ok(())
}

struct Reader<'a> {
    bytes: &'a [u8],
}

impl Reader<'_> {
    fn floats(&mut self, count: usize) -> Vec<f64> {
        let (head, rest) = self.bytes.split_at(count * 8);
        self.bytes = rest;
        head.chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect()
    }

    fn matrix(&mut self, rows: usize, cols: usize) -> DMatrix<f64> {
        DMatrix::from_vec(rows, cols, self.floats(rows * cols))
    }
}

pub fn load_model(path: impl AsRef<Path>) -> Result<SavedModel> {
    let bytes = fs::read(path)?;
    if bytes.len() < 8 {
        return Err(Error::CorruptFile(
            "file shorter than the fixed preamble".into(),
        ));
    }
    if &bytes[..4] != MAGIC {
        return Err(Error::CorruptFile("missing GFM1 magic".into()));
    }
    let header_len = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes")) as usize;
    let header_end = 8usize
        .checked_add(header_len)
        .filter(|&e| e <= bytes.len())
        .ok_or_else(|| Error::CorruptFile("header runs past end of file".into()))?;
    let header: Header = serde_json::from_slice(&bytes[8..header_end])
        .map_err(|e| Error::CorruptFile(format!("unreadable header: {e}")))?;
    if header.version != FORMAT_VERSION {
        return Err(Error::VersionMismatch(header.version));
    }
    if header.k == 0 || header.n == 0 || header.dim == 0 {
        return Err(Error::CorruptFile("zero dimension in header".into()));
    }

    let payload = &bytes[header_end..];
    let expected = header
        .payload_len()
        .ok_or_else(|| Error::CorruptFile("header dimensions overflow".into()))?;
    if payload.len() != expected {
        return Err(Error::CorruptFile(format!(
            "payload has {} bytes, header implies {expected}",
            payload.len()
        )));
    }
    if crc32fast::hash(payload) != header.checksum {
        return Err(Error::CorruptFile("payload checksum mismatch".into()));
    }
    let budget = StorageBudget::new(header.n, header.dim, header.k, header.order);
    if budget.stored_scalars != header.stored_scalars
        || budget.raw_scalars != header.raw_scalars
        || budget.pca_scalars != header.pca_scalars
    {
        return Err(Error::CorruptFile(
            "storage accounting in header disagrees with its dimensions".into(),
        ));
    }

    let (n, d, k) = (header.n, header.dim, header.k);
    let mut r = Reader { bytes: payload };
    let mean = DVector::from_vec(r.floats(d));
    let eigenvalues = DVector::from_vec(r.floats(n));
    let eigenvectors = r.matrix(n, n);
    let taps = (0..=header.order).map(|_| r.matrix(d, k)).collect();
    let coefficients = r.matrix(k, n);
    let codes = r.matrix(k, n);

    let spectrum = GraphSpectrum::from_eigen(eigenvalues, eigenvectors)?;
    let model = FilterModel::new(
        FilterBank { taps, coefficients },
        mean,
        spectrum.fingerprint(),
    )?;
    Ok(SavedModel {
        model,
        spectrum,
        reduced: ReducedData {
            codes,
            domain: Domain::Vertex,
        },
        budget,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::reduce;
    use crate::graph::eigendecompose;
    use crate::optimizer::{fit, FitOptions};
    use crate::spectral::center;

    fn trained() -> (FilterModel, GraphSpectrum, ReducedData) {
        let x = DMatrix::from_fn(4, 5, |r, c| {
            ((r * 7 + c * 3) % 5) as f64 - 1.7 + 0.1 * c as f64
        });
        let ds = center(&x).unwrap();
        let s = DMatrix::from_fn(5, 5, |i, j| {
            if i == j {
                0.0
            } else {
                1.0 / (1.0 + (i as f64 - j as f64).abs())
            }
        });
        let spec = eigendecompose(&s).unwrap();
        let run = fit(
            &ds,
            &spec,
            2,
            1,
            &FitOptions {
                epsilon: None,
                max_iters: 5,
            },
        )
        .unwrap();
        let y = reduce(&run.model, &ds, &spec, &run.cache).unwrap();
        (run.model, spec, y)
    }

    fn bits(m: &DMatrix<f64>) -> Vec<u64> {
        m.iter().map(|v| v.to_bits()).collect()
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let (model, spec, y) = trained();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.gfm");
        save_model(&path, &model, &spec, &y).unwrap();
        let saved = load_model(&path).unwrap();
        assert_eq!(saved.model, model);
        for (a, b) in saved.model.taps().iter().zip(model.taps()) {
            assert_eq!(bits(a), bits(b));
        }
        assert_eq!(
            bits(saved.spectrum.eigenvectors()),
            bits(spec.eigenvectors())
        );
        assert_eq!(bits(&saved.reduced.codes), bits(&y.codes));
        assert_eq!(saved.budget, StorageBudget::new(5, 4, 2, 1));
    }

    #[test]
    fn truncated_file_is_corrupt() {
        let (model, spec, y) = trained();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.gfm");
        save_model(&path, &model, &spec, &y).unwrap();
        let bytes = fs::read(&path).unwrap();
        for cut in [3, 10, bytes.len() - 1] {
            fs::write(&path, &bytes[..cut]).unwrap();
            assert!(
                matches!(load_model(&path), Err(Error::CorruptFile(_))),
                "cut {cut}"
            );
        }
    }

    #[test]
    fn flipped_payload_bit_fails_checksum() {
        let (model, spec, y) = trained();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.gfm");
        save_model(&path, &model, &spec, &y).unwrap();
        let mut bytes = fs::read(&path).unwrap();
        let last = bytes.len() - 3;
        bytes[last] ^= 0x10;
        fs::write(&path, &bytes).unwrap();
        assert!(matches!(load_model(&path), Err(Error::CorruptFile(_))));
    }

    fn rewrite_header(path: &Path, edit: impl FnOnce(&mut serde_json::Value)) {
        let bytes = fs::read(path).unwrap();
        let len = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
        let mut header: serde_json::Value = serde_json::from_slice(&bytes[8..8 + len]).unwrap();
        edit(&mut header);
        let header = serde_json::to_vec(&header).unwrap();
        let mut out = MAGIC.to_vec();
        out.extend_from_slice(&(header.len() as u32).to_le_bytes());
        out.extend_from_slice(&header);
        out.extend_from_slice(&bytes[8 + len..]);
        fs::write(path, out).unwrap();
    }

    #[test]
    fn inconsistent_storage_field_is_corrupt() {
        let (model, spec, y) = trained();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.gfm");
        save_model(&path, &model, &spec, &y).unwrap();
        rewrite_header(&path, |h| h["stored_scalars"] = serde_json::json!(12345));
        assert!(matches!(load_model(&path), Err(Error::CorruptFile(_))));
    }

    #[test]
    fn unknown_version_is_reported() {
        let (model, spec, y) = trained();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.gfm");
        save_model(&path, &model, &spec, &y).unwrap();
        rewrite_header(&path, |h| h["version"] = serde_json::json!(7));
        assert!(matches!(load_model(&path), Err(Error::VersionMismatch(7))));
    }

    #[test]
    fn header_field_names() {
        let (model, spec, y) = trained();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.gfm");
        save_model(&path, &model, &spec, &y).unwrap();
        let bytes = fs::read(&path).unwrap();
        assert_eq!(&bytes[..4], b"GFM1");
        let len = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
        let text = std::str::from_utf8(&bytes[8..8 + len]).unwrap();
        assert!(text.starts_with(r#"{"version":1,"n":5,"D":4,"k":2,"L":1,"checksum":"#));
    }
}
