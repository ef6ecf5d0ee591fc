//! Dataset readers: IDX image/label pairs and numeric CSV matrices.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;

use crate::error::{Error, Result};

pub const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
pub const IDX_LABELS_MAGIC: u32 = 0x0000_0801;

/// Images as columns (`D × N`, pixels scaled to `[0, 1]`) with their labels.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledImages {
    pub images: DMatrix<f64>,
    pub labels: Vec<u32>,
    pub rows: usize,
    pub cols: usize,
}

fn be_u32(bytes: &[u8], at: usize, path: &Path) -> Result<u32> {
    bytes
        .get(at..at + 4)
        .map(|b| u32::from_be_bytes(b.try_into().expect("4 bytes")))
        .ok_or_else(|| Error::TruncatedFile(path.to_path_buf()))
}

fn check_magic(bytes: &[u8], expected: u32, path: &Path) -> Result<()> {
    let found = be_u32(bytes, 0, path)?;
    if found != expected {
        return Err(Error::BadMagic {
            path: path.to_path_buf(),
            expected,
            found,
        });
    }
    Ok(())
}

/// Reads an IDX3 image file. Each image is flattened row-major into one
/// column and scaled by `1/255`.
pub fn load_idx_images(path: impl AsRef<Path>) -> Result<(DMatrix<f64>, usize, usize)> {
    let path = path.as_ref();
    let bytes = fs::read(path)?;
    check_magic(&bytes, IDX_IMAGES_MAGIC, path)?;
    let count = be_u32(&bytes, 4, path)? as usize;
    let rows = be_u32(&bytes, 8, path)? as usize;
    let cols = be_u32(&bytes, 12, path)? as usize;
    let dim = rows * cols;
    let pixels = bytes
        .get(16..16 + count * dim)
        .ok_or_else(|| Error::TruncatedFile(path.to_path_buf()))?;
    let images = DMatrix::from_iterator(dim, count, pixels.iter().map(|&p| p as f64 / 255.0));
    Ok((images, rows, cols))
}

pub fn load_idx_labels(path: impl AsRef<Path>) -> Result<Vec<u32>> {
    let path = path.as_ref();
    let bytes = fs::read(path)?;
    check_magic(&bytes, IDX_LABELS_MAGIC, path)?;
    let count = be_u32(&bytes, 4, path)? as usize;
    let labels = bytes
        .get(8..8 + count)
        .ok_or_else(|| Error::TruncatedFile(path.to_path_buf()))?;
    Ok(labels.iter().map(|&l| l as u32).collect())
}

/// Reads a paired IDX image and label file.
pub fn load_idx(images: impl AsRef<Path>, labels: impl AsRef<Path>) -> Result<LabeledImages> {
    let (images, rows, cols) = load_idx_images(images)?;
    let labels = load_idx_labels(labels)?;
    if labels.len() != images.ncols() {
        return Err(Error::CountMismatch {
            images: images.ncols(),
            labels: labels.len(),
        });
    }
    Ok(LabeledImages {
        images,
        labels,
        rows,
        cols,
    })
}

/// The conventional label file next to an MNIST-style image file
/// (`*-images-idx3-ubyte` → `*-labels-idx1-ubyte`).
pub fn companion_labels_path(images: &Path) -> Option<PathBuf> {
    let name = images.file_name()?.to_str()?;
    name.contains("images-idx3")
        .then(|| images.with_file_name(name.replace("images-idx3", "labels-idx1")))
}

/// Writes an IDX pair; pixel values are clamped to `[0, 1]` and quantized.
pub fn write_idx(
    images_path: impl AsRef<Path>,
    labels_path: impl AsRef<Path>,
    data: &LabeledImages,
) -> Result<()> {
    let mut img = Vec::with_capacity(16 + data.images.len());
    img.extend_from_slice(&IDX_IMAGES_MAGIC.to_be_bytes());
    img.extend_from_slice(&(data.images.ncols() as u32).to_be_bytes());
    img.extend_from_slice(&(data.rows as u32).to_be_bytes());
    img.extend_from_slice(&(data.cols as u32).to_be_bytes());
    img.extend(
        data.images
            .iter()
            .map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8),
    );
    fs::write(images_path, img)?;

    let mut lab = Vec::with_capacity(8 + data.labels.len());
    lab.extend_from_slice(&IDX_LABELS_MAGIC.to_be_bytes());
    lab.extend_from_slice(&(data.labels.len() as u32).to_be_bytes());
    lab.extend(data.labels.iter().map(|&l| l as u8));
    fs::write(labels_path, lab)?;
    Ok(())
}

fn parse_rows(path: &Path) -> Result<Vec<Vec<f64>>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::Io(io),
            other => Error::Parse {
                row: 0,
                col: 0,
                msg: format!("{other:?}"),
            },
        })?;

    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (r, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Parse {
            row: r + 1,
            col: 0,
            msg: e.to_string(),
        })?;
        let mut values = Vec::with_capacity(record.len());
        for (c, field) in record.iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| Error::Parse {
                row: r + 1,
                col: c + 1,
                msg: format!("`{field}` is not a number"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    row: r + 1,
                    col: c + 1,
                    msg: format!("non-finite value `{field}`"),
                });
            }
            values.push(v);
        }
        if let Some(first) = rows.first() {
            if values.len() != first.len() {
                return Err(Error::Parse {
                    row: r + 1,
                    col: values.len().min(first.len()) + 1,
                    msg: format!("expected {} fields, found {}", first.len(), values.len()),
                });
            }
        }
        rows.push(values);
    }
    if rows.is_empty() {
        return Err(Error::Parse {
            row: 1,
            col: 1,
            msg: "empty file".into(),
        });
    }
    Ok(rows)
}

fn to_matrix(rows: &[Vec<f64>]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), rows[0].len(), |r, c| rows[r][c])
}

/// Rectangular numeric CSV, one data vector per column. Row and column
/// numbers in errors are 1-based.
pub fn load_csv_matrix(path: impl AsRef<Path>) -> Result<DMatrix<f64>> {
    Ok(to_matrix(&parse_rows(path.as_ref())?))
}

/// Like [`load_csv_matrix`], with nonnegative integer class labels in the
/// first row.
pub fn load_labeled_csv(path: impl AsRef<Path>) -> Result<(DMatrix<f64>, Vec<u32>)> {
    let rows = parse_rows(path.as_ref())?;
    if rows.len() < 2 {
        return Err(Error::Parse {
            row: 2,
            col: 1,
            msg: "labeled CSV needs a label row and at least one data row".into(),
        });
    }
    let labels = rows[0]
        .iter()
        .enumerate()
        .map(|(c, &v)| {
            if v >= 0.0 && v.fract() == 0.0 && v <= u32::MAX as f64 {
                Ok(v as u32)
            } else {
                Err(Error::Parse {
                    row: 1,
                    col: c + 1,
                    msg: format!("label `{v}` is not a nonnegative integer"),
                })
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((to_matrix(&rows[1..]), labels))
}

/// Writes `m` row by row using the shortest representation that parses back
/// to the same `f64`.
pub fn write_csv_matrix(path: impl AsRef<Path>, m: &DMatrix<f64>) -> Result<()> {
    let mut out = std::io::BufWriter::new(fs::File::create(path)?);
    for row in m.row_iter() {
        let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        writeln!(out, "{}", line.join(","))?;
    }
    out.flush()?;
    Ok(())
}
