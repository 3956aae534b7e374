//! Fitted model plus labels, in the same header discipline as embedding
//! files:
//!
//! ```text
//! "EMBPMODL" | version u32 | layer u32 | k u32 | dim u32 | sse f64 | rng_seed u64
//!   | restart_index u32 | iterations u32 | record count u64
//!   | centroids k x dim f32 | labels record count x u16
//! ```

use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

use thiserror::Error;

use super::{AssignmentTable, ClusterModel};
use crate::binio::{write_f32s, LeReader};

pub const MODEL_MAGIC: &[u8; 8] = b"EMBPMODL";
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ModelFileError {
    #[error("bad magic, not a model file")]
    BadMagic,
    #[error("unsupported model format version {found}")]
    UnsupportedVersion { found: u32 },
    #[error("truncated header")]
    TruncatedHeader,
    #[error("truncated centroid block")]
    TruncatedCentroids,
    #[error("truncated at label {record}")]
    TruncatedLabels { record: usize },
    #[error("label {label} at record {record} is not below k = {k}")]
    LabelOutOfRange { record: usize, label: u16, k: usize },
    #[error("invalid model: {0}")]
    Invalid(String),
    #[error("trailing bytes after the last label")]
    TrailingBytes,
    #[error(transparent)]
    Io(#[from] io::Error),
}

fn check(model: &ClusterModel, labels: &AssignmentTable) -> Result<(), ModelFileError> {
    let invalid = |m: String| Err(ModelFileError::Invalid(m));
    if model.k == 0 || model.k > u16::MAX as usize {
        return invalid(format!("k = {} out of range", model.k));
    }
    if model.dim == 0 || model.centroids.len() != model.k * model.dim {
        return invalid("centroid matrix does not match k x dim".into());
    }
    if model.centroids.iter().any(|c| !c.is_finite()) {
        return invalid("non-finite centroid".into());
    }
    if !(model.sse.is_finite() && model.sse >= 0.0) {
        return invalid(format!("sse = {}", model.sse));
    }
    if let Some((record, &l)) = labels.labels.iter().enumerate().find(|(_, &l)| l as usize >= model.k) {
        return Err(ModelFileError::LabelOutOfRange {
            record,
            label: l as u16,
            k: model.k,
        });
    }
    Ok(())
}

pub fn write_model<W: Write>(
    model: &ClusterModel,
    labels: &AssignmentTable,
    out: W,
) -> Result<(), ModelFileError> {
    check(model, labels)?;
    let mut w = BufWriter::new(out);
    w.write_all(MODEL_MAGIC)?;
    w.write_all(&MODEL_VERSION.to_le_bytes())?;
    w.write_all(&model.layer.to_le_bytes())?;
    w.write_all(&(model.k as u32).to_le_bytes())?;
    w.write_all(&(model.dim as u32).to_le_bytes())?;
    w.write_all(&model.sse.to_le_bytes())?;
    w.write_all(&model.rng_seed.to_le_bytes())?;
    w.write_all(&(model.restart_index as u32).to_le_bytes())?;
    w.write_all(&(model.iterations as u32).to_le_bytes())?;
    w.write_all(&(labels.len() as u64).to_le_bytes())?;
    write_f32s(&mut w, &model.centroids)?;
    let mut buf = Vec::with_capacity(labels.len() * 2);
    for &l in &labels.labels {
        buf.extend_from_slice(&(l as u16).to_le_bytes());
    }
    w.write_all(&buf)?;
    w.flush()?;
    Ok(())
}

pub fn write_model_file(
    model: &ClusterModel,
    labels: &AssignmentTable,
    path: &Path,
) -> Result<(), ModelFileError> {
    check(model, labels)?;
    let tmp = path.with_extension("model.partial");
    let result = File::create(&tmp)
        .map_err(ModelFileError::from)
        .and_then(|f| write_model(model, labels, f));
    match result {
        Ok(()) => Ok(fs::rename(&tmp, path)?),
        Err(e) => {
            let _ = fs::remove_file(&tmp);
            Err(e)
        }
    }
}

pub fn read_model<R: Read>(source: R) -> Result<(ClusterModel, AssignmentTable), ModelFileError> {
    use ModelFileError::TruncatedHeader as TH;
    let mut r = LeReader::new(BufReader::new(source));
    if r.bytes(8)?.ok_or(TH)? != MODEL_MAGIC {
        return Err(ModelFileError::BadMagic);
    }
    let version = r.u32()?.ok_or(TH)?;
    if version != MODEL_VERSION {
        return Err(ModelFileError::UnsupportedVersion { found: version });
    }
    let layer = r.u32()?.ok_or(TH)?;
    let k = r.u32()?.ok_or(TH)? as usize;
    let dim = r.u32()?.ok_or(TH)? as usize;
    let sse = r.f64()?.ok_or(TH)?;
    let rng_seed = r.u64()?.ok_or(TH)?;
    let restart_index = r.u32()?.ok_or(TH)? as usize;
    let iterations = r.u32()?.ok_or(TH)? as usize;
    let count = r.u64()?.ok_or(TH)? as usize;
    if k == 0 || dim == 0 {
        return Err(ModelFileError::Invalid(format!("k = {k}, dim = {dim}")));
    }
    let mut centroids = Vec::with_capacity(k * dim);
    if !r.f32s(k * dim, &mut centroids)? {
        return Err(ModelFileError::TruncatedCentroids);
    }
    let mut labels = Vec::new();
    for record in 0..count {
        let l = r.u16()?.ok_or(ModelFileError::TruncatedLabels { record })?;
        labels.push(l as u32);
    }
    if !r.at_eof()? {
        return Err(ModelFileError::TrailingBytes);
    }
    let model = ClusterModel {
        layer,
        k,
        dim,
        centroids,
        sse,
        restart_index,
        rng_seed,
        iterations,
    };
    let table = AssignmentTable { k, labels };
    check(&model, &table)?;
    Ok((model, table))
}

pub fn read_model_file(path: &Path) -> Result<(ClusterModel, AssignmentTable), ModelFileError> {
    read_model(File::open(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> (ClusterModel, AssignmentTable) {
        let model = ClusterModel {
            layer: 9,
            k: 3,
            dim: 2,
            centroids: vec![0.1, -2.5, 1e-30, 3.0, f32::MAX, 7.25],
            sse: 12.345,
            restart_index: 2,
            rng_seed: u64::MAX - 3,
            iterations: 17,
        };
        let labels = AssignmentTable {
            k: 3,
            labels: vec![0, 2, 1, 1, 2],
        };
        (model, labels)
    }

    #[test]
    fn round_trip() {
        let (m, l) = sample();
        let mut buf = Vec::new();
        write_model(&m, &l, &mut buf).unwrap();
        assert_eq!(buf.len(), 8 + 4 * 4 + 8 + 8 + 4 + 4 + 8 + 6 * 4 + 5 * 2);
        let (m2, l2) = read_model(&buf[..]).unwrap();
        assert_eq!(m2, m);
        assert_eq!(l2, l);
    }

    #[test]
    fn corruption_errors() {
        let (m, l) = sample();
        let mut buf = Vec::new();
        write_model(&m, &l, &mut buf).unwrap();
        let mut bad = buf.clone();
        bad[3] ^= 0xff;
        assert!(matches!(read_model(&bad[..]), Err(ModelFileError::BadMagic)));
        assert!(matches!(read_model(&buf[..30]), Err(ModelFileError::TruncatedHeader)));
        assert!(matches!(read_model(&buf[..60]), Err(ModelFileError::TruncatedCentroids)));
        let n = buf.len();
        assert!(matches!(
            read_model(&buf[..n - 1]),
            Err(ModelFileError::TruncatedLabels { record: 4 })
        ));
        let mut bad_label = buf.clone();
        bad_label[n - 2] = 7;
        assert!(matches!(
            read_model(&bad_label[..]),
            Err(ModelFileError::LabelOutOfRange { record: 4, label: 7, k: 3 })
        ));
    }
}
