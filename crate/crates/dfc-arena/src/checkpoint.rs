//! Policy checkpoint files.
//!
//! Layout: one text header line, then the raw parameter vector.
//!
//! ```text
//! format_version=1 d=<dim> iteration=<t> lineage=<entry;entry;...>\n
//! <d little-endian IEEE-754 f64 values>
//! ```
//!
//! Round trips are bit-exact; the loader validates the version, the header
//! keys, and the payload length, and can additionally pin the expected
//! dimension.

use std::fs::File;
use std::io::{BufReader, Read, Write};
use std::path::Path;

use dfc_core::policy::{ParamsMeta, PolicyParams};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum CheckpointError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("missing header line")]
    MissingHeader,
    #[error("header field `{0}` is missing")]
    MissingField(&'static str),
    #[error("header field `{field}` has invalid value `{value}`")]
    InvalidField { field: &'static str, value: String },
    #[error("unexpected header key `{0}`")]
    UnexpectedKey(String),
    #[error("unsupported format version {0}")]
    VersionMismatch(u32),
    #[error("checkpoint holds {found} parameters but configuration expects {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("payload truncated: expected {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },
    #[error("trailing bytes after the parameter payload")]
    TrailingBytes,
}

fn io_err(path: &Path, source: std::io::Error) -> CheckpointError {
    CheckpointError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Lineage entries are joined with `;` in the header, so entries must not
/// contain separators or whitespace.
fn sanitize(entry: &str) -> String {
    entry
        .chars()
        .map(|c| if c.is_whitespace() || c == ';' { '_' } else { c })
        .collect()
}

/// Write `params` to `path`.
pub fn save_checkpoint(
    path: &Path,
    params: &PolicyParams,
    iteration: u64,
) -> Result<(), CheckpointError> {
    let lineage = params
        .meta
        .lineage
        .iter()
        .map(|e| sanitize(e))
        .collect::<Vec<_>>()
        .join(";");
    let header = format!(
        "format_version={} d={} iteration={} lineage={}\n",
        FORMAT_VERSION,
        params.dim(),
        iteration,
        lineage
    );
    let mut file = File::create(path).map_err(|e| io_err(path, e))?;
    file.write_all(header.as_bytes()).map_err(|e| io_err(path, e))?;
    let mut payload = Vec::with_capacity(params.dim() * 8);
    for &t in &params.theta {
        payload.extend_from_slice(&t.to_le_bytes());
    }
    file.write_all(&payload).map_err(|e| io_err(path, e))?;
    Ok(())
}

/// Read a checkpoint back; `expected_dim` pins the dimension the current
/// configuration requires.
pub fn load_checkpoint(
    path: &Path,
    expected_dim: Option<usize>,
) -> Result<(PolicyParams, u64), CheckpointError> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    let mut reader = BufReader::new(file);
    let mut header = Vec::new();
    let mut byte = [0u8; 1];
    loop {
        let n = reader.read(&mut byte).map_err(|e| io_err(path, e))?;
        if n == 0 {
            return Err(CheckpointError::MissingHeader);
        }
        if byte[0] == b'\n' {
            break;
        }
        header.push(byte[0]);
        if header.len() > 1 << 20 {
            return Err(CheckpointError::MissingHeader);
        }
    }
    let header = String::from_utf8(header).map_err(|_| CheckpointError::MissingHeader)?;

    let mut version: Option<u32> = None;
    let mut dim: Option<usize> = None;
    let mut iteration: Option<u64> = None;
    let mut lineage: Option<String> = None;
    for pair in header.split(' ').filter(|s| !s.is_empty()) {
        let (key, value) = pair
            .split_once('=')
            .ok_or_else(|| CheckpointError::UnexpectedKey(pair.to_string()))?;
        match key {
            "format_version" => {
                version = Some(value.parse().map_err(|_| CheckpointError::InvalidField {
                    field: "format_version",
                    value: value.to_string(),
                })?)
            }
            "d" => {
                dim = Some(value.parse().map_err(|_| CheckpointError::InvalidField {
                    field: "d",
                    value: value.to_string(),
                })?)
            }
            "iteration" => {
                iteration = Some(value.parse().map_err(|_| CheckpointError::InvalidField {
                    field: "iteration",
                    value: value.to_string(),
                })?)
            }
            "lineage" => lineage = Some(value.to_string()),
            other => return Err(CheckpointError::UnexpectedKey(other.to_string())),
        }
    }
    let version = version.ok_or(CheckpointError::MissingField("format_version"))?;
    if version != FORMAT_VERSION {
        return Err(CheckpointError::VersionMismatch(version));
    }
    let dim = dim.ok_or(CheckpointError::MissingField("d"))?;
    let iteration = iteration.ok_or(CheckpointError::MissingField("iteration"))?;
    let lineage = lineage.ok_or(CheckpointError::MissingField("lineage"))?;
    if let Some(expected) = expected_dim {
        if expected != dim {
            return Err(CheckpointError::DimensionMismatch {
                expected,
                found: dim,
            });
        }
    }

    let mut payload = Vec::new();
    reader.read_to_end(&mut payload).map_err(|e| io_err(path, e))?;
    if payload.len() < dim * 8 {
        return Err(CheckpointError::Truncated {
            expected: dim * 8,
            found: payload.len(),
        });
    }
    if payload.len() > dim * 8 {
        return Err(CheckpointError::TrailingBytes);
    }
    let theta: Vec<f64> = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunks_exact yields 8 bytes")))
        .collect();
    let lineage: Vec<String> = if lineage.is_empty() {
        Vec::new()
    } else {
        lineage.split(';').map(String::from).collect()
    };
    let note = lineage.last().cloned().unwrap_or_else(|| "loaded".to_string());
    Ok((
        PolicyParams {
            theta,
            meta: ParamsMeta {
                feature_dim: dim,
                note,
                lineage,
            },
        },
        iteration,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use dfc_core::policy::init_params;
    use proptest::prelude::*;

    #[test]
    fn round_trip_is_bitwise() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.ckpt");
        let params = init_params(256, 3).relabel("conquer(tictactoe)");
        save_checkpoint(&path, &params, 17).unwrap();
        let (loaded, iteration) = load_checkpoint(&path, Some(256)).unwrap();
        assert_eq!(iteration, 17);
        assert_eq!(loaded.theta, params.theta);
        assert_eq!(loaded.meta.lineage, params.meta.lineage);
        assert_eq!(loaded.meta.note, "conquer(tictactoe)");
    }

    #[test]
    fn wrong_dimension_is_an_explicit_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("b.ckpt");
        save_checkpoint(&path, &init_params(64, 0), 0).unwrap();
        match load_checkpoint(&path, Some(256)) {
            Err(CheckpointError::DimensionMismatch { expected, found }) => {
                assert_eq!((expected, found), (256, 64));
            }
            other => panic!("expected dimension mismatch, got {other:?}"),
        }
    }

    #[test]
    fn corrupted_header_names_the_field() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.ckpt");
        std::fs::write(&path, b"format_version=1 d=abc iteration=0 lineage=x\n").unwrap();
        match load_checkpoint(&path, None) {
            Err(CheckpointError::InvalidField { field, .. }) => assert_eq!(field, "d"),
            other => panic!("expected invalid field, got {other:?}"),
        }
        std::fs::write(&path, b"format_version=1 iteration=0 lineage=x\n").unwrap();
        match load_checkpoint(&path, None) {
            Err(CheckpointError::MissingField(field)) => assert_eq!(field, "d"),
            other => panic!("expected missing field, got {other:?}"),
        }
        std::fs::write(&path, b"format_version=9 d=4 iteration=0 lineage=x\n").unwrap();
        assert!(matches!(
            load_checkpoint(&path, None),
            Err(CheckpointError::VersionMismatch(9))
        ));
        std::fs::write(&path, b"format_version=1 d=4 iteration=0 lineage=x bogus=1\n").unwrap();
        assert!(matches!(
            load_checkpoint(&path, None),
            Err(CheckpointError::UnexpectedKey(_))
        ));
    }

    #[test]
    fn truncated_payload_is_detected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.ckpt");
        save_checkpoint(&path, &init_params(8, 0), 0).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() - 3]).unwrap();
        assert!(matches!(
            load_checkpoint(&path, None),
            Err(CheckpointError::Truncated { .. })
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn arbitrary_finite_vectors_round_trip(values in proptest::collection::vec(-1e12f64..1e12, 1..64), iter in 0u64..1000) {
            let dir = tempfile::tempdir().unwrap();
            let path = dir.path().join("p.ckpt");
            let params = PolicyParams {
                theta: values.clone(),
                meta: ParamsMeta { feature_dim: values.len(), note: "t".into(), lineage: vec!["t".into()] },
            };
            save_checkpoint(&path, &params, iter).unwrap();
            let (loaded, it) = load_checkpoint(&path, Some(values.len())).unwrap();
            prop_assert_eq!(loaded.theta, values);
            prop_assert_eq!(it, iter);
        }
    }
}
