//! Matrix CSV format and mask persistence.
//!
//! Matrices are plain rows of comma-separated decimal literals with no
//! header. Values are written with Rust's shortest round-trip formatting,
//! so save/load is bit-exact. Masks additionally get a `<stem>.meta.json`
//! sidecar recording `{family, params, seed}`.

use masksep_core::mask::{Mask, MaskFamily, MaskParams};
use masksep_core::matrix::Matrix;
use serde_json::json;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path} line {line}: expected {expected} columns, found {found}")]
    Ragged {
        path: PathBuf,
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("{path} line {line}: `{token}` is not a number")]
    Parse {
        path: PathBuf,
        line: usize,
        token: String,
    },
    #[error("{path}: file holds no matrix rows")]
    Empty { path: PathBuf },
    #[error("{path} line {line}: non-finite value {value}")]
    NonFinite {
        path: PathBuf,
        line: usize,
        value: f64,
    },
    #[error(transparent)]
    Core(#[from] masksep_core::Error),
}

fn file_err(path: &Path) -> impl FnOnce(std::io::Error) -> IoError + '_ {
    move |source| IoError::File {
        path: path.to_path_buf(),
        source,
    }
}

pub fn read_matrix_csv(path: &Path) -> Result<Matrix, IoError> {
    let text = fs::read_to_string(path).map_err(file_err(path))?;
    let text = text.strip_prefix('\u{feff}').unwrap_or(&text);
    let mut data = Vec::new();
    let mut cols = None;
    let mut rows = 0usize;
    for (idx, raw_line) in text.lines().enumerate() {
        let line = raw_line.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let line_no = idx + 1;
        let mut width = 0usize;
        for token in line.split(',') {
            let token = token.trim();
            let value: f64 = token.parse().map_err(|_| IoError::Parse {
                path: path.to_path_buf(),
                line: line_no,
                token: token.to_string(),
            })?;
            if !value.is_finite() {
                return Err(IoError::NonFinite {
                    path: path.to_path_buf(),
                    line: line_no,
                    value,
                });
            }
            data.push(value);
            width += 1;
        }
        match cols {
            None => cols = Some(width),
            Some(expected) if expected != width => {
                return Err(IoError::Ragged {
                    path: path.to_path_buf(),
                    line: line_no,
                    expected,
                    found: width,
                });
            }
            _ => {}
        }
        rows += 1;
    }
    let cols = cols.ok_or_else(|| IoError::Empty {
        path: path.to_path_buf(),
    })?;
    Ok(Matrix::from_vec(rows, cols, data)?)
}

pub fn write_matrix_csv(path: &Path, matrix: &Matrix) -> Result<(), IoError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(file_err(path))?;
        }
    }
    let mut out = String::new();
    for i in 0..matrix.rows() {
        let row = matrix.row(i);
        for (j, value) in row.iter().enumerate() {
            if j > 0 {
                out.push(',');
            }
            out.push_str(&format!("{value}"));
        }
        out.push('\n');
    }
    let mut file = fs::File::create(path).map_err(file_err(path))?;
    file.write_all(out.as_bytes()).map_err(file_err(path))?;
    Ok(())
}

fn family_name(family: MaskFamily) -> &'static str {
    match family {
        MaskFamily::Identity => "identity",
        MaskFamily::BlurCirculant => "blur_circulant",
        MaskFamily::Gaussian => "gaussian",
        MaskFamily::EdaConvolution => "eda_convolution",
        MaskFamily::OrthogonalColumns => "orthogonal_columns",
        MaskFamily::Custom => "custom",
    }
}

fn params_json(params: &MaskParams) -> serde_json::Value {
    match params {
        MaskParams::None => json!({}),
        MaskParams::Blur { p } => json!({ "p": p }),
        MaskParams::Gaussian { m, p } => json!({ "m": m, "p": p }),
        MaskParams::Eda {
            tau1,
            tau2,
            rate,
            window,
            m,
            p,
        } => json!({
            "tau1": tau1, "tau2": tau2, "rate": rate,
            "window": window, "m": m, "p": p,
        }),
        MaskParams::OrthogonalColumns { m, p, scales } => {
            json!({ "m": m, "p": p, "scales": scales })
        }
    }
}

/// Sidecar path for a mask CSV: `H.csv -> H.meta.json`.
pub fn sidecar_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("meta.json")
}

/// Write the mask matrix as CSV plus a JSON metadata sidecar.
pub fn save_mask(mask: &Mask, csv_path: &Path) -> Result<(), IoError> {
    write_matrix_csv(csv_path, mask.h())?;
    let meta = json!({
        "family": family_name(mask.family()),
        "params": params_json(mask.params()),
        "seed": mask.seed(),
    });
    let side = sidecar_path(csv_path);
    fs::write(&side, format!("{:#}\n", meta)).map_err(file_err(&side))?;
    Ok(())
}

/// Read a mask back from CSV. The matrix round-trips bit-exactly; the
/// family is recorded as `custom` regardless of any sidecar.
pub fn load_mask(csv_path: &Path) -> Result<Mask, IoError> {
    let h = read_matrix_csv(csv_path)?;
    Ok(Mask::custom(h)?)
}

/// Write an instance as the CSV triple S0/L0/M0 plus a JSON sidecar
/// describing how it was generated.
pub fn save_instance(
    dir: &Path,
    s0: &Matrix,
    l0: &Matrix,
    m0: &Matrix,
    sidecar: &serde_json::Value,
) -> Result<(), IoError> {
    write_matrix_csv(&dir.join("S0.csv"), s0)?;
    write_matrix_csv(&dir.join("L0.csv"), l0)?;
    write_matrix_csv(&dir.join("M0.csv"), m0)?;
    let path = dir.join("instance.json");
    fs::write(&path, format!("{sidecar:#}\n")).map_err(file_err(&path))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use masksep_core::mask::build_gaussian_mask;

    #[test]
    fn round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("gauss.csv");
        let mask = build_gaussian_mask(7, 5, 321).unwrap();
        save_mask(&mask, &path).unwrap();
        let loaded = load_mask(&path).unwrap();
        assert_eq!(loaded.h().shape(), (7, 5));
        assert_eq!(loaded.family(), MaskFamily::Custom);
        let a = mask.h().data();
        let b = loaded.h().data();
        for (x, y) in a.iter().zip(b.iter()) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
        assert!(sidecar_path(&path).exists());
    }

    #[test]
    fn identity_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("eye.csv");
        write_matrix_csv(&path, &Matrix::identity(3)).unwrap();
        assert_eq!(read_matrix_csv(&path).unwrap(), Matrix::identity(3));
    }

    #[test]
    fn ragged_rows_are_rejected_with_line_number() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ragged.csv");
        fs::write(&path, "1,2,3\n4,5\n").unwrap();
        match read_matrix_csv(&path) {
            Err(IoError::Ragged { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected ragged error, got {other:?}"),
        }
    }

    #[test]
    fn non_numeric_rejected_with_line_number() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        fs::write(&path, "1,2\n3,abc\n").unwrap();
        match read_matrix_csv(&path) {
            Err(IoError::Parse { line, token, .. }) => {
                assert_eq!(line, 2);
                assert_eq!(token, "abc");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn empty_file_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.csv");
        fs::write(&path, "").unwrap();
        assert!(matches!(read_matrix_csv(&path), Err(IoError::Empty { .. })));
    }
}
