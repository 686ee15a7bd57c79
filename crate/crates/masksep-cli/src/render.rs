//! Grayscale heatmaps of grid CSVs as binary PPM (P6).
//!
//! One pixel per (x, rank) cell: x ascending left to right, rank ascending
//! top to bottom, error 0 mapped to black and errors >= 1 clipped to
//! white. Non-finite cell values (failed solves) render as white. The
//! pixel bytes are a pure function of the CSV contents.

use crate::io::IoError;
use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HeatField {
    ErrS,
    ErrL,
}

fn file_err(path: &Path) -> impl FnOnce(std::io::Error) -> IoError + '_ {
    move |source| IoError::File {
        path: path.to_path_buf(),
        source,
    }
}

fn parse_err(path: &Path, line: usize, token: &str) -> IoError {
    IoError::Parse {
        path: path.to_path_buf(),
        line,
        token: token.to_string(),
    }
}

/// Render `grid_csv` (trial-level or aggregated) to PPM bytes.
///
/// Trial-level files carry `err_S`/`err_L` columns and are averaged per
/// cell; aggregated files carry `mean_err_S`/`mean_err_L`.
pub fn render_heatmap(grid_csv: &Path, field: HeatField) -> Result<Vec<u8>, IoError> {
    let text = fs::read_to_string(grid_csv).map_err(file_err(grid_csv))?;
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| IoError::Empty {
        path: grid_csv.to_path_buf(),
    })?;
    let columns: Vec<&str> = header.split(',').map(str::trim).collect();
    let find = |name: &str| columns.iter().position(|&c| c == name);

    let x_idx = find("sparsity_fraction")
        .or_else(|| find("events"))
        .ok_or_else(|| parse_err(grid_csv, 1, header))?;
    let rank_idx = find("rank");
    let (value_idx, averaged) = match field {
        HeatField::ErrS => match find("err_S") {
            Some(idx) => (idx, false),
            None => (
                find("mean_err_S").ok_or_else(|| parse_err(grid_csv, 1, header))?,
                true,
            ),
        },
        HeatField::ErrL => match find("err_L") {
            Some(idx) => (idx, false),
            None => (
                find("mean_err_L").ok_or_else(|| parse_err(grid_csv, 1, header))?,
                true,
            ),
        },
    };

    // cell -> (sum, count); keys ordered by (rank, x bits of sorted value)
    let mut cells: BTreeMap<(u64, u64), (f64, usize)> = BTreeMap::new();
    let mut xs: Vec<f64> = Vec::new();
    let mut ranks: Vec<u64> = Vec::new();
    for (idx, line) in lines {
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let line_no = idx + 1;
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != columns.len() {
            return Err(IoError::Ragged {
                path: grid_csv.to_path_buf(),
                line: line_no,
                expected: columns.len(),
                found: fields.len(),
            });
        }
        let x: f64 = fields[x_idx]
            .parse()
            .map_err(|_| parse_err(grid_csv, line_no, fields[x_idx]))?;
        let rank: u64 = match rank_idx {
            Some(ri) => fields[ri]
                .parse()
                .map_err(|_| parse_err(grid_csv, line_no, fields[ri]))?,
            None => 0,
        };
        let raw = fields[value_idx];
        let value: f64 = if raw == "NaN" || raw == "-NaN" {
            f64::NAN
        } else {
            raw.parse().map_err(|_| parse_err(grid_csv, line_no, raw))?
        };
        let entry = cells.entry((rank, x.to_bits())).or_insert((0.0, 0));
        entry.0 += value;
        entry.1 += 1;
        if !xs.iter().any(|&seen| seen.to_bits() == x.to_bits()) {
            xs.push(x);
        }
        if !ranks.contains(&rank) {
            ranks.push(rank);
        }
    }
    if cells.is_empty() {
        return Err(IoError::Empty {
            path: grid_csv.to_path_buf(),
        });
    }
    xs.sort_by(f64::total_cmp);
    ranks.sort_unstable();

    let width = xs.len();
    let height = ranks.len();
    let mut pixels = Vec::with_capacity(width * height * 3);
    for &rank in &ranks {
        for &x in &xs {
            let (sum, count) = cells
                .get(&(rank, x.to_bits()))
                .copied()
                .ok_or_else(|| parse_err(grid_csv, 1, "missing grid cell"))?;
            if averaged && count != 1 {
                return Err(parse_err(grid_csv, 1, "duplicate aggregated cell"));
            }
            let mean = sum / count as f64;
            let level = if mean.is_finite() {
                mean.clamp(0.0, 1.0)
            } else {
                1.0
            };
            let byte = (level * 255.0).round() as u8;
            pixels.extend_from_slice(&[byte, byte, byte]);
        }
    }

    let mut out = format!("P6\n{width} {height}\n255\n").into_bytes();
    out.extend_from_slice(&pixels);
    Ok(out)
}

pub fn render_heatmap_to_path(
    grid_csv: &Path,
    field: HeatField,
    out_image: &Path,
) -> Result<PathBuf, IoError> {
    let bytes = render_heatmap(grid_csv, field)?;
    if let Some(parent) = out_image.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(file_err(out_image))?;
        }
    }
    fs::write(out_image, bytes).map_err(file_err(out_image))?;
    Ok(out_image.to_path_buf())
}
