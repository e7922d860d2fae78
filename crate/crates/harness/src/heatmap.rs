//! Expansion heatmaps as binary PGM.
//!
//! Pixel `(i, j)` is map cell `(x = i, y = j)`, summed over z for voxel
//! maps. Counts are log-scaled into 1..=254 so that any visited cell is
//! visibly non-black, and the solution path is drawn at 255.

use std::path::Path;

use sdd::GridMap;

use crate::error::{HarnessError, Result};
use crate::records::RunRecord;

pub const PATH_LEVEL: u8 = 255;

/// Per-cell visit counts, row-major with `y` as the row.
pub fn counts(map: &GridMap, visited: &[[f64; 3]]) -> Vec<u64> {
    let (w, h) = (map.width(), map.height());
    let mut c = vec![0u64; w * h];
    for p in visited {
        if let Some((x, y, _)) = map.cell_of(*p) {
            c[y * w + x] += 1;
        }
    }
    c
}

fn scale(count: u64, max: u64) -> u8 {
    if count == 0 {
        return 0;
    }
    let f = (1.0 + count as f64).ln() / (1.0 + max as f64).ln();
    (1.0 + f * 253.0).round().clamp(1.0, 254.0) as u8
}

fn draw_path(map: &GridMap, px: &mut [u8], path: &[[f64; 3]]) {
    let w = map.width();
    let mut mark = |p: [f64; 3]| {
        if let Some((x, y, _)) = map.cell_of(p) {
            px[y * w + x] = PATH_LEVEL;
        }
    };
    if let [only] = path {
        mark(*only);
    }
    let step = 0.25 * map.cell_size();
    for seg in path.windows(2) {
        let (a, b) = (seg[0], seg[1]);
        let len = (0..3).map(|k| (b[k] - a[k]).powi(2)).sum::<f64>().sqrt();
        let n = (len / step).ceil().max(1.0) as usize;
        for i in 0..=n {
            let t = i as f64 / n as f64;
            mark([
                a[0] + t * (b[0] - a[0]),
                a[1] + t * (b[1] - a[1]),
                a[2] + t * (b[2] - a[2]),
            ]);
        }
    }
}

/// Renders a PGM image from visited positions and an optional path.
pub fn render(map: &GridMap, visited: &[[f64; 3]], path: Option<&[[f64; 3]]>) -> Vec<u8> {
    let c = counts(map, visited);
    let max = c.iter().copied().max().unwrap_or(0);
    let mut px: Vec<u8> = c.iter().map(|&n| scale(n, max)).collect();
    if let Some(path) = path {
        draw_path(map, &mut px, path);
    }
    let mut out = format!("P5 {} {} 255\n", map.width(), map.height()).into_bytes();
    out.extend_from_slice(&px);
    out
}

/// Heatmap of one run. Fails when the run was made without visit logging.
pub fn emit_heatmap(record: &RunRecord, map: &GridMap) -> Result<Vec<u8>> {
    let visited = record.visited.as_ref().ok_or_else(|| {
        HarnessError::Heatmap(format!(
            "run `{}` has no visited states; rerun with record_visited = true",
            record.id
        ))
    })?;
    Ok(render(map, visited, record.path.as_deref()))
}

pub fn write_heatmap(path: &Path, record: &RunRecord, map: &GridMap) -> Result<()> {
    let img = emit_heatmap(record, map)?;
    std::fs::write(path, img).map_err(|e| HarnessError::io(path, e))
}
