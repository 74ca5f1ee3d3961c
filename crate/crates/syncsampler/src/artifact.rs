//! Artifact emission: the canonical results CSV, binary PPM images with
//! value-range sidecars, per-run directories, and content manifests.
//!
//! Everything written here is byte-deterministic given identical inputs:
//! floats are serialized with Rust's shortest-round-trip `Display`, rows are
//! emitted in a fixed order, and manifests list files sorted by path.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::experiment::Row;
use crate::sample::TraceRow;

/// Header of the canonical results CSV.
pub const CSV_HEADER: &str = "experiment,variant,seed,step,t,metric,value";

/// Serialize result rows: header + one metric point per line, UTF-8, `.`
/// decimal separator, `\n` newlines.
pub fn rows_to_csv(rows: &[Row]) -> String {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.experiment, r.variant, r.seed, r.step, r.t, r.metric, r.value
        ));
    }
    out
}

pub fn write_rows_csv(path: &Path, rows: &[Row]) -> Result<()> {
    fs::write(path, rows_to_csv(rows))?;
    Ok(())
}

/// Serialize a sampler trace: one line per (outer step, view). The wall-time
/// column is informational and excluded from byte-reproducibility claims —
/// compare traces with it stripped.
pub fn trace_to_csv(trace: &[TraceRow]) -> String {
    let mut out = String::from("step,t,view,residual,measurement_error,wall_ms\n");
    for row in trace {
        for (view, resid) in row.view_residuals.iter().enumerate() {
            let me = row
                .measurement_error
                .map(|v| v.to_string())
                .unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                row.step, row.t, view, resid, me, row.wall_ms
            ));
        }
    }
    out
}

pub fn write_trace_csv(path: &Path, trace: &[TraceRow]) -> Result<()> {
    fs::write(path, trace_to_csv(trace))?;
    Ok(())
}

/// Grayscale P6 PPM bytes for a row-major value grid, plus the (min, max)
/// used for normalization. Values map linearly min→0, max→255 (half-away
/// rounding); constant grids map to 128.
pub fn render_ppm(values: &[f64], width: usize, height: usize) -> Result<(Vec<u8>, f64, f64)> {
    if values.len() != width * height {
        return Err(Error::runtime(format!(
            "image shape {}x{} does not match {} values",
            width,
            height,
            values.len()
        )));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::runtime("image values must be finite"));
    }
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let span = max - min;
    let mut bytes = format!("P6\n{width} {height}\n255\n").into_bytes();
    bytes.reserve(3 * values.len());
    for &v in values {
        let level = if span > 0.0 {
            ((v - min) / span * 255.0).round().clamp(0.0, 255.0) as u8
        } else {
            128
        };
        bytes.extend_from_slice(&[level, level, level]);
    }
    Ok((bytes, min, max))
}

/// Write `{stem}.ppm` and a `{stem}.json` sidecar recording the
/// normalization range and shape. Returns the two paths.
pub fn write_ppm_with_sidecar(
    dir: &Path,
    stem: &str,
    values: &[f64],
    width: usize,
    height: usize,
) -> Result<Vec<PathBuf>> {
    let (bytes, min, max) = render_ppm(values, width, height)?;
    let ppm = dir.join(format!("{stem}.ppm"));
    fs::write(&ppm, bytes)?;
    let sidecar = dir.join(format!("{stem}.json"));
    let meta = serde_json::json!({
        "width": width,
        "height": height,
        "min": min,
        "max": max,
        "normalization": "linear min->0 max->255; constant grids map to 128",
    });
    fs::write(&sidecar, serde_json::to_string_pretty(&meta)? + "\n")?;
    Ok(vec![ppm, sidecar])
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(bytes);
    let digest = h.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Short config fingerprint used in run ids.
pub fn config_hash(canonical_json: &str) -> String {
    sha256_hex(canonical_json.as_bytes())
}

/// Allocate `out_root/{counter}-{hash8}` with the smallest unused zero-padded
/// counter. Prior runs are never overwritten: creation is by exclusive
/// `create_dir`, retrying on collision.
pub fn allocate_run_dir(out_root: &Path, cfg_hash: &str) -> Result<(PathBuf, String)> {
    fs::create_dir_all(out_root)?;
    let mut next = 1u32;
    for entry in fs::read_dir(out_root)? {
        let name = entry?.file_name();
        let name = name.to_string_lossy().to_string();
        if let Some((counter, _)) = name.split_once('-') {
            if let Ok(c) = counter.parse::<u32>() {
                next = next.max(c + 1);
            }
        }
    }
    let prefix: String = cfg_hash.chars().take(8).collect();
    loop {
        let run_id = format!("{next:04}-{prefix}");
        let dir = out_root.join(&run_id);
        match fs::create_dir(&dir) {
            Ok(()) => return Ok((dir, run_id)),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {
                next += 1;
            }
            Err(e) => return Err(e.into()),
        }
    }
}

/// Write `MANIFEST.txt` listing `sha256  size  path` for every file under
/// the run directory (sorted by relative path; the manifest itself is
/// excluded). A partially written run is thereby evident: files missing
/// from the manifest arrived after it, files listed but absent were lost.
pub fn write_manifest(run_dir: &Path) -> Result<PathBuf> {
    let mut files: Vec<PathBuf> = Vec::new();
    collect_files(run_dir, run_dir, &mut files)?;
    files.sort();
    let mut out = String::new();
    for rel in &files {
        if rel.as_os_str() == "MANIFEST.txt" {
            continue;
        }
        let data = fs::read(run_dir.join(rel))?;
        out.push_str(&format!(
            "{}  {}  {}\n",
            sha256_hex(&data),
            data.len(),
            rel.display()
        ));
    }
    let path = run_dir.join("MANIFEST.txt");
    let mut f = fs::File::create(&path)?;
    f.write_all(out.as_bytes())?;
    Ok(path)
}

fn collect_files(root: &Path, dir: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
    for entry in fs::read_dir(dir)? {
        let entry = entry?;
        let path = entry.path();
        if path.is_dir() {
            collect_files(root, &path, out)?;
        } else {
            let rel = path
                .strip_prefix(root)
                .map_err(|_| Error::runtime("manifest path outside run dir"))?;
            out.push(rel.to_path_buf());
        }
    }
    Ok(())
}
