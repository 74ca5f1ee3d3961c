//! Canonical↔instance projections `f_c`, their adjoints (splatting),
//! least-squares aggregation, and non-overlapping view-set generation.
//!
//! Three canonical spaces are supported:
//! - **Equirect**: an `Hc×Wc` latitude/longitude grid (`Wc = 2·Hc`) sampled
//!   by square views with an *equiangular* camera — pixel rays sit at uniform
//!   angular offsets in azimuth/elevation. This is the desk-scale camera
//!   model: it makes "non-overlapping views tile 360° in azimuth" literally
//!   true (a gnomonic pinhole's ray density varies by ±30% at 72° FoV, which
//!   no resolution can reconcile with unit-coverage tilings). Bilinear taps,
//!   horizontal wrap, vertical clamp.
//! - **Ring**: `n` values sampled by integer windows with wrap-around —
//!   exact adjoints with no interpolation error.
//! - **MaskedImage**: identity projection with the masked least-squares
//!   constraint `z = M⊙y + (1−M)⊙x₀` as its synchronization rule.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A square perspective view of the equirect canonical grid.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct View {
    /// Degrees in [0, 360).
    pub azimuth: f64,
    /// Degrees; positive = up.
    pub elevation: f64,
    /// Horizontal field of view, degrees in (0, 180).
    pub fov: f64,
    pub width: usize,
    pub height: usize,
    pub id: u32,
}

impl View {
    pub fn validate(&self) -> Result<()> {
        if !(self.fov > 0.0 && self.fov < 180.0) {
            return Err(Error::config("view fov must lie strictly inside (0, 180)"));
        }
        if self.width < 1 || self.height < 1 {
            return Err(Error::config("view resolution must be at least 1x1"));
        }
        if !(0.0..360.0).contains(&self.azimuth) {
            return Err(Error::config("view azimuth must lie in [0, 360)"));
        }
        Ok(())
    }
}

/// Sparse linear map from canonical texels to one view's pixels.
///
/// Row `p` of the operator holds `taps[p] = [(texel, weight), ...]`;
/// projection applies the rows, splatting applies the transpose.
#[derive(Debug, Clone)]
pub struct ViewMap {
    pub taps: Vec<Vec<(usize, f64)>>,
    pub canonical_len: usize,
}

impl ViewMap {
    pub fn n_pixels(&self) -> usize {
        self.taps.len()
    }

    /// Apply `f_c`: sample the canonical vector into view pixels.
    pub fn project(&self, z: &[f64]) -> Vec<f64> {
        self.taps
            .iter()
            .map(|row| row.iter().map(|&(k, w)| w * z[k]).sum())
            .collect()
    }

    /// Apply the adjoint `f_cᵀ`: distribute pixel values (and their weights)
    /// into the accumulator.
    pub fn splat(&self, pixels: &[f64], acc: &mut SplatAccumulator) {
        assert_eq!(pixels.len(), self.taps.len(), "pixel count mismatch");
        for (row, &v) in self.taps.iter().zip(pixels) {
            for &(k, w) in row {
                acc.value_sum[k] += w * v;
                acc.weight_sum[k] += w;
            }
        }
    }

    /// Adjoint applied to values only (no weight accumulation): returns
    /// `f_cᵀ(pixels)` as a canonical-shaped vector.
    pub fn splat_values(&self, pixels: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.canonical_len];
        for (row, &v) in self.taps.iter().zip(pixels) {
            for &(k, w) in row {
                out[k] += w * v;
            }
        }
        out
    }
}

/// Normal-equation accumulator for the least-squares aggregate.
#[derive(Debug, Clone)]
pub struct SplatAccumulator {
    pub value_sum: Vec<f64>,
    pub weight_sum: Vec<f64>,
}

impl SplatAccumulator {
    pub fn new(canonical_len: usize) -> SplatAccumulator {
        SplatAccumulator {
            value_sum: vec![0.0; canonical_len],
            weight_sum: vec![0.0; canonical_len],
        }
    }

    /// Resolve to the canonical grid: `value_sum/weight_sum` per texel,
    /// falling back to the prior (or 0) where nothing splatted.
    pub fn resolve(&self, prior: Option<&[f64]>) -> Vec<f64> {
        (0..self.value_sum.len())
            .map(|k| {
                if self.weight_sum[k] > 0.0 {
                    self.value_sum[k] / self.weight_sum[k]
                } else {
                    prior.map_or(0.0, |p| p[k])
                }
            })
            .collect()
    }
}

/// `argmin_z Σᵢ ‖f_{cᵢ}(z) − xᵢ‖²` by splat-and-divide (the diagonal
/// normal-equation solve; exact for single-tap operators such as Ring).
/// Texels no view touches keep the prior value.
pub fn aggregate_least_squares(
    maps: &[ViewMap],
    targets: &[Vec<f64>],
    prior: Option<&[f64]>,
) -> Result<Vec<f64>> {
    if maps.is_empty() {
        return Err(Error::runtime("aggregate needs at least one view"));
    }
    if maps.len() != targets.len() {
        return Err(Error::runtime("view/target count mismatch"));
    }
    let len = maps[0].canonical_len;
    let mut acc = SplatAccumulator::new(len);
    for (m, x) in maps.iter().zip(targets) {
        if m.canonical_len != len {
            return Err(Error::runtime("inconsistent canonical shapes"));
        }
        if x.len() != m.n_pixels() {
            return Err(Error::runtime("target shape does not match view"));
        }
        m.splat(x, &mut acc);
    }
    Ok(acc.resolve(prior))
}

// ---------------------------------------------------------------------------
// Equirect
// ---------------------------------------------------------------------------

/// Equirect canonical dimensions (`Wc = 2·Hc`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EquirectDims {
    pub hc: usize,
    pub wc: usize,
}

impl EquirectDims {
    pub fn new(hc: usize, wc: usize) -> Result<EquirectDims> {
        if wc != 2 * hc || hc < 2 {
            return Err(Error::config("equirect grid must satisfy Wc = 2*Hc with Hc >= 2"));
        }
        Ok(EquirectDims { hc, wc })
    }

    pub fn len(&self) -> usize {
        self.hc * self.wc
    }
}

/// Build the bilinear tap table for one equiangular view of an equirect grid.
///
/// Pixel `(i, j)` looks along latitude `el + (h/2 − i − 0.5)·(vfov/h)` and
/// longitude `az + (j + 0.5 − w/2)·(fov/w)` with `vfov = fov·h/w`; the
/// direction is sampled bilinearly with horizontal wrap and vertical clamp.
pub fn equirect_map(dims: EquirectDims, v: &View) -> ViewMap {
    let (hc, wc) = (dims.hc, dims.wc);
    let dlon = 360.0 / wc as f64;
    let dlat = 180.0 / hc as f64;
    let vfov = v.fov * v.height as f64 / v.width as f64;
    let mut taps = Vec::with_capacity(v.width * v.height);
    for i in 0..v.height {
        let lat = v.elevation + (v.height as f64 / 2.0 - i as f64 - 0.5) * (vfov / v.height as f64);
        for j in 0..v.width {
            let lon = v.azimuth + (j as f64 + 0.5 - v.width as f64 / 2.0) * (v.fov / v.width as f64);
            // Continuous texel coordinates (texel centers at integer coords).
            let u = lon.rem_euclid(360.0) / dlon - 0.5;
            let vv = ((90.0 - lat) / dlat - 0.5).clamp(0.0, (hc - 1) as f64);
            let uw = u.rem_euclid(wc as f64);
            let iu = (uw.floor() as usize).min(wc - 1);
            let fu = uw - iu as f64;
            let iu2 = (iu + 1) % wc;
            let iv = (vv.floor() as usize).min(hc - 2);
            let fv = vv - iv as f64;
            let iv2 = iv + 1;
            let mut row = Vec::with_capacity(4);
            let mut push = |r: usize, c: usize, w: f64| {
                if w != 0.0 {
                    row.push((r * wc + c, w));
                }
            };
            push(iv, iu, (1.0 - fu) * (1.0 - fv));
            push(iv, iu2, fu * (1.0 - fv));
            push(iv2, iu, (1.0 - fu) * fv);
            push(iv2, iu2, fu * fv);
            taps.push(row);
        }
    }
    ViewMap { taps, canonical_len: dims.len() }
}

/// The two non-overlapping equirect view sets: parity 0 places `n_views`
/// views at azimuths `{0, fov, 2·fov, …}`, parity 1 shifts by `fov/2`;
/// elevation 0. Errors unless `n_views·fov = 360` exactly.
pub fn equirect_parity_views(
    parity: u8,
    n_views: usize,
    fov: f64,
    width: usize,
    height: usize,
) -> Result<Vec<View>> {
    if (n_views as f64 * fov - 360.0).abs() > 1e-9 {
        return Err(Error::config(format!(
            "non-overlapping views must tile 360 degrees; got {n_views} x {fov}"
        )));
    }
    let shift = if parity % 2 == 1 { fov / 2.0 } else { 0.0 };
    (0..n_views)
        .map(|k| {
            let v = View {
                azimuth: (k as f64 * fov + shift).rem_euclid(360.0),
                elevation: 0.0,
                fov,
                width,
                height,
                id: (parity as u32) * 1000 + k as u32,
            };
            v.validate()?;
            Ok(v)
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Ring
// ---------------------------------------------------------------------------

/// Tap table for a ring window: `window` consecutive entries starting at
/// `offset`, wrapping around `n`. Single-tap, weight-1 rows — an exact
/// adjoint pair with no interpolation.
pub fn ring_map(n: usize, window: usize, offset: usize) -> Result<ViewMap> {
    if window > n {
        return Err(Error::config("ring window must not exceed ring length"));
    }
    if offset >= n {
        return Err(Error::config("ring offset out of range"));
    }
    let taps = (0..window).map(|k| vec![((offset + k) % n, 1.0)]).collect();
    Ok(ViewMap { taps, canonical_len: n })
}

/// Ring parity offsets: parity 0 gives `{0, w, 2w, …}` (requires `w | n`),
/// parity 1 shifts by `w/2`.
pub fn ring_parity_offsets(parity: u8, n: usize, window: usize) -> Result<Vec<usize>> {
    if window == 0 || n % window != 0 {
        return Err(Error::config("ring tiling requires window > 0 dividing n"));
    }
    let shift = if parity % 2 == 1 { window / 2 } else { 0 };
    Ok((0..n / window).map(|k| (k * window + shift) % n).collect())
}

// ---------------------------------------------------------------------------
// Masked image
// ---------------------------------------------------------------------------

/// Masked-image constraint: identity projection plus the closed-form
/// synchronization `z = M⊙y + (1−M)⊙x₀`.
#[derive(Debug, Clone)]
pub struct MaskedImage {
    pub mask: Vec<f64>,
    pub y: Vec<f64>,
}

impl MaskedImage {
    pub fn new(mask: Vec<f64>, y: Vec<f64>) -> Result<MaskedImage> {
        if mask.len() != y.len() {
            return Err(Error::config("mask and measurement shapes differ"));
        }
        if mask.iter().any(|&m| m != 0.0 && m != 1.0) {
            return Err(Error::config("mask entries must be exactly 0 or 1"));
        }
        Ok(MaskedImage { mask, y })
    }

    /// `argmin_z ‖(1−M)⊙(z−x₀)‖² + ‖M⊙(z−y)‖²` — per-texel selection.
    pub fn apply(&self, x0: &[f64]) -> Vec<f64> {
        self.mask
            .iter()
            .zip(&self.y)
            .zip(x0)
            .map(|((&m, &yv), &xv)| m * yv + (1.0 - m) * xv)
            .collect()
    }
}

// ---------------------------------------------------------------------------
// Unified projector used by the samplers
// ---------------------------------------------------------------------------

/// A canonical space together with its view machinery. `alternating`
/// controls whether parity-1 view sets exist (non-overlapping alternation).
#[derive(Debug, Clone)]
pub enum Projector {
    Identity {
        d: usize,
    },
    Masked(MaskedImage),
    Ring {
        n: usize,
        window: usize,
        /// Explicit offsets for parity 0 (fixed-view samplers may pass any
        /// offsets, including overlapping ones).
        offsets: Vec<usize>,
        /// Offsets for parity 1; `None` = fixed views.
        alt_offsets: Option<Vec<usize>>,
    },
    Equirect {
        dims: EquirectDims,
        views: Vec<View>,
        alt_views: Option<Vec<View>>,
    },
}

impl Projector {
    /// Ring with the two non-overlapping parity tilings.
    pub fn ring_alternating(n: usize, window: usize) -> Result<Projector> {
        Ok(Projector::Ring {
            n,
            window,
            offsets: ring_parity_offsets(0, n, window)?,
            alt_offsets: Some(ring_parity_offsets(1, n, window)?),
        })
    }

    /// Ring with a fixed offset list.
    pub fn ring_fixed(n: usize, window: usize, offsets: Vec<usize>) -> Result<Projector> {
        for &o in &offsets {
            ring_map(n, window, o)?;
        }
        Ok(Projector::Ring { n, window, offsets, alt_offsets: None })
    }

    /// Equirect with the two non-overlapping parity tilings.
    pub fn equirect_alternating(
        dims: EquirectDims,
        n_views: usize,
        fov: f64,
        width: usize,
        height: usize,
    ) -> Result<Projector> {
        Ok(Projector::Equirect {
            dims,
            views: equirect_parity_views(0, n_views, fov, width, height)?,
            alt_views: Some(equirect_parity_views(1, n_views, fov, width, height)?),
        })
    }

    /// Equirect with a fixed view list.
    pub fn equirect_fixed(dims: EquirectDims, views: Vec<View>) -> Result<Projector> {
        for v in &views {
            v.validate()?;
        }
        Ok(Projector::Equirect { dims, views, alt_views: None })
    }

    pub fn canonical_len(&self) -> usize {
        match self {
            Projector::Identity { d } => *d,
            Projector::Masked(m) => m.mask.len(),
            Projector::Ring { n, .. } => *n,
            Projector::Equirect { dims, .. } => dims.len(),
        }
    }

    /// Whether parity-1 view sets exist.
    pub fn alternates(&self) -> bool {
        match self {
            Projector::Ring { alt_offsets, .. } => alt_offsets.is_some(),
            Projector::Equirect { alt_views, .. } => alt_views.is_some(),
            _ => false,
        }
    }

    /// Tap tables for the given parity (parity is ignored by fixed-view and
    /// identity projectors).
    pub fn maps(&self, parity: u8) -> Result<Vec<ViewMap>> {
        match self {
            Projector::Identity { d } => Ok(vec![identity_map(*d)]),
            Projector::Masked(m) => Ok(vec![identity_map(m.mask.len())]),
            Projector::Ring { n, window, offsets, alt_offsets } => {
                let offs = match (parity % 2, alt_offsets) {
                    (1, Some(alt)) => alt,
                    _ => offsets,
                };
                offs.iter().map(|&o| ring_map(*n, *window, o)).collect()
            }
            Projector::Equirect { dims, views, alt_views } => {
                let vs = match (parity % 2, alt_views) {
                    (1, Some(alt)) => alt,
                    _ => views,
                };
                Ok(vs.iter().map(|v| equirect_map(*dims, v)).collect())
            }
        }
    }

    /// Per-texel distance (in texels) to the nearest view boundary of the
    /// given parity's view set. `None` for layouts without view boundaries
    /// (identity, masked). Used by seam scoring and boundary blending.
    pub fn boundary_distances(&self, parity: u8) -> Option<Vec<f64>> {
        match self {
            Projector::Ring { n, window, offsets, alt_offsets } => {
                let offs = match (parity % 2, alt_offsets) {
                    (1, Some(alt)) => alt,
                    _ => offsets,
                };
                let mut edges: Vec<f64> = Vec::new();
                for &o in offs {
                    edges.push(o as f64);
                    edges.push(((o + window) % n) as f64);
                }
                Some(circular_distances(*n, &edges))
            }
            Projector::Equirect { dims, views, alt_views } => {
                let vs = match (parity % 2, alt_views) {
                    (1, Some(alt)) => alt,
                    _ => views,
                };
                let dlon = 360.0 / dims.wc as f64;
                let mut edges: Vec<f64> = Vec::new();
                for v in vs {
                    for az in [v.azimuth - v.fov / 2.0, v.azimuth + v.fov / 2.0] {
                        edges.push(az.rem_euclid(360.0) / dlon);
                    }
                }
                let cols = circular_distances(dims.wc, &edges);
                let mut out = Vec::with_capacity(dims.len());
                for _ in 0..dims.hc {
                    out.extend_from_slice(&cols);
                }
                Some(out)
            }
            _ => None,
        }
    }

    /// Width (in texels) of the view-boundary band: 10% of the azimuthal
    /// view extent.
    pub fn blend_band_texels(&self) -> f64 {
        match self {
            Projector::Ring { window, .. } => 0.1 * *window as f64,
            Projector::Equirect { dims, views, .. } => {
                let dlon = 360.0 / dims.wc as f64;
                let fov = views.first().map(|v| v.fov).unwrap_or(0.0);
                0.1 * fov / dlon
            }
            _ => 0.0,
        }
    }

    /// Synchronize per-view clean predictions into the canonical grid.
    /// Masked grids use the closed-form constraint; everything else uses the
    /// least-squares aggregate.
    pub fn synchronize(
        &self,
        maps: &[ViewMap],
        preds: &[Vec<f64>],
        prior: Option<&[f64]>,
    ) -> Result<Vec<f64>> {
        match self {
            Projector::Masked(m) => {
                if preds.len() != 1 {
                    return Err(Error::runtime("masked grid expects a single view"));
                }
                Ok(m.apply(&preds[0]))
            }
            _ => aggregate_least_squares(maps, preds, prior),
        }
    }
}

fn identity_map(d: usize) -> ViewMap {
    ViewMap { taps: (0..d).map(|k| vec![(k, 1.0)]).collect(), canonical_len: d }
}

/// For each of `n` cells (centers at i + 0.5), the circular distance to the
/// nearest edge position in `edges` (period `n`).
fn circular_distances(n: usize, edges: &[f64]) -> Vec<f64> {
    let period = n as f64;
    (0..n)
        .map(|i| {
            let center = i as f64 + 0.5;
            edges
                .iter()
                .map(|&e| {
                    let d = (center - e).rem_euclid(period);
                    d.min(period - d)
                })
                .fold(f64::INFINITY, f64::min)
        })
        .collect()
}
