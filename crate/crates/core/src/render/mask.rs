//! Mask rasterization.
//!
//! Pixel `(i, j)` of a `W × H` raster sits at normalized coordinates
//! `(i / (W − 1), j / (H − 1))`, so the first and last columns coincide with
//! `x = 0` and `x = 1`. A single-column or single-row raster sits at 0.5.

use crate::color::{ciede2000, linear_to_lab};
use crate::roc::{CatalogSettings, MaskSpec};

use super::image::{ImageBuffer, MaskBuffer, Segmentation};
use super::RenderError;

#[inline]
pub(crate) fn norm_coord(i: usize, n: usize) -> f64 {
    if n <= 1 {
        0.5
    } else {
        i as f64 / (n - 1) as f64
    }
}

fn smoothstep(t: f64) -> f64 {
    let t = t.clamp(0.0, 1.0);
    t * t * (3.0 - 2.0 * t)
}

fn pixel_f64(img: &ImageBuffer, x: usize, y: usize) -> [f64; 3] {
    img.pixel(x, y).map(f64::from)
}

/// Rasterizes `spec` over the grid of `img`.
///
/// | kind | weight |
/// |---|---|
/// | linear | `1 − t`, `t` the clamped projection onto start→end |
/// | radial | `1 − smoothstep(ρ)`, `ρ` the normalized elliptical radius |
/// | object | 1 inside the closed box, 0 outside |
/// | portrait | 1 where the segmentation label equals the category |
/// | colour range | `max_s max(0, 1 − ΔE00(pixel, s) / τ_c)` |
/// | luminance range | 1 inside `[l_min, l_max]`, linear feather of width `τ_l` outside |
pub fn rasterize_mask(
    spec: &MaskSpec,
    img: &ImageBuffer,
    segmentation: Option<&Segmentation>,
    settings: &CatalogSettings,
) -> Result<MaskBuffer, RenderError> {
    let (w, h) = img.dims();
    let mask = match spec {
        MaskSpec::Linear(m) => {
            let (dx, dy) = (m.end.x - m.start.x, m.end.y - m.start.y);
            let len2 = dx * dx + dy * dy;
            MaskBuffer::from_fn(w, h, |x, y| {
                let (px, py) = (norm_coord(x, w), norm_coord(y, h));
                let t = if len2 > 0.0 {
                    ((px - m.start.x) * dx + (py - m.start.y) * dy) / len2
                } else {
                    0.0
                };
                (1.0 - t.clamp(0.0, 1.0)) as f32
            })
        }
        MaskSpec::Radial(m) => {
            let (sin, cos) = m.angle.to_radians().sin_cos();
            let (a, b) = (m.width / 2.0, m.height / 2.0);
            MaskBuffer::from_fn(w, h, |x, y| {
                let (px, py) = (norm_coord(x, w) - m.center.x, norm_coord(y, h) - m.center.y);
                let u = px * cos + py * sin;
                let v = -px * sin + py * cos;
                let rho = ((u / a).powi(2) + (v / b).powi(2)).sqrt();
                (1.0 - smoothstep(rho)) as f32
            })
        }
        MaskSpec::Object(m) => {
            let b = m.bbox;
            MaskBuffer::from_fn(w, h, |x, y| {
                let (px, py) = (norm_coord(x, w), norm_coord(y, h));
                let inside = px >= b.x1 && px <= b.x2 && py >= b.y1 && py <= b.y2;
                if inside {
                    1.0
                } else {
                    0.0
                }
            })
        }
        MaskSpec::Portrait(m) => {
            let seg = segmentation.ok_or(RenderError::MissingSegmentation)?;
            if seg.dims() != (w, h) {
                return Err(RenderError::DimensionMismatch {
                    expected: (w, h),
                    found: seg.dims(),
                });
            }
            let id = m.category_id;
            let weights = seg
                .labels()
                .iter()
                .map(|&l| if u32::from(l) == id { 1.0 } else { 0.0 })
                .collect();
            MaskBuffer::new(w, h, weights)?
        }
        MaskSpec::ColorRange(m) => {
            let tol = settings.color_tolerance;
            MaskBuffer::from_fn(w, h, |x, y| {
                let lab = linear_to_lab(pixel_f64(img, x, y));
                m.samples
                    .iter()
                    .map(|&s| {
                        if tol > 0.0 {
                            (1.0 - ciede2000(lab, s) / tol).max(0.0)
                        } else if ciede2000(lab, s) == 0.0 {
                            1.0
                        } else {
                            0.0
                        }
                    })
                    .fold(0.0, f64::max) as f32
            })
        }
        MaskSpec::LuminanceRange(m) => {
            let feather = settings.luminance_feather;
            MaskBuffer::from_fn(w, h, |x, y| {
                let l = linear_to_lab(pixel_f64(img, x, y)).l / 100.0;
                let dist = if l < m.l_min {
                    m.l_min - l
                } else if l > m.l_max {
                    l - m.l_max
                } else {
                    0.0
                };
                if dist == 0.0 {
                    1.0
                } else if feather > 0.0 {
                    (1.0 - dist / feather).max(0.0) as f32
                } else {
                    0.0
                }
            })
        }
    };
    Ok(mask)
}
