//! Pixel fidelity metrics and the colour-distribution similarity.
//!
//! Differences are taken on the linear-light samples held by
//! [`ImageBuffer`], on the `[0, 1]` scale.

use thiserror::Error;

use crate::color::linear_to_lab;
use crate::render::{ImageBuffer, MaskBuffer};

pub use crate::color::ciede2000;

/// Default background weight of the region-weighted metrics.
pub const DEFAULT_ALPHA: f64 = 0.5;

/// Bins per CIELAB axis in the colour-distribution histogram.
pub const HISTOGRAM_BINS: usize = 32;

const L_RANGE: (f64, f64) = (0.0, 100.0);
// Width-8 bins with one centred on a = b = 0, so neutral colours do not
// straddle a bin edge.
const AB_RANGE: (f64, f64) = (-132.0, 124.0);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricError {
    #[error("dimension mismatch: {}x{} vs {}x{}", left.0, left.1, right.0, right.1)]
    DimensionMismatch {
        left: (usize, usize),
        right: (usize, usize),
    },
    #[error("background weight {0} outside [0, 1]")]
    InvalidAlpha(f64),
}

fn same_dims(a: (usize, usize), b: (usize, usize)) -> Result<(), MetricError> {
    if a == b {
        Ok(())
    } else {
        Err(MetricError::DimensionMismatch { left: a, right: b })
    }
}

fn mean_diff(a: &ImageBuffer, b: &ImageBuffer, f: impl Fn(usize, f64) -> f64) -> Result<f64, MetricError> {
    same_dims(a.dims(), b.dims())?;
    let sum: f64 = a
        .data()
        .iter()
        .zip(b.data())
        .enumerate()
        .map(|(i, (&x, &y))| f(i / 3, f64::from(x) - f64::from(y)))
        .sum();
    Ok(sum / a.data().len() as f64)
}

/// Mean absolute difference over pixels and channels.
pub fn l1_distance(a: &ImageBuffer, b: &ImageBuffer) -> Result<f64, MetricError> {
    mean_diff(a, b, |_, d| d.abs())
}

/// Mean squared difference over pixels and channels.
pub fn l2_distance(a: &ImageBuffer, b: &ImageBuffer) -> Result<f64, MetricError> {
    mean_diff(a, b, |_, d| d * d)
}

/// Per-pixel weights `{1, α}`: 1 where the region weight is at least 0.5.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix {
    width: usize,
    height: usize,
    weights: Vec<f64>,
}

impl WeightMatrix {
    pub fn from_region(region: &MaskBuffer, alpha: f64) -> Result<Self, MetricError> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(MetricError::InvalidAlpha(alpha));
        }
        let (width, height) = region.dims();
        let weights = region
            .weights()
            .iter()
            .map(|&w| if w >= 0.5 { 1.0 } else { alpha })
            .collect();
        Ok(Self { width, height, weights })
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

/// Mean of `|W∘a − W∘b|`.
pub fn region_weighted_l1(a: &ImageBuffer, b: &ImageBuffer, region: &MaskBuffer, alpha: f64) -> Result<f64, MetricError> {
    same_dims(a.dims(), region.dims())?;
    let w = WeightMatrix::from_region(region, alpha)?;
    mean_diff(a, b, |p, d| (w.weights[p] * d).abs())
}

/// Mean of `(W∘a − W∘b)²`.
pub fn region_weighted_l2(a: &ImageBuffer, b: &ImageBuffer, region: &MaskBuffer, alpha: f64) -> Result<f64, MetricError> {
    same_dims(a.dims(), region.dims())?;
    let w = WeightMatrix::from_region(region, alpha)?;
    mean_diff(a, b, |p, d| (w.weights[p] * d).powi(2))
}

fn bin(v: f64, (lo, hi): (f64, f64)) -> usize {
    let t = ((v - lo) / (hi - lo) * HISTOGRAM_BINS as f64).floor();
    (t.max(0.0) as usize).min(HISTOGRAM_BINS - 1)
}

/// Normalized joint CIELAB histogram with [`HISTOGRAM_BINS`]³ cells.
pub fn lab_histogram(img: &ImageBuffer) -> Vec<f64> {
    let mut counts = vec![0u32; HISTOGRAM_BINS.pow(3)];
    for px in img.pixels() {
        let lab = linear_to_lab(px.map(f64::from));
        let idx = (bin(lab.l, L_RANGE) * HISTOGRAM_BINS + bin(lab.a, AB_RANGE)) * HISTOGRAM_BINS + bin(lab.b, AB_RANGE);
        counts[idx] += 1;
    }
    let n = img.pixel_count() as f64;
    counts.into_iter().map(|c| f64::from(c) / n).collect()
}

/// Histogram intersection of the images' joint CIELAB histograms, in `[0, 1]`.
pub fn color_distribution_similarity(a: &ImageBuffer, b: &ImageBuffer) -> Result<f64, MetricError> {
    same_dims(a.dims(), b.dims())?;
    let (ha, hb) = (lab_histogram(a), lab_histogram(b));
    let s: f64 = ha.iter().zip(&hb).map(|(x, y)| x.min(*y)).sum();
    Ok(s.clamp(0.0, 1.0))
}
