//! Per-key similarity functions `S_k`.

use crate::color::ciede2000;
use crate::render::ToneCurve;
use crate::roc::{
    BBox, ColorRangeMask, LinearMask, LuminanceRangeMask, MaskSpec, ParamKind, ParamValue, Point, PortraitMask,
    RadialMask,
};

use super::RewardError;

/// Samples used to compare two tone curves.
pub const CURVE_SAMPLES: usize = 33;

/// `max(0, 1 − |pre − tgt| / (max − min))`.
pub fn scalar_similarity(pre: f64, tgt: f64, min: f64, max: f64) -> Result<f64, RewardError> {
    if !(min < max) {
        return Err(RewardError::BadRange { min, max });
    }
    Ok((1.0 - (pre - tgt).abs() / (max - min)).max(0.0))
}

pub fn enum_similarity(pre: &str, tgt: &str) -> f64 {
    if pre == tgt {
        1.0
    } else {
        0.0
    }
}

/// `1 − mean |c_pre(x) − c_tgt(x)|` over [`CURVE_SAMPLES`] evenly spaced
/// inputs in `[0, 1]`.
pub fn curve_similarity(pre: &[Point], tgt: &[Point]) -> Result<f64, RewardError> {
    if pre.len() < 2 || tgt.len() < 2 {
        return Err(RewardError::DegenerateCurve);
    }
    let (a, b) = (ToneCurve::new(pre), ToneCurve::new(tgt));
    let total: f64 = (0..CURVE_SAMPLES)
        .map(|i| {
            let x = i as f64 / (CURVE_SAMPLES - 1) as f64;
            (a.eval(x) - b.eval(x)).abs()
        })
        .sum();
    Ok((1.0 - total / CURVE_SAMPLES as f64).clamp(0.0, 1.0))
}

/// `max(0, 1 − ‖Δstart‖ − ‖Δend‖)`.
pub fn linear_mask_similarity(pre: &LinearMask, tgt: &LinearMask) -> f64 {
    (1.0 - pre.start.distance(tgt.start) - pre.end.distance(tgt.end)).max(0.0)
}

/// `0.4·S_center + 0.4·S_scale + 0.2·S_angle`.
pub fn radial_mask_similarity(
    pre: &RadialMask,
    tgt: &RadialMask,
    angle_min: f64,
    angle_max: f64,
) -> Result<f64, RewardError> {
    if !(tgt.width > 0.0 && tgt.height > 0.0) {
        return Err(RewardError::DegenerateTarget("radial mask with zero extent".into()));
    }
    if !(angle_min < angle_max) {
        return Err(RewardError::BadRange {
            min: angle_min,
            max: angle_max,
        });
    }
    let center = (1.0 - 2.0 * pre.center.distance(tgt.center)).max(0.0);
    let scale = (1.0 - (pre.width / tgt.width - 1.0).abs() - (pre.height / tgt.height - 1.0).abs()).max(0.0);
    let angle = (1.0 - (pre.angle - tgt.angle).abs() / (angle_max - angle_min)).max(0.0);
    Ok(0.4 * center + 0.4 * scale + 0.2 * angle)
}

fn clamp_box(b: &BBox) -> BBox {
    BBox::new(
        b.x1.clamp(0.0, 1.0),
        b.y1.clamp(0.0, 1.0),
        b.x2.clamp(0.0, 1.0),
        b.y2.clamp(0.0, 1.0),
    )
}

/// Intersection over union, with coordinates clamped to the unit square.
pub fn object_mask_iou(pre: &BBox, tgt: &BBox) -> f64 {
    let (a, b) = (clamp_box(pre), clamp_box(tgt));
    let inter = BBox::new(a.x1.max(b.x1), a.y1.max(b.y1), a.x2.min(b.x2), a.y2.min(b.y2)).area();
    let union = a.area() + b.area() - inter;
    if union <= 0.0 {
        0.0
    } else {
        (inter / union).clamp(0.0, 1.0)
    }
}

pub fn portrait_mask_match(pre: &PortraitMask, tgt: &PortraitMask) -> f64 {
    if pre.category_id == tgt.category_id {
        1.0
    } else {
        0.0
    }
}

/// `max(0, 1 − mean ΔE00 / 100)`, samples paired by index.
pub fn color_mask_similarity(pre: &ColorRangeMask, tgt: &ColorRangeMask) -> Result<f64, RewardError> {
    if pre.samples.len() != tgt.samples.len() || tgt.samples.is_empty() {
        return Err(RewardError::SampleCountMismatch {
            pred: pre.samples.len(),
            target: tgt.samples.len(),
        });
    }
    let n = tgt.samples.len() as f64;
    let mean: f64 = pre
        .samples
        .iter()
        .zip(&tgt.samples)
        .map(|(&a, &b)| ciede2000(a, b))
        .sum::<f64>()
        / n;
    Ok((1.0 - mean / 100.0).max(0.0))
}

/// `max(0, 1 − (|Δl_min| + |Δl_max|) / (2·(l_max − l_min)_tgt))`.
pub fn luminance_mask_similarity(pre: &LuminanceRangeMask, tgt: &LuminanceRangeMask) -> Result<f64, RewardError> {
    let span = tgt.l_max - tgt.l_min;
    if !(span > 0.0) {
        return Err(RewardError::DegenerateTarget("luminance range with l_max <= l_min".into()));
    }
    let d = (pre.l_min - tgt.l_min).abs() + (pre.l_max - tgt.l_max).abs();
    Ok((1.0 - d / (2.0 * span)).max(0.0))
}

/// Similarity of two masks; differing kinds score 0.
pub fn mask_similarity(pre: &MaskSpec, tgt: &MaskSpec, angle_min: f64, angle_max: f64) -> Result<f64, RewardError> {
    Ok(match (pre, tgt) {
        (MaskSpec::Linear(a), MaskSpec::Linear(b)) => linear_mask_similarity(a, b),
        (MaskSpec::Radial(a), MaskSpec::Radial(b)) => radial_mask_similarity(a, b, angle_min, angle_max)?,
        (MaskSpec::Object(a), MaskSpec::Object(b)) => object_mask_iou(&a.bbox, &b.bbox),
        (MaskSpec::Portrait(a), MaskSpec::Portrait(b)) => portrait_mask_match(a, b),
        (MaskSpec::ColorRange(a), MaskSpec::ColorRange(b)) => color_mask_similarity(a, b)?,
        (MaskSpec::LuminanceRange(a), MaskSpec::LuminanceRange(b)) => luminance_mask_similarity(a, b)?,
        _ => 0.0,
    })
}

/// Similarity of two parameter values under the declared kind; a value of
/// the wrong kind scores 0.
pub fn param_similarity(kind: &ParamKind, pre: &ParamValue, tgt: &ParamValue) -> Result<f64, RewardError> {
    Ok(match (kind, pre, tgt) {
        (ParamKind::Scalar { min, max }, ParamValue::Scalar(a), ParamValue::Scalar(b)) => {
            scalar_similarity(*a, *b, *min, *max)?
        }
        (ParamKind::Enum { .. }, ParamValue::Enum(a), ParamValue::Enum(b)) => enum_similarity(a, b),
        (ParamKind::Curve, ParamValue::Curve(a), ParamValue::Curve(b)) => curve_similarity(a, b)?,
        _ => 0.0,
    })
}
