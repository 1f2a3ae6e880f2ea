//! A brute-force accuracy evaluator that walks the whole catalog instead of
//! the documents.

use retouch_core::reward::similarity::curve_similarity;
use retouch_core::roc::{MaskSpec, ParamKind, ParamValue, RocDocument, ToolCatalog, ToolInvocation};
use retouch_core::ciede2000;

fn find<'a>(doc: &'a RocDocument, name: &str) -> Option<&'a ToolInvocation> {
    doc.tools.iter().find(|t| t.name == name)
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

fn pos(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        0.0
    }
}

fn mask_score(p: &MaskSpec, t: &MaskSpec, catalog: &ToolCatalog) -> f64 {
    let s = catalog.settings();
    match (p, t) {
        (MaskSpec::Linear(a), MaskSpec::Linear(b)) => pos(
            1.0 - dist([a.start.x, a.start.y], [b.start.x, b.start.y]) - dist([a.end.x, a.end.y], [b.end.x, b.end.y]),
        ),
        (MaskSpec::Radial(a), MaskSpec::Radial(b)) => {
            let c = pos(1.0 - 2.0 * dist([a.center.x, a.center.y], [b.center.x, b.center.y]));
            let k = pos(1.0 - (a.width / b.width - 1.0).abs() - (a.height / b.height - 1.0).abs());
            let r = pos(1.0 - (a.angle - b.angle).abs() / (s.angle_max - s.angle_min));
            0.4 * c + 0.4 * k + 0.2 * r
        }
        (MaskSpec::Object(a), MaskSpec::Object(b)) => {
            let (a, b) = (a.bbox, b.bbox);
            let iw = pos(a.x2.min(b.x2) - a.x1.max(b.x1));
            let ih = pos(a.y2.min(b.y2) - a.y1.max(b.y1));
            let inter = iw * ih;
            let union = (a.x2 - a.x1) * (a.y2 - a.y1) + (b.x2 - b.x1) * (b.y2 - b.y1) - inter;
            inter / union
        }
        (MaskSpec::Portrait(a), MaskSpec::Portrait(b)) => f64::from(u8::from(a.category_id == b.category_id)),
        (MaskSpec::ColorRange(a), MaskSpec::ColorRange(b)) => {
            let mut sum = 0.0;
            for i in 0..b.samples.len() {
                sum += ciede2000(a.samples[i], b.samples[i]);
            }
            pos(1.0 - sum / b.samples.len() as f64 / 100.0)
        }
        (MaskSpec::LuminanceRange(a), MaskSpec::LuminanceRange(b)) => {
            let err = (a.l_min - b.l_min).abs() + (a.l_max - b.l_max).abs();
            pos(1.0 - err / (2.0 * (b.l_max - b.l_min)))
        }
        _ => 0.0,
    }
}

fn value_score(kind: &ParamKind, p: &ParamValue, t: &ParamValue) -> f64 {
    match (kind, p, t) {
        (ParamKind::Scalar { min, max }, ParamValue::Scalar(a), ParamValue::Scalar(b)) => {
            pos(1.0 - (a - b).abs() / (max - min))
        }
        (ParamKind::Enum { .. }, ParamValue::Enum(a), ParamValue::Enum(b)) => f64::from(u8::from(a == b)),
        (ParamKind::Curve, ParamValue::Curve(a), ParamValue::Curve(b)) => curve_similarity(a, b).unwrap(),
        _ => 0.0,
    }
}

/// `(r_name, r_param, r_value, r_roa)` by enumerating every catalog tool and
/// every catalog key.
pub fn brute_force(pred: &RocDocument, tgt: &RocDocument, catalog: &ToolCatalog) -> (f64, f64, f64, f64) {
    let (mut both, mut either) = (0usize, 0usize);
    let mut r_param = 0.0;
    let mut r_value = 0.0;
    let mut target_keys = 0usize;
    let mut matched_pred_keys = 0usize;
    for schema in catalog.tools() {
        let (p, t) = (find(pred, &schema.name), find(tgt, &schema.name));
        both += usize::from(p.is_some() && t.is_some());
        either += usize::from(p.is_some() || t.is_some());
        let mut keys: Vec<&str> = schema.params.keys().map(String::as_str).collect();
        keys.push("mask");
        let has = |tool: Option<&ToolInvocation>, k: &str| {
            tool.is_some_and(|tool| if k == "mask" { tool.mask.is_some() } else { tool.params.contains_key(k) })
        };
        for k in &keys {
            target_keys += usize::from(has(t, k));
        }
        let (Some(p), Some(t)) = (p, t) else { continue };
        let (mut kb, mut ke) = (0usize, 0usize);
        for k in &keys {
            let (a, b) = (has(Some(p), k), has(Some(t), k));
            kb += usize::from(a && b);
            ke += usize::from(a || b);
            matched_pred_keys += usize::from(a);
            if a && b {
                r_value += if *k == "mask" {
                    mask_score(p.mask.as_ref().unwrap(), t.mask.as_ref().unwrap(), catalog)
                } else {
                    value_score(&schema.params[*k].kind, &p.params[*k], &t.params[*k])
                };
            }
        }
        r_param += if ke == 0 { 1.0 } else { kb as f64 / ke as f64 };
    }
    let r_name = both as f64 / either as f64;
    let value_term = match target_keys {
        0 => f64::from(u8::from(matched_pred_keys == 0)),
        n => r_value / n as f64,
    };
    let roa = (r_name + r_param / tgt.tools.len() as f64 + value_term) / 3.0;
    (r_name, r_param, r_value, roa)
}
