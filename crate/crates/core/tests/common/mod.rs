//! Random and fixed fixtures shared by the integration tests.

#![allow(dead_code)]

pub mod a2l;
pub mod ciede;
pub mod oracle;

use rand::seq::SliceRandom;
use rand::Rng;

use retouch_core::render::{ImageBuffer, Segmentation};
use retouch_core::roc::{
    BBox, ColorRangeMask, LinearMask, LuminanceRangeMask, MaskKind, MaskSpec, ObjectMask, ParamKind, ParamSchema,
    ParamValue, Point, PortraitMask, RadialMask, RocDocument, ToolCatalog, ToolInvocation, ToolSchema,
};
use retouch_core::Lab;

pub fn unit(rng: &mut impl Rng) -> f64 {
    match rng.gen_range(0..8) {
        0 => 0.0,
        1 => 1.0,
        2 => 0.5,
        _ => rng.gen_range(0.0..=1.0),
    }
}

fn scalar(rng: &mut impl Rng, min: f64, max: f64) -> f64 {
    match rng.gen_range(0..6) {
        0 => min,
        1 => max,
        2 if min <= 0.0 && 0.0 <= max => 0.0,
        3 => rng.gen_range(min..=max).round().clamp(min, max),
        _ => rng.gen_range(min..=max),
    }
}

pub fn random_curve(rng: &mut impl Rng) -> Vec<Point> {
    let n = rng.gen_range(2..=5);
    let mut xs: Vec<f64> = (0..n).map(|_| unit(rng)).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    while xs.len() < 2 {
        xs = vec![0.0, 1.0];
    }
    xs.into_iter().map(|x| Point::new(x, unit(rng))).collect()
}

pub fn random_value(rng: &mut impl Rng, schema: &ParamSchema) -> ParamValue {
    match &schema.kind {
        ParamKind::Scalar { min, max } => ParamValue::Scalar(scalar(rng, *min, *max)),
        ParamKind::Enum { allowed } => ParamValue::Enum(allowed.choose(rng).expect("non-empty enum").clone()),
        ParamKind::Curve => ParamValue::Curve(random_curve(rng)),
    }
}

pub fn random_mask(rng: &mut impl Rng, kind: MaskKind, catalog: &ToolCatalog) -> MaskSpec {
    let s = catalog.settings();
    let point = |rng: &mut _| Point::new(unit(rng), unit(rng));
    match kind {
        MaskKind::Linear => MaskSpec::Linear(LinearMask {
            start: point(rng),
            end: point(rng),
        }),
        MaskKind::Radial => MaskSpec::Radial(RadialMask {
            center: point(rng),
            width: rng.gen_range(0.05..=1.0),
            height: rng.gen_range(0.05..=1.0),
            angle: rng.gen_range(s.angle_min..s.angle_max),
        }),
        MaskKind::Object => {
            let (a, b) = (rng.gen_range(0.0..0.9), rng.gen_range(0.0..0.9));
            let (w, h) = (rng.gen_range(0.05..=1.0 - a), rng.gen_range(0.05..=1.0 - b));
            MaskSpec::Object(ObjectMask {
                bbox: BBox::new(a, b, (a + w).min(1.0), (b + h).min(1.0)),
            })
        }
        MaskKind::Portrait => MaskSpec::Portrait(PortraitMask {
            category_id: s.portrait_categories.choose(rng).map_or(0, |c| c.id),
        }),
        MaskKind::ColorRange => MaskSpec::ColorRange(ColorRangeMask {
            samples: (0..s.color_samples)
                .map(|_| {
                    Lab::new(
                        rng.gen_range(0.0..=100.0),
                        rng.gen_range(-128.0..=127.0),
                        rng.gen_range(-128.0..=127.0),
                    )
                })
                .collect(),
        }),
        MaskKind::LuminanceRange => {
            let lo = rng.gen_range(0.0..0.9);
            MaskSpec::LuminanceRange(LuminanceRangeMask {
                l_min: lo,
                l_max: rng.gen_range(lo + 0.05..=1.0),
            })
        }
    }
}

pub fn random_tool(rng: &mut impl Rng, schema: &ToolSchema, catalog: &ToolCatalog) -> ToolInvocation {
    let mut tool = ToolInvocation::new(schema.name.clone());
    for p in schema.params.values() {
        if rng.gen_bool(0.4) {
            tool.params.insert(p.name.clone(), random_value(rng, p));
        }
    }
    if let Some(kind) = schema.mask_kind {
        tool.mask = Some(random_mask(rng, kind, catalog));
    }
    tool
}

/// A valid document of up to `max_tools` distinct tools.
pub fn random_doc(rng: &mut impl Rng, catalog: &ToolCatalog, max_tools: usize, portrait: bool) -> RocDocument {
    let mut schemas: Vec<&ToolSchema> = catalog
        .tools()
        .filter(|t| portrait || t.mask_kind != Some(MaskKind::Portrait))
        .collect();
    schemas.shuffle(rng);
    let n = rng.gen_range(0..=max_tools.min(schemas.len()));
    RocDocument::new(schemas[..n].iter().map(|s| random_tool(rng, s, catalog)).collect())
}

/// A valid document that shares some tools, keys and values with `tgt`.
pub fn mutate_doc(rng: &mut impl Rng, tgt: &RocDocument, catalog: &ToolCatalog, portrait: bool) -> RocDocument {
    let mut tools = Vec::new();
    for t in &tgt.tools {
        if rng.gen_bool(0.2) {
            continue;
        }
        let schema = catalog.get(&t.name).expect("target tools come from the catalog");
        let mut out = ToolInvocation::new(t.name.clone());
        for p in schema.params.values() {
            match (t.params.get(&p.name), rng.gen_range(0..4)) {
                (Some(v), 0 | 1) => {
                    out.params.insert(p.name.clone(), v.clone());
                }
                (Some(_), 2) | (None, 0) => {
                    out.params.insert(p.name.clone(), random_value(rng, p));
                }
                _ => {}
            }
        }
        out.mask = match (&t.mask, schema.mask_kind) {
            (Some(m), _) if rng.gen_bool(0.5) => Some(m.clone()),
            (_, Some(kind)) => Some(random_mask(rng, kind, catalog)),
            _ => None,
        };
        tools.push(out);
    }
    for extra in random_doc(rng, catalog, 2, portrait).tools {
        if !tools.iter().any(|t: &ToolInvocation| t.name == extra.name) {
            tools.push(extra);
        }
    }
    tools.shuffle(rng);
    RocDocument::new(tools)
}

pub fn random_image(rng: &mut impl Rng, w: usize, h: usize) -> ImageBuffer {
    ImageBuffer::from_fn(w, h, |_, _| [rng.gen(), rng.gen(), rng.gen()])
}

/// A smooth colour gradient with every channel strictly inside `(0, 1)`.
pub fn gradient(w: usize, h: usize) -> ImageBuffer {
    ImageBuffer::from_fn(w, h, |x, y| {
        let u = (x as f32 + 0.5) / w as f32;
        let v = (y as f32 + 0.5) / h as f32;
        [0.05 + 0.6 * u, 0.05 + 0.6 * v, 0.05 + 0.3 * (u + v)]
    })
}

/// Quadrant labels cycling through the first four portrait categories.
pub fn quadrants(w: usize, h: usize) -> Segmentation {
    let labels = (0..w * h)
        .map(|i| {
            let (x, y) = (i % w, i / w);
            (usize::from(x >= w / 2) + 2 * usize::from(y >= h / 2)) as u16
        })
        .collect();
    Segmentation::new(w, h, labels).expect("label raster matches its size")
}
