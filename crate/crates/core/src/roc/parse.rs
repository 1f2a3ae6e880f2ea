//! ROC text format: parsing, validation and canonical serialization.
//!
//! The wire form is UTF-8 JSON:
//!
//! ```json
//! {"tools":[{"name":"Exposure","params":{"value":0.5}},
//!           {"name":"ObjectMask","params":{"exposure":1.0},
//!            "mask":{"kind":"object","bbox":[0.1,0.1,0.6,0.9]}}]}
//! ```
//!
//! Positions in semantic errors are JSON pointers into the document.

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use serde::de::{self, Deserialize, Deserializer, MapAccess, SeqAccess, Visitor};
use thiserror::Error;

use crate::color::Lab;

use super::catalog::{MaskKind, ParamKind, ToolCatalog};
use super::document::{
    BBox, ColorRangeMask, LinearMask, LuminanceRangeMask, MaskSpec, ObjectMask, ParamValue, Point,
    PortraitMask, RadialMask, RocDocument, ToolInvocation,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RocError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{path}: {message}")]
    Schema { path: String, message: String },
    #[error("{path}: unknown tool `{name}`")]
    UnknownTool { name: String, path: String },
    #[error("{path}: tool `{tool}` has no parameter `{param}`")]
    UnknownParam {
        tool: String,
        param: String,
        path: String,
    },
    #[error("{path}: tool `{name}` appears more than once")]
    DuplicateTool { name: String, path: String },
    #[error("{path}: expected a {expected} value, found {found}")]
    TypeMismatch {
        path: String,
        expected: &'static str,
        found: &'static str,
    },
    #[error("{path}: value {value} outside [{min}, {max}]")]
    OutOfRange {
        path: String,
        value: f64,
        min: f64,
        max: f64,
    },
    #[error("{path}: {message}")]
    InvalidValue { path: String, message: String },
    #[error("{path}: {message}")]
    MaskMismatch { path: String, message: String },
}

impl RocError {
    /// Where the error occurred: `line:column` for syntax errors, a JSON
    /// pointer otherwise.
    pub fn position(&self) -> String {
        match self {
            RocError::Syntax { line, column, .. } => format!("{line}:{column}"),
            RocError::Schema { path, .. }
            | RocError::UnknownTool { path, .. }
            | RocError::UnknownParam { path, .. }
            | RocError::DuplicateTool { path, .. }
            | RocError::TypeMismatch { path, .. }
            | RocError::OutOfRange { path, .. }
            | RocError::InvalidValue { path, .. }
            | RocError::MaskMismatch { path, .. } => path.clone(),
        }
    }

    /// Stable machine-readable name of the error class.
    pub fn code(&self) -> &'static str {
        match self {
            RocError::Syntax { .. } => "SyntaxError",
            RocError::Schema { .. } => "SchemaError",
            RocError::UnknownTool { .. } => "UnknownTool",
            RocError::UnknownParam { .. } => "UnknownParam",
            RocError::DuplicateTool { .. } => "DuplicateTool",
            RocError::TypeMismatch { .. } => "TypeMismatch",
            RocError::OutOfRange { .. } => "OutOfRange",
            RocError::InvalidValue { .. } => "InvalidValue",
            RocError::MaskMismatch { .. } => "MaskMismatch",
        }
    }
}

/// JSON tree that keeps object key order and rejects duplicate keys.
#[derive(Debug)]
enum Json {
    Null,
    Bool,
    Number { value: f64, integer: Option<u64> },
    String(String),
    Array(Vec<Json>),
    Object(Vec<(String, Json)>),
}

impl Json {
    fn type_name(&self) -> &'static str {
        match self {
            Json::Null => "null",
            Json::Bool => "boolean",
            Json::Number { .. } => "number",
            Json::String(_) => "string",
            Json::Array(_) => "array",
            Json::Object(_) => "object",
        }
    }
}

impl<'de> Deserialize<'de> for Json {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct JsonVisitor;

        impl<'de> Visitor<'de> for JsonVisitor {
            type Value = Json;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a JSON value")
            }

            fn visit_unit<E>(self) -> Result<Json, E> {
                Ok(Json::Null)
            }

            fn visit_bool<E>(self, _: bool) -> Result<Json, E> {
                Ok(Json::Bool)
            }

            fn visit_u64<E>(self, v: u64) -> Result<Json, E> {
                Ok(Json::Number {
                    value: v as f64,
                    integer: Some(v),
                })
            }

            fn visit_i64<E>(self, v: i64) -> Result<Json, E> {
                Ok(Json::Number {
                    value: v as f64,
                    integer: u64::try_from(v).ok(),
                })
            }

            fn visit_f64<E>(self, v: f64) -> Result<Json, E> {
                Ok(Json::Number {
                    value: v,
                    integer: None,
                })
            }

            fn visit_str<E>(self, v: &str) -> Result<Json, E> {
                Ok(Json::String(v.to_owned()))
            }

            fn visit_string<E>(self, v: String) -> Result<Json, E> {
                Ok(Json::String(v))
            }

            fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> Result<Json, A::Error> {
                let mut items = Vec::new();
                while let Some(item) = seq.next_element()? {
                    items.push(item);
                }
                Ok(Json::Array(items))
            }

            fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> Result<Json, A::Error> {
                let mut entries: Vec<(String, Json)> = Vec::new();
                let mut seen = HashSet::new();
                while let Some(key) = map.next_key::<String>()? {
                    if !seen.insert(key.clone()) {
                        return Err(de::Error::custom(format!("duplicate key `{key}`")));
                    }
                    let value = map.next_value()?;
                    entries.push((key, value));
                }
                Ok(Json::Object(entries))
            }
        }

        deserializer.deserialize_any(JsonVisitor)
    }
}

fn pointer_escape(token: &str) -> String {
    token.replace('~', "~0").replace('/', "~1")
}

fn schema(path: &str, message: impl Into<String>) -> RocError {
    RocError::Schema {
        path: path.to_owned(),
        message: message.into(),
    }
}

/// Reads a JSON object into named fields, reporting missing and unknown keys.
struct Fields<'a> {
    path: &'a str,
    entries: Vec<(String, Json)>,
}

impl<'a> Fields<'a> {
    fn new(path: &'a str, json: Json, errors: &mut Vec<RocError>) -> Option<Self> {
        match json {
            Json::Object(entries) => Some(Self { path, entries }),
            other => {
                errors.push(schema(path, format!("expected an object, found {}", other.type_name())));
                None
            }
        }
    }

    fn take(&mut self, key: &str) -> Option<Json> {
        let idx = self.entries.iter().position(|(k, _)| k == key)?;
        Some(self.entries.remove(idx).1)
    }

    fn require(&mut self, key: &str, errors: &mut Vec<RocError>) -> Option<Json> {
        let v = self.take(key);
        if v.is_none() {
            errors.push(schema(self.path, format!("missing field `{key}`")));
        }
        v
    }

    fn finish(self, errors: &mut Vec<RocError>) {
        for (key, _) in self.entries {
            errors.push(schema(
                &format!("{}/{}", self.path, pointer_escape(&key)),
                format!("unknown field `{key}`"),
            ));
        }
    }
}

fn number(path: &str, json: Json, errors: &mut Vec<RocError>) -> Option<f64> {
    match json {
        Json::Number { value, .. } => Some(value),
        other => {
            errors.push(RocError::TypeMismatch {
                path: path.to_owned(),
                expected: "number",
                found: other.type_name(),
            });
            None
        }
    }
}

fn numbers<const N: usize>(path: &str, json: Json, errors: &mut Vec<RocError>) -> Option<[f64; N]> {
    let items = match json {
        Json::Array(items) if items.len() == N => items,
        Json::Array(items) => {
            errors.push(schema(path, format!("expected {N} numbers, found {}", items.len())));
            return None;
        }
        other => {
            errors.push(RocError::TypeMismatch {
                path: path.to_owned(),
                expected: "array",
                found: other.type_name(),
            });
            return None;
        }
    };
    let mut out = [0.0; N];
    let mut ok = true;
    for (i, item) in items.into_iter().enumerate() {
        match number(&format!("{path}/{i}"), item, errors) {
            Some(v) => out[i] = v,
            None => ok = false,
        }
    }
    ok.then_some(out)
}

fn param_value(path: &str, json: Json, errors: &mut Vec<RocError>) -> Option<ParamValue> {
    match json {
        Json::Number { value, .. } => Some(ParamValue::Scalar(value)),
        Json::String(s) => Some(ParamValue::Enum(s)),
        Json::Array(items) => {
            let mut points = Vec::with_capacity(items.len());
            let mut ok = true;
            for (i, item) in items.into_iter().enumerate() {
                match numbers::<2>(&format!("{path}/{i}"), item, errors) {
                    Some([x, y]) => points.push(Point::new(x, y)),
                    None => ok = false,
                }
            }
            ok.then_some(ParamValue::Curve(points))
        }
        other => {
            errors.push(RocError::TypeMismatch {
                path: path.to_owned(),
                expected: "scalar, enum or curve",
                found: other.type_name(),
            });
            None
        }
    }
}

fn mask_spec(path: &str, json: Json, errors: &mut Vec<RocError>) -> Option<MaskSpec> {
    let mut f = Fields::new(path, json, errors)?;
    let kind = match f.require("kind", errors)? {
        Json::String(s) => match s.parse::<MaskKind>() {
            Ok(k) => k,
            Err(m) => {
                errors.push(schema(&format!("{path}/kind"), m));
                return None;
            }
        },
        other => {
            errors.push(RocError::TypeMismatch {
                path: format!("{path}/kind"),
                expected: "string",
                found: other.type_name(),
            });
            return None;
        }
    };
    let field_num = |f: &mut Fields, key: &str, errors: &mut Vec<RocError>| {
        f.require(key, errors)
            .and_then(|j| number(&format!("{path}/{key}"), j, errors))
    };
    let spec = match kind {
        MaskKind::Linear => {
            let start = f.require("start", errors).and_then(|j| numbers::<2>(&format!("{path}/start"), j, errors));
            let end = f.require("end", errors).and_then(|j| numbers::<2>(&format!("{path}/end"), j, errors));
            match (start, end) {
                (Some([sx, sy]), Some([ex, ey])) => Some(MaskSpec::Linear(LinearMask {
                    start: Point::new(sx, sy),
                    end: Point::new(ex, ey),
                })),
                _ => None,
            }
        }
        MaskKind::Radial => {
            let center = f.require("center", errors).and_then(|j| numbers::<2>(&format!("{path}/center"), j, errors));
            let width = field_num(&mut f, "width", errors);
            let height = field_num(&mut f, "height", errors);
            let angle = field_num(&mut f, "angle", errors);
            match (center, width, height, angle) {
                (Some([cx, cy]), Some(width), Some(height), Some(angle)) => Some(MaskSpec::Radial(RadialMask {
                    center: Point::new(cx, cy),
                    width,
                    height,
                    angle,
                })),
                _ => None,
            }
        }
        MaskKind::Object => f
            .require("bbox", errors)
            .and_then(|j| numbers::<4>(&format!("{path}/bbox"), j, errors))
            .map(|[x1, y1, x2, y2]| {
                MaskSpec::Object(ObjectMask {
                    bbox: BBox::new(x1, y1, x2, y2),
                })
            }),
        MaskKind::Portrait => match f.require("category_id", errors) {
            Some(Json::Number {
                integer: Some(id), ..
            }) if id <= u64::from(u32::MAX) => Some(MaskSpec::Portrait(PortraitMask {
                category_id: id as u32,
            })),
            Some(other) => {
                errors.push(RocError::InvalidValue {
                    path: format!("{path}/category_id"),
                    message: format!("expected a non-negative integer, found {}", other.type_name()),
                });
                None
            }
            None => None,
        },
        MaskKind::ColorRange => match f.require("samples", errors) {
            Some(Json::Array(items)) => {
                let mut samples = Vec::with_capacity(items.len());
                let mut ok = true;
                for (i, item) in items.into_iter().enumerate() {
                    match numbers::<3>(&format!("{path}/samples/{i}"), item, errors) {
                        Some([l, a, b]) => samples.push(Lab::new(l, a, b)),
                        None => ok = false,
                    }
                }
                ok.then_some(MaskSpec::ColorRange(ColorRangeMask { samples }))
            }
            Some(other) => {
                errors.push(RocError::TypeMismatch {
                    path: format!("{path}/samples"),
                    expected: "array",
                    found: other.type_name(),
                });
                None
            }
            None => None,
        },
        MaskKind::LuminanceRange => {
            let l_min = field_num(&mut f, "l_min", errors);
            let l_max = field_num(&mut f, "l_max", errors);
            match (l_min, l_max) {
                (Some(l_min), Some(l_max)) => Some(MaskSpec::LuminanceRange(LuminanceRangeMask { l_min, l_max })),
                _ => None,
            }
        }
    };
    f.finish(errors);
    spec
}

fn tool_invocation(path: &str, json: Json, errors: &mut Vec<RocError>) -> Option<ToolInvocation> {
    let mut f = Fields::new(path, json, errors)?;
    let name = match f.require("name", errors) {
        Some(Json::String(s)) => Some(s),
        Some(other) => {
            errors.push(RocError::TypeMismatch {
                path: format!("{path}/name"),
                expected: "string",
                found: other.type_name(),
            });
            None
        }
        None => None,
    };
    let mut params = BTreeMap::new();
    let mut params_ok = true;
    if let Some(p) = f.take("params") {
        let ppath = format!("{path}/params");
        match Fields::new(&ppath, p, errors) {
            Some(pf) => {
                for (key, value) in pf.entries {
                    match param_value(&format!("{ppath}/{}", pointer_escape(&key)), value, errors) {
                        Some(v) => {
                            params.insert(key, v);
                        }
                        None => params_ok = false,
                    }
                }
            }
            None => params_ok = false,
        }
    }
    let mut mask_ok = true;
    let mask = match f.take("mask") {
        None | Some(Json::Null) => None,
        Some(m) => {
            let spec = mask_spec(&format!("{path}/mask"), m, errors);
            mask_ok = spec.is_some();
            spec
        }
    };
    f.finish(errors);
    match name {
        Some(name) if params_ok && mask_ok => Some(ToolInvocation { name, params, mask }),
        _ => None,
    }
}

fn document(json: Json, errors: &mut Vec<RocError>) -> Option<RocDocument> {
    let mut f = Fields::new("", json, errors)?;
    let tools = match f.require("tools", errors) {
        Some(Json::Array(items)) => {
            let mut tools = Vec::with_capacity(items.len());
            let mut ok = true;
            for (i, item) in items.into_iter().enumerate() {
                match tool_invocation(&format!("/tools/{i}"), item, errors) {
                    Some(t) => tools.push(t),
                    None => ok = false,
                }
            }
            ok.then_some(tools)
        }
        Some(other) => {
            errors.push(RocError::TypeMismatch {
                path: "/tools".into(),
                expected: "array",
                found: other.type_name(),
            });
            None
        }
        None => None,
    };
    f.finish(errors);
    tools.map(RocDocument::new)
}

fn in_unit(v: f64) -> bool {
    (0.0..=1.0).contains(&v)
}

fn check_unit(path: String, v: f64, errors: &mut Vec<RocError>) {
    if !in_unit(v) {
        errors.push(RocError::OutOfRange {
            path,
            value: v,
            min: 0.0,
            max: 1.0,
        });
    }
}

fn check_mask(path: &str, mask: &MaskSpec, catalog: &ToolCatalog, errors: &mut Vec<RocError>) {
    let settings = catalog.settings();
    let invalid = |errors: &mut Vec<RocError>, sub: &str, message: String| {
        errors.push(RocError::InvalidValue {
            path: format!("{path}{sub}"),
            message,
        })
    };
    match mask {
        MaskSpec::Linear(m) => {
            for (name, p) in [("start", m.start), ("end", m.end)] {
                check_unit(format!("{path}/{name}/0"), p.x, errors);
                check_unit(format!("{path}/{name}/1"), p.y, errors);
            }
        }
        MaskSpec::Radial(m) => {
            check_unit(format!("{path}/center/0"), m.center.x, errors);
            check_unit(format!("{path}/center/1"), m.center.y, errors);
            for (name, v) in [("width", m.width), ("height", m.height)] {
                if !(v.is_finite() && v > 0.0) {
                    invalid(errors, &format!("/{name}"), format!("{name} must be finite and > 0, got {v}"));
                }
            }
            if !(m.angle >= settings.angle_min && m.angle < settings.angle_max) {
                invalid(
                    errors,
                    "/angle",
                    format!(
                        "angle {} outside [{}, {})",
                        m.angle, settings.angle_min, settings.angle_max
                    ),
                );
            }
        }
        MaskSpec::Object(m) => {
            let b = m.bbox;
            for (i, v) in [b.x1, b.y1, b.x2, b.y2].into_iter().enumerate() {
                check_unit(format!("{path}/bbox/{i}"), v, errors);
            }
            if !(b.x1 < b.x2 && b.y1 < b.y2) {
                invalid(errors, "/bbox", "bbox needs x1 < x2 and y1 < y2".into());
            }
        }
        MaskSpec::Portrait(_) => {}
        MaskSpec::ColorRange(m) => {
            if m.samples.len() != settings.color_samples {
                invalid(
                    errors,
                    "/samples",
                    format!(
                        "expected {} colour samples, found {}",
                        settings.color_samples,
                        m.samples.len()
                    ),
                );
            }
            for (i, s) in m.samples.iter().enumerate() {
                if !(0.0..=100.0).contains(&s.l) {
                    errors.push(RocError::OutOfRange {
                        path: format!("{path}/samples/{i}/0"),
                        value: s.l,
                        min: 0.0,
                        max: 100.0,
                    });
                }
                for (j, v) in [(1, s.a), (2, s.b)] {
                    if !(-128.0..=128.0).contains(&v) {
                        errors.push(RocError::OutOfRange {
                            path: format!("{path}/samples/{i}/{j}"),
                            value: v,
                            min: -128.0,
                            max: 128.0,
                        });
                    }
                }
            }
        }
        MaskSpec::LuminanceRange(m) => {
            check_unit(format!("{path}/l_min"), m.l_min, errors);
            check_unit(format!("{path}/l_max"), m.l_max, errors);
            if !(m.l_min < m.l_max) {
                invalid(errors, "", "luminance range needs l_min < l_max".into());
            }
        }
    }
}

fn check_value(path: &str, kind: &ParamKind, value: &ParamValue, errors: &mut Vec<RocError>) {
    match (kind, value) {
        (ParamKind::Scalar { min, max }, ParamValue::Scalar(v)) => {
            if !(*v >= *min && *v <= *max) {
                errors.push(RocError::OutOfRange {
                    path: path.to_owned(),
                    value: *v,
                    min: *min,
                    max: *max,
                });
            }
        }
        (ParamKind::Enum { allowed }, ParamValue::Enum(v)) => {
            if !allowed.contains(v) {
                errors.push(RocError::InvalidValue {
                    path: path.to_owned(),
                    message: format!("`{v}` is not one of {allowed:?}"),
                });
            }
        }
        (ParamKind::Curve, ParamValue::Curve(points)) => {
            if points.len() < 2 {
                errors.push(RocError::InvalidValue {
                    path: path.to_owned(),
                    message: "a curve needs at least two control points".into(),
                });
            }
            for (i, p) in points.iter().enumerate() {
                check_unit(format!("{path}/{i}/0"), p.x, errors);
                check_unit(format!("{path}/{i}/1"), p.y, errors);
            }
            if points.windows(2).any(|w| !(w[0].x < w[1].x)) {
                errors.push(RocError::InvalidValue {
                    path: path.to_owned(),
                    message: "curve control points must be strictly increasing in x".into(),
                });
            }
        }
        (kind, value) => errors.push(RocError::TypeMismatch {
            path: path.to_owned(),
            expected: kind.name(),
            found: value.kind_name(),
        }),
    }
}

/// Checks a document against the catalog, returning every violation found.
pub fn validate_document(doc: &RocDocument, catalog: &ToolCatalog) -> Vec<RocError> {
    let mut errors = Vec::new();
    let mut seen = HashSet::new();
    for (i, tool) in doc.tools.iter().enumerate() {
        let path = format!("/tools/{i}");
        if !seen.insert(tool.name.as_str()) {
            errors.push(RocError::DuplicateTool {
                name: tool.name.clone(),
                path: format!("{path}/name"),
            });
        }
        let Some(schema) = catalog.get(&tool.name) else {
            errors.push(RocError::UnknownTool {
                name: tool.name.clone(),
                path: format!("{path}/name"),
            });
            continue;
        };
        for (key, value) in &tool.params {
            let ppath = format!("{path}/params/{}", pointer_escape(key));
            match schema.param(key) {
                Some(ps) => check_value(&ppath, &ps.kind, value, &mut errors),
                None => errors.push(RocError::UnknownParam {
                    tool: tool.name.clone(),
                    param: key.clone(),
                    path: ppath,
                }),
            }
        }
        let mpath = format!("{path}/mask");
        match (schema.mask_kind, &tool.mask) {
            (None, None) => {}
            (None, Some(_)) => errors.push(RocError::MaskMismatch {
                path: mpath,
                message: format!("tool `{}` is global and takes no mask", tool.name),
            }),
            (Some(kind), None) => errors.push(RocError::MaskMismatch {
                path: mpath,
                message: format!("tool `{}` requires a {kind} mask", tool.name),
            }),
            (Some(kind), Some(mask)) if mask.kind() != kind => errors.push(RocError::MaskMismatch {
                path: mpath,
                message: format!("tool `{}` requires a {kind} mask, found {}", tool.name, mask.kind()),
            }),
            (Some(_), Some(mask)) => check_mask(&mpath, mask, catalog, &mut errors),
        }
    }
    errors
}

/// Parses ROC text and collects every violation.
///
/// A syntax error is reported alone since nothing past it can be located.
pub fn validate_roc(text: &str, catalog: &ToolCatalog) -> Result<RocDocument, Vec<RocError>> {
    let json: Json = serde_json::from_str(text).map_err(|e| {
        vec![RocError::Syntax {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        }]
    })?;
    let mut errors = Vec::new();
    let doc = document(json, &mut errors);
    if let Some(doc) = &doc {
        errors.extend(validate_document(doc, catalog));
    }
    match doc {
        Some(doc) if errors.is_empty() => Ok(doc),
        _ => Err(errors),
    }
}

/// Parses and validates ROC text, failing on the first violation.
pub fn parse_roc(text: &str, catalog: &ToolCatalog) -> Result<RocDocument, RocError> {
    validate_roc(text, catalog).map_err(|mut errors| errors.swap_remove(0))
}

/// Canonical compact JSON: tools in document order, parameter keys sorted.
pub fn serialize_roc(doc: &RocDocument) -> String {
    serde_json::to_string(doc).expect("ROC documents always serialize")
}
