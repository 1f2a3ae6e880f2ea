//! ROC document types.

use std::collections::BTreeMap;

use serde::{Serialize, Serializer};

use crate::color::Lab;

use super::catalog::{MaskKind, MASK_KEY};

/// A normalized image-plane point; both coordinates lie in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

impl Serialize for Point {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        [self.x, self.y].serialize(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinearMask {
    pub start: Point,
    pub end: Point,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RadialMask {
    pub center: Point,
    /// Full ellipse width, normalized to the image width.
    pub width: f64,
    /// Full ellipse height, normalized to the image height.
    pub height: f64,
    /// Rotation in degrees.
    pub angle: f64,
}

/// Axis-aligned normalized box `[x1, y1, x2, y2]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BBox {
    pub x1: f64,
    pub y1: f64,
    pub x2: f64,
    pub y2: f64,
}

impl BBox {
    pub const fn new(x1: f64, y1: f64, x2: f64, y2: f64) -> Self {
        Self { x1, y1, x2, y2 }
    }

    pub fn area(&self) -> f64 {
        (self.x2 - self.x1).max(0.0) * (self.y2 - self.y1).max(0.0)
    }
}

impl Serialize for BBox {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        [self.x1, self.y1, self.x2, self.y2].serialize(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ObjectMask {
    pub bbox: BBox,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PortraitMask {
    pub category_id: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ColorRangeMask {
    pub samples: Vec<Lab>,
}

/// Luminance bounds on the `L*/100` scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LuminanceRangeMask {
    pub l_min: f64,
    pub l_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MaskSpec {
    Linear(LinearMask),
    Radial(RadialMask),
    Object(ObjectMask),
    Portrait(PortraitMask),
    ColorRange(ColorRangeMask),
    LuminanceRange(LuminanceRangeMask),
}

impl MaskSpec {
    pub fn kind(&self) -> MaskKind {
        match self {
            MaskSpec::Linear(_) => MaskKind::Linear,
            MaskSpec::Radial(_) => MaskKind::Radial,
            MaskSpec::Object(_) => MaskKind::Object,
            MaskSpec::Portrait(_) => MaskKind::Portrait,
            MaskSpec::ColorRange(_) => MaskKind::ColorRange,
            MaskSpec::LuminanceRange(_) => MaskKind::LuminanceRange,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum ParamValue {
    Scalar(f64),
    Enum(String),
    Curve(Vec<Point>),
}

impl ParamValue {
    pub fn kind_name(&self) -> &'static str {
        match self {
            ParamValue::Scalar(_) => "scalar",
            ParamValue::Enum(_) => "enum",
            ParamValue::Curve(_) => "curve",
        }
    }

    pub fn as_scalar(&self) -> Option<f64> {
        match self {
            ParamValue::Scalar(v) => Some(*v),
            _ => None,
        }
    }
}

impl From<f64> for ParamValue {
    fn from(v: f64) -> Self {
        ParamValue::Scalar(v)
    }
}

/// One tool call: a catalog tool, its parameter values and an optional mask.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ToolInvocation {
    pub name: String,
    pub params: BTreeMap<String, ParamValue>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mask: Option<MaskSpec>,
}

impl ToolInvocation {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            params: BTreeMap::new(),
            mask: None,
        }
    }

    pub fn with_param(mut self, key: impl Into<String>, value: impl Into<ParamValue>) -> Self {
        self.params.insert(key.into(), value.into());
        self
    }

    pub fn with_mask(mut self, mask: MaskSpec) -> Self {
        self.mask = Some(mask);
        self
    }

    /// Scored parameter keys: the parameter names plus [`MASK_KEY`] when a
    /// mask is present.
    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.params
            .keys()
            .map(String::as_str)
            .chain(self.mask.as_ref().map(|_| MASK_KEY))
    }

    pub fn key_count(&self) -> usize {
        self.params.len() + usize::from(self.mask.is_some())
    }

    pub fn has_key(&self, key: &str) -> bool {
        if key == MASK_KEY {
            self.mask.is_some()
        } else {
            self.params.contains_key(key)
        }
    }
}

/// An ordered list of tool invocations.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct RocDocument {
    pub tools: Vec<ToolInvocation>,
}

impl RocDocument {
    pub fn new(tools: Vec<ToolInvocation>) -> Self {
        Self { tools }
    }

    pub fn is_empty(&self) -> bool {
        self.tools.is_empty()
    }

    pub fn len(&self) -> usize {
        self.tools.len()
    }

    pub fn get(&self, name: &str) -> Option<&ToolInvocation> {
        self.tools.iter().find(|t| t.name == name)
    }

    pub fn total_keys(&self) -> usize {
        self.tools.iter().map(ToolInvocation::key_count).sum()
    }
}
