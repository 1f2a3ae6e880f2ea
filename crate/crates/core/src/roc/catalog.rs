//! Tool catalog: the set of retouching tools an ROC may invoke, with parameter
//! ranges, render semantics and script key mapping.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::Deserialize;
use thiserror::Error;

/// Parameter key under which a tool's mask geometry is scored and addressed.
pub const MASK_KEY: &str = "mask";

const DEFAULT_CATALOG: &str = include_str!("../../catalog/default.json");

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CatalogError {
    #[error("catalog syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("catalog constraint violated at {path}: {message}")]
    Constraint { path: String, message: String },
}

impl CatalogError {
    fn at(path: impl Into<String>, message: impl Into<String>) -> Self {
        CatalogError::Constraint {
            path: path.into(),
            message: message.into(),
        }
    }
}

/// The six local-adjustment mask families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaskKind {
    Linear,
    Radial,
    Object,
    Portrait,
    ColorRange,
    LuminanceRange,
}

impl MaskKind {
    pub const ALL: [MaskKind; 6] = [
        MaskKind::Linear,
        MaskKind::Radial,
        MaskKind::Object,
        MaskKind::Portrait,
        MaskKind::ColorRange,
        MaskKind::LuminanceRange,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MaskKind::Linear => "linear",
            MaskKind::Radial => "radial",
            MaskKind::Object => "object",
            MaskKind::Portrait => "portrait",
            MaskKind::ColorRange => "color_range",
            MaskKind::LuminanceRange => "luminance_range",
        }
    }
}

impl fmt::Display for MaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MaskKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        MaskKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown mask kind `{s}`"))
    }
}

/// Hue bands addressed by the per-colour HSL adjustments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum HueBand {
    Red,
    Orange,
    Yellow,
    Green,
    Aqua,
    Blue,
    Purple,
    Magenta,
}

impl HueBand {
    pub const ALL: [HueBand; 8] = [
        HueBand::Red,
        HueBand::Orange,
        HueBand::Yellow,
        HueBand::Green,
        HueBand::Aqua,
        HueBand::Blue,
        HueBand::Purple,
        HueBand::Magenta,
    ];

    /// Band centre on the HSV hue circle, in degrees.
    pub fn center(self) -> f64 {
        match self {
            HueBand::Red => 0.0,
            HueBand::Orange => 30.0,
            HueBand::Yellow => 60.0,
            HueBand::Green => 120.0,
            HueBand::Aqua => 180.0,
            HueBand::Blue => 240.0,
            HueBand::Purple => 270.0,
            HueBand::Magenta => 300.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            HueBand::Red => "red",
            HueBand::Orange => "orange",
            HueBand::Yellow => "yellow",
            HueBand::Green => "green",
            HueBand::Aqua => "aqua",
            HueBand::Blue => "blue",
            HueBand::Purple => "purple",
            HueBand::Magenta => "magenta",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CurveChannel {
    Rgb,
    Red,
    Green,
    Blue,
}

/// Tonal regions of the parametric curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ToneRegion {
    Shadows,
    Darks,
    Lights,
    Highlights,
}

/// Render semantics attached to a parameter.
///
/// Variant order is the order in which a tool's parameters are applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Adjustment {
    WhiteBalance,
    Temperature,
    Tint,
    Exposure,
    Contrast,
    Highlights,
    Shadows,
    Whites,
    Blacks,
    Parametric(ToneRegion),
    ToneCurve(CurveChannel),
    Hue(HueBand),
    BandSaturation(HueBand),
    BandLuminance(HueBand),
    Saturation,
    Vibrance,
    Vignette,
}

impl Adjustment {
    /// The parameter kind this adjustment consumes.
    pub fn expected_kind(self) -> &'static str {
        match self {
            Adjustment::WhiteBalance => "enum",
            Adjustment::ToneCurve(_) => "curve",
            _ => "scalar",
        }
    }
}

impl FromStr for Adjustment {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let band = |name: &str| {
            HueBand::ALL
                .into_iter()
                .find(|b| b.as_str() == name)
                .ok_or_else(|| format!("unknown hue band `{name}`"))
        };
        let adj = match s.split_once('.') {
            None => match s {
                "white_balance" => Adjustment::WhiteBalance,
                "temperature" => Adjustment::Temperature,
                "tint" => Adjustment::Tint,
                "exposure" => Adjustment::Exposure,
                "contrast" => Adjustment::Contrast,
                "highlights" => Adjustment::Highlights,
                "shadows" => Adjustment::Shadows,
                "whites" => Adjustment::Whites,
                "blacks" => Adjustment::Blacks,
                "tone_curve" => Adjustment::ToneCurve(CurveChannel::Rgb),
                "saturation" => Adjustment::Saturation,
                "vibrance" => Adjustment::Vibrance,
                "vignette" => Adjustment::Vignette,
                _ => return Err(format!("unknown adjustment `{s}`")),
            },
            Some((head, tail)) => match head {
                "tone_curve" => Adjustment::ToneCurve(match tail {
                    "red" => CurveChannel::Red,
                    "green" => CurveChannel::Green,
                    "blue" => CurveChannel::Blue,
                    _ => return Err(format!("unknown curve channel `{tail}`")),
                }),
                "parametric" => Adjustment::Parametric(match tail {
                    "shadows" => ToneRegion::Shadows,
                    "darks" => ToneRegion::Darks,
                    "lights" => ToneRegion::Lights,
                    "highlights" => ToneRegion::Highlights,
                    _ => return Err(format!("unknown tone region `{tail}`")),
                }),
                "hue" => Adjustment::Hue(band(tail)?),
                "band_saturation" => Adjustment::BandSaturation(band(tail)?),
                "band_luminance" => Adjustment::BandLuminance(band(tail)?),
                _ => return Err(format!("unknown adjustment `{s}`")),
            },
        };
        Ok(adj)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ParamKind {
    Scalar { min: f64, max: f64 },
    Enum { allowed: Vec<String> },
    /// Control points in `[0, 1]²`, strictly increasing in x.
    Curve,
}

impl ParamKind {
    pub fn name(&self) -> &'static str {
        match self {
            ParamKind::Scalar { .. } => "scalar",
            ParamKind::Enum { .. } => "enum",
            ParamKind::Curve => "curve",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamSchema {
    pub name: String,
    pub kind: ParamKind,
    pub adjust: Option<Adjustment>,
    /// Develop-settings key emitted by the script translator.
    pub script_key: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ToolSchema {
    pub name: String,
    pub params: BTreeMap<String, ParamSchema>,
    pub mask_kind: Option<MaskKind>,
}

impl ToolSchema {
    pub fn param(&self, name: &str) -> Option<&ParamSchema> {
        self.params.get(name)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PortraitCategory {
    pub id: u32,
    pub name: String,
}

/// Catalog-wide knobs shared by validation, rendering and scoring.
#[derive(Debug, Clone, PartialEq)]
pub struct CatalogSettings {
    pub angle_min: f64,
    pub angle_max: f64,
    /// Number of Lab samples a colour-range mask carries.
    pub color_samples: usize,
    /// ΔE00 at which a colour-range mask weight reaches zero.
    pub color_tolerance: f64,
    /// Luminance feather outside a luminance-range mask, on the `L*/100` scale.
    pub luminance_feather: f64,
    pub portrait_categories: Vec<PortraitCategory>,
}

impl Default for CatalogSettings {
    fn default() -> Self {
        let names = [
            "face", "hair", "eyes", "skin", "lips", "teeth", "eyebrows", "body",
        ];
        Self {
            angle_min: -180.0,
            angle_max: 180.0,
            color_samples: 5,
            color_tolerance: 20.0,
            luminance_feather: 0.05,
            portrait_categories: names
                .iter()
                .enumerate()
                .map(|(id, name)| PortraitCategory {
                    id: id as u32,
                    name: (*name).to_string(),
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ToolCatalog {
    tools: BTreeMap<String, ToolSchema>,
    settings: CatalogSettings,
}

impl ToolCatalog {
    /// The catalog bundled with the crate.
    pub fn default_catalog() -> Self {
        load_catalog(DEFAULT_CATALOG).expect("bundled catalog is valid")
    }

    pub fn default_catalog_text() -> &'static str {
        DEFAULT_CATALOG
    }

    pub fn from_parts(tools: Vec<ToolSchema>, settings: CatalogSettings) -> Result<Self, CatalogError> {
        let mut map = BTreeMap::new();
        for (i, tool) in tools.into_iter().enumerate() {
            if tool.name.is_empty() {
                return Err(CatalogError::at(format!("/tools/{i}/name"), "tool name is empty"));
            }
            if map.contains_key(&tool.name) {
                return Err(CatalogError::at(
                    format!("/tools/{i}/name"),
                    format!("duplicate tool name `{}`", tool.name),
                ));
            }
            map.insert(tool.name.clone(), tool);
        }
        let catalog = ToolCatalog {
            tools: map,
            settings,
        };
        catalog.check()?;
        Ok(catalog)
    }

    pub fn get(&self, name: &str) -> Option<&ToolSchema> {
        self.tools.get(name)
    }

    pub fn tools(&self) -> impl Iterator<Item = &ToolSchema> {
        self.tools.values()
    }

    pub fn len(&self) -> usize {
        self.tools.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tools.is_empty()
    }

    pub fn settings(&self) -> &CatalogSettings {
        &self.settings
    }

    pub fn settings_mut(&mut self) -> &mut CatalogSettings {
        &mut self.settings
    }

    fn check(&self) -> Result<(), CatalogError> {
        let s = &self.settings;
        if !(s.angle_min.is_finite() && s.angle_max.is_finite() && s.angle_min < s.angle_max) {
            return Err(CatalogError::at(
                "/settings/angle_min",
                "angle bounds must be finite with angle_min < angle_max",
            ));
        }
        if s.color_samples == 0 {
            return Err(CatalogError::at("/settings/color_samples", "must be at least 1"));
        }
        if !(s.color_tolerance.is_finite() && s.color_tolerance > 0.0) {
            return Err(CatalogError::at("/settings/color_tolerance", "must be finite and > 0"));
        }
        if !(s.luminance_feather.is_finite() && s.luminance_feather >= 0.0) {
            return Err(CatalogError::at("/settings/luminance_feather", "must be finite and >= 0"));
        }
        let mut ids = BTreeSet::new();
        for (i, cat) in s.portrait_categories.iter().enumerate() {
            if !ids.insert(cat.id) {
                return Err(CatalogError::at(
                    format!("/settings/portrait_categories/{i}/id"),
                    format!("duplicate category id {}", cat.id),
                ));
            }
        }

        let mut global_keys: BTreeMap<&str, &str> = BTreeMap::new();
        for tool in self.tools.values() {
            let base = format!("/tools/{}", tool.name);
            let mut local_keys = BTreeSet::new();
            for p in tool.params.values() {
                let path = format!("{base}/params/{}", p.name);
                if p.name.is_empty() {
                    return Err(CatalogError::at(path, "parameter name is empty"));
                }
                if p.name == MASK_KEY {
                    return Err(CatalogError::at(path, "`mask` is reserved for mask geometry"));
                }
                match &p.kind {
                    ParamKind::Scalar { min, max } => {
                        if !(min.is_finite() && max.is_finite()) {
                            return Err(CatalogError::at(format!("{path}/min"), "bounds must be finite"));
                        }
                        if min >= max {
                            return Err(CatalogError::at(
                                format!("{path}/min"),
                                format!("min ({min}) must be < max ({max})"),
                            ));
                        }
                    }
                    ParamKind::Enum { allowed } => {
                        if allowed.is_empty() {
                            return Err(CatalogError::at(format!("{path}/allowed"), "enum has no values"));
                        }
                        let unique: BTreeSet<_> = allowed.iter().collect();
                        if unique.len() != allowed.len() {
                            return Err(CatalogError::at(format!("{path}/allowed"), "duplicate enum value"));
                        }
                    }
                    ParamKind::Curve => {}
                }
                if let Some(adj) = p.adjust {
                    if adj.expected_kind() != p.kind.name() {
                        return Err(CatalogError::at(
                            format!("{path}/adjust"),
                            format!(
                                "adjustment {adj:?} needs a {} parameter, found {}",
                                adj.expected_kind(),
                                p.kind.name()
                            ),
                        ));
                    }
                }
                if let Some(key) = &p.script_key {
                    if !is_script_identifier(key) {
                        return Err(CatalogError::at(
                            format!("{path}/script_key"),
                            format!("`{key}` is not a valid script identifier"),
                        ));
                    }
                    if tool.mask_kind.is_some() {
                        if !local_keys.insert(key.as_str()) {
                            return Err(CatalogError::at(
                                format!("{path}/script_key"),
                                format!("script key `{key}` used twice in this tool"),
                            ));
                        }
                    } else if let Some(other) = global_keys.insert(key, &tool.name) {
                        return Err(CatalogError::at(
                            format!("{path}/script_key"),
                            format!("script key `{key}` already used by tool `{other}`"),
                        ));
                    }
                }
            }
        }
        Ok(())
    }
}

pub(crate) fn is_script_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCatalog {
    #[serde(default)]
    settings: RawSettings,
    #[serde(default)]
    tools: Vec<RawTool>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawSettings {
    angle_min: Option<f64>,
    angle_max: Option<f64>,
    color_samples: Option<usize>,
    color_tolerance: Option<f64>,
    luminance_feather: Option<f64>,
    portrait_categories: Option<Vec<RawCategory>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCategory {
    id: u32,
    name: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTool {
    name: String,
    #[serde(default)]
    mask: Option<String>,
    #[serde(default)]
    params: Vec<RawParam>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawParam {
    name: String,
    kind: String,
    min: Option<f64>,
    max: Option<f64>,
    allowed: Option<Vec<String>>,
    adjust: Option<String>,
    script_key: Option<String>,
}

/// Parses and validates a catalog file.
pub fn load_catalog(text: &str) -> Result<ToolCatalog, CatalogError> {
    let raw: RawCatalog = serde_json::from_str(text).map_err(|e| CatalogError::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;

    let defaults = CatalogSettings::default();
    let rs = raw.settings;
    let settings = CatalogSettings {
        angle_min: rs.angle_min.unwrap_or(defaults.angle_min),
        angle_max: rs.angle_max.unwrap_or(defaults.angle_max),
        color_samples: rs.color_samples.unwrap_or(defaults.color_samples),
        color_tolerance: rs.color_tolerance.unwrap_or(defaults.color_tolerance),
        luminance_feather: rs.luminance_feather.unwrap_or(defaults.luminance_feather),
        portrait_categories: match rs.portrait_categories {
            Some(cats) => cats
                .into_iter()
                .map(|c| PortraitCategory { id: c.id, name: c.name })
                .collect(),
            None => defaults.portrait_categories,
        },
    };

    let mut tools = Vec::with_capacity(raw.tools.len());
    for (ti, rt) in raw.tools.into_iter().enumerate() {
        let mask_kind = match rt.mask.as_deref() {
            None | Some("none") => None,
            Some(s) => Some(
                s.parse::<MaskKind>()
                    .map_err(|m| CatalogError::at(format!("/tools/{ti}/mask"), m))?,
            ),
        };
        let mut params = BTreeMap::new();
        for (pi, rp) in rt.params.into_iter().enumerate() {
            let path = format!("/tools/{ti}/params/{pi}");
            let kind = match rp.kind.as_str() {
                "scalar" => ParamKind::Scalar {
                    min: rp
                        .min
                        .ok_or_else(|| CatalogError::at(format!("{path}/min"), "scalar needs min"))?,
                    max: rp
                        .max
                        .ok_or_else(|| CatalogError::at(format!("{path}/max"), "scalar needs max"))?,
                },
                "enum" => ParamKind::Enum {
                    allowed: rp
                        .allowed
                        .ok_or_else(|| CatalogError::at(format!("{path}/allowed"), "enum needs allowed"))?,
                },
                "curve" => ParamKind::Curve,
                other => {
                    return Err(CatalogError::at(
                        format!("{path}/kind"),
                        format!("unknown parameter kind `{other}`"),
                    ))
                }
            };
            let adjust = rp
                .adjust
                .map(|a| a.parse::<Adjustment>())
                .transpose()
                .map_err(|m| CatalogError::at(format!("{path}/adjust"), m))?;
            if params.contains_key(&rp.name) {
                return Err(CatalogError::at(
                    format!("{path}/name"),
                    format!("duplicate parameter `{}`", rp.name),
                ));
            }
            params.insert(
                rp.name.clone(),
                ParamSchema {
                    name: rp.name,
                    kind,
                    adjust,
                    script_key: rp.script_key,
                },
            );
        }
        tools.push(ToolSchema {
            name: rt.name,
            params,
            mask_kind,
        });
    }

    ToolCatalog::from_parts(tools, settings)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_catalog_covers_global_and_mask_families() {
        let cat = ToolCatalog::default_catalog();
        for name in ["Exposure", "Contrast", "Highlights", "Shadows", "ToneCurve"] {
            let tool = cat.get(name).unwrap_or_else(|| panic!("missing {name}"));
            assert_eq!(tool.mask_kind, None);
        }
        for kind in MaskKind::ALL {
            assert!(
                cat.tools().any(|t| t.mask_kind == Some(kind)),
                "no tool for mask kind {kind}"
            );
        }
        assert!(cat.len() >= 20);
    }

    #[test]
    fn empty_catalog_is_valid() {
        let cat = load_catalog("{}").unwrap();
        assert!(cat.is_empty());
        assert_eq!(cat.settings(), &CatalogSettings::default());
        assert!(load_catalog(r#"{"tools":[]}"#).unwrap().is_empty());
    }

    #[test]
    fn rejects_inverted_range() {
        let text = r#"{"tools":[{"name":"Exposure","params":[{"name":"value","kind":"scalar","min":5,"max":5}]}]}"#;
        match load_catalog(text) {
            Err(CatalogError::Constraint { path, .. }) => assert_eq!(path, "/tools/Exposure/params/value/min"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_duplicate_tools_and_params() {
        let dup_tool = r#"{"tools":[{"name":"A","params":[]},{"name":"A","params":[]}]}"#;
        assert!(matches!(load_catalog(dup_tool), Err(CatalogError::Constraint { path, .. }) if path == "/tools/1/name"));
        let dup_param = r#"{"tools":[{"name":"A","params":[
            {"name":"v","kind":"scalar","min":0,"max":1},
            {"name":"v","kind":"scalar","min":0,"max":1}]}]}"#;
        assert!(matches!(load_catalog(dup_param), Err(CatalogError::Constraint { path, .. }) if path == "/tools/0/params/1/name"));
    }

    #[test]
    fn rejects_empty_name_and_reserved_param() {
        let empty = r#"{"tools":[{"name":"","params":[]}]}"#;
        assert!(matches!(load_catalog(empty), Err(CatalogError::Constraint { .. })));
        let reserved = r#"{"tools":[{"name":"A","params":[{"name":"mask","kind":"curve"}]}]}"#;
        assert!(matches!(load_catalog(reserved), Err(CatalogError::Constraint { .. })));
    }

    #[test]
    fn rejects_mismatched_adjustment_kind() {
        let text = r#"{"tools":[{"name":"A","params":[{"name":"v","kind":"curve","adjust":"exposure"}]}]}"#;
        assert!(matches!(load_catalog(text), Err(CatalogError::Constraint { path, .. }) if path.ends_with("/adjust")));
    }

    #[test]
    fn rejects_bad_settings() {
        let text = r#"{"settings":{"angle_min":10,"angle_max":-10}}"#;
        assert!(matches!(load_catalog(text), Err(CatalogError::Constraint { path, .. }) if path == "/settings/angle_min"));
        let text = r#"{"settings":{"color_samples":0}}"#;
        assert!(load_catalog(text).is_err());
    }

    #[test]
    fn syntax_errors_carry_position() {
        match load_catalog("{\n  \"tools\": [,]\n}") {
            Err(CatalogError::Syntax { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn adjustment_names_parse() {
        assert_eq!("hue.aqua".parse::<Adjustment>(), Ok(Adjustment::Hue(HueBand::Aqua)));
        assert_eq!(
            "tone_curve.red".parse::<Adjustment>(),
            Ok(Adjustment::ToneCurve(CurveChannel::Red))
        );
        assert!("frobnicate".parse::<Adjustment>().is_err());
    }
}
