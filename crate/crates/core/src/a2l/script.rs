//! ROC → Lightroom-SDK-style Lua script translation.
//!
//! The script applies one develop-settings table to the target photo. Global
//! parameters become top-level entries named by their catalog script keys;
//! each masked tool becomes one entry of `MaskGroupBasedCorrections`.
//! Entries are sorted by key and numbers are printed in shortest round-trip
//! form, so the output depends only on the document.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::roc::{MaskSpec, ParamValue, RocDocument, ToolCatalog, ToolInvocation};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ScriptError {
    #[error("tool `{tool}` has no script mapping{}", param.as_ref().map(|p| format!(" for `{p}`")).unwrap_or_default())]
    UnmappedTool { tool: String, param: Option<String> },
}

enum Lua {
    Num(f64),
    Str(String),
    Bool(bool),
    List(Vec<Lua>),
    Table(BTreeMap<String, Lua>),
}

fn num(v: f64) -> String {
    if v == v.trunc() && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v:?}")
    }
}

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            c if c.is_control() => {
                let _ = write!(out, "\\{}", c as u32);
            }
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

fn render(value: &Lua, indent: usize, out: &mut String) {
    let pad = "  ".repeat(indent + 1);
    let close = "  ".repeat(indent);
    match value {
        Lua::Num(v) => out.push_str(&num(*v)),
        Lua::Str(s) => out.push_str(&quote(s)),
        Lua::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Lua::List(items) if items.iter().all(|i| matches!(i, Lua::Num(_))) => {
            out.push_str("{ ");
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                render(item, indent + 1, out);
            }
            out.push_str(if items.is_empty() { "}" } else { " }" });
        }
        Lua::List(items) => {
            out.push_str("{\n");
            for item in items {
                out.push_str(&pad);
                render(item, indent + 1, out);
                out.push_str(",\n");
            }
            out.push_str(&close);
            out.push('}');
        }
        Lua::Table(map) if map.is_empty() => out.push_str("{}"),
        Lua::Table(map) => {
            out.push_str("{\n");
            for (k, v) in map {
                out.push_str(&pad);
                if crate::roc::is_script_identifier(k) {
                    out.push_str(k);
                } else {
                    let _ = write!(out, "[{}]", quote(k));
                }
                out.push_str(" = ");
                render(v, indent + 1, out);
                out.push_str(",\n");
            }
            out.push_str(&close);
            out.push('}');
        }
    }
}

fn value(v: &ParamValue) -> Lua {
    match v {
        ParamValue::Scalar(x) => Lua::Num(*x),
        ParamValue::Enum(s) => Lua::Str(s.clone()),
        // Curves use the 0–255 point convention of develop settings.
        ParamValue::Curve(points) => Lua::List(
            points
                .iter()
                .flat_map(|p| [Lua::Num(p.x * 255.0), Lua::Num(p.y * 255.0)])
                .collect(),
        ),
    }
}

fn params(tool: &ToolInvocation, catalog: &ToolCatalog) -> Result<BTreeMap<String, Lua>, ScriptError> {
    let unmapped = |param: Option<&String>| ScriptError::UnmappedTool {
        tool: tool.name.clone(),
        param: param.cloned(),
    };
    let schema = catalog.get(&tool.name).ok_or_else(|| unmapped(None))?;
    let mut out = BTreeMap::new();
    for (key, v) in &tool.params {
        let script_key = schema
            .param(key)
            .and_then(|p| p.script_key.as_ref())
            .ok_or_else(|| unmapped(Some(key)))?;
        out.insert(script_key.clone(), value(v));
    }
    Ok(out)
}

fn table<const N: usize>(entries: [(&str, Lua); N]) -> Lua {
    Lua::Table(entries.into_iter().map(|(k, v)| (k.to_owned(), v)).collect())
}

fn mask_table(mask: &MaskSpec) -> Lua {
    match mask {
        MaskSpec::Linear(m) => table([
            ("What", Lua::Str("Mask/Gradient".into())),
            ("FullX", Lua::Num(m.start.x)),
            ("FullY", Lua::Num(m.start.y)),
            ("ZeroX", Lua::Num(m.end.x)),
            ("ZeroY", Lua::Num(m.end.y)),
        ]),
        MaskSpec::Radial(m) => table([
            ("What", Lua::Str("Mask/CircularGradient".into())),
            ("Left", Lua::Num(m.center.x - m.width / 2.0)),
            ("Right", Lua::Num(m.center.x + m.width / 2.0)),
            ("Top", Lua::Num(m.center.y - m.height / 2.0)),
            ("Bottom", Lua::Num(m.center.y + m.height / 2.0)),
            ("Angle", Lua::Num(m.angle)),
            ("Feather", Lua::Num(100.0)),
        ]),
        MaskSpec::Object(m) => table([
            ("What", Lua::Str("Mask/Object".into())),
            ("Left", Lua::Num(m.bbox.x1)),
            ("Top", Lua::Num(m.bbox.y1)),
            ("Right", Lua::Num(m.bbox.x2)),
            ("Bottom", Lua::Num(m.bbox.y2)),
        ]),
        MaskSpec::Portrait(m) => table([
            ("What", Lua::Str("Mask/Person".into())),
            ("CategoryId", Lua::Num(f64::from(m.category_id))),
        ]),
        MaskSpec::ColorRange(m) => table([
            ("What", Lua::Str("Mask/RangeMask".into())),
            ("Type", Lua::Str("Color".into())),
            (
                "SampleColors",
                Lua::List(
                    m.samples
                        .iter()
                        .map(|s| Lua::List(vec![Lua::Num(s.l), Lua::Num(s.a), Lua::Num(s.b)]))
                        .collect(),
                ),
            ),
        ]),
        MaskSpec::LuminanceRange(m) => table([
            ("What", Lua::Str("Mask/RangeMask".into())),
            ("Type", Lua::Str("Luminance".into())),
            ("LumRange", Lua::List(vec![Lua::Num(m.l_min), Lua::Num(m.l_max)])),
        ]),
    }
}

const PRELUDE: &str = r#"local LrApplication = import "LrApplication"
local LrTasks = import "LrTasks"
"#;

const APPLY: &str = r#"LrTasks.startAsyncTask(function()
  local catalog = LrApplication.activeCatalog()
  local photo = catalog:getTargetPhoto()
  if photo == nil then
    return
  end
  catalog:withWriteAccessDo("Apply ROC", function()
    photo:applyDevelopSettings(settings)
  end)
end)
"#;

/// Translates a validated document into script text.
pub fn translate_roc_to_script(doc: &RocDocument, catalog: &ToolCatalog) -> Result<String, ScriptError> {
    let mut settings = BTreeMap::new();
    let mut corrections = Vec::new();
    for tool in &doc.tools {
        let mut entries = params(tool, catalog)?;
        match &tool.mask {
            None => settings.append(&mut entries),
            Some(mask) => {
                entries.insert("What".into(), Lua::Str("Correction".into()));
                entries.insert("CorrectionActive".into(), Lua::Bool(true));
                entries.insert("CorrectionAmount".into(), Lua::Num(1.0));
                entries.insert("CorrectionName".into(), Lua::Str(tool.name.clone()));
                entries.insert("CorrectionMasks".into(), Lua::List(vec![mask_table(mask)]));
                corrections.push(Lua::Table(entries));
            }
        }
    }
    if !corrections.is_empty() {
        settings.insert("MaskGroupBasedCorrections".into(), Lua::List(corrections));
    }
    let mut out = String::from(PRELUDE);
    out.push_str("\nlocal settings = ");
    render(&Lua::Table(settings), 0, &mut out);
    out.push_str("\n\n");
    out.push_str(APPLY);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_has_empty_settings() {
        let s = translate_roc_to_script(&RocDocument::default(), &ToolCatalog::default_catalog()).unwrap();
        assert!(s.contains("local settings = {}\n"), "{s}");
    }

    #[test]
    fn mapped_key() {
        let doc = RocDocument::new(vec![ToolInvocation::new("Exposure").with_param("value", 0.5)]);
        let s = translate_roc_to_script(&doc, &ToolCatalog::default_catalog()).unwrap();
        assert!(s.contains("  Exposure2012 = 0.5,\n"), "{s}");
    }

    #[test]
    fn numbers_and_strings() {
        assert_eq!(num(-20.0), "-20");
        assert_eq!(num(0.1), "0.1");
        assert_eq!(num(1e-7), "1e-7");
        assert_eq!(quote("a\"b\\"), "\"a\\\"b\\\\\"");
    }

    #[test]
    fn unknown_tool_is_unmapped() {
        let doc = RocDocument::new(vec![ToolInvocation::new("Sharpen")]);
        assert!(matches!(
            translate_roc_to_script(&doc, &ToolCatalog::default_catalog()),
            Err(ScriptError::UnmappedTool { param: None, .. })
        ));
    }
}
