//! Deterministic render sandbox: applies ROC edits to linear-light images.

mod adjust;
mod curve;
mod image;
pub mod io;
mod mask;

use thiserror::Error;

use crate::roc::{validate_document, Adjustment, ParamValue, RocDocument, RocError, ToolCatalog, ToolInvocation};

pub use curve::ToneCurve;
pub use image::{BitDepth, ImageBuffer, MaskBuffer, Segmentation};
pub use io::{png_dimensions, read_mask_png, read_png, read_segmentation_png, write_gray_png, write_png};
pub use mask::rasterize_mask;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RenderError {
    #[error("invalid image: {0}")]
    InvalidImage(String),
    #[error("dimension mismatch: expected {}x{}, found {}x{}", expected.0, expected.1, found.0, found.1)]
    DimensionMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },
    #[error("portrait mask requires a segmentation side-file")]
    MissingSegmentation,
    #[error("tool `{0}` is not supported by the renderer")]
    UnsupportedTool(String),
    #[error("tool `{0}` carries a mask; use apply_local")]
    UnexpectedMask(String),
    #[error("document rejected: {0}")]
    InvalidDocument(RocError),
    #[error("png: {0}")]
    Png(String),
    #[error("render cancelled: {0}")]
    Cancelled(String),
}

/// The `(adjustment, value)` pairs of `tool` in application order, with
/// neutral values dropped.
fn plan<'a>(tool: &'a ToolInvocation, catalog: &ToolCatalog) -> Result<Vec<(Adjustment, &'a ParamValue)>, RenderError> {
    let unsupported = || RenderError::UnsupportedTool(tool.name.clone());
    let schema = catalog.get(&tool.name).ok_or_else(unsupported)?;
    let mut steps = Vec::with_capacity(tool.params.len());
    for (key, value) in &tool.params {
        let adj = schema.param(key).and_then(|p| p.adjust).ok_or_else(unsupported)?;
        if adj.expected_kind() != value.kind_name() {
            return Err(unsupported());
        }
        if !adjust::is_neutral(adj, value) {
            steps.push((adj, value));
        }
    }
    steps.sort_by_key(|(adj, _)| *adj);
    Ok(steps)
}

fn develop(img: &ImageBuffer, steps: &[(Adjustment, &ParamValue)]) -> ImageBuffer {
    let mut out = img.clone();
    for (adj, value) in steps {
        adjust::apply(&mut out, *adj, value);
    }
    out
}

/// Applies the parameters of an unmasked tool to the whole image.
pub fn apply_global(img: &ImageBuffer, tool: &ToolInvocation, catalog: &ToolCatalog) -> Result<ImageBuffer, RenderError> {
    if tool.mask.is_some() {
        return Err(RenderError::UnexpectedMask(tool.name.clone()));
    }
    let steps = plan(tool, catalog)?;
    Ok(develop(img, &steps))
}

/// Blends the tool's adjustments into `img` with per-pixel weights:
/// `(1 − w)·img + w·adjusted`. Weight-0 pixels are copied unchanged.
///
/// Any mask carried by `tool` itself is ignored in favour of `mask`.
pub fn apply_local(
    img: &ImageBuffer,
    tool: &ToolInvocation,
    mask: &MaskBuffer,
    catalog: &ToolCatalog,
) -> Result<ImageBuffer, RenderError> {
    if mask.dims() != img.dims() {
        return Err(RenderError::DimensionMismatch {
            expected: img.dims(),
            found: mask.dims(),
        });
    }
    let steps = plan(tool, catalog)?;
    if steps.is_empty() || mask.weights().iter().all(|&w| w == 0.0) {
        return Ok(img.clone());
    }
    let adjusted = develop(img, &steps);
    let mut out = img.clone();
    let dst = out.data_mut();
    for (i, &w) in mask.weights().iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        for c in 0..3 {
            let k = i * 3 + c;
            dst[k] = if w == 1.0 {
                adjusted.data()[k]
            } else {
                image::sanitize((1.0 - w) * dst[k] + w * adjusted.data()[k])
            };
        }
    }
    Ok(out)
}

/// Applies every tool of `doc` in document order.
pub fn apply_roc(
    img: &ImageBuffer,
    doc: &RocDocument,
    catalog: &ToolCatalog,
    segmentation: Option<&Segmentation>,
) -> Result<ImageBuffer, RenderError> {
    apply_roc_with(img, doc, catalog, segmentation, &mut |_, _| Ok(()))
}

/// As [`apply_roc`], calling `observer(done, total)` before the first tool and
/// after each one. An observer error aborts the render.
pub fn apply_roc_with(
    img: &ImageBuffer,
    doc: &RocDocument,
    catalog: &ToolCatalog,
    segmentation: Option<&Segmentation>,
    observer: &mut dyn FnMut(usize, usize) -> Result<(), RenderError>,
) -> Result<ImageBuffer, RenderError> {
    if let Some(err) = validate_document(doc, catalog).into_iter().next() {
        return Err(RenderError::InvalidDocument(err));
    }
    if let Some(seg) = segmentation {
        if seg.dims() != img.dims() {
            return Err(RenderError::DimensionMismatch {
                expected: img.dims(),
                found: seg.dims(),
            });
        }
    }
    let total = doc.tools.len();
    observer(0, total)?;
    let mut current = img.clone();
    for (i, tool) in doc.tools.iter().enumerate() {
        current = match &tool.mask {
            None => apply_global(&current, tool, catalog)?,
            Some(spec) => {
                let weights = rasterize_mask(spec, &current, segmentation, catalog.settings())?;
                apply_local(&current, tool, &weights, catalog)?
            }
        };
        observer(i + 1, total)?;
    }
    Ok(current)
}
