//! Retouching-operation configuration (ROC): the tool catalog, the document
//! model, its text format and agent-response extraction.

mod catalog;
mod document;
mod parse;
mod response;

pub use catalog::{
    load_catalog, Adjustment, CatalogError, CatalogSettings, CurveChannel, HueBand, MaskKind, ParamKind,
    ParamSchema, PortraitCategory, ToneRegion, ToolCatalog, ToolSchema, MASK_KEY,
};
pub(crate) use catalog::is_script_identifier;
pub use document::{
    BBox, ColorRangeMask, LinearMask, LuminanceRangeMask, MaskSpec, ObjectMask, ParamValue, Point,
    PortraitMask, RadialMask, RocDocument, ToolInvocation,
};
pub use parse::{parse_roc, serialize_roc, validate_document, validate_roc, RocError};
pub use response::{format_agent_response, parse_agent_response, AgentResponse, ResponseError};
