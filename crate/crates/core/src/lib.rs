//! Non-model machinery for an agentic photo-retouching system.
//!
//! * [`roc`]: the retouching-operation document model and tool catalog.
//! * [`reward`]: format, operation-accuracy and perceptual-quality rewards and
//!   group-relative advantages.
//! * [`render`]: a deterministic sandbox that applies ROC edits to images.
//! * [`metrics`]: pixel and region-weighted fidelity metrics.
//! * [`a2l`]: the agent-to-editor client/server protocol.

// `!(a < b)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod a2l;
pub mod color;
pub mod metrics;
pub mod render;
pub mod reward;
pub mod roc;

pub use color::{ciede2000, srgb_to_lab, Lab};
pub use render::{apply_roc, ImageBuffer, MaskBuffer, RenderError, Segmentation};
pub use reward::{group_advantages, total_reward, GroupSample, RewardBreakdown, RewardConfig};
pub use roc::{
    load_catalog, parse_agent_response, parse_roc, serialize_roc, MaskSpec, RocDocument, ToolCatalog,
    ToolInvocation,
};
