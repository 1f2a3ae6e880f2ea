//! Reward kernels: format, retouching-operation accuracy (ROA),
//! perceptual quality (PQ), their sum, and group-relative advantages.

mod pq;
mod roa;
pub mod similarity;

use std::fmt::Write as _;

use thiserror::Error;

use crate::metrics::MetricError;
use crate::render::{apply_roc, BitDepth, ImageBuffer, RenderError, Segmentation};
use crate::roc::{parse_agent_response, RocDocument, ToolCatalog};

pub use pq::{combine_pq, pq_reward, PqTerms, DEFAULT_GAMMA};
pub use roa::{param_name_reward, param_value_reward, roa_reward, roa_terms, tool_name_reward, RoaTerms};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RewardError {
    #[error("target document has no tools")]
    EmptyTarget,
    #[error("invalid range [{min}, {max}]")]
    BadRange { min: f64, max: f64 },
    #[error("degenerate target: {0}")]
    DegenerateTarget(String),
    #[error("tone curve needs at least two control points")]
    DegenerateCurve,
    #[error("colour samples differ in count: predicted {pred}, target {target}")]
    SampleCountMismatch { pred: usize, target: usize },
    #[error("no parameter type for `{tool}.{param}` in the catalog")]
    UnknownParamType { tool: String, param: String },
    #[error("gamma {0} outside [0, 1]")]
    InvalidGamma(f64),
    #[error("group of {0} rewards; at least two are required")]
    GroupTooSmall(usize),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error("render failed: {0}")]
    Render(#[from] RenderError),
}

/// 1 when the response parses into a valid ROC, 0 otherwise.
pub fn format_reward(raw: &str, catalog: &ToolCatalog) -> f64 {
    if parse_agent_response(raw, catalog).is_ok() {
        1.0
    } else {
        0.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RewardConfig {
    pub gamma: f64,
    /// When set, the rendered edit is exported at this depth before scoring,
    /// matching a target that was decoded from a file of that depth.
    pub edit_depth: Option<BitDepth>,
}

impl Default for RewardConfig {
    fn default() -> Self {
        Self {
            gamma: DEFAULT_GAMMA,
            edit_depth: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RewardBreakdown {
    pub r_format: f64,
    pub r_name: f64,
    pub r_param_raw: f64,
    pub r_value_raw: f64,
    pub r_roa: f64,
    pub cd: f64,
    pub l: f64,
    pub r_pq: f64,
    pub total: f64,
}

impl RewardBreakdown {
    pub fn fields(&self) -> [(&'static str, f64); 9] {
        [
            ("r_format", self.r_format),
            ("r_name", self.r_name),
            ("r_param_raw", self.r_param_raw),
            ("r_value_raw", self.r_value_raw),
            ("r_roa", self.r_roa),
            ("cd", self.cd),
            ("l", self.l),
            ("r_pq", self.r_pq),
            ("total", self.total),
        ]
    }

    /// One `key=value` line per component.
    pub fn report(&self) -> String {
        let mut out = String::new();
        for (k, v) in self.fields() {
            let _ = writeln!(out, "{k}={v:?}");
        }
        out
    }
}

/// Scores a raw agent response: format, then ROA against `tgt`, then PQ of
/// the prediction rendered on `src` against `tgt_img`.
pub fn total_reward(
    raw: &str,
    tgt: &RocDocument,
    src: &ImageBuffer,
    tgt_img: &ImageBuffer,
    catalog: &ToolCatalog,
    config: &RewardConfig,
) -> Result<RewardBreakdown, RewardError> {
    total_reward_with_segmentation(raw, tgt, src, tgt_img, None, catalog, config)
}

pub fn total_reward_with_segmentation(
    raw: &str,
    tgt: &RocDocument,
    src: &ImageBuffer,
    tgt_img: &ImageBuffer,
    segmentation: Option<&Segmentation>,
    catalog: &ToolCatalog,
    config: &RewardConfig,
) -> Result<RewardBreakdown, RewardError> {
    if !(0.0..=1.0).contains(&config.gamma) {
        return Err(RewardError::InvalidGamma(config.gamma));
    }
    let Ok(response) = parse_agent_response(raw, catalog) else {
        return Ok(RewardBreakdown::default());
    };
    let roa = roa_terms(&response.answer, tgt, catalog)?;
    let mut edit = apply_roc(src, &response.answer, catalog, segmentation)?;
    if let Some(depth) = config.edit_depth {
        edit = edit.quantized(depth);
    }
    let pq = pq_reward(&edit, tgt_img, config.gamma)?;
    let r_format = 1.0;
    Ok(RewardBreakdown {
        r_format,
        r_name: roa.r_name,
        r_param_raw: roa.r_param_raw,
        r_value_raw: roa.r_value_raw,
        r_roa: roa.r_roa,
        cd: pq.cd,
        l: pq.l,
        r_pq: pq.r_pq,
        total: r_format + roa.r_roa + pq.r_pq,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroupSample {
    pub reward: f64,
    pub advantage: f64,
}

/// `A_i = (r_i − mean) / std` with the population standard deviation; a
/// group whose rewards are all equal gets zero advantages.
pub fn group_advantages(rewards: &[f64]) -> Result<Vec<GroupSample>, RewardError> {
    if rewards.len() < 2 {
        return Err(RewardError::GroupTooSmall(rewards.len()));
    }
    let n = rewards.len() as f64;
    let mean = rewards.iter().sum::<f64>() / n;
    let var = rewards.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / n;
    let std = var.sqrt();
    let uniform = rewards.iter().all(|&r| r == rewards[0]);
    Ok(rewards
        .iter()
        .map(|&reward| GroupSample {
            reward,
            advantage: if uniform || std == 0.0 { 0.0 } else { (reward - mean) / std },
        })
        .collect())
}
