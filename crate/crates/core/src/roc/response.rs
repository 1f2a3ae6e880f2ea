//! Extraction of the reasoning and the ROC answer from a tagged agent response.

use thiserror::Error;

use super::catalog::ToolCatalog;
use super::document::RocDocument;
use super::parse::{parse_roc, RocError};

const THINK_OPEN: &str = "<think>";
const THINK_CLOSE: &str = "</think>";
const ANSWER_OPEN: &str = "<answer>";
const ANSWER_CLOSE: &str = "</answer>";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ResponseError {
    #[error("response has no complete <think> block")]
    MissingThink,
    #[error("response has no complete <answer> block")]
    MissingAnswer,
    #[error("response contains more than one `{tag}` tag")]
    MultipleBlocks { tag: &'static str },
    #[error("the <think> block must precede the <answer> block")]
    OutOfOrder,
    #[error("unexpected text outside the tagged blocks at byte {offset}")]
    UnexpectedText { offset: usize },
    #[error("answer block is not a valid ROC: {0}")]
    InnerRocError(#[from] RocError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentResponse {
    pub raw: String,
    pub think: String,
    pub answer: RocDocument,
}

fn single(raw: &str, tag: &'static str) -> Result<Option<usize>, ResponseError> {
    let mut found = raw.match_indices(tag).map(|(i, _)| i);
    let first = found.next();
    if found.next().is_some() {
        return Err(ResponseError::MultipleBlocks { tag });
    }
    Ok(first)
}

fn blank(raw: &str, start: usize, end: usize) -> Result<(), ResponseError> {
    match raw[start..end].char_indices().find(|(_, c)| !c.is_whitespace()) {
        Some((i, _)) => Err(ResponseError::UnexpectedText { offset: start + i }),
        None => Ok(()),
    }
}

/// Accepts exactly `<think>…</think>` followed by `<answer>…</answer>`, with
/// only whitespace around and between the blocks.
pub fn parse_agent_response(raw: &str, catalog: &ToolCatalog) -> Result<AgentResponse, ResponseError> {
    let think_open = single(raw, THINK_OPEN)?;
    let think_close = single(raw, THINK_CLOSE)?;
    let answer_open = single(raw, ANSWER_OPEN)?;
    let answer_close = single(raw, ANSWER_CLOSE)?;

    let (Some(to), Some(tc)) = (think_open, think_close) else {
        return Err(ResponseError::MissingThink);
    };
    let (Some(ao), Some(ac)) = (answer_open, answer_close) else {
        return Err(ResponseError::MissingAnswer);
    };
    let think_start = to + THINK_OPEN.len();
    let answer_start = ao + ANSWER_OPEN.len();
    if !(think_start <= tc && tc + THINK_CLOSE.len() <= ao && answer_start <= ac) {
        return Err(ResponseError::OutOfOrder);
    }

    blank(raw, 0, to)?;
    blank(raw, tc + THINK_CLOSE.len(), ao)?;
    blank(raw, ac + ANSWER_CLOSE.len(), raw.len())?;

    let answer = parse_roc(raw[answer_start..ac].trim(), catalog)?;
    Ok(AgentResponse {
        raw: raw.to_owned(),
        think: raw[think_start..tc].to_owned(),
        answer,
    })
}

/// Wraps a serialized ROC into a well-formed agent response.
pub fn format_agent_response(think: &str, roc_text: &str) -> String {
    format!("{THINK_OPEN}{think}{THINK_CLOSE}\n{ANSWER_OPEN}{roc_text}{ANSWER_CLOSE}")
}
