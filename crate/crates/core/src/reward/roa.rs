//! Retouching-operation accuracy: tool-name, parameter-name and
//! parameter-value agreement between a predicted and a target ROC.
//!
//! A tool's keys are its parameter names plus `"mask"` when it carries one,
//! so mask geometry is scored alongside the parameters.

use std::collections::BTreeSet;

use crate::roc::{RocDocument, ToolCatalog, ToolInvocation};

use super::similarity::{mask_similarity, param_similarity};
use super::RewardError;

fn non_empty(tgt: &RocDocument) -> Result<(), RewardError> {
    if tgt.is_empty() {
        Err(RewardError::EmptyTarget)
    } else {
        Ok(())
    }
}

fn jaccard<T: Ord>(a: &BTreeSet<T>, b: &BTreeSet<T>) -> f64 {
    let union = a.union(b).count();
    if union == 0 {
        return 1.0;
    }
    a.intersection(b).count() as f64 / union as f64
}

/// Pairs each target tool with the predicted tool of the same name.
fn matched<'a>(pred: &'a RocDocument, tgt: &'a RocDocument) -> impl Iterator<Item = (&'a ToolInvocation, &'a ToolInvocation)> {
    tgt.tools
        .iter()
        .filter_map(move |t| pred.get(&t.name).map(|p| (p, t)))
}

/// Jaccard index of the two tool-name sets.
pub fn tool_name_reward(pred: &RocDocument, tgt: &RocDocument) -> Result<f64, RewardError> {
    non_empty(tgt)?;
    let a: BTreeSet<&str> = pred.tools.iter().map(|t| t.name.as_str()).collect();
    let b: BTreeSet<&str> = tgt.tools.iter().map(|t| t.name.as_str()).collect();
    Ok(jaccard(&a, &b))
}

/// Sum over name-matched tool pairs of the Jaccard index of their key sets.
/// Two tools that both have no keys count as a full match.
pub fn param_name_reward(pred: &RocDocument, tgt: &RocDocument) -> Result<f64, RewardError> {
    non_empty(tgt)?;
    Ok(matched(pred, tgt)
        .map(|(p, t)| {
            let a: BTreeSet<&str> = p.keys().collect();
            let b: BTreeSet<&str> = t.keys().collect();
            jaccard(&a, &b)
        })
        .sum())
}

/// Sum over name-matched pairs and target keys of `S_k`; a key missing from
/// the prediction scores 0.
pub fn param_value_reward(pred: &RocDocument, tgt: &RocDocument, catalog: &ToolCatalog) -> Result<f64, RewardError> {
    non_empty(tgt)?;
    let settings = catalog.settings();
    let mut total = 0.0;
    for (p, t) in matched(pred, tgt) {
        if let Some(tm) = &t.mask {
            if let Some(pm) = &p.mask {
                total += mask_similarity(pm, tm, settings.angle_min, settings.angle_max)?;
            }
        }
        for (key, tv) in &t.params {
            let Some(pv) = p.params.get(key) else { continue };
            let kind = catalog
                .get(&t.name)
                .and_then(|s| s.param(key))
                .map(|ps| &ps.kind)
                .ok_or_else(|| RewardError::UnknownParamType {
                    tool: t.name.clone(),
                    param: key.clone(),
                })?;
            total += param_similarity(kind, pv, tv)?;
        }
    }
    Ok(total)
}

/// Raw and combined accuracy terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoaTerms {
    pub r_name: f64,
    pub r_param_raw: f64,
    pub r_value_raw: f64,
    pub r_roa: f64,
}

/// `(1/3)·(r_name + r_param/|T_tgt| + r_value/Σ_j |keys(T_tgt_j)|)`.
///
/// When the target has no keys at all, the value term is 1 if the matched
/// predicted tools have none either, and 0 otherwise.
pub fn roa_terms(pred: &RocDocument, tgt: &RocDocument, catalog: &ToolCatalog) -> Result<RoaTerms, RewardError> {
    let r_name = tool_name_reward(pred, tgt)?;
    let r_param_raw = param_name_reward(pred, tgt)?;
    let r_value_raw = param_value_reward(pred, tgt, catalog)?;
    let key_total = tgt.total_keys();
    let value_term = if key_total > 0 {
        r_value_raw / key_total as f64
    } else if matched(pred, tgt).all(|(p, _)| p.key_count() == 0) {
        1.0
    } else {
        0.0
    };
    let r_roa = ((r_name + r_param_raw / tgt.len() as f64 + value_term) / 3.0).clamp(0.0, 1.0);
    Ok(RoaTerms {
        r_name,
        r_param_raw,
        r_value_raw,
        r_roa,
    })
}

pub fn roa_reward(pred: &RocDocument, tgt: &RocDocument, catalog: &ToolCatalog) -> Result<f64, RewardError> {
    Ok(roa_terms(pred, tgt, catalog)?.r_roa)
}
