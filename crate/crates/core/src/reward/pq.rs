//! Perceptual-quality reward `γ·CD + (1 − γ)·L`.

use crate::metrics::{color_distribution_similarity, l1_distance};
use crate::render::ImageBuffer;

use super::RewardError;

/// Default colour-distribution weight.
pub const DEFAULT_GAMMA: f64 = 0.4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PqTerms {
    pub cd: f64,
    pub l: f64,
    pub r_pq: f64,
}

/// `γ·cd + (1 − γ)·l`.
pub fn combine_pq(cd: f64, l: f64, gamma: f64) -> Result<f64, RewardError> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err(RewardError::InvalidGamma(gamma));
    }
    Ok((gamma * cd + (1.0 - gamma) * l).clamp(0.0, 1.0))
}

/// Scores an edited image against the target. `l` is one minus the mean
/// absolute per-channel difference.
pub fn pq_reward(edit: &ImageBuffer, tgt: &ImageBuffer, gamma: f64) -> Result<PqTerms, RewardError> {
    let cd = color_distribution_similarity(edit, tgt)?;
    let l = (1.0 - l1_distance(edit, tgt)?).clamp(0.0, 1.0);
    Ok(PqTerms {
        cd,
        l,
        r_pq: combine_pq(cd, l, gamma)?,
    })
}
