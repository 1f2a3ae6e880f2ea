//! Desk-scale group-sampling demonstration.
//!
//! The "policy" is a point `θ` in the normalized space of the target's
//! scalar parameters (each mapped to `[0, 1]` by its catalog range). Every
//! step draws a group of `N` candidates `θ + σ·z_i`, scores each rendered
//! candidate with the total reward and normalizes the rewards into
//! advantages. The policy then moves a fraction `η` toward the best
//! candidate while `σ` decays. A move is kept only when the new group's mean
//! reward does not fall below the current one; otherwise `η` is halved, and
//! after [`MAX_HALVINGS`] failed attempts the step repeats the current group.
//!
//! The offsets `z_i ∈ [−1, 1]^K` are drawn once from a ChaCha8 stream seeded
//! with `--seed`, so a run is a pure function of its inputs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use retouch_core::render::{BitDepth, ImageBuffer, Segmentation};
use retouch_core::reward::{group_advantages, total_reward_with_segmentation, RewardBreakdown, RewardConfig};
use retouch_core::roc::{format_agent_response, serialize_roc, ParamKind, ParamValue, RocDocument, ToolCatalog};

use crate::{CliError, ExitKind};

pub const MAX_HALVINGS: usize = 2;

#[derive(Debug, Clone, PartialEq)]
pub struct SimParams {
    pub n: usize,
    pub steps: usize,
    pub sigma: f64,
    pub eta: f64,
    pub decay: f64,
    pub init_offset: f64,
    pub seed: u64,
    pub gamma: f64,
}

pub struct Scene<'a> {
    pub src: &'a ImageBuffer,
    pub target: &'a RocDocument,
    pub tgt_img: &'a ImageBuffer,
    pub segmentation: Option<&'a Segmentation>,
    pub catalog: &'a ToolCatalog,
    /// Depth the target image was stored at.
    pub depth: BitDepth,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepTrace {
    pub step: usize,
    pub sigma: f64,
    pub accepted: bool,
    pub rewards: Vec<RewardBreakdown>,
    pub advantages: Vec<f64>,
}

impl StepTrace {
    pub fn mean(&self) -> f64 {
        mean(self.rewards.iter().map(|r| r.total))
    }

    pub fn best(&self) -> f64 {
        self.rewards.iter().map(|r| r.total).fold(f64::NEG_INFINITY, f64::max)
    }
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    sum / n as f64
}

struct Slot {
    tool: usize,
    key: String,
    min: f64,
    max: f64,
}

fn slots(doc: &RocDocument, catalog: &ToolCatalog) -> Vec<Slot> {
    let mut out = Vec::new();
    for (i, tool) in doc.tools.iter().enumerate() {
        let Some(schema) = catalog.get(&tool.name) else { continue };
        for (key, value) in &tool.params {
            if let (ParamValue::Scalar(_), Some(ParamKind::Scalar { min, max })) =
                (value, schema.param(key).map(|p| &p.kind))
            {
                out.push(Slot {
                    tool: i,
                    key: key.clone(),
                    min: *min,
                    max: *max,
                });
            }
        }
    }
    out
}

struct Sampler<'a> {
    scene: &'a Scene<'a>,
    slots: Vec<Slot>,
    offsets: Vec<Vec<f64>>,
    config: RewardConfig,
}

impl Sampler<'_> {
    fn decode(&self, theta: &[f64]) -> RocDocument {
        let mut doc = self.scene.target.clone();
        for (slot, &t) in self.slots.iter().zip(theta) {
            let v = slot.min + t.clamp(0.0, 1.0) * (slot.max - slot.min);
            doc.tools[slot.tool].params.insert(slot.key.clone(), ParamValue::Scalar(v));
        }
        doc
    }

    fn group(&self, step: usize, center: &[f64], sigma: f64, accepted: bool) -> Result<StepTrace, CliError> {
        let s = self.scene;
        let mut rewards = Vec::with_capacity(self.offsets.len());
        for i in 0..self.offsets.len() {
            let theta = self.candidate(center, sigma, i);
            let raw = format_agent_response(&format!("candidate {i}"), &serialize_roc(&self.decode(&theta)));
            let r = total_reward_with_segmentation(&raw, s.target, s.src, s.tgt_img, s.segmentation, s.catalog, &self.config)
                .map_err(|e| CliError::new(ExitKind::Validation, "Reward", e.to_string()))?;
            rewards.push(r);
        }
        let totals: Vec<f64> = rewards.iter().map(|r| r.total).collect();
        let advantages = group_advantages(&totals)
            .map_err(|e| CliError::new(ExitKind::Validation, "Reward", e.to_string()))?
            .into_iter()
            .map(|g| g.advantage)
            .collect();
        Ok(StepTrace {
            step,
            sigma,
            accepted,
            rewards,
            advantages,
        })
    }

    fn candidate(&self, center: &[f64], sigma: f64, i: usize) -> Vec<f64> {
        center
            .iter()
            .zip(&self.offsets[i])
            .map(|(c, z)| (c + sigma * z).clamp(0.0, 1.0))
            .collect()
    }
}

fn check(p: &SimParams) -> Result<(), CliError> {
    let bad = |m: String| Err(CliError::new(ExitKind::Validation, "Invalid", m));
    if p.n < 2 {
        return bad(format!("group size {} is below 2", p.n));
    }
    if p.steps == 0 {
        return bad("steps must be at least 1".into());
    }
    if !(p.sigma.is_finite() && p.sigma >= 0.0) {
        return bad(format!("sigma {} must be finite and >= 0", p.sigma));
    }
    if !(p.eta > 0.0 && p.eta <= 1.0) {
        return bad(format!("eta {} outside (0, 1]", p.eta));
    }
    if !(p.decay > 0.0 && p.decay <= 1.0) {
        return bad(format!("decay {} outside (0, 1]", p.decay));
    }
    if !(p.init_offset.is_finite() && p.init_offset >= 0.0) {
        return bad(format!("init offset {} must be finite and >= 0", p.init_offset));
    }
    Ok(())
}

pub fn simulate(scene: &Scene<'_>, params: &SimParams) -> Result<Vec<StepTrace>, CliError> {
    check(params)?;
    let slots = slots(scene.target, scene.catalog);
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let start: Vec<f64> = slots
        .iter()
        .map(|s| {
            let v = scene.target.tools[s.tool].params[&s.key].as_scalar().unwrap_or(s.min);
            let t = (v - s.min) / (s.max - s.min);
            (t + params.init_offset * rng.gen_range(-1.0..=1.0)).clamp(0.0, 1.0)
        })
        .collect();
    let offsets = (0..params.n)
        .map(|_| (0..slots.len()).map(|_| rng.gen_range(-1.0..=1.0)).collect())
        .collect();
    let sampler = Sampler {
        scene,
        slots,
        offsets,
        config: RewardConfig {
            gamma: params.gamma,
            edit_depth: Some(scene.depth),
        },
    };

    let mut center = start;
    let mut sigma = params.sigma;
    let mut current = sampler.group(0, &center, sigma, true)?;
    let mut trace = Vec::with_capacity(params.steps);
    for step in 1..params.steps {
        let best = (0..params.n)
            .max_by(|&a, &b| current.rewards[a].total.total_cmp(&current.rewards[b].total).then(b.cmp(&a)))
            .unwrap_or(0);
        let target = sampler.candidate(&center, sigma, best);
        let next_sigma = sigma * params.decay;
        let mut eta = params.eta;
        let mut moved = None;
        for _ in 0..=MAX_HALVINGS {
            let proposal: Vec<f64> = center.iter().zip(&target).map(|(c, b)| c + eta * (b - c)).collect();
            let group = sampler.group(step, &proposal, next_sigma, true)?;
            if group.mean() >= current.mean() {
                moved = Some((proposal, group));
                break;
            }
            eta *= 0.5;
        }
        let next = match moved {
            Some((proposal, group)) => {
                center = proposal;
                sigma = next_sigma;
                group
            }
            None => StepTrace {
                step,
                accepted: false,
                ..current.clone()
            },
        };
        trace.push(std::mem::replace(&mut current, next));
    }
    trace.push(current);
    Ok(trace)
}

/// One `key=value` line per quantity; floats use the shortest round-trip form.
pub fn format_trace(params: &SimParams, trace: &[StepTrace]) -> String {
    let mut out = format!(
        "n={}\nsteps={}\nseed={}\nsigma={:?}\neta={:?}\ndecay={:?}\n",
        params.n, params.steps, params.seed, params.sigma, params.eta, params.decay
    );
    for t in trace {
        let k = t.step;
        out.push_str(&format!(
            "step.{k}.sigma={:?}\nstep.{k}.accepted={}\nstep.{k}.mean={:?}\nstep.{k}.best={:?}\nstep.{k}.mean_roa={:?}\nstep.{k}.mean_pq={:?}\n",
            t.sigma,
            t.accepted,
            t.mean(),
            t.best(),
            mean(t.rewards.iter().map(|r| r.r_roa)),
            mean(t.rewards.iter().map(|r| r.r_pq)),
        ));
        for (i, (r, a)) in t.rewards.iter().zip(&t.advantages).enumerate() {
            out.push_str(&format!("step.{k}.reward.{i}={:?}\nstep.{k}.advantage.{i}={a:?}\n", r.total));
        }
    }
    out
}
