use std::ops::Range;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{Condition, ToyWorld};
use crate::compiler::{Category, ConstraintProgram};
use crate::engine::{Engine, EngineConfig, StepInputs};
use crate::error::WorldError;
use crate::scheduler::Progress;

pub const MIN_STEPS: usize = 8;

/// Branch conditions and constraints for one sampling run.
#[derive(Clone, Debug, PartialEq)]
pub struct GuidancePlan {
    pub text: Condition,
    pub program: ConstraintProgram,
    pub negations: Vec<Condition>,
    pub blocks: Vec<Option<Range<usize>>>,
    pub config: EngineConfig,
}

impl GuidancePlan {
    /// Plain CFG toward `text`, no constraints.
    pub fn cfg(text: Condition, program: &ConstraintProgram, config: EngineConfig) -> Self {
        let mut program = program.clone();
        program.specs.clear();
        Self {
            text,
            program,
            negations: Vec::new(),
            blocks: Vec::new(),
            config,
        }
    }

    /// Binds every spec of `program` to a negation branch of `world`.
    pub fn constrained(world: &ToyWorld, program: &ConstraintProgram, config: EngineConfig) -> Result<Self, WorldError> {
        if program.affirmed_keys.is_empty() {
            return Err(WorldError::EmptyCondition("prompt affirms no concept".into()));
        }
        let mut negations = Vec::with_capacity(program.specs.len());
        let mut blocks = Vec::with_capacity(program.specs.len());
        for spec in &program.specs {
            negations.push(Condition::tags([spec.concept_key.clone()]));
            blocks.push(match (&spec.scope_entity, spec.category) {
                (Some(entity), Category::Snd) => Some(world.entity_block(entity)?),
                _ => None,
            });
        }
        Ok(Self {
            text: Condition::tags(program.affirmed_keys.iter().cloned()),
            program: program.clone(),
            negations,
            blocks,
            config,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplerOptions {
    pub steps: usize,
    pub record_states: bool,
}

impl Default for SamplerOptions {
    fn default() -> Self {
        Self {
            steps: 64,
            record_states: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    /// `(progress, x)` before each step and after the last one; empty unless recorded.
    pub states: Vec<(f64, Vec<f64>)>,
    pub final_x0: Vec<f64>,
    pub seed: u64,
    /// Largest post-projection constraint violation over all steps.
    pub max_residual: f64,
    /// Steps at which at least one constraint was active.
    pub active_steps: usize,
}

/// Deterministic DDIM-style integration from `N(0, I)` to the data end.
///
/// Step `i` moves from noise level `ᾱ(i/n)` to `ᾱ((i+1)/n)` using the
/// corrected prediction `ε*`; constraint bounds follow progress `i/(n−1)` so
/// the last step sees the final bound.
pub fn sample(world: &ToyWorld, plan: &GuidancePlan, opts: &SamplerOptions, seed: u64) -> Result<Trajectory, WorldError> {
    let n = opts.steps;
    if n < MIN_STEPS {
        return Err(WorldError::TooFewSteps { min: MIN_STEPS, got: n });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x: Vec<f64> = (0..world.dim).map(|_| rng.sample(StandardNormal)).collect();
    let mut engine = Engine::new(&plan.program, plan.config.clone(), n, plan.blocks.clone())?;
    let constrained = !plan.program.specs.is_empty() && plan.config.mode != crate::engine::EngineMode::NoProjection;

    let mut states = Vec::new();
    let mut max_residual: f64 = 0.0;
    let mut active_steps = 0;
    for i in 0..n {
        let s = Progress::at_step(i, n)?;
        let s_next = Progress::at_step(i + 1, n)?;
        if opts.record_states {
            states.push((s.value(), x.clone()));
        }
        let eps_uncond = world.noise_pred(&Condition::All, &x, s)?;
        let eps_text = world.noise_pred(&plan.text, &x, s)?;
        let eps_neg_per_spec = if constrained {
            plan.negations
                .iter()
                .map(|c| world.noise_pred(c, &x, s))
                .collect::<Result<Vec<_>, _>>()?
        } else {
            Vec::new()
        };
        let out = engine.step(&StepInputs {
            eps_uncond,
            eps_text,
            eps_neg_per_spec,
            gamma: plan.config.gamma,
            progress: Progress::at_step(i, n - 1)?,
        })?;
        max_residual = max_residual.max(out.max_residual);
        if out.per_spec.iter().any(|d| d.active) {
            active_steps += 1;
        }
        let a = world.schedule.abar(s);
        let a_next = world.schedule.abar(s_next);
        let eps = out.eps_star.as_slice();
        for (xi, e) in x.iter_mut().zip(eps) {
            let x0 = (*xi - (1.0 - a).sqrt() * e) / a.sqrt();
            *xi = a_next.sqrt() * x0 + (1.0 - a_next).sqrt() * e;
        }
    }
    if opts.record_states {
        states.push((1.0, x.clone()));
    }
    Ok(Trajectory {
        states,
        final_x0: x,
        seed,
        max_residual,
        active_steps,
    })
}
