//! One constrained guidance step: build the CFG increment and the negation
//! normals from the model branches, schedule each bound, project, and emit
//! the corrected noise prediction.

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::compiler::ConstraintProgram;
use crate::error::EngineError;
use crate::geometry::{project_sequential, HalfSpace, DEFAULT_EPS_NUM, DEFAULT_PASSES};
use crate::scheduler::{bound_at, init_bound, InitMode, Progress, ScheduleOrientation, ScheduleParams};
use crate::vector::GuidanceVec;

pub const DEFAULT_GAMMA: f64 = 7.5;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EngineMode {
    #[default]
    Full,
    /// Constraints are never built; plain CFG.
    NoProjection,
    /// Bounds stay at their initial value for the whole trajectory.
    NoScheduling,
}

impl EngineMode {
    pub const ALL: [EngineMode; 3] = [EngineMode::Full, EngineMode::NoProjection, EngineMode::NoScheduling];

    pub fn as_str(self) -> &'static str {
        match self {
            EngineMode::Full => "full",
            EngineMode::NoProjection => "no_projection",
            EngineMode::NoScheduling => "no_scheduling",
        }
    }
}

impl fmt::Display for EngineMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EngineMode {
    type Err = EngineError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ablation_flags(s)
    }
}

/// Maps an ablation flag to an engine mode. Hyphens and underscores are interchangeable.
pub fn ablation_flags(flag: &str) -> Result<EngineMode, EngineError> {
    let norm = flag.trim().to_ascii_lowercase().replace('-', "_");
    EngineMode::ALL
        .into_iter()
        .find(|m| m.as_str() == norm)
        .ok_or_else(|| EngineError::UnknownMode(flag.to_string()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EngineConfig {
    pub gamma: f64,
    pub passes: usize,
    pub eps_num: f64,
    pub mode: EngineMode,
    pub init_mode: InitMode,
    /// Give every constraint the largest per-constraint initial bound.
    pub shared_init: bool,
    pub orientation: ScheduleOrientation,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            gamma: DEFAULT_GAMMA,
            passes: DEFAULT_PASSES,
            eps_num: DEFAULT_EPS_NUM,
            mode: EngineMode::Full,
            init_mode: InitMode::default(),
            shared_init: false,
            orientation: ScheduleOrientation::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepInputs {
    pub eps_uncond: GuidanceVec,
    pub eps_text: GuidanceVec,
    /// One negation-branch prediction per spec, in program order.
    pub eps_neg_per_spec: Vec<GuidanceVec>,
    pub gamma: f64,
    pub progress: Progress,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpecDiagnostics {
    pub lambda: f64,
    pub active: bool,
    pub degenerate: bool,
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepOutput {
    pub eps_star: GuidanceVec,
    pub delta_ref: GuidanceVec,
    pub delta_star: GuidanceVec,
    pub per_spec: Vec<SpecDiagnostics>,
    pub b_used: Vec<f64>,
    pub max_residual: f64,
}

/// `γ (ε_text − ε_uncond)`.
pub fn cfg_increment(eps_text: &GuidanceVec, eps_uncond: &GuidanceVec, gamma: f64) -> Result<GuidanceVec, EngineError> {
    if !(gamma > 0.0) {
        return Err(EngineError::NonPositiveGamma(gamma));
    }
    Ok(eps_text.sub(eps_uncond)?.scale(gamma))
}

/// `σ (ε_neg − ε_uncond)`.
pub fn negation_direction(eps_neg: &GuidanceVec, eps_uncond: &GuidanceVec, sigma: f64) -> Result<GuidanceVec, EngineError> {
    if sigma != 1.0 && sigma != -1.0 {
        return Err(EngineError::InvalidSign(sigma));
    }
    let diff = eps_neg.sub(eps_uncond)?;
    Ok(if sigma > 0.0 { diff } else { diff.scale(-1.0) })
}

fn check_inputs(si: &StepInputs, specs: usize) -> Result<(), EngineError> {
    si.eps_text.check_dim(&si.eps_uncond)?;
    for e in &si.eps_neg_per_spec {
        e.check_dim(&si.eps_uncond)?;
    }
    if si.eps_neg_per_spec.len() < specs {
        return Err(EngineError::BranchCount {
            expected: specs,
            found: si.eps_neg_per_spec.len(),
        });
    }
    Ok(())
}

/// Projects the CFG increment onto the scheduled half-spaces of `program`.
///
/// `schedules[k]` belongs to `program.specs[k]`; an empty program yields plain CFG.
pub fn constrained_step(
    si: &StepInputs,
    program: &ConstraintProgram,
    schedules: &[ScheduleParams],
    passes: usize,
) -> Result<StepOutput, EngineError> {
    let sigmas: Vec<f64> = program.specs.iter().map(|s| s.sigma).collect();
    step_with(si, &sigmas, schedules, passes, DEFAULT_EPS_NUM)
}

fn step_with(
    si: &StepInputs,
    sigmas: &[f64],
    schedules: &[ScheduleParams],
    passes: usize,
    eps_num: f64,
) -> Result<StepOutput, EngineError> {
    check_inputs(si, sigmas.len())?;
    if schedules.len() != sigmas.len() {
        return Err(EngineError::BranchCount {
            expected: sigmas.len(),
            found: schedules.len(),
        });
    }
    let delta_ref = cfg_increment(&si.eps_text, &si.eps_uncond, si.gamma)?;
    if sigmas.is_empty() {
        let eps_star = si.eps_uncond.add(&delta_ref)?;
        return Ok(StepOutput {
            eps_star,
            delta_star: delta_ref.clone(),
            delta_ref,
            per_spec: Vec::new(),
            b_used: Vec::new(),
            max_residual: 0.0,
        });
    }
    let mut hs = Vec::with_capacity(sigmas.len());
    let mut b_used = Vec::with_capacity(sigmas.len());
    for ((sigma, sp), eps_neg) in sigmas.iter().zip(schedules).zip(&si.eps_neg_per_spec) {
        let normal = negation_direction(eps_neg, &si.eps_uncond, *sigma)?;
        let b = bound_at(sp, si.progress)?;
        b_used.push(b);
        hs.push(HalfSpace::new(normal, b));
    }
    let r = project_sequential(&delta_ref, &hs, passes, eps_num)?;
    let per_spec = (0..hs.len())
        .map(|k| SpecDiagnostics {
            lambda: r.multipliers[k],
            active: r.active[k],
            degenerate: r.degenerate[k],
            residual: r.residuals[k],
        })
        .collect();
    Ok(StepOutput {
        eps_star: si.eps_uncond.add(&r.corrected)?,
        delta_ref,
        delta_star: r.corrected,
        per_spec,
        b_used,
        max_residual: r.max_residual,
    })
}

/// Per-trajectory driver: caches each constraint's initial bound from the first step.
#[derive(Clone, Debug)]
pub struct Engine<'a> {
    program: &'a ConstraintProgram,
    config: EngineConfig,
    total_steps: usize,
    /// Coordinate block each spec's normal is restricted to.
    blocks: Vec<Option<Range<usize>>>,
    schedules: Option<Vec<ScheduleParams>>,
}

impl<'a> Engine<'a> {
    pub fn new(
        program: &'a ConstraintProgram,
        config: EngineConfig,
        total_steps: usize,
        blocks: Vec<Option<Range<usize>>>,
    ) -> Result<Self, EngineError> {
        if !(config.gamma > 0.0) {
            return Err(EngineError::NonPositiveGamma(config.gamma));
        }
        if blocks.len() != program.specs.len() {
            return Err(EngineError::BranchCount {
                expected: program.specs.len(),
                found: blocks.len(),
            });
        }
        Ok(Self {
            program,
            config,
            total_steps,
            blocks,
            schedules: None,
        })
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    /// Schedules fixed at the first step, if it has run.
    pub fn schedules(&self) -> Option<&[ScheduleParams]> {
        self.schedules.as_deref()
    }

    fn active_specs(&self) -> usize {
        match self.config.mode {
            EngineMode::NoProjection => 0,
            _ => self.program.specs.len(),
        }
    }

    /// Replaces each negation branch outside its spec's block with the unconditional one.
    fn restrict(&self, si: &StepInputs) -> Vec<GuidanceVec> {
        si.eps_neg_per_spec
            .iter()
            .zip(&self.blocks)
            .map(|(neg, block)| match block {
                None => neg.clone(),
                Some(r) => GuidanceVec::new(
                    neg.as_slice()
                        .iter()
                        .zip(si.eps_uncond.as_slice())
                        .enumerate()
                        .map(|(i, (n, u))| if r.contains(&i) { *n } else { *u })
                        .collect(),
                ),
            })
            .collect()
    }

    fn init_schedules(&self, si: &StepInputs, negs: &[GuidanceVec]) -> Result<Vec<ScheduleParams>, EngineError> {
        let delta0 = cfg_increment(&si.eps_text, &si.eps_uncond, si.gamma)?;
        let mut inits = Vec::with_capacity(negs.len());
        for (spec, neg) in self.program.specs.iter().zip(negs) {
            let a0 = negation_direction(neg, &si.eps_uncond, spec.sigma)?;
            inits.push(init_bound(&a0, &delta0, self.config.init_mode)?);
        }
        if self.config.shared_init {
            let shared = inits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            inits.iter_mut().for_each(|b| *b = shared);
        }
        self.program
            .specs
            .iter()
            .zip(inits)
            .map(|(spec, b_init)| {
                let (b_final, p) = match self.config.mode {
                    EngineMode::NoScheduling => (b_init, spec.bound.exponent()),
                    _ => (spec.bound.final_bound(b_init), spec.bound.exponent()),
                };
                Ok(ScheduleParams::new(b_init, b_final, p, self.total_steps)?
                    .with_orientation(self.config.orientation))
            })
            .collect()
    }

    pub fn step(&mut self, si: &StepInputs) -> Result<StepOutput, EngineError> {
        let n = self.active_specs();
        if n == 0 {
            return step_with(si, &[], &[], self.config.passes, self.config.eps_num);
        }
        check_inputs(si, n)?;
        let negs = self.restrict(si);
        if self.schedules.is_none() {
            self.schedules = Some(self.init_schedules(si, &negs)?);
        }
        let schedules = self.schedules.as_deref().unwrap_or_default();
        let sigmas: Vec<f64> = self.program.specs.iter().map(|s| s.sigma).collect();
        let masked = StepInputs {
            eps_uncond: si.eps_uncond.clone(),
            eps_text: si.eps_text.clone(),
            eps_neg_per_spec: negs,
            gamma: si.gamma,
            progress: si.progress,
        };
        step_with(&masked, &sigmas, schedules, self.config.passes, self.config.eps_num)
    }
}
