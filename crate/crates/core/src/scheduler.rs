//! Polynomial tightening of constraint bounds along the sampling trajectory.
//!
//! Schedules are expressed over sampling progress `s ∈ [0, 1]` (0 at pure
//! noise, 1 at the clean-data end): `α(s) = s^p` and
//! `b(s) = (1 − α) b_init + α b_final`, so bounds start loose and reach
//! `b_final` at the end of sampling.

use serde::{Deserialize, Serialize};

use crate::error::ScheduleError;
use crate::vector::GuidanceVec;

pub const DEFAULT_EXPONENT: f64 = 2.0;
pub const DEFAULT_FINAL_BOUND: f64 = 0.0;

/// Fraction of sampling completed.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Progress(f64);

impl Progress {
    pub const START: Progress = Progress(0.0);
    pub const END: Progress = Progress(1.0);

    pub fn new(s: f64) -> Result<Self, ScheduleError> {
        if (0.0..=1.0).contains(&s) {
            Ok(Self(s))
        } else {
            Err(ScheduleError::ProgressOutOfRange(s))
        }
    }

    /// Progress after `step` of `total` steps.
    pub fn at_step(step: usize, total: usize) -> Result<Self, ScheduleError> {
        if total == 0 {
            return Err(ScheduleError::ZeroSteps);
        }
        Self::new(step as f64 / total as f64)
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for Progress {
    type Error = ScheduleError;

    fn try_from(s: f64) -> Result<Self, Self::Error> {
        Self::new(s)
    }
}

impl From<Progress> for f64 {
    fn from(p: Progress) -> f64 {
        p.0
    }
}

/// Which end of the trajectory the polynomial weight grows toward.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleOrientation {
    /// `α = s^p`: loose at the noise end, strict at the data end.
    #[default]
    Progress,
    /// `α = (1 − s)^p`, i.e. `(t/T)^p` with `t` counting down from `T` at the noise end.
    Literal,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScheduleParams {
    pub b_init: f64,
    pub b_final: f64,
    pub p: f64,
    pub total_steps: usize,
    #[serde(default)]
    pub orientation: ScheduleOrientation,
}

impl ScheduleParams {
    pub fn new(b_init: f64, b_final: f64, p: f64, total_steps: usize) -> Result<Self, ScheduleError> {
        let sp = Self {
            b_init,
            b_final,
            p,
            total_steps,
            orientation: ScheduleOrientation::Progress,
        };
        sp.validate()?;
        Ok(sp)
    }

    pub fn with_orientation(mut self, orientation: ScheduleOrientation) -> Self {
        self.orientation = orientation;
        self
    }

    pub fn validate(&self) -> Result<(), ScheduleError> {
        if !(self.p > 0.0) {
            return Err(ScheduleError::NonPositiveExponent(self.p));
        }
        if self.total_steps == 0 {
            return Err(ScheduleError::ZeroSteps);
        }
        Ok(())
    }
}

/// `s^p`.
pub fn alpha(s: Progress, p: f64) -> Result<f64, ScheduleError> {
    if !(p > 0.0) {
        return Err(ScheduleError::NonPositiveExponent(p));
    }
    Ok(s.value().powf(p))
}

pub fn bound_at(sp: &ScheduleParams, s: Progress) -> Result<f64, ScheduleError> {
    sp.validate()?;
    let s = match sp.orientation {
        ScheduleOrientation::Progress => s,
        ScheduleOrientation::Literal => Progress(1.0 - s.value()),
    };
    let a = alpha(s, sp.p)?;
    // Exact endpoints regardless of rounding in the blend.
    if a == 0.0 {
        return Ok(sp.b_init);
    }
    if a == 1.0 {
        return Ok(sp.b_final);
    }
    Ok((1.0 - a) * sp.b_init + a * sp.b_final)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitMode {
    InnerProduct,
    #[default]
    ClampedInnerProduct,
}

/// Initial bound from the first-step alignment `a₀ᵀδ₀`.
pub fn init_bound(a0: &GuidanceVec, delta0: &GuidanceVec, mode: InitMode) -> Result<f64, ScheduleError> {
    let ip = a0.dot(delta0)?;
    Ok(match mode {
        InitMode::InnerProduct => ip,
        InitMode::ClampedInnerProduct => ip.max(0.0),
    })
}
