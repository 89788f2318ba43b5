//! Analytic Gaussian-mixture diffusion testbed.
//!
//! Under the forward marginal `x_s = √ᾱ x₀ + √(1 − ᾱ) n` a mixture of
//! isotropic Gaussians stays a mixture, with means `√ᾱ μ_k` and variance
//! `(1 − ᾱ) + ᾱ ν`. Conditioning on a tag set keeps the components whose tags
//! intersect it, so every branch prediction is exact.

mod sampler;
pub mod templates;

use std::collections::BTreeSet;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::WorldError;
use crate::scheduler::Progress;
use crate::vector::GuidanceVec;

pub use sampler::{sample, GuidancePlan, SamplerOptions, Trajectory, MIN_STEPS};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Component {
    pub mean: Vec<f64>,
    pub weight: f64,
    #[serde(default)]
    pub tags: BTreeSet<String>,
}

/// `ᾱ(s) = min + (1 − min) s^power`, reaching 1 at the data end.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum NoiseSchedule {
    PolynomialAbar { power: f64, min: f64 },
}

impl Default for NoiseSchedule {
    fn default() -> Self {
        NoiseSchedule::PolynomialAbar { power: 2.0, min: 1e-3 }
    }
}

impl NoiseSchedule {
    pub fn abar(&self, s: Progress) -> f64 {
        match *self {
            NoiseSchedule::PolynomialAbar { power, min } => {
                if s == Progress::END {
                    1.0
                } else {
                    min + (1.0 - min) * s.value().powf(power)
                }
            }
        }
    }

    fn validate(&self) -> Result<(), WorldError> {
        match *self {
            NoiseSchedule::PolynomialAbar { power, min } => {
                if !(power > 0.0) || !(min > 0.0 && min < 1.0) {
                    return Err(WorldError::Invalid(format!(
                        "noise schedule needs power > 0 and 0 < min < 1, got power={power}, min={min}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Coordinates describing one entity of a multi-entity scene.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityBlock {
    pub name: String,
    pub start: usize,
    pub end: usize,
}

impl EntityBlock {
    pub fn range(&self) -> Range<usize> {
        self.start..self.end
    }
}

/// Graded attribute read off a single coordinate of a clean sample.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttributeAxis {
    pub concept: String,
    pub axis: usize,
    pub threshold: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ToyWorld {
    pub dim: usize,
    pub components: Vec<Component>,
    /// Per-component variance ν.
    pub variance: f64,
    #[serde(default)]
    pub schedule: NoiseSchedule,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub entities: Vec<EntityBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attribute: Option<AttributeAxis>,
}

/// Which components a branch prediction sees.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    All,
    Tags(BTreeSet<String>),
}

impl Condition {
    pub fn tags<I, S>(tags: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Condition::Tags(tags.into_iter().map(Into::into).collect())
    }

    fn admits(&self, c: &Component) -> bool {
        match self {
            Condition::All => true,
            Condition::Tags(t) => !t.is_disjoint(&c.tags),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub component: usize,
    pub responsibilities: Vec<f64>,
}

/// Default component variance: `0.05 · (min inter-mean distance)²`.
pub fn default_variance(means: &[Vec<f64>]) -> f64 {
    let mut best = f64::INFINITY;
    for (i, a) in means.iter().enumerate() {
        for b in &means[i + 1..] {
            let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
            best = best.min(d2);
        }
    }
    if best.is_finite() {
        0.05 * best
    } else {
        1.0
    }
}

fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

impl ToyWorld {
    pub fn new(components: Vec<Component>, variance: Option<f64>, schedule: NoiseSchedule) -> Result<Self, WorldError> {
        let dim = components.first().map_or(0, |c| c.mean.len());
        let means: Vec<Vec<f64>> = components.iter().map(|c| c.mean.clone()).collect();
        let variance = variance.unwrap_or_else(|| default_variance(&means));
        let w = Self {
            dim,
            components,
            variance,
            schedule,
            entities: Vec::new(),
            attribute: None,
        };
        w.validate()?;
        Ok(w)
    }

    pub fn from_json(text: &str) -> Result<Self, crate::Error> {
        let w: ToyWorld = serde_json::from_str(text).map_err(|source| crate::Error::Json {
            path: "<world>".into(),
            source,
        })?;
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<(), WorldError> {
        let bad = |m: String| Err(WorldError::Invalid(m));
        if self.components.is_empty() || self.dim == 0 {
            return bad("world needs at least one component and dim ≥ 1".into());
        }
        let mut total = 0.0;
        for (k, c) in self.components.iter().enumerate() {
            if c.mean.len() != self.dim {
                return Err(crate::error::DimensionMismatch {
                    expected: self.dim,
                    found: c.mean.len(),
                }
                .into());
            }
            if c.mean.iter().any(|m| !m.is_finite()) {
                return bad(format!("component {k} has a non-finite mean"));
            }
            if !(c.weight > 0.0) || !c.weight.is_finite() {
                return bad(format!("component {k} weight must be positive"));
            }
            total += c.weight;
        }
        if (total - 1.0).abs() > 1e-9 {
            return bad(format!("weights sum to {total}, expected 1"));
        }
        if !(self.variance > 0.0) || !self.variance.is_finite() {
            return bad("variance must be positive".into());
        }
        for e in &self.entities {
            if e.start >= e.end || e.end > self.dim {
                return bad(format!("entity block {:?} out of range", e.name));
            }
        }
        if let Some(a) = &self.attribute {
            if a.axis >= self.dim {
                return bad(format!("attribute axis {} out of range", a.axis));
            }
        }
        self.schedule.validate()
    }

    /// Every plain concept tag carried by some component.
    pub fn concepts(&self) -> BTreeSet<String> {
        self.components
            .iter()
            .flat_map(|c| c.tags.iter())
            .filter(|t| !t.contains(':'))
            .cloned()
            .collect()
    }

    pub fn entity_block(&self, name: &str) -> Result<Range<usize>, WorldError> {
        self.entities
            .iter()
            .find(|e| e.name == name)
            .map(EntityBlock::range)
            .ok_or_else(|| WorldError::UnknownEntity(name.to_string()))
    }

    fn selected(&self, cond: &Condition) -> Result<Vec<usize>, WorldError> {
        let idx: Vec<usize> = (0..self.components.len())
            .filter(|&k| cond.admits(&self.components[k]))
            .collect();
        if idx.is_empty() {
            return Err(WorldError::EmptyCondition(format!("{cond:?}")));
        }
        Ok(idx)
    }

    fn check_x(&self, x: &[f64]) -> Result<(), WorldError> {
        if x.len() != self.dim {
            return Err(crate::error::DimensionMismatch {
                expected: self.dim,
                found: x.len(),
            }
            .into());
        }
        Ok(())
    }

    /// Log-weights plus Gaussian log-kernels of the selected components at `x`.
    fn log_terms(&self, idx: &[usize], x: &[f64], abar: f64) -> (Vec<f64>, f64) {
        let var = (1.0 - abar) + abar * self.variance;
        let sa = abar.sqrt();
        let total: f64 = idx.iter().map(|&k| self.components[k].weight).sum();
        let terms = idx
            .iter()
            .map(|&k| {
                let c = &self.components[k];
                let d2: f64 = x.iter().zip(&c.mean).map(|(xi, m)| (xi - sa * m).powi(2)).sum();
                (c.weight / total).ln() - 0.5 * d2 / var
            })
            .collect();
        (terms, var)
    }

    /// `log p_s(x)` of the conditioned marginal.
    pub fn log_density(&self, cond: &Condition, x: &[f64], s: Progress) -> Result<f64, WorldError> {
        self.check_x(x)?;
        let idx = self.selected(cond)?;
        let (terms, var) = self.log_terms(&idx, x, self.schedule.abar(s));
        let norm = -0.5 * self.dim as f64 * (2.0 * std::f64::consts::PI * var).ln();
        Ok(log_sum_exp(&terms) + norm)
    }

    /// Exact noise prediction `−√(1 − ᾱ) ∇ log p_s(x)` of the conditioned marginal.
    pub fn noise_pred(&self, cond: &Condition, x: &[f64], s: Progress) -> Result<GuidanceVec, WorldError> {
        self.check_x(x)?;
        let idx = self.selected(cond)?;
        let abar = self.schedule.abar(s);
        let (terms, var) = self.log_terms(&idx, x, abar);
        let lse = log_sum_exp(&terms);
        let sa = abar.sqrt();
        let mut centre = vec![0.0; self.dim];
        for (&k, t) in idx.iter().zip(&terms) {
            let r = (t - lse).exp();
            for (c, m) in centre.iter_mut().zip(&self.components[k].mean) {
                *c += r * sa * m;
            }
        }
        let scale = (1.0 - abar).sqrt() / var;
        Ok(GuidanceVec::new(
            x.iter().zip(&centre).map(|(xi, c)| scale * (xi - c)).collect(),
        ))
    }

    /// Posterior responsibilities at the data end and their argmax.
    pub fn classify(&self, x0: &[f64]) -> Result<Classification, WorldError> {
        self.check_x(x0)?;
        let idx: Vec<usize> = (0..self.components.len()).collect();
        let (terms, _) = self.log_terms(&idx, x0, 1.0);
        let lse = log_sum_exp(&terms);
        let responsibilities: Vec<f64> = terms.iter().map(|t| (t - lse).exp()).collect();
        let component = responsibilities
            .iter()
            .enumerate()
            .fold(0, |best, (k, r)| if *r > responsibilities[best] { k } else { best });
        Ok(Classification {
            component,
            responsibilities,
        })
    }

    /// Weighted mean of all component means.
    pub fn centre(&self) -> Vec<f64> {
        let mut c = vec![0.0; self.dim];
        for comp in &self.components {
            for (ci, m) in c.iter_mut().zip(&comp.mean) {
                *ci += comp.weight * m;
            }
        }
        c
    }
}
