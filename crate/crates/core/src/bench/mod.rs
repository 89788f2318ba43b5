//! Desk-scale compliance benchmark.
//!
//! Each suite case pairs a prompt with an analytic world. Samples are judged
//! by mixture responsibility at the data end, so violation rates are exact
//! functions of the final states rather than the output of a learned judge.

pub mod stats;
mod suite;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::compiler::{Category, CompileOptions, ConceptLexicon, ConstraintProgram};
use crate::engine::{EngineConfig, EngineMode};
use crate::error::{Error, Result};
use crate::rng::stream_seed;
use crate::toyworld::{sample, Condition, GuidancePlan, SamplerOptions, ToyWorld};

pub use suite::{compile_case, gen_suite, world_for_program, SuiteCase, SuiteConfig, CORPUS, INA_COMPLEMENT_SIZE};

pub const SCHEMA_VERSION: u32 = 1;
pub const MIN_SAMPLES_PER_CASE: usize = 50;
/// Compliant-mass thresholds separating the five compliance scores.
pub const DEFAULT_NCS_THRESHOLDS: [f64; 4] = [0.2, 0.4, 0.6, 0.8];

/// A guided configuration or the plain affirmative-conditioning baseline.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BenchMode {
    /// CFG toward every concept the prompt names, negated or not.
    Baseline,
    Full,
    NoProjection,
    NoScheduling,
}

impl BenchMode {
    pub const ALL: [BenchMode; 4] = [
        BenchMode::Baseline,
        BenchMode::Full,
        BenchMode::NoProjection,
        BenchMode::NoScheduling,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            BenchMode::Baseline => "baseline",
            BenchMode::Full => "full",
            BenchMode::NoProjection => "no_projection",
            BenchMode::NoScheduling => "no_scheduling",
        }
    }

    pub fn engine_mode(self) -> Option<EngineMode> {
        match self {
            BenchMode::Baseline => None,
            BenchMode::Full => Some(EngineMode::Full),
            BenchMode::NoProjection => Some(EngineMode::NoProjection),
            BenchMode::NoScheduling => Some(EngineMode::NoScheduling),
        }
    }
}

impl fmt::Display for BenchMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BenchMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace('-', "_");
        BenchMode::ALL
            .into_iter()
            .find(|m| m.as_str() == norm)
            .ok_or_else(|| Error::Bench(format!("unknown mode {s:?}")))
    }
}

impl From<EngineMode> for BenchMode {
    fn from(m: EngineMode) -> Self {
        match m {
            EngineMode::Full => BenchMode::Full,
            EngineMode::NoProjection => BenchMode::NoProjection,
            EngineMode::NoScheduling => BenchMode::NoScheduling,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BenchConfig {
    pub samples_per_case: usize,
    pub steps: usize,
    /// Engine settings shared by every guided mode; the mode field is overridden per run.
    pub engine: EngineConfig,
    pub compile: CompileOptions,
    pub ncs_thresholds: [f64; 4],
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            samples_per_case: 200,
            steps: SamplerOptions::default().steps,
            engine: EngineConfig::default(),
            compile: CompileOptions::default(),
            ncs_thresholds: DEFAULT_NCS_THRESHOLDS,
        }
    }
}

/// Ordinal compliance score from the compliant responsibility mass.
pub fn ncs_bucket(compliant_mass: f64, thresholds: &[f64; 4]) -> u8 {
    1 + thresholds.iter().filter(|&&t| compliant_mass >= t).count() as u8
}

/// Whether component `k` of the case's world counts as non-compliant.
fn forbidden_component(case: &SuiteCase, k: usize) -> bool {
    let tags = &case.world.components[k].tags;
    if !case.expected_required.is_empty() {
        let scene = !tags.is_empty();
        return scene && case.expected_required.is_disjoint(tags);
    }
    case.expected_forbidden.iter().any(|t| tags.contains(t))
}

/// 1 when the final state `x0` violates the case's negation, else 0.
///
/// Graded attributes compare the attribute coordinate with its threshold;
/// every other category judges the most responsible component.
pub fn violation_indicator(world: &ToyWorld, case: &SuiteCase, x0: &[f64]) -> Result<u8> {
    if case.category == Category::Nmi {
        if let Some(attr) = &world.attribute {
            return Ok(u8::from(x0[attr.axis] > attr.threshold));
        }
    }
    let c = world.classify(x0)?;
    Ok(u8::from(forbidden_component(case, c.component)))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub seed: u64,
    pub violation: u8,
    /// Responsibility mass on non-compliant components.
    pub forbidden_mass: f64,
    pub ncs: u8,
    pub cosine_to_forbidden: f64,
    pub max_residual: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub n: usize,
    pub nvr: f64,
    pub ncs_analog: f64,
    pub mean_forbidden_mass: f64,
    pub cosine_to_forbidden: f64,
    pub max_residual: f64,
}

impl Metrics {
    pub fn from_samples<'a, I>(samples: I) -> Self
    where
        I: IntoIterator<Item = &'a SampleRecord>,
    {
        let mut m = Metrics::default();
        for s in samples {
            m.n += 1;
            m.nvr += f64::from(s.violation);
            m.ncs_analog += f64::from(s.ncs);
            m.mean_forbidden_mass += s.forbidden_mass;
            m.cosine_to_forbidden += s.cosine_to_forbidden;
            m.max_residual = m.max_residual.max(s.max_residual);
        }
        if m.n > 0 {
            let n = m.n as f64;
            m.nvr /= n;
            m.ncs_analog /= n;
            m.mean_forbidden_mass /= n;
            m.cosine_to_forbidden /= n;
        }
        m
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CaseReport {
    pub id: String,
    pub category: Category,
    pub prompt: String,
    pub metrics: Metrics,
    pub samples: Vec<SampleRecord>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CategoryMetrics {
    pub category: Category,
    pub metrics: Metrics,
}

/// Results of one mode over the whole suite.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub mode: BenchMode,
    pub overall: Metrics,
    pub categories: Vec<CategoryMetrics>,
    pub cases: Vec<CaseReport>,
}

impl MetricsReport {
    pub fn category(&self, c: Category) -> Option<&Metrics> {
        self.categories.iter().find(|m| m.category == c).map(|m| &m.metrics)
    }

    pub fn case(&self, id: &str) -> Option<&CaseReport> {
        self.cases.iter().find(|c| c.id == id)
    }

    /// Per-sample values of `f` over all cases of `category`, in suite order.
    pub fn category_samples(&self, category: Category, f: impl Fn(&SampleRecord) -> f64) -> Vec<f64> {
        self.cases
            .iter()
            .filter(|c| c.category == category)
            .flat_map(|c| c.samples.iter().map(&f))
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub schema_version: u32,
    pub judge: String,
    pub seed: u64,
    pub config: BenchConfig,
    pub modes: Vec<MetricsReport>,
}

impl BenchReport {
    pub fn mode(&self, m: BenchMode) -> Option<&MetricsReport> {
        self.modes.iter().find(|r| r.mode == m)
    }

    /// One row per mode and category plus an `ALL` row per mode.
    pub fn summary_rows(&self) -> Vec<SummaryRow> {
        let mut rows = Vec::new();
        for r in &self.modes {
            for c in &r.categories {
                rows.push(SummaryRow::new(r.mode, c.category.as_str(), &c.metrics));
            }
            rows.push(SummaryRow::new(r.mode, "ALL", &r.overall));
        }
        rows
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub mode: String,
    pub category: String,
    pub n: usize,
    pub nvr: f64,
    pub ncs_analog: f64,
    pub mean_forbidden_mass: f64,
    pub cosine_to_forbidden: f64,
    pub max_residual: f64,
}

impl SummaryRow {
    fn new(mode: BenchMode, category: &str, m: &Metrics) -> Self {
        Self {
            mode: mode.to_string(),
            category: category.to_string(),
            n: m.n,
            nvr: m.nvr,
            ncs_analog: m.ncs_analog,
            mean_forbidden_mass: m.mean_forbidden_mass,
            cosine_to_forbidden: m.cosine_to_forbidden,
            max_residual: m.max_residual,
        }
    }
}

/// Seed of sample `j` of a case; shared by every mode so runs pair up.
pub fn sample_seed(seed: u64, case_id: &str, j: usize) -> u64 {
    stream_seed(seed, case_id, j as u64)
}

fn weighted_mean(world: &ToyWorld, pick: impl Fn(usize) -> bool) -> Option<Vec<f64>> {
    let mut acc = vec![0.0; world.dim];
    let mut total = 0.0;
    for (_, c) in world.components.iter().enumerate().filter(|(k, _)| pick(*k)) {
        total += c.weight;
        for (a, m) in acc.iter_mut().zip(&c.mean) {
            *a += c.weight * m;
        }
    }
    (total > 0.0).then(|| acc.into_iter().map(|a| a / total).collect())
}

/// Cosine between `x0 − μ_ok` and `μ_bad − μ_ok`, the means taken over the
/// compliant and non-compliant scene components.
fn cosine_to_forbidden(case: &SuiteCase, x0: &[f64]) -> f64 {
    let world = &case.world;
    let scene = |k: usize| !world.components[k].tags.is_empty();
    let bad = weighted_mean(world, |k| scene(k) && forbidden_component(case, k));
    let ok = weighted_mean(world, |k| scene(k) && !forbidden_component(case, k));
    let (Some(bad), Some(ok)) = (bad, ok) else {
        return 0.0;
    };
    let u: Vec<f64> = x0.iter().zip(&ok).map(|(x, o)| x - o).collect();
    let v: Vec<f64> = bad.iter().zip(&ok).map(|(b, o)| b - o).collect();
    let dot: f64 = u.iter().zip(&v).map(|(a, b)| a * b).sum();
    let nu = u.iter().map(|a| a * a).sum::<f64>().sqrt();
    let nv = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    if nu == 0.0 || nv == 0.0 {
        0.0
    } else {
        dot / (nu * nv)
    }
}

fn forbidden_mass(case: &SuiteCase, responsibilities: &[f64]) -> f64 {
    responsibilities
        .iter()
        .enumerate()
        .filter(|(k, _)| forbidden_component(case, *k))
        .map(|(_, r)| r)
        .sum::<f64>()
        .clamp(0.0, 1.0)
}

/// Guidance plan for one case under `mode`.
pub fn plan_for(mode: BenchMode, program: &ConstraintProgram, world: &ToyWorld, engine: &EngineConfig) -> Result<GuidancePlan> {
    Ok(match mode.engine_mode() {
        None => GuidancePlan::cfg(Condition::tags(program.mentioned_keys()), program, engine.clone()),
        Some(m) => {
            let config = EngineConfig {
                mode: m,
                ..engine.clone()
            };
            GuidancePlan::constrained(world, program, config)?
        }
    })
}

/// Draws and judges one sample.
pub fn run_sample(case: &SuiteCase, plan: &GuidancePlan, config: &BenchConfig, seed: u64) -> Result<SampleRecord> {
    let opts = SamplerOptions {
        steps: config.steps,
        record_states: false,
    };
    let traj = sample(&case.world, plan, &opts, seed)?;
    let x0 = &traj.final_x0;
    let class = case.world.classify(x0)?;
    let mass = forbidden_mass(case, &class.responsibilities);
    Ok(SampleRecord {
        seed,
        violation: violation_indicator(&case.world, case, x0)?,
        forbidden_mass: mass,
        ncs: ncs_bucket(1.0 - mass, &config.ncs_thresholds),
        cosine_to_forbidden: cosine_to_forbidden(case, x0),
        max_residual: traj.max_residual,
    })
}

/// Runs every mode over every case with `samples_per_case` paired seeds.
pub fn run_bench(
    suite: &[SuiteCase],
    modes: &[BenchMode],
    config: &BenchConfig,
    lexicon: &ConceptLexicon,
    seed: u64,
) -> Result<BenchReport> {
    if config.samples_per_case < MIN_SAMPLES_PER_CASE {
        return Err(Error::Bench(format!(
            "samples_per_case must be at least {MIN_SAMPLES_PER_CASE}, got {}",
            config.samples_per_case
        )));
    }
    if suite.is_empty() {
        return Err(Error::Bench("empty suite".into()));
    }
    let mut seen = BTreeSet::new();
    let modes: Vec<BenchMode> = modes.iter().copied().filter(|m| seen.insert(*m)).collect();

    let mut plans = Vec::with_capacity(modes.len() * suite.len());
    for &mode in &modes {
        for case in suite {
            let program = compile_case(&case.prompt, &case.world, lexicon, &config.compile)?;
            plans.push(plan_for(mode, &program, &case.world, &config.engine)?);
        }
    }

    let n = config.samples_per_case;
    let tasks: Vec<(usize, usize, usize)> = (0..modes.len())
        .flat_map(|m| (0..suite.len()).flat_map(move |c| (0..n).map(move |j| (m, c, j))))
        .collect();
    let records: Vec<SampleRecord> = tasks
        .par_iter()
        .map(|&(m, c, j)| {
            let case = &suite[c];
            run_sample(case, &plans[m * suite.len() + c], config, sample_seed(seed, &case.id, j))
        })
        .collect::<Result<_>>()?;

    let mut chunks = records.chunks(n);
    let mut reports = Vec::with_capacity(modes.len());
    for &mode in &modes {
        let cases: Vec<CaseReport> = suite
            .iter()
            .map(|case| {
                let samples = chunks.next().expect("one chunk per case").to_vec();
                CaseReport {
                    id: case.id.clone(),
                    category: case.category,
                    prompt: case.prompt.clone(),
                    metrics: Metrics::from_samples(&samples),
                    samples,
                }
            })
            .collect();
        let categories = Category::ALL
            .into_iter()
            .filter(|cat| cases.iter().any(|c| c.category == *cat))
            .map(|cat| CategoryMetrics {
                category: cat,
                metrics: Metrics::from_samples(
                    cases.iter().filter(|c| c.category == cat).flat_map(|c| c.samples.iter()),
                ),
            })
            .collect();
        reports.push(MetricsReport {
            mode,
            overall: Metrics::from_samples(cases.iter().flat_map(|c| c.samples.iter())),
            categories,
            cases,
        });
    }
    Ok(BenchReport {
        schema_version: SCHEMA_VERSION,
        judge: "analytic".into(),
        seed,
        config: config.clone(),
        modes: reports,
    })
}
