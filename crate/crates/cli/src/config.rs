//! Run configuration: a JSON document overridden field by field by flags.

use std::path::{Path, PathBuf};

use clap::Args;
use negproj_core::bench::{BenchConfig, BenchMode, SuiteConfig};
use negproj_core::compiler::{Category, CompileOptions, ConceptLexicon};
use negproj_core::engine::{EngineConfig, EngineMode, DEFAULT_GAMMA};
use negproj_core::geometry::{DEFAULT_EPS_NUM, DEFAULT_PASSES};
use negproj_core::scheduler::{ScheduleOrientation, DEFAULT_EXPONENT, DEFAULT_FINAL_BOUND};
use negproj_core::toyworld::ToyWorld;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub gamma: f64,
    pub p: f64,
    pub b_final: f64,
    pub eps_num: f64,
    pub steps: usize,
    pub passes: usize,
    pub schedule_orientation: ScheduleOrientation,
    pub mode: EngineMode,
    /// Modes compared by `bench`; empty means all four.
    pub modes: Vec<BenchMode>,
    pub lexicon: Option<PathBuf>,
    pub world: Option<PathBuf>,
    pub suite: Option<PathBuf>,
    pub seed: u64,
    pub samples_per_case: usize,
    pub cases_per_category: usize,
    pub categories: Vec<Category>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            gamma: DEFAULT_GAMMA,
            p: DEFAULT_EXPONENT,
            b_final: DEFAULT_FINAL_BOUND,
            eps_num: DEFAULT_EPS_NUM,
            steps: 64,
            passes: DEFAULT_PASSES,
            schedule_orientation: ScheduleOrientation::default(),
            mode: EngineMode::Full,
            modes: Vec::new(),
            lexicon: None,
            world: None,
            suite: None,
            seed: 0,
            samples_per_case: BenchConfig::default().samples_per_case,
            cases_per_category: SuiteConfig::default().cases_per_category,
            categories: Vec::new(),
        }
    }
}

/// Flags shared by every command; each mirrors a [`RunConfig`] field.
#[derive(Args, Clone, Debug, Default)]
pub struct ConfigArgs {
    /// JSON run configuration; flags override its fields.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub gamma: Option<f64>,
    /// Polynomial exponent of the bound schedule.
    #[arg(long, global = true)]
    pub p: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub b_final: Option<f64>,
    #[arg(long, global = true)]
    pub eps_num: Option<f64>,
    #[arg(long, global = true)]
    pub steps: Option<usize>,
    #[arg(long, global = true)]
    pub passes: Option<usize>,
    /// `progress` or `literal`.
    #[arg(long, global = true)]
    pub schedule_orientation: Option<String>,
    /// Engine mode; repeat for `bench` to compare several.
    #[arg(long = "mode", global = true)]
    pub modes: Vec<String>,
    #[arg(long, global = true)]
    pub lexicon: Option<PathBuf>,
    #[arg(long, global = true)]
    pub world: Option<PathBuf>,
    #[arg(long, global = true)]
    pub suite: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub samples_per_case: Option<usize>,
    #[arg(long, global = true)]
    pub cases_per_category: Option<usize>,
    /// Restrict to a category (AOC, LEN, ...); repeatable.
    #[arg(long = "category", global = true)]
    pub categories: Vec<String>,
}

pub fn read_file(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

fn parse_json<T: for<'de> Deserialize<'de>>(path: &Path, text: &str) -> Result<T, CliError> {
    serde_json::from_str(text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

impl ConfigArgs {
    /// File values first, then every flag that was given.
    pub fn resolve(&self) -> Result<RunConfig, CliError> {
        let mut c = match &self.config {
            Some(path) => parse_json(path, &read_file(path)?)?,
            None => RunConfig::default(),
        };
        macro_rules! take {
            ($($f:ident),*) => {$(
                if let Some(v) = self.$f.clone() {
                    c.$f = v.into();
                }
            )*};
        }
        take!(gamma, p, b_final, eps_num, steps, passes, seed, samples_per_case, cases_per_category);
        take!(lexicon, world, suite);
        if let Some(o) = &self.schedule_orientation {
            c.schedule_orientation = match o.replace('-', "_").as_str() {
                "progress" => ScheduleOrientation::Progress,
                "literal" => ScheduleOrientation::Literal,
                other => return Err(CliError::Input(format!("unknown schedule orientation {other:?}"))),
            };
        }
        if !self.modes.is_empty() {
            c.modes = self
                .modes
                .iter()
                .map(|m| m.parse::<BenchMode>())
                .collect::<Result<_, _>>()
                .map_err(|e| CliError::Input(e.to_string()))?;
            if let Some(m) = c.modes.iter().find_map(|m| m.engine_mode()) {
                c.mode = m;
            }
        }
        if !self.categories.is_empty() {
            c.categories = self
                .categories
                .iter()
                .map(|s| s.parse::<Category>())
                .collect::<Result<_, _>>()
                .map_err(|e| CliError::Input(e.to_string()))?;
        }
        Ok(c)
    }
}

impl RunConfig {
    pub fn engine(&self) -> EngineConfig {
        EngineConfig {
            gamma: self.gamma,
            passes: self.passes,
            eps_num: self.eps_num,
            mode: self.mode,
            orientation: self.schedule_orientation,
            ..EngineConfig::default()
        }
    }

    pub fn compile_options(&self) -> CompileOptions {
        CompileOptions {
            b_final: self.b_final,
            p: self.p,
            ..CompileOptions::default()
        }
    }

    pub fn bench(&self) -> BenchConfig {
        BenchConfig {
            samples_per_case: self.samples_per_case,
            steps: self.steps,
            engine: self.engine(),
            compile: self.compile_options(),
            ..BenchConfig::default()
        }
    }

    pub fn suite_config(&self) -> SuiteConfig {
        SuiteConfig {
            cases_per_category: self.cases_per_category,
            compile: self.compile_options(),
            categories: self.categories.clone(),
        }
    }

    pub fn bench_modes(&self) -> Vec<BenchMode> {
        if self.modes.is_empty() {
            BenchMode::ALL.to_vec()
        } else {
            self.modes.clone()
        }
    }

    pub fn load_lexicon(&self) -> Result<ConceptLexicon, CliError> {
        match &self.lexicon {
            Some(path) => parse_json(path, &read_file(path)?),
            None => Ok(ConceptLexicon::builtin()),
        }
    }

    pub fn load_world(&self) -> Result<Option<ToyWorld>, CliError> {
        let Some(path) = &self.world else {
            return Ok(None);
        };
        let text = read_file(path)?;
        ToyWorld::from_json(&text)
            .map(Some)
            .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
    }
}
