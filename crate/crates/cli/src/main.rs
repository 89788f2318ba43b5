//! `negproj`: command-line front end for the negation-constrained guidance engine.
//!
//! Exit codes: 0 success, 2 input error, 3 missing resource, 4 internal failure.

mod config;
mod error;

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use negproj_core::bench::{self, gen_suite, run_bench, BenchMode, BenchReport, SuiteCase};
use negproj_core::compiler::{categorize, compile_with, parse, GrammarTable, NegationParse};
use negproj_core::geometry::{project_halfspace, project_sequential, HalfSpace};
use negproj_core::toyworld::{sample, SamplerOptions};
use negproj_core::GuidanceVec;
use serde::{Deserialize, Serialize};

use crate::config::{read_file, ConfigArgs, RunConfig};
use crate::error::CliError;

#[derive(Parser, Debug)]
#[command(name = "negproj", version, about = "Negation as half-space constraints on guided sampling")]
struct Cli {
    #[command(flatten)]
    config: ConfigArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Project a guidance increment onto one or more half-spaces.
    Project {
        /// Constraint normal as comma-separated numbers; repeat for several constraints.
        #[arg(long = "a", required_unless_present = "input", allow_hyphen_values = true)]
        normals: Vec<String>,
        /// Bound for the matching normal.
        #[arg(long = "b", required_unless_present = "input", allow_hyphen_values = true)]
        bounds: Vec<f64>,
        /// Reference increment.
        #[arg(long, required_unless_present = "input", allow_hyphen_values = true)]
        dref: Option<String>,
        /// JSON file with `normals`, `bounds` and `dref` instead of inline vectors.
        #[arg(long, conflicts_with_all = ["normals", "bounds", "dref"])]
        input: Option<PathBuf>,
    },
    /// Show the negation parse of a prompt.
    Parse { prompt: String },
    /// Compile a prompt into its constraint program.
    Compile { prompt: String },
    /// Draw one trajectory for a prompt in a world.
    Sample {
        #[arg(long)]
        prompt: String,
        /// Write the trajectory here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate the benchmark suite as JSON lines.
    GenSuite {
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the benchmark and write `report.json` and `report.csv`.
    Bench {
        #[arg(long, default_value = "bench-out")]
        out_dir: PathBuf,
    },
}

fn parse_vector(text: &str) -> Result<GuidanceVec, CliError> {
    let values = text
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| CliError::Input(format!("bad vector literal {text:?}: {e}")))?;
    if values.iter().any(|v| !v.is_finite()) {
        return Err(CliError::Input(format!("non-finite entry in {text:?}")));
    }
    Ok(GuidanceVec::new(values))
}

fn to_json<T: Serialize>(value: &T) -> Result<String, CliError> {
    serde_json::to_string_pretty(value).map_err(|e| CliError::Internal(e.to_string()))
}

fn write_out(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::io(p, e)),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| CliError::Internal(e.to_string()))
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ProjectInput {
    normals: Vec<Vec<f64>>,
    bounds: Vec<f64>,
    dref: Vec<f64>,
}

fn project_input(
    normals: &[String],
    bounds: &[f64],
    dref: Option<&str>,
    input: Option<&Path>,
) -> Result<(Vec<GuidanceVec>, Vec<f64>, GuidanceVec), CliError> {
    if let Some(path) = input {
        let file: ProjectInput = serde_json::from_str(&read_file(path)?)
            .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        let normals = file.normals.into_iter().map(GuidanceVec::new).collect();
        return Ok((normals, file.bounds, GuidanceVec::new(file.dref)));
    }
    let dref = parse_vector(dref.unwrap_or_default())?;
    let normals = normals.iter().map(|a| parse_vector(a)).collect::<Result<_, _>>()?;
    Ok((normals, bounds.to_vec(), dref))
}

fn cmd_project(cfg: &RunConfig, normals: Vec<GuidanceVec>, bounds: &[f64], dref: &GuidanceVec) -> Result<String, CliError> {
    if normals.len() != bounds.len() {
        return Err(CliError::Input(format!(
            "{} normals but {} bounds",
            normals.len(),
            bounds.len()
        )));
    }
    let hs: Vec<HalfSpace> = normals.into_iter().zip(bounds).map(|(a, &b)| HalfSpace::new(a, b)).collect();
    let dref = dref.clone();
    if let [h] = hs.as_slice() {
        let r = project_halfspace(&dref, h, cfg.eps_num)?;
        #[derive(Serialize)]
        struct Single {
            corrected: GuidanceVec,
            lambda: f64,
            active: bool,
            degenerate: bool,
        }
        return to_json(&Single {
            corrected: r.corrected,
            lambda: r.multiplier,
            active: r.active,
            degenerate: r.degenerate,
        });
    }
    to_json(&project_sequential(&dref, &hs, cfg.passes, cfg.eps_num)?)
}

#[derive(Serialize)]
struct SpanView {
    text: String,
    canonical: String,
    depth: u32,
    category: String,
}

#[derive(Serialize)]
struct ParseView {
    prompt: String,
    negated: Vec<SpanView>,
    parse: NegationParse,
}

fn cmd_parse(prompt: &str) -> Result<String, CliError> {
    let p = parse(prompt, &GrammarTable::default())?;
    let negated = p
        .negated
        .iter()
        .enumerate()
        .map(|(i, s)| {
            Ok(SpanView {
                text: s.span.text.clone(),
                canonical: s.canonical(),
                depth: s.depth(),
                category: categorize(&p, i)?.to_string(),
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    to_json(&ParseView {
        prompt: prompt.to_string(),
        negated,
        parse: p,
    })
}

fn cmd_compile(cfg: &RunConfig, prompt: &str) -> Result<String, CliError> {
    let lexicon = cfg.load_lexicon()?;
    let world = cfg.load_world()?;
    let p = parse(prompt, &GrammarTable::default())?;
    let concepts = world.as_ref().map(|w| w.concepts());
    let program = compile_with(&p, &lexicon, &cfg.compile_options(), concepts.as_ref())?;
    to_json(&program)
}

fn cmd_sample(cfg: &RunConfig, prompt: &str) -> Result<String, CliError> {
    let world = cfg
        .load_world()?
        .ok_or_else(|| CliError::Input("sample needs --world".into()))?;
    let lexicon = cfg.load_lexicon()?;
    let program = bench::compile_case(prompt, &world, &lexicon, &cfg.compile_options())?;
    let mode = cfg.modes.first().copied().unwrap_or(cfg.mode.into());
    let plan = bench::plan_for(mode, &program, &world, &cfg.engine())?;
    let opts = SamplerOptions {
        steps: cfg.steps,
        record_states: true,
    };
    let trajectory = sample(&world, &plan, &opts, cfg.seed)?;
    let classification = world.classify(&trajectory.final_x0)?;
    #[derive(Serialize)]
    struct SampleFile<'a> {
        prompt: &'a str,
        mode: BenchMode,
        component: usize,
        component_tags: Vec<String>,
        responsibilities: Vec<f64>,
        trajectory: negproj_core::toyworld::Trajectory,
    }
    to_json(&SampleFile {
        prompt,
        mode,
        component: classification.component,
        component_tags: world.components[classification.component].tags.iter().cloned().collect(),
        responsibilities: classification.responsibilities,
        trajectory,
    })
}

fn suite_jsonl(suite: &[SuiteCase]) -> Result<String, CliError> {
    let mut out = String::new();
    for case in suite {
        out += &serde_json::to_string(case).map_err(|e| CliError::Internal(e.to_string()))?;
        out.push('\n');
    }
    Ok(out)
}

fn load_suite(cfg: &RunConfig) -> Result<Vec<SuiteCase>, CliError> {
    let lexicon = cfg.load_lexicon()?;
    let Some(path) = &cfg.suite else {
        return Ok(gen_suite(&cfg.suite_config(), &lexicon, cfg.seed)?);
    };
    let mut cases = Vec::new();
    for (i, line) in read_file(path)?.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let case: SuiteCase = serde_json::from_str(line)
            .map_err(|e| CliError::Input(format!("{}:{}: {e}", path.display(), i + 1)))?;
        if cfg.categories.is_empty() || cfg.categories.contains(&case.category) {
            cases.push(case);
        }
    }
    if cases.is_empty() {
        return Err(CliError::Input(format!("{}: no cases selected", path.display())));
    }
    Ok(cases)
}

#[derive(Serialize)]
struct ReportFile<'a> {
    #[serde(flatten)]
    report: &'a BenchReport,
    run_config: &'a RunConfig,
}

fn summary_table(report: &BenchReport) -> String {
    let mut s = format!(
        "{:<14} {:<4} {:>6} {:>7} {:>7} {:>9}\n",
        "mode", "cat", "n", "nvr", "ncs", "forbidden"
    );
    for r in report.summary_rows() {
        s += &format!(
            "{:<14} {:<4} {:>6} {:>7.4} {:>7.3} {:>9.4}\n",
            r.mode, r.category, r.n, r.nvr, r.ncs_analog, r.mean_forbidden_mass
        );
    }
    s
}

fn cmd_bench(cfg: &RunConfig, out_dir: &Path) -> Result<String, CliError> {
    let lexicon = cfg.load_lexicon()?;
    let suite = load_suite(cfg)?;
    let report = run_bench(&suite, &cfg.bench_modes(), &cfg.bench(), &lexicon, cfg.seed)?;
    std::fs::create_dir_all(out_dir).map_err(|e| CliError::io(out_dir, e))?;
    let json = to_json(&ReportFile {
        report: &report,
        run_config: cfg,
    })?;
    let json_path = out_dir.join("report.json");
    std::fs::write(&json_path, json + "\n").map_err(|e| CliError::io(&json_path, e))?;

    let csv_path = out_dir.join("report.csv");
    let mut w = csv::Writer::from_path(&csv_path).map_err(|e| CliError::Internal(format!("{}: {e}", csv_path.display())))?;
    for row in report.summary_rows() {
        w.serialize(row).map_err(|e| CliError::Internal(e.to_string()))?;
    }
    w.flush().map_err(|e| CliError::io(&csv_path, e))?;
    Ok(summary_table(&report))
}

fn run(cli: &Cli) -> Result<String, CliError> {
    let cfg = cli.config.resolve()?;
    match &cli.command {
        Command::Project {
            normals,
            bounds,
            dref,
            input,
        } => {
            let (normals, bounds, dref) = project_input(normals, bounds, dref.as_deref(), input.as_deref())?;
            cmd_project(&cfg, normals, &bounds, &dref)
        }
        Command::Parse { prompt } => cmd_parse(prompt),
        Command::Compile { prompt } => cmd_compile(&cfg, prompt),
        Command::Sample { prompt, out } => {
            let text = cmd_sample(&cfg, prompt)?;
            match out {
                Some(p) => write_out(Some(p), &text).map(|_| format!("wrote {}", p.display())),
                None => Ok(text),
            }
        }
        Command::GenSuite { out } => {
            let suite = load_suite(&RunConfig { suite: None, ..cfg })?;
            let text = suite_jsonl(&suite)?;
            match out {
                Some(p) => write_out(Some(p), &text).map(|_| format!("wrote {} cases to {}", suite.len(), p.display())),
                None => Ok(text.trim_end().to_string()),
            }
        }
        Command::Bench { out_dir } => cmd_bench(&cfg, out_dir),
    }
}

fn main() {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(text) => {
            if let Err(e) = write_out(None, &(text + "\n")) {
                eprintln!("negproj: {e}");
                std::process::exit(e.code());
            }
        }
        Err(e) => {
            eprintln!("negproj: {e}");
            std::process::exit(e.code());
        }
    }
}
