//! Batch commands behind the `painscreen` binary.
//!
//! Exit codes: 0 success, 1 I/O, 2 configuration or validation, 3 degenerate data.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use painscreen_core::config::{LoadError, RunConfig};
use painscreen_core::pipeline::run_session;
use painscreen_core::roughset::{attribute_weights, screen, InformationSystem};
use painscreen_core::stats::{anova_oneway, t_test, GroupSamples, TestKind, TestResult};
use painscreen_core::synth::{generate, GroundTruth};
use painscreen_core::Error;

#[derive(Debug)]
pub enum CliError {
    Io(String),
    Invalid(String),
    Degenerate(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) => 1,
            CliError::Invalid(_) => 2,
            CliError::Degenerate(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Io(m) => write!(f, "i/o error: {m}"),
            CliError::Invalid(m) => write!(f, "{m}"),
            CliError::Degenerate(m) => write!(f, "{m}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e.root() {
            Error::Degenerate(_) => CliError::Degenerate(e.to_string()),
            _ => CliError::Invalid(e.to_string()),
        }
    }
}

impl From<LoadError> for CliError {
    fn from(e: LoadError) -> Self {
        match e {
            LoadError::Io(m) => CliError::Io(m),
            LoadError::Invalid(e) => CliError::Invalid(e.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

/// `dir/stem.<suffix>` next to `path`.
pub fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}.{suffix}"))
}

fn load_config(path: Option<&Path>, seed: Option<u64>) -> CliResult<RunConfig> {
    let mut cfg = match path {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = seed {
        cfg.synth.seed = seed;
    }
    Ok(cfg)
}

fn write_file(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> CliResult<()> {
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = BufWriter::new(file);
    f(&mut w).and_then(|()| w.flush()).map_err(|e| io_err(path, e))
}

fn read_file(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| io_err(path, e))
}

/// Writes a synthetic stream to `output` and its labels to `<stem>.truth.csv`.
pub fn cmd_simulate(config: Option<&Path>, output: &Path, seed: Option<u64>) -> CliResult<()> {
    let cfg = load_config(config, seed)?;
    let session = generate(&cfg.synth, cfg.pipeline.signal.sample_count)?;
    write_file(output, |w| session.write_stream(w))?;
    write_file(&sibling(output, "truth.csv"), |w| session.truth.write_csv(w))
}

/// Output locations of [`cmd_run`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunOutputs {
    pub report: PathBuf,
    pub weights: PathBuf,
    pub commands: PathBuf,
}

impl RunOutputs {
    pub fn for_report(report: &Path) -> Self {
        Self {
            report: report.to_path_buf(),
            weights: sibling(report, "weights.csv"),
            commands: sibling(report, "commands.txt"),
        }
    }
}

/// Runs the pipeline over a frame file.
///
/// Ground truth is read from `truth` when given, else from
/// `<input stem>.truth.csv` when that file exists; otherwise button presses
/// define the target set.
pub fn cmd_run(
    config: Option<&Path>,
    input: &Path,
    output: &Path,
    truth: Option<&Path>,
) -> CliResult<RunOutputs> {
    let cfg = load_config(config, None)?;
    let text = read_file(input)?;
    let truth_path = truth
        .map(Path::to_path_buf)
        .or_else(|| Some(sibling(input, "truth.csv")).filter(|p| p.is_file()));
    let truth = match &truth_path {
        Some(p) => Some(GroundTruth::read_csv(read_file(p)?.as_bytes())?),
        None => None,
    };
    let report = run_session(&cfg.pipeline, text.lines(), truth.as_ref())?;

    let out = RunOutputs::for_report(output);
    write_file(&out.report, |w| report.write_jsonl(w))?;
    let mut weights = Vec::new();
    report.write_weights_csv(&mut weights)?;
    write_file(&out.weights, |w| w.write_all(&weights))?;
    write_file(&out.commands, |w| report.write_commands(w))?;
    Ok(out)
}

/// Weights an information-system CSV and screens its objects. Weights go to
/// `output`; per-object scores to `<stem>.scores.csv`. Returns `X'`.
pub fn cmd_screen(config: Option<&Path>, input: &Path, output: &Path) -> CliResult<Vec<String>> {
    let cfg = load_config(config, None)?.pipeline;
    let (system, target) = InformationSystem::read_csv(read_file(input)?.as_bytes())?;
    let weights = attribute_weights(&system, &target, cfg.alpha, cfg.beta, cfg.dependence_mode)?;
    let result = screen(&system, &weights, cfg.theta)?;

    let mut buf = Vec::new();
    weights.write_csv(&mut buf)?;
    write_file(output, |w| w.write_all(&buf))?;
    write_file(&sibling(output, "scores.csv"), |w| {
        writeln!(w, "object,score,selected")?;
        for (i, name) in system.objects().iter().enumerate() {
            let sel = result.selected.binary_search(&i).is_ok();
            writeln!(w, "{name},{},{}", result.scores[i], u8::from(sel))?;
        }
        Ok(())
    })?;
    Ok(result.selected.iter().map(|&i| system.objects()[i].clone()).collect())
}

/// Runs `ttest` (exactly two groups) or `anova` over a `group,value` CSV.
pub fn cmd_stats(input: &Path, test: &str) -> CliResult<TestResult> {
    let kind: TestKind = test.parse()?;
    let groups = GroupSamples::read_csv(read_file(input)?.as_bytes())?;
    Ok(match kind {
        TestKind::TTest => {
            let [(_, g1), (_, g2)] = groups.groups.as_slice() else {
                return Err(CliError::Invalid(format!(
                    "ttest needs exactly 2 groups, got {}",
                    groups.groups.len()
                )));
            };
            t_test(g1, g2)?
        }
        TestKind::Anova => anova_oneway(&groups)?,
    })
}
