//! Command-line front end. Each subcommand maps onto one library call.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::bench::{emit_plot, run_grid, BenchConfig};
use crate::coverage::coverage;
use crate::error::{AksError, Result};
use crate::io::{
    format_scores, format_selection, load_manifest, load_scores_auto, load_selection, save_scores, save_selection,
    ScoreFormat, SelectionFile,
};
use crate::oracle::{brute_force, lexicographic, OracleConfig, DEFAULT_ENUMERATION_CAP};
use crate::scorer::{score_frames, RemoteSpec, ScorerSpec, Transport};
use crate::series::{decimate, resample_with_stride, ScoreSeries, SelectionParams, Strategy};
use crate::strategies::{objective, select};

#[derive(Debug, Parser)]
#[command(name = "aks", version, about = "Adaptive keyframe sampling")]
pub struct Cli {
    /// Raise log verbosity (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Score manifest frames against a query.
    Score(ScoreArgs),
    /// Select keyframes from a score file.
    Select(SelectArgs),
    /// Coverage of a selection file.
    Coverage(CoverageArgs),
    /// Objective value of a selection against a score file.
    Objective(ObjectiveArgs),
    /// Exhaustive optimum for a small score file.
    Oracle(OracleArgs),
    /// Run a benchmark grid from a TOML config.
    Bench(BenchArgs),
    /// Render a score file and selection as SVG.
    Plot(PlotArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Jsonl,
    Csv,
}

impl From<FormatArg> for ScoreFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Jsonl => ScoreFormat::Jsonl,
            FormatArg::Csv => ScoreFormat::Csv,
        }
    }
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub query: String,
    /// `constant:<x>`, `file:<path>`, `synthetic:<spec.toml>`, `stdio:<command>` or a URL.
    #[arg(long, conflicts_with = "scorer_url")]
    pub scorer: Option<String>,
    /// HTTP scorer sidecar base URL.
    #[arg(long, env = "AKS_SCORER_URL")]
    pub scorer_url: Option<String>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub timeout_s: Option<f64>,
    #[arg(long)]
    pub max_retries: Option<u32>,
    /// Overrides the noise seed of a synthetic scorer.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Defaults to the output extension (`.csv` or JSONL).
    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,
    /// Output file; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    /// L=3, s_thr=0.2.
    Concentrated,
}

#[derive(Debug, Args)]
pub struct SelectArgs {
    #[arg(long)]
    pub scores: PathBuf,
    #[arg(long, default_value = "ada", value_parser = parse_sampler)]
    pub strategy: Strategy,
    #[arg(long, default_value_t = 64)]
    pub m: usize,
    /// Default 5, or 3 with `--preset concentrated`.
    #[arg(long)]
    pub max_level: Option<usize>,
    /// Default 0.8, or 0.2 with `--preset concentrated`.
    #[arg(long)]
    pub s_thr: Option<f64>,
    /// Recorded in the selection file.
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    /// Candidate rate the series is decimated to before selecting.
    #[arg(long, default_value_t = 1.0)]
    pub fps: f64,
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_sampler(s: &str) -> std::result::Result<Strategy, String> {
    match s.parse::<Strategy>() {
        Ok(Strategy::Oracle) => Err("use the oracle subcommand for exhaustive search".into()),
        Ok(s) => Ok(s),
        Err(e) => Err(e.to_string()),
    }
}

impl SelectArgs {
    pub fn params(&self) -> SelectionParams {
        let (l, thr) = match self.preset {
            Some(Preset::Concentrated) => (3, 0.2),
            None => (5, 0.8),
        };
        SelectionParams::new(self.m, self.max_level.unwrap_or(l), self.s_thr.unwrap_or(thr)).with_lambda(self.lambda)
    }
}

#[derive(Debug, Args)]
pub struct CoverageArgs {
    #[arg(long)]
    pub selection: PathBuf,
    /// Defaults to the horizon stored in the selection file.
    #[arg(long)]
    pub horizon: Option<usize>,
    /// Defaults to the selection's L.
    #[arg(long)]
    pub max_level: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ObjectiveArgs {
    #[arg(long)]
    pub scores: PathBuf,
    #[arg(long)]
    pub selection: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    /// Defaults to the selection's L.
    #[arg(long)]
    pub max_level: Option<usize>,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[arg(long)]
    pub scores: PathBuf,
    #[arg(long)]
    pub m: usize,
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    #[arg(long, default_value_t = 5)]
    pub max_level: usize,
    /// Maximise coverage first, then relevance (ignores --lambda).
    #[arg(long)]
    pub lexicographic: bool,
    /// Refuse instances with more subsets than this.
    #[arg(long, default_value_t = DEFAULT_ENUMERATION_CAP)]
    pub cap: u128,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides the config's seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides the config's output directory.
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    #[arg(long)]
    pub scores: PathBuf,
    #[arg(long)]
    pub selection: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

/// Parses `argv` and runs it, printing diagnostics to stderr. Returns the
/// process exit status.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new()
        .filter_level(level)
        .parse_default_env()
        .target(env_logger::Target::Stderr)
        .try_init();

    let stdout = std::io::stdout();
    match run(cli.command, &mut stdout.lock()) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

/// Runs one subcommand, writing data to `out`.
pub fn run(command: Command, out: &mut dyn Write) -> Result<()> {
    match command {
        Command::Score(a) => cmd_score(a, out),
        Command::Select(a) => cmd_select(a, out),
        Command::Coverage(a) => cmd_coverage(a, out),
        Command::Objective(a) => cmd_objective(a, out),
        Command::Oracle(a) => cmd_oracle(a, out),
        Command::Bench(a) => cmd_bench(a, out),
        Command::Plot(a) => cmd_plot(a),
    }
}

fn emit(out: &mut dyn Write, text: &str) -> Result<()> {
    out.write_all(text.as_bytes())
        .and_then(|_| out.flush())
        .map_err(|e| AksError::io("<stdout>", e))
}

fn cmd_score(a: ScoreArgs, out: &mut dyn Write) -> Result<()> {
    let manifest = load_manifest(&a.manifest)?;
    let mut scorer = match (&a.scorer, &a.scorer_url) {
        (Some(s), _) => s.parse::<ScorerSpec>()?,
        (None, Some(url)) => ScorerSpec::Remote(RemoteSpec::new(url.as_str(), Transport::Http)),
        (None, None) => {
            return Err(AksError::InvalidParam(
                "no scorer given (use --scorer, --scorer-url or AKS_SCORER_URL)".into(),
            ))
        }
    };
    match &mut scorer {
        ScorerSpec::Remote(r) => {
            if let Some(b) = a.batch_size {
                r.batch_size = b;
            }
            if let Some(t) = a.timeout_s {
                r.timeout_s = t;
            }
            if let Some(n) = a.max_retries {
                r.max_retries = n;
            }
        }
        ScorerSpec::Synthetic(spec) => {
            if let Some(seed) = a.seed {
                spec.seed = seed;
            }
        }
        _ => {}
    }
    let series = score_frames(&manifest, &a.query, &scorer)?;
    match &a.out {
        Some(path) => {
            let format = a.format.map(Into::into).unwrap_or_else(|| ScoreFormat::from_path(path));
            save_scores(&series, path, format)
        }
        None => emit(out, &format_scores(&series, a.format.map(Into::into).unwrap_or(ScoreFormat::Jsonl))),
    }
}

fn cmd_select(a: SelectArgs, out: &mut dyn Write) -> Result<()> {
    let params = a.params();
    let series = load_scores_auto(&a.scores)?;
    let (candidates, stride) = resample_with_stride(&series, a.fps)?;
    let selection = select(&candidates, a.strategy, &params)?;
    match &a.out {
        Some(path) => save_selection(&candidates, &selection, stride, path),
        None => emit(out, &format_selection(&candidates, &selection, stride)?),
    }
}

/// Reconstructs the series a selection file's indices refer to.
fn selection_series(scores: &Path, file: &SelectionFile) -> Result<ScoreSeries> {
    let series = decimate(&load_scores_auto(scores)?, file.stride)?;
    if series.len() != file.horizon {
        return Err(AksError::InvalidParam(format!(
            "{}: {} frames after stride {}, but the selection was made on {}",
            scores.display(),
            series.len(),
            file.stride,
            file.horizon
        )));
    }
    Ok(series)
}

fn cmd_coverage(a: CoverageArgs, out: &mut dyn Write) -> Result<()> {
    let file = load_selection(&a.selection)?;
    let horizon = a.horizon.unwrap_or(file.horizon);
    let level = a.max_level.unwrap_or(file.selection.params.max_level);
    let value = coverage(file.selection.indices(), horizon, level)?;
    emit(out, &format!("{value}\n"))
}

fn cmd_objective(a: ObjectiveArgs, out: &mut dyn Write) -> Result<()> {
    let file = load_selection(&a.selection)?;
    let series = selection_series(&a.scores, &file)?;
    let level = a.max_level.unwrap_or(file.selection.params.max_level);
    let value = objective(&series, file.selection.indices(), a.lambda, level)?;
    emit(out, &format!("{value}\n"))
}

fn cmd_oracle(a: OracleArgs, out: &mut dyn Write) -> Result<()> {
    let series = load_scores_auto(&a.scores)?;
    let config = OracleConfig { cap: a.cap };
    let (selection, value) = if a.lexicographic {
        let sel = lexicographic(&series, a.m, a.max_level, &config)?;
        let cov = coverage(sel.indices(), series.len(), a.max_level)?;
        (sel, cov as f64)
    } else {
        brute_force(&series, a.m, a.lambda, a.max_level, &config)?
    };
    if let Some(path) = &a.out {
        save_selection(&series, &selection, 1, path)?;
    }
    emit(out, &format!("{value}\n"))
}

fn cmd_bench(a: BenchArgs, out: &mut dyn Write) -> Result<()> {
    let mut config = BenchConfig::load(&a.config)?;
    if let Some(seed) = a.seed {
        config.seed = seed;
    }
    if let Some(dir) = a.output_dir {
        config.output_dir = dir;
    }
    let report = run_grid(&config)?;
    emit(out, &report.summary())
}

fn cmd_plot(a: PlotArgs) -> Result<()> {
    let file = load_selection(&a.selection)?;
    let series = selection_series(&a.scores, &file)?;
    emit_plot(&series, &file.selection, &a.out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn command_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn preset_and_defaults() {
        let cli = Cli::try_parse_from(["aks", "select", "--scores", "s.jsonl"]).unwrap();
        let Command::Select(a) = cli.command else { panic!() };
        assert_eq!(a.strategy, Strategy::Ada);
        assert_eq!(a.params(), SelectionParams::new(64, 5, 0.8));
        assert_eq!(a.fps, 1.0);

        let cli = Cli::try_parse_from(["aks", "select", "--scores", "s", "--preset", "concentrated"]).unwrap();
        let Command::Select(a) = cli.command else { panic!() };
        assert_eq!(a.params(), SelectionParams::new(64, 3, 0.2));

        let cli =
            Cli::try_parse_from(["aks", "select", "--scores", "s", "--preset", "concentrated", "--s-thr", "0.5"]).unwrap();
        let Command::Select(a) = cli.command else { panic!() };
        assert_eq!(a.params().s_thr, 0.5);
    }

    #[test]
    fn usage_errors_exit_two() {
        assert_eq!(dispatch(["aks", "frobnicate"]), 2);
        assert_eq!(dispatch(["aks", "select", "--scores", "s", "--strategy", "oracle"]), 2);
        assert_eq!(dispatch(["aks", "--help"]), 0);
    }
}
