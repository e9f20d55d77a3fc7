//! Command-line front end: `table`, `figure` and `selftest`.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use chrono::NaiveDate;
use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};

use crate::correlation::{build_surface, grid, CorrelationSurface, GridPreset, PAPER_WEIGHTS};
use crate::data::{load_csv, prepare_returns, Frequency, PortfolioSpec, Position, PriceSeries};
use crate::error::Error;
use crate::report::{render_figure_csv, render_figure_svg, render_table_csv, render_table_text};
use crate::selftest::{run_selftest, SelftestConfig, DEFAULT_SAMPLE_SIZE};
use crate::synthetic::{generate_pair, GeneratorConfig};
use crate::var::ProbabilityLevel;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_TOLERANCE: i32 = 3;

/// Base level of synthetic price paths.
const SYNTHETIC_BASE_PRICE: f64 = 100.0;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Data(#[from] Error),
    #[error("cannot write {}: {source}", path.display())]
    Output {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Tolerance(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Data(_) | CliError::Output { .. } => EXIT_DATA,
            CliError::Tolerance(_) => EXIT_TOLERANCE,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Csv,
    Svg,
    Text,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PositionChoice {
    Long,
    Short,
    Both,
}

impl PositionChoice {
    pub fn positions(self) -> Vec<Position> {
        match self {
            PositionChoice::Long => vec![Position::Long],
            PositionChoice::Short => vec![Position::Short],
            PositionChoice::Both => Position::BOTH.to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    Files { asset1: PathBuf, asset2: PathBuf },
    Synthetic(GeneratorConfig),
}

#[derive(Debug, Clone, PartialEq)]
pub enum GridChoice {
    Preset(GridPreset),
    Levels(Vec<ProbabilityLevel>),
}

/// Everything needed to compute and render one surface.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub source: DataSource,
    pub frequency: Frequency,
    pub grid: GridChoice,
    /// Empty means the command's default weights.
    pub weights: Vec<(f64, f64)>,
    pub positions: Vec<Position>,
    pub format: Option<OutputFormat>,
    pub out: Option<PathBuf>,
    pub date_range: (Option<NaiveDate>, Option<NaiveDate>),
}

impl RunConfig {
    pub fn synthetic(cfg: GeneratorConfig, frequency: Frequency) -> Self {
        Self {
            source: DataSource::Synthetic(cfg),
            frequency,
            grid: GridChoice::Preset(match frequency {
                Frequency::Daily => GridPreset::PaperDaily,
                Frequency::Weekly => GridPreset::PaperWeekly,
            }),
            weights: Vec::new(),
            positions: Position::BOTH.to_vec(),
            format: None,
            out: None,
            date_range: (None, None),
        }
    }

    pub fn files(asset1: PathBuf, asset2: PathBuf, frequency: Frequency) -> Self {
        Self {
            source: DataSource::Files { asset1, asset2 },
            ..Self::synthetic(GeneratorConfig::default(), frequency)
        }
    }

    fn levels(&self) -> Result<Vec<ProbabilityLevel>, CliError> {
        match &self.grid {
            GridChoice::Preset(preset) => {
                if preset.frequency() != self.frequency {
                    return Err(CliError::Usage(format!(
                        "grid preset is for {} data but --frequency is {}",
                        preset.frequency(),
                        self.frequency
                    )));
                }
                Ok(preset.levels())
            }
            GridChoice::Levels(levels) => Ok(levels.clone()),
        }
    }
}

fn restrict(
    p: PriceSeries,
    range: (Option<NaiveDate>, Option<NaiveDate>),
) -> Result<PriceSeries, Error> {
    match range {
        (None, None) => Ok(p),
        (from, to) => p.between(from.unwrap_or(NaiveDate::MIN), to.unwrap_or(NaiveDate::MAX)),
    }
}

/// Loads or generates the two price series named by the config.
pub fn load_prices(cfg: &RunConfig) -> Result<(PriceSeries, PriceSeries), CliError> {
    let (a, b) = match &cfg.source {
        DataSource::Files { asset1, asset2 } => (load_csv(asset1)?, load_csv(asset2)?),
        DataSource::Synthetic(gen) => {
            let (r1, r2) = generate_pair(gen)?;
            (
                r1.to_price_path(SYNTHETIC_BASE_PRICE)?,
                r2.to_price_path(SYNTHETIC_BASE_PRICE)?,
            )
        }
    };
    Ok((restrict(a, cfg.date_range)?, restrict(b, cfg.date_range)?))
}

fn surface_for(cfg: &RunConfig, weights: &[(f64, f64)]) -> Result<CorrelationSurface, CliError> {
    let levels = cfg.levels()?;
    if levels.is_empty() || weights.is_empty() || cfg.positions.is_empty() {
        return Err(CliError::Usage("empty grid".into()));
    }
    let points = grid(&levels, weights, &cfg.positions)?;
    let (a, b) = load_prices(cfg)?;
    let (r1, r2) = prepare_returns(&a, &b, cfg.frequency)?;
    Ok(build_surface(&r1, &r2, cfg.frequency, &points)?)
}

/// The surface a `table` run renders.
pub fn table_surface(cfg: &RunConfig) -> Result<CorrelationSurface, CliError> {
    let weights = if cfg.weights.is_empty() {
        PAPER_WEIGHTS.to_vec()
    } else {
        cfg.weights.clone()
    };
    surface_for(cfg, &weights)
}

fn figure_weights(cfg: &RunConfig) -> Result<(f64, f64), CliError> {
    match cfg.weights.as_slice() {
        [] => Ok((0.5, 0.5)),
        [w] => Ok(*w),
        _ => Err(CliError::Usage("figure takes a single weight pair".into())),
    }
}

/// The surface a `figure` run plots.
pub fn figure_surface(cfg: &RunConfig) -> Result<CorrelationSurface, CliError> {
    surface_for(cfg, &[figure_weights(cfg)?])
}

pub fn cmd_table(cfg: &RunConfig) -> Result<String, CliError> {
    let format = cfg.format.unwrap_or(OutputFormat::Text);
    if format == OutputFormat::Svg {
        return Err(CliError::Usage(
            "table supports --format text or csv".into(),
        ));
    }
    let surface = table_surface(cfg)?;
    Ok(match format {
        OutputFormat::Csv => render_table_csv(&surface),
        _ => render_table_text(&surface),
    })
}

pub fn cmd_figure(cfg: &RunConfig) -> Result<String, CliError> {
    let format = cfg.format.unwrap_or(OutputFormat::Svg);
    if format == OutputFormat::Text {
        return Err(CliError::Usage(
            "figure supports --format svg or csv".into(),
        ));
    }
    let (w1, _) = figure_weights(cfg)?;
    let surface = figure_surface(cfg)?;
    Ok(match format {
        OutputFormat::Csv => render_figure_csv(&surface, w1),
        _ => render_figure_svg(&surface, w1),
    })
}

/// Runs the Gaussian-constancy check. The report is returned in both the
/// passing and failing case.
pub fn cmd_selftest(seed: u64, sample_size: usize) -> Result<(String, bool), CliError> {
    let cfg = SelftestConfig {
        n: sample_size,
        ..SelftestConfig::new(seed)
    };
    let report = run_selftest(&cfg)?;
    Ok((report.render(), report.passed()))
}

#[derive(Debug, Parser)]
#[command(
    name = "implied-corr",
    version,
    about = "Historical VaR and the correlation implied by VaR aggregation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Implied-correlation table: probability levels by weight pairs and positions.
    Table(DataArgs),
    /// Implied correlation against waiting period for one weight pair.
    Figure(DataArgs),
    /// Gaussian-constancy self test on synthetic data.
    Selftest(SelftestArgs),
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("source").required(true).args(["asset1", "synthetic"])))]
struct DataArgs {
    /// Closing prices of the first asset (`date,close` CSV)
    #[arg(long, requires = "asset2")]
    asset1: Option<PathBuf>,
    /// Closing prices of the second asset
    #[arg(long, requires = "asset1")]
    asset2: Option<PathBuf>,
    /// Generator config (TOML) used instead of price files
    #[arg(long, conflicts_with_all = ["asset1", "asset2"])]
    synthetic: Option<PathBuf>,
    #[arg(long, default_value = "daily", value_parser = parse_frequency)]
    frequency: Frequency,
    /// paper-daily, paper-weekly, or a CSV of probability levels
    #[arg(long)]
    grid: Option<String>,
    /// Portfolio weights as w1,w2 (repeatable)
    #[arg(long = "weights", value_parser = parse_weights)]
    weights: Vec<(f64, f64)>,
    #[arg(long, value_enum, default_value = "both")]
    position: PositionChoice,
    #[arg(long, value_enum)]
    format: Option<OutputFormat>,
    /// Output file; standard output when absent
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the seed of a synthetic config
    #[arg(long)]
    seed: Option<u64>,
    /// First date kept (YYYY-MM-DD)
    #[arg(long, value_parser = parse_date)]
    from: Option<NaiveDate>,
    /// Last date kept (YYYY-MM-DD)
    #[arg(long, value_parser = parse_date)]
    to: Option<NaiveDate>,
}

#[derive(Debug, Args)]
struct SelftestArgs {
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, hide = true, default_value_t = DEFAULT_SAMPLE_SIZE)]
    sample_size: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_frequency(s: &str) -> Result<Frequency, String> {
    s.parse()
}

fn parse_date(s: &str) -> Result<NaiveDate, String> {
    NaiveDate::parse_from_str(s, "%Y-%m-%d").map_err(|e| format!("bad date '{s}': {e}"))
}

fn parse_weights(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s
        .split_once(',')
        .ok_or_else(|| format!("expected w1,w2, got '{s}'"))?;
    let w1: f64 = a.trim().parse().map_err(|_| format!("bad weight '{a}'"))?;
    let w2: f64 = b.trim().parse().map_err(|_| format!("bad weight '{b}'"))?;
    PortfolioSpec::new(w1, w2, Position::Long).map_err(|e| e.to_string())?;
    Ok((w1, w2))
}

/// Reads a grid file: CSV with a `probability` and/or `waiting_period`
/// column. A row with only a waiting period `k` means `p = 1 - 1/k`.
pub fn read_grid_file(path: &std::path::Path) -> Result<Vec<ProbabilityLevel>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        if e.kind() == std::io::ErrorKind::NotFound {
            CliError::Data(Error::FileNotFound(path.to_path_buf()))
        } else {
            CliError::Data(Error::Io {
                path: path.to_path_buf(),
                source: e,
            })
        }
    })?;
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let usage =
        |line: u64, msg: String| CliError::Usage(format!("{}:{line}: {msg}", path.display()));
    let headers = rdr.headers().map_err(|e| usage(1, e.to_string()))?.clone();
    let p_col = headers.iter().position(|h| h == "probability");
    let k_col = headers.iter().position(|h| h == "waiting_period");
    if p_col.is_none() && k_col.is_none() {
        return Err(usage(
            1,
            "expected a 'probability' or 'waiting_period' column".into(),
        ));
    }
    let mut levels = Vec::new();
    for record in rdr.records() {
        let record =
            record.map_err(|e| usage(e.position().map_or(0, |p| p.line()), e.to_string()))?;
        let line = record.position().map_or(0, |p| p.line());
        let field = |col: Option<usize>| col.and_then(|c| record.get(c)).filter(|s| !s.is_empty());
        let level = match (field(p_col), field(k_col)) {
            (_, Some(k)) => {
                let k: u32 = k
                    .parse()
                    .map_err(|_| usage(line, format!("bad waiting period '{k}'")))?;
                let level = ProbabilityLevel::from_waiting_periods(k)
                    .map_err(|e| usage(line, e.to_string()))?;
                if let Some(p) = field(p_col) {
                    let p: f64 = p
                        .parse()
                        .map_err(|_| usage(line, format!("bad probability '{p}'")))?;
                    if (p - level.p()).abs() > 5e-5 {
                        return Err(usage(
                            line,
                            format!("probability {p} does not match waiting period {k}"),
                        ));
                    }
                }
                level
            }
            (Some(p), None) => {
                let p: f64 = p
                    .parse()
                    .map_err(|_| usage(line, format!("bad probability '{p}'")))?;
                ProbabilityLevel::new(p).map_err(|e| usage(line, e.to_string()))?
            }
            (None, None) => return Err(usage(line, "empty row".into())),
        };
        levels.push(level);
    }
    Ok(levels)
}

impl DataArgs {
    fn into_config(self) -> Result<RunConfig, CliError> {
        let source = match (self.asset1, self.asset2, self.synthetic) {
            (Some(asset1), Some(asset2), None) => DataSource::Files { asset1, asset2 },
            (None, None, Some(path)) => {
                let text = std::fs::read_to_string(&path).map_err(|e| {
                    if e.kind() == std::io::ErrorKind::NotFound {
                        Error::FileNotFound(path.clone())
                    } else {
                        Error::Io {
                            path: path.clone(),
                            source: e,
                        }
                    }
                })?;
                let mut gen = GeneratorConfig::from_toml(&text)?;
                if let Some(seed) = self.seed {
                    gen.seed = seed;
                }
                DataSource::Synthetic(gen)
            }
            _ => {
                return Err(CliError::Usage(
                    "give either --asset1 and --asset2, or --synthetic".into(),
                ))
            }
        };
        let grid = match self.grid.as_deref() {
            None => GridChoice::Preset(match self.frequency {
                Frequency::Daily => GridPreset::PaperDaily,
                Frequency::Weekly => GridPreset::PaperWeekly,
            }),
            Some(name) => match name.parse::<GridPreset>() {
                Ok(preset) => GridChoice::Preset(preset),
                Err(_) => GridChoice::Levels(read_grid_file(std::path::Path::new(name))?),
            },
        };
        Ok(RunConfig {
            source,
            frequency: self.frequency,
            grid,
            weights: self.weights,
            positions: self.position.positions(),
            format: self.format,
            out: self.out,
            date_range: (self.from, self.to),
        })
    }
}

fn emit(text: &str, out: Option<&PathBuf>, stdout: &mut dyn Write) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|source| CliError::Output {
            path: path.clone(),
            source,
        }),
        None => stdout
            .write_all(text.as_bytes())
            .map_err(|source| CliError::Output {
                path: PathBuf::from("<stdout>"),
                source,
            }),
    }
}

fn dispatch(cli: Cli, stdout: &mut dyn Write) -> Result<(), CliError> {
    match cli.command {
        Command::Table(args) => {
            let cfg = args.into_config()?;
            emit(&cmd_table(&cfg)?, cfg.out.as_ref(), stdout)
        }
        Command::Figure(args) => {
            let cfg = args.into_config()?;
            emit(&cmd_figure(&cfg)?, cfg.out.as_ref(), stdout)
        }
        Command::Selftest(args) => {
            let (report, passed) = cmd_selftest(args.seed, args.sample_size)?;
            emit(&report, args.out.as_ref(), stdout)?;
            if passed {
                Ok(())
            } else {
                Err(CliError::Tolerance("selftest: tolerance breached".into()))
            }
        }
    }
}

/// Parses `args` (program name first), runs the command and returns the exit
/// status.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
            let rendered = e.render().to_string();
            if code == EXIT_OK {
                let _ = stdout.write_all(rendered.as_bytes());
            } else {
                let _ = stderr.write_all(rendered.as_bytes());
            }
            return code;
        }
    };
    match dispatch(cli, stdout) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}
