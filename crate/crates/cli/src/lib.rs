//! The `profbench` command line.
//!
//! Exit codes: 0 on success, 1 for usage errors, 2 for data errors.

use std::fs::File;
use std::io::{self, BufReader, Read, Write};
use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};

use profbench::report::{export_curves, render_svg, write_curve_table, Curves, PlotSpec, TauMax};
use profbench::{
    check_flip, compute_profile, compute_ratios, default_spec, generate, nested_profiles,
    parse_timings, write_timings, AdversarialSpec, FailureRatio, Format, ProfileConfig,
    ProfileCurve, SelectionRule, TieBreak, TimingMatrix, WaveCount,
};

pub const NO_COLOR_ENV: &str = "PROFBENCH_NO_COLOR";

#[derive(Debug, Parser)]
#[command(
    name = "profbench",
    version,
    about = "Classic and nested performance profiles"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Classic performance profiles of every solver.
    Profile {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        output: OutputArgs,
        /// Failure ratio: a number above every finite ratio, or `auto`.
        #[arg(long, default_value = "auto", value_parser = parse_rm, allow_negative_numbers = true)]
        rm: FailureRatio,
        /// Print the profile values at this tau instead of the full curves.
        #[arg(long)]
        tau: Option<f64>,
    },
    /// Nested profiles: every wave, the overall curves and the ranking.
    Nested {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        output: OutputArgs,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Ranking table with overall and classic profile values at --tau.
    Rank {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Write a timing table on which classic profiles flip rankings.
    Gen {
        #[arg(long)]
        solvers: usize,
        /// Partition sizes, one per solver (default: smallest valid system).
        #[arg(long, value_delimiter = ',')]
        sizes: Option<Vec<usize>>,
        /// Time unit the generated integers are scaled by.
        #[arg(long, default_value_t = 1.0)]
        base: f64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Check whether removing the classic best solver reorders the rest.
    Flipcheck {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Render profile curves as SVG.
    Plot {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        config: ConfigArgs,
        /// Plot log2(tau) on the x axis.
        #[arg(long)]
        log2: bool,
        /// Right end of the tau axis: a number, or `frac:F` for F times the
        /// largest finite ratio.
        #[arg(
            long,
            default_value = "frac:0.6",
            value_parser = parse_tau_max,
            allow_negative_numbers = true
        )]
        tau_max: TauMax,
        /// Plot the classic (wave 1) curves instead of the overall ones.
        #[arg(long)]
        classic: bool,
        #[arg(long, default_value_t = 640)]
        width: u32,
        #[arg(long, default_value_t = 400)]
        height: u32,
        #[arg(long)]
        title: Option<String>,
        /// Output file (default: stdout).
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct InputArgs {
    /// Timing table (`-` for stdin).
    input: PathBuf,
    /// Input format; defaults to the file extension, CSV for stdin.
    #[arg(long, value_enum)]
    input_format: Option<FormatArg>,
}

#[derive(Debug, Args)]
struct OutputArgs {
    /// Output file (default: stdout).
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Output format; defaults to the output file extension.
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
}

#[derive(Debug, Args)]
struct ConfigArgs {
    /// Number of waves, or `all` for n_s - 1.
    #[arg(long, default_value = "all", value_parser = parse_waves)]
    waves: WaveCount,
    #[arg(long, value_enum, default_value_t = RuleArg::Wins)]
    rule: RuleArg,
    /// Failure ratio: a number above every finite ratio, or `auto`.
    #[arg(long, default_value = "auto", value_parser = parse_rm, allow_negative_numbers = true)]
    rm: FailureRatio,
    /// Tie-break: `first` or `seed:N`.
    #[arg(long, default_value = "first", value_parser = parse_tie)]
    tie: TieBreak,
    /// Tau at which rankings compare profile values.
    #[arg(long, default_value_t = 1.0)]
    tau: f64,
}

impl ConfigArgs {
    fn config(&self) -> ProfileConfig {
        ProfileConfig {
            failure_ratio: self.rm,
            rule: match self.rule {
                RuleArg::Wins => SelectionRule::Wins,
                RuleArg::Mean => SelectionRule::MeanRatio,
            },
            tie_break: self.tie,
            waves: self.waves,
            reporting_tau: self.tau,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Format {
        match f {
            FormatArg::Csv => Format::Csv,
            FormatArg::Json => Format::Json,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum RuleArg {
    Wins,
    Mean,
}

fn parse_rm(s: &str) -> Result<FailureRatio, String> {
    if s.eq_ignore_ascii_case("auto") {
        return Ok(FailureRatio::Auto);
    }
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() && v > 0.0 => Ok(FailureRatio::Fixed(v)),
        _ => Err(format!("expected a positive number or `auto`, got {s:?}")),
    }
}

fn parse_waves(s: &str) -> Result<WaveCount, String> {
    if s.eq_ignore_ascii_case("all") {
        return Ok(WaveCount::All);
    }
    match s.parse::<usize>() {
        Ok(k) if k >= 1 => Ok(WaveCount::Fixed(k)),
        _ => Err(format!("expected a wave count >= 1 or `all`, got {s:?}")),
    }
}

fn parse_tie(s: &str) -> Result<TieBreak, String> {
    if s.eq_ignore_ascii_case("first") {
        return Ok(TieBreak::FirstIndex);
    }
    s.strip_prefix("seed:")
        .and_then(|n| n.parse::<u64>().ok())
        .map(TieBreak::SeededRandom)
        .ok_or_else(|| format!("expected `first` or `seed:N`, got {s:?}"))
}

fn parse_tau_max(s: &str) -> Result<TauMax, String> {
    if let Some(f) = s.strip_prefix("frac:") {
        return match f.parse::<f64>() {
            Ok(f) if f > 0.0 && f <= 1.0 => Ok(TauMax::AutoFraction(f)),
            _ => Err(format!("fraction must lie in (0, 1], got {f:?}")),
        };
    }
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(TauMax::Explicit(v)),
        _ => Err(format!("expected a number or `frac:F`, got {s:?}")),
    }
}

enum Failure {
    Usage(String),
    Data(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Data(e)
    }
}

/// Runs one invocation. `argv[0]` is the program name.
pub fn run<I, T, R, W, E>(argv: I, stdin: R, stdout: &mut W, stderr: &mut E) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
    R: Read,
    W: Write,
    E: Write,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{e}");
                    0
                }
                _ => {
                    let _ = write!(stderr, "{e}");
                    1
                }
            };
        }
    };
    let color = std::env::var_os(NO_COLOR_ENV).is_none();
    match dispatch(cli.command, stdin, stdout, color) {
        Ok(()) => 0,
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(stderr, "error: {msg}");
            1
        }
        Err(Failure::Data(e)) => {
            let _ = writeln!(stderr, "error: {e:#}");
            2
        }
    }
}

fn read_matrix<R: Read>(input: &InputArgs, stdin: R) -> anyhow::Result<TimingMatrix> {
    let path = &input.input;
    let format = input.input_format.map(Format::from);
    if path.as_os_str() == "-" {
        return parse_timings(stdin, format.unwrap_or(Format::Csv)).context("<stdin>");
    }
    let format = format.unwrap_or_else(|| Format::from_path(path));
    let file = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    parse_timings(BufReader::new(file), format).with_context(|| path.display().to_string())
}

fn output_format(output: &OutputArgs, default: Format) -> Format {
    match (output.format, &output.output) {
        (Some(f), _) => f.into(),
        (None, Some(path)) if path.extension().is_some() => Format::from_path(path),
        _ => default,
    }
}

fn emit<W: Write>(
    path: Option<&Path>,
    stdout: &mut W,
    body: impl FnOnce(&mut dyn Write) -> anyhow::Result<()>,
) -> anyhow::Result<()> {
    match path {
        Some(path) => {
            let mut file = io::BufWriter::new(
                File::create(path).with_context(|| format!("cannot create {}", path.display()))?,
            );
            body(&mut file)?;
            file.flush()?;
            Ok(())
        }
        None => body(stdout),
    }
}

fn classic_curves(m: &TimingMatrix, rm: FailureRatio) -> anyhow::Result<Vec<ProfileCurve>> {
    let all: Vec<usize> = (0..m.n_solvers()).collect();
    let r = compute_ratios(m, &all, rm)?;
    Ok(all
        .iter()
        .map(|&s| compute_profile(&r, s))
        .collect::<Result<_, _>>()?)
}

fn dispatch<R: Read, W: Write>(
    command: Command,
    stdin: R,
    stdout: &mut W,
    color: bool,
) -> Result<(), Failure> {
    match command {
        Command::Profile {
            input,
            output,
            rm,
            tau,
        } => {
            let m = read_matrix(&input, stdin)?;
            let curves = classic_curves(&m, rm)?;
            let format = output_format(&output, Format::Csv);
            emit(output.output.as_deref(), stdout, |w| {
                match (tau, format) {
                    (Some(tau), Format::Csv) => {
                        write_curve_table(m.solvers(), &curves, &[tau], w)?;
                    }
                    (Some(tau), Format::Json) => {
                        let values: Vec<f64> = curves.iter().map(|c| c.evaluate(tau)).collect();
                        let doc = serde_json::json!({
                            "tau": tau,
                            "solvers": m.solvers(),
                            "values": values,
                        });
                        serde_json::to_writer_pretty(&mut *w, &doc)?;
                        writeln!(w)?;
                    }
                    (None, format) => export_curves(
                        Curves::Classic {
                            solvers: m.solvers(),
                            curves: &curves,
                        },
                        format,
                        w,
                    )?,
                }
                Ok(())
            })?;
        }
        Command::Nested {
            input,
            output,
            config,
        } => {
            let m = read_matrix(&input, stdin)?;
            let result = nested_profiles(&m, &config.config())?;
            let format = output_format(&output, Format::Json);
            emit(output.output.as_deref(), stdout, |w| {
                Ok(export_curves(Curves::Nested(&result), format, w)?)
            })?;
        }
        Command::Rank { input, config } => {
            let m = read_matrix(&input, stdin)?;
            let cfg = config.config();
            let result = nested_profiles(&m, &cfg)?;
            let classic = classic_curves(&m, cfg.failure_ratio)?;
            write_rank_table(stdout, &result, &classic, cfg.reporting_tau, color)
                .map_err(anyhow::Error::from)?;
        }
        Command::Gen {
            solvers,
            sizes,
            base,
            output,
        } => {
            if solvers < 3 {
                return Err(Failure::Usage(format!(
                    "--solvers must be at least 3, got {solvers}"
                )));
            }
            let spec = match sizes {
                Some(sizes) => {
                    if sizes.len() != solvers {
                        return Err(Failure::Usage(format!(
                            "--sizes has {} entries for {solvers} solvers",
                            sizes.len()
                        )));
                    }
                    AdversarialSpec::new(sizes, base)
                }
                None => AdversarialSpec {
                    time_base: base,
                    ..default_spec(solvers).map_err(anyhow::Error::from)?
                },
            };
            let m = generate(&spec).map_err(anyhow::Error::from)?;
            let format = output_format(&output, Format::Csv);
            emit(output.output.as_deref(), stdout, |w| {
                Ok(write_timings(&m, format, w)?)
            })?;
        }
        Command::Flipcheck { input, config } => {
            let m = read_matrix(&input, stdin)?;
            let report = check_flip(&m, &config.config())?;
            serde_json::to_writer_pretty(&mut *stdout, &report).map_err(anyhow::Error::from)?;
            writeln!(stdout).map_err(anyhow::Error::from)?;
        }
        Command::Plot {
            input,
            config,
            log2,
            tau_max,
            classic,
            width,
            height,
            title,
            output,
        } => {
            let m = read_matrix(&input, stdin)?;
            let cfg = config.config();
            let curves = if classic {
                classic_curves(&m, cfg.failure_ratio)?
            } else {
                nested_profiles(&m, &cfg)?.overall
            };
            let default_title = if classic {
                "Performance profile"
            } else {
                "Nested performance profile"
            };
            let spec = PlotSpec {
                log_scale: log2,
                tau_max,
                width,
                height,
                title: title.unwrap_or_else(|| default_title.to_string()),
                ..PlotSpec::default()
            };
            let named: Vec<(&str, &ProfileCurve)> = m
                .solvers()
                .iter()
                .map(String::as_str)
                .zip(&curves)
                .collect();
            let svg = render_svg(&named, &spec).map_err(|e| match e {
                profbench::report::ReportError::InvalidPlotSpec(msg) => {
                    Failure::Usage(format!("--tau-max/--width/--height: {msg}"))
                }
                other => Failure::Data(other.into()),
            })?;
            emit(output.as_deref(), stdout, |w| {
                Ok(w.write_all(svg.as_bytes())?)
            })?;
        }
    }
    Ok(())
}

fn write_rank_table<W: Write>(
    out: &mut W,
    result: &profbench::NestedResult,
    classic: &[ProfileCurve],
    tau: f64,
    color: bool,
) -> io::Result<()> {
    let overall_head = format!("overall(tau={tau})");
    let classic_head = format!("classic(tau={tau})");
    let name_width = result
        .solvers
        .iter()
        .map(|s| s.chars().count())
        .max()
        .unwrap_or(0)
        .max("solver".len());
    let header = format!(
        "{:<4}  {:<name_width$}  {:>ow$}  {:>cw$}  eliminated",
        "rank",
        "solver",
        overall_head,
        classic_head,
        ow = overall_head.len(),
        cw = classic_head.len(),
    );
    if color {
        writeln!(out, "\x1b[1m{header}\x1b[0m")?;
    } else {
        writeln!(out, "{header}")?;
    }
    for (pos, &s) in result.ranking.iter().enumerate() {
        let eliminated = result
            .eliminated
            .iter()
            .position(|&e| e == s)
            .map_or_else(|| "-".to_string(), |i| format!("before wave {}", i + 2));
        writeln!(
            out,
            "{:<4}  {:<name_width$}  {:>ow$}  {:>cw$}  {}",
            pos + 1,
            result.solvers[s],
            result.overall[s].evaluate(tau).to_string(),
            classic[s].evaluate(tau).to_string(),
            eliminated,
            ow = overall_head.len(),
            cw = classic_head.len(),
        )?;
    }
    if result.ranking_uses_tau_order() {
        writeln!(
            out,
            "note: {} waves; solvers not eliminated are ordered by overall value at tau={tau}",
            result.k
        )?;
    }
    Ok(())
}

impl From<profbench::ProfileError> for Failure {
    fn from(e: profbench::ProfileError) -> Self {
        Failure::Data(e.into())
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Data(e.into())
    }
}
