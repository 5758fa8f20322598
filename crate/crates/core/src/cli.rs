//! Command-line driver.
//!
//! Exit codes: 0 success, 2 usage, 3 I/O, 4 computation.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::analysis::{compare_selected, PipelineConfig};
use crate::error::Error;
use crate::io::{
    read_wav, synthesize, write_case1_csv, write_case2_csv, write_mfcc_csv, write_mfcc_json,
    write_reports_json, write_wav, CoefficientValue, SampleReports, SynthKind, SynthSpec,
};
use crate::melbank::BankMethod;
use crate::mfcc::{mfcc_pipeline, DEFAULT_LOG_FLOOR};
use crate::signal::{resample, FrameParams, ResampleSpec, Signal, Window};

pub const EXIT_USAGE: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_COMPUTE: i32 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "tsm-mfcc",
    version,
    about = "MFCC features of original and decimated speech"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute the MFCC matrix of a WAV file (one row per coefficient).
    Extract(ExtractArgs),
    /// Correlate original MFCCs with those of the 2x-decimated signal.
    Compare(CompareArgs),
    /// Rational resampling: zero-insertion by --up, then decimation by --down.
    Resample(ResampleArgs),
    /// Generate a synthetic test signal.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum WindowArg {
    Paper,
    Standard,
    Rect,
}

impl From<WindowArg> for Window {
    fn from(w: WindowArg) -> Self {
        match w {
            WindowArg::Paper => Window::PaperHamming,
            WindowArg::Standard => Window::StandardHamming,
            WindowArg::Rect => Window::Rectangular,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct AnalysisArgs {
    /// Frame duration in milliseconds.
    #[arg(long, default_value_t = 32.0)]
    pub frame_ms: f64,
    /// Hop between frames in milliseconds.
    #[arg(long, default_value_t = 16.0)]
    pub hop_ms: f64,
    #[arg(long, default_value_t = 30)]
    pub nfilters: usize,
    #[arg(long, default_value_t = 130.0)]
    pub fmin: f64,
    #[arg(long, default_value_t = 6800.0)]
    pub fmax: f64,
    #[arg(long, value_enum, default_value_t = WindowArg::Paper)]
    pub window: WindowArg,
    #[arg(long, default_value_t = DEFAULT_LOG_FLOOR)]
    pub log_floor: f64,
}

#[derive(Debug, Clone, Args)]
pub struct ExtractArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Output file; stdout when omitted.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
    pub format: OutputFormat,
    #[command(flatten)]
    pub analysis: AnalysisArgs,
}

#[derive(Debug, Clone, Args)]
pub struct CompareArgs {
    /// Input WAV file; repeat for several samples.
    #[arg(long, required = true)]
    pub input: Vec<PathBuf>,
    /// Output directory; tables go to stdout when omitted.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
    pub format: OutputFormat,
    /// Comma-separated bank methods.
    #[arg(long, default_value = "A,B,C,D,E,F")]
    pub methods: String,
    /// Decimation factor (only 2 is supported).
    #[arg(long, default_value_t = 2)]
    pub alpha: usize,
    #[command(flatten)]
    pub analysis: AnalysisArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ResampleArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub up: usize,
    #[arg(long, default_value_t = 1)]
    pub down: usize,
    /// Low-pass between the two stages.
    #[arg(long)]
    pub anti_alias: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SynthKindArg {
    Tone,
    Chirp,
    Noise,
    Multitone,
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    #[arg(value_enum)]
    pub kind: SynthKindArg,
    #[arg(long)]
    pub output: PathBuf,
    /// Frequencies in Hz: one for a tone, start,end for a chirp, any number
    /// for a multi-tone.
    #[arg(long, value_delimiter = ',')]
    pub freq: Vec<f64>,
    /// Duration in seconds.
    #[arg(long, default_value_t = 1.0)]
    pub dur: f64,
    #[arg(long, default_value_t = 16000)]
    pub rate: u32,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Io(Error),
    Compute(Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Io(_) => EXIT_IO,
            CliError::Compute(_) => EXIT_COMPUTE,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(msg) => write!(f, "usage error: {msg}"),
            CliError::Io(e) => write!(f, "I/O error: {e}"),
            CliError::Compute(e) => write!(f, "computation error: {e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        if e.is_io() {
            CliError::Io(e)
        } else {
            CliError::Compute(e)
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.into())
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn load(path: &Path) -> CliResult<Signal> {
    read_wav(path).map(|(s, _)| s).map_err(CliError::Io)
}

impl AnalysisArgs {
    fn check(&self) -> CliResult<()> {
        if !(self.frame_ms > 0.0) || !(self.hop_ms > 0.0) {
            return Err(usage("--frame-ms and --hop-ms must be positive"));
        }
        if self.hop_ms > self.frame_ms {
            return Err(usage("--hop-ms must not exceed --frame-ms"));
        }
        if self.nfilters < 2 {
            return Err(usage("--nfilters must be at least 2"));
        }
        if !(self.fmin >= 0.0 && self.fmin < self.fmax) {
            return Err(usage("need 0 <= --fmin < --fmax"));
        }
        if !(self.log_floor > 0.0) {
            return Err(usage("--log-floor must be positive"));
        }
        Ok(())
    }

    /// Frame parameters at `sample_rate_hz`: 32 ms at 16 kHz is 512 samples.
    fn frame_params(&self, sample_rate_hz: f64) -> CliResult<FrameParams> {
        let n = (self.frame_ms * sample_rate_hz / 1000.0).round() as usize;
        let hop = (self.hop_ms * sample_rate_hz / 1000.0).round() as usize;
        FrameParams::new(n, hop, self.window.into()).map_err(|e| usage(e.to_string()))
    }

    fn pipeline(&self, sample_rate_hz: f64, alpha: usize) -> CliResult<PipelineConfig> {
        Ok(PipelineConfig {
            frame: self.frame_params(sample_rate_hz)?,
            n_filters: self.nfilters,
            f_min_hz: self.fmin,
            f_max_hz: self.fmax,
            log_floor: self.log_floor,
            alpha,
        })
    }
}

fn parse_methods(list: &str) -> CliResult<Vec<BankMethod>> {
    let methods = list
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.parse::<BankMethod>().map_err(|e| usage(e.to_string())))
        .collect::<CliResult<Vec<_>>>()?;
    if methods.is_empty() {
        return Err(usage("--methods is empty"));
    }
    Ok(methods)
}

/// Writes to `path`, or to `stdout` when `path` is `None`.
fn emit(
    path: Option<&Path>,
    stdout: &mut dyn Write,
    body: impl FnOnce(&mut dyn Write) -> crate::Result<()>,
) -> CliResult<()> {
    match path {
        Some(p) => {
            let mut f = fs::File::create(p)?;
            body(&mut f).map_err(CliError::Io)
        }
        None => body(stdout).map_err(CliError::Io),
    }
}

pub fn cmd_extract(args: &ExtractArgs, stdout: &mut dyn Write) -> CliResult<()> {
    args.analysis.check()?;
    let signal = load(&args.input)?;
    let cfg = args.analysis.pipeline(signal.sample_rate_hz(), 2)?;
    let bank = cfg.bank_config(signal.sample_rate_hz());
    let mfcc = mfcc_pipeline(&signal, &cfg.frame, &bank, cfg.log_floor)?;
    emit(args.output.as_deref(), stdout, |w| match args.format {
        OutputFormat::Csv => write_mfcc_csv(w, &mfcc),
        OutputFormat::Json => write_mfcc_json(w, &mfcc),
    })
}

fn sample_name(path: &Path, taken: &[SampleReports]) -> String {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "sample".into());
    let mut name = stem.clone();
    let mut i = 2;
    while taken.iter().any(|s| s.sample == name) {
        name = format!("{stem}_{i}");
        i += 1;
    }
    name
}

pub fn cmd_compare(args: &CompareArgs, stdout: &mut dyn Write) -> CliResult<()> {
    if args.alpha != 2 {
        return Err(usage(Error::UnsupportedFactor(args.alpha).to_string()));
    }
    args.analysis.check()?;
    let methods = parse_methods(&args.methods)?;
    if methods.contains(&BankMethod::D) && !args.analysis.nfilters.is_multiple_of(2) {
        return Err(usage("method D needs an even --nfilters"));
    }

    let mut samples: Vec<SampleReports> = Vec::new();
    for path in &args.input {
        let signal = load(path)?;
        if signal.sample_rate_hz() != 16000.0 {
            eprintln!(
                "warning: {} is sampled at {} Hz; frame sizes follow --frame-ms",
                path.display(),
                signal.sample_rate_hz()
            );
        }
        let cfg = args
            .analysis
            .pipeline(signal.sample_rate_hz(), args.alpha)?;
        if cfg.frame.frame_len() % 4 != 0 || cfg.frame.hop() % 2 != 0 {
            return Err(usage(format!(
                "frame length {} must be a multiple of 4 and hop {} even for decimation by 2",
                cfg.frame.frame_len(),
                cfg.frame.hop()
            )));
        }
        let reports = compare_selected(&signal, &cfg, &methods)?;
        let sample = sample_name(path, &samples);
        samples.push(SampleReports { sample, reports });
    }

    match (&args.output, args.format) {
        (Some(dir), format) => {
            fs::create_dir_all(dir)?;
            match format {
                OutputFormat::Json => {
                    let f = fs::File::create(dir.join("report.json"))?;
                    write_reports_json(f, &samples).map_err(CliError::Io)?;
                }
                OutputFormat::Csv => {
                    let f = fs::File::create(dir.join("case2.csv"))?;
                    write_case2_csv(f, &samples).map_err(CliError::Io)?;
                    for s in &samples {
                        let f = fs::File::create(dir.join(format!("{}.case1_r2.csv", s.sample)))?;
                        write_case1_csv(f, &s.reports, CoefficientValue::RSquared)
                            .map_err(CliError::Io)?;
                        let f = fs::File::create(dir.join(format!("{}.case1_r.csv", s.sample)))?;
                        write_case1_csv(f, &s.reports, CoefficientValue::R)
                            .map_err(CliError::Io)?;
                    }
                }
            }
        }
        (None, OutputFormat::Json) => write_reports_json(stdout, &samples).map_err(CliError::Io)?,
        (None, OutputFormat::Csv) => {
            write_case2_csv(&mut *stdout, &samples).map_err(CliError::Io)?;
            for s in &samples {
                writeln!(stdout)?;
                write_case1_csv(&mut *stdout, &s.reports, CoefficientValue::RSquared)
                    .map_err(CliError::Io)?;
            }
        }
    }
    Ok(())
}

pub fn cmd_resample(args: &ResampleArgs) -> CliResult<()> {
    let spec =
        ResampleSpec::new(args.up, args.down, args.anti_alias).map_err(|e| usage(e.to_string()))?;
    let signal = load(&args.input)?;
    let out = resample(&signal, &spec)?;
    write_wav(&args.output, &out).map_err(CliError::Io)
}

pub fn cmd_synth(args: &SynthArgs) -> CliResult<()> {
    let need = |n: usize| -> CliResult<()> {
        if args.freq.len() != n {
            Err(usage(format!(
                "--freq needs {n} value(s) for {:?}",
                args.kind
            )))
        } else {
            Ok(())
        }
    };
    let kind = match args.kind {
        SynthKindArg::Tone => {
            need(1)?;
            SynthKind::Tone {
                freq_hz: args.freq[0],
            }
        }
        SynthKindArg::Chirp => {
            need(2)?;
            SynthKind::Chirp {
                start_hz: args.freq[0],
                end_hz: args.freq[1],
            }
        }
        SynthKindArg::Noise => SynthKind::WhiteNoise { seed: args.seed },
        SynthKindArg::Multitone => {
            if args.freq.is_empty() {
                return Err(usage("--freq needs at least one value for a multi-tone"));
            }
            SynthKind::MultiTone {
                freqs_hz: args.freq.clone(),
            }
        }
    };
    let spec = SynthSpec::new(kind, args.dur, args.rate);
    spec.validate().map_err(|e| usage(e.to_string()))?;
    let signal = synthesize(&spec)?;
    write_wav(&args.output, &signal).map_err(CliError::Io)
}

pub fn run(cli: &Cli, stdout: &mut dyn Write) -> CliResult<()> {
    match &cli.command {
        Command::Extract(a) => cmd_extract(a, stdout),
        Command::Compare(a) => cmd_compare(a, stdout),
        Command::Resample(a) => cmd_resample(a),
        Command::Synth(a) => cmd_synth(a),
    }
}
