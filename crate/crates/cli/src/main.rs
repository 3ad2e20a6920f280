use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use satpre::denoise::{DenoiseError, DenoiserSpec};
use satpre::lcc::EntropyModel;
use satpre::media::{parse_y4m, read_raw_planar, FrameRate, GopIndexing, MediaError, VideoSequence};
use satpre::pipeline::{
    detect, emit_rd_report, encoder_invocation_plan, format_g, rd_corpus, read_decisions, run_plan, sampled_pairs,
    write_curves, write_decisions, DetectionConfig, EncodeJob, EncoderError, Method, PipelineError,
};
use satpre::quant::{QpGrid, DEFAULT_R};
use satpre::rdsd::{calibrate, default_table, read_corpus, write_corpus, CalibrationError, CalibrationTable, RdsdConfig};

#[derive(Debug, Parser)]
#[command(name = "satpre", version, about = "Saturation QP detection for noisy video")]
struct Cli {
    /// Worker threads, 0 for one per core.
    #[arg(long, global = true, env = "SATPRE_THREADS", default_value_t = 0)]
    threads: usize,

    /// More log output (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Detect a saturation QP per GOP.
    Detect(DetectArgs),
    /// Build a calibration table from two RD corpora.
    Calibrate(CalibrateArgs),
    /// Report aggregate RD curves of the sampled frames.
    Curves(CurvesArgs),
    /// Turn a decisions file into encoder command lines.
    Wrap(WrapArgs),
}

#[derive(Debug, Args)]
struct InputArgs {
    /// Input video: Y4M, or raw 8-bit 4:2:0 planar with --width/--height.
    #[arg(long)]
    input: PathBuf,

    /// Externally denoised version of the input, same geometry and frame count.
    #[arg(long, conflicts_with = "denoiser")]
    denoised: Option<PathBuf>,

    /// Built-in denoiser: gaussian:<sigma> or deblock:<1-5> [default: deblock:2].
    #[arg(long, value_parser = parse_denoiser)]
    denoiser: Option<DenoiserSpec>,

    /// Frame width of raw input.
    #[arg(long)]
    width: Option<usize>,

    /// Frame height of raw input.
    #[arg(long)]
    height: Option<usize>,

    /// Frames to read from raw input [default: all whole frames].
    #[arg(long)]
    frames: Option<usize>,

    /// GOP length in frames.
    #[arg(long, default_value_t = 30, value_parser = clap::value_parser!(u32).range(1..))]
    gop: u32,

    /// Smallest QP of the search grid.
    #[arg(long, default_value_t = 0)]
    qp_min: i32,

    /// Largest QP of the search grid.
    #[arg(long, default_value_t = 51)]
    qp_max: i32,
}

#[derive(Debug, Args)]
struct DetectArgs {
    #[command(flatten)]
    input: InputArgs,

    /// Detector.
    #[arg(long, default_value = "rdsd", value_parser = parse_method)]
    method: Method,

    /// User QP; the effective QP never goes below it.
    #[arg(long)]
    user_qp: Option<i32>,

    /// Calibration table (satcal v1) [default: built-in table].
    #[arg(long)]
    calibration: Option<PathBuf>,

    /// RD slope offsets; repeat or comma-separate for several.
    #[arg(long = "c", default_value = "5", value_delimiter = ',')]
    c_set: Vec<i32>,

    /// Proportionality constant of the QP/lambda mapping.
    #[arg(long, default_value_t = DEFAULT_R)]
    r: f64,

    /// Entropy model of the low-complexity codec: eg or cavlc.
    #[arg(long, default_value = "eg", value_parser = parse_model)]
    entropy: EntropyModel,

    /// Write decisions as CSV.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CalibrateArgs {
    /// RD corpus of the source (low-complexity) codec.
    #[arg(long)]
    source_rd: PathBuf,

    /// RD corpus of the target codec.
    #[arg(long)]
    target_rd: PathBuf,

    /// Output table.
    #[arg(long)]
    out: PathBuf,

    /// RD slope offset.
    #[arg(long, default_value_t = 5)]
    c: i32,

    /// Fewest valid blocks behind an entry.
    #[arg(long, default_value_t = 30)]
    min_support: usize,
}

#[derive(Debug, Args)]
struct CurvesArgs {
    #[command(flatten)]
    input: InputArgs,

    /// Output CSV.
    #[arg(long)]
    out: PathBuf,

    /// Entropy model of the low-complexity codec: eg or cavlc.
    #[arg(long, default_value = "eg", value_parser = parse_model)]
    entropy: EntropyModel,

    /// Also write per-block RD rows in the calibration corpus format.
    #[arg(long)]
    corpus_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct WrapArgs {
    /// Decisions CSV written by `detect --report`.
    #[arg(long)]
    decisions: PathBuf,

    /// Command template with {input}, {output}, {qp}, {gop_start}, {gop_len}; {{ and }} for literal braces.
    #[arg(long)]
    template: String,

    /// Value of {input}.
    #[arg(long, default_value = "input.y4m")]
    input: String,

    /// Base of {output}; GOP g becomes <stem>_gop<gggg>.<ext>.
    #[arg(long, default_value = "out.264")]
    output: String,

    /// GOP length used for {gop_start} and {gop_len}.
    #[arg(long, default_value_t = 30, value_parser = clap::value_parser!(u32).range(1..))]
    gop: u32,

    /// Total frames, to shorten the last GOP's {gop_len}.
    #[arg(long)]
    frames: Option<usize>,

    /// Execute the commands instead of printing them.
    #[arg(long)]
    run: bool,

    /// Encoders run at once with --run.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
    jobs: u32,
}

fn parse_denoiser(s: &str) -> Result<DenoiserSpec, String> {
    match s.parse() {
        Ok(DenoiserSpec::External) => Err("use --denoised <file> for an external reference".into()),
        Ok(spec) => Ok(spec),
        Err(e) => Err(e.to_string()),
    }
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse().map_err(|e: PipelineError| e.to_string())
}

fn parse_model(s: &str) -> Result<EntropyModel, String> {
    s.parse().map_err(|e: <EntropyModel as std::str::FromStr>::Err| e.to_string())
}

#[derive(Debug, Error)]
enum CliError {
    #[error("{path}: {source}")]
    Read { path: PathBuf, source: io::Error },
    #[error("{path}: {source}")]
    Write { path: PathBuf, source: io::Error },
    #[error("{path}: {source}")]
    Media { path: PathBuf, source: MediaError },
    #[error("{path}: {source}")]
    Corpus { path: PathBuf, source: CalibrationError },
    #[error("--calibration {path}: {source}")]
    CalibrationFile { path: PathBuf, source: CalibrationError },
    #[error("{0}")]
    Calibration(CalibrationError),
    #[error("{path}: {source}")]
    Decisions { path: PathBuf, source: PipelineError },
    #[error("{0}")]
    Input(PipelineError),
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Template(EncoderError),
    #[error("{0}")]
    Encoder(EncoderError),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            Self::Read { .. }
            | Self::Write { .. }
            | Self::Media { .. }
            | Self::Corpus { .. }
            | Self::Calibration(_)
            | Self::Decisions { .. }
            | Self::Input(_) => 1,
            Self::Config(_) | Self::CalibrationFile { .. } | Self::Template(_) => 2,
            Self::Encoder(_) => 3,
        }
    }
}

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::Config(m) => Self::Config(m),
            PipelineError::Denoise(d @ DenoiseError::InvalidSpec(_)) => Self::Config(d.to_string()),
            other => Self::Input(other),
        }
    }
}

fn read_file(path: &Path) -> Result<Vec<u8>, CliError> {
    fs::read(path).map_err(|source| CliError::Read {
        path: path.to_owned(),
        source,
    })
}

fn write_file(path: &Path, data: &[u8]) -> Result<(), CliError> {
    fs::write(path, data).map_err(|source| CliError::Write {
        path: path.to_owned(),
        source,
    })
}

fn load_video(path: &Path, args: &InputArgs) -> Result<VideoSequence, CliError> {
    let data = read_file(path)?;
    let media = |source| CliError::Media {
        path: path.to_owned(),
        source,
    };
    if data.starts_with(b"YUV4MPEG2") {
        return parse_y4m(&data).map_err(media);
    }
    let (Some(w), Some(h)) = (args.width, args.height) else {
        return Err(CliError::Config(format!(
            "{}: not a Y4M file; raw input needs --width and --height",
            path.display()
        )));
    };
    let frame_len = w * h + 2 * w.div_ceil(2) * h.div_ceil(2);
    let frames = args.frames.unwrap_or(data.len() / frame_len.max(1));
    read_raw_planar(&data, w, h, frames, FrameRate::default()).map_err(media)
}

fn grid(args: &InputArgs) -> Result<QpGrid, CliError> {
    QpGrid::new(args.qp_min, args.qp_max).map_err(|e| CliError::Config(format!("--qp-min/--qp-max: {e}")))
}

struct Loaded {
    u: VideoSequence,
    z: Option<VideoSequence>,
    denoiser: DenoiserSpec,
    gop: GopIndexing,
}

fn load_inputs(args: &InputArgs) -> Result<Loaded, CliError> {
    let gop = GopIndexing::middle(args.gop as usize).map_err(|e| CliError::Config(format!("--gop: {e}")))?;
    let u = load_video(&args.input, args)?;
    let (z, denoiser) = match &args.denoised {
        Some(p) => {
            let z = load_video(p, args)?;
            u.check_matches(&z).map_err(|source| CliError::Media {
                path: p.clone(),
                source,
            })?;
            (Some(z), DenoiserSpec::External)
        }
        None => (None, args.denoiser.unwrap_or(DenoiserSpec::Deblock { strength: 2 })),
    };
    Ok(Loaded { u, z, denoiser, gop })
}

fn run_detect(args: &DetectArgs, out: &mut impl Write) -> Result<(), CliError> {
    let grid = grid(&args.input)?;
    let calibration = match &args.calibration {
        Some(p) => {
            let text = String::from_utf8_lossy(&read_file(p)?).into_owned();
            CalibrationTable::parse(&text).map_err(|source| CliError::CalibrationFile {
                path: p.clone(),
                source,
            })?
        }
        None => default_table(),
    };
    let loaded = load_inputs(&args.input)?;
    let config = DetectionConfig {
        method: args.method,
        grid,
        gop: loaded.gop,
        denoiser: loaded.denoiser,
        rdsd: RdsdConfig {
            c_set: args.c_set.clone(),
            r: args.r,
            model: args.entropy,
        },
        calibration,
        user_qp: args.user_qp,
    };
    let decisions = detect(&loaded.u, loaded.z.as_ref(), &config)?;
    if let Some(p) = &args.report {
        let mut buf = Vec::new();
        write_decisions(&mut buf, &decisions)?;
        write_file(p, &buf)?;
    }
    for d in &decisions {
        writeln!(out, "{d}").map_err(stdout_err)?;
    }
    Ok(())
}

fn stdout_err(source: io::Error) -> CliError {
    CliError::Write {
        path: "<stdout>".into(),
        source,
    }
}

fn load_corpus(path: &Path) -> Result<Vec<satpre::rdsd::CorpusRow>, CliError> {
    read_corpus(read_file(path)?.as_slice()).map_err(|source| CliError::Corpus {
        path: path.to_owned(),
        source,
    })
}

fn run_calibrate(args: &CalibrateArgs, out: &mut impl Write) -> Result<(), CliError> {
    if args.c < 1 {
        return Err(CliError::Config(format!("--c must be at least 1, got {}", args.c)));
    }
    let source = load_corpus(&args.source_rd)?;
    let target = load_corpus(&args.target_rd)?;
    let cal = calibrate(&source, &target, args.c, args.min_support).map_err(CliError::Calibration)?;
    if cal.low_confidence {
        log::warn!(
            "corpus has fewer than {} blocks; table is low-confidence",
            args.min_support
        );
    }
    for qp in &cal.dropped {
        log::warn!("QP {qp}: only {} valid blocks, entry dropped", cal.support[qp]);
    }
    write_file(&args.out, cal.table.to_text().as_bytes())?;
    for (qp, r) in cal.table.entries() {
        writeln!(out, "qp={qp} ratio={} support={}", format_g(*r), cal.support[qp]).map_err(stdout_err)?;
    }
    Ok(())
}

fn run_curves(args: &CurvesArgs, out: &mut impl Write) -> Result<(), CliError> {
    let grid = grid(&args.input)?;
    let loaded = load_inputs(&args.input)?;
    let pairs = sampled_pairs(&loaded.u, loaded.z.as_ref(), &loaded.gop, &loaded.denoiser)?;
    let rows = emit_rd_report(&pairs, &grid, args.entropy)?;
    let mut buf = Vec::new();
    write_curves(&mut buf, &rows)?;
    write_file(&args.out, &buf)?;
    if let Some(p) = &args.corpus_out {
        let stem = args.input.input.file_stem().map_or("input".into(), |s| s.to_string_lossy());
        let corpus = rd_corpus(&pairs, &grid, args.entropy, &stem);
        let mut buf = Vec::new();
        write_corpus(&mut buf, &corpus).map_err(CliError::Calibration)?;
        write_file(p, &buf)?;
    }
    for r in &rows {
        writeln!(
            out,
            "qp={} rate_bits={} i_mse={} d_mse={} id_mse={}",
            r.qp,
            r.rate_bits,
            format_g(r.i_mse),
            format_g(r.d_mse),
            format_g(r.id_mse)
        )
        .map_err(stdout_err)?;
    }
    Ok(())
}

fn run_wrap(args: &WrapArgs, out: &mut impl Write) -> Result<(), CliError> {
    let decisions = read_decisions(read_file(&args.decisions)?.as_slice()).map_err(|source| CliError::Decisions {
        path: args.decisions.clone(),
        source,
    })?;
    let job = EncodeJob {
        input: args.input.clone(),
        output: args.output.clone(),
        gop_length: args.gop as usize,
        frame_count: args.frames,
    };
    let plan = encoder_invocation_plan(&decisions, &args.template, &job).map_err(CliError::Template)?;
    for cmd in &plan {
        writeln!(out, "gop={} qp={} cmd={}", cmd.gop_index, cmd.qp, cmd.command).map_err(stdout_err)?;
    }
    if args.run {
        out.flush().map_err(stdout_err)?;
        run_plan(&plan, args.jobs as usize).map_err(CliError::Encoder)?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global() {
        log::warn!("thread pool already initialized: {e}");
    }
    let stdout = io::stdout();
    let mut out = stdout.lock();
    let result = match &cli.command {
        Command::Detect(a) => run_detect(a, &mut out),
        Command::Calibrate(a) => run_calibrate(a, &mut out),
        Command::Curves(a) => run_curves(a, &mut out),
        Command::Wrap(a) => run_wrap(a, &mut out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("satpre: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
