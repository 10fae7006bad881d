use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use flowcodec::codec::{
  decode_stream, CodecConfig, CodecError, MotionMode, SearchPattern, STATS_CSV_HEADER,
};
use flowcodec::flow_adapt::{downsample_flow, expand_block_field, FlowEstimator};
use flowcodec::io::records::{
  read_metrics, write_csv_with_header, write_metrics, MetricRecord, MetricsFormat,
};
use flowcodec::io::{read_flo, read_y4m_all, write_flo, write_y4m, Rational, SequenceHeader};
use flowcodec::metrics::{bd_psnr, bd_rate, epe};
use flowcodec::model::{BlockSize, DenseFlowField, DEFAULT_MV_BOUND};
use flowcodec::provider::ProvenanceMode;
use flowcodec::sweep::{self, FlowConfig, Sequence, SweepError};

/// Closed-loop P-frame codec harness for block matching vs optic-flow motion.
///
/// Flow files are BACKWARD flow: `<flow-dir>/<sequence>/frame_%04d.flo` maps
/// frame n to frame n-1. Forward-flow datasets must be re-indexed or
/// inverted first.
#[derive(Parser)]
#[command(name = "flowcodec", version)]
struct Cli {
  #[command(subcommand)]
  command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
  /// Encode a Y4M sequence.
  Encode(EncodeArgs),
  /// Decode a stream to Y4M.
  Decode {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
  },
  /// Encode every (sequence, mode, q) and write one RD point per run.
  RdSweep(SweepArgs),
  /// Bjøntegaard deltas of a test RD curve against a reference curve.
  Bdrate(BdArgs),
  /// Mean end-point error between two .flo files or two directories of them.
  Epe { a: PathBuf, b: PathBuf },
  /// Reduce a dense field to block vectors and expand it back to dense.
  DownsampleFlow {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 16)]
    block_size: usize,
    /// mean, median or median-l1
    #[arg(long, default_value = "median")]
    method: FlowEstimator,
    #[arg(long, default_value_t = DEFAULT_MV_BOUND)]
    mv_bound: i32,
  },
}

#[derive(Args, Clone)]
struct CodecArgs {
  #[arg(long, default_value_t = 100)]
  gop: usize,
  #[arg(long, default_value_t = 16)]
  block_size: usize,
  /// Integer search range in pixels.
  #[arg(long, default_value_t = 16)]
  search_range: u32,
  /// Disable quarter-pel refinement of searched vectors.
  #[arg(long)]
  no_subpel: bool,
  /// Internal search of the hybrid modes: diamond or hex.
  #[arg(long, default_value = "hex")]
  hybrid_search: SearchPattern,
  /// Estimator of the *-median modes: median or median-l1.
  #[arg(long, default_value = "median")]
  median_estimator: FlowEstimator,
  /// Bound on flow-derived vector components, quarter-pel.
  #[arg(long, default_value_t = DEFAULT_MV_BOUND)]
  mv_bound: i32,
  /// Add weighted chroma SAD to the motion cost.
  #[arg(long)]
  chroma_cost: bool,
}

#[derive(Args, Clone)]
struct FlowArgs {
  #[arg(long)]
  provenance: Option<ProvenanceMode>,
  /// Directory of backward flow (T0, T1).
  #[arg(long)]
  flow_dir: Option<PathBuf>,
  /// External estimator for T2, run as `<cmd> cur.pgm ref.pgm out.flo`.
  #[arg(long)]
  estimator_cmd: Option<String>,
  /// Per-frame estimator timeout in seconds.
  #[arg(long, default_value_t = 60.0)]
  estimator_timeout: f64,
}

#[derive(Args)]
struct EncodeArgs {
  #[arg(long)]
  input: PathBuf,
  /// Output stream.
  #[arg(long)]
  out: PathBuf,
  /// Per-frame statistics CSV.
  #[arg(long)]
  stats: Option<PathBuf>,
  /// Reconstruction as Y4M.
  #[arg(long)]
  recon: Option<PathBuf>,
  #[arg(long, default_value = "internal-hex")]
  mode: MotionMode,
  #[arg(long, default_value_t = 5)]
  q: u32,
  /// Sequence name used to locate flow files; defaults to the input file stem.
  #[arg(long)]
  sequence: Option<String>,
  #[command(flatten)]
  codec: CodecArgs,
  #[command(flatten)]
  flow: FlowArgs,
}

#[derive(Args)]
struct SweepArgs {
  /// Input Y4M files; each file stem names a sequence.
  #[arg(long, required = true, num_args = 1..)]
  inputs: Vec<PathBuf>,
  /// Comma-separated motion modes.
  #[arg(long, default_value = "zero,internal-hex", value_delimiter = ',')]
  modes: Vec<MotionMode>,
  /// Quantiser list; `a:step:b` ranges allowed.
  #[arg(long, default_value = "2,5:5:40")]
  q: String,
  /// RD table, one row per (sequence, mode, q).
  #[arg(long)]
  out: PathBuf,
  /// Median-over-sequences table, one row per (mode, q).
  #[arg(long)]
  aggregate: Option<PathBuf>,
  #[arg(long, default_value = "csv")]
  format: MetricsFormat,
  #[command(flatten)]
  codec: CodecArgs,
  #[command(flatten)]
  flow: FlowArgs,
}

#[derive(Args)]
struct BdArgs {
  reference: PathBuf,
  test: PathBuf,
  /// Mode selecting the reference curve when the file holds several.
  #[arg(long)]
  ref_mode: Option<String>,
  /// Mode selecting the test curve when the file holds several.
  #[arg(long)]
  test_mode: Option<String>,
  #[arg(long)]
  sequence: Option<String>,
  #[arg(long, default_value = "csv")]
  format: MetricsFormat,
}

/// Exit 1 for bad input, 2 for failures of the tool itself.
enum CliError {
  Input(String),
  Internal(String),
}

fn input(e: impl std::fmt::Display) -> CliError {
  CliError::Input(e.to_string())
}

fn internal(e: impl std::fmt::Display) -> CliError {
  CliError::Internal(e.to_string())
}

impl From<CodecError> for CliError {
  fn from(e: CodecError) -> Self {
    match e {
      CodecError::Model(_) => internal(e),
      _ => input(e),
    }
  }
}

impl From<SweepError> for CliError {
  fn from(e: SweepError) -> Self {
    match e {
      SweepError::Job { source: CodecError::Model(_), .. } => internal(e),
      _ => input(e),
    }
  }
}

type CliResult<T> = Result<T, CliError>;

/// Write through a temp file in the target directory, then rename.
fn write_atomic(path: &Path, body: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> CliResult<()> {
  let dir = match path.parent() {
    Some(p) if !p.as_os_str().is_empty() => p,
    _ => Path::new("."),
  };
  let fail = |e: &dyn std::fmt::Display| internal(format!("writing {}: {e}", path.display()));
  let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| fail(&e))?;
  {
    let mut w = BufWriter::new(tmp.as_file_mut());
    body(&mut w).map_err(|e| fail(&e))?;
    w.flush().map_err(|e| fail(&e))?;
  }
  tmp.persist(path).map_err(|e| fail(&e))?;
  Ok(())
}

fn to_io(e: impl std::fmt::Display) -> io::Error {
  io::Error::other(e.to_string())
}

fn open(path: &Path) -> CliResult<BufReader<File>> {
  File::open(path).map(BufReader::new).map_err(|e| input(format!("{}: {e}", path.display())))
}

fn load_y4m(path: &Path) -> CliResult<(SequenceHeader, Vec<flowcodec::model::Frame>)> {
  read_y4m_all(open(path)?).map_err(|e| input(format!("{}: {e}", path.display())))
}

fn stem(path: &Path) -> String {
  path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "sequence".into())
}

fn block_size(px: usize) -> CliResult<BlockSize> {
  BlockSize::try_from(px).map_err(input)
}

fn codec_config(
  args: &CodecArgs,
  q: u32,
  mode: MotionMode,
  flow: &FlowArgs,
) -> CliResult<CodecConfig> {
  let bs = block_size(args.block_size)?;
  let mut config = CodecConfig::new(q, mode).with_block_size(bs);
  config.gop_size = args.gop;
  config.search.search_range = args.search_range;
  config.search.refine_subpel = !args.no_subpel;
  config.hybrid_search = args.hybrid_search;
  config.median_estimator = args.median_estimator;
  config.mv_bound = args.mv_bound;
  config.chroma_in_cost = args.chroma_cost;
  config.provenance = flow.provenance;
  config.validate()?;
  Ok(config)
}

fn flow_config(flow: &FlowArgs, modes: &[MotionMode]) -> CliResult<Option<FlowConfig>> {
  if !modes.iter().any(|m| m.uses_flow()) {
    return Ok(None);
  }
  let provenance =
    flow.provenance.ok_or_else(|| input("flow and hybrid modes need --provenance"))?;
  if !(flow.estimator_timeout > 0.0 && flow.estimator_timeout.is_finite()) {
    return Err(input("--estimator-timeout must be positive"));
  }
  Ok(Some(FlowConfig {
    provenance,
    flow_dir: flow.flow_dir.clone(),
    estimator_cmd: flow.estimator_cmd.clone(),
    timeout: Duration::from_secs_f64(flow.estimator_timeout),
  }))
}

fn cmd_encode(args: EncodeArgs) -> CliResult<()> {
  let (header, frames) = load_y4m(&args.input)?;
  let mut config = codec_config(&args.codec, args.q, args.mode, &args.flow)?;
  config.frame_rate = (header.frame_rate.num, header.frame_rate.den);
  let flow = flow_config(&args.flow, &[args.mode])?;
  let name = args.sequence.clone().unwrap_or_else(|| stem(&args.input));
  let out = sweep::run_job(&frames, &name, &config, flow.as_ref())?;

  write_atomic(&args.out, |w| w.write_all(&out.bitstream))?;
  if let Some(path) = &args.stats {
    write_atomic(path, |w| write_csv_with_header(w, STATS_CSV_HEADER, &out.stats).map_err(to_io))?;
  }
  if let Some(path) = &args.recon {
    write_atomic(path, |w| write_y4m(w, &header, &out.recon).map_err(to_io))?;
  }
  let p = out.rd_point(config.q);
  println!(
    "{name} {} q={}: {:.1} bits/frame, {:.3} dB",
    config.motion_mode, config.q, p.rate, p.psnr
  );
  Ok(())
}

fn cmd_decode(input_path: &Path, out_path: &Path) -> CliResult<()> {
  let bytes =
    std::fs::read(input_path).map_err(|e| input(format!("{}: {e}", input_path.display())))?;
  let decoded =
    decode_stream(&bytes).map_err(|e| input(format!("{}: {e}", input_path.display())))?;
  let h = &decoded.header;
  let mut header =
    SequenceHeader::new(h.width, h.height, Rational { num: h.frame_rate.0, den: h.frame_rate.1 });
  header.interlace = Some('p');
  write_atomic(out_path, |w| write_y4m(w, &header, &decoded.frames).map_err(to_io))?;
  Ok(())
}

fn cmd_rd_sweep(args: SweepArgs) -> CliResult<()> {
  let qs = sweep::parse_q_list(&args.q)?;
  let first_mode = args.modes.first().copied().ok_or_else(|| input("--modes is empty"))?;
  let base = codec_config(&args.codec, qs[0], first_mode, &args.flow)?;
  let flow = flow_config(&args.flow, &args.modes)?;
  let mut sequences = Vec::with_capacity(args.inputs.len());
  for path in &args.inputs {
    let (_, frames) = load_y4m(path)?;
    sequences.push(Sequence { name: stem(path), frames });
  }
  let mut modes = args.modes.clone();
  modes.sort();
  modes.dedup();
  let rows = sweep::run_sweep(&sequences, &modes, &qs, &base, flow.as_ref())?;
  // aggregate before writing anything so a failure leaves no outputs
  let aggregated = args.aggregate.as_ref().map(|_| sweep::aggregate(&rows)).transpose()?;
  write_atomic(&args.out, |w| write_metrics(w, &rows, args.format).map_err(to_io))?;
  if let (Some(path), Some(agg)) = (&args.aggregate, &aggregated) {
    write_atomic(path, |w| write_metrics(w, agg, args.format).map_err(to_io))?;
  }
  eprintln!("{} RD points written to {}", rows.len(), args.out.display());
  Ok(())
}

fn select_curve(
  path: &Path,
  format: MetricsFormat,
  mode: Option<&str>,
  sequence: Option<&str>,
) -> CliResult<flowcodec::model::RdCurve> {
  let rows =
    read_metrics(open(path)?, format).map_err(|e| input(format!("{}: {e}", path.display())))?;
  let rows: Vec<MetricRecord> = rows
    .into_iter()
    .filter(|r| mode.is_none_or(|m| r.mode == m) && sequence.is_none_or(|s| r.sequence == s))
    .collect();
  let first = rows.first().ok_or_else(|| input(format!("{}: no matching rows", path.display())))?;
  if rows.iter().any(|r| r.mode != first.mode || r.sequence != first.sequence) {
    return Err(input(format!(
      "{}: several curves; select one with --ref-mode/--test-mode/--sequence",
      path.display()
    )));
  }
  Ok(sweep::curve_of(&rows, &first.sequence, &first.mode))
}

fn cmd_bdrate(args: BdArgs) -> CliResult<()> {
  let seq = args.sequence.as_deref();
  let reference = select_curve(&args.reference, args.format, args.ref_mode.as_deref(), seq)?;
  let test = select_curve(&args.test, args.format, args.test_mode.as_deref(), seq)?;
  let rate = bd_rate(&reference, &test).map_err(input)?;
  let db = bd_psnr(&reference, &test).map_err(input)?;
  println!("bd_rate_percent,{rate:.4}");
  println!("bd_psnr_db,{db:.4}");
  let word = if rate <= 0.0 { "fewer" } else { "more" };
  println!(
    "Test needs {:.2}% {word} bits than reference at equal PSNR (BD-rate {rate:.2}%), BD-PSNR {db:+.3} dB.",
    rate.abs()
  );
  Ok(())
}

fn load_flo(path: &Path) -> CliResult<DenseFlowField> {
  read_flo(open(path)?).map(|f| f.field).map_err(|e| input(format!("{}: {e}", path.display())))
}

fn flo_files(dir: &Path) -> CliResult<Vec<String>> {
  let mut names = Vec::new();
  for entry in std::fs::read_dir(dir).map_err(|e| input(format!("{}: {e}", dir.display())))? {
    let entry = entry.map_err(|e| input(format!("{}: {e}", dir.display())))?;
    let name = entry.file_name().to_string_lossy().into_owned();
    if name.ends_with(".flo") {
      names.push(name);
    }
  }
  names.sort();
  Ok(names)
}

fn cmd_epe(a: &Path, b: &Path) -> CliResult<()> {
  if a.is_dir() != b.is_dir() {
    return Err(input("epe needs two files or two directories"));
  }
  if !a.is_dir() {
    println!("{:.6}", epe(&load_flo(a)?, &load_flo(b)?).map_err(input)?);
    return Ok(());
  }
  let names = flo_files(a)?;
  if names.is_empty() {
    return Err(input(format!("{}: no .flo files", a.display())));
  }
  let mut total = 0.0;
  println!("file,epe");
  for name in &names {
    let e = epe(&load_flo(&a.join(name))?, &load_flo(&b.join(name))?)
      .map_err(|e| input(format!("{name}: {e}")))?;
    println!("{name},{e:.6}");
    total += e;
  }
  println!("mean,{:.6}", total / names.len() as f64);
  Ok(())
}

fn cmd_downsample_flow(
  input_path: &Path,
  out: &Path,
  bs: usize,
  method: FlowEstimator,
  bound: i32,
) -> CliResult<()> {
  if bound <= 0 {
    return Err(input("--mv-bound must be positive"));
  }
  let field = load_flo(input_path)?;
  let blocks = downsample_flow(&field, block_size(bs)?, method, bound).map_err(input)?;
  let dense = expand_block_field(&blocks, field.width(), field.height());
  write_atomic(out, |w| write_flo(w, &dense).map_err(to_io))
}

fn run(cli: Cli) -> CliResult<()> {
  match cli.command {
    Cmd::Encode(args) => cmd_encode(args),
    Cmd::Decode { input, out } => cmd_decode(&input, &out),
    Cmd::RdSweep(args) => cmd_rd_sweep(args),
    Cmd::Bdrate(args) => cmd_bdrate(args),
    Cmd::Epe { a, b } => cmd_epe(&a, &b),
    Cmd::DownsampleFlow { input, out, block_size, method, mv_bound } => {
      cmd_downsample_flow(&input, &out, block_size, method, mv_bound)
    }
  }
}

fn main() -> ExitCode {
  let cli = match Cli::try_parse() {
    Ok(cli) => cli,
    Err(e) => {
      let _ = e.print();
      return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
    }
  };
  match run(cli) {
    Ok(()) => ExitCode::SUCCESS,
    Err(CliError::Input(msg)) => {
      eprintln!("error: {msg}");
      ExitCode::from(1)
    }
    Err(CliError::Internal(msg)) => {
      eprintln!("internal error: {msg}");
      ExitCode::from(2)
    }
  }
}
