//! The `fmtlab` command line.
//!
//! Every subcommand resolves its arguments into a serializable config, runs
//! the library operation, and writes either a JSON [`ReportEnvelope`] or a
//! CSV table whose first line is a `#` comment holding the same config.

mod report;

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

pub use report::{csv_header_comment, ReportEnvelope, TOOL};

use crate::empirics::{
    corpus_crest_stats, crest_factor_stats, mc_qsnr_scatter, stability_experiment, CorpusSpec, PrecisionKind,
    ScaleArithmetic,
};
use crate::error::{Error, Result};
use crate::formats::{lookup_format, standard_formats};
use crate::hwcost::{calibrate_cells, mixed_format_cost, mmu_cost, CellFactors, MacConfig, MixedScheme, RatioTarget};
use crate::io::{read_tensor, write_tensor, Dtype};
use crate::quant::{linear_layer_sim, LinearSimConfig, Quantizer, RotationSpec, Tensor};
use crate::theory::{crossover, parse_pair, qsnr_curve, standard_pairs, FormatPair, GaussianQsnrModel, KappaGrid};

#[derive(Debug, Parser)]
#[command(
    name = "fmtlab",
    version,
    about = "Block-quantization format emulation, QSNR analysis and MAC cost modelling"
)]
pub struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true, env = "FMTLAB_THREADS")]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// List the registered formats.
    Formats(FormatsArgs),
    /// Quantize and dequantize a tensor file.
    Quantize(QuantizeArgs),
    /// Quantize the six GEMM operands of a linear layer.
    LinearSim(LinearSimArgs),
    /// Predicted QSNR of one format at one crest factor.
    QsnrTheory(QsnrTheoryArgs),
    /// Predicted QSNR curves over a crest-factor grid (CSV).
    QsnrCurve(QsnrCurveArgs),
    /// Crest factor where INT and FP predictions cross.
    Crossover(CrossoverArgs),
    /// Measured QSNR of an INT/FP pair over a Gaussian corpus (CSV).
    McQsnr(McQsnrArgs),
    /// Block crest-factor statistics of tensor files.
    Crest(CrestArgs),
    /// Count ±128 codes in low-precision INT8 normalization.
    Stability(StabilityArgs),
    /// Area and energy of one format's MAC array.
    Hwcost(HwcostArgs),
    /// Area and energy of a mixed 8-bit/4-bit array.
    HwcostMixed(HwcostMixedArgs),
    /// Fit cell factors to cost-ratio targets.
    HwcostCalibrate(HwcostCalibrateArgs),
    /// Write a seeded Gaussian corpus as tensor files.
    GenCorpus(GenCorpusArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct RotationArgs {
    /// Rotate blocks with a seeded random Hadamard matrix before quantizing.
    #[arg(long)]
    pub rotate: bool,
    /// Seed of the rotation's sign diagonal.
    #[arg(long, default_value_t = 0)]
    pub rotate_seed: u64,
    /// Rotation size; defaults to the format's block size.
    #[arg(long)]
    pub rotate_dim: Option<usize>,
}

impl RotationArgs {
    fn spec(&self, block_size: usize) -> Option<RotationSpec> {
        self.rotate
            .then(|| RotationSpec::new(self.rotate_dim.unwrap_or(block_size), self.rotate_seed))
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct FormatsArgs {
    /// Print an aligned text table instead of the JSON report.
    #[arg(long)]
    pub table: bool,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct QuantizeArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub format: String,
    #[arg(long, default_value_t = -1, allow_hyphen_values = true)]
    pub axis: isize,
    #[command(flatten)]
    #[serde(flatten)]
    pub rotation: RotationArgs,
    /// Dequantized tensor output.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Storage type of the output tensor.
    #[arg(long, default_value = "f32")]
    pub dtype: String,
    /// JSON report path (stdout when omitted).
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Round scale arithmetic to this precision (bf16, fp16, fp32).
    #[arg(long)]
    pub scale_precision: Option<String>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct LinearSimArgs {
    #[arg(long)]
    pub format: String,
    /// Activations X (m×k); generated when omitted.
    #[arg(long)]
    pub x: Option<PathBuf>,
    /// Weights W (k×n).
    #[arg(long)]
    pub w: Option<PathBuf>,
    /// Output gradient dY (m×n).
    #[arg(long)]
    pub dy: Option<PathBuf>,
    /// Shape `MxKxN` of generated Gaussian operands.
    #[arg(long, default_value = "128x256x128")]
    pub dims: String,
    /// Seed for generated operands.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    #[serde(flatten)]
    pub rotation: RotationArgs,
    /// Sites (1-6) to leave unrotated.
    #[arg(long, value_delimiter = ',')]
    pub no_rotate_site: Vec<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct QsnrTheoryArgs {
    #[arg(long)]
    pub format: String,
    #[arg(long)]
    pub kappa: f64,
    /// Scale overhead for power-of-two scales; defaults to the format's model value.
    #[arg(long)]
    pub rho: Option<f64>,
    /// Accept crest factors above sqrt(block size).
    #[arg(long)]
    pub allow_beyond_bound: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct QsnrCurveArgs {
    /// `all` or a comma-separated list of INT:FP pairs.
    #[arg(long, default_value = "all")]
    pub pairs: String,
    /// Grid `start:stop[:step]`.
    #[arg(long, default_value = "1:16:0.05")]
    pub kappa: String,
    #[arg(long, default_value_t = 1.5)]
    pub rho: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CrossoverArgs {
    /// `all` or a comma-separated list of INT:FP pairs.
    #[arg(long, default_value = "all")]
    pub pair: String,
    #[arg(long, default_value_t = 1.5)]
    pub rho: f64,
    /// Search interval `lo:hi`; defaults depend on the pair.
    #[arg(long)]
    pub bracket: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct McQsnrArgs {
    #[arg(long, default_value = "MXINT8:MXFP8")]
    pub pair: String,
    #[arg(long, default_value_t = 512)]
    pub tensors: usize,
    #[arg(long, default_value = "64x4096")]
    pub shape: String,
    /// Corpus seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Plant one outlier of this many standard deviations per block.
    #[arg(long)]
    pub outlier: Option<f64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub rotation: RotationArgs,
    /// Scatter CSV (stdout when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// JSON summary path.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CrestArgs {
    /// One or more tensor files; several files are summarized per tensor.
    #[arg(long = "in", required = true, num_args = 1..)]
    pub input: Vec<PathBuf>,
    /// Block size, or -1 for one block per channel.
    #[arg(long, default_value_t = 32, allow_hyphen_values = true)]
    pub block: isize,
    #[arg(long, default_value_t = -1, allow_hyphen_values = true)]
    pub axis: isize,
    #[command(flatten)]
    #[serde(flatten)]
    pub rotation: RotationArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct StabilityArgs {
    #[arg(long, default_value = "bf16")]
    pub precision: String,
    #[arg(long, default_value_t = 4096)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct HwcostArgs {
    #[arg(long)]
    pub format: String,
    /// Cell factor JSON; placeholder defaults when omitted.
    #[arg(long)]
    pub cells: Option<PathBuf>,
    /// Lane count; defaults to the block size.
    #[arg(long)]
    pub lanes: Option<u32>,
    #[arg(long, default_value_t = crate::hwcost::DEFAULT_PSUM_BITS)]
    pub psum_bits: u32,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct HwcostMixedArgs {
    #[arg(long)]
    pub scheme: String,
    #[arg(long)]
    pub cells: Option<PathBuf>,
    #[arg(long, default_value_t = 32)]
    pub lanes: u32,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct HwcostCalibrateArgs {
    /// JSON list of {numerator, denominator, metric, target}.
    #[arg(long)]
    pub targets: PathBuf,
    /// Starting cell factors.
    #[arg(long)]
    pub cells: Option<PathBuf>,
    #[arg(long, default_value_t = 5000)]
    pub iterations: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GenCorpusArgs {
    #[arg(long, default_value_t = 8)]
    pub tensors: usize,
    #[arg(long, default_value = "64x4096")]
    pub shape: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Plant one outlier of this many standard deviations per block.
    #[arg(long)]
    pub outlier: Option<f64>,
    #[arg(long, default_value_t = 32)]
    pub outlier_block: usize,
    #[arg(long, default_value = "f32")]
    pub dtype: String,
    /// Output directory (created if missing).
    #[arg(long)]
    pub dir: PathBuf,
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("fmtlab: {e}");
            e.exit_code()
        }
    }
}

/// Runs a parsed command line inside a thread pool of the requested size.
pub fn execute(cli: Cli) -> Result<()> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Error::config("--threads must be at least 1"));
        }
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::config(format!("thread pool: {e}")))?;
    pool.install(|| dispatch(cli.command))
}

fn dispatch(cmd: Command) -> Result<()> {
    match cmd {
        Command::Formats(a) => formats(&a),
        Command::Quantize(a) => quantize(&a),
        Command::LinearSim(a) => linear_sim(&a),
        Command::QsnrTheory(a) => qsnr_theory(&a),
        Command::QsnrCurve(a) => curve(&a),
        Command::Crossover(a) => crossover_cmd(&a),
        Command::McQsnr(a) => mc_qsnr(&a),
        Command::Crest(a) => crest(&a),
        Command::Stability(a) => stability(&a),
        Command::Hwcost(a) => hwcost(&a),
        Command::HwcostMixed(a) => hwcost_mixed(&a),
        Command::HwcostCalibrate(a) => hwcost_calibrate(&a),
        Command::GenCorpus(a) => gen_corpus(&a),
    }
}

fn envelope(command: &str, config: &impl Serialize, result: &impl Serialize, start: Instant) -> Result<ReportEnvelope> {
    ReportEnvelope::new(command, config, result, start.elapsed())
}

fn parse_pairs(s: &str) -> Result<Vec<FormatPair>> {
    if s.trim().eq_ignore_ascii_case("all") {
        return Ok(standard_pairs());
    }
    s.split(',').map(|p| parse_pair(p.trim())).collect()
}

fn load_cells(path: Option<&Path>) -> Result<CellFactors> {
    path.map_or_else(|| Ok(CellFactors::default()), CellFactors::load)
}

fn formats(a: &FormatsArgs) -> Result<()> {
    let start = Instant::now();
    let rows: Vec<_> = standard_formats().iter().map(|f| f.summary()).collect();
    if !a.table {
        return report::emit_json(None, &envelope("formats", a, &rows, start)?);
    }
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<8} {:>6} {:>6} {:>10} {:>12} {:<16}",
        "name", "elem", "block", "max", "min", "scale"
    );
    for f in standard_formats() {
        let elem = match f.fp_layout() {
            Some(l) => l.name(),
            None => format!("INT{}", f.element.bit_width()),
        };
        let _ = writeln!(
            s,
            "{:<8} {:>6} {:>6} {:>10} {:>12} {:<16}",
            f.name,
            elem,
            f.block_size,
            f.element.q_ref(),
            format!("{:e}", f.element.min_positive()),
            format!("{:?}", f.scale_mode)
        );
    }
    report::emit(None, &s)
}

#[derive(Serialize)]
struct QuantizeSummary {
    input_shape: Vec<usize>,
    format: String,
    axis: usize,
    block_size: usize,
    blocks: usize,
    #[serde(serialize_with = "crate::jsonfmt::f64_or_token")]
    qsnr_db: f64,
    mean_rho: Option<f64>,
    min_scale: f64,
    max_scale: f64,
    tensor_scale: Option<f64>,
    rotation: Option<RotationSpec>,
    output: Option<PathBuf>,
}

fn quantize(a: &QuantizeArgs) -> Result<()> {
    let start = Instant::now();
    let spec = lookup_format(&a.format)?;
    let dtype: Dtype = a.dtype.parse()?;
    let rotation = a.rotation.spec(spec.block_size);
    let arith = match &a.scale_precision {
        Some(p) => ScaleArithmetic::Emulated(PrecisionKind::parse(p)?),
        None => ScaleArithmetic::Exact,
    };
    let t = read_tensor(&a.input)?;
    let r = Quantizer::new(&spec)?
        .with_rotation(rotation.as_ref())?
        .with_scale_arithmetic(arith)
        .quantize(&t, a.axis)?;
    if let Some(out) = &a.out {
        write_tensor(&r.dequantized, out, dtype)?;
    }
    let scales = r.scales.iter().map(|s| s.value);
    let summary = QuantizeSummary {
        input_shape: t.shape().to_vec(),
        format: spec.name.clone(),
        axis: r.axis,
        block_size: r.block_size,
        blocks: r.scales.len(),
        qsnr_db: r.qsnr_db,
        mean_rho: r.mean_rho(),
        min_scale: scales.clone().fold(f64::INFINITY, f64::min),
        max_scale: scales.fold(0.0, f64::max),
        tensor_scale: r.tensor_scale,
        rotation,
        output: a.out.clone(),
    };
    report::emit_json(a.report.as_deref(), &envelope("quantize", a, &summary, start)?)
}

fn parse_dims3(s: &str) -> Result<(usize, usize, usize)> {
    let bad = || Error::config(format!("dims must look like 128x256x128, got `{s}`"));
    let v: Vec<usize> = s
        .split(['x', 'X'])
        .map(|p| p.trim().parse().map_err(|_| bad()))
        .collect::<Result<_>>()?;
    match v.as_slice() {
        [m, k, n] if *m > 0 && *k > 0 && *n > 0 => Ok((*m, *k, *n)),
        _ => Err(bad()),
    }
}

fn linear_sim(a: &LinearSimArgs) -> Result<()> {
    let start = Instant::now();
    let spec = lookup_format(&a.format)?;
    let (x, w, dy) = match (&a.x, &a.w, &a.dy) {
        (Some(x), Some(w), Some(dy)) => (read_tensor(x)?, read_tensor(w)?, read_tensor(dy)?),
        (None, None, None) => {
            let (m, k, n) = parse_dims3(&a.dims)?;
            let gen = |r, c, i| CorpusSpec::new(3, r, c, a.seed).tensor(i);
            (gen(m, k, 0)?, gen(k, n, 1)?, gen(m, n, 2)?)
        }
        _ => return Err(Error::config("give all of --x, --w and --dy, or none of them")),
    };
    let mut cfg = LinearSimConfig {
        rotation: a.rotation.spec(spec.block_size),
        ..LinearSimConfig::default()
    };
    for &s in &a.no_rotate_site {
        if !(1..=6).contains(&s) {
            return Err(Error::config(format!("sites are numbered 1-6, got {s}")));
        }
        cfg.rotate_sites[s - 1] = false;
    }
    let r = linear_layer_sim(&x, &w, &dy, &spec, &cfg)?;
    report::emit_json(a.out.as_deref(), &envelope("linear-sim", a, &r, start)?)
}

fn qsnr_theory(a: &QsnrTheoryArgs) -> Result<()> {
    let start = Instant::now();
    let spec = lookup_format(&a.format)?;
    let p = GaussianQsnrModel::new(&spec, a.kappa, a.rho, a.allow_beyond_bound)?.evaluate();
    report::emit_json(a.out.as_deref(), &envelope("qsnr-theory", a, &p, start)?)
}

fn curve(a: &QsnrCurveArgs) -> Result<()> {
    let pairs = parse_pairs(&a.pairs)?;
    let grid: KappaGrid = a.kappa.parse()?;
    let rows = qsnr_curve(&pairs, &grid.points(), a.rho);
    let mut s = csv_header_comment("qsnr-curve", a)?;
    s.push_str("kappa,format,qsnr_db\n");
    for r in rows {
        let _ = writeln!(s, "{},{},{}", r.kappa, r.format, r.qsnr_db);
    }
    report::emit(a.out.as_deref(), &s)
}

fn parse_bracket(s: &str) -> Result<(f64, f64)> {
    let bad = || Error::config(format!("bracket must look like 1:16, got `{s}`"));
    let (lo, hi) = s.split_once(':').ok_or_else(bad)?;
    Ok((
        lo.trim().parse().map_err(|_| bad())?,
        hi.trim().parse().map_err(|_| bad())?,
    ))
}

fn crossover_cmd(a: &CrossoverArgs) -> Result<()> {
    let start = Instant::now();
    let bracket = a.bracket.as_deref().map(parse_bracket).transpose()?;
    let pairs = parse_pairs(&a.pair)?;
    let results = pairs
        .iter()
        .map(|p| crossover(p, a.rho, bracket))
        .collect::<Result<Vec<_>>>()?;
    if results.len() == 1 {
        report::emit_json(a.out.as_deref(), &envelope("crossover", a, &results[0], start)?)
    } else {
        report::emit_json(a.out.as_deref(), &envelope("crossover", a, &results, start)?)
    }
}

#[derive(Serialize)]
struct McSummary<'a> {
    int_format: &'a str,
    fp_format: &'a str,
    tensors: usize,
    #[serde(serialize_with = "crate::jsonfmt::f64_or_token")]
    mean_qsnr_int: f64,
    #[serde(serialize_with = "crate::jsonfmt::f64_or_token")]
    mean_qsnr_fp: f64,
    mean_kappa: f64,
    wins: usize,
    losses: usize,
    ties: usize,
    win_rate: f64,
    loss_rate: f64,
    tie_rate: f64,
}

fn mc_qsnr(a: &McQsnrArgs) -> Result<()> {
    let start = Instant::now();
    let pair = parse_pair(&a.pair)?;
    let (rows, cols) = CorpusSpec::parse_shape(&a.shape)?;
    let mut corpus = CorpusSpec::new(a.tensors, rows, cols, a.seed);
    if let Some(m) = a.outlier {
        corpus = corpus.with_outliers(pair.int.block_size, m);
    }
    let rotation = a.rotation.spec(pair.int.block_size);
    let r = mc_qsnr_scatter(&pair, &corpus, rotation.as_ref())?;
    let mut s = csv_header_comment("mc-qsnr", a)?;
    s.push_str("tensor_id,kappa,qsnr_int,qsnr_fp\n");
    for x in &r.samples {
        let _ = writeln!(s, "{},{},{},{}", x.tensor_id, x.kappa, x.qsnr_int, x.qsnr_fp);
    }
    report::emit(a.out.as_deref(), &s)?;
    if let Some(p) = &a.report {
        let summary = McSummary {
            int_format: &r.int_format,
            fp_format: &r.fp_format,
            tensors: r.samples.len(),
            mean_qsnr_int: r.mean_qsnr_int,
            mean_qsnr_fp: r.mean_qsnr_fp,
            mean_kappa: r.mean_kappa,
            wins: r.wins,
            losses: r.losses,
            ties: r.ties,
            win_rate: r.win_rate,
            loss_rate: r.loss_rate,
            tie_rate: r.tie_rate,
        };
        report::emit_json(Some(p), &envelope("mc-qsnr", a, &summary, start)?)?;
    }
    Ok(())
}

fn crest(a: &CrestArgs) -> Result<()> {
    let start = Instant::now();
    let tensors = a
        .input
        .iter()
        .map(|p| read_tensor(p))
        .collect::<Result<Vec<Tensor>>>()?;
    let g = if a.block > 0 { a.block as usize } else { 1 };
    let rotation = a.rotation.spec(g);
    let stats = if tensors.len() == 1 {
        crest_factor_stats(&tensors[0], a.axis, a.block, rotation.as_ref())?
    } else {
        corpus_crest_stats(&tensors, a.axis, a.block, rotation.as_ref())?
    };
    report::emit_json(a.out.as_deref(), &envelope("crest", a, &stats, start)?)
}

fn stability(a: &StabilityArgs) -> Result<()> {
    let start = Instant::now();
    let r = stability_experiment(a.n, PrecisionKind::parse(&a.precision)?, a.seed)?;
    report::emit_json(a.out.as_deref(), &envelope("stability", a, &r, start)?)
}

fn hwcost(a: &HwcostArgs) -> Result<()> {
    let start = Instant::now();
    let cells = load_cells(a.cells.as_deref())?;
    let mut cfg = MacConfig::from_format(&lookup_format(&a.format)?)?.with_psum_bit_width(a.psum_bits);
    if let Some(k) = a.lanes {
        cfg = cfg.with_lanes(k);
    }
    cfg.validate()?;
    let r = mmu_cost(&cfg, &cells);
    report::emit_json(a.out.as_deref(), &envelope("hwcost", a, &r, start)?)
}

fn hwcost_mixed(a: &HwcostMixedArgs) -> Result<()> {
    let start = Instant::now();
    let scheme: MixedScheme = a.scheme.parse()?;
    let r = mixed_format_cost(scheme, &load_cells(a.cells.as_deref())?, a.lanes)?;
    report::emit_json(a.out.as_deref(), &envelope("hwcost-mixed", a, &r, start)?)
}

fn hwcost_calibrate(a: &HwcostCalibrateArgs) -> Result<()> {
    let start = Instant::now();
    let text = std::fs::read_to_string(&a.targets).map_err(|source| Error::Io {
        path: a.targets.clone(),
        source,
    })?;
    let targets: Vec<RatioTarget> =
        serde_json::from_str(&text).map_err(|e| Error::config(format!("{}: {e}", a.targets.display())))?;
    let r = calibrate_cells(&targets, &load_cells(a.cells.as_deref())?, a.iterations)?;
    report::emit_json(a.out.as_deref(), &envelope("hwcost-calibrate", a, &r, start)?)
}

#[derive(Serialize)]
struct CorpusManifest {
    corpus: CorpusSpec,
    dtype: Dtype,
    files: Vec<String>,
}

fn gen_corpus(a: &GenCorpusArgs) -> Result<()> {
    let start = Instant::now();
    let (rows, cols) = CorpusSpec::parse_shape(&a.shape)?;
    let dtype: Dtype = a.dtype.parse()?;
    let mut corpus = CorpusSpec::new(a.tensors, rows, cols, a.seed);
    if let Some(m) = a.outlier {
        corpus = corpus.with_outliers(a.outlier_block, m);
    }
    corpus.validate()?;
    std::fs::create_dir_all(&a.dir).map_err(|source| Error::Io {
        path: a.dir.clone(),
        source,
    })?;
    let mut files = Vec::with_capacity(a.tensors);
    for (i, t) in corpus.iter().enumerate() {
        let name = format!("tensor_{i:05}.ftnsr");
        write_tensor(&t?, &a.dir.join(&name), dtype)?;
        files.push(name);
    }
    let manifest = CorpusManifest { corpus, dtype, files };
    report::emit_json(
        Some(&a.dir.join("manifest.json")),
        &envelope("gen-corpus", a, &manifest, start)?,
    )
}
