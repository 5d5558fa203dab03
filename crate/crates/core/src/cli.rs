//! `binsamp` command-line front end.
//!
//! Exit statuses: 0 success/pass, 1 statistical failure, 2 usage or
//! precondition error, 3 I/O error, 4 validation or parse error. Output is
//! assembled in memory and written once, so a failing run never leaves a
//! partial file behind.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::bs_sampler::{bbs_explicit, BsSampler};
use crate::distributions::NamedDistribution;
use crate::error::Error;
use crate::its_baselines::{BsitsSampler, CumulativeTable, InorderCdfTree, NaiveItsSampler, ScanDirection};
use crate::model::{load_weights, RngStream, UniformSource, WeightFormat, WeightTable, GENERATOR_ID};
use crate::multidim::{truncated_sampler, MultidimDescriptor, Shape};
use crate::verify::{self, ConstantSampler};
use crate::Sampler;

pub const EXIT_OK: i32 = 0;
pub const EXIT_STAT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_VALIDATION: i32 = 4;

#[derive(Parser, Debug)]
#[command(name = "binsamp", version, about = "Binary sampling and inverse-transform baselines")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Draw samples from a weight table.
    Sample(SampleArgs),
    /// Time preprocessing and per-sample cost over a size sweep (CSV).
    Bench(BenchArgs),
    /// Single-precision rounding error of pairwise vs sequential summation (CSV).
    Error(ErrorArgs),
    /// Chi-square goodness-of-fit run; exit 0 iff the sampler passes.
    Gof(GofArgs),
    /// Sample a multidimensional table on a (possibly truncated) support.
    Multidim(MultidimArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SamplerKind {
    Bs,
    #[value(alias = "its_forward")]
    ItsForward,
    #[value(alias = "its_backward")]
    ItsBackward,
    Bsits,
    /// Always returns index 0; exists to exercise the failing path.
    #[value(hide = true)]
    ZeroStub,
}

impl SamplerKind {
    fn name(self) -> &'static str {
        match self {
            SamplerKind::Bs => "bs",
            SamplerKind::ItsForward => "its_forward",
            SamplerKind::ItsBackward => "its_backward",
            SamplerKind::Bsits => "bsits",
            SamplerKind::ZeroStub => "zero_stub",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Plain,
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum InputFormat {
    Plain,
    Json,
}

#[derive(Args, Debug)]
pub struct TableArgs {
    /// Weight file (plain text or JSON).
    #[arg(long, conflicts_with = "dist")]
    pub input: Option<PathBuf>,
    /// Input format; defaults to json for `.json` files and plain otherwise.
    #[arg(long)]
    pub input_format: Option<InputFormat>,
    /// Named distribution instead of a file: uniform, zipf:S, reversed-zipf:S,
    /// binomial:GAMMA, two-level:EPS.
    #[arg(long, requires = "n_max")]
    pub dist: Option<String>,
    /// Largest support index N for `--dist`.
    #[arg(long)]
    pub n_max: Option<usize>,
}

#[derive(Args, Debug)]
pub struct SampleArgs {
    #[command(flatten)]
    pub table: TableArgs,
    #[arg(long, value_enum, default_value = "bs")]
    pub sampler: SamplerKind,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub count: usize,
    /// Shape descriptor (JSON file or inline JSON); samples are printed as multi-indices.
    #[arg(long)]
    pub shape: Option<String>,
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "plain")]
    pub format: OutputFormat,
    /// Run the backward pass with a materialized candidate set and report its sizes.
    #[arg(long, hide = true)]
    pub explicit_set: bool,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    /// Comma-separated support sizes N + 1.
    #[arg(long, value_delimiter = ',', required = true)]
    pub sweep: Vec<usize>,
    /// Samplers to run (repeat or comma-separate); all four by default.
    #[arg(long, value_enum, value_delimiter = ',')]
    pub sampler: Vec<SamplerKind>,
    #[arg(long, default_value = "uniform")]
    pub dist: String,
    /// Draws per cell.
    #[arg(long, default_value_t = 100_000)]
    pub count: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: OutputFormat,
}

#[derive(Args, Debug)]
pub struct ErrorArgs {
    /// Comma-separated sizes (powers of two).
    #[arg(long, value_delimiter = ',', required = true)]
    pub sweep: Vec<usize>,
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: OutputFormat,
}

#[derive(Args, Debug)]
pub struct GofArgs {
    #[command(flatten)]
    pub table: TableArgs,
    #[arg(long, value_enum, default_value = "bs")]
    pub sampler: SamplerKind,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 100_000)]
    pub count: usize,
    #[arg(long, default_value_t = 0.001)]
    pub alpha: f64,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct MultidimArgs {
    /// Shape descriptor (JSON file or inline JSON).
    #[arg(long)]
    pub shape: String,
    /// Weights for every cell of the shape, in flattened order.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub input_format: Option<InputFormat>,
    /// Overrides the descriptor's tail bound.
    #[arg(long)]
    pub tail_bound: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub count: usize,
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "plain")]
    pub format: OutputFormat,
}

/// Failure of one CLI run, carrying its exit status.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        CliError { code: EXIT_USAGE, message: message.into() }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Domain(_) | Error::Precondition(_) => EXIT_USAGE,
            Error::Io(_) => EXIT_IO,
            Error::Validation(_) | Error::Format(_) => EXIT_VALIDATION,
        };
        CliError { code, message: e.to_string() }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError { code: EXIT_IO, message: e.to_string() }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let sink: &mut dyn Write = if e.use_stderr() { stderr } else { stdout };
            let _ = sink.write_all(text.as_bytes());
            return code;
        }
    };
    match execute(&cli.command, stdout) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "binsamp: {}", e.message);
            e.code
        }
    }
}

fn execute(command: &Command, stdout: &mut dyn Write) -> CliResult<i32> {
    match command {
        Command::Sample(a) => cmd_sample(a, stdout),
        Command::Bench(a) => cmd_bench(a, stdout),
        Command::Error(a) => cmd_error(a, stdout),
        Command::Gof(a) => cmd_gof(a, stdout),
        Command::Multidim(a) => cmd_multidim(a, stdout),
    }
}

fn emit(output: Option<&Path>, text: &str, stdout: &mut dyn Write) -> CliResult<()> {
    match output {
        Some(p) => std::fs::write(p, text)?,
        None => stdout.write_all(text.as_bytes())?,
    }
    Ok(())
}

fn hex_digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

struct LoadedTable {
    table: WeightTable,
    source: String,
    digest: String,
}

fn weight_format(path: &Path, explicit: Option<InputFormat>) -> WeightFormat {
    match explicit {
        Some(InputFormat::Json) => WeightFormat::Json,
        Some(InputFormat::Plain) => WeightFormat::Plain,
        None if path.extension().is_some_and(|e| e == "json") => WeightFormat::Json,
        None => WeightFormat::Plain,
    }
}

fn read_table(path: &Path, format: Option<InputFormat>) -> CliResult<LoadedTable> {
    let bytes = std::fs::read(path)
        .map_err(|e| CliError { code: EXIT_IO, message: format!("{}: {e}", path.display()) })?;
    let table = load_weights(bytes.as_slice(), weight_format(path, format))?;
    Ok(LoadedTable { table, source: path.display().to_string(), digest: hex_digest(&bytes) })
}

fn load_table(args: &TableArgs) -> CliResult<LoadedTable> {
    match (&args.input, &args.dist) {
        (Some(path), None) => read_table(path, args.input_format),
        (None, Some(spec)) => {
            let dist: NamedDistribution = spec.parse()?;
            let n_max = args.n_max.ok_or_else(|| CliError::usage("--dist needs --n-max"))?;
            let table = dist.table(n_max)?;
            let source = format!("{dist} (N = {n_max})");
            let digest = hex_digest(source.as_bytes());
            Ok(LoadedTable { table, source, digest })
        }
        _ => Err(CliError::usage("give exactly one of --input or --dist")),
    }
}

fn read_descriptor(arg: &str) -> CliResult<MultidimDescriptor> {
    let text = if arg.trim_start().starts_with('{') {
        arg.to_string()
    } else {
        std::fs::read_to_string(arg)
            .map_err(|e| CliError { code: EXIT_IO, message: format!("{arg}: {e}") })?
    };
    Ok(MultidimDescriptor::from_json(&text)?)
}

fn make_sampler(kind: SamplerKind, table: &WeightTable, rng: RngStream) -> Box<dyn Sampler> {
    match kind {
        SamplerKind::Bs => Box::new(BsSampler::new(table, rng)),
        SamplerKind::ItsForward => {
            Box::new(NaiveItsSampler::new(CumulativeTable::build(table), ScanDirection::Forward, rng))
        }
        SamplerKind::ItsBackward => {
            Box::new(NaiveItsSampler::new(CumulativeTable::build(table), ScanDirection::Backward, rng))
        }
        SamplerKind::Bsits => Box::new(BsitsSampler::new(InorderCdfTree::build(table), rng)),
        SamplerKind::ZeroStub => Box::new(ConstantSampler(0)),
    }
}

/// Ordered key/value metadata rendered as `# key: value` lines or a JSON object.
#[derive(Default)]
struct Metadata(Vec<(&'static str, String)>);

impl Metadata {
    fn push(&mut self, key: &'static str, value: impl ToString) {
        self.0.push((key, value.to_string()));
    }

    fn comment_block(&self) -> String {
        self.0.iter().map(|(k, v)| format!("# {k}: {v}\n")).collect()
    }

    fn to_json(&self) -> serde_json::Value {
        serde_json::Value::Object(
            self.0.iter().map(|(k, v)| (k.to_string(), json!(v))).collect(),
        )
    }
}

fn base_metadata(command: &str, seed: u64) -> Metadata {
    let mut m = Metadata::default();
    m.push("tool", format!("binsamp {}", env!("CARGO_PKG_VERSION")));
    m.push("command", command);
    m.push("generator", GENERATOR_ID);
    m.push("seed", seed);
    m
}

fn render_samples(meta: &Metadata, rows: &[Vec<usize>], format: OutputFormat) -> String {
    let join = |r: &Vec<usize>| r.iter().map(usize::to_string).collect::<Vec<_>>().join(",");
    match format {
        OutputFormat::Plain => {
            let mut out = meta.comment_block();
            for r in rows {
                out.push_str(&join(r));
                out.push('\n');
            }
            out
        }
        OutputFormat::Csv => {
            let mut out = meta.comment_block();
            let width = rows.first().map_or(1, Vec::len);
            if width == 1 {
                out.push_str("sample\n");
            } else {
                let cols: Vec<String> = (1..=width).map(|k| format!("m{k}")).collect();
                out.push_str(&cols.join(","));
                out.push('\n');
            }
            for r in rows {
                out.push_str(&join(r));
                out.push('\n');
            }
            out
        }
        OutputFormat::Json => {
            let samples: serde_json::Value = if rows.iter().all(|r| r.len() == 1) {
                json!(rows.iter().map(|r| r[0]).collect::<Vec<_>>())
            } else {
                json!(rows)
            };
            let doc = json!({ "metadata": meta.to_json(), "samples": samples });
            serde_json::to_string_pretty(&doc).expect("serializable") + "\n"
        }
    }
}

pub fn cmd_sample(args: &SampleArgs, stdout: &mut dyn Write) -> CliResult<i32> {
    if args.count == 0 {
        return Err(CliError::usage("--count must be at least 1"));
    }
    let loaded = load_table(&args.table)?;
    let table = &loaded.table;
    let shape = match &args.shape {
        Some(s) => {
            let d = read_descriptor(s)?;
            if d.shape.len() != table.len() {
                return Err(CliError {
                    code: EXIT_VALIDATION,
                    message: format!(
                        "shape has {} cells but the table has {} weights",
                        d.shape.len(),
                        table.len()
                    ),
                });
            }
            Some(d.shape)
        }
        None => None,
    };

    let mut meta = base_metadata("sample", args.seed);
    meta.push("sampler", args.sampler.name());
    meta.push("input", &loaded.source);
    meta.push("input_sha256", &loaded.digest);
    meta.push("N", table.max_index());
    meta.push("d", table.depth());
    meta.push("count", args.count);

    let rng = RngStream::new(args.seed);
    let indices: Vec<usize> = if args.sampler == SamplerKind::Bs {
        let mut rng = rng;
        let (first, tree, trace) = if args.explicit_set {
            let (s, t, tr) = bbs_explicit(table, &mut rng);
            (s, t, Some(tr))
        } else {
            let (s, t) = crate::bs_sampler::bbs(table, &mut rng);
            (s, t, None)
        };
        meta.push("tree", "built by backward pass (pairwise, sequential); first sample from backward pass");
        meta.push("backward_pass_draws", rng.draws());
        if let Some(tr) = trace {
            let cards: Vec<String> = tr.cardinalities.iter().map(usize::to_string).collect();
            meta.push("explicit_set_cardinalities", cards.join(","));
        }
        let mut fwd = BsSampler::from_shared(Arc::new(tree), rng);
        std::iter::once(first)
            .chain((1..args.count).map(|_| fwd.sample()))
            .collect()
    } else {
        let mut s = make_sampler(args.sampler, table, rng);
        (0..args.count).map(|_| s.sample()).collect()
    };

    let rows: Vec<Vec<usize>> = match &shape {
        Some(sh) => indices.iter().map(|&i| sh.unflatten(i)).collect::<Result<_, _>>()?,
        None => indices.iter().map(|&i| vec![i]).collect(),
    };
    if let Some(sh) = &shape {
        meta.push("shape", format!("{:?}", sh.extents()));
    }
    emit(args.output.as_deref(), &render_samples(&meta, &rows, args.format), stdout)?;
    Ok(EXIT_OK)
}

#[derive(Debug, serde::Serialize)]
pub struct BenchRow {
    #[serde(rename = "N")]
    pub n: usize,
    pub support_size: usize,
    pub d: u32,
    pub sampler: &'static str,
    pub build_time: f64,
    pub per_sample_time: f64,
    pub comparisons_or_steps: f64,
    pub max_comparisons_or_steps: u64,
}

/// One benchmark cell: preprocessing time, mean time per draw, and mean
/// comparisons (ITS) or Bernoulli steps per forward walk (BS).
pub fn bench_cell(kind: SamplerKind, table: &WeightTable, count: usize, rng: RngStream) -> BenchRow {
    let n = table.max_index();
    let (build_time, per_sample_time, mean, max) = match kind {
        SamplerKind::Bs => {
            let t0 = Instant::now();
            let mut s = BsSampler::new(table, rng);
            let build = t0.elapsed().as_secs_f64();
            s.sample();
            let before = s.rng().draws();
            let t1 = Instant::now();
            let mut max = 0u64;
            for _ in 0..count {
                let d0 = s.rng().draws();
                std::hint::black_box(s.fbs());
                max = max.max(s.rng().draws() - d0);
            }
            let per = t1.elapsed().as_secs_f64() / count as f64;
            let steps = (s.rng().draws() - before) as f64 / count as f64;
            (build, per, steps, max)
        }
        SamplerKind::ItsForward | SamplerKind::ItsBackward => {
            let dir = if kind == SamplerKind::ItsForward {
                ScanDirection::Forward
            } else {
                ScanDirection::Backward
            };
            let t0 = Instant::now();
            let ct = CumulativeTable::build(table);
            let build = t0.elapsed().as_secs_f64();
            let mut s = NaiveItsSampler::new(ct, dir, rng);
            let t1 = Instant::now();
            let mut max = 0u64;
            for _ in 0..count {
                let c0 = s.comparisons();
                std::hint::black_box(s.sample());
                max = max.max(s.comparisons() - c0);
            }
            (build, t1.elapsed().as_secs_f64() / count as f64, s.mean_comparisons(), max)
        }
        SamplerKind::Bsits => {
            let t0 = Instant::now();
            let tree = InorderCdfTree::build(table);
            let build = t0.elapsed().as_secs_f64();
            let mut s = BsitsSampler::new(tree, rng);
            let t1 = Instant::now();
            for _ in 0..count {
                std::hint::black_box(s.sample());
            }
            let per = t1.elapsed().as_secs_f64() / count as f64;
            (build, per, s.mean_comparisons(), s.max_comparisons_seen())
        }
        SamplerKind::ZeroStub => (0.0, 0.0, 0.0, 0),
    };
    BenchRow {
        n,
        support_size: n + 1,
        d: table.depth(),
        sampler: kind.name(),
        build_time,
        per_sample_time,
        comparisons_or_steps: mean,
        max_comparisons_or_steps: max,
    }
}

pub fn cmd_bench(args: &BenchArgs, stdout: &mut dyn Write) -> CliResult<i32> {
    if args.count == 0 {
        return Err(CliError::usage("--count must be at least 1"));
    }
    let dist: NamedDistribution = args.dist.parse()?;
    let samplers = if args.sampler.is_empty() {
        vec![SamplerKind::Bs, SamplerKind::ItsForward, SamplerKind::ItsBackward, SamplerKind::Bsits]
    } else {
        args.sampler.clone()
    };
    let mut rows = Vec::new();
    for (cell, &size) in args.sweep.iter().enumerate() {
        if size == 0 {
            return Err(CliError::usage("sweep sizes must be at least 1"));
        }
        let table = dist.table(size - 1)?;
        for (k, &kind) in samplers.iter().enumerate() {
            let rng = RngStream::with_stream(args.seed, (cell * samplers.len() + k) as u64);
            rows.push(bench_cell(kind, &table, args.count, rng));
        }
    }

    let mut meta = base_metadata("bench", args.seed);
    meta.push("dist", dist);
    meta.push("count", args.count);
    let text = match args.format {
        OutputFormat::Json => {
            let doc = json!({ "metadata": meta.to_json(), "rows": rows });
            serde_json::to_string_pretty(&doc).expect("serializable") + "\n"
        }
        _ => {
            let mut out = meta.comment_block();
            out.push_str("N,support_size,d,sampler,build_time,per_sample_time,comparisons_or_steps,max_comparisons_or_steps\n");
            for r in &rows {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{:e},{:e},{},{}",
                    r.n,
                    r.support_size,
                    r.d,
                    r.sampler,
                    r.build_time,
                    r.per_sample_time,
                    r.comparisons_or_steps,
                    r.max_comparisons_or_steps
                );
            }
            out
        }
    };
    emit(args.output.as_deref(), &text, stdout)?;
    Ok(EXIT_OK)
}

pub fn cmd_error(args: &ErrorArgs, stdout: &mut dyn Write) -> CliResult<i32> {
    if let Some(bad) = args.sweep.iter().find(|n| !n.is_power_of_two()) {
        return Err(CliError::usage(format!("size {bad} is not a power of two")));
    }
    if args.trials == 0 {
        return Err(CliError::usage("--trials must be at least 1"));
    }
    let mut all = Vec::new();
    for (k, &n) in args.sweep.iter().enumerate() {
        let mut rng = RngStream::with_stream(args.seed, k as u64);
        all.extend(verify::rounding_error_experiment(n, args.trials, &mut rng)?);
    }
    let mut meta = base_metadata("error", args.seed);
    meta.push("trials", args.trials);
    let text = match args.format {
        OutputFormat::Json => {
            let flat: Vec<_> = all.iter().flat_map(|(a, b)| [a, b]).collect();
            let doc = json!({ "metadata": meta.to_json(), "reports": flat });
            serde_json::to_string_pretty(&doc).expect("serializable") + "\n"
        }
        _ => {
            let mut buf = meta.comment_block().into_bytes();
            verify::write_error_csv(&mut buf, &all)?;
            String::from_utf8(buf).expect("ascii csv")
        }
    };
    emit(args.output.as_deref(), &text, stdout)?;
    Ok(EXIT_OK)
}

pub fn cmd_gof(args: &GofArgs, stdout: &mut dyn Write) -> CliResult<i32> {
    let loaded = load_table(&args.table)?;
    let mut sampler = make_sampler(args.sampler, &loaded.table, RngStream::new(args.seed));
    let report = verify::gof_test(sampler.as_mut(), &loaded.table, args.count, args.alpha)?;
    let mut meta = base_metadata("gof", args.seed);
    meta.push("sampler", args.sampler.name());
    meta.push("input", &loaded.source);
    meta.push("input_sha256", &loaded.digest);
    meta.push("N", loaded.table.max_index());
    meta.push("d", loaded.table.depth());
    let doc = json!({ "metadata": meta.to_json(), "report": report });
    let text = serde_json::to_string_pretty(&doc).expect("serializable") + "\n";
    emit(args.output.as_deref(), &text, stdout)?;
    Ok(if report.passed { EXIT_OK } else { EXIT_STAT_FAIL })
}

pub fn cmd_multidim(args: &MultidimArgs, stdout: &mut dyn Write) -> CliResult<i32> {
    if args.count == 0 {
        return Err(CliError::usage("--count must be at least 1"));
    }
    let desc = read_descriptor(&args.shape)?;
    let loaded = read_table(&args.input, args.input_format)?;
    let shape: &Shape = &desc.shape;
    if loaded.table.len() != shape.len() {
        return Err(CliError {
            code: EXIT_VALIDATION,
            message: format!(
                "shape has {} cells but the input has {} weights",
                shape.len(),
                loaded.table.len()
            ),
        });
    }
    let tail = args.tail_bound.or(desc.tail_bound);
    let weights = loaded.table.weights();
    let (mut sampler, report) = truncated_sampler(
        shape,
        &desc.support,
        |m| weights[shape.flatten(m).expect("validated")],
        tail,
        RngStream::new(args.seed),
    )?;
    let rows: Vec<Vec<usize>> = (0..args.count).map(|_| sampler.sample_multi()).collect();

    let mut meta = base_metadata("multidim", args.seed);
    meta.push("sampler", "bs");
    meta.push("input", &loaded.source);
    meta.push("input_sha256", &loaded.digest);
    meta.push("shape", format!("{:?}", shape.extents()));
    meta.push("support_cells", sampler.cells().len());
    meta.push("N", sampler.cells().len() - 1);
    meta.push("d", sampler.inner().tree().depth());
    meta.push("kept_mass", report.kept_mass);
    meta.push("tail_bound", report.tail_bound_input.map_or("none".to_string(), |t| t.to_string()));
    meta.push("tv_bound", report.tv_bound.map_or("none".to_string(), |t| t.to_string()));
    meta.push("count", args.count);
    emit(args.output.as_deref(), &render_samples(&meta, &rows, args.format), stdout)?;
    Ok(EXIT_OK)
}
