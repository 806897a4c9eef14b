//! The `rua` command-line tool.
//!
//! Exit statuses: 0 success, 1 internal error, 2 usage or I/O error
//! (including undecodable images), 3 evaluator failure, 4 ledger problem.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use clap::{ArgGroup, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::image::{decode_ppm, encode_ppm, Image};
use crate::policy::{augment_image, augment_image_fixed, AppliedTrace, PolicyConfig, PolicyError, DEFAULT_N_MAX};
use crate::search::{
    evaluate, run_gss_search, run_grid, EvaluatorSpec, GridSpec, GssOptions, SearchError, SearchReport, SurfaceKind,
    SyntheticSurface,
};
use crate::transforms::{AugmentMode, TransformParams};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INTERNAL: i32 = 1;
pub const EXIT_IO: i32 = 2;
pub const EXIT_EVALUATOR: i32 = 3;
pub const EXIT_LEDGER: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error(transparent)]
    Search(#[from] SearchError),
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    fn io(path: &Path, err: impl std::fmt::Display) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            message: err.to_string(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. } | CliError::Usage(_) => EXIT_IO,
            CliError::Policy(_) => EXIT_INTERNAL,
            CliError::Search(e) => match e {
                SearchError::Eval(_) => EXIT_EVALUATOR,
                SearchError::Ledger(_) | SearchError::LedgerExists(_) => EXIT_LEDGER,
                SearchError::InvalidGrid(_) => EXIT_IO,
                SearchError::Gss(_) => EXIT_INTERNAL,
            },
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "rua", version, about = "Single-intensity image augmentation and intensity search")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Cmd,
}

#[derive(Debug, Subcommand)]
pub enum Cmd {
    /// Augment every PPM image in a directory.
    Augment(AugmentArgs),
    /// Golden-section search for the best intensity.
    Search(SearchArgs),
    /// Evaluate a fixed grid of intensities (or M×N pairs).
    Grid(GridArgs),
    /// Print the score of a synthetic unimodal surface at one intensity.
    DemoSurface(DemoArgs),
    /// Measure augmentation throughput for fixed transform counts.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModePreset {
    Rua,
    Ra,
    Custom,
}

#[derive(Debug, clap::Args)]
pub struct AugmentArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long, value_parser = parse_unit)]
    pub r: f64,
    #[arg(long, default_value_t = DEFAULT_N_MAX, value_parser = clap::value_parser!(u32).range(1..))]
    pub nmax: u32,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Preset for the ablation flags; custom starts from all flags off.
    #[arg(long, value_enum, default_value_t = ModePreset::Rua)]
    pub mode: ModePreset,
    #[arg(long, value_name = "BOOL")]
    pub aligned: Option<bool>,
    #[arg(long, value_name = "BOOL")]
    pub random: Option<bool>,
    #[arg(long, value_name = "BOOL")]
    pub expanded: Option<bool>,
    /// Write one JSON line per image listing the applied transforms.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
    pub jobs: u32,
}

impl AugmentArgs {
    pub fn mode(&self) -> AugmentMode {
        let mut mode = match self.mode {
            ModePreset::Rua => AugmentMode::RUA,
            ModePreset::Ra | ModePreset::Custom => AugmentMode::RA,
        };
        if let Some(v) = self.aligned {
            mode.aligned = v;
        }
        if let Some(v) = self.random {
            mode.random = v;
        }
        if let Some(v) = self.expanded {
            mode.expanded = v;
        }
        mode
    }
}

#[derive(Debug, clap::Args)]
pub struct SearchArgs {
    /// Shell command printing a score on its last line; `{r}` is replaced
    /// by the intensity and `{seed}` by --seed.
    #[arg(long, value_parser = parse_template)]
    pub eval_cmd: String,
    #[arg(long, default_value_t = crate::gss::DEFAULT_MAX_ITER)]
    pub max_iter: u32,
    #[arg(long, default_value = "rua-ledger.jsonl")]
    pub ledger: PathBuf,
    /// Continue the search recorded in --ledger.
    #[arg(long)]
    pub resume: bool,
    /// Per-evaluation timeout in seconds.
    #[arg(long, value_parser = parse_timeout)]
    pub timeout: Option<Duration>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, clap::Args)]
#[command(group(ArgGroup::new("grid").required(true).args(["points", "diagonal", "mn"])))]
pub struct GridArgs {
    /// Command template; the placeholders r, seed, m and n (in braces) are substituted.
    #[arg(long, value_parser = parse_template)]
    pub eval_cmd: String,
    /// Comma-separated intensities.
    #[arg(long, value_delimiter = ',', value_parser = parse_unit)]
    pub points: Option<Vec<f64>>,
    /// Evaluate r = 1/K, 2/K, …, 1.
    #[arg(long, value_name = "K", value_parser = clap::value_parser!(u32).range(1..))]
    pub diagonal: Option<u32>,
    /// M and N ranges, e.g. `1..10x1..10`.
    #[arg(long, value_name = "M1..M2xN1..N2", value_parser = parse_mn)]
    pub mn: Option<(Vec<u32>, Vec<u32>)>,
    #[arg(long, default_value = "rua-grid.jsonl")]
    pub ledger: PathBuf,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
    pub jobs: u32,
    #[arg(long, value_parser = parse_timeout)]
    pub timeout: Option<Duration>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SurfaceArg {
    Quadratic,
    Tent,
}

#[derive(Debug, clap::Args)]
pub struct DemoArgs {
    #[arg(long, value_enum, default_value_t = SurfaceArg::Quadratic)]
    pub kind: SurfaceArg,
    #[arg(long, default_value_t = 0.6, value_parser = parse_unit)]
    pub peak: f64,
    #[arg(long, default_value_t = 0.9)]
    pub height: f64,
    /// Distance from the peak at which the score reaches zero.
    #[arg(long, default_value_t = 0.4)]
    pub width: f64,
    /// Standard deviation of additive Gaussian noise.
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_parser = parse_unit)]
    pub r: f64,
}

#[derive(Debug, clap::Args)]
pub struct BenchArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Comma-separated transform counts.
    #[arg(long = "n", value_delimiter = ',', default_value = "0,1,3,5")]
    pub n: Vec<u32>,
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u32).range(1..))]
    pub trials: u32,
    #[arg(long, default_value_t = 0.5, value_parser = parse_unit)]
    pub r: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
    pub jobs: u32,
    #[arg(long)]
    pub json: Option<PathBuf>,
}

fn parse_unit(s: &str) -> Result<f64, String> {
    let v: f64 = s.trim().parse().map_err(|_| format!("{s:?} is not a number"))?;
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(format!("{v} is outside [0, 1]"))
    }
}

fn parse_template(s: &str) -> Result<String, String> {
    if s.contains("{r}") {
        Ok(s.to_string())
    } else {
        Err("the command template must contain {r}".into())
    }
}

fn parse_timeout(s: &str) -> Result<Duration, String> {
    let secs: f64 = s.parse().map_err(|_| format!("{s:?} is not a number of seconds"))?;
    Duration::try_from_secs_f64(secs).map_err(|e| e.to_string())
}

fn parse_range(s: &str) -> Result<Vec<u32>, String> {
    let num = |t: &str| t.trim().parse::<u32>().map_err(|_| format!("{t:?} is not an integer"));
    let (lo, hi) = match s.split_once("..") {
        Some((lo, hi)) => (num(lo)?, num(hi.trim_start_matches('='))?),
        None => {
            let v = num(s)?;
            (v, v)
        }
    };
    if lo > hi {
        return Err(format!("empty range {s:?}"));
    }
    Ok((lo..=hi).collect())
}

fn parse_mn(s: &str) -> Result<(Vec<u32>, Vec<u32>), String> {
    let (m, n) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("{s:?} is not of the form M1..M2xN1..N2"))?;
    Ok((parse_range(m)?, parse_range(n)?))
}

// ---------------------------------------------------------------------------

/// Parses `std::env::args`, runs, and returns the exit status.
pub fn main_from_env() -> i32 {
    main_with_args(std::env::args_os())
}

pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_IO } else { EXIT_OK };
        }
    };
    match run(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("rua: {e}");
            e.exit_code()
        }
    }
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Cmd::Augment(args) => cmd_augment(&args),
        Cmd::Search(args) => cmd_search(&args),
        Cmd::Grid(args) => cmd_grid(&args),
        Cmd::DemoSurface(args) => cmd_demo_surface(&args),
        Cmd::Bench(args) => cmd_bench(&args).map(|_| ()),
    }
}

fn thread_pool(jobs: u32) -> Result<rayon::ThreadPool, CliError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs as usize)
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start {jobs} worker threads: {e}")))
}

/// PPM files in `dir`, sorted by file name. The position in this list is
/// the image index used for seeding.
pub fn list_ppm_files(dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let entries = fs::read_dir(dir).map_err(|e| CliError::io(dir, e))?;
    let mut files = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| CliError::io(dir, e))?;
        let path = entry.path();
        let is_ppm = path
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| e.eq_ignore_ascii_case("ppm") || e.eq_ignore_ascii_case("pnm"));
        if is_ppm && path.is_file() {
            files.push(path);
        }
    }
    if files.is_empty() {
        return Err(CliError::io(dir, "no .ppm files found"));
    }
    files.sort_by(|a, b| a.file_name().cmp(&b.file_name()));
    Ok(files)
}

fn read_image(path: &Path) -> Result<Image, CliError> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    decode_ppm(&bytes).map_err(|e| CliError::io(path, e))
}

#[derive(Serialize)]
struct TraceLine<'a> {
    file: &'a str,
    index: u64,
    transforms: &'a [TransformParams],
}

pub fn cmd_augment(args: &AugmentArgs) -> Result<(), CliError> {
    let cfg = PolicyConfig::new(args.r, args.nmax, args.mode(), args.seed)?;
    let files = list_ppm_files(&args.input)?;
    fs::create_dir_all(&args.output).map_err(|e| CliError::io(&args.output, e))?;

    let pool = thread_pool(args.jobs)?;
    let results: Vec<Result<AppliedTrace, CliError>> = pool.install(|| {
        files
            .par_iter()
            .enumerate()
            .map(|(index, path)| {
                let img = read_image(path)?;
                let (out, trace) = augment_image(&img, &cfg, index as u64)?;
                let dest = args.output.join(path.file_name().expect("listed files have names"));
                fs::write(&dest, encode_ppm(&out)).map_err(|e| CliError::io(&dest, e))?;
                Ok(trace)
            })
            .collect()
    });

    let mut traces = Vec::with_capacity(results.len());
    for res in results {
        traces.push(res?);
    }
    if let Some(trace_path) = &args.trace {
        let mut text = String::new();
        for (index, (path, trace)) in files.iter().zip(&traces).enumerate() {
            let line = TraceLine {
                file: &path.file_name().expect("listed files have names").to_string_lossy(),
                index: index as u64,
                transforms: &trace.0,
            };
            text.push_str(&serde_json::to_string(&line).expect("trace lines serialize"));
            text.push('\n');
        }
        fs::write(trace_path, text).map_err(|e| CliError::io(trace_path, e))?;
    }
    println!(
        "augmented {} image(s) at r = {} (n_max = {}) into {}",
        files.len(),
        cfg.r,
        cfg.n_max,
        args.output.display()
    );
    Ok(())
}

fn print_report(report: &SearchReport, ledger: &Path) {
    print!("{}", report.render());
    println!("ledger: {}", ledger.display());
}

pub fn cmd_search(args: &SearchArgs) -> Result<(), CliError> {
    let spec = EvaluatorSpec::command(&args.eval_cmd, args.timeout).map_err(SearchError::from)?;
    let opts = GssOptions {
        max_iter: args.max_iter,
        seed: args.seed,
        resume: args.resume,
    };
    let report = run_gss_search(&spec, &opts, &args.ledger)?;
    print_report(&report, &args.ledger);
    Ok(())
}

pub fn cmd_grid(args: &GridArgs) -> Result<(), CliError> {
    let spec = EvaluatorSpec::command(&args.eval_cmd, args.timeout).map_err(SearchError::from)?;
    let grid = if let Some(points) = &args.points {
        GridSpec::Points(points.clone())
    } else if let Some(k) = args.diagonal {
        GridSpec::Diagonal(k)
    } else if let Some((m, n)) = &args.mn {
        GridSpec::Mn {
            m: m.clone(),
            n: n.clone(),
        }
    } else {
        return Err(CliError::Usage("one of --points, --diagonal or --mn is required".into()));
    };
    let report = run_grid(&spec, &grid, &args.ledger, args.jobs as usize, args.seed)?;
    print_report(&report, &args.ledger);
    Ok(())
}

pub fn cmd_demo_surface(args: &DemoArgs) -> Result<(), CliError> {
    let surface = SyntheticSurface {
        kind: match args.kind {
            SurfaceArg::Quadratic => SurfaceKind::Quadratic,
            SurfaceArg::Tent => SurfaceKind::Tent,
        },
        peak: args.peak,
        height: args.height,
        width: args.width,
        noise_sd: args.noise,
        noise_seed: args.seed,
    };
    let spec = EvaluatorSpec::synthetic(surface).map_err(|e| CliError::Usage(e.to_string()))?;
    let score = evaluate(&spec, args.r, 0).map_err(SearchError::from)?;
    println!("{score}");
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub n: u32,
    /// Median over trials.
    pub images_per_sec: f64,
    pub trial_images_per_sec: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchReport {
    pub images: usize,
    pub trials: u32,
    pub jobs: u32,
    pub r: f64,
    pub seed: u64,
    pub rows: Vec<BenchRow>,
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    if v.len() % 2 == 1 {
        v[mid]
    } else {
        (v[mid - 1] + v[mid]) / 2.0
    }
}

/// Reads, decodes and augments the whole corpus with exactly `n` transforms
/// per image; returns elapsed seconds.
fn bench_pass(pool: &rayon::ThreadPool, files: &[PathBuf], n: u32, args: &BenchArgs) -> Result<f64, CliError> {
    let start = Instant::now();
    pool.install(|| {
        files.par_iter().enumerate().try_for_each(|(index, path)| {
            let img = read_image(path)?;
            let (out, _) = augment_image_fixed(&img, n, args.r, AugmentMode::RUA, args.seed, index as u64)?;
            std::hint::black_box(out);
            Ok::<_, CliError>(())
        })
    })?;
    Ok(start.elapsed().as_secs_f64())
}

pub fn cmd_bench(args: &BenchArgs) -> Result<BenchReport, CliError> {
    if args.n.is_empty() {
        return Err(CliError::Usage("--n needs at least one count".into()));
    }
    let files = list_ppm_files(&args.input)?;
    let pool = thread_pool(args.jobs)?;
    // warm the page cache and the pool
    bench_pass(&pool, &files, 0, args)?;

    let mut rows = Vec::with_capacity(args.n.len());
    for &n in &args.n {
        let mut rates = Vec::with_capacity(args.trials as usize);
        for _ in 0..args.trials {
            let secs = bench_pass(&pool, &files, n, args)?.max(f64::MIN_POSITIVE);
            rates.push(files.len() as f64 / secs);
        }
        rows.push(BenchRow {
            n,
            images_per_sec: median(&rates),
            trial_images_per_sec: rates,
        });
    }
    let report = BenchReport {
        images: files.len(),
        trials: args.trials,
        jobs: args.jobs,
        r: args.r,
        seed: args.seed,
        rows,
    };

    println!("{:>4}  {:>14}", "N", "images/s");
    for row in &report.rows {
        println!("{:>4}  {:>14.1}", row.n, row.images_per_sec);
    }
    if let Some(path) = &args.json {
        let mut text = serde_json::to_string_pretty(&report).expect("bench report serializes");
        text.push('\n');
        fs::File::create(path)
            .and_then(|mut f| f.write_all(text.as_bytes()))
            .map_err(|e| CliError::io(path, e))?;
    }
    Ok(report)
}
