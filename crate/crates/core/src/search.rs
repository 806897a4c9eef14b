//! Intensity searches against black-box evaluators.
//!
//! An evaluator maps an intensity `r` to a score, typically by training a
//! model with augmentation strength `r` and reporting hold-out accuracy. It
//! is either an external shell command or one of the built-in synthetic
//! surfaces used for testing.
//!
//! Every evaluation is appended to a ledger (newline-delimited JSON) before
//! the next probe is requested, so an interrupted golden-section search can
//! be resumed by replaying the recorded scores.

use std::fmt;
use std::fs::{File, OpenOptions};
use std::io::{self, BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::str::FromStr;
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::mpsc;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gss::{GssError, GssState};
use crate::policy::mix64;

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("evaluator command failed ({status}): {}", summarize(.stdout, .stderr))]
    CommandFailed {
        status: String,
        stdout: String,
        stderr: String,
    },
    #[error("could not parse a score from {line:?}")]
    Parse { line: String },
    #[error("evaluator timed out after {0:?}")]
    Timeout(Duration),
    #[error("could not run evaluator: {0}")]
    Spawn(#[source] io::Error),
    #[error("intensity r = {0} is outside [0, 1]")]
    Domain(f64),
    #[error("invalid evaluator: {0}")]
    Invalid(String),
}

fn summarize(stdout: &str, stderr: &str) -> String {
    let tail = |s: &str| {
        let t = s.trim_end();
        let start = t.len().saturating_sub(400);
        let start = (start..=t.len()).find(|&i| t.is_char_boundary(i)).unwrap_or(t.len());
        t[start..].to_string()
    };
    format!("stdout: {:?}, stderr: {:?}", tail(stdout), tail(stderr))
}

#[derive(Debug, Error)]
pub enum LedgerError {
    #[error("ledger I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("corrupt ledger {path} line {line}: {reason}")]
    Corrupt {
        path: PathBuf,
        line: usize,
        reason: String,
    },
}

impl LedgerError {
    fn io(path: &Path, source: io::Error) -> Self {
        LedgerError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    fn corrupt(path: &Path, line: usize, reason: impl Into<String>) -> Self {
        LedgerError::Corrupt {
            path: path.to_path_buf(),
            line,
            reason: reason.into(),
        }
    }
}

#[derive(Debug, Error)]
pub enum SearchError {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Ledger(#[from] LedgerError),
    #[error(transparent)]
    Gss(#[from] GssError),
    #[error("ledger {0} already holds records; pass resume to continue it or choose a new path")]
    LedgerExists(PathBuf),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
}

// ---------------------------------------------------------------------------
// Evaluators
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SurfaceKind {
    /// `height·(1 − ((r − peak)/width)²)`
    Quadratic,
    /// Piecewise-linear peak, falling to zero `width` to the left and
    /// `width/2` to the right of the peak.
    Tent,
}

impl FromStr for SurfaceKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "quadratic" => Ok(SurfaceKind::Quadratic),
            "tent" => Ok(SurfaceKind::Tent),
            other => Err(format!("unknown surface kind {other:?} (expected quadratic or tent)")),
        }
    }
}

impl fmt::Display for SurfaceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SurfaceKind::Quadratic => "quadratic",
            SurfaceKind::Tent => "tent",
        })
    }
}

/// Unimodal stand-in for a training run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSurface {
    pub kind: SurfaceKind,
    pub peak: f64,
    pub height: f64,
    /// Half-width: distance from the peak at which the score reaches 0.
    pub width: f64,
    pub noise_sd: f64,
    pub noise_seed: u64,
}

impl SyntheticSurface {
    pub fn quadratic(peak: f64, height: f64, width: f64) -> Self {
        Self {
            kind: SurfaceKind::Quadratic,
            peak,
            height,
            width,
            noise_sd: 0.0,
            noise_seed: 0,
        }
    }

    pub fn with_noise(mut self, sd: f64, seed: u64) -> Self {
        self.noise_sd = sd;
        self.noise_seed = seed;
        self
    }

    pub fn validate(&self) -> Result<(), EvalError> {
        if !(0.0..=1.0).contains(&self.peak) {
            return Err(EvalError::Invalid(format!("peak {} outside [0, 1]", self.peak)));
        }
        if !(self.width > 0.0) || !self.width.is_finite() {
            return Err(EvalError::Invalid(format!("width {} must be positive", self.width)));
        }
        if !(self.noise_sd >= 0.0) || !self.noise_sd.is_finite() {
            return Err(EvalError::Invalid(format!("noise sd {} must be ≥ 0", self.noise_sd)));
        }
        if !self.height.is_finite() {
            return Err(EvalError::Invalid("height must be finite".into()));
        }
        Ok(())
    }

    /// Noiseless score, clipped to `[0, 1]`.
    pub fn value(&self, r: f64) -> f64 {
        let dist = r - self.peak;
        let raw = match self.kind {
            SurfaceKind::Quadratic => self.height * (1.0 - (dist / self.width).powi(2)),
            SurfaceKind::Tent => {
                let span = if dist <= 0.0 { self.width } else { self.width / 2.0 };
                self.height * (1.0 - dist.abs() / span)
            }
        };
        raw.clamp(0.0, 1.0)
    }

    /// Score with Gaussian noise drawn from a stream keyed by
    /// `(noise_seed, r, attempt_seed)`.
    pub fn sample(&self, r: f64, attempt_seed: u64) -> f64 {
        let clean = self.value(r);
        if self.noise_sd == 0.0 {
            return clean;
        }
        let key = mix64(mix64(self.noise_seed ^ r.to_bits()) ^ attempt_seed);
        let z: f64 = StandardNormal.sample(&mut ChaCha8Rng::seed_from_u64(key));
        clean + self.noise_sd * z
    }
}

/// External evaluator: a shell command template.
///
/// `{r}` is replaced by the intensity (shortest round-trip decimal),
/// `{seed}` by the attempt seed, and `{m}` / `{n}` by the magnitude and
/// count of a two-dimensional grid point. The score is the last non-empty
/// line of standard output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommandEvaluator {
    pub template: String,
    pub timeout: Option<Duration>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum EvaluatorSpec {
    Command(CommandEvaluator),
    Synthetic(SyntheticSurface),
}

impl EvaluatorSpec {
    pub fn command(template: impl Into<String>, timeout: Option<Duration>) -> Result<Self, EvalError> {
        let template = template.into();
        if !template.contains("{r}") {
            return Err(EvalError::Invalid(format!(
                "command template {template:?} must contain {{r}}"
            )));
        }
        Ok(EvaluatorSpec::Command(CommandEvaluator { template, timeout }))
    }

    pub fn synthetic(surface: SyntheticSurface) -> Result<Self, EvalError> {
        surface.validate()?;
        Ok(EvaluatorSpec::Synthetic(surface))
    }

    /// Short description stored with every ledger record.
    pub fn identity(&self) -> String {
        match self {
            EvaluatorSpec::Command(c) => format!("cmd:{}", c.template),
            EvaluatorSpec::Synthetic(s) => format!(
                "synthetic:{}(peak={},height={},width={},noise={},seed={})",
                s.kind, s.peak, s.height, s.width, s.noise_sd, s.noise_seed
            ),
        }
    }
}

/// A point to evaluate. Two-dimensional grid points carry the magnitude `m`
/// and count `n` they were built from, with `r = m/10`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalPoint {
    pub r: f64,
    pub m: Option<u32>,
    pub n: Option<u32>,
}

impl EvalPoint {
    pub fn r(r: f64) -> Self {
        Self { r, m: None, n: None }
    }

    pub fn mn(m: u32, n: u32) -> Self {
        Self {
            r: m as f64 / 10.0,
            m: Some(m),
            n: Some(n),
        }
    }

    /// Position on the intensity axis used by the synthetic surfaces: the
    /// mean of `m/10` and `n/10` for grid points, else `r`.
    fn surface_r(&self) -> f64 {
        match (self.m, self.n) {
            (Some(m), Some(n)) => (m as f64 + n as f64) / 20.0,
            _ => self.r,
        }
    }
}

/// Scores intensity `r`.
pub fn evaluate(spec: &EvaluatorSpec, r: f64, attempt_seed: u64) -> Result<f64, EvalError> {
    evaluate_point(spec, &EvalPoint::r(r), attempt_seed)
}

pub fn evaluate_point(spec: &EvaluatorSpec, point: &EvalPoint, attempt_seed: u64) -> Result<f64, EvalError> {
    if !(0.0..=1.0).contains(&point.r) {
        return Err(EvalError::Domain(point.r));
    }
    match spec {
        EvaluatorSpec::Synthetic(s) => Ok(s.sample(point.surface_r(), attempt_seed)),
        EvaluatorSpec::Command(c) => {
            let mut cmd = c.template.replace("{r}", &point.r.to_string());
            cmd = cmd.replace("{seed}", &attempt_seed.to_string());
            if let Some(m) = point.m {
                cmd = cmd.replace("{m}", &m.to_string());
            }
            if let Some(n) = point.n {
                cmd = cmd.replace("{n}", &n.to_string());
            }
            let out = run_shell(&cmd, c.timeout)?;
            parse_score(&out)
        }
    }
}

/// Parses the last non-empty line as a finite decimal number.
pub fn parse_score(stdout: &str) -> Result<f64, EvalError> {
    let line = stdout
        .lines()
        .map(str::trim)
        .rfind(|l| !l.is_empty())
        .unwrap_or("");
    match line.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(EvalError::Parse { line: line.to_string() }),
    }
}

fn spawn_reader<R: Read + Send + 'static>(mut src: R) -> std::thread::JoinHandle<Vec<u8>> {
    std::thread::spawn(move || {
        let mut buf = Vec::new();
        let _ = src.read_to_end(&mut buf);
        buf
    })
}

#[cfg(unix)]
fn kill_tree(child: &mut std::process::Child) {
    // the command runs in its own process group; take the whole group down
    unsafe {
        libc::kill(-(child.id() as i32), libc::SIGKILL);
    }
    let _ = child.kill();
}

#[cfg(not(unix))]
fn kill_tree(child: &mut std::process::Child) {
    let _ = child.kill();
}

fn run_shell(cmd: &str, timeout: Option<Duration>) -> Result<String, EvalError> {
    let mut command = if cfg!(windows) {
        let mut c = Command::new("cmd");
        c.args(["/C", cmd]);
        c
    } else {
        let mut c = Command::new("sh");
        c.args(["-c", cmd]);
        c
    };
    command.stdin(Stdio::null()).stdout(Stdio::piped()).stderr(Stdio::piped());
    #[cfg(unix)]
    {
        use std::os::unix::process::CommandExt;
        command.process_group(0);
    }
    let mut child = command.spawn().map_err(EvalError::Spawn)?;
    let stdout = spawn_reader(child.stdout.take().expect("piped stdout"));
    let stderr = spawn_reader(child.stderr.take().expect("piped stderr"));

    let start = Instant::now();
    let status = loop {
        if let Some(status) = child.try_wait().map_err(EvalError::Spawn)? {
            break status;
        }
        if let Some(limit) = timeout {
            if start.elapsed() >= limit {
                kill_tree(&mut child);
                let _ = child.wait();
                return Err(EvalError::Timeout(limit));
            }
        }
        std::thread::sleep(Duration::from_millis(2));
    };
    let stdout = String::from_utf8_lossy(&stdout.join().unwrap_or_default()).into_owned();
    let stderr = String::from_utf8_lossy(&stderr.join().unwrap_or_default()).into_owned();
    if !status.success() {
        return Err(EvalError::CommandFailed {
            status: status.to_string(),
            stdout,
            stderr,
        });
    }
    Ok(stdout)
}

// ---------------------------------------------------------------------------
// Ledger
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub r: f64,
    pub score: f64,
    pub ordinal: u64,
    pub wall_time_s: f64,
    pub evaluator: String,
    pub timestamp: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<u32>,
}

fn now_iso8601() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

/// Appends one JSON line and flushes it to the file.
pub fn ledger_append(path: &Path, record: &EvalRecord) -> Result<(), LedgerError> {
    let mut line = serde_json::to_string(record).expect("records always serialize");
    line.push('\n');
    let mut file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| LedgerError::io(path, e))?;
    file.write_all(line.as_bytes())
        .and_then(|_| file.flush())
        .map_err(|e| LedgerError::io(path, e))
}

/// Reads every record; ordinals must run 1, 2, 3, … Blank lines are skipped.
pub fn ledger_load(path: &Path) -> Result<Vec<EvalRecord>, LedgerError> {
    let file = File::open(path).map_err(|e| LedgerError::io(path, e))?;
    let mut records = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| LedgerError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: EvalRecord = serde_json::from_str(&line).map_err(|e| LedgerError::corrupt(path, i + 1, e.to_string()))?;
        let expected = records.len() as u64 + 1;
        if rec.ordinal != expected {
            return Err(LedgerError::corrupt(
                path,
                i + 1,
                format!("ordinal {} where {expected} was expected", rec.ordinal),
            ));
        }
        records.push(rec);
    }
    Ok(records)
}

fn ledger_is_empty(path: &Path) -> Result<bool, LedgerError> {
    match std::fs::metadata(path) {
        Ok(meta) => Ok(meta.len() == 0),
        Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(true),
        Err(e) => Err(LedgerError::io(path, e)),
    }
}

// ---------------------------------------------------------------------------
// Searches
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchReport {
    pub best_r: f64,
    pub best_score: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub best_m: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub best_n: Option<u32>,
    pub records: Vec<EvalRecord>,
}

impl SearchReport {
    /// `(r, score)` pairs in record order.
    pub fn evaluations(&self) -> Vec<(f64, f64)> {
        self.records.iter().map(|rec| (rec.r, rec.score)).collect()
    }

    /// True when both reports describe the same search outcome, ignoring
    /// wall times and timestamps.
    pub fn same_outcome(&self, other: &SearchReport) -> bool {
        let key = |r: &SearchReport| {
            (
                r.best_r.to_bits(),
                r.best_score.to_bits(),
                r.best_m,
                r.best_n,
                r.records
                    .iter()
                    .map(|e| (e.ordinal, e.r.to_bits(), e.score.to_bits(), e.m, e.n))
                    .collect::<Vec<_>>(),
            )
        };
        key(self) == key(other)
    }

    /// Plain-text table of the evaluations followed by the best point.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let two_d = self.records.iter().any(|r| r.m.is_some());
        if two_d {
            out.push_str("  #     M   N        r        score   wall(s)\n");
        } else {
            out.push_str("  #          r        score   wall(s)\n");
        }
        for rec in &self.records {
            if two_d {
                out.push_str(&format!(
                    "{:>3}  {:>4} {:>3}  {:>7.4}  {:>11.6}  {:>8.3}\n",
                    rec.ordinal,
                    rec.m.unwrap_or(0),
                    rec.n.unwrap_or(0),
                    rec.r,
                    rec.score,
                    rec.wall_time_s
                ));
            } else {
                out.push_str(&format!(
                    "{:>3}  {:>9.6}  {:>11.6}  {:>8.3}\n",
                    rec.ordinal, rec.r, rec.score, rec.wall_time_s
                ));
            }
        }
        match (self.best_m, self.best_n) {
            (Some(m), Some(n)) => out.push_str(&format!(
                "best: M = {m}, N = {n} (r = {}), score = {}\n",
                self.best_r, self.best_score
            )),
            _ => out.push_str(&format!("best r = {}, score = {}\n", self.best_r, self.best_score)),
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GssOptions {
    pub max_iter: u32,
    /// Passed to every evaluation as the attempt seed.
    pub seed: u64,
    /// Continue an existing ledger instead of requiring a fresh one.
    pub resume: bool,
}

impl Default for GssOptions {
    fn default() -> Self {
        Self {
            max_iter: crate::gss::DEFAULT_MAX_ITER,
            seed: 0,
            resume: false,
        }
    }
}

fn timed_eval(spec: &EvaluatorSpec, point: &EvalPoint, seed: u64) -> Result<(f64, f64), EvalError> {
    let start = Instant::now();
    let score = evaluate_point(spec, point, seed)?;
    Ok((score, start.elapsed().as_secs_f64()))
}

/// Golden-section search for the best intensity on `[0, 1]`.
///
/// A fresh run performs exactly `max_iter + 2` evaluations. With
/// `resume`, the records already in the ledger are replayed in place of
/// evaluations; each must match the probe the search would request next.
pub fn run_gss_search(spec: &EvaluatorSpec, opts: &GssOptions, ledger: &Path) -> Result<SearchReport, SearchError> {
    let mut records = if opts.resume && ledger.exists() {
        ledger_load(ledger)?
    } else {
        if !ledger_is_empty(ledger)? {
            return Err(SearchError::LedgerExists(ledger.to_path_buf()));
        }
        Vec::new()
    };
    let total = opts.max_iter as usize + 2;
    if records.len() > total {
        return Err(LedgerError::corrupt(
            ledger,
            total + 1,
            format!("{} records exceed the {total}-evaluation budget", records.len()),
        )
        .into());
    }
    let evaluator = spec.identity();
    for (i, rec) in records.iter().enumerate() {
        if rec.evaluator != evaluator {
            return Err(LedgerError::corrupt(
                ledger,
                i + 1,
                format!("recorded evaluator {:?} differs from {evaluator:?}", rec.evaluator),
            )
            .into());
        }
    }

    let (mut state, _) = GssState::init(0.0, 1.0)?;
    for k in 0..total {
        if k >= 2 {
            state.step()?;
        }
        let (_, x) = state.pending().expect("a probe is pending after init or step");
        let score = match records.get(k) {
            Some(rec) => {
                if rec.r != x {
                    return Err(LedgerError::corrupt(
                        ledger,
                        k + 1,
                        format!("recorded r = {} but the search probes r = {x}", rec.r),
                    )
                    .into());
                }
                rec.score
            }
            None => {
                let (score, wall) = timed_eval(spec, &EvalPoint::r(x), opts.seed)?;
                let rec = EvalRecord {
                    r: x,
                    score,
                    ordinal: k as u64 + 1,
                    wall_time_s: wall,
                    evaluator: evaluator.clone(),
                    timestamp: now_iso8601(),
                    m: None,
                    n: None,
                };
                ledger_append(ledger, &rec)?;
                records.push(rec);
                score
            }
        };
        state.supply(score)?;
    }
    let (best_r, best_score) = state.best()?;
    Ok(SearchReport {
        best_r,
        best_score,
        best_m: None,
        best_n: None,
        records,
    })
}

/// Points evaluated by [`run_grid`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum GridSpec {
    /// Explicit intensities, evaluated in ascending order.
    Points(Vec<f64>),
    /// `r ∈ {1/k, 2/k, …, 1}`.
    Diagonal(u32),
    /// Magnitude × count grid, row-major (M outer, N inner); M and N in 1..=10.
    Mn { m: Vec<u32>, n: Vec<u32> },
}

impl GridSpec {
    pub fn points(&self) -> Result<Vec<EvalPoint>, SearchError> {
        let invalid = |msg: String| Err(SearchError::InvalidGrid(msg));
        match self {
            GridSpec::Points(rs) => {
                if rs.is_empty() {
                    return invalid("no points".into());
                }
                if let Some(bad) = rs.iter().find(|r| !(0.0..=1.0).contains(*r)) {
                    return invalid(format!("r = {bad} outside [0, 1]"));
                }
                let mut rs = rs.clone();
                rs.sort_by(f64::total_cmp);
                Ok(rs.into_iter().map(EvalPoint::r).collect())
            }
            GridSpec::Diagonal(k) => {
                if *k == 0 {
                    return invalid("diagonal needs at least one point".into());
                }
                Ok((1..=*k).map(|i| EvalPoint::r(i as f64 / *k as f64)).collect())
            }
            GridSpec::Mn { m, n } => {
                if m.is_empty() || n.is_empty() {
                    return invalid("empty M or N range".into());
                }
                if let Some(bad) = m.iter().chain(n).find(|v| !(1..=10).contains(*v)) {
                    return invalid(format!("M and N must lie in 1..=10, got {bad}"));
                }
                Ok(m.iter()
                    .flat_map(|&mv| n.iter().map(move |&nv| EvalPoint::mn(mv, nv)))
                    .collect())
            }
        }
    }
}

/// `true` when `a` beats `b`: higher score, ties to smaller r, then M, then N.
fn better(a: &EvalRecord, b: &EvalRecord) -> bool {
    let score = |s: f64| if s.is_nan() { f64::NEG_INFINITY } else { s };
    match score(a.score).total_cmp(&score(b.score)) {
        std::cmp::Ordering::Greater => true,
        std::cmp::Ordering::Less => false,
        std::cmp::Ordering::Equal => {
            (a.r, a.m.unwrap_or(0), a.n.unwrap_or(0)) < (b.r, b.m.unwrap_or(0), b.n.unwrap_or(0))
        }
    }
}

/// Evaluates every grid point, up to `jobs` at a time.
///
/// Ledger lines are written as evaluations complete; the report lists
/// records in grid order.
pub fn run_grid(
    spec: &EvaluatorSpec,
    grid: &GridSpec,
    ledger: &Path,
    jobs: usize,
    seed: u64,
) -> Result<SearchReport, SearchError> {
    let points = grid.points()?;
    if !ledger_is_empty(ledger)? {
        return Err(SearchError::LedgerExists(ledger.to_path_buf()));
    }
    let evaluator = spec.identity();
    let jobs = jobs.clamp(1, points.len());
    let next = AtomicUsize::new(0);
    let stop = AtomicBool::new(false);
    let (tx, rx) = mpsc::channel();

    let mut slots: Vec<Option<EvalRecord>> = vec![None; points.len()];
    let mut failure: Option<SearchError> = None;

    std::thread::scope(|scope| {
        for _ in 0..jobs {
            let tx = tx.clone();
            let (points, next, stop) = (&points, &next, &stop);
            scope.spawn(move || loop {
                if stop.load(Ordering::Relaxed) {
                    break;
                }
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(point) = points.get(i) else { break };
                if tx.send((i, timed_eval(spec, point, seed))).is_err() {
                    break;
                }
            });
        }
        drop(tx);

        let mut ordinal = 0u64;
        for (i, outcome) in rx {
            if failure.is_some() {
                continue;
            }
            let (score, wall) = match outcome {
                Ok(v) => v,
                Err(e) => {
                    stop.store(true, Ordering::Relaxed);
                    failure = Some(e.into());
                    continue;
                }
            };
            ordinal += 1;
            let rec = EvalRecord {
                r: points[i].r,
                score,
                ordinal,
                wall_time_s: wall,
                evaluator: evaluator.clone(),
                timestamp: now_iso8601(),
                m: points[i].m,
                n: points[i].n,
            };
            if let Err(e) = ledger_append(ledger, &rec) {
                stop.store(true, Ordering::Relaxed);
                failure = Some(e.into());
                continue;
            }
            slots[i] = Some(rec);
        }
    });

    if let Some(e) = failure {
        return Err(e);
    }
    let records: Vec<EvalRecord> = slots.into_iter().map(|r| r.expect("every point evaluated")).collect();
    let best = records
        .iter()
        .fold(None::<&EvalRecord>, |best, rec| match best {
            Some(b) if !better(rec, b) => Some(b),
            _ => Some(rec),
        })
        .expect("grid is non-empty");
    let (best_r, best_score, best_m, best_n) = (best.r, best.score, best.m, best.n);
    Ok(SearchReport {
        best_r,
        best_score,
        best_m,
        best_n,
        records,
    })
}
