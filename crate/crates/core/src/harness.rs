//! Experiment configuration, seeded sweeps with resumable CSV output, and
//! the per-mode runners behind the command-line tool.

use std::fmt::Write as _;
use std::fs::{self, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;

use crate::divergence::{format_real, information_metric, DivergenceReport};
use crate::error::{ConfigIssue, GsbmError, Result};
use crate::oracle::flip_bad_census;
use crate::partition::{
    suggest_parameters, validate_parameters, vertex_visibility_connected, BlockGrid, ValidationReport,
    VisibilityGraph, DEFAULT_DELTA_FACTOR,
};
use crate::profiles::{as_f64, Profile, ProfileSpec};
use crate::recovery::{agreement, run_exact_recovery, tau};
use crate::sampler::{read_graph, sample, write_graph, GsbmGraph};
use crate::seeds::trial_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Metric,
    Sample,
    Recover,
    Sweep,
    Genie,
    Flipbad,
    Connectivity,
}

impl Mode {
    pub const ALL: [Mode; 7] = [
        Mode::Metric,
        Mode::Sample,
        Mode::Recover,
        Mode::Sweep,
        Mode::Genie,
        Mode::Flipbad,
        Mode::Connectivity,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Metric => "metric",
            Mode::Sample => "sample",
            Mode::Recover => "recover",
            Mode::Sweep => "sweep",
            Mode::Genie => "genie",
            Mode::Flipbad => "flipbad",
            Mode::Connectivity => "connectivity",
        }
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Mode::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| format!("unknown mode `{s}`"))
    }
}

const KEYS: &[&str] = &[
    "mode",
    "d",
    "lambda",
    "r",
    "profile",
    "n",
    "chi",
    "chi0",
    "delta",
    "eps",
    "delta_factor",
    "trials",
    "seed",
    "output",
    "graph",
    "timing",
];

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub d: usize,
    pub lambda: f64,
    /// Support cutoff; only needed when no profile is given.
    pub r: Option<f64>,
    pub profile: Option<ProfileSpec>,
    pub n: Vec<f64>,
    pub chi: Option<f64>,
    pub chi0: Option<f64>,
    pub delta: Option<f64>,
    pub eps: Option<f64>,
    pub delta_factor: f64,
    pub trials: u64,
    pub seed: u64,
    pub output: Option<PathBuf>,
    pub graph: Option<PathBuf>,
    /// Record wall time per trial. Off by default so output is reproducible.
    pub timing: bool,
}

impl ExperimentConfig {
    pub fn new(mode: Mode, d: usize, lambda: f64, profile: ProfileSpec, n: Vec<f64>) -> Self {
        Self {
            mode,
            d,
            lambda,
            r: None,
            profile: Some(profile),
            n,
            chi: None,
            chi0: None,
            delta: None,
            eps: None,
            delta_factor: DEFAULT_DELTA_FACTOR,
            trials: 1,
            seed: 0,
            output: None,
            graph: None,
            timing: false,
        }
    }

    /// Parses flat `key = value` text; every problem found is reported with
    /// its line number.
    pub fn parse(text: &str) -> Result<Self> {
        let table: toml::Table = text.parse().map_err(|e: toml::de::Error| {
            let line = e.span().map(|s| line_of(text, s.start));
            GsbmError::Config(vec![ConfigIssue {
                line,
                message: e.message().trim().to_string(),
            }])
        })?;
        let mut issues = Vec::new();
        let mut issue = |key: &str, message: String| {
            issues.push(ConfigIssue {
                line: key_line(text, key),
                message,
            })
        };
        for key in table.keys() {
            if !KEYS.contains(&key.as_str()) {
                issue(key, format!("unknown key `{key}`"));
            }
        }

        let number = |key: &str, issue: &mut dyn FnMut(&str, String)| -> Option<f64> {
            let v = table.get(key)?;
            let x = as_f64(v);
            if x.is_none() {
                issue(key, format!("`{key}` must be a number"));
            }
            x
        };
        let integer = |key: &str, issue: &mut dyn FnMut(&str, String)| -> Option<u64> {
            let v = table.get(key)?;
            match v.as_integer() {
                Some(i) if i >= 0 => Some(i as u64),
                _ => {
                    issue(key, format!("`{key}` must be a non-negative integer"));
                    None
                }
            }
        };
        let path = |key: &str, issue: &mut dyn FnMut(&str, String)| -> Option<PathBuf> {
            let v = table.get(key)?;
            match v.as_str() {
                Some(s) => Some(PathBuf::from(s)),
                None => {
                    issue(key, format!("`{key}` must be a string path"));
                    None
                }
            }
        };

        let mode = match table.get("mode") {
            None => {
                issue("mode", "missing required key `mode`".into());
                None
            }
            Some(v) => match v.as_str().map(str::parse::<Mode>) {
                Some(Ok(m)) => Some(m),
                Some(Err(e)) => {
                    issue("mode", e);
                    None
                }
                None => {
                    issue("mode", "`mode` must be a string".into());
                    None
                }
            },
        };

        let d = integer("d", &mut issue);
        if d == Some(0) {
            issue("d", "constraint violated: d >= 1".into());
        }
        let lambda = number("lambda", &mut issue);
        if let Some(l) = lambda {
            if !(l > 0.0 && l.is_finite()) {
                issue("lambda", format!("constraint violated: lambda > 0 (got {l})"));
            }
        }
        let r = number("r", &mut issue);
        if let Some(r) = r {
            if !(r > 0.0 && r.is_finite()) {
                issue("r", format!("constraint violated: r > 0 (got {r})"));
            }
        }
        let profile = table.get("profile").and_then(|v| match ProfileSpec::from_toml(v) {
            Ok(spec) => match spec.build() {
                Ok(_) => Some(spec),
                Err(e) => {
                    issue("profile", e.to_string());
                    None
                }
            },
            Err(e) => {
                issue("profile", e);
                None
            }
        });
        if let (Some(r), Some(spec)) = (r, &profile) {
            if spec.r() != r {
                issue("r", format!("r = {r} disagrees with the profile's r = {}", spec.r()));
            }
        }

        let n = match table.get("n") {
            None => Vec::new(),
            Some(toml::Value::Array(items)) => {
                let parsed: Option<Vec<f64>> = items.iter().map(as_f64).collect();
                match parsed {
                    Some(list) if !list.is_empty() => list,
                    Some(_) => {
                        issue("n", "constraint violated: n list must be nonempty".into());
                        Vec::new()
                    }
                    None => {
                        issue("n", "`n` must be a number or a list of numbers".into());
                        Vec::new()
                    }
                }
            }
            Some(v) => match as_f64(v) {
                Some(x) => vec![x],
                None => {
                    issue("n", "`n` must be a number or a list of numbers".into());
                    Vec::new()
                }
            },
        };
        if let Some(bad) = n.iter().find(|x| !(**x > 1.0 && x.is_finite())) {
            issue("n", format!("constraint violated: n > 1 (got {bad})"));
        }

        let positive = |key: &str, issue: &mut dyn FnMut(&str, String), allow_zero: bool| {
            let x = number(key, issue)?;
            let ok = if allow_zero { x >= 0.0 } else { x > 0.0 };
            if !ok || !x.is_finite() {
                let op = if allow_zero { ">=" } else { ">" };
                issue(key, format!("constraint violated: {key} {op} 0 (got {x})"));
            }
            Some(x)
        };
        let chi = positive("chi", &mut issue, false);
        let chi0 = positive("chi0", &mut issue, false);
        let delta = positive("delta", &mut issue, true);
        let eps = positive("eps", &mut issue, false);
        let delta_factor = positive("delta_factor", &mut issue, false).unwrap_or(DEFAULT_DELTA_FACTOR);
        let trials = integer("trials", &mut issue).unwrap_or(1);
        if trials == 0 {
            issue("trials", "constraint violated: trials >= 1".into());
        }
        let seed = integer("seed", &mut issue).unwrap_or(0);
        let output = path("output", &mut issue);
        let graph = path("graph", &mut issue);
        let timing = match table.get("timing") {
            None => false,
            Some(v) => v.as_bool().unwrap_or_else(|| {
                issue("timing", "`timing` must be true or false".into());
                false
            }),
        };

        if let Some(mode) = mode {
            let mut require = |key: &str, present: bool| {
                if !present {
                    issue(key, format!("mode `{}` requires `{key}`", mode.as_str()));
                }
            };
            match mode {
                Mode::Recover => {
                    require("profile", table.contains_key("profile"));
                    require("graph", table.contains_key("graph"));
                }
                Mode::Metric => {
                    require("d", table.contains_key("d"));
                    require("lambda", table.contains_key("lambda"));
                    require("profile", table.contains_key("profile"));
                }
                Mode::Connectivity => {
                    require("d", table.contains_key("d"));
                    require("lambda", table.contains_key("lambda"));
                    require("r` or `profile", table.contains_key("profile") || table.contains_key("r"));
                    require("n", table.contains_key("n"));
                }
                _ => {
                    require("d", table.contains_key("d"));
                    require("lambda", table.contains_key("lambda"));
                    require("profile", table.contains_key("profile"));
                    require("n", table.contains_key("n"));
                }
            }
            if matches!(mode, Mode::Sample | Mode::Genie | Mode::Connectivity) && n.len() > 1 {
                issue("n", format!("mode `{}` takes a single n", mode.as_str()));
            }
        }

        if !issues.is_empty() {
            issues.sort_by_key(|i| i.line.unwrap_or(usize::MAX));
            return Err(GsbmError::Config(issues));
        }
        Ok(Self {
            mode: mode.expect("checked above"),
            d: d.unwrap_or(1) as usize,
            lambda: lambda.unwrap_or(1.0),
            r,
            profile,
            n,
            chi,
            chi0,
            delta,
            eps,
            delta_factor,
            trials,
            seed,
            output,
            graph,
            timing,
        })
    }

    /// Config text in the same flat format; `parse` inverts it.
    pub fn to_config_string(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "mode = \"{}\"", self.mode.as_str());
        let _ = writeln!(out, "d = {}", self.d);
        let _ = writeln!(out, "lambda = {:?}", self.lambda);
        if let Some(r) = self.r {
            let _ = writeln!(out, "r = {r:?}");
        }
        if let Some(p) = &self.profile {
            let _ = writeln!(out, "profile = {p}");
        }
        if !self.n.is_empty() {
            let items: Vec<String> = self.n.iter().map(|x| format!("{x:?}")).collect();
            let _ = writeln!(out, "n = [{}]", items.join(", "));
        }
        for (key, value) in [("chi", self.chi), ("chi0", self.chi0), ("delta", self.delta), ("eps", self.eps)] {
            if let Some(v) = value {
                let _ = writeln!(out, "{key} = {v:?}");
            }
        }
        let _ = writeln!(out, "delta_factor = {:?}", self.delta_factor);
        let _ = writeln!(out, "trials = {}", self.trials);
        let _ = writeln!(out, "seed = {}", self.seed);
        for (key, value) in [("output", &self.output), ("graph", &self.graph)] {
            if let Some(p) = value {
                let _ = writeln!(out, "{key} = {}", toml::Value::String(p.display().to_string()));
            }
        }
        if self.timing {
            let _ = writeln!(out, "timing = true");
        }
        out
    }

    pub fn profile(&self) -> Result<Profile> {
        match &self.profile {
            Some(spec) => spec.build(),
            None => Err(GsbmError::InvalidArgument("config has no profile".into())),
        }
    }

    /// Support cutoff from the profile, else the `r` key.
    pub fn support(&self) -> Result<f64> {
        match (&self.profile, self.r) {
            (Some(spec), _) => Ok(spec.r()),
            (None, Some(r)) => Ok(r),
            (None, None) => Err(GsbmError::InvalidArgument("config has neither profile nor r".into())),
        }
    }

    /// Block constants to run with: explicit values where given, otherwise
    /// the suggested ones, plus the validation report for the final triple.
    pub fn block_params(&self, d: usize, lambda: f64, r: f64) -> Result<BlockParams> {
        let suggested = suggest_parameters(d, lambda, r, self.delta_factor);
        let pick = |given: Option<f64>, which: fn((f64, f64, f64)) -> f64, name: &str| {
            given.or(suggested.map(which)).ok_or_else(|| {
                GsbmError::InvalidArgument(format!(
                    "no admissible default for {name} at d = {d}, lambda = {lambda}, r = {r}; set it explicitly"
                ))
            })
        };
        let chi = pick(self.chi, |s| s.1, "chi")?;
        let chi0 = self.chi0.or(suggested.map(|s| s.0)).unwrap_or(chi);
        let delta = pick(self.delta, |s| s.2, "delta")?;
        let report = validate_parameters(d, lambda, r, chi, delta, chi0, self.delta_factor);
        Ok(BlockParams {
            chi,
            chi0,
            delta,
            report,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockParams {
    pub chi: f64,
    pub chi0: f64,
    pub delta: f64,
    pub report: ValidationReport,
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// First line assigning `key` at top level.
fn key_line(text: &str, key: &str) -> Option<usize> {
    text.lines().position(|line| {
        let line = line.trim_start();
        line.strip_prefix(key)
            .or_else(|| line.strip_prefix(&format!("\"{key}\"")))
            .is_some_and(|rest| rest.trim_start().starts_with('='))
    })
    .map(|i| i + 1)
}

/// One row of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult {
    pub seed: u64,
    pub n: f64,
    pub i: f64,
    pub status: String,
    pub agreement: f64,
    pub phase1_mistakes: usize,
    pub flip_bad_count: usize,
    pub block_connected: bool,
    pub vertex_connected: bool,
    pub elapsed_ms: u64,
}

impl TrialResult {
    pub const CSV_HEADER: [&'static str; 10] = [
        "seed",
        "n",
        "I",
        "status",
        "agreement",
        "phase1_mistakes",
        "flip_bad_count",
        "block_connected",
        "vertex_connected",
        "elapsed_ms",
    ];

    fn record(&self) -> [String; 10] {
        [
            self.seed.to_string(),
            format_real(self.n),
            format_real(self.i),
            self.status.clone(),
            format_real(self.agreement),
            self.phase1_mistakes.to_string(),
            self.flip_bad_count.to_string(),
            self.block_connected.to_string(),
            self.vertex_connected.to_string(),
            self.elapsed_ms.to_string(),
        ]
    }

    fn from_record(rec: &csv::StringRecord) -> Option<Self> {
        let get = |i: usize| rec.get(i);
        Some(Self {
            seed: get(0)?.parse().ok()?,
            n: get(1)?.parse().ok()?,
            i: get(2)?.parse().ok()?,
            status: get(3)?.to_string(),
            agreement: get(4)?.parse().ok()?,
            phase1_mistakes: get(5)?.parse().ok()?,
            flip_bad_count: get(6)?.parse().ok()?,
            block_connected: get(7)?.parse().ok()?,
            vertex_connected: get(8)?.parse().ok()?,
            elapsed_ms: get(9)?.parse().ok()?,
        })
    }
}

/// Samples one instance and runs recovery, the flip-bad census and both
/// connectivity checks on it.
pub fn run_trial(config: &ExperimentConfig, profile: &Profile, i: f64, n: f64, trial: u64) -> Result<TrialResult> {
    let clock = Instant::now();
    let seed = trial_seed(config.seed, n, trial);
    let graph = sample(config.lambda, n, profile, config.d, seed)?;
    let params = config.block_params(config.d, config.lambda, profile.r())?;
    let outcome = run_exact_recovery(&graph, params.chi, params.delta, config.eps)?;
    let census = flip_bad_census(&graph);
    let elapsed = clock.elapsed().as_millis() as u64;
    Ok(TrialResult {
        seed,
        n,
        i,
        status: outcome.status.as_str().to_string(),
        agreement: agreement(&outcome.labeling.values, graph.labels())?,
        phase1_mistakes: outcome.mistakes_phase1,
        flip_bad_count: census.count,
        block_connected: outcome.status == crate::recovery::Status::Ok,
        vertex_connected: vertex_visibility_connected(&graph),
        elapsed_ms: if config.timing { elapsed } else { 0 },
    })
}

/// Keeps only whole lines of a partially written file and returns the rows
/// already present (header excluded).
fn resume_rows(path: &Path) -> Result<Vec<TrialResult>> {
    let mut bytes = fs::read(path)?;
    if let Some(last) = bytes.iter().rposition(|&b| b == b'\n') {
        if last + 1 != bytes.len() {
            bytes.truncate(last + 1);
            fs::write(path, &bytes)?;
        }
    } else {
        fs::write(path, b"")?;
        return Ok(Vec::new());
    }
    let mut reader = csv::Reader::from_reader(bytes.as_slice());
    let header = reader.headers()?.clone();
    if header.iter().ne(TrialResult::CSV_HEADER) {
        return Err(GsbmError::InvalidArgument(format!(
            "{} does not look like a sweep file; refusing to append",
            path.display()
        )));
    }
    reader
        .records()
        .map(|rec| {
            let rec = rec?;
            TrialResult::from_record(&rec)
                .ok_or_else(|| GsbmError::InvalidArgument(format!("malformed row in {}", path.display())))
        })
        .collect()
}

/// Every `(n, trial)` pair in output order. Trials of a chunk run in
/// parallel; rows are appended (and flushed) in order, and an existing
/// output file is resumed after its last complete row.
pub fn run_sweep(config: &ExperimentConfig, output: Option<&Path>) -> Result<Vec<TrialResult>> {
    let profile = config.profile()?;
    let i = information_metric(&profile, config.lambda, config.d)?.i;
    let tasks: Vec<(f64, u64)> = config
        .n
        .iter()
        .flat_map(|&n| (0..config.trials).map(move |t| (n, t)))
        .collect();

    let mut results = Vec::new();
    let mut writer = match output {
        Some(path) => {
            if path.exists() && fs::metadata(path)?.len() > 0 {
                results = resume_rows(path)?;
            }
            let fresh = !path.exists() || fs::metadata(path)?.len() == 0;
            let file = OpenOptions::new().create(true).append(true).open(path)?;
            let mut w = csv::Writer::from_writer(file);
            if fresh {
                w.write_record(TrialResult::CSV_HEADER)?;
                w.flush()?;
            }
            Some(w)
        }
        None => None,
    };
    if results.len() > tasks.len() {
        return Err(GsbmError::InvalidArgument(format!(
            "output already holds {} rows but the config asks for {}",
            results.len(),
            tasks.len()
        )));
    }

    let chunk = rayon::current_num_threads().max(1);
    for batch in tasks[results.len()..].chunks(chunk) {
        let rows: Vec<TrialResult> = batch
            .par_iter()
            .map(|&(n, t)| run_trial(config, &profile, i, n, t))
            .collect::<Result<_>>()?;
        if let Some(w) = writer.as_mut() {
            for row in &rows {
                w.write_record(row.record())?;
            }
            w.flush()?;
        }
        results.extend(rows);
    }
    Ok(results)
}

/// Writes sweep rows as CSV.
pub fn write_trials<W: Write>(rows: &[TrialResult], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TrialResult::CSV_HEADER)?;
    for row in rows {
        w.write_record(row.record())?;
    }
    w.flush()?;
    Ok(())
}

pub fn run_metric<W: Write>(config: &ExperimentConfig, mut out: W) -> Result<DivergenceReport> {
    let report = information_metric(&config.profile()?, config.lambda, config.d)?;
    writeln!(out, "{}", DivergenceReport::CSV_HEADER)?;
    writeln!(out, "{}", report.csv_row())?;
    Ok(report)
}

/// Samples one graph at the first `n` with the config seed as-is.
pub fn run_sample<W: Write>(config: &ExperimentConfig, out: W) -> Result<GsbmGraph> {
    let graph = sample(config.lambda, config.n[0], &config.profile()?, config.d, config.seed)?;
    write_graph(&graph, out)?;
    Ok(graph)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecoverSummary {
    pub status: String,
    pub agreement: f64,
    pub phase1_mistakes: usize,
    pub elapsed_ms: u64,
    pub validation: ValidationReport,
}

impl RecoverSummary {
    pub const CSV_HEADER: &'static str = "status,agreement,phase1_mistakes,elapsed_ms";

    pub fn csv_row(&self) -> String {
        format!("{},{},{},{}", self.status, format_real(self.agreement), self.phase1_mistakes, self.elapsed_ms)
    }
}

/// Recovers the graph named by the config and writes per-vertex labels.
pub fn run_recover<W: Write>(config: &ExperimentConfig, out: W) -> Result<RecoverSummary> {
    let path = config
        .graph
        .as_ref()
        .ok_or_else(|| GsbmError::InvalidArgument("recover needs `graph`".into()))?;
    let profile = config.profile()?;
    let graph = read_graph(BufReader::new(fs::File::open(path)?), &profile)?;
    let params = config.block_params(graph.d(), graph.lambda(), profile.r())?;
    let clock = Instant::now();
    let outcome = run_exact_recovery(&graph, params.chi, params.delta, config.eps)?;
    let elapsed = clock.elapsed().as_millis() as u64;

    let mut w = csv::Writer::from_writer(out);
    w.write_record(["vertex_id", "phase1_label", "phase2_label", "true_label"])?;
    for v in 0..graph.vertex_count() {
        w.write_record([
            v.to_string(),
            outcome.phase1.values[v].to_string(),
            outcome.labeling.values[v].to_string(),
            graph.labels()[v].to_string(),
        ])?;
    }
    w.flush()?;
    Ok(RecoverSummary {
        status: outcome.status.as_str().to_string(),
        agreement: agreement(&outcome.labeling.values, graph.labels())?,
        phase1_mistakes: outcome.mistakes_phase1,
        elapsed_ms: if config.timing { elapsed } else { 0 },
        validation: params.report,
    })
}

/// `tau(v, sigma*)` and the true label for every vertex of one sample.
pub fn run_genie<W: Write>(config: &ExperimentConfig, out: W) -> Result<()> {
    let graph = sample(config.lambda, config.n[0], &config.profile()?, config.d, config.seed)?;
    let taus: Vec<f64> = (0..graph.vertex_count())
        .into_par_iter()
        .map(|v| tau(&graph, graph.labels(), v))
        .collect();
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["vertex", "tau", "true_label"])?;
    for (v, t) in taus.iter().enumerate() {
        w.write_record([v.to_string(), format_real(*t), graph.labels()[v].to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Flip-bad counts for every `(n, trial)`.
pub fn run_flipbad<W: Write>(config: &ExperimentConfig, out: W) -> Result<Vec<(f64, u64, usize)>> {
    let profile = config.profile()?;
    let tasks: Vec<(f64, u64)> = config
        .n
        .iter()
        .flat_map(|&n| (0..config.trials).map(move |t| (n, trial_seed(config.seed, n, t))))
        .collect();
    let rows: Vec<(f64, u64, usize)> = tasks
        .par_iter()
        .map(|&(n, seed)| {
            let graph = sample(config.lambda, n, &profile, config.d, seed)?;
            Ok((n, seed, flip_bad_census(&graph).count))
        })
        .collect::<Result<_>>()?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["n", "seed", "count"])?;
    for (n, seed, count) in &rows {
        w.write_record([format_real(*n), seed.to_string(), count.to_string()])?;
    }
    w.flush()?;
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConnectivityRow {
    pub trial: u64,
    pub block_connected: bool,
    pub vertex_connected: bool,
    pub occupied_blocks: usize,
}

/// Block- and vertex-level connectivity over seeded trials at one `n`.
/// Without a profile, edges are irrelevant and an empty step profile of the
/// configured support is used.
pub fn run_connectivity<W: Write>(config: &ExperimentConfig, out: W) -> Result<Vec<ConnectivityRow>> {
    let profile = match &config.profile {
        Some(spec) => spec.build()?,
        None => Profile::step(1e-9, 2e-9, config.support()?)?,
    };
    let n = config.n[0];
    let params = config.block_params(config.d, config.lambda, profile.r())?;
    let rows: Vec<ConnectivityRow> = (0..config.trials)
        .into_par_iter()
        .map(|trial| {
            let graph = sample(config.lambda, n, &profile, config.d, trial_seed(config.seed, n, trial))?;
            let grid = BlockGrid::build(&graph, params.chi, params.delta)?;
            let blocks = VisibilityGraph::build(&grid, &graph);
            Ok(ConnectivityRow {
                trial,
                block_connected: blocks.is_connected(),
                vertex_connected: vertex_visibility_connected(&graph),
                occupied_blocks: blocks.nodes().len(),
            })
        })
        .collect::<Result<_>>()?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["trial", "block_connected", "vertex_connected", "occupied_blocks"])?;
    for row in &rows {
        w.write_record([
            row.trial.to_string(),
            row.block_connected.to_string(),
            row.vertex_connected.to_string(),
            row.occupied_blocks.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(rows)
}

/// Number of complete data rows in a CSV file with a header.
pub fn count_rows(path: &Path) -> Result<usize> {
    let reader = BufReader::new(fs::File::open(path)?);
    Ok(reader.lines().count().saturating_sub(1))
}
