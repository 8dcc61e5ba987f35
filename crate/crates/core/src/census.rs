//! Seeded Monte Carlo censuses of large adjacency eigenvalues.
//!
//! Sample `i` of a run draws its graph from `derive_seed(master_seed, i)`, so
//! a run with more samples extends a shorter one record for record. Records
//! are written in sample order whatever the worker count.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::graph::Graph;
use crate::models::{derive_seed, ModelError, ModelId};
use crate::spectral::{count_adjacency_eigenvalues_geq, threshold_profile, SpectralError, Tolerances};
use crate::traces::mean_stderr;

#[derive(Debug, thiserror::Error)]
pub enum CensusError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("invalid census configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdMode {
    /// Every eigenvalue `≥ 2(d−1)^{1/2}`, including `λ1 = d`.
    #[default]
    #[serde(rename = "at2sqrt")]
    AtLeast2Sqrt,
    /// Eigenvalues in `[2(d−1)^{1/2}, d)`: the non-Ramanujan ones together
    /// with any sitting exactly at the threshold.
    Strict,
}

impl ThresholdMode {
    pub fn name(self) -> &'static str {
        match self {
            ThresholdMode::AtLeast2Sqrt => "at2sqrt",
            ThresholdMode::Strict => "strict",
        }
    }
}

impl std::str::FromStr for ThresholdMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "at2sqrt" => Ok(Self::AtLeast2Sqrt),
            "strict" => Ok(Self::Strict),
            _ => Err(format!("unknown mode {s:?} (expected at2sqrt or strict)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CensusConfig {
    pub model: ModelId,
    /// File the cover base was read from, echoed for provenance.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub base_path: Option<String>,
    /// Degree; for covers, the base degree.
    pub d: usize,
    /// Vertex count, or the cover degree for covers.
    pub n: usize,
    pub samples: usize,
    pub master_seed: u64,
    pub mode: ThresholdMode,
    /// Absolute tolerance at the threshold.
    pub tol: f64,
    #[serde(skip)]
    pub workers: usize,
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

impl CensusConfig {
    pub fn new(model: ModelId, n: usize, d: usize, samples: usize, master_seed: u64) -> Self {
        let d = match &model {
            ModelId::Cover(base) => base.regular_degree().unwrap_or(d),
            _ => d,
        };
        Self {
            model,
            base_path: None,
            d,
            n,
            samples,
            master_seed,
            mode: ThresholdMode::AtLeast2Sqrt,
            tol: Tolerances::for_degree(d).threshold_tol,
            workers: 1,
            out: None,
        }
    }

    pub fn threshold(&self) -> f64 {
        2.0 * ((self.d - 1) as f64).sqrt()
    }

    pub fn validate(&self) -> Result<(), CensusError> {
        if self.samples == 0 {
            return Err(CensusError::Config("samples must be at least 1".into()));
        }
        if self.workers == 0 {
            return Err(CensusError::Config("workers must be at least 1".into()));
        }
        if !(self.tol >= 0.0) {
            return Err(CensusError::Config("tol must be non-negative".into()));
        }
        if let ModelId::Cover(base) = &self.model {
            match base.regular_degree() {
                Some(d) if d == self.d && d >= 3 => {}
                Some(d) => {
                    return Err(CensusError::Config(format!(
                        "cover base has degree {d}, config says {}",
                        self.d
                    )))
                }
                None => return Err(CensusError::Config("cover base must be regular".into())),
            }
        }
        self.model.validate(self.n, self.d)?;
        Ok(())
    }

    /// Aggregate JSON path next to a CSV output path.
    pub fn json_path(out: &Path) -> PathBuf {
        out.with_extension("json")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CensusRecord {
    pub sample: usize,
    pub seed: u64,
    /// `None` when the sample failed numerically.
    pub count: Option<usize>,
    /// Top two adjacency eigenvalues of the sampled (total) graph.
    pub lambda1: f64,
    pub lambda2: f64,
    /// For covers: the count over the base spectrum, which the total graph
    /// repeats as its old spectrum.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub old_count: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CensusResult {
    pub config: CensusConfig,
    pub mean: f64,
    pub stderr: f64,
    /// Successful samples.
    pub samples: usize,
    pub failures: usize,
    #[serde(skip)]
    pub records: Vec<CensusRecord>,
}

/// `%.12g`-style formatting.
pub fn format_sig12(x: f64) -> String {
    if !x.is_finite() {
        return if x.is_nan() { "nan".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    let trim = |s: &str| -> String {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s.to_string()
        }
    };
    if (-5..12).contains(&exp) {
        trim(&format!("{x:.*}", (11 - exp) as usize))
    } else {
        format!("{}e{}{:02}", trim(mantissa), if exp < 0 { '-' } else { '+' }, exp.abs())
    }
}

pub const CSV_HEADER: &str = "sample,seed,count,lambda1,lambda2";

impl CensusRecord {
    pub fn csv_line(&self) -> String {
        match self.count {
            Some(c) => format!(
                "{},{},{},{},{}",
                self.sample,
                self.seed,
                c,
                format_sig12(self.lambda1),
                format_sig12(self.lambda2)
            ),
            None => format!("{},{},,,", self.sample, self.seed),
        }
    }
}

struct Evaluator<'a> {
    config: &'a CensusConfig,
    /// Counts over the base spectrum for covers.
    base_counts: Option<(usize, usize)>,
}

impl Evaluator<'_> {
    /// Number of eigenvalues at `d`, one per component.
    fn top_count(&self, g: &Graph) -> Result<usize, SpectralError> {
        let d = self.config.d;
        count_adjacency_eigenvalues_geq(g, d as f64, Tolerances::for_degree(d).special_tol)
    }

    fn base_counts(config: &CensusConfig) -> Result<Option<(usize, usize)>, SpectralError> {
        let ModelId::Cover(base) = &config.model else {
            return Ok(None);
        };
        let d = config.d;
        let at = count_adjacency_eigenvalues_geq(base, config.threshold(), config.tol)?;
        let top = count_adjacency_eigenvalues_geq(base, d as f64, Tolerances::for_degree(d).special_tol)?;
        Ok(Some((at, top)))
    }

    fn run(&self, index: usize) -> CensusRecord {
        let seed = derive_seed(self.config.master_seed, index as u64);
        let failed = CensusRecord {
            sample: index,
            seed,
            count: None,
            lambda1: f64::NAN,
            lambda2: f64::NAN,
            old_count: None,
        };
        let Ok(g) = self.config.model.sample(self.config.n, self.config.d, seed) else {
            return failed;
        };
        let Ok(profile) = threshold_profile(&g, self.config.threshold(), self.config.tol) else {
            return failed;
        };
        let total = match self.config.mode {
            ThresholdMode::AtLeast2Sqrt => profile.count,
            ThresholdMode::Strict => match self.top_count(&g) {
                Ok(top) => profile.count.saturating_sub(top),
                Err(_) => return failed,
            },
        };
        let old = self.base_counts.map(|(at, top)| match self.config.mode {
            ThresholdMode::AtLeast2Sqrt => at,
            ThresholdMode::Strict => at - top,
        });
        let count = match old {
            Some(o) if total < o => return failed,
            Some(o) => total - o,
            None => total,
        };
        CensusRecord {
            sample: index,
            seed,
            count: Some(count),
            lambda1: profile.lambda1,
            lambda2: profile.lambda2,
            old_count: old,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CensusError + '_ {
    move |source| CensusError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Runs the census, writing CSV records to `config.out` as they complete
/// (in sample order) and the aggregate JSON next to it.
pub fn run_census(config: &CensusConfig) -> Result<CensusResult, CensusError> {
    config.validate()?;
    let evaluator = Evaluator {
        config,
        base_counts: Evaluator::base_counts(config)?,
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| CensusError::Config(e.to_string()))?;

    let mut csv = match &config.out {
        Some(path) => {
            let f = File::create(path).map_err(io_err(path))?;
            let mut w = BufWriter::new(f);
            writeln!(w, "{CSV_HEADER}").map_err(io_err(path))?;
            Some((w, path.as_path()))
        }
        None => None,
    };

    let chunk = (config.workers * 8).max(16);
    let mut records = Vec::with_capacity(config.samples);
    for start in (0..config.samples).step_by(chunk) {
        let end = (start + chunk).min(config.samples);
        let batch: Vec<CensusRecord> = pool.install(|| (start..end).into_par_iter().map(|i| evaluator.run(i)).collect());
        if let Some((w, path)) = csv.as_mut() {
            for r in &batch {
                writeln!(w, "{}", r.csv_line()).map_err(io_err(path))?;
            }
            w.flush().map_err(io_err(path))?;
        }
        records.extend(batch);
    }

    let counts: Vec<f64> = records.iter().filter_map(|r| r.count).map(|c| c as f64).collect();
    let failures = records.len() - counts.len();
    if failures > 0 {
        log_warning(&format!("{failures} of {} samples failed and were excluded", records.len()));
    }
    let (mean, stderr) = if counts.is_empty() { (f64::NAN, f64::NAN) } else { mean_stderr(&counts) };
    let result = CensusResult {
        config: config.clone(),
        mean,
        stderr,
        samples: counts.len(),
        failures,
        records,
    };
    if let Some(path) = &config.out {
        let json_path = CensusConfig::json_path(path);
        let body = serde_json::to_string_pretty(&result).expect("census result serializes");
        std::fs::write(&json_path, body + "\n").map_err(io_err(&json_path))?;
    }
    Ok(result)
}

fn log_warning(msg: &str) {
    eprintln!("warning: {msg}");
}

/// Published census presets: `G4_n` is the permutation model and `H4_n`
/// the single-cycle model, both with `d = 4`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Preset {
    G4_100,
    G4_1000,
    G4_10000,
    H4_100,
    H4_1000,
    H4_10000,
}

impl Preset {
    pub const ALL: [Preset; 6] = [
        Preset::G4_100,
        Preset::G4_1000,
        Preset::G4_10000,
        Preset::H4_100,
        Preset::H4_1000,
        Preset::H4_10000,
    ];

    pub fn model(self) -> ModelId {
        match self {
            Preset::G4_100 | Preset::G4_1000 | Preset::G4_10000 => ModelId::Perm,
            _ => ModelId::Cycle,
        }
    }

    pub fn n(self) -> usize {
        match self {
            Preset::G4_100 | Preset::H4_100 => 100,
            Preset::G4_1000 | Preset::H4_1000 => 1000,
            Preset::G4_10000 | Preset::H4_10000 => 10_000,
        }
    }

    /// Published average count of eigenvalues `≥ 2√3`.
    pub fn published_mean(self) -> f64 {
        match self {
            Preset::G4_100 => 1.2681,
            Preset::G4_1000 => 1.2258,
            Preset::G4_10000 => 1.1942,
            Preset::H4_100 => 1.1268,
            Preset::H4_1000 => 1.161,
            Preset::H4_10000 => 1.1693,
        }
    }

    /// Sample count behind the published mean.
    pub fn published_samples(self) -> usize {
        10_000
    }

    pub fn name(self) -> &'static str {
        match self {
            Preset::G4_100 => "G4_100",
            Preset::G4_1000 => "G4_1000",
            Preset::G4_10000 => "G4_10000",
            Preset::H4_100 => "H4_100",
            Preset::H4_1000 => "H4_1000",
            Preset::H4_10000 => "H4_10000",
        }
    }
}

impl std::str::FromStr for Preset {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown preset {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PresetComparison {
    pub preset: Preset,
    pub n: usize,
    pub samples: usize,
    pub failures: usize,
    pub published_mean: f64,
    pub mean: f64,
    pub stderr: f64,
    /// `(mean − published) / stderr`; the published runs carry no error bar.
    pub z: f64,
}

impl PresetComparison {
    pub const HEADER: &'static str = "preset     n       samples  published  mean       stderr     z";

    pub fn row(&self) -> String {
        format!(
            "{:<10} {:<7} {:<8} {:<10.4} {:<10.4} {:<10.4} {:+.2}",
            self.preset.name(),
            self.n,
            self.samples,
            self.published_mean,
            self.mean,
            self.stderr,
            self.z
        )
    }
}

pub fn reproduce_preset(
    preset: Preset,
    samples: Option<usize>,
    master_seed: u64,
    workers: usize,
) -> Result<PresetComparison, CensusError> {
    let mut config = CensusConfig::new(
        preset.model(),
        preset.n(),
        4,
        samples.unwrap_or(preset.published_samples()),
        master_seed,
    );
    config.workers = workers;
    let r = run_census(&config)?;
    let z = if r.stderr > 0.0 {
        (r.mean - preset.published_mean()) / r.stderr
    } else {
        f64::NAN
    };
    Ok(PresetComparison {
        preset,
        n: preset.n(),
        samples: r.samples,
        failures: r.failures,
        published_mean: preset.published_mean(),
        mean: r.mean,
        stderr: r.stderr,
        z,
    })
}

/// Two-sample z statistic for a difference of means.
pub fn two_sample_z(mean_a: f64, stderr_a: f64, mean_b: f64, stderr_b: f64) -> f64 {
    (mean_a - mean_b) / stderr_a.hypot(stderr_b)
}
