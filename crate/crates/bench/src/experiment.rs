//! Experiment matrix: spec, seeding and the parallel runner.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use tpais::metrics::uniform_points;
use tpais::targets::make_target;
use tpais::{GmmTarget, TargetDensity, TargetFamily};

use crate::method::{run_method, Method, RunOptions};
use crate::BenchError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSpec {
    pub methods: Vec<String>,
    pub families: Vec<String>,
    pub dims: Vec<usize>,
    pub sample_counts: Vec<usize>,
    pub trials: usize,
    pub base_seed: u64,
    pub jsd_points: usize,
    pub kde_bandwidth: f64,
    pub mh_step: f64,
    /// When false, `wall_time_seconds` is written as 0 so outputs are
    /// byte-reproducible.
    pub timing: bool,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        let opts = RunOptions::default();
        Self {
            methods: ["tpais", "tpais-nors", "mh", "pmc", "dm-pmc"]
                .map(String::from)
                .to_vec(),
            families: TargetFamily::ALL.iter().map(|f| f.name().to_string()).collect(),
            dims: vec![1, 2, 3],
            sample_counts: vec![16, 32, 64, 128, 256, 512, 1024],
            trials: 20,
            base_seed: 0,
            jsd_points: 10_000,
            kde_bandwidth: opts.kde_bandwidth,
            mh_step: opts.mh_step,
            timing: true,
        }
    }
}

impl ExperimentSpec {
    pub fn from_toml(text: &str) -> Result<Self, BenchError> {
        Ok(toml::from_str(text)?)
    }

    pub fn parsed_methods(&self) -> Result<Vec<Method>, BenchError> {
        self.methods.iter().map(|m| m.parse()).collect()
    }

    pub fn parsed_families(&self) -> Result<Vec<TargetFamily>, BenchError> {
        self.families
            .iter()
            .map(|f| f.parse().map_err(|_| BenchError::UnknownFamily(f.clone())))
            .collect()
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        let invalid = |m: &str| Err(BenchError::InvalidSpec(m.to_string()));
        if self.methods.is_empty() {
            return invalid("methods is empty");
        }
        if self.families.is_empty() {
            return invalid("families is empty");
        }
        if self.dims.is_empty() || self.dims.contains(&0) {
            return invalid("dims must be a non-empty list of integers >= 1");
        }
        if self.sample_counts.is_empty() || self.sample_counts.contains(&0) {
            return invalid("sample_counts must be a non-empty list of integers >= 1");
        }
        if self.trials == 0 {
            return invalid("trials must be >= 1");
        }
        if self.jsd_points == 0 {
            return invalid("jsd_points must be >= 1");
        }
        if !(self.kde_bandwidth > 0.0) || !(self.mh_step > 0.0) {
            return invalid("kde_bandwidth and mh_step must be positive");
        }
        self.parsed_methods()?;
        self.parsed_families()?;
        Ok(())
    }

    fn run_options(&self) -> RunOptions {
        RunOptions {
            kde_bandwidth: self.kde_bandwidth,
            mh_step: self.mh_step,
            timing: self.timing,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRow {
    pub method: String,
    pub family: String,
    pub dims: usize,
    #[serde(rename = "N")]
    pub n: usize,
    pub trial: usize,
    pub seed: u64,
    pub ness: f64,
    pub jsd: f64,
    pub evidence_mse: f64,
    pub wall_time_seconds: f64,
    #[serde(skip)]
    pub error: Option<String>,
}

/// Parameters of one generated target, for the target log.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TargetRecord {
    pub family: String,
    pub dims: usize,
    pub trial: usize,
    pub seed: u64,
    pub means: Vec<Vec<f64>>,
    pub variances: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    pub rows: Vec<ResultRow>,
    pub targets: Vec<TargetRecord>,
}

impl ExperimentOutput {
    pub fn errors(&self) -> impl Iterator<Item = &ResultRow> {
        self.rows.iter().filter(|r| r.error.is_some())
    }
}

/// SplitMix64 finalizer.
fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Order-sensitive hash of a key tuple; stable across platforms and builds.
pub fn mix_seed(parts: &[u64]) -> u64 {
    parts.iter().fold(0x243f_6a88_85a3_08d3, |h, &p| splitmix(h ^ splitmix(p)))
}

/// FNV-1a, used to fold names into seeds.
pub fn name_hash(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

/// Seed of the target shared by every method in a (family, dims, trial) cell.
pub fn target_seed(base_seed: u64, family: TargetFamily, dims: usize, trial: usize) -> u64 {
    mix_seed(&[base_seed, name_hash(family.name()), dims as u64, trial as u64])
}

pub fn run_seed(target_seed: u64, method: Method, n: usize) -> u64 {
    mix_seed(&[target_seed, name_hash(method.id()), n as u64])
}

fn jsd_seed(target_seed: u64) -> u64 {
    mix_seed(&[target_seed, name_hash("jsd-points")])
}

pub fn build_target(family: TargetFamily, dims: usize, seed: u64) -> Result<GmmTarget, BenchError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(make_target(family, &mut rng, dims)?)
}

struct Cell {
    family: TargetFamily,
    dims: usize,
    trial: usize,
    seed: u64,
    target: Result<GmmTarget, String>,
    points: Vec<Vec<f64>>,
}

/// Runs every (method, family, dims, N, trial) combination. Rows come back
/// ordered by family, dims, N, method, trial regardless of scheduling.
pub fn run_experiments(spec: &ExperimentSpec) -> Result<ExperimentOutput, BenchError> {
    spec.validate()?;
    let methods = spec.parsed_methods()?;
    let families = spec.parsed_families()?;
    let opts = spec.run_options();

    let mut keys = Vec::new();
    for &family in &families {
        for &dims in &spec.dims {
            for trial in 0..spec.trials {
                keys.push((family, dims, trial));
            }
        }
    }
    let cells: Vec<Cell> = keys
        .into_par_iter()
        .map(|(family, dims, trial)| {
            let seed = target_seed(spec.base_seed, family, dims, trial);
            let target = build_target(family, dims, seed).map_err(|e| e.to_string());
            let points = match &target {
                Ok(t) => {
                    let mut rng = ChaCha8Rng::seed_from_u64(jsd_seed(seed));
                    uniform_points(t.bounds(), spec.jsd_points, &mut rng)
                }
                Err(_) => Vec::new(),
            };
            Cell { family, dims, trial, seed, target, points }
        })
        .collect();

    let per_cell = spec.sample_counts.len() * methods.len();
    let mut jobs = Vec::with_capacity(cells.len() * per_cell);
    for &family in &families {
        for &dims in &spec.dims {
            for &n in &spec.sample_counts {
                for &method in &methods {
                    for trial in 0..spec.trials {
                        let idx = cells
                            .iter()
                            .position(|c| c.family == family && c.dims == dims && c.trial == trial)
                            .expect("cell exists");
                        jobs.push((idx, method, n));
                    }
                }
            }
        }
    }

    let rows = jobs
        .into_par_iter()
        .map(|(idx, method, n)| {
            let cell = &cells[idx];
            let seed = run_seed(cell.seed, method, n);
            let result = match &cell.target {
                Ok(t) => run_method(method, t, n, seed, &cell.points, &opts).map_err(|e| e.to_string()),
                Err(e) => Err(e.clone()),
            };
            let mut row = ResultRow {
                method: method.id().to_string(),
                family: cell.family.name().to_string(),
                dims: cell.dims,
                n,
                trial: cell.trial,
                seed,
                ness: f64::NAN,
                jsd: f64::NAN,
                evidence_mse: f64::NAN,
                wall_time_seconds: f64::NAN,
                error: None,
            };
            match result {
                Ok(m) => {
                    row.ness = m.ness;
                    row.jsd = m.jsd;
                    row.evidence_mse = m.evidence_sq_error;
                    row.wall_time_seconds = m.wall_time_seconds;
                }
                Err(e) => row.error = Some(e),
            }
            row
        })
        .collect();

    let targets = cells
        .iter()
        .filter_map(|c| {
            let t = c.target.as_ref().ok()?;
            let m = t.model();
            Some(TargetRecord {
                family: c.family.name().to_string(),
                dims: c.dims,
                trial: c.trial,
                seed: c.seed,
                means: m.means().to_vec(),
                variances: m.variances().to_vec(),
                weights: m.weights().to_vec(),
            })
        })
        .collect();

    Ok(ExperimentOutput { rows, targets })
}
