use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::peerbts::QuotaBasis;
use crate::sampling::PredictionModel;
use crate::seed;

pub const GRID_SCHEMA: u32 = 1;

/// Mechanism simulated in a cell.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum MechanismKind {
    #[default]
    PeerBts,
    /// Partition over `clusters` clusters followed by the truth-serum
    /// threshold filter.
    PartitionThreshold { clusters: usize },
}

impl fmt::Display for MechanismKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MechanismKind::PeerBts => write!(f, "peerbts"),
            MechanismKind::PartitionThreshold { clusters } => write!(f, "partition-threshold:{clusters}"),
        }
    }
}

impl FromStr for MechanismKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "peerbts" {
            return Ok(MechanismKind::PeerBts);
        }
        match s.strip_prefix("partition-threshold:").map(str::parse::<usize>) {
            Some(Ok(clusters)) => Ok(MechanismKind::PartitionThreshold { clusters }),
            _ => Err(Error::param(format!(
                "unknown mechanism {s:?} (peerbts, partition-threshold:<clusters>)"
            ))),
        }
    }
}

impl From<MechanismKind> for String {
    fn from(m: MechanismKind) -> Self {
        m.to_string()
    }
}

impl TryFrom<String> for MechanismKind {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

/// One simulation cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub n: usize,
    pub k: usize,
    pub m: usize,
    pub d: usize,
    pub epsilon: f64,
    pub phi: f64,
    pub model: PredictionModel,
    pub trials: usize,
    pub seed: u64,
    #[serde(default)]
    pub quota_basis: QuotaBasis,
    #[serde(default)]
    pub mechanism: MechanismKind,
}

impl ExperimentConfig {
    /// A PeerBTS cell with n = 120, k = 20 and 200 trials.
    pub fn reference_cell(m: usize, d: usize, epsilon: f64, phi: f64, model: PredictionModel) -> Self {
        ExperimentConfig {
            n: 120,
            k: 20,
            m,
            d,
            epsilon,
            phi,
            model,
            trials: 200,
            seed: 0,
            quota_basis: QuotaBasis::default(),
            mechanism: MechanismKind::PeerBts,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::param(msg));
        if self.n < 2 {
            return fail(format!("n must be >= 2 (n = {})", self.n));
        }
        if self.m < 1 || self.m >= self.n {
            return fail(format!("m must be < n and >= 1 (m = {}, n = {})", self.m, self.n));
        }
        if self.k == 0 || self.k >= self.n {
            return fail(format!("k must be in 1..n (k = {}, n = {})", self.k, self.n));
        }
        if self.d >= self.k {
            return fail(format!("d must be < k (d = {}, k = {})", self.d, self.k));
        }
        if self.m < 3 && (self.d > 0 || self.mechanism != MechanismKind::PeerBts) {
            return fail(format!("m must be >= 3 for truth-serum scoring (m = {})", self.m));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return fail(format!("epsilon must be positive (epsilon = {})", self.epsilon));
        }
        if !(0.0..=1.0).contains(&self.phi) {
            return fail(format!("phi must be in [0, 1] (phi = {})", self.phi));
        }
        if self.trials == 0 {
            return fail("trials must be >= 1".into());
        }
        if let MechanismKind::PartitionThreshold { clusters } = self.mechanism {
            if clusters < 2 || !self.n.is_multiple_of(clusters) {
                return fail(format!("n = {} cannot be split into {clusters} clusters", self.n));
            }
            if self.m > self.n - self.n / clusters {
                return fail(format!("m = {} too large for {clusters} clusters", self.m));
            }
        }
        Ok(())
    }

    /// Seed of the whole cell: the master seed mixed with a digest of every
    /// other parameter (trial count excluded), so a cell's trials do not
    /// depend on which grid it was run in.
    pub fn cell_seed(&self) -> u64 {
        let mut key = self.clone();
        key.trials = 0;
        key.seed = 0;
        let json = serde_json::to_vec(&key).expect("config serializes");
        let digest = Sha256::digest(&json);
        let mut word = [0u8; 8];
        word.copy_from_slice(&digest[..8]);
        seed::derive(self.seed, &[u64::from_le_bytes(word)])
    }

    pub fn trial_seed(&self, trial: usize) -> u64 {
        seed::derive(self.cell_seed(), &[seed::tag::TRIAL, trial as u64])
    }
}

/// A scalar or a list in the grid file.
#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> OneOrMany<T> {
    fn values(&self) -> Vec<T> {
        match self {
            OneOrMany::One(v) => vec![v.clone()],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

fn default_quota_basis() -> OneOrMany<String> {
    OneOrMany::One("k-minus-d".into())
}

fn default_mechanism() -> OneOrMany<String> {
    OneOrMany::One("peerbts".into())
}

/// Grid file layout (TOML). Every parameter except `schema`, `trials` and
/// `seed` may be a scalar or a list; lists expand Cartesian-style.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridSpec {
    schema: u32,
    n: OneOrMany<usize>,
    k: OneOrMany<usize>,
    m: OneOrMany<usize>,
    d: OneOrMany<usize>,
    epsilon: OneOrMany<f64>,
    phi: OneOrMany<f64>,
    model: OneOrMany<String>,
    #[serde(default = "default_quota_basis")]
    quota_basis: OneOrMany<String>,
    #[serde(default = "default_mechanism")]
    mechanism: OneOrMany<String>,
    trials: usize,
    seed: u64,
}

/// Parses a grid file into its cells, in model-major, then n, k, m, d, ε, φ
/// order.
pub fn parse_grid(text: &str) -> Result<Vec<ExperimentConfig>> {
    let spec: GridSpec = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    if spec.schema != GRID_SCHEMA {
        return Err(Error::Config(format!("unsupported grid schema {} (expected {GRID_SCHEMA})", spec.schema)));
    }
    let models = spec.model.values().iter().map(|s| s.parse()).collect::<Result<Vec<PredictionModel>>>()?;
    let bases = spec.quota_basis.values().iter().map(|s| s.parse()).collect::<Result<Vec<QuotaBasis>>>()?;
    let mechs = spec.mechanism.values().iter().map(|s| s.parse()).collect::<Result<Vec<MechanismKind>>>()?;
    let mut cells = Vec::new();
    for &mechanism in &mechs {
        for &model in &models {
            for n in spec.n.values() {
                for k in spec.k.values() {
                    for m in spec.m.values() {
                        for d in spec.d.values() {
                            for epsilon in spec.epsilon.values() {
                                for phi in spec.phi.values() {
                                    for &quota_basis in &bases {
                                        cells.push(ExperimentConfig {
                                            n,
                                            k,
                                            m,
                                            d,
                                            epsilon,
                                            phi,
                                            model,
                                            trials: spec.trials,
                                            seed: spec.seed,
                                            quota_basis,
                                            mechanism,
                                        });
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    if cells.is_empty() {
        return Err(Error::Config("empty grid: every list needs at least one value".into()));
    }
    for c in &cells {
        c.validate()?;
    }
    Ok(cells)
}

/// The full grid for one prediction model: m ∈ {3, 4, 6, 9},
/// d ∈ {2, 5, 10}, ε ∈ {1, 2, 4, 8}, φ ∈ {0, 0.2, 0.5}.
pub fn default_grid(model: PredictionModel, trials: usize, seed: u64) -> Vec<ExperimentConfig> {
    let mut cells = Vec::new();
    for m in [3, 4, 6, 9] {
        for d in [2, 5, 10] {
            for epsilon in [1.0, 2.0, 4.0, 8.0] {
                for phi in [0.0, 0.2, 0.5] {
                    let mut c = ExperimentConfig::reference_cell(m, d, epsilon, phi, model);
                    c.trials = trials;
                    c.seed = seed;
                    cells.push(c);
                }
            }
        }
    }
    cells
}
