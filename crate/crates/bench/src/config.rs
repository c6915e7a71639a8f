//! TOML run configuration.
//!
//! ```toml
//! version = 1
//! out_dir = "bench-out"
//! scale = 0.5
//! cases = ["cross_regime", "pin_cell"]   # empty: all default cases
//! methods = "DSA,ROMIG,ROMSAD-3,5"       # optional override
//! n_test = 4
//! seed = 42
//! eps_pod = [1e-9]
//! max_iterations = 500
//! dump_triplets = false
//! ```
//!
//! Every key except `version` is optional and each has a matching CLI flag.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::cases::{BenchmarkCase, CaseId};
use crate::methods::Method;
use crate::{BenchError, BenchResult};

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchConfig {
    pub version: u32,
    #[serde(default = "default_out")]
    pub out_dir: PathBuf,
    #[serde(default = "default_scale")]
    pub scale: f64,
    #[serde(default)]
    pub cases: Vec<String>,
    pub methods: Option<String>,
    pub n_test: Option<usize>,
    pub seed: Option<u64>,
    pub eps_pod: Option<Vec<f64>>,
    pub max_iterations: Option<usize>,
    #[serde(default)]
    pub dump_triplets: bool,
}

fn default_out() -> PathBuf {
    PathBuf::from("bench-out")
}

fn default_scale() -> f64 {
    1.0
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            version: CONFIG_VERSION,
            out_dir: default_out(),
            scale: default_scale(),
            cases: Vec::new(),
            methods: None,
            n_test: None,
            seed: None,
            eps_pod: None,
            max_iterations: None,
            dump_triplets: false,
        }
    }
}

impl BenchConfig {
    pub fn from_toml(text: &str) -> BenchResult<Self> {
        let c: Self = toml::from_str(text).map_err(|e| BenchError::Config(e.to_string()))?;
        if c.version != CONFIG_VERSION {
            return Err(BenchError::Config(format!(
                "config version {} is not supported (expected {CONFIG_VERSION})",
                c.version
            )));
        }
        Ok(c)
    }

    pub fn load(path: &Path) -> BenchResult<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Selected cases; opt-in cases only when named.
    pub fn case_ids(&self) -> BenchResult<Vec<CaseId>> {
        if self.cases.is_empty() {
            return Ok(CaseId::ALL.into_iter().filter(|c| !c.opt_in()).collect());
        }
        self.cases.iter().map(|s| s.parse()).collect()
    }

    /// Case at the configured scale with overrides applied.
    pub fn case(&self, id: CaseId) -> BenchResult<BenchmarkCase> {
        let mut case = BenchmarkCase::new(id, self.scale)?;
        if let Some(m) = &self.methods {
            case.methods = Method::parse_list(m)?;
        }
        if let Some(n) = self.n_test {
            case.n_test = n;
        }
        if let Some(s) = self.seed {
            case.seed = s;
        }
        if let Some(e) = &self.eps_pod {
            if e.is_empty() || e.iter().any(|v| !(*v >= 0.0 && *v < 1.0)) {
                return Err(BenchError::Config(format!("eps_pod values must lie in [0, 1): {e:?}")));
            }
            case.eps_pod = e.clone();
        }
        if let Some(n) = self.max_iterations {
            case.max_iterations = n;
        }
        Ok(case)
    }
}
