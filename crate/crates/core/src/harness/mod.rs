//! Command implementations behind the `mopuc` binary.
//!
//! Every command is a plain function from a [`RunConfig`] (plus input) to a
//! value that serializes to the output file, so the binary only parses flags
//! and writes bytes.

mod gems;
mod generate;
mod sumrule_cmd;
mod verify;

pub use gems::{cmd_gems, gems_csv, GemSource, GEMS_CSV_HEADER};
pub use generate::{cmd_gen, random_contraction, random_sequence, trial_rng};
pub use sumrule_cmd::{cmd_sumrule, load_input, reports_csv, SumRuleInput};
pub use verify::{check_names, cmd_verify, CheckResult, VerifySummary};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::DEFAULT_GRID;

pub const DEFAULT_TOLERANCE: f64 = 1e-6;
pub const DEFAULT_NORM_CAP: f64 = 0.8;
/// Smallest top singular value drawn by the generator.
pub const NORM_FLOOR: f64 = 0.1;
/// Environment variable capping the worker pool.
pub const THREADS_ENV: &str = "MOPUC_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub grid_size: usize,
    pub trunc: usize,
    pub tolerance: f64,
    pub seed: u64,
    pub g_list: Vec<f64>,
    pub dim: usize,
    pub norm_cap: f64,
    /// Random trials per check in `verify`.
    pub trials: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            grid_size: DEFAULT_GRID,
            trunc: 5,
            tolerance: DEFAULT_TOLERANCE,
            seed: 0,
            g_list: vec![-1.0, -0.6, 0.0, 0.3, 0.6, 1.0],
            dim: 2,
            norm_cap: DEFAULT_NORM_CAP,
            trials: 20,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::BadConfig(msg));
        if self.grid_size < 8 || !self.grid_size.is_power_of_two() {
            return bad(format!("grid size {} is not a power of two >= 8", self.grid_size));
        }
        if self.grid_size < 8 * self.trunc {
            return bad(format!("grid size {} < 8 * trunc {}", self.grid_size, self.trunc));
        }
        if self.dim == 0 {
            return bad("dim must be >= 1".into());
        }
        if let Some(g) = self.g_list.iter().find(|g| !(g.abs() <= 1.0)) {
            return bad(format!("g = {g} outside [-1, 1]"));
        }
        if !(self.tolerance > 0.0) {
            return bad(format!("tolerance {} must be positive", self.tolerance));
        }
        if !(self.norm_cap > NORM_FLOOR && self.norm_cap < 1.0) {
            return bad(format!("norm cap {} outside ({NORM_FLOOR}, 1)", self.norm_cap));
        }
        Ok(())
    }
}

/// Machine-readable error body printed by the binary.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ErrorReport {
    pub error: String,
    pub message: String,
}

impl From<&Error> for ErrorReport {
    fn from(e: &Error) -> Self {
        Self { error: e.kind().to_string(), message: e.to_string() }
    }
}

/// Worker count from `MOPUC_THREADS`, if set to a positive integer.
pub fn thread_cap() -> Option<usize> {
    std::env::var(THREADS_ENV).ok()?.trim().parse().ok().filter(|&n| n > 0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_is_valid() {
        RunConfig::default().validate().unwrap();
    }

    #[test]
    fn config_rejections() {
        let cases = [
            RunConfig { grid_size: 1000, ..Default::default() },
            RunConfig { grid_size: 32, trunc: 5, ..Default::default() },
            RunConfig { g_list: vec![1.5], ..Default::default() },
            RunConfig { tolerance: 0.0, ..Default::default() },
            RunConfig { norm_cap: 1.0, ..Default::default() },
        ];
        for cfg in cases {
            assert!(matches!(cfg.validate(), Err(Error::BadConfig(_))), "{cfg:?}");
        }
    }
}
