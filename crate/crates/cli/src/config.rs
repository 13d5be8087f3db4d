//! Run configuration: one optional TOML file plus flags. Flags win.

use std::path::{Path, PathBuf};

use clap::Args;
use ifs_ergodic::measure::Side;
use ifs_ergodic::{Budget, IfsSystem, Mode};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

/// Command parameters. Every field is optional; each command documents its
/// defaults. In a config file they live under `[params]`.
#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    /// Horizon (number of steps).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,

    /// Comma-separated horizons; overrides `--n` where a ladder is produced.
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_list: Option<Vec<usize>>,

    /// Monte Carlo replica count.
    #[arg(long, short = 'R')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub replicas: Option<usize>,

    /// Tail exponent for calibration.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,

    /// Comma-separated exponents to sweep.
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alphas: Option<Vec<f64>>,

    /// First start point.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x: Option<f64>,

    /// Second start point.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub y: Option<f64>,

    /// Replica start: a point in [0, 1] or `stationary`.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub start: Option<String>,

    /// Boundary-mass step count.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<u64>,

    /// Half-width margin of the return interval `[a, 1 − a]`.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,

    /// `lower` or `upper`; both when absent.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub side: Option<Side>,

    /// Test function: identity, centered, zero, const:<c>, parabola, tent, balanced.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phi: Option<String>,

    /// Comma-separated interior evaluation points.
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<Vec<f64>>,

    /// Comma-separated characteristic-function arguments.
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_grid: Option<Vec<f64>>,

    /// Number of trailing depths in the decay-rate fit.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit_last: Option<usize>,

    /// Known mean of φ under the invariant measure; skips burn-in centering.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub center: Option<f64>,

    /// Burn-in length for stationary starts, centering and reference samples.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_burn: Option<usize>,

    /// Burn-in replica count.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub burn_replicas: Option<usize>,

    /// Reference points for norm estimates.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub y_samples: Option<usize>,

    /// Trajectories per reference point in nested Monte Carlo.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub inner_replicas: Option<usize>,

    /// Grid size for the crossing check.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid_points: Option<usize>,
}

macro_rules! overlay {
    ($hi:ident, $lo:ident; $($field:ident),*) => {
        Params { $($field: $hi.$field.or($lo.$field)),* }
    };
}

impl Params {
    /// Field-wise `self` where set, else `fallback`.
    pub fn or(self, fallback: Params) -> Params {
        overlay!(self, fallback; n, n_list, replicas, alpha, alphas, x, y, start, k, a, side, phi,
            grid, t_grid, fit_last, center, n_burn, burn_replicas, y_samples, inner_replicas,
            grid_points)
    }
}

/// Contents of a `--config` file.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    /// Subcommand words, e.g. `"bounds escape"`; used when none is given on the command line.
    pub command: Option<String>,
    pub system: Option<String>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub mode: Option<Mode>,
    pub budget: Option<u64>,
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub params: Params,
}

impl FileConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        toml::from_str(&text).map_err(|e| CliError::Config {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }
}

pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_OUT: &str = "ifs-ergodic-out";
/// Built-in system name accepted by `--system`.
pub const BUILTIN_AM2: &str = "am2";

/// A validated configuration. Only fields that can change results are
/// hashed; `threads` and `out` are excluded.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub command: String,
    pub system: String,
    pub seed: u64,
    pub mode: Mode,
    pub budget: u64,
    pub params: Params,
    #[serde(skip)]
    pub threads: Option<usize>,
    #[serde(skip)]
    pub out: PathBuf,
}

impl RunConfig {
    pub fn validate(&self) -> CliResult<()> {
        if self.threads == Some(0) {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        if self.budget == 0 {
            return Err(CliError::Usage("--budget must be at least 1".into()));
        }
        let p = &self.params;
        for (name, v) in [
            ("replicas", p.replicas),
            ("burn-replicas", p.burn_replicas),
            ("y-samples", p.y_samples),
        ] {
            if v == Some(0) {
                return Err(CliError::Usage(format!("--{name} must be at least 1")));
            }
        }
        if let Some(list) = &p.n_list {
            if list.is_empty() || list.contains(&0) {
                return Err(CliError::Usage("--n-list needs positive entries".into()));
            }
        }
        for (name, v) in [
            ("alphas", &p.alphas),
            ("grid", &p.grid),
            ("t-grid", &p.t_grid),
        ] {
            if let Some(list) = v {
                if list.is_empty() || list.iter().any(|v| !v.is_finite()) {
                    return Err(CliError::Usage(format!("--{name} needs finite entries")));
                }
            }
        }
        Ok(())
    }

    pub fn budget(&self) -> Budget {
        Budget(self.budget)
    }

    pub fn load_system(&self) -> CliResult<IfsSystem> {
        if self.system == BUILTIN_AM2 {
            Ok(IfsSystem::am2())
        } else {
            Ok(IfsSystem::load(&self.system)?)
        }
    }

    /// SHA-256 over the canonical JSON of the hashed fields.
    pub fn hash(&self) -> String {
        let text = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(text.as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_win_over_file_values() {
        let flags = Params {
            n: Some(5),
            ..Params::default()
        };
        let file = Params {
            n: Some(9),
            x: Some(0.2),
            ..Params::default()
        };
        let merged = flags.or(file);
        assert_eq!(merged.n, Some(5));
        assert_eq!(merged.x, Some(0.2));
    }

    #[test]
    fn file_config_parses_and_rejects_unknown_keys() {
        let cfg: FileConfig = toml::from_str(
            "command = \"bounds escape\"\nseed = 7\nmode = \"exact\"\n[params]\nalpha = 0.5\nn_list = [16, 81]\nside = \"upper\"\n",
        )
        .unwrap();
        assert_eq!(cfg.command.as_deref(), Some("bounds escape"));
        assert_eq!(cfg.mode, Some(Mode::Exact));
        assert_eq!(cfg.params.n_list, Some(vec![16, 81]));
        assert_eq!(cfg.params.side, Some(Side::Upper));
        assert!(toml::from_str::<FileConfig>("sede = 1").is_err());
        assert!(toml::from_str::<FileConfig>("[params]\nnn = 1").is_err());
    }

    #[test]
    fn hash_ignores_threads_and_out() {
        let base = RunConfig {
            command: "sync".into(),
            system: BUILTIN_AM2.into(),
            seed: 1,
            mode: Mode::Auto,
            budget: 1 << 20,
            params: Params::default(),
            threads: Some(1),
            out: "a".into(),
        };
        let other = RunConfig {
            threads: Some(4),
            out: "b".into(),
            ..base.clone()
        };
        assert_eq!(base.hash(), other.hash());
        let reseeded = RunConfig {
            seed: 2,
            ..base.clone()
        };
        assert_ne!(base.hash(), reseeded.hash());
    }
}
