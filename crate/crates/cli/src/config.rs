//! Run configuration: defaults, an optional TOML file, then command-line
//! flags, in increasing priority.

use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "SINELAB_OUT_DIR";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Empirical counting pmf against the Poisson-binomial limit.
    pub tv: f64,
    /// Counting pmfs of two ensembles against each other.
    pub tv_cross: f64,
    /// Pooled eigenvalues against the semicircle CDF.
    pub ks: f64,
    /// Monte Carlo agreement, in standard errors.
    pub z: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            tv: 0.03,
            tv_cross: 0.04,
            ks: 0.02,
            z: 3.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub ensemble: String,
    pub n: usize,
    /// Number of samples `M`.
    pub samples: usize,
    pub seed: u64,
    pub u: f64,
    /// Interval length `K` in mean spacings.
    pub length: f64,
    /// Correlation order.
    pub k: usize,
    pub test_function: String,
    /// Nyström order.
    pub order: usize,
    pub k0: f64,
    pub steps: usize,
    pub k_max: f64,
    pub epsilon: f64,
    pub out_dir: PathBuf,
    pub tolerances: Tolerances,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            ensemble: "gue".into(),
            n: 200,
            samples: 100,
            seed: 7,
            u: 0.0,
            length: 1.0,
            k: 1,
            test_function: "bump1".into(),
            order: 80,
            k0: 1e-3,
            steps: 4000,
            k_max: 2.0,
            epsilon: 0.9,
            out_dir: std::env::var_os(OUT_DIR_ENV).map_or_else(|| PathBuf::from("."), PathBuf::from),
            tolerances: Tolerances::default(),
        }
    }
}

/// Flags shared by every subcommand. Unset flags fall back to the config
/// file, then to the defaults.
#[derive(Debug, Clone, Default, Args)]
pub struct ConfigArgs {
    /// TOML file with any of the run parameters.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Output directory [env: SINELAB_OUT_DIR].
    #[arg(long, global = true, value_name = "DIR")]
    pub out_dir: Option<PathBuf>,
    /// Entry-law descriptor, e.g. gue, bernoulli, uniform, gaussdiv:base=bernoulli,t=0.01.
    #[arg(long, global = true)]
    pub ensemble: Option<String>,
    /// Matrix size.
    #[arg(long, global = true)]
    pub n: Option<usize>,
    /// Number of samples.
    #[arg(long = "M", global = true)]
    pub samples: Option<usize>,
    /// Base seed; sample i uses stream i of this seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Bulk energy in (-2, 2).
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub u: Option<f64>,
    /// Interval length in mean spacings.
    #[arg(long = "K", global = true)]
    pub length: Option<f64>,
    /// Correlation order.
    #[arg(long, global = true)]
    pub k: Option<usize>,
    /// Test function identifier (zero, one:<h>, bump<k>, bump<k>:c=..,w=.., pair:c1=..,c2=..,w=..).
    #[arg(long = "F", global = true)]
    pub test_function: Option<String>,
    /// Nyström quadrature order.
    #[arg(long = "m", global = true)]
    pub order: Option<usize>,
    /// Start of the ODE integration.
    #[arg(long = "K0", global = true)]
    pub k0: Option<f64>,
    /// RK4 steps.
    #[arg(long, global = true)]
    pub steps: Option<usize>,
    /// End of the ODE integration.
    #[arg(long = "Kmax", global = true)]
    pub k_max: Option<f64>,
    /// Rigidity exponent in (0, 1).
    #[arg(long = "eps", global = true)]
    pub epsilon: Option<f64>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        toml::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
    }

    /// Defaults, then `SINELAB_OUT_DIR`, then the config file, then flags.
    pub fn resolve(args: &ConfigArgs) -> Result<Self, CliError> {
        let mut cfg = match &args.config {
            Some(path) => Self::load(path)?,
            None => Self::default(),
        };
        macro_rules! take {
            ($($field:ident),*) => {
                $(if let Some(v) = &args.$field {
                    cfg.$field = v.clone();
                })*
            };
        }
        take!(out_dir, ensemble, n, samples, seed, u, length, k, test_function, order, k0, steps, k_max, epsilon);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |msg: String| Err(CliError::Usage(msg));
        if self.n == 0 {
            return bad("n must be at least 1".into());
        }
        if self.samples == 0 {
            return bad("M must be at least 1".into());
        }
        if !(self.u > -2.0 && self.u < 2.0) {
            return bad(format!("u = {} is not inside (-2, 2)", self.u));
        }
        if !(self.length > 0.0 && self.length.is_finite()) {
            return bad(format!("K = {} must be positive", self.length));
        }
        if !(1..=4).contains(&self.k) {
            return bad(format!("k = {} must be in 1..=4", self.k));
        }
        if self.order < 10 {
            return bad(format!("m = {} must be at least 10", self.order));
        }
        if !(self.k0 > 0.0 && self.k0 < self.k_max && self.k_max <= 5.0) {
            return bad(format!(
                "need 0 < K0 < Kmax <= 5, got K0 = {}, Kmax = {}",
                self.k0, self.k_max
            ));
        }
        if self.steps == 0 {
            return bad("steps must be positive".into());
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return bad(format!("eps = {} must lie in (0, 1)", self.epsilon));
        }
        let t = &self.tolerances;
        if [t.tv, t.tv_cross, t.ks, t.z].iter().any(|x| !(*x > 0.0)) {
            return bad("tolerances must be positive".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, "n = 50\nseed = 3\n[tolerances]\nks = 0.05\n").unwrap();
        let args = ConfigArgs {
            config: Some(path),
            seed: Some(11),
            ..Default::default()
        };
        let cfg = RunConfig::resolve(&args).unwrap();
        assert_eq!(cfg.n, 50);
        assert_eq!(cfg.seed, 11);
        assert_eq!(cfg.tolerances.ks, 0.05);
        assert_eq!(cfg.tolerances.tv, 0.03);
    }

    #[test]
    fn unknown_keys_and_bad_values_are_usage_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, "bogus = 1\n").unwrap();
        let args = ConfigArgs {
            config: Some(path),
            ..Default::default()
        };
        assert!(matches!(RunConfig::resolve(&args), Err(CliError::Usage(_))));
        let args = ConfigArgs {
            u: Some(2.5),
            ..Default::default()
        };
        assert!(matches!(RunConfig::resolve(&args), Err(CliError::Usage(_))));
    }

    #[test]
    fn round_trips_through_toml() {
        let cfg = RunConfig::default();
        let text = toml::to_string(&cfg).unwrap();
        assert_eq!(toml::from_str::<RunConfig>(&text).unwrap(), cfg);
    }
}
