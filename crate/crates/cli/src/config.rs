use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};

use crate::failure::Failure;

/// Every setting a run can take. The same keys are accepted in the TOML
/// config file and as flags; a flag overrides the file.
#[derive(Args, Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Settings {
    /// Base random seed.
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Construction depth K.
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub depth: Option<usize>,
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    /// Floor on the isometry net resolution.
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
    /// Trials used to calibrate the continuity constant.
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub continuity_trials: Option<usize>,
    /// Grid resolution N.
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<usize>,
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    /// identity, random or net.
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub iso_mode: Option<String>,
    /// A square `x,y,side` of the test set E; repeatable.
    #[arg(long = "square", global = true, value_parser = parse_square)]
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub e: Vec<SquareSpec>,
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    /// Number of graphs written by `gen` (seeds seed, seed+1, …).
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
    /// Number of graphs in the probe family.
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub graphs: Option<usize>,
    /// Modulus instance file (JSON).
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub instance: Option<PathBuf>,
    /// Also solve the probe at resolution 2N.
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub refine: Option<bool>,
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness_samples: Option<usize>,
    /// Sample sizes for the Hoeffding table; repeatable.
    #[arg(long = "n", global = true)]
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub n: Vec<usize>,
    /// Deviations for the Hoeffding table; repeatable.
    #[arg(long = "t", global = true)]
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub t: Vec<f64>,
    /// Pixel size of emitted SVGs.
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub svg_size: Option<f64>,
}

/// `[x, y, side]`; arity and ranges are checked by the command.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SquareSpec(pub Vec<f64>);

fn parse_square(s: &str) -> Result<SquareSpec, String> {
    s.split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|e| format!("`{v}`: {e}")))
        .collect::<Result<_, _>>()
        .map(SquareSpec)
}

macro_rules! overlay {
    ($flags:ident, $file:ident, [$($opt:ident),*], [$($list:ident),*]) => {
        Settings {
            $($opt: $flags.$opt.or($file.$opt),)*
            $($list: if $flags.$list.is_empty() { $file.$list } else { $flags.$list },)*
        }
    };
}

impl Settings {
    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::io(format!("reading config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| Failure::validation(format!("config {}: {e}", path.display())))
    }

    /// `self` (from flags) on top of `file`.
    pub fn over(self, file: Settings) -> Settings {
        let flags = self;
        overlay!(
            flags,
            file,
            [seed, depth, epsilon, kappa, delta, trials, continuity_trials, grid, p, tol, iso_mode,
             out_dir, threads, count, graphs, instance, refine, witness_samples, svg_size],
            [e, n, t]
        )
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out_dir.clone().unwrap_or_else(|| PathBuf::from("out"))
    }
}
