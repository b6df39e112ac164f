//! Experiment configuration: a single JSON document, validated and resolved
//! with every default made explicit before anything runs.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{build_move_set, JsonRational, MoveSet};
use crate::payoffs::{Butterfly, Payoff, PayoffKind, PiecewiseTable, Scaling};
use crate::pde::{GaussianMethod, Grid};
use crate::pricing::FastPathMode;
use crate::submodular::Modularity;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::Subcommand)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Upper and lower prices for N rounds.
    Price,
    /// Prices for each N in a range, as CSV.
    Converge,
    /// Black-Scholes-Barenblatt limits on a finite-difference grid.
    LimitPde,
    /// Gaussian limits for a fixed covariance.
    LimitGaussian,
    /// Correlation-completed prices over a range of correlations.
    BoyleSweep,
    /// Hypercube simplex census and containment counts.
    Census,
    /// Checks the emitted hedging strategies on every path.
    StrategyVerify,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Price => "price",
            Command::Converge => "converge",
            Command::LimitPde => "limit-pde",
            Command::LimitGaussian => "limit-gaussian",
            Command::BoyleSweep => "boyle-sweep",
            Command::Census => "census",
            Command::StrategyVerify => "strategy-verify",
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SideSel {
    #[default]
    Both,
    Upper,
    Lower,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    Chi1,
    Chi2,
}

/// Inline points, a named preset, or a JSON file holding the points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MoveSetSpec {
    Inline(Vec<Vec<JsonRational>>),
    Preset { preset: Preset },
    File { path: PathBuf },
}

impl MoveSetSpec {
    pub fn load(&self, base: &Path) -> Result<MoveSet> {
        match self {
            MoveSetSpec::Preset { preset: Preset::Chi1 } => Ok(MoveSet::chi1()),
            MoveSetSpec::Preset { preset: Preset::Chi2 } => Ok(MoveSet::chi2()),
            MoveSetSpec::Inline(pts) => build(pts),
            MoveSetSpec::File { path } => {
                let full = if path.is_absolute() { path.clone() } else { base.join(path) };
                let text = std::fs::read_to_string(&full)
                    .map_err(|e| Error::Config(format!("cannot read move set {}: {e}", full.display())))?;
                build(&serde_json::from_str::<Vec<Vec<JsonRational>>>(&text)?)
            }
        }
    }
}

fn build(pts: &[Vec<JsonRational>]) -> Result<MoveSet> {
    build_move_set(pts.iter().map(|p| p.iter().map(|v| v.0.clone()).collect()).collect())
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeclaredSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub modularity: Option<Modularity>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub convex: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PayoffKindSpec {
    MaxOption {
        #[serde(rename = "K")]
        strike: f64,
    },
    MinOption {
        #[serde(rename = "K")]
        strike: f64,
    },
    Cone,
    Butterfly {
        lower: Option<f64>,
        middle: Option<f64>,
        upper: Option<f64>,
    },
    DoubleButterfly {
        lower: Option<f64>,
        middle: Option<f64>,
        upper: Option<f64>,
    },
    Linear {
        weights: Vec<f64>,
    },
    Table(PiecewiseTable),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PayoffSpec {
    #[serde(flatten)]
    pub kind: PayoffKindSpec,
    #[serde(default)]
    pub scaling: Option<Scaling>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub declared: Option<DeclaredSpec>,
}

fn butterfly(lower: Option<f64>, middle: Option<f64>, upper: Option<f64>) -> Result<Butterfly> {
    let d = Butterfly::default();
    Butterfly::new(lower.unwrap_or(d.lower), middle.unwrap_or(d.middle), upper.unwrap_or(d.upper))
}

impl PayoffSpec {
    /// Fills butterfly breakpoints and the scaling.
    fn resolved(&self, default_scaling: Scaling) -> Result<PayoffSpec> {
        let kind = match &self.kind {
            PayoffKindSpec::Butterfly { lower, middle, upper } => {
                let b = butterfly(*lower, *middle, *upper)?;
                PayoffKindSpec::Butterfly { lower: Some(b.lower), middle: Some(b.middle), upper: Some(b.upper) }
            }
            PayoffKindSpec::DoubleButterfly { lower, middle, upper } => {
                let b = butterfly(*lower, *middle, *upper)?;
                PayoffKindSpec::DoubleButterfly { lower: Some(b.lower), middle: Some(b.middle), upper: Some(b.upper) }
            }
            k => k.clone(),
        };
        Ok(PayoffSpec { kind, scaling: Some(self.scaling.unwrap_or(default_scaling)), declared: self.declared.clone() })
    }

    pub fn build(&self, d: usize) -> Result<Payoff> {
        let p = match &self.kind {
            PayoffKindSpec::MaxOption { strike } => Payoff::max_call(*strike)?,
            PayoffKindSpec::MinOption { strike } => Payoff::min_call(*strike)?,
            PayoffKindSpec::Cone => Payoff::cone(),
            PayoffKindSpec::Butterfly { lower, middle, upper } => Payoff::butterfly(butterfly(*lower, *middle, *upper)?)?,
            PayoffKindSpec::DoubleButterfly { lower, middle, upper } => {
                Payoff::double_butterfly(butterfly(*lower, *middle, *upper)?, d)?
            }
            PayoffKindSpec::Linear { weights } => Payoff::linear(weights.clone())?,
            PayoffKindSpec::Table(t) => Payoff::new(PayoffKind::Table(t.clone()))?,
        };
        let mut p = p.with_scaling(self.scaling.unwrap_or_default());
        if let Some(decl) = &self.declared {
            if decl.modularity.is_some() {
                p = p.with_modularity(decl.modularity);
            }
            if let Some(c) = decl.convex {
                p = p.with_convex(c);
            }
        }
        p.check_dim(d)?;
        Ok(p)
    }
}

/// Gaussian method with an optional Monte Carlo seed; the run seed fills it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "method", deny_unknown_fields)]
pub enum GaussianSpec {
    Quadrature {
        half_width: Option<f64>,
        panels: Option<usize>,
        order: Option<usize>,
    },
    MonteCarlo {
        seed: Option<u64>,
        samples: Option<usize>,
    },
}

pub const DEFAULT_MC_SAMPLES: usize = 1_000_000;

/// Partial grid override; missing fields keep the default grid.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub delta_s: Option<f64>,
    pub steps: Option<usize>,
    pub half_cells: Option<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub report: Option<String>,
    pub csv: Option<String>,
    /// Census dump or PDE value fields.
    pub data: Option<String>,
}

/// The config file as written by the user.
#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub command: Option<Command>,
    pub move_set: Option<MoveSetSpec>,
    pub payoff: Option<PayoffSpec>,
    #[serde(rename = "N")]
    pub n: Option<usize>,
    /// Inclusive `[first, last]` round counts.
    #[serde(rename = "N_range")]
    pub n_range: Option<[usize; 2]>,
    pub side: Option<SideSel>,
    pub fast_path: Option<FastPathMode>,
    pub grid: Option<GridSpec>,
    pub gaussian: Option<GaussianSpec>,
    pub sigma: Option<Vec<Vec<f64>>>,
    pub rho: Option<Vec<f64>>,
    pub dim: Option<usize>,
    pub points: Option<Vec<Vec<JsonRational>>>,
    pub samples: Option<usize>,
    pub seed: Option<u64>,
    pub outputs: Option<OutputSpec>,
}

/// Every setting the run uses, defaults included. Fields that do not apply
/// to the command are omitted.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResolvedConfig {
    pub command: Command,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub move_set: Option<MoveSetSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub payoff: Option<PayoffSpec>,
    #[serde(rename = "N", skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(rename = "N_range", skip_serializing_if = "Option::is_none")]
    pub n_range: Option<[usize; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub side: Option<SideSel>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fast_path: Option<FastPathMode>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<Grid>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gaussian: Option<GaussianMethod>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub points: Option<Vec<Vec<JsonRational>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    pub seed: u64,
    pub outputs: ResolvedOutputs,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResolvedOutputs {
    pub report: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub csv: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub data: Option<String>,
}

pub const DEFAULT_SEED: u64 = 0;

fn default_payoff() -> PayoffSpec {
    PayoffSpec { kind: PayoffKindSpec::MaxOption { strike: 1.0 }, scaling: None, declared: None }
}

/// `ρ ∈ {-1, -0.8, …, 1}`.
pub fn default_rho() -> Vec<f64> {
    (-5..=5).map(|k| k as f64 / 5.0).collect()
}

impl ExperimentConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Checks the config against `command` and fills in defaults.
    pub fn resolve(&self, command: Command, seed_override: Option<u64>) -> Result<ResolvedConfig> {
        if let Some(c) = self.command {
            if c != command {
                return Err(Error::Config(format!(
                    "config is for `{}` but `{}` was requested",
                    c.name(),
                    command.name()
                )));
            }
        }
        let uses_market = command != Command::Census;
        let unused = |present: bool, field: &str| -> Result<()> {
            if present {
                Err(Error::Config(format!("`{field}` does not apply to `{}`", command.name())))
            } else {
                Ok(())
            }
        };
        let rounds = matches!(command, Command::Price | Command::BoyleSweep | Command::StrategyVerify);
        unused(!uses_market && self.move_set.is_some(), "move_set")?;
        unused(!uses_market && self.payoff.is_some(), "payoff")?;
        unused(!rounds && self.n.is_some(), "N")?;
        unused(command != Command::Converge && self.n_range.is_some(), "N_range")?;
        unused(command != Command::LimitPde && self.grid.is_some(), "grid")?;
        unused(command != Command::LimitGaussian && (self.gaussian.is_some() || self.sigma.is_some()), "gaussian/sigma")?;
        unused(command != Command::BoyleSweep && self.rho.is_some(), "rho")?;
        unused(
            command != Command::Census && (self.dim.is_some() || self.points.is_some() || self.samples.is_some()),
            "dim/points/samples",
        )?;
        let sided = matches!(command, Command::Price | Command::LimitPde | Command::LimitGaussian | Command::StrategyVerify);
        let fast = matches!(command, Command::Price | Command::Converge | Command::StrategyVerify);
        unused(!sided && self.side.is_some(), "side")?;
        unused(!fast && self.fast_path.is_some(), "fast_path")?;

        let seed = seed_override.or(self.seed).unwrap_or(DEFAULT_SEED);
        let default_scaling = match command {
            Command::Converge | Command::BoyleSweep => Scaling::SqrtN,
            _ => Scaling::None,
        };
        let move_set = uses_market.then(|| self.move_set.clone().unwrap_or(MoveSetSpec::Preset { preset: Preset::Chi1 }));
        let payoff = if uses_market {
            Some(self.payoff.clone().unwrap_or_else(default_payoff).resolved(default_scaling)?)
        } else {
            None
        };
        let n = match command {
            Command::Price => Some(self.n.unwrap_or(1)),
            Command::BoyleSweep => Some(self.n.unwrap_or(20)),
            Command::StrategyVerify => Some(self.n.unwrap_or(3)),
            _ => None,
        };
        if n == Some(0) {
            return Err(Error::Config("`N` must be at least 1".into()));
        }
        let n_range = (command == Command::Converge).then(|| self.n_range.unwrap_or([1, 20]));
        if let Some([a, b]) = n_range {
            if a == 0 || a > b {
                return Err(Error::Config("`N_range` must be [first, last] with 1 <= first <= last".into()));
            }
        }
        let side = sided.then(|| self.side.unwrap_or_default());
        let fast_path = fast.then(|| self.fast_path.unwrap_or_default());
        let grid = (command == Command::LimitPde).then(|| {
            let d = Grid::default();
            let g = self.grid.unwrap_or_default();
            Grid {
                delta_s: g.delta_s.unwrap_or(d.delta_s),
                steps: g.steps.unwrap_or(d.steps),
                half_cells: g.half_cells.unwrap_or(d.half_cells),
            }
        });
        if let Some(g) = &grid {
            g.validate()?;
        }
        let gaussian = (command == Command::LimitGaussian).then(|| match self.gaussian {
            None => GaussianMethod::default(),
            Some(GaussianSpec::Quadrature { half_width, panels, order }) => {
                GaussianMethod::Quadrature { half_width, panels, order }
            }
            Some(GaussianSpec::MonteCarlo { seed: s, samples }) => GaussianMethod::MonteCarlo {
                seed: s.unwrap_or(seed),
                samples: samples.unwrap_or(DEFAULT_MC_SAMPLES),
            },
        });
        let rho = (command == Command::BoyleSweep).then(|| self.rho.clone().unwrap_or_else(default_rho));
        if let Some(r) = &rho {
            if r.is_empty() || r.iter().any(|v| !(-1.0..=1.0).contains(v)) {
                return Err(Error::Config("`rho` values must lie in [-1, 1]".into()));
            }
        }
        let census = command == Command::Census;
        let dim = census.then(|| self.dim.unwrap_or(3));
        let samples = census.then(|| self.samples.unwrap_or(1000));

        let out = self.outputs.clone().unwrap_or_default();
        let default_csv = match command {
            Command::Converge => Some("series.csv"),
            Command::BoyleSweep => Some("boyle.csv"),
            _ => None,
        };
        let default_data = match command {
            Command::Census => Some("census.json"),
            _ => None,
        };
        let outputs = ResolvedOutputs {
            report: out.report.unwrap_or_else(|| "report.json".into()),
            csv: out.csv.or(default_csv.map(String::from)),
            data: out.data.or(default_data.map(String::from)),
        };

        Ok(ResolvedConfig {
            command,
            move_set,
            payoff,
            n,
            n_range,
            side,
            fast_path,
            grid,
            gaussian,
            sigma: self.sigma.clone(),
            rho,
            dim,
            points: self.points.clone(),
            samples,
            seed,
            outputs,
        })
    }
}
