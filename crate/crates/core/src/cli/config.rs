//! Run configuration: a single JSON document per run.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Deserialize;
use serde_json::Value;

use crate::bands::{BandFunction, DensityBand, DEFAULT_UPPER_CAP};
use crate::bcd::{SelectionRule, WeightMatrix};
use crate::grid::Grid;
use crate::integrand::{CostProfile, Integrand, MinimaxDetect, Quadratic, Sampled, WeightedKl};
use crate::oracle::{gaussian_band, gaussian_band_function, gaussian_samples};
use crate::{Error, Result};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveConfig {
    pub grid: GridSpec,
    pub densities: Vec<DensitySpec>,
    pub objective: ObjectiveSpec,
    #[serde(default)]
    pub algorithm: Algorithm,
    pub epsilon: f64,
    #[serde(default)]
    pub rule: RuleName,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub max_iter: Option<usize>,
    #[serde(default)]
    pub max_outer: Option<usize>,
    #[serde(default)]
    pub rho: Option<f64>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    /// Seeded runs per setting for the random rule in `compare-rules`.
    #[serde(default = "default_random_runs")]
    pub random_runs: usize,
    /// Weight settings swept by `compare-rules`; defaults to the objective's own.
    #[serde(default)]
    pub alphas: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub verify: VerifySpec,
}

fn default_random_runs() -> usize {
    100
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum DensitySpec {
    /// `lo_scale` and `hi_scale` times a Gaussian density; starts from the
    /// Gaussian itself.
    GaussianBand { mean: f64, variance: f64, lo_scale: f64, hi_scale: f64 },
    /// Sampled bounds; `upper` entries may be `"inf"` or `null`.
    Explicit {
        lower: Vec<Value>,
        upper: Vec<Value>,
        #[serde(default)]
        init: Option<Vec<f64>>,
    },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum ObjectiveSpec {
    WeightedKl { alpha: Vec<f64> },
    MinimaxDetect {
        #[serde(default)]
        costs: Costs,
    },
    /// `1/2 sum_n (x_n - target_n)^2` with constant targets.
    Quadratic { targets: Vec<f64> },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum Costs {
    /// Only `"standard"` is recognized: `1 + cos(pi omega)` and `2 exp(-|omega|)`.
    Preset(String),
    Sampled { r1: Vec<f64>, r2: Vec<f64> },
}

impl Default for Costs {
    fn default() -> Self {
        Costs::Preset("standard".into())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    #[default]
    Bcd,
    Prox,
}

impl Algorithm {
    pub fn label(self) -> &'static str {
        match self {
            Algorithm::Bcd => "bcd",
            Algorithm::Prox => "prox",
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleName {
    #[default]
    LargestResidual,
    Cyclic,
    Random,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySpec {
    /// Grid step for the cross-check; both solvers run on it. Requires
    /// parametric bands.
    #[serde(default)]
    pub step: Option<f64>,
    #[serde(default)]
    pub tolerance: Option<f64>,
    #[serde(default)]
    pub smoothing: Option<f64>,
}

impl SolveConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: SolveConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn dim(&self) -> usize {
        match &self.objective {
            ObjectiveSpec::WeightedKl { alpha } => alpha.len() + 1,
            ObjectiveSpec::MinimaxDetect { .. } => 2,
            ObjectiveSpec::Quadratic { targets } => targets.len(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let field = |name: &str, msg: String| Err(Error::Config(format!("{name}: {msg}")));
        if !(self.epsilon > 0.0) {
            return field("epsilon", format!("must be positive, got {}", self.epsilon));
        }
        if !(self.grid.step > 0.0) || !(self.grid.hi > self.grid.lo) {
            return field("grid", "need lo < hi and step > 0".into());
        }
        if self.dim() == 0 {
            return field("objective", "needs at least one density".into());
        }
        if self.densities.len() != self.dim() {
            return field(
                "densities",
                format!("objective needs {} densities, got {}", self.dim(), self.densities.len()),
            );
        }
        if self.rule == RuleName::Random && self.seed.is_none() {
            return field("seed", "required when rule is \"random\"".into());
        }
        if let Some(rho) = self.rho {
            if !(rho > 0.0) {
                return field("rho", format!("must be positive, got {rho}"));
            }
        }
        if matches!(self.max_iter, Some(0)) {
            return field("max_iter", "must be at least 1".into());
        }
        if matches!(self.max_outer, Some(0)) {
            return field("max_outer", "must be at least 1".into());
        }
        if let ObjectiveSpec::MinimaxDetect { costs: Costs::Preset(p) } = &self.objective {
            if p != "standard" {
                return field("objective.costs", format!("unknown preset {p:?}"));
            }
        }
        if let Some(alphas) = &self.alphas {
            if !matches!(self.objective, ObjectiveSpec::WeightedKl { .. }) {
                return field("alphas", "only valid for weighted_kl".into());
            }
            if alphas.iter().any(|a| a.len() + 1 != self.dim()) {
                return field("alphas", format!("every setting needs {} weights", self.dim() - 1));
            }
        }
        Ok(())
    }

    /// Base selection rule; `compare-rules` substitutes its own.
    pub fn selection_rule(&self) -> SelectionRule {
        match self.rule {
            RuleName::LargestResidual => SelectionRule::LargestResidual,
            RuleName::Cyclic => SelectionRule::Cyclic,
            RuleName::Random => SelectionRule::Random(self.seed.unwrap_or(0)),
        }
    }

    pub fn build(&self) -> Result<Problem> {
        let grid = Grid::uniform(self.grid.lo, self.grid.hi, self.grid.step)
            .map_err(|e| Error::Config(format!("grid: {e}")))?;
        self.build_on(grid)
    }

    /// Builds the problem on another grid; explicit bands cannot be resampled.
    pub fn build_on(&self, grid: Grid) -> Result<Problem> {
        let grid = Arc::new(grid);
        let k = grid.len();
        let mut bands = Vec::with_capacity(self.densities.len());
        let mut functions = Some(Vec::with_capacity(self.densities.len()));
        let mut rows = Vec::with_capacity(self.densities.len());
        for (n, spec) in self.densities.iter().enumerate() {
            let ctx = |e: Error| Error::Config(format!("densities[{n}]: {e}"));
            match spec {
                DensitySpec::GaussianBand { mean, variance, lo_scale, hi_scale } => {
                    let band = gaussian_band(*mean, *variance, *lo_scale, *hi_scale, &grid).map_err(ctx)?;
                    rows.push(band.fit(&gaussian_samples(&grid, *mean, *variance), &grid).map_err(ctx)?);
                    if let Some(f) = functions.as_mut() {
                        f.push(gaussian_band_function(*mean, *variance, *lo_scale, *hi_scale));
                    }
                    bands.push(band);
                }
                DensitySpec::Explicit { lower, upper, init } => {
                    let lower = parse_bounds(n, "lower", lower, k)?;
                    let upper = parse_bounds(n, "upper", upper, k)?;
                    let band = DensityBand::new(lower, upper).map_err(ctx)?;
                    band.validate(&grid).map_err(ctx)?;
                    let row = match init {
                        Some(v) if v.len() != k => {
                            return Err(Error::Config(format!(
                                "densities[{n}].init: expected {k} values, got {}",
                                v.len()
                            )))
                        }
                        Some(v) => band.fit(v, &grid).map_err(ctx)?,
                        None => band.feasible_init(&grid, DEFAULT_UPPER_CAP).map_err(ctx)?,
                    };
                    rows.push(row);
                    bands.push(band);
                    functions = None;
                }
            }
        }
        let objective = match &self.objective {
            ObjectiveSpec::WeightedKl { alpha } => {
                Objective::WeightedKl(WeightedKl::new(alpha.clone()).map_err(|e| Error::Config(format!("objective.alpha: {e}")))?)
            }
            ObjectiveSpec::MinimaxDetect { costs: Costs::Preset(_) } => Objective::Minimax(MinimaxDetect::standard_costs()),
            ObjectiveSpec::MinimaxDetect { costs: Costs::Sampled { r1, r2 } } => {
                let profile = |name: &str, v: &Vec<f64>| {
                    Sampled::new(grid.clone(), v.clone())
                        .map(CostProfile::Sampled)
                        .map_err(|e| Error::Config(format!("objective.costs.{name}: {e}")))
                };
                Objective::Minimax(MinimaxDetect::new(profile("r1", r1)?, profile("r2", r2)?))
            }
            ObjectiveSpec::Quadratic { targets } => Objective::Quadratic(Quadratic::constant(targets.clone())),
        };
        let init = WeightMatrix::from_rows(rows)?;
        Ok(Problem { grid, bands, band_functions: functions, objective, init })
    }
}

fn parse_bounds(n: usize, name: &str, values: &[Value], k: usize) -> Result<Vec<f64>> {
    let err = |msg: String| Error::Config(format!("densities[{n}].{name}: {msg}"));
    if values.len() != k {
        return Err(err(format!("expected {k} values, got {}", values.len())));
    }
    values
        .iter()
        .enumerate()
        .map(|(i, v)| match v {
            Value::Number(x) => x.as_f64().ok_or_else(|| err(format!("entry {i} is not a float"))),
            Value::Null if name == "upper" => Ok(f64::INFINITY),
            Value::String(s) if name == "upper" && (s == "inf" || s == "+inf") => Ok(f64::INFINITY),
            other => Err(err(format!("entry {i}: unsupported value {other}"))),
        })
        .collect()
}

#[derive(Debug, Clone)]
pub enum Objective {
    WeightedKl(WeightedKl),
    Minimax(MinimaxDetect),
    Quadratic(Quadratic),
}

impl Objective {
    pub fn integrand(&self) -> &dyn Integrand {
        match self {
            Objective::WeightedKl(f) => f,
            Objective::Minimax(f) => f,
            Objective::Quadratic(f) => f,
        }
    }
}

/// A validated, discretized problem ready for the solvers.
#[derive(Debug, Clone)]
pub struct Problem {
    pub grid: Arc<Grid>,
    pub bands: Vec<DensityBand>,
    /// Continuous band functions, present when every band is parametric.
    pub band_functions: Option<Vec<BandFunction>>,
    pub objective: Objective,
    pub init: WeightMatrix,
}

impl Problem {
    pub fn with_alpha(&self, alpha: &[f64]) -> Result<Problem> {
        let mut p = self.clone();
        p.objective = Objective::WeightedKl(WeightedKl::new(alpha.to_vec())?);
        Ok(p)
    }
}
