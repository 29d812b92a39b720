//! Experiment configuration: the TOML schema and its translation into
//! validated core objects. Unknown keys are rejected everywhere.

use std::path::PathBuf;

use mfspec_core::observables::ObservableSpec;
use mfspec_core::observables::{LocalPotential, MatrixCocycle, MatrixNorm, WeightRule};
use mfspec_core::pressure::{CurveOptions, Endpoint, LimitMode, SlackGrowth};
use mfspec_core::spectra::SpectrumOptions;
use mfspec_core::symbolic::{ReferenceMeasure, ShiftSpace};
use mfspec_core::{Error, Grid, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default = "default_depths")]
    pub depths: Vec<usize>,
    pub space: SpaceConfig,
    #[serde(default)]
    pub measure: MeasureConfig,
    pub observable: ObservableConfig,
    #[serde(default)]
    pub grids: GridsConfig,
    #[serde(default)]
    pub limit: LimitConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mc: Option<McConfig>,
    #[serde(default)]
    pub check: CheckConfig,
    // Execution and output placement do not change any number, so they are
    // left out of the configuration echoed into JSON outputs.
    #[serde(default, skip_serializing)]
    pub run: RunConfig,
    #[serde(default, skip_serializing)]
    pub outputs: OutputsConfig,
}

fn default_depths() -> Vec<usize> {
    vec![4, 8, 16]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceConfig {
    pub alphabet: usize,
    /// 0/1 transition rows; omitted for the full shift.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transitions: Option<Vec<Vec<u8>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MeasureConfig {
    Uniform {},
    Bernoulli {
        probabilities: Vec<f64>,
    },
    Markov {
        rows: Vec<Vec<f64>>,
    },
    Parry {},
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialConfig {
    FirstSymbol {},
    PairIndicator {},
    Constant { value: f64 },
    Table { window: usize, values: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case", deny_unknown_fields)]
pub enum WeightConfig {
    Constant { value: f64 },
    Alternating { gamma: f64 },
    Periodic { values: Vec<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum NormConfig {
    #[default]
    Sum,
    Operator,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ObservableConfig {
    /// Number of ones among the first `n` symbols.
    Coin {},
    Birkhoff {
        potential: PotentialConfig,
    },
    Weighted {
        potential: PotentialConfig,
        weights: WeightConfig,
    },
    Cocycle {
        dim: usize,
        #[serde(default = "one")]
        window: usize,
        matrices: Vec<Vec<f64>>,
        #[serde(default)]
        norm: NormConfig,
    },
    /// `−log ν` of the cylinder, with `ν` the configured measure.
    LocalEntropy {},
}

impl Default for MeasureConfig {
    fn default() -> Self {
        MeasureConfig::Uniform {}
    }
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridsConfig {
    pub q_min: f64,
    pub q_max: f64,
    pub q_step: f64,
    /// Both ends set: fixed α-grid. Otherwise it spans the estimated domain.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_max: Option<f64>,
    pub alpha_step: f64,
    pub alpha_pad: f64,
}

impl Default for GridsConfig {
    fn default() -> Self {
        GridsConfig {
            q_min: -20.0,
            q_max: 20.0,
            q_step: 0.05,
            alpha_min: None,
            alpha_max: None,
            alpha_step: 0.005,
            alpha_pad: 0.05,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ModeConfig {
    #[default]
    Cauchy,
    Fekete,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum EndpointConfig {
    #[default]
    Sup,
    Inf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SlackConfig {
    #[default]
    Zero,
    Constant,
    Logarithmic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LimitConfig {
    pub mode: ModeConfig,
    pub tolerance: f64,
    pub endpoint: EndpointConfig,
    /// Fekete mode only: constant part `D` of the two-sided defect.
    pub defect: f64,
    pub slack: SlackConfig,
    pub slack_c: f64,
}

impl Default for LimitConfig {
    fn default() -> Self {
        LimitConfig {
            mode: ModeConfig::Cauchy,
            tolerance: 1e-6,
            endpoint: EndpointConfig::Sup,
            defect: 0.0,
            slack: SlackConfig::Zero,
            slack_c: 0.0,
        }
    }
}

/// Either a fixed tilt or the literal `"auto"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TiltConfig {
    Fixed(f64),
    Named(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McConfig {
    pub n: usize,
    pub interval: [f64; 2],
    #[serde(default = "default_samples")]
    pub samples: u64,
    #[serde(default)]
    pub seed: u64,
    /// Omitted for plain sampling.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tilt: Option<TiltConfig>,
}

fn default_samples() -> u64 {
    100_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CheckConfig {
    pub ahlfors_bowen_depth: usize,
    pub variation_depth: usize,
    /// Defaults to `l^{−(k−1)}` for a window-`k` observable.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variation_epsilon: Option<f64>,
    pub defect_depth: usize,
}

impl Default for CheckConfig {
    fn default() -> Self {
        CheckConfig {
            ahlfors_bowen_depth: 10,
            variation_depth: 8,
            variation_epsilon: None,
            defect_depth: 6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub shards: Option<usize>,
    pub budget: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
    #[default]
    Both,
}

impl Format {
    pub fn csv(self) -> bool {
        matches!(self, Format::Csv | Format::Both)
    }

    pub fn json(self) -> bool {
        matches!(self, Format::Json | Format::Both)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct OutputsConfig {
    pub dir: Option<PathBuf>,
    pub format: Option<Format>,
    /// File-name prefix, e.g. `coin` gives `coin_spectrum.csv`.
    pub prefix: Option<String>,
}

fn bad(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

/// Everything the pipelines need, built and validated up front.
pub struct Experiment {
    pub space: ShiftSpace,
    pub measure: ReferenceMeasure,
    pub spec: ObservableSpec,
}

impl Config {
    pub fn parse(text: &str) -> Result<Config> {
        toml::from_str(text).map_err(|e| Error::Parse(e.message().replace('\n', " ")))
    }

    #[cfg(test)]
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn build(&self) -> Result<Experiment> {
        let space = self.space.build()?;
        let measure = self.measure.build(&space)?;
        measure.check_compatible(&space)?;
        let spec = self.observable.build(space.alphabet(), &measure)?;
        spec.validate(&space)?;
        self.curve_options()?;
        self.spectrum_options()?;
        if self.depths.len() < 3
            || self.depths.windows(2).any(|w| w[0] >= w[1])
            || self.depths[0] == 0
        {
            return Err(bad(
                "depths must be at least three strictly increasing positive integers",
            ));
        }
        if let Some(mc) = &self.mc {
            mc.validate()?;
        }
        Ok(Experiment {
            space,
            measure,
            spec,
        })
    }

    pub fn q_grid(&self) -> Result<Grid> {
        Grid::from_range(self.grids.q_min, self.grids.q_max, self.grids.q_step)
    }

    pub fn curve_options(&self) -> Result<CurveOptions> {
        let l = &self.limit;
        if !(l.tolerance > 0.0) {
            return Err(bad("limit.tolerance must be positive"));
        }
        let slack = match l.slack {
            SlackConfig::Zero => SlackGrowth::Zero,
            SlackConfig::Constant => SlackGrowth::Constant { c: l.slack_c },
            SlackConfig::Logarithmic => SlackGrowth::Logarithmic { c: l.slack_c },
        };
        let mode = match l.mode {
            ModeConfig::Cauchy => LimitMode::Cauchy,
            ModeConfig::Fekete => {
                if !(l.defect >= 0.0 && l.slack_c >= 0.0) {
                    return Err(bad("limit.defect and limit.slack_c must be non-negative"));
                }
                LimitMode::Fekete {
                    defect: l.defect,
                    slack,
                }
            }
        };
        Ok(CurveOptions {
            mode,
            tolerance: l.tolerance,
            endpoint: match l.endpoint {
                EndpointConfig::Sup => Endpoint::Sup,
                EndpointConfig::Inf => Endpoint::Inf,
            },
        })
    }

    pub fn spectrum_options(&self) -> Result<SpectrumOptions> {
        let g = &self.grids;
        let alpha_grid = match (g.alpha_min, g.alpha_max) {
            (Some(a), Some(b)) => Some(Grid::snapped(a, b, g.alpha_step)?),
            (None, None) => None,
            _ => {
                return Err(bad(
                    "set both grids.alpha_min and grids.alpha_max, or neither",
                ))
            }
        };
        if !(g.alpha_step > 0.0 && g.alpha_pad >= 0.0) {
            return Err(bad(
                "grids.alpha_step must be positive and alpha_pad non-negative",
            ));
        }
        Ok(SpectrumOptions {
            q_grid: self.q_grid()?,
            alpha_grid,
            alpha_step: g.alpha_step,
            alpha_pad: g.alpha_pad,
            depths: self.depths.clone(),
            curve: self.curve_options()?,
            ahlfors_bowen_depth: self.check.ahlfors_bowen_depth,
        })
    }
}

impl SpaceConfig {
    fn build(&self) -> Result<ShiftSpace> {
        match &self.transitions {
            None => ShiftSpace::full(self.alphabet),
            Some(rows) => {
                if rows.len() != self.alphabet {
                    return Err(bad(format!(
                        "space.transitions has {} rows for alphabet {}",
                        rows.len(),
                        self.alphabet
                    )));
                }
                ShiftSpace::subshift(rows)
            }
        }
    }
}

impl MeasureConfig {
    fn build(&self, space: &ShiftSpace) -> Result<ReferenceMeasure> {
        match self {
            MeasureConfig::Uniform {} => {
                if space.is_full() {
                    ReferenceMeasure::uniform(space.alphabet())
                } else {
                    Err(Error::InvalidMeasure(
                        "uniform measure needs the full shift; use parry".into(),
                    ))
                }
            }
            MeasureConfig::Bernoulli { probabilities } => {
                ReferenceMeasure::bernoulli(probabilities.clone())
            }
            MeasureConfig::Markov { rows } => ReferenceMeasure::markov(rows),
            MeasureConfig::Parry {} => ReferenceMeasure::parry(space),
        }
    }
}

impl PotentialConfig {
    fn build(&self, l: usize) -> Result<LocalPotential> {
        match self {
            PotentialConfig::FirstSymbol {} => Ok(LocalPotential::first_symbol(l)),
            PotentialConfig::PairIndicator {} => {
                if l != 2 {
                    return Err(Error::InvalidObservable(
                        "pair_indicator needs alphabet 2".into(),
                    ));
                }
                Ok(LocalPotential::pair_indicator())
            }
            PotentialConfig::Constant { value } => Ok(LocalPotential::constant(l, *value)),
            PotentialConfig::Table { window, values } => {
                LocalPotential::new(l, *window, values.clone())
            }
        }
    }
}

impl ObservableConfig {
    fn build(&self, l: usize, measure: &ReferenceMeasure) -> Result<ObservableSpec> {
        match self {
            ObservableConfig::Coin {} => {
                if l != 2 {
                    return Err(Error::InvalidObservable("coin needs alphabet 2".into()));
                }
                Ok(ObservableSpec::coin())
            }
            ObservableConfig::Birkhoff { potential } => {
                ObservableSpec::birkhoff(potential.build(l)?)
            }
            ObservableConfig::Weighted { potential, weights } => {
                let rule = match weights {
                    WeightConfig::Constant { value } => WeightRule::Constant { value: *value },
                    WeightConfig::Alternating { gamma } => {
                        WeightRule::Alternating { gamma: *gamma }
                    }
                    WeightConfig::Periodic { values } => WeightRule::Periodic {
                        values: values.clone(),
                    },
                };
                ObservableSpec::weighted(potential.build(l)?, rule)
            }
            ObservableConfig::Cocycle {
                dim,
                window,
                matrices,
                norm,
            } => {
                let norm = match norm {
                    NormConfig::Sum => MatrixNorm::Sum,
                    NormConfig::Operator => MatrixNorm::Operator,
                };
                ObservableSpec::cocycle(MatrixCocycle::new(
                    l,
                    *window,
                    *dim,
                    matrices.clone(),
                    norm,
                )?)
            }
            ObservableConfig::LocalEntropy {} => Ok(ObservableSpec::local_entropy(measure.clone())),
        }
    }
}

impl McConfig {
    fn validate(&self) -> Result<()> {
        if self.n == 0 || self.samples == 0 {
            return Err(bad("mc.n and mc.samples must be positive"));
        }
        if !(self.interval[0] <= self.interval[1]) {
            return Err(bad("mc.interval must satisfy a ≤ b"));
        }
        match &self.tilt {
            Some(TiltConfig::Named(s)) if s != "auto" => Err(bad(format!(
                "mc.tilt must be a number or \"auto\", got {s:?}"
            ))),
            Some(TiltConfig::Fixed(q)) if !q.is_finite() => Err(bad("mc.tilt must be finite")),
            _ => Ok(()),
        }
    }
}
