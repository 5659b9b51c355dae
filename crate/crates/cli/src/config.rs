//! Experiment configuration: a strict TOML document with one table per block.
//!
//! ```toml
//! mode = "rbm"
//!
//! [model]
//! geometry = "chain"
//! sites = 6
//! boundary = "periodic"
//! jx = 1.0
//! jy = 1.0
//! jz = 2.0
//! gamma = 3.0
//!
//! [sampler]
//! seed = 7
//! ```

use std::path::PathBuf;

use lgap::optimizer::{BetaMode, OptimizerConfig};
use lgap::{
    AncillaryState, Boundary, ChainConfig, Lattice, LindbladModel, LogDerivativeVariant,
};
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Hidden-unit ratios outside this range draw a warning.
pub const RECOMMENDED_RATIO: (f64, f64) = (3.0, 6.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Rbm,
    Ed,
    Bethe,
    Meanfield,
    Compare,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Self::Rbm => "rbm",
            Self::Ed => "ed",
            Self::Bethe => "bethe",
            Self::Meanfield => "meanfield",
            Self::Compare => "compare",
        }
    }

    fn needs_seed(self) -> bool {
        matches!(self, Self::Rbm | Self::Compare)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GeometryKind {
    #[default]
    Chain,
    Square,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundaryKind {
    #[default]
    Periodic,
    Open,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AncillaryKind {
    Identity,
    #[default]
    AllDown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VariantKind {
    #[default]
    ChainRule,
    RbmOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    #[serde(default)]
    pub geometry: GeometryKind,
    /// Chain length.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sites: Option<usize>,
    /// Square-lattice extents.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lx: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ly: Option<usize>,
    #[serde(default)]
    pub boundary: BoundaryKind,
    pub jx: f64,
    pub jy: f64,
    pub jz: f64,
    pub gamma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RbmConfig {
    /// Explicit number of hidden units; overrides `hidden_ratio`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hidden: Option<usize>,
    pub hidden_ratio: f64,
    pub init_scale: f64,
    pub ancillary: AncillaryKind,
    pub variant: VariantKind,
}

impl Default for RbmConfig {
    fn default() -> Self {
        Self {
            hidden: None,
            hidden_ratio: 3.0,
            init_scale: 0.01,
            ancillary: AncillaryKind::default(),
            variant: VariantKind::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SamplerConfig {
    /// Recorded samples per chain, burn-in included.
    pub samples: usize,
    pub burn_in: f64,
    pub chains: usize,
    /// Required for sampling modes; there is no entropy default.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub max_flips: usize,
    pub sweep: usize,
    pub exact_summation: bool,
    pub trace_samples: usize,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        let c = ChainConfig::default();
        Self {
            samples: c.samples,
            burn_in: c.burn_in,
            chains: c.chains,
            seed: None,
            max_flips: c.max_flips,
            sweep: c.sweep,
            exact_summation: false,
            trace_samples: OptimizerConfig::default().trace_samples,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizerSection {
    pub max_iters: usize,
    pub min_iters: usize,
    pub beta: f64,
    pub two_phase: bool,
    pub window: usize,
    pub tolerance: f64,
}

impl Default for OptimizerSection {
    fn default() -> Self {
        let o = OptimizerConfig::default();
        Self {
            max_iters: o.max_iters,
            min_iters: o.min_iters,
            beta: o.beta,
            two_phase: o.beta_mode == BetaMode::TwoPhase,
            window: o.window,
            tolerance: o.tolerance,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("lgap-out"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// May be omitted when the mode is given on the command line.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<Mode>,
    pub model: ModelConfig,
    #[serde(default)]
    pub rbm: RbmConfig,
    #[serde(default)]
    pub sampler: SamplerConfig,
    #[serde(default)]
    pub optimizer: OptimizerSection,
    #[serde(default)]
    pub output: OutputConfig,
}

/// Deserializes without validation, for callers that apply overrides first.
pub fn parse_document(text: &str) -> Result<ExperimentConfig, CliError> {
    toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
}

/// Parses and validates a configuration. Mode-specific checks run only when the
/// document names a mode; see [`ExperimentConfig::validate`].
pub fn parse_config(text: &str) -> Result<ExperimentConfig, CliError> {
    let cfg = parse_document(text)?;
    cfg.check_common()?;
    if let Some(mode) = cfg.mode {
        cfg.validate(mode)?;
    }
    Ok(cfg)
}

impl ExperimentConfig {
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    fn check_common(&self) -> Result<(), CliError> {
        let m = &self.model;
        for (name, v) in [("jx", m.jx), ("jy", m.jy), ("jz", m.jz), ("gamma", m.gamma)] {
            if !v.is_finite() {
                return Err(CliError::Config(format!("model.{name} must be finite")));
            }
        }
        if m.gamma < 0.0 {
            return Err(CliError::Config(format!(
                "model.gamma must be >= 0, got {}",
                m.gamma
            )));
        }
        match m.geometry {
            GeometryKind::Chain => {
                if m.sites.is_none() {
                    return Err(CliError::Config("model.sites is required for a chain".into()));
                }
                if m.lx.is_some() || m.ly.is_some() {
                    return Err(CliError::Config(
                        "model.lx/ly only apply to geometry = \"square\"".into(),
                    ));
                }
            }
            GeometryKind::Square => {
                if m.lx.is_none() || m.ly.is_none() {
                    return Err(CliError::Config(
                        "model.lx and model.ly are required for a square lattice".into(),
                    ));
                }
                if m.sites.is_some() {
                    return Err(CliError::Config(
                        "model.sites only applies to geometry = \"chain\"".into(),
                    ));
                }
            }
        }
        let r = &self.rbm;
        if !(r.hidden_ratio > 0.0 && r.hidden_ratio.is_finite()) {
            return Err(CliError::Config("rbm.hidden_ratio must be positive".into()));
        }
        if !(r.init_scale > 0.0 && r.init_scale.is_finite()) {
            return Err(CliError::Config("rbm.init_scale must be positive".into()));
        }
        if r.hidden == Some(0) {
            return Err(CliError::Config("rbm.hidden must be positive".into()));
        }
        self.optimizer_config(0)
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
        self.lattice()?;
        Ok(())
    }

    /// Checks the requirements of `mode` and logs advisory warnings.
    pub fn validate(&self, mode: Mode) -> Result<(), CliError> {
        self.check_common()?;
        if mode.needs_seed() && self.sampler.seed.is_none() {
            return Err(CliError::Config(format!(
                "sampler.seed is required in {} mode",
                mode.name()
            )));
        }
        let model = self.model()?;
        match mode {
            Mode::Rbm | Mode::Compare => {
                let (lo, hi) = RECOMMENDED_RATIO;
                let ratio = self.hidden_units()? as f64 / model.sites() as f64;
                if ratio < lo || ratio > hi {
                    log::warn!(
                        "hidden-unit ratio {ratio} lies outside the recommended range [{lo}, {hi}]"
                    );
                }
            }
            Mode::Bethe => {
                if !model.is_isotropic()
                    || self.model.geometry != GeometryKind::Chain
                    || self.model.boundary != BoundaryKind::Periodic
                {
                    return Err(CliError::Config(
                        "bethe mode needs a periodic chain with jx = jy".into(),
                    ));
                }
                if model.sites() < 3 {
                    return Err(CliError::Config("bethe mode needs at least 3 sites".into()));
                }
            }
            Mode::Meanfield => {
                if !(self.model.gamma > 0.0) {
                    return Err(CliError::Config("meanfield mode needs gamma > 0".into()));
                }
            }
            Mode::Ed => {}
        }
        Ok(())
    }

    pub fn lattice(&self) -> Result<Lattice, CliError> {
        let boundary = match self.model.boundary {
            BoundaryKind::Periodic => Boundary::Periodic,
            BoundaryKind::Open => Boundary::Open,
        };
        let lattice = match self.model.geometry {
            GeometryKind::Chain => Lattice::chain(self.model.sites.unwrap_or(0), boundary),
            GeometryKind::Square => Lattice::square(
                self.model.lx.unwrap_or(0),
                self.model.ly.unwrap_or(0),
                boundary,
            ),
        };
        lattice.map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn model(&self) -> Result<LindbladModel, CliError> {
        let m = &self.model;
        LindbladModel::xyz(self.lattice()?, m.jx, m.jy, m.jz, m.gamma)
            .map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn hidden_units(&self) -> Result<usize, CliError> {
        let n = self.lattice()?.sites();
        Ok(self
            .rbm
            .hidden
            .unwrap_or_else(|| ((self.rbm.hidden_ratio * n as f64).round() as usize).max(1)))
    }

    pub fn ancillary(&self, sites: usize) -> AncillaryState {
        match self.rbm.ancillary {
            AncillaryKind::Identity => AncillaryState::Identity,
            AncillaryKind::AllDown => AncillaryState::all_down(sites),
        }
    }

    pub fn variant(&self) -> LogDerivativeVariant {
        match self.rbm.variant {
            VariantKind::ChainRule => LogDerivativeVariant::ChainRule,
            VariantKind::RbmOnly => LogDerivativeVariant::RbmOnly,
        }
    }

    pub fn optimizer_config(&self, seed: u64) -> OptimizerConfig {
        let s = &self.sampler;
        let o = &self.optimizer;
        OptimizerConfig {
            max_iters: o.max_iters,
            window: o.window,
            tolerance: o.tolerance,
            min_iters: o.min_iters,
            beta: o.beta,
            beta_mode: if o.two_phase {
                BetaMode::TwoPhase
            } else {
                BetaMode::Joint
            },
            chain: ChainConfig {
                samples: s.samples,
                burn_in: s.burn_in,
                chains: s.chains,
                seed,
                max_flips: s.max_flips,
                sweep: s.sweep,
                exact: s.exact_summation,
            },
            trace_samples: s.trace_samples,
            seed,
        }
    }
}
