//! Run configuration, read from JSON. Every field has a default.

use std::path::Path;

use serde::{Deserialize, Serialize};
use topoflow_core::fd::{FdConfig, PerturbationSpec};
use topoflow_core::flow::{Backend, Gap, LoopSpec, Orientation};
use topoflow_core::scatter::{LoopKind as ScatterKind, ScatterLoop};
use topoflow_core::ModelParams;

use crate::{CliError, CliResult};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub f: f64,
    pub nu: f64,
    pub fd: FdSettings,
    /// Lattice size for Chern numbers.
    pub chern_grid: usize,
    /// Points per axis of the band table, on `[-band_extent, band_extent]^2`.
    pub band_grid: usize,
    pub band_extent: f64,
    pub loops: Vec<FlowLoop>,
    pub samples: usize,
    pub gap: GapName,
    /// Levels at which edge branch crossings are counted.
    pub levels: Vec<f64>,
    /// `c` of the perturbation `c exp(-y) I` (fd backend only).
    pub perturbation: Option<f64>,
    pub scatter_loops: Vec<ScatterLoopConfig>,
    pub scatter_samples: usize,
    pub robin: RobinSettings,
    pub backend: BackendName,
    /// Seed of the randomized checks in `verify`.
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            f: 1.0,
            nu: 0.2,
            fd: FdSettings::default(),
            chern_grid: 100,
            band_grid: 101,
            band_extent: 4.0,
            loops: vec![FlowLoop::Circle { radius: 1.0 }, FlowLoop::Circle { radius: 2.0 }, FlowLoop::Circle { radius: 4.0 }],
            samples: 512,
            gap: GapName::Upper,
            levels: vec![0.25, 0.5, 0.75],
            perturbation: None,
            scatter_loops: vec![
                ScatterLoopConfig::CR { r: 1.0, eps: 0.05 },
                ScatterLoopConfig::CR { r: 2.0, eps: 0.05 },
                ScatterLoopConfig::CR { r: 4.0, eps: 0.05 },
                ScatterLoopConfig::Gamma { delta: 0.5, a0: -1.0 },
                ScatterLoopConfig::Ell { alpha: 0.1 },
            ],
            scatter_samples: 256,
            robin: RobinSettings::default(),
            backend: BackendName::Semi,
            seed: 2024,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FdSettings {
    pub length: f64,
    pub n: usize,
}

impl Default for FdSettings {
    fn default() -> Self {
        FdSettings { length: 40.0, n: 4000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GapName {
    Upper,
    Lower,
}

impl From<GapName> for Gap {
    fn from(g: GapName) -> Gap {
        match g {
            GapName::Upper => Gap::Upper,
            GapName::Lower => Gap::Lower,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FlowLoop {
    Circle { radius: f64 },
    FixedKx { kx: f64 },
    AroundPuncture { kx_radius: f64, a_radius: f64 },
    /// `kind` as above, traversed backwards.
    Reversed { of: Box<FlowLoop> },
}

impl FlowLoop {
    pub fn label(&self) -> String {
        match self {
            FlowLoop::Circle { radius } => format!("C_R(R={radius})"),
            FlowLoop::FixedKx { kx } => format!("fixed_kx(kx={kx})"),
            FlowLoop::AroundPuncture { kx_radius, a_radius } => format!("ell0(rx={kx_radius},ra={a_radius})"),
            FlowLoop::Reversed { of } => format!("reversed({})", of.label()),
        }
    }

    pub fn spec(&self, samples: usize) -> topoflow_core::Result<LoopSpec> {
        use topoflow_core::flow::LoopKind;
        match self {
            FlowLoop::Circle { radius } => LoopSpec::circle(*radius, samples),
            FlowLoop::FixedKx { kx } => LoopSpec::fixed_kx(*kx, samples),
            FlowLoop::AroundPuncture { kx_radius, a_radius } => LoopSpec::new(
                LoopKind::AroundPuncture { kx_radius: *kx_radius, a_radius: *a_radius },
                samples,
                Orientation::Positive,
            ),
            FlowLoop::Reversed { of } => of.spec(samples).map(|s| s.reversed()),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScatterLoopConfig {
    #[serde(rename = "c_r")]
    CR { r: f64, eps: f64 },
    Gamma { delta: f64, a0: f64 },
    Ell { alpha: f64 },
    SquareC { eps: f64 },
    SquareGamma,
    SquareL,
}

impl ScatterLoopConfig {
    pub fn build(&self, samples: usize) -> ScatterLoop {
        match *self {
            ScatterLoopConfig::CR { r, eps } => ScatterLoop::new(ScatterKind::CrEpsilon { r, eps }, samples),
            ScatterLoopConfig::Gamma { delta, a0 } => ScatterLoop::new(ScatterKind::Gamma { delta, a0 }, samples),
            ScatterLoopConfig::Ell { alpha } => ScatterLoop::new(ScatterKind::EllAlpha { alpha }, samples),
            ScatterLoopConfig::SquareC { eps } => ScatterLoop::square_c(eps, samples),
            ScatterLoopConfig::SquareGamma => ScatterLoop::square_gamma(samples),
            ScatterLoopConfig::SquareL => ScatterLoop::square_l(samples),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RobinSettings {
    pub length: f64,
    pub n: usize,
    /// Values of `a` for the eigenvalue curve.
    pub a_values: Vec<f64>,
    /// Negative levels for the pump flow.
    pub levels: Vec<f64>,
    pub samples: usize,
}

impl Default for RobinSettings {
    fn default() -> Self {
        RobinSettings {
            length: 20.0,
            n: 4000,
            a_values: (1..=60).map(|i| 0.05 * i as f64).collect(),
            levels: vec![-1.0, -2.0],
            samples: 256,
        }
    }
}

/// Which spectral backend the flow commands use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum BackendName {
    Semi,
    Fd,
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> CliResult<RunConfig> {
        let cfg = match path {
            None => RunConfig::default(),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::Config(format!("cannot read {}: {e}", p.display())))?;
                serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?
            }
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Checks every field against the invariants of the numerical modules.
    pub fn validate(&self) -> CliResult<()> {
        self.params()?;
        self.fd_config()?.validate_for(&self.params()?)?;
        if self.chern_grid < 24 {
            return Err(CliError::Config(format!("chern_grid must be at least 24, got {}", self.chern_grid)));
        }
        if self.band_grid < 2 || !(self.band_extent > 0.0 && self.band_extent.is_finite()) {
            return Err(CliError::Config("band_grid must be at least 2 and band_extent positive".into()));
        }
        for l in &self.loops {
            l.spec(self.samples)?;
        }
        let f = self.f;
        for &m in &self.levels {
            if !(m.abs() > 0.0 && m.abs() < f) {
                return Err(CliError::Config(format!("level {m} is outside the global gap (0, {f})")));
            }
        }
        if let Some(c) = self.perturbation {
            self.perturbation_spec().validate(&self.fd_config()?)?;
            if !c.is_finite() {
                return Err(CliError::Config("perturbation strength must be finite".into()));
            }
        }
        for l in &self.scatter_loops {
            l.build(self.scatter_samples).validate()?;
        }
        let r = &self.robin;
        FdConfig::new(r.length, r.n)?;
        if r.levels.iter().any(|&m| !(m < 0.0 && m.is_finite())) {
            return Err(CliError::Config("Robin levels must be negative".into()));
        }
        if r.a_values.iter().any(|a| !a.is_finite()) {
            return Err(CliError::Config("Robin a values must be finite".into()));
        }
        Ok(())
    }

    pub fn params(&self) -> CliResult<ModelParams> {
        Ok(ModelParams::new(self.f, self.nu)?)
    }

    pub fn fd_config(&self) -> CliResult<FdConfig> {
        Ok(FdConfig::new(self.fd.length, self.fd.n)?)
    }

    pub fn backend(&self) -> CliResult<Backend> {
        Ok(match self.backend {
            BackendName::Semi => Backend::SemiAnalytic,
            BackendName::Fd => Backend::FdOracle(self.fd_config()?),
        })
    }

    pub fn perturbation_spec(&self) -> PerturbationSpec {
        match self.perturbation {
            Some(c) => PerturbationSpec::exp_identity(c),
            None => PerturbationSpec::None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        RunConfig::default().validate().unwrap();
    }

    #[test]
    fn missing_fields_take_defaults() {
        let cfg: RunConfig = serde_json::from_str(r#"{"nu": 0.1, "fd": {"n": 1000}}"#).unwrap();
        assert_eq!((cfg.f, cfg.nu, cfg.fd.length, cfg.fd.n), (1.0, 0.1, 40.0, 1000));
        assert_eq!(cfg.loops.len(), 3);
    }

    #[test]
    fn round_trip() {
        let cfg = RunConfig::default();
        let back: RunConfig = serde_json::from_str(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(serde_json::to_value(&back).unwrap(), serde_json::to_value(&cfg).unwrap());
    }

    #[test]
    fn rejects_bad_values() {
        let bad = [
            RunConfig { nu: 0.26, ..Default::default() },
            RunConfig { samples: 10, ..Default::default() },
            RunConfig { levels: vec![-1.5], ..Default::default() },
            RunConfig { scatter_loops: vec![ScatterLoopConfig::Gamma { delta: 1.5, a0: -1.0 }], ..Default::default() },
            RunConfig { loops: vec![FlowLoop::FixedKx { kx: 0.0 }], ..Default::default() },
        ];
        for cfg in bad {
            assert!(matches!(cfg.validate(), Err(CliError::Config(_))), "{cfg:?}");
        }
    }
}
