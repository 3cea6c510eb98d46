//! Run configuration files.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dipole::DEFAULT_HARMONICS;
use crate::error::{Error, Result};
use crate::floquet::{FloquetSolution, SolverConfig};
use crate::models::{self, ModelBundle, PeriodicHamiltonian};
use crate::response::{self, Populations, ResponseConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BuiltinModel {
    Benzene,
    Dimer,
    Tls,
}

impl BuiltinModel {
    /// Parameter names and defaults, in units of `Omega`.
    pub fn defaults(self) -> &'static [(&'static str, f64)] {
        match self {
            BuiltinModel::Benzene => &[("e0", 0.45), ("j0", 0.05), ("f", 1.0), ("omega", 1.0)],
            BuiltinModel::Dimer => &[("delta", 0.2), ("j0", 0.05), ("r", 2.0), ("f", 1.0), ("omega", 1.0)],
            BuiltinModel::Tls => &[("h_x", 0.05), ("f", 1.0), ("omega", 1.0)],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSource {
    /// Energies in units of `Omega`; `omega` sets the absolute scale.
    Builtin {
        name: BuiltinModel,
        #[serde(default)]
        params: BTreeMap<String, f64>,
    },
    /// Custom-model document; relative paths resolve against the config file.
    Custom { path: PathBuf },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl Grid {
    pub fn validate(&self, field: &str) -> Result<()> {
        if self.count == 0 {
            return Err(Error::Validation(format!("{field}: grid count must be >= 1")));
        }
        if !(self.start.is_finite() && self.stop.is_finite()) || self.stop < self.start {
            return Err(Error::Validation(format!(
                "{field}: need finite start <= stop, got [{}, {}]",
                self.start, self.stop
            )));
        }
        Ok(())
    }

    pub fn points(&self) -> Vec<f64> {
        response::linear_grid(self.start, self.stop, self.count)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    /// Drive amplitude `f / Omega`. For custom models the value scales every
    /// `k != 0` Fourier component. Defaults to the model's own amplitude.
    #[serde(default)]
    pub drive: Option<Grid>,
    /// Probe frequency `omega_p / Omega`.
    #[serde(default)]
    pub probe: Option<Grid>,
}

pub const DEFAULT_PROBE_GRID: Grid = Grid {
    start: -0.5,
    stop: 0.5,
    count: 201,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case", deny_unknown_fields)]
pub enum PopulationSource {
    /// `p ~ exp(-beta eps)`, `beta` in units of `1/Omega`.
    FloquetGibbs { beta: f64 },
    Explicit { values: Vec<f64> },
    /// Occupations of the basis state `label` (first basis state by default).
    BasisState {
        #[serde(default)]
        label: Option<String>,
    },
}

impl Default for PopulationSource {
    fn default() -> Self {
        PopulationSource::BasisState { label: None }
    }
}

impl PopulationSource {
    pub fn populations(&self, bundle: &ModelBundle, sol: &FloquetSolution) -> Result<Populations> {
        match self {
            PopulationSource::FloquetGibbs { beta } => Ok(response::floquet_gibbs(sol, beta / sol.omega)),
            PopulationSource::Explicit { values } => {
                if values.len() != sol.dim() {
                    return Err(Error::Dimension {
                        expected: sol.dim(),
                        found: values.len(),
                    });
                }
                Populations::new(values.clone())
            }
            PopulationSource::BasisState { label } => {
                let index = match label {
                    Some(l) => bundle.basis_index(l).ok_or_else(|| {
                        Error::parse("response.populations.label", format!("unknown basis state `{l}`"))
                    })?,
                    None => 0,
                };
                response::basis_state_populations(sol, index)
            }
        }
    }
}

/// Response settings; `gamma` is in units of `Omega`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ResponseSection {
    pub gamma: f64,
    pub lambda: f64,
    pub m_cutoff: usize,
    pub bands: Vec<i64>,
    pub populations: PopulationSource,
}

impl Default for ResponseSection {
    fn default() -> Self {
        let base = ResponseConfig::default();
        Self {
            gamma: base.gamma,
            lambda: base.lambda,
            m_cutoff: base.m_cutoff,
            bands: base.bands,
            populations: PopulationSource::default(),
        }
    }
}

impl ResponseSection {
    pub fn to_config(&self, omega: f64) -> ResponseConfig {
        ResponseConfig {
            gamma: self.gamma * omega,
            lambda: self.lambda,
            m_cutoff: self.m_cutoff,
            bands: self.bands.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    /// Dipole harmonic cutoff `M`.
    pub harmonics: usize,
    /// Harmonic range of dark-state predictions and scans.
    pub n_range: usize,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            harmonics: DEFAULT_HARMONICS,
            n_range: 10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Artifact {
    Quasienergies,
    Susceptibility,
    Dipoles,
    SymmetryReport,
    DarkScan,
}

impl Artifact {
    pub fn file_name(self) -> &'static str {
        match self {
            Artifact::Quasienergies => "quasienergies.csv",
            Artifact::Susceptibility => "susceptibility.csv",
            Artifact::Dipoles => "dipoles.csv",
            Artifact::SymmetryReport => "symmetry_report.json",
            Artifact::DarkScan => "dark_scan.csv",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelSource,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub response: ResponseSection,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub analysis: AnalysisConfig,
    #[serde(default)]
    pub outputs: Vec<Artifact>,
    /// Report inapplicable symmetry rules as errors.
    #[serde(default)]
    pub strict: bool,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| Error::parse("config", e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        self.solver.validate()?;
        if let Some(g) = &self.sweep.drive {
            g.validate("sweep.drive")?;
        }
        if let Some(g) = &self.sweep.probe {
            g.validate("sweep.probe")?;
        }
        if let ModelSource::Builtin { name, params } = &self.model {
            for key in params.keys() {
                if !name.defaults().iter().any(|(k, _)| k == key) {
                    return Err(Error::parse(
                        format!("model.builtin.params.{key}"),
                        format!("unknown parameter for {name:?}"),
                    ));
                }
            }
        }
        if let PopulationSource::Explicit { values } = &self.response.populations {
            Populations::new(values.clone())?;
        }
        if self.response.bands.is_empty() {
            return Err(Error::Validation("response.bands must not be empty".into()));
        }
        if self.analysis.harmonics == 0 || 2 * self.analysis.harmonics >= self.solver.time_samples {
            return Err(Error::Nyquist {
                harmonics: self.analysis.harmonics,
                time_samples: self.solver.time_samples,
            });
        }
        self.response.to_config(1.0).validate(self.analysis.harmonics)
    }
}

/// Model factory for one configuration: resolves parameters once and builds
/// the bundle at any drive amplitude.
#[derive(Debug, Clone)]
pub enum ModelFactory {
    Builtin {
        name: BuiltinModel,
        params: BTreeMap<String, f64>,
    },
    Custom {
        bundle: ModelBundle,
    },
}

impl ModelFactory {
    pub fn new(source: &ModelSource, base_dir: &Path) -> Result<Self> {
        match source {
            ModelSource::Builtin { name, params } => {
                let mut resolved: BTreeMap<String, f64> =
                    name.defaults().iter().map(|(k, v)| (k.to_string(), *v)).collect();
                for (k, v) in params {
                    resolved.insert(k.clone(), *v);
                }
                Ok(ModelFactory::Builtin {
                    name: *name,
                    params: resolved,
                })
            }
            ModelSource::Custom { path } => {
                let full = if path.is_absolute() {
                    path.clone()
                } else {
                    base_dir.join(path)
                };
                let text = std::fs::read_to_string(&full)?;
                Ok(ModelFactory::Custom {
                    bundle: models::load_custom(&text)?,
                })
            }
        }
    }

    pub fn omega(&self) -> f64 {
        match self {
            ModelFactory::Builtin { params, .. } => params["omega"],
            ModelFactory::Custom { bundle } => bundle.hamiltonian.omega(),
        }
    }

    /// Drive amplitude used when the sweep does not set one.
    pub fn default_drive(&self) -> f64 {
        match self {
            ModelFactory::Builtin { params, .. } => params["f"],
            ModelFactory::Custom { .. } => 1.0,
        }
    }

    /// The model at drive amplitude `drive` (units of `Omega`, or a scale
    /// factor for custom models).
    pub fn build(&self, drive: f64) -> Result<ModelBundle> {
        match self {
            ModelFactory::Builtin { name, params } => {
                let w = params["omega"];
                let p = |k: &str| params[k] * w;
                match name {
                    BuiltinModel::Benzene => models::build_benzene(p("e0"), p("j0"), drive * w, w),
                    BuiltinModel::Dimer => models::build_dimer(p("delta"), p("j0"), params["r"], drive * w, w),
                    BuiltinModel::Tls => models::build_tls(p("h_x"), drive * w, w),
                }
            }
            ModelFactory::Custom { bundle } => {
                let h = &bundle.hamiltonian;
                let components = h
                    .components()
                    .iter()
                    .map(|(k, m)| {
                        let scaled = if *k == 0 { m.clone() } else { m.scale(drive) };
                        (*k, scaled)
                    })
                    .collect();
                let mut scaled = bundle.clone();
                scaled.hamiltonian = PeriodicHamiltonian::new(h.omega(), components)?;
                Ok(scaled)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const FULL: &str = r#"{
        "model": {"builtin": {"name": "dimer", "params": {"r": 2.0}}},
        "solver": {"time_steps": 2048},
        "response": {"gamma": 0.004, "bands": [0, 1],
                     "populations": {"source": "explicit", "values": [0.4, 0.3, 0.2, 0.1]}},
        "sweep": {"drive": {"start": 0.0, "stop": 3.0, "count": 31},
                  "probe": {"start": -0.5, "stop": 0.5, "count": 11}},
        "outputs": ["quasienergies", "symmetry_report"],
        "strict": true
    }"#;

    #[test]
    fn parse_and_round_trip() {
        let cfg = RunConfig::from_json(FULL).unwrap();
        assert_eq!(cfg.solver.time_steps, 2048);
        assert_eq!(cfg.solver.time_samples, SolverConfig::default().time_samples);
        assert_eq!(cfg.outputs, vec![Artifact::Quasienergies, Artifact::SymmetryReport]);
        let again = RunConfig::from_json(&cfg.to_json().unwrap()).unwrap();
        assert_eq!(cfg, again);
    }

    #[test]
    fn minimal_config_uses_defaults() {
        let cfg = RunConfig::from_json(r#"{"model": {"builtin": {"name": "tls"}}}"#).unwrap();
        assert_eq!(cfg.response.populations, PopulationSource::BasisState { label: None });
        let factory = ModelFactory::new(&cfg.model, Path::new(".")).unwrap();
        assert_eq!(factory.default_drive(), 1.0);
        assert_eq!(factory.build(2.0).unwrap().dim(), 2);
    }

    #[test]
    fn invalid_configs() {
        let cases = [
            r#"{"model": {"builtin": {"name": "tls", "params": {"bogus": 1}}}}"#,
            r#"{"model": {"builtin": {"name": "tls"}}, "sweep": {"probe": {"start": 0, "stop": 1, "count": 0}}}"#,
            r#"{"model": {"builtin": {"name": "tls"}}, "sweep": {"drive": {"start": 2, "stop": 1, "count": 3}}}"#,
            r#"{"model": {"builtin": {"name": "tls"}}, "response": {"populations": {"source": "explicit", "values": [0.7, 0.7]}}}"#,
            r#"{"model": {"builtin": {"name": "tls"}}, "response": {"m_cutoff": 30}}"#,
            r#"{"model": {"builtin": {"name": "octagon"}}}"#,
            r#"{"model": {"builtin": {"name": "tls"}}, "extra": 1}"#,
        ];
        for case in cases {
            assert!(RunConfig::from_json(case).is_err(), "{case}");
        }
    }

    #[test]
    fn custom_drive_scaling() {
        let tls = models::build_tls(0.05, 1.0, 1.0).unwrap();
        let factory = ModelFactory::Custom { bundle: tls };
        let scaled = factory.build(2.5).unwrap();
        let reference = models::build_tls(0.05, 2.5, 1.0).unwrap();
        for k in -1..=1 {
            let a = scaled.hamiltonian.component(k).unwrap();
            let b = reference.hamiltonian.component(k).unwrap();
            assert!(crate::linalg::max_abs_diff(a, b) < 1e-15);
        }
    }
}
