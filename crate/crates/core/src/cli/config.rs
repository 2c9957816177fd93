//! TOML experiment configuration.
//!
//! ```toml
//! experiment = "big-fibre"
//! model = "T3_UNIT_COTANGENT"
//! seed = 0
//!
//! [output]
//! dir = "reports"
//! name = "quarter-arcs"
//!
//! [hamiltonians]
//! h = "cos(theta) + 0.2"
//!
//! [big-fibre]
//! arcs = 4
//! ```
//!
//! Exactly one section named after `experiment` may be present; every field in
//! it has a default. Unknown keys are rejected.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{LabError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    VerifyDynamics,
    TranslatedPoints,
    SpectralContract,
    QuasistateAudit,
    Quasimeasure,
    BigFibre,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::VerifyDynamics => "verify-dynamics",
            ExperimentKind::TranslatedPoints => "translated-points",
            ExperimentKind::SpectralContract => "spectral-contract",
            ExperimentKind::QuasistateAudit => "quasistate-audit",
            ExperimentKind::Quasimeasure => "quasimeasure",
            ExperimentKind::BigFibre => "big-fibre",
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub model: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output: OutputConfig,
    /// Named expression strings over the chart coordinates and `t`.
    #[serde(default)]
    pub hamiltonians: BTreeMap<String, String>,
    #[serde(rename = "verify-dynamics")]
    pub verify_dynamics: Option<VerifyDynamicsConfig>,
    #[serde(rename = "translated-points")]
    pub translated_points: Option<TranslatedPointsConfig>,
    #[serde(rename = "spectral-contract")]
    pub spectral_contract: Option<SpectralContractConfig>,
    #[serde(rename = "quasistate-audit")]
    pub quasistate_audit: Option<QuasistateAuditConfig>,
    pub quasimeasure: Option<QuasimeasureConfig>,
    #[serde(rename = "big-fibre")]
    pub big_fibre: Option<BigFibreSection>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
    /// Prefix of every report file; defaults to the experiment name.
    pub name: Option<String>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: default_dir(), name: None }
    }
}

fn default_dir() -> PathBuf {
    PathBuf::from("reports")
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifyDynamicsConfig {
    /// Random `(g, h)` pairs, in addition to `explicit_pairs`.
    pub pairs: usize,
    /// Pairs of names from `[hamiltonians]`.
    pub explicit_pairs: Vec<[String; 2]>,
    pub times: Vec<f64>,
    pub distance_tolerance: f64,
    pub flow_tolerance: f64,
    pub inner_tolerance: f64,
    /// Fields for the conformal check; each gets `probes / fields` tangent vectors.
    pub conformal_fields: usize,
    pub conformal_probes: usize,
    pub conformal_tolerance: f64,
    pub kappa_tolerance: f64,
    pub fd_step: f64,
    pub strictness_fields: usize,
    pub commutation_tolerance: f64,
    pub strictness_probes: usize,
}

impl Default for VerifyDynamicsConfig {
    fn default() -> Self {
        Self {
            pairs: 20,
            explicit_pairs: Vec::new(),
            times: vec![0.25, 0.5, 1.0],
            distance_tolerance: 1e-5,
            flow_tolerance: 1e-9,
            inner_tolerance: 1e-12,
            conformal_fields: 10,
            conformal_probes: 1000,
            conformal_tolerance: 1e-4,
            kappa_tolerance: 1e-8,
            fd_step: 1e-5,
            strictness_fields: 50,
            commutation_tolerance: 1e-6,
            strictness_probes: 64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TranslatedMode {
    /// Translated points of the time-1 map of a named Hamiltonian.
    Scan,
    /// Fixed-point comparison on the built-in cylinder example.
    Cylinder,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TranslatedPointsConfig {
    pub mode: TranslatedMode,
    /// Name from `[hamiltonians]` (scan mode).
    pub hamiltonian: Option<String>,
    pub eta_min: f64,
    pub eta_max: f64,
    pub eta_count: usize,
    /// Seed lattice nodes per axis (scan mode).
    pub seed_lattice: Vec<usize>,
    pub flow_tolerance: f64,
    pub solver_tolerance: f64,
    pub budget: usize,
    pub require_unit_kappa: bool,
}

impl Default for TranslatedPointsConfig {
    fn default() -> Self {
        Self {
            mode: TranslatedMode::Scan,
            hamiltonian: None,
            eta_min: -1.0,
            eta_max: 1.0,
            eta_count: 11,
            seed_lattice: Vec::new(),
            flow_tolerance: 1e-10,
            solver_tolerance: 1e-8,
            budget: 2_000_000,
            require_unit_kappa: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InvariantChoice {
    MaxIntegral,
    DoubledMax,
    OscillationPenalty,
    TimeWeighted,
    Squared,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectralContractConfig {
    pub invariants: Vec<InvariantChoice>,
    pub trials: usize,
    pub tolerance: f64,
    pub lattice: usize,
    pub reeb_shifts: usize,
    /// Names from `[hamiltonians]` to homogenize; must be autonomous.
    pub homogenize: Vec<String>,
    pub k_max: usize,
    pub homogenization_tolerance: f64,
}

impl Default for SpectralContractConfig {
    fn default() -> Self {
        Self {
            invariants: vec![InvariantChoice::MaxIntegral],
            trials: 100,
            tolerance: 1e-6,
            lattice: 12,
            reeb_shifts: 4,
            homogenize: Vec::new(),
            k_max: 64,
            homogenization_tolerance: 1e-9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FunctionalChoice {
    /// Circle mean on S1, θ-mean on T3.
    ReebMean,
    HomogenizedMaxIntegral,
    DoubledMean,
    SquaredMean,
    NonMonotone,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuasistateAuditConfig {
    pub functionals: Vec<FunctionalChoice>,
    pub trials: usize,
    pub tolerance: f64,
    pub lattice: usize,
    pub conjugacy_trials: usize,
}

impl Default for QuasistateAuditConfig {
    fn default() -> Self {
        Self {
            functionals: vec![FunctionalChoice::ReebMean],
            trials: 20,
            tolerance: 1e-6,
            lattice: 12,
            conjugacy_trials: 3,
        }
    }
}

/// A closed set: an angle band `[a, b]` on the Reeb-invariant angle, or `ρ ≤ 0`
/// for an expression `ρ` over the chart coordinates.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SetConfig {
    pub name: String,
    pub band: Option<[f64; 2]>,
    pub rho: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuasimeasureConfig {
    pub functional: FunctionalChoice,
    pub sets: Vec<SetConfig>,
    /// Pairs `[inner, outer]` of set names.
    pub nested: Vec<[String; 2]>,
    /// Groups of set names whose union is tested for subadditivity.
    pub unions: Vec<Vec<String>>,
    pub basis_nodes: usize,
    pub fibre_nodes: usize,
    pub epsilon: f64,
    pub tolerance: f64,
    pub max_pivots: usize,
    pub max_evaluations: usize,
}

impl Default for QuasimeasureConfig {
    fn default() -> Self {
        Self {
            functional: FunctionalChoice::ReebMean,
            sets: Vec::new(),
            nested: Vec::new(),
            unions: Vec::new(),
            basis_nodes: 256,
            fibre_nodes: 4,
            epsilon: 1e-6,
            tolerance: 0.01,
            max_pivots: 50_000,
            max_evaluations: 4000,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BigFibreSection {
    pub functional: FunctionalChoice,
    /// Number of equal closed arcs covering the image circle.
    pub arcs: usize,
    pub overlap: f64,
    pub basis_nodes: usize,
    pub fibre_nodes: usize,
    pub cover_margin: f64,
    pub cover_samples: usize,
    pub tolerance: f64,
}

impl Default for BigFibreSection {
    fn default() -> Self {
        Self {
            functional: FunctionalChoice::ReebMean,
            arcs: 4,
            overlap: 0.0,
            basis_nodes: 256,
            fibre_nodes: 4,
            cover_margin: 5e-4,
            cover_samples: 4096,
            tolerance: 1e-6,
        }
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| LabError::Invalid(format!("config: {}", e.message())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| LabError::Invalid(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn report_name(&self) -> String {
        self.output.name.clone().unwrap_or_else(|| self.experiment.name().to_string())
    }

    fn validate(&self) -> Result<()> {
        let present = [
            (ExperimentKind::VerifyDynamics, self.verify_dynamics.is_some()),
            (ExperimentKind::TranslatedPoints, self.translated_points.is_some()),
            (ExperimentKind::SpectralContract, self.spectral_contract.is_some()),
            (ExperimentKind::QuasistateAudit, self.quasistate_audit.is_some()),
            (ExperimentKind::Quasimeasure, self.quasimeasure.is_some()),
            (ExperimentKind::BigFibre, self.big_fibre.is_some()),
        ];
        if let Some((kind, _)) = present.iter().find(|(k, p)| *p && *k != self.experiment) {
            return Err(invalid(format!("section [{}] does not belong to a {} experiment", kind.name(), self.experiment.name())));
        }
        let known = |name: &String| -> Result<()> {
            if self.hamiltonians.contains_key(name) {
                Ok(())
            } else {
                Err(invalid(format!("unknown hamiltonian `{name}`")))
            }
        };
        let positive = |label: &str, v: f64| -> Result<()> {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(invalid(format!("{label} must be positive, got {v}")))
            }
        };
        if let Some(s) = &self.verify_dynamics {
            s.explicit_pairs.iter().flatten().try_for_each(known)?;
            for (l, v) in [
                ("distance_tolerance", s.distance_tolerance),
                ("flow_tolerance", s.flow_tolerance),
                ("inner_tolerance", s.inner_tolerance),
                ("conformal_tolerance", s.conformal_tolerance),
                ("kappa_tolerance", s.kappa_tolerance),
                ("fd_step", s.fd_step),
                ("commutation_tolerance", s.commutation_tolerance),
            ] {
                positive(l, v)?;
            }
            if s.times.is_empty() || s.times.iter().any(|&t| !(t > 0.0 && t <= 1.0)) {
                return Err(invalid("times must be nonempty and lie in (0, 1]".into()));
            }
            if s.conformal_fields > 0 && s.conformal_probes < s.conformal_fields {
                return Err(invalid("conformal_probes must be at least conformal_fields".into()));
            }
        }
        if let Some(s) = &self.translated_points {
            if s.mode == TranslatedMode::Scan {
                match &s.hamiltonian {
                    Some(h) => known(h)?,
                    None => return Err(invalid("scan mode needs `hamiltonian`".into())),
                }
            }
            if s.eta_count == 0 || s.eta_max < s.eta_min {
                return Err(invalid("need eta_count >= 1 and eta_min <= eta_max".into()));
            }
            positive("flow_tolerance", s.flow_tolerance)?;
            positive("solver_tolerance", s.solver_tolerance)?;
        }
        if let Some(s) = &self.spectral_contract {
            s.homogenize.iter().try_for_each(known)?;
            positive("tolerance", s.tolerance)?;
            positive("homogenization_tolerance", s.homogenization_tolerance)?;
            if s.k_max < 4 {
                return Err(invalid("k_max must be at least 4".into()));
            }
        }
        if let Some(s) = &self.quasistate_audit {
            positive("tolerance", s.tolerance)?;
        }
        if let Some(s) = &self.quasimeasure {
            positive("tolerance", s.tolerance)?;
            let mut names = std::collections::BTreeSet::new();
            for set in &s.sets {
                if !names.insert(set.name.as_str()) {
                    return Err(invalid(format!("duplicate set `{}`", set.name)));
                }
                if set.band.is_some() == set.rho.is_some() {
                    return Err(invalid(format!("set `{}` needs exactly one of `band` and `rho`", set.name)));
                }
            }
            for n in s.nested.iter().flatten().chain(s.unions.iter().flatten()) {
                if !names.contains(n.as_str()) {
                    return Err(invalid(format!("unknown set `{n}`")));
                }
            }
            if s.unions.iter().any(|u| u.len() < 2) {
                return Err(invalid("a union needs at least two sets".into()));
            }
        }
        if let Some(s) = &self.big_fibre {
            positive("cover_margin", s.cover_margin)?;
            positive("tolerance", s.tolerance)?;
            if s.arcs == 0 {
                return Err(invalid("arcs must be at least 1".into()));
            }
        }
        Ok(())
    }
}

fn invalid(msg: String) -> LabError {
    LabError::Invalid(format!("config: {msg}"))
}
