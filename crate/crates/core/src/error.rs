use thiserror::Error;

/// Named hypothesis of the translated-point invariance check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Hypothesis {
    StrictHamiltonian,
    SupportInsideSet,
    ReebInvariantSet,
    Displacement,
}

impl std::fmt::Display for Hypothesis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Hypothesis::StrictHamiltonian => "hamiltonian is strict",
            Hypothesis::SupportInsideSet => "support of hamiltonian inside U",
            Hypothesis::ReebInvariantSet => "U is Reeb invariant",
            Hypothesis::Displacement => "f displaces U",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Error)]
pub enum LabError {
    #[error("unknown model name `{0}`")]
    UnknownModel(String),
    #[error("vector field system residual {residual:e} exceeds {tolerance:e}")]
    ResidualTooLarge { residual: f64, tolerance: f64 },
    #[error("adaptive stepping failed at t = {t} (step {step:e})")]
    StepFailure { t: f64, step: f64 },
    #[error("trajectory left the declared box at t = {t}: {point:?}")]
    DomainEscape { t: f64, point: Vec<f64> },
    #[error("fixed point solver exceeded its budget of {budget} map evaluations")]
    SolverBudgetExceeded { budget: usize },
    #[error("hypothesis violated: {hypothesis} ({detail})")]
    HypothesisViolated { hypothesis: Hypothesis, detail: String },
    #[error("homogenization did not converge: tail variation {tail_variation:e} > {tolerance:e}")]
    NotConverged { tail_variation: f64, tolerance: f64 },
    #[error("displacement witness `{0}` fails the displacement check")]
    WitnessInvalid(String),
    #[error("set `{0}` is nonempty on probes but has no lattice samples")]
    InfeasibleSetSampling(String),
    #[error("optimizer budget exhausted without a feasible point")]
    OptimizerBudget,
    #[error("no lattice preimage within tolerance of image point {0:?}")]
    EmptyFibreSample(Vec<f64>),
    #[error("cover leaves sampled image point {0:?} uncovered")]
    CoverGap(Vec<f64>),
    #[error("linear program is {0}")]
    LinearProgram(&'static str),
    #[error("expression error at {position}: {message}")]
    Expression { position: usize, message: String },
    #[error("invalid input: {0}")]
    Invalid(String),
}

pub type Result<T, E = LabError> = std::result::Result<T, E>;
