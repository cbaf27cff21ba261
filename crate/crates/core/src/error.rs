use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid rotation: {0}")]
    InvalidRotation(String),
    #[error("Clifford label {0} is outside 1..=24")]
    InvalidClifford(usize),
    #[error("Clifford table construction failed: {0}")]
    CliffordTable(String),
    #[error("sequence needs at least 2 gates, got {0}")]
    SequenceTooShort(usize),
    #[error("gate sequence does not compose to the identity")]
    SequenceNotIdentity,
    #[error("WAMF has no parameters for a target angle of {0} rad")]
    UnsupportedWamfAngle(f64),
    #[error("unknown pulse family `{0}`")]
    UnknownFamily(String),
    #[error("invalid noise settings: {0}")]
    InvalidNoise(String),
    #[error("gradient {0} is outside |γ| < 0.05")]
    GradientTooLarge(f64),
    #[error("noise trace covers {have} grid cells but the schedule needs {need}")]
    GridMisaligned { have: usize, need: usize },
    #[error("error rotation angle {0:.3} rad is too large for a first-order description")]
    LogBranch(f64),
    #[error("no closed form for {0}")]
    UnsupportedCombination(String),
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("experiment needs {cells} cells, budget is {budget}")]
    Budget { cells: u64, budget: u64 },
    #[error("need at least {need} {what}, got {got}")]
    TooFew { what: &'static str, need: usize, got: usize },
    #[error("zero variance in {0}")]
    ZeroVariance(String),
    #[error("fit did not converge: {0}")]
    FitFailed(String),
    #[error("probability {0} is outside [0, 1]")]
    InvalidProbability(f64),
    #[error("negative spectral density at ω = {0}")]
    NegativeSpectrum(f64),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
