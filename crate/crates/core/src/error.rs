use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("contour ring needs at least 3 points, got {0}")]
    FewerThanThreePoints(usize),
    #[error("contour ring encloses zero area")]
    ZeroArea,
    #[error("{phases} phases cannot support {harmonics} harmonics (need at least {})", 2 * harmonics + 1)]
    TooFewPhases { phases: usize, harmonics: usize },
    #[error("non-positive area {value} at phase {phase}, station {station}")]
    NonPositiveArea {
        phase: usize,
        station: usize,
        value: f64,
    },
    #[error("fitted area dips to {value} at t = {t}, station {station}")]
    NonPositiveReconstruction { t: f64, station: usize, value: f64 },
    #[error("x = {x} outside station range [{lo}, {hi}]")]
    XOutOfRange { x: f64, lo: f64, hi: f64 },
    #[error("reversed interval: x0 = {x0} > x = {x}")]
    ReversedInterval { x0: f64, x: f64 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("step size underflow at t = {t}")]
    StepSizeUnderflow { t: f64 },
    #[error("integration exceeded {0} steps")]
    TooManySteps(usize),
    #[error("particular solution escapes at t = {t}")]
    ParticularSolutionBlowup { t: f64 },
    #[error("periodicity quadratic is degenerate; periodic solutions are not unique")]
    DegenerateQuadratic,
    #[error("periodic solutions form a continuum")]
    NonUnique,
    #[error("no physically admissible periodic solution")]
    NoneAdmissible,
    #[error("homogeneous multiplier {multiplier} is resonant")]
    ResonantMultiplier { multiplier: f64 },
    #[error("alpha = {alpha} is infeasible: {reason}")]
    Infeasible { alpha: f64, reason: String },
    #[error("no bracket for target mean flow {target}: {detail}")]
    NoBracket { target: f64, detail: String },
    #[error("feasible alpha interval is empty")]
    EmptyFeasibleInterval,
    #[error("parse error: {0}")]
    Parse(String),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
