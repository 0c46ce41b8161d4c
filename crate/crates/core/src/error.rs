use thiserror::Error;

/// Errors raised across the toolkit.
#[derive(Debug, Error)]
pub enum LvError {
    #[error("degenerate regime: {0}")]
    DegenerateRegime(String),

    #[error("assumption violated at (u={u}, v={v}): {what}")]
    AssumptionViolated { u: f64, v: f64, what: String },

    #[error("speed {c} is below the admissible minimum {c_min}")]
    SubminimalSpeed { c: f64, c_min: f64 },

    #[error("eigenvalue sign split failed: {0}")]
    SignSplitViolation(String),

    #[error("homotopy check broke at rho={rho}: {what}")]
    HomotopyBreak { rho: f64, what: String },

    #[error("ambiguous multiplicity: {0}")]
    AmbiguousMultiplicity(String),

    #[error("{lambda} is not an eigenvalue of the matrix (residual {residual})")]
    NotAnEigenvalue { lambda: f64, residual: f64 },

    #[error("Newton iteration failed to converge: last residual {residual}")]
    NoConvergence { residual: f64 },

    #[error("solver converged to a non-monotone profile (worst slope {worst_slope})")]
    MonotonicityLost { worst_slope: f64 },

    #[error("tail-fit window too narrow: {0} usable samples")]
    WindowTooNarrow(usize),

    #[error("tail fit quality too poor: R^2 = {r2}")]
    PoorFit { r2: f64 },

    #[error("tail bound violated at xi={xi}: {what}")]
    BoundViolated { xi: f64, what: String },

    #[error("initial data ({theta1}, {theta2}) outside (0,u*)x(0,v*)")]
    InitialDataOutOfBox { theta1: f64, theta2: f64 },

    #[error("integrator blow-up at t={t}")]
    Blowup { t: f64 },

    #[error("logistic envelope violated at t={t} (margin {margin})")]
    EnvelopeViolated { t: f64, margin: f64 },

    #[error("selector (0,0,0) is not admissible")]
    SelectorAllZero,

    #[error("evaluation outside the trusted domain: {0}")]
    DomainExceeded(String),

    #[error("coupled inequality violated at (x={x}, t={t}): residual {residual} for {which}")]
    InequalityViolated {
        x: f64,
        t: f64,
        residual: f64,
        which: String,
    },

    #[error("time step underflowed the floor {floor} at t={t}")]
    StepRejectedFloor { t: f64, floor: f64 },

    #[error("comparison sandwich violated at (x={x}, t={t}): margin {margin} for {which}")]
    SandwichViolated {
        x: f64,
        t: f64,
        margin: f64,
        which: String,
    },

    #[error("entire-approximation gaps fail to decrease: {0:?}")]
    NoConvergenceTrend(Vec<f64>),

    #[error("entire-solution property ({index}) failed: measured {measured}")]
    PropertyFailed { index: usize, measured: f64 },

    #[error("derivative norms grew without bound: early {early}, late {late}")]
    UnboundedGrowth { early: f64, late: f64 },

    #[error("missing artifact: {0}")]
    MissingArtifact(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, LvError>;
