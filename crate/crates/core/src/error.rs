use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid peakon train: {0}")]
    InvalidTrain(String),

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("perturbation broke the sign ordering after {attempts} attempts")]
    SignOrderViolation { attempts: usize },

    #[error("collision detected at t = {t}: minimal gap {gap:e} below threshold")]
    CollisionDetected { t: f64, gap: f64 },

    #[error("step size underflow at t = {t} (h = {h:e})")]
    StepSizeUnderflow { t: f64, h: f64 },

    #[error("position Gram matrix is not positive definite (smallest eigenvalue {min_eigenvalue:e})")]
    NotPositiveDefinite { min_eigenvalue: f64 },

    #[error("weight scale K = {k} rejected: {reason}")]
    BadScale { k: f64, reason: String },

    #[error("modulation did not converge after {iterations} iterations (residual {residual:e}){}", at_time(*t))]
    NoConvergence {
        iterations: usize,
        residual: f64,
        t: Option<f64>,
    },

    #[error("modulation iterates lost their ordering{}", at_time(*t))]
    OrderingLost { t: Option<f64> },

    #[error("bump window [{lo}, {hi}] leaves the grid")]
    EmptyWindow { lo: f64, hi: f64 },

    #[error("asymptotic speeds have not settled (drift {drift:e} per unit time)")]
    NotSettled { drift: f64 },

    #[error("malformed report: {0}")]
    Report(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn at_time(t: Option<f64>) -> String {
    t.map(|t| format!(" at t = {t}")).unwrap_or_default()
}

impl Error {
    /// Attach the sample time to modulation failures raised inside an experiment.
    pub fn at(self, time: f64) -> Self {
        match self {
            Error::NoConvergence {
                iterations,
                residual,
                ..
            } => Error::NoConvergence {
                iterations,
                residual,
                t: Some(time),
            },
            Error::OrderingLost { .. } => Error::OrderingLost { t: Some(time) },
            other => other,
        }
    }

    /// True for errors caused by a malformed scenario or config rather than the run itself.
    pub fn is_scenario_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidScenario(_)
                | Error::InvalidTrain(_)
                | Error::SignOrderViolation { .. }
                | Error::BadScale { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
