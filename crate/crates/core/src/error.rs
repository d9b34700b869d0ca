use thiserror::Error;

/// Errors raised by the numerical routines in this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("({h}, {l}) is not in the admissible energy-momentum range")]
    NotInRange { h: f64, l: f64 },

    #[error("parameter {value} is outside the domain {domain}")]
    DomainError { value: f64, domain: &'static str },

    #[error("root solve did not converge: {0}")]
    ConvergenceError(String),

    #[error("quadrature failed at ({h}, {l}): {reason}")]
    QuadratureError { h: f64, l: f64, reason: String },

    #[error("({h}, {l}) lies on the rotation-number branch cut l = 0")]
    BranchCut { h: f64, l: f64 },

    #[error("branch continuation exceeded {levels} refinement levels")]
    RefinementLimit { levels: u32 },

    #[error("integration step violated the constraints (residual {residual:e})")]
    StepError { residual: f64 },

    #[error("no first return found within t = {t_max}")]
    EventError { t_max: f64 },

    #[error("quantum numbers ({n}, {m}) hit the pinch point: n*hbar = 4/pi")]
    PinchCollision { n: u32, m: i64 },

    #[error("lattice transport ambiguous at sample {sample}: rounding residual {residual:.3}")]
    LatticeAmbiguous { sample: usize, residual: f64 },

    #[error("invalid loop: {0}")]
    LoopInvalid(String),

    #[error("basis point ({n}, {m}) is missing")]
    MissingPoint { n: i64, m: i64 },

    #[error("spectrum point ({n}, {m}): {source}")]
    SpectrumPoint {
        n: u32,
        m: i64,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// True for failures of the numerics, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::ConvergenceError(_)
            | Error::QuadratureError { .. }
            | Error::RefinementLimit { .. }
            | Error::StepError { .. }
            | Error::EventError { .. }
            | Error::LatticeAmbiguous { .. } => true,
            Error::SpectrumPoint { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
