use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    Config(String),
    #[error("section is singular at this momentum")]
    SingularSection,
    #[error("division by zero frequency")]
    DivisionByZero,
    #[error("gap closure: band separation {separation:e} below threshold")]
    GapClosure { separation: f64 },
    #[error("(kx, a) = (0, 0) is the puncture of the parameter cylinder")]
    Puncture,
    #[error("degenerate transverse roots at omega = {omega}")]
    DegenerateRoots { omega: f64 },
    #[error("expected 2 decaying modes, found {found}")]
    Multiplicity { found: usize },
    #[error("spectral flow partition failed near t = {at}")]
    PartitionFailure { at: f64 },
    #[error("branch tracing ambiguous on [{lo}, {hi}]")]
    TracingAmbiguity { lo: f64, hi: f64 },
    #[error("crossing count at mu = {mu} changes under small shifts of mu")]
    TangencyUnresolved { mu: f64 },
    #[error("non-positive radicand {radicand} in kappa_ev")]
    Radicand { radicand: f64 },
    #[error("point too close to the excluded set of the scattering domain")]
    Domain,
    #[error("g determinant vanishes at (kx, kappa, a) = ({kx}, {kappa}, {a})")]
    SingularG { kx: f64, kappa: f64, a: f64 },
    #[error("phase unwrapping failed near t = {at}")]
    UnwrapFailure { at: f64 },
    #[error("violated relations: {0}")]
    Assertion(String),
}

impl Error {
    /// True for errors caused by invalid input rather than numerical breakdown.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config(_) | Error::Puncture | Error::Domain)
    }
}

pub(crate) fn config<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Config(msg.into()))
}
