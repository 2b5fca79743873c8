use thiserror::Error;

/// Errors raised by the cone kernels, the Riccati solvers, the Wishart laws and the simulators.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("unsupported algebra: {0}")]
    UnsupportedAlgebra(String),
    #[error("invalid algebra size {size} for {kind}")]
    InvalidSize { kind: String, size: usize },
    #[error("operands belong to different algebras")]
    AlgebraMismatch,
    #[error("expected {expected} coordinates, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("eigen-solver did not converge")]
    ConvergenceFailure,
    #[error("element is singular (min |eigenvalue| = {0:e})")]
    SingularElement(f64),
    #[error("element is not in the cone (min eigenvalue = {0:e})")]
    NotInCone(f64),
    #[error("element is not in the cone interior (min eigenvalue = {0:e})")]
    NotInterior(f64),
    #[error("elements do not form a Jordan frame: {0}")]
    NotAFrame(String),

    #[error("parameter set is not admissible: {0}")]
    NotAdmissible(String),
    #[error("parameter set is not conservative (c = {c}, |gamma| = {gamma_norm})")]
    NotConservative { c: f64, gamma_norm: f64 },

    #[error("step size underflow at t = {t} (h = {h:e})")]
    StepUnderflow { t: f64, h: f64 },
    #[error("drift operator is not in the Lie algebra of the cone (defect {0:e})")]
    DriftNotInLieAlgebra(f64),

    #[error("Gamma function argument {0} is not positive")]
    PoleArgument(f64),
    #[error("multi-index degree {degree} exceeds cap {cap}")]
    CapExceeded { degree: usize, cap: usize },
    #[error("zonal calibration failed: {0}")]
    CalibrationFailure(String),
    #[error("density does not exist: {0}")]
    DensityDoesNotExist(String),
    #[error("series tail bound {bound:e} exceeds target {target:e} at cap {cap}")]
    TailNotConverged { bound: f64, target: f64, cap: usize },
    #[error("invalid Wishart law: {0}")]
    InvalidLaw(String),
    #[error("no exact sampler for this law: {0}")]
    UnsupportedCombination(String),

    #[error("thinning bound exceeded {0} times within one step")]
    ThinningBoundExceeded(usize),
    #[error("2x2 block is singular: {0}")]
    BlockSingular(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
