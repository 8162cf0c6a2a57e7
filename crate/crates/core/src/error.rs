use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid potential: {0}")]
    InvalidPotential(String),

    #[error("position must be finite, got {0}")]
    NonFinitePosition(f64),

    #[error("tail tolerance must be positive, got {0}")]
    InvalidTolerance(f64),

    #[error("tabulated potential tail |V| = {value:e} at x = {x} exceeds tolerance {tol:e}")]
    TailTooLarge { x: f64, value: f64, tol: f64 },

    #[error("energy must be positive, got {0}")]
    NonPositiveEnergy(f64),

    #[error("momentum must be nonzero")]
    ZeroMomentum,

    #[error("half-width {given} is smaller than the potential support {required}")]
    BoxTooSmall { given: f64, required: f64 },

    #[error("slice count {0} is below the minimum of 100")]
    TooFewSlices(usize),

    #[error("transmission did not converge: |dT| = {residual:e} with {slices} slices")]
    NotConverged { residual: f64, slices: usize },

    #[error("momentum {0} is too close to the origin to classify")]
    OriginAmbiguous(Complex64),

    #[error("search region touches k = 0 (margin {margin:e})")]
    RegionTouchesOrigin { margin: f64 },

    #[error("invalid search region: {0}")]
    InvalidRegion(String),

    #[error(
        "winding count {expected} does not match {found} roots in box \
         [{re_min}, {re_max}] x [{im_min}, {im_max}]"
    )]
    CountMismatch {
        expected: i64,
        found: usize,
        re_min: f64,
        re_max: f64,
        im_min: f64,
        im_max: f64,
    },

    #[error("argument-principle quadrature error {0:.3} exceeds 0.1")]
    WindingInaccurate(f64),

    #[error("Siegert normalization constant vanishes (|N| = {0:e}); state is at or near a branch point")]
    DegenerateNormalization(f64),

    #[error("product formula requires a symmetric potential")]
    AsymmetricPotential,

    #[error("pole at k = {0} has no parity assignment")]
    MissingParity(Complex64),

    #[error("pole at k = {0} lacks normalized surface amplitudes")]
    MissingSurfaceAmplitudes(Complex64),

    #[error("momentum {k} collides with pole {pole}")]
    PoleCollision { k: f64, pole: Complex64 },

    #[error("pole at k = {0} is on the imaginary axis; use the axis phase")]
    AxisPole(Complex64),

    #[error("pole at k = {0} is not on the imaginary axis")]
    OffAxisPole(Complex64),

    #[error("profile undefined for axis pole (k_r = 0)")]
    ProfileUndefined,

    #[error("invalid resonance descriptor: {0}")]
    InvalidDescriptor(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("Newton iteration diverged near k = {0}")]
    NewtonDiverged(Complex64),

    #[error("lost pole at parameter {param}: {reason}")]
    LostPole { param: f64, reason: String },

    #[error("config: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
