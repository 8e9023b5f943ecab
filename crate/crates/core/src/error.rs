use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("field model validation failed: {0}")]
    Validation(String),

    #[error("quadrature did not converge on [{a}, {b}]: error estimate {err:.3e} after {subdivisions} subdivisions")]
    Quadrature {
        a: f64,
        b: f64,
        err: f64,
        subdivisions: usize,
    },

    #[error("diffeomorphism inversion failed: residual {residual:.3e} for target xi = {target}")]
    DiffeoInverse { target: f64, residual: f64 },

    #[error("well search failed: {0}")]
    Well(String),

    #[error("degenerate well, fine-structure hypotheses fail: {0}")]
    DegenerateWell(String),

    #[error("branch selection ambiguous: candidates {0} and {1}")]
    ConeAmbiguity(crate::C64, crate::C64),

    #[error("quadratic form is not sectorial: {0}")]
    NotSectorial(String),

    #[error("truncation too small: {0}")]
    Truncation(String),

    #[error("deflated fiber solve ill-conditioned (cond ~ {cond:.3e}); nearest fiber eigenvalue to z is {nearest}")]
    FiberSolve { cond: f64, nearest: crate::C64 },

    #[error("spectral parameter z = {z} violates the fiber bijectivity condition (u Re(z-mu0) + v Im(z-mu0) = {lhs:.3e} >= 2 u b0 = {rhs:.3e})")]
    FiberParameter { z: crate::C64, lhs: f64, rhs: f64 },

    #[error("grid operator assembly: {0}")]
    Assembly(String),

    #[error("eigensolver: {0}")]
    Eigensolve(String),

    #[error("z = {z} too close to the spectrum (nearest eigenvalue {nearest}, distance {dist:.3e})")]
    NearSpectrum {
        z: crate::C64,
        nearest: crate::C64,
        dist: f64,
    },

    #[error("expression parse error at byte {offset}: {msg}")]
    Parse { offset: usize, msg: String },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
