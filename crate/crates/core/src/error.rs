use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("reflection degree ({m}, {n}) is below polynomial degree ({dz}, {dw})")]
    ReflectionDegree {
        m: usize,
        n: usize,
        dz: usize,
        dw: usize,
    },
    #[error("root set of the zero polynomial is undefined")]
    ZeroPolynomial,
    #[error("not inner: denominator vanishes near ({z_re}, {z_im}) x ({w_re}, {w_im})")]
    NotInner {
        z_re: f64,
        z_im: f64,
        w_re: f64,
        w_im: f64,
    },
    #[error("factor product does not match the numerator (residual {residual:e})")]
    FactorMismatch { residual: f64 },
    #[error("fiber q(lambda, .) vanishes identically at lambda = {re} + {im}i")]
    ZeroFiber { re: f64, im: f64 },
    #[error("numerator has a factor depending only on {var}")]
    UnivariateFactor { var: char },
    #[error("Fredholm index undefined at essential point {re} + {im}i")]
    IndexUndefined { re: f64, im: f64 },
    #[error("point {re} + {im}i is not a Fredholm point of the spectrum")]
    NotFredholm { re: f64, im: f64 },
    #[error("component {label} has non-constant index")]
    NonConstantIndex { label: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("singular Gram matrix at {re} + {im}i")]
    SingularGram { re: f64, im: f64 },
    #[error(
        "curvature is not Hermitian in the orthonormal frame (defect {defect:e}); reduce the step"
    )]
    NonHermitianCurvature { defect: f64 },
    #[error("coalescing point: algebra dimension {dims:?} unstable near {re} + {im}i; resample")]
    Coalescing { re: f64, im: f64, dims: Vec<usize> },
    #[error("frame tracking failed: {0}")]
    FrameTracking(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("weighted-shift mismatch at N = {n}: formula {formula}, matrix {matrix}")]
    WeightMismatch { n: usize, formula: f64, matrix: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
