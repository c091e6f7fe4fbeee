//! Spectra, Fredholm structure, kernel-bundle geometry and reducibility for compressed
//! shifts on quotient modules of the Hardy space over the bidisk.

pub mod assign;
pub mod bundle;
pub mod error;
pub mod inner;
pub mod io;
pub mod linalg;
pub mod poly;
pub mod quotient;
pub mod reduce;
pub mod roots;
pub mod scalar;
pub mod spectrum;

pub use bundle::{
    bundle_jets, connection_matrix, cross_gram, curvature_samples, gram, gram_jet, kernel_frame,
    kernel_inner_product, zm_wn_frame, CMat, CurvatureSample, FrameField, KernelFrame,
};
pub use error::{Error, Result};
pub use inner::{
    make_polynomial, make_rational_inner, numerator_fiber_roots, validate_stability, Factor, Mode,
    RationalInner, StabilityReport,
};
pub use poly::{BiPoly, UniPoly, Var};
pub use quotient::{
    commutant_dim_estimate, compress_shift, interior_coordinates, kernel_residual, quotient_basis,
    weighted_shift_weights, CompressedShiftMatrix, TruncationBasis, WeightTable,
};
pub use reduce::{
    commutant_and_blocks, cross_component_orthogonal, curvature_algebra, degree2_criterion,
    reduce_component, strict_reducibility, MatrixAlgebraBasis, ReduceOptions, ReducibilityReport,
    StrictReducibilityReport, Verdict,
};
pub use roots::{uni_roots, RootSet};
pub use scalar::{Real, C};
pub use spectrum::{
    classify_grid, classify_point, cowen_douglas, decompose_fredholm_regions, fredholm_index,
    trace_essential_curves, EssentialCurves, FredholmRegionMap, Grid, SpectralVerdict, VerdictKind,
};

pub type BiPoly64 = BiPoly<f64>;
pub type BiPoly32 = BiPoly<f32>;
pub type UniPoly64 = UniPoly<f64>;
pub type RootSet64 = RootSet<f64>;
pub type RationalInner64 = RationalInner<f64>;
pub type Grid64 = Grid<f64>;
pub type FredholmRegionMap64 = FredholmRegionMap<f64>;
