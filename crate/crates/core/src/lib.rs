//! Conical-hull data reduction and LP-based endmember extraction for
//! hyperspectral images.
//!
//! The pipeline reduces an image matrix `A` (bands x pixels) to a small set
//! of columns that generate the same convex cone, solves the Hottopixx LP on
//! the survivors, and averages the extracted signatures over randomly
//! augmented repetitions.

pub mod error;
mod lstsq;
pub mod io;
pub mod matrix;
pub mod metric;
pub mod nnls;
pub mod dimred;
pub mod kmeans;
pub mod reduce;
pub mod lp;
pub mod hottopixx;
pub mod assignment;
pub mod synth;
pub mod eval;
pub mod redic;

pub use error::{Error, ErrorFamily, Result};
pub use matrix::{l1_normalize_columns, HsiMatrix, IndexSet, ToleranceConfig};
pub use metric::{l1_distance, mrsa};
pub use nnls::{cone_membership, nnls_solve, NnlsResult};
pub use reduce::{dr, drs, verify_gamma, GammaCheck};
pub use hottopixx::{build_model_h, postprocess_method_c, solve_model_h, LpSolution, ModelH};
pub use assignment::solve_assignment;
pub use synth::{assemble, derive_whv, random_separable, SynthInstance};
pub use eval::{dict_distance, match_score, mrsa_score, reconstruction_error, rho, theorem1_check, DistanceMetric, TheoremReport};
pub use redic::{align_columns, redic, EndmemberEstimate, RedicConfig};
