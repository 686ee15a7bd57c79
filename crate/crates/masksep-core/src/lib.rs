//! Recovery of a low-rank matrix `L0` and a masked sparse matrix `S0` from
//! an observation `M0 = L0 + H * S0`, where the mask `H` is a known linear
//! transform applied to the sparse component.
//!
//! The crate provides
//!
//! * dense-matrix primitives (SVD, norms, proximal operators, tangent- and
//!   support-space projections),
//! * mask constructors (identity, circulant blur, Gaussian, exponential
//!   convolution, orthogonal-columns) and their column scalings `G = H D`,
//! * random instance generators (uniform-support sparse model, random
//!   orthogonal low-rank model, slow-varying tonic component, noise),
//! * recoverability diagnostics: the restricted-infinity-norm constant
//!   `delta`, interval bounds on `mu_G(S0)` and `xi_G(L0)`, incoherence
//!   statistics, the admissible `gamma` window, and a transversality check,
//! * a splitting solver for `min gamma*||S||_1 + ||L||_*  s.t.  L + H S = M0`
//!   together with a pseudoinverse baseline and KKT reporting,
//! * construction and validation of the dual certificate that proves exact
//!   recovery of a given `(S0, L0)` pair.
//!
//! The crate is `no_std` (with `alloc`); all file formats, the CLI, and the
//! experiment harness live in the companion `masksep-cli` crate.

#![cfg_attr(not(any(test, feature = "std")), no_std)]

extern crate alloc;

pub mod certificate;
pub mod diagnostics;
pub mod error;
pub mod mask;
pub mod math;
pub mod matrix;
pub mod model;
pub mod prox;
pub mod rng;
pub mod solver;
pub mod space;
pub mod svd;

pub use error::Error;
pub use mask::{ColumnScaling, Mask, MaskFamily, ScalingMode};
pub use matrix::{norm, Matrix, NormKind};
pub use space::SupportSet;
pub use svd::SvdFactors;
