//! Holomorphic functional calculus for quaternions and for real operators.
//!
//! Quaternions are modelled as 2x2 complex matrices `Q(z) = [[z1, z2], [-conj z2, conj z1]]`.
//! Functions enter the calculus as *stem functions*, matrix-valued analytic maps
//! satisfying `F(conj ζ) = F(ζ)~`, and are evaluated either through the spectral
//! decomposition of a quaternion or through a Cauchy integral over circles in the
//! complex plane. The same machinery extends to real linear operators and to
//! commuting pairs of real operators.

pub mod cli;
pub mod contour_calc;
pub mod error;
pub mod func_model;
pub mod joint_op;
mod linalg;
pub mod quat_core;
pub mod real_op;
pub mod slice_check;

pub use error::{Error, Result};
pub use num_complex::Complex64 as Complex;

pub use contour_calc::{Circle, Contour, QuadratureConfig};
pub use func_model::{AnalyticScalar, GeneralMat2, StemFunction, SymmetricDomain};
pub use joint_op::{BiScalar, CommutingPair, SphereGrid};
pub use quat_core::{CVec2, Mat2, Quaternion, SpectrumPair};
pub use real_op::{ComplexOperator, OperatorStem, RealOperator};
