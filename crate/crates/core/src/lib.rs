//! Rate-distortion computations for lossy source coding with decoder side
//! information and a constraint on how well the encoder can estimate the
//! decoder's reconstruction.
//!
//! * [`model`]: finite-alphabet sources, distortion tables and test channels.
//! * [`solver`]: the discrete rate-distortion function and its Wyner-Ziv and
//!   common-reconstruction baselines.
//! * [`gaussian`]: closed forms for the quadratic Gaussian case.
//! * [`sphere`]: Monte-Carlo simulation of the sphere-codebook scheme.
//! * [`caratheodory`]: support reduction of convex combinations.
//! * [`extended`]: the K-constraint generalization.
//! * [`io`]: instance files.

pub mod caratheodory;
pub mod error;
pub mod extended;
pub mod gaussian;
pub mod info;
pub mod io;
mod lp;
pub mod model;
pub mod solver;
pub mod sphere;

pub use error::{Error, Result};
pub use model::{DistortionSpec, ExtendedInstance, JointSource, TestChannel};
