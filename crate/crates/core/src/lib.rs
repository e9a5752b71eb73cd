//! Missing mass of functions of discrete distributions.
//!
//! The crate covers the generalized Good-Turing estimators, distribution-free
//! concentration bounds for the missing mass `G_0 = sum_x g(p_x) 1{x unseen}`,
//! the numerical engine behind those bounds, and a seeded Monte Carlo lab
//! that checks rates and tail dominance.

pub mod distributions;
pub mod empirical;
pub mod error;
pub mod estimators;
pub mod gfunction;
pub mod optimize;
pub mod risk_lab;
pub mod tail_bounds;
pub mod ustar;

pub use distributions::{make_family, DiscreteDistribution, Family};
pub use empirical::SampleProfile;
pub use error::{Error, Result};
pub use estimators::{estimate, exact_bias, gt_bias_bound, EstimatorKind};
pub use gfunction::{GFunction, TypeClass, UserDefined};
pub use tail_bounds::{BoundCurve, BoundFamily, ConcentrationSpec, CorollaryKind};
pub use ustar::{u_star, UStarResult};
