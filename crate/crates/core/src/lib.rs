//! Numerical tools for complementary series representations of SO°(d+1, 1).
//!
//! Group elements are (d+2)×(d+2) matrices preserving diag(1, …, 1, −1); the
//! representation U(υ, s) is modelled on L²(K:υ) through Peter–Weyl
//! coefficients truncated at a K-type cutoff.

pub mod asymptotics;
pub mod error;
pub mod group;
pub mod harmonic;
pub mod liealg;
pub mod model;
pub mod operator;
pub mod quadrature;
pub mod rates;
pub mod special;
pub mod su2;

pub use error::{Error, Result};
pub use group::{GroupElement, IwasawaFactors};
pub use liealg::{CompSerLabel, KType, WeightLabel};
pub use model::{ActConfig, ActOutcome, Basis, ModelVector};
pub use operator::KTypeOperator;
pub use quadrature::{KCoord, KPoint, QuadratureGrid};
pub use su2::Quat;
