//! Integral-formula extension of holomorphic functions from non-reduced
//! subvarieties of strictly pseudoconvex domains, with Monte Carlo quadrature.

pub mod domain;
pub mod error;
pub mod extension;
pub mod form;
pub mod jet;
pub mod kernel;
pub mod multi_index;
pub mod poly;
pub mod quadrature;
pub mod sampling;
pub mod variety;

pub use domain::{Domain, HermitianPolynomial};
pub use error::{AlgebraError, DomainError, ExtensionError, QuadratureError, VarietyError};
pub use form::ExtForm;
pub use jet::{BiJet, JetLayout, JetVar, C64};
pub use multi_index::MultiIndex;
pub use poly::Polynomial;
