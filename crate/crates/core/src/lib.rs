//! Information-ratio goodness-of-fit testing for bivariate survival copulas
//! under right censoring.
//!
//! The likelihood calculus in [`copulas`] and the numeric kernel in
//! [`numerics`] are generic over the floating point type through
//! [`scalar::Real`]. The data pipeline (Kaplan–Meier margins, estimation,
//! bootstrap, simulation) works in `f64`; the aliases below name the
//! double-precision instantiations.

pub mod bootstrap;
pub mod cli;
pub mod copulas;
pub mod error;
pub mod inference;
pub mod numerics;
pub mod scalar;
pub mod simulation;
pub mod survival;

pub use bootstrap::{bootstrap_pvalue, select_copula, BootstrapConfig, CensoringMode, GofReport};
pub use copulas::{Censoring, Family};
pub use error::{Error, Result};
pub use inference::{fit_pmle, FitResult, StatisticKind};
pub use survival::{pseudo_observations, CensoredPair, CensoringMargin, StepSurvival};

/// Double-precision copula model.
pub type Copula = copulas::CopulaModel<f64>;
/// Double-precision pseudo-observation.
pub type Pseudo = copulas::PseudoObservation<f64>;
