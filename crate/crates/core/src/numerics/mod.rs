//! Numeric kernel: quadrature, normal distributions, root finding, 1-D
//! optimization, finite differences and deterministic random streams.

mod debye;
mod diff;
mod normal;
mod optimize;
mod quadrature;
mod rng;
mod roots;

pub use debye::debye1;
pub use diff::fd_derivative;
pub use normal::{
    binorm_cdf, binorm_pdf, inv_mills, log_norm_cdf, norm_cdf, norm_cdf_pair, norm_pdf,
    norm_quantile,
};
pub use optimize::maximize_1d;
pub use quadrature::{integrate, QuadratureSpec};
pub use rng::{derive_seed, RngStream};
pub use roots::find_root;
