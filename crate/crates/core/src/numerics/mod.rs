//! Numerical kernels shared by the channel densities, the genie bound and the
//! MLSD metric.

pub mod quadrature;
pub mod special;

pub use quadrature::{
    integrate, integrate_adaptive, AdaptiveEstimate, AdaptiveOptions, QuadratureRule,
};
pub use special::{bessel_k, ln_bessel_k, log_gamma, poisson_cdf, poisson_log_pmf};
