//! Pure numeric kernel: distribution distance, power mean, weighted
//! correlation and the chi-square functions behind the danger score.
//!
//! Everything here is a pure function of its arguments.

mod chi_square;
mod correlation;
mod distance;
mod power_mean;

pub use chi_square::{chi2_cdf, chi2_inv_cdf, chi2_inv_sf, chi2_sf, ln_gamma, regularized_gamma_p, regularized_gamma_q, ChiSquareParams};
pub use correlation::{interp_correlation, pearson_from_moments, weighted_pearson, BinaryMoments};
pub use distance::{hellinger, hellinger_binary, hellinger_weights, DiscreteDistribution};
pub use power_mean::{generalized_mean, PowerMeanConfig};
