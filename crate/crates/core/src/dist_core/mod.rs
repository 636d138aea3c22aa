//! Numerical representations of the laws involved: truncated integer pmfs,
//! gridded real laws, the mixing catalog, mixed and compound Poisson pmfs.

mod compound;
mod dickman;
mod gaussian;
mod grid;
mod mixing;
mod pmf;

pub use compound::{compound_poisson_pmf, mp_cp_params, CompoundPoissonParams};
pub use dickman::{
    dickman_cdf, dickman_density, dickman_partial_moment, dickman_quantile, dickman_rho, rho_tail_point,
    sample_dickman, EULER_GAMMA, RHO_XMAX,
};
pub use gaussian::gaussian_cdf;
pub use grid::{GriddedLaw, Interpolation};
pub use mixing::{mixed_poisson_pmf, MixingKind, MixingLaw, DICKMAN_SAMPLER_DEPTH, MAX_PMF_INDEX};
pub use pmf::TruncatedPmf;
