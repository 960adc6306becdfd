//! Comparison estimators: Kernel SHAP and its Welford and paired variants,
//! plus plain and antithetic permutation sampling.

mod kernel;
mod permutation;
mod welford;

pub use kernel::{
    draw_coalitions, draw_pairs, kernel_shap, kernel_shap_enumerated, kernel_shap_with, kernel_weight, ks_pair,
    ks_pair_with, solve_constrained, KernelSample, KernelSampler, RIDGE,
};
pub use permutation::{antithetical_ps, antithetic_permutations, permutation_estimate, permutation_sampling};
pub use welford::{ks_welford, ks_welford_with, WelfordRegression};
