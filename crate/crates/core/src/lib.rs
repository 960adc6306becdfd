//! Exact and accelerated Shapley explanations for small tabular neural models.
//!
//! The explained quantity is the marginal value function
//! `f_v(S) = f(x_S, x̄_{U\S})`: the model evaluated with the features in `S`
//! at the instance's values and every other feature at a reference value.
//!
//! * [`exact`] enumerates all coalitions for ground-truth Shapley values and
//!   the second-order chain-rule quantities.
//! * [`shear`] estimates each feature's contribution from a handful of
//!   cooperator features picked by cross-Hessian interaction strength, with
//!   antithetic sampling over the rest.
//! * [`baselines`] holds Kernel SHAP (plain, Welford, paired) and permutation
//!   sampling (plain, antithetic).
//! * [`metrics`] scores attributions: absolute error, ranking accuracy,
//!   faithfulness and monotonicity.
//!
//! ```
//! use shear_core::model::{Activation, Head, LayerSpec, MlpModel};
//! use shear_core::value::{GroupMap, ValueFunction};
//! use shear_core::{exact::exact_shapley, shear::shear_explain};
//!
//! let arch = [LayerSpec::new(8, Activation::Tanh), LayerSpec::new(1, Activation::Identity)];
//! let model = MlpModel::init(4, &arch, Head::Scalar, 0).unwrap();
//! let groups = GroupMap::unnamed(4);
//! let vf = ValueFunction::new(&model, &groups, vec![1.0, -0.5, 0.2, 2.0], vec![0.0; 4]).unwrap();
//!
//! let exact = exact_shapley(&vf).unwrap();
//! let approx = shear_explain(&vf, 16, 7).unwrap();
//! assert!(exact.phi.iter().zip(&approx.phi).all(|(a, b)| (a - b).abs() < 1e-9));
//! ```

pub mod attribution;
pub mod baselines;
pub mod coalition;
pub mod error;
pub mod estimate;
pub mod exact;
pub mod metrics;
pub mod model;
pub mod rng;
pub mod shear;
pub mod value;

pub use attribution::{Attribution, Method};
pub use coalition::Coalition;
pub use error::{Error, Result};
pub use model::{AnyModel, Model};
pub use value::ValueFunction;
