//! Dropping feature j from the coalition moves feature i's Shapley value by at
//! most epsilon_ij |d_i| |d_j|; on a quadratic the second-order term is exact.
//!
//! `cargo run -p shear-core --example chain_rule_bound`

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use shear_core::exact::{delta_term, epsilon_bound, exact_shapley, exact_shapley_restricted};
use shear_core::model::QuadraticModel;
use shear_core::value::{GroupMap, ValueFunction};

fn main() -> shear_core::Result<()> {
    let m = 5;
    let model = QuadraticModel::random(m, &mut ChaCha8Rng::seed_from_u64(5));
    let groups = GroupMap::unnamed(m);
    let vf = ValueFunction::new(&model, &groups, vec![1.0, -0.5, 2.0, 0.3, -1.2], vec![0.1; m])?;
    let phi = exact_shapley(&vf)?;
    let d = vf.feature_deviations();

    println!(" i  j        gap      delta      bound");
    for i in 0..m {
        for j in (0..m).filter(|&j| j != i) {
            let without_j = vf.full().without(i).without(j);
            let gap = phi.phi[i] - exact_shapley_restricted(&vf, i, without_j)?;
            let bound = epsilon_bound(&vf, i, j)? * d[i].abs() * d[j].abs();
            println!("{i:>2} {j:>2} {gap:>10.5} {:>10.5} {bound:>10.5}", delta_term(&vf, i, j)?);
        }
    }
    Ok(())
}
