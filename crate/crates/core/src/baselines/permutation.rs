use rand::seq::SliceRandom;

use crate::attribution::{Attribution, Method};
use crate::coalition::Coalition;
use crate::error::{Error, Result};
use crate::rng;
use crate::value::{CountingEval, ValueFunction};

/// Average marginal contribution of every feature over the given orderings.
///
/// Each feature spends two value-function calls per ordering.
pub fn permutation_estimate(vf: &ValueFunction<'_>, perms: &[Vec<usize>]) -> Result<(Vec<f64>, u64)> {
    let m = vf.num_features();
    if perms.is_empty() {
        return Err(Error::Argument("need at least one permutation".into()));
    }
    let eval = CountingEval::new(vf);
    let mut phi = vec![0.0; m];
    for perm in perms {
        let mut seen = vec![false; m];
        if perm.len() != m || !perm.iter().all(|&j| j < m && !std::mem::replace(&mut seen[j], true)) {
            return Err(Error::Argument(format!("{perm:?} is not a permutation of 0..{m}")));
        }
        let mut prefix = Coalition::empty(m);
        for &i in perm {
            phi[i] += eval.eval(prefix.with(i))? - eval.eval(prefix)?;
            prefix = prefix.with(i);
        }
    }
    let n = perms.len() as f64;
    phi.iter_mut().for_each(|p| *p /= n);
    Ok((phi, eval.calls()))
}

fn random_permutations(m: usize, count: usize, seed: u64) -> Vec<Vec<usize>> {
    let mut rng = rng::stream(seed, 0);
    (0..count)
        .map(|_| {
            let mut p: Vec<usize> = (0..m).collect();
            p.shuffle(&mut rng);
            p
        })
        .collect()
}

/// `count` orderings whose second half reverses the first: ordering `count - 1 - n`
/// is ordering `n` read backwards.
pub fn antithetic_permutations(m: usize, count: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if count == 0 || !count.is_multiple_of(2) {
        return Err(Error::Argument(format!("antithetic sampling needs an even, positive count, got {count}")));
    }
    let mut perms = random_permutations(m, count / 2, seed);
    let mirrors: Vec<Vec<usize>> = perms.iter().rev().map(|p| p.iter().rev().copied().collect()).collect();
    perms.extend(mirrors);
    Ok(perms)
}

/// Monte Carlo over `perms` uniformly random orderings. `budget_n` is `2 * perms`.
pub fn permutation_sampling(vf: &ValueFunction<'_>, perms: u64, seed: u64) -> Result<Attribution> {
    if perms == 0 {
        return Err(Error::Argument("need at least one permutation".into()));
    }
    let orderings = random_permutations(vf.num_features(), perms as usize, seed);
    let (phi, calls) = permutation_estimate(vf, &orderings)?;
    Ok(Attribution::new(phi, Method::Permutation, 2 * perms, Some(seed), calls))
}

/// Permutation sampling with reversed orderings paired in.
pub fn antithetical_ps(vf: &ValueFunction<'_>, perms: u64, seed: u64) -> Result<Attribution> {
    let orderings = antithetic_permutations(vf.num_features(), perms as usize, seed)?;
    let (phi, calls) = permutation_estimate(vf, &orderings)?;
    Ok(Attribution::new(phi, Method::AntitheticPermutation, 2 * perms, Some(seed), calls))
}
