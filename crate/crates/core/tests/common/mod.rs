//! Shared helpers: a shuffle-definition circle oracle and seeded random data.

use std::sync::Arc;

use liext_core::gspace::{shuffles, Normalized};
use liext_core::{Cochain, GradedSpace, Parity, Scalar};
use rand::Rng;

/// Circle product evaluated from the definition: for every basis word of the
/// combined degree, sum over all block shuffles with Koszul signs, feeding the
/// inner value back into the outer cochain.
pub fn circle_oracle(outer: &Cochain, inner: &Cochain) -> Cochain {
    circle_by_shuffles(outer, inner, true)
}

/// Same evaluation with every Koszul sign forced to +1; used to confirm the
/// comparison tests are sensitive to sign errors.
pub fn circle_oracle_unsigned(outer: &Cochain, inner: &Cochain) -> Cochain {
    circle_by_shuffles(outer, inner, false)
}

fn circle_by_shuffles(outer: &Cochain, inner: &Cochain, signed: bool) -> Cochain {
    let space = outer.space().clone();
    let mut acc = Cochain::zero(&space);
    for dps in inner.degrees() {
        let psi = inner.component_of_degree(dps);
        for dph in outer.degrees() {
            let phi = outer.component_of_degree(dph);
            let n = dph + dps - 1;
            let mut terms: Vec<(Vec<usize>, usize, Scalar)> = Vec::new();
            for word in space.monomial_basis(n) {
                let w = word.indices();
                for (block, rest) in shuffles(dps, n - dps) {
                    let permuted: Vec<usize> = block
                        .iter()
                        .chain(rest.iter())
                        .map(|&p| w[p])
                        .collect();
                    let sign = match space.normalize_word(&permuted).unwrap() {
                        Normalized::Zero => continue,
                        Normalized::Term { sign, .. } => {
                            if signed {
                                sign
                            } else {
                                1
                            }
                        }
                    };
                    let first: Vec<usize> = block.iter().map(|&p| w[p]).collect();
                    for (t, c) in psi.apply(&first).unwrap() {
                        let mut outer_word = vec![t];
                        outer_word.extend(rest.iter().map(|&p| w[p]));
                        for (u, d) in phi.apply(&outer_word).unwrap() {
                            let coeff = c
                                .checked_mul(&d)
                                .unwrap()
                                .scale(&liext_core::Rational::from_integer(sign.into()));
                            terms.push((w.to_vec(), u, coeff));
                        }
                    }
                }
            }
            let part = Cochain::from_terms(&space, terms).unwrap();
            acc = acc.add(&part).unwrap();
        }
    }
    acc
}

/// Bracket evaluated through the oracle circle product.
pub fn bracket_oracle(a: &Cochain, b: &Cochain) -> Cochain {
    let ab = circle_oracle(a, b);
    let ba = circle_oracle(b, a);
    match (a.parity(), b.parity()) {
        (Some(Parity::Odd), Some(Parity::Odd)) => ab.add(&ba).unwrap(),
        _ => ab.sub(&ba).unwrap(),
    }
}

/// A random graded space, sometimes with a module split, dims 2..=max_dim.
pub fn random_space<R: Rng>(rng: &mut R, max_dim: usize) -> Arc<GradedSpace> {
    let dim = rng.gen_range(2..=max_dim);
    if rng.gen_bool(0.5) {
        let module_dim = rng.gen_range(1..dim);
        Arc::new(GradedSpace::purely_odd_split(module_dim, dim))
    } else {
        let names: Vec<String> = (1..=dim).map(|i| format!("v{i}")).collect();
        let parities: Vec<Parity> = (0..dim)
            .map(|_| {
                if rng.gen_bool(0.5) {
                    Parity::Even
                } else {
                    Parity::Odd
                }
            })
            .collect();
        Arc::new(GradedSpace::new(names, parities).unwrap())
    }
}

/// A random homogeneous cochain of the given degree with small integer
/// coefficients; may be zero when no key of a consistent parity exists.
pub fn random_cochain<R: Rng>(
    rng: &mut R,
    space: &Arc<GradedSpace>,
    degree: usize,
    parity: Parity,
) -> Cochain {
    let mut keys: Vec<(Vec<usize>, usize)> = Vec::new();
    for m in space.monomial_basis(degree) {
        for t in 0..space.dim() {
            let key_parity = space.monomial_parity(&m).combine(space.parity(t));
            if key_parity == parity {
                keys.push((m.indices().to_vec(), t));
            }
        }
    }
    if keys.is_empty() {
        return Cochain::zero(space);
    }
    let picks = rng.gen_range(1..=keys.len().min(4));
    let mut terms = Vec::new();
    for _ in 0..picks {
        let (m, t) = keys[rng.gen_range(0..keys.len())].clone();
        let c = rng.gen_range(-3i64..=3);
        if c != 0 {
            terms.push((m, t, Scalar::from_int(c)));
        }
    }
    Cochain::from_terms(space, terms).unwrap()
}
