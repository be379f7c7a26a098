//! The embedding `F★` of the noise Fock space into the Minkowski-Fock space and
//! its left inverse `F`.
//!
//! On the Minkowski fiber `(−, •1..•n, +)`, `F★` places the noise value on the
//! `•` slots of a sub-chain and the temporal spin ξ (the `+` slot) on every other
//! point. `F` contracts every extra point with `ξ★`, which reads the `−` slot and
//! carries the chain weight `h`.

use std::collections::BTreeMap;

use super::tensor::{self, pow};
use super::vector::{ChainVector, Fiber};
use super::{check_budget, enumerate_chains};
use crate::error::{Error, Result};
use crate::linalg::{real, CVector};

/// `F★χ`. The support covers every chain up to `n_max` that contains a stored chain of `χ`.
pub fn embed(chi: &ChainVector) -> Result<ChainVector> {
    let Fiber::Hilbert(n) = chi.fiber() else {
        return Err(Error::FiberMismatch(
            "embedding expects a noise-fiber vector".into(),
        ));
    };
    let grid = *chi.grid();
    let n_max = chi.n_max();
    check_budget(grid.len(), n_max)?;
    let d = chi.system_dim();
    let m = n + 2;
    let mut values = BTreeMap::new();
    for theta in enumerate_chains(&grid, n_max)? {
        let k = theta.len();
        let mut out = CVector::zeros(d * pow(m, k));
        let mut any = false;
        for (mask, sigma) in theta.subsets() {
            let Some(v) = chi.value(&sigma) else { continue };
            any = true;
            let ks = sigma.len();
            for idx in 0..v.len() {
                let (s, labels) = tensor::digits(idx, d, n.max(1), ks);
                let mut full = Vec::with_capacity(k);
                let mut next = 0;
                for pos in 0..k {
                    if mask >> pos & 1 == 1 {
                        full.push(labels[next] + 1);
                        next += 1;
                    } else {
                        full.push(n + 1);
                    }
                }
                out[tensor::compose_index(s, &full, m)] += v[idx];
            }
        }
        if any {
            values.insert(theta, out);
        }
    }
    Ok(ChainVector::from_map(grid, n_max, Fiber::Minkowski(n), d, values))
}

/// `FΨ`: `(FΨ)(σ) = Σ_{τ ∩ σ = ∅} h^|τ| Ψ(σ ⊔ τ)` with `•` labels on σ and `−` on τ.
pub fn project(psi: &ChainVector) -> Result<ChainVector> {
    let Fiber::Minkowski(n) = psi.fiber() else {
        return Err(Error::FiberMismatch(
            "projection expects a Minkowski-fiber vector".into(),
        ));
    };
    let grid = *psi.grid();
    let h = grid.h();
    let d = psi.system_dim();
    let m = n + 2;
    let mut out = psi.with_fiber(Fiber::Hilbert(n));
    for (theta, v) in psi.iter() {
        let k = theta.len();
        for (mask, sigma) in theta.subsets() {
            let ks = sigma.len();
            if n == 0 && ks > 0 {
                continue;
            }
            let weight = real(h.powi((k - ks) as i32));
            let mut val = CVector::zeros(d * pow(n, ks));
            for idx in 0..val.len() {
                let (s, labels) = tensor::digits(idx, d, n.max(1), ks);
                let mut full = Vec::with_capacity(k);
                let mut next = 0;
                for pos in 0..k {
                    if mask >> pos & 1 == 1 {
                        full.push(labels[next] + 1);
                        next += 1;
                    } else {
                        full.push(0);
                    }
                }
                val[idx] = v[tensor::compose_index(s, &full, m)];
            }
            out.accumulate(sigma, val * weight);
        }
    }
    Ok(out)
}

/// `E = F★F`, an idempotent on the Minkowski-Fock space.
pub fn projection_e(psi: &ChainVector) -> Result<ChainVector> {
    embed(&project(psi)?)
}

/// The vacuum lift `Φ = F★(ψ δ_∅)`, equal to `ψ ⊗ ξ^⊗` on every chain.
pub fn vacuum_lift(chi_vacuum: &ChainVector) -> Result<ChainVector> {
    embed(chi_vacuum)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{exponential_vector, Grid};
    use crate::linalg::{random, ONE, ZERO};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_noise(rng: &mut ChaCha8Rng, grid: Grid, n_max: usize, n: usize, d: usize) -> ChainVector {
        let mut v = ChainVector::zero(grid, n_max, Fiber::Hilbert(n), d);
        for ch in enumerate_chains(&grid, n_max).unwrap() {
            let len = v.value_len(ch.len());
            v.set(ch, random::vector(rng, len)).unwrap();
        }
        v
    }

    #[test]
    fn f_is_left_inverse_of_f_star() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let g = Grid::new(1.0, 5).unwrap();
        for n in 1..=2 {
            let chi = random_noise(&mut rng, g, 3, n, 2);
            let back = project(&embed(&chi).unwrap()).unwrap();
            for (c, v) in chi.iter() {
                assert_eq!(back.value(c).unwrap(), v);
            }
            assert_eq!(back.stored(), chi.stored());
        }
    }

    #[test]
    fn e_is_idempotent() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let g = Grid::new(1.0, 4).unwrap();
        let mut psi = ChainVector::zero(g, 3, Fiber::Minkowski(1), 1);
        for ch in enumerate_chains(&g, 3).unwrap() {
            let len = psi.value_len(ch.len());
            psi.set(ch, random::vector(&mut rng, len)).unwrap();
        }
        let e1 = projection_e(&psi).unwrap();
        let e2 = projection_e(&e1).unwrap();
        assert!(e2.distance(&e1).unwrap() <= 1e-14 * (1.0 + e1.norm()));
    }

    #[test]
    fn vacuum_lift_is_the_temporal_product_vector() {
        let g = Grid::new(1.0, 4).unwrap();
        let psi = CVector::from_vec(vec![ONE, real(2.0)]);
        let vac = ChainVector::vacuum(g, 3, Fiber::Hilbert(1), &psi);
        let phi = vacuum_lift(&vac).unwrap();
        let xi = CVector::from_vec(vec![ZERO, ZERO, ONE]);
        let expect = exponential_vector(g, 3, Fiber::Minkowski(1), &psi, |_| xi.clone()).unwrap();
        assert_eq!(phi, expect);
    }

    #[test]
    fn projection_pairs_with_embedding() {
        // ⟨F★χ, Ψ⟩_η = ⟨χ, FΨ⟩
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let g = Grid::new(1.0, 4).unwrap();
        let chi = random_noise(&mut rng, g, 3, 1, 2);
        let mut psi = ChainVector::zero(g, 3, Fiber::Minkowski(1), 2);
        for ch in enumerate_chains(&g, 3).unwrap() {
            let len = psi.value_len(ch.len());
            psi.set(ch, random::vector(&mut rng, len)).unwrap();
        }
        let lhs = embed(&chi).unwrap().pseudo_inner(&psi).unwrap();
        let rhs = chi.inner(&project(&psi).unwrap()).unwrap();
        assert!((lhs - rhs).norm() < 1e-12 * (1.0 + lhs.norm()));
    }

    #[test]
    fn wrong_fibers_are_rejected() {
        let g = Grid::new(1.0, 2).unwrap();
        let one = CVector::from_element(1, ONE);
        let mink = ChainVector::vacuum(g, 1, Fiber::Minkowski(1), &one);
        assert!(embed(&mink).is_err());
        let noise = ChainVector::vacuum(g, 1, Fiber::Hilbert(1), &one);
        assert!(project(&noise).is_err());
    }
}
