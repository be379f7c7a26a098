//! Poisson expectations `∫ φ★(ϑ) X(ϑ) φ(ϑ) dP^t_λ(ϑ)` over the chains of `[0, t)`.

use super::operator::BlockDiagOperator;
use super::tensor::{self, pow};
use super::vector::Fiber;
use super::enumerate_chains_in;
use crate::error::{Error, Result};
use crate::linalg::{identity, operator_norm, real, CMatrix, CVector, SystemOperator};

/// A truncated expectation together with its error budget.
#[derive(Clone, Debug)]
pub struct PoissonEstimate {
    pub value: SystemOperator,
    /// Bound on the chains dropped above `n_max`.
    pub tail_bound: f64,
    /// Bound on the distance from the grid sum to the continuous-time limit (zero when unknown).
    pub grid_bound: f64,
}

impl PoissonEstimate {
    pub fn total_bound(&self) -> f64 {
        self.tail_bound + self.grid_bound
    }
}

/// `Σ_{m > n_max} x^m / m!`, summed until the terms vanish.
pub fn poisson_tail(x: f64, n_max: usize) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    // term = x^m / m! computed in log space to survive large x.
    let mut log_term = (1..=n_max + 1).map(|m| (x / m as f64).ln()).sum::<f64>();
    let mut acc = 0.0;
    let mut m = n_max + 1;
    loop {
        let term = log_term.exp();
        acc += term;
        if (term <= acc * 1e-17 && m as f64 > x) || m > n_max + 10_000 {
            break;
        }
        m += 1;
        log_term += (x / m as f64).ln();
    }
    acc
}

/// [`poisson_tail`] for a window of `points` grid cells: zero once every chain is enumerated.
pub fn window_tail(x: f64, n_max: usize, points: usize) -> f64 {
    if n_max >= points {
        0.0
    } else {
        poisson_tail(x, n_max)
    }
}

/// `(I_d ⊗ φ★^⊗k) B (I_d ⊗ φ^⊗k)` for a `k`-point block `B`.
fn contract(block: &CMatrix, phi: &CVector, phi_star: &CVector, d: usize, k: usize) -> SystemOperator {
    let f = phi.len();
    let fk = pow(f, k);
    let weights = |v: &CVector, idx: usize| {
        let (_, ps) = tensor::digits(idx, 1, f, k);
        ps.iter().fold(real(1.0), |acc, &p| acc * v[p])
    };
    let right: Vec<_> = (0..fk).map(|i| weights(phi, i)).collect();
    let left: Vec<_> = (0..fk).map(|i| weights(phi_star, i)).collect();
    CMatrix::from_fn(d, d, |s, s2| {
        let mut acc = real(0.0);
        for (a, la) in left.iter().enumerate() {
            if la.norm() == 0.0 {
                continue;
            }
            for (b, rb) in right.iter().enumerate() {
                acc += la * block[(s * fk + a, s2 * fk + b)] * rb;
            }
        }
        acc
    })
}

fn check(x: &BlockDiagOperator, lambda: f64, phi: &CVector) -> Result<(usize, CVector)> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidIntensity(lambda));
    }
    let Fiber::Minkowski(n) = x.fiber() else {
        return Err(Error::FiberMismatch("Poisson expectations need a Minkowski fiber".into()));
    };
    if phi.len() != n + 2 {
        return Err(Error::DimensionMismatch(format!(
            "fiber vector has length {}, expected {}",
            phi.len(),
            n + 2
        )));
    }
    // φ★ = φ†η: conjugate and reverse the (−, +) pair.
    let mut star = phi.conjugate();
    star.swap_rows(0, n + 1);
    Ok((n, star))
}

/// Per-point contractions `M_j = φ★ G_j φ` of a chronological operator.
fn point_contractions(x: &BlockDiagOperator, phi: &CVector, star: &CVector) -> Option<Vec<SystemOperator>> {
    let factors = x.factors()?;
    let window = x.active_window()?;
    let d = x.system_dim();
    Some(
        (0..x.grid().len())
            .map(|j| {
                if window.contains(&j) {
                    contract(&factors[j], phi, star, d, 1)
                } else {
                    identity(d) * (star.transpose() * phi)[0]
                }
            })
            .collect(),
    )
}

/// `e^{−λt} Σ_j (‖a_j‖²/2) e^{‖a_j‖} e^{Σ‖a‖}` with `a_j = λh M_j`: distance of `Π(1 + a_j)` to `Π e^{a_j}`.
fn grid_bound(ms: &[SystemOperator], lambda: f64, h: f64, t: f64) -> f64 {
    let norms: Vec<f64> = ms.iter().map(|m| lambda * h * operator_norm(m)).collect();
    let total: f64 = norms.iter().sum();
    let local: f64 = norms.iter().map(|a| 0.5 * a * a * a.exp()).sum();
    (-lambda * t).exp() * local * total.exp()
}

/// Enumerates every chain in `[0, t)` with at most `n_max` points.
pub fn poisson_expectation(
    x: &BlockDiagOperator,
    lambda: f64,
    t: f64,
    phi: &CVector,
    n_max: usize,
) -> Result<PoissonEstimate> {
    let (_, star) = check(x, lambda, phi)?;
    let grid = *x.grid();
    let window = grid.window(0.0, t)?;
    let t_eff = window.len() as f64 * grid.h();
    let d = x.system_dim();
    let h = grid.h();
    let mut value = CMatrix::zeros(d, d);
    let mut b: f64 = (star.transpose() * phi)[0].norm();
    for chain in enumerate_chains_in(window.clone(), n_max)? {
        let k = chain.len();
        let m = contract(&x.block(&chain), phi, &star, d, k);
        if k > 0 {
            b = b.max(operator_norm(&m).powf(1.0 / k as f64));
        }
        value += m * real((lambda * h).powi(k as i32));
    }
    let scale = (-lambda * t_eff).exp();
    let ms = point_contractions(x, phi, &star);
    if let Some(ms) = &ms {
        b = ms[window.clone()].iter().map(operator_norm).fold(b, f64::max);
    }
    Ok(PoissonEstimate {
        value: value * real(scale),
        tail_bound: scale * window_tail(lambda * t_eff * b, n_max, window.len()),
        grid_bound: ms.map_or(0.0, |ms| grid_bound(&ms[window], lambda, h, t_eff)),
    })
}

/// The same sum for a chronological operator, by the recursion
/// `S_k(j+1) = S_k(j) + M_j S_{k−1}(j)` over the grid.
pub fn poisson_expectation_product(
    x: &BlockDiagOperator,
    lambda: f64,
    t: f64,
    phi: &CVector,
    n_max: usize,
) -> Result<PoissonEstimate> {
    let (_, star) = check(x, lambda, phi)?;
    let ms = point_contractions(x, phi, &star).ok_or_else(|| {
        Error::InvalidParameter("the product form needs a chronological operator".into())
    })?;
    let grid = *x.grid();
    let window = grid.window(0.0, t)?;
    let h = grid.h();
    let t_eff = window.len() as f64 * h;
    let d = x.system_dim();
    let mut s: Vec<CMatrix> = vec![CMatrix::zeros(d, d); n_max + 1];
    s[0] = identity(d);
    for m in &ms[window.clone()] {
        let step = m * real(lambda * h);
        for k in (1..=n_max).rev() {
            let add = &step * &s[k - 1];
            s[k] += add;
        }
    }
    let value: CMatrix = s.into_iter().fold(CMatrix::zeros(d, d), |acc, x| acc + x);
    let scale = (-lambda * t_eff).exp();
    let b = ms[window.clone()].iter().map(operator_norm).fold(0.0, f64::max);
    Ok(PoissonEstimate {
        value: value * real(scale),
        tail_bound: scale * window_tail(lambda * t_eff * b, n_max, window.len()),
        grid_bound: grid_bound(&ms[window], lambda, h, t_eff),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::Grid;
    use crate::linalg::{c, ONE};
    use crate::minkowski::BlockOperator;

    fn phi_half() -> CVector {
        CVector::from_vec(vec![real(0.5f64.sqrt()), real(0.5f64.sqrt())])
    }

    fn schrodinger(omega: f64) -> BlockOperator {
        let mut g = BlockOperator::identity(0, 1);
        g.set_block(0, 1, &CMatrix::from_element(1, 1, c(0.0, -omega))).unwrap();
        g
    }

    #[test]
    fn tail_values() {
        // Σ_{m>2} 1/m! = e − 2.5
        assert!((poisson_tail(1.0, 2) - (1f64.exp() - 2.5)).abs() < 1e-15);
        assert_eq!(poisson_tail(0.0, 3), 0.0);
        assert!((poisson_tail(4.0, 12) - 0.014_944_432_160_86).abs() < 1e-12);
    }

    #[test]
    fn identity_is_normalized() {
        let grid = Grid::new(1.0, 12).unwrap();
        let x = BlockDiagOperator::uniform(grid, &BlockOperator::identity(0, 1)).unwrap();
        let est = poisson_expectation(&x, 2.0, 1.0, &phi_half(), 4).unwrap();
        assert!((est.value[(0, 0)] - ONE).norm() <= est.total_bound());
        let dp = poisson_expectation_product(&x, 2.0, 1.0, &phi_half(), 4).unwrap();
        assert!((dp.value - &est.value).norm() < 1e-13);
    }

    #[test]
    fn zero_operator_gives_zero_beyond_the_empty_chain() {
        let grid = Grid::new(1.0, 6).unwrap();
        let zero = BlockOperator::zeros(0, 1);
        let x = BlockDiagOperator::uniform(grid, &zero).unwrap();
        let est = poisson_expectation(&x, 1.0, 1.0, &phi_half(), 3).unwrap();
        // Only the empty chain survives and carries e^{−λt}.
        assert!((est.value[(0, 0)] - real((-1.0f64).exp())).norm() < 1e-15);
    }

    #[test]
    fn boosted_schrodinger_phase() {
        let omega = std::f64::consts::FRAC_PI_2;
        let grid = Grid::new(1.0, 2048).unwrap();
        let x = BlockDiagOperator::uniform(grid, &schrodinger(omega)).unwrap();
        let est = poisson_expectation_product(&x, 4.0, 1.0, &phi_half(), 12).unwrap();
        let err = (est.value[(0, 0)] + ONE).norm();
        assert!(err <= est.total_bound(), "{err} > {}", est.total_bound());
        assert!(est.total_bound() <= 5e-2);
    }

    #[test]
    fn enumeration_and_recursion_agree() {
        let grid = Grid::new(1.0, 7).unwrap();
        let x = BlockDiagOperator::uniform(grid, &schrodinger(0.7)).unwrap();
        let phi = CVector::from_vec(vec![c(0.3, 0.1), c(0.8, -0.2)]);
        let a = poisson_expectation(&x, 1.5, 1.0, &phi, 4).unwrap();
        let b = poisson_expectation_product(&x, 1.5, 1.0, &phi, 4).unwrap();
        assert!((a.value - b.value).norm() < 1e-14);
    }

    #[test]
    fn rejects_bad_intensity() {
        let grid = Grid::new(1.0, 2).unwrap();
        let x = BlockDiagOperator::uniform(grid, &BlockOperator::identity(0, 1)).unwrap();
        assert!(matches!(
            poisson_expectation(&x, 0.0, 1.0, &phi_half(), 2),
            Err(Error::InvalidIntensity(_))
        ));
    }
}
