use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tensor::{self, pow};
use super::{check_budget, enumerate_chains, Chain, Grid};
use crate::error::{Error, Result};
use crate::ito::{Future, ItoElement, Past};
use crate::linalg::{real, CMatrix, CVector, C64, ZERO};

/// Per-point fiber of a chain space.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "dim", rename_all = "lowercase")]
pub enum Fiber {
    /// A Hilbert fiber `ℂ^k` (k = 1 for the scalar Fock space, k = n for noise).
    Hilbert(usize),
    /// The Minkowski fiber `ℂ^{n+2}` for noise dimension `n`, with pseudo-metric η.
    Minkowski(usize),
}

impl Fiber {
    pub fn dim(&self) -> usize {
        match *self {
            Fiber::Hilbert(k) => k,
            Fiber::Minkowski(n) => n + 2,
        }
    }

    pub fn noise_dim(&self) -> usize {
        match *self {
            Fiber::Hilbert(k) => k,
            Fiber::Minkowski(n) => n,
        }
    }

    pub fn is_minkowski(&self) -> bool {
        matches!(self, Fiber::Minkowski(_))
    }
}

/// A truncated map from chains to vectors in `𝔥 ⊗ fiber^{⊗|ϑ|}`. Absent chains are zero.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainVector {
    grid: Grid,
    n_max: usize,
    fiber: Fiber,
    system_dim: usize,
    values: BTreeMap<Chain, CVector>,
}

impl ChainVector {
    pub fn zero(grid: Grid, n_max: usize, fiber: Fiber, system_dim: usize) -> Self {
        Self {
            grid,
            n_max,
            fiber,
            system_dim,
            values: BTreeMap::new(),
        }
    }

    /// `ψ δ_∅`.
    pub fn vacuum(grid: Grid, n_max: usize, fiber: Fiber, psi: &CVector) -> Self {
        let mut v = Self::zero(grid, n_max, fiber, psi.len());
        v.values.insert(Chain::empty(), psi.clone());
        v
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn fiber(&self) -> Fiber {
        self.fiber
    }

    pub fn system_dim(&self) -> usize {
        self.system_dim
    }

    /// Length of a value on a chain with `k` points.
    pub fn value_len(&self, k: usize) -> usize {
        self.system_dim * pow(self.fiber.dim(), k)
    }

    pub fn value(&self, chain: &Chain) -> Option<&CVector> {
        self.values.get(chain)
    }

    /// Value on `chain`, zero if absent.
    pub fn value_or_zero(&self, chain: &Chain) -> CVector {
        self.values
            .get(chain)
            .cloned()
            .unwrap_or_else(|| CVector::zeros(self.value_len(chain.len())))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Chain, &CVector)> {
        self.values.iter()
    }

    pub fn stored(&self) -> usize {
        self.values.len()
    }

    fn check_chain(&self, chain: &Chain, len: usize) -> Result<()> {
        if let Some(&last) = chain.points().last() {
            if last >= self.grid.len() {
                return Err(Error::InvalidParameter(format!(
                    "chain point {last} outside a grid of {} points",
                    self.grid.len()
                )));
            }
        }
        if chain.len() > self.n_max {
            return Err(Error::InvalidParameter(format!(
                "chain of {} points exceeds the truncation n_max = {}",
                chain.len(),
                self.n_max
            )));
        }
        let expect = self.value_len(chain.len());
        if len != expect {
            return Err(Error::DimensionMismatch(format!(
                "value on a {}-point chain must have length {expect}, got {len}",
                chain.len()
            )));
        }
        Ok(())
    }

    pub fn set(&mut self, chain: Chain, value: CVector) -> Result<()> {
        self.check_chain(&chain, value.len())?;
        self.values.insert(chain, value);
        Ok(())
    }

    /// Adds into the value on `chain`; contributions beyond `n_max` are dropped.
    pub(crate) fn accumulate(&mut self, chain: Chain, value: CVector) {
        if chain.len() > self.n_max {
            return;
        }
        match self.values.get_mut(&chain) {
            Some(v) => *v += value,
            None => {
                self.values.insert(chain, value);
            }
        }
    }

    pub(crate) fn like(&self) -> Self {
        Self::zero(self.grid, self.n_max, self.fiber, self.system_dim)
    }

    pub(crate) fn with_fiber(&self, fiber: Fiber) -> Self {
        Self::zero(self.grid, self.n_max, fiber, self.system_dim)
    }

    pub(crate) fn from_map(
        grid: Grid,
        n_max: usize,
        fiber: Fiber,
        system_dim: usize,
        values: BTreeMap<Chain, CVector>,
    ) -> Self {
        Self {
            grid,
            n_max,
            fiber,
            system_dim,
            values,
        }
    }

    fn compatible(&self, other: &Self) -> Result<()> {
        if self.grid != other.grid
            || self.fiber != other.fiber
            || self.system_dim != other.system_dim
        {
            return Err(Error::FiberMismatch(format!(
                "{:?}/d={} vs {:?}/d={}",
                self.fiber, self.system_dim, other.fiber, other.system_dim
            )));
        }
        Ok(())
    }

    /// `Σ_ϑ h^|ϑ| ⟨self(ϑ), other(ϑ)⟩`, antilinear in `self`.
    pub fn inner(&self, other: &Self) -> Result<C64> {
        self.compatible(other)?;
        let h = self.grid.h();
        Ok(self
            .values
            .iter()
            .filter_map(|(c, v)| other.values.get(c).map(|w| (c, v, w)))
            .map(|(c, v, w)| v.dotc(w) * h.powi(c.len() as i32))
            .sum())
    }

    pub fn norm_squared(&self) -> f64 {
        let h = self.grid.h();
        self.values
            .iter()
            .map(|(c, v)| v.norm_squared() * h.powi(c.len() as i32))
            .sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_squared().sqrt()
    }

    /// Pseudo inner product: on a Minkowski fiber each point is paired through η.
    pub fn pseudo_inner(&self, other: &Self) -> Result<C64> {
        self.compatible(other)?;
        let Fiber::Minkowski(n) = self.fiber else {
            return self.inner(other);
        };
        let m = n + 2;
        let d = self.system_dim;
        let h = self.grid.h();
        let mut acc = ZERO;
        for (c, v) in &self.values {
            let Some(w) = other.values.get(c) else { continue };
            let k = c.len();
            let mut s = ZERO;
            for idx in 0..v.len() {
                let (sys, ps) = tensor::digits(idx, d, m, k);
                let partner: Vec<usize> = ps.iter().map(|&p| flip(p, n)).collect();
                s += v[idx].conj() * w[tensor::compose_index(sys, &partner, m)];
            }
            acc += s * h.powi(k as i32);
        }
        Ok(acc)
    }

    /// `Ψ★Ψ`; real, possibly negative on a Minkowski fiber.
    pub fn pseudo_norm_squared(&self) -> f64 {
        self.pseudo_inner(self).map(|z| z.re).unwrap_or(f64::NAN)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.compatible(other)?;
        let mut out = self.clone();
        out.n_max = self.n_max.max(other.n_max);
        for (c, v) in &other.values {
            out.accumulate(c.clone(), v.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(real(-1.0)))
    }

    pub fn scale(&self, c: C64) -> Self {
        let mut out = self.clone();
        for v in out.values.values_mut() {
            *v *= c;
        }
        out
    }

    /// Weighted norm of the difference.
    pub fn distance(&self, other: &Self) -> Result<f64> {
        Ok(self.sub(other)?.norm())
    }

    /// Drops chains longer than `n_max`.
    pub fn truncate(&self, n_max: usize) -> Self {
        let mut out = self.clone();
        out.n_max = n_max;
        out.values.retain(|c, _| c.len() <= n_max);
        out
    }

    /// Applies a closure chain by chain, in parallel, keeping the support.
    pub fn map_values<F>(&self, f: F) -> Self
    where
        F: Fn(&Chain, &CVector) -> CVector + Sync,
    {
        let entries: Vec<(&Chain, &CVector)> = self.values.iter().collect();
        let mapped: Vec<(Chain, CVector)> = entries
            .par_iter()
            .map(|(c, v)| ((*c).clone(), f(c, v)))
            .collect();
        let mut out = self.clone();
        out.values = mapped.into_iter().collect();
        out
    }

    /// `[∇Ψ](t, ϑ) = Ψ(t ⊔ ϑ)`, with the fiber of `t` moved next to the system.
    pub fn point_derivative(&self) -> PointFamily {
        let d = self.system_dim;
        let f = self.fiber.dim();
        let mut values = BTreeMap::new();
        for (c, v) in &self.values {
            for (pos, &t) in c.points().iter().enumerate() {
                let rest = c.remove_at(pos);
                values.insert((t, rest), tensor::move_to_front(v, d, f, c.len(), pos));
            }
        }
        PointFamily {
            grid: self.grid,
            n_max: self.n_max.saturating_sub(1),
            fiber: self.fiber,
            system_dim: d,
            values,
        }
    }

    /// `Ψ(t ⊔ σ)` for a single point; fails when `t ∈ σ`.
    pub fn derivative_at(&self, t: usize, sigma: &Chain) -> Result<CVector> {
        let (c, pos) = sigma.insert(t)?;
        let v = self.value_or_zero(&c);
        Ok(tensor::move_to_front(
            &v,
            self.system_dim,
            self.fiber.dim(),
            c.len(),
            pos,
        ))
    }

    /// `∇★∇`, which multiplies the value on an `n`-chain by `n`.
    pub fn number_operator(&self) -> Self {
        self.point_derivative().skorokhod_adjoint()
    }

    /// Applies `D` to `ψ ⊗ fiber` at every point of every chain: `[Σ_{x∈ϑ} D_x] Ψ(ϑ)`.
    pub fn apply_at_each_point(&self, op: &CMatrix) -> Self {
        let d = self.system_dim;
        let f = self.fiber.dim();
        self.map_values(|c, v| {
            let mut acc = CVector::zeros(v.len());
            for pos in 0..c.len() {
                acc += tensor::apply_local(v, op, d, f, c.len(), pos);
            }
            acc
        })
    }
}

#[inline]
fn flip(a: usize, n: usize) -> usize {
    if a == 0 {
        n + 1
    } else if a == n + 1 {
        0
    } else {
        a
    }
}

/// A chain-vector family indexed by an extra point: `ζ(t, σ)` with `t ∉ σ`.
///
/// Values are laid out as `system ⊗ fiber(t) ⊗ fiber(σ₁) ⊗ …`.
#[derive(Clone, Debug, PartialEq)]
pub struct PointFamily {
    grid: Grid,
    n_max: usize,
    fiber: Fiber,
    system_dim: usize,
    values: BTreeMap<(usize, Chain), CVector>,
}

impl PointFamily {
    pub fn zero(grid: Grid, n_max: usize, fiber: Fiber, system_dim: usize) -> Self {
        Self {
            grid,
            n_max,
            fiber,
            system_dim,
            values: BTreeMap::new(),
        }
    }

    pub fn set(&mut self, t: usize, sigma: Chain, value: CVector) -> Result<()> {
        if sigma.contains(t) {
            return Err(Error::DisjointUnion { point: t });
        }
        if sigma.len() > self.n_max {
            return Err(Error::InvalidParameter(format!(
                "family chain of {} points exceeds n_max = {}",
                sigma.len(),
                self.n_max
            )));
        }
        let expect = self.system_dim * pow(self.fiber.dim(), sigma.len() + 1);
        if value.len() != expect {
            return Err(Error::DimensionMismatch(format!(
                "family value must have length {expect}, got {}",
                value.len()
            )));
        }
        self.values.insert((t, sigma), value);
        Ok(())
    }

    pub fn get(&self, t: usize, sigma: &Chain) -> Option<&CVector> {
        self.values.get(&(t, sigma.clone()))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&(usize, Chain), &CVector)> {
        self.values.iter()
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    /// `Σ_t h Σ_σ h^|σ| ⟨ζ(t,σ), η(t,σ)⟩`.
    pub fn inner(&self, other: &Self) -> C64 {
        let h = self.grid.h();
        self.values
            .iter()
            .filter_map(|(key, v)| other.values.get(key).map(|w| (key, v, w)))
            .map(|((_, s), v, w)| v.dotc(w) * h.powi(s.len() as i32 + 1))
            .sum()
    }

    /// `[∇★ζ](ϑ) = Σ_{t∈ϑ} ζ(t, ϑ∖t)`.
    pub fn skorokhod_adjoint(&self) -> ChainVector {
        let d = self.system_dim;
        let f = self.fiber.dim();
        let mut out = ChainVector::zero(self.grid, self.n_max + 1, self.fiber, d);
        for ((t, sigma), v) in &self.values {
            let (c, pos) = sigma.insert(*t).expect("family keys are disjoint");
            let len = c.len();
            out.accumulate(c, tensor::move_from_front(v, d, f, len, pos));
        }
        out
    }
}

/// `k^⊗` tensored with `ψ`: `value(ϑ) = ψ ⊗ k(t₁) ⊗ … ⊗ k(t_m)` for every chain up to `n_max`.
pub fn exponential_vector<F>(
    grid: Grid,
    n_max: usize,
    fiber: Fiber,
    psi: &CVector,
    k: F,
) -> Result<ChainVector>
where
    F: Fn(usize) -> CVector,
{
    check_budget(grid.len(), n_max)?;
    let per_point: Vec<CVector> = (0..grid.len()).map(&k).collect();
    if let Some(bad) = per_point.iter().find(|v| v.len() != fiber.dim()) {
        return Err(Error::DimensionMismatch(format!(
            "fiber vectors must have length {}, got {}",
            fiber.dim(),
            bad.len()
        )));
    }
    let mut out = ChainVector::zero(grid, n_max, fiber, psi.len());
    for c in enumerate_chains(&grid, n_max)? {
        let factors: Vec<&CVector> = c.points().iter().map(|&j| &per_point[j]).collect();
        out.values.insert(c, tensor::product_value(psi, &factors));
    }
    Ok(out)
}

/// Normalized coherent vector `e^{−½‖g‖²} g^⊗` with `‖g‖² = Σ_j h‖g_j‖²`.
pub fn coherent_vector<F>(grid: Grid, n_max: usize, fiber: Fiber, psi: &CVector, g: F) -> Result<ChainVector>
where
    F: Fn(usize) -> CVector,
{
    let h = grid.h();
    let norm2: f64 = (0..grid.len()).map(|j| g(j).norm_squared() * h).sum();
    Ok(exponential_vector(grid, n_max, fiber, psi, g)?.scale(real((-0.5 * norm2).exp())))
}

/// The four-part QS single integral `∫₀ᵗ Λ(D, dz)` applied to a noise-fiber vector.
///
/// Counting and creation act through the point derivative and its adjoint on
/// points of the chain before `t`; annihilation and time parts are Riemann sums
/// with weight `h` over grid points before `t`.
pub fn qs_single_integral<F>(chi: &ChainVector, d_of: F, t: f64) -> Result<ChainVector>
where
    F: Fn(usize) -> ItoElement,
{
    let Fiber::Hilbert(n) = chi.fiber() else {
        return Err(Error::FiberMismatch(
            "the QS integral acts on noise-fiber vectors".into(),
        ));
    };
    let grid = *chi.grid();
    grid.check_time(t)?;
    let upto = grid.points_before(t);
    let d = chi.system_dim();
    let h = grid.h();

    struct Parts {
        counting: CMatrix,
        creation: CMatrix,
        annihilation: CMatrix,
        time: CMatrix,
    }
    let mut parts = Vec::with_capacity(upto);
    for z in 0..upto {
        let el = d_of(z);
        if el.noise_dim() != n || el.system_dim() != d {
            return Err(Error::DimensionMismatch(format!(
                "integrand at point {z} has (n={}, d={}), vector has (n={n}, d={d})",
                el.noise_dim(),
                el.system_dim()
            )));
        }
        let mut counting = CMatrix::zeros(d * n, d * n);
        let mut creation = CMatrix::zeros(d * n, d);
        let mut annihilation = CMatrix::zeros(d, d * n);
        for i in 0..n {
            let cre = el.coefficient(Past::Noise(i + 1), Future::Plus);
            let ann = el.coefficient(Past::Minus, Future::Noise(i + 1));
            for s in 0..d {
                for s2 in 0..d {
                    creation[(s * n + i, s2)] = cre[(s, s2)];
                    annihilation[(s, s2 * n + i)] = ann[(s, s2)];
                }
            }
            for k in 0..n {
                let cnt = el.coefficient(Past::Noise(i + 1), Future::Noise(k + 1));
                for s in 0..d {
                    for s2 in 0..d {
                        counting[(s * n + i, s2 * n + k)] = cnt[(s, s2)];
                    }
                }
            }
        }
        parts.push(Parts {
            counting,
            creation,
            annihilation,
            time: el.pseudo_state(),
        });
    }
    let time_total: CMatrix = parts
        .iter()
        .fold(CMatrix::zeros(d, d), |acc, p| acc + &p.time * real(h));
    // the time integral runs over grid points outside the chain

    let mut out = chi.like();
    for (c, v) in chi.iter() {
        let k = c.len();
        // time
        let own = c
            .points()
            .iter()
            .filter(|&&x| x < upto)
            .fold(CMatrix::zeros(d, d), |acc, &x| acc + &parts[x].time * real(h));
        out.accumulate(c.clone(), tensor::apply_system(v, &(&time_total - own), d));
        for (pos, &x) in c.points().iter().enumerate() {
            if x >= upto {
                break;
            }
            // counting: ∇★ D^•_• ∇
            out.accumulate(
                c.clone(),
                tensor::apply_local(v, &parts[x].counting, d, n, k, pos),
            );
            // annihilation: h D^−_• ∇_x
            let rest = c.remove_at(pos);
            let val = tensor::annihilate_at(v, &parts[x].annihilation, d, n, k, pos) * real(h);
            out.accumulate(rest, val);
        }
        // creation: ∇★ D^•_+
        if k < chi.n_max() {
            for (z, part) in parts.iter().enumerate() {
                if let Ok((bigger, pos)) = c.insert(z) {
                    out.accumulate(bigger, tensor::create_at(v, &part.creation, d, n, k, pos));
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, identity, random, ONE};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_vector(rng: &mut ChaCha8Rng, grid: Grid, n_max: usize, fiber: Fiber, d: usize) -> ChainVector {
        let mut v = ChainVector::zero(grid, n_max, fiber, d);
        for ch in enumerate_chains(&grid, n_max).unwrap() {
            let len = v.value_len(ch.len());
            v.set(ch, random::vector(rng, len)).unwrap();
        }
        v
    }

    fn random_family(rng: &mut ChaCha8Rng, grid: Grid, n_max: usize, fiber: Fiber, d: usize) -> PointFamily {
        let mut fam = PointFamily::zero(grid, n_max, fiber, d);
        for sigma in enumerate_chains(&grid, n_max).unwrap() {
            for t in 0..grid.len() {
                if sigma.contains(t) {
                    continue;
                }
                let len = d * pow(fiber.dim(), sigma.len() + 1);
                fam.set(t, sigma.clone(), random::vector(rng, len)).unwrap();
            }
        }
        fam
    }

    #[test]
    fn vacuum_is_normalized() {
        let g = Grid::new(2.0, 5).unwrap();
        let vac = ChainVector::vacuum(g, 3, Fiber::Hilbert(1), &CVector::from_element(1, ONE));
        assert_eq!(vac.norm_squared(), 1.0);
        assert_eq!(vac.like().norm_squared(), 0.0);
    }

    #[test]
    fn gradient_and_skorokhod_are_adjoint() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let g = Grid::new(1.0, 5).unwrap();
        let chi = random_vector(&mut rng, g, 3, Fiber::Hilbert(2), 2);
        let zeta = random_family(&mut rng, g, 2, Fiber::Hilbert(2), 2);
        let lhs = zeta.skorokhod_adjoint().inner(&chi).unwrap();
        let rhs = zeta.inner(&chi.point_derivative());
        assert!((lhs - rhs).norm() < 1e-12 * (1.0 + lhs.norm()));
    }

    #[test]
    fn number_operator_counts_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g = Grid::new(1.0, 5).unwrap();
        let chi = random_vector(&mut rng, g, 4, Fiber::Hilbert(2), 1);
        let n = chi.number_operator();
        for (ch, v) in chi.iter() {
            let got = n.value_or_zero(ch);
            assert_eq!(got, v * real(ch.len() as f64));
        }
    }

    #[test]
    fn derivative_of_vacuum_and_exponential() {
        let g = Grid::new(1.0, 4).unwrap();
        let one = CVector::from_element(1, ONE);
        let vac = ChainVector::vacuum(g, 3, Fiber::Hilbert(1), &one);
        assert_eq!(vac.point_derivative().iter().count(), 0);
        let k = |j: usize| CVector::from_vec(vec![c(0.3 * j as f64, 0.1), c(-0.2, 0.5)]);
        let e = exponential_vector(g, 3, Fiber::Hilbert(2), &one, k).unwrap();
        let sigma = Chain::new(vec![0, 3]).unwrap();
        let dv = e.derivative_at(2, &sigma).unwrap();
        let expect = tensor::product_value(&one, &[&k(2), &k(0), &k(3)]);
        assert!((dv - expect).norm() < 1e-15);
        assert!(matches!(e.derivative_at(3, &sigma), Err(Error::DisjointUnion { point: 3 })));
        assert_eq!(e.value(&Chain::singleton(1)).unwrap(), &k(1));
    }

    #[test]
    fn exponential_inner_product_is_exponential() {
        let g = Grid::new(1.0, 12).unwrap();
        let one = CVector::from_element(1, ONE);
        let f = |j: usize| CVector::from_vec(vec![c(0.4, 0.1 * j as f64 / 12.0)]);
        let k = |j: usize| CVector::from_vec(vec![c(0.5 - 0.02 * j as f64, -0.3)]);
        let n_max = 8;
        let ef = exponential_vector(g, n_max, Fiber::Hilbert(1), &one, f).unwrap();
        let ek = exponential_vector(g, n_max, Fiber::Hilbert(1), &one, k).unwrap();
        let got = ef.inner(&ek).unwrap();
        let h = g.h();
        // the untruncated grid sum is the product Π(1 + h f̄k)
        let prod = (0..12).fold(ONE, |acc, j| acc * (ONE + f(j)[0].conj() * k(j)[0] * h));
        let x: f64 = (0..12).map(|j| h * f(j)[0].norm() * k(j)[0].norm()).sum();
        let tail: f64 = (n_max + 1..40).map(|m| x.powi(m as i32) / factorial(m)).sum();
        assert!((got - prod).norm() <= tail);
        let s: C64 = (0..12).map(|j| f(j)[0].conj() * k(j)[0] * h).sum();
        let quad: f64 = (0..12).map(|j| (h * f(j)[0].norm() * k(j)[0].norm()).powi(2)).sum::<f64>() * x.exp();
        assert!((got - s.exp()).norm() <= tail + quad);
    }

    fn factorial(m: usize) -> f64 {
        (1..=m).map(|x| x as f64).product()
    }

    #[test]
    fn qs_integral_time_part_is_a_riemann_sum() {
        let g = Grid::new(1.0, 8).unwrap();
        let psi = CVector::from_vec(vec![ONE, c(0.0, 1.0)]);
        let chi = ChainVector::vacuum(g, 2, Fiber::Hilbert(1), &psi);
        let out = qs_single_integral(&chi, |_| ItoElement::dt(1, &identity(2)), 0.5).unwrap();
        let expected = &psi * real(0.5);
        assert!((out.value_or_zero(&Chain::empty()) - expected).norm() < 1e-15);
        let zero = qs_single_integral(&chi, |_| ItoElement::zero(1, 2), 0.5).unwrap();
        assert_eq!(zero.norm(), 0.0);
        assert!(qs_single_integral(&chi, |_| ItoElement::zero(1, 2), 1.5).is_err());
    }

    #[test]
    fn qs_integral_creation_on_vacuum() {
        let g = Grid::new(1.0, 8).unwrap();
        let one = CVector::from_element(1, ONE);
        let chi = ChainVector::vacuum(g, 2, Fiber::Hilbert(1), &one);
        let kz = |z: usize| CMatrix::from_element(1, 1, c(z as f64, 1.0));
        let out = qs_single_integral(&chi, |z| ItoElement::creation(1, 1, &kz(z)), 0.5).unwrap();
        for j in 0..8 {
            let v = out.value_or_zero(&Chain::singleton(j));
            let expect = if g.point(j) < 0.5 { kz(j)[(0, 0)] } else { ZERO };
            assert_eq!(v[0], expect);
        }
        assert!(out.value(&Chain::empty()).is_none_or(|v| v.norm() == 0.0));
    }

    #[test]
    fn qs_integral_counting_is_number_operator_on_window() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let g = Grid::new(1.0, 5).unwrap();
        let chi = random_vector(&mut rng, g, 3, Fiber::Hilbert(1), 1);
        let out = qs_single_integral(&chi, |_| ItoElement::counting(1, 1, 1, &identity(1)), 1.0).unwrap();
        assert!(out.distance(&chi.number_operator()).unwrap() < 1e-14);
    }

    #[test]
    fn pseudo_norm_of_minkowski_vacuum_column() {
        let g = Grid::new(1.0, 3).unwrap();
        let one = CVector::from_element(1, ONE);
        let xi = CVector::from_vec(vec![ZERO, ZERO, ONE]);
        let v = exponential_vector(g, 3, Fiber::Minkowski(1), &one, |_| xi.clone()).unwrap();
        assert_eq!(v.pseudo_norm_squared(), 1.0);
        let neg = CVector::from_vec(vec![real(-1.0), ZERO, ONE]);
        let single = {
            let mut s = ChainVector::zero(g, 1, Fiber::Minkowski(1), 1);
            s.set(Chain::singleton(0), neg).unwrap();
            s
        };
        assert!(single.pseudo_norm_squared() < 0.0);
    }
}
