//! The quantum stochastic Duhamel principle on chains.
//!
//! Chain-level solvers work with operator values on `𝔥 ⊗ (ℂ^f)^{⊗|ϑ|}` in
//! system-major layout. The exponents `K(x, ϑ∖x)` and `L(x, ϑ∖x)` act at the
//! point `x` and may depend on the rest of the chain. In the single sum, the
//! cocycle `Y^t_z` covers the points strictly after `z` and `T_z` the points
//! strictly before it.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use crate::chain::tensor::{lift_local, pow};
use crate::chain::{epsilon_morphism, system_major, BlockDiagOperator, Chain, Fiber, FockBasis, FockOperator, Grid};
use crate::error::{Error, Result};
use crate::linalg::{identity, CMatrix};
use crate::minkowski::BlockOperator;

/// Largest chain accepted by the subset-expansion oracles.
pub const SUBSET_LIMIT: usize = 12;

type ChainFn = dyn Fn(usize, &Chain) -> CMatrix + Send + Sync;

/// A chronological exponent: one local increment per grid cell, or a chain-dependent family.
#[derive(Clone)]
pub enum Exponent {
    /// Adapted increments; each acts on its own point only.
    PerPoint(Vec<BlockOperator>),
    /// `K(x, ϑ∖x)` as a system-major local matrix at `x`.
    ChainDependent(Arc<ChainFn>),
}

impl std::fmt::Debug for Exponent {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::PerPoint(v) => f.debug_tuple("PerPoint").field(&v.len()).finish(),
            Self::ChainDependent(_) => f.write_str("ChainDependent(..)"),
        }
    }
}

impl Exponent {
    pub fn chain_dependent<F>(f: F) -> Self
    where
        F: Fn(usize, &Chain) -> CMatrix + Send + Sync + 'static,
    {
        Self::ChainDependent(Arc::new(f))
    }

    pub fn zero(grid: &Grid, noise_dim: usize, d: usize) -> Self {
        Self::PerPoint(vec![BlockOperator::zeros(noise_dim, d); grid.len()])
    }

    pub fn is_adapted(&self) -> bool {
        matches!(self, Self::PerPoint(_))
    }

    /// The local increment at grid point `x` of `chain`, system-major.
    pub fn local(&self, x: usize, rest: &Chain) -> CMatrix {
        match self {
            Self::PerPoint(v) => system_major(&v[x]),
            Self::ChainDependent(f) => f(x, rest),
        }
    }

    fn per_point(&self) -> Result<&[BlockOperator]> {
        match self {
            Self::PerPoint(v) => Ok(v),
            Self::ChainDependent(_) => Err(Error::NotAdapted),
        }
    }
}

/// Data shared by the chain-level solvers: `dT = (K + L) T dn`.
#[derive(Clone, Debug)]
pub struct DuhamelProblem {
    pub grid: Grid,
    pub system_dim: usize,
    pub fiber_dim: usize,
    pub k: Exponent,
    pub l: Exponent,
}

impl DuhamelProblem {
    /// Chain positions before `t`.
    fn active(&self, chain: &Chain, t: f64) -> Result<usize> {
        let end = self.grid.window(0.0, t)?.end;
        if chain.points().last().is_some_and(|&x| x >= self.grid.len()) {
            return Err(Error::InvalidParameter("chain leaves the grid".into()));
        }
        Ok(chain.points().iter().take_while(|&&x| x < end).count())
    }

    fn lifted(&self, e: &Exponent, chain: &Chain, pos: usize) -> CMatrix {
        let x = chain.points()[pos];
        let local = e.local(x, &chain.remove_at(pos));
        lift_local(&local, self.system_dim, self.fiber_dim, chain.len(), pos)
    }

    fn size(&self, chain: &Chain) -> usize {
        self.system_dim * pow(self.fiber_dim, chain.len())
    }

    fn check_value(&self, chain: &Chain, t0: &CMatrix) -> Result<()> {
        let n = self.size(chain);
        if t0.nrows() != n {
            return Err(Error::DimensionMismatch(format!(
                "initial value has {} rows, the chain space has dimension {n}",
                t0.nrows()
            )));
        }
        Ok(())
    }

    /// The homogeneous cocycle generated by `K`.
    pub fn cocycle(&self) -> Cocycle {
        Cocycle {
            problem: self.clone(),
            cache: Mutex::new(HashMap::new()),
        }
    }
}

/// `Y^t_r(ϑ) = Π_{x ∈ ϑ ∩ [r, t)} (I + K(x, ϑ∖x))`, later points to the left, with cached spans.
#[derive(Debug)]
pub struct Cocycle {
    problem: DuhamelProblem,
    cache: Mutex<HashMap<(Chain, usize, usize), CMatrix>>,
}

impl Cocycle {
    /// Product over chain positions `lo..hi`.
    pub fn span(&self, chain: &Chain, lo: usize, hi: usize) -> CMatrix {
        let key = (chain.clone(), lo, hi);
        if let Some(m) = self.cache.lock().expect("cache lock").get(&key) {
            return m.clone();
        }
        let p = &self.problem;
        let n = p.size(chain);
        let mut out = identity(n);
        for pos in lo..hi {
            out = (identity(n) + p.lifted(&p.k, chain, pos)) * out;
        }
        self.cache.lock().expect("cache lock").insert(key, out.clone());
        out
    }

    /// `Y^t_r(ϑ)` over grid times `[r, t)`.
    pub fn evaluate(&self, chain: &Chain, r: f64, t: f64) -> Result<CMatrix> {
        let w = self.problem.grid.window(r, t)?;
        let lo = chain.points().iter().take_while(|&&x| x < w.start).count();
        let hi = chain.points().iter().take_while(|&&x| x < w.end).count();
        Ok(self.span(chain, lo, hi))
    }
}

/// `Π_{x ∈ ϑ ∩ [0, t)} (I + K + L) · T₀(ϑ)`.
pub fn direct_solve(p: &DuhamelProblem, t0: &CMatrix, t: f64, chain: &Chain) -> Result<CMatrix> {
    p.check_value(chain, t0)?;
    let end = p.active(chain, t)?;
    let n = p.size(chain);
    let mut out = t0.clone();
    for pos in 0..end {
        out = (identity(n) + p.lifted(&p.k, chain, pos) + p.lifted(&p.l, chain, pos)) * out;
    }
    Ok(out)
}

/// The single-sum solution `T_t = Y^t_0 T₀ + Σ_{z ∈ ϑ^t} Y^t_z L(z, ϑ∖z) T_z`, with
/// `Y^t_z` over `ϑ ∩ (z, t)` and `T_z` evaluated recursively over `ϑ ∩ [0, z)`.
pub fn duhamel_solve(p: &DuhamelProblem, t0: &CMatrix, t: f64, chain: &Chain) -> Result<CMatrix> {
    p.check_value(chain, t0)?;
    let end = p.active(chain, t)?;
    let y = p.cocycle();
    let jumps: Vec<CMatrix> = (0..end).map(|pos| p.lifted(&p.l, chain, pos)).collect();
    // memo[q] = T at the jump position q, i.e. over positions 0..q
    let mut memo: Vec<CMatrix> = Vec::with_capacity(end + 1);
    for q in 0..=end {
        let mut acc = y.span(chain, 0, q) * t0;
        for (z, tz) in memo.iter().enumerate() {
            acc += y.span(chain, z + 1, q) * &jumps[z] * tz;
        }
        memo.push(acc);
    }
    Ok(memo.pop().expect("at least one entry"))
}

fn check_subsets(end: usize) -> Result<()> {
    if end > SUBSET_LIMIT {
        return Err(Error::SubsetBudget {
            size: end,
            limit: SUBSET_LIMIT,
        });
    }
    Ok(())
}

/// The multiple-sum kernel: `Σ_{υ ⊆ ϑ^t}` of ordered products with `L` on υ and `I + K` elsewhere.
pub fn multiple_sum_kernel(p: &DuhamelProblem, t0: &CMatrix, t: f64, chain: &Chain) -> Result<CMatrix> {
    p.check_value(chain, t0)?;
    let end = p.active(chain, t)?;
    check_subsets(end)?;
    let n = p.size(chain);
    let s: Vec<CMatrix> = (0..end).map(|pos| identity(n) + p.lifted(&p.k, chain, pos)).collect();
    let l: Vec<CMatrix> = (0..end).map(|pos| p.lifted(&p.l, chain, pos)).collect();
    let mut total = CMatrix::zeros(n, t0.ncols());
    for mask in 0u32..(1 << end) {
        let mut term = t0.clone();
        for pos in 0..end {
            let f = if mask >> pos & 1 == 1 { &l[pos] } else { &s[pos] };
            term = f * term;
        }
        total += term;
    }
    Ok(total)
}

/// The fully expanded kernel: every point independently contributes `I`, `K` or `L` (`3^|ϑ^t|` terms).
pub fn expanded_kernel(p: &DuhamelProblem, t0: &CMatrix, t: f64, chain: &Chain) -> Result<CMatrix> {
    p.check_value(chain, t0)?;
    let end = p.active(chain, t)?;
    check_subsets(end)?;
    let n = p.size(chain);
    let k: Vec<CMatrix> = (0..end).map(|pos| p.lifted(&p.k, chain, pos)).collect();
    let l: Vec<CMatrix> = (0..end).map(|pos| p.lifted(&p.l, chain, pos)).collect();
    let mut total = CMatrix::zeros(n, t0.ncols());
    let terms = 3usize.pow(end as u32);
    for code in 0..terms {
        let mut term = t0.clone();
        let mut c = code;
        for pos in 0..end {
            match c % 3 {
                0 => {}
                1 => term = &k[pos] * term,
                _ => term = &l[pos] * term,
            }
            c /= 3;
        }
        total += term;
    }
    Ok(total)
}

/// Projected solvers on the truncated noise space, for adapted exponents.
#[derive(Debug)]
pub struct ProjectedDuhamel {
    basis: Arc<FockBasis>,
    grid: Grid,
    noise_dim: usize,
    system_dim: usize,
    s: Vec<BlockOperator>,
    l: Vec<BlockOperator>,
    spans: Mutex<HashMap<(usize, usize), FockOperator>>,
    tol: f64,
}

impl ProjectedDuhamel {
    /// `K` and `L` must be adapted; the basis fixes the truncation.
    pub fn new(basis: Arc<FockBasis>, k: &Exponent, l: &Exponent, tol: f64) -> Result<Self> {
        let (k, l) = (k.per_point()?, l.per_point()?);
        let grid = *basis.grid();
        let Fiber::Hilbert(n) = basis.fiber() else {
            return Err(Error::FiberMismatch("the projected form acts on noise-fiber vectors".into()));
        };
        let d = basis.system_dim();
        if k.len() != grid.len() || l.len() != grid.len() {
            return Err(Error::DimensionMismatch("one increment per grid cell is required".into()));
        }
        if k.iter().chain(l).any(|x| x.noise_dim() != n || x.system_dim() != d) {
            return Err(Error::DimensionMismatch("increments do not match the basis".into()));
        }
        let one = BlockOperator::identity(n, d);
        Ok(Self {
            s: k.iter().map(|x| one.try_add(x)).collect::<Result<_>>()?,
            l: l.to_vec(),
            basis,
            grid,
            noise_dim: n,
            system_dim: d,
            spans: Mutex::new(HashMap::new()),
            tol,
        })
    }

    pub fn basis(&self) -> &Arc<FockBasis> {
        &self.basis
    }

    fn epsilon(&self, factors: Vec<BlockOperator>) -> Result<FockOperator> {
        let x = BlockDiagOperator::chronological(self.grid, factors)?;
        epsilon_morphism(&x, &self.basis, self.tol)
    }

    /// `Y` projected over grid cells `lo..hi`.
    pub fn cocycle(&self, lo: usize, hi: usize) -> Result<FockOperator> {
        if let Some(y) = self.spans.lock().expect("cache lock").get(&(lo, hi)) {
            return Ok(y.clone());
        }
        let one = BlockOperator::identity(self.noise_dim, self.system_dim);
        let factors = (0..self.grid.len())
            .map(|j| if (lo..hi).contains(&j) { self.s[j].clone() } else { one.clone() })
            .collect();
        let y = self.epsilon(factors)?;
        self.spans.lock().expect("cache lock").insert((lo, hi), y.clone());
        Ok(y)
    }

    /// `J(z) = F L(z) F★` as an operator: time, annihilation, creation and counting parts at `z`.
    pub fn jump(&self, z: usize) -> Result<FockOperator> {
        let one = BlockOperator::identity(self.noise_dim, self.system_dim);
        let factors = (0..self.grid.len())
            .map(|j| if j == z { one.try_add(&self.l[j]) } else { Ok(one.clone()) })
            .collect::<Result<_>>()?;
        let e = self.epsilon(factors)?;
        e.add(&FockOperator::identity(Arc::clone(&self.basis)).scale(crate::linalg::real(-1.0)))
    }

    /// `T_t = Y^t_0 T₀ + Σ_{z < t} Y^t_z J(z) T_z` with `T_z` from the same recursion.
    pub fn solve(&self, t0: &FockOperator, t: f64) -> Result<FockOperator> {
        let end = self.grid.window(0.0, t)?.end;
        let mut memo: Vec<FockOperator> = Vec::with_capacity(end + 1);
        for q in 0..=end {
            let mut acc = self.cocycle(0, q)?.compose(t0)?;
            for (z, tz) in memo.iter().enumerate() {
                let term = self.cocycle(z + 1, q)?.compose(&self.jump(z)?)?.compose(tz)?;
                acc = acc.add(&term)?;
            }
            memo.push(acc);
        }
        Ok(memo.pop().expect("at least one entry"))
    }

    /// `F G^⊙_t F★ T₀` with `G = I + K + L`.
    pub fn direct(&self, t0: &FockOperator, t: f64) -> Result<FockOperator> {
        let end = self.grid.window(0.0, t)?.end;
        let one = BlockOperator::identity(self.noise_dim, self.system_dim);
        let factors = (0..self.grid.len())
            .map(|j| if j < end { self.s[j].try_add(&self.l[j]) } else { Ok(one.clone()) })
            .collect::<Result<_>>()?;
        self.epsilon(factors)?.compose(t0)
    }
}

/// Convenience wrapper: the projected Duhamel solution on a fresh truncated basis.
pub fn projected_duhamel(
    grid: Grid,
    n_max: usize,
    k: &Exponent,
    l: &Exponent,
    t0: Option<&FockOperator>,
    t: f64,
) -> Result<FockOperator> {
    let first = k.per_point()?.first().ok_or_else(|| Error::InvalidParameter("empty exponent".into()))?;
    let basis = FockBasis::new(grid, n_max, Fiber::Hilbert(first.noise_dim()), first.system_dim())?;
    let solver = ProjectedDuhamel::new(Arc::clone(&basis), k, l, crate::minkowski::DEFAULT_TOL)?;
    let identity = FockOperator::identity(basis);
    solver.solve(t0.unwrap_or(&identity), t)
}

/// The Schrödinger exponent `−K₀ = [[0, 0, −iH], [0, 0, 0], [0, 0, 0]]` and the boosted
/// measurement increment `υ★Lυ` built from the jump `I + L` with
/// `[[I, −L*, −½L*L], [0, I, L], [0, 0, I]]`.
pub fn perturbed_schrodinger(
    h: &CMatrix,
    jump: &CMatrix,
    nu: f64,
) -> Result<(BlockOperator, BlockOperator)> {
    let d = h.nrows();
    crate::linalg::require_hermitian(h, crate::minkowski::DEFAULT_TOL)?;
    let mut k = BlockOperator::zeros(1, d);
    k.set_block(0, 2, &(h * -crate::linalg::I))?;
    let mut l = BlockOperator::zeros(1, d);
    l.set_block(0, 1, &-jump.adjoint())?;
    l.set_block(0, 2, &(jump.adjoint() * jump * crate::linalg::real(-0.5)))?;
    l.set_block(1, 2, jump)?;
    let boost = crate::minkowski::LorentzBoost::new(nu, 1)?;
    Ok((k, boost.conjugate(&l)?))
}
