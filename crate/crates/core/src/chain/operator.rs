use std::collections::BTreeMap;
use std::ops::Range;
use std::sync::Arc;

use super::embedding::{embed, project};
use super::fock::{FockBasis, FockOperator};
use super::tensor::{self, pow};
use super::vector::{ChainVector, Fiber};
use super::{enumerate_chains, Chain, Grid};
use crate::error::{Error, Result};
use crate::linalg::{identity, real, CMatrix, CVector, ZERO};
use crate::minkowski::BlockOperator;

/// Reorders a block operator from external-major to system-major layout, the
/// layout used for chain values (`system ⊗ fiber`).
pub fn system_major(op: &BlockOperator) -> CMatrix {
    let d = op.system_dim();
    let m = op.external_size();
    let src = op.matrix();
    CMatrix::from_fn(d * m, d * m, |r, c| {
        let (s, a) = (r / m, r % m);
        let (s2, b) = (c / m, c % m);
        src[(a * d + s, b * d + s2)]
    })
}

/// Inverse of [`system_major`].
pub fn external_major(op: &CMatrix, noise_dim: usize, d: usize) -> Result<BlockOperator> {
    let m = noise_dim + 2;
    let out = CMatrix::from_fn(d * m, d * m, |r, c| {
        let (a, s) = (r / d, r % d);
        let (b, s2) = (c / d, c % d);
        op[(s * m + a, s2 * m + b)]
    });
    BlockOperator::new(noise_dim, d, out)
}

/// Ordered product over the chain points inside `window`, later points to the left.
/// Each per-point factor acts on the system and on that point's fiber.
pub fn chronological_matrix(
    factors: &[CMatrix],
    chain: &Chain,
    window: Range<usize>,
    d: usize,
    f: usize,
) -> CMatrix {
    let k = chain.len();
    let n = d * pow(f, k);
    let mut out = identity(n);
    let seq: Vec<(usize, &CMatrix)> = chain
        .points()
        .iter()
        .enumerate()
        .filter(|(_, j)| window.contains(j))
        .map(|(pos, &j)| (pos, &factors[j]))
        .collect();
    if seq.is_empty() {
        return out;
    }
    for c in 0..n {
        let mut v: CVector = out.column(c).into_owned();
        for (pos, op) in &seq {
            v = tensor::apply_local(&v, op, d, f, k, *pos);
        }
        out.set_column(c, &v);
    }
    out
}

/// `η^⊗k X† η^⊗k` for a matrix on `𝔥 ⊗ (ℂ^{n+2})^{⊗k}`.
pub fn chain_pseudo_adjoint(x: &CMatrix, d: usize, noise_dim: usize, k: usize) -> CMatrix {
    let m = noise_dim + 2;
    let perm: Vec<usize> = (0..x.nrows())
        .map(|idx| {
            let (s, ps) = tensor::digits(idx, d, m, k);
            let flipped: Vec<usize> = ps.iter().map(|&p| flip(p, noise_dim)).collect();
            tensor::compose_index(s, &flipped, m)
        })
        .collect();
    CMatrix::from_fn(x.nrows(), x.ncols(), |r, c| x[(perm[c], perm[r])].conj())
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

#[inline]
fn rank(label: usize, n: usize) -> u8 {
    if label == 0 {
        0
    } else if label == n + 1 {
        2
    } else {
        1
    }
}

/// Norm of the entries that break the per-point order `out ≤ in` on `(−, •, +)`.
pub fn chain_upper_residual(x: &CMatrix, d: usize, noise_dim: usize, k: usize) -> f64 {
    let m = noise_dim + 2;
    let mut acc = 0.0;
    for r in 0..x.nrows() {
        let (_, pr) = tensor::digits(r, d, m, k);
        for c in 0..x.ncols() {
            let z = x[(r, c)];
            if z == ZERO {
                continue;
            }
            let (_, pc) = tensor::digits(c, d, m, k);
            if pr
                .iter()
                .zip(&pc)
                .any(|(&a, &b)| rank(a, noise_dim) > rank(b, noise_dim))
            {
                acc += z.norm_sqr();
            }
        }
    }
    acc.sqrt()
}

#[derive(Clone, Debug)]
enum Kind {
    Chronological {
        factors: Arc<Vec<CMatrix>>,
        window: Range<usize>,
    },
    Explicit {
        blocks: BTreeMap<Chain, CMatrix>,
    },
}

/// An operator acting chain by chain: `[XΨ](ϑ) = X(ϑ)Ψ(ϑ)`.
///
/// Either a chronological product of per-point factors over a window, or an
/// explicit table of chain blocks (absent chains act as the identity).
#[derive(Clone, Debug)]
pub struct BlockDiagOperator {
    grid: Grid,
    fiber: Fiber,
    system_dim: usize,
    kind: Kind,
}

impl BlockDiagOperator {
    /// `G^⊙` over the whole grid from per-point generators on the Minkowski fiber.
    pub fn chronological(grid: Grid, factors: Vec<BlockOperator>) -> Result<Self> {
        let first = factors
            .first()
            .ok_or_else(|| Error::InvalidParameter("no per-point factors".into()))?;
        let (n, d) = (first.noise_dim(), first.system_dim());
        if factors.len() != grid.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} factors for a grid of {} points",
                factors.len(),
                grid.len()
            )));
        }
        if factors.iter().any(|g| g.noise_dim() != n || g.system_dim() != d) {
            return Err(Error::DimensionMismatch("per-point factors differ in shape".into()));
        }
        let local = factors.iter().map(system_major).collect();
        Self::chronological_local(grid, Fiber::Minkowski(n), d, local)
    }

    /// Chronological product of arbitrary per-point local operators (system-major).
    pub fn chronological_local(grid: Grid, fiber: Fiber, d: usize, factors: Vec<CMatrix>) -> Result<Self> {
        let size = d * fiber.dim();
        if factors.len() != grid.len() || factors.iter().any(|f| f.shape() != (size, size)) {
            return Err(Error::DimensionMismatch(format!(
                "expected {} local factors of size {size}x{size}",
                grid.len()
            )));
        }
        Ok(Self {
            grid,
            fiber,
            system_dim: d,
            kind: Kind::Chronological {
                factors: Arc::new(factors),
                window: 0..grid.len(),
            },
        })
    }

    /// The same generator at every grid point.
    pub fn uniform(grid: Grid, g: &BlockOperator) -> Result<Self> {
        Self::chronological(grid, vec![g.clone(); grid.len()])
    }

    pub fn explicit(grid: Grid, fiber: Fiber, d: usize, blocks: BTreeMap<Chain, CMatrix>) -> Result<Self> {
        for (c, b) in &blocks {
            let n = d * pow(fiber.dim(), c.len());
            if b.shape() != (n, n) {
                return Err(Error::DimensionMismatch(format!(
                    "block on a {}-point chain must be {n}x{n}",
                    c.len()
                )));
            }
        }
        Ok(Self {
            grid,
            fiber,
            system_dim: d,
            kind: Kind::Explicit { blocks },
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn fiber(&self) -> Fiber {
        self.fiber
    }

    pub fn system_dim(&self) -> usize {
        self.system_dim
    }

    /// Restricts a chronological product to the index window; explicit operators are returned unchanged.
    pub fn restricted(&self, window: Range<usize>) -> Self {
        let mut out = self.clone();
        if let Kind::Chronological { window: w, .. } = &mut out.kind {
            *w = w.start.max(window.start)..w.end.min(window.end);
        }
        out
    }

    /// Restricts to grid times `[r, t)`.
    pub fn window(&self, r: f64, t: f64) -> Result<Self> {
        Ok(self.restricted(self.grid.window(r, t)?))
    }

    /// Per-point factors (system-major), if chronological.
    pub fn factors(&self) -> Option<&[CMatrix]> {
        match &self.kind {
            Kind::Chronological { factors, .. } => Some(factors.as_slice()),
            Kind::Explicit { .. } => None,
        }
    }

    pub fn active_window(&self) -> Option<Range<usize>> {
        match &self.kind {
            Kind::Chronological { window, .. } => Some(window.clone()),
            Kind::Explicit { .. } => None,
        }
    }

    /// The block `X(ϑ)`.
    pub fn block(&self, chain: &Chain) -> CMatrix {
        let d = self.system_dim;
        let f = self.fiber.dim();
        match &self.kind {
            Kind::Chronological { factors, window } => {
                chronological_matrix(factors, chain, window.clone(), d, f)
            }
            Kind::Explicit { blocks } => blocks
                .get(chain)
                .cloned()
                .unwrap_or_else(|| identity(d * pow(f, chain.len()))),
        }
    }

    /// `X(ϑ) · cols` without forming the block.
    pub fn block_times(&self, chain: &Chain, cols: &CMatrix) -> CMatrix {
        self.block_action(chain, cols, false)
    }

    /// `X(ϑ)† · cols` without forming the block.
    pub fn adjoint_block_times(&self, chain: &Chain, cols: &CMatrix) -> CMatrix {
        self.block_action(chain, cols, true)
    }

    fn block_action(&self, chain: &Chain, cols: &CMatrix, adjoint: bool) -> CMatrix {
        let d = self.system_dim;
        let f = self.fiber.dim();
        let k = chain.len();
        match &self.kind {
            Kind::Chronological { factors, window } => {
                let mut seq: Vec<(usize, CMatrix)> = chain
                    .points()
                    .iter()
                    .enumerate()
                    .filter(|(_, j)| window.contains(j))
                    .map(|(pos, &j)| (pos, if adjoint { factors[j].adjoint() } else { factors[j].clone() }))
                    .collect();
                if adjoint {
                    seq.reverse();
                }
                let mut out = cols.clone();
                for c in 0..cols.ncols() {
                    let mut v: CVector = cols.column(c).into_owned();
                    for (pos, op) in &seq {
                        v = tensor::apply_local(&v, op, d, f, k, *pos);
                    }
                    out.set_column(c, &v);
                }
                out
            }
            Kind::Explicit { .. } => {
                let b = self.block(chain);
                if adjoint {
                    b.adjoint() * cols
                } else {
                    b * cols
                }
            }
        }
    }

    pub fn apply(&self, psi: &ChainVector) -> Result<ChainVector> {
        if psi.fiber() != self.fiber || psi.system_dim() != self.system_dim || psi.grid() != &self.grid {
            return Err(Error::FiberMismatch(format!(
                "operator on {:?}/d={} applied to a vector on {:?}/d={}",
                self.fiber,
                self.system_dim,
                psi.fiber(),
                psi.system_dim()
            )));
        }
        let d = self.system_dim;
        let f = self.fiber.dim();
        Ok(match &self.kind {
            Kind::Chronological { factors, window } => psi.map_values(|c, v| {
                let mut v = v.clone();
                for (pos, &j) in c.points().iter().enumerate() {
                    if window.contains(&j) {
                        v = tensor::apply_local(&v, &factors[j], d, f, c.len(), pos);
                    }
                }
                v
            }),
            Kind::Explicit { blocks } => psi.map_values(|c, v| match blocks.get(c) {
                Some(b) => b * v,
                None => v.clone(),
            }),
        })
    }

    /// Pointwise `X(ϑ)★Y(ϑ)` on every chain up to `n_max`, as an explicit operator.
    pub fn star_product(&self, other: &Self, n_max: usize) -> Result<Self> {
        let Fiber::Minkowski(n) = self.fiber else {
            return Err(Error::FiberMismatch("the ★ product needs a Minkowski fiber".into()));
        };
        if other.fiber != self.fiber || other.system_dim != self.system_dim {
            return Err(Error::FiberMismatch("operands act on different spaces".into()));
        }
        let d = self.system_dim;
        let mut blocks = BTreeMap::new();
        for c in enumerate_chains(&self.grid, n_max)? {
            let x = chain_pseudo_adjoint(&self.block(&c), d, n, c.len());
            blocks.insert(c.clone(), x * other.block(&c));
        }
        Self::explicit(self.grid, self.fiber, d, blocks)
    }

    /// Largest violation of per-point upper-triangularity over the chains up to `n_max`.
    pub fn upper_residual(&self, n_max: usize) -> Result<f64> {
        let Fiber::Minkowski(n) = self.fiber else {
            return Err(Error::FiberMismatch("triangularity needs a Minkowski fiber".into()));
        };
        let d = self.system_dim;
        match &self.kind {
            Kind::Chronological { factors, window } => Ok(factors[window.clone()]
                .iter()
                .map(|f| chain_upper_residual(f, d, n, 1))
                .fold(0.0, f64::max)),
            Kind::Explicit { blocks } => Ok(blocks
                .iter()
                .filter(|(c, _)| c.len() <= n_max)
                .map(|(c, b)| chain_upper_residual(b, d, n, c.len()))
                .fold(0.0, f64::max)),
        }
    }
}

/// `ε(X) = F X F★` as a matrix on the truncated noise space.
pub fn epsilon_morphism(x: &BlockDiagOperator, basis: &Arc<FockBasis>, tol: f64) -> Result<FockOperator> {
    let Fiber::Minkowski(n) = x.fiber() else {
        return Err(Error::FiberMismatch("ε needs a Minkowski-fiber operator".into()));
    };
    if basis.fiber() != Fiber::Hilbert(n) || basis.system_dim() != x.system_dim() {
        return Err(Error::FiberMismatch(format!(
            "basis over {:?} does not match the noise fiber of dimension {n}",
            basis.fiber()
        )));
    }
    let residual = x.upper_residual(basis.n_max())?;
    if residual > tol {
        return Err(Error::NotUpperTriangular { residual });
    }
    basis.matrix_of(|v| project(&x.apply(&embed(v)?)?))
}

/// The per-point Weyl generator `Z_g = [[1, −g†, −½|g|²], [0, I, g], [0, 0, 1]] ⊗ I_d`.
pub fn weyl_factor(g: &CVector, d: usize) -> BlockOperator {
    let n = g.len();
    let mut op = BlockOperator::identity(n, d);
    let id = identity(d);
    op.set_block(0, n + 1, &(&id * real(-0.5 * g.norm_squared())))
        .expect("in range");
    for i in 0..n {
        op.set_block(0, i + 1, &(&id * -g[i].conj())).expect("in range");
        op.set_block(i + 1, n + 1, &(&id * g[i])).expect("in range");
    }
    op
}

/// `Z_g^⊗` over the grid.
pub fn weyl_operator<F>(grid: Grid, g: F, d: usize) -> Result<BlockDiagOperator>
where
    F: Fn(usize) -> CVector,
{
    let factors = (0..grid.len()).map(|j| weyl_factor(&g(j), d)).collect();
    BlockDiagOperator::chronological(grid, factors)
}

/// `W_g χ = F Z_g^⊗ F★ χ`.
pub fn weyl_transform<F>(chi: &ChainVector, g: F) -> Result<ChainVector>
where
    F: Fn(usize) -> CVector,
{
    let z = weyl_operator(*chi.grid(), g, chi.system_dim())?;
    project(&z.apply(&embed(chi)?)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::coherent_vector;
    use crate::linalg::{c, random, sigma_x, sigma_z, C64, I, ONE};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn upper_random(rng: &mut ChaCha8Rng, n: usize, d: usize) -> BlockOperator {
        let mut op = BlockOperator::identity(n, d);
        for a in 0..n + 2 {
            for b in a..n + 2 {
                if (a, b) == (0, 0) || (a, b) == (n + 1, n + 1) {
                    continue;
                }
                op.set_block(a, b, &(random::matrix(rng, d, d) * real(0.5))).unwrap();
            }
        }
        op
    }

    #[test]
    fn layout_roundtrip() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let g = upper_random(&mut rng, 2, 3);
        let back = external_major(&system_major(&g), 2, 3).unwrap();
        assert_eq!(back, g);
    }

    #[test]
    fn chronological_order_is_later_left() {
        let grid = Grid::new(1.0, 2).unwrap();
        let gen = |h: &CMatrix| {
            let mut op = BlockOperator::identity(0, 2);
            op.set_block(0, 1, &(h * -I)).unwrap();
            op
        };
        let x = BlockDiagOperator::chronological(grid, vec![gen(&sigma_x()), gen(&sigma_z())]).unwrap();
        let chain = Chain::new(vec![0, 1]).unwrap();
        let got = x.block(&chain);
        let g0 = tensor::lift_local(&system_major(&gen(&sigma_x())), 2, 2, 2, 0);
        let g1 = tensor::lift_local(&system_major(&gen(&sigma_z())), 2, 2, 2, 1);
        assert!((got - &g1 * &g0).norm() < 1e-14);
        let wrong = g0 * g1;
        assert!((x.block(&chain) - wrong).norm() > 1e-3);
        assert_eq!(x.block(&Chain::empty()), identity(2));
        assert_eq!(x.restricted(1..2).block(&Chain::singleton(0)), identity(4));
    }

    #[test]
    fn chain_pseudo_adjoint_matches_blockwise_for_one_point() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let g = upper_random(&mut rng, 1, 2);
        let via_chain = chain_pseudo_adjoint(&system_major(&g), 2, 1, 1);
        assert!((via_chain - system_major(&g.pseudo_adjoint())).norm() < 1e-15);
    }

    #[test]
    fn epsilon_of_identity_is_identity() {
        let grid = Grid::new(1.0, 4).unwrap();
        let basis = FockBasis::new(grid, 2, Fiber::Hilbert(1), 2).unwrap();
        let x = BlockDiagOperator::uniform(grid, &BlockOperator::identity(1, 2)).unwrap();
        let e = epsilon_morphism(&x, &basis, 1e-12).unwrap();
        assert_eq!(e.matrix(), &identity(basis.dim()));
    }

    #[test]
    fn epsilon_rejects_lower_blocks() {
        let grid = Grid::new(1.0, 3).unwrap();
        let basis = FockBasis::new(grid, 2, Fiber::Hilbert(1), 1).unwrap();
        let mut g = BlockOperator::identity(1, 1);
        g.set_block(2, 0, &CMatrix::from_element(1, 1, ONE)).unwrap();
        let x = BlockDiagOperator::uniform(grid, &g).unwrap();
        assert!(matches!(
            epsilon_morphism(&x, &basis, 1e-12),
            Err(Error::NotUpperTriangular { .. })
        ));
    }

    #[test]
    fn epsilon_on_one_point_and_its_coincidence_defect() {
        // One cell of width h, per-point factor [[1, b, c], [0, e, f], [0, 0, 1]].
        // On {∅, {0}}: ε(X) = [[1 + hc, hb], [f, e]]. The product ε(X)*ε(Y) also
        // passes through annihilate-then-create at the same cell, which a chain cannot hold.
        let h = 0.25;
        let grid = Grid::new(h, 1).unwrap();
        let basis = FockBasis::new(grid, 1, Fiber::Hilbert(1), 1).unwrap();
        let factor = |b: C64, cc: C64, e: C64, f: C64| {
            let mut g = BlockOperator::identity(1, 1);
            for (a, col, v) in [(0, 1, b), (0, 2, cc), (1, 1, e), (1, 2, f)] {
                g.set_block(a, col, &CMatrix::from_element(1, 1, v)).unwrap();
            }
            BlockDiagOperator::uniform(grid, &g).unwrap()
        };
        let (b, cc, e, f) = (c(0.3, 0.1), c(-0.2, 0.5), c(0.9, -0.1), c(0.4, 0.2));
        let (b2, c2, e2, f2) = (c(-0.1, 0.6), c(0.7, 0.0), c(1.1, 0.3), c(0.2, -0.4));
        let x = factor(b, cc, e, f);
        let y = factor(b2, c2, e2, f2);
        let ex = epsilon_morphism(&x, &basis, 1e-12).unwrap();
        let expected = CMatrix::from_row_slice(2, 2, &[ONE + cc * h, b * h, f, e]);
        assert!((ex.matrix() - &expected).norm() < 1e-15);

        let lhs = epsilon_morphism(&x.star_product(&y, 1).unwrap(), &basis, 1e-12).unwrap();
        let rhs = ex.adjoint().compose(&epsilon_morphism(&y, &basis, 1e-12).unwrap()).unwrap();
        let defect = rhs.matrix() - lhs.matrix();
        let (bs, cs) = (b.conj(), cc.conj());
        let frozen = CMatrix::from_row_slice(
            2,
            2,
            &[cs * c2 * (h * h), cs * b2 * (h * h), bs * c2 * h, bs * b2 * h],
        );
        assert!((defect - frozen).norm() < 1e-15);
    }

    #[test]
    fn weyl_generator_is_pseudo_unitary() {
        let g = CVector::from_vec(vec![c(0.3, -0.2), c(0.1, 0.4)]);
        let z = weyl_factor(&g, 2);
        assert!(z.pseudo_unitarity(1e-12).residual < 1e-15);
        let zero = weyl_factor(&CVector::zeros(2), 1);
        assert_eq!(zero, BlockOperator::identity(2, 1));
    }

    #[test]
    fn weyl_of_vacuum_is_coherent() {
        // On the grid, W_g δ_∅(σ) = g^⊗(σ) Σ_{|τ| ≤ n_max − |σ|, τ ∩ σ = ∅} (−h|g|²/2)^|τ|.
        // The cell product replaces e^{−‖g‖²/2}, an O(h) discrepancy.
        let x: f64 = 0.3;
        let n_max = 6;
        let one = CVector::from_element(1, ONE);
        let amp = x.sqrt();
        let g = |_: usize| CVector::from_element(1, real(amp));
        let binom = |n: usize, k: usize| (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64);
        let mut errs = Vec::new();
        for n in [8, 20] {
            let grid = Grid::new(1.0, n).unwrap();
            let vac = ChainVector::vacuum(grid, n_max, Fiber::Hilbert(1), &one);
            let w = weyl_transform(&vac, g).unwrap();
            let a = 0.5 * grid.h() * x;
            for (chain, v) in w.iter() {
                let k = chain.len();
                let s: f64 = (0..=n_max - k).map(|m| binom(n - k, m) * (-a).powi(m as i32)).sum();
                assert!((v[0] - real(amp.powi(k as i32) * s)).norm() < 1e-12);
            }
            let coh = coherent_vector(grid, n_max, Fiber::Hilbert(1), &one, g).unwrap();
            errs.push(w.distance(&coh).unwrap());
        }
        assert!(errs[1] < errs[0] / 2.0, "{errs:?}");
    }
}
