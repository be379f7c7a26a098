//! Operators with an external Minkowski block structure.
//!
//! External indices are ordered `(−, •1, …, •n, +)`. A [`BlockOperator`] stores
//! the full `(n+2)d × (n+2)d` matrix with the external index major, so the
//! system block `(a, b)` occupies rows `a·d..(a+1)·d` and columns `b·d..(b+1)·d`.

use std::ops::Mul;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{identity, real, CMatrix, CVector, SystemOperator, ONE, ZERO};

/// Default tolerance for exact algebraic identities (Frobenius norm).
pub const DEFAULT_TOL: f64 = 1e-12;

/// The antidiagonal metric η on the external index space.
#[derive(Clone, Debug, PartialEq)]
pub struct MinkowskiMetric {
    noise_dim: usize,
}

impl MinkowskiMetric {
    pub fn new(noise_dim: usize) -> Self {
        Self { noise_dim }
    }

    pub fn noise_dim(&self) -> usize {
        self.noise_dim
    }

    pub fn size(&self) -> usize {
        self.noise_dim + 2
    }

    /// External index paired with `a` by the metric: swaps `−` and `+`.
    #[inline]
    pub fn partner(&self, a: usize) -> usize {
        flip(a, self.noise_dim)
    }

    pub fn matrix(&self) -> DMatrix<f64> {
        let m = self.size();
        DMatrix::from_fn(m, m, |r, c| if c == flip(r, self.noise_dim) { 1.0 } else { 0.0 })
    }

    /// η ⊗ I_d.
    pub fn lifted(&self, d: usize) -> CMatrix {
        let m = self.size();
        let mut out = CMatrix::zeros(m * d, m * d);
        for a in 0..m {
            let b = flip(a, self.noise_dim);
            for s in 0..d {
                out[(a * d + s, b * d + s)] = ONE;
            }
        }
        out
    }

    /// Orthogonal change of basis `W` with `Wᵀ η W = diag(1, I_n, −1)`.
    ///
    /// This is the diagonal, time-like frame of the metric. Nothing else in the
    /// crate works in this frame; it is exposed for users that want to compare
    /// with the diagonal convention.
    pub fn diagonalizing_frame(&self) -> DMatrix<f64> {
        let m = self.size();
        let last = m - 1;
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let mut w = DMatrix::zeros(m, m);
        w[(0, 0)] = s;
        w[(last, 0)] = s;
        w[(0, last)] = s;
        w[(last, last)] = -s;
        for k in 1..last {
            w[(k, k)] = 1.0;
        }
        w
    }

    pub fn pseudo_adjoint(&self, x: &BlockOperator) -> Result<BlockOperator> {
        if x.noise_dim != self.noise_dim {
            return Err(Error::DimensionMismatch(format!(
                "metric has noise dimension {}, operator has {}",
                self.noise_dim, x.noise_dim
            )));
        }
        Ok(x.pseudo_adjoint())
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

/// A square operator on `(ℂ^{n+2}) ⊗ 𝔥` seen as an `(n+2)×(n+2)` array of system blocks.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockOperator {
    noise_dim: usize,
    system_dim: usize,
    matrix: CMatrix,
}

impl BlockOperator {
    pub fn new(noise_dim: usize, system_dim: usize, matrix: CMatrix) -> Result<Self> {
        let size = (noise_dim + 2) * system_dim;
        if system_dim == 0 || matrix.nrows() != size || matrix.ncols() != size {
            return Err(Error::DimensionMismatch(format!(
                "expected a {size}x{size} matrix for n={noise_dim}, d={system_dim}, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        Ok(Self {
            noise_dim,
            system_dim,
            matrix,
        })
    }

    pub fn identity(noise_dim: usize, system_dim: usize) -> Self {
        let size = (noise_dim + 2) * system_dim;
        Self {
            noise_dim,
            system_dim,
            matrix: identity(size),
        }
    }

    pub fn zeros(noise_dim: usize, system_dim: usize) -> Self {
        let size = (noise_dim + 2) * system_dim;
        Self {
            noise_dim,
            system_dim,
            matrix: CMatrix::zeros(size, size),
        }
    }

    /// Builds an operator from a row-major `(n+2)×(n+2)` array of `d×d` blocks.
    pub fn from_blocks(blocks: &[Vec<SystemOperator>]) -> Result<Self> {
        let m = blocks.len();
        if m < 2 {
            return Err(Error::DimensionMismatch(
                "a block operator needs at least the two corner indices".into(),
            ));
        }
        let d = blocks[0]
            .first()
            .map(|b| b.nrows())
            .ok_or_else(|| Error::DimensionMismatch("empty block row".into()))?;
        let mut out = Self::zeros(m - 2, d);
        for (a, row) in blocks.iter().enumerate() {
            if row.len() != m {
                return Err(Error::DimensionMismatch(format!(
                    "block row {a} has {} entries, expected {m}",
                    row.len()
                )));
            }
            for (b, blk) in row.iter().enumerate() {
                out.set_block(a, b, blk)?;
            }
        }
        Ok(out)
    }

    pub fn noise_dim(&self) -> usize {
        self.noise_dim
    }

    pub fn system_dim(&self) -> usize {
        self.system_dim
    }

    /// Number of external indices, `n + 2`.
    pub fn external_size(&self) -> usize {
        self.noise_dim + 2
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    /// Index of the `+` slot.
    pub fn plus(&self) -> usize {
        self.noise_dim + 1
    }

    pub fn block(&self, a: usize, b: usize) -> SystemOperator {
        let d = self.system_dim;
        self.matrix.view((a * d, b * d), (d, d)).into_owned()
    }

    pub fn set_block(&mut self, a: usize, b: usize, value: &SystemOperator) -> Result<()> {
        let d = self.system_dim;
        let m = self.external_size();
        if a >= m || b >= m {
            return Err(Error::DimensionMismatch(format!(
                "block index ({a}, {b}) out of range for {m} external indices"
            )));
        }
        if value.nrows() != d || value.ncols() != d {
            return Err(Error::DimensionMismatch(format!(
                "block must be {d}x{d}, got {}x{}",
                value.nrows(),
                value.ncols()
            )));
        }
        self.matrix.view_mut((a * d, b * d), (d, d)).copy_from(value);
        Ok(())
    }

    pub fn blocks(&self) -> Vec<Vec<SystemOperator>> {
        let m = self.external_size();
        (0..m)
            .map(|a| (0..m).map(|b| self.block(a, b)).collect())
            .collect()
    }

    /// η X† η, computed blockwise as `(X★)_{ab} = (X_{b'a'})†` with `'` the metric partner.
    pub fn pseudo_adjoint(&self) -> Self {
        let n = self.noise_dim;
        let d = self.system_dim;
        let m = n + 2;
        let mut out = CMatrix::zeros(m * d, m * d);
        for a in 0..m {
            for b in 0..m {
                let src = self
                    .matrix
                    .view((flip(b, n) * d, flip(a, n) * d), (d, d))
                    .adjoint();
                out.view_mut((a * d, b * d), (d, d)).copy_from(&src);
            }
        }
        Self {
            noise_dim: n,
            system_dim: d,
            matrix: out,
        }
    }

    pub fn try_mul(&self, rhs: &Self) -> Result<Self> {
        self.check_compatible(rhs)?;
        Ok(Self {
            noise_dim: self.noise_dim,
            system_dim: self.system_dim,
            matrix: &self.matrix * &rhs.matrix,
        })
    }

    pub fn try_add(&self, rhs: &Self) -> Result<Self> {
        self.check_compatible(rhs)?;
        Ok(Self {
            noise_dim: self.noise_dim,
            system_dim: self.system_dim,
            matrix: &self.matrix + &rhs.matrix,
        })
    }

    pub fn try_sub(&self, rhs: &Self) -> Result<Self> {
        self.check_compatible(rhs)?;
        Ok(Self {
            noise_dim: self.noise_dim,
            system_dim: self.system_dim,
            matrix: &self.matrix - &rhs.matrix,
        })
    }

    pub fn scale(&self, factor: crate::linalg::C64) -> Self {
        Self {
            noise_dim: self.noise_dim,
            system_dim: self.system_dim,
            matrix: &self.matrix * factor,
        }
    }

    fn check_compatible(&self, rhs: &Self) -> Result<()> {
        if self.noise_dim != rhs.noise_dim || self.system_dim != rhs.system_dim {
            return Err(Error::DimensionMismatch(format!(
                "(n={}, d={}) vs (n={}, d={})",
                self.noise_dim, self.system_dim, rhs.noise_dim, rhs.system_dim
            )));
        }
        Ok(())
    }

    pub fn distance(&self, other: &Self) -> f64 {
        (&self.matrix - &other.matrix).norm()
    }

    /// Frobenius norm of the first block column plus the last block row.
    ///
    /// Zero for increments (elements of the Itô algebra) only.
    pub fn increment_residual(&self) -> f64 {
        let d = self.system_dim;
        let size = self.matrix.nrows();
        let col = self.matrix.view((0, 0), (size, d)).norm_squared();
        let row = self.matrix.view((size - d, 0), (d, size)).norm_squared();
        let overlap = self.matrix.view((size - d, 0), (d, d)).norm_squared();
        (col + row - overlap).sqrt()
    }

    /// Frobenius norm of the strictly lower external blocks.
    pub fn lower_residual(&self) -> f64 {
        let m = self.external_size();
        let mut acc = 0.0;
        for a in 0..m {
            for b in 0..a {
                acc += self.block(a, b).norm_squared();
            }
        }
        acc.sqrt()
    }

    /// Checks `G★G = I` and reports the block residuals of the generator form
    /// `G = [[I, A, K], [0, B, L], [0, 0, I]]`.
    pub fn pseudo_unitarity(&self, tol: f64) -> PseudoUnitarity {
        let n = self.noise_dim;
        let d = self.system_dim;
        let plus = n + 1;
        let gram = &self.pseudo_adjoint().matrix * &self.matrix;
        let residual = (&gram - identity(gram.nrows())).norm();

        let k = self.block(0, plus);
        let mut noise_block = CMatrix::zeros(n * d, n * d);
        let mut ann = CMatrix::zeros(d, n * d);
        let mut cre = CMatrix::zeros(n * d, d);
        if n > 0 {
            noise_block.copy_from(&self.matrix.view((d, d), (n * d, n * d)));
            ann.copy_from(&self.matrix.view((0, d), (d, n * d)));
            cre.copy_from(&self.matrix.view((d, plus * d), (n * d, d)));
        }
        let noise_unitarity = (noise_block.adjoint() * &noise_block - identity(n * d)).norm();
        let damping = (k.adjoint() + cre.adjoint() * &cre + &k).norm();
        let cross = (ann.adjoint() + noise_block.adjoint() * &cre).norm();
        PseudoUnitarity {
            residual,
            noise_unitarity,
            damping,
            cross,
            holds: residual <= tol,
        }
    }

    pub fn is_pseudo_unitary(&self, tol: f64) -> bool {
        self.pseudo_unitarity(tol).holds
    }

    /// Sandwich `ξ★ X ξ`, i.e. the `(−, +)` block.
    pub fn temporal_sandwich(&self) -> SystemOperator {
        self.block(0, self.plus())
    }
}

impl Mul for &BlockOperator {
    type Output = BlockOperator;

    /// Panics on mismatched dimensions; use [`BlockOperator::try_mul`] for a checked product.
    fn mul(self, rhs: &BlockOperator) -> BlockOperator {
        self.try_mul(rhs).expect("block operator dimensions differ")
    }
}

impl Mul for BlockOperator {
    type Output = BlockOperator;

    fn mul(self, rhs: BlockOperator) -> BlockOperator {
        &self * &rhs
    }
}

/// Residuals of `G★G = I`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PseudoUnitarity {
    /// ‖G★G − I‖_F.
    pub residual: f64,
    /// ‖G••† G•• − I‖_F.
    pub noise_unitarity: f64,
    /// ‖K† + L†L + K‖_F.
    pub damping: f64,
    /// ‖(G^−_•)† + G••† L‖_F.
    pub cross: f64,
    pub holds: bool,
}

/// The null vector ξ: the unit column in the `+` slot.
#[derive(Clone, Debug, PartialEq)]
pub struct TemporalSpin {
    noise_dim: usize,
}

impl TemporalSpin {
    pub fn new(noise_dim: usize) -> Self {
        Self { noise_dim }
    }

    pub fn column(&self) -> CVector {
        let mut v = CVector::zeros(self.noise_dim + 2);
        v[self.noise_dim + 1] = ONE;
        v
    }

    /// ξ★ = ξ†η = (1, 0, …, 0).
    pub fn row_star(&self) -> CVector {
        let mut v = CVector::zeros(self.noise_dim + 2);
        v[0] = ONE;
        v
    }

    /// ξ ⊗ I_d as an `(n+2)d × d` matrix.
    pub fn lifted(&self, d: usize) -> CMatrix {
        let mut m = CMatrix::zeros((self.noise_dim + 2) * d, d);
        let off = (self.noise_dim + 1) * d;
        for s in 0..d {
            m[(off + s, s)] = ONE;
        }
        m
    }

    /// ξ★ ⊗ I_d as a `d × (n+2)d` matrix.
    pub fn lifted_star(&self, d: usize) -> CMatrix {
        let mut m = CMatrix::zeros(d, (self.noise_dim + 2) * d);
        for s in 0..d {
            m[(s, s)] = ONE;
        }
        m
    }

    /// ξ★ξ, which vanishes.
    pub fn pseudo_norm(&self) -> f64 {
        self.row_star().dot(&self.column()).re
    }
}

/// The boost υ_ν = diag(1/√ν, I_n, √ν).
#[derive(Clone, Debug, PartialEq)]
pub struct LorentzBoost {
    nu: f64,
    noise_dim: usize,
}

impl LorentzBoost {
    pub fn new(nu: f64, noise_dim: usize) -> Result<Self> {
        if !(nu > 0.0) || !nu.is_finite() {
            return Err(Error::InvalidIntensity(nu));
        }
        Ok(Self { nu, noise_dim })
    }

    pub fn intensity(&self) -> f64 {
        self.nu
    }

    pub fn noise_dim(&self) -> usize {
        self.noise_dim
    }

    pub fn diagonal(&self) -> Vec<f64> {
        let mut v = vec![1.0; self.noise_dim + 2];
        v[0] = 1.0 / self.nu.sqrt();
        v[self.noise_dim + 1] = self.nu.sqrt();
        v
    }

    /// υ★ = η υ† η = diag(√ν, I_n, 1/√ν).
    pub fn star_diagonal(&self) -> Vec<f64> {
        let mut v = self.diagonal();
        v.reverse();
        let n = self.noise_dim;
        // the • block is the identity, so reversing only swaps the corners
        debug_assert!(v[1..=n].iter().all(|&x| x == 1.0));
        v
    }

    pub fn matrix(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&nalgebra::DVector::from_vec(self.diagonal()))
    }

    pub fn star_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&nalgebra::DVector::from_vec(self.star_diagonal()))
    }

    /// υ ⊗ I_d as a block operator.
    pub fn lifted(&self, d: usize) -> BlockOperator {
        diag_lift(&self.diagonal(), self.noise_dim, d)
    }

    pub fn lifted_star(&self, d: usize) -> BlockOperator {
        diag_lift(&self.star_diagonal(), self.noise_dim, d)
    }

    /// υ★ X υ, computed by scaling block `(a, b)` with `υ★_aa υ_bb`.
    pub fn conjugate(&self, x: &BlockOperator) -> Result<BlockOperator> {
        if x.noise_dim != self.noise_dim {
            return Err(Error::DimensionMismatch(format!(
                "boost has noise dimension {}, operator has {}",
                self.noise_dim, x.noise_dim
            )));
        }
        let d = x.system_dim;
        let m = x.external_size();
        // Both diagonals are powers of √ν, so each block factor is ν^{p/2} for p ∈ {−2, …, 2};
        // forming ν and 1/ν directly keeps υ★π(dt)υ = νπ(dt) exact.
        let power = |a: usize| -> i32 {
            if a == 0 {
                1
            } else if a == m - 1 {
                -1
            } else {
                0
            }
        };
        let root = self.nu.sqrt();
        let factor = |p: i32| match p {
            0 => 1.0,
            1 => root,
            -1 => 1.0 / root,
            2 => self.nu,
            _ => 1.0 / self.nu,
        };
        let mut out = x.clone();
        for a in 0..m {
            for b in 0..m {
                let f = real(factor(power(a) - power(b)));
                out.matrix
                    .view_mut((a * d, b * d), (d, d))
                    .iter_mut()
                    .for_each(|z| *z *= f);
            }
        }
        Ok(out)
    }

    pub fn compose(&self, other: &Self) -> Result<Self> {
        if self.noise_dim != other.noise_dim {
            return Err(Error::DimensionMismatch(
                "boosts act on different noise dimensions".into(),
            ));
        }
        Self::new(self.nu * other.nu, self.noise_dim)
    }
}

fn diag_lift(diag: &[f64], noise_dim: usize, d: usize) -> BlockOperator {
    let mut op = BlockOperator::zeros(noise_dim, d);
    for (a, &x) in diag.iter().enumerate() {
        for s in 0..d {
            op.matrix[(a * d + s, a * d + s)] = real(x);
        }
    }
    op
}

/// Pseudo-norm `f★f = f†ηf` of a column on the Minkowski fiber.
pub fn pseudo_norm(f: &CVector) -> f64 {
    let m = f.len();
    let n = m - 2;
    let mut acc = ZERO;
    for a in 0..m {
        acc += f[a].conj() * f[flip(a, n)];
    }
    acc.re
}

/// Conditional positivity `Re(f₋ f₊*) ≥ 0` of a Minkowski column.
pub fn is_conditionally_positive(f: &CVector) -> bool {
    let last = f.len() - 1;
    (f[0] * f[last].conj()).re >= 0.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{random, sigma_minus, sigma_z, I};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_block(rng: &mut ChaCha8Rng, n: usize, d: usize) -> BlockOperator {
        let m = (n + 2) * d;
        BlockOperator::new(n, d, random::matrix(rng, m, m)).unwrap()
    }

    #[test]
    fn metric_is_an_involutive_symmetric_matrix() {
        for n in 0..4 {
            let eta = MinkowskiMetric::new(n).matrix();
            assert_eq!(&eta * &eta, DMatrix::identity(n + 2, n + 2));
            assert_eq!(eta.transpose(), eta);
        }
        let eta0 = MinkowskiMetric::new(0).matrix();
        assert_eq!(eta0, DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]));
    }

    #[test]
    fn diagonal_frame_diagonalizes_metric() {
        let g = MinkowskiMetric::new(2);
        let w = g.diagonalizing_frame();
        let diag = w.transpose() * g.matrix() * &w;
        let expect = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 1.0, 1.0, -1.0]));
        assert!((diag - expect).norm() < 1e-15);
    }

    #[test]
    fn pseudo_adjoint_matches_metric_conjugation() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = random_block(&mut rng, 2, 2);
        let eta = MinkowskiMetric::new(2).lifted(2);
        let direct = &eta * x.matrix().adjoint() * &eta;
        assert!((x.pseudo_adjoint().matrix() - direct).norm() < 1e-14);
        assert_eq!(x.pseudo_adjoint().pseudo_adjoint(), x);
    }

    #[test]
    fn metric_and_dt_are_self_adjoint() {
        let eta = BlockOperator::new(1, 1, MinkowskiMetric::new(1).lifted(1)).unwrap();
        assert_eq!(eta.pseudo_adjoint(), eta);
        let mut dt = BlockOperator::zeros(0, 1);
        dt.set_block(0, 1, &identity(1)).unwrap();
        assert_eq!(dt.pseudo_adjoint(), dt);
    }

    #[test]
    fn temporal_spin_is_null() {
        let xi = TemporalSpin::new(3);
        assert_eq!(xi.pseudo_norm(), 0.0);
        assert_eq!(pseudo_norm(&xi.column()), 0.0);
        let mut dt = BlockOperator::zeros(3, 1);
        dt.set_block(0, 4, &identity(1)).unwrap();
        let l = xi.lifted_star(1) * dt.matrix() * xi.lifted(1);
        assert_eq!(l[(0, 0)], ONE);
    }

    #[test]
    fn boost_scales_blocks() {
        let nu = 3.0;
        let boost = LorentzBoost::new(nu, 1).unwrap();
        let ones = BlockOperator::new(1, 1, CMatrix::from_element(3, 3, ONE)).unwrap();
        let b = boost.conjugate(&ones).unwrap();
        assert!((b.block(0, 2)[(0, 0)].re - nu).abs() < 1e-15);
        assert!((b.block(0, 1)[(0, 0)].re - nu.sqrt()).abs() < 1e-15);
        assert!((b.block(1, 2)[(0, 0)].re - nu.sqrt()).abs() < 1e-15);
        assert!((b.block(1, 1)[(0, 0)].re - 1.0).abs() < 1e-15);
        assert!((b.block(0, 0)[(0, 0)].re - 1.0).abs() < 1e-15);

        let direct = boost.lifted_star(1) * ones.clone() * boost.lifted(1);
        assert!(direct.distance(&b) < 1e-14);
        let star = boost.lifted(1).pseudo_adjoint();
        assert!(star.distance(&boost.lifted_star(1)) < 1e-15);
        assert!((&star * &boost.lifted(1)).distance(&BlockOperator::identity(1, 1)) < 1e-15);
        assert!(LorentzBoost::new(0.0, 1).is_err());
        assert!(LorentzBoost::new(-1.0, 1).is_err());
    }

    #[test]
    fn damping_free_mutant_reports_lindblad_residual() {
        let l = sigma_minus();
        let h = sigma_z();
        let k = -(&h * I);
        let g = BlockOperator::from_blocks(&[
            vec![identity(2), -l.adjoint(), k],
            vec![zeros2(), identity(2), l.clone()],
            vec![zeros2(), zeros2(), identity(2)],
        ])
        .unwrap();
        let report = g.pseudo_unitarity(1e-12);
        assert!(!report.holds);
        let expect = (l.adjoint() * &l).norm();
        assert!((report.residual - expect).abs() < 1e-14);
        assert!((report.damping - expect).abs() < 1e-14);
        assert!(report.cross < 1e-15 && report.noise_unitarity < 1e-15);
    }

    fn zeros2() -> CMatrix {
        CMatrix::zeros(2, 2)
    }

    #[test]
    fn conditional_positivity_bounds_pseudo_norm() {
        let f = CVector::from_vec(vec![ONE, crate::linalg::c(0.0, 2.0), real(0.5)]);
        assert!(is_conditionally_positive(&f));
        assert!(pseudo_norm(&f) >= 0.0);
        let g = CVector::from_vec(vec![ONE, ZERO, real(-0.5)]);
        assert!(!is_conditionally_positive(&g));
        assert!(pseudo_norm(&g) < 0.0);
    }
}
