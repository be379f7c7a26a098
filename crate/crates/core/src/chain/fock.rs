//! Dense matrices on a truncated chain space.
//!
//! Coefficient vectors concatenate chain values in lexicographic chain order.
//! The Hilbert inner product carries the weight `h^|σ|` per chain, so the
//! adjoint of a matrix `M` is `W⁻¹ M† W` with `W = diag(h^|σ|)`.

use std::collections::HashMap;
use std::sync::Arc;

use rayon::prelude::*;

use super::vector::{ChainVector, Fiber};
use super::{enumerate_chains, Chain, Grid};
use crate::error::{Error, Result};
use crate::linalg::{real, CMatrix, CVector, ONE};

#[derive(Debug, PartialEq)]
pub struct FockBasis {
    grid: Grid,
    n_max: usize,
    fiber: Fiber,
    system_dim: usize,
    chains: Vec<Chain>,
    offsets: Vec<usize>,
    lookup: HashMap<Chain, usize>,
    dim: usize,
}

impl FockBasis {
    pub fn new(grid: Grid, n_max: usize, fiber: Fiber, system_dim: usize) -> Result<Arc<Self>> {
        let chains = enumerate_chains(&grid, n_max)?;
        let f = fiber.dim();
        let mut offsets = Vec::with_capacity(chains.len());
        let mut lookup = HashMap::with_capacity(chains.len());
        let mut dim = 0;
        for (i, c) in chains.iter().enumerate() {
            offsets.push(dim);
            lookup.insert(c.clone(), i);
            dim += system_dim * f.pow(c.len() as u32);
        }
        Ok(Arc::new(Self {
            grid,
            n_max,
            fiber,
            system_dim,
            chains,
            offsets,
            lookup,
            dim,
        }))
    }

    pub fn dim(&self) -> usize {
        self.dim
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

    pub fn chains(&self) -> &[Chain] {
        &self.chains
    }

    /// Chain weight `h^|σ|` for every coefficient.
    pub fn weights(&self) -> Vec<f64> {
        let h = self.grid.h();
        let mut w = Vec::with_capacity(self.dim);
        for (i, c) in self.chains.iter().enumerate() {
            let end = self.offsets.get(i + 1).copied().unwrap_or(self.dim);
            let x = h.powi(c.len() as i32);
            w.extend(std::iter::repeat_n(x, end - self.offsets[i]));
        }
        w
    }

    fn check(&self, v: &ChainVector) -> Result<()> {
        if v.grid() != &self.grid || v.fiber() != self.fiber || v.system_dim() != self.system_dim {
            return Err(Error::FiberMismatch(format!(
                "vector over {:?}/d={} does not match basis over {:?}/d={}",
                v.fiber(),
                v.system_dim(),
                self.fiber,
                self.system_dim
            )));
        }
        Ok(())
    }

    /// Coefficients of `v`; chains beyond the truncation are ignored.
    pub fn to_coefficients(&self, v: &ChainVector) -> Result<CVector> {
        self.check(v)?;
        let mut out = CVector::zeros(self.dim);
        for (c, val) in v.iter() {
            if let Some(&i) = self.lookup.get(c) {
                out.rows_mut(self.offsets[i], val.len()).copy_from(val);
            }
        }
        Ok(out)
    }

    pub fn from_coefficients(&self, coeffs: &CVector) -> Result<ChainVector> {
        if coeffs.len() != self.dim {
            return Err(Error::DimensionMismatch(format!(
                "expected {} coefficients, got {}",
                self.dim,
                coeffs.len()
            )));
        }
        let mut v = ChainVector::zero(self.grid, self.n_max, self.fiber, self.system_dim);
        for (i, c) in self.chains.iter().enumerate() {
            let end = self.offsets.get(i + 1).copied().unwrap_or(self.dim);
            let val = coeffs.rows(self.offsets[i], end - self.offsets[i]).into_owned();
            if val.iter().any(|z| z.norm() != 0.0) {
                v.set(c.clone(), val)?;
            }
        }
        Ok(v)
    }

    /// Matrix of a linear map given by its action on chain vectors, built column by column.
    pub fn matrix_of<F>(self: &Arc<Self>, f: F) -> Result<FockOperator>
    where
        F: Fn(&ChainVector) -> Result<ChainVector> + Sync,
    {
        let cols: Vec<Result<CVector>> = (0..self.dim)
            .into_par_iter()
            .map(|j| {
                let mut e = CVector::zeros(self.dim);
                e[j] = ONE;
                let v = self.from_coefficients(&e)?;
                self.to_coefficients(&f(&v)?)
            })
            .collect();
        let mut m = CMatrix::zeros(self.dim, self.dim);
        for (j, col) in cols.into_iter().enumerate() {
            m.set_column(j, &col?);
        }
        Ok(FockOperator {
            basis: Arc::clone(self),
            matrix: m,
        })
    }
}

/// A dense operator on a truncated chain space.
#[derive(Clone, Debug)]
pub struct FockOperator {
    basis: Arc<FockBasis>,
    matrix: CMatrix,
}

impl FockOperator {
    pub fn new(basis: Arc<FockBasis>, matrix: CMatrix) -> Result<Self> {
        if matrix.nrows() != basis.dim || matrix.ncols() != basis.dim {
            return Err(Error::DimensionMismatch(format!(
                "operator must be {0}x{0}",
                basis.dim
            )));
        }
        Ok(Self { basis, matrix })
    }

    pub fn identity(basis: Arc<FockBasis>) -> Self {
        let n = basis.dim;
        Self {
            basis,
            matrix: CMatrix::identity(n, n),
        }
    }

    pub fn basis(&self) -> &Arc<FockBasis> {
        &self.basis
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    fn same_basis(&self, other: &Self) -> Result<()> {
        if !Arc::ptr_eq(&self.basis, &other.basis) && self.basis != other.basis {
            return Err(Error::DimensionMismatch(
                "operators live on different truncated spaces".into(),
            ));
        }
        Ok(())
    }

    /// Hilbert adjoint with respect to the chain weights.
    pub fn adjoint(&self) -> Self {
        let w = self.basis.weights();
        let mut m = self.matrix.adjoint();
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                m[(r, c)] *= real(w[c] / w[r]);
            }
        }
        Self {
            basis: Arc::clone(&self.basis),
            matrix: m,
        }
    }

    pub fn compose(&self, other: &Self) -> Result<Self> {
        self.same_basis(other)?;
        Ok(Self {
            basis: Arc::clone(&self.basis),
            matrix: &self.matrix * &other.matrix,
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.same_basis(other)?;
        Ok(Self {
            basis: Arc::clone(&self.basis),
            matrix: &self.matrix + &other.matrix,
        })
    }

    pub fn scale(&self, c: crate::linalg::C64) -> Self {
        Self {
            basis: Arc::clone(&self.basis),
            matrix: &self.matrix * c,
        }
    }

    pub fn apply(&self, v: &ChainVector) -> Result<ChainVector> {
        let c = self.basis.to_coefficients(v)?;
        self.basis.from_coefficients(&(&self.matrix * c))
    }

    /// Hilbert-Schmidt norm in the weighted inner product.
    pub fn hs_norm(&self) -> f64 {
        let w = self.basis.weights();
        let mut acc = 0.0;
        for r in 0..self.matrix.nrows() {
            for c in 0..self.matrix.ncols() {
                acc += self.matrix[(r, c)].norm_sqr() * w[r] / w[c];
            }
        }
        acc.sqrt()
    }

    pub fn distance(&self, other: &Self) -> Result<f64> {
        self.same_basis(other)?;
        Ok(Self {
            basis: Arc::clone(&self.basis),
            matrix: &self.matrix - &other.matrix,
        }
        .hs_norm())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::random;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn coefficient_roundtrip_and_weighted_adjoint() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let g = Grid::new(1.0, 4).unwrap();
        let basis = FockBasis::new(g, 2, Fiber::Hilbert(2), 1).unwrap();
        assert_eq!(basis.dim(), 1 + 4 * 2 + 6 * 4);
        let x = random::vector(&mut rng, basis.dim());
        let v = basis.from_coefficients(&x).unwrap();
        assert!((basis.to_coefficients(&v).unwrap() - &x).norm() < 1e-15);

        let a = FockOperator::new(Arc::clone(&basis), random::matrix(&mut rng, basis.dim(), basis.dim())).unwrap();
        let y = basis.from_coefficients(&random::vector(&mut rng, basis.dim())).unwrap();
        let lhs = v.inner(&a.apply(&y).unwrap()).unwrap();
        let rhs = a.adjoint().apply(&v).unwrap().inner(&y).unwrap();
        assert!((lhs - rhs).norm() < 1e-12 * (1.0 + lhs.norm()));
    }
}
