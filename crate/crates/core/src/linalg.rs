//! Small dense complex linear algebra used across the crate.
//!
//! Everything here works on `nalgebra` dynamic matrices of `Complex64`.
//! Dimensions are expected to stay small (a handful of qubits at most).

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// A d×d operator on the system Hilbert space.
pub type SystemOperator = CMatrix;

pub const I: C64 = C64::new(0.0, 1.0);
pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[inline]
pub fn real(re: f64) -> C64 {
    C64::new(re, 0.0)
}

pub fn identity(d: usize) -> CMatrix {
    CMatrix::identity(d, d)
}

pub fn zeros(rows: usize, cols: usize) -> CMatrix {
    CMatrix::zeros(rows, cols)
}

pub fn sigma_x() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO])
}

pub fn sigma_y() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[ZERO, -I, I, ZERO])
}

pub fn sigma_z() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE])
}

/// Lowering operator |0⟩⟨1|.
pub fn sigma_minus() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ZERO, ZERO])
}

/// Raising operator |1⟩⟨0|.
pub fn sigma_plus() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[ZERO, ZERO, ONE, ZERO])
}

/// Computational basis vector |k⟩ in dimension `d`.
pub fn basis(d: usize, k: usize) -> CVector {
    let mut v = CVector::zeros(d);
    v[k] = ONE;
    v
}

pub fn projector(v: &CVector) -> CMatrix {
    v * v.adjoint()
}

pub fn frobenius(m: &CMatrix) -> f64 {
    m.norm()
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

pub fn anticommutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b + b * a
}

pub fn hermiticity_residual(m: &CMatrix) -> f64 {
    (m - m.adjoint()).norm()
}

pub fn is_hermitian(m: &CMatrix, tol: f64) -> bool {
    m.is_square() && hermiticity_residual(m) <= tol
}

pub fn unitarity_residual(u: &CMatrix) -> f64 {
    let n = u.nrows();
    (u.adjoint() * u - identity(n)).norm()
}

pub fn require_hermitian(m: &CMatrix, tol: f64) -> Result<()> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "expected a square operator, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let residual = hermiticity_residual(m);
    if residual > tol {
        return Err(Error::NonHermitian { residual });
    }
    Ok(())
}

/// Eigendecomposition of a Hermitian matrix (eigenvalues ascending is not guaranteed).
pub fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let herm = (m + m.adjoint()) * real(0.5);
    let eig = SymmetricEigen::new(herm);
    (eig.eigenvalues.iter().copied().collect(), eig.eigenvectors)
}

/// Applies a real function to the spectrum of a Hermitian matrix.
pub fn hermitian_function(m: &CMatrix, f: impl Fn(f64) -> C64) -> CMatrix {
    let (vals, vecs) = hermitian_eigen(m);
    let diag = CMatrix::from_diagonal(&CVector::from_iterator(
        vals.len(),
        vals.iter().map(|&x| f(x)),
    ));
    &vecs * diag * vecs.adjoint()
}

/// exp(-iHt) for Hermitian H.
pub fn unitary_exp(h: &CMatrix, t: f64) -> CMatrix {
    hermitian_function(h, |x| C64::from_polar(1.0, -x * t))
}

/// Cached spectral propagator for repeated exp(-iHt) evaluations.
#[derive(Clone, Debug)]
pub struct SpectralPropagator {
    values: Vec<f64>,
    vectors: CMatrix,
    vectors_adj: CMatrix,
}

impl SpectralPropagator {
    pub fn new(h: &CMatrix) -> Self {
        let (values, vectors) = hermitian_eigen(h);
        let vectors_adj = vectors.adjoint();
        Self {
            values,
            vectors,
            vectors_adj,
        }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn at(&self, t: f64) -> CMatrix {
        let diag = CMatrix::from_diagonal(&CVector::from_iterator(
            self.values.len(),
            self.values.iter().map(|&x| C64::from_polar(1.0, -x * t)),
        ));
        &self.vectors * diag * &self.vectors_adj
    }

    pub fn apply(&self, t: f64, psi: &CVector) -> CVector {
        let mut coeffs = &self.vectors_adj * psi;
        for (k, x) in self.values.iter().enumerate() {
            coeffs[k] *= C64::from_polar(1.0, -x * t);
        }
        &self.vectors * coeffs
    }
}

/// Square root of a positive semidefinite Hermitian matrix.
///
/// Eigenvalues in `[-tol, 0)` are treated as zero; anything more negative is
/// reported as a domain violation.
pub fn psd_sqrt(m: &CMatrix, tol: f64) -> Result<CMatrix> {
    let (vals, _) = hermitian_eigen(m);
    let min = vals.iter().copied().fold(f64::INFINITY, f64::min);
    if min < -tol {
        return Err(Error::SqrtDomain { min_eigenvalue: min });
    }
    Ok(hermitian_function(m, |x| real(x.max(0.0).sqrt())))
}

pub fn min_eigenvalue(m: &CMatrix) -> f64 {
    hermitian_eigen(m)
        .0
        .into_iter()
        .fold(f64::INFINITY, f64::min)
}

/// Trace distance ½‖a − b‖₁ between Hermitian matrices.
pub fn trace_distance(a: &CMatrix, b: &CMatrix) -> f64 {
    let (vals, _) = hermitian_eigen(&(a - b));
    0.5 * vals.iter().map(|x| x.abs()).sum::<f64>()
}

/// Largest singular value.
pub fn operator_norm(m: &CMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().singular_values().max()
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

pub fn trace(m: &CMatrix) -> C64 {
    m.trace()
}

/// Random matrices for tests, benchmarks and the CLI's randomized suites.
pub mod random {
    use super::*;
    use rand::Rng;
    use rand_distr::StandardNormal;

    pub fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        c(re, im) * std::f64::consts::FRAC_1_SQRT_2
    }

    pub fn matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
        CMatrix::from_fn(rows, cols, |_, _| gaussian(rng))
    }

    pub fn vector<R: Rng + ?Sized>(rng: &mut R, len: usize) -> CVector {
        CVector::from_fn(len, |_, _| gaussian(rng))
    }

    pub fn unit_vector<R: Rng + ?Sized>(rng: &mut R, len: usize) -> CVector {
        let v = vector(rng, len);
        let n = v.norm();
        v / real(n)
    }

    pub fn hermitian<R: Rng + ?Sized>(rng: &mut R, d: usize) -> CMatrix {
        let m = matrix(rng, d, d);
        (&m + m.adjoint()) * real(0.5)
    }

    /// Haar-ish unitary from the QR factorization of a Gaussian matrix.
    pub fn unitary<R: Rng + ?Sized>(rng: &mut R, d: usize) -> CMatrix {
        let qr = matrix(rng, d, d).qr();
        let (q, r) = qr.unpack();
        let phases = CMatrix::from_diagonal(&CVector::from_iterator(
            d,
            (0..d).map(|k| {
                let x = r[(k, k)];
                if x.norm() > 0.0 {
                    x / x.norm()
                } else {
                    ONE
                }
            }),
        ));
        q * phases
    }

    /// Random density matrix of full rank.
    pub fn density<R: Rng + ?Sized>(rng: &mut R, d: usize) -> CMatrix {
        let a = matrix(rng, d, d);
        let rho = &a * a.adjoint();
        let tr = rho.trace();
        rho / tr
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn pauli_algebra() {
        let xy = sigma_x() * sigma_y();
        assert!((xy - sigma_z() * I).norm() < 1e-15);
        assert!((sigma_minus() * sigma_plus() - projector(&basis(2, 0))).norm() < 1e-15);
    }

    #[test]
    fn unitary_exp_matches_closed_form() {
        let u = unitary_exp(&sigma_z(), 0.3);
        assert!((u[(0, 0)] - C64::from_polar(1.0, -0.3)).norm() < 1e-14);
        assert!((u[(1, 1)] - C64::from_polar(1.0, 0.3)).norm() < 1e-14);
        let prop = SpectralPropagator::new(&sigma_x());
        assert!((prop.at(0.7) - unitary_exp(&sigma_x(), 0.7)).norm() < 1e-13);
    }

    #[test]
    fn psd_sqrt_squares_back() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random::matrix(&mut rng, 3, 3);
        let p = &a * a.adjoint();
        let s = psd_sqrt(&p, 1e-12).unwrap();
        assert!((&s * &s - &p).norm() < 1e-10);
        assert!(psd_sqrt(&(-identity(2)), 1e-12).is_err());
    }

    #[test]
    fn random_unitary_is_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let u = random::unitary(&mut rng, 4);
        assert!(unitarity_residual(&u) < 1e-12);
    }

    #[test]
    fn trace_distance_of_orthogonal_states() {
        let a = projector(&basis(2, 0));
        let b = projector(&basis(2, 1));
        assert!((trace_distance(&a, &b) - 1.0).abs() < 1e-14);
    }
}
