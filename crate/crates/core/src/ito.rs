//! The quantum Itô algebra over the Belavkin basis.
//!
//! An element `a = D^κ_ι dΛ^ι_κ` is stored as its coefficient table, indexed
//! by rows `ι ∈ {−, •1..•n}` and columns `κ ∈ {•1..•n, +}`. These are exactly
//! the blocks of the upper-triangular matrix `π(a)` that can be nonzero:
//! the first column and the last row of `π(a)` always vanish.

use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{Error, Result};
use crate::linalg::{identity, CMatrix, SystemOperator, C64};
use crate::minkowski::{BlockOperator, TemporalSpin};

/// Row label of the coefficient table.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Past {
    Minus,
    Noise(usize),
}

/// Column label of the coefficient table.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Future {
    Noise(usize),
    Plus,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ItoElement {
    noise_dim: usize,
    system_dim: usize,
    /// `(n+1)d × (n+1)d`; row block `r` is `−` for `r = 0` and `•r` otherwise,
    /// column block `c` is `•(c+1)` for `c < n` and `+` for `c = n`.
    table: CMatrix,
}

impl ItoElement {
    pub fn zero(noise_dim: usize, system_dim: usize) -> Self {
        let m = (noise_dim + 1) * system_dim;
        Self {
            noise_dim,
            system_dim,
            table: CMatrix::zeros(m, m),
        }
    }

    pub fn from_table(noise_dim: usize, system_dim: usize, table: CMatrix) -> Result<Self> {
        let m = (noise_dim + 1) * system_dim;
        if system_dim == 0 || table.nrows() != m || table.ncols() != m {
            return Err(Error::DimensionMismatch(format!(
                "coefficient table must be {m}x{m}, got {}x{}",
                table.nrows(),
                table.ncols()
            )));
        }
        Ok(Self {
            noise_dim,
            system_dim,
            table,
        })
    }

    pub fn noise_dim(&self) -> usize {
        self.noise_dim
    }

    pub fn system_dim(&self) -> usize {
        self.system_dim
    }

    pub fn table(&self) -> &CMatrix {
        &self.table
    }

    fn row(&self, i: Past) -> usize {
        match i {
            Past::Minus => 0,
            Past::Noise(k) => {
                assert!(k >= 1 && k <= self.noise_dim, "noise index {k} out of range");
                k
            }
        }
    }

    fn col(&self, k: Future) -> usize {
        match k {
            Future::Noise(j) => {
                assert!(j >= 1 && j <= self.noise_dim, "noise index {j} out of range");
                j - 1
            }
            Future::Plus => self.noise_dim,
        }
    }

    /// Coefficient `D^κ_ι`.
    pub fn coefficient(&self, iota: Past, kappa: Future) -> SystemOperator {
        let d = self.system_dim;
        let (r, c) = (self.row(iota), self.col(kappa));
        self.table.view((r * d, c * d), (d, d)).into_owned()
    }

    pub fn set_coefficient(&mut self, iota: Past, kappa: Future, value: &SystemOperator) {
        let d = self.system_dim;
        assert_eq!((value.nrows(), value.ncols()), (d, d), "coefficient must be d×d");
        let (r, c) = (self.row(iota), self.col(kappa));
        self.table.view_mut((r * d, c * d), (d, d)).copy_from(value);
    }

    pub fn with(mut self, iota: Past, kappa: Future, value: &SystemOperator) -> Self {
        self.set_coefficient(iota, kappa, value);
        self
    }

    /// `dt` with coefficient `c`.
    pub fn dt(noise_dim: usize, c: &SystemOperator) -> Self {
        Self::zero(noise_dim, c.nrows()).with(Past::Minus, Future::Plus, c)
    }

    /// Annihilation `dA^k`.
    pub fn annihilation(noise_dim: usize, k: usize, c: &SystemOperator) -> Self {
        Self::zero(noise_dim, c.nrows()).with(Past::Minus, Future::Noise(k), c)
    }

    /// Counting `dN^k_i`, represented by `|i⟩⟨k|` on the noise block.
    pub fn counting(noise_dim: usize, i: usize, k: usize, c: &SystemOperator) -> Self {
        Self::zero(noise_dim, c.nrows()).with(Past::Noise(i), Future::Noise(k), c)
    }

    /// Creation `dA★_i`.
    pub fn creation(noise_dim: usize, i: usize, c: &SystemOperator) -> Self {
        Self::zero(noise_dim, c.nrows()).with(Past::Noise(i), Future::Plus, c)
    }

    /// The four scalar basis increments `(dt, dA, dN, dA★)` at `n = 1`, `d = 1`.
    pub fn scalar_basis() -> [(&'static str, Self); 4] {
        let one = identity(1);
        [
            ("dt", Self::dt(1, &one)),
            ("dA", Self::annihilation(1, 1, &one)),
            ("dN", Self::counting(1, 1, 1, &one)),
            ("dA*", Self::creation(1, 1, &one)),
        ]
    }

    fn check(&self, other: &Self) -> Result<()> {
        if self.noise_dim != other.noise_dim || self.system_dim != other.system_dim {
            return Err(Error::DimensionMismatch(format!(
                "Ito elements (n={}, d={}) and (n={}, d={})",
                self.noise_dim, self.system_dim, other.noise_dim, other.system_dim
            )));
        }
        Ok(())
    }

    /// `(ab)^κ_ι = Σ_α D^α_ι F^κ_α`, the contraction running over noise indices only.
    pub fn product(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        let n = self.noise_dim;
        let d = self.system_dim;
        let m = (n + 1) * d;
        let mut table = CMatrix::zeros(m, m);
        if n > 0 {
            // columns •1..•n of `self` meet rows •1..•n of `other`
            let left = self.table.view((0, 0), (m, n * d));
            let right = other.table.view((d, 0), (n * d, m));
            table = left * right;
        }
        Ok(Self {
            noise_dim: n,
            system_dim: d,
            table,
        })
    }

    /// The canonical upper-triangular matrix π(a).
    pub fn represent(&self) -> BlockOperator {
        let n = self.noise_dim;
        let d = self.system_dim;
        let m = (n + 1) * d;
        let mut full = CMatrix::zeros((n + 2) * d, (n + 2) * d);
        full.view_mut((0, d), (m, m)).copy_from(&self.table);
        BlockOperator::new(n, d, full).expect("consistent dimensions")
    }

    /// Reads back an element from its matrix. Fails if the first block column
    /// or last block row is nonzero beyond `tol`.
    pub fn from_represented(op: &BlockOperator, tol: f64) -> Result<Self> {
        let residual = op.increment_residual();
        if residual > tol {
            return Err(Error::NotUpperTriangular { residual });
        }
        let n = op.noise_dim();
        let d = op.system_dim();
        let m = (n + 1) * d;
        let table = op.matrix().view((0, d), (m, m)).into_owned();
        Self::from_table(n, d, table)
    }

    /// `a★`: swaps `−` and `+`, transposes the noise indices and takes the
    /// adjoint of every system block.
    pub fn star(&self) -> Self {
        let n = self.noise_dim;
        let d = self.system_dim;
        let m = (n + 1) * d;
        let mut table = CMatrix::zeros(m, m);
        // table row r ↔ external index r, column c ↔ external index c+1;
        // (a★)_{xy} = (a_{y'x'})† with ' the metric partner.
        for r in 0..=n {
            for c in 0..=n {
                let (x, y) = (r, c + 1);
                let (src_row, src_ext_col) = (flip(y, n), flip(x, n));
                let src = self
                    .table
                    .view((src_row * d, (src_ext_col - 1) * d), (d, d))
                    .adjoint();
                table.view_mut((r * d, c * d), (d, d)).copy_from(&src);
            }
        }
        Self {
            noise_dim: n,
            system_dim: d,
            table,
        }
    }

    /// `l(a) = D^−_+`.
    pub fn pseudo_state(&self) -> SystemOperator {
        self.coefficient(Past::Minus, Future::Plus)
    }

    /// `l(a)` computed as the sandwich `ξ★ π(a) ξ`.
    pub fn pseudo_state_sandwich(&self) -> SystemOperator {
        let xi = TemporalSpin::new(self.noise_dim);
        let d = self.system_dim;
        xi.lifted_star(d) * self.represent().matrix() * xi.lifted(d)
    }

    /// The noise row `k(a) = (D^−_•1, …, D^−_•n)` as a `d × nd` matrix.
    pub fn noise_row(&self) -> CMatrix {
        let d = self.system_dim;
        self.table.view((0, 0), (d, self.noise_dim * d)).into_owned()
    }

    pub fn scale(&self, c: C64) -> Self {
        Self {
            noise_dim: self.noise_dim,
            system_dim: self.system_dim,
            table: &self.table * c,
        }
    }

    pub fn distance(&self, other: &Self) -> f64 {
        (&self.table - &other.table).norm()
    }

    pub fn norm(&self) -> f64 {
        self.table.norm()
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

impl Add for &ItoElement {
    type Output = ItoElement;
    fn add(self, rhs: &ItoElement) -> ItoElement {
        self.check(rhs).expect("Ito element dimensions differ");
        ItoElement {
            noise_dim: self.noise_dim,
            system_dim: self.system_dim,
            table: &self.table + &rhs.table,
        }
    }
}

impl Sub for &ItoElement {
    type Output = ItoElement;
    fn sub(self, rhs: &ItoElement) -> ItoElement {
        self.check(rhs).expect("Ito element dimensions differ");
        ItoElement {
            noise_dim: self.noise_dim,
            system_dim: self.system_dim,
            table: &self.table - &rhs.table,
        }
    }
}

impl Neg for &ItoElement {
    type Output = ItoElement;
    fn neg(self) -> ItoElement {
        self.scale(C64::new(-1.0, 0.0))
    }
}

impl Mul for &ItoElement {
    type Output = ItoElement;
    fn mul(self, rhs: &ItoElement) -> ItoElement {
        self.product(rhs).expect("Ito element dimensions differ")
    }
}

/// `l(f g★) = l(f) + k(f) k(g)† + l(g)†` evaluated from the three-term formula.
pub fn pseudo_state_product(f: &ItoElement, g: &ItoElement) -> Result<SystemOperator> {
    f.check(g)?;
    let lf = f.pseudo_state();
    let lg = g.pseudo_state();
    Ok(lf + f.noise_row() * g.noise_row().adjoint() + lg.adjoint())
}

/// An element of the unitalized monoid: `c·𝟏 + a` with `l(𝟏) = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct Unital {
    pub unit: C64,
    pub element: ItoElement,
}

impl Unital {
    pub fn one_plus(element: ItoElement) -> Self {
        Self {
            unit: C64::new(1.0, 0.0),
            element,
        }
    }

    pub fn product(&self, other: &Self) -> Result<Self> {
        let ab = self.element.product(&other.element)?;
        let mixed = &self.element.scale(other.unit) + &other.element.scale(self.unit);
        Ok(Self {
            unit: self.unit * other.unit,
            element: &mixed + &ab,
        })
    }

    pub fn star(&self) -> Self {
        Self {
            unit: self.unit.conj(),
            element: self.element.star(),
        }
    }

    pub fn pseudo_state(&self) -> SystemOperator {
        self.element.pseudo_state()
    }

    /// π(c·𝟏 + a) = c·I + π(a).
    pub fn represent(&self) -> BlockOperator {
        let rep = self.element.represent();
        let n = rep.noise_dim();
        let d = rep.system_dim();
        let m = rep.matrix() + identity((n + 2) * d) * self.unit;
        BlockOperator::new(n, d, m).expect("consistent dimensions")
    }
}

/// `l` on the monoid product `(𝟏 + f)(𝟏 + g)★`.
pub fn unital_pseudo_state_product(f: &ItoElement, g: &ItoElement) -> Result<SystemOperator> {
    let lhs = Unital::one_plus(f.clone());
    let rhs = Unital::one_plus(g.clone()).star();
    Ok(lhs.product(&rhs)?.pseudo_state())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{random, ONE, ZERO};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_element(rng: &mut ChaCha8Rng, n: usize, d: usize) -> ItoElement {
        let m = (n + 1) * d;
        ItoElement::from_table(n, d, random::matrix(rng, m, m)).unwrap()
    }

    #[test]
    fn hudson_parthasarathy_table() {
        let basis = ItoElement::scalar_basis();
        let lookup = |name: &str| basis.iter().find(|(n, _)| *n == name).unwrap().1.clone();
        let zero = ItoElement::zero(1, 1);
        let expected = |a: &str, b: &str| -> ItoElement {
            match (a, b) {
                ("dA", "dA*") => lookup("dt"),
                ("dA", "dN") => lookup("dA"),
                ("dN", "dN") => lookup("dN"),
                ("dN", "dA*") => lookup("dA*"),
                _ => zero.clone(),
            }
        };
        for (na, a) in &basis {
            for (nb, b) in &basis {
                let ab = a.product(b).unwrap();
                assert_eq!(ab, expected(na, nb), "{na}·{nb}");
                let rep = a.represent() * b.represent();
                assert_eq!(&rep, &ab.represent(), "{na}·{nb} via π");
            }
        }
    }

    #[test]
    fn star_of_basis() {
        let basis = ItoElement::scalar_basis();
        let get = |name: &str| basis.iter().find(|(n, _)| *n == name).unwrap().1.clone();
        assert_eq!(get("dt").star(), get("dt"));
        assert_eq!(get("dN").star(), get("dN"));
        assert_eq!(get("dA").star(), get("dA*"));
    }

    #[test]
    fn representation_entries() {
        let one = identity(1);
        let dt = ItoElement::dt(2, &one).represent();
        assert_eq!(dt.block(0, 3)[(0, 0)], ONE);
        assert_eq!(dt.matrix().iter().filter(|z| **z != ZERO).count(), 1);
        let dn = ItoElement::counting(2, 2, 1, &one).represent();
        assert_eq!(dn.block(2, 1)[(0, 0)], ONE);
        assert_eq!(dn.matrix().iter().filter(|z| **z != ZERO).count(), 1);
    }

    #[test]
    fn pseudo_state_of_basis() {
        let basis = ItoElement::scalar_basis();
        for (name, a) in &basis {
            let l = a.pseudo_state()[(0, 0)];
            assert_eq!(l, if *name == "dt" { ONE } else { ZERO });
        }
    }

    #[test]
    fn nilpotency_of_dt() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let dt = ItoElement::dt(2, &identity(2));
        let x = random_element(&mut rng, 2, 2);
        assert_eq!(dt.product(&x).unwrap().norm(), 0.0);
        assert_eq!(x.product(&dt).unwrap().norm(), 0.0);
    }

    #[test]
    fn mismatched_dimensions_are_rejected() {
        let a = ItoElement::zero(1, 2);
        let b = ItoElement::zero(2, 2);
        assert!(a.product(&b).is_err());
        assert!(pseudo_state_product(&a, &b).is_err());
    }

    fn table_strategy(n: usize, d: usize) -> impl Strategy<Value = ItoElement> {
        let m = (n + 1) * d;
        proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), m * m).prop_map(move |v| {
            let data: Vec<C64> = v.into_iter().map(|(a, b)| C64::new(a, b)).collect();
            ItoElement::from_table(n, d, CMatrix::from_row_slice(m, m, &data)).unwrap()
        })
    }

    proptest! {
        #[test]
        fn represent_is_a_star_homomorphism(a in table_strategy(2, 2), b in table_strategy(2, 2)) {
            let ab = a.product(&b).unwrap();
            prop_assert!((a.represent() * b.represent()).distance(&ab.represent()) < 1e-12);
            prop_assert!(a.star().represent().distance(&a.represent().pseudo_adjoint()) < 1e-14);
            prop_assert_eq!(a.star().star(), a.clone());
            let lhs = ab.star();
            let rhs = b.star().product(&a.star()).unwrap();
            prop_assert!(lhs.distance(&rhs) < 1e-12);
        }

        #[test]
        fn product_is_associative(a in table_strategy(1, 2), b in table_strategy(1, 2), c in table_strategy(1, 2)) {
            let left = a.product(&b).unwrap().product(&c).unwrap();
            let right = a.product(&b.product(&c).unwrap()).unwrap();
            prop_assert!(left.distance(&right) < 1e-12);
        }

        #[test]
        fn pseudo_state_is_the_temporal_sandwich(a in table_strategy(2, 2)) {
            prop_assert!((a.pseudo_state() - a.pseudo_state_sandwich()).norm() == 0.0);
        }

        #[test]
        fn three_term_pseudo_state_formula(f in table_strategy(1, 1), g in table_strategy(1, 1)) {
            let direct = unital_pseudo_state_product(&f, &g).unwrap();
            let formula = pseudo_state_product(&f, &g).unwrap();
            prop_assert!((direct - formula).norm() < 1e-14);
        }
    }

    #[test]
    fn represented_roundtrip() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let a = random_element(&mut rng, 2, 3);
        let back = ItoElement::from_represented(&a.represent(), 0.0).unwrap();
        assert_eq!(back, a);
        let not_increment = BlockOperator::identity(2, 3);
        assert!(ItoElement::from_represented(&not_increment, 1e-12).is_err());
    }
}
