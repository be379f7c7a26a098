//! Truncated Guichardet-Fock spaces over a uniform time grid.
//!
//! A chain is a finite, strictly increasing set of grid indices. Chain
//! integrals become weighted sums with weight `h` per point, and every space is
//! truncated at a maximal chain cardinality `n_max`.

mod embedding;
mod fock;
mod operator;
mod poisson;
pub(crate) mod tensor;
mod vector;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use embedding::{embed, project, projection_e, vacuum_lift};
pub use fock::{FockBasis, FockOperator};
pub use operator::{
    chain_pseudo_adjoint, chain_upper_residual, chronological_matrix, epsilon_morphism,
    external_major, system_major, weyl_factor, weyl_operator, weyl_transform, BlockDiagOperator,
};
pub use poisson::{
    poisson_expectation, poisson_expectation_product, poisson_tail, window_tail, PoissonEstimate,
};
pub use vector::{
    coherent_vector, exponential_vector, qs_single_integral, ChainVector, Fiber, PointFamily,
};

/// Largest number of chains any full enumeration may produce.
pub const CHAIN_BUDGET: u128 = 1_000_000;

/// Uniform midpoint grid on `[0, T)`: `t_j = (j + ½)h`, `h = T/N`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    t_final: f64,
    n_points: usize,
}

impl Grid {
    pub fn new(t_final: f64, n_points: usize) -> Result<Self> {
        if !(t_final > 0.0) || !t_final.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "grid length must be positive, got {t_final}"
            )));
        }
        if n_points == 0 {
            return Err(Error::InvalidParameter("grid needs at least one point".into()));
        }
        Ok(Self { t_final, n_points })
    }

    pub fn t_final(&self) -> f64 {
        self.t_final
    }

    pub fn len(&self) -> usize {
        self.n_points
    }

    pub fn is_empty(&self) -> bool {
        self.n_points == 0
    }

    pub fn h(&self) -> f64 {
        self.t_final / self.n_points as f64
    }

    pub fn point(&self, j: usize) -> f64 {
        (j as f64 + 0.5) * self.h()
    }

    /// Number of grid points strictly before `t`.
    pub fn points_before(&self, t: f64) -> usize {
        let x = (t / self.h() - 0.5).ceil();
        if x <= 0.0 {
            0
        } else {
            (x as usize).min(self.n_points)
        }
    }

    /// Index range of the points in `[r, t)`.
    pub fn window(&self, r: f64, t: f64) -> Result<std::ops::Range<usize>> {
        if !(r <= t) || r < 0.0 || t > self.t_final * (1.0 + 1e-12) {
            return Err(Error::InvalidWindow { from: r, to: t });
        }
        Ok(self.points_before(r)..self.points_before(t))
    }

    pub fn check_time(&self, t: f64) -> Result<()> {
        if !(0.0..=self.t_final * (1.0 + 1e-12)).contains(&t) {
            return Err(Error::InvalidWindow { from: 0.0, to: t });
        }
        Ok(())
    }
}

/// A strictly increasing list of grid indices.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Chain(Vec<usize>);

impl Chain {
    pub fn empty() -> Self {
        Self(Vec::new())
    }

    /// Sorts the points; repeated points violate the disjoint-union structure.
    pub fn new(mut points: Vec<usize>) -> Result<Self> {
        points.sort_unstable();
        if let Some(w) = points.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::DisjointUnion { point: w[0] });
        }
        Ok(Self(points))
    }

    pub fn singleton(j: usize) -> Self {
        Self(vec![j])
    }

    pub fn points(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, j: usize) -> bool {
        self.0.binary_search(&j).is_ok()
    }

    pub fn position(&self, j: usize) -> Option<usize> {
        self.0.binary_search(&j).ok()
    }

    /// `j ⊔ self` and the position of `j` in the result.
    pub fn insert(&self, j: usize) -> Result<(Chain, usize)> {
        match self.0.binary_search(&j) {
            Ok(_) => Err(Error::DisjointUnion { point: j }),
            Err(pos) => {
                let mut v = self.0.clone();
                v.insert(pos, j);
                Ok((Chain(v), pos))
            }
        }
    }

    /// `self ∖ j` given the position of `j`.
    pub fn remove_at(&self, pos: usize) -> Chain {
        let mut v = self.0.clone();
        v.remove(pos);
        Chain(v)
    }

    /// Disjoint union; fails on a shared point.
    pub fn union(&self, other: &Chain) -> Result<Chain> {
        let mut v = Vec::with_capacity(self.len() + other.len());
        let (mut i, mut j) = (0, 0);
        while i < self.len() || j < other.len() {
            let take_left = j >= other.len() || (i < self.len() && self.0[i] < other.0[j]);
            if i < self.len() && j < other.len() && self.0[i] == other.0[j] {
                return Err(Error::DisjointUnion { point: self.0[i] });
            }
            if take_left {
                v.push(self.0[i]);
                i += 1;
            } else {
                v.push(other.0[j]);
                j += 1;
            }
        }
        Ok(Chain(v))
    }

    /// Points inside the index range.
    pub fn restrict(&self, range: std::ops::Range<usize>) -> Chain {
        Chain(self.0.iter().copied().filter(|j| range.contains(j)).collect())
    }

    pub fn is_subset_of(&self, other: &Chain) -> bool {
        self.0.iter().all(|&j| other.contains(j))
    }

    /// Every subset, encoded by bitmask over positions.
    pub fn subsets(&self) -> impl Iterator<Item = (u64, Chain)> + '_ {
        assert!(self.len() < 64, "chain too long for subset enumeration");
        (0u64..(1u64 << self.len())).map(move |mask| {
            let pts = self
                .0
                .iter()
                .enumerate()
                .filter(|(i, _)| mask >> i & 1 == 1)
                .map(|(_, &j)| j)
                .collect();
            (mask, Chain(pts))
        })
    }
}

impl From<Chain> for Vec<usize> {
    fn from(c: Chain) -> Self {
        c.0
    }
}

/// Σ_{k ≤ n_max} C(N, k), saturating.
pub fn count_chains(n_points: usize, n_max: usize) -> u128 {
    let mut total: u128 = 0;
    let mut binom: u128 = 1;
    for k in 0..=n_max.min(n_points) {
        if k > 0 {
            binom = binom * (n_points - k + 1) as u128 / k as u128;
        }
        total = total.saturating_add(binom);
    }
    total
}

pub fn check_budget(n_points: usize, n_max: usize) -> Result<()> {
    let required = count_chains(n_points, n_max);
    if required > CHAIN_BUDGET {
        return Err(Error::ChainBudget {
            required,
            limit: CHAIN_BUDGET,
        });
    }
    Ok(())
}

/// All chains of cardinality at most `n_max` inside the index range, in
/// lexicographic order.
pub fn enumerate_chains_in(range: std::ops::Range<usize>, n_max: usize) -> Result<Vec<Chain>> {
    check_budget(range.len(), n_max)?;
    let mut out = Vec::new();
    let mut stack = Vec::new();
    fn rec(
        start: usize,
        end: usize,
        n_max: usize,
        stack: &mut Vec<usize>,
        out: &mut Vec<Chain>,
    ) {
        out.push(Chain(stack.clone()));
        if stack.len() == n_max {
            return;
        }
        for j in start..end {
            stack.push(j);
            rec(j + 1, end, n_max, stack, out);
            stack.pop();
        }
    }
    rec(range.start, range.end, n_max, &mut stack, &mut out);
    Ok(out)
}

pub fn enumerate_chains(grid: &Grid, n_max: usize) -> Result<Vec<Chain>> {
    enumerate_chains_in(0..grid.len(), n_max)
}
