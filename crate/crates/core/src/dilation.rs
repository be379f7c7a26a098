//! Counting-equation dilations of Schrödinger and Lindblad dynamics.
//!
//! A generator is a block operator `G = [[I, A, K], [0, B, L], [0, 0, I]]` on
//! the external indices `(−, •1..•n, +)`. Its chronological product over a
//! chain of interaction points propagates the dilated state, and the
//! projections back to the system give the unitary or Lindblad flow.

use crate::chain::{
    count_chains, enumerate_chains_in, poisson_expectation_product, window_tail, BlockDiagOperator,
    Chain, ChainVector, Fiber, Grid, PoissonEstimate, CHAIN_BUDGET,
};
use crate::chain::system_major;
use crate::error::{Error, Result};
use crate::ito::ItoElement;
use crate::linalg::{
    hermiticity_residual, identity, min_eigenvalue, operator_norm, real, require_hermitian, trace,
    unitarity_residual, unitary_exp, CMatrix, CVector, SystemOperator, I,
};
use crate::minkowski::{BlockOperator, LorentzBoost, PseudoUnitarity, DEFAULT_TOL};

/// Floor below which a density eigenvalue counts as a positivity violation.
pub const POSITIVITY_FLOOR: f64 = -1e-10;

/// A generator of the counting equation, with identity corners and upper-triangular blocks.
#[derive(Clone, Debug, PartialEq)]
pub struct Generator {
    op: BlockOperator,
}

impl Generator {
    /// Wraps a block operator, checking the corners and the triangular shape.
    pub fn from_block(op: BlockOperator, tol: f64) -> Result<Self> {
        let d = op.system_dim();
        let plus = op.plus();
        let corners = (op.block(0, 0) - identity(d)).norm() + (op.block(plus, plus) - identity(d)).norm();
        if corners > tol {
            return Err(Error::InvalidParameter(format!(
                "generator corners must be the identity (residual {corners:.3e})"
            )));
        }
        let residual = op.lower_residual();
        if residual > tol {
            return Err(Error::NotUpperTriangular { residual });
        }
        Ok(Self { op })
    }

    /// `[[I, A, K], [0, B, L], [0, 0, I]]` from its parts; `a` is `d × nd`, `b` is `nd × nd`, `l` is `nd × d`.
    pub fn from_parts(k: &CMatrix, a: &CMatrix, b: &CMatrix, l: &CMatrix) -> Result<Self> {
        let d = k.nrows();
        if k.ncols() != d {
            return Err(Error::DimensionMismatch("K must be square".into()));
        }
        let nd = b.nrows();
        if !nd.is_multiple_of(d) || b.ncols() != nd || a.shape() != (d, nd) || l.shape() != (nd, d) {
            return Err(Error::DimensionMismatch(format!(
                "inconsistent generator parts: K {:?}, A {:?}, B {:?}, L {:?}",
                k.shape(),
                a.shape(),
                b.shape(),
                l.shape()
            )));
        }
        let n = nd / d;
        let mut op = BlockOperator::identity(n, d);
        let plus = n + 1;
        op.set_block(0, plus, k)?;
        for i in 0..n {
            op.set_block(0, i + 1, &a.view((0, i * d), (d, d)).into_owned())?;
            op.set_block(i + 1, plus, &l.view((i * d, 0), (d, d)).into_owned())?;
            for j in 0..n {
                op.set_block(i + 1, j + 1, &b.view((i * d, j * d), (d, d)).into_owned())?;
            }
        }
        Ok(Self { op })
    }

    /// `[[I, −iH], [0, I]]`.
    pub fn schrodinger(h: &CMatrix) -> Result<Self> {
        require_hermitian(h, DEFAULT_TOL)?;
        let d = h.nrows();
        Self::from_parts(&(h * -I), &CMatrix::zeros(d, 0), &CMatrix::zeros(0, 0), &CMatrix::zeros(0, d))
    }

    /// The pseudo-unitary generator with `K = −iH − ½ΣL*L`, `A = −L*B`; `B` defaults to the identity.
    pub fn lindblad(h: &CMatrix, ls: &[CMatrix], b: Option<&CMatrix>) -> Result<Self> {
        require_hermitian(h, DEFAULT_TOL)?;
        let d = h.nrows();
        let n = ls.len();
        let col = stack_column(ls, d)?;
        let b = match b {
            Some(b) => {
                if b.shape() != (n * d, n * d) {
                    return Err(Error::DimensionMismatch(format!(
                        "scattering block must be {0}x{0}",
                        n * d
                    )));
                }
                let residual = unitarity_residual(b);
                if residual > DEFAULT_TOL {
                    return Err(Error::NotUnitary { residual });
                }
                b.clone()
            }
            None => identity(n * d),
        };
        let k = h * -I - (col.adjoint() * &col) * real(0.5);
        let a = -(col.adjoint() * &b);
        Self::from_parts(&k, &a, &b, &col)
    }

    /// The same generator without the damping term: `K = −iH`. Not pseudo-unitary unless `L = 0`.
    pub fn damping_free(h: &CMatrix, ls: &[CMatrix]) -> Result<Self> {
        let d = h.nrows();
        let col = stack_column(ls, d)?;
        Self::from_parts(&(h * -I), &-col.adjoint(), &identity(ls.len() * d), &col)
    }

    pub fn noise_dim(&self) -> usize {
        self.op.noise_dim()
    }

    pub fn system_dim(&self) -> usize {
        self.op.system_dim()
    }

    pub fn block_operator(&self) -> &BlockOperator {
        &self.op
    }

    pub fn into_block_operator(self) -> BlockOperator {
        self.op
    }

    /// `K = G^−_+`, the block seen by `ξ★ G ξ`.
    pub fn k(&self) -> SystemOperator {
        self.op.temporal_sandwich()
    }

    /// The creation column `L` stacked as `nd × d`.
    pub fn creation(&self) -> CMatrix {
        let (n, d) = (self.noise_dim(), self.system_dim());
        self.op.matrix().view((d, (n + 1) * d), (n * d, d)).into_owned()
    }

    /// The annihilation row `A = G^−_•` as `d × nd`.
    pub fn annihilation(&self) -> CMatrix {
        let (n, d) = (self.noise_dim(), self.system_dim());
        self.op.matrix().view((0, d), (d, n * d)).into_owned()
    }

    /// The scattering block `B = G^•_•`.
    pub fn scattering(&self) -> CMatrix {
        let (n, d) = (self.noise_dim(), self.system_dim());
        self.op.matrix().view((d, d), (n * d, n * d)).into_owned()
    }

    pub fn pseudo_unitarity(&self, tol: f64) -> PseudoUnitarity {
        self.op.pseudo_unitarity(tol)
    }

    /// `G̃_{ab} = G_{σb, σa}` where σ swaps `−` and `+`.
    pub fn tilde(&self) -> Self {
        Self {
            op: tilde_involution(&self.op),
        }
    }

    /// Replaces the annihilation row `G^−_•`; the `+` column, hence `Gξ`, is untouched.
    pub fn with_annihilation(&self, row: &CMatrix) -> Result<Self> {
        Self::from_parts(&self.k(), row, &self.scattering(), &self.creation())
    }

    /// `υ★ G υ`; the corners stay the identity.
    pub fn boosted(&self, boost: &LorentzBoost) -> Result<Self> {
        Ok(Self {
            op: boost.conjugate(&self.op)?,
        })
    }

    pub fn isometry_row(&self) -> IsometryRow {
        IsometryRow::from_operator(&self.op)
    }
}

fn stack_column(ls: &[CMatrix], d: usize) -> Result<CMatrix> {
    let mut col = CMatrix::zeros(ls.len() * d, d);
    for (i, l) in ls.iter().enumerate() {
        if l.shape() != (d, d) {
            return Err(Error::DimensionMismatch(format!(
                "jump operator {i} is {:?}, expected {d}x{d}",
                l.shape()
            )));
        }
        col.view_mut((i * d, 0), (d, d)).copy_from(l);
    }
    Ok(col)
}

/// `X̃_{ab} = X_{σb, σa}`, block by block and without adjoints.
pub fn tilde_involution(x: &BlockOperator) -> BlockOperator {
    let n = x.noise_dim();
    let sigma = |a: usize| {
        if a == 0 {
            n + 1
        } else if a == n + 1 {
            0
        } else {
            a
        }
    };
    let mut out = BlockOperator::zeros(n, x.system_dim());
    for a in 0..n + 2 {
        for b in 0..n + 2 {
            out.set_block(a, b, &x.block(sigma(b), sigma(a))).expect("same shape");
        }
    }
    out
}

/// The row `V★ = ξ★G` and column `V = G★ξ` of a generator.
#[derive(Clone, Debug, PartialEq)]
pub struct IsometryRow {
    row: Vec<SystemOperator>,
    column: Vec<SystemOperator>,
}

impl IsometryRow {
    pub fn from_operator(g: &BlockOperator) -> Self {
        let m = g.external_size();
        let star = g.pseudo_adjoint();
        Self {
            row: (0..m).map(|b| g.block(0, b)).collect(),
            column: (0..m).map(|a| star.block(a, m - 1)).collect(),
        }
    }

    pub fn row(&self) -> &[SystemOperator] {
        &self.row
    }

    pub fn column(&self) -> &[SystemOperator] {
        &self.column
    }

    /// `‖V★V‖`, zero for a pseudo-unitary generator.
    pub fn null_residual(&self) -> f64 {
        let d = self.row[0].nrows();
        self.row
            .iter()
            .zip(&self.column)
            .fold(CMatrix::zeros(d, d), |acc, (r, c)| acc + r * c)
            .norm()
    }

    /// Bound `Σ_b ‖V★_b‖‖V_b‖` on the superoperator `ρ ↦ V★ρV`.
    pub fn bound(&self) -> f64 {
        self.row
            .iter()
            .zip(&self.column)
            .map(|(r, c)| operator_norm(r) * operator_norm(c))
            .sum()
    }
}

/// `V★(ρ ⊗ I)V = Σ_b V★_b ρ V_b`.
pub fn master_derivative(rho: &CMatrix, v: &IsometryRow) -> CMatrix {
    let d = rho.nrows();
    v.row
        .iter()
        .zip(&v.column)
        .fold(CMatrix::zeros(d, d), |acc, (r, c)| acc + r * rho * c)
}

/// A density matrix. Construction validates it; evolved states are only monitored.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityOperator {
    matrix: CMatrix,
}

/// Deviations of a matrix from being a density operator.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DensityHealth {
    pub trace_error: f64,
    pub hermiticity: f64,
    pub min_eigenvalue: f64,
}

impl DensityHealth {
    pub fn of(m: &CMatrix) -> Self {
        Self {
            trace_error: (trace(m) - real(1.0)).norm(),
            hermiticity: hermiticity_residual(m),
            min_eigenvalue: min_eigenvalue(&((m + m.adjoint()) * real(0.5))),
        }
    }

    pub fn is_valid(&self, tol: f64) -> bool {
        self.trace_error <= tol && self.hermiticity <= tol && self.min_eigenvalue >= POSITIVITY_FLOOR
    }
}

impl DensityOperator {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::InvalidDensity("matrix is not square".into()));
        }
        let health = DensityHealth::of(&matrix);
        if !health.is_valid(1e-10) {
            return Err(Error::InvalidDensity(format!(
                "trace error {:.3e}, hermiticity {:.3e}, smallest eigenvalue {:.3e}",
                health.trace_error, health.hermiticity, health.min_eigenvalue
            )));
        }
        Ok(Self { matrix })
    }

    /// `P_ψ = ψψ†` for a unit vector.
    pub fn pure(psi: &CVector) -> Result<Self> {
        let norm = psi.norm();
        if (norm - 1.0).abs() > DEFAULT_TOL {
            return Err(Error::Unnormalized { norm });
        }
        Ok(Self {
            matrix: psi * psi.adjoint(),
        })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn health(&self) -> DensityHealth {
        DensityHealth::of(&self.matrix)
    }
}

/// Per-cell generators `G_j`, piecewise constant in time.
pub fn uniform_schedule(grid: &Grid, g: &Generator) -> Vec<Generator> {
    vec![g.clone(); grid.len()]
}

fn check_schedule(grid: &Grid, schedule: &[Generator]) -> Result<(usize, usize)> {
    let first = schedule
        .first()
        .ok_or_else(|| Error::InvalidParameter("empty generator schedule".into()))?;
    if schedule.len() != grid.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} generators for {} grid cells",
            schedule.len(),
            grid.len()
        )));
    }
    let shape = (first.noise_dim(), first.system_dim());
    if schedule.iter().any(|g| (g.noise_dim(), g.system_dim()) != shape) {
        return Err(Error::DimensionMismatch("generators differ in shape".into()));
    }
    Ok(shape)
}

/// `G^⊙` over the grid.
pub fn dilation_operator(grid: Grid, schedule: &[Generator]) -> Result<BlockDiagOperator> {
    check_schedule(&grid, schedule)?;
    BlockDiagOperator::chronological(grid, schedule.iter().map(|g| g.op.clone()).collect())
}

/// The ordered product over `ϑ ∩ [r, t)`, later points to the left, in system-major layout.
pub fn chronological_product(x: &BlockDiagOperator, chain: &Chain, r: f64, t: f64) -> Result<CMatrix> {
    Ok(x.window(r, t)?.block(chain))
}

/// Applies the jumps at every chain point in `[0, t)`.
pub fn propagate_counting(x: &BlockDiagOperator, psi0: &ChainVector, t: f64) -> Result<ChainVector> {
    if !psi0.fiber().is_minkowski() {
        return Err(Error::FiberMismatch("counting propagation acts on Minkowski-fiber vectors".into()));
    }
    x.window(0.0, t)?.apply(psi0)
}

/// A projected propagator or state with its truncation bound.
#[derive(Clone, Debug)]
pub struct Truncated<T> {
    pub value: T,
    pub tail_bound: f64,
}

/// Applies `η^⊗k` to the rows of a system-major matrix.
fn flip_labels(x: &CMatrix, d: usize, n: usize, k: usize) -> CMatrix {
    let m = n + 2;
    let sigma = |a: usize| if a == 0 { n + 1 } else if a == n + 1 { 0 } else { a };
    CMatrix::from_fn(x.nrows(), x.ncols(), |r, c| {
        let (s, ps) = crate::chain::tensor::digits(r, d, m, k);
        let qs: Vec<usize> = ps.iter().map(|&p| sigma(p)).collect();
        x[(crate::chain::tensor::compose_index(s, &qs, m), c)]
    })
}

/// `I ⊗ ξ★^⊗k`, the row reading the `−` label at every point.
fn minus_row(d: usize, m: usize, k: usize) -> CMatrix {
    let fk = m.pow(k as u32);
    CMatrix::from_fn(d, d * fk, |s, c| if c == s * fk { real(1.0) } else { real(0.0) })
}

/// `I ⊗ ξ^⊗k`, the column with the `+` label at every point.
fn plus_column(d: usize, m: usize, k: usize) -> CMatrix {
    let fk = m.pow(k as u32);
    let last = fk - 1;
    CMatrix::from_fn(d * fk, d, |r, s| if r == s * fk + last { real(1.0) } else { real(0.0) })
}

/// `U(t) = F G^⊙_t F★` restricted to the vacuum: `Σ_ϑ h^|ϑ| ξ★^⊗ G(ϑ) ξ^⊗` over enumerated chains.
pub fn project_unitary_enumerated(x: &BlockDiagOperator, t: f64, n_max: usize) -> Result<Truncated<CMatrix>> {
    let Fiber::Minkowski(n) = x.fiber() else {
        return Err(Error::FiberMismatch("projection needs a Minkowski-fiber operator".into()));
    };
    let grid = *x.grid();
    let window = grid.window(0.0, t)?;
    let d = x.system_dim();
    let m = n + 2;
    let h = grid.h();
    let xw = x.restricted(window.clone());
    let mut u = CMatrix::zeros(d, d);
    let mut b: f64 = 0.0;
    for chain in enumerate_chains_in(window.clone(), n_max)? {
        let k = chain.len();
        let col = xw.block_times(&chain, &plus_column(d, m, k));
        u += minus_row(d, m, k) * col * real(h.powi(k as i32));
    }
    if let Some(factors) = xw.factors() {
        for f in &factors[window.clone()] {
            let g = crate::chain::external_major(f, n, d)?;
            b = b.max(operator_norm(&g.temporal_sandwich()));
        }
    }
    let t_eff = window.len() as f64 * h;
    Ok(Truncated {
        value: u,
        tail_bound: window_tail(t_eff * b, n_max, window.len()),
    })
}

/// The step map `Π_j (I + h ξ★G_jξ)` over the cells in `[0, t)`.
pub fn project_unitary_step(grid: &Grid, schedule: &[Generator], t: f64) -> Result<CMatrix> {
    let (_, d) = check_schedule(grid, schedule)?;
    let h = grid.h();
    let mut u = identity(d);
    for g in &schedule[grid.window(0.0, t)?] {
        u = (identity(d) + g.k() * real(h)) * u;
    }
    Ok(u)
}

/// The step map with exact cell exponentials `Π_j exp(h ξ★G_jξ)`. Each cell carries
/// every number of jumps, so for `L = 0` this is `e^{−iHt}` up to rounding.
pub fn project_unitary_exponential(grid: &Grid, schedule: &[Generator], t: f64) -> Result<CMatrix> {
    let (_, d) = check_schedule(grid, schedule)?;
    let h = grid.h();
    let mut u = identity(d);
    for g in &schedule[grid.window(0.0, t)?] {
        u = (g.k() * real(h)).exp() * u;
    }
    Ok(u)
}

/// Trace-out by chain enumeration with the tilde generators:
/// `ρ(t) = Σ_ϑ h^|ϑ| ξ★^⊗ Ũ(ϑ) (ρ₀ ⊗ I) Ũ(ϑ)★ ξ^⊗`.
pub fn traceout_enumerated(
    grid: Grid,
    schedule: &[Generator],
    rho0: &DensityOperator,
    t: f64,
    n_max: usize,
) -> Result<Truncated<CMatrix>> {
    let (n, d) = check_schedule(&grid, schedule)?;
    if rho0.dim() != d {
        return Err(Error::DimensionMismatch("initial state and generators differ in dimension".into()));
    }
    let tilde: Vec<Generator> = schedule.iter().map(Generator::tilde).collect();
    let ut = dilation_operator(grid, &tilde)?;
    let window = grid.window(0.0, t)?;
    let ut = ut.restricted(window.clone());
    let h = grid.h();
    let m = n + 2;
    let mut rho = CMatrix::zeros(d, d);
    for chain in enumerate_chains_in(window.clone(), n_max)? {
        let k = chain.len();
        // R = ξ★^⊗ Ũ(ϑ) and C = Ũ(ϑ)★ ξ^⊗ = η^⊗ R†.
        let r_adj = ut.adjoint_block_times(&chain, &minus_row(d, m, k).adjoint());
        let c_col = flip_labels(&r_adj, d, n, k);
        let fk = m.pow(k as u32);
        let mut acc = CMatrix::zeros(d, d);
        for a in 0..fk {
            let ra = CMatrix::from_fn(d, d, |s, t| r_adj[(t * fk + a, s)].conj());
            let ca = CMatrix::from_fn(d, d, |s, t| c_col[(s * fk + a, t)]);
            acc += ra * rho0.matrix() * ca;
        }
        rho += acc * real(h.powi(k as i32));
    }
    let bound = tilde[window.clone()]
        .iter()
        .map(|g| g.isometry_row().bound())
        .fold(0.0, f64::max);
    let t_eff = window.len() as f64 * h;
    Ok(Truncated {
        value: rho,
        tail_bound: window_tail(t_eff * bound, n_max, window.len()) * operator_norm(rho0.matrix()),
    })
}

/// One state of a trace-out series, at the right edge of a cell.
#[derive(Clone, Debug)]
pub struct TimedState {
    pub time: f64,
    pub rho: CMatrix,
    pub health: DensityHealth,
}

/// Trace-out by the step map `ρ ↦ ρ + h V★ρV` with `V★ = ξ★G̃_j`; reports every cell edge in `[0, t)`.
pub fn traceout_step(grid: &Grid, schedule: &[Generator], rho0: &DensityOperator, t: f64) -> Result<Vec<TimedState>> {
    let (_, d) = check_schedule(grid, schedule)?;
    if rho0.dim() != d {
        return Err(Error::DimensionMismatch("initial state and generators differ in dimension".into()));
    }
    let h = grid.h();
    let mut rho = rho0.matrix().clone();
    let mut out = Vec::new();
    for j in grid.window(0.0, t)? {
        let v = schedule[j].tilde().isometry_row();
        rho += master_derivative(&rho, &v) * real(h);
        out.push(TimedState {
            time: (j + 1) as f64 * h,
            health: DensityHealth::of(&rho),
            rho: rho.clone(),
        });
    }
    Ok(out)
}

/// Which evaluation path a trace-out took.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TraceoutPath {
    Enumeration,
    StepMap,
}

#[derive(Clone, Debug)]
pub struct TraceoutResult {
    pub rho: CMatrix,
    pub tail_bound: f64,
    pub path: TraceoutPath,
    pub health: DensityHealth,
}

/// `ρ(t)` for `ψ` under the Lindblad generator `(H, L)`: by enumeration while the chain
/// count fits the budget, otherwise by the step map (which has no truncation).
pub fn traceout_lindblad(
    h: &CMatrix,
    ls: &[CMatrix],
    psi: &CVector,
    t: f64,
    grid: Grid,
    n_max: usize,
) -> Result<TraceoutResult> {
    let rho0 = DensityOperator::pure(psi)?;
    let g = Generator::lindblad(h, ls, None)?;
    let schedule = uniform_schedule(&grid, &g);
    let window = grid.window(0.0, t)?;
    if count_chains(window.len(), n_max) <= CHAIN_BUDGET / 10 {
        let r = traceout_enumerated(grid, &schedule, &rho0, t, n_max)?;
        Ok(TraceoutResult {
            health: DensityHealth::of(&r.value),
            rho: r.value,
            tail_bound: r.tail_bound,
            path: TraceoutPath::Enumeration,
        })
    } else {
        let series = traceout_step(&grid, &schedule, &rho0, t)?;
        let rho = series.last().map_or_else(|| rho0.matrix().clone(), |s| s.rho.clone());
        Ok(TraceoutResult {
            health: DensityHealth::of(&rho),
            rho,
            tail_bound: 0.0,
            path: TraceoutPath::StepMap,
        })
    }
}

/// `−i[H, ρ] + Σ (LρL† − ½{L†L, ρ})`.
pub fn lindblad_rhs(h: &CMatrix, ls: &[CMatrix], rho: &CMatrix) -> CMatrix {
    let mut out = (h * rho - rho * h) * -I;
    for l in ls {
        let ll = l.adjoint() * l;
        out += l * rho * l.adjoint() - (&ll * rho + rho * &ll) * real(0.5);
    }
    out
}

/// Classical fixed-step RK4 integration of the Lindblad equation.
pub fn lindblad_reference(h: &CMatrix, ls: &[CMatrix], rho0: &DensityOperator, t: f64, steps: usize) -> Result<CMatrix> {
    if steps < 2 {
        return Err(Error::TooFewSteps(steps));
    }
    require_hermitian(h, DEFAULT_TOL)?;
    let d = rho0.dim();
    if h.nrows() != d || ls.iter().any(|l| l.shape() != (d, d)) {
        return Err(Error::DimensionMismatch("operators and state differ in dimension".into()));
    }
    let dt = t / steps as f64;
    let f = |r: &CMatrix| lindblad_rhs(h, ls, r);
    let mut rho = rho0.matrix().clone();
    for _ in 0..steps {
        let k1 = f(&rho);
        let k2 = f(&(&rho + &k1 * real(0.5 * dt)));
        let k3 = f(&(&rho + &k2 * real(0.5 * dt)));
        let k4 = f(&(&rho + &k3 * real(dt)));
        rho += (k1 + k2 * real(2.0) + k3 * real(2.0) + k4) * real(dt / 6.0);
    }
    Ok(rho)
}

/// Outcome of the three boost checks.
#[derive(Clone, Debug)]
pub struct BoostReport {
    /// `‖υ★π(dt)υ − νπ(dt)‖`.
    pub dt_residual: f64,
    /// Poisson expectation of the Schrödinger `G^⊙` at intensity `2ν`.
    pub expectation: PoissonEstimate,
    /// `e^{−iHνt}`.
    pub expected: CMatrix,
    pub expectation_error: f64,
    /// `‖V★_ν ρ V_ν − ν V★ρV‖`.
    pub master_residual: f64,
    /// `‖ξ★υ★G̃υ − (I, √ν L̃, νK)‖`.
    pub row_residual: f64,
}

impl BoostReport {
    pub fn expectation_within_bound(&self) -> bool {
        self.expectation_error <= self.expectation.total_bound()
    }
}

/// Checks the Lorentz-boost identities for `(H, L)` at intensity `ν` on `grid` up to time `t`.
pub fn boosted_dynamics_check(
    h: &CMatrix,
    ls: &[CMatrix],
    nu: f64,
    t: f64,
    grid: Grid,
    n_max: usize,
    rho: &CMatrix,
) -> Result<BoostReport> {
    let boost = LorentzBoost::new(nu, ls.len())?;
    let d = h.nrows();

    let pi_dt = ItoElement::dt(ls.len(), &identity(d)).represent();
    let dt_residual = boost.conjugate(&pi_dt)?.distance(&pi_dt.scale(real(nu)));

    let schrodinger = Generator::schrodinger(h)?;
    let x = dilation_operator(grid, &uniform_schedule(&grid, &schrodinger))?;
    let phi = CVector::from_element(2, real(0.5f64.sqrt()));
    let expectation = poisson_expectation_product(&x, 2.0 * nu, t, &phi, n_max)?;
    let expected = unitary_exp(h, nu * t);
    let expectation_error = (&expectation.value - &expected).norm();

    let g = Generator::lindblad(h, ls, None)?;
    let tilde = g.tilde();
    let boosted = tilde.boosted(&boost)?.isometry_row();
    let plain = tilde.isometry_row();
    let master_residual =
        (master_derivative(rho, &boosted) - master_derivative(rho, &plain) * real(nu)).norm();
    let n = ls.len();
    let mut row_residual = (&boosted.row()[0] - identity(d)).norm();
    for i in 0..n {
        row_residual += (&boosted.row()[i + 1] - tilde.block_operator().block(0, i + 1) * real(nu.sqrt())).norm();
    }
    row_residual += (&boosted.row()[n + 1] - g.k() * real(nu)).norm();

    Ok(BoostReport {
        dt_residual,
        expectation,
        expected,
        expectation_error,
        master_residual,
        row_residual,
    })
}

/// The system-major per-point matrix of a generator.
pub fn local_matrix(g: &Generator) -> CMatrix {
    system_major(&g.op)
}

/// A random pseudo-unitary generator: Gaussian `H`, `L`, and Haar-like scattering `B`.
pub fn random_generator<R: rand::Rng + ?Sized>(rng: &mut R, n: usize, d: usize) -> Generator {
    use crate::linalg::random;
    let h = random::hermitian(rng, d);
    let ls: Vec<CMatrix> = (0..n).map(|_| random::matrix(rng, d, d) * real(0.5)).collect();
    let b = random::unitary(rng, n * d);
    Generator::lindblad(&h, &ls, Some(&b)).expect("valid by construction")
}
