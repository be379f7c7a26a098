//! Sequential measurement: Kraus preparation, the apparatus unitary, Bayesian
//! conditioning and the Monte-Carlo counting trajectories it produces.
//!
//! Object-apparatus operators use apparatus-major layout: index `a·d + s` for
//! apparatus state `a` and system index `s`. `G^k_0` is the block in row `k`,
//! column `0`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chain::tensor::{compose_index, digits, pow};
use crate::chain::{ChainVector, Fiber};
use crate::dilation::{lindblad_reference, DensityOperator};
use crate::error::{Error, Result};
use crate::linalg::{
    frobenius, hermitian_eigen, identity, operator_norm, psd_sqrt, real, require_hermitian, trace_distance,
    unitarity_residual, CMatrix, CVector, SpectralPropagator, C64, I,
};
use crate::minkowski::{BlockOperator, DEFAULT_TOL};

/// Outcomes with probability at or below this floor are treated as impossible.
pub const OUTCOME_FLOOR: f64 = 1e-12;

/// Kraus operators `E_0, …, E_n` on the system.
#[derive(Clone, Debug, PartialEq)]
pub struct KrausFamily {
    ops: Vec<CMatrix>,
}

impl KrausFamily {
    pub fn new(ops: Vec<CMatrix>) -> Result<Self> {
        let d = ops
            .first()
            .ok_or_else(|| Error::InvalidParameter("empty Kraus family".into()))?
            .nrows();
        if ops.iter().any(|e| e.shape() != (d, d)) {
            return Err(Error::DimensionMismatch("Kraus operators must share one square shape".into()));
        }
        Ok(Self { ops })
    }

    /// `E_1..E_n` completed by `E_0 = (I − Σ E_i†E_i)^{1/2}`.
    pub fn from_jumps(jumps: &[CMatrix]) -> Result<Self> {
        let first = jumps
            .first()
            .ok_or_else(|| Error::InvalidParameter("no measurement operators".into()))?;
        let d = first.nrows();
        let f = column_of(jumps)?;
        let e0 = psd_sqrt(&(identity(d) - f.adjoint() * &f), DEFAULT_TOL)?;
        let mut ops = Vec::with_capacity(jumps.len() + 1);
        ops.push(e0);
        ops.extend(jumps.iter().cloned());
        Ok(Self { ops })
    }

    pub fn operators(&self) -> &[CMatrix] {
        &self.ops
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.ops[0].nrows()
    }

    /// `‖Σ E_i†E_i − I‖_F`.
    pub fn completeness_residual(&self) -> f64 {
        let sum = self
            .ops
            .iter()
            .fold(CMatrix::zeros(self.dim(), self.dim()), |acc, e| acc + e.adjoint() * e);
        frobenius(&(sum - identity(self.dim())))
    }

    pub fn is_contractive(&self, tol: f64) -> bool {
        self.ops.iter().all(|e| operator_norm(e) <= 1.0 + tol)
    }

    pub fn require_complete(&self, tol: f64) -> Result<()> {
        let residual = self.completeness_residual();
        if residual > tol {
            return Err(Error::IncompleteKraus { residual });
        }
        Ok(())
    }
}

/// Stacks `E_1..E_n` into the column `F` (apparatus-major, `nd × d`).
fn column_of(jumps: &[CMatrix]) -> Result<CMatrix> {
    let d = jumps[0].nrows();
    if jumps.iter().any(|e| e.shape() != (d, d)) {
        return Err(Error::DimensionMismatch("measurement operators must share one square shape".into()));
    }
    let mut f = CMatrix::zeros(jumps.len() * d, d);
    for (i, e) in jumps.iter().enumerate() {
        f.view_mut((i * d, 0), (d, d)).copy_from(e);
    }
    Ok(f)
}

/// `ρ ↦ Σ_i E_i ρ E_i†`.
pub fn decoherence_map(rho: &DensityOperator, family: &KrausFamily) -> Result<DensityOperator> {
    family.require_complete(1e-10)?;
    if family.dim() != rho.dim() {
        return Err(Error::DimensionMismatch("state and Kraus family differ in dimension".into()));
    }
    let out = family
        .ops
        .iter()
        .fold(CMatrix::zeros(rho.dim(), rho.dim()), |acc, e| acc + e * rho.matrix() * e.adjoint());
    DensityOperator::new(out)
}

/// `G = [[(I − F*F)^{1/2}, F*], [F, −(I − FF*)^{1/2}]]` on `𝔥 ⊗ 𝔨` for `F = (E_1, …, E_n)`.
pub fn apparatus_unitary(jumps: &[CMatrix]) -> Result<CMatrix> {
    if jumps.is_empty() {
        return Err(Error::InvalidParameter("no measurement operators".into()));
    }
    let d = jumps[0].nrows();
    let f = column_of(jumps)?;
    let nd = f.nrows();
    let top = psd_sqrt(&(identity(d) - f.adjoint() * &f), DEFAULT_TOL)?;
    let bottom = psd_sqrt(&(identity(nd) - &f * f.adjoint()), DEFAULT_TOL)?;
    let mut g = CMatrix::zeros(nd + d, nd + d);
    g.view_mut((0, 0), (d, d)).copy_from(&top);
    g.view_mut((0, d), (d, nd)).copy_from(&f.adjoint());
    g.view_mut((d, 0), (nd, d)).copy_from(&f);
    g.view_mut((d, d), (nd, nd)).copy_from(&(-bottom));
    Ok(g)
}

/// `Tr_𝔨[G (ρ ⊗ |0⟩⟨0|) G*]`.
pub fn apparatus_marginal(g: &CMatrix, rho: &CMatrix) -> Result<CMatrix> {
    let d = rho.nrows();
    if !g.nrows().is_multiple_of(d) || g.nrows() != g.ncols() {
        return Err(Error::DimensionMismatch("interaction does not act on 𝔥 ⊗ 𝔨".into()));
    }
    let m = g.nrows() / d;
    let column = g.columns(0, d);
    let joint = column * rho * column.adjoint();
    Ok((0..m).fold(CMatrix::zeros(d, d), |acc, a| acc + joint.view((a * d, a * d), (d, d))))
}

/// `G^k_0 = ⟨k|G|0⟩` for every apparatus state `k`.
pub fn outcome_operators(g: &CMatrix, d: usize) -> Result<Vec<CMatrix>> {
    if !g.nrows().is_multiple_of(d) || g.nrows() != g.ncols() {
        return Err(Error::DimensionMismatch("interaction does not act on 𝔥 ⊗ 𝔨".into()));
    }
    Ok((0..g.nrows() / d).map(|k| g.view((k * d, 0), (d, d)).into_owned()).collect())
}

/// `E_kψ / ‖E_kψ‖`.
pub fn posterior(psi: &CVector, k: usize, family: &KrausFamily) -> Result<CVector> {
    let e = family
        .ops
        .get(k)
        .ok_or_else(|| Error::InvalidParameter(format!("outcome {k} is not in the family")))?;
    let out = e * psi;
    let norm = out.norm();
    if norm <= OUTCOME_FLOOR {
        return Err(Error::ImpossibleOutcome {
            outcome: k,
            probability: norm * norm,
        });
    }
    Ok(out / real(norm))
}

fn require_projector(p: &CMatrix, tol: f64) -> Result<()> {
    let residual = frobenius(&(p * p - p)).max(frobenius(&(p - p.adjoint())));
    if residual > tol || !p.is_square() {
        return Err(Error::NotProjector { residual });
    }
    Ok(())
}

/// The projector onto `range(P) ∩ range(M)`, read off the kernel of `(I − P) + (I − M)`.
pub fn inf_projector(p: &CMatrix, m: &CMatrix) -> Result<CMatrix> {
    require_projector(p, 1e-10)?;
    require_projector(m, 1e-10)?;
    if p.shape() != m.shape() {
        return Err(Error::DimensionMismatch("projectors act on different spaces".into()));
    }
    let d = p.nrows();
    let (vals, vecs) = hermitian_eigen(&(identity(d) * real(2.0) - p - m));
    let mut out = CMatrix::zeros(d, d);
    for (k, &v) in vals.iter().enumerate() {
        if v.abs() < 1e-8 {
            let col = vecs.column(k);
            out += col * col.adjoint();
        }
    }
    Ok(out)
}

/// Both sides of the weighted-sum rule `Pr[P] = Pr[P|M]Pr[M] + Pr[P|I−M]Pr[I−M]`.
#[derive(Clone, Debug, Serialize)]
pub struct CausalityReport {
    pub probability: f64,
    pub conditional: f64,
    pub complementary: f64,
    pub memory_probability: f64,
    pub weighted_sum: f64,
    pub defect: f64,
    pub commutator_norm: f64,
}

pub fn causality_check(p: &CMatrix, m: &CMatrix, rho: &DensityOperator) -> Result<CausalityReport> {
    let d = p.nrows();
    if rho.dim() != d {
        return Err(Error::DimensionMismatch("state and projectors differ in dimension".into()));
    }
    let not_m = identity(d) - m;
    let pr = |x: &CMatrix| (rho.matrix() * x).trace().re;
    let joint = pr(&inf_projector(p, m)?);
    let joint_not = pr(&inf_projector(p, &not_m)?);
    let (pm, pn) = (pr(m), pr(&not_m));
    let conditional = if pm > OUTCOME_FLOOR { joint / pm } else { 0.0 };
    let complementary = if pn > OUTCOME_FLOOR { joint_not / pn } else { 0.0 };
    let probability = pr(p);
    let weighted_sum = conditional * pm + complementary * pn;
    Ok(CausalityReport {
        probability,
        conditional,
        complementary,
        memory_probability: pm,
        weighted_sum,
        defect: (probability - weighted_sum).abs(),
        commutator_norm: frobenius(&(p * m - m * p)),
    })
}

/// Output intensities `ν_k = ν‖G^k_0ψ‖²` and the metric they define.
#[derive(Clone, Debug)]
pub struct OutputIntensities {
    pub nu: f64,
    pub rates: Vec<f64>,
    /// `diag(ν_0, ν_1, …)`.
    pub metric: CMatrix,
    pub sum_residual: f64,
    /// `‖ν̌⁻¹G(ψ)*ν̂ G(ψ) − I‖` for `G(ψ) = √ν̂⁻¹ G √ν̌`; absent when some `ν_k` vanishes.
    pub rescaled_unitarity: Option<f64>,
}

pub fn output_intensities(psi: &CVector, g: &CMatrix, nu: f64) -> Result<OutputIntensities> {
    if !(nu > 0.0) || !nu.is_finite() {
        return Err(Error::InvalidIntensity(nu));
    }
    let d = psi.len();
    require_unit(psi)?;
    let residual = unitarity_residual(g);
    if residual > 1e-10 {
        return Err(Error::NotUnitary { residual });
    }
    let rates: Vec<f64> = outcome_operators(g, d)?
        .iter()
        .map(|gk| nu * (gk * psi).norm_squared())
        .collect();
    let m = rates.len();
    let metric = CMatrix::from_diagonal(&CVector::from_iterator(m, rates.iter().map(|&r| real(r))));
    let sum_residual = (rates.iter().sum::<f64>() - nu).abs();
    let rescaled_unitarity = rates.iter().all(|&r| r > OUTCOME_FLOOR).then(|| {
        let lift = |v: &dyn Fn(f64) -> f64| {
            CMatrix::from_diagonal(&CVector::from_iterator(
                m * d,
                (0..m * d).map(|i| real(v(rates[i / d]))),
            ))
        };
        let gpsi = lift(&|r| 1.0 / r.sqrt()) * g * real(nu.sqrt());
        let lhs = gpsi.adjoint() * lift(&|r| r) * &gpsi * real(1.0 / nu);
        frobenius(&(lhs - identity(m * d)))
    });
    Ok(OutputIntensities {
        nu,
        rates,
        metric,
        sum_residual,
        rescaled_unitarity,
    })
}

fn require_unit(psi: &CVector) -> Result<()> {
    let norm = psi.norm();
    if (norm - 1.0).abs() > 1e-12 {
        return Err(Error::Unnormalized { norm });
    }
    Ok(())
}

/// `[[I, 0, −iH], [0, G, 0], [0, 0, I]]`: spontaneous object-apparatus interactions.
pub fn measurement_generator(h: &CMatrix, g: &CMatrix) -> Result<BlockOperator> {
    require_hermitian(h, DEFAULT_TOL)?;
    let d = h.nrows();
    let m = outcome_operators(g, d)?.len();
    let mut op = BlockOperator::identity(m, d);
    op.set_block(0, m + 1, &(h * -I))?;
    for a in 0..m {
        for b in 0..m {
            op.set_block(a + 1, b + 1, &g.view((a * d, b * d), (d, d)).into_owned())?;
        }
    }
    Ok(op)
}

/// `[[I, g*J, g*Jg − iH], [0, G, Jg], [0, 0, I]]` with `J = G − I` and `g = √ν|0⟩`.
pub fn poisson_weyl_generator(h: &CMatrix, g: &CMatrix, nu: f64) -> Result<BlockOperator> {
    if !(nu >= 0.0) || !nu.is_finite() {
        return Err(Error::InvalidIntensity(nu));
    }
    let d = h.nrows();
    let m = outcome_operators(g, d)?.len();
    let mut op = measurement_generator(h, g)?;
    let j = g - identity(m * d);
    let amp = real(nu.sqrt());
    let jg = j.columns(0, d) * amp;
    let gj = j.rows(0, d) * amp;
    op.set_block(0, m + 1, &(jg.rows(0, d) * amp - h * I))?;
    for a in 0..m {
        op.set_block(a + 1, m + 1, &jg.rows(a * d, d).into_owned())?;
        op.set_block(0, a + 1, &gj.columns(a * d, d).into_owned())?;
    }
    Ok(op)
}

/// One recorded detection.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Jump {
    pub t: f64,
    pub k: usize,
    pub p: f64,
}

/// A sampled output trajectory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub seed: u64,
    pub horizon: f64,
    pub jumps: Vec<Jump>,
    pub final_state: Vec<C64>,
}

impl TrajectoryRecord {
    pub fn final_vector(&self) -> CVector {
        CVector::from_column_slice(&self.final_state)
    }
}

/// The counting model `dψ + iHψ dt = (G − I)ψ dn` with detections at intensity `ν`.
#[derive(Clone, Debug)]
pub struct TrajectoryModel {
    h: CMatrix,
    g: CMatrix,
    nu: f64,
    psi0: CVector,
    outcomes: Vec<CMatrix>,
    propagator: SpectralPropagator,
}

impl TrajectoryModel {
    pub fn new(h: CMatrix, g: CMatrix, nu: f64, psi0: CVector) -> Result<Self> {
        require_hermitian(&h, DEFAULT_TOL)?;
        let residual = unitarity_residual(&g);
        if residual > 1e-10 {
            return Err(Error::NotUnitary { residual });
        }
        if !(nu >= 0.0) || !nu.is_finite() {
            return Err(Error::InvalidIntensity(nu));
        }
        if psi0.len() != h.nrows() {
            return Err(Error::DimensionMismatch("initial state and Hamiltonian differ in dimension".into()));
        }
        require_unit(&psi0)?;
        let outcomes = outcome_operators(&g, h.nrows())?;
        let propagator = SpectralPropagator::new(&h);
        Ok(Self {
            h,
            g,
            nu,
            psi0,
            outcomes,
            propagator,
        })
    }

    /// Builds `G` from measurement operators `E_1..E_n`.
    pub fn from_jumps(h: CMatrix, jumps: &[CMatrix], nu: f64, psi0: CVector) -> Result<Self> {
        let g = apparatus_unitary(jumps)?;
        Self::new(h, g, nu, psi0)
    }

    pub fn hamiltonian(&self) -> &CMatrix {
        &self.h
    }

    pub fn interaction(&self) -> &CMatrix {
        &self.g
    }

    pub fn intensity(&self) -> f64 {
        self.nu
    }

    pub fn initial_state(&self) -> &CVector {
        &self.psi0
    }

    pub fn outcome_count(&self) -> usize {
        self.outcomes.len()
    }

    /// `√ν G^k_0` for every outcome: the Lindblad operators of the averaged dynamics.
    pub fn lindblad_operators(&self) -> Vec<CMatrix> {
        self.outcomes.iter().map(|g| g * real(self.nu.sqrt())).collect()
    }

    /// RK4 solution of `dρ = −i[H, ρ]dt + ν(Σ_k G^k_0 ρ G^k_0† − ρ)dt` at each time.
    pub fn reference(&self, times: &[f64], steps_per_unit: usize) -> Result<Vec<CMatrix>> {
        let rho0 = DensityOperator::pure(&self.psi0)?;
        let ls = self.lindblad_operators();
        times
            .iter()
            .map(|&t| {
                if t == 0.0 {
                    return Ok(rho0.matrix().clone());
                }
                let steps = ((t * steps_per_unit as f64).ceil() as usize).max(2);
                lindblad_reference(&self.h, &ls, &rho0, t, steps)
            })
            .collect()
    }

    /// Picks an outcome by cumulative probability; the last possible outcome absorbs rounding.
    fn choose(&self, psi: &CVector, u: f64) -> Result<(usize, f64, CVector)> {
        let candidates: Vec<(CVector, f64)> = self
            .outcomes
            .iter()
            .map(|g| {
                let v = g * psi;
                let p = v.norm_squared();
                (v, p)
            })
            .collect();
        let total: f64 = candidates.iter().map(|c| c.1).sum();
        if total <= OUTCOME_FLOOR {
            return Err(Error::NoOutcome { total });
        }
        let last = candidates
            .iter()
            .rposition(|c| c.1 > OUTCOME_FLOOR)
            .expect("total exceeds the floor");
        let mut acc = 0.0;
        let mut pick = last;
        for (k, c) in candidates.iter().enumerate().take(last) {
            acc += c.1;
            if u < acc && c.1 > OUTCOME_FLOOR {
                pick = k;
                break;
            }
        }
        let (v, p) = candidates[pick].clone();
        Ok((pick, p, v / real(p.sqrt())))
    }

    /// Samples one trajectory on `[0, horizon)`; fully determined by `seed`.
    pub fn sample(&self, horizon: f64, seed: u64) -> Result<TrajectoryRecord> {
        if !(horizon >= 0.0) || !horizon.is_finite() {
            return Err(Error::InvalidParameter(format!("horizon {horizon}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut psi = self.psi0.clone();
        let mut t = 0.0;
        let mut jumps = Vec::new();
        if self.nu > 0.0 {
            let waiting = Exp::new(self.nu).map_err(|_| Error::InvalidIntensity(self.nu))?;
            loop {
                let dt: f64 = waiting.sample(&mut rng);
                if t + dt >= horizon {
                    break;
                }
                psi = self.propagator.apply(dt, &psi);
                t += dt;
                let (k, p, next) = self.choose(&psi, rng.random::<f64>())?;
                psi = next;
                jumps.push(Jump { t, k, p });
            }
        }
        psi = self.propagator.apply(horizon - t, &psi);
        let norm = psi.norm();
        psi /= real(norm);
        Ok(TrajectoryRecord {
            seed,
            horizon,
            jumps,
            final_state: psi.iter().copied().collect(),
        })
    }

    /// `count` trajectories with seeds `seed ⊕ index`, returned in index order.
    pub fn sample_ensemble(
        &self,
        horizon: f64,
        seed: u64,
        count: usize,
        workers: Option<usize>,
    ) -> Result<Vec<TrajectoryRecord>> {
        let run = || {
            (0..count)
                .into_par_iter()
                .map(|i| self.sample(horizon, seed ^ i as u64))
                .collect::<Result<Vec<_>>>()
        };
        match workers {
            Some(n) => rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| Error::InvalidParameter(e.to_string()))?
                .install(run),
            None => run(),
        }
    }

    /// The conditioned state at each (ascending) time, rebuilt from the recorded jumps.
    pub fn replay(&self, record: &TrajectoryRecord, times: &[f64]) -> Result<Vec<CVector>> {
        if times.windows(2).any(|w| w[1] < w[0]) || times.iter().any(|&t| t < 0.0 || t > record.horizon) {
            return Err(Error::InvalidParameter("sample times must be ascending within the horizon".into()));
        }
        let mut out = Vec::with_capacity(times.len());
        let mut psi = self.psi0.clone();
        let mut now = 0.0;
        let mut next = record.jumps.iter().peekable();
        for &t in times {
            while let Some(j) = next.next_if(|j| j.t <= t) {
                let g = self.outcomes.get(j.k).ok_or_else(|| {
                    Error::MismatchedRecords(format!("outcome {} outside the apparatus range", j.k))
                })?;
                let v = g * self.propagator.apply(j.t - now, &psi);
                let norm = v.norm();
                if norm * norm <= OUTCOME_FLOOR {
                    return Err(Error::ImpossibleOutcome {
                        outcome: j.k,
                        probability: norm * norm,
                    });
                }
                psi = v / real(norm);
                now = j.t;
            }
            out.push(self.propagator.apply(t - now, &psi));
        }
        Ok(out)
    }
}

/// `ρ̂(t) = (1/M) Σ |ψ(t)⟩⟨ψ(t)|`, reduced in record order.
pub fn ensemble_average(model: &TrajectoryModel, records: &[TrajectoryRecord], times: &[f64]) -> Result<Vec<CMatrix>> {
    let first = records
        .first()
        .ok_or_else(|| Error::MismatchedRecords("no records".into()))?;
    if records.iter().any(|r| r.horizon != first.horizon) {
        return Err(Error::MismatchedRecords("records cover different horizons".into()));
    }
    let d = model.initial_state().len();
    if records.iter().any(|r| r.final_state.len() != d) {
        return Err(Error::MismatchedRecords("records belong to a different system".into()));
    }
    let states: Vec<Vec<CVector>> = records
        .par_iter()
        .map(|r| model.replay(r, times))
        .collect::<Result<_>>()?;
    let scale = real(1.0 / records.len() as f64);
    Ok((0..times.len())
        .map(|i| {
            states
                .iter()
                .fold(CMatrix::zeros(d, d), |acc, s| acc + &s[i] * s[i].adjoint())
                * scale
        })
        .collect())
}

/// One row of an ensemble summary.
#[derive(Clone, Debug)]
pub struct EnsemblePoint {
    pub time: f64,
    pub rho: CMatrix,
    pub distance: f64,
    /// `½√d · ((1 − Tr ρ̂²)/M)^{1/2}`: the standard error of `ρ̂` carried to trace distance.
    pub error_bar: f64,
}

pub fn ensemble_summary(
    model: &TrajectoryModel,
    records: &[TrajectoryRecord],
    times: &[f64],
    steps_per_unit: usize,
) -> Result<Vec<EnsemblePoint>> {
    let averages = ensemble_average(model, records, times)?;
    let reference = model.reference(times, steps_per_unit)?;
    let d = model.initial_state().len() as f64;
    let m = records.len() as f64;
    Ok(times
        .iter()
        .zip(averages)
        .zip(reference)
        .map(|((&time, rho), exact)| {
            let purity = (&rho * &rho).trace().re;
            EnsemblePoint {
                time,
                distance: trace_distance(&rho, &exact),
                error_bar: 0.5 * d.sqrt() * ((1.0 - purity).max(0.0) / m).sqrt(),
                rho,
            }
        })
        .collect())
}

fn apparatus_states(psi: &ChainVector) -> Result<usize> {
    match psi.fiber() {
        Fiber::Minkowski(m) => Ok(m),
        Fiber::Hilbert(_) => Err(Error::FiberMismatch("measurement filtering acts on Minkowski-fiber vectors".into())),
    }
}

/// `M_tΨ_t`: the first `outcomes.len()` points of `ϑ ∩ [0, t)` are projected onto the
/// recorded apparatus states; chains with fewer points before `t` cannot carry the record.
pub fn filtered_counting_state(psi: &ChainVector, outcomes: &[usize], t: f64) -> Result<ChainVector> {
    let m = apparatus_states(psi)?;
    if let Some(&k) = outcomes.iter().find(|&&k| k >= m) {
        return Err(Error::InvalidParameter(format!("outcome {k} outside {m} apparatus states")));
    }
    let grid = *psi.grid();
    let end = grid.window(0.0, t)?.end;
    let available = end.min(psi.n_max());
    if outcomes.len() > available {
        return Err(Error::OutcomeOverflow {
            outcomes: outcomes.len(),
            available,
        });
    }
    let d = psi.system_dim();
    let f = m + 2;
    let mut out = psi.like();
    for (chain, v) in psi.iter() {
        let before = chain.points().iter().take_while(|&&x| x < end).count();
        if before < outcomes.len() {
            continue;
        }
        let k = chain.len();
        let mut w = v.clone();
        for idx in 0..w.len() {
            let (_, labels) = digits(idx, d, f, k);
            if outcomes.iter().zip(&labels).any(|(&o, &l)| l != o + 1) {
                w[idx] = real(0.0);
            }
        }
        out.accumulate(chain.clone(), w);
    }
    Ok(out)
}

/// `N^t_k`: multiplies each component by the number of points before `t` labelled `k`.
pub fn counting_observable(psi: &ChainVector, k: usize, t: f64) -> Result<ChainVector> {
    let m = apparatus_states(psi)?;
    let end = psi.grid().window(0.0, t)?.end;
    let d = psi.system_dim();
    let mut out = psi.like();
    for (chain, v) in psi.iter() {
        let before = chain.points().iter().take_while(|&&x| x < end).count();
        let mut w = v.clone();
        for idx in 0..w.len() {
            let (_, labels) = digits(idx, d, m + 2, chain.len());
            let count = labels[..before].iter().filter(|&&l| l == k + 1).count();
            w[idx] *= real(count as f64);
        }
        out.accumulate(chain.clone(), w);
    }
    Ok(out)
}

/// `σ₂/σ₁` of a chain value split between the fiber at `pos` and everything else.
pub fn schmidt_ratio(value: &CVector, d: usize, fiber: usize, k: usize, pos: usize) -> f64 {
    let rest = d * pow(fiber, k - 1);
    let mut split = CMatrix::zeros(fiber, rest);
    for idx in 0..value.len() {
        let (s, labels) = digits(idx, d, fiber, k);
        let mut others = labels.clone();
        let a = others.remove(pos);
        split[(a, compose_index(s, &others, fiber))] = value[idx];
    }
    let sv = split.singular_values();
    let mut sorted: Vec<f64> = sv.iter().copied().collect();
    sorted.sort_by(|a, b| b.total_cmp(a));
    match sorted.as_slice() {
        [s1, s2, ..] if *s1 > 0.0 => s2 / s1,
        _ => 0.0,
    }
}
