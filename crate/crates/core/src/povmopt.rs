//! Brute-force POVM optimization: stochastic search for measurements
//! minimizing `tr(G · J_M⁻¹)` over single and n-copy systems.
//!
//! The searched value upper-bounds the true attainable optimum by
//! construction; closed-form bounds from [`crate::bounds`] are hard floors it
//! may approach but never legitimately cross. For a fixed POVM the optimal
//! locally unbiased estimator is recovered in closed form from the classical
//! Fisher identity, so the inner estimator optimization is exact.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::WeightMatrix;
use crate::error::{CoreError, Result};
use crate::families::{extend_iid, FamilyAtPoint, ParamPoint};
use crate::infogeo::classical_fisher;
use crate::matcore::{ComplexMatrix, HermitianOperator};
use crate::tol;

/// Gaussian perturbation scale at sweep `s` is `PERTURB_BASE * PERTURB_DECAY^s`.
pub const PERTURB_BASE: f64 = 0.3;
pub const PERTURB_DECAY: f64 = 0.9;

/// Capacity cap: `n_copies * log2(dim)` may not exceed this.
pub const CAPACITY_QUBITS: f64 = 6.0;

/// A finite-outcome POVM: PSD elements summing to the identity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Povm {
    dim: usize,
    elements: Vec<HermitianOperator>,
}

impl Povm {
    /// Validates every element (hermiticity, PSD within slack) and the
    /// completeness relation.
    pub fn new(dim: usize, elements: Vec<HermitianOperator>) -> Result<Self> {
        if elements.is_empty() {
            return Err(CoreError::ParameterDomain {
                what: "POVM needs at least one element".into(),
            });
        }
        for m in &elements {
            if m.dim() != dim {
                return Err(CoreError::DimensionMismatch {
                    left: m.dim(),
                    right: dim,
                    context: "POVM element dimension",
                });
            }
            let min_eig = m.min_eigenvalue()?;
            if min_eig < tol::POVM_PSD {
                return Err(CoreError::NotPsd {
                    eigenvalue: min_eig,
                });
            }
        }
        Self::check_completeness(dim, &elements)?;
        Ok(Self { dim, elements })
    }

    /// Constructor for elements PSD by construction (rank-1 outer products);
    /// still verifies completeness.
    fn from_psd_parts(dim: usize, elements: Vec<HermitianOperator>) -> Result<Self> {
        Self::check_completeness(dim, &elements)?;
        Ok(Self { dim, elements })
    }

    fn check_completeness(dim: usize, elements: &[HermitianOperator]) -> Result<()> {
        let mut sum = ComplexMatrix::zeros(dim);
        for m in elements {
            sum = sum.add(m.matrix());
        }
        let defect = sum.sub(&ComplexMatrix::identity(dim)).max_abs();
        if defect > tol::POVM_SUM {
            return Err(CoreError::ParameterDomain {
                what: format!("POVM elements sum deviates from identity by {defect:.3e}"),
            });
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn outcomes(&self) -> usize {
        self.elements.len()
    }

    pub fn elements(&self) -> &[HermitianOperator] {
        &self.elements
    }
}

/// Rank-1 outer product `v v†`.
fn outer(v: &[Complex64]) -> HermitianOperator {
    let n = v.len();
    let mut m = ComplexMatrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            m[(i, j)] = v[i] * v[j].conj();
        }
    }
    HermitianOperator::new(m).expect("outer products are Hermitian")
}

/// `v† X v`.
fn quad_form(x: &ComplexMatrix, v: &[Complex64]) -> Complex64 {
    let n = v.len();
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..n {
        let mut row = Complex64::new(0.0, 0.0);
        for j in 0..n {
            row += x[(i, j)] * v[j];
        }
        acc += v[i].conj() * row;
    }
    acc
}

/// Generating vectors for a POVM via the square-root normalization trick:
/// `M_k = (S^{-1/2} v_k)(S^{-1/2} v_k)†` with `S = Σ v_k v_k†`.
#[derive(Debug, Clone)]
struct Generators {
    dim: usize,
    vecs: Vec<Vec<Complex64>>,
}

impl Generators {
    fn random(dim: usize, m: usize, rng: &mut ChaCha8Rng) -> Self {
        let vecs = (0..m)
            .map(|_| {
                (0..dim)
                    .map(|_| Complex64::new(gauss(rng), gauss(rng)))
                    .collect()
            })
            .collect();
        Self { dim, vecs }
    }

    #[cfg(test)]
    fn basis(dim: usize) -> Self {
        let vecs = (0..dim)
            .map(|k| {
                let mut v = vec![Complex64::new(0.0, 0.0); dim];
                v[k] = Complex64::new(1.0, 0.0);
                v
            })
            .collect();
        Self { dim, vecs }
    }

    /// Normalized vectors `w_k = S^{-1/2} v_k`, or `None` when `S` is
    /// singular (degenerate draw).
    fn normalized(&self) -> Option<Vec<Vec<Complex64>>> {
        let n = self.dim;
        let mut s = ComplexMatrix::zeros(n);
        for v in &self.vecs {
            for i in 0..n {
                for j in 0..n {
                    s[(i, j)] += v[i] * v[j].conj();
                }
            }
        }
        let h = HermitianOperator::new(s.hermitian_part()).ok()?;
        let eig = crate::matcore::eig_hermitian(&h).ok()?;
        let lam_max = eig.eigenvalues.last().copied()?;
        if eig.eigenvalues[0] <= tol::SINGULAR_FLOOR_REL * lam_max {
            return None;
        }
        let inv_sqrt = eig.apply(|l| 1.0 / l.sqrt());
        let isq = inv_sqrt.matrix();
        Some(
            self.vecs
                .iter()
                .map(|v| {
                    (0..n)
                        .map(|i| (0..n).map(|j| isq[(i, j)] * v[j]).sum())
                        .collect()
                })
                .collect(),
        )
    }

    fn build(&self) -> Option<Povm> {
        let ws = self.normalized()?;
        let elements = ws.iter().map(|w| outer(w)).collect();
        Povm::from_psd_parts(self.dim, elements).ok()
    }
}

/// Standard normal via Box–Muller.
fn gauss(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = 1.0 - rng.gen::<f64>();
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Draws a random POVM with `m` outcomes: rank-1 pieces from complex Gaussian
/// vectors, completed by the square-root normalization. Deterministic in the
/// seed; retries internally on (probability-zero) degenerate draws.
pub fn random_povm(dim: usize, m: usize, seed: u64) -> Result<Povm> {
    if m < dim {
        // Fewer rank-1 pieces than the dimension cannot resolve the identity.
        return Err(CoreError::ParameterDomain {
            what: format!("{m} rank-1 outcomes cannot span dimension {dim}"),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..10 {
        let gens = Generators::random(dim, m, &mut rng);
        if let Some(povm) = gens.build() {
            return Ok(povm);
        }
    }
    Err(CoreError::SearchFailure {
        reason: "10 consecutive degenerate POVM draws".into(),
    })
}

// ---------------------------------------------------------------------------
// Inner problem: optimal locally unbiased estimator for a fixed POVM
// ---------------------------------------------------------------------------

/// Symmetric positive-definite inverse for d ≤ 3 via adjugate; `None` when
/// a leading minor falls below the positivity floor.
fn spd_inverse(j: &[f64], d: usize) -> Option<Vec<f64>> {
    let scale: f64 = j.iter().fold(0.0f64, |a, &x| a.max(x.abs())).max(1e-300);
    match d {
        1 => {
            if j[0] <= 1e-13 * scale {
                return None;
            }
            Some(vec![1.0 / j[0]])
        }
        2 => {
            let det = j[0] * j[3] - j[1] * j[2];
            if j[0] <= 1e-13 * scale || det <= 1e-13 * scale * scale {
                return None;
            }
            Some(vec![j[3] / det, -j[1] / det, -j[2] / det, j[0] / det])
        }
        3 => {
            let m = |r: usize, c: usize| j[r * 3 + c];
            let c00 = m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1);
            let c01 = m(1, 2) * m(2, 0) - m(1, 0) * m(2, 2);
            let c02 = m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0);
            let det = m(0, 0) * c00 + m(0, 1) * c01 + m(0, 2) * c02;
            let minor2 = m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
            if m(0, 0) <= 1e-13 * scale
                || minor2 <= 1e-13 * scale * scale
                || det <= 1e-13 * scale * scale * scale
            {
                return None;
            }
            let c10 = m(0, 2) * m(2, 1) - m(0, 1) * m(2, 2);
            let c11 = m(0, 0) * m(2, 2) - m(0, 2) * m(2, 0);
            let c12 = m(0, 1) * m(2, 0) - m(0, 0) * m(2, 1);
            let c20 = m(0, 1) * m(1, 2) - m(0, 2) * m(1, 1);
            let c21 = m(0, 2) * m(1, 0) - m(0, 0) * m(1, 2);
            let c22 = m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
            Some(vec![
                c00 / det,
                c10 / det,
                c20 / det,
                c01 / det,
                c11 / det,
                c21 / det,
                c02 / det,
                c12 / det,
                c22 / det,
            ])
        }
        _ => None,
    }
}

fn weighted_inverse_trace(j: &[f64], g: &WeightMatrix, d: usize) -> Option<f64> {
    let inv = spd_inverse(j, d)?;
    let mut acc = 0.0;
    for i in 0..d {
        for k in 0..d {
            acc += g.entry(i, k) * inv[k * d + i];
        }
    }
    Some(acc)
}

/// Minimum of `tr G V` over locally unbiased estimators for this fixed POVM:
/// `tr(G · J_M⁻¹)` by the classical Cramér-Rao equality at finite outcomes.
pub fn inner_value(povm: &Povm, fp: &FamilyAtPoint, g: &WeightMatrix) -> Result<f64> {
    let d = fp.param_dim();
    if g.dim() != d {
        return Err(CoreError::DimensionMismatch {
            left: g.dim(),
            right: d,
            context: "inner_value weight matrix",
        });
    }
    let jm = classical_fisher(povm, fp)?;
    let raw: Vec<f64> = (0..d * d)
        .map(|idx| jm.entry(idx / d, idx % d).re)
        .collect();
    weighted_inverse_trace(&raw, g, d).ok_or_else(|| {
        let min_eig = jm.min_eigenvalue().unwrap_or(f64::NAN);
        CoreError::InfeasiblePovm {
            eigenvalue: min_eig,
        }
    })
}

/// A POVM with an outcome-value assignment that is locally unbiased at `θ0`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LocallyUnbiasedEstimator {
    pub povm: Povm,
    /// One d-vector of estimates per outcome.
    pub values: Vec<Vec<f64>>,
    pub theta0: ParamPoint,
}

/// Recovers the optimal locally unbiased estimator for a fixed POVM:
/// `θ̂_k = θ0 + J_M⁻¹ s_k` with score vectors `s_k`. The achieved `tr G V`
/// equals [`inner_value`] exactly; the construction is cross-checked against
/// that identity before returning.
pub fn recover_estimator(
    povm: &Povm,
    fp: &FamilyAtPoint,
    g: &WeightMatrix,
    theta0: &ParamPoint,
) -> Result<LocallyUnbiasedEstimator> {
    let d = fp.param_dim();
    let jm = classical_fisher(povm, fp)?;
    let raw: Vec<f64> = (0..d * d)
        .map(|idx| jm.entry(idx / d, idx % d).re)
        .collect();
    let inv = spd_inverse(&raw, d).ok_or_else(|| CoreError::InfeasiblePovm {
        eigenvalue: jm.min_eigenvalue().unwrap_or(f64::NAN),
    })?;

    let mut values = Vec::with_capacity(povm.outcomes());
    let mut achieved = vec![0.0; d * d];
    for m in povm.elements() {
        let p = m.trace_product_re(fp.rho.operator());
        let mut theta_hat = theta0.coords.clone();
        if p >= tol::PROB_FLOOR {
            let scores: Vec<f64> = fp
                .derivs
                .iter()
                .map(|dr| m.trace_product_re(dr) / p)
                .collect();
            for i in 0..d {
                let mut shift = 0.0;
                for k in 0..d {
                    shift += inv[i * d + k] * scores[k];
                }
                theta_hat[i] += shift;
                for j in 0..d {
                    let mut shift_j = 0.0;
                    for k in 0..d {
                        shift_j += inv[j * d + k] * scores[k];
                    }
                    achieved[i * d + j] += p * shift * shift_j;
                }
            }
        }
        values.push(theta_hat);
    }

    // V = J⁻¹ must hold to rounding, which makes the achieved risk tr G V
    // coincide with inner_value.
    let mut worst = 0.0f64;
    for i in 0..d * d {
        worst = worst.max((achieved[i] - inv[i]).abs());
    }
    let scale = inv.iter().fold(1.0f64, |a, &x| a.max(x.abs()));
    if worst > 1e-8 * scale {
        return Err(CoreError::SearchFailure {
            reason: format!("estimator covariance deviates from J⁻¹ by {worst:.3e}"),
        });
    }
    let mut risk_gap = 0.0;
    for i in 0..d {
        for j in 0..d {
            risk_gap += g.entry(i, j) * (achieved[j * d + i] - inv[j * d + i]);
        }
    }
    if risk_gap.abs() > 1e-8 * scale {
        return Err(CoreError::SearchFailure {
            reason: format!("achieved risk deviates from tr(G J⁻¹) by {risk_gap:.3e}"),
        });
    }

    Ok(LocallyUnbiasedEstimator {
        povm: povm.clone(),
        values,
        theta0: theta0.clone(),
    })
}

// ---------------------------------------------------------------------------
// Outer problem: stochastic search over POVMs
// ---------------------------------------------------------------------------

/// Search options. `outcomes = None` picks the default `2d + 2` for single
/// copies and `2·dim + 2` for collective searches.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SearchOpts {
    pub outcomes: Option<usize>,
    pub restarts: usize,
    pub iters: usize,
    pub seed: u64,
}

impl Default for SearchOpts {
    fn default() -> Self {
        Self {
            outcomes: None,
            restarts: 32,
            iters: 300,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SearchResult {
    /// Normalized objective `n · tr(G · J_M⁻¹)` of the best POVM found.
    pub best_value: f64,
    pub best_povm: Povm,
    pub estimator: LocallyUnbiasedEstimator,
    pub restarts_used: usize,
    pub iterations: usize,
    pub seed: u64,
    /// Gaussian perturbation schedule `(base, decay)` for reproducibility.
    pub perturb_schedule: (f64, f64),
}

/// Fast objective for generator-parameterized POVMs; must agree with
/// `inner_value` on the built POVM (covered by tests). `None` = infeasible.
fn eval_generators(gens: &Generators, fp: &FamilyAtPoint, g: &WeightMatrix) -> Option<f64> {
    let ws = gens.normalized()?;
    let d = fp.param_dim();
    let rho = fp.rho.operator().matrix();
    let mut jm = vec![0.0; d * d];
    let mut scores = vec![0.0; d];
    for w in &ws {
        let p = quad_form(rho, w).re;
        for (i, deriv) in fp.derivs.iter().enumerate() {
            scores[i] = quad_form(deriv.matrix(), w).re;
        }
        if p < tol::PROB_FLOOR {
            if scores.iter().any(|s| s.abs() > tol::DEGENERATE_SCORE) {
                return None;
            }
            continue;
        }
        for i in 0..d {
            for j in 0..d {
                jm[i * d + j] += scores[i] * scores[j] / p;
            }
        }
    }
    weighted_inverse_trace(&jm, g, d)
}

/// Minimizes `n · tr(G · J_M⁻¹)` over POVMs on the n-copy extension by
/// multi-start Gaussian refinement of the generating vectors.
///
/// Deterministic in `opts.seed`: each restart owns a ChaCha stream keyed by
/// its index, so parallel and serial schedules produce identical results;
/// ties between restarts resolve to the lower index.
pub fn optimize(
    fp: &FamilyAtPoint,
    g: &WeightMatrix,
    n_copies: usize,
    opts: &SearchOpts,
    theta0: &ParamPoint,
) -> Result<SearchResult> {
    let d = fp.param_dim();
    let dim = fp.dim();
    if n_copies == 0 {
        return Err(CoreError::ParameterDomain {
            what: "n_copies must be at least 1".into(),
        });
    }
    let qubits = (dim as f64).log2() * n_copies as f64;
    if qubits > CAPACITY_QUBITS + 1e-9 {
        return Err(CoreError::CapacityExceeded {
            requested: dim.pow(n_copies as u32),
            cap: 1 << (CAPACITY_QUBITS as usize),
        });
    }
    if opts.restarts == 0 || opts.iters == 0 {
        return Err(CoreError::ParameterDomain {
            what: "restarts and iters must be positive".into(),
        });
    }

    let ext = extend_iid(fp, n_copies)?;
    let dim_ext = ext.dim();
    let m = opts.outcomes.unwrap_or(if n_copies == 1 {
        2 * d + 2
    } else {
        2 * dim_ext + 2
    });
    if m < d + 1 {
        return Err(CoreError::ParameterDomain {
            what: format!("{m} outcomes cannot satisfy {d}-parameter unbiasedness"),
        });
    }
    if m < dim_ext {
        return Err(CoreError::ParameterDomain {
            what: format!("{m} rank-1 outcomes cannot span dimension {dim_ext}"),
        });
    }

    let nf = n_copies as f64;
    let results: Vec<Option<(f64, Generators)>> = (0..opts.restarts)
        .into_par_iter()
        .map(|restart| {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            rng.set_stream(restart as u64 + 1);

            let mut gens = Generators::random(dim_ext, m, &mut rng);
            let mut tries = 0;
            let mut value = loop {
                match eval_generators(&gens, &ext, g) {
                    Some(v) => break v,
                    None => {
                        tries += 1;
                        if tries >= 10 {
                            return None;
                        }
                        gens = Generators::random(dim_ext, m, &mut rng);
                    }
                }
            };

            for sweep in 0..opts.iters {
                let scale = PERTURB_BASE * PERTURB_DECAY.powi(sweep as i32);
                for k in 0..m {
                    let saved = gens.vecs[k].clone();
                    for entry in gens.vecs[k].iter_mut() {
                        *entry += Complex64::new(scale * gauss(&mut rng), scale * gauss(&mut rng));
                    }
                    match eval_generators(&gens, &ext, g) {
                        Some(v) if v < value => value = v,
                        _ => gens.vecs[k] = saved,
                    }
                }
            }
            Some((nf * value, gens))
        })
        .collect();

    let mut best: Option<(f64, usize, &Generators)> = None;
    for (idx, r) in results.iter().enumerate() {
        if let Some((v, gens)) = r {
            let better = match best {
                None => true,
                Some((bv, _, _)) => *v < bv,
            };
            if better {
                best = Some((*v, idx, gens));
            }
        }
    }
    let (best_value, _best_idx, best_gens) = best.ok_or_else(|| CoreError::SearchFailure {
        reason: "all restarts produced infeasible POVMs".into(),
    })?;

    let povm = best_gens.build().ok_or_else(|| CoreError::SearchFailure {
        reason: "best generators failed to normalize".into(),
    })?;
    // Revalidate the winner through the strict constructor.
    let povm = Povm::new(dim_ext, povm.elements.clone())?;
    let estimator = recover_estimator(&povm, &ext, g, theta0)?;

    Ok(SearchResult {
        best_value,
        best_povm: povm,
        estimator,
        restarts_used: opts.restarts,
        iterations: opts.iters,
        seed: opts.seed,
        perturb_schedule: (PERTURB_BASE, PERTURB_DECAY),
    })
}

/// Product embedding of a single-copy POVM onto `n` copies: every copy is
/// measured independently, outcomes are the product alphabet. The normalized
/// objective of the embedding equals the single-copy value exactly (classical
/// Fisher additivity), which makes the searched value non-increasing in `n`.
pub fn product_embed(povm: &Povm, n: usize) -> Result<Povm> {
    if n == 0 {
        return Err(CoreError::ParameterDomain {
            what: "embedding needs n >= 1".into(),
        });
    }
    let mut elements: Vec<HermitianOperator> = povm.elements.clone();
    let mut dim = povm.dim;
    for _ in 1..n {
        dim *= povm.dim;
        let mut next = Vec::with_capacity(elements.len() * povm.elements.len());
        for a in &elements {
            for b in &povm.elements {
                next.push(a.kron(b));
            }
        }
        elements = next;
    }
    Povm::from_psd_parts(dim, elements)
}

/// Discretized heterodyne measurement on the truncated Fock space: a square
/// grid of scaled coherent-state projectors `(Δ²/π) |α⟩⟨α|` covering six
/// standard deviations of the thermal outcome spread, plus one remainder
/// element absorbing the leftover resolution of identity.
pub fn heterodyne_povm(fock_dim: usize, mean_photons: f64, grid: usize) -> Result<Povm> {
    if grid < 2 {
        return Err(CoreError::ParameterDomain {
            what: "heterodyne grid needs at least 2 points per axis".into(),
        });
    }
    let sigma = ((mean_photons + 1.0) / 2.0).sqrt();
    let half_width = 6.0 * sigma;
    let step = 2.0 * half_width / (grid as f64 - 1.0);
    let weight = step * step / std::f64::consts::PI;

    let mut elements = Vec::with_capacity(grid * grid + 1);
    let mut sum = ComplexMatrix::zeros(fock_dim);
    let sqrt_w = weight.sqrt();
    for ix in 0..grid {
        for iy in 0..grid {
            let alpha = Complex64::new(
                -half_width + ix as f64 * step,
                -half_width + iy as f64 * step,
            );
            let v = coherent_vector(alpha, fock_dim, sqrt_w);
            let el = outer(&v);
            sum = sum.add(el.matrix());
            elements.push(el);
        }
    }
    let remainder =
        HermitianOperator::new(ComplexMatrix::identity(fock_dim).sub(&sum).hermitian_part())?;
    let min_eig = remainder.min_eigenvalue()?;
    if min_eig < tol::POVM_PSD {
        return Err(CoreError::NotPsd {
            eigenvalue: min_eig,
        });
    }
    elements.push(remainder);
    Povm::from_psd_parts(fock_dim, elements)
}

/// Truncated coherent state `|α⟩` scaled by `amp`.
fn coherent_vector(alpha: Complex64, fock_dim: usize, amp: f64) -> Vec<Complex64> {
    let mut v = Vec::with_capacity(fock_dim);
    let mut c = Complex64::new((-alpha.norm_sqr() / 2.0).exp() * amp, 0.0);
    v.push(c);
    for k in 1..fock_dim {
        c = c * alpha / (k as f64).sqrt();
        v.push(c);
    }
    v
}
