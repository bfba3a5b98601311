//! Logarithmic derivatives and Fisher information matrices.
//!
//! Three Fisher matrices drive the bound computations: the SLD Fisher built
//! from symmetric logarithmic derivatives, the RLD Fisher built from right
//! logarithmic derivatives (faithful states only), and the classical Fisher
//! matrix of a POVM's outcome distribution.

use std::collections::HashMap;
use std::sync::{Arc, OnceLock, RwLock};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::families::{eval_derivs, DensityOperator, FamilyAtPoint, ParamPoint, StateFamily};
use crate::matcore::{eig_hermitian, mat_func, ComplexMatrix, HermitianOperator, MatFunc};
use crate::povmopt::Povm;
use crate::tol;

/// The SLDs `L_i` of a family at a point, solving `½(L_i ρ + ρ L_i) = ∂_i ρ`.
#[derive(Debug, Clone)]
pub struct SldSet {
    pub mats: Vec<HermitianOperator>,
}

impl SldSet {
    pub fn solve(rho: &DensityOperator, derivs: &[HermitianOperator]) -> Result<Self> {
        let mats = derivs
            .iter()
            .map(|d| solve_sld(rho, d))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { mats })
    }
}

/// The RLDs `L̃_i = ∂_i ρ · ρ⁻¹`; generally non-Hermitian.
#[derive(Debug, Clone)]
pub struct RldSet {
    pub mats: Vec<ComplexMatrix>,
}

impl RldSet {
    pub fn solve(rho: &DensityOperator, derivs: &[HermitianOperator]) -> Result<Self> {
        let mats = derivs
            .iter()
            .map(|d| solve_rld(rho, d))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { mats })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FisherKind {
    Sld,
    Rld,
    Classical,
}

/// A `d×d` Fisher information matrix.
///
/// SLD and classical kinds are real symmetric PSD (stored with exact zero
/// imaginary part); the RLD kind is complex Hermitian PSD.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FisherMatrix {
    kind: FisherKind,
    mat: ComplexMatrix,
}

impl FisherMatrix {
    pub fn new(kind: FisherKind, mat: ComplexMatrix) -> Result<Self> {
        let herm = HermitianOperator::new(mat)?;
        let d = herm.dim();
        let mat = match kind {
            FisherKind::Sld | FisherKind::Classical => {
                let mut worst_im = 0.0f64;
                let mut real = ComplexMatrix::zeros(d);
                for i in 0..d {
                    for j in 0..d {
                        let z = herm.matrix()[(i, j)];
                        worst_im = worst_im.max(z.im.abs());
                        real[(i, j)] = Complex64::new(z.re, 0.0);
                    }
                }
                if worst_im > 1e-10 {
                    return Err(CoreError::ParameterDomain {
                        what: format!("{kind:?} Fisher matrix has imaginary part {worst_im:.3e}"),
                    });
                }
                real
            }
            FisherKind::Rld => herm.matrix().clone(),
        };
        let out = Self { kind, mat };
        let min_eig = out.min_eigenvalue()?;
        let scale = out.mat.max_abs().max(1.0);
        if min_eig < -1e-9 * scale {
            return Err(CoreError::NotPsd {
                eigenvalue: min_eig,
            });
        }
        Ok(out)
    }

    pub fn kind(&self) -> FisherKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.mat.dim()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.mat
    }

    pub fn entry(&self, i: usize, j: usize) -> Complex64 {
        self.mat[(i, j)]
    }

    pub fn to_hermitian(&self) -> HermitianOperator {
        HermitianOperator::new(self.mat.clone()).expect("Fisher matrices are Hermitian")
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        self.to_hermitian().min_eigenvalue()
    }

    /// Inverse through the eigenbasis; refuses near-singular matrices.
    pub fn inverse(&self) -> Result<HermitianOperator> {
        mat_func(&self.to_hermitian(), MatFunc::Inv)
    }
}

/// Solves the Lyapunov equation `½(L ρ + ρ L) = drho` for the SLD.
///
/// In the eigenbasis of `ρ`, `L_jk = 2 drho_jk / (λ_j + λ_k)` over index pairs
/// with `λ_j + λ_k` above the singular floor; the off-support block is set to
/// zero (minimal-norm solution). Derivative weight on the off-support block
/// means the family leaves the support and the SLD does not exist.
pub fn solve_sld(rho: &DensityOperator, drho: &HermitianOperator) -> Result<HermitianOperator> {
    let n = rho.dim();
    if drho.dim() != n {
        return Err(CoreError::DimensionMismatch {
            left: drho.dim(),
            right: n,
            context: "solve_sld",
        });
    }
    if drho.trace_re().abs() > tol::LOG_DERIV_RESIDUAL {
        return Err(CoreError::ParameterDomain {
            what: format!("SLD right-hand side has trace {:.3e}", drho.trace_re()),
        });
    }
    let eig = eig_hermitian(rho.operator())?;
    let lam = &eig.eigenvalues;
    let floor = tol::SINGULAR_FLOOR_REL * lam[n - 1].max(0.0);
    let u = &eig.eigenvectors;

    let d_tilde = u.dagger().matmul(drho.matrix()).matmul(u);
    let mut l_tilde = ComplexMatrix::zeros(n);
    for j in 0..n {
        for k in 0..n {
            let denom = lam[j] + lam[k];
            if denom > floor {
                l_tilde[(j, k)] = d_tilde[(j, k)] * (2.0 / denom);
            } else {
                let weight = d_tilde[(j, k)].norm();
                if weight > tol::LOG_DERIV_RESIDUAL {
                    return Err(CoreError::SupportMismatch { weight });
                }
            }
        }
    }
    let l = u.matmul(&l_tilde).matmul(&u.dagger());
    HermitianOperator::new(l.hermitian_part())
}

/// Right logarithmic derivative `L̃ = drho · ρ⁻¹`; requires a faithful state.
pub fn solve_rld(rho: &DensityOperator, drho: &HermitianOperator) -> Result<ComplexMatrix> {
    let n = rho.dim();
    if drho.dim() != n {
        return Err(CoreError::DimensionMismatch {
            left: drho.dim(),
            right: n,
            context: "solve_rld",
        });
    }
    let eig = eig_hermitian(rho.operator())?;
    let lam = &eig.eigenvalues;
    let floor = tol::SINGULAR_FLOOR_REL * lam[n - 1].max(0.0);
    if lam[0] <= floor {
        return Err(CoreError::SingularState {
            eigenvalue: lam[0],
            floor,
        });
    }
    let rho_inv = eig.apply(|l| 1.0 / l);
    Ok(drho.matrix().matmul(rho_inv.matrix()))
}

/// `tr(A† B)`, the Frobenius pairing.
fn conj_dot(a: &ComplexMatrix, b: &ComplexMatrix) -> Complex64 {
    a.entries()
        .iter()
        .zip(b.entries())
        .map(|(x, y)| x.conj() * y)
        .sum()
}

/// SLD Fisher matrix `J_ij = Re tr(ρ L_i L_j)`.
pub fn sld_fisher(rho: &DensityOperator, slds: &SldSet) -> Result<FisherMatrix> {
    let d = slds.mats.len();
    let products: Vec<ComplexMatrix> = slds
        .mats
        .iter()
        .map(|l| rho.operator().matrix().matmul(l.matrix()))
        .collect();
    let mut raw = vec![0.0; d * d];
    for i in 0..d {
        for j in i..d {
            let val = products[i].trace_product(slds.mats[j].matrix()).re;
            let val_t = products[j].trace_product(slds.mats[i].matrix()).re;
            let sym = 0.5 * (val + val_t);
            raw[i * d + j] = sym;
            raw[j * d + i] = sym;
        }
    }
    FisherMatrix::new(FisherKind::Sld, ComplexMatrix::from_real(d, &raw)?)
}

/// RLD Fisher matrix `J̃_ij = tr(L̃_i† L̃_j ρ)`; Hermitian PSD.
pub fn rld_fisher(rho: &DensityOperator, rlds: &RldSet) -> Result<FisherMatrix> {
    let d = rlds.mats.len();
    let weighted: Vec<ComplexMatrix> = rlds
        .mats
        .iter()
        .map(|l| l.matmul(rho.operator().matrix()))
        .collect();
    let mut mat = ComplexMatrix::zeros(d);
    for i in 0..d {
        for j in 0..d {
            mat[(i, j)] = conj_dot(&rlds.mats[i], &weighted[j]);
        }
    }
    FisherMatrix::new(FisherKind::Rld, mat.hermitian_part())
}

/// RLD Fisher matrix through the numerically faithful subspace.
///
/// `J̃_ij = tr(ρ⁻¹ ∂_i ρ ∂_j ρ)` evaluated in the eigenbasis of `ρ`, keeping
/// only eigenvalues above the singular floor. For strictly faithful states
/// this equals [`rld_fisher`]; for states whose truncated spectrum underflows
/// the floor (large Fock truncations) it discards contributions bounded by
/// the floor itself, instead of refusing.
pub fn rld_fisher_projected(fp: &FamilyAtPoint) -> Result<FisherMatrix> {
    let n = fp.dim();
    let d = fp.param_dim();
    let eig = eig_hermitian(fp.rho.operator())?;
    let lam = &eig.eigenvalues;
    let floor = tol::SINGULAR_FLOOR_REL * lam[n - 1].max(0.0);
    let kept: Vec<usize> = (0..n).filter(|&k| lam[k] > floor).collect();
    if kept.is_empty() {
        return Err(CoreError::SingularState {
            eigenvalue: lam[n - 1],
            floor,
        });
    }
    let u = &eig.eigenvectors;

    // Derivatives rotated into the eigenbasis, restricted to the kept block.
    let m = kept.len();
    let mut blocks = Vec::with_capacity(d);
    for deriv in &fp.derivs {
        let full = u.dagger().matmul(deriv.matrix()).matmul(u);
        let mut block = ComplexMatrix::zeros(m);
        for (bi, &gi) in kept.iter().enumerate() {
            for (bj, &gj) in kept.iter().enumerate() {
                block[(bi, bj)] = full[(gi, gj)];
            }
        }
        blocks.push(block);
    }

    let mut mat = ComplexMatrix::zeros(d);
    for i in 0..d {
        for j in 0..d {
            let mut acc = Complex64::new(0.0, 0.0);
            for (bk, &gk) in kept.iter().enumerate() {
                let mut row_dot = Complex64::new(0.0, 0.0);
                for bl in 0..m {
                    row_dot += blocks[i][(bk, bl)] * blocks[j][(bl, bk)];
                }
                acc += row_dot / lam[gk];
            }
            mat[(i, j)] = acc;
        }
    }
    FisherMatrix::new(FisherKind::Rld, mat.hermitian_part())
}

/// Classical Fisher matrix of a POVM's outcome distribution:
/// `(J_M)_ij = Σ_k tr(M_k ∂_i ρ) tr(M_k ∂_j ρ) / p_k`.
///
/// Outcomes with probability below the floor are dropped; if such an outcome
/// still carries a score, information would escape into a zero-probability
/// event and the POVM is rejected.
pub fn classical_fisher(povm: &Povm, fp: &FamilyAtPoint) -> Result<FisherMatrix> {
    if povm.dim() != fp.dim() {
        return Err(CoreError::DimensionMismatch {
            left: povm.dim(),
            right: fp.dim(),
            context: "classical_fisher",
        });
    }
    let d = fp.param_dim();
    let mut raw = vec![0.0; d * d];
    let mut scores = vec![0.0; d];
    for (k, m) in povm.elements().iter().enumerate() {
        let p = m.trace_product_re(fp.rho.operator());
        for (i, deriv) in fp.derivs.iter().enumerate() {
            scores[i] = m.trace_product_re(deriv);
        }
        if p < tol::PROB_FLOOR {
            if let Some(&bad) = scores.iter().find(|s| s.abs() > tol::DEGENERATE_SCORE) {
                return Err(CoreError::DegenerateOutcome {
                    outcome: k,
                    score: bad,
                });
            }
            continue;
        }
        for i in 0..d {
            for j in 0..d {
                raw[i * d + j] += scores[i] * scores[j] / p;
            }
        }
    }
    FisherMatrix::new(FisherKind::Classical, ComplexMatrix::from_real(d, &raw)?)
}

// ---------------------------------------------------------------------------
// Per-(family, point) cache
// ---------------------------------------------------------------------------

/// Everything the bound pipeline needs at one family point.
#[derive(Debug, Clone)]
pub struct PointInfo {
    pub fp: FamilyAtPoint,
    pub slds: SldSet,
    pub j_sld: FisherMatrix,
    /// `None` when the state is not faithful (RLD undefined).
    pub j_rld: Option<FisherMatrix>,
    /// Why `j_rld` is absent, or which route produced it.
    pub rld_note: &'static str,
}

#[derive(PartialEq, Eq, Hash)]
struct CacheKey(Vec<u64>);

impl CacheKey {
    fn new(family: &StateFamily, theta: &ParamPoint) -> Self {
        let mut key = Vec::with_capacity(theta.coords.len() + 3);
        match family {
            StateFamily::QubitFull => key.push(0),
            StateFamily::QubitRFixed { r0 } => {
                key.push(1);
                key.push(r0.to_bits());
            }
            StateFamily::QubitPhiZero => key.push(2),
            StateFamily::DisplacedThermal {
                mean_photons,
                fock_dim,
            } => {
                key.push(3);
                key.push(mean_photons.to_bits());
                key.push(*fock_dim as u64);
            }
        }
        key.extend(theta.coords.iter().map(|x| x.to_bits()));
        Self(key)
    }
}

fn cache() -> &'static RwLock<HashMap<CacheKey, Arc<PointInfo>>> {
    static CACHE: OnceLock<RwLock<HashMap<CacheKey, Arc<PointInfo>>>> = OnceLock::new();
    CACHE.get_or_init(|| RwLock::new(HashMap::new()))
}

/// Evaluates the family, SLDs and Fisher matrices at a point, memoized by
/// value equality on `(family, θ)`. Concurrent readers share cached entries;
/// a miss computes outside the lock and inserts once.
pub fn point_info(family: &StateFamily, theta: &ParamPoint) -> Result<Arc<PointInfo>> {
    let key = CacheKey::new(family, theta);
    if let Some(hit) = cache().read().expect("cache lock").get(&key) {
        return Ok(hit.clone());
    }
    let info = Arc::new(compute_point_info(family, theta)?);
    cache()
        .write()
        .expect("cache lock")
        .entry(key)
        .or_insert_with(|| info.clone());
    Ok(info)
}

fn compute_point_info(family: &StateFamily, theta: &ParamPoint) -> Result<PointInfo> {
    let fp = eval_derivs(family, theta)?;
    let slds = SldSet::solve(&fp.rho, &fp.derivs)?;
    let j_sld = sld_fisher(&fp.rho, &slds)?;

    let (j_rld, rld_note) = match family {
        StateFamily::DisplacedThermal { .. } => {
            // Large Fock truncations legitimately underflow the singular
            // floor; the projected route keeps the bound pipeline alive.
            (Some(rld_fisher_projected(&fp)?), "support-projected")
        }
        _ => match RldSet::solve(&fp.rho, &fp.derivs) {
            Ok(rlds) => (Some(rld_fisher(&fp.rho, &rlds)?), "strict"),
            Err(CoreError::SingularState { .. }) => (None, "state not faithful"),
            Err(e) => return Err(e),
        },
    };

    Ok(PointInfo {
        fp,
        slds,
        j_sld,
        j_rld,
        rld_note,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn r_fixed_equator(r0: f64) -> (DensityOperator, Vec<HermitianOperator>) {
        let fp = eval_derivs(
            &StateFamily::QubitRFixed { r0 },
            &ParamPoint::new(vec![FRAC_PI_2, 0.0]),
        )
        .unwrap();
        (fp.rho, fp.derivs)
    }

    #[test]
    fn sld_on_maximally_mixed_is_twice_deriv() {
        let rho =
            DensityOperator::new(HermitianOperator::from_real(2, &[0.5, 0.0, 0.0, 0.5]).unwrap())
                .unwrap();
        let cval = 0.3;
        let drho = HermitianOperator::from_real(2, &[0.0, cval, cval, 0.0]).unwrap();
        let l = solve_sld(&rho, &drho).unwrap();
        assert!(l.matrix().sub(&drho.matrix().scale_re(2.0)).max_abs() < 1e-12);
    }

    #[test]
    fn sld_golden_r_fixed() {
        let r0 = 0.5;
        let (rho, derivs) = r_fixed_equator(r0);
        let l_theta = solve_sld(&rho, &derivs[0]).unwrap();
        // L_θ = r0 · diag(-1, 1)
        assert!((l_theta.matrix()[(0, 0)].re + r0).abs() < 1e-10);
        assert!((l_theta.matrix()[(1, 1)].re - r0).abs() < 1e-10);
        assert!(l_theta.matrix()[(0, 1)].norm() < 1e-10);
        // L_φ = r0 · [[0, i], [-i, 0]]
        let l_phi = solve_sld(&rho, &derivs[1]).unwrap();
        assert!((l_phi.matrix()[(0, 1)] - c(0.0, r0)).norm() < 1e-10);
        assert!((l_phi.matrix()[(1, 0)] - c(0.0, -r0)).norm() < 1e-10);
        assert!(l_phi.matrix()[(0, 0)].norm() < 1e-10);
    }

    #[test]
    fn sld_lyapunov_residual() {
        let (rho, derivs) = r_fixed_equator(0.8);
        for drho in &derivs {
            let l = solve_sld(&rho, drho).unwrap();
            let lr = l.matrix().matmul(rho.operator().matrix());
            let rl = rho.operator().matrix().matmul(l.matrix());
            let resid = lr.add(&rl).scale_re(0.5).sub(drho.matrix()).max_abs();
            assert!(resid < tol::LOG_DERIV_RESIDUAL);
        }
    }

    #[test]
    fn sld_support_mismatch_on_pure_state_bad_direction() {
        // Pure |0⟩⟨0| with a derivative carrying weight on the kernel diagonal.
        let rho =
            DensityOperator::new(HermitianOperator::from_real(2, &[1.0, 0.0, 0.0, 0.0]).unwrap())
                .unwrap();
        let drho = HermitianOperator::from_real(2, &[1.0, 0.0, 0.0, -1.0]).unwrap();
        assert!(matches!(
            solve_sld(&rho, &drho),
            Err(CoreError::SupportMismatch { .. })
        ));
    }

    #[test]
    fn sld_pure_state_tangential_ok() {
        // r0 = 1 equatorial state with the family's own derivatives.
        let (rho, derivs) = r_fixed_equator(1.0);
        let l_theta = solve_sld(&rho, &derivs[0]).unwrap();
        assert!((l_theta.matrix()[(0, 0)].re + 1.0).abs() < 1e-10);
        assert!((l_theta.matrix()[(1, 1)].re - 1.0).abs() < 1e-10);
    }

    #[test]
    fn rld_on_maximally_mixed() {
        let rho =
            DensityOperator::new(HermitianOperator::from_real(2, &[0.5, 0.0, 0.0, 0.5]).unwrap())
                .unwrap();
        let drho = HermitianOperator::from_real(2, &[0.1, 0.2, 0.2, -0.1]).unwrap();
        let l = solve_rld(&rho, &drho).unwrap();
        assert!(l.sub(&drho.matrix().scale_re(2.0)).max_abs() < 1e-12);
    }

    #[test]
    fn rld_diagonal_case() {
        let rho =
            DensityOperator::new(HermitianOperator::from_real(2, &[0.75, 0.0, 0.0, 0.25]).unwrap())
                .unwrap();
        let drho = HermitianOperator::from_real(2, &[0.25, 0.0, 0.0, -0.25]).unwrap();
        let l = solve_rld(&rho, &drho).unwrap();
        assert!((l[(0, 0)].re - 1.0 / 3.0).abs() < 1e-12);
        assert!((l[(1, 1)].re + 1.0).abs() < 1e-12);
    }

    #[test]
    fn rld_rejects_pure_state() {
        let rho =
            DensityOperator::new(HermitianOperator::from_real(2, &[1.0, 0.0, 0.0, 0.0]).unwrap())
                .unwrap();
        let drho = HermitianOperator::from_real(2, &[0.0, 0.5, 0.5, 0.0]).unwrap();
        assert!(matches!(
            solve_rld(&rho, &drho),
            Err(CoreError::SingularState { .. })
        ));
    }

    #[test]
    fn rld_residual_on_random_faithful_states() {
        use rand::rngs::StdRng;
        use rand::{Rng, SeedableRng};
        let mut rng = StdRng::seed_from_u64(17);
        for _ in 0..100 {
            let family = StateFamily::QubitRFixed {
                r0: rng.gen_range(0.1..0.9),
            };
            let theta = ParamPoint::new(vec![
                rng.gen_range(0.2..TAU_TEST - 0.2),
                rng.gen_range(0.2..TAU_TEST - 0.2),
            ]);
            let fp = eval_derivs(&family, &theta).unwrap();
            for drho in &fp.derivs {
                let l = solve_rld(&fp.rho, drho).unwrap();
                let resid = l
                    .matmul(fp.rho.operator().matrix())
                    .sub(drho.matrix())
                    .max_abs();
                assert!(resid < tol::LOG_DERIV_RESIDUAL);
            }
        }
    }

    const TAU_TEST: f64 = std::f64::consts::TAU;

    #[test]
    fn sld_fisher_r_fixed_is_r0_squared_identity() {
        let r0 = 0.5;
        let (rho, derivs) = r_fixed_equator(r0);
        let slds = SldSet::solve(&rho, &derivs).unwrap();
        let j = sld_fisher(&rho, &slds).unwrap();
        assert!((j.entry(0, 0).re - r0 * r0).abs() < 1e-12);
        assert!((j.entry(1, 1).re - r0 * r0).abs() < 1e-12);
        assert!(j.entry(0, 1).norm() < 1e-12);
    }

    #[test]
    fn sld_fisher_single_param_mixed() {
        // ρ = I/2, L = 2D with D = σ_x/2: J = tr(ρ 4D²) = 1.
        let rho =
            DensityOperator::new(HermitianOperator::from_real(2, &[0.5, 0.0, 0.0, 0.5]).unwrap())
                .unwrap();
        let drho = HermitianOperator::from_real(2, &[0.0, 0.5, 0.5, 0.0]).unwrap();
        let slds = SldSet::solve(&rho, &[drho]).unwrap();
        let j = sld_fisher(&rho, &slds).unwrap();
        assert!((j.entry(0, 0).re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rld_fisher_pauli_off_diagonal_is_imaginary() {
        // L̃_1 = σ_x, L̃_2 = σ_y: σ_x σ_y = iσ_z, so J̃_12 = i·tr(σ_z ρ) —
        // purely imaginary, zero at the maximally mixed state and r_z·i for
        // ρ = ½(I + r_z σ_z).
        let mixed =
            DensityOperator::new(HermitianOperator::from_real(2, &[0.5, 0.0, 0.0, 0.5]).unwrap())
                .unwrap();
        let rz = 0.5;
        let tilted = DensityOperator::new(
            HermitianOperator::from_real(2, &[0.5 * (1.0 + rz), 0.0, 0.0, 0.5 * (1.0 - rz)])
                .unwrap(),
        )
        .unwrap();
        let sx =
            ComplexMatrix::from_rows(&[&[c(0.0, 0.0), c(1.0, 0.0)], &[c(1.0, 0.0), c(0.0, 0.0)]])
                .unwrap();
        let sy =
            ComplexMatrix::from_rows(&[&[c(0.0, 0.0), c(0.0, -1.0)], &[c(0.0, 1.0), c(0.0, 0.0)]])
                .unwrap();
        let rlds = RldSet {
            mats: vec![sx.clone(), sy.clone()],
        };
        let j0 = rld_fisher(&mixed, &rlds).unwrap();
        assert!(j0.entry(0, 1).norm() < 1e-12);
        let j = rld_fisher(&tilted, &rlds).unwrap();
        assert!(j.entry(0, 1).re.abs() < 1e-12);
        assert!((j.entry(0, 1).im - rz).abs() < 1e-12);
        assert!((j.entry(1, 0).im + rz).abs() < 1e-12);
        // Diagonals tr(σ² ρ) = 1.
        assert!((j.entry(0, 0).re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rld_fisher_classical_family_matches_sld() {
        // All-diagonal (commuting) single-parameter family: J̃ = J.
        let rho =
            DensityOperator::new(HermitianOperator::from_real(2, &[0.7, 0.0, 0.0, 0.3]).unwrap())
                .unwrap();
        let drho = HermitianOperator::from_real(2, &[0.2, 0.0, 0.0, -0.2]).unwrap();
        let slds = SldSet::solve(&rho, std::slice::from_ref(&drho)).unwrap();
        let rlds = RldSet::solve(&rho, std::slice::from_ref(&drho)).unwrap();
        let j = sld_fisher(&rho, &slds).unwrap();
        let jt = rld_fisher(&rho, &rlds).unwrap();
        assert!((j.entry(0, 0).re - jt.entry(0, 0).re).abs() < 1e-12);
        assert!(jt.entry(0, 0).im.abs() < 1e-12);
    }

    #[test]
    fn projected_rld_matches_strict_on_faithful_state() {
        let family = StateFamily::QubitRFixed { r0: 0.6 };
        let theta = ParamPoint::new(vec![1.1, 2.3]);
        let fp = eval_derivs(&family, &theta).unwrap();
        let rlds = RldSet::solve(&fp.rho, &fp.derivs).unwrap();
        let strict = rld_fisher(&fp.rho, &rlds).unwrap();
        let projected = rld_fisher_projected(&fp).unwrap();
        let diff = strict.matrix().sub(projected.matrix()).max_abs();
        assert!(diff < 1e-10, "projected vs strict diff {diff:e}");
    }

    #[test]
    fn classical_fisher_sigma_z_projectors() {
        let r0 = 0.5;
        let fp = eval_derivs(
            &StateFamily::QubitRFixed { r0 },
            &ParamPoint::new(vec![FRAC_PI_2, 0.0]),
        )
        .unwrap();
        // θ-parameter sub-problem only.
        let fp_theta = FamilyAtPoint {
            rho: fp.rho.clone(),
            derivs: vec![fp.derivs[0].clone()],
        };
        let povm = Povm::new(
            2,
            vec![
                HermitianOperator::from_real(2, &[1.0, 0.0, 0.0, 0.0]).unwrap(),
                HermitianOperator::from_real(2, &[0.0, 0.0, 0.0, 1.0]).unwrap(),
            ],
        )
        .unwrap();
        let j = classical_fisher(&povm, &fp_theta).unwrap();
        assert!((j.entry(0, 0).re - r0 * r0).abs() < 1e-12);
    }

    #[test]
    fn classical_fisher_trivial_povm_is_zero() {
        let fp = eval_derivs(
            &StateFamily::QubitRFixed { r0: 0.5 },
            &ParamPoint::new(vec![FRAC_PI_2, 0.0]),
        )
        .unwrap();
        let povm = Povm::new(2, vec![HermitianOperator::identity(2)]).unwrap();
        let j = classical_fisher(&povm, &fp).unwrap();
        assert!(j.matrix().max_abs() < 1e-15);
    }

    #[test]
    fn classical_fisher_dominated_by_sld_fisher() {
        use crate::povmopt::random_povm;
        use rand::rngs::StdRng;
        use rand::{Rng, SeedableRng};
        let mut rng = StdRng::seed_from_u64(23);
        for trial in 0..200 {
            let r0 = rng.gen_range(0.2..0.95);
            let family = StateFamily::QubitRFixed { r0 };
            let theta = ParamPoint::new(vec![
                rng.gen_range(0.3..TAU_TEST - 0.3),
                rng.gen_range(0.3..TAU_TEST - 0.3),
            ]);
            let fp = eval_derivs(&family, &theta).unwrap();
            let slds = SldSet::solve(&fp.rho, &fp.derivs).unwrap();
            let j = sld_fisher(&fp.rho, &slds).unwrap();
            let povm = random_povm(2, rng.gen_range(3..7), rng.gen()).unwrap();
            let jm = classical_fisher(&povm, &fp).unwrap();
            let gap = j.to_hermitian().sub(&jm.to_hermitian());
            let min_eig = gap.min_eigenvalue().unwrap();
            assert!(
                min_eig >= -1e-9,
                "trial {trial}: J - J_M eigenvalue {min_eig:e}"
            );
        }
    }

    #[test]
    fn fisher_additivity_under_iid_extension() {
        use crate::families::extend_iid;
        let family = StateFamily::QubitFull;
        let theta = ParamPoint::new(vec![0.55, 1.2, 0.7]);
        let fp = eval_derivs(&family, &theta).unwrap();
        let slds = SldSet::solve(&fp.rho, &fp.derivs).unwrap();
        let j1 = sld_fisher(&fp.rho, &slds).unwrap();
        for n in [2usize, 3] {
            let ext = extend_iid(&fp, n).unwrap();
            let slds_n = SldSet::solve(&ext.rho, &ext.derivs).unwrap();
            let jn = sld_fisher(&ext.rho, &slds_n).unwrap();
            let diff = jn.matrix().sub(&j1.matrix().scale_re(n as f64)).max_abs();
            assert!(diff < 1e-8, "n = {n}: additivity gap {diff:e}");
        }
    }

    #[test]
    fn reparameterization_covariance() {
        // Scaling parameter i by c rescales row/column i of J by c.
        let family = StateFamily::QubitRFixed { r0: 0.7 };
        let theta = ParamPoint::new(vec![1.0, 0.8]);
        let fp = eval_derivs(&family, &theta).unwrap();
        let c_scale = 2.5;
        let scaled = FamilyAtPoint {
            rho: fp.rho.clone(),
            derivs: vec![fp.derivs[0].scale(c_scale), fp.derivs[1].clone()],
        };
        let j = sld_fisher(&fp.rho, &SldSet::solve(&fp.rho, &fp.derivs).unwrap()).unwrap();
        let js = sld_fisher(
            &scaled.rho,
            &SldSet::solve(&scaled.rho, &scaled.derivs).unwrap(),
        )
        .unwrap();
        assert!((js.entry(0, 0).re - c_scale * c_scale * j.entry(0, 0).re).abs() < 1e-10);
        assert!((js.entry(0, 1).re - c_scale * j.entry(0, 1).re).abs() < 1e-10);
        assert!((js.entry(1, 1).re - j.entry(1, 1).re).abs() < 1e-10);
    }

    #[test]
    fn point_info_cache_hits_are_shared() {
        let family = StateFamily::QubitRFixed { r0: 0.5 };
        let theta = ParamPoint::new(vec![FRAC_PI_2, 0.0]);
        let a = point_info(&family, &theta).unwrap();
        let b = point_info(&family, &theta).unwrap();
        assert!(Arc::ptr_eq(&a, &b));
        assert_eq!(a.rld_note, "strict");
        assert!(a.j_rld.is_some());
    }

    #[test]
    fn point_info_pure_state_has_no_rld() {
        let family = StateFamily::QubitRFixed { r0: 1.0 };
        let theta = ParamPoint::new(vec![FRAC_PI_2, 0.0]);
        let info = point_info(&family, &theta).unwrap();
        assert!(info.j_rld.is_none());
    }

    #[test]
    fn density_must_be_unit_trace() {
        let res =
            DensityOperator::new(HermitianOperator::from_real(2, &[0.6, 0.0, 0.0, 0.6]).unwrap());
        assert!(res.is_err());
    }
}
