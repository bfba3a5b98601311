//! The three Cramér-Rao-type bound levels and the covariance frontiers.
//!
//! * `C(G)`: attainable single-copy bound, computed for qubit families by the
//!   trace-square-root formula `C(G) = (tr √(J^{-1/2} G J^{-1/2}))²`.
//! * `C_A(G)`: asymptotically attainable bound over collective measurements,
//!   dispatched per family.
//! * `C_R(G)`: RLD bound, in closed form
//!   `tr(Re(J̃⁻¹) G) + ‖√G · Im(J̃⁻¹) · √G‖₁`, with the defining
//!   maximization over Hermitian extensions of `G` retained as an
//!   independent oracle.
//!
//! Frontier sets trace the Pareto-minimal covariance boundaries; their
//! minima reproduce the corresponding scalar bounds.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::families::{ParamPoint, StateFamily};
use crate::infogeo::{point_info, FisherKind, FisherMatrix};
use crate::matcore::{
    eig_hermitian, mat_func, trace_abs, ComplexMatrix, HermitianOperator, MatFunc,
};
use crate::tol;

/// Dense real symmetric matrix (d ≤ 3 in practice).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealSymMatrix {
    dim: usize,
    entries: Vec<f64>,
}

impl RealSymMatrix {
    pub fn from_entries(dim: usize, entries: Vec<f64>) -> Result<Self> {
        if entries.len() != dim * dim {
            return Err(CoreError::DimensionMismatch {
                left: entries.len(),
                right: dim * dim,
                context: "RealSymMatrix::from_entries",
            });
        }
        if entries.iter().any(|x| !x.is_finite()) {
            return Err(CoreError::ParameterDomain {
                what: "matrix entries must be finite".into(),
            });
        }
        let mut worst = 0.0f64;
        for i in 0..dim {
            for j in (i + 1)..dim {
                worst = worst.max((entries[i * dim + j] - entries[j * dim + i]).abs());
            }
        }
        if worst > tol::HERMITICITY {
            return Err(CoreError::NotHermitian {
                max_dev: worst,
                tol: tol::HERMITICITY,
            });
        }
        let mut sym = entries;
        for i in 0..dim {
            for j in (i + 1)..dim {
                let avg = 0.5 * (sym[i * dim + j] + sym[j * dim + i]);
                sym[i * dim + j] = avg;
                sym[j * dim + i] = avg;
            }
        }
        Ok(Self { dim, entries: sym })
    }

    pub fn identity(dim: usize) -> Self {
        let mut entries = vec![0.0; dim * dim];
        for i in 0..dim {
            entries[i * dim + i] = 1.0;
        }
        Self { dim, entries }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.dim + j]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn to_hermitian(&self) -> HermitianOperator {
        HermitianOperator::from_real(self.dim, &self.entries)
            .expect("symmetric real matrix is Hermitian")
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        self.to_hermitian().min_eigenvalue()
    }

    fn from_hermitian(h: &HermitianOperator) -> Self {
        let d = h.dim();
        let entries = (0..d * d)
            .map(|idx| h.matrix()[(idx / d, idx % d)].re)
            .collect();
        Self { dim: d, entries }
    }
}

/// Weight matrix `G`: real symmetric PSD, defining the scalar risk `tr G V`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightMatrix {
    mat: RealSymMatrix,
}

impl WeightMatrix {
    pub fn new(mat: RealSymMatrix) -> Result<Self> {
        let min_eig = mat.min_eigenvalue()?;
        if min_eig < -1e-12 {
            return Err(CoreError::NotPsd {
                eigenvalue: min_eig,
            });
        }
        Ok(Self { mat })
    }

    pub fn from_entries(dim: usize, entries: Vec<f64>) -> Result<Self> {
        Self::new(RealSymMatrix::from_entries(dim, entries)?)
    }

    /// The `(g1, g2, g3)` coordinates of a 2×2 weight:
    /// `G = [[g1+g2, g3], [g3, g1−g2]]`.
    pub fn from_g_coords(g1: f64, g2: f64, g3: f64) -> Result<Self> {
        Self::from_entries(2, vec![g1 + g2, g3, g3, g1 - g2])
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            mat: RealSymMatrix::identity(dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.mat.dim()
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.mat.entry(i, j)
    }

    pub fn matrix(&self) -> &RealSymMatrix {
        &self.mat
    }

    pub fn to_hermitian(&self) -> HermitianOperator {
        self.mat.to_hermitian()
    }

    pub fn scale(&self, c: f64) -> Result<Self> {
        Self::from_entries(self.dim(), self.mat.entries.iter().map(|x| c * x).collect())
    }

    /// Inverse of [`Self::from_g_coords`] for 2×2 weights.
    pub fn g_coords(&self) -> Option<(f64, f64, f64)> {
        if self.dim() != 2 {
            return None;
        }
        let g1 = 0.5 * (self.entry(0, 0) + self.entry(1, 1));
        let g2 = 0.5 * (self.entry(0, 0) - self.entry(1, 1));
        let g3 = self.entry(0, 1);
        Some((g1, g2, g3))
    }

    fn is_pd(&self) -> Result<bool> {
        let min_eig = self.mat.min_eigenvalue()?;
        let scale = self.mat.entries.iter().fold(1.0f64, |a, &x| a.max(x.abs()));
        Ok(min_eig > 1e-12 * scale)
    }
}

/// `tr(A G)` for a Hermitian `A` whose relevant part is real.
fn trace_with_weight(a: &HermitianOperator, g: &WeightMatrix) -> f64 {
    let d = g.dim();
    let mut acc = 0.0;
    for i in 0..d {
        for j in 0..d {
            acc += a.matrix()[(i, j)].re * g.entry(j, i);
        }
    }
    acc
}

/// Splits a Hermitian matrix into its real symmetric and real antisymmetric
/// (imaginary) parts: `K = R + iS`.
fn split_hermitian(k: &HermitianOperator) -> (RealSymMatrix, Vec<f64>) {
    let d = k.dim();
    let mut re = vec![0.0; d * d];
    let mut im = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..d {
            re[i * d + j] = k.matrix()[(i, j)].re;
            im[i * d + j] = k.matrix()[(i, j)].im;
        }
    }
    (
        RealSymMatrix::from_entries(d, re).expect("real part of Hermitian is symmetric"),
        im,
    )
}

/// Closed-form RLD bound:
/// `C_R(G) = tr(Re(J̃⁻¹) G) + ‖√G · Im(J̃⁻¹) · √G‖₁`.
///
/// This is the value of the maximization of `tr J̃⁻¹ G'` over Hermitian
/// `G' ⪰ 0` agreeing with `G` on real symmetric matrices; [`rld_bound_oracle`]
/// performs that maximization numerically and must agree to 1e-6.
pub fn rld_bound_closed(j_rld: &FisherMatrix, g: &WeightMatrix) -> Result<f64> {
    let d = j_rld.dim();
    if g.dim() != d {
        return Err(CoreError::DimensionMismatch {
            left: g.dim(),
            right: d,
            context: "rld_bound_closed",
        });
    }
    let k = j_rld.inverse()?;
    let (re, im) = split_hermitian(&k);
    let mut term1 = 0.0;
    for i in 0..d {
        for j in 0..d {
            term1 += re.entry(i, j) * g.entry(j, i);
        }
    }

    let sqrt_g = mat_func(&g.to_hermitian(), MatFunc::Sqrt)?;
    let s = ComplexMatrix::from_real(d, &im)?;
    let sandwiched = sqrt_g.matrix().matmul(&s).matmul(sqrt_g.matrix());
    // √G·Im(K)·√G is real antisymmetric; i times it is Hermitian with the
    // same singular values.
    let herm = HermitianOperator::new(sandwiched.scale(Complex64::new(0.0, 1.0)))?;
    Ok(term1 + trace_abs(&herm)?)
}

/// Index pairs `(i, j)`, `i < j`, spanning the antisymmetric coordinates.
fn antisym_pairs(d: usize) -> Vec<(usize, usize)> {
    let mut pairs = Vec::new();
    for i in 0..d {
        for j in (i + 1)..d {
            pairs.push((i, j));
        }
    }
    pairs
}

/// Numerical maximization oracle for the RLD bound.
///
/// Parameterizes the feasible extensions as `G' = G + iA` with `A` real
/// antisymmetric (agreement on symmetric matrices pins the real part to `G`),
/// and ascends the objective `tr(J̃⁻¹ G')` over the boundary of the feasible
/// spectrahedron `{A : G + iA ⪰ 0}`: a boundary point in unit direction `D`
/// sits at stretch `t*(D) = 1 / λ_max(i · G^{-1/2} A(D) G^{-1/2})`, so the
/// search runs multi-start hill climbing over unit directions in the
/// `d(d−1)/2` antisymmetric coordinates. Requires `G > 0`.
pub fn rld_bound_oracle(j_rld: &FisherMatrix, g: &WeightMatrix) -> Result<f64> {
    let d = j_rld.dim();
    if g.dim() != d {
        return Err(CoreError::DimensionMismatch {
            left: g.dim(),
            right: d,
            context: "rld_bound_oracle",
        });
    }
    let k = j_rld.inverse()?;
    let (re, im) = split_hermitian(&k);
    let mut base = 0.0;
    for i in 0..d {
        for j in 0..d {
            base += re.entry(i, j) * g.entry(j, i);
        }
    }
    let pairs = antisym_pairs(d);
    if pairs.is_empty() {
        // One-parameter case: no antisymmetric freedom.
        return Ok(base);
    }
    if !g.is_pd()? {
        return Err(CoreError::ParameterDomain {
            what: "oracle requires a positive-definite weight matrix".into(),
        });
    }

    // Objective is linear in the antisymmetric coordinates:
    // tr(K(G + iA)) = base - tr(Im(K)·A) = base + Σ_{i<j} 2·Im(K)_ij A_ij.
    let grad: Vec<f64> = pairs.iter().map(|&(i, j)| 2.0 * im[i * d + j]).collect();
    let grad_norm = grad.iter().map(|x| x * x).sum::<f64>().sqrt();
    if grad_norm < 1e-15 {
        return Ok(base);
    }

    let g_inv_sqrt = mat_func(&g.to_hermitian(), MatFunc::InvSqrt)?;

    // Boundary value in unit direction `dir`.
    let boundary_value = |dir: &[f64]| -> Result<f64> {
        let mut a = ComplexMatrix::zeros(d);
        for (c, &(i, j)) in pairs.iter().enumerate() {
            a[(i, j)] = Complex64::new(dir[c], 0.0);
            a[(j, i)] = Complex64::new(-dir[c], 0.0);
        }
        let m = g_inv_sqrt
            .matrix()
            .matmul(&a)
            .matmul(g_inv_sqrt.matrix())
            .scale(Complex64::new(0.0, 1.0));
        let eig = eig_hermitian(&HermitianOperator::new(m)?)?;
        let mu_max = eig
            .eigenvalues
            .iter()
            .fold(0.0f64, |acc, &l| acc.max(l.abs()));
        if mu_max < 1e-300 {
            return Ok(base);
        }
        let stretch = 1.0 / mu_max;
        let lin: f64 = grad.iter().zip(dir).map(|(gc, dc)| gc * dc).sum();
        Ok(base + stretch * lin)
    };

    let normalize = |v: &mut Vec<f64>| {
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 0.0 {
            v.iter_mut().for_each(|x| *x /= n);
        }
    };

    // Multi-start: the gradient direction plus a deterministic low-discrepancy
    // spread of the direction sphere.
    let nc = pairs.len();
    let mut starts: Vec<Vec<f64>> = Vec::new();
    let mut g_dir = grad.clone();
    normalize(&mut g_dir);
    starts.push(g_dir);
    let spread = if nc == 1 { 1 } else { 24 };
    for s in 0..spread {
        let mut v: Vec<f64> = (0..nc)
            .map(|c| {
                let t = (s * nc + c + 1) as f64;
                (t * 0.754_877_666).fract() * 2.0 - 1.0
            })
            .collect();
        if v.iter().all(|x| x.abs() < 1e-12) {
            v[0] = 1.0;
        }
        normalize(&mut v);
        starts.push(v.clone());
        let neg = v.iter().map(|x| -x).collect();
        starts.push(neg);
    }

    let mut best = f64::NEG_INFINITY;
    let max_iters = 4000;
    let mut total_iters = 0;
    let mut converged = false;
    for mut dir in starts {
        let mut val = boundary_value(&dir)?;
        let mut step = 0.5;
        while step > 1e-9 && total_iters < max_iters {
            total_iters += 1;
            let mut improved = false;
            for c in 0..nc {
                for sign in [1.0f64, -1.0] {
                    let mut cand = dir.clone();
                    cand[c] += sign * step;
                    normalize(&mut cand);
                    let cv = boundary_value(&cand)?;
                    if cv > val + 1e-15 {
                        val = cv;
                        dir = cand;
                        improved = true;
                    }
                }
            }
            if !improved {
                step *= 0.5;
            }
        }
        if step <= 1e-9 {
            converged = true;
        }
        best = best.max(val);
    }
    if !converged {
        return Err(CoreError::OracleFailure {
            iters: total_iters,
            best,
        });
    }
    Ok(best)
}

/// Attainable single-copy bound for qubit families (full model and its
/// 2-parameter subfamilies): `C(G) = (tr √B)²` with `B = J^{-1/2} G J^{-1/2}`,
/// together with the optimizing weight `W* = √B / tr √B` used by the
/// covariance frontier.
pub fn qubit_attainable_c(j_sld: &FisherMatrix, g: &WeightMatrix) -> Result<(f64, RealSymMatrix)> {
    let d = j_sld.dim();
    if g.dim() != d {
        return Err(CoreError::DimensionMismatch {
            left: g.dim(),
            right: d,
            context: "qubit_attainable_c",
        });
    }
    if j_sld.kind() != FisherKind::Sld && j_sld.kind() != FisherKind::Classical {
        return Err(CoreError::ParameterDomain {
            what: "attainable bound needs a real (SLD) Fisher matrix".into(),
        });
    }
    let j_inv_sqrt = mat_func(&j_sld.to_hermitian(), MatFunc::InvSqrt)?;
    let b = HermitianOperator::new(
        j_inv_sqrt
            .matrix()
            .matmul(g.to_hermitian().matrix())
            .matmul(j_inv_sqrt.matrix())
            .hermitian_part(),
    )?;
    let sqrt_b = mat_func(&b, MatFunc::Sqrt)?;
    let tr = sqrt_b.trace_re();
    if tr <= 0.0 {
        return Err(CoreError::ParameterDomain {
            what: "weight matrix must be nonzero".into(),
        });
    }
    let w_star = RealSymMatrix::from_hermitian(&sqrt_b.scale(1.0 / tr));
    Ok((tr * tr, w_star))
}

/// `tr(J⁻¹ G)`.
fn sld_inverse_trace(j_sld: &FisherMatrix, g: &WeightMatrix) -> Result<f64> {
    let inv = j_sld.inverse()?;
    Ok(trace_with_weight(&inv, g))
}

/// The asymptotically attainable bound, dispatched per family:
/// the full qubit model and the displaced-thermal model sit at the RLD bound,
/// the fixed-radius subfamily has `C_A = C_R` in closed form (collapsing to
/// `C(G)` in the pure limit), and the `φ = 0` subfamily asymptotically
/// attains the SLD bound `tr J⁻¹ G`.
pub fn asymptotic_c_a(
    family: &StateFamily,
    j_sld: &FisherMatrix,
    j_rld: Option<&FisherMatrix>,
    g: &WeightMatrix,
    bloch_radius: Option<f64>,
) -> Result<f64> {
    match family {
        StateFamily::QubitFull | StateFamily::DisplacedThermal { .. } => {
            let jt = j_rld.ok_or(CoreError::SingularState {
                eigenvalue: 0.0,
                floor: tol::SINGULAR_FLOOR_REL,
            })?;
            rld_bound_closed(jt, g)
        }
        StateFamily::QubitRFixed { r0 } => {
            if *r0 >= tol::PURE_RADIUS {
                // Pure-state equality: C_A = C(G).
                Ok(qubit_attainable_c(j_sld, g)?.0)
            } else {
                let jt = j_rld.ok_or(CoreError::SingularState {
                    eigenvalue: 0.0,
                    floor: tol::SINGULAR_FLOOR_REL,
                })?;
                rld_bound_closed(jt, g)
            }
        }
        StateFamily::QubitPhiZero => {
            let _ = bloch_radius;
            sld_inverse_trace(j_sld, g)
        }
    }
}

/// Closed-form `C_A` for the fixed-radius subfamily at the reference point
/// `(θ, φ) = (π/2, 0)`: `(2/r0²)(g1 + r0 √(g1² − g2² − g3²))`.
pub fn r_fixed_c_a_formula(r0: f64, g: &WeightMatrix) -> Result<f64> {
    let (g1, g2, g3) = g.g_coords().ok_or(CoreError::DimensionMismatch {
        left: g.dim(),
        right: 2,
        context: "r_fixed_c_a_formula",
    })?;
    let disc = g1 * g1 - g2 * g2 - g3 * g3;
    if disc < 0.0 {
        return Err(CoreError::NotPsd { eigenvalue: disc });
    }
    Ok(2.0 / (r0 * r0) * (g1 + r0 * disc.sqrt()))
}

/// Closed-form `C` for the fixed-radius subfamily at the reference point:
/// `(2/r0²)(g1 + √(g1² − g2² − g3²))`.
pub fn r_fixed_c_formula(r0: f64, g: &WeightMatrix) -> Result<f64> {
    let (g1, g2, g3) = g.g_coords().ok_or(CoreError::DimensionMismatch {
        left: g.dim(),
        right: 2,
        context: "r_fixed_c_formula",
    })?;
    let disc = g1 * g1 - g2 * g2 - g3 * g3;
    if disc < 0.0 {
        return Err(CoreError::NotPsd { eigenvalue: disc });
    }
    Ok(2.0 / (r0 * r0) * (g1 + disc.sqrt()))
}

// ---------------------------------------------------------------------------
// Covariance frontiers
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FrontierKind {
    RFixedSingle,
    RFixedAsymptotic,
    FullAsymptotic,
    FullSingleW,
}

/// Specification of one frontier point.
#[derive(Debug, Clone)]
pub enum FrontierParams {
    RFixedSingle {
        r0: f64,
        y: f64,
        z: f64,
    },
    RFixedAsymptotic {
        r0: f64,
        y: f64,
        z: f64,
    },
    FullAsymptotic {
        r: f64,
        y: f64,
        z: f64,
    },
    FullSingleW {
        j_sld: FisherMatrix,
        w: RealSymMatrix,
    },
}

/// One Pareto-minimal covariance matrix on a frontier.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FrontierPoint {
    pub kind: FrontierKind,
    /// `(y, z)` chart coordinates for the explicit frontier kinds.
    pub coords: Option<(f64, f64)>,
    /// Weight matrix for the `FullSingleW` chart.
    pub w: Option<RealSymMatrix>,
    /// The covariance matrix itself.
    pub v: RealSymMatrix,
}

fn check_radius(name: &str, r: f64) -> Result<()> {
    if !(r > 0.0 && r <= 1.0) {
        return Err(CoreError::ParameterDomain {
            what: format!("{name} = {r} must lie in (0, 1]"),
        });
    }
    Ok(())
}

/// The frontier `x`-coordinate: `x = (1 + √(r⁴(y²+z²) + b)) / r²` where
/// `b = 1` on the single-copy frontier and `b = r²` on the asymptotic one.
fn frontier_x(r: f64, y: f64, z: f64, b: f64) -> f64 {
    (1.0 + (r.powi(4) * (y * y + z * z) + b).sqrt()) / (r * r)
}

/// Builds the covariance matrix of one frontier point.
pub fn frontier_point(params: &FrontierParams) -> Result<FrontierPoint> {
    match params {
        FrontierParams::RFixedSingle { r0, y, z } => {
            check_radius("r0", *r0)?;
            let x = frontier_x(*r0, *y, *z, 1.0);
            let v = RealSymMatrix::from_entries(2, vec![x + y, *z, *z, x - y])?;
            Ok(FrontierPoint {
                kind: FrontierKind::RFixedSingle,
                coords: Some((*y, *z)),
                w: None,
                v,
            })
        }
        FrontierParams::RFixedAsymptotic { r0, y, z } => {
            check_radius("r0", *r0)?;
            let x = frontier_x(*r0, *y, *z, r0 * r0);
            let v = RealSymMatrix::from_entries(2, vec![x + y, *z, *z, x - y])?;
            Ok(FrontierPoint {
                kind: FrontierKind::RFixedAsymptotic,
                coords: Some((*y, *z)),
                w: None,
                v,
            })
        }
        FrontierParams::FullAsymptotic { r, y, z } => {
            check_radius("r", *r)?;
            let x = frontier_x(*r, *y, *z, r * r);
            let v = RealSymMatrix::from_entries(
                3,
                vec![1.0 - r * r, 0.0, 0.0, 0.0, x + y, *z, 0.0, *z, x - y],
            )?;
            Ok(FrontierPoint {
                kind: FrontierKind::FullAsymptotic,
                coords: Some((*y, *z)),
                w: None,
                v,
            })
        }
        FrontierParams::FullSingleW { j_sld, w } => {
            let d = j_sld.dim();
            if w.dim() != d {
                return Err(CoreError::DimensionMismatch {
                    left: w.dim(),
                    right: d,
                    context: "frontier_point FullSingleW",
                });
            }
            let tr: f64 = (0..d).map(|i| w.entry(i, i)).sum();
            if (tr - 1.0).abs() > 1e-10 {
                return Err(CoreError::ParameterDomain {
                    what: format!("tr W = {tr} must equal 1"),
                });
            }
            let w_herm = w.to_hermitian();
            let w_inv = mat_func(&w_herm, MatFunc::Inv).map_err(|e| match e {
                CoreError::SingularMatrix { eigenvalue, floor, .. } => {
                    CoreError::ParameterDomain {
                        what: format!(
                            "W must be positive definite (eigenvalue {eigenvalue:.3e} below {floor:.3e})"
                        ),
                    }
                }
                other => other,
            })?;
            let j_inv_sqrt = mat_func(&j_sld.to_hermitian(), MatFunc::InvSqrt)?;
            let v_herm = HermitianOperator::new(
                j_inv_sqrt
                    .matrix()
                    .matmul(w_inv.matrix())
                    .matmul(j_inv_sqrt.matrix())
                    .hermitian_part(),
            )?;
            Ok(FrontierPoint {
                kind: FrontierKind::FullSingleW,
                coords: None,
                w: Some(w.clone()),
                v: RealSymMatrix::from_hermitian(&v_herm),
            })
        }
    }
}

/// Which frontier to minimize `tr G V` over.
#[derive(Debug, Clone)]
pub enum FrontierMinProblem {
    RFixedSingle { r0: f64 },
    RFixedAsymptotic { r0: f64 },
    FullAsymptotic { r: f64 },
    FullSingleW { j_sld: FisherMatrix },
}

/// Minimizes `tr G V` over a frontier.
///
/// The explicit `(y, z)` charts are smooth and strictly convex for `G > 0`,
/// so a damped Newton iteration from the symmetric point `(0, 0)` converges
/// quadratically. The `FullSingleW` chart has the closed-form minimizer
/// `W* = √B / tr √B`.
pub fn frontier_min(
    problem: &FrontierMinProblem,
    g: &WeightMatrix,
) -> Result<(f64, FrontierPoint)> {
    if !g.is_pd()? {
        return Err(CoreError::ParameterDomain {
            what: "frontier minimization requires G > 0".into(),
        });
    }
    match problem {
        FrontierMinProblem::RFixedSingle { r0 } => {
            let (g1, g2, g3) = g.g_coords().ok_or(CoreError::DimensionMismatch {
                left: g.dim(),
                right: 2,
                context: "frontier_min",
            })?;
            let (val, y, z) = newton_min_chart(*r0, 1.0, g1, g2, g3, 0.0)?;
            let pt = frontier_point(&FrontierParams::RFixedSingle { r0: *r0, y, z })?;
            Ok((val, pt))
        }
        FrontierMinProblem::RFixedAsymptotic { r0 } => {
            let (g1, g2, g3) = g.g_coords().ok_or(CoreError::DimensionMismatch {
                left: g.dim(),
                right: 2,
                context: "frontier_min",
            })?;
            let (val, y, z) = newton_min_chart(*r0, r0 * r0, g1, g2, g3, 0.0)?;
            let pt = frontier_point(&FrontierParams::RFixedAsymptotic { r0: *r0, y, z })?;
            Ok((val, pt))
        }
        FrontierMinProblem::FullAsymptotic { r } => {
            if g.dim() != 3 {
                return Err(CoreError::DimensionMismatch {
                    left: g.dim(),
                    right: 3,
                    context: "frontier_min FullAsymptotic",
                });
            }
            // Angular block in (g1, g2, g3) coordinates, radial block constant.
            let g1 = 0.5 * (g.entry(1, 1) + g.entry(2, 2));
            let g2 = 0.5 * (g.entry(1, 1) - g.entry(2, 2));
            let g3 = g.entry(1, 2);
            let constant = g.entry(0, 0) * (1.0 - r * r);
            let (val, y, z) = newton_min_chart(*r, r * r, g1, g2, g3, constant)?;
            let pt = frontier_point(&FrontierParams::FullAsymptotic { r: *r, y, z })?;
            Ok((val, pt))
        }
        FrontierMinProblem::FullSingleW { j_sld } => {
            let (value, w_star) = qubit_attainable_c(j_sld, g)?;
            let pt = frontier_point(&FrontierParams::FullSingleW {
                j_sld: j_sld.clone(),
                w: w_star,
            })?;
            Ok((value, pt))
        }
    }
}

/// Damped Newton on `f(y,z) = 2 g1 x(y,z) + 2 g2 y + 2 g3 z + constant`.
fn newton_min_chart(
    r: f64,
    b: f64,
    g1: f64,
    g2: f64,
    g3: f64,
    constant: f64,
) -> Result<(f64, f64, f64)> {
    check_radius("r", r)?;
    let a = r.powi(4);
    let r2 = r * r;
    let f = |y: f64, z: f64| -> f64 {
        2.0 * g1 * frontier_x(r, y, z, b) + 2.0 * g2 * y + 2.0 * g3 * z + constant
    };

    let mut y = 0.0;
    let mut z = 0.0;
    let mut fv = f(y, z);
    for iter in 0..100 {
        let u = (a * (y * y + z * z) + b).sqrt();
        let gy = 2.0 * g1 * a * y / (r2 * u) + 2.0 * g2;
        let gz = 2.0 * g1 * a * z / (r2 * u) + 2.0 * g3;
        let grad_norm = (gy * gy + gz * gz).sqrt();
        if grad_norm < 1e-12 * fv.abs().max(1.0) {
            return Ok((fv, y, z));
        }
        let h_common = 2.0 * g1 * a / (r2 * u);
        let hyy = h_common * (1.0 - a * y * y / (u * u));
        let hzz = h_common * (1.0 - a * z * z / (u * u));
        let hyz = -h_common * a * y * z / (u * u);
        let det = hyy * hzz - hyz * hyz;
        if det <= 0.0 {
            return Err(CoreError::FrontierNoConvergence {
                trace: format!("Hessian lost definiteness at iter {iter}: det = {det:.3e}"),
            });
        }
        let dy = (hzz * gy - hyz * gz) / det;
        let dz = (hyy * gz - hyz * gy) / det;

        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let ny = y - lambda * dy;
            let nz = z - lambda * dz;
            let nf = f(ny, nz);
            if nf < fv {
                y = ny;
                z = nz;
                fv = nf;
                accepted = true;
                break;
            }
            lambda *= 0.5;
        }
        if !accepted {
            // No descent direction improves: already at the minimum to
            // floating precision.
            return Ok((fv, y, z));
        }
    }
    Err(CoreError::FrontierNoConvergence {
        trace: "Newton iteration cap reached".into(),
    })
}

// ---------------------------------------------------------------------------
// Bound report assembly
// ---------------------------------------------------------------------------

/// Provenance of each reported value.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProvenanceNotes {
    pub c_single: String,
    pub c_asymptotic: String,
    pub c_rld: String,
}

/// All bound levels for one `(family, θ0, G)` query.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundReport {
    pub family: StateFamily,
    pub theta0: ParamPoint,
    pub weight: WeightMatrix,
    pub j_sld: FisherMatrix,
    pub j_rld: Option<FisherMatrix>,
    pub c_single: Option<f64>,
    pub c_asymptotic: Option<f64>,
    pub c_rld: Option<f64>,
    pub ordering_ok: bool,
    pub notes: ProvenanceNotes,
}

const NOTE_CLOSED: &str = "closed-form";
const NOTE_UNAVAILABLE: &str = "not-available";
/// Value inherited from a known equality rather than computed independently.
const NOTE_CITED: &str = "cited-equality";

fn bloch_radius_at(family: &StateFamily, theta0: &ParamPoint) -> Option<f64> {
    match family {
        StateFamily::QubitFull | StateFamily::QubitPhiZero => Some(theta0.coords[0]),
        StateFamily::QubitRFixed { r0 } => Some(*r0),
        StateFamily::DisplacedThermal { .. } => None,
    }
}

/// Computes every available bound at `(family, θ0, G)` and checks the
/// ordering chain `C ≥ C_A ≥ C_R`.
pub fn bound_report(
    family: &StateFamily,
    theta0: &ParamPoint,
    g: &WeightMatrix,
) -> Result<BoundReport> {
    let info = point_info(family, theta0)?;
    let d = info.fp.param_dim();
    if g.dim() != d {
        return Err(CoreError::DimensionMismatch {
            left: g.dim(),
            right: d,
            context: "bound_report weight matrix",
        });
    }
    // Identifiability gate: every bound needs J > 0.
    let j_min = info.j_sld.min_eigenvalue()?;
    let j_scale = info.j_sld.matrix().max_abs().max(1.0);
    if j_min <= tol::SINGULAR_FLOOR_REL * j_scale {
        return Err(CoreError::NotIdentifiable { eigenvalue: j_min });
    }

    let radius = bloch_radius_at(family, theta0);
    let treat_pure = radius.map(|r| r >= tol::PURE_RADIUS).unwrap_or(false);
    let j_rld = if treat_pure { None } else { info.j_rld.clone() };

    let (c_single, note_c) = match family {
        StateFamily::DisplacedThermal { .. } => match &j_rld {
            Some(jt) => (Some(rld_bound_closed(jt, g)?), NOTE_CITED),
            None => (None, NOTE_UNAVAILABLE),
        },
        _ => (Some(qubit_attainable_c(&info.j_sld, g)?.0), NOTE_CLOSED),
    };

    let (c_rld, note_cr) = match &j_rld {
        Some(jt) => (Some(rld_bound_closed(jt, g)?), NOTE_CLOSED),
        None => (None, NOTE_UNAVAILABLE),
    };

    let (c_asymptotic, note_ca) = match family {
        StateFamily::QubitRFixed { .. } => (
            Some(asymptotic_c_a(
                family,
                &info.j_sld,
                j_rld.as_ref(),
                g,
                radius,
            )?),
            NOTE_CLOSED,
        ),
        StateFamily::QubitPhiZero => (
            Some(asymptotic_c_a(
                family,
                &info.j_sld,
                j_rld.as_ref(),
                g,
                radius,
            )?),
            NOTE_CITED,
        ),
        StateFamily::QubitFull | StateFamily::DisplacedThermal { .. } => match &j_rld {
            Some(_) => (
                Some(asymptotic_c_a(
                    family,
                    &info.j_sld,
                    j_rld.as_ref(),
                    g,
                    radius,
                )?),
                NOTE_CITED,
            ),
            None => (None, NOTE_UNAVAILABLE),
        },
    };

    let slack = tol::ORDERING_SLACK;
    let mut ordering_ok = true;
    if let (Some(c), Some(ca)) = (c_single, c_asymptotic) {
        ordering_ok &= c >= ca - slack;
    }
    if let (Some(ca), Some(cr)) = (c_asymptotic, c_rld) {
        ordering_ok &= ca >= cr - slack;
    }
    if let (Some(c), Some(cr)) = (c_single, c_rld) {
        ordering_ok &= c >= cr - slack;
    }

    Ok(BoundReport {
        family: family.clone(),
        theta0: theta0.clone(),
        weight: g.clone(),
        j_sld: info.j_sld.clone(),
        j_rld,
        c_single,
        c_asymptotic,
        c_rld,
        ordering_ok,
        notes: ProvenanceNotes {
            c_single: note_c.into(),
            c_asymptotic: note_ca.into(),
            c_rld: note_cr.into(),
        },
    })
}
