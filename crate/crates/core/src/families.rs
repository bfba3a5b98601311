//! Parameterized state families: the three qubit Bloch families and the
//! displaced-thermal family on a truncated Fock space, with analytic (qubit)
//! or Richardson finite-difference (thermal) parameter derivatives, and
//! n-copy i.i.d. extensions.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::matcore::{eig_hermitian, ComplexMatrix, HermitianOperator};
use crate::tol;

const TAU: f64 = std::f64::consts::TAU;

/// Largest Hilbert dimension an i.i.d. extension may produce.
pub const IID_DIM_CAP: usize = 64;

/// A parameterized family of density operators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum StateFamily {
    /// Full Bloch ball, parameters `(r, θ, φ)`.
    QubitFull,
    /// Fixed Bloch radius `r0`, parameters `(θ, φ)`.
    QubitRFixed { r0: f64 },
    /// Equatorial-plane slice `φ = 0`, parameters `(r, θ)`.
    QubitPhiZero,
    /// Coherent signal in thermal noise with mean photon number `N`,
    /// truncated to `fock_dim` Fock levels; parameters `(Re θ, Im θ)`.
    DisplacedThermal { mean_photons: f64, fock_dim: usize },
}

impl StateFamily {
    pub fn param_dim(&self) -> usize {
        match self {
            StateFamily::QubitFull => 3,
            _ => 2,
        }
    }

    pub fn hilbert_dim(&self) -> usize {
        match self {
            StateFamily::DisplacedThermal { fock_dim, .. } => *fock_dim,
            _ => 2,
        }
    }

    /// Validates the family's own constants.
    pub fn validate(&self) -> Result<()> {
        match self {
            StateFamily::QubitRFixed { r0 } => {
                if !(*r0 > 0.0 && *r0 <= 1.0) {
                    return Err(CoreError::ParameterDomain {
                        what: format!("r0 = {r0} must lie in (0, 1]"),
                    });
                }
            }
            StateFamily::DisplacedThermal {
                mean_photons,
                fock_dim,
            } => {
                if !(mean_photons.is_finite() && *mean_photons > 0.0) {
                    return Err(CoreError::ParameterDomain {
                        what: format!("mean photon number N = {mean_photons} must be positive"),
                    });
                }
                if *fock_dim < 2 {
                    return Err(CoreError::ParameterDomain {
                        what: format!("fock_dim = {fock_dim} must be at least 2"),
                    });
                }
            }
            _ => {}
        }
        Ok(())
    }

    /// Checks a parameter point against this family's domain.
    pub fn validate_point(&self, theta: &ParamPoint) -> Result<()> {
        self.validate()?;
        let coords = &theta.coords;
        if coords.len() != self.param_dim() {
            return Err(CoreError::DimensionMismatch {
                left: coords.len(),
                right: self.param_dim(),
                context: "parameter point length",
            });
        }
        if coords.iter().any(|x| !x.is_finite()) {
            return Err(CoreError::ParameterDomain {
                what: "parameter coordinates must be finite".into(),
            });
        }
        let check_radius = |r: f64| -> Result<()> {
            if !(0.0..=1.0).contains(&r) {
                return Err(CoreError::ParameterDomain {
                    what: format!("Bloch radius r = {r} must lie in [0, 1]"),
                });
            }
            Ok(())
        };
        let check_angle = |name: &str, a: f64| -> Result<()> {
            if !(0.0..=TAU).contains(&a) {
                return Err(CoreError::ParameterDomain {
                    what: format!("angle {name} = {a} must lie in [0, 2π]"),
                });
            }
            Ok(())
        };
        match self {
            StateFamily::QubitFull => {
                check_radius(coords[0])?;
                check_angle("θ", coords[1])?;
                check_angle("φ", coords[2])?;
            }
            StateFamily::QubitRFixed { .. } => {
                check_angle("θ", coords[0])?;
                check_angle("φ", coords[1])?;
            }
            StateFamily::QubitPhiZero => {
                check_radius(coords[0])?;
                check_angle("θ", coords[1])?;
            }
            StateFamily::DisplacedThermal { .. } => {}
        }
        Ok(())
    }

    /// Bloch coordinates `(r, θ, φ)` for the qubit kinds.
    fn bloch_coords(&self, theta: &ParamPoint) -> (f64, f64, f64) {
        let c = &theta.coords;
        match self {
            StateFamily::QubitFull => (c[0], c[1], c[2]),
            StateFamily::QubitRFixed { r0 } => (*r0, c[0], c[1]),
            StateFamily::QubitPhiZero => (c[0], c[1], 0.0),
            StateFamily::DisplacedThermal { .. } => unreachable!("not a qubit family"),
        }
    }
}

/// A point in a family's parameter space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamPoint {
    pub coords: Vec<f64>,
}

impl ParamPoint {
    pub fn new(coords: Vec<f64>) -> Self {
        Self { coords }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }
}

/// A density operator: Hermitian, PSD and unit trace. `tail_mass` records the
/// Fock-truncation mass discarded before renormalization (zero for qubits).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityOperator {
    op: HermitianOperator,
    tail_mass: f64,
}

impl DensityOperator {
    pub fn new(op: HermitianOperator) -> Result<Self> {
        Self::with_tail_mass(op, 0.0)
    }

    pub fn with_tail_mass(op: HermitianOperator, tail_mass: f64) -> Result<Self> {
        let tr = op.trace_re();
        if (tr - 1.0).abs() > tol::TRACE {
            return Err(CoreError::ParameterDomain {
                what: format!(
                    "density trace {tr} deviates from 1 beyond {:.0e}",
                    tol::TRACE
                ),
            });
        }
        let min_eig = op.min_eigenvalue()?;
        if min_eig < tol::PSD_CLAMP {
            return Err(CoreError::NotPsd {
                eigenvalue: min_eig,
            });
        }
        Ok(Self { op, tail_mass })
    }

    pub fn operator(&self) -> &HermitianOperator {
        &self.op
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    pub fn tail_mass(&self) -> f64 {
        self.tail_mass
    }
}

/// A family evaluated at one parameter point: the state and its `d` partial
/// derivatives.
#[derive(Debug, Clone)]
pub struct FamilyAtPoint {
    pub rho: DensityOperator,
    pub derivs: Vec<HermitianOperator>,
}

impl FamilyAtPoint {
    pub fn param_dim(&self) -> usize {
        self.derivs.len()
    }

    pub fn dim(&self) -> usize {
        self.rho.dim()
    }

    fn validate_traceless(&self) -> Result<()> {
        for (i, d) in self.derivs.iter().enumerate() {
            let tr = d.trace_re();
            if tr.abs() > tol::TRACE {
                return Err(CoreError::ParameterDomain {
                    what: format!("derivative {i} trace {tr:.3e} is not zero"),
                });
            }
        }
        Ok(())
    }
}

fn qubit_density(r: f64, th: f64, ph: f64) -> HermitianOperator {
    let (st, ct) = th.sin_cos();
    let (sp, cp) = ph.sin_cos();
    let off = Complex64::new(r * st * cp, r * st * sp) * 0.5;
    let m = ComplexMatrix::from_rows(&[
        &[Complex64::new(0.5 * (1.0 + r * ct), 0.0), off],
        &[off.conj(), Complex64::new(0.5 * (1.0 - r * ct), 0.0)],
    ])
    .expect("2x2 build");
    HermitianOperator::new(m).expect("qubit density is Hermitian by construction")
}

/// Entrywise θ-derivative structure shared by all qubit kinds: the density is
/// linear in `(r cos θ, r sin θ cos φ, r sin θ sin φ)`.
fn qubit_deriv(dz: f64, dx: f64, dy: f64) -> HermitianOperator {
    let off = Complex64::new(dx, dy) * 0.5;
    let m = ComplexMatrix::from_rows(&[
        &[Complex64::new(0.5 * dz, 0.0), off],
        &[off.conj(), Complex64::new(-0.5 * dz, 0.0)],
    ])
    .expect("2x2 build");
    HermitianOperator::new(m).expect("Hermitian by construction")
}

/// Evaluates `ρ_θ`.
pub fn eval_state(family: &StateFamily, theta: &ParamPoint) -> Result<DensityOperator> {
    family.validate_point(theta)?;
    match family {
        StateFamily::DisplacedThermal {
            mean_photons,
            fock_dim,
        } => thermal_state(*mean_photons, *fock_dim, theta.coords[0], theta.coords[1]),
        _ => {
            let (r, th, ph) = family.bloch_coords(theta);
            DensityOperator::new(qubit_density(r, th, ph))
        }
    }
}

/// Evaluates `ρ_θ` together with its analytic (qubit) or finite-difference
/// (thermal) parameter derivatives.
pub fn eval_derivs(family: &StateFamily, theta: &ParamPoint) -> Result<FamilyAtPoint> {
    family.validate_point(theta)?;
    let fp = match family {
        StateFamily::DisplacedThermal { .. } => thermal_derivs(family, theta)?,
        _ => {
            let (r, th, ph) = family.bloch_coords(theta);
            let (st, ct) = th.sin_cos();
            let (sp, cp) = ph.sin_cos();
            // Bloch vector n = (r sinθ cosφ, r sinθ sinφ, r cosθ); each
            // parameter derivative is the corresponding tangent vector.
            let d_r = qubit_deriv(ct, st * cp, st * sp);
            let d_th = qubit_deriv(-r * st, r * ct * cp, r * ct * sp);
            let d_ph = qubit_deriv(0.0, -r * st * sp, r * st * cp);
            let derivs = match family {
                StateFamily::QubitFull => vec![d_r, d_th, d_ph],
                StateFamily::QubitRFixed { .. } => vec![d_th, d_ph],
                StateFamily::QubitPhiZero => vec![d_r, d_th],
                StateFamily::DisplacedThermal { .. } => unreachable!(),
            };
            FamilyAtPoint {
                rho: eval_state(family, theta)?,
                derivs,
            }
        }
    };
    fp.validate_traceless()?;
    Ok(fp)
}

/// n-fold i.i.d. extension: `ρ ⊗ ⋯ ⊗ ρ` with derivatives by the product rule.
pub fn extend_iid(fp: &FamilyAtPoint, n: usize) -> Result<FamilyAtPoint> {
    if n == 0 {
        return Err(CoreError::ParameterDomain {
            what: "copy count n must be at least 1".into(),
        });
    }
    if n == 1 {
        return Ok(fp.clone());
    }
    let dim_out = fp.dim().checked_pow(n as u32).unwrap_or(usize::MAX);
    if dim_out > IID_DIM_CAP {
        return Err(CoreError::CapacityExceeded {
            requested: dim_out,
            cap: IID_DIM_CAP,
        });
    }

    let rho = fp.rho.operator();
    let mut rho_n = rho.clone();
    for _ in 1..n {
        rho_n = rho_n.kron(rho);
    }

    let d = fp.param_dim();
    let mut derivs = Vec::with_capacity(d);
    for i in 0..d {
        let di = &fp.derivs[i];
        let mut total: Option<HermitianOperator> = None;
        for slot in 0..n {
            let mut term = if slot == 0 { di.clone() } else { rho.clone() };
            for k in 1..n {
                term = term.kron(if k == slot { di } else { rho });
            }
            total = Some(match total {
                None => term,
                Some(t) => t.add(&term),
            });
        }
        derivs.push(total.expect("n >= 1"));
    }

    let out = FamilyAtPoint {
        rho: DensityOperator::with_tail_mass(rho_n, fp.rho.tail_mass())?,
        derivs,
    };
    out.validate_traceless()?;
    Ok(out)
}

// ---------------------------------------------------------------------------
// Displaced-thermal family on a truncated Fock space
// ---------------------------------------------------------------------------

/// Truncated annihilation operator: `a |k⟩ = √k |k−1⟩`.
fn annihilation(fock_dim: usize) -> ComplexMatrix {
    let mut a = ComplexMatrix::zeros(fock_dim);
    for k in 1..fock_dim {
        a[(k - 1, k)] = Complex64::new((k as f64).sqrt(), 0.0);
    }
    a
}

/// Truncated displacement operator `exp(θ a† − θ* a)`.
///
/// The generator is exactly skew-Hermitian on the truncated space, so the
/// exponential is taken through the eigendecomposition of the Hermitian
/// matrix `i (θ a† − θ* a)` and is exactly unitary.
fn displacement(theta: Complex64, fock_dim: usize) -> Result<ComplexMatrix> {
    let a = annihilation(fock_dim);
    let adag = a.dagger();
    let gen = adag.scale(theta).sub(&a.scale(theta.conj()));
    let h = HermitianOperator::new(gen.scale(Complex64::new(0.0, 1.0)))?;
    let eig = eig_hermitian(&h)?;

    // exp(-i H) = U diag(e^{-i λ}) U†
    let n = fock_dim;
    let u = &eig.eigenvectors;
    let mut out = ComplexMatrix::zeros(n);
    for k in 0..n {
        let phase = Complex64::from_polar(1.0, -eig.eigenvalues[k]);
        for i in 0..n {
            let uik = u[(i, k)] * phase;
            for j in 0..n {
                let add = uik * u[(j, k)].conj();
                out[(i, j)] += add;
            }
        }
    }
    Ok(out)
}

fn thermal_state(
    mean_photons: f64,
    fock_dim: usize,
    theta_re: f64,
    theta_im: f64,
) -> Result<DensityOperator> {
    // Geometric photon-number distribution, truncated. The discarded tail is
    // the closed-form geometric remainder (N/(N+1))^K, which stays exact far
    // below where the summed complement would round to zero.
    let ratio = mean_photons / (mean_photons + 1.0);
    let mut diag = ComplexMatrix::zeros(fock_dim);
    let mut w = 1.0 / (mean_photons + 1.0);
    for k in 0..fock_dim {
        diag[(k, k)] = Complex64::new(w, 0.0);
        w *= ratio;
    }
    let tail_mass = ratio.powi(fock_dim as i32);
    let kept = 1.0 - tail_mass;
    if tail_mass > tol::TAIL_MASS_MAX {
        return Err(CoreError::TruncationInsufficient {
            tail_mass,
            max: tol::TAIL_MASS_MAX,
        });
    }

    let d = displacement(Complex64::new(theta_re, theta_im), fock_dim)?;
    let displaced = d.matmul(&diag).matmul(&d.dagger());
    // D is exactly unitary, so renormalization only removes the thermal tail.
    let renorm = displaced.scale_re(1.0 / kept);
    DensityOperator::with_tail_mass(HermitianOperator::new(renorm.hermitian_part())?, tail_mass)
}

/// Richardson-extrapolated central difference for the thermal derivatives.
///
/// Starts at `h = 1e-3` and halves until two successive extrapolations agree
/// to 1e-9 max-entry (three levels suffice in practice; the family is entire
/// in θ).
fn thermal_derivs(family: &StateFamily, theta: &ParamPoint) -> Result<FamilyAtPoint> {
    let rho = eval_state(family, theta)?;
    let d = family.param_dim();
    let mut derivs = Vec::with_capacity(d);

    let eval_shifted = |axis: usize, delta: f64| -> Result<ComplexMatrix> {
        let mut coords = theta.coords.clone();
        coords[axis] += delta;
        Ok(eval_state(family, &ParamPoint::new(coords))?
            .operator()
            .matrix()
            .clone())
    };

    for axis in 0..d {
        let richardson = |h: f64| -> Result<ComplexMatrix> {
            let central = |s: f64| -> Result<ComplexMatrix> {
                Ok(eval_shifted(axis, s)?
                    .sub(&eval_shifted(axis, -s)?)
                    .scale_re(1.0 / (2.0 * s)))
            };
            let coarse = central(h)?;
            let fine = central(h / 2.0)?;
            Ok(fine.scale_re(4.0 / 3.0).sub(&coarse.scale_re(1.0 / 3.0)))
        };

        let mut h = 1e-3;
        let mut best = richardson(h)?;
        for _ in 0..3 {
            h /= 2.0;
            let next = richardson(h)?;
            let diff = next.sub(&best).max_abs();
            best = next;
            if diff < 1e-9 {
                break;
            }
        }
        // The exact derivative is traceless (every ρ(θ) has unit trace);
        // project out the rounding-level trace the difference quotient leaves.
        let n = best.dim();
        let excess = best.trace() / n as f64;
        let correction = ComplexMatrix::identity(n).scale(excess);
        derivs.push(HermitianOperator::new(
            best.sub(&correction).hermitian_part(),
        )?);
    }

    Ok(FamilyAtPoint { rho, derivs })
}

/// Parses the CLI family grammar:
/// `full`, `r-fixed:<r0>`, `phi-zero`, `thermal:<N>:<fock_dim>`.
pub fn parse_family_spec(spec: &str) -> Result<StateFamily> {
    let bad = |what: String| CoreError::InvalidConfig { what };
    let family = if spec == "full" {
        StateFamily::QubitFull
    } else if spec == "phi-zero" {
        StateFamily::QubitPhiZero
    } else if let Some(rest) = spec.strip_prefix("r-fixed:") {
        let r0: f64 = rest
            .parse()
            .map_err(|_| bad(format!("cannot parse r0 in family spec '{spec}'")))?;
        StateFamily::QubitRFixed { r0 }
    } else if let Some(rest) = spec.strip_prefix("thermal:") {
        let mut it = rest.split(':');
        let n: f64 = it
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| bad(format!("cannot parse N in family spec '{spec}'")))?;
        let fock: usize = it
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| bad(format!("cannot parse fock_dim in family spec '{spec}'")))?;
        if it.next().is_some() {
            return Err(bad(format!("trailing fields in family spec '{spec}'")));
        }
        StateFamily::DisplacedThermal {
            mean_photons: n,
            fock_dim: fock,
        }
    } else {
        return Err(bad(format!(
            "unknown family spec '{spec}' (expected full | r-fixed:<r0> | phi-zero | thermal:<N>:<fock_dim>)"
        )));
    };
    family.validate()?;
    Ok(family)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn r_fixed(r0: f64) -> StateFamily {
        StateFamily::QubitRFixed { r0 }
    }

    fn equator() -> ParamPoint {
        ParamPoint::new(vec![FRAC_PI_2, 0.0])
    }

    #[test]
    fn qubit_full_at_equator() {
        let rho = eval_state(
            &StateFamily::QubitFull,
            &ParamPoint::new(vec![0.5, FRAC_PI_2, 0.0]),
        )
        .unwrap();
        let m = rho.operator().matrix();
        assert!((m[(0, 0)].re - 0.5).abs() < 1e-15);
        assert!((m[(0, 1)].re - 0.25).abs() < 1e-15);
        assert!(m[(0, 1)].im.abs() < 1e-15);
        assert!((m[(1, 1)].re - 0.5).abs() < 1e-15);
    }

    #[test]
    fn qubit_center_is_maximally_mixed() {
        for th in [0.0, 1.0, PI] {
            let rho = eval_state(
                &StateFamily::QubitFull,
                &ParamPoint::new(vec![0.0, th, 1.3]),
            )
            .unwrap();
            let m = rho.operator().matrix();
            assert!((m[(0, 0)].re - 0.5).abs() < 1e-15);
            assert!(m[(0, 1)].norm() < 1e-15);
        }
    }

    #[test]
    fn r_fixed_derivs_at_equator() {
        let r0 = 0.7;
        let fp = eval_derivs(&r_fixed(r0), &equator()).unwrap();
        // ∂ρ/∂θ = (r0/2) diag(-1, 1)
        let dth = fp.derivs[0].matrix();
        assert!((dth[(0, 0)].re + r0 / 2.0).abs() < 1e-14);
        assert!((dth[(1, 1)].re - r0 / 2.0).abs() < 1e-14);
        assert!(dth[(0, 1)].norm() < 1e-14);
        // ∂ρ/∂φ = (r0/2) [[0, i], [-i, 0]]
        let dph = fp.derivs[1].matrix();
        assert!((dph[(0, 1)] - Complex64::new(0.0, r0 / 2.0)).norm() < 1e-14);
        assert!(dph[(0, 0)].norm() < 1e-14);
    }

    #[test]
    fn full_family_radial_deriv() {
        let fp = eval_derivs(
            &StateFamily::QubitFull,
            &ParamPoint::new(vec![0.5, FRAC_PI_2, 0.0]),
        )
        .unwrap();
        let dr = fp.derivs[0].matrix();
        assert!(dr[(0, 0)].norm() < 1e-15);
        assert!((dr[(0, 1)].re - 0.5).abs() < 1e-15);
    }

    #[test]
    fn qubit_analytic_matches_central_difference() {
        use rand::rngs::StdRng;
        use rand::{Rng, SeedableRng};
        let mut rng = StdRng::seed_from_u64(42);
        let h = 1e-5;
        for _ in 0..50 {
            let family = match rng.gen_range(0..3) {
                0 => StateFamily::QubitFull,
                1 => r_fixed(rng.gen_range(0.1..0.95)),
                _ => StateFamily::QubitPhiZero,
            };
            let coords: Vec<f64> = match family {
                StateFamily::QubitFull => vec![
                    rng.gen_range(0.05..0.95),
                    rng.gen_range(0.1..TAU - 0.1),
                    rng.gen_range(0.1..TAU - 0.1),
                ],
                StateFamily::QubitRFixed { .. } => {
                    vec![rng.gen_range(0.1..TAU - 0.1), rng.gen_range(0.1..TAU - 0.1)]
                }
                _ => vec![rng.gen_range(0.05..0.95), rng.gen_range(0.1..TAU - 0.1)],
            };
            let point = ParamPoint::new(coords.clone());
            let fp = eval_derivs(&family, &point).unwrap();
            for (i, analytic) in fp.derivs.iter().enumerate() {
                let mut plus = coords.clone();
                let mut minus = coords.clone();
                plus[i] += h;
                minus[i] -= h;
                let num = eval_state(&family, &ParamPoint::new(plus))
                    .unwrap()
                    .operator()
                    .matrix()
                    .sub(
                        eval_state(&family, &ParamPoint::new(minus))
                            .unwrap()
                            .operator()
                            .matrix(),
                    )
                    .scale_re(1.0 / (2.0 * h));
                let err = num.sub(analytic.matrix()).max_abs();
                assert!(err < 1e-8, "family {family:?} param {i}: fd err {err:e}");
            }
        }
    }

    #[test]
    fn extend_iid_identity_case() {
        let fp = eval_derivs(&r_fixed(0.5), &equator()).unwrap();
        let same = extend_iid(&fp, 1).unwrap();
        assert_eq!(same.dim(), 2);
        assert_eq!(
            same.rho.operator().matrix().entries(),
            fp.rho.operator().matrix().entries()
        );
    }

    #[test]
    fn extend_iid_two_copies() {
        let fp = eval_derivs(&r_fixed(0.5), &equator()).unwrap();
        let two = extend_iid(&fp, 2).unwrap();
        assert_eq!(two.dim(), 4);
        assert!((two.rho.operator().trace_re() - 1.0).abs() < 1e-12);
        for d in &two.derivs {
            assert!(d.trace_re().abs() < 1e-12);
        }
        // Diagonal tensor square eigenvalues {p², p(1-p) ×2, (1-p)²}.
        let p = 0.75;
        let diag =
            DensityOperator::new(HermitianOperator::from_real(2, &[p, 0.0, 0.0, 1.0 - p]).unwrap())
                .unwrap();
        let fp_diag = FamilyAtPoint {
            rho: diag,
            derivs: vec![HermitianOperator::zeros(2)],
        };
        let sq = extend_iid(&fp_diag, 2).unwrap();
        let eig = eig_hermitian(sq.rho.operator()).unwrap();
        let expect = [0.0625, 0.1875, 0.1875, 0.5625];
        for (got, want) in eig.eigenvalues.iter().zip(expect) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn extend_iid_dimension_cap() {
        let fp = eval_derivs(&r_fixed(0.5), &equator()).unwrap();
        assert!(extend_iid(&fp, 6).is_ok());
        assert!(matches!(
            extend_iid(&fp, 7),
            Err(CoreError::CapacityExceeded { .. })
        ));
    }

    #[test]
    fn thermal_at_origin_is_geometric() {
        let n = 0.5;
        let fock = 40;
        let rho = eval_state(
            &StateFamily::DisplacedThermal {
                mean_photons: n,
                fock_dim: fock,
            },
            &ParamPoint::new(vec![0.0, 0.0]),
        )
        .unwrap();
        assert!(rho.tail_mass() < tol::TAIL_MASS_MAX);
        let m = rho.operator().matrix();
        // Entries k: N^k / (N+1)^{k+1}, up to the tail renormalization.
        let renorm = 1.0 - rho.tail_mass();
        for k in 0..5 {
            let want = n.powi(k as i32) / (n + 1.0).powi(k as i32 + 1) / renorm;
            assert!((m[(k, k)].re - want).abs() < 1e-12);
        }
        assert!((rho.operator().trace_re() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn thermal_truncation_error_when_too_small() {
        let res = eval_state(
            &StateFamily::DisplacedThermal {
                mean_photons: 2.0,
                fock_dim: 10,
            },
            &ParamPoint::new(vec![0.0, 0.0]),
        );
        assert!(matches!(res, Err(CoreError::TruncationInsufficient { .. })));
    }

    #[test]
    fn thermal_tail_mass_decreases_with_fock_dim() {
        let mut last = f64::INFINITY;
        for fock in [20, 40, 60] {
            let rho = eval_state(
                &StateFamily::DisplacedThermal {
                    mean_photons: 0.5,
                    fock_dim: fock,
                },
                &ParamPoint::new(vec![0.6, -0.8]),
            )
            .unwrap();
            assert!(rho.tail_mass() < last);
            last = rho.tail_mass();
        }
    }

    #[test]
    fn thermal_displaced_mean_photon_number() {
        // ⟨a†a⟩ = N + |θ|² for the ideal family; truncation keeps this to
        // high accuracy at fock_dim = 40, |θ| ≤ 1.
        let n = 0.5;
        let theta = Complex64::new(0.6, -0.3);
        let rho = eval_state(
            &StateFamily::DisplacedThermal {
                mean_photons: n,
                fock_dim: 40,
            },
            &ParamPoint::new(vec![theta.re, theta.im]),
        )
        .unwrap();
        let a = annihilation(40);
        let num_op = a.dagger().matmul(&a);
        let got = rho.operator().matrix().trace_product(&num_op).re;
        let want = n + theta.norm_sqr();
        assert!((got - want).abs() < 1e-9, "got {got}, want {want}");
    }

    #[test]
    fn thermal_derivs_traceless_and_hermitian() {
        let family = StateFamily::DisplacedThermal {
            mean_photons: 0.5,
            fock_dim: 30,
        };
        let fp = eval_derivs(&family, &ParamPoint::new(vec![0.2, 0.1])).unwrap();
        assert_eq!(fp.derivs.len(), 2);
        for d in &fp.derivs {
            assert!(d.trace_re().abs() < 1e-12);
        }
    }

    #[test]
    fn displacement_is_unitary() {
        let d = displacement(Complex64::new(0.3, -0.7), 25).unwrap();
        let gram = d.dagger().matmul(&d);
        assert!(gram.sub(&ComplexMatrix::identity(25)).max_abs() < 1e-12);
    }

    #[test]
    fn domain_violations_rejected() {
        assert!(eval_state(
            &StateFamily::QubitFull,
            &ParamPoint::new(vec![1.5, 0.0, 0.0])
        )
        .is_err());
        assert!(eval_state(&r_fixed(0.5), &ParamPoint::new(vec![-0.1, 0.0])).is_err());
        assert!(eval_state(&r_fixed(0.0), &equator()).is_err());
    }

    #[test]
    fn family_spec_grammar() {
        assert_eq!(parse_family_spec("full").unwrap(), StateFamily::QubitFull);
        assert_eq!(parse_family_spec("r-fixed:0.5").unwrap(), r_fixed(0.5));
        assert_eq!(
            parse_family_spec("phi-zero").unwrap(),
            StateFamily::QubitPhiZero
        );
        assert_eq!(
            parse_family_spec("thermal:0.5:40").unwrap(),
            StateFamily::DisplacedThermal {
                mean_photons: 0.5,
                fock_dim: 40
            }
        );
        assert!(parse_family_spec("bogus").is_err());
        assert!(parse_family_spec("r-fixed:2.0").is_err());
    }
}
