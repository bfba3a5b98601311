//! Quantum Cramér-Rao bound computations for finite-dimensional state families.
//!
//! The crate computes the three bound levels that govern multiparameter quantum
//! estimation under local unbiasedness:
//!
//! * `C(G)` — the attainable bound for measurements on a single copy,
//! * `C_A(G)` — the asymptotically attainable bound over collective
//!   measurements on n-copy states,
//! * `C_R(G)` — the right-logarithmic-derivative bound, a floor for both.
//!
//! Supporting machinery: dense complex linear algebra ([`matcore`]), the qubit
//! Bloch families and a truncated-Fock displaced-thermal family ([`families`]),
//! SLD/RLD/classical Fisher matrices ([`infogeo`]), closed-form bounds and
//! covariance frontiers ([`bounds`]), and a stochastic POVM search that serves
//! as an independent attainability oracle ([`povmopt`]).

pub mod bounds;
pub mod error;
pub mod families;
pub mod infogeo;
pub mod matcore;
pub mod povmopt;

pub use error::{CoreError, ErrorClass};

/// Numerical tolerances used across the crate.
///
/// Each constant is tied to a validation or branch decision; none of them are
/// tuning knobs. Looser application-level budgets (search quality, truncation
/// budgets) live with their operations instead.
pub mod tol {
    /// Max entrywise deviation allowed between `A` and `A†` for Hermitian inputs.
    pub const HERMITICITY: f64 = 1e-12;

    /// Eigendecomposition reconstruction and unitarity budget, max-entry norm.
    pub const EIG_RECONSTRUCT: f64 = 1e-10;

    /// Relative floor under which an eigenvalue is treated as singular.
    ///
    /// `inv` and `inv_sqrt` refuse rather than regularize below
    /// `SINGULAR_FLOOR_REL * max |eigenvalue|`: silent regularization would
    /// corrupt RLD-based bounds near pure states.
    pub const SINGULAR_FLOOR_REL: f64 = 1e-10;

    /// Eigenvalues in `[PSD_CLAMP, 0)` are clamped to zero for `sqrt`;
    /// anything more negative is a genuine PSD violation.
    pub const PSD_CLAMP: f64 = -1e-12;

    /// Max-entry residual allowed for the SLD Lyapunov equation and the RLD
    /// defining relation.
    pub const LOG_DERIV_RESIDUAL: f64 = 1e-9;

    /// Unit-trace deviation allowed for density operators; also bounds the
    /// trace of family derivatives.
    pub const TRACE: f64 = 1e-12;

    /// POVM element PSD slack (smallest eigenvalue may dip this far below 0).
    pub const POVM_PSD: f64 = -1e-10;

    /// Max-entry deviation of a POVM element sum from the identity.
    pub const POVM_SUM: f64 = 1e-9;

    /// Outcome probabilities below this floor carry no information by fiat.
    pub const PROB_FLOOR: f64 = 1e-12;

    /// Score magnitude above which a sub-floor-probability outcome is an error
    /// rather than ignorable.
    pub const DEGENERATE_SCORE: f64 = 1e-9;

    /// Fock-truncation tail mass above which the thermal family refuses to
    /// evaluate.
    pub const TAIL_MASS_MAX: f64 = 1e-6;

    /// Slack for the bound ordering chain `C >= C_A >= C_R`.
    pub const ORDERING_SLACK: f64 = 1e-9;

    /// Agreement required between the closed-form RLD bound and its
    /// maximization oracle.
    pub const ORACLE_AGREE: f64 = 1e-6;

    /// Bloch radius above which a state is treated as exactly pure and the
    /// RLD path is skipped.
    pub const PURE_RADIUS: f64 = 1.0 - 1e-6;
}
