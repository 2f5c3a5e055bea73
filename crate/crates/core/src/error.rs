//! Error type shared by every module.

use alloc::string::String;

/// Errors raised by the model, the solvers and the analytic drive layer.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// A parameter is outside its documented domain.
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter {
        /// Parameter name.
        name: &'static str,
        /// What is wrong with it.
        reason: String,
    },
    /// Two operators (or an operator and a basis) disagree on dimension.
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch {
        /// Expected dimension.
        expected: usize,
        /// Dimension actually supplied.
        found: usize,
    },
    /// An operator violates the Hermiticity bound.
    #[error("matrix not Hermitian: worst element ({row}, {col}) deviates by {deviation:e} (max entry {scale:e})")]
    NotHermitian {
        /// Row of the worst element.
        row: usize,
        /// Column of the worst element.
        col: usize,
        /// |M_ij - conj(M_ji)|.
        deviation: f64,
        /// max |M_ij|.
        scale: f64,
    },
    /// The dense eigensolver did not converge.
    #[error("eigensolver did not converge for a {dim}x{dim} matrix")]
    EigenNonConvergence {
        /// Matrix dimension.
        dim: usize,
    },
    /// An eigenpair residual exceeds the accepted bound.
    #[error("eigenpair {index} residual {residual:e} exceeds bound {bound:e}")]
    ResidualTooLarge {
        /// Eigenpair index (0-based, ascending).
        index: usize,
        /// ||Hv - Ev||.
        residual: f64,
        /// Accepted bound.
        bound: f64,
    },
    /// The orbital gap above the qubit doublet is too small for a two-level description.
    #[error("gap to third level is only {ratio:.3} times the qubit splitting (need > {required})")]
    GapTooSmall {
        /// (E3 - E2) / (E2 - E1).
        ratio: f64,
        /// Required ratio.
        required: f64,
    },
    /// Fewer eigenpairs than the operation needs.
    #[error("need at least {needed} eigenpairs, have {available}")]
    TooFewStates {
        /// Required count.
        needed: usize,
        /// Available count.
        available: usize,
    },
    /// A drive frequency sits inside the guard band of a perturbative pole.
    #[error("tone {tone:?} is within the pole guard band of level {level} (|Delta +- hbar omega| = {distance:e} meV)")]
    PoleProximity {
        /// Index of the offending tone, when known.
        tone: Option<usize>,
        /// Level index (1-based) of the pole.
        level: usize,
        /// Distance to the pole, meV.
        distance: f64,
    },
    /// The R0 denominator vanishes.
    #[error("response ratio denominator vanishes")]
    DenominatorVanishes,
    /// Cancellation needs an opposite-sign response ratio.
    #[error("no cancellation possible: R0 = {r0} is not negative")]
    NoCancellation {
        /// The offending ratio.
        r0: f64,
    },
    /// No sign change of the total shift in the requested band.
    #[error("no cancellation root in the requested band")]
    NoRootInBand,
    /// The mixed-channel estimate is used too close to resonance.
    #[error("Floquet-Magnus estimate invalid: detuning {detuning:e} rad/s is not >> Rabi rate {rabi:e} rad/s")]
    FmValidityViolated {
        /// Smallest |omega0 - omega_alpha|.
        detuning: f64,
        /// Largest Rabi rate.
        rabi: f64,
    },
    /// Potential evaluated on top of the defect.
    #[error("potential evaluated at the defect position")]
    SingularPoint,
    /// Quadrature order ladder exhausted without convergence.
    #[error("quadrature did not converge: last relative change {last_change:e}")]
    QuadratureNotConverged {
        /// Relative change between the last two orders.
        last_change: f64,
    },
    /// A propagator drifted away from unitarity.
    #[error("unitarity drift {drift:e} exceeds bound")]
    UnitarityDrift {
        /// max |U^dagger U - 1|.
        drift: f64,
    },
    /// A frequency ratio cannot be rationalized within tolerance.
    #[error("frequency ratio {ratio} not commensurate within tolerance (best {num}/{den})")]
    Incommensurate {
        /// The ratio.
        ratio: f64,
        /// Best numerator.
        num: u64,
        /// Best denominator.
        den: u64,
    },
    /// Operand of a gate-fidelity computation is not unitary.
    #[error("matrix is not unitary (drift {drift:e})")]
    NonUnitary {
        /// max |U^dagger U - 1|.
        drift: f64,
    },
    /// Every point of a scan band is masked.
    #[error("scan band is empty after applying validity masks")]
    EmptyBandAfterMask,
}

/// Crate-wide result alias.
pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter { name, reason: reason.into() }
}
