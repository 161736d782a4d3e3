/// Numerical tolerances shared by every module.
///
/// All thresholds live here so a run can be reconfigured in one place.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Absolute entrywise bound on `|a_ij - conj(a_ji)|`.
    pub hermiticity: f64,
    /// Bound on `|tr(rho) - 1|` for density operators.
    pub trace: f64,
    /// Smallest admissible eigenvalue of a positive semidefinite operator (negated).
    pub positivity: f64,
    /// Orthonormality of eigenvectors.
    pub orthonormality: f64,
    /// Idempotence, orthogonality and completeness of projector sets and POMs.
    pub projector: f64,
    /// Relative threshold below which `lambda_i + lambda_j` counts as kernel.
    pub kernel_eigenvalue: f64,
    /// Relative threshold below which a right-hand side entry on the kernel is negligible.
    pub kernel_rhs: f64,
    /// Eigenvalues closer than this share one projector.
    pub merge: f64,
    /// Outcome probabilities at or below this are treated as zero.
    pub zero_probability: f64,
    /// First moments above this on a zero-probability outcome are an error.
    pub zero_moment: f64,
    /// Born probabilities must sum to one within this bound.
    pub probability_sum: f64,
    /// Prior densities must integrate to one within this bound.
    pub normalization: f64,
}

impl Tolerances {
    pub const DEFAULT: Tolerances = Tolerances {
        hermiticity: 1e-12,
        trace: 1e-10,
        positivity: 1e-10,
        orthonormality: 1e-10,
        projector: 1e-9,
        kernel_eigenvalue: 1e-12,
        kernel_rhs: 1e-10,
        merge: 1e-8,
        zero_probability: 1e-14,
        zero_moment: 1e-12,
        probability_sum: 1e-9,
        normalization: 1e-8,
    };
}

impl Default for Tolerances {
    fn default() -> Self {
        Self::DEFAULT
    }
}
