//! Numerical thresholds shared across modules.

/// Hermiticity, trace and positivity tolerance for a stored density matrix.
pub const STATE_TOL: f64 = 1e-10;

/// Residual of `A - A^H` above which an eigendecomposition input is rejected.
pub const HERMITIAN_HARD_TOL: f64 = 1e-8;

/// Relative eigenvalue cutoff (times the largest eigenvalue) for range-restricted inverses.
pub const RANGE_CUTOFF_REL: f64 = 1e-12;

/// Smallest eigenvalue of the measured qubit's marginal that still counts as full rank.
pub const RANK_CUTOFF: f64 = 1e-10;

/// Outcome probabilities below this are dropped from conditional-entropy sums.
pub const PROB_FLOOR: f64 = 1e-14;
