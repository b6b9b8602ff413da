//! Absolute tolerances. Every quantity in this crate (density-matrix entries,
//! correlation-matrix entries, Bloch components) is bounded by 1 in magnitude,
//! so all comparisons are absolute.

/// Hermiticity check on input matrices.
pub const HERM: f64 = 1e-9;

/// Eigen/SVD residuals, unit-vector and unitarity checks.
pub const EIG: f64 = 1e-10;

/// Deviation of the trace from 1.
pub const TRACE: f64 = 1e-9;

/// Slack on positivity: eigenvalues down to `-PSD` count as nonnegative.
pub const PSD: f64 = 1e-9;

/// Threshold comparisons in the channel classifier.
pub const CLASS: f64 = 1e-9;
