//! Channel diagnostics computed from the correlation matrix `T`:
//!
//! * `N(ρ) = Tr√(TᵀT)`; the state beats the classical fidelity 2/3 under the
//!   standard scheme iff `N > 1`, and then `F_max = ½(1 + N/3)`.
//! * `M(ρ)` = sum of the two largest eigenvalues of `TᵀT`; the CHSH inequality
//!   is violated iff `M > 1`, with maximal CHSH value `2√M`.
//! * the partial-transpose test, exact for two qubits.
//!
//! `N ≥ M` holds for every state because each eigenvalue of `TᵀT` is at most 1,
//! hence every CHSH-violating state is useful for teleportation.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{det3, hermitian_eigen, ComplexMat4, Vec3};
use crate::states::{hs_decompose, pauli_dot, trace_product, DensityMatrix, HsDecomposition};
use crate::linalg::kron;
use crate::tol;

/// Sum of the singular values of `T`.
pub fn n_value(d: &HsDecomposition) -> f64 {
    d.singular_values().iter().sum()
}

/// `σ₁² + σ₂²`, the two largest eigenvalues of `TᵀT`.
pub fn m_value(d: &HsDecomposition) -> f64 {
    let [u1, u2, _] = d.correlation_eigenvalues();
    u1 + u2
}

/// Maximal average fidelity of the standard scheme,
/// `max over O ∈ SO(3) of ½(1 − ⅓ Tr(T·O))`.
///
/// For `det T < 0` this is `½(1 + ⅓(σ₁ + σ₂ + σ₃))`; otherwise a proper
/// rotation can flip only an even number of signs and the maximum is
/// `½(1 + ⅓(σ₁ + σ₂ − σ₃))`. Every state with `N > 1` falls in the first case.
pub fn f_max(d: &HsDecomposition) -> f64 {
    0.5 * (1.0 + max_rotation_trace(d) / 3.0)
}

/// `max over O ∈ SO(3) of −Tr(T·O)`.
pub(crate) fn max_rotation_trace(d: &HsDecomposition) -> f64 {
    let [s1, s2, s3] = d.singular_values();
    if det3(&d.t) < 0.0 {
        s1 + s2 + s3
    } else {
        s1 + s2 - s3
    }
}

/// Maximal CHSH expectation `2√M`.
pub fn b_max(d: &HsDecomposition) -> f64 {
    2.0 * m_value(d).max(0.0).sqrt()
}

/// `E(a, b) = Tr(ρ a·σ ⊗ b·σ) = (a, T b)` for unit vectors `a`, `b`.
pub fn correlation(d: &HsDecomposition, a: &Vec3, b: &Vec3) -> Result<f64> {
    for v in [a, b] {
        let norm = v.norm();
        if !((norm - 1.0).abs() <= tol::EIG) {
            return Err(Error::NotUnitVector { norm });
        }
    }
    Ok(a.dot(&d.t.mul_vec(b)))
}

/// Same quantity as [`correlation`], evaluated directly as a trace on the
/// 4×4 matrix.
pub fn correlation_direct(rho: &DensityMatrix, a: &Vec3, b: &Vec3) -> f64 {
    trace_product(rho.matrix(), &kron(&pauli_dot(a), &pauli_dot(b))).re
}

/// Transposes the second subsystem: `ρ^{T₂}_{mμ,nν} = ρ_{mν,nμ}`.
pub fn partial_transpose(rho: &DensityMatrix) -> ComplexMat4 {
    partial_transpose_matrix(rho.matrix())
}

pub fn partial_transpose_matrix(m: &ComplexMat4) -> ComplexMat4 {
    let mut out = ComplexMat4::zeros();
    for a in 0..2 {
        for mu in 0..2 {
            for b in 0..2 {
                for nu in 0..2 {
                    out.0[2 * a + mu][2 * b + nu] = m.0[2 * a + nu][2 * b + mu];
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PptTest {
    pub separable: bool,
    pub min_eigenvalue: f64,
}

/// Partial-transpose test. For two qubits a positive partial transpose is
/// necessary and sufficient for separability.
pub fn is_separable(rho: &DensityMatrix) -> PptTest {
    let pt = partial_transpose(rho);
    let min_eigenvalue = hermitian_eigen(&pt)
        .expect("partial transpose of a Hermitian matrix is Hermitian")
        .values[0];
    PptTest {
        separable: min_eigenvalue >= -tol::PSD,
        min_eigenvalue,
    }
}

/// Everything the crate knows about a state used as a teleportation channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChannelReport {
    pub n_value: f64,
    pub m_value: f64,
    pub f_max: f64,
    pub b_max: f64,
    pub ppt_min_eigenvalue: f64,
    pub separable: bool,
    pub bell_violating: bool,
    pub useful: bool,
    /// Some diagnostic lies within tolerance of its threshold.
    pub marginal: bool,
    /// `N ≤ 1`: `f_max` is the rotation maximum but not `½(1 + N/3)`.
    pub extended_formula: bool,
}

pub fn analyze(rho: &DensityMatrix) -> ChannelReport {
    analyze_with(rho, &hs_decompose(rho))
}

pub(crate) fn analyze_with(rho: &DensityMatrix, d: &HsDecomposition) -> ChannelReport {
    let n = n_value(d);
    let m = m_value(d);
    let ppt = is_separable(rho);
    let report = ChannelReport {
        n_value: n,
        m_value: m,
        f_max: f_max(d),
        b_max: b_max(d),
        ppt_min_eigenvalue: ppt.min_eigenvalue,
        separable: ppt.separable,
        bell_violating: m > 1.0 + tol::CLASS,
        useful: n > 1.0 + tol::CLASS,
        marginal: (n - 1.0).abs() <= tol::CLASS
            || (m - 1.0).abs() <= tol::CLASS
            || ppt.min_eigenvalue.abs() <= tol::PSD,
        extended_formula: n <= 1.0,
    };
    debug_assert!(!report.bell_violating || report.useful, "{report:?}");
    debug_assert!(!report.useful || !report.separable, "{report:?}");
    report
}
