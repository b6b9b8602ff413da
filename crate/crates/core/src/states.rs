//! Two-qubit density matrices: validation, the Pauli-basis (Hilbert-Schmidt)
//! decomposition
//!
//! ```text
//! ρ = ¼ [ I⊗I + r·σ⊗I + I⊗s·σ + Σ t_nm σ_n⊗σ_m ]
//! ```
//!
//! and the named state families used throughout the crate.
//!
//! Basis ordering is |e_i ⊗ e_j⟩ for (i, j) = (1,1), (1,2), (2,1), (2,2),
//! i.e. indices 0..3 with the first qubit most significant.

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigen, kron, CMat, ComplexMat2, ComplexMat4, RealMat3, Svd3, Vec3};
use crate::tol;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Pauli matrix σ_n for n = 1, 2, 3 (x, y, z); n = 0 gives the identity.
///
/// # Panics
///
/// If `n > 3`.
pub fn pauli(n: usize) -> ComplexMat2 {
    match n {
        0 => CMat::identity(),
        1 => CMat([[ZERO, ONE], [ONE, ZERO]]),
        2 => CMat([[ZERO, -I], [I, ZERO]]),
        3 => CMat::from_real_diag([1.0, -1.0]),
        _ => panic!("Pauli index {n} out of range 0..=3"),
    }
}

/// `v·σ = Σ v_n σ_n`.
pub fn pauli_dot(v: &Vec3) -> ComplexMat2 {
    (1..=3).fold(ComplexMat2::zeros(), |acc, n| acc + pauli(n).scale_re(v.0[n - 1]))
}

/// `Tr(A·B)` without forming the product.
pub(crate) fn trace_product<const N: usize>(a: &CMat<N>, b: &CMat<N>) -> Complex64 {
    let mut acc = ZERO;
    for i in 0..N {
        for j in 0..N {
            acc += a.0[i][j] * b.0[j][i];
        }
    }
    acc
}

/// Validated two-qubit state: Hermitian, unit trace, positive semidefinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityMatrix {
    mat: ComplexMat4,
}

impl DensityMatrix {
    pub fn matrix(&self) -> &ComplexMat4 {
        &self.mat
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> [f64; 4] {
        hermitian_eigen(&self.mat)
            .expect("validated density matrix is Hermitian")
            .values
    }
}

/// Checks the three density-matrix invariants. The trace is not renormalized.
pub fn validate(mat: ComplexMat4) -> Result<DensityMatrix> {
    let deviation = mat.hermitian_deviation();
    if !(deviation <= tol::HERM) {
        return Err(Error::NotHermitian { deviation });
    }
    let trace_dev = (mat.trace() - ONE).norm();
    if trace_dev > tol::TRACE {
        return Err(Error::TraceNotOne { deviation: mat.trace().re - 1.0 });
    }
    let min_eigenvalue = hermitian_eigen(&mat)?.values[0];
    if min_eigenvalue < -tol::PSD {
        return Err(Error::NotPositive { min_eigenvalue });
    }
    Ok(DensityMatrix { mat })
}

/// Local Bloch vectors `r`, `s` and correlation matrix `t` of a two-qubit state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HsDecomposition {
    pub r: Vec3,
    pub s: Vec3,
    pub t: RealMat3,
}

impl HsDecomposition {
    pub fn svd(&self) -> Svd3 {
        crate::linalg::svd3(&self.t)
    }

    /// Singular values of `t`, descending.
    pub fn singular_values(&self) -> [f64; 3] {
        self.svd().sigma
    }

    /// Eigenvalues `u_i` of TᵀT, descending.
    pub fn correlation_eigenvalues(&self) -> [f64; 3] {
        self.singular_values().map(|x| x * x)
    }
}

pub fn hs_decompose(rho: &DensityMatrix) -> HsDecomposition {
    let id = ComplexMat2::identity();
    let m = rho.matrix();
    let coeff = |op: ComplexMat4| {
        let z = trace_product(m, &op);
        debug_assert!(z.im.abs() <= 10.0 * tol::EIG, "imaginary part {}", z.im);
        z.re
    };
    let r = Vec3(std::array::from_fn(|n| coeff(kron(&pauli(n + 1), &id))));
    let s = Vec3(std::array::from_fn(|n| coeff(kron(&id, &pauli(n + 1)))));
    let t = RealMat3(std::array::from_fn(|n| {
        std::array::from_fn(|k| coeff(kron(&pauli(n + 1), &pauli(k + 1))))
    }));
    HsDecomposition { r, s, t }
}

/// Rebuilds the operator from its Pauli-basis coefficients. The result is
/// Hermitian with unit trace but is positive only if the coefficients came
/// from a state; pass it through [`validate`] before use.
pub fn hs_compose(d: &HsDecomposition) -> ComplexMat4 {
    let id = ComplexMat2::identity();
    let mut m = ComplexMat4::identity();
    m = m + kron(&pauli_dot(&d.r), &id) + kron(&id, &pauli_dot(&d.s));
    for n in 0..3 {
        for k in 0..3 {
            let c = d.t.0[n][k];
            if c != 0.0 {
                m = m + kron(&pauli(n + 1), &pauli(k + 1)).scale_re(c);
            }
        }
    }
    m.scale_re(0.25)
}

/// Reduced state of the first qubit.
pub fn partial_trace_second(m: &ComplexMat4) -> ComplexMat2 {
    let mut out = ComplexMat2::zeros();
    for i in 0..2 {
        for j in 0..2 {
            out.0[i][j] = (0..2).map(|k| m.0[2 * i + k][2 * j + k]).sum();
        }
    }
    out
}

/// Reduced state of the second qubit.
pub fn partial_trace_first(m: &ComplexMat4) -> ComplexMat2 {
    let mut out = ComplexMat2::zeros();
    for i in 0..2 {
        for j in 0..2 {
            out.0[i][j] = (0..2).map(|k| m.0[2 * k + i][2 * k + j]).sum();
        }
    }
    out
}

/// Pure single-qubit state given by its unit Bloch vector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QubitState {
    a: Vec3,
}

impl QubitState {
    pub fn new(a: Vec3) -> Result<Self> {
        let norm = a.norm();
        if !((norm - 1.0).abs() <= tol::EIG) {
            return Err(Error::NotUnitVector { norm });
        }
        Ok(QubitState { a })
    }

    /// Uniform on the Bloch sphere: z uniform in [−1, 1], azimuth uniform in [0, 2π).
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let z: f64 = rng.random_range(-1.0..=1.0);
        let phi: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        let rho = (1.0 - z * z).max(0.0).sqrt();
        let a = Vec3::new(rho * phi.cos(), rho * phi.sin(), z);
        // Renormalize rounding so the unit-norm invariant holds exactly enough.
        QubitState { a: a.scale(1.0 / a.norm()) }
    }

    pub fn bloch(&self) -> Vec3 {
        self.a
    }

    /// `P_φ = ½(I + a·σ)`.
    pub fn projector(&self) -> ComplexMat2 {
        (ComplexMat2::identity() + pauli_dot(&self.a)).scale_re(0.5)
    }

    /// State vector `(cos θ/2, e^{iφ} sin θ/2)`, global phase fixed by a real
    /// first component.
    pub fn ket(&self) -> [Complex64; 2] {
        let [x, y, z] = self.a.0;
        let theta = z.clamp(-1.0, 1.0).acos();
        let phi = y.atan2(x);
        [
            Complex64::new((theta / 2.0).cos(), 0.0),
            Complex64::from_polar((theta / 2.0).sin(), phi),
        ]
    }
}

/// Bell vector ψ_k with ψ₁,₂ = (e₁e₁ ∓ e₂e₂)/√2 and ψ₃,₀ = (e₁e₂ ± e₂e₁)/√2,
/// so that ψ₀ is the singlet.
pub fn bell_vector(k: usize) -> Result<[Complex64; 4]> {
    let h = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    match k {
        0 => Ok([ZERO, h, -h, ZERO]),
        1 => Ok([h, ZERO, ZERO, -h]),
        2 => Ok([h, ZERO, ZERO, h]),
        3 => Ok([ZERO, h, h, ZERO]),
        _ => Err(Error::IndexOutOfRange { index: k, len: 4 }),
    }
}

pub fn bell_state(k: usize) -> Result<DensityMatrix> {
    let v = bell_vector(k)?;
    validate(CMat::outer(&v, &v))
}

pub fn singlet() -> DensityMatrix {
    bell_state(0).expect("index 0 is a Bell state")
}

/// `|ψ⟩ = a|e₁e₂⟩ − b|e₂e₁⟩` with `b = √(1 − a²)`, for `0 < a < 1`.
pub fn tilted_singlet(a: f64) -> Result<DensityMatrix> {
    if !(a > 0.0 && a < 1.0) {
        return Err(Error::AmplitudeOutOfRange { value: a });
    }
    let b = (1.0 - a * a).sqrt();
    let v = [ZERO, Complex64::new(a, 0.0), Complex64::new(-b, 0.0), ZERO];
    validate(CMat::outer(&v, &v))
}

/// `ρ = p₁|ψ₁⟩⟨ψ₁| + p₂|ψ₂⟩⟨ψ₂|` with `ψ₁ = a|e₁e₁⟩ + b|e₂e₂⟩`,
/// `ψ₂ = a|e₁e₂⟩ + b|e₂e₁⟩` and `p₂ = 1 − p₁`, enforcing
/// `0 < (p₁ − p₂)² ≤ (a² − b²)²`.
///
/// Inside that region these states are entangled yet have `N(ρ) ≤ 1`.
pub fn tilted_mixture(p1: f64, a: f64) -> Result<DensityMatrix> {
    let (rho, violation) = tilted_mixture_relaxed(p1, a)?;
    match violation {
        Some(e) => Err(e),
        None => Ok(rho),
    }
}

/// Like [`tilted_mixture`] but returns the state even when the inequality
/// constraint fails, together with the violation. Domain errors
/// (`p₁ ∉ [0, 1]`, `a ∉ (0, 1)`) are still hard errors.
pub fn tilted_mixture_relaxed(p1: f64, a: f64) -> Result<(DensityMatrix, Option<Error>)> {
    if !(0.0..=1.0).contains(&p1) {
        return Err(Error::ConstraintViolated {
            constraint: format!("0 <= p1 <= 1 (p1 = {p1})"),
        });
    }
    if !(a > 0.0 && a < 1.0) {
        return Err(Error::ConstraintViolated {
            constraint: format!("a, b > 0 with a^2 + b^2 = 1 (a = {a})"),
        });
    }
    let b = (1.0 - a * a).sqrt();
    let p2 = 1.0 - p1;
    let lhs = (p1 - p2).powi(2);
    let rhs = (a * a - b * b).powi(2);
    let violation = if !(lhs > 0.0) {
        Some(Error::ConstraintViolated {
            constraint: format!("0 < (p1 - p2)^2 (p1 = {p1})"),
        })
    } else if lhs > rhs + tol::CLASS {
        Some(Error::ConstraintViolated {
            constraint: format!("(p1 - p2)^2 = {lhs} <= (a^2 - b^2)^2 = {rhs}"),
        })
    } else {
        None
    };

    let (ca, cb) = (Complex64::new(a, 0.0), Complex64::new(b, 0.0));
    let psi1 = [ca, ZERO, ZERO, cb];
    let psi2 = [ZERO, ca, cb, ZERO];
    let m = CMat::outer(&psi1, &psi1).scale_re(p1) + CMat::outer(&psi2, &psi2).scale_re(p2);
    Ok((validate(m)?, violation))
}

/// `p·|ψ₀⟩⟨ψ₀| + (1 − p)·I/4`, positive for `−1/3 ≤ p ≤ 1`.
pub fn werner(p: f64) -> Result<DensityMatrix> {
    if !(-1.0 / 3.0..=1.0).contains(&p) {
        return Err(Error::ParameterOutOfRange {
            name: "p",
            value: p,
            reason: "Werner state is positive only for -1/3 <= p <= 1",
        });
    }
    let m = singlet().matrix().scale_re(p) + ComplexMat4::identity().scale_re((1.0 - p) / 4.0);
    validate(m)
}

pub fn maximally_mixed() -> DensityMatrix {
    validate(ComplexMat4::identity().scale_re(0.25)).expect("I/4 is a state")
}

/// Hilbert-Schmidt random state `G·G†/Tr(G·G†)` with `G` a 4×4 complex
/// Ginibre matrix drawn from a ChaCha stream keyed by `seed`.
pub fn random_density(seed: u64) -> DensityMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_density_with(&mut rng)
}

pub fn random_density_with<R: Rng + ?Sized>(rng: &mut R) -> DensityMatrix {
    let mut g = ComplexMat4::zeros();
    for z in g.0.iter_mut().flatten() {
        *z = Complex64::new(StandardNormal.sample(rng), StandardNormal.sample(rng));
    }
    let w = g * g.adjoint();
    let w = (w + w.adjoint()).scale_re(0.5);
    let tr = w.trace().re;
    validate(w.scale_re(1.0 / tr)).expect("Ginibre construction is a state")
}

/// `Σ_i w_i ρ_i^A ⊗ ρ_i^B` with `terms` pure product components drawn
/// uniformly on the Bloch sphere and weights uniform on the simplex.
pub fn random_separable(seed: u64, terms: usize) -> Result<DensityMatrix> {
    if terms == 0 {
        return Err(Error::ParameterOutOfRange {
            name: "terms",
            value: 0.0,
            reason: "at least one product term is required",
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let weights: Vec<f64> = (0..terms).map(|_| Exp1.sample(&mut rng)).collect();
    let total: f64 = weights.iter().sum();
    let mut m = ComplexMat4::zeros();
    for w in weights {
        let a = QubitState::random(&mut rng);
        let b = QubitState::random(&mut rng);
        m = m + kron(&a.projector(), &b.projector()).scale_re(w / total);
    }
    validate((m + m.adjoint()).scale_re(0.5))
}
