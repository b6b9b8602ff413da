//! Bob's correction unitaries.
//!
//! A single-qubit unitary `U` acts on Bloch vectors through
//!
//! ```text
//! U (n·σ) U† = (Oᵀ n)·σ
//! ```
//!
//! which defines a proper rotation `O` (two-to-one: `U` and `−U`, indeed any
//! `e^{iα}U`, give the same `O`). With this orientation the map reverses
//! products, `O(U·V) = O(V)·O(U)`.
//!
//! For corrections `U_k = σ_k·U` the averaged fidelity collapses to
//! `½(1 − ⅓ Tr(T·O(U)))`, independent of the outcome, so the optimal strategy
//! is the lift of the rotation that maximizes `−Tr(T·O)`.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{det3, svd3, CMat, ComplexMat2, RealMat3, Vec3};
use crate::states::{pauli, trace_product, HsDecomposition};
use crate::tol;

/// Proper rotation of R³.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Rotation(RealMat3);

impl Rotation {
    pub fn new(o: RealMat3) -> Result<Self> {
        let orthogonality = if o.is_finite() { o.orthogonality_error() } else { f64::INFINITY };
        let det = det3(&o);
        if !(orthogonality <= tol::EIG) || !((det - 1.0).abs() <= tol::EIG) {
            return Err(Error::NotRotation { orthogonality, det });
        }
        Ok(Rotation(o))
    }

    pub fn identity() -> Self {
        Rotation(RealMat3::identity())
    }

    pub fn matrix(&self) -> &RealMat3 {
        &self.0
    }

    /// Active rotation matrix of the unit quaternion `(w, x, y, z)`.
    pub fn from_quaternion(q: [f64; 4]) -> Self {
        let n = q.iter().map(|c| c * c).sum::<f64>().sqrt();
        let [w, x, y, z] = q.map(|c| c / n);
        Rotation(RealMat3([
            [1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y)],
            [2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x)],
            [2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y)],
        ]))
    }

    /// Haar-random rotation.
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        Self::from_quaternion(random_unit_quaternion(rng))
    }

    pub fn compose(&self, other: &Rotation) -> Rotation {
        Rotation(self.0 * other.0)
    }
}

fn random_unit_quaternion<R: Rng + ?Sized>(rng: &mut R) -> [f64; 4] {
    loop {
        let q: [f64; 4] = std::array::from_fn(|_| StandardNormal.sample(rng));
        let n = q.iter().map(|c| c * c).sum::<f64>().sqrt();
        if n > 1e-6 {
            return q.map(|c| c / n);
        }
    }
}

/// `w I − i (x σ_x + y σ_y + z σ_z)`.
fn unitary_from_quaternion([w, x, y, z]: [f64; 4]) -> ComplexMat2 {
    CMat([
        [Complex64::new(w, -z), Complex64::new(-y, -x)],
        [Complex64::new(y, -x), Complex64::new(w, z)],
    ])
}

/// Haar-random element of U(2).
pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R) -> ComplexMat2 {
    let u = unitary_from_quaternion(random_unit_quaternion(rng));
    let alpha: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    u.scale(Complex64::from_polar(1.0, alpha))
}

pub fn check_unitary(u: &ComplexMat2) -> Result<()> {
    let deviation = u.unitary_deviation();
    if !(deviation <= tol::EIG) {
        return Err(Error::NotUnitary { deviation });
    }
    Ok(())
}

/// The rotation `O` with `U (n·σ) U† = (Oᵀ n)·σ` for every unit `n`.
pub fn so3_from_su2(u: &ComplexMat2) -> Result<Rotation> {
    check_unitary(u)?;
    Ok(so3_unchecked(u))
}

pub(crate) fn so3_unchecked(u: &ComplexMat2) -> Rotation {
    // Column j of Oᵀ is the Bloch vector of U σ_j U†.
    let mut ot = RealMat3::ZERO;
    for j in 0..3 {
        let conj = pauli(j + 1).conjugate_by(u);
        for i in 0..3 {
            ot.0[i][j] = 0.5 * trace_product(&pauli(i + 1), &conj).re;
        }
    }
    Rotation(ot.transpose())
}

/// A unitary `U` with `so3_from_su2(U) = O`.
///
/// The quaternion of `Oᵀ` is extracted on the branch of the largest of
/// (trace, diagonal entries), which stays well conditioned at every angle
/// including π. Global phase: the first entry (row-major) of non-negligible
/// modulus is made real positive.
pub fn su2_from_so3(o: &RealMat3) -> Result<ComplexMat2> {
    let rot = Rotation::new(*o)?;
    Ok(lift(&rot))
}

pub(crate) fn lift(rot: &Rotation) -> ComplexMat2 {
    let r = rot.0.transpose().0;
    let trace = r[0][0] + r[1][1] + r[2][2];
    let q = if trace >= r[0][0] && trace >= r[1][1] && trace >= r[2][2] {
        let w = 0.5 * (1.0 + trace).max(0.0).sqrt();
        [w, (r[2][1] - r[1][2]) / (4.0 * w), (r[0][2] - r[2][0]) / (4.0 * w), (r[1][0] - r[0][1]) / (4.0 * w)]
    } else if r[0][0] >= r[1][1] && r[0][0] >= r[2][2] {
        let x = 0.5 * (1.0 + r[0][0] - r[1][1] - r[2][2]).max(0.0).sqrt();
        [(r[2][1] - r[1][2]) / (4.0 * x), x, (r[0][1] + r[1][0]) / (4.0 * x), (r[0][2] + r[2][0]) / (4.0 * x)]
    } else if r[1][1] >= r[2][2] {
        let y = 0.5 * (1.0 - r[0][0] + r[1][1] - r[2][2]).max(0.0).sqrt();
        [(r[0][2] - r[2][0]) / (4.0 * y), (r[0][1] + r[1][0]) / (4.0 * y), y, (r[1][2] + r[2][1]) / (4.0 * y)]
    } else {
        let z = 0.5 * (1.0 - r[0][0] - r[1][1] + r[2][2]).max(0.0).sqrt();
        [(r[1][0] - r[0][1]) / (4.0 * z), (r[0][2] + r[2][0]) / (4.0 * z), (r[1][2] + r[2][1]) / (4.0 * z), z]
    };
    let n = q.iter().map(|c| c * c).sum::<f64>().sqrt();
    fix_phase(&unitary_from_quaternion(q.map(|c| c / n)))
}

/// Multiplies by the global phase that makes the first entry (row-major)
/// with modulus above 1e-8 real and positive.
pub fn fix_phase(u: &ComplexMat2) -> ComplexMat2 {
    match u.0.iter().flatten().find(|z| z.norm() > 1e-8) {
        Some(z) => u.scale(z.conj() / z.norm()),
        None => *u,
    }
}

/// Rotations `O1`, `O2` with `O1·T·O2 = diag(d)`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SignedDiagonalization {
    pub o1: Rotation,
    pub o2: Rotation,
    /// Ascending. All non-positive when `det T < 0`; otherwise `d₁, d₂ ≤ 0 ≤ d₃`.
    pub d: [f64; 3],
}

/// Diagonalizes `T` by two proper rotations, making as many diagonal entries
/// negative as properness allows.
pub fn signed_diagonalize(t: &RealMat3) -> SignedDiagonalization {
    let svd = svd3(t);
    let sa = det3(&svd.u).signum();
    let sb = det3(&svd.v).signum();
    let eps = [sa; 3];
    let mut delta = if det3(t) < 0.0 { [-sa; 3] } else { [-sa, -sa, sa] };
    // Only reachable for (numerically) singular T, where σ₃ ≈ 0 and the sign
    // of d₃ is immaterial.
    if sb * delta.iter().product::<f64>() < 0.0 {
        delta[2] = -delta[2];
    }
    let o1 = RealMat3::diag(eps) * svd.u.transpose();
    let o2 = svd.v * RealMat3::diag(delta);
    let d = std::array::from_fn(|i| eps[i] * delta[i] * svd.sigma[i]);
    SignedDiagonalization { o1: Rotation(o1), o2: Rotation(o2), d }
}

/// Four corrections, `corrections[k]` applied after Alice reports outcome `k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Strategy {
    corrections: [ComplexMat2; 4],
}

impl Strategy {
    /// `U_k = σ_k·U` with `σ₀ = I`.
    pub fn from_base(u: ComplexMat2) -> Result<Self> {
        check_unitary(&u)?;
        Ok(Strategy { corrections: std::array::from_fn(|k| pauli(k) * u) })
    }

    /// Arbitrary quadruple of unitaries.
    pub fn from_corrections(corrections: [ComplexMat2; 4]) -> Result<Self> {
        for u in &corrections {
            check_unitary(u)?;
        }
        Ok(Strategy { corrections })
    }

    /// The original protocol: `U_k = σ_k`.
    pub fn standard() -> Self {
        Strategy { corrections: std::array::from_fn(pauli) }
    }

    /// Four independent Haar-random corrections.
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        Strategy { corrections: std::array::from_fn(|_| random_unitary(rng)) }
    }

    /// `U`, equal to the correction for outcome 0.
    pub fn base_unitary(&self) -> &ComplexMat2 {
        &self.corrections[0]
    }

    pub fn corrections(&self) -> &[ComplexMat2; 4] {
        &self.corrections
    }

    pub fn correction(&self, k: usize) -> Result<&ComplexMat2> {
        self.corrections.get(k).ok_or(Error::IndexOutOfRange { index: k, len: 4 })
    }

    /// Rotations `O_k` of the four corrections.
    pub fn rotations(&self) -> [Rotation; 4] {
        self.corrections.map(|u| so3_unchecked(&u))
    }
}

/// Optimal corrections for the channel with correlation matrix `d.t`.
#[derive(Debug, Clone, Copy)]
pub struct OptimalStrategy {
    pub strategy: Strategy,
    pub rotation: Rotation,
    pub diagonalization: SignedDiagonalization,
}

/// With `O1·T·O2 = D`, the rotation `O = O2·O1` gives `−Tr(T·O) = −Tr(D)`,
/// the largest value reachable by a proper rotation; its lift `U` generates
/// the strategy `U_k = σ_k·U`.
pub fn optimal_strategy(d: &HsDecomposition) -> OptimalStrategy {
    let diagonalization = signed_diagonalize(&d.t);
    let rotation = diagonalization.o2.compose(&diagonalization.o1);
    let u = lift(&rotation);
    let strategy = Strategy::from_base(u).expect("lifted rotation is unitary");
    OptimalStrategy { strategy, rotation, diagonalization }
}

/// Pauli coefficients `(T_k, r_k, s_k)` of the Bell projector `P_k`.
pub fn bell_projector_decomposition(k: usize) -> Result<HsDecomposition> {
    let diag = match k {
        0 => [-1.0, -1.0, -1.0],
        1 => [-1.0, 1.0, 1.0],
        2 => [1.0, -1.0, 1.0],
        3 => [1.0, 1.0, -1.0],
        _ => return Err(Error::IndexOutOfRange { index: k, len: 4 }),
    };
    Ok(HsDecomposition { r: Vec3::ZERO, s: Vec3::ZERO, t: RealMat3::diag(diag) })
}
