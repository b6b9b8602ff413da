//! Dense linear algebra at the fixed sizes this crate needs: complex 2×2, 4×4
//! and 8×8 matrices, and real 3-vectors and 3×3 matrices.
//!
//! The Hermitian eigensolver is a cyclic complex Jacobi iteration and the 3×3
//! SVD is a one-sided (Hestenes) Jacobi iteration. Both are unconditionally
//! stable at these sizes and converge to working precision in a handful of
//! sweeps.

use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tol;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

const MAX_SWEEPS: usize = 64;

/// Square complex matrix with compile-time dimension, row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CMat<const N: usize>(pub [[Complex64; N]; N]);

pub type ComplexMat2 = CMat<2>;
pub type ComplexMat4 = CMat<4>;
pub type ComplexMat8 = CMat<8>;

impl<const N: usize> CMat<N> {
    pub fn zeros() -> Self {
        CMat([[ZERO; N]; N])
    }

    pub fn identity() -> Self {
        let mut m = Self::zeros();
        for i in 0..N {
            m.0[i][i] = ONE;
        }
        m
    }

    pub fn from_real_diag(d: [f64; N]) -> Self {
        let mut m = Self::zeros();
        for i in 0..N {
            m.0[i][i] = Complex64::new(d[i], 0.0);
        }
        m
    }

    /// Outer product |u⟩⟨v|.
    pub fn outer(u: &[Complex64; N], v: &[Complex64; N]) -> Self {
        let mut m = Self::zeros();
        for i in 0..N {
            for j in 0..N {
                m.0[i][j] = u[i] * v[j].conj();
            }
        }
        m
    }

    pub fn adjoint(&self) -> Self {
        let mut m = Self::zeros();
        for i in 0..N {
            for j in 0..N {
                m.0[i][j] = self.0[j][i].conj();
            }
        }
        m
    }

    pub fn trace(&self) -> Complex64 {
        (0..N).map(|i| self.0[i][i]).sum()
    }

    pub fn scale(&self, alpha: Complex64) -> Self {
        let mut m = *self;
        m.0.iter_mut().flatten().for_each(|z| *z *= alpha);
        m
    }

    pub fn scale_re(&self, alpha: f64) -> Self {
        self.scale(Complex64::new(alpha, 0.0))
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.0
            .iter()
            .flatten()
            .zip(other.0.iter().flatten())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().flatten().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Largest entry of |H − H†|; infinite if any entry is not finite.
    pub fn hermitian_deviation(&self) -> f64 {
        if !self.is_finite() {
            return f64::INFINITY;
        }
        self.max_abs_diff(&self.adjoint())
    }

    /// Largest entry of |U†U − I|; infinite if any entry is not finite.
    pub fn unitary_deviation(&self) -> f64 {
        if !self.is_finite() {
            return f64::INFINITY;
        }
        (self.adjoint() * *self).max_abs_diff(&Self::identity())
    }

    pub fn mul_vec(&self, v: &[Complex64; N]) -> [Complex64; N] {
        let mut out = [ZERO; N];
        for i in 0..N {
            out[i] = (0..N).map(|j| self.0[i][j] * v[j]).sum();
        }
        out
    }

    /// `U · self · U†`.
    pub fn conjugate_by(&self, u: &Self) -> Self {
        *u * *self * u.adjoint()
    }
}

impl<const N: usize> Default for CMat<N> {
    fn default() -> Self {
        Self::zeros()
    }
}

impl<const N: usize> Mul for CMat<N> {
    type Output = CMat<N>;

    fn mul(self, rhs: Self) -> Self {
        let mut m = Self::zeros();
        for i in 0..N {
            for k in 0..N {
                let a = self.0[i][k];
                if a == ZERO {
                    continue;
                }
                for j in 0..N {
                    m.0[i][j] += a * rhs.0[k][j];
                }
            }
        }
        m
    }
}

impl<const N: usize> Add for CMat<N> {
    type Output = CMat<N>;

    fn add(mut self, rhs: Self) -> Self {
        for i in 0..N {
            for j in 0..N {
                self.0[i][j] += rhs.0[i][j];
            }
        }
        self
    }
}

impl<const N: usize> Sub for CMat<N> {
    type Output = CMat<N>;

    fn sub(mut self, rhs: Self) -> Self {
        for i in 0..N {
            for j in 0..N {
                self.0[i][j] -= rhs.0[i][j];
            }
        }
        self
    }
}

/// Kronecker product of arbitrary fixed sizes; `C` must equal `A * B`.
pub fn kron_general<const A: usize, const B: usize, const C: usize>(
    a: &CMat<A>,
    b: &CMat<B>,
) -> CMat<C> {
    assert_eq!(C, A * B, "kron output dimension must be the product of input dimensions");
    let mut m = CMat::<C>::zeros();
    for i in 0..A {
        for j in 0..A {
            for k in 0..B {
                for l in 0..B {
                    m.0[i * B + k][j * B + l] = a.0[i][j] * b.0[k][l];
                }
            }
        }
    }
    m
}

/// Kronecker product of two single-qubit operators. Block (i, j) of the
/// result is `a[i][j] · b`.
pub fn kron(a: &ComplexMat2, b: &ComplexMat2) -> ComplexMat4 {
    kron_general(a, b)
}

/// Eigendecomposition of a Hermitian matrix.
#[derive(Debug, Clone, Copy)]
pub struct HermitianEigen<const N: usize> {
    /// Eigenvalues in ascending order.
    pub values: [f64; N],
    /// Orthonormal eigenvectors stored as columns, in the order of `values`.
    pub vectors: CMat<N>,
}

impl<const N: usize> HermitianEigen<N> {
    pub fn vector(&self, i: usize) -> [Complex64; N] {
        std::array::from_fn(|r| self.vectors.0[r][i])
    }

    /// `Σ λ_i v_i v_i†`.
    pub fn reconstruct(&self) -> CMat<N> {
        (0..N).fold(CMat::zeros(), |acc, i| {
            let v = self.vector(i);
            acc + CMat::outer(&v, &v).scale_re(self.values[i])
        })
    }
}

/// Cyclic Jacobi eigensolver for Hermitian matrices.
///
/// Each rotation first removes the phase of the pivot `h_pq` with a diagonal
/// unitary and then applies a real Givens rotation, so the iteration is the
/// real symmetric Jacobi method in a rotating frame.
pub fn hermitian_eigen<const N: usize>(h: &CMat<N>) -> Result<HermitianEigen<N>> {
    let deviation = h.hermitian_deviation();
    if !(deviation <= tol::HERM) {
        return Err(Error::NotHermitian { deviation });
    }

    // Work on the exactly Hermitian part.
    let mut a = (*h + h.adjoint()).scale_re(0.5);
    let mut v = CMat::<N>::identity();
    let scale = a.0.iter().flatten().map(|z| z.norm_sqr()).sum::<f64>().sqrt();

    for _ in 0..MAX_SWEEPS {
        let off: f64 = (0..N)
            .flat_map(|p| ((p + 1)..N).map(move |q| (p, q)))
            .map(|(p, q)| a.0[p][q].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if off <= f64::EPSILON * 1e-2 * scale || off == 0.0 {
            break;
        }
        for p in 0..N {
            for q in (p + 1)..N {
                let c = a.0[p][q];
                let g = c.norm();
                if g == 0.0 {
                    continue;
                }
                let phase = c / g;
                let app = a.0[p][p].re;
                let aqq = a.0[q][q].re;
                let theta = (aqq - app) / (2.0 * g);
                let t = if theta == 0.0 {
                    1.0
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let cs = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * cs;

                // G = D·P with D_qq = conj(phase), P the real rotation.
                let mut rot = CMat::<N>::identity();
                rot.0[p][p] = Complex64::new(cs, 0.0);
                rot.0[p][q] = Complex64::new(sn, 0.0);
                rot.0[q][p] = phase.conj() * (-sn);
                rot.0[q][q] = phase.conj() * cs;

                a = rot.adjoint() * a * rot;
                a.0[p][q] = ZERO;
                a.0[q][p] = ZERO;
                v = v * rot;
            }
        }
    }

    let mut order: [usize; N] = std::array::from_fn(|i| i);
    order.sort_by(|&i, &j| a.0[i][i].re.total_cmp(&a.0[j][j].re));
    let values = std::array::from_fn(|i| a.0[order[i]][order[i]].re);
    let mut vectors = CMat::<N>::zeros();
    for (col, &src) in order.iter().enumerate() {
        for r in 0..N {
            vectors.0[r][col] = v.0[r][src];
        }
    }
    Ok(HermitianEigen { values, vectors })
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_eigenvalue<const N: usize>(h: &CMat<N>) -> Result<f64> {
    Ok(hermitian_eigen(h)?.values[0])
}

/// Real 3-vector.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Vec3(pub [f64; 3]);

impl Vec3 {
    pub const ZERO: Vec3 = Vec3([0.0; 3]);

    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3([x, y, z])
    }

    pub fn unit(axis: usize) -> Self {
        let mut v = [0.0; 3];
        v[axis] = 1.0;
        Vec3(v)
    }

    pub fn dot(&self, other: &Vec3) -> f64 {
        (0..3).map(|i| self.0[i] * other.0[i]).sum()
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn scale(&self, alpha: f64) -> Vec3 {
        Vec3(self.0.map(|x| alpha * x))
    }

    pub fn max_abs_diff(&self, other: &Vec3) -> f64 {
        (0..3).map(|i| (self.0[i] - other.0[i]).abs()).fold(0.0, f64::max)
    }
}

impl Add for Vec3 {
    type Output = Vec3;

    fn add(self, rhs: Vec3) -> Vec3 {
        Vec3(std::array::from_fn(|i| self.0[i] + rhs.0[i]))
    }
}

impl Sub for Vec3 {
    type Output = Vec3;

    fn sub(self, rhs: Vec3) -> Vec3 {
        Vec3(std::array::from_fn(|i| self.0[i] - rhs.0[i]))
    }
}

impl Neg for Vec3 {
    type Output = Vec3;

    fn neg(self) -> Vec3 {
        self.scale(-1.0)
    }
}

/// Real 3×3 matrix, row-major.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RealMat3(pub [[f64; 3]; 3]);

impl RealMat3 {
    pub const ZERO: RealMat3 = RealMat3([[0.0; 3]; 3]);

    pub fn identity() -> Self {
        Self::diag([1.0, 1.0, 1.0])
    }

    pub fn diag(d: [f64; 3]) -> Self {
        let mut m = Self::ZERO;
        for i in 0..3 {
            m.0[i][i] = d[i];
        }
        m
    }

    pub fn from_columns(cols: [Vec3; 3]) -> Self {
        RealMat3(std::array::from_fn(|r| std::array::from_fn(|c| cols[c].0[r])))
    }

    pub fn column(&self, c: usize) -> Vec3 {
        Vec3(std::array::from_fn(|r| self.0[r][c]))
    }

    pub fn diagonal(&self) -> [f64; 3] {
        std::array::from_fn(|i| self.0[i][i])
    }

    pub fn transpose(&self) -> Self {
        RealMat3(std::array::from_fn(|r| std::array::from_fn(|c| self.0[c][r])))
    }

    pub fn trace(&self) -> f64 {
        self.0[0][0] + self.0[1][1] + self.0[2][2]
    }

    pub fn det(&self) -> f64 {
        det3(self)
    }

    pub fn mul_vec(&self, v: &Vec3) -> Vec3 {
        Vec3(std::array::from_fn(|r| (0..3).map(|c| self.0[r][c] * v.0[c]).sum()))
    }

    pub fn scale(&self, alpha: f64) -> Self {
        RealMat3(self.0.map(|row| row.map(|x| alpha * x)))
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        (0..3)
            .flat_map(|r| (0..3).map(move |c| (r, c)))
            .map(|(r, c)| (self.0[r][c] - other.0[r][c]).abs())
            .fold(0.0, f64::max)
    }

    /// Largest entry of |MᵀM − I|.
    pub fn orthogonality_error(&self) -> f64 {
        (self.transpose() * *self).max_abs_diff(&Self::identity())
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().flatten().all(|x| x.is_finite())
    }
}

impl Mul for RealMat3 {
    type Output = RealMat3;

    fn mul(self, rhs: RealMat3) -> RealMat3 {
        RealMat3(std::array::from_fn(|r| {
            std::array::from_fn(|c| (0..3).map(|k| self.0[r][k] * rhs.0[k][c]).sum())
        }))
    }
}

impl Add for RealMat3 {
    type Output = RealMat3;

    fn add(self, rhs: RealMat3) -> RealMat3 {
        RealMat3(std::array::from_fn(|r| std::array::from_fn(|c| self.0[r][c] + rhs.0[r][c])))
    }
}

impl Neg for RealMat3 {
    type Output = RealMat3;

    fn neg(self) -> RealMat3 {
        self.scale(-1.0)
    }
}

/// Determinant by cofactor expansion along the first row.
pub fn det3(t: &RealMat3) -> f64 {
    let m = &t.0;
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// `T = U · diag(sigma) · Vᵀ` with orthogonal `U`, `V` and
/// `sigma[0] ≥ sigma[1] ≥ sigma[2] ≥ 0`.
#[derive(Debug, Clone, Copy)]
pub struct Svd3 {
    pub u: RealMat3,
    pub sigma: [f64; 3],
    pub v: RealMat3,
}

impl Svd3 {
    pub fn reconstruct(&self) -> RealMat3 {
        self.u * RealMat3::diag(self.sigma) * self.v.transpose()
    }
}

/// Singular value decomposition of a real 3×3 matrix by one-sided Jacobi.
///
/// Columns of `U` belonging to (numerically) zero singular values are
/// completed by Gram-Schmidt against e₁, e₂, e₃ taken in that order, so the
/// output is deterministic for rank-deficient input.
pub fn svd3(t: &RealMat3) -> Svd3 {
    let mut w = *t;
    let mut v = RealMat3::identity();

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for (i, j) in [(0usize, 1usize), (0, 2), (1, 2)] {
            let alpha: f64 = (0..3).map(|k| w.0[k][i] * w.0[k][i]).sum();
            let beta: f64 = (0..3).map(|k| w.0[k][j] * w.0[k][j]).sum();
            let gamma: f64 = (0..3).map(|k| w.0[k][i] * w.0[k][j]).sum();
            if gamma == 0.0 || gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                continue;
            }
            rotated = true;
            let zeta = (beta - alpha) / (2.0 * gamma);
            let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
            let c = 1.0 / (1.0 + t * t).sqrt();
            let s = c * t;
            for m in [&mut w, &mut v] {
                for k in 0..3 {
                    let a = m.0[k][i];
                    let b = m.0[k][j];
                    m.0[k][i] = c * a - s * b;
                    m.0[k][j] = s * a + c * b;
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let norms: [f64; 3] = std::array::from_fn(|c| w.column(c).norm());
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| norms[b].total_cmp(&norms[a]));

    let sigma = order.map(|c| norms[c]);
    let v_sorted = RealMat3::from_columns(order.map(|c| v.column(c)));

    let cutoff = sigma[0] * 1e-13;
    let mut u_cols: Vec<Vec3> = Vec::with_capacity(3);
    let mut missing = Vec::new();
    for (slot, &c) in order.iter().enumerate() {
        if sigma[slot] > cutoff && sigma[slot] > 0.0 {
            u_cols.push(w.column(c).scale(1.0 / sigma[slot]));
        } else {
            u_cols.push(Vec3::ZERO);
            missing.push(slot);
        }
    }
    for slot in missing {
        u_cols[slot] = complete_orthonormal(&u_cols);
    }
    let u = RealMat3::from_columns([u_cols[0], u_cols[1], u_cols[2]]);
    Svd3 { u, sigma, v: v_sorted }
}

/// First standard basis vector (in index order) that survives Gram-Schmidt
/// against the nonzero entries of `basis`, normalized.
fn complete_orthonormal(basis: &[Vec3]) -> Vec3 {
    for axis in 0..3 {
        let mut cand = Vec3::unit(axis);
        for b in basis.iter().filter(|b| b.norm() > 0.5) {
            cand = cand - b.scale(b.dot(&cand));
        }
        let n = cand.norm();
        // With k ≤ 2 orthonormal vectors the residuals satisfy Σ|r_i|² = 3 − k ≥ 1,
        // so some axis has |r_i| ≥ 1/√3.
        if n > 0.5 {
            return cand.scale(1.0 / n);
        }
    }
    unreachable!("at most two basis vectors are present")
}
