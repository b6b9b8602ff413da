//! Direct simulation of the standard teleportation scheme.
//!
//! Particle 1 carries the unknown pure state φ, particle 2 is Alice's half of
//! the channel ρ and particle 3 is Bob's. Eight-dimensional operators use the
//! index `4·i₁ + 2·i₂ + i₃`. Alice measures (1, 2) in the Bell basis, reports
//! `k`, and Bob applies `U_k` to particle 3.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{kron_general, CMat, ComplexMat2, ComplexMat4, ComplexMat8, Vec3};
use crate::states::{bell_vector, trace_product, DensityMatrix, HsDecomposition, QubitState};
use crate::strategy::{bell_projector_decomposition, check_unitary, Strategy};
use crate::tol;

/// Result of one branch of the protocol.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TeleportOutcome {
    pub k: usize,
    pub probability: f64,
    /// Bob's corrected qubit; `None` when the branch has probability below
    /// tolerance and the conditional state is undefined.
    pub output_state: Option<ComplexMat2>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FidelityEstimate {
    pub mean: f64,
    pub standard_error: f64,
    pub samples: usize,
}

impl FidelityEstimate {
    /// Rounding floor added to the statistical band. Constant integrands
    /// (singlet and Werner channels) have a standard error at the 1e-18 level.
    pub const ABS_FLOOR: f64 = 1e-9;

    /// `|mean − value| ≤ n_se·SE + ABS_FLOOR`.
    pub fn agrees_with(&self, value: f64, n_se: f64) -> bool {
        (self.mean - value).abs() <= n_se * self.standard_error + Self::ABS_FLOOR
    }
}

fn bell_projector(k: usize) -> Result<ComplexMat4> {
    let v = bell_vector(k)?;
    Ok(CMat::outer(&v, &v))
}

fn joint_input(rho: &DensityMatrix, phi: &QubitState) -> ComplexMat8 {
    kron_general::<2, 4, 8>(&phi.projector(), rho.matrix())
}

/// Trace over particles 1 and 2.
fn trace_out_first_two(m: &ComplexMat8) -> ComplexMat2 {
    let mut out = ComplexMat2::zeros();
    for b in 0..2 {
        for bp in 0..2 {
            out.0[b][bp] = (0..4).map(|x| m.0[2 * x + b][2 * x + bp]).sum();
        }
    }
    out
}

/// `p_k = Tr[(P_k ⊗ I)(P_φ ⊗ ρ)]` on the full three-qubit space.
pub fn outcome_probability(rho: &DensityMatrix, phi: &QubitState, k: usize) -> Result<f64> {
    let op = kron_general::<4, 2, 8>(&bell_projector(k)?, &ComplexMat2::identity());
    Ok(trace_product(&op, &joint_input(rho, phi)).re)
}

/// `ρ_k = Tr₁₂[(P_k ⊗ U)(P_φ ⊗ ρ)(P_k ⊗ U†)] / p_k`.
pub fn conditional_output(
    rho: &DensityMatrix,
    phi: &QubitState,
    k: usize,
    correction: &ComplexMat2,
) -> Result<TeleportOutcome> {
    let projector = bell_projector(k)?;
    check_unitary(correction)?;
    let a = kron_general::<4, 2, 8>(&projector, correction);
    let branch = trace_out_first_two(&(a * joint_input(rho, phi) * a.adjoint()));
    let probability = branch.trace().re;
    if probability <= tol::PSD {
        return Ok(TeleportOutcome { k, probability: 0.0, output_state: None });
    }
    Ok(TeleportOutcome {
        k,
        probability,
        output_state: Some(branch.scale_re(1.0 / probability)),
    })
}

/// Bob's unnormalized, uncorrected state `⟨ψ_k|₁₂ (|φ⟩⟨φ| ⊗ ρ) |ψ_k⟩₁₂`.
///
/// Both projectors are rank one, so the 8×8 sandwich reduces to contracting
/// `c_j = Σ_i ψ̄_k(i, j) φ_i` against ρ.
pub(crate) fn unnormalized_branch(rho: &DensityMatrix, ket: &[Complex64; 2], k: usize) -> ComplexMat2 {
    let psi = bell_vector(k).expect("caller passes k in 0..4");
    let c: [Complex64; 2] = std::array::from_fn(|j| (0..2).map(|i| psi[2 * i + j].conj() * ket[i]).sum());
    let m = rho.matrix();
    let mut out = ComplexMat2::zeros();
    for b in 0..2 {
        for bp in 0..2 {
            let mut acc = Complex64::new(0.0, 0.0);
            for j in 0..2 {
                for jp in 0..2 {
                    acc += c[j] * m.0[2 * j + b][2 * jp + bp] * c[jp].conj();
                }
            }
            out.0[b][bp] = acc;
        }
    }
    out
}

/// `Σ_k p_k Tr(ρ_k P_φ)` for one input state, without dividing by `p_k`.
pub fn fidelity_integrand(rho: &DensityMatrix, strat: &Strategy, phi: &QubitState) -> f64 {
    let ket = phi.ket();
    let p_phi = phi.projector();
    strat
        .corrections()
        .iter()
        .enumerate()
        .map(|(k, u)| {
            let bob = unnormalized_branch(rho, &ket, k).conjugate_by(u);
            trace_product(&bob, &p_phi).re
        })
        .sum()
}

/// `⅛ Σ_k (1 + ⅓ Tr(T_kᵀ T O_k))` with `O_k` the rotation of `U_k`.
pub fn closed_form_fidelity(d: &HsDecomposition, strat: &Strategy) -> f64 {
    strat
        .rotations()
        .iter()
        .enumerate()
        .map(|(k, o)| {
            let tk = bell_projector_decomposition(k).expect("k < 4").t;
            1.0 + (tk.transpose() * d.t * *o.matrix()).trace() / 3.0
        })
        .sum::<f64>()
        / 8.0
}

/// Exact Bloch-sphere average using the six octahedron vertices. The integrand
/// is a quadratic polynomial in the Bloch vector and the octahedron is a
/// spherical 3-design, so this is the integral, not an estimate.
pub fn average_fidelity_design(rho: &DensityMatrix, strat: &Strategy) -> f64 {
    let mut total = 0.0;
    for axis in 0..3 {
        for sign in [1.0, -1.0] {
            let phi = QubitState::new(Vec3::unit(axis).scale(sign)).expect("unit vector");
            total += fidelity_integrand(rho, strat, &phi);
        }
    }
    total / 6.0
}

/// Monte Carlo estimate of the average fidelity over uniformly distributed
/// pure inputs. The outcome sum is exact for each input; only φ is sampled.
///
/// Sample `i` draws from the ChaCha stream `i` of `seed`, so the result does
/// not depend on how the work is scheduled across threads.
pub fn average_fidelity_mc(
    rho: &DensityMatrix,
    strat: &Strategy,
    samples: usize,
    seed: u64,
) -> Result<FidelityEstimate> {
    if samples == 0 {
        return Err(Error::ParameterOutOfRange {
            name: "samples",
            value: 0.0,
            reason: "at least one sample is required",
        });
    }
    let values: Vec<f64> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            fidelity_integrand(rho, strat, &QubitState::random(&mut rng))
        })
        .collect();
    let n = samples as f64;
    let mean = values.iter().sum::<f64>() / n;
    let standard_error = if samples > 1 {
        let var = values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (var / n).sqrt()
    } else {
        0.0
    };
    Ok(FidelityEstimate { mean, standard_error, samples })
}

/// One run of the protocol: sample Alice's outcome, apply the matching
/// correction.
pub fn teleport_once(rho: &DensityMatrix, phi: &QubitState, strat: &Strategy, seed: u64) -> Result<TeleportOutcome> {
    let mut probs = [0.0; 4];
    for (k, p) in probs.iter_mut().enumerate() {
        *p = outcome_probability(rho, phi, k)?.max(0.0);
    }
    let total: f64 = probs.iter().sum();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draw: f64 = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut k = 3;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if draw < acc {
            k = i;
            break;
        }
    }
    // Never report a branch whose probability vanishes.
    while probs[k] <= 0.0 {
        k = (k + 3) % 4;
    }
    conditional_output(rho, phi, k, strat.correction(k)?)
}
