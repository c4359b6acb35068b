//! Stochastic Cramér-Rao bound for the circular array model, via two
//! independent routes.
//!
//! **Projector route** ([`scrb_circular`]): the per-snapshot information on
//! `θ` after concentrating out `(R_s, σ_n²)` collapses to the closed form
//!
//! `(1/T)·[SCRB⁻¹(θ)]_{k,l} = (2ξ₂/σ_n²)·Re tr[Π⊥_{A_θ}·A'_{θ_l}·H·A'ᴴ_{θ_k}]`
//!
//! with `H = R_s·A_θᴴ·Σ⁻¹·A_θ·R_s` and `Π⊥_{A_θ}` the orthogonal projector
//! onto the noise subspace.
//!
//! **General route** ([`scrb_from_general`]): assemble the full information
//! matrix over `α = (θ, ρ, σ_n²)` from the scatter-term kernel
//! `ξ₂(Σ⁻ᵀ⊗Σ⁻¹) + (ξ₂−1)vec(Σ⁻¹)vecᴴ(Σ⁻¹)`, invert, and read off the
//! `θ×θ` block. The two routes agree to high accuracy and serve as each
//! other's oracle.
//!
//! [`build_projector_bundle`] exposes every intermediate of the projector
//! derivation (`T_i`, `u_n`, `B`, `Π⊥_V`, `g_k`, `H₁`, `U`) so the
//! cancellation identities behind the closed form can be tested directly.

use super::projector::{hermitian_basis_matrix, t_matrix, t_matrix_sqrt, ProjectorBundle};
use super::steering::DoaModel;
use crate::linalg::{
    guarded_inverse, hermitian_sqrt, kron, trace, trace_prod, vec_of, CMat, C64, RMat,
};
use crate::{CesError, Result};

/// Reciprocal-condition threshold for the final information matrix; below
/// it the sources are effectively coalescing and the bound is meaningless.
const INFO_RCOND_MIN: f64 = 1e-10;

fn real_rcond(m: &RMat) -> f64 {
    let sv = m.clone().singular_values();
    let smax = sv.max();
    if smax <= 0.0 || !smax.is_finite() {
        0.0
    } else {
        sv.min() / smax
    }
}

fn invert_information(info: &RMat, snapshots: f64) -> Result<RMat> {
    let rc = real_rcond(info);
    if !(rc >= INFO_RCOND_MIN) {
        return Err(CesError::SingularMatrix(format!(
            "information matrix reciprocal condition {rc:.3e}; \
             sources are not identifiable"
        )));
    }
    let inv = info.clone().try_inverse().ok_or_else(|| {
        CesError::SingularMatrix("information matrix inversion failed".into())
    })?;
    Ok(inv / snapshots)
}

/// Builds every intermediate of the projector-based derivation for the
/// circular model. Requires `ξ₂ > 0` and `T_i` positive semidefinite
/// (`ξ₂ + M(ξ₂−1) ≥ 0`), which every dimension-`M` generator satisfies via
/// the Cauchy-Schwarz bound `ξ₂ ≥ M/(M+1)`.
pub fn build_projector_bundle(model: &DoaModel, xi2: f64) -> Result<ProjectorBundle> {
    if !(xi2 > 0.0) {
        return Err(CesError::InvalidParameter(format!(
            "xi2 must be positive, got {xi2}"
        )));
    }
    let m = model.sensors();
    let k = model.sources();
    let kf = k as f64;

    let sigma = model.sigma();
    let sigma_inv = guarded_inverse(&sigma, "array covariance")?;
    let s_inv_half = hermitian_sqrt(&sigma_inv)?;
    let a = model.steering();

    let u = a.adjoint() * &sigma_inv * a;
    let u_inv = guarded_inverse(&u, "A^H Sigma^-1 A")?;
    let h1 = &s_inv_half * a * &u_inv * a.adjoint() * &s_inv_half;

    let t = t_matrix(m, xi2, xi2 - 1.0);
    let t_sqrt = t_matrix_sqrt(m, xi2, xi2 - 1.0)?;

    let denom = 1.0 + kf * (xi2 - 1.0) / xi2;
    if denom.abs() < 1e-12 {
        return Err(CesError::SingularMatrix(
            "source-covariance weighting is singular at this xi2".into(),
        ));
    }
    let eta = (xi2 - 1.0) / (xi2 * xi2 * denom);

    // B = (1/ξ₂)(H₁*⊗H₁) − η·vec(H₁)vecᴴ(H₁)
    let h1_vec = vec_of(&h1);
    let mut b = kron(&h1.map(|z| z.conj()), &h1) / C64::new(xi2, 0.0);
    for r in 0..m * m {
        for c in 0..m * m {
            b[(r, c)] -= C64::new(eta, 0.0) * h1_vec[r] * h1_vec[c].conj();
        }
    }

    let pi_perp_v = CMat::identity(m * m, m * m) - &t_sqrt * &b * &t_sqrt;
    let u_n = &t_sqrt * vec_of(&sigma_inv);

    // g_k = T^{1/2}·vec(Z_k + Z_kᴴ), Z_k = Σ^{-1/2}·A·R_s·A'ᴴ_k·Σ^{-1/2}
    let mut g = CMat::zeros(m * m, k);
    for j in 0..k {
        let z = &s_inv_half
            * a
            * model.source_covariance()
            * model.steering_derivative(j).adjoint()
            * &s_inv_half;
        let sym = &z + z.adjoint();
        g.set_column(j, &(&t_sqrt * vec_of(&sym)));
    }

    // nuisance block for the source covariance: V = T^{1/2}·W·J
    let w = kron(
        &(s_inv_half.transpose() * a.map(|z| z.conj())),
        &(&s_inv_half * a),
    );
    let v = &t_sqrt * &w * hermitian_basis_matrix(k);

    Ok(ProjectorBundle {
        t,
        t_sqrt,
        u_n,
        v,
        b,
        pi_perp_v,
        g,
        h1,
        u,
    })
}

/// Closed-form stochastic bound on `θ` for the circular model.
pub fn scrb_circular(model: &DoaModel, xi2: f64) -> Result<RMat> {
    if !(xi2 > 0.0) {
        return Err(CesError::InvalidParameter(format!(
            "xi2 must be positive, got {xi2}"
        )));
    }
    let k = model.sources();
    let a = model.steering();
    let sigma_inv = guarded_inverse(&model.sigma(), "array covariance")?;
    let gram_inv = guarded_inverse(&(a.adjoint() * a), "steering Gram")?;
    let pi_perp_a = CMat::identity(model.sensors(), model.sensors()) - a * gram_inv * a.adjoint();
    let h = model.source_covariance() * a.adjoint() * &sigma_inv * a * model.source_covariance();

    let factor = 2.0 * xi2 / model.noise_power();
    let mut info = RMat::zeros(k, k);
    for kk in 0..k {
        let dk = model.steering_derivative(kk);
        for ll in 0..k {
            let dl = model.steering_derivative(ll);
            let inner = &pi_perp_a * dl * &h * dk.adjoint();
            info[(kk, ll)] = factor * trace(&inner).re;
        }
    }
    invert_information(&info, model.snapshots())
}

/// Full parameterization `α = (θ, ρ, σ_n²)`: Jacobian `∂vec(Σ)/∂αᵀ`.
fn full_jacobian(model: &DoaModel) -> CMat {
    let m = model.sensors();
    let k = model.sources();
    let a = model.steering();
    let l = k + k * k + 1;
    let mut jac = CMat::zeros(m * m, l);
    for j in 0..k {
        jac.set_column(j, &vec_of(&model.sigma_derivative(j)));
    }
    // vec(A R Aᴴ) = (A* ⊗ A)·vec(R) = (A* ⊗ A)·J·ρ
    let rho_block = kron(&a.map(|z| z.conj()), a) * hermitian_basis_matrix(k);
    for j in 0..k * k {
        jac.set_column(k + j, &rho_block.column(j).into_owned());
    }
    jac.set_column(k + k * k, &vec_of(&CMat::identity(m, m)));
    jac
}

/// General-form information over `α`, as a real matrix.
fn general_information(model: &DoaModel, xi2: f64) -> Result<RMat> {
    let sigma_inv = guarded_inverse(&model.sigma(), "array covariance")?;
    let jac = full_jacobian(model);
    let v = vec_of(&sigma_inv);
    let mut kernel = kron(&sigma_inv.transpose(), &sigma_inv) * C64::new(xi2, 0.0);
    for r in 0..v.len() {
        for c in 0..v.len() {
            kernel[(r, c)] += C64::new(xi2 - 1.0, 0.0) * v[r] * v[c].conj();
        }
    }
    let f = jac.adjoint() * kernel * jac;
    Ok(RMat::from_fn(f.nrows(), f.ncols(), |r, c| f[(r, c)].re))
}

/// Schur-complement oracle for [`scrb_circular`]: builds the full
/// information over `(θ, ρ, σ_n²)`, inverts it, and extracts the `θ×θ`
/// block.
pub fn scrb_from_general(model: &DoaModel, xi2: f64) -> Result<RMat> {
    if !(xi2 > 0.0) {
        return Err(CesError::InvalidParameter(format!(
            "xi2 must be positive, got {xi2}"
        )));
    }
    let k = model.sources();
    let f = general_information(model, xi2)?;
    let full = invert_information(&f, model.snapshots())?;
    Ok(full.view((0, 0), (k, k)).into_owned())
}

#[cfg(test)]
pub(crate) mod test_support {
    use super::*;
    use crate::linalg::random;
    use rand::Rng;

    /// Random well-separated instance: directions with spaced sines, a
    /// well-conditioned Hermitian source covariance, moderate noise power.
    pub fn random_instance<R: Rng + ?Sized>(m: usize, k: usize, rng: &mut R) -> DoaModel {
        let theta = loop {
            let cand: Vec<f64> = (0..k).map(|_| rng.random_range(-1.2..1.2)).collect();
            let mut ok = true;
            for i in 0..k {
                for j in (i + 1)..k {
                    if (cand[i].sin() - cand[j].sin()).abs() < 0.2 {
                        ok = false;
                    }
                }
            }
            if ok {
                break cand;
            }
        };
        let g = random::complex_matrix(k, k, rng);
        let r_s = &g * g.adjoint() + CMat::identity(k, k) * C64::new(0.5, 0.0);
        let sigma2 = rng.random_range(0.5..2.0);
        DoaModel::new_ula(m, theta, r_s, sigma2, 100.0).unwrap()
    }
}
