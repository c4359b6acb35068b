//! Stochastic Cramér-Rao bound for the rectilinear (noncircular) array
//! model, on the joint interest vector `ω = (θ, φ)`.
//!
//! The construction mirrors the circular projector route with the
//! substitutions `Σ → Γ̃`, `A_θ → Ã_ω`, and the weighting
//! `T̃ = (ξ₂/2)·I + ((ξ₂−1)/4)·vec(I)vecᵀ(I)`. Because the source
//! covariance `R_r` is real symmetric, its parameterization uses the
//! duplication matrix `D_ρ`, and the closed-form kernel becomes
//!
//! `B = (2/ξ₂)·W·(U⁻¹⊗U⁻¹)·N_K·Wᴴ − η̃·vec(H₁)vecᴴ(H₁)`
//!
//! with `N_K` the symmetrizer, `U = Ã_ωᴴΓ̃⁻¹Ã_ω` (real symmetric here) and
//! `η̃ = (ξ₂−1)/(ξ₂²(1 + K(ξ₂−1)/(2ξ₂)))`.
//!
//! [`scrb_noncircular`] goes through the projector; the independent oracle
//! [`scrb_noncircular_from_general`] assembles the full information over
//! `(θ, φ, ρ, σ_n²)` from the augmented scatter kernel
//! `(ξ₂/2)(Γ̃⁻ᵀ⊗Γ̃⁻¹) + ((ξ₂−1)/4)vec(Γ̃⁻¹)vecᴴ(Γ̃⁻¹)` and
//! Schur-complements the nuisance parameters away.

use super::projector::{symmetric_duplication, symmetrizer, t_matrix, t_matrix_sqrt, ProjectorBundle};
use super::steering::NcDoaModel;
use crate::linalg::{guarded_inverse, hermitian_sqrt, kron, max_abs, vec_of, CMat, C64, RMat};
use crate::{CesError, Result};

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
             parameters are not identifiable"
        )));
    }
    let inv = info
        .clone()
        .try_inverse()
        .ok_or_else(|| CesError::SingularMatrix("information matrix inversion failed".into()))?;
    Ok(inv / snapshots)
}

/// Builds the projector intermediates for the rectilinear model. The
/// interest block `G` has `2K` columns ordered `(θ₁..θ_K, φ₁..φ_K)`.
pub fn build_nc_projector_bundle(model: &NcDoaModel, xi2: f64) -> Result<ProjectorBundle> {
    if !(xi2 > 0.0) {
        return Err(CesError::InvalidParameter(format!(
            "xi2 must be positive, got {xi2}"
        )));
    }
    let m2 = 2 * model.sensors();
    let k = model.sources();
    let kf = k as f64;

    let gamma = model.gamma();
    let gamma_inv = guarded_inverse(&gamma, "augmented array covariance")?;
    let g_inv_half = hermitian_sqrt(&gamma_inv)?;
    let a = model.a_omega();

    let u = a.adjoint() * &gamma_inv * &a;
    // U is real symmetric for the rectilinear model; keep the real part and
    // verify the imaginary residue is rounding-level.
    let u_imag = u.iter().fold(0.0f64, |acc, z| acc.max(z.im.abs()));
    if u_imag > 1e-9 * (1.0 + max_abs(&u)) {
        return Err(CesError::InvalidParameter(format!(
            "augmented Gram matrix has imaginary part {u_imag:.3e}; \
             model is not rectilinear"
        )));
    }
    let u = u.map(|z| C64::new(z.re, 0.0));
    let u_inv = guarded_inverse(&u, "augmented Gram")?;
    let h1 = &g_inv_half * &a * &u_inv * a.adjoint() * &g_inv_half;

    let t = t_matrix(m2, 0.5 * xi2, 0.25 * (xi2 - 1.0));
    let t_sqrt = t_matrix_sqrt(m2, 0.5 * xi2, 0.25 * (xi2 - 1.0))?;

    let denom = 1.0 + kf * (xi2 - 1.0) / (2.0 * xi2);
    if denom.abs() < 1e-12 {
        return Err(CesError::SingularMatrix(
            "source-covariance weighting is singular at this xi2".into(),
        ));
    }
    let eta = (xi2 - 1.0) / (xi2 * xi2 * denom);

    let w = kron(
        &(g_inv_half.transpose() * a.map(|z| z.conj())),
        &(&g_inv_half * &a),
    );
    let n_k = symmetrizer(k);
    let h1_vec = vec_of(&h1);
    let mut b = &w * kron(&u_inv, &u_inv) * n_k * w.adjoint() * C64::new(2.0 / xi2, 0.0);
    for r in 0..m2 * m2 {
        for c in 0..m2 * m2 {
            b[(r, c)] -= C64::new(eta, 0.0) * h1_vec[r] * h1_vec[c].conj();
        }
    }

    let pi_perp_v = CMat::identity(m2 * m2, m2 * m2) - &t_sqrt * &b * &t_sqrt;
    let u_n = &t_sqrt * vec_of(&gamma_inv);

    let r_c = model.source_covariance().map(|v| C64::new(v, 0.0));
    let mut g = CMat::zeros(m2 * m2, 2 * k);
    for j in 0..2 * k {
        let z = &g_inv_half * &a * &r_c * model.a_omega_derivative(j).adjoint() * &g_inv_half;
        let sym = &z + z.adjoint();
        g.set_column(j, &(&t_sqrt * vec_of(&sym)));
    }

    let v = &t_sqrt * &w * symmetric_duplication(k);

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

/// Projector-route bound on `ω = (θ, φ)`, a `2K×2K` matrix ordered
/// `(θ₁..θ_K, φ₁..φ_K)`.
pub fn scrb_noncircular(model: &NcDoaModel, xi2: f64) -> Result<RMat> {
    let bundle = build_nc_projector_bundle(model, xi2)?;
    let info = bundle.information_matrix()?;
    invert_information(&info, model.snapshots())
}

/// Full-parameterization Jacobian `∂vec(Γ̃)/∂αᵀ` over
/// `α = (θ, φ, ρ, σ_n²)`.
fn full_jacobian(model: &NcDoaModel) -> CMat {
    let m2 = 2 * model.sensors();
    let k = model.sources();
    let rho_len = k * (k + 1) / 2;
    let a = model.a_omega();
    let mut jac = CMat::zeros(m2 * m2, 2 * k + rho_len + 1);
    for j in 0..2 * k {
        jac.set_column(j, &vec_of(&model.gamma_derivative(j)));
    }
    let rho_block = kron(&a.map(|z| z.conj()), &a) * symmetric_duplication(k);
    for j in 0..rho_len {
        jac.set_column(2 * k + j, &rho_block.column(j).into_owned());
    }
    jac.set_column(2 * k + rho_len, &vec_of(&CMat::identity(m2, m2)));
    jac
}

/// Schur-complement oracle for [`scrb_noncircular`].
pub fn scrb_noncircular_from_general(model: &NcDoaModel, xi2: f64) -> Result<RMat> {
    if !(xi2 > 0.0) {
        return Err(CesError::InvalidParameter(format!(
            "xi2 must be positive, got {xi2}"
        )));
    }
    let k = model.sources();
    let gamma_inv = guarded_inverse(&model.gamma(), "augmented array covariance")?;
    let jac = full_jacobian(model);
    let v = vec_of(&gamma_inv);
    let mut kernel = kron(&gamma_inv.transpose(), &gamma_inv) * C64::new(0.5 * xi2, 0.0);
    for r in 0..v.len() {
        for c in 0..v.len() {
            kernel[(r, c)] += C64::new(0.25 * (xi2 - 1.0), 0.0) * v[r] * v[c].conj();
        }
    }
    let f = jac.adjoint() * kernel * jac;
    let f_real = RMat::from_fn(f.nrows(), f.ncols(), |r, c| f[(r, c)].re);
    let full = invert_information(&f_real, model.snapshots())?;
    Ok(full.view((0, 0), (2 * k, 2 * k)).into_owned())
}


#[cfg(test)]
mod tests {
    use super::test_support::random_nc_instance;
    use super::*;
    use crate::crb::circular::scrb_circular;
    use crate::crb::steering::DoaModel;
    use crate::rng::RngStream;
    use rand::Rng;

    fn rel_dev(a: &CMat, b: &CMat) -> f64 {
        max_abs(&(a - b)) / (1.0 + max_abs(a).max(max_abs(b)))
    }

    #[test]
    fn augmented_gram_is_real_symmetric() {
        let mut rng = RngStream::new(301).stream(0);
        for _ in 0..5 {
            let model = random_nc_instance(4, 2, &mut rng);
            let gamma_inv = guarded_inverse(&model.gamma(), "t").unwrap();
            let a = model.a_omega();
            let u = a.adjoint() * gamma_inv * a;
            let max_im = u.iter().fold(0.0f64, |acc, z| acc.max(z.im.abs()));
            assert!(max_im < 1e-10 * (1.0 + max_abs(&u)));
            assert!(rel_dev(&u.transpose(), &u) < 1e-10);
        }
    }

    #[test]
    fn closed_form_kernel_matches_direct_projector() {
        // B must equal W·D(DᵀWᴴT̃WD)⁻¹Dᵀ·Wᴴ, the kernel of the projector
        // onto the span of the real-symmetric source-covariance directions.
        let mut rng = RngStream::new(302).stream(0);
        for (m, k) in [(3usize, 1usize), (4, 2)] {
            let model = random_nc_instance(m, k, &mut rng);
            let xi2: f64 = rng.random_range(0.9..1.9);
            let bundle = build_nc_projector_bundle(&model, xi2).unwrap();

            let gamma_inv = guarded_inverse(&model.gamma(), "t").unwrap();
            let g_inv_half = hermitian_sqrt(&gamma_inv).unwrap();
            let a = model.a_omega();
            let w = kron(
                &(g_inv_half.transpose() * a.map(|z| z.conj())),
                &(&g_inv_half * &a),
            );
            let d = symmetric_duplication(k);
            let wd = &w * &d;
            let mid = guarded_inverse(&(wd.adjoint() * &bundle.t * &wd), "inner").unwrap();
            let direct = &wd * mid * wd.adjoint();
            assert!(
                rel_dev(&direct, &bundle.b) < 1e-9,
                "M={m} K={k}: {}",
                rel_dev(&direct, &bundle.b)
            );
        }
    }

    #[test]
    fn projector_annihilates_source_block_and_is_idempotent() {
        let mut rng = RngStream::new(303).stream(0);
        let model = random_nc_instance(4, 2, &mut rng);
        let xi2 = 1.4;
        let bundle = build_nc_projector_bundle(&model, xi2).unwrap();
        let p = &bundle.pi_perp_v;
        assert!(rel_dev(&p.adjoint(), p) < 1e-10);
        assert!(rel_dev(&(p * p), p) < 1e-10);
        let pv = p * &bundle.v;
        assert!(max_abs(&pv) < 1e-10 * (1.0 + max_abs(&bundle.v)));
    }

    #[test]
    fn noise_direction_orthogonality() {
        let mut rng = RngStream::new(304).stream(0);
        for _ in 0..10 {
            let model = random_nc_instance(4, 2, &mut rng);
            let xi2: f64 = rng.random_range(0.9..1.9);
            let bundle = build_nc_projector_bundle(&model, xi2).unwrap();
            let pu = &bundle.pi_perp_v * &bundle.u_n;
            let scale = bundle.u_n.norm() * (1.0 + max_abs(&bundle.g));
            for k in 0..bundle.g.ncols() {
                let inner = bundle.g.column(k).dotc(&pu);
                assert!(
                    inner.norm() < 1e-10 * scale,
                    "column {k}: u_nᴴΠ⊥_V g = {inner}"
                );
            }
        }
    }

    #[test]
    fn h1_idempotent_trace_k() {
        let mut rng = RngStream::new(305).stream(0);
        let model = random_nc_instance(5, 2, &mut rng);
        let bundle = build_nc_projector_bundle(&model, 1.2).unwrap();
        let h1 = &bundle.h1;
        assert!(rel_dev(&(h1 * h1), h1) < 1e-10);
        let t = h1.diagonal().sum();
        assert!((t.re - 2.0).abs() < 1e-10 && t.im.abs() < 1e-10);
    }

    #[test]
    fn projector_route_matches_general_oracle() {
        let mut rng = RngStream::new(306).stream(0);
        for (m, k) in [(4usize, 1usize), (4, 2), (6, 1), (6, 2)] {
            for i in 0..5 {
                let model = random_nc_instance(m, k, &mut rng);
                let xi2: f64 = rng.random_range(0.9..1.8);
                let direct = scrb_noncircular(&model, xi2).unwrap();
                let oracle = scrb_noncircular_from_general(&model, xi2).unwrap();
                let scale = direct.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
                for r in 0..2 * k {
                    for c in 0..2 * k {
                        assert!(
                            (direct[(r, c)] - oracle[(r, c)]).abs() < 1e-6 * scale,
                            "M={m} K={k} instance {i} ({r},{c}): {} vs {}",
                            direct[(r, c)],
                            oracle[(r, c)]
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn bound_is_symmetric_positive_definite() {
        let mut rng = RngStream::new(307).stream(0);
        let model = random_nc_instance(5, 2, &mut rng);
        let bound = scrb_noncircular(&model, 1.1).unwrap();
        for r in 0..4 {
            for c in 0..4 {
                assert!((bound[(r, c)] - bound[(c, r)]).abs() < 1e-10 * (1.0 + bound[(r, c)].abs()));
            }
        }
        let eig = bound.symmetric_eigen();
        assert!(eig.eigenvalues.min() > 0.0);
    }

    #[test]
    fn noncircularity_never_hurts_direction_accuracy() {
        // At matched array covariance Σ and Gaussian coefficients, knowing
        // the sources are rectilinear cannot worsen the bound on θ.
        // Numerical observation over random single-source instances.
        let mut rng = RngStream::new(308).stream(0);
        for _ in 0..50 {
            let m = 4usize;
            let theta = vec![rng.random_range(-1.0..1.0)];
            let phi = vec![rng.random_range(0.0..1.5)];
            let power = rng.random_range(0.5..2.0);
            let sigma2 = rng.random_range(0.5..2.0);
            let mut r_r = RMat::zeros(1, 1);
            r_r[(0, 0)] = power;
            let nc = NcDoaModel::new_ula(m, theta.clone(), phi, r_r, sigma2, 100.0).unwrap();
            let nc_bound = scrb_noncircular(&nc, 1.0).unwrap()[(0, 0)];

            let r_s = CMat::identity(1, 1) * C64::new(power, 0.0);
            let circ = DoaModel::new_ula(m, theta, r_s, sigma2, 100.0).unwrap();
            let c_bound = scrb_circular(&circ, 1.0).unwrap()[(0, 0)];

            assert!(
                nc_bound <= c_bound * (1.0 + 1e-9),
                "nc {nc_bound} vs circular {c_bound}"
            );
        }
    }

    #[test]
    fn rejects_invalid_xi2() {
        let mut rng = RngStream::new(309).stream(0);
        let model = random_nc_instance(4, 1, &mut rng);
        assert!(scrb_noncircular(&model, 0.0).is_err());
        assert!(matches!(
            scrb_noncircular(&model, 0.5),
            Err(CesError::InvalidParameter(_))
        ));
        // oracle route does not need the weighting square root
        assert!(scrb_noncircular_from_general(&model, 0.5).is_ok());
    }
}
