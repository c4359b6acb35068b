//! Array models for direction-of-arrival bounds.
//!
//! [`DoaModel`] is the circular stochastic signal model
//! `Σ = A_θ R_s A_θᴴ + σ_n²I` with Hermitian source covariance `R_s`;
//! [`NcDoaModel`] is the rectilinear (strictly noncircular) variant with a
//! real symmetric source covariance `R_r`, per-source phases `Δ_φ`, and
//! augmented steering `Ã_ω = [A_θΔ_φ; A_θ*Δ_φ*]`, giving
//! `Γ̃ = Ã_ω R_r Ã_ωᴴ + σ_n²I`.
//!
//! The bound expressions accept any steering parameterization with full
//! column rank; the half-wavelength uniform linear array in
//! [`ula_steering`] is the concrete one used by experiments.

use crate::linalg::{check_finite, max_abs, rcond, CMat, CVec, C64, RMat};
use crate::{CesError, Result};

/// Steering matrix and its per-angle derivatives for a half-wavelength
/// uniform linear array: `[A]_{m,k} = exp(i·(m−1)·π·sin θ_k)`.
///
/// The derivative matrices are exact: column `k` of the `k`-th matrix is
/// `i·(m−1)·π·cos θ_k · [A]_{m,k}` and all other columns are zero.
pub fn ula_steering(theta: &[f64], m: usize) -> (CMat, Vec<CMat>) {
    assert!(m >= 2, "a linear array needs at least two sensors");
    let k = theta.len();
    let mut a = CMat::zeros(m, k);
    let mut primes = vec![CMat::zeros(m, k); k];
    for (j, &th) in theta.iter().enumerate() {
        let (s, c) = th.sin_cos();
        for r in 0..m {
            let phase = r as f64 * std::f64::consts::PI * s;
            let e = C64::new(phase.cos(), phase.sin());
            a[(r, j)] = e;
            primes[j][(r, j)] = C64::new(0.0, r as f64 * std::f64::consts::PI * c) * e;
        }
    }
    (a, primes)
}

fn validate_steering(a_theta: &CMat, a_prime: &[CMat], k: usize, m: usize) -> Result<()> {
    if k == 0 || k >= m {
        return Err(CesError::InvalidParameter(format!(
            "need 1 <= K < M, got K={k}, M={m}"
        )));
    }
    if a_theta.nrows() != m || a_theta.ncols() != k {
        return Err(CesError::DimensionMismatch(format!(
            "steering matrix is {}x{}, expected {m}x{k}",
            a_theta.nrows(),
            a_theta.ncols()
        )));
    }
    check_finite(a_theta, "steering matrix")?;
    if a_prime.len() != k {
        return Err(CesError::DimensionMismatch(
            "one derivative matrix per source required".into(),
        ));
    }
    for (j, d) in a_prime.iter().enumerate() {
        if d.nrows() != m || d.ncols() != k {
            return Err(CesError::DimensionMismatch(format!(
                "derivative {j} is {}x{}, expected {m}x{k}",
                d.nrows(),
                d.ncols()
            )));
        }
    }
    // full column rank
    let gram = a_theta.adjoint() * a_theta;
    let rc = rcond(&gram);
    if !(rc >= 1e-10) {
        return Err(CesError::SingularMatrix(format!(
            "steering matrix is rank deficient (Gram rcond {rc:.3e}); \
             sources coalesce"
        )));
    }
    Ok(())
}

fn validate_hermitian_psd(r: &CMat, what: &str) -> Result<()> {
    check_finite(r, what)?;
    let scale = 1.0 + max_abs(r);
    if max_abs(&(r - r.adjoint())) > 1e-10 * scale {
        return Err(CesError::InvalidParameter(format!("{what} is not Hermitian")));
    }
    let eig = r.clone().symmetric_eigen();
    let min = eig.eigenvalues.min();
    if min < -1e-10 * scale {
        return Err(CesError::InvalidParameter(format!(
            "{what} has negative eigenvalue {min:.3e}"
        )));
    }
    Ok(())
}

/// Circular stochastic array model.
#[derive(Debug, Clone)]
pub struct DoaModel {
    m: usize,
    k: usize,
    theta: Vec<f64>,
    a_theta: CMat,
    a_prime: Vec<CMat>,
    r_s: CMat,
    sigma2: f64,
    snapshots: f64,
}

impl DoaModel {
    /// Model with explicit steering parts.
    pub fn from_parts(
        theta: Vec<f64>,
        a_theta: CMat,
        a_prime: Vec<CMat>,
        r_s: CMat,
        sigma2: f64,
        snapshots: f64,
    ) -> Result<Self> {
        let (m, k) = (a_theta.nrows(), a_theta.ncols());
        if theta.len() != k {
            return Err(CesError::DimensionMismatch(
                "theta length differs from steering columns".into(),
            ));
        }
        validate_steering(&a_theta, &a_prime, k, m)?;
        if r_s.nrows() != k || r_s.ncols() != k {
            return Err(CesError::DimensionMismatch(format!(
                "source covariance is {}x{}, expected {k}x{k}",
                r_s.nrows(),
                r_s.ncols()
            )));
        }
        validate_hermitian_psd(&r_s, "source covariance")?;
        if !(sigma2 > 0.0) {
            return Err(CesError::InvalidParameter(format!(
                "noise power must be positive, got {sigma2}"
            )));
        }
        if !(snapshots >= 1.0) {
            return Err(CesError::InvalidParameter(format!(
                "snapshot count must be >= 1, got {snapshots}"
            )));
        }
        Ok(Self { m, k, theta, a_theta, a_prime, r_s, sigma2, snapshots })
    }

    /// Half-wavelength ULA model.
    pub fn new_ula(
        m: usize,
        theta: Vec<f64>,
        r_s: CMat,
        sigma2: f64,
        snapshots: f64,
    ) -> Result<Self> {
        let (a_theta, a_prime) = ula_steering(&theta, m);
        Self::from_parts(theta, a_theta, a_prime, r_s, sigma2, snapshots)
    }

    pub fn sensors(&self) -> usize {
        self.m
    }

    pub fn sources(&self) -> usize {
        self.k
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn steering(&self) -> &CMat {
        &self.a_theta
    }

    pub fn steering_derivative(&self, k: usize) -> &CMat {
        &self.a_prime[k]
    }

    pub fn source_covariance(&self) -> &CMat {
        &self.r_s
    }

    pub fn noise_power(&self) -> f64 {
        self.sigma2
    }

    pub fn snapshots(&self) -> f64 {
        self.snapshots
    }

    /// `Σ = A_θ R_s A_θᴴ + σ_n²I`.
    pub fn sigma(&self) -> CMat {
        let mut s = &self.a_theta * &self.r_s * self.a_theta.adjoint();
        for i in 0..self.m {
            s[(i, i)] += C64::new(self.sigma2, 0.0);
        }
        s
    }

    /// `∂Σ/∂θ_k = A'_k R_s A_θᴴ + A_θ R_s A'_kᴴ`.
    pub fn sigma_derivative(&self, k: usize) -> CMat {
        let left = &self.a_prime[k] * &self.r_s * self.a_theta.adjoint();
        let right = left.adjoint();
        left + right
    }
}

/// Rectilinear (strictly noncircular) stochastic array model.
#[derive(Debug, Clone)]
pub struct NcDoaModel {
    m: usize,
    k: usize,
    theta: Vec<f64>,
    phi: Vec<f64>,
    a_theta: CMat,
    a_prime: Vec<CMat>,
    r_r: RMat,
    sigma2: f64,
    snapshots: f64,
}

impl NcDoaModel {
    pub fn new_ula(
        m: usize,
        theta: Vec<f64>,
        phi: Vec<f64>,
        r_r: RMat,
        sigma2: f64,
        snapshots: f64,
    ) -> Result<Self> {
        let k = theta.len();
        if phi.len() != k {
            return Err(CesError::DimensionMismatch(
                "one noncircularity phase per source required".into(),
            ));
        }
        let (a_theta, a_prime) = ula_steering(&theta, m);
        validate_steering(&a_theta, &a_prime, k, m)?;
        if r_r.nrows() != k || r_r.ncols() != k {
            return Err(CesError::DimensionMismatch(format!(
                "source covariance is {}x{}, expected {k}x{k}",
                r_r.nrows(),
                r_r.ncols()
            )));
        }
        let r_c = r_r.map(|v| C64::new(v, 0.0));
        validate_hermitian_psd(&r_c, "real source covariance")?;
        if !(sigma2 > 0.0) {
            return Err(CesError::InvalidParameter(format!(
                "noise power must be positive, got {sigma2}"
            )));
        }
        if !(snapshots >= 1.0) {
            return Err(CesError::InvalidParameter(format!(
                "snapshot count must be >= 1, got {snapshots}"
            )));
        }
        Ok(Self { m, k, theta, phi, a_theta, a_prime, r_r, sigma2, snapshots })
    }

    pub fn sensors(&self) -> usize {
        self.m
    }

    pub fn sources(&self) -> usize {
        self.k
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn phi(&self) -> &[f64] {
        &self.phi
    }

    pub fn source_covariance(&self) -> &RMat {
        &self.r_r
    }

    pub fn noise_power(&self) -> f64 {
        self.sigma2
    }

    pub fn snapshots(&self) -> f64 {
        self.snapshots
    }

    fn delta_phi(&self) -> CVec {
        CVec::from_fn(self.k, |j, _| C64::new(self.phi[j].cos(), self.phi[j].sin()))
    }

    /// Augmented steering `Ã_ω = [A_θΔ_φ; A_θ*Δ_φ*]` (2M×K).
    pub fn a_omega(&self) -> CMat {
        let d = self.delta_phi();
        let mut out = CMat::zeros(2 * self.m, self.k);
        for j in 0..self.k {
            for r in 0..self.m {
                let v = self.a_theta[(r, j)] * d[j];
                out[(r, j)] = v;
                out[(self.m + r, j)] = v.conj();
            }
        }
        out
    }

    /// Derivative of `Ã_ω` with respect to `ω_j`; `j < K` addresses `θ_j`,
    /// `j ∈ [K, 2K)` addresses `φ_{j−K}`.
    pub fn a_omega_derivative(&self, j: usize) -> CMat {
        let d = self.delta_phi();
        let mut out = CMat::zeros(2 * self.m, self.k);
        if j < self.k {
            let dk = &self.a_prime[j];
            for r in 0..self.m {
                let v = dk[(r, j)] * d[j];
                out[(r, j)] = v;
                out[(self.m + r, j)] = v.conj();
            }
        } else {
            let jj = j - self.k;
            let iu = C64::new(0.0, 1.0);
            for r in 0..self.m {
                let v = iu * self.a_theta[(r, jj)] * d[jj];
                out[(r, jj)] = v;
                out[(self.m + r, jj)] = v.conj();
            }
        }
        out
    }

    fn r_complex(&self) -> CMat {
        self.r_r.map(|v| C64::new(v, 0.0))
    }

    /// `Γ̃ = Ã_ω R_r Ã_ωᴴ + σ_n²I` (2M×2M).
    pub fn gamma(&self) -> CMat {
        let a = self.a_omega();
        let mut g = &a * self.r_complex() * a.adjoint();
        for i in 0..2 * self.m {
            g[(i, i)] += C64::new(self.sigma2, 0.0);
        }
        g
    }

    /// `∂Γ̃/∂ω_j = Ã'_j R_r Ã_ωᴴ + Ã_ω R_r Ã'_jᴴ`.
    pub fn gamma_derivative(&self, j: usize) -> CMat {
        let a = self.a_omega();
        let d = self.a_omega_derivative(j);
        let left = &d * self.r_complex() * a.adjoint();
        let right = left.adjoint();
        left + right
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::random;
    use crate::rng::RngStream;

    #[test]
    fn ula_at_broadside() {
        let (a, primes) = ula_steering(&[0.0], 4);
        for r in 0..4 {
            assert!((a[(r, 0)] - C64::ONE).norm() < 1e-15);
            let expect = C64::new(0.0, r as f64 * std::f64::consts::PI);
            assert!((primes[0][(r, 0)] - expect).norm() < 1e-14);
        }
    }

    #[test]
    fn ula_columns_have_norm_sqrt_m() {
        let (a, _) = ula_steering(&[0.3, -0.7, 1.1], 5);
        for j in 0..3 {
            assert!((a.column(j).norm() - 5.0f64.sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn ula_derivative_matches_finite_difference() {
        let theta = [0.4, -0.2];
        let m = 6;
        let h = 1e-7;
        let (_, primes) = ula_steering(&theta, m);
        for k in 0..theta.len() {
            let mut tp = theta.to_vec();
            tp[k] += h;
            let mut tm = theta.to_vec();
            tm[k] -= h;
            let (ap, _) = ula_steering(&tp, m);
            let (am, _) = ula_steering(&tm, m);
            let fd = (ap - am) / C64::new(2.0 * h, 0.0);
            let dev = max_abs(&(&fd - &primes[k]));
            assert!(dev < 1e-6, "column {k}: deviation {dev}");
        }
    }

    #[test]
    fn doa_model_validation() {
        let r_s = CMat::identity(2, 2);
        assert!(DoaModel::new_ula(6, vec![0.2, -0.4], r_s.clone(), 1.0, 100.0).is_ok());
        // K >= M
        assert!(DoaModel::new_ula(2, vec![0.2, -0.4], r_s.clone(), 1.0, 100.0).is_err());
        // coalescing sources fail the rank guard
        assert!(matches!(
            DoaModel::new_ula(6, vec![0.3, 0.3], r_s.clone(), 1.0, 100.0),
            Err(CesError::SingularMatrix(_))
        ));
        // bad noise power
        assert!(DoaModel::new_ula(6, vec![0.2, -0.4], r_s, 0.0, 100.0).is_err());
        // non-Hermitian covariance
        let mut bad = CMat::identity(2, 2);
        bad[(0, 1)] = C64::new(0.0, 1.0);
        assert!(DoaModel::new_ula(6, vec![0.2, -0.4], bad, 1.0, 100.0).is_err());
    }

    #[test]
    fn sigma_is_hpd_and_derivative_matches_fd() {
        let mut rng = RngStream::new(3).stream(0);
        let g = random::complex_matrix(2, 2, &mut rng);
        let r_s = &g * g.adjoint() + CMat::identity(2, 2);
        let theta = vec![0.5, -0.3];
        let model = DoaModel::new_ula(5, theta.clone(), r_s.clone(), 0.8, 50.0).unwrap();
        let sigma = model.sigma();
        assert!(max_abs(&(&sigma - sigma.adjoint())) < 1e-12);
        let eig = sigma.clone().symmetric_eigen();
        assert!(eig.eigenvalues.min() > 0.0);

        let h = 1e-7;
        for k in 0..2 {
            let mut tp = theta.clone();
            tp[k] += h;
            let mut tm = theta.clone();
            tm[k] -= h;
            let sp = DoaModel::new_ula(5, tp, r_s.clone(), 0.8, 50.0).unwrap().sigma();
            let sm = DoaModel::new_ula(5, tm, r_s.clone(), 0.8, 50.0).unwrap().sigma();
            let fd = (sp - sm) / C64::new(2.0 * h, 0.0);
            let dev = max_abs(&(&fd - &model.sigma_derivative(k)));
            assert!(dev < 1e-5, "theta {k}: deviation {dev}");
        }
    }

    #[test]
    fn augmented_steering_structure() {
        let mut r_r = RMat::identity(2, 2);
        r_r[(0, 1)] = 0.3;
        r_r[(1, 0)] = 0.3;
        let model =
            NcDoaModel::new_ula(4, vec![0.4, -0.6], vec![0.7, 1.9], r_r, 1.0, 100.0).unwrap();
        let a = model.a_omega();
        assert_eq!(a.nrows(), 8);
        assert_eq!(a.ncols(), 2);
        for j in 0..2 {
            for r in 0..4 {
                assert!((a[(4 + r, j)] - a[(r, j)].conj()).norm() < 1e-15);
            }
        }

        // Γ̃ is Hermitian positive definite and keeps the conjugate block
        // pattern of an augmented scatter matrix.
        let gamma = model.gamma();
        assert!(max_abs(&(&gamma - gamma.adjoint())) < 1e-12);
        let eig = gamma.clone().symmetric_eigen();
        assert!(eig.eigenvalues.min() > 0.0);
        crate::linalg::AugmentedMatrix::from_full(&gamma).unwrap();
    }

    #[test]
    fn augmented_derivatives_match_fd() {
        let mut r_r = RMat::identity(2, 2);
        r_r[(0, 1)] = -0.2;
        r_r[(1, 0)] = -0.2;
        let theta = vec![0.3, -0.5];
        let phi = vec![0.9, 0.1];
        let model =
            NcDoaModel::new_ula(4, theta.clone(), phi.clone(), r_r.clone(), 0.7, 80.0).unwrap();
        let h = 1e-7;
        for j in 0..4 {
            let (mut tp, mut pp) = (theta.clone(), phi.clone());
            let (mut tm, mut pm) = (theta.clone(), phi.clone());
            if j < 2 {
                tp[j] += h;
                tm[j] -= h;
            } else {
                pp[j - 2] += h;
                pm[j - 2] -= h;
            }
            let gp = NcDoaModel::new_ula(4, tp, pp, r_r.clone(), 0.7, 80.0).unwrap().gamma();
            let gm = NcDoaModel::new_ula(4, tm, pm, r_r.clone(), 0.7, 80.0).unwrap().gamma();
            let fd = (gp - gm) / C64::new(2.0 * h, 0.0);
            let dev = max_abs(&(&fd - &model.gamma_derivative(j)));
            assert!(dev < 1e-5, "omega {j}: deviation {dev}");
        }
    }
}
