//! Structured operators shared by the circular and noncircular bound
//! assemblies.
//!
//! The weighting matrix `T = a·I + b·vec(I)vecᵀ(I)` and its square root
//! have closed forms: with `p = ‖vec(I_n)‖² = n`,
//! `T^{1/2} = √a·I + ((√(a+bp) − √a)/p)·vec(I)vecᵀ(I)`,
//! valid whenever `a > 0` and `a + bp ≥ 0` (i.e. `T` positive
//! semidefinite). The parameterization matrices map real parameter vectors
//! onto structured covariances: `J` for Hermitian matrices, `D_ρ` for real
//! symmetric ones, and the symmetrizer `N = ½(I + K)` is the orthogonal
//! projector onto symmetric vecs, `N = D_ρ(D_ρᵀD_ρ)⁻¹D_ρᵀ`.

use crate::linalg::{commutation_matrix, vec_of, CMat, CVec, C64, RMat};
use crate::{CesError, Result};

/// `diag·I_{n²} + rank1·vec(I_n)vecᵀ(I_n)`.
pub fn t_matrix(n: usize, diag: f64, rank1: f64) -> CMat {
    let v = vec_of(&CMat::identity(n, n));
    let mut t = CMat::identity(n * n, n * n) * C64::new(diag, 0.0);
    for r in 0..n * n {
        if v[r] == C64::ZERO {
            continue;
        }
        for c in 0..n * n {
            t[(r, c)] += C64::new(rank1, 0.0) * v[r] * v[c];
        }
    }
    t
}

/// Closed-form square root of [`t_matrix`]; rejects indefinite inputs.
pub fn t_matrix_sqrt(n: usize, diag: f64, rank1: f64) -> Result<CMat> {
    let p = n as f64;
    let tail = diag + rank1 * p;
    if !(diag > 0.0) || tail < 0.0 {
        return Err(CesError::InvalidParameter(format!(
            "weighting matrix is not positive semidefinite \
             (diagonal {diag:.3e}, extreme eigenvalue {tail:.3e})"
        )));
    }
    let a_sqrt = diag.sqrt();
    let b = (tail.sqrt() - a_sqrt) / p;
    Ok(t_matrix(n, a_sqrt, b))
}

/// `J`: the `K²×K²` nonsingular matrix mapping the real parameter vector of
/// a Hermitian matrix (diagonal entries, then Re and Im of the strict upper
/// triangle) onto its vec.
pub fn hermitian_basis_matrix(k: usize) -> CMat {
    let mut j = CMat::zeros(k * k, k * k);
    let mut col = 0;
    let mut basis = |mat: CMat, j_mat: &mut CMat, col: &mut usize| {
        j_mat.set_column(*col, &vec_of(&mat));
        *col += 1;
    };
    for d in 0..k {
        let mut e = CMat::zeros(k, k);
        e[(d, d)] = C64::ONE;
        basis(e, &mut j, &mut col);
    }
    for r in 0..k {
        for c in (r + 1)..k {
            let mut re = CMat::zeros(k, k);
            re[(r, c)] = C64::ONE;
            re[(c, r)] = C64::ONE;
            basis(re, &mut j, &mut col);

            let mut im = CMat::zeros(k, k);
            im[(r, c)] = C64::new(0.0, 1.0);
            im[(c, r)] = C64::new(0.0, -1.0);
            basis(im, &mut j, &mut col);
        }
    }
    j
}

/// `D_ρ`: the `K² × K(K+1)/2` duplication-style matrix with
/// `vec(R) = D_ρ·ρ` for real symmetric `R`, `ρ = (diagonal; strict upper
/// triangle)`.
pub fn symmetric_duplication(k: usize) -> CMat {
    let cols = k * (k + 1) / 2;
    let mut d = CMat::zeros(k * k, cols);
    let mut col = 0;
    for i in 0..k {
        d[(i + i * k, col)] = C64::ONE;
        col += 1;
    }
    for r in 0..k {
        for c in (r + 1)..k {
            d[(r + c * k, col)] = C64::ONE;
            d[(c + r * k, col)] = C64::ONE;
            col += 1;
        }
    }
    d
}

/// `N = ½(I + K_{K,K})`: the orthogonal projector onto vecs of symmetric
/// matrices.
pub fn symmetrizer(k: usize) -> CMat {
    let mut n = commutation_matrix(k, k);
    for r in 0..k * k {
        n[(r, r)] += C64::ONE;
    }
    n * C64::new(0.5, 0.0)
}

/// Intermediate quantities of the projector-based bound assembly. The
/// fields follow one naming scheme for both the circular (`n = M`) and
/// noncircular (`n = 2M`) constructions.
pub struct ProjectorBundle {
    /// Weighting matrix `T` (`n²×n²`).
    pub t: CMat,
    /// Its closed-form square root.
    pub t_sqrt: CMat,
    /// `T^{1/2}·vec(Σ⁻¹)`: the noise-parameter direction.
    pub u_n: CVec,
    /// `T^{1/2}·W·(source parameterization)`: the source-covariance block.
    pub v: CMat,
    /// Closed-form `W(WᴴTW)⁻¹Wᴴ`-type kernel.
    pub b: CMat,
    /// `Π⊥_V = I − T^{1/2}·B·T^{1/2}`.
    pub pi_perp_v: CMat,
    /// Columns `g_k = T^{1/2}·vec(Z_k + Z_kᴴ)`, one per interest parameter.
    pub g: CMat,
    /// `H₁ = Σ^{-1/2}·A·U⁻¹·Aᴴ·Σ^{-1/2}` (idempotent, trace = K).
    pub h1: CMat,
    /// `U = Aᴴ·Σ⁻¹·A`.
    pub u: CMat,
}

impl ProjectorBundle {
    /// `G ᴴ·Π⊥_{[V | u_n]}·G`, the per-snapshot information on the interest
    /// parameters after projecting out source covariance and noise power.
    pub fn information_matrix(&self) -> Result<RMat> {
        let pv_u = &self.pi_perp_v * &self.u_n;
        let denom = self.u_n.dotc(&pv_u).re;
        if !(denom > 1e-12 * (1.0 + self.u_n.norm_squared())) {
            return Err(CesError::SingularMatrix(
                "noise direction is numerically inside the source-covariance span".into(),
            ));
        }
        let l = self.g.ncols();
        let mut info = RMat::zeros(l, l);
        for k in 0..l {
            let gk = self.g.column(k).into_owned();
            let pv_gk = &self.pi_perp_v * &gk;
            let uk = pv_u.dotc(&gk);
            for j in 0..l {
                let gj = self.g.column(j).into_owned();
                let direct = gj.dotc(&pv_gk);
                let correction = uk.conj() * pv_u.dotc(&gj) / C64::new(denom, 0.0);
                info[(k, j)] = (direct - correction).re;
            }
        }
        Ok(info)
    }
}
