//! Dense complex matrix algebra substrate.
//!
//! Everything here is standard vec/Kronecker calculus plus the augmented
//! (widely linear) block structure used by the rest of the crate:
//!
//! - `vec` stacks columns (column-major, fixed crate-wide);
//! - the commutation matrix `K` maps `vec(C)` to `vec(Cᵀ)`;
//! - [`woodbury_inverse`] evaluates `(A + BCD)⁻¹` by the matrix inversion
//!   lemma, with an explicit conditioning guard;
//! - [`AugmentedMatrix`] is the `2M×2M` pattern `[[A₁, A₂], [A₂*, A₁*]]`
//!   with `A₁` Hermitian and `A₂` complex symmetric;
//! - [`gaussian_fourth_moment`] and [`quadratic_form_expectation`] are the
//!   closed-form fourth-order moments of an augmented standard complex
//!   Gaussian vector.
//!
//! Matrices stay dense: nothing in this crate exceeds a few hundred rows.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::{CesError, Result};

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;
pub type RMat = DMatrix<f64>;
pub type RVec = DVector<f64>;

/// Reciprocal condition estimate below which inverses are refused.
pub const RCOND_MIN: f64 = 1e-12;

/// Relative tolerance for Hermitian/symmetric structure checks on inputs
/// assembled from derivatives (rounding is expected).
pub const STRUCTURE_TOL: f64 = 1e-10;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Largest entry magnitude; 0 for empty matrices.
pub fn max_abs(m: &CMat) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// Returns an error if any entry is NaN or infinite.
pub fn check_finite(m: &CMat, what: &str) -> Result<()> {
    if m.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(CesError::InvalidParameter(format!(
            "{what} contains non-finite entries"
        )))
    }
}

/// Column-stacking `vec` operator.
pub fn vec_of(a: &CMat) -> CVec {
    CVec::from_column_slice(a.as_slice())
}

/// Inverse of [`vec_of`]: reshape a length `rows·cols` vector column-major.
pub fn unvec(v: &CVec, rows: usize, cols: usize) -> Result<CMat> {
    if v.len() != rows * cols {
        return Err(CesError::DimensionMismatch(format!(
            "cannot reshape length-{} vector into {rows}x{cols}",
            v.len()
        )));
    }
    Ok(CMat::from_column_slice(rows, cols, v.as_slice()))
}

/// Kronecker product `A ⊗ B`.
pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

pub fn trace(m: &CMat) -> C64 {
    m.diagonal().sum()
}

/// `tr(AB)` without forming the product.
pub fn trace_prod(a: &CMat, b: &CMat) -> Result<C64> {
    if a.ncols() != b.nrows() || a.nrows() != b.ncols() {
        return Err(CesError::DimensionMismatch(format!(
            "trace of product needs conformable {}x{} and {}x{}",
            a.nrows(),
            a.ncols(),
            b.nrows(),
            b.ncols()
        )));
    }
    let mut acc = C64::ZERO;
    for i in 0..a.nrows() {
        for k in 0..a.ncols() {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    Ok(acc)
}

/// Commutation (vec-permutation) matrix `K_{m,n}`: the `mn×mn` 0/1 matrix
/// with `K·vec(C) = vec(Cᵀ)` for every `m×n` matrix `C`.
pub fn commutation_matrix(m: usize, n: usize) -> CMat {
    assert!(m >= 1 && n >= 1, "commutation matrix needs m, n >= 1");
    let mut k = CMat::zeros(m * n, m * n);
    for i in 0..m {
        for j in 0..n {
            // vec(C) slot of C[i,j] is i + j*m; vec(Cᵀ) slot is j + i*n.
            k[(j + i * n, i + j * m)] = C64::ONE;
        }
    }
    k
}

/// Reciprocal condition number from the singular values. Returns 0 for
/// matrices whose SVD has a zero largest singular value.
pub fn rcond(m: &CMat) -> f64 {
    let sv = m.clone().singular_values();
    let smax = sv.max();
    let smin = sv.min();
    if smax <= 0.0 || !smax.is_finite() {
        0.0
    } else {
        smin / smax
    }
}

/// Dense inverse behind the conditioning guard.
pub fn guarded_inverse(m: &CMat, what: &str) -> Result<CMat> {
    if m.nrows() != m.ncols() {
        return Err(CesError::DimensionMismatch(format!(
            "{what}: inverse of non-square {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let rc = rcond(m);
    if !(rc >= RCOND_MIN) {
        return Err(CesError::SingularMatrix(format!(
            "{what}: reciprocal condition estimate {rc:.3e} below {RCOND_MIN:.0e}"
        )));
    }
    m.clone().try_inverse().ok_or_else(|| {
        CesError::SingularMatrix(format!("{what}: LU inversion failed"))
    })
}

/// `(A + BCD)⁻¹` via the matrix inversion lemma:
/// `A⁻¹ − A⁻¹B(C⁻¹ + DA⁻¹B)⁻¹DA⁻¹`.
///
/// `A`, `C` and the inner matrix `C⁻¹ + DA⁻¹B` must all pass the
/// conditioning guard.
pub fn woodbury_inverse(a: &CMat, b: &CMat, c_mid: &CMat, d: &CMat) -> Result<CMat> {
    let (n, k) = (a.nrows(), c_mid.nrows());
    if a.ncols() != n
        || b.nrows() != n
        || b.ncols() != k
        || c_mid.ncols() != k
        || d.nrows() != k
        || d.ncols() != n
    {
        return Err(CesError::DimensionMismatch(
            "woodbury_inverse: A (n×n), B (n×k), C (k×k), D (k×n) required".into(),
        ));
    }
    let a_inv = guarded_inverse(a, "woodbury A")?;
    let c_inv = guarded_inverse(c_mid, "woodbury C")?;
    let inner = &c_inv + d * &a_inv * b;
    let inner_inv = guarded_inverse(&inner, "woodbury C^-1 + D A^-1 B")?;
    Ok(&a_inv - &a_inv * b * inner_inv * d * &a_inv)
}

/// `J' = [[0, I], [I, 0]]` of size `2m×2m`.
pub fn j_prime(m: usize) -> CMat {
    let mut j = CMat::zeros(2 * m, 2 * m);
    for i in 0..m {
        j[(i, m + i)] = C64::ONE;
        j[(m + i, i)] = C64::ONE;
    }
    j
}

/// Assembles `[[S, T], [T*, S*]]` from `M×M` blocks.
pub fn augmented_from_blocks(s: &CMat, t: &CMat) -> Result<CMat> {
    let m = s.nrows();
    if s.ncols() != m || t.nrows() != m || t.ncols() != m {
        return Err(CesError::DimensionMismatch(
            "augmented blocks must be square and same size".into(),
        ));
    }
    let mut full = CMat::zeros(2 * m, 2 * m);
    for i in 0..m {
        for j in 0..m {
            full[(i, j)] = s[(i, j)];
            full[(i, m + j)] = t[(i, j)];
            full[(m + i, j)] = t[(i, j)].conj();
            full[(m + i, m + j)] = s[(i, j)].conj();
        }
    }
    Ok(full)
}

/// Stacks `(zᵀ, zᴴ)ᵀ`.
pub fn augment_vector(z: &CVec) -> CVec {
    let m = z.len();
    let mut out = CVec::zeros(2 * m);
    for i in 0..m {
        out[i] = z[i];
        out[m + i] = z[i].conj();
    }
    out
}

/// A `2M×2M` matrix `[[A₁, A₂], [A₂*, A₁*]]` with `A₁` Hermitian and `A₂`
/// complex symmetric. Such matrices are Hermitian and satisfy
/// `J'·Ãᵀ·J' = Ã`, the structure under which the fourth-order moment
/// identities below hold.
#[derive(Debug, Clone)]
pub struct AugmentedMatrix {
    m: usize,
    a1: CMat,
    a2: CMat,
}

impl AugmentedMatrix {
    /// Validates the structure within `STRUCTURE_TOL` relative to the entry
    /// scale; inputs typically arrive from derivative assembly with
    /// rounding.
    pub fn from_blocks(a1: CMat, a2: CMat) -> Result<Self> {
        let m = a1.nrows();
        if a1.ncols() != m || a2.nrows() != m || a2.ncols() != m {
            return Err(CesError::DimensionMismatch(
                "augmented blocks must be square and same size".into(),
            ));
        }
        check_finite(&a1, "augmented block A1")?;
        check_finite(&a2, "augmented block A2")?;
        let scale = 1.0 + max_abs(&a1).max(max_abs(&a2));
        let herm_dev = max_abs(&(&a1 - a1.adjoint()));
        if herm_dev > STRUCTURE_TOL * scale {
            return Err(CesError::InvalidParameter(format!(
                "A1 deviates from Hermitian by {herm_dev:.3e}"
            )));
        }
        let sym_dev = max_abs(&(&a2 - a2.transpose()));
        if sym_dev > STRUCTURE_TOL * scale {
            return Err(CesError::InvalidParameter(format!(
                "A2 deviates from symmetric by {sym_dev:.3e}"
            )));
        }
        Ok(Self { m, a1, a2 })
    }

    /// Splits a full `2M×2M` matrix into blocks and validates the pattern,
    /// including agreement of the conjugated lower blocks.
    pub fn from_full(full: &CMat) -> Result<Self> {
        let n = full.nrows();
        if full.ncols() != n || n % 2 != 0 {
            return Err(CesError::DimensionMismatch(
                "augmented matrix must be square with even size".into(),
            ));
        }
        let m = n / 2;
        let a1 = full.view((0, 0), (m, m)).into_owned();
        let a2 = full.view((0, m), (m, m)).into_owned();
        let lower_left = full.view((m, 0), (m, m)).into_owned();
        let lower_right = full.view((m, m), (m, m)).into_owned();
        let scale = 1.0 + max_abs(full);
        let dev = max_abs(&(&lower_left - a2.map(|z| z.conj())))
            .max(max_abs(&(&lower_right - a1.map(|z| z.conj()))));
        if dev > STRUCTURE_TOL * scale {
            return Err(CesError::InvalidParameter(format!(
                "lower blocks deviate from conjugate pattern by {dev:.3e}"
            )));
        }
        Self::from_blocks(a1, a2)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn a1(&self) -> &CMat {
        &self.a1
    }

    pub fn a2(&self) -> &CMat {
        &self.a2
    }

    pub fn full(&self) -> CMat {
        augmented_from_blocks(&self.a1, &self.a2).expect("blocks validated at construction")
    }

    pub fn trace(&self) -> C64 {
        2.0 * C64::new(trace(&self.a1).re, 0.0)
    }
}

/// Fourth-order moment matrix `E(ỹ*ỹᵀ ⊗ ỹỹᴴ)` of the augmented standard
/// complex Gaussian `ỹ = (yᵀ, yᴴ)ᵀ`, `y ∼ CN_M(0, I)`:
///
/// `I⊗I + K(J'⊗J') + vec(I)vecᵀ(I)`
///
/// with `I` the `2M×2M` identity and `K` the `2M·2M` commutation matrix.
pub fn gaussian_fourth_moment(m: usize) -> CMat {
    assert!(m >= 1, "gaussian_fourth_moment needs M >= 1");
    let n = 2 * m;
    let jp = j_prime(m);
    let jj = kron(&jp, &jp);

    // K(J'⊗J') applied as a row permutation: row (j + i·n) of the product
    // is row (i + j·n) of J'⊗J'.
    let mut out = CMat::zeros(n * n, n * n);
    for i in 0..n {
        for j in 0..n {
            let dst = j + i * n;
            let src = i + j * n;
            for col in 0..n * n {
                out[(dst, col)] = jj[(src, col)];
            }
        }
    }
    for d in 0..n * n {
        out[(d, d)] += C64::ONE;
    }
    let v = vec_of(&CMat::identity(n, n));
    for (r, vr) in v.iter().enumerate() {
        for (cc, vc) in v.iter().enumerate() {
            out[(r, cc)] += vr * vc;
        }
    }
    out
}

/// Closed form for `E[(ỹᴴÃỹ)(ỹᴴB̃ỹ)]` with `ỹ` as above:
/// `tr(Ã)tr(B̃) + 2tr(ÃB̃)`.
pub fn quadratic_form_expectation(at: &AugmentedMatrix, bt: &AugmentedMatrix) -> Result<C64> {
    if at.m() != bt.m() {
        return Err(CesError::DimensionMismatch(format!(
            "augmented sizes differ: {} vs {}",
            at.m(),
            bt.m()
        )));
    }
    let fa = at.full();
    let fb = bt.full();
    Ok(trace(&fa) * trace(&fb) + 2.0 * trace_prod(&fa, &fb)?)
}

/// Hermitian square root via eigendecomposition. Eigenvalues slightly
/// negative from rounding are clamped to zero; genuinely negative spectra
/// are rejected.
pub fn hermitian_sqrt(m: &CMat) -> Result<CMat> {
    if m.nrows() != m.ncols() {
        return Err(CesError::DimensionMismatch(
            "hermitian_sqrt needs a square matrix".into(),
        ));
    }
    let scale = max_abs(m);
    let eig = m.clone().symmetric_eigen();
    let mut vals = eig.eigenvalues.clone();
    for v in vals.iter_mut() {
        if *v < 0.0 {
            if *v < -1e-10 * (1.0 + scale) {
                return Err(CesError::InvalidParameter(format!(
                    "hermitian_sqrt: eigenvalue {v:.3e} is negative"
                )));
            }
            *v = 0.0;
        }
    }
    let q = &eig.eigenvectors;
    let sqrt_d = CMat::from_diagonal(&vals.map(|v| C64::new(v.sqrt(), 0.0)));
    Ok(q * sqrt_d * q.adjoint())
}

/// Symmetrizes a numerically-Hermitian matrix: `(M + Mᴴ)/2`.
pub fn hermitian_part(m: &CMat) -> CMat {
    (m + m.adjoint()) * c(0.5, 0.0)
}

/// Random helpers shared by tests and the validation harness.
pub mod random {
    use super::{CMat, CVec, C64};
    use rand::Rng;
    use rand_distr::StandardNormal;

    pub fn complex_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMat {
        CMat::from_fn(rows, cols, |_, _| {
            C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
        })
    }

    pub fn complex_vector<R: Rng + ?Sized>(len: usize, rng: &mut R) -> CVec {
        CVec::from_fn(len, |_, _| {
            C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
        })
    }

    /// Random Hermitian matrix.
    pub fn hermitian<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMat {
        let a = complex_matrix(n, n, rng);
        (&a + a.adjoint()) * C64::new(0.5, 0.0)
    }

    /// Random Hermitian positive definite matrix `GGᴴ + εI`.
    pub fn hpd<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMat {
        let g = complex_matrix(n, n, rng);
        let mut m = &g * g.adjoint();
        for i in 0..n {
            m[(i, i)] += C64::new(0.5, 0.0);
        }
        m
    }

    /// Random complex symmetric matrix.
    pub fn complex_symmetric<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMat {
        let a = complex_matrix(n, n, rng);
        (&a + a.transpose()) * C64::new(0.5, 0.0)
    }
}
