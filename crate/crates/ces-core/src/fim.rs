//! Score function and Fisher information for parameterized noncircular CES
//! models.
//!
//! For a real parameter vector `α` mapping to a model with augmented mean
//! `μ̃(α)` and augmented scatter `Γ̃(α)`, the per-observation score is
//!
//! `∂ₖ log p = −½tr(Γ̃⁻¹Γ̃ₖ) + φ(η̃)·[−Re(μ̃ₖᴴΓ̃⁻¹(z̃−μ̃)) − ½(z̃−μ̃)ᴴΓ̃⁻¹Γ̃ₖΓ̃⁻¹(z̃−μ̃)]`
//!
//! with `η̃` the modular quadratic form, and the information matrix has the
//! closed form
//!
//! `[I]ₖₗ = ξ₁·Re(μ̃ₖᴴΓ̃⁻¹μ̃ₗ) + (ξ₂/2)·tr(Γ̃⁻¹Γ̃ₖΓ̃⁻¹Γ̃ₗ) + ((ξ₂−1)/4)·tr(Γ̃⁻¹Γ̃ₖ)·tr(Γ̃⁻¹Γ̃ₗ)`.
//!
//! [`empirical_fim`] estimates the same matrix as the sample covariance of
//! scores and serves as the Monte Carlo oracle for the closed form. The ξ
//! coefficients are passed in explicitly so tests can inject exact values
//! and quadrature cost stays out of the information assembly.

use rayon::prelude::*;

use crate::dist::{DensityGenerator, NcCesModel, NoncircularityMatrix, XiCoefficients};
use crate::linalg::{
    augment_vector, guarded_inverse, kron, max_abs, trace_prod, vec_of, AugmentedMatrix, CMat,
    CVec, C64, RMat, RVec,
};
use crate::{CesError, Result};

/// Per-parameter derivatives of the augmented mean and scatter.
#[derive(Debug, Clone)]
pub struct ParamDerivatives {
    pub mu_aug: Vec<CVec>,
    pub gamma_aug: Vec<CMat>,
}

impl ParamDerivatives {
    pub fn len(&self) -> usize {
        self.mu_aug.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mu_aug.is_empty()
    }
}

type Builder = dyn Fn(&[f64]) -> Result<NcCesModel> + Send + Sync;
type DerivFn = dyn Fn(&[f64]) -> Result<ParamDerivatives> + Send + Sync;

/// A real-parameterized model: `α ↦ NcCesModel`, with analytic derivatives
/// when supplied and a central finite-difference fallback otherwise.
/// Complex parameters must be split into real and imaginary components by
/// the builder.
pub struct ParamModel {
    alpha: Vec<f64>,
    builder: Box<Builder>,
    analytic: Option<Box<DerivFn>>,
    fd_step: f64,
}

impl ParamModel {
    pub fn new(
        alpha: Vec<f64>,
        builder: impl Fn(&[f64]) -> Result<NcCesModel> + Send + Sync + 'static,
    ) -> Self {
        Self {
            alpha,
            builder: Box::new(builder),
            analytic: None,
            fd_step: 1e-6,
        }
    }

    pub fn with_analytic_derivatives(
        mut self,
        derivs: impl Fn(&[f64]) -> Result<ParamDerivatives> + Send + Sync + 'static,
    ) -> Self {
        self.analytic = Some(Box::new(derivs));
        self
    }

    /// Number of real parameters `L`.
    pub fn len(&self) -> usize {
        self.alpha.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alpha.is_empty()
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn set_alpha(&mut self, alpha: Vec<f64>) {
        self.alpha = alpha;
    }

    /// Model at the current parameter point.
    pub fn model(&self) -> Result<NcCesModel> {
        (self.builder)(&self.alpha)
    }

    pub fn model_at(&self, alpha: &[f64]) -> Result<NcCesModel> {
        (self.builder)(alpha)
    }

    /// Derivatives `{μ̃ₖ, Γ̃ₖ}` at the current point: analytic when
    /// supplied, otherwise central finite differences of the builder.
    pub fn derivatives(&self) -> Result<ParamDerivatives> {
        match &self.analytic {
            Some(f) => f(&self.alpha),
            None => self.finite_difference_derivatives(),
        }
    }

    /// Central finite differences of `μ̃` and `Γ̃` with step `fd_step`.
    pub fn finite_difference_derivatives(&self) -> Result<ParamDerivatives> {
        let h = self.fd_step;
        let mut mu_aug = Vec::with_capacity(self.len());
        let mut gamma_aug = Vec::with_capacity(self.len());
        for k in 0..self.len() {
            let mut plus = self.alpha.clone();
            plus[k] += h;
            let mut minus = self.alpha.clone();
            minus[k] -= h;
            let mp = self.model_at(&plus)?;
            let mm = self.model_at(&minus)?;
            let scale = C64::new(0.5 / h, 0.0);
            mu_aug.push((mp.mu_aug() - mm.mu_aug()) * scale);
            gamma_aug
                .push((mp.augmented_scatter().gamma() - mm.augmented_scatter().gamma()) * scale);
        }
        Ok(ParamDerivatives { mu_aug, gamma_aug })
    }

    /// Checks analytic derivatives against finite differences at relative
    /// tolerance `tol`, and each `Γ̃ₖ` against the augmented block pattern.
    pub fn validate_derivatives(&self, tol: f64) -> Result<()> {
        let ana = self.derivatives()?;
        let fd = self.finite_difference_derivatives()?;
        for k in 0..self.len() {
            let scale = 1.0 + fd.mu_aug[k].norm().max(max_abs(&fd.gamma_aug[k]));
            let mu_dev = (&ana.mu_aug[k] - &fd.mu_aug[k]).norm();
            let ga_dev = max_abs(&(&ana.gamma_aug[k] - &fd.gamma_aug[k]));
            if mu_dev > tol * scale || ga_dev > tol * scale {
                return Err(CesError::InvalidParameter(format!(
                    "derivative {k} deviates from finite differences \
                     (mean {mu_dev:.3e}, scatter {ga_dev:.3e}, scale {scale:.3e})"
                )));
            }
            AugmentedMatrix::from_full(&ana.gamma_aug[k]).map_err(|e| {
                CesError::InvalidParameter(format!(
                    "scatter derivative {k} violates the augmented pattern: {e}"
                ))
            })?;
        }
        Ok(())
    }
}

/// Canonical single-parameter knobs for assembling experiment models
/// declaratively.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ParamSpec {
    /// Additive shift of `Re μ_i`.
    MuRe(usize),
    /// Additive shift of `Im μ_i`.
    MuIm(usize),
    /// Multiplies the square-root factor by `(1 + α)`.
    ScatterScale,
    /// Additive shift of the noncircularity rate `κ_i`.
    Kappa(usize),
}

/// Builds a [`ParamModel`] around `base` where `α_k` acts as described by
/// `specs[k]`. Analytic derivatives are attached; `α = 0` reproduces the
/// base model.
pub fn param_model_from_specs(base: &NcCesModel, specs: Vec<ParamSpec>) -> Result<ParamModel> {
    let m = base.dim();
    for spec in &specs {
        match *spec {
            ParamSpec::MuRe(i) | ParamSpec::MuIm(i) | ParamSpec::Kappa(i) if i >= m => {
                return Err(CesError::InvalidParameter(format!(
                    "parameter {spec:?} out of range for dimension {m}"
                )));
            }
            _ => {}
        }
    }
    let l = specs.len();

    let build_base = base.clone();
    let build_specs = specs.clone();
    let builder = move |alpha: &[f64]| -> Result<NcCesModel> {
        if alpha.len() != build_specs.len() {
            return Err(CesError::DimensionMismatch(format!(
                "alpha length {} vs {} parameters",
                alpha.len(),
                build_specs.len()
            )));
        }
        let mut mu = build_base.mu().clone();
        let mut scale = 1.0;
        let mut kappa = build_base.kappa().kappa().to_vec();
        for (spec, &a) in build_specs.iter().zip(alpha) {
            match *spec {
                ParamSpec::MuRe(i) => mu[i] += C64::new(a, 0.0),
                ParamSpec::MuIm(i) => mu[i] += C64::new(0.0, a),
                ParamSpec::ScatterScale => scale *= 1.0 + a,
                ParamSpec::Kappa(i) => kappa[i] += a,
            }
        }
        NcCesModel::new(
            mu,
            build_base.factor() * C64::new(scale, 0.0),
            NoncircularityMatrix::new(kappa)?,
            build_base.generator().clone(),
        )
    };

    let deriv_base = base.clone();
    let deriv_specs = specs;
    let derivs = move |alpha: &[f64]| -> Result<ParamDerivatives> {
        let mut scale = 1.0;
        let mut kappa_cur = deriv_base.kappa().kappa().to_vec();
        for (spec, &a) in deriv_specs.iter().zip(alpha) {
            match *spec {
                ParamSpec::ScatterScale => scale *= 1.0 + a,
                ParamSpec::Kappa(i) => kappa_cur[i] += a,
                _ => {}
            }
        }
        let a_cur = deriv_base.factor() * C64::new(scale, 0.0);
        let m = deriv_base.dim();
        let mut mu_aug = Vec::with_capacity(deriv_specs.len());
        let mut gamma_aug = Vec::with_capacity(deriv_specs.len());
        for (spec, &a) in deriv_specs.iter().zip(alpha) {
            let mut dmu = CVec::zeros(2 * m);
            let mut dgamma = CMat::zeros(2 * m, 2 * m);
            match *spec {
                ParamSpec::MuRe(i) => {
                    dmu[i] = C64::ONE;
                    dmu[m + i] = C64::ONE;
                }
                ParamSpec::MuIm(i) => {
                    dmu[i] = C64::new(0.0, 1.0);
                    dmu[m + i] = C64::new(0.0, -1.0);
                }
                ParamSpec::ScatterScale => {
                    // Γ̃(α) scales quadratically with the factor scale.
                    let model = NcCesModel::new(
                        deriv_base.mu().clone(),
                        a_cur.clone(),
                        NoncircularityMatrix::new(kappa_cur.clone())?,
                        deriv_base.generator().clone(),
                    )?;
                    dgamma = model.augmented_scatter().gamma() * C64::new(2.0 / (1.0 + a), 0.0);
                }
                ParamSpec::Kappa(i) => {
                    // only Ω moves: ∂Ω/∂κ_i = A·E_ii·Aᵀ
                    let col = a_cur.column(i);
                    for r in 0..m {
                        for cidx in 0..m {
                            let val = col[r] * col[cidx];
                            dgamma[(r, m + cidx)] = val;
                            dgamma[(m + r, cidx)] = val.conj();
                        }
                    }
                }
            }
            mu_aug.push(dmu);
            gamma_aug.push(dgamma);
        }
        Ok(ParamDerivatives { mu_aug, gamma_aug })
    };

    Ok(ParamModel::new(vec![0.0; l], builder).with_analytic_derivatives(derivs))
}

/// Precomputed quantities for repeated score evaluation at a fixed `α`.
pub struct ScoreEngine {
    m: usize,
    mu_aug: CVec,
    gamma_inv: CMat,
    derivs: ParamDerivatives,
    traces: Vec<f64>,
    generator: DensityGenerator,
}

impl ScoreEngine {
    pub fn new(pm: &ParamModel) -> Result<Self> {
        let model = pm.model()?;
        let derivs = pm.derivatives()?;
        if derivs.len() != pm.len() {
            return Err(CesError::DimensionMismatch(
                "derivative count differs from parameter count".into(),
            ));
        }
        let gamma = model.augmented_scatter().gamma().clone();
        let gamma_inv = guarded_inverse(&gamma, "augmented scatter")?;
        let traces = derivs
            .gamma_aug
            .iter()
            .map(|gk| trace_prod(&gamma_inv, gk).map(|t| t.re))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            m: model.dim(),
            mu_aug: model.mu_aug(),
            gamma_inv,
            derivs,
            traces,
            generator: model.generator().clone(),
        })
    }

    pub fn param_len(&self) -> usize {
        self.traces.len()
    }

    /// `tr(Γ̃⁻¹Γ̃ₖ)` for each parameter.
    pub fn gamma_traces(&self) -> &[f64] {
        &self.traces
    }

    /// Modular quadratic form of one observation.
    pub fn eta(&self, z: &CVec) -> f64 {
        let r = augment_vector(z) - &self.mu_aug;
        0.5 * r.dotc(&(&self.gamma_inv * &r)).re
    }

    /// `∂η̃/∂α_k` at one observation:
    /// `−Re(μ̃ₖᴴΓ̃⁻¹r̃) − ½·r̃ᴴΓ̃⁻¹Γ̃ₖΓ̃⁻¹r̃`.
    pub fn eta_derivatives(&self, z: &CVec) -> RVec {
        let r = augment_vector(z) - &self.mu_aug;
        let x = &self.gamma_inv * &r;
        RVec::from_fn(self.param_len(), |k, _| {
            let lin = self.derivs.mu_aug[k].dotc(&x).re;
            let quad = x.dotc(&(&self.derivs.gamma_aug[k] * &x)).re;
            -lin - 0.5 * quad
        })
    }

    /// The score vector at one observation.
    pub fn score(&self, z: &CVec) -> RVec {
        let r = augment_vector(z) - &self.mu_aug;
        let x = &self.gamma_inv * &r;
        let eta = 0.5 * r.dotc(&x).re;
        let phi = self.generator.phi(self.m, eta);
        RVec::from_fn(self.param_len(), |k, _| {
            let lin = self.derivs.mu_aug[k].dotc(&x).re;
            let quad = x.dotc(&(&self.derivs.gamma_aug[k] * &x)).re;
            -0.5 * self.traces[k] + phi * (-lin - 0.5 * quad)
        })
    }

    /// Log-density of one observation up to an `α`-independent constant:
    /// `−½·log det Γ̃ + ln g(η̃)`. Used by finite-difference oracles.
    pub fn log_density_unnormalized(model: &NcCesModel, z: &CVec) -> Result<f64> {
        let gamma = model.augmented_scatter().gamma().clone();
        let det = gamma.lu().determinant();
        if det.re <= 0.0 {
            return Err(CesError::SingularMatrix(
                "augmented scatter determinant not positive".into(),
            ));
        }
        let eta = crate::dist::mahalanobis_q(z, model)?;
        Ok(-0.5 * det.re.ln() + model.generator().ln_g(model.dim(), eta))
    }
}

/// The score `∇_α log p(z; α)` at one observation.
pub fn score(z: &CVec, pm: &ParamModel) -> Result<RVec> {
    Ok(ScoreEngine::new(pm)?.score(z))
}

/// Analytic Fisher information matrix together with the coefficients used.
#[derive(Debug, Clone)]
pub struct FimMatrix {
    pub entries: RMat,
    pub xi: XiCoefficients,
}

/// Closed-form Fisher information of the model at `pm.alpha()`.
pub fn fim_ncces(pm: &ParamModel, xi: &XiCoefficients) -> Result<FimMatrix> {
    let model = pm.model()?;
    if xi.m != model.dim() {
        return Err(CesError::InvalidParameter(format!(
            "coefficients computed at M={} but model has M={}",
            xi.m,
            model.dim()
        )));
    }
    let derivs = pm.derivatives()?;
    let gamma = model.augmented_scatter().gamma().clone();
    let gamma_inv = guarded_inverse(&gamma, "augmented scatter")?;
    let l = pm.len();

    let w: Vec<CVec> = derivs.mu_aug.iter().map(|mk| &gamma_inv * mk).collect();
    let p: Vec<CMat> = derivs.gamma_aug.iter().map(|gk| &gamma_inv * gk).collect();
    let traces: Vec<f64> = p.iter().map(|pk| pk.diagonal().sum().re).collect();

    let mut entries = RMat::zeros(l, l);
    for k in 0..l {
        for j in 0..l {
            let loc = derivs.mu_aug[k].dotc(&w[j]).re;
            let sc = trace_prod(&p[k], &p[j])?.re;
            entries[(k, j)] =
                xi.xi1 * loc + 0.5 * xi.xi2 * sc + 0.25 * (xi.xi2 - 1.0) * traces[k] * traces[j];
        }
    }
    Ok(FimMatrix { entries, xi: *xi })
}

/// Monte Carlo information estimate: the sample mean of `score·scoreᵀ`,
/// with per-entry standard errors and the score mean (which must vanish by
/// the regularity condition).
#[derive(Debug, Clone)]
pub struct EmpiricalFim {
    pub entries: RMat,
    pub standard_errors: RMat,
    pub score_mean: RVec,
    pub score_mean_se: RVec,
    pub n: usize,
}

/// Estimates the information matrix from samples. Samples are processed in
/// fixed-size batches and partial sums are combined in batch order, so the
/// result is bit-reproducible for a given input regardless of worker count.
pub fn empirical_fim(samples: &[CVec], pm: &ParamModel) -> Result<EmpiricalFim> {
    const BATCH: usize = 1 << 13;
    let engine = ScoreEngine::new(pm)?;
    let l = engine.param_len();
    let n = samples.len();
    if n < 1000 {
        return Err(CesError::InvalidParameter(format!(
            "empirical information needs at least 1000 samples, got {n}"
        )));
    }

    struct Partial {
        sum_s: RVec,
        sum_s2: RVec,
        sum_ss: RMat,
        sum_ss2: RMat,
    }

    let partials: Vec<Partial> = samples
        .par_chunks(BATCH)
        .map(|chunk| {
            let mut p = Partial {
                sum_s: RVec::zeros(l),
                sum_s2: RVec::zeros(l),
                sum_ss: RMat::zeros(l, l),
                sum_ss2: RMat::zeros(l, l),
            };
            for z in chunk {
                let s = engine.score(z);
                for k in 0..l {
                    p.sum_s[k] += s[k];
                    p.sum_s2[k] += s[k] * s[k];
                    for j in 0..l {
                        let v = s[k] * s[j];
                        p.sum_ss[(k, j)] += v;
                        p.sum_ss2[(k, j)] += v * v;
                    }
                }
            }
            p
        })
        .collect();

    let mut sum_s = RVec::zeros(l);
    let mut sum_s2 = RVec::zeros(l);
    let mut sum_ss = RMat::zeros(l, l);
    let mut sum_ss2 = RMat::zeros(l, l);
    for p in partials {
        sum_s += p.sum_s;
        sum_s2 += p.sum_s2;
        sum_ss += p.sum_ss;
        sum_ss2 += p.sum_ss2;
    }

    let nf = n as f64;
    let entries = &sum_ss / nf;
    let mut standard_errors = RMat::zeros(l, l);
    for k in 0..l {
        for j in 0..l {
            let mean = entries[(k, j)];
            standard_errors[(k, j)] = ((sum_ss2[(k, j)] / nf - mean * mean).max(0.0) / nf).sqrt();
        }
    }
    let score_mean = &sum_s / nf;
    let score_mean_se = RVec::from_fn(l, |k, _| {
        ((sum_s2[k] / nf - score_mean[k] * score_mean[k]).max(0.0) / nf).sqrt()
    });

    Ok(EmpiricalFim {
        entries,
        standard_errors,
        score_mean,
        score_mean_se,
        n,
    })
}

/// The kernel of the scatter-block information gap:
/// `(Γ̃⁻ᵀ ⊗ Γ̃⁻¹) + ½·vec(Γ̃⁻¹)vecᴴ(Γ̃⁻¹)` — Hermitian positive definite.
pub fn fim_gap_kernel(gamma: &CMat) -> Result<CMat> {
    let gamma_inv = guarded_inverse(gamma, "augmented scatter")?;
    let v = vec_of(&gamma_inv);
    let mut kernel = kron(&gamma_inv.transpose(), &gamma_inv);
    for r in 0..v.len() {
        for cidx in 0..v.len() {
            kernel[(r, cidx)] += C64::new(0.5, 0.0) * v[r] * v[cidx].conj();
        }
    }
    Ok(kernel)
}

/// Information surplus of a CES model over the Gaussian model with the same
/// scatter parameterization:
///
/// `((ξ₂−1)/2) · Dᴴ[(Γ̃⁻ᵀ⊗Γ̃⁻¹) + ½vec(Γ̃⁻¹)vecᴴ(Γ̃⁻¹)]D`, `D = ∂vec(Γ̃)/∂αᵀ`.
///
/// Requires a scatter-only parameterization (all `μ̃ₖ = 0`); equals
/// `fim_ncces(ξ₁, ξ₂) − fim_ncces(ξ₁, 1)` entrywise.
pub fn gaussian_fim_gap(pm: &ParamModel, xi: &XiCoefficients) -> Result<RMat> {
    let model = pm.model()?;
    let derivs = pm.derivatives()?;
    let scale = derivs
        .gamma_aug
        .iter()
        .fold(0.0f64, |acc, g| acc.max(max_abs(g)));
    for (k, mk) in derivs.mu_aug.iter().enumerate() {
        if mk.norm() > 1e-10 * (1.0 + scale) {
            return Err(CesError::InvalidParameter(format!(
                "parameter {k} moves the mean; the information gap applies to \
                 scatter-only parameterizations"
            )));
        }
    }
    let gamma = model.augmented_scatter().gamma().clone();
    let kernel = fim_gap_kernel(&gamma)?;
    let l = pm.len();
    let n2 = gamma.nrows() * gamma.nrows();
    let mut d = CMat::zeros(n2, l);
    for k in 0..l {
        d.set_column(k, &vec_of(&derivs.gamma_aug[k]));
    }
    let g = d.adjoint() * kernel * &d;
    let factor = 0.5 * (xi.xi2 - 1.0);
    Ok(RMat::from_fn(l, l, |r, cidx| factor * g[(r, cidx)].re))
}
