//! The vMQP density: precision matrix, conditional quantities for the
//! unobserved angles, the energy `U` and the optional observation-noise factor.
//!
//! Index convention: the `m` unobserved angles occupy indices `0..m` and the
//! `n` observed angles occupy `m..m + n`.

use std::fmt;

use nalgebra::{DMatrix, DVector};

use crate::circular::normalize_angle;
use crate::error::{Error, Result};
use crate::kernels::{GramMatrix, KernelParam, KernelSpec};

/// One learnable component of [`ParamVector`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Param {
    Variance,
    Lengthscale,
    GradientLengthscale,
    Kappa,
    Nu,
}

impl Param {
    /// Column name used in parameter traces.
    pub fn name(self) -> &'static str {
        match self {
            Param::Variance => "sigma2",
            Param::Lengthscale => "l",
            Param::GradientLengthscale => "g",
            Param::Kappa => "kappa",
            Param::Nu => "nu",
        }
    }

    pub fn kernel_param(self) -> Option<KernelParam> {
        match self {
            Param::Variance => Some(KernelParam::Variance),
            Param::Lengthscale => Some(KernelParam::Lengthscale),
            Param::GradientLengthscale => Some(KernelParam::GradientLengthscale),
            _ => None,
        }
    }
}

impl fmt::Display for Param {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Model parameters `w`: kernel hyperparameters, the mean-direction pull
/// `(κ, ν)` and an optional observation-noise concentration `χ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamVector {
    pub kernel: KernelSpec,
    pub kappa: f64,
    pub nu: f64,
    pub chi: Option<f64>,
}

impl ParamVector {
    pub fn new(kernel: KernelSpec, kappa: f64, nu: f64) -> Self {
        ParamVector {
            kernel,
            kappa,
            nu: normalize_angle(nu),
            chi: None,
        }
    }

    pub fn with_noise(mut self, chi: f64) -> Self {
        self.chi = Some(chi);
        self
    }

    /// Parameters present for this kernel family, in trace-column order.
    pub fn params(&self) -> Vec<Param> {
        let mut out: Vec<Param> = self
            .kernel
            .params()
            .iter()
            .map(|p| match p {
                KernelParam::Variance => Param::Variance,
                KernelParam::Lengthscale => Param::Lengthscale,
                KernelParam::GradientLengthscale => Param::GradientLengthscale,
            })
            .collect();
        out.push(Param::Kappa);
        out.push(Param::Nu);
        out
    }

    pub fn get(&self, p: Param) -> f64 {
        match p {
            Param::Variance => self.kernel.variance,
            Param::Lengthscale => self.kernel.lengthscale,
            Param::GradientLengthscale => self.kernel.gradient_lengthscale.unwrap_or(f64::NAN),
            Param::Kappa => self.kappa,
            Param::Nu => self.nu,
        }
    }

    pub fn set(&mut self, p: Param, value: f64) {
        match p {
            Param::Variance => self.kernel.variance = value,
            Param::Lengthscale => self.kernel.lengthscale = value,
            Param::GradientLengthscale => self.kernel.gradient_lengthscale = Some(value),
            Param::Kappa => self.kappa = value,
            Param::Nu => self.nu = normalize_angle(value),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.kernel.validate()?;
        if !(self.kappa.is_finite() && self.kappa >= 0.0) {
            return Err(Error::InvalidParameter(format!("kappa must be >= 0, got {}", self.kappa)));
        }
        if !self.nu.is_finite() {
            return Err(Error::InvalidParameter("nu must be finite".into()));
        }
        if let Some(chi) = self.chi {
            if !(chi.is_finite() && chi >= 0.0) {
                return Err(Error::InvalidParameter(format!("chi must be >= 0, got {chi}")));
            }
        }
        Ok(())
    }
}

/// `M = K⁻¹` together with the unobserved/observed partition sizes.
#[derive(Debug, Clone)]
pub struct PrecisionModel {
    matrix: DMatrix<f64>,
    m: usize,
    n: usize,
}

impl PrecisionModel {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn unobserved(&self) -> usize {
        self.m
    }

    pub fn observed(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.m + self.n
    }

    pub fn block_phi_phi(&self) -> DMatrix<f64> {
        self.matrix.view((0, 0), (self.m, self.m)).into_owned()
    }

    pub fn block_phi_theta(&self) -> DMatrix<f64> {
        self.matrix.view((0, self.m), (self.m, self.n)).into_owned()
    }

    pub fn block_theta_phi(&self) -> DMatrix<f64> {
        self.matrix.view((self.m, 0), (self.n, self.m)).into_owned()
    }

    pub fn block_theta_theta(&self) -> DMatrix<f64> {
        self.matrix.view((self.m, self.m), (self.n, self.n)).into_owned()
    }

    /// Wraps an explicitly given precision matrix (no inversion performed).
    pub fn from_precision(matrix: DMatrix<f64>, m: usize, n: usize) -> Result<Self> {
        if matrix.nrows() != m + n || matrix.ncols() != m + n {
            return Err(Error::DimensionMismatch {
                context: "precision matrix",
                expected: m + n,
                got: matrix.nrows(),
            });
        }
        Ok(PrecisionModel { matrix, m, n })
    }
}

/// Inverts the Gram matrix through its Cholesky factor.
pub fn build_precision(gram: &GramMatrix, m: usize, n: usize) -> Result<PrecisionModel> {
    if gram.dim() != m + n {
        return Err(Error::DimensionMismatch {
            context: "gram matrix vs. partition sizes",
            expected: m + n,
            got: gram.dim(),
        });
    }
    let inv = gram.cholesky().inverse();
    let matrix = (&inv + inv.transpose()) * 0.5;
    if matrix.iter().any(|v| !v.is_finite()) {
        return Err(Error::Factorization("non-finite precision matrix".into()));
    }
    Ok(PrecisionModel { matrix, m, n })
}

/// Linear coefficients `ρ_c`, `ρ_s` and quadratic coupling `Q` of the
/// conditional density over the latent angles.
///
/// In the noiseless case the latent angles are the `m` unobserved ones. With
/// observation noise all `d` angles are latent and the observations enter the
/// linear terms through `χ`.
#[derive(Debug, Clone)]
pub struct ConditionalParams {
    pub rho_c: DVector<f64>,
    pub rho_s: DVector<f64>,
    pub q: DMatrix<f64>,
}

impl ConditionalParams {
    pub fn dim(&self) -> usize {
        self.rho_c.len()
    }

    /// The full-space target `f(ξ|w)` with no data term.
    pub fn prior(pm: &PrecisionModel, kappa: f64, nu: f64) -> Self {
        let d = pm.dim();
        ConditionalParams {
            rho_c: DVector::from_element(d, kappa * nu.cos()),
            rho_s: DVector::from_element(d, kappa * nu.sin()),
            q: pm.matrix.clone(),
        }
    }

    /// Log of the conditional density up to a constant:
    /// `ρ_c·cos φ + ρ_s·sin φ − ½ cos φᵀ Q cos φ − ½ sin φᵀ Q sin φ`.
    pub fn log_density(&self, phi: &[f64]) -> f64 {
        let c = DVector::from_iterator(phi.len(), phi.iter().map(|p| p.cos()));
        let s = DVector::from_iterator(phi.len(), phi.iter().map(|p| p.sin()));
        self.rho_c.dot(&c) + self.rho_s.dot(&s)
            - 0.5 * c.dot(&(&self.q * &c))
            - 0.5 * s.dot(&(&self.q * &s))
    }
}

pub fn conditional_params(pm: &PrecisionModel, theta: &[f64], w: &ParamVector) -> Result<ConditionalParams> {
    if theta.len() != pm.n {
        return Err(Error::DimensionMismatch {
            context: "observed angles",
            expected: pm.n,
            got: theta.len(),
        });
    }
    let cos_t = DVector::from_iterator(pm.n, theta.iter().map(|t| t.cos()));
    let sin_t = DVector::from_iterator(pm.n, theta.iter().map(|t| t.sin()));
    let (kc, ks) = (w.kappa * w.nu.cos(), w.kappa * w.nu.sin());

    match w.chi {
        None => {
            let cross = pm.matrix.view((0, pm.m), (pm.m, pm.n));
            let rho_c = -(&cross * &cos_t) + DVector::from_element(pm.m, kc);
            let rho_s = -(&cross * &sin_t) + DVector::from_element(pm.m, ks);
            Ok(ConditionalParams {
                rho_c,
                rho_s,
                q: pm.block_phi_phi(),
            })
        }
        Some(chi) => {
            let d = pm.dim();
            let mut rho_c = DVector::from_element(d, kc);
            let mut rho_s = DVector::from_element(d, ks);
            for i in 0..pm.n {
                rho_c[pm.m + i] += chi * cos_t[i];
                rho_s[pm.m + i] += chi * sin_t[i];
            }
            Ok(ConditionalParams {
                rho_c,
                rho_s,
                q: pm.matrix.clone(),
            })
        }
    }
}

/// Energy from a precision matrix: `½ Σ M_ij cos(ϕ_i − ϕ_j) − κ Σ cos(ϕ_i − ν)`.
pub fn energy_from_matrix(varphi: &[f64], matrix: &DMatrix<f64>, kappa: f64, nu: f64) -> f64 {
    let d = varphi.len();
    let c = DVector::from_iterator(d, varphi.iter().map(|p| p.cos()));
    let s = DVector::from_iterator(d, varphi.iter().map(|p| p.sin()));
    let quad = 0.5 * (c.dot(&(matrix * &c)) + s.dot(&(matrix * &s)));
    let lin: f64 = varphi.iter().map(|p| (p - nu).cos()).sum();
    quad - kappa * lin
}

/// `U(ϕ|w)`; the unnormalized density is `f(ϕ|w) = exp(−U)`.
pub fn energy_u(varphi: &[f64], w: &ParamVector, pm: &PrecisionModel) -> Result<f64> {
    if varphi.len() != pm.dim() {
        return Err(Error::DimensionMismatch {
            context: "full angle state",
            expected: pm.dim(),
            got: varphi.len(),
        });
    }
    Ok(energy_from_matrix(varphi, &pm.matrix, w.kappa, w.nu))
}

/// `log f(ϕ|w) = −U(ϕ|w)`.
pub fn log_f(varphi: &[f64], w: &ParamVector, pm: &PrecisionModel) -> Result<f64> {
    energy_u(varphi, w, pm).map(|u| -u)
}

/// `χ Σ cos(θ_i − ϕ_{m+i})`, the log-likelihood of noisy observations.
pub fn noisy_log_factor(theta_obs: &[f64], latent_tail: &[f64], chi: f64) -> Result<f64> {
    if theta_obs.len() != latent_tail.len() {
        return Err(Error::DimensionMismatch {
            context: "noisy observations vs. latent tail",
            expected: theta_obs.len(),
            got: latent_tail.len(),
        });
    }
    Ok(chi
        * theta_obs
            .iter()
            .zip(latent_tail)
            .map(|(t, p)| (t - p).cos())
            .sum::<f64>())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{build_gram, InputLocation};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn w0(kappa: f64, nu: f64) -> ParamVector {
        ParamVector::new(KernelSpec::gaussian(1.0, 1.0), kappa, nu)
    }

    fn random_spd(d: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
        let b = DMatrix::from_fn(d, d, |_, _| rng.random::<f64>() - 0.5);
        &b * b.transpose() + DMatrix::identity(d, d) * 0.5
    }

    #[test]
    fn identity_gram_inverts_to_identity() {
        let gram = GramMatrix::from_matrix(DMatrix::identity(4, 4)).unwrap();
        let pm = build_precision(&gram, 2, 2).unwrap();
        assert!((pm.matrix() - DMatrix::identity(4, 4)).amax() < 1e-15);
        assert_eq!(pm.block_phi_theta().amax(), 0.0);
        assert_eq!(pm.block_theta_phi().amax(), 0.0);
    }

    #[test]
    fn scalar_gram() {
        let gram = GramMatrix::from_matrix(DMatrix::from_element(1, 1, 4.0)).unwrap();
        let pm = build_precision(&gram, 1, 0).unwrap();
        assert!((pm.matrix()[(0, 0)] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn precision_times_gram_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let k = random_spd(4, &mut rng);
        let gram = GramMatrix::from_matrix(k.clone()).unwrap();
        let pm = build_precision(&gram, 3, 1).unwrap();
        assert!((pm.matrix() * &k - DMatrix::identity(4, 4)).amax() < 1e-6);
        assert_eq!(pm.block_phi_phi().shape(), (3, 3));
        assert_eq!(pm.block_theta_theta().shape(), (1, 1));
    }

    #[test]
    fn partition_must_match() {
        let gram = GramMatrix::from_matrix(DMatrix::identity(3, 3)).unwrap();
        assert!(build_precision(&gram, 1, 1).is_err());
    }

    #[test]
    fn block_diagonal_gives_pure_mean_pull() {
        let pm = PrecisionModel::from_precision(DMatrix::identity(3, 3), 2, 1).unwrap();
        let cp = conditional_params(&pm, &[1.3], &w0(1.0, 0.0)).unwrap();
        assert!((cp.rho_c.clone() - DVector::from_element(2, 1.0)).amax() < 1e-15);
        assert!(cp.rho_s.amax() < 1e-15);
    }

    #[test]
    fn zero_kappa_leaves_data_term() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let m = random_spd(5, &mut rng);
        let pm = PrecisionModel::from_precision(m.clone(), 3, 2).unwrap();
        let theta = [0.4, -2.0];
        let cp = conditional_params(&pm, &theta, &w0(0.0, 1.0)).unwrap();
        let cross = m.view((0, 3), (3, 2));
        let ct = DVector::from_vec(theta.iter().map(|t| t.cos()).collect());
        let st = DVector::from_vec(theta.iter().map(|t| t.sin()).collect());
        assert!((cp.rho_c.clone() + cross * ct).amax() < 1e-14);
        assert!((cp.rho_s.clone() + cross * st).amax() < 1e-14);
    }

    #[test]
    fn two_by_two_hand_example() {
        let m = DMatrix::from_row_slice(2, 2, &[2.0, -1.0, -1.0, 2.0]);
        let pm = PrecisionModel::from_precision(m, 1, 1).unwrap();
        let cp = conditional_params(&pm, &[0.0], &w0(0.0, 0.0)).unwrap();
        assert!((cp.rho_c[0] - 1.0).abs() < 1e-15);
        assert!(cp.rho_s[0].abs() < 1e-15);
        assert_eq!(cp.q[(0, 0)], 2.0);
    }

    #[test]
    fn theta_length_checked() {
        let pm = PrecisionModel::from_precision(DMatrix::identity(3, 3), 2, 1).unwrap();
        assert!(conditional_params(&pm, &[0.0, 1.0], &w0(1.0, 0.0)).is_err());
    }

    #[test]
    fn noisy_conditional_covers_all_angles() {
        let pm = PrecisionModel::from_precision(DMatrix::identity(3, 3), 2, 1).unwrap();
        let w = w0(0.5, 0.0).with_noise(2.0);
        let cp = conditional_params(&pm, &[0.0], &w).unwrap();
        assert_eq!(cp.dim(), 3);
        assert!((cp.rho_c[2] - 2.5).abs() < 1e-15);
        assert!((cp.rho_c[0] - 0.5).abs() < 1e-15);
        assert_eq!(cp.q.shape(), (3, 3));
    }

    #[test]
    fn energy_examples() {
        let pm = PrecisionModel::from_precision(DMatrix::identity(4, 4), 4, 0).unwrap();
        let u = energy_u(&[0.3, 1.0, -2.0, 3.0], &w0(0.0, 0.0), &pm).unwrap();
        assert!((u - 2.0).abs() < 1e-14);

        let m = DMatrix::from_row_slice(2, 2, &[2.0, -1.0, -1.0, 2.0]);
        let pm = PrecisionModel::from_precision(m, 2, 0).unwrap();
        let u = energy_u(&[0.0, 0.0], &w0(0.0, 0.0), &pm).unwrap();
        assert!((u - 1.0).abs() < 1e-15);
    }

    #[test]
    fn noisy_factor_examples() {
        assert_eq!(noisy_log_factor(&[0.3, 1.0], &[2.0, -1.0], 0.0).unwrap(), 0.0);
        let v = noisy_log_factor(&[0.3, 1.0, 2.0], &[0.3, 1.0, 2.0], 1.5).unwrap();
        assert!((v - 4.5).abs() < 1e-15);
        let v = noisy_log_factor(&[0.0], &[PI], 1.0).unwrap();
        assert!((v + 1.0).abs() < 1e-15);
        assert!(noisy_log_factor(&[0.0], &[0.0, 1.0], 1.0).is_err());
    }

    #[test]
    fn conditional_exponent_matches_energy_up_to_constant() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let locs: Vec<InputLocation> = (0..6).map(|i| InputLocation::from(i as f64 * 0.7)).collect();
        let w = ParamVector::new(KernelSpec::gaussian(1.0, 1.1), 0.8, 0.5);
        let gram = build_gram(&w.kernel, &locs).unwrap();
        let pm = build_precision(&gram, 4, 2).unwrap();
        let theta = [0.2, -1.1];
        let cp = conditional_params(&pm, &theta, &w).unwrap();
        let mut diffs = Vec::new();
        for _ in 0..100 {
            let phi: Vec<f64> = (0..4).map(|_| rng.random_range(-PI..PI)).collect();
            let mut full = phi.clone();
            full.extend_from_slice(&theta);
            let u = energy_u(&full, &w, &pm).unwrap();
            diffs.push(cp.log_density(&phi) + u);
        }
        let spread = diffs.iter().cloned().fold(f64::MIN, f64::max)
            - diffs.iter().cloned().fold(f64::MAX, f64::min);
        assert!(spread < 1e-8, "spread {spread}");
    }

    #[test]
    fn conditional_q_is_positive_definite() {
        let locs: Vec<InputLocation> = (0..8).map(|i| InputLocation::from(i as f64 * 0.3)).collect();
        let w = ParamVector::new(KernelSpec::exponential(1.0, 0.9), 1.0, 0.0);
        let gram = build_gram(&w.kernel, &locs).unwrap();
        let pm = build_precision(&gram, 5, 3).unwrap();
        let cp = conditional_params(&pm, &[0.0, 0.1, 0.2], &w).unwrap();
        assert!(nalgebra::Cholesky::new(cp.q).is_some());
    }

    proptest! {
        #[test]
        fn energy_invariant_under_rotation_at_zero_kappa(
            phi in proptest::collection::vec(-PI..PI, 5),
            c in -PI..PI,
        ) {
            let locs: Vec<InputLocation> = (0..5).map(|i| InputLocation::from(i as f64)).collect();
            let w = ParamVector::new(KernelSpec::gaussian(1.0, 1.0), 0.0, 0.0);
            let pm = build_precision(&build_gram(&w.kernel, &locs).unwrap(), 5, 0).unwrap();
            let rotated: Vec<f64> = phi.iter().map(|p| p + c).collect();
            let u1 = energy_u(&phi, &w, &pm).unwrap();
            let u2 = energy_u(&rotated, &w, &pm).unwrap();
            prop_assert!((u1 - u2).abs() < 1e-10);
        }

        #[test]
        fn energy_symmetric_under_kappa_flip(
            phi in proptest::collection::vec(-PI..PI, 4),
            kappa in 0.0f64..5.0,
            nu in -PI..PI,
        ) {
            let pm = PrecisionModel::from_precision(DMatrix::from_fn(4, 4, |i, j| if i == j { 2.0 } else { -0.3 }), 4, 0).unwrap();
            let a = energy_from_matrix(&phi, pm.matrix(), kappa, nu);
            let b = energy_from_matrix(&phi, pm.matrix(), -kappa, nu - PI);
            prop_assert!((a - b).abs() < 1e-12);
        }
    }
}
