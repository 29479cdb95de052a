//! Monte Carlo estimate of the marginal-likelihood gradient
//! `∇_w log p(θ|w) = E_{p₂}[∇_w U] − E_{p₁}[∇_w U]`, with `p₂` the full-space
//! model `f(φ′, θ′|w)` and `p₁` the posterior over `φ′` with `θ` clamped.
//!
//! Shipped as a diagnostic: at practical budgets the estimate is too noisy
//! to drive a fit.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::gibbs::{gibbs_sweep, make_augmentation, sweep_with_factor, AugmentedState, Initialization};
use crate::inference::exchange::{Design, ModelAt};
use crate::kernels::gram_derivative;
use crate::model::{conditional_params, Param, ParamVector};
use crate::evaluation::{mean_std, ress};

#[derive(Debug, Clone, PartialEq)]
pub struct CdConfig {
    /// Retained samples per expectation.
    pub samples: usize,
    pub burn_in: usize,
    /// Sweeps between retained samples.
    pub thin: usize,
    pub slack: f64,
    pub seed: u64,
}

impl Default for CdConfig {
    fn default() -> Self {
        CdConfig {
            samples: 1_000,
            burn_in: 200,
            thin: 1,
            slack: crate::gibbs::DEFAULT_SLACK,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CdGradient {
    pub params: Vec<Param>,
    pub mean: Vec<f64>,
    /// Standard error from the autocorrelation-adjusted sample size of each
    /// term, combined in quadrature.
    pub std_err: Vec<f64>,
}

impl CdGradient {
    pub fn get(&self, p: Param) -> Option<(f64, f64)> {
        self.params.iter().position(|&q| q == p).map(|i| (self.mean[i], self.std_err[i]))
    }
}

/// `∇_w U(ϕ|w)` for one model, with the kernel derivatives precomputed.
pub struct EnergyGradient<'a> {
    model: &'a ModelAt,
    params: Vec<Param>,
    dk: Vec<Option<DMatrix<f64>>>,
}

impl<'a> EnergyGradient<'a> {
    pub fn new(design: &Design, model: &'a ModelAt) -> Result<Self> {
        let w = &model.params;
        let params = w.params();
        let dk = params
            .iter()
            .map(|p| {
                p.kernel_param()
                    .map(|kp| gram_derivative(&w.kernel, design.locations(), model.jitter, kp))
                    .transpose()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(EnergyGradient { model, params, dk })
    }

    pub fn params(&self) -> &[Param] {
        &self.params
    }

    /// Kernel terms use `∂M = −M (∂K) M`, giving
    /// `∂U = −½ (u_cᵀ ∂K u_c + u_sᵀ ∂K u_s)` with `u = M cos ϕ`, `M sin ϕ`.
    pub fn eval(&self, varphi: &[f64]) -> Vec<f64> {
        let m = self.model.precision.matrix();
        let (kappa, nu) = (self.model.params.kappa, self.model.params.nu);
        let c = DVector::from_iterator(varphi.len(), varphi.iter().map(|x| x.cos()));
        let s = DVector::from_iterator(varphi.len(), varphi.iter().map(|x| x.sin()));
        let (uc, us) = (m * c, m * s);
        self.params
            .iter()
            .zip(&self.dk)
            .map(|(p, dk)| match (p, dk) {
                (_, Some(dk)) => -0.5 * ((dk * &uc).dot(&uc) + (dk * &us).dot(&us)),
                (Param::Kappa, None) => -varphi.iter().map(|x| (x - nu).cos()).sum::<f64>(),
                (Param::Nu, None) => -kappa * varphi.iter().map(|x| (x - nu).sin()).sum::<f64>(),
                _ => 0.0,
            })
            .collect()
    }
}

fn column_stats(rows: &[Vec<f64>], j: usize) -> (f64, f64) {
    let col: Vec<f64> = rows.iter().map(|r| r[j]).collect();
    let (mean, sd) = mean_std(&col).unwrap_or((0.0, 0.0));
    if rows.len() < 2 || sd == 0.0 {
        return (mean, 0.0);
    }
    let eff = ress(&col).map(|r| r.min(1.0)).unwrap_or(1.0);
    (mean, sd / (rows.len() as f64 * eff).sqrt())
}

/// Contrastive-divergence style gradient estimate at `w` for observed `θ`.
///
/// Observation noise is ignored; the estimate is for the noiseless model.
pub fn cd_gradient(design: &Design, w: &ParamVector, theta: &[f64], config: &CdConfig) -> Result<CdGradient> {
    if config.samples == 0 || config.thin == 0 {
        return Err(Error::Config("cd gradient needs samples >= 1 and thin >= 1".into()));
    }
    if theta.len() != design.observed() {
        return Err(Error::DimensionMismatch {
            context: "observed angles vs. design",
            expected: design.observed(),
            got: theta.len(),
        });
    }
    let mut w = *w;
    w.chi = None;
    let model = ModelAt::build(design, w, config.slack)?;
    cd_gradient_with(design, &model, theta, config)
}

/// Same as [`cd_gradient`] on a prebuilt model.
pub fn cd_gradient_with(design: &Design, model: &ModelAt, theta: &[f64], config: &CdConfig) -> Result<CdGradient> {
    let grad = EnergyGradient::new(design, model)?;
    let m = design.unobserved();
    let d = design.dim();
    let w = &model.params;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let total = config.burn_in + config.samples * config.thin;
    let keep = |it: usize| it >= config.burn_in && (it - config.burn_in) % config.thin == config.thin - 1;

    // p₂: the full-space model.
    let init = Initialization::from_mean_pull(w.kappa, w.nu);
    let rho_c = DVector::from_element(d, w.kappa * w.nu.cos());
    let rho_s = DVector::from_element(d, w.kappa * w.nu.sin());
    let mut full = AugmentedState::new(init.draw(d, &mut rng)?);
    let mut p2 = Vec::with_capacity(config.samples);
    for it in 0..total {
        sweep_with_factor(&mut full, model.augmentation.factor(), &rho_c, &rho_s, &mut rng);
        if keep(it) {
            p2.push(grad.eval(full.phi.as_slice()));
        }
    }

    // p₁: unobserved angles given θ; exact when nothing is unobserved.
    let p1 = if m == 0 {
        vec![grad.eval(theta)]
    } else {
        let cp = conditional_params(&model.precision, theta, w)?;
        let aug = make_augmentation(&cp.q, config.slack)?;
        let mut state = AugmentedState::new(init.draw(m, &mut rng)?);
        let mut varphi = vec![0.0; d];
        varphi[m..].copy_from_slice(theta);
        let mut out = Vec::with_capacity(config.samples);
        for it in 0..total {
            gibbs_sweep(&mut state, &aug, &cp, &mut rng);
            if keep(it) {
                varphi[..m].copy_from_slice(state.phi.as_slice());
                out.push(grad.eval(&varphi));
            }
        }
        out
    };

    let k = grad.params().len();
    let mut mean = Vec::with_capacity(k);
    let mut std_err = Vec::with_capacity(k);
    for j in 0..k {
        let (m2, e2) = column_stats(&p2, j);
        let (m1, e1) = column_stats(&p1, j);
        mean.push(m2 - m1);
        std_err.push(e2.hypot(e1));
    }
    Ok(CdGradient {
        params: grad.params().to_vec(),
        mean,
        std_err,
    })
}
