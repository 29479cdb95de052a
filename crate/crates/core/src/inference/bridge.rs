//! Bridging between `f(·|w′)` and `f(·|w)` with annealed intermediate levels.
//!
//! Level `k` targets `f_k = f(·|w)^{β_k} f(·|w′)^{1−β_k}` with
//! `β_k = k / (K + 1)`. Its transition reuses the two cached factors `A_w` and
//! `A_w′`: four Gaussian auxiliaries scaled by `√β_k` and `√β_{K+1−k}` cancel
//! the two halves of the interpolated coupling, so no per-level Cholesky is
//! needed.

use nalgebra::DVector;
use rand::Rng;

use crate::error::{Error, Result};
use crate::gibbs::{draw_decoupled, draw_normal_vector};
use crate::inference::exchange::ModelAt;
use crate::model::energy_from_matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BridgeConfig {
    /// Number of intermediate levels `K`; zero gives plain double MH.
    pub levels: usize,
    /// Sweeps of the fictitious chain under the proposed parameters.
    pub inner_sweeps: usize,
}

impl Default for BridgeConfig {
    fn default() -> Self {
        BridgeConfig {
            levels: 0,
            inner_sweeps: 50,
        }
    }
}

impl BridgeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.inner_sweeps == 0 {
            return Err(Error::Config("inner_sweeps must be at least 1".into()));
        }
        Ok(())
    }
}

/// `β_k = k / (K + 1)` for `k = 1..=K`.
pub fn beta_ladder(levels: usize) -> Vec<f64> {
    (1..=levels).map(|k| k as f64 / (levels + 1) as f64).collect()
}

/// `log f_k(ξ | w, w′)` written out with the interpolated coupling
/// `M_k = β_k M_w + β_{K+1−k} M_w′` and linear terms `α_{k,c}`, `α_{k,s}`.
/// Levels `0` and `K + 1` are `f(·|w′)` and `f(·|w)`.
pub fn bridge_log_density(xi: &[f64], k: usize, levels: usize, current: &ModelAt, proposed: &ModelAt) -> f64 {
    let beta = k as f64 / (levels + 1) as f64;
    let beta_rev = (levels + 1 - k) as f64 / (levels + 1) as f64;
    let mk = current.precision.matrix() * beta + proposed.precision.matrix() * beta_rev;
    let (w, wp) = (&current.params, &proposed.params);
    let alpha_c = beta * w.kappa * w.nu.cos() + (1.0 - beta) * wp.kappa * wp.nu.cos();
    let alpha_s = beta * w.kappa * w.nu.sin() + (1.0 - beta) * wp.kappa * wp.nu.sin();
    // −U with κ cos(ξ − ν) expanded into its cosine and sine parts.
    let quad = energy_from_matrix(xi, &mk, 0.0, 0.0);
    let lin: f64 = xi.iter().map(|x| alpha_c * x.cos() + alpha_s * x.sin()).sum();
    -quad + lin
}

/// Result of one pass up the ladder.
#[derive(Debug, Clone, PartialEq)]
pub struct BridgeRun {
    /// `ξ_0, ξ_1, …, ξ_K`.
    pub states: Vec<Vec<f64>>,
    /// `Σ_{k=0}^{K} [log f_{k+1}(ξ_k) − log f_k(ξ_k)]`, the log of an
    /// annealed importance estimate of `Z[w] / Z[w′]`.
    pub log_ratio: f64,
}

/// Runs `K` bridging transitions starting from `ξ_0 ~ f(·|w′)`.
///
/// `current` holds `w` with `A_w`, `proposed` holds `w′` with `A_w′`.
pub fn bridge_ladder<R: Rng + ?Sized>(
    xi0: &[f64],
    current: &ModelAt,
    proposed: &ModelAt,
    levels: usize,
    rng: &mut R,
) -> Result<BridgeRun> {
    let d = current.dim();
    if proposed.dim() != d || xi0.len() != d {
        return Err(Error::DimensionMismatch {
            context: "bridge states",
            expected: d,
            got: if proposed.dim() != d { proposed.dim() } else { xi0.len() },
        });
    }
    let step = 1.0 / (levels + 1) as f64;
    // log f_{k+1} − log f_k = (β_{k+1} − β_k)(log f(·|w) − log f(·|w′)).
    let increment = |xi: &[f64]| step * (proposed.energy(xi) - current.energy(xi));

    let a_w = current.augmentation.factor();
    let a_wp = proposed.augmentation.factor();
    let (w, wp) = (&current.params, &proposed.params);

    let mut states = Vec::with_capacity(levels + 1);
    let mut log_ratio = increment(xi0);
    let mut xi = DVector::from_column_slice(xi0);
    states.push(xi0.to_vec());

    for k in 1..=levels {
        let beta = k as f64 * step;
        let beta_rev = (levels + 1 - k) as f64 * step;
        let (sb, sbr) = (beta.sqrt(), beta_rev.sqrt());
        let c = xi.map(f64::cos);
        let s = xi.map(f64::sin);
        let y1 = a_w * &c * sb + draw_normal_vector(d, rng);
        let y2 = a_w * &s * sb + draw_normal_vector(d, rng);
        let y3 = a_wp * &c * sbr + draw_normal_vector(d, rng);
        let y4 = a_wp * &s * sbr + draw_normal_vector(d, rng);

        let alpha_c = beta * w.kappa * w.nu.cos() + beta_rev * wp.kappa * wp.nu.cos();
        let alpha_s = beta * w.kappa * w.nu.sin() + beta_rev * wp.kappa * wp.nu.sin();
        let kappa_c = a_w.tr_mul(&y1) * sb + a_wp.tr_mul(&y3) * sbr + DVector::from_element(d, alpha_c);
        let kappa_s = a_w.tr_mul(&y2) * sb + a_wp.tr_mul(&y4) * sbr + DVector::from_element(d, alpha_s);
        draw_decoupled(&mut xi, &kappa_c, &kappa_s, rng);

        let state = xi.as_slice().to_vec();
        log_ratio += increment(&state);
        states.push(state);
    }
    Ok(BridgeRun { states, log_ratio })
}
