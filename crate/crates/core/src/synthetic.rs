//! Synthetic one-dimensional regression problems drawn from the model itself.
//!
//! Training inputs sit in two clusters on `[0, 10]`; prediction inputs are
//! evenly spaced over the same interval, so some lie inside the clusters and
//! some far from any data.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::circular::sample_uniform_angle;
use crate::error::Result;
use crate::inference::exchange::{sample_fictitious, Design, ModelAt};
use crate::kernels::InputLocation;
use crate::model::ParamVector;

pub const DOMAIN: (f64, f64) = (0.0, 10.0);
pub const CLUSTER_CENTERS: [f64; 2] = [2.0, 7.0];
pub const CLUSTER_SPREAD: f64 = 0.6;

/// Full-space sweeps used to draw one state from the prior.
pub const PRIOR_SWEEPS: usize = 50_000;

#[derive(Debug, Clone)]
pub struct SyntheticProblem {
    pub params: ParamVector,
    pub train: Vec<InputLocation>,
    pub test: Vec<InputLocation>,
    /// Observed angles at `train`.
    pub theta: Vec<f64>,
    /// Held-out angles at `test`.
    pub truth: Vec<f64>,
}

impl SyntheticProblem {
    pub fn design(&self) -> Result<Design> {
        Design::new(self.test.clone(), self.train.clone())
    }

    /// Distance from each prediction input to the nearest training input.
    pub fn distance_to_data(&self) -> Vec<f64> {
        self.test
            .iter()
            .map(|t| {
                self.train
                    .iter()
                    .map(|x| (x.coords()[0] - t.coords()[0]).abs())
                    .fold(f64::INFINITY, f64::min)
            })
            .collect()
    }
}

/// `n` training inputs split evenly between the two clusters, sorted.
pub fn clustered_inputs<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<InputLocation> {
    let mut xs: Vec<f64> = (0..n)
        .map(|i| {
            let center = CLUSTER_CENTERS[i % CLUSTER_CENTERS.len()];
            let noise = Normal::new(0.0, CLUSTER_SPREAD).expect("valid spread");
            (center + noise.sample(rng)).clamp(DOMAIN.0, DOMAIN.1)
        })
        .collect();
    xs.sort_by(f64::total_cmp);
    xs.into_iter().map(InputLocation::from).collect()
}

/// `m` evenly spaced inputs at the cell midpoints of `[0, 10]`.
pub fn grid_inputs(m: usize) -> Vec<InputLocation> {
    let width = (DOMAIN.1 - DOMAIN.0) / m as f64;
    (0..m)
        .map(|j| InputLocation::from(DOMAIN.0 + width * (j as f64 + 0.5)))
        .collect()
}

/// One approximate draw from `f(ϕ|w)` over the whole design, by a long
/// full-space augmented Gibbs run from a uniform start.
pub fn sample_prior<R: Rng + ?Sized>(design: &Design, w: &ParamVector, sweeps: usize, rng: &mut R) -> Result<Vec<f64>> {
    let model = ModelAt::build(design, *w, crate::gibbs::DEFAULT_SLACK)?;
    let init: Vec<f64> = (0..design.dim()).map(|_| sample_uniform_angle(rng)).collect();
    sample_fictitious(w, &model.augmentation, sweeps, &init, rng)
}

/// A problem with `n_train` clustered observations and `n_test` grid
/// predictions, all angles drawn jointly from the model at `w`.
pub fn synthetic_problem(n_train: usize, n_test: usize, w: &ParamVector, seed: u64) -> Result<SyntheticProblem> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let train = clustered_inputs(n_train, &mut rng);
    let test = grid_inputs(n_test);
    let design = Design::new(test.clone(), train.clone())?;
    let varphi = sample_prior(&design, w, PRIOR_SWEEPS, &mut rng)?;
    Ok(SyntheticProblem {
        params: *w,
        train,
        test,
        theta: varphi[n_test..].to_vec(),
        truth: varphi[..n_test].to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::KernelSpec;

    #[test]
    fn layout() {
        let w = ParamVector::new(KernelSpec::gaussian(1.0, 1.0), 0.5, 0.0);
        let p = synthetic_problem(12, 5, &w, 3).unwrap();
        assert_eq!((p.train.len(), p.test.len(), p.theta.len(), p.truth.len()), (12, 5, 12, 5));
        assert!(p.train.iter().all(|x| (0.0..=10.0).contains(&x.coords()[0])));
        assert_eq!(grid_inputs(4)[0].coords(), &[1.25]);
        let again = synthetic_problem(12, 5, &w, 3).unwrap();
        assert_eq!(p.theta, again.theta);
        let near = p.distance_to_data();
        assert!(near.iter().all(|d| *d >= 0.0));
    }
}
