//! Block Gibbs over the unobserved angles and the parameters.
//!
//! Each iteration alternates augmented Gibbs sweeps for `φ | θ, w` with one
//! exchange move per parameter block for `w | φ, θ`. Test locations are part of
//! the model from the start.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::gibbs::{gibbs_sweep, make_augmentation, AugmentedState, Augmentation, Initialization, DEFAULT_SLACK};
use crate::inference::bridge::BridgeConfig;
use crate::inference::dmh::DmhSampler;
use crate::inference::exchange::Design;
use crate::inference::prior::PriorSpec;
use crate::inference::proposal::{block_name, ProposalSpec};
use crate::kernels::InputLocation;
use crate::model::{conditional_params, ConditionalParams, Param, ParamVector};

#[derive(Debug, Clone, PartialEq)]
pub struct FitConfig {
    pub initial: ParamVector,
    pub priors: PriorSpec,
    pub proposals: ProposalSpec,
    pub bridge: BridgeConfig,
    pub slack: f64,
    pub n_iter: usize,
    pub burn_in: usize,
    pub thin: usize,
    /// Gibbs sweeps over the angles per iteration.
    pub gibbs_sweeps: usize,
    /// Passes over the parameter blocks per iteration; zero keeps `w` fixed.
    pub dmh_steps: usize,
    pub seed: u64,
}

impl FitConfig {
    pub fn new(initial: ParamVector) -> Self {
        FitConfig {
            initial,
            priors: PriorSpec::default(),
            proposals: ProposalSpec::default(),
            bridge: BridgeConfig::default(),
            slack: DEFAULT_SLACK,
            n_iter: 2_000,
            burn_in: 500,
            thin: 1,
            gibbs_sweeps: 1,
            dmh_steps: 1,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_iter <= self.burn_in {
            return Err(Error::Config(format!(
                "n_iter ({}) must exceed burn_in ({})",
                self.n_iter, self.burn_in
            )));
        }
        if self.thin == 0 || self.gibbs_sweeps == 0 {
            return Err(Error::Config("thin and gibbs_sweeps must be at least 1".into()));
        }
        self.bridge.validate()?;
        self.initial.validate()
    }
}

/// One retained iteration of the parameter chain.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamSample {
    pub iter: usize,
    pub params: ParamVector,
    /// Whether any exchange move was accepted during this iteration.
    pub accepted: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitOutput {
    /// Parameters present in the trace, in column order.
    pub params: Vec<Param>,
    pub w_trace: Vec<ParamSample>,
    /// Retained samples of the `m` unobserved angles.
    pub phi_samples: Vec<Vec<f64>>,
    /// `(block name, acceptance rate)` over all iterations.
    pub acceptance: Vec<(String, f64)>,
}

struct ConditionalCache {
    cp: ConditionalParams,
    aug: Augmentation,
}

fn conditional_cache(sampler: &DmhSampler, theta: &[f64], slack: f64) -> Result<ConditionalCache> {
    let cp = conditional_params(&sampler.current().precision, theta, sampler.params())?;
    let aug = make_augmentation(&cp.q, slack)?;
    Ok(ConditionalCache { cp, aug })
}

/// Joint posterior sampling of `(w, φ)` given observed angles `θ` at
/// `train_locations`, with predictions at `test_locations`.
pub fn block_gibbs_fit(
    theta: &[f64],
    train_locations: Vec<InputLocation>,
    test_locations: Vec<InputLocation>,
    config: &FitConfig,
) -> Result<FitOutput> {
    config.validate()?;
    if test_locations.is_empty() {
        return Err(Error::NoPredictionLocations);
    }
    if theta.len() != train_locations.len() {
        return Err(Error::DimensionMismatch {
            context: "observed angles vs. training locations",
            expected: train_locations.len(),
            got: theta.len(),
        });
    }
    let m = test_locations.len();
    let design = Design::new(test_locations, train_locations)?;
    let noisy = config.initial.chi.is_some();

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut sampler = DmhSampler::new(
        design,
        config.initial,
        config.priors.clone(),
        config.proposals.clone(),
        config.bridge,
        config.slack,
    )?;
    let blocks = config.proposals.blocks(&config.initial);
    let mut accepted_counts = vec![0usize; blocks.len()];

    // Latent angles: φ alone, or all d angles when observations are noisy.
    let init = Initialization::from_mean_pull(config.initial.kappa, config.initial.nu);
    let mut latent = init.draw(m, &mut rng)?;
    if noisy {
        latent.extend_from_slice(theta);
    }
    let mut state = AugmentedState::new(latent);
    let mut cache = conditional_cache(&sampler, theta, config.slack)?;

    let full_state = |state: &AugmentedState| -> Vec<f64> {
        let mut v = state.phi.as_slice().to_vec();
        if !noisy {
            v.extend_from_slice(theta);
        }
        v
    };

    let mut w_trace = Vec::new();
    let mut phi_samples = Vec::new();
    for iter in 0..config.n_iter {
        for _ in 0..config.gibbs_sweeps {
            gibbs_sweep(&mut state, &cache.aug, &cache.cp, &mut rng);
        }

        let mut any_accepted = false;
        if config.dmh_steps > 0 {
            let varphi = full_state(&state);
            for _ in 0..config.dmh_steps {
                for (b, block) in blocks.iter().enumerate() {
                    let out = sampler.dmh_step(&varphi, block, &mut rng)?;
                    if out.accepted {
                        accepted_counts[b] += 1;
                        any_accepted = true;
                    }
                }
            }
            if any_accepted {
                cache = conditional_cache(&sampler, theta, config.slack)?;
            }
        }

        if iter >= config.burn_in && (iter - config.burn_in) % config.thin == 0 {
            w_trace.push(ParamSample {
                iter,
                params: *sampler.params(),
                accepted: any_accepted,
            });
            phi_samples.push(state.phi.as_slice()[..m].to_vec());
        }
    }

    let moves = (config.n_iter * config.dmh_steps).max(1) as f64;
    let acceptance = blocks
        .iter()
        .zip(&accepted_counts)
        .map(|(b, &c)| (block_name(b), c as f64 / moves))
        .collect();
    Ok(FitOutput {
        params: config.initial.params(),
        w_trace,
        phi_samples,
        acceptance,
    })
}
