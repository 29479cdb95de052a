//! Exchange moves on `w` with an approximate fictitious draw (double
//! Metropolis–Hastings), optionally refined by bridging.
//!
//! The acceptance ratio only involves priors, the symmetric proposal, the
//! unnormalized density `f` and the bridging log ratio; the normalizer of `f`
//! never appears.

use rand::Rng;

use crate::error::{Error, Result};
use crate::inference::bridge::{bridge_ladder, BridgeConfig};
use crate::inference::exchange::{sample_fictitious, Design, ModelAt};
use crate::inference::prior::PriorSpec;
use crate::inference::proposal::ProposalSpec;
use crate::model::{Param, ParamVector};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DmhOutcome {
    pub accepted: bool,
    /// `-∞` when the proposal left the prior support or produced a
    /// numerically singular kernel.
    pub log_alpha: f64,
}

/// Log acceptance ratio of an exchange move `w → w′`:
/// `log p(w′) − log p(w) + log f(ϕ|w′) − log f(ϕ|w) + bridge_log_ratio`.
///
/// With no bridging levels `bridge_log_ratio = log f(ξ|w) − log f(ξ|w′)`.
pub fn exchange_log_alpha(
    priors: &PriorSpec,
    current: &ModelAt,
    proposed: &ModelAt,
    varphi: &[f64],
    bridge_log_ratio: f64,
) -> f64 {
    priors.ln_density_all(&proposed.params) - priors.ln_density_all(&current.params)
        + proposed.log_f(varphi)
        - current.log_f(varphi)
        + bridge_log_ratio
}

/// State carried across exchange moves: the design, the cached model at the
/// current `w` (including `A_w`) and the persistent fictitious state `ξ`.
#[derive(Debug, Clone)]
pub struct DmhSampler {
    design: Design,
    current: ModelAt,
    xi: Vec<f64>,
    priors: PriorSpec,
    proposals: ProposalSpec,
    bridge: BridgeConfig,
    slack: f64,
    explicit_precision: bool,
}

impl DmhSampler {
    pub fn new(
        design: Design,
        initial: ParamVector,
        priors: PriorSpec,
        proposals: ProposalSpec,
        bridge: BridgeConfig,
        slack: f64,
    ) -> Result<Self> {
        bridge.validate()?;
        if priors.ln_density_all(&initial) == f64::NEG_INFINITY {
            return Err(Error::InvalidParameter("initial parameters outside prior support".into()));
        }
        let current = ModelAt::build(&design, initial, slack)?;
        let xi = vec![initial.nu; design.dim()];
        Ok(DmhSampler {
            design,
            current,
            xi,
            priors,
            proposals,
            bridge,
            slack,
            explicit_precision: false,
        })
    }

    /// Same as [`DmhSampler::new`] but on an explicitly given model, for
    /// problems whose precision matrix does not come from a kernel. Only
    /// `κ` and `ν` can then be updated.
    pub fn from_model(
        design: Design,
        current: ModelAt,
        priors: PriorSpec,
        proposals: ProposalSpec,
        bridge: BridgeConfig,
        slack: f64,
    ) -> Result<Self> {
        bridge.validate()?;
        let xi = vec![current.params.nu; current.dim()];
        Ok(DmhSampler {
            design,
            current,
            xi,
            priors,
            proposals,
            bridge,
            slack,
            explicit_precision: true,
        })
    }

    pub fn current(&self) -> &ModelAt {
        &self.current
    }

    pub fn params(&self) -> &ParamVector {
        &self.current.params
    }

    pub fn design(&self) -> &Design {
        &self.design
    }

    pub fn proposals(&self) -> &ProposalSpec {
        &self.proposals
    }

    pub fn fictitious_state(&self) -> &[f64] {
        &self.xi
    }

    /// Builds the model at `w′`. Parameters whose kernel does not depend on
    /// the updated block reuse the cached precision.
    fn model_for(&self, proposed: ParamVector, block: &[Param]) -> Result<ModelAt> {
        if block.iter().all(|p| p.kernel_param().is_none()) && proposed.kernel == self.current.params.kernel {
            let mut model = self.current.clone();
            model.params = proposed;
            return Ok(model);
        }
        if self.explicit_precision {
            return Err(Error::Config("explicit precision cannot be rebuilt for kernel moves".into()));
        }
        ModelAt::build(&self.design, proposed, self.slack)
    }

    /// One exchange move on `block` given the full angle state `ϕ`.
    pub fn dmh_step<R: Rng + ?Sized>(&mut self, varphi: &[f64], block: &[Param], rng: &mut R) -> Result<DmhOutcome> {
        if varphi.len() != self.design.dim() {
            return Err(Error::DimensionMismatch {
                context: "full angle state",
                expected: self.design.dim(),
                got: varphi.len(),
            });
        }
        let proposed_params = self.proposals.propose(&self.current.params, block, rng);
        let rejected = DmhOutcome {
            accepted: false,
            log_alpha: f64::NEG_INFINITY,
        };
        if self.priors.ln_density_all(&proposed_params) == f64::NEG_INFINITY {
            return Ok(rejected);
        }
        let proposed = match self.model_for(proposed_params, block) {
            Ok(m) => m,
            Err(Error::SingularKernel) | Err(Error::Factorization(_)) => return Ok(rejected),
            Err(e) => return Err(e),
        };

        let xi0 = sample_fictitious(
            &proposed.params,
            &proposed.augmentation,
            self.bridge.inner_sweeps,
            &self.xi,
            rng,
        )?;
        let ladder = bridge_ladder(&xi0, &self.current, &proposed, self.bridge.levels, rng)?;
        self.xi = xi0;

        let log_alpha = exchange_log_alpha(&self.priors, &self.current, &proposed, varphi, ladder.log_ratio);
        let accepted = log_alpha >= 0.0 || rng.random::<f64>().ln() < log_alpha;
        if accepted {
            self.current = proposed;
        }
        Ok(DmhOutcome { accepted, log_alpha })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inference::proposal::UpdateScheme;
    use crate::kernels::{InputLocation, KernelSpec};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn design() -> Design {
        Design::new(
            (0..4).map(|i| InputLocation::from(i as f64 * 0.5)).collect(),
            (0..3).map(|i| InputLocation::from(2.5 + i as f64 * 0.5)).collect(),
        )
        .unwrap()
    }

    #[test]
    fn identical_proposal_has_unit_acceptance() {
        let w = ParamVector::new(KernelSpec::gaussian(1.0, 0.8), 1.0, 0.3);
        let model = ModelAt::build(&design(), w, 0.01).unwrap();
        let same = ModelAt::build(&design(), w, 0.01).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let varphi: Vec<f64> = (0..7).map(|i| 0.1 * i as f64).collect();
        for levels in [0, 3] {
            let ladder = bridge_ladder(&varphi, &model, &same, levels, &mut rng).unwrap();
            let la = exchange_log_alpha(&PriorSpec::default(), &model, &same, &varphi, ladder.log_ratio);
            assert_eq!(la, 0.0);
        }
    }

    #[test]
    fn negative_kappa_is_never_accepted() {
        let w = ParamVector::new(KernelSpec::gaussian(1.0, 0.8), 0.05, 0.0);
        let proposals = ProposalSpec::new(UpdateScheme::PerParameter)
            .with_step(Param::Kappa, 1.0)
            .unwrap();
        let mut sampler = DmhSampler::new(
            design(),
            w,
            PriorSpec::default(),
            proposals,
            BridgeConfig { levels: 0, inner_sweeps: 5 },
            0.01,
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let varphi = vec![0.0; 7];
        let mut rejected_outside = 0;
        for _ in 0..500 {
            let out = sampler.dmh_step(&varphi, &[Param::Kappa], &mut rng).unwrap();
            if out.log_alpha == f64::NEG_INFINITY {
                rejected_outside += 1;
            }
            assert!(sampler.params().kappa >= 0.0);
        }
        assert!(rejected_outside > 0);
    }

    #[test]
    fn singular_kernels_are_rejected_not_fatal() {
        // Coincident locations with a huge variance step eventually propose
        // kernels that cannot be factorized; the move must just be rejected.
        let design = Design::new(
            vec![InputLocation::from(0.0), InputLocation::from(0.0)],
            vec![InputLocation::from(0.0)],
        )
        .unwrap();
        let w = ParamVector::new(KernelSpec::gaussian(1.0, 1.0), 0.5, 0.0);
        let proposals = ProposalSpec::default().with_step(Param::Lengthscale, 5.0).unwrap();
        let mut sampler =
            DmhSampler::new(design, w, PriorSpec::default(), proposals, BridgeConfig::default(), 0.01).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..50 {
            sampler.dmh_step(&[0.0, 0.0, 0.0], &[Param::Lengthscale], &mut rng).unwrap();
        }
    }

    #[test]
    fn initial_outside_support_rejected() {
        let w = ParamVector::new(KernelSpec::gaussian(1.0, 0.8), -1.0, 0.0);
        assert!(DmhSampler::new(
            design(),
            w,
            PriorSpec::default(),
            ProposalSpec::default(),
            BridgeConfig::default(),
            0.01
        )
        .is_err());
    }
}
