//! Run configuration: a flat TOML document of typed keys.
//!
//! Unknown keys are rejected. Validation errors name the offending key and the
//! line it sits on. Angles are in radians (`nu_rad`); lengthscales are in the
//! units of the input coordinates.

use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::gibbs::DEFAULT_SLACK;
use crate::inference::{BridgeConfig, PriorSpec, ProposalSpec, UpdateScheme};
use crate::kernels::{KernelFamily, KernelSpec};
use crate::model::{Param, ParamVector};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    kernel: KernelFamily,
    sigma2: f64,
    lengthscale: f64,
    gradient_lengthscale: Option<f64>,
    kappa: f64,
    nu_rad: f64,
    chi: Option<f64>,

    n_iter: Option<usize>,
    burn_in: Option<usize>,
    thin: Option<usize>,
    slack: Option<f64>,
    seed: Option<u64>,

    gibbs_sweeps: Option<usize>,
    dmh_steps: Option<usize>,
    bridge_levels: Option<usize>,
    inner_sweeps: Option<usize>,
    update_scheme: Option<String>,
    step_sigma2: Option<f64>,
    step_lengthscale: Option<f64>,
    step_gradient_lengthscale: Option<f64>,
    step_kappa: Option<f64>,
    step_nu_rad: Option<f64>,
    prior_scale_sigma2: Option<f64>,
    prior_scale_lengthscale: Option<f64>,
    prior_scale_gradient_lengthscale: Option<f64>,
    prior_scale_kappa: Option<f64>,

    lambda_multipliers: Option<Vec<f64>>,
    replicates: Option<usize>,
    cd_repeats: Option<usize>,
    cd_samples: Option<usize>,

    test_fraction: Option<f64>,
    splits: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SamplerSettings {
    pub n_iter: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub slack: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitSettings {
    pub gibbs_sweeps: usize,
    pub dmh_steps: usize,
    pub bridge: BridgeConfig,
    pub priors: PriorSpec,
    pub proposals: ProposalSpec,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnoseSettings {
    pub lambda_multipliers: Vec<f64>,
    pub replicates: usize,
    pub cd_repeats: usize,
    pub cd_samples: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitSettings {
    pub test_fraction: f64,
    pub splits: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub params: ParamVector,
    pub sampler: SamplerSettings,
    pub fit: FitSettings,
    pub diagnose: DiagnoseSettings,
    pub split: SplitSettings,
}

/// 1-based line of the first `key = …` assignment, if present.
fn line_of(text: &str, key: &str) -> Option<usize> {
    text.lines().position(|l| {
        l.trim_start()
            .strip_prefix(key)
            .is_some_and(|rest| rest.trim_start().starts_with('='))
    })
    .map(|i| i + 1)
}

struct Checker<'a> {
    text: &'a str,
}

impl Checker<'_> {
    fn fail(&self, key: &str, message: impl AsRef<str>) -> Error {
        match line_of(self.text, key) {
            Some(line) => Error::Config(format!("line {line}: {key}: {}", message.as_ref())),
            None => Error::Config(format!("{key}: {}", message.as_ref())),
        }
    }

    fn positive(&self, key: &str, v: f64) -> Result<f64> {
        if v.is_finite() && v > 0.0 {
            Ok(v)
        } else {
            Err(self.fail(key, format!("must be positive, got {v}")))
        }
    }

    fn non_negative(&self, key: &str, v: f64) -> Result<f64> {
        if v.is_finite() && v >= 0.0 {
            Ok(v)
        } else {
            Err(self.fail(key, format!("must be non-negative, got {v}")))
        }
    }

    fn at_least_one(&self, key: &str, v: usize) -> Result<usize> {
        if v >= 1 {
            Ok(v)
        } else {
            Err(self.fail(key, "must be at least 1"))
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string().trim_end().to_string()))?;
        let ck = Checker { text };

        let sigma2 = ck.positive("sigma2", raw.sigma2)?;
        let lengthscale = ck.positive("lengthscale", raw.lengthscale)?;
        let kernel = match (raw.kernel, raw.gradient_lengthscale) {
            (KernelFamily::AnisotropicGaussian, Some(g)) => {
                KernelSpec::anisotropic_gaussian(sigma2, lengthscale, ck.positive("gradient_lengthscale", g)?)
            }
            (KernelFamily::AnisotropicGaussian, None) => {
                return Err(ck.fail("kernel", "anisotropic_gaussian requires gradient_lengthscale"))
            }
            (_, Some(_)) => {
                return Err(ck.fail("gradient_lengthscale", "only valid with kernel = \"anisotropic_gaussian\""))
            }
            (KernelFamily::Gaussian, None) => KernelSpec::gaussian(sigma2, lengthscale),
            (KernelFamily::Exponential, None) => KernelSpec::exponential(sigma2, lengthscale),
        };
        let kappa = ck.non_negative("kappa", raw.kappa)?;
        if !raw.nu_rad.is_finite() {
            return Err(ck.fail("nu_rad", "must be finite"));
        }
        let mut params = ParamVector::new(kernel, kappa, raw.nu_rad);
        if let Some(chi) = raw.chi {
            params = params.with_noise(ck.non_negative("chi", chi)?);
        }

        let n_iter = ck.at_least_one("n_iter", raw.n_iter.unwrap_or(10_000))?;
        let burn_in = raw.burn_in.unwrap_or(n_iter / 5);
        if burn_in >= n_iter {
            return Err(ck.fail("burn_in", format!("must be smaller than n_iter ({n_iter})")));
        }
        let sampler = SamplerSettings {
            n_iter,
            burn_in,
            thin: ck.at_least_one("thin", raw.thin.unwrap_or(1))?,
            slack: ck.positive("slack", raw.slack.unwrap_or(DEFAULT_SLACK))?,
            seed: raw.seed.unwrap_or(0),
        };

        let scheme = match raw.update_scheme.as_deref() {
            None | Some("per_parameter") => UpdateScheme::PerParameter,
            Some("joint") => UpdateScheme::Joint,
            Some(other) => {
                return Err(ck.fail(
                    "update_scheme",
                    format!("expected \"per_parameter\" or \"joint\", got \"{other}\""),
                ))
            }
        };
        let mut proposals = ProposalSpec::new(scheme);
        for (key, p, step) in [
            ("step_sigma2", Param::Variance, raw.step_sigma2),
            ("step_lengthscale", Param::Lengthscale, raw.step_lengthscale),
            ("step_gradient_lengthscale", Param::GradientLengthscale, raw.step_gradient_lengthscale),
            ("step_kappa", Param::Kappa, raw.step_kappa),
            ("step_nu_rad", Param::Nu, raw.step_nu_rad),
        ] {
            if let Some(s) = step {
                proposals = proposals.with_step(p, ck.positive(key, s)?)?;
            }
        }
        let mut priors = PriorSpec::default();
        for (key, p, scale) in [
            ("prior_scale_sigma2", Param::Variance, raw.prior_scale_sigma2),
            ("prior_scale_lengthscale", Param::Lengthscale, raw.prior_scale_lengthscale),
            (
                "prior_scale_gradient_lengthscale",
                Param::GradientLengthscale,
                raw.prior_scale_gradient_lengthscale,
            ),
            ("prior_scale_kappa", Param::Kappa, raw.prior_scale_kappa),
        ] {
            if let Some(s) = scale {
                priors = priors.with_scale(p, ck.positive(key, s)?);
            }
        }
        let fit = FitSettings {
            gibbs_sweeps: ck.at_least_one("gibbs_sweeps", raw.gibbs_sweeps.unwrap_or(1))?,
            dmh_steps: raw.dmh_steps.unwrap_or(1),
            bridge: BridgeConfig {
                levels: raw.bridge_levels.unwrap_or(0),
                inner_sweeps: ck.at_least_one("inner_sweeps", raw.inner_sweeps.unwrap_or(50))?,
            },
            priors,
            proposals,
        };

        let lambda_multipliers = raw.lambda_multipliers.unwrap_or_else(|| vec![1.01, 2.0, 5.0, 10.0]);
        if lambda_multipliers.is_empty() {
            return Err(ck.fail("lambda_multipliers", "must not be empty"));
        }
        if let Some(bad) = lambda_multipliers.iter().find(|v| !(v.is_finite() && **v > 1.0)) {
            return Err(ck.fail("lambda_multipliers", format!("entries must exceed 1, got {bad}")));
        }
        let diagnose = DiagnoseSettings {
            lambda_multipliers,
            replicates: ck.at_least_one("replicates", raw.replicates.unwrap_or(20))?,
            cd_repeats: ck.at_least_one("cd_repeats", raw.cd_repeats.unwrap_or(50))?,
            cd_samples: ck.at_least_one("cd_samples", raw.cd_samples.unwrap_or(200))?,
        };

        let test_fraction = raw.test_fraction.unwrap_or(0.2);
        if !(test_fraction > 0.0 && test_fraction < 1.0) {
            return Err(ck.fail("test_fraction", format!("must lie in (0, 1), got {test_fraction}")));
        }
        let split = SplitSettings {
            test_fraction,
            splits: ck.at_least_one("splits", raw.splits.unwrap_or(1))?,
        };

        Ok(RunConfig {
            params,
            sampler,
            fit,
            diagnose,
            split,
        })
    }

    pub fn with_seed(mut self, seed: Option<u64>) -> Self {
        if let Some(s) = seed {
            self.sampler.seed = s;
        }
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "kernel = \"gaussian\"\nsigma2 = 1.0\nlengthscale = 0.5\nkappa = 1.0\nnu_rad = 0.25\n";

    #[test]
    fn defaults_fill_in() {
        let cfg = RunConfig::parse(MINIMAL).unwrap();
        assert_eq!(cfg.params.kernel, KernelSpec::gaussian(1.0, 0.5));
        assert_eq!(cfg.sampler.n_iter, 10_000);
        assert_eq!(cfg.sampler.slack, DEFAULT_SLACK);
        assert_eq!(cfg.fit.bridge, BridgeConfig::default());
        assert_eq!(cfg.diagnose.lambda_multipliers, vec![1.01, 2.0, 5.0, 10.0]);
        assert!(cfg.params.chi.is_none());
    }

    #[test]
    fn unknown_keys_are_rejected_with_line() {
        let err = RunConfig::parse(&format!("{MINIMAL}kapa = 2.0\n")).unwrap_err().to_string();
        assert!(err.contains("kapa") && err.contains("line 6"), "{err}");
    }

    #[test]
    fn invalid_values_report_line() {
        let text = MINIMAL.replace("sigma2 = 1.0", "sigma2 = -1.0");
        let err = RunConfig::parse(&text).unwrap_err().to_string();
        assert!(err.contains("line 2") && err.contains("sigma2"), "{err}");
        let text = format!("{MINIMAL}n_iter = 10\nburn_in = 10\n");
        let err = RunConfig::parse(&text).unwrap_err().to_string();
        assert!(err.contains("line 7"), "{err}");
    }

    #[test]
    fn anisotropic_needs_gradient_lengthscale() {
        let text = MINIMAL.replace("\"gaussian\"", "\"anisotropic_gaussian\"");
        assert!(RunConfig::parse(&text).is_err());
        let cfg = RunConfig::parse(&format!("{text}gradient_lengthscale = 3.0\n")).unwrap();
        assert_eq!(cfg.params.kernel.gradient_lengthscale, Some(3.0));
        assert!(RunConfig::parse(&format!("{MINIMAL}gradient_lengthscale = 3.0\n")).is_err());
    }

    #[test]
    fn proposals_and_priors() {
        let text = format!("{MINIMAL}step_kappa = 0.3\nstep_nu_rad = 0.2\nprior_scale_kappa = 4.0\nupdate_scheme = \"joint\"\n");
        let cfg = RunConfig::parse(&text).unwrap();
        assert_eq!(cfg.fit.proposals.blocks(&cfg.params), vec![vec![Param::Kappa, Param::Nu]]);
        assert_eq!(cfg.fit.priors.scale(Param::Kappa), 4.0);
    }
}
