use std::collections::BTreeMap;
use std::f64::consts::{LN_2, PI};

use crate::model::{Param, ParamVector};

/// Priors over `w`.
///
/// `σ²`, `l²`, `g²` and `κ` get zero-mean normals truncated to the positive
/// half-line (half-normals); `ν` is uniform on the circle. Lengthscales are
/// sampled as `l` and `g`, so their log-density includes the `2l` Jacobian of
/// the map `l ↦ l²`.
#[derive(Debug, Clone, PartialEq)]
pub struct PriorSpec {
    scales: BTreeMap<Param, f64>,
}

impl Default for PriorSpec {
    fn default() -> Self {
        PriorSpec {
            scales: [
                (Param::Variance, 1.0),
                (Param::Lengthscale, 1.0),
                (Param::GradientLengthscale, 1.0),
                (Param::Kappa, 1.0),
            ]
            .into_iter()
            .collect(),
        }
    }
}

fn half_normal_ln(x: f64, scale: f64) -> f64 {
    LN_2 - 0.5 * (2.0 * PI * scale * scale).ln() - x * x / (2.0 * scale * scale)
}

impl PriorSpec {
    pub fn with_scale(mut self, p: Param, scale: f64) -> Self {
        self.scales.insert(p, scale);
        self
    }

    pub fn scale(&self, p: Param) -> f64 {
        self.scales.get(&p).copied().unwrap_or(1.0)
    }

    /// Log prior density of one component; `-∞` outside its support.
    pub fn ln_density(&self, p: Param, value: f64) -> f64 {
        if !value.is_finite() {
            return f64::NEG_INFINITY;
        }
        match p {
            Param::Variance => {
                if value > 0.0 {
                    half_normal_ln(value, self.scale(p))
                } else {
                    f64::NEG_INFINITY
                }
            }
            Param::Lengthscale | Param::GradientLengthscale => {
                if value > 0.0 {
                    half_normal_ln(value * value, self.scale(p)) + (2.0 * value).ln()
                } else {
                    f64::NEG_INFINITY
                }
            }
            Param::Kappa => {
                if value >= 0.0 {
                    half_normal_ln(value, self.scale(p))
                } else {
                    f64::NEG_INFINITY
                }
            }
            Param::Nu => {
                if (-PI..=PI).contains(&value) {
                    -(2.0 * PI).ln()
                } else {
                    f64::NEG_INFINITY
                }
            }
        }
    }

    pub fn ln_density_all(&self, w: &ParamVector) -> f64 {
        w.params().into_iter().map(|p| self.ln_density(p, w.get(p))).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::KernelSpec;

    #[test]
    fn support_boundaries() {
        let prior = PriorSpec::default();
        assert_eq!(prior.ln_density(Param::Kappa, -0.01), f64::NEG_INFINITY);
        assert!(prior.ln_density(Param::Kappa, 0.0).is_finite());
        assert_eq!(prior.ln_density(Param::Variance, 0.0), f64::NEG_INFINITY);
        assert_eq!(prior.ln_density(Param::Lengthscale, -1.0), f64::NEG_INFINITY);
        assert!(prior.ln_density(Param::Nu, PI).is_finite());
        assert_eq!(prior.ln_density(Param::Variance, f64::NAN), f64::NEG_INFINITY);
    }

    #[test]
    fn half_normal_integrates_to_one() {
        let prior = PriorSpec::default().with_scale(Param::Kappa, 0.7);
        let h = 1e-4;
        let total: f64 = (0..100_000)
            .map(|i| prior.ln_density(Param::Kappa, (i as f64 + 0.5) * h).exp() * h)
            .sum();
        assert!((total - 1.0).abs() < 1e-6);
        // The lengthscale density, including its Jacobian, is also normalized.
        let total: f64 = (0..100_000)
            .map(|i| prior.ln_density(Param::Lengthscale, (i as f64 + 0.5) * h).exp() * h)
            .sum();
        assert!((total - 1.0).abs() < 1e-4);
    }

    #[test]
    fn joint_prior_sums_components() {
        let prior = PriorSpec::default();
        let w = ParamVector::new(KernelSpec::gaussian(0.5, 0.8), 1.0, 0.3);
        let expected: f64 = [Param::Variance, Param::Lengthscale, Param::Kappa, Param::Nu]
            .iter()
            .map(|&p| prior.ln_density(p, w.get(p)))
            .sum();
        assert!((prior.ln_density_all(&w) - expected).abs() < 1e-15);
    }
}
